//! Strategy automata, agent best responses, exact payoff computation, and
//! Monte Carlo simulation of on-path play.
//!
//! An automaton has three states: the target profile played on path, a
//! punishment state entered when the agent accepts a deviating offer, and a
//! reward state entered after any other response to a deviation. Every state
//! plays its own on-path offer, so each state profile must be reproduced by
//! the stage game it induces; `verify_supported` checks exactly that, along
//! with broker and agent incentives at all three states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contracts::{c_uninformative, check_feasible, onpath_offer, Offer, FEAS_TOL};
use crate::error::{Error, Result};
use crate::prior::Prior;
use crate::profile::PayoffProfile;
use crate::search::surplus_bounds;
use crate::signals::Signal;

/// Hard cap on simulated search length.
pub const EPISODE_CAP: u64 = 1_000_000;

const TIE_TOL: f64 = 1e-12;

/// Continuation plan after a broker deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AutomatonMode {
    /// Punish with the autarky profile, reward with full surplus to the
    /// agent. Sustains low-broker-take targets under competition.
    Competitive,
    /// Single-broker play guaranteeing the broker `nu`: punishment keeps
    /// the agent at the autarky value, reward grants the rest of the
    /// surplus on top of `nu`.
    MonopolyTriangle { nu: f64 },
}

/// Three-state strategy profile: target on path, punish after an accepted
/// deviation, reward after a rejected one.
#[derive(Debug, Clone, Serialize)]
pub struct StrategyAutomaton {
    pub mode: AutomatonMode,
    pub target: PayoffProfile,
    pub punish: PayoffProfile,
    pub reward: PayoffProfile,
}

impl StrategyAutomaton {
    pub fn new(
        prior: &Prior,
        k: f64,
        mode: AutomatonMode,
        target: PayoffProfile,
    ) -> Result<Self> {
        check_feasible(prior, k, &target)?;
        let n = target.n();
        let (lower, upper) = surplus_bounds(prior, k)?;
        let (punish, reward) = match mode {
            AutomatonMode::Competitive => (
                PayoffProfile::new(vec![0.0; n], lower),
                PayoffProfile::new(vec![0.0; n], upper),
            ),
            AutomatonMode::MonopolyTriangle { nu } => {
                if n != 1 {
                    return Err(Error::InvalidArgument(format!(
                        "monopoly automaton needs one broker, target has {n}"
                    )));
                }
                if !(-FEAS_TOL..=upper - lower + FEAS_TOL).contains(&nu) {
                    return Err(Error::InvalidArgument(format!(
                        "guarantee {nu} outside [0, {}]",
                        upper - lower
                    )));
                }
                let nu = nu.clamp(0.0, upper - lower);
                (
                    PayoffProfile::new(vec![nu], lower),
                    PayoffProfile::new(vec![nu], upper - nu),
                )
            }
        };
        Ok(StrategyAutomaton { mode, target, punish, reward })
    }

    /// Labeled automaton states.
    pub fn states(&self) -> [(&'static str, &PayoffProfile); 3] {
        [("target", &self.target), ("punish", &self.punish), ("reward", &self.reward)]
    }

    /// Best deviation for `deviator` against this automaton's target.
    pub fn deviation_search(
        &self,
        prior: &Prior,
        k: f64,
        deviator: usize,
        opts: &DeviationOptions,
    ) -> Result<DeviationReport> {
        deviation_search(prior, k, &self.target, &self.punish, &self.reward, deviator, opts)
    }
}

/// Agent's one-period policy given posted offers.
#[derive(Debug, Clone, Serialize)]
pub struct AgentPolicy {
    /// Purchase probabilities; the last entry is the skip option.
    pub weights: Vec<f64>,
    /// Stop iff the realized posterior mean strictly exceeds the threshold
    /// for the chosen option.
    pub stop_thresholds: Vec<f64>,
    /// Option values `c_G(threshold) + threshold - price`.
    pub values: Vec<f64>,
}

/// Computes the agent's best response to posted offers under the automaton's
/// continuation plan. Purchase ties are resolved toward purchasing, ties
/// involving a deviator against the deviator, and the on-path all-broker tie
/// by target-weighted randomization.
pub fn best_response(
    prior: &Prior,
    offers: &[Offer],
    automaton: &StrategyAutomaton,
    deviator: Option<usize>,
) -> Result<AgentPolicy> {
    let n = automaton.target.n();
    if offers.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} offers posted for {n} brokers",
            offers.len()
        )));
    }
    if let Some(d) = deviator {
        if d >= n {
            return Err(Error::InvalidArgument(format!("deviator {d} out of range")));
        }
    }
    let cont_agent = |choice: Option<usize>| -> f64 {
        match deviator {
            None => automaton.target.agent,
            Some(d) => {
                if choice == Some(d) {
                    automaton.punish.agent
                } else {
                    automaton.reward.agent
                }
            }
        }
    };
    let mut stop_thresholds = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    for (w, offer) in offers.iter().enumerate() {
        let thr = cont_agent(Some(w));
        stop_thresholds.push(thr);
        values.push(offer.signal.c_value(prior, thr) + thr - offer.price);
    }
    let thr_skip = cont_agent(None);
    stop_thresholds.push(thr_skip);
    values.push(c_uninformative(prior, thr_skip) + thr_skip);

    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut argmax: Vec<usize> =
        (0..=n).filter(|&w| values[w] >= best - TIE_TOL).collect();
    if let Some(d) = deviator {
        if argmax.len() > 1 {
            argmax.retain(|&w| w != d);
        }
    }
    if argmax.len() > 1 && argmax.contains(&n) {
        argmax.retain(|&w| w != n);
    }
    let mut weights = vec![0.0; n + 1];
    if deviator.is_none() && argmax.len() == n && !argmax.contains(&n) {
        let total = automaton.target.broker_sum();
        for &w in &argmax {
            weights[w] = if total > 0.0 {
                automaton.target.brokers[w] / total
            } else {
                1.0 / n as f64
            };
        }
    } else {
        for &w in &argmax {
            weights[w] = 1.0 / argmax.len() as f64;
        }
    }
    Ok(AgentPolicy { weights, stop_thresholds, values })
}

/// Exact decomposition of an on-path profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyticReport {
    /// Payoffs implied by the offer, one search episode per agent.
    pub profile: PayoffProfile,
    /// Pass-fail cutoff of the on-path signal.
    pub threshold: f64,
    pub price: f64,
    /// Per-period probability the search stops.
    pub pass_prob: f64,
    pub expected_periods: f64,
}

/// Computes the payoffs generated by the on-path offer at `y` in closed
/// form. The result should reproduce `y` itself whenever `y` is feasible.
pub fn analytic_payoffs(prior: &Prior, k: f64, y: &PayoffProfile) -> Result<AnalyticReport> {
    let offer = onpath_offer(prior, k, y)?;
    let x = match offer.signal {
        Signal::PassFail { x } => x,
        _ => unreachable!("on-path offers are pass-fail"),
    };
    let pass_prob = 1.0 - prior.cdf(x);
    if pass_prob <= 0.0 {
        return Err(Error::Infeasible(format!("no pass mass above cutoff {x}")));
    }
    let pass_mean = prior.cond_mean_above(x)?;
    let agent = pass_mean - (offer.price + k) / pass_prob;
    let n = y.n();
    let total = y.broker_sum();
    let pie = offer.price / pass_prob;
    let brokers: Vec<f64> = (0..n)
        .map(|i| {
            let w = if total > 0.0 { y.brokers[i] / total } else { 1.0 / n as f64 };
            pie * w
        })
        .collect();
    Ok(AnalyticReport {
        profile: PayoffProfile::new(brokers, agent),
        threshold: x,
        price: offer.price,
        pass_prob,
        expected_periods: 1.0 / pass_prob,
    })
}

/// Precomputed on-path play for fast episode simulation.
#[derive(Debug, Clone)]
pub struct OnPathContext {
    pub threshold: f64,
    pub price: f64,
    pub fail_mean: f64,
    pub pass_mean: f64,
    pub pass_prob: f64,
    /// Broker choice distribution, proportional to target payoffs.
    pub weights: Vec<f64>,
    /// Stop iff the realized posterior mean strictly exceeds this.
    pub stop_threshold: f64,
}

impl OnPathContext {
    pub fn new(prior: &Prior, k: f64, y: &PayoffProfile) -> Result<Self> {
        let report = analytic_payoffs(prior, k, y)?;
        let x = report.threshold;
        let fail_mass = prior.cdf(x);
        // A zero-mass fail cell never realizes; any placeholder works.
        let fail_mean = if fail_mass > 0.0 { prior.cond_mean_below(x)? } else { 0.0 };
        let n = y.n();
        let total = y.broker_sum();
        let weights: Vec<f64> = (0..n)
            .map(|i| if total > 0.0 { y.brokers[i] / total } else { 1.0 / n as f64 })
            .collect();
        Ok(OnPathContext {
            threshold: x,
            price: report.price,
            fail_mean,
            pass_mean: prior.cond_mean_above(x)?,
            pass_prob: report.pass_prob,
            weights,
            stop_threshold: y.agent,
        })
    }
}

/// Realized payoffs of one search episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeOutcome {
    pub periods: u64,
    pub broker_revenue: Vec<f64>,
    pub agent_payoff: f64,
    pub consumed_quality: f64,
}

/// One period of a traced episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub episode: u64,
    pub period: u64,
    pub theta: f64,
    pub posterior_mean: f64,
    pub broker: usize,
    pub price: f64,
    pub stopped: bool,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Independent stream for one episode; stable across thread schedules.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(seed ^ (episode + 1).wrapping_mul(0x9E3779B97F4A7C15)))
}

fn run_episode<R: Rng>(
    prior: &Prior,
    ctx: &OnPathContext,
    k: f64,
    rng: &mut R,
    mut trace: Option<(u64, &mut Vec<TraceRow>)>,
) -> Result<EpisodeOutcome> {
    let n = ctx.weights.len();
    let mut paid = vec![0.0; n];
    let mut spent = 0.0;
    for period in 1..=EPISODE_CAP {
        let theta = prior.sample(rng);
        let m = if theta <= ctx.threshold { ctx.fail_mean } else { ctx.pass_mean };
        let broker = if n == 1 {
            0
        } else {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, w) in ctx.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        };
        paid[broker] += ctx.price;
        spent += ctx.price + k;
        let stopped = m > ctx.stop_threshold;
        if let Some((episode, rows)) = trace.as_mut() {
            rows.push(TraceRow {
                episode: *episode,
                period,
                theta,
                posterior_mean: m,
                broker,
                price: ctx.price,
                stopped,
            });
        }
        if stopped {
            return Ok(EpisodeOutcome {
                periods: period,
                broker_revenue: paid,
                agent_payoff: theta - spent,
                consumed_quality: theta,
            });
        }
    }
    Err(Error::EpisodeCapExceeded { cap: EPISODE_CAP })
}

/// Simulates one search episode under the on-path offer.
pub fn simulate_episode<R: Rng>(
    prior: &Prior,
    ctx: &OnPathContext,
    k: f64,
    rng: &mut R,
) -> Result<EpisodeOutcome> {
    run_episode(prior, ctx, k, rng, None)
}

/// Same draws as `simulate_episode`, appending one row per period.
pub fn simulate_episode_traced<R: Rng>(
    prior: &Prior,
    ctx: &OnPathContext,
    k: f64,
    episode: u64,
    rng: &mut R,
    rows: &mut Vec<TraceRow>,
) -> Result<EpisodeOutcome> {
    run_episode(prior, ctx, k, rng, Some((episode, rows)))
}

/// One estimated component of the payoff profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub component: String,
    pub mean: f64,
    pub se: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Monte Carlo estimate with the matching closed-form decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub rows: Vec<McRow>,
    pub episodes: u64,
    pub seed: u64,
    pub analytic: AnalyticReport,
}

/// Estimates per-broker revenue, agent payoff, and episode length over
/// independent episodes. Episode streams are indexed by the master seed, so
/// results are bit-stable regardless of thread count.
pub fn mc_estimate(
    prior: &Prior,
    k: f64,
    y: &PayoffProfile,
    episodes: u64,
    seed: u64,
) -> Result<McReport> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("need at least one episode".into()));
    }
    let analytic = analytic_payoffs(prior, k, y)?;
    let ctx = OnPathContext::new(prior, k, y)?;
    let n = y.n();
    let comps = n + 2;
    let mut sum = vec![0.0; comps];
    let mut sumsq = vec![0.0; comps];
    const CHUNK: u64 = 1 << 14;
    let mut start = 0u64;
    while start < episodes {
        let end = (start + CHUNK).min(episodes);
        let outcomes: Result<Vec<EpisodeOutcome>> = (start..end)
            .into_par_iter()
            .map(|ep| {
                let mut rng = episode_rng(seed, ep);
                simulate_episode(prior, &ctx, k, &mut rng)
            })
            .collect();
        // Sequential accumulation in episode order keeps sums deterministic.
        for out in outcomes? {
            for i in 0..n {
                let v = out.broker_revenue[i];
                sum[i] += v;
                sumsq[i] += v * v;
            }
            let a = out.agent_payoff;
            sum[n] += a;
            sumsq[n] += a * a;
            let t = out.periods as f64;
            sum[n + 1] += t;
            sumsq[n + 1] += t * t;
        }
        start = end;
    }
    let trials = episodes as f64;
    let row = |name: String, i: usize| {
        let mean = sum[i] / trials;
        let var = if episodes > 1 {
            ((sumsq[i] - trials * mean * mean) / (trials - 1.0)).max(0.0)
        } else {
            0.0
        };
        McRow { component: name, mean, se: (var / trials).sqrt(), trials: episodes, seed }
    };
    let mut rows: Vec<McRow> =
        (0..n).map(|i| row(format!("broker_{}", i + 1), i)).collect();
    rows.push(row("agent".into(), n));
    rows.push(row("periods".into(), n + 1));
    Ok(McReport { rows, episodes, seed, analytic })
}

/// Search family and refinement effort for the deviation supremum.
#[derive(Debug, Clone, Copy)]
pub struct DeviationOptions {
    /// Uniform pass-fail cutoff grid size on (0, 1).
    pub x_grid: usize,
    /// Local uniform-scan refinement rounds around the grid argmax.
    pub refine_rounds: usize,
}

impl Default for DeviationOptions {
    fn default() -> Self {
        DeviationOptions { x_grid: 257, refine_rounds: 4 }
    }
}

/// Outcome of a one-shot broker deviation search.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub deviator: usize,
    /// Payoff from conforming, `target_i`.
    pub baseline: f64,
    /// Supremum payoff over deviating offers.
    pub best_payoff: f64,
    /// Best deviating offer when acceptance is achievable; its price is the
    /// acceptance supremum, approached from below.
    pub best_offer: Option<Offer>,
    pub accepted: bool,
    /// `best_payoff - baseline`.
    pub gain: f64,
}

/// Supremum of a deviating broker's payoff against a three-state plan.
///
/// The agent accepts an offer `(p, G)` iff its value under the punishment
/// continuation strictly beats the best non-deviation option under the
/// reward continuation; the acceptance price supremum is therefore the value
/// margin. Rejected deviations earn the reward-state payoff scaled by the
/// probability the agent keeps searching, with agent indifference resolved
/// against the deviator. The search family is pass-fail cutoffs on a grid
/// plus full and no revelation, with local refinement; prices enter in
/// closed form.
pub fn deviation_search(
    prior: &Prior,
    k: f64,
    target: &PayoffProfile,
    punish: &PayoffProfile,
    reward: &PayoffProfile,
    deviator: usize,
    opts: &DeviationOptions,
) -> Result<DeviationReport> {
    let n = target.n();
    if deviator >= n {
        return Err(Error::InvalidArgument(format!("deviator {deviator} out of range")));
    }
    if punish.n() != n || reward.n() != n {
        return Err(Error::InvalidArgument("state dimensions differ".into()));
    }
    if opts.x_grid < 2 {
        return Err(Error::InvalidArgument("cutoff grid needs at least two points".into()));
    }

    // Agent options that leave the deviation unsold, valued at the reward
    // continuation: skip, or buy from a conforming broker.
    let r = reward.agent;
    let mut reject_value = c_uninformative(prior, r) + r;
    let mut reject_cont = if prior.mean() <= r { 1.0 } else { 0.0 };
    if n >= 2 {
        let posted = onpath_offer(prior, k, target)?;
        let v = posted.signal.c_value(prior, r) + r - posted.price;
        let cont = posted.signal.cdf(prior, r);
        if v > reject_value + TIE_TOL {
            reject_value = v;
            reject_cont = cont;
        } else if v >= reject_value - TIE_TOL {
            // Indifferent agent picks the option worst for the deviator.
            reject_cont = reject_cont.min(cont);
        }
    }
    let reject_payoff = reject_cont * reward.brokers[deviator];

    let pa = punish.agent;
    let pd = punish.brokers[deviator];
    let payoff_of = |margin: f64, cont: f64| -> f64 {
        if margin > 0.0 {
            margin + cont * pd
        } else {
            reject_payoff
        }
    };
    let eval_cutoff = |x: f64| -> (f64, f64) {
        let sig = Signal::PassFail { x };
        let margin = sig.c_value(prior, pa) + pa - reject_value;
        (margin, payoff_of(margin, sig.cdf(prior, pa)))
    };

    let mut best_payoff = reject_payoff;
    let mut best_sig: Option<(Signal, f64)> = None;
    let mut consider = |sig: Signal, margin: f64, payoff: f64| {
        if payoff > best_payoff {
            best_payoff = payoff;
            best_sig = if margin > 0.0 { Some((sig, margin)) } else { None };
        }
    };

    let full_margin = prior.c_full(pa) + pa - reject_value;
    consider(
        Signal::FullInfo,
        full_margin,
        payoff_of(full_margin, prior.cdf(pa)),
    );
    let none_margin = c_uninformative(prior, pa) + pa - reject_value;
    let none_cont = if prior.mean() <= pa { 1.0 } else { 0.0 };
    consider(Signal::Uninformative, none_margin, payoff_of(none_margin, none_cont));

    let m = opts.x_grid;
    let mut best_x = f64::NAN;
    let mut best_x_payoff = f64::NEG_INFINITY;
    for i in 1..=m {
        let x = i as f64 / (m + 1) as f64;
        let (_, payoff) = eval_cutoff(x);
        if payoff > best_x_payoff {
            best_x_payoff = payoff;
            best_x = x;
        }
    }
    // Uniform rescans around the incumbent; robust to the kinks and jumps
    // the payoff has in the cutoff.
    let mut width = 1.0 / (m + 1) as f64;
    for _ in 0..opts.refine_rounds {
        let lo = (best_x - width).max(f64::MIN_POSITIVE);
        let hi = (best_x + width).min(1.0 - 1e-12);
        for j in 0..=32 {
            let x = lo + (hi - lo) * j as f64 / 32.0;
            let (_, payoff) = eval_cutoff(x);
            if payoff > best_x_payoff {
                best_x_payoff = payoff;
                best_x = x;
            }
        }
        width /= 16.0;
    }
    if best_x.is_finite() {
        let (margin, payoff) = eval_cutoff(best_x);
        consider(Signal::PassFail { x: best_x }, margin, payoff);
    }

    let baseline = target.brokers[deviator];
    Ok(DeviationReport {
        deviator,
        baseline,
        best_payoff,
        accepted: best_sig.is_some(),
        best_offer: best_sig.map(|(signal, margin)| Offer { price: margin, signal }),
        gain: best_payoff - baseline,
    })
}

/// Per-state verification record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateCheck {
    pub state: String,
    pub profile: PayoffProfile,
    /// Stage play at this state reproduces the state's payoffs.
    pub generated: bool,
    /// Purchasing weakly beats skipping at this state's agent value.
    pub agent_ok: bool,
    /// No broker deviation beats the state payoff.
    pub broker_ic: bool,
    /// Largest deviation gain across brokers.
    pub worst_gain: f64,
    pub gains: Vec<f64>,
}

/// Aggregate verdict of a support check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportReport {
    pub pass: bool,
    pub generated: bool,
    pub agent_sr: bool,
    pub broker_ic: bool,
    pub continuations_ok: bool,
    pub states: Vec<StateCheck>,
}

const GEN_TOL: f64 = 1e-8;

/// Checks that the automaton supports its target: every state profile is
/// feasible and self-generating, the agent's on-path play is sequentially
/// rational, and no broker gains more than `tol` by deviating at any state.
pub fn verify_supported(
    prior: &Prior,
    k: f64,
    automaton: &StrategyAutomaton,
    tol: f64,
    opts: &DeviationOptions,
) -> Result<SupportReport> {
    let n = automaton.target.n();
    let mut states: Vec<StateCheck> = Vec::with_capacity(3);
    let mut continuations_ok = true;
    for (label, profile) in automaton.states() {
        let feasible = check_feasible(prior, k, profile).is_ok();
        if !feasible && label != "target" {
            continuations_ok = false;
        }
        // Identical states share one computation.
        if let Some(prev) = states
            .iter()
            .position(|c| c.profile.linf_distance(profile) == 0.0)
        {
            let mut copy = states[prev].clone();
            copy.state = label.to_string();
            states.push(copy);
            continue;
        }
        let generated = feasible
            && analytic_payoffs(prior, k, profile)
                .map(|rep| rep.profile.linf_distance(profile) <= GEN_TOL)
                .unwrap_or(false);
        let agent_ok =
            feasible && k >= c_uninformative(prior, profile.agent) - FEAS_TOL;
        let mut gains = Vec::with_capacity(n);
        for d in 0..n {
            if feasible {
                let dev = deviation_search(
                    prior,
                    k,
                    profile,
                    &automaton.punish,
                    &automaton.reward,
                    d,
                    opts,
                )?;
                gains.push(dev.best_payoff - profile.brokers[d]);
            } else {
                gains.push(f64::INFINITY);
            }
        }
        let worst_gain = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        states.push(StateCheck {
            state: label.to_string(),
            profile: profile.clone(),
            generated,
            agent_ok,
            broker_ic: worst_gain <= tol,
            worst_gain,
            gains,
        });
    }
    let generated = states.iter().all(|c| c.generated);
    let agent_sr = states.iter().all(|c| c.agent_ok);
    let broker_ic = states.iter().all(|c| c.broker_ic);
    Ok(SupportReport {
        pass: generated && agent_sr && broker_ic && continuations_ok,
        generated,
        agent_sr,
        broker_ic,
        continuations_ok,
        states,
    })
}
