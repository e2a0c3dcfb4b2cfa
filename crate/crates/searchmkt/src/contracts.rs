//! Contract machinery: surplus-extracting offers and cost thresholds.
//!
//! On the equilibrium path every broker offers the same contract: a
//! pass-fail signal whose threshold is tuned so the agent's reservation
//! value equals the total payoff `||y||`, priced to leave the agent exactly
//! `y_agent`. This module computes that threshold, the offer, the most a
//! deviating broker could charge for an alternative signal, and the cost
//! thresholds that organize the whole equilibrium landscape:
//!
//! - `k_star`: below it, zero broker profit is self-sustaining and the folk
//!   region is the full feasible set; above it, a monopolist extracts the
//!   entire surplus.
//! - `K`: the cost at which the full-information reservation value falls to
//!   the prior mean.
//! - `epsilon`: a uniform lower bound on the option value a pass-fail offer
//!   leaves at the cheapest on-path contract, taken over costs above
//!   `k_star`.
//! - `k_double_star`: the largest cost below which profiles with broker
//!   take at most `epsilon` are immune to poaching deviations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, solve_bracketed};
use crate::prior::Prior;
use crate::profile::PayoffProfile;
use crate::search::{autarky_value, mccall_reservation};
use crate::signals::Signal;

/// A contract: an up-front price for one draw of a signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offer {
    pub price: f64,
    pub signal: Signal,
}

/// Feasibility slack for payoff-profile preconditions.
pub const FEAS_TOL: f64 = 1e-9;

/// Option value of no information at outside value `t`.
pub fn c_uninformative(prior: &Prior, t: f64) -> f64 {
    (prior.mean() - t).max(0.0)
}

/// Hinge form of the pass-fail option value at outside value `t`:
/// `max{ c_uninf(t), c_F(x) + (1 - F(x)) (x - t) }`. Equals
/// `Signal::PassFail { x }.c_value(prior, t)`; closed form used in hot loops.
pub fn c_pass_fail(prior: &Prior, x: f64, t: f64) -> f64 {
    c_uninformative(prior, t).max(prior.c_full(x) + (1.0 - prior.cdf(x)) * (x - t))
}

/// Solves for the pass-fail threshold that makes `u` the reservation value
/// of the offered search: the unique `x` in `[upper_k, 1)` with
/// `c_F(x) + (1 - F(x)) (x - u) = k`. Requires `u` between the autarky and
/// full-information reservation values.
pub fn threshold_x(prior: &Prior, k: f64, u: f64) -> Result<f64> {
    let lower = autarky_value(prior, k)?;
    let upper = mccall_reservation(prior, k)?;
    if u < lower - FEAS_TOL || u > upper + FEAS_TOL {
        return Err(Error::InvalidArgument(format!(
            "reservation target {u} outside [{lower}, {upper}]"
        )));
    }
    let u = u.clamp(lower, upper);
    let f = |x: f64| prior.c_full(x) + (1.0 - prior.cdf(x)) * (x - u) - k;
    // The objective is weakly decreasing on [upper, 1] and positive at the
    // left endpoint up to rounding; a nonpositive value there means u is at
    // the full-information reservation value, where the threshold equals it.
    let flo = f(upper);
    if flo <= 0.0 {
        return Ok(upper);
    }
    Ok(solve_bracketed(f, upper, 1.0)?.value)
}

/// Validates `y` against the feasible polytope at `(n, k)`:
/// nonnegative broker payoffs, `y_agent >= autarky`, total at most the
/// full-information reservation value.
pub fn check_feasible(prior: &Prior, k: f64, y: &PayoffProfile) -> Result<()> {
    let lower = autarky_value(prior, k)?;
    let upper = mccall_reservation(prior, k)?;
    if y.brokers.iter().any(|&b| !(b >= -FEAS_TOL)) {
        return Err(Error::Infeasible(format!("negative broker payoff in {:?}", y.brokers)));
    }
    if !(y.agent >= lower - FEAS_TOL) {
        return Err(Error::Infeasible(format!(
            "agent payoff {} below autarky value {lower}",
            y.agent
        )));
    }
    if !(y.total() <= upper + FEAS_TOL) {
        return Err(Error::Infeasible(format!(
            "total payoff {} exceeds full-information reservation value {upper}",
            y.total()
        )));
    }
    Ok(())
}

/// The symmetric on-path offer generating `y`: signal `PassFail(x)` with
/// `x = threshold_x(k, ||y||)` and price
/// `c_G(y_agent) - c_G(||y||)`, the agent's full option-value surplus from
/// stopping at `y_agent` rather than `||y||`.
pub fn onpath_offer(prior: &Prior, k: f64, y: &PayoffProfile) -> Result<Offer> {
    check_feasible(prior, k, y)?;
    let x = threshold_x(prior, k, y.total())?;
    let price = (c_pass_fail(prior, x, y.agent) - c_pass_fail(prior, x, y.total())).max(0.0);
    Ok(Offer { price, signal: Signal::PassFail { x } })
}

/// The most a deviating broker can charge for signal `g` against on-path
/// play at `y`, when buying the deviation sends the market to the autarky
/// continuation and rejecting it sends the market to the full-surplus
/// continuation:
/// `( lower - upper + c_g(lower) - max{ c_Gx(upper) - P(y), c_uninf(upper) } )^+`.
pub fn wtp(prior: &Prior, k: f64, g: &Signal, y: &PayoffProfile) -> Result<f64> {
    let lower = autarky_value(prior, k)?;
    let upper = mccall_reservation(prior, k)?;
    let offer = onpath_offer(prior, k, y)?;
    let Signal::PassFail { x } = offer.signal else { unreachable!("onpath offer is pass-fail") };
    let reject = (c_pass_fail(prior, x, upper) - offer.price).max(c_uninformative(prior, upper));
    Ok((lower - upper + g.c_value(prior, lower) - reject).max(0.0))
}

/// Net gain a monopolist's best poaching deviation can secure against the
/// harshest continuation: `c_F(lower_k) + lower_k - (c_uninf(upper_k) + upper_k)`.
/// Negative means rejecting every offer is credible; positive means zero
/// broker profit cannot be sustained.
pub fn phi(prior: &Prior, k: f64) -> Result<f64> {
    let lower = autarky_value(prior, k)?;
    let upper = mccall_reservation(prior, k)?;
    Ok(prior.c_full(lower) + lower - (c_uninformative(prior, upper) + upper))
}

/// The four cost thresholds. Serializes with the short field names used by
/// the command-line artifacts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Thresholds {
    pub k_star: f64,
    #[serde(rename = "K")]
    pub capital_k: f64,
    pub epsilon: f64,
    pub k_double_star: f64,
    /// Final bisection bracket width for `k_star`.
    pub bracket_width: f64,
}

/// Non-serialized diagnostics from the threshold computation.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThresholdDiagnostics {
    /// The minimum of `eps_k` over `(k_star, mean)` sat at the left edge, so
    /// `epsilon` was evaluated just above `k_star`.
    pub epsilon_at_left_edge: bool,
    /// Sign changes of the collar-immunity margin after the first crossing;
    /// nonzero values flag an irregular prior worth inspecting.
    pub extra_crossings: usize,
    /// No crossing found: the margin stays nonpositive up to `K`, and
    /// `k_double_star` was clamped to `K`.
    pub clamped_to_capital_k: bool,
}

/// Option value left at the top reservation value by the on-path signal of
/// the cheapest feasible contract: `c_{G^{x_k(lower_k)}}(upper_k)`.
pub fn eps_at(prior: &Prior, k: f64) -> Result<f64> {
    let lower = autarky_value(prior, k)?;
    let upper = mccall_reservation(prior, k)?;
    let x = threshold_x(prior, k, lower)?;
    Ok(c_pass_fail(prior, x, upper).max(0.0))
}

const SCAN_POINTS: usize = 256;

/// Computes all four thresholds for a prior. `k_star` is the root of `phi`;
/// `K` solves `upper_K = mean`; `epsilon` is the infimum of `eps_at` over
/// `(k_star, mean)`; `k_double_star` is the first cost above `k_star` where
/// `phi(k) - epsilon F(upper_k)` crosses zero, clamped to `K`.
pub fn compute_thresholds(prior: &Prior) -> Result<(Thresholds, ThresholdDiagnostics)> {
    let mean = prior.mean();
    // upper_K = mean is equivalent to c_F(mean) = K.
    let capital_k = prior.c_full(mean);

    // phi is negative near zero cost and positive at K; bracket and bisect.
    let mut k_lo = capital_k * 1e-6;
    while phi(prior, k_lo)? >= 0.0 && k_lo > 1e-15 {
        k_lo /= 10.0;
    }
    if phi(prior, k_lo)? >= 0.0 {
        return Err(Error::InvalidArgument(
            "phi has no sign change below K; prior violates the search-worth-it regularity".into(),
        ));
    }
    let root = solve_bracketed(|k| phi(prior, k).unwrap_or(f64::NAN), k_lo, capital_k)?;
    let k_star = root.value;
    let bracket_width = root.bracket_width;

    let mut diag = ThresholdDiagnostics::default();

    // Scan eps_k over (k_star, mean) for its infimum.
    let hi = mean * (1.0 - 1e-9);
    let grid: Vec<f64> = (1..=SCAN_POINTS)
        .map(|i| k_star + (hi - k_star) * i as f64 / SCAN_POINTS as f64)
        .collect();
    let mut vals = Vec::with_capacity(grid.len());
    for &k in &grid {
        vals.push(eps_at(prior, k)?);
    }
    let (argmin, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite eps"))
        .expect("nonempty grid");
    let epsilon = if argmin == 0 {
        diag.epsilon_at_left_edge = true;
        eps_at(prior, k_star + 1e-9)?
    } else {
        // Golden-section refine on the bracketing neighbors.
        let lo = grid[argmin - 1];
        let hi = grid[(argmin + 1).min(grid.len() - 1)];
        golden_min(|k| eps_at(prior, k).unwrap_or(f64::INFINITY), lo, hi)
    };

    // First crossing of the collar-immunity margin above k_star.
    let margin = |k: f64| -> Result<f64> {
        let upper = mccall_reservation(prior, k)?;
        Ok(phi(prior, k)? - epsilon * prior.cdf(upper))
    };
    let steps = SCAN_POINTS;
    let mut k_double_star = capital_k;
    let mut found = false;
    let mut prev_k = k_star * (1.0 + 1e-9) + 1e-12;
    let mut prev_m = margin(prev_k)?;
    for i in 1..=steps {
        let k = k_star + (capital_k - k_star) * i as f64 / steps as f64;
        let m = margin(k)?;
        if !found && prev_m <= 0.0 && m > 0.0 {
            let r = solve_bracketed(|k| margin(k).unwrap_or(f64::NAN), prev_k, k)?;
            k_double_star = r.value;
            found = true;
        } else if found && prev_m.signum() != m.signum() {
            diag.extra_crossings += 1;
        }
        prev_k = k;
        prev_m = m;
    }
    if !found {
        diag.clamped_to_capital_k = true;
    }

    Ok((
        Thresholds { k_star, capital_k, epsilon, k_double_star, bracket_width },
        diag,
    ))
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > numerics::ROOT_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform() -> Prior {
        Prior::uniform()
    }

    #[test]
    fn threshold_examples() {
        let f = uniform();
        // At the top of the feasible range the threshold is the reservation
        // value itself. The root is tangent there, so solver error in the
        // reservation value enters through a square root.
        assert_abs_diff_eq!(threshold_x(&f, 0.02, 0.8).unwrap(), 0.8, epsilon = 1e-7);
        assert_abs_diff_eq!(threshold_x(&f, 0.02, 0.48).unwrap(), 0.96, epsilon = 1e-8);
        // Independent oracle: with z = 1 - x the defining equation becomes
        // z^2 - 2 z (1 - u) + 2k = 0; take the smaller root.
        let u = 0.6_f64;
        let disc = (1.0 - u) * (1.0 - u) - 2.0 * 0.02;
        let z = (1.0 - u) - disc.sqrt();
        assert_abs_diff_eq!(threshold_x(&f, 0.02, u).unwrap(), 1.0 - z, epsilon = 1e-8);
        assert_abs_diff_eq!(threshold_x(&f, 0.02, u).unwrap(), 0.9464101615, epsilon = 1e-8);
    }

    #[test]
    fn threshold_monotone_in_target() {
        let f = uniform();
        let k = 0.05;
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let u = 0.45 + (0.683772 - 0.45) * i as f64 / 20.0;
            let x = threshold_x(&f, k, u).unwrap();
            assert!(x <= prev + 1e-9, "threshold must fall as the target rises");
            prev = x;
        }
    }

    #[test]
    fn onpath_offer_examples() {
        let f = uniform();
        // Full extraction: the threshold sits at the tangent frontier root.
        let y = PayoffProfile::new(vec![0.32], 0.48);
        let o = onpath_offer(&f, 0.02, &y).unwrap();
        assert_abs_diff_eq!(o.price, 0.064, epsilon = 1e-7);
        let Signal::PassFail { x } = o.signal else { panic!() };
        assert_abs_diff_eq!(x, 0.8, epsilon = 1e-7);

        let y = PayoffProfile::new(vec![0.1, 0.1], 0.5);
        let o = onpath_offer(&f, 0.02, &y).unwrap();
        // Independent oracle: z = 1 - x solves z^2 - 0.6 z + 0.04 = 0.
        let z = (0.6 - (0.36_f64 - 0.16).sqrt()) / 2.0;
        assert_abs_diff_eq!(o.price, z * 0.2, epsilon = 1e-8);
        let Signal::PassFail { x } = o.signal else { panic!() };
        assert_abs_diff_eq!(x, 1.0 - z, epsilon = 1e-8);
        assert_abs_diff_eq!(x, 0.9236067977, epsilon = 1e-8);
    }

    #[test]
    fn price_identity() {
        // c_Gx(y_agent) - c_Gx(||y||) equals (1 - F(x)) * broker take.
        let f = uniform();
        for (k, brokers, agent) in [
            (0.02, vec![0.32], 0.48),
            (0.02, vec![0.1, 0.1], 0.5),
            (0.1, vec![0.05, 0.04, 0.0], 0.42),
            (0.11, vec![0.140958], 0.39),
        ] {
            let y = PayoffProfile::new(brokers, agent);
            let o = onpath_offer(&f, k, &y).unwrap();
            let Signal::PassFail { x } = o.signal else { panic!() };
            let direct = (1.0 - f.cdf(x)) * y.broker_sum();
            assert_abs_diff_eq!(o.price, direct, epsilon = 1e-8);
        }
    }

    #[test]
    fn phi_examples() {
        let f = uniform();
        assert_abs_diff_eq!(phi(&f, 0.02).unwrap(), -0.1848, epsilon = 1e-9);
        assert_abs_diff_eq!(phi(&f, 0.18).unwrap(), 0.0512, epsilon = 1e-9);
    }

    #[test]
    fn wtp_zero_in_folk_region() {
        let f = uniform();
        for y in [
            PayoffProfile::new(vec![0.32], 0.48),
            PayoffProfile::new(vec![0.1, 0.1], 0.5),
            PayoffProfile::new(vec![0.0, 0.0], 0.48),
        ] {
            let v = wtp(&f, 0.02, &Signal::FullInfo, &y).unwrap();
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn wtp_positive_above_collar() {
        let f = uniform();
        let k = 0.11;
        let upper = mccall_reservation(&f, k).unwrap();
        let y = PayoffProfile::new(vec![upper - 0.39], 0.39);
        // Independent oracle from the hinge pieces: at ||y|| = upper the
        // on-path threshold is upper, c_Gx(upper) = k, price = (1-upper)*y1,
        // and c_uninf(upper) = 0, so
        // wtp = phi(k) - (k - price).
        let price = (1.0 - upper) * y.brokers[0];
        let expected = phi(&f, k).unwrap() - (k - price);
        let v = wtp(&f, k, &Signal::FullInfo, &y).unwrap();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(v, 0.00121, epsilon = 1e-4);
    }

    #[test]
    fn uniform_thresholds_closed_forms() {
        // k_star solves (1/2)(1/2 + k)^2 = 1/2 + k - sqrt(2k); algebra gives
        // k_star = (3 - 2 sqrt 2) / 2 exactly.
        let f = uniform();
        let (t, diag) = compute_thresholds(&f).unwrap();
        let k_star_exact = (3.0 - 2.0 * 2.0_f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(t.k_star, k_star_exact, epsilon = 1e-8);
        assert_abs_diff_eq!(t.capital_k, 0.125, epsilon = 1e-12);
        // eps_k = 2k sqrt(2k) - 2k^2 is increasing, so epsilon sits at k_star.
        let eps_exact = 2.0 * k_star_exact * (2.0 * k_star_exact).sqrt()
            - 2.0 * k_star_exact * k_star_exact;
        assert!(diag.epsilon_at_left_edge);
        assert_abs_diff_eq!(t.epsilon, eps_exact, epsilon = 1e-7);
        // First crossing of phi(k) - eps (1 - sqrt(2k)).
        let g = |k: f64| {
            let ub = 1.0 - (2.0 * k).sqrt();
            (0.5 + k) * (0.5 + k) / 2.0 - (0.5 + k - (2.0 * k).sqrt()) - t.epsilon * ub
        };
        assert!(g(t.k_double_star - 1e-6) < 0.0 && g(t.k_double_star + 1e-6) > 0.0);
        assert_abs_diff_eq!(t.k_double_star, 0.1021, epsilon = 1e-3);
        assert_eq!(diag.extra_crossings, 0);
        assert!(t.bracket_width <= 1e-9);
    }

    #[test]
    fn eps_at_matches_uniform_closed_form() {
        let f = uniform();
        for k in [0.09_f64, 0.1, 0.12, 0.2, 0.3] {
            let expect = 2.0 * k * (2.0 * k).sqrt() - 2.0 * k * k;
            assert_abs_diff_eq!(eps_at(&f, k).unwrap(), expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn thresholds_serialize_with_short_names() {
        let (t, _) = compute_thresholds(&uniform()).unwrap();
        let json = serde_json::to_value(&t).unwrap();
        for key in ["k_star", "K", "epsilon", "k_double_star", "bracket_width"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json.as_object().unwrap().len(), 5);
    }

    #[test]
    fn infeasible_profiles_rejected() {
        let f = uniform();
        assert!(onpath_offer(&f, 0.02, &PayoffProfile::new(vec![-0.1], 0.5)).is_err());
        assert!(onpath_offer(&f, 0.02, &PayoffProfile::new(vec![0.0], 0.4)).is_err());
        assert!(onpath_offer(&f, 0.02, &PayoffProfile::new(vec![0.5], 0.48)).is_err());
    }
}
