//! Information structures sold to the searcher.
//!
//! A signal garbles quality into a posterior-mean distribution `G`. The
//! library works with the structures that arise in equilibrium: no
//! information, full information, a single pass-fail threshold, and its
//! generalization to interval partitions. All of them are mean-preserving
//! contractions of the prior, which `mpc_check` verifies numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::Prior;

/// A signal technology: a map from quality to a posterior-mean distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    /// Reveals nothing; the posterior mean is the prior mean.
    Uninformative,
    /// Reveals quality exactly.
    FullInfo,
    /// Reveals whether quality clears the threshold `x`.
    PassFail { x: f64 },
    /// Reveals which cell of the partition induced by `cuts` quality falls in.
    IntervalPartition { cuts: Vec<f64> },
}

/// One atom of a discrete posterior-mean distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub mass: f64,
    pub mean: f64,
}

/// Numerical report from `mpc_check`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MpcReport {
    /// Mean preservation gap `|E_G[m] - E_F[theta]|`.
    pub mean_gap: f64,
    /// Largest violation of `c_G(u) <= c_F(u)` over the grid.
    pub upper_violation: f64,
    /// Largest violation of `c_G(u) >= c_uninformative(u)` over the grid.
    pub lower_violation: f64,
    /// True when all gaps are within tolerance.
    pub ok: bool,
}

const MPC_TOL: f64 = 1e-9;

impl Signal {
    /// Pass-fail signal at threshold `x in (0, 1)`.
    pub fn pass_fail(x: f64) -> Result<Self> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::InvalidSignal(format!("threshold {x} outside (0, 1)")));
        }
        Ok(Signal::PassFail { x })
    }

    /// Interval-partition signal; cuts must be strictly increasing in (0, 1).
    pub fn interval_partition(cuts: Vec<f64>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::InvalidSignal("need at least one cut".into()));
        }
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidSignal(format!(
                    "cuts must strictly increase, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if cuts[0] <= 0.0 || *cuts.last().expect("nonempty") >= 1.0 {
            return Err(Error::InvalidSignal("cuts must lie inside (0, 1)".into()));
        }
        Ok(Signal::IntervalPartition { cuts })
    }

    /// Checks variant invariants (mirrors the constructors, for data read
    /// from external input).
    pub fn validate(&self) -> Result<()> {
        match self {
            Signal::Uninformative | Signal::FullInfo => Ok(()),
            Signal::PassFail { x } => Signal::pass_fail(*x).map(|_| ()),
            Signal::IntervalPartition { cuts } => {
                Signal::interval_partition(cuts.clone()).map(|_| ())
            }
        }
    }

    /// Posterior-mean atoms under `prior`, for the discrete structures.
    /// Zero-mass cells are dropped. `FullInfo` has no atoms (continuous) and
    /// returns `None`.
    pub fn atoms(&self, prior: &Prior) -> Option<Vec<Atom>> {
        match self {
            Signal::FullInfo => None,
            Signal::Uninformative => Some(vec![Atom { mass: 1.0, mean: prior.mean() }]),
            Signal::PassFail { x } => Some(partition_atoms(prior, &[*x])),
            Signal::IntervalPartition { cuts } => Some(partition_atoms(prior, cuts)),
        }
    }

    /// CDF of the posterior-mean distribution: `G(t) = Pr[m <= t]`.
    pub fn cdf(&self, prior: &Prior, t: f64) -> f64 {
        match self.atoms(prior) {
            None => prior.cdf(t),
            Some(atoms) => atoms.iter().filter(|a| a.mean <= t).map(|a| a.mass).sum(),
        }
    }

    /// Upper partial integral of the posterior-mean distribution,
    /// `c_G(u) = integral_u^1 (1 - G(m)) dm = E_G[(m - u)^+]`.
    pub fn c_value(&self, prior: &Prior, u: f64) -> f64 {
        match self.atoms(prior) {
            None => prior.c_full(u),
            Some(atoms) => atoms.iter().map(|a| a.mass * (a.mean - u).max(0.0)).sum(),
        }
    }

    /// Posterior mean realized by quality `theta`. Ties go to the lower cell:
    /// a pass-fail signal fails exactly at `theta = x`.
    pub fn realize(&self, prior: &Prior, theta: f64) -> f64 {
        match self {
            Signal::Uninformative => prior.mean(),
            Signal::FullInfo => theta,
            Signal::PassFail { x } => cell_mean(prior, &[*x], theta),
            Signal::IntervalPartition { cuts } => cell_mean(prior, cuts, theta),
        }
    }

    /// Verifies mean preservation and the second-order sandwich
    /// `c_uninformative <= c_G <= c_F` on a uniform `u`-grid.
    pub fn mpc_check(&self, prior: &Prior, grid_n: usize) -> MpcReport {
        let mean = prior.mean();
        let signal_mean = match self.atoms(prior) {
            None => mean,
            Some(atoms) => atoms.iter().map(|a| a.mass * a.mean).sum(),
        };
        let mean_gap = (signal_mean - mean).abs();
        let n = grid_n.max(2);
        let mut upper: f64 = 0.0;
        let mut lower: f64 = 0.0;
        for i in 0..=n {
            let u = i as f64 / n as f64;
            let cg = self.c_value(prior, u);
            let cf = prior.c_full(u);
            let c0 = (mean - u).max(0.0);
            upper = upper.max(cg - cf);
            lower = lower.max(c0 - cg);
        }
        MpcReport {
            mean_gap,
            upper_violation: upper,
            lower_violation: lower,
            ok: mean_gap <= MPC_TOL && upper <= MPC_TOL && lower <= MPC_TOL,
        }
    }
}

fn partition_atoms(prior: &Prior, cuts: &[f64]) -> Vec<Atom> {
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(cuts);
    edges.push(1.0);
    let mut atoms = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let mass = prior.cdf(w[1]) - prior.cdf(w[0]);
        if mass <= 0.0 {
            continue;
        }
        let mean = (prior.partial_below(w[1]) - prior.partial_below(w[0])) / mass;
        atoms.push(Atom { mass, mean });
    }
    atoms
}

fn cell_mean(prior: &Prior, cuts: &[f64], theta: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    for &c in cuts {
        if theta <= c {
            hi = c;
            break;
        }
        lo = c;
    }
    let mass = prior.cdf(hi) - prior.cdf(lo);
    if mass <= 0.0 {
        // Measure-zero cell; only reachable through degenerate inputs.
        return theta;
    }
    (prior.partial_below(hi) - prior.partial_below(lo)) / mass
}
