//! Brute-force cross-checks of the equilibrium characterization.
//!
//! Two independent computations pin down the broker minimax value: a
//! closed-form lower bound on the best deviation payoff as a function of the
//! broker's guaranteed continuation, and a round-based elimination over a
//! payoff grid that removes profiles no continuation can defend. Agreement
//! between the two, and with the quadrature-based rejection certificate,
//! backs the threshold classification computed elsewhere.

use serde::{Deserialize, Serialize};

use crate::contracts::{phi, FEAS_TOL};
use crate::engine::{deviation_search, DeviationOptions};
use crate::error::{Error, Result};
use crate::numerics::{integrate, QUAD_TOL};
use crate::prior::Prior;
use crate::profile::PayoffProfile;
use crate::search::surplus_bounds;

/// Fixed-point detection tolerance on the guarantee axis.
pub const FIXED_TOL: f64 = 1e-9;

/// Closed-form lower bound on a broker's best one-shot deviation payoff
/// when the deviation is punished with autarky play that still pays the
/// broker `y1`, and rejection is rewarded with the remaining surplus.
///
/// The binding deviation is a pass-fail offer; its cutoff moves up with the
/// guarantee once the reward continuation leaves no slack for skipping,
/// which is exactly the `upper - y1 < mean` case.
pub fn minimax_lower_bound(prior: &Prior, k: f64, y1: f64) -> Result<f64> {
    let (lower, upper) = surplus_bounds(prior, k)?;
    let gap = upper - lower;
    if !(-FEAS_TOL..=gap + FEAS_TOL).contains(&y1) {
        return Err(Error::InvalidArgument(format!(
            "guarantee {y1} outside [0, {gap}]"
        )));
    }
    let y1 = y1.clamp(0.0, gap);
    let bound = if upper - y1 < prior.mean() {
        prior.c_full(lower + y1) - k + y1
    } else {
        phi(prior, k)? + y1 * (1.0 + prior.cdf(lower))
    };
    Ok(bound.max(0.0))
}

/// Quadrature-backed test of whether autarky punishment deters every
/// deviation: the best supported offer against it must not beat the
/// outside option of waiting for the full-information reward.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RejectAllCertificate {
    pub holds: bool,
    /// Value of the best deviating offer under autarky punishment.
    pub supported_value: f64,
    /// Agent's skip value under the full-surplus reward.
    pub outside_value: f64,
    /// `supported_value - outside_value`; the certificate holds when this
    /// is nonpositive.
    pub margin: f64,
}

pub fn reject_all_certificate(prior: &Prior, k: f64) -> Result<RejectAllCertificate> {
    let (lower, upper) = surplus_bounds(prior, k)?;
    // Direct quadrature keeps this independent of the closed-form partial
    // expectations used everywhere else.
    let c_quad = integrate(|m| 1.0 - prior.cdf(m), lower, 1.0, QUAD_TOL);
    let supported_value = c_quad + lower;
    let outside_value = (prior.mean() - upper).max(0.0) + upper;
    let margin = supported_value - outside_value;
    Ok(RejectAllCertificate { holds: margin <= FIXED_TOL, supported_value, outside_value, margin })
}

/// Which guarantee survives the deviation map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimaxRegime {
    /// Zero is a fixed point: autarky punishment deters all deviations.
    NuZero,
    /// Every interior guarantee is beaten; only full extraction survives.
    NuFullSurplus,
}

/// One grid point of the fixed-point scan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanRow {
    pub y1: f64,
    pub bound: f64,
    /// `bound - y1`; a fixed point has excess near zero, a removable
    /// guarantee has it strictly positive.
    pub excess: f64,
}

/// Fixed points of the deviation bound over the guarantee axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub regime: MinimaxRegime,
    /// The guarantee the scan certifies: zero or the full gap.
    pub nu: f64,
    pub rows: Vec<ScanRow>,
    pub fixed_points: Vec<f64>,
    /// Smallest excess over guarantees strictly below the gap.
    pub min_interior_excess: f64,
    pub certificate: RejectAllCertificate,
    /// The scan's regime matches the certificate's verdict.
    pub agrees_with_certificate: bool,
}

/// Scans the deviation bound on a uniform guarantee grid and classifies the
/// fixed-point structure.
pub fn scan_fixed_points(prior: &Prior, k: f64, grid_n: usize) -> Result<ScanReport> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument("scan needs at least two grid points".into()));
    }
    let (lower, upper) = surplus_bounds(prior, k)?;
    let gap = upper - lower;
    let mut rows = Vec::with_capacity(grid_n);
    let mut fixed_points = Vec::new();
    let mut min_interior_excess = f64::INFINITY;
    for i in 0..grid_n {
        let y1 = gap * i as f64 / (grid_n - 1) as f64;
        let bound = minimax_lower_bound(prior, k, y1)?;
        let excess = bound - y1;
        if excess.abs() <= FIXED_TOL {
            fixed_points.push(y1);
        }
        if i + 1 < grid_n {
            min_interior_excess = min_interior_excess.min(excess);
        }
        rows.push(ScanRow { y1, bound, excess });
    }
    let regime = if rows[0].excess <= FIXED_TOL {
        MinimaxRegime::NuZero
    } else {
        MinimaxRegime::NuFullSurplus
    };
    let nu = match regime {
        MinimaxRegime::NuZero => 0.0,
        MinimaxRegime::NuFullSurplus => gap,
    };
    let certificate = reject_all_certificate(prior, k)?;
    let agrees_with_certificate = (regime == MinimaxRegime::NuZero) == certificate.holds;
    Ok(ScanReport {
        regime,
        nu,
        rows,
        fixed_points,
        min_interior_excess,
        certificate,
        agrees_with_certificate,
    })
}

/// Result of the grid elimination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApsReport {
    pub nx: usize,
    pub ny: usize,
    /// Autarky and full-information reservation values anchoring the grid.
    pub lower: f64,
    pub upper: f64,
    pub rounds: usize,
    pub converged: bool,
    pub survivors: usize,
    /// Smallest surviving broker guarantee.
    pub nu_estimate: f64,
    /// Grid cell sizes on the broker and agent axes.
    pub cell: (f64, f64),
    /// `occupancy[i][j]` marks profile `(y1_i, lower + j * cell.1)` alive.
    pub occupancy: Vec<Vec<bool>>,
    /// Index-space Hausdorff distance to the predicted set, in cells.
    pub hausdorff_cells: f64,
    pub reference_regime: MinimaxRegime,
}

const APS_TOL: f64 = 1e-9;

/// Single-broker payoff-set elimination. Starts from the feasible grid and
/// repeatedly removes profiles whose guarantee the current worst surviving
/// punishment cannot defend; the deviation supremum is recomputed each
/// round from the surviving extremes via the one-shot search. The fixed
/// point is compared against the scan's prediction: the full triangle when
/// zero survives, the full-extraction point otherwise.
pub fn aps_iterate(
    prior: &Prior,
    k: f64,
    nx: usize,
    ny: usize,
    max_rounds: usize,
) -> Result<ApsReport> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points per axis".into()));
    }
    let (lower, upper) = surplus_bounds(prior, k)?;
    let gap = upper - lower;
    let dx = gap / (nx - 1) as f64;
    let dy = gap / (ny - 1) as f64;
    let y1_of = |i: usize| gap * i as f64 / (nx - 1) as f64;
    let y2_of = |j: usize| lower + gap * j as f64 / (ny - 1) as f64;

    let mut occupancy: Vec<Vec<bool>> = (0..nx)
        .map(|i| (0..ny).map(|j| y1_of(i) + y2_of(j) <= upper + FEAS_TOL).collect())
        .collect();
    let initial = occupancy.clone();
    let opts = DeviationOptions::default();

    let mut rounds = 0;
    let mut converged = false;
    while rounds < max_rounds {
        rounds += 1;
        let Some(i_min) = (0..nx).find(|&i| occupancy[i].iter().any(|&o| o)) else {
            return Err(Error::Infeasible("every profile was eliminated".into()));
        };
        let nu_hat = y1_of(i_min);
        let j_max = (0..ny).rev().find(|&j| occupancy[i_min][j]).unwrap();
        let punish = PayoffProfile::new(vec![nu_hat], lower);
        let reward = PayoffProfile::new(vec![nu_hat], y2_of(j_max));
        // With one broker the target does not enter the deviation value, so
        // one supremum serves the whole round.
        let sup = deviation_search(prior, k, &punish, &punish, &reward, 0, &opts)?.best_payoff;
        let mut removed = false;
        for i in 0..nx {
            if y1_of(i) + APS_TOL < sup {
                for cell in occupancy[i].iter_mut() {
                    removed |= *cell;
                    *cell = false;
                }
            }
        }
        if !removed {
            converged = true;
            break;
        }
    }

    let survivors: usize = occupancy.iter().flatten().filter(|&&o| o).count();
    let i_min = (0..nx).find(|&i| occupancy[i].iter().any(|&o| o)).unwrap();
    let nu_estimate = y1_of(i_min);

    let reference_regime = if minimax_lower_bound(prior, k, 0.0)? <= FIXED_TOL {
        MinimaxRegime::NuZero
    } else {
        MinimaxRegime::NuFullSurplus
    };
    let reference: Vec<Vec<bool>> = match reference_regime {
        MinimaxRegime::NuZero => initial,
        MinimaxRegime::NuFullSurplus => {
            let mut point = vec![vec![false; ny]; nx];
            point[nx - 1][0] = true;
            point
        }
    };
    let hausdorff_cells = hausdorff_cells(&occupancy, &reference);

    Ok(ApsReport {
        nx,
        ny,
        lower,
        upper,
        rounds,
        converged,
        survivors,
        nu_estimate,
        cell: (dx, dy),
        occupancy,
        hausdorff_cells,
        reference_regime,
    })
}

fn hausdorff_cells(a: &[Vec<bool>], b: &[Vec<bool>]) -> f64 {
    if a == b {
        return 0.0;
    }
    let cells = |m: &[Vec<bool>]| -> Vec<(i64, i64)> {
        m.iter()
            .enumerate()
            .flat_map(|(i, col)| {
                col.iter()
                    .enumerate()
                    .filter(|(_, &o)| o)
                    .map(move |(j, _)| (i as i64, j as i64))
            })
            .collect()
    };
    let (pa, pb) = (cells(a), cells(b));
    let directed = |from: &[(i64, i64)], to: &[(i64, i64)]| -> f64 {
        from.iter()
            .map(|&(i, j)| {
                to.iter()
                    .map(|&(p, q)| (i - p).abs().max((j - q).abs()))
                    .min()
                    .unwrap_or(i64::MAX) as f64
            })
            .fold(0.0, f64::max)
    };
    directed(&pa, &pb).max(directed(&pb, &pa))
}
