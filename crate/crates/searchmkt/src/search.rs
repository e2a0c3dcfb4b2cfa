//! Reservation values for sequential search over posterior means.
//!
//! The searcher pays a flow cost `k` per draw, observes a posterior mean
//! `m ~ G`, and stops when `m` beats the value of continuing. The
//! reservation value `u` is the unique solution of `c_G(u) = k`: the option
//! value of one more draw exactly covers its cost. Two instances anchor
//! everything: full information gives the upper reservation value and no
//! information gives the autarky value.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics;
use crate::prior::Prior;
use crate::signals::Signal;

/// One row of a comparative-statics table over search costs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompstatRow {
    pub k: f64,
    /// Full-information reservation value.
    pub upper: f64,
    /// Autarky value `E[theta] - k`.
    pub lower: f64,
    /// Full surplus at stake, `upper - lower`.
    pub gap: f64,
    /// Marginal response of the upper value, `-1 / (1 - F(upper))`.
    pub d_upper_dk: f64,
}

/// Comparative statics over a cost grid plus monotonicity verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct CompstatReport {
    pub rows: Vec<CompstatRow>,
    /// Upper value strictly decreases in `k`.
    pub upper_monotone: bool,
    /// Autarky value strictly decreases in `k`.
    pub lower_monotone: bool,
    /// Surplus gap strictly decreases in `k`.
    pub gap_monotone: bool,
}

fn validate_cost(prior: &Prior, k: f64) -> Result<()> {
    let mean = prior.mean();
    if !k.is_finite() || k <= 0.0 || k >= mean {
        return Err(Error::SearchCostOutOfRange { k, mean });
    }
    Ok(())
}

/// Reservation value of searching with signal `g`: the unique `u` with
/// `c_G(u) = k`.
pub fn reservation_value(prior: &Prior, g: &Signal, k: f64) -> Result<f64> {
    validate_cost(prior, k)?;
    let root = numerics::solve_bracketed(|u| g.c_value(prior, u) - k, 0.0, 1.0)?;
    Ok(root.value)
}

/// Upper reservation value: searching with full information.
pub fn mccall_reservation(prior: &Prior, k: f64) -> Result<f64> {
    reservation_value(prior, &Signal::FullInfo, k)
}

/// Autarky value: searching with no information, `E[theta] - k`.
pub fn autarky_value(prior: &Prior, k: f64) -> Result<f64> {
    validate_cost(prior, k)?;
    Ok(prior.mean() - k)
}

/// `(autarky, full-information)` reservation values; the interval of agent
/// values any information structure can induce.
pub fn surplus_bounds(prior: &Prior, k: f64) -> Result<(f64, f64)> {
    Ok((autarky_value(prior, k)?, mccall_reservation(prior, k)?))
}

/// Tabulates reservation values over a strictly increasing cost grid and
/// checks that both values and the surplus gap strictly decrease.
pub fn compstat_report(prior: &Prior, ks: &[f64]) -> Result<CompstatReport> {
    if ks.len() < 2 {
        return Err(Error::InvalidArgument("need at least two grid points".into()));
    }
    for w in ks.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(format!(
                "cost grid must strictly increase, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let upper = mccall_reservation(prior, k)?;
        let lower = autarky_value(prior, k)?;
        rows.push(CompstatRow {
            k,
            upper,
            lower,
            gap: upper - lower,
            d_upper_dk: -1.0 / (1.0 - prior.cdf(upper)),
        });
    }
    let strict = |f: fn(&CompstatRow) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    Ok(CompstatReport {
        upper_monotone: strict(|r| r.upper),
        lower_monotone: strict(|r| r.lower),
        gap_monotone: strict(|r| r.gap),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_closed_forms() {
        let f = Prior::uniform();
        // c_F(u) = (1-u)^2 / 2, so the root of c_F(u) = k is 1 - sqrt(2k).
        assert_abs_diff_eq!(mccall_reservation(&f, 0.02).unwrap(), 0.8, epsilon = 1e-9);
        assert_abs_diff_eq!(
            reservation_value(&f, &Signal::Uninformative, 0.02).unwrap(),
            0.48,
            epsilon = 1e-9
        );
    }

    #[test]
    fn coarse_pass_fail_can_match_autarky() {
        // A threshold so high that failing is nearly uninformative: the
        // reservation value collapses to the autarky value.
        let f = Prior::uniform();
        let g = Signal::pass_fail(0.96).unwrap();
        assert_abs_diff_eq!(reservation_value(&f, &g, 0.02).unwrap(), 0.48, epsilon = 1e-9);
    }

    #[test]
    fn surplus_bound_examples() {
        let f = Prior::uniform();
        let (lo, hi) = surplus_bounds(&f, 0.125).unwrap();
        assert_abs_diff_eq!(lo, 0.375, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 0.5, epsilon = 1e-9);
        let (lo, hi) = surplus_bounds(&f, 0.1).unwrap();
        assert_abs_diff_eq!(lo, 0.4, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 1.0 - 0.2_f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn cost_domain_enforced() {
        let f = Prior::uniform();
        assert!(mccall_reservation(&f, 0.0).is_err());
        assert!(mccall_reservation(&f, 0.5).is_err());
        assert!(mccall_reservation(&f, -0.1).is_err());
        assert!(mccall_reservation(&f, 0.499999).is_ok());
    }

    #[test]
    fn monotone_in_cost() {
        let f = Prior::beta(2.0, 2.0).unwrap();
        let ks: Vec<f64> = (1..=20).map(|i| 0.02 * i as f64 / 1.0).filter(|&k| k < 0.5).collect();
        let report = compstat_report(&f, &ks).unwrap();
        assert!(report.upper_monotone);
        assert!(report.lower_monotone);
        assert!(report.gap_monotone);
        // The upper value responds more than one-for-one to the cost.
        for r in &report.rows {
            assert!(r.d_upper_dk < -1.0);
        }
    }

    #[test]
    fn finer_information_raises_reservation_value() {
        let f = Prior::uniform();
        let k = 0.05;
        let coarse = reservation_value(&f, &Signal::pass_fail(0.6).unwrap(), k).unwrap();
        let fine = reservation_value(
            &f,
            &Signal::interval_partition(vec![0.3, 0.6, 0.9]).unwrap(),
            k,
        )
        .unwrap();
        let full = mccall_reservation(&f, k).unwrap();
        let none = reservation_value(&f, &Signal::Uninformative, k).unwrap();
        assert!(none <= coarse && coarse <= fine && fine <= full);
    }
}
