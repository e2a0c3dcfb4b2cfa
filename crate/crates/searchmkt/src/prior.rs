//! Quality priors on `[0, 1]`.
//!
//! A prior is an absolutely continuous distribution `F` of match quality.
//! Everything downstream consumes it through a small closed-form surface:
//! CDF, mean, conditional means on tail events, partial expectations, and
//! the upper partial integral `c(u) = integral_u^1 (1 - F(m)) dm`, which is
//! the option value of one more draw at outside value `u`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::numerics;

/// Validation tolerance for total mass.
const MASS_TOL: f64 = 1e-9;

/// An absolutely continuous quality distribution supported on `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    /// The uniform distribution on `[0, 1]`.
    Uniform01,
    /// A Beta distribution with the given shape parameters.
    Beta { alpha: f64, beta: f64 },
    /// A piecewise-linear CDF through sorted `(theta, F(theta))` points.
    Tabulated { points: Vec<(f64, f64)> },
}

impl Prior {
    /// Uniform prior; always valid.
    pub fn uniform() -> Self {
        Prior::Uniform01
    }

    /// Beta prior. Validates shapes, total mass, and mean.
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        let p = Prior::Beta { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// Piecewise-linear CDF prior. Points must start at `F = 0`, end at
    /// `F = 1`, have strictly increasing abscissae in `[0, 1]`, and a
    /// nondecreasing ordinate (no atoms: equal abscissae are rejected).
    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let p = Prior::Tabulated { points };
        p.validate()?;
        Ok(p)
    }

    /// Checks the invariants of the variant. Constructors call this; call it
    /// again after deserializing from external input.
    pub fn validate(&self) -> Result<()> {
        match self {
            Prior::Uniform01 => Ok(()),
            Prior::Beta { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite()) || *alpha <= 0.0 || *beta <= 0.0 {
                    return Err(Error::InvalidPrior(format!(
                        "beta shapes must be positive and finite, got ({alpha}, {beta})"
                    )));
                }
                let dist = statrs::distribution::Beta::new(*alpha, *beta)
                    .map_err(|e| Error::InvalidPrior(e.to_string()))?;
                // Total mass through the CDF; the density may be unbounded at
                // the endpoints, so the mass check runs on the CDF scale.
                let total = dist.cdf(1.0) - dist.cdf(0.0);
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(Error::InvalidPrior(format!(
                        "beta mass is {total}, expected 1"
                    )));
                }
                if *alpha >= 1.0 && *beta >= 1.0 {
                    use statrs::distribution::Continuous;
                    let mass = numerics::integrate(|x| dist.pdf(x), 0.0, 1.0, numerics::QUAD_TOL);
                    if (mass - 1.0).abs() > MASS_TOL {
                        return Err(Error::InvalidPrior(format!(
                            "beta density integrates to {mass}, expected 1"
                        )));
                    }
                }
                let mean = alpha / (alpha + beta);
                if mean <= 0.0 || mean >= 1.0 {
                    return Err(Error::InvalidPrior(format!("mean {mean} outside (0, 1)")));
                }
                Ok(())
            }
            Prior::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidPrior("need at least two CDF points".into()));
                }
                let (t0, f0) = points[0];
                let (tn, fn_) = *points.last().expect("nonempty");
                if f0 != 0.0 || (fn_ - 1.0).abs() > MASS_TOL {
                    return Err(Error::InvalidPrior(format!(
                        "CDF must run from 0 to 1, got [{f0}, {fn_}]"
                    )));
                }
                if t0 < 0.0 || tn > 1.0 {
                    return Err(Error::InvalidPrior(format!(
                        "support [{t0}, {tn}] outside [0, 1]"
                    )));
                }
                for w in points.windows(2) {
                    let (ta, fa) = w[0];
                    let (tb, fb) = w[1];
                    if tb <= ta {
                        return Err(Error::InvalidPrior(format!(
                            "abscissae must strictly increase, got {ta} then {tb}"
                        )));
                    }
                    if fb < fa {
                        return Err(Error::InvalidPrior(format!(
                            "CDF must be nondecreasing, got {fa} then {fb}"
                        )));
                    }
                }
                let mean = self.mean();
                if mean <= 0.0 || mean >= 1.0 {
                    return Err(Error::InvalidPrior(format!("mean {mean} outside (0, 1)")));
                }
                Ok(())
            }
        }
    }

    /// `F(x)`, clamped to the support.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return if matches!(self, Prior::Tabulated { .. }) { self.cdf_raw(x) } else { 0.0 };
        }
        if x >= 1.0 {
            return 1.0;
        }
        self.cdf_raw(x)
    }

    fn cdf_raw(&self, x: f64) -> f64 {
        match self {
            Prior::Uniform01 => x.clamp(0.0, 1.0),
            Prior::Beta { alpha, beta } => beta_reg(*alpha, *beta, x.clamp(0.0, 1.0)),
            Prior::Tabulated { points } => {
                let (t0, _) = points[0];
                if x <= t0 {
                    return 0.0;
                }
                let (tn, _) = *points.last().expect("nonempty");
                if x >= tn {
                    return 1.0;
                }
                let idx = points.partition_point(|&(t, _)| t <= x);
                let (ta, fa) = points[idx - 1];
                let (tb, fb) = points[idx];
                fa + (fb - fa) * (x - ta) / (tb - ta)
            }
        }
    }

    /// `E[theta]`.
    pub fn mean(&self) -> f64 {
        match self {
            Prior::Uniform01 => 0.5,
            Prior::Beta { alpha, beta } => alpha / (alpha + beta),
            Prior::Tabulated { .. } => self.partial_below(1.0),
        }
    }

    /// `E[theta * 1{theta <= x}]`, the lower partial expectation.
    pub fn partial_below(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Prior::Uniform01 => {
                let x = x.min(1.0);
                0.5 * x * x
            }
            Prior::Beta { alpha, beta } => {
                // E[theta; theta <= x] = mean * I_x(alpha + 1, beta).
                let x = x.min(1.0);
                (alpha / (alpha + beta)) * beta_reg(alpha + 1.0, *beta, x)
            }
            Prior::Tabulated { points } => {
                let mut acc = 0.0;
                for w in points.windows(2) {
                    let (ta, fa) = w[0];
                    let (tb, fb) = w[1];
                    if x <= ta {
                        break;
                    }
                    let density = (fb - fa) / (tb - ta);
                    let hi = x.min(tb);
                    acc += density * 0.5 * (hi * hi - ta * ta);
                }
                acc
            }
        }
    }

    /// `E[theta | theta <= x]`. Requires `F(x) > 0`.
    pub fn cond_mean_below(&self, x: f64) -> Result<f64> {
        let p = self.cdf(x);
        if p <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "conditional mean below {x} undefined: F({x}) = 0"
            )));
        }
        Ok(self.partial_below(x) / p)
    }

    /// `E[theta | theta >= x]`. Requires `F(x) < 1`.
    pub fn cond_mean_above(&self, x: f64) -> Result<f64> {
        let p = self.cdf(x);
        if p >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "conditional mean above {x} undefined: F({x}) = 1"
            )));
        }
        Ok((self.mean() - self.partial_below(x)) / (1.0 - p))
    }

    /// Upper partial integral `c(u) = integral_u^1 (1 - F(m)) dm`, extended
    /// beyond the support: `mean - u` for `u <= 0` and `0` for `u >= 1`.
    ///
    /// Equals `E[(theta - u)^+]`, so it is convex, weakly decreasing, and
    /// satisfies `c(0) = E[theta]`.
    pub fn c_full(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.mean() - u;
        }
        if u >= 1.0 {
            return 0.0;
        }
        let v = self.mean() - self.partial_below(u) - u * (1.0 - self.cdf(u));
        v.max(0.0)
    }

    /// Draws one quality from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Prior::Uniform01 => rng.gen::<f64>(),
            Prior::Beta { alpha, beta } => {
                use rand_distr::Distribution;
                let dist = rand_distr::Beta::new(*alpha, *beta).expect("validated shapes");
                dist.sample(rng)
            }
            Prior::Tabulated { points } => {
                let p: f64 = rng.gen();
                let idx = points.partition_point(|&(_, f)| f < p).min(points.len() - 1);
                if idx == 0 {
                    return points[0].0;
                }
                let (ta, fa) = points[idx - 1];
                let (tb, fb) = points[idx];
                if fb - fa <= 0.0 {
                    return tb;
                }
                ta + (tb - ta) * (p - fa) / (fb - fa)
            }
        }
    }
}
