//! Bracketed root finding and adaptive quadrature.
//!
//! The solvers here are deliberately conservative: every root is bracketed,
//! every refinement step either shrinks the bracket or falls back to
//! bisection, and quadrature refines until an absolute tolerance is met.
//! Derivative-based methods are not used anywhere.

use crate::error::{Error, Result};

/// Absolute tolerance on the argument for root finding.
pub const ROOT_TOL: f64 = 1e-10;

/// Iteration cap for root finding.
pub const ROOT_MAX_ITER: usize = 200;

/// Absolute tolerance for adaptive quadrature.
pub const QUAD_TOL: f64 = 1e-10;

/// Outcome of a bracketed solve: the root and the final bracket width.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub value: f64,
    pub bracket_width: f64,
}

/// Finds a root of `f` on `[lo, hi]` by bisection with secant refinement.
///
/// Requires a sign change on the bracket (endpoints with `f = 0` count).
/// Every iteration takes a bisection step, so the bracket provably halves;
/// a secant step is interleaved when its candidate lands strictly inside
/// the bracket. Iteration continues past `ROOT_TOL` down to the floating
/// point floor, since downstream quantities with tangent roots amplify any
/// endpoint error by a square root.
pub fn solve_bracketed<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<Root> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(Root { value: a, bracket_width: 0.0 });
    }
    if fb == 0.0 {
        return Ok(Root { value: b, bracket_width: 0.0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo, hi, flo: fa, fhi: fb });
    }
    let floor = |a: f64, b: f64| 4.0 * f64::EPSILON * (1.0 + a.abs() + b.abs());
    for _ in 0..ROOT_MAX_ITER {
        if (b - a).abs() <= floor(a, b) {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(Root { value: m, bracket_width: 0.0 });
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
        if (b - a).abs() <= floor(a, b) {
            break;
        }
        let denom = fb - fa;
        if denom != 0.0 {
            let x = b - fb * (b - a) / denom;
            let margin = 0.01 * (b - a).abs();
            if x.is_finite() && x > a.min(b) + margin && x < a.max(b) - margin {
                let fx = f(x);
                if fx == 0.0 {
                    return Ok(Root { value: x, bracket_width: 0.0 });
                }
                if fx.signum() == fa.signum() {
                    a = x;
                    fa = fx;
                } else {
                    b = x;
                    fb = fx;
                }
            }
        }
    }
    let width = (b - a).abs();
    if width <= ROOT_TOL {
        Ok(Root { value: 0.5 * (a + b), bracket_width: width })
    } else {
        Err(Error::NoConvergence { what: "bracketed root solve", iterations: ROOT_MAX_ITER })
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    adapt(&f, a, b, fa, fm, fb, whole, tol, 48)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
