//! Scalar root isolation on the unit interval.

use crate::error::{Error, Result};

/// Outcome of locating the first upward crossing of `target` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Crossing {
    /// `f(0)` already meets the target.
    AtZero(f64),
    /// Bracketed root with its residual `f(x) - target`.
    Root { x: f64, residual: f64 },
    /// `f` never reaches the target on the scan.
    Never,
}

/// Finds the smallest `x` in `[0, 1]` with `f(x) >= target`: a uniform
/// pre-scan isolates the first sign change, bisection then refines it until
/// `|f(x) - target| < tol` or the bracket collapses. The returned point always
/// satisfies `f(x) >= target`.
pub(crate) fn first_crossing<F: Fn(f64) -> Result<f64>>(f: F, target: f64, scan: usize, tol: f64) -> Result<Crossing> {
    let f0 = f(0.0)?;
    if f0 >= target {
        return Ok(Crossing::AtZero(f0 - target));
    }
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=scan {
        let x = i as f64 / scan as f64;
        if f(x)? >= target {
            hi = Some(x);
            break;
        }
        lo = x;
    }
    let Some(mut hi) = hi else {
        return Ok(Crossing::Never);
    };
    let mut res_hi = f(hi)? - target;
    for _ in 0..200 {
        if res_hi.abs() < tol || hi - lo <= f64::EPSILON * hi.max(1e-300) {
            return Ok(Crossing::Root { x: hi, residual: res_hi });
        }
        let mid = 0.5 * (lo + hi);
        let r = f(mid)? - target;
        if r >= 0.0 {
            hi = mid;
            res_hi = r;
        } else {
            lo = mid;
        }
    }
    Err(Error::NonConvergence(format!("bisection stalled at residual {res_hi:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_first_of_several_roots() {
        // sin has crossings of 0.5 at asin(0.5)/(3π) and beyond
        let f = |x: f64| Ok((3.0 * std::f64::consts::PI * x).sin());
        match first_crossing(f, 0.5, 200, 1e-12).unwrap() {
            Crossing::Root { x, residual } => {
                assert!((x - 1.0 / 18.0).abs() < 1e-10);
                assert!((0.0..1e-12).contains(&residual));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn boundary_outcomes() {
        assert!(matches!(first_crossing(Ok, -1.0, 10, 1e-9).unwrap(), Crossing::AtZero(_)));
        assert_eq!(first_crossing(Ok, 2.0, 10, 1e-9).unwrap(), Crossing::Never);
    }
}
