//! Exact integer least squares `min_b |y - M b|²` by depth-first
//! Schnorr–Euchner enumeration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Preprocessed search for a fixed square full-rank matrix `M`.
#[derive(Debug, Clone)]
pub struct SphereDecoder {
    q_t: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl SphereDecoder {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() || n == 0 {
            return Err(Error::Degenerate("search matrix must be square".into()));
        }
        let qr = m.clone().qr();
        let r = qr.r();
        let scale = r.diagonal().amax();
        if r.diagonal().iter().any(|d| d.abs() <= 1e-13 * scale) {
            return Err(Error::Degenerate("search matrix is rank deficient".into()));
        }
        Ok(SphereDecoder { q_t: qr.q().transpose(), r })
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    /// Exact minimizer and its squared distance. Starting from an infinite
    /// radius, the first leaf reached is the Babai point, and every later
    /// branch is pruned against the best distance so far; the search is
    /// therefore exhaustive and always terminates.
    pub fn decode(&self, y: &DVector<f64>) -> (Vec<i64>, f64) {
        let n = self.dim();
        let z = &self.q_t * y;
        let r = &self.r;
        let mut best = vec![0i64; n];
        let mut best_d = f64::INFINITY;
        let mut b = vec![0i64; n];
        let mut center = vec![0.0; n];
        let mut step = vec![0i64; n];
        let mut dist = vec![0.0; n + 1];
        let set_center = |k: usize, b: &[i64]| -> f64 {
            let mut s = z[k];
            for j in k + 1..n {
                s -= r[(k, j)] * b[j] as f64;
            }
            s / r[(k, k)]
        };
        let mut k = n - 1;
        center[k] = set_center(k, &b);
        b[k] = center[k].round() as i64;
        step[k] = if center[k] >= b[k] as f64 { 1 } else { -1 };
        loop {
            let e = (center[k] - b[k] as f64) * r[(k, k)];
            let d = dist[k + 1] + e * e;
            if d < best_d {
                if k == 0 {
                    best_d = d;
                    best.copy_from_slice(&b);
                    advance(k, &mut b, &mut step);
                    continue;
                }
                dist[k] = d;
                k -= 1;
                center[k] = set_center(k, &b);
                b[k] = center[k].round() as i64;
                step[k] = if center[k] >= b[k] as f64 { 1 } else { -1 };
            } else {
                if k == n - 1 {
                    break;
                }
                k += 1;
                advance(k, &mut b, &mut step);
            }
        }
        (best, best_d)
    }

}

/// Next zig-zag candidate at level `k`: alternate sides of the center with
/// growing offset, so distances are nondecreasing.
fn advance(k: usize, b: &mut [i64], step: &mut [i64]) {
    b[k] += step[k];
    step[k] = -step[k] - step[k].signum();
}
