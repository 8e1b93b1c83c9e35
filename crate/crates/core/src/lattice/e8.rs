//! The Gosset lattice `E8 = D8 ∪ (D8 + ½·1)` in its even coordinate system.

use nalgebra::{SMatrix, SVector};

pub type Vec8 = SVector<f64, 8>;
pub type Mat8 = SMatrix<f64, 8, 8>;

/// Generator with basis vectors as columns, unit determinant, minimum squared
/// norm 2.
pub fn e8_generator() -> Mat8 {
    let mut rows = [[0.0f64; 8]; 8];
    rows[0][0] = 2.0;
    for (i, row) in rows.iter_mut().enumerate().take(7).skip(1) {
        row[i - 1] = -1.0;
        row[i] = 1.0;
    }
    rows[7] = [0.5; 8];
    Mat8::from_fn(|i, j| rows[j][i])
}

/// Nearest point of `D8` (integer vectors with even sum) and its squared
/// distance. An odd rounding is repaired by re-rounding the coordinate with
/// the largest rounding error the other way.
fn closest_d8(x: &Vec8) -> (Vec8, f64) {
    let mut f = x.map(round_half_down);
    let sum: f64 = f.iter().sum();
    if sum.rem_euclid(2.0) != 0.0 {
        let mut k = 0;
        let mut worst = -1.0;
        for i in 0..8 {
            let err = (x[i] - f[i]).abs();
            if err > worst {
                worst = err;
                k = i;
            }
        }
        f[k] += if x[k] >= f[k] { 1.0 } else { -1.0 };
    }
    let d = (x - f).norm_squared();
    (f, d)
}

/// Rounds to nearest integer, halves towards -∞, so ties resolve to the
/// lexicographically smaller neighbour.
fn round_half_down(v: f64) -> f64 {
    (v - 0.5).ceil()
}

fn lex_less(a: &Vec8, b: &Vec8) -> bool {
    for i in 0..8 {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    false
}

/// Exact nearest point of the unscaled `E8`.
pub fn e8_closest_point(x: &Vec8) -> Vec8 {
    let (a, da) = closest_d8(x);
    let half = Vec8::repeat(0.5);
    let (b0, db) = closest_d8(&(x - half));
    let b = b0 + half;
    if da < db || (da == db && lex_less(&a, &b)) {
        a
    } else {
        b
    }
}

/// Whether `x` is (within `tol`) a point of `E8`.
pub fn is_e8_point(x: &Vec8, tol: f64) -> bool {
    (e8_closest_point(x) - x).amax() <= tol
}
