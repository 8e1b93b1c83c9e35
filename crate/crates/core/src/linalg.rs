//! Minimal 2×2 complex matrix algebra.
//!
//! Every quadratic form in the design equations lives on a two-dimensional
//! complex vector, so a fixed-size type with closed-form eigen-decomposition
//! is all that is needed here.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

/// Complex 2-vector.
pub type Vec2 = [C64; 2];

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[C64::new(0.0, 0.0); 2]; 2]);

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2([[re(a), re(0.0)], [re(0.0), re(d)]])
    }

    /// Real symmetric matrix from its three distinct entries.
    pub fn real_symmetric(a: f64, b: f64, d: f64) -> Self {
        Mat2([[re(a), re(b)], [re(b), re(d)]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        (*self - self.adjoint()).max_abs() <= tol * scale
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// The Hermitian form `vᴴ A v`, real part only.
    pub fn quad(&self, v: &Vec2) -> f64 {
        let av = self.apply(v);
        (v[0].conj() * av[0] + v[1].conj() * av[1]).re
    }

    /// `uᴴ A v`.
    pub fn bilinear(&self, u: &Vec2, v: &Vec2) -> C64 {
        let av = self.apply(v);
        u[0].conj() * av[0] + u[1].conj() * av[1]
    }

    /// Eigenvalues (ascending) and orthonormal eigenvectors (as columns of the
    /// returned unitary) of a Hermitian matrix, from the characteristic
    /// quadratic.
    pub fn eigh(&self) -> ([f64; 2], Mat2) {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = self.0[0][1];
        let half_tr = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let l1 = half_tr - half_gap;
        let l2 = half_tr + half_gap;
        if b.norm() <= 1e-300 {
            return if a <= d {
                ([a, d], Mat2::identity())
            } else {
                ([d, a], Mat2::new(re(0.0), re(1.0), re(1.0), re(0.0)))
            };
        }
        // (A - λI)x = 0 has solution x = (b, λ - a).
        let col = |l: f64| {
            let v = [b, re(l - a)];
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / n, v[1] / n]
        };
        let u1 = col(l1);
        let u2 = col(l2);
        ([l1, l2], Mat2([[u1[0], u2[0]], [u1[1], u2[1]]]))
    }

    /// Principal square root of a Hermitian positive semi-definite matrix.
    pub fn sqrt_psd(&self) -> Mat2 {
        let ([l1, l2], u) = self.eigh();
        let s = Mat2::diag(l1.max(0.0).sqrt(), l2.max(0.0).sqrt());
        u * s * u.adjoint()
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det.norm() <= 1e-300 {
            return None;
        }
        let m = &self.0;
        Some(Mat2([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]))
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        let mut out = [[re(0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}
