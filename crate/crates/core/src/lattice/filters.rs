//! Real-valued filters of the lattice precoder over `T` complex symbols
//! (`2T` real dimensions, real and imaginary parts interleaved).
//!
//! The codec works on the normalized signal `x = X / sqrt(σ²_x̂c)` whose
//! per-dimension power is the coarse-cell second moment `1/2`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::channel::{check_alpha1, ChannelRealization, DesignParams, PowerConfig};
use crate::error::{invalid, Error, Result};
use crate::linalg::C64;

/// Second moment per real dimension of the normalized transmit signal.
pub const SIGNAL_SECOND_MOMENT: f64 = 0.5;
const RIDGE: f64 = 1e-12;

/// `[[re, -im], [im, re]]`: multiplication by `h` on interleaved pairs.
pub fn complex_block(h: C64) -> [[f64; 2]; 2] {
    [[h.re, -h.im], [h.im, h.re]]
}

/// `I_T ⊗ complex_block(h)`.
pub fn expand(h: C64, t: usize) -> DMatrix<f64> {
    let b = complex_block(h);
    let mut m = DMatrix::zeros(2 * t, 2 * t);
    for k in 0..t {
        for i in 0..2 {
            for j in 0..2 {
                m[(2 * k + i, 2 * k + j)] = b[i][j];
            }
        }
    }
    m
}

pub fn to_real(v: &[C64]) -> DVector<f64> {
    DVector::from_iterator(2 * v.len(), v.iter().flat_map(|z| [z.re, z.im]))
}

#[derive(Debug, Clone)]
pub struct FilterSet {
    /// Side-information filter applied to the known interference.
    pub fs: DMatrix<f64>,
    /// Receiver MMSE filter for the auxiliary `x + F_s S`.
    pub fr: DMatrix<f64>,
    /// Whitening filter, `LᵀL = Σ_E⁻¹`.
    pub l: DMatrix<f64>,
    /// Covariance of the effective error `F_r Y - (x + F_s S)`.
    pub sigma_e: DMatrix<f64>,
    /// Set when `Σ_E` needed a ridge to be inverted.
    pub regularized: bool,
    /// Normalized channel `sqrt(σ²_x̂c)·H22`.
    pub h_tilde: DMatrix<f64>,
    /// Interference channel `H_s`.
    pub hs: DMatrix<f64>,
    pub t: usize,
}

impl FilterSet {
    /// Rate per complex channel use, `(1/2T)·log₂(|½I| / |Σ_E|)`.
    pub fn achievable_rate(&self) -> f64 {
        let n = 2.0 * self.t as f64;
        (n * SIGNAL_SECOND_MOMENT.log2() - log2_det(&self.sigma_e)) / n
    }

    /// `T×T` complex covariance of the effective error at unit signal power
    /// per complex symbol, read off the `2×2` real blocks of `Σ_E`.
    pub fn complex_error_covariance(&self) -> DMatrix<Complex<f64>> {
        let scale = 0.5 / SIGNAL_SECOND_MOMENT;
        let m = &self.sigma_e;
        DMatrix::from_fn(self.t, self.t, |k, l| {
            let (r, c) = (2 * k, 2 * l);
            Complex::new(m[(r, c)] + m[(r + 1, c + 1)], m[(r + 1, c)] - m[(r, c + 1)]) * scale
        })
    }

    /// `(1/T)·log₂|Σ_E|⁻¹` with `Σ_E` the complex error covariance.
    pub fn inverse_log_det_per_symbol(&self) -> f64 {
        -self.complex_error_covariance().determinant().norm().log2() / self.t as f64
    }
}

fn log2_det(m: &DMatrix<f64>) -> f64 {
    match m.clone().cholesky() {
        Some(ch) => 2.0 * ch.l().diagonal().iter().map(|d| d.log2()).sum::<f64>(),
        None => m.determinant().abs().log2(),
    }
}

/// Filters for one slow-fading realization held over `T` symbols.
pub fn build_filters(r: &ChannelRealization, params: &DesignParams, pw: &PowerConfig, t: usize) -> Result<FilterSet> {
    check_alpha1(params.alpha1)?;
    let own = pw.own_power(params.alpha1);
    if own <= 0.0 {
        return Err(Error::Domain("alpha1 = 1 leaves no CR signal to encode".into()));
    }
    let hs = r.interference_gain(params.alpha1, pw);
    build_filters_from(r.h22, hs, params.alpha2, own, pw.p_p, pw.noise_s, t)
}

/// Filters from the raw link gains: CR gain `h22`, interference gain `h_s`,
/// precoding coefficient `α₂`, own power `σ²_x̂c`, interference power and
/// receiver noise.
pub fn build_filters_from(
    h22: C64,
    hs: C64,
    alpha2: C64,
    own_power: f64,
    p_p: f64,
    noise: f64,
    t: usize,
) -> Result<FilterSet> {
    if t == 0 {
        return Err(invalid("t", "block length must be positive"));
    }
    if !(own_power > 0.0) || !(noise > 0.0) || !(p_p >= 0.0) {
        return Err(invalid("power", "own power and noise must be positive"));
    }
    let n = 2 * t;
    let h_tilde = expand(h22, t) * own_power.sqrt();
    let hs_m = expand(hs, t);
    let fs = expand(alpha2 / own_power.sqrt(), t);
    let sx = SIGNAL_SECOND_MOMENT;
    let ss = 0.5 * p_p;
    let sz = 0.5 * noise;
    let eye = DMatrix::<f64>::identity(n, n);

    // F_r = Cov(x + F_s S, Y)·Cov(Y)⁻¹
    let cross = h_tilde.transpose() * sx + &fs * hs_m.transpose() * ss;
    let cov_y = &h_tilde * h_tilde.transpose() * sx + &hs_m * hs_m.transpose() * ss + &eye * sz;
    let cov_y_inv = cov_y
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Degenerate("received covariance is not positive definite".into()))?;
    let fr = cross * cov_y_inv;

    let a = &fr * &h_tilde - &eye;
    let b = &fr * &hs_m - &fs;
    let sigma_e = &a * a.transpose() * sx + &b * b.transpose() * ss + &fr * fr.transpose() * sz;
    let sigma_e = (&sigma_e + sigma_e.transpose()) * 0.5;

    let (inv, regularized) = match sigma_e.clone().cholesky() {
        Some(c) => (c.inverse(), false),
        None => {
            let ridged = &sigma_e + &eye * RIDGE;
            let c = ridged
                .cholesky()
                .ok_or_else(|| Error::Degenerate("error covariance is singular".into()))?;
            (c.inverse(), true)
        }
    };
    let inv = (&inv + inv.transpose()) * 0.5;
    let c = inv
        .cholesky()
        .ok_or_else(|| Error::Degenerate("inverse error covariance is not positive definite".into()))?;
    let l = c.l().transpose();
    Ok(FilterSet { fs, fr, l, sigma_e, regularized, h_tilde, hs: hs_m, t })
}
