//! Moments of quadratic forms `Hᴴ A H` in a complex Gaussian 2-vector
//! `H ~ CN(μ, Σ)`, ratio moments, the scaled chi-square approximation and the
//! outage surrogates built on it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::special::reg_lower_gamma;

const HERMITIAN_TOL: f64 = 1e-9;

/// Circular complex Gaussian 2-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianVector {
    pub mean: Vec2,
    pub cov: Mat2,
}

impl GaussianVector {
    pub fn new(mean: Vec2, cov: Mat2) -> Self {
        GaussianVector { mean, cov }
    }

    pub fn validate(&self) -> Result<()> {
        check_hermitian("cov", &self.cov)?;
        let ([l1, _], _) = self.cov.eigh();
        if l1 < -HERMITIAN_TOL * self.cov.max_abs().max(1.0) {
            return Err(invalid("cov", format!("not positive semi-definite (min eigenvalue {l1})")));
        }
        Ok(())
    }
}

fn check_hermitian(name: &'static str, a: &Mat2) -> Result<()> {
    if !a.is_hermitian(HERMITIAN_TOL * a.max_abs().max(1.0)) {
        return Err(invalid(name, "matrix must be Hermitian"));
    }
    Ok(())
}

/// `E[Hᴴ A H] = μᴴAμ + tr(ΣA)`.
pub fn qf_mean(g: &GaussianVector, a: &Mat2) -> Result<f64> {
    check_hermitian("A", a)?;
    Ok(mean_unchecked(g, a))
}

fn mean_unchecked(g: &GaussianVector, a: &Mat2) -> f64 {
    a.quad(&g.mean) + (g.cov * *a).trace().re
}

/// `Var[Hᴴ A H] = tr(ΣAΣA) + 2μᴴAΣAμ`.
pub fn qf_variance(g: &GaussianVector, a: &Mat2) -> Result<f64> {
    check_hermitian("A", a)?;
    Ok(qf_covariance_unchecked(g, a, a))
}

/// `Cov[HᴴAH, HᴴBH] = tr(ΣAΣB) + 2 Re μᴴAΣBμ`.
pub fn qf_covariance(g: &GaussianVector, a: &Mat2, b: &Mat2) -> Result<f64> {
    check_hermitian("A", a)?;
    check_hermitian("B", b)?;
    Ok(qf_covariance_unchecked(g, a, b))
}

fn qf_covariance_unchecked(g: &GaussianVector, a: &Mat2, b: &Mat2) -> f64 {
    let sa = g.cov * *a;
    let sb = g.cov * *b;
    (sa * sb).trace().re + 2.0 * (*a * g.cov * *b).bilinear(&g.mean, &g.mean).re
}

/// Mean and standard deviation of `Δ₁ = (HᴴQH + σ²) / HᴴPH`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioMoments {
    pub mean: f64,
    pub std: f64,
}

/// How the ratio moments are assembled from the quadratic-form moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioMethod {
    /// Second-order expansion of `N/D` about the means of numerator and
    /// denominator.
    #[default]
    Delta,
    /// The `a/μ` prefactored form with `s, t, m` built from `4μᴴ·Σ·μ` and
    /// `2 tr(·)²` terms, kept for comparison.
    Literal,
}

/// Ratio moments with unit numerator noise.
pub fn ratio_moments(g: &GaussianVector, p: &Mat2, q: &Mat2) -> Result<RatioMoments> {
    ratio_moments_with(g, p, q, 1.0, RatioMethod::Delta)
}

pub fn ratio_moments_with(
    g: &GaussianVector,
    p: &Mat2,
    q: &Mat2,
    noise: f64,
    method: RatioMethod,
) -> Result<RatioMoments> {
    check_hermitian("P", p)?;
    check_hermitian("Q", q)?;
    let a = mean_unchecked(g, p);
    if !(a > 1e-12 * p.max_abs().max(1e-300)) || a <= 0.0 {
        return Err(Error::Degenerate(format!("denominator mean {a} is not positive")));
    }
    let mu_n = mean_unchecked(g, q) + noise;
    match method {
        RatioMethod::Delta => {
            let var_d = qf_covariance_unchecked(g, p, p);
            let var_n = qf_covariance_unchecked(g, q, q);
            let cov = qf_covariance_unchecked(g, q, p);
            let r = mu_n / a;
            let mean = r * (1.0 - cov / (mu_n * a) + var_d / (a * a));
            let rel = var_n / (mu_n * mu_n) + var_d / (a * a) - 2.0 * cov / (mu_n * a);
            Ok(RatioMoments { mean, std: r * rel.max(0.0).sqrt() })
        }
        RatioMethod::Literal => {
            let sp = (g.cov * *p).trace().re;
            let sq = (g.cov * *q).trace().re;
            let s = 4.0 * (*p * g.cov * *p).quad(&g.mean) + 2.0 * sp * sp;
            let t = 4.0 * (*q * g.cov * *q).quad(&g.mean) + 2.0 * sq * sq;
            let m = 4.0 * (*q * g.cov * *p).bilinear(&g.mean, &g.mean).re
                + 2.0 * (*q * g.cov * *p * g.cov).trace().re;
            let mean = a / mu_n * (1.0 - m / (a * mu_n) + s / (mu_n * mu_n));
            let var = a * a / (mu_n * mu_n) * (t / (a * a) + s / (mu_n * mu_n) - 2.0 * m / (a * mu_n));
            Ok(RatioMoments { mean, std: var.max(0.0).sqrt() })
        }
    }
}

/// Scaled central chi-square `v·χ²(w)` matching the first two moments of a
/// quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2Approx {
    pub v: f64,
    pub w: f64,
}

impl Chi2Approx {
    pub fn mean(&self) -> f64 {
        self.v * self.w
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.v * self.v * self.w
    }
}

/// Moment-matched chi-square for `Hᴴ E H`.
///
/// `E` may be indefinite; the approximation is only meaningful (and only
/// returned) when the form has positive mean and variance.
pub fn chi2_params(g: &GaussianVector, e: &Mat2) -> Result<Chi2Approx> {
    check_hermitian("E", e)?;
    let mean = mean_unchecked(g, e);
    let var = qf_covariance_unchecked(g, e, e);
    chi2_from_moments(mean, var)
}

fn chi2_from_moments(mean: f64, var: f64) -> Result<Chi2Approx> {
    if !(var > 0.0) {
        return Err(Error::Domain("quadratic form has zero variance".into()));
    }
    if !(mean > 0.0) {
        return Err(Error::Domain(format!("quadratic form mean {mean} is not positive")));
    }
    Ok(Chi2Approx { v: 0.5 * var / mean, w: 2.0 * mean * mean / var })
}

/// Same approximation through the eigen-decomposition of `Σ^{1/2} E Σ^{1/2}`,
/// writing the form as a weighted sum of two noncentral chi-squares.
/// Requires an invertible covariance.
pub fn chi2_params_eigen(g: &GaussianVector, e: &Mat2) -> Result<Chi2Approx> {
    check_hermitian("E", e)?;
    let half = g.cov.sqrt_psd();
    let inv_half = half
        .inverse()
        .ok_or_else(|| Error::Degenerate("covariance is singular".into()))?;
    let e2 = half * *e * half;
    let (lam, v) = e2.eigh();
    let mu3 = v.adjoint().apply(&inv_half.apply(&g.mean));
    let mut mean = 0.0;
    let mut var = 0.0;
    for k in 0..2 {
        let nc = mu3[k].norm_sqr();
        mean += lam[k] * (1.0 + nc);
        var += lam[k] * lam[k] * (1.0 + 2.0 * nc);
    }
    chi2_from_moments(mean, var)
}

/// `P(v·χ²(w) < threshold)`, the regularized lower incomplete gamma
/// `P(w/2, threshold/(2v))`.
pub fn outage_gamma(c2: &Chi2Approx, threshold: f64) -> Result<f64> {
    if threshold <= 0.0 {
        return Ok(0.0);
    }
    reg_lower_gamma(0.5 * c2.w, threshold / (2.0 * c2.v))
}

/// Lower bound `(1 - exp(-s·x))^{w/2}` on the regularized incomplete gamma,
/// with `x = threshold/(2v)`. Exact at `w = 2`.
pub fn outage_alzer(c2: &Chi2Approx, threshold: f64) -> Result<f64> {
    if threshold <= 0.0 {
        return Ok(0.0);
    }
    if !(c2.w > 0.0) || !(c2.v > 0.0) {
        return Err(invalid("chi2", "v and w must be positive"));
    }
    let a = 0.5 * c2.w;
    let x = threshold / (2.0 * c2.v);
    let s = alzer_s(a);
    Ok((-(-s * x).exp_m1()).powf(a))
}

/// Rate constant of the bound for shape `a = w/2`.
pub fn alzer_s(a: f64) -> f64 {
    if a <= 1.0 {
        1.0
    } else {
        (-statrs::function::gamma::ln_gamma(1.0 + a) / a).exp()
    }
}

/// One-sided deviation threshold `μ + sqrt(r/P_out - 1)·σ`.
pub fn cantelli_threshold(rm: &RatioMoments, r: f64, p_out: f64) -> Result<f64> {
    Ok(rm.mean + cantelli_multiplier(r, p_out)? * rm.std)
}

pub fn cantelli_multiplier(r: f64, p_out: f64) -> Result<f64> {
    if !(p_out > 0.0 && p_out < 1.0) {
        return Err(invalid("p_out", format!("must lie in (0, 1), got {p_out}")));
    }
    let ratio = r / p_out;
    if !(ratio > 1.0) {
        return Err(invalid("r", format!("r / p_out must exceed 1, got {ratio}")));
    }
    Ok((ratio - 1.0).sqrt())
}
