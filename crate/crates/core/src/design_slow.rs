//! Slow-fading design: the relaying ratio from a one-sided deviation bound on
//! the primary outage, and the precoding coefficient minimizing a chi-square
//! surrogate of the CR outage.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_matrices, check_alpha1, ChannelStats, DesignParams, PowerConfig};
use crate::design_fast::alpha2_fast;
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, re, C64};
use crate::quadform::{
    cantelli_multiplier, chi2_params, outage_alzer, outage_gamma, qf_mean, qf_variance, ratio_moments_with,
    RatioMethod, RatioMoments,
};
use crate::solve::{first_crossing, Crossing};
use crate::special::integrate;

/// Sharpened constant valid for unimodal, symmetric deviations.
pub const R_UNIMODAL: f64 = 2.0 / 9.0;
pub const DEFAULT_K_THRESHOLD_DB: f64 = 10.0;
const SCAN_POINTS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-9;
const GRID_SIDE: usize = 41;
const STEP_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateMethod {
    /// Regularized incomplete gamma.
    #[default]
    Gamma,
    /// Closed-form lower bound on the incomplete gamma.
    Alzer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha2Domain {
    #[default]
    Complex,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowOptions {
    /// Forces the deviation-bound constant instead of the K-factor heuristic.
    pub r_override: Option<f64>,
    /// K-factor (dB) from which the unimodal constant is tried.
    pub k_threshold_db: f64,
    pub ratio_method: RatioMethod,
}

impl Default for SlowOptions {
    fn default() -> Self {
        SlowOptions { r_override: None, k_threshold_db: DEFAULT_K_THRESHOLD_DB, ratio_method: RatioMethod::Delta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowDesignResult {
    pub alpha1: f64,
    /// Unset until the precoding stage has run.
    pub alpha2: Option<C64>,
    pub r_used: f64,
    /// Deviation multiplier `sqrt(r/P_out - 1)`.
    pub delta: f64,
    /// Minimized outage surrogate, once `α₂` is designed.
    pub objective_value: Option<f64>,
    pub method: SurrogateMethod,
}

impl SlowDesignResult {
    pub fn params(&self) -> DesignParams {
        DesignParams { alpha1: self.alpha1, alpha2: self.alpha2.unwrap_or(re(0.0)) }
    }
}

/// Deviation-bound constant: `2/9` at or above the K-factor threshold when the
/// resulting multiplier satisfies `δ ≥ 2/√3`, else `1`.
pub fn select_r(k_db: f64, delta_candidate: f64, k_threshold_db: f64) -> f64 {
    if k_db >= k_threshold_db && delta_candidate >= 2.0 / 3f64.sqrt() {
        R_UNIMODAL
    } else {
        1.0
    }
}

fn resolve_r(stats: &ChannelStats, p_out: f64, opts: &SlowOptions) -> Result<(f64, f64)> {
    if let Some(r) = opts.r_override {
        let delta = cantelli_multiplier(r, p_out)?;
        if r == R_UNIMODAL && delta < 2.0 / 3f64.sqrt() {
            return Err(invalid("r", format!("r = 2/9 needs delta >= 2/sqrt(3), got {delta}")));
        }
        return Ok((r, delta));
    }
    let candidate = if R_UNIMODAL > p_out { cantelli_multiplier(R_UNIMODAL, p_out)? } else { 0.0 };
    let r = select_r(stats.k_factor_db(), candidate, opts.k_threshold_db);
    let delta = cantelli_multiplier(r, p_out)?;
    assert!(r != R_UNIMODAL || delta >= 2.0 / 3f64.sqrt());
    Ok((r, delta))
}

/// Moments of `Δ₁ = (HᴴQH + σ²_Zp) / HᴴPH` at a given relaying ratio; the
/// primary is in outage when `Δ₁ > 1/(2^{R_P} - 1)`.
pub fn delta1_moments(stats: &ChannelStats, pw: &PowerConfig, alpha1: f64, method: RatioMethod) -> Result<RatioMoments> {
    let m = build_matrices(&DesignParams { alpha1, alpha2: re(0.0) }, pw, None)?;
    ratio_moments_with(&stats.primary_vector(), &m.p, &m.q, pw.noise_p, method)
}

/// Smallest `α₁` with `μ_Δ1 + δ·σ_Δ1 ≤ 1/(2^{R_P} - 1)`.
pub fn solve_alpha1_slow(
    stats: &ChannelStats,
    pw: &PowerConfig,
    r_p: f64,
    p_out: f64,
    opts: &SlowOptions,
) -> Result<SlowDesignResult> {
    stats.validate()?;
    pw.validate()?;
    if !(r_p > 0.0) {
        return Err(invalid("r_p", "primary target rate must be positive"));
    }
    let (r_used, delta) = resolve_r(stats, p_out, opts)?;
    let rhs = 1.0 / (r_p.exp2() - 1.0);
    let lhs = |a: f64| -> Result<f64> {
        let rm = delta1_moments(stats, pw, a, opts.ratio_method)?;
        Ok(-(rm.mean + delta * rm.std))
    };
    let alpha1 = match first_crossing(lhs, -rhs, SCAN_POINTS, RESIDUAL_TOL * rhs.max(1.0))? {
        Crossing::AtZero(_) => 0.0,
        Crossing::Root { x, .. } => x,
        Crossing::Never => {
            return Err(Error::Infeasible(format!(
                "primary pair ({r_p}, {p_out}) cannot be protected even with full relaying"
            )))
        }
    };
    Ok(SlowDesignResult { alpha1, alpha2: None, r_used, delta, objective_value: None, method: SurrogateMethod::Gamma })
}

/// Chi-square outage surrogate of the CR rate at `(α₁, α₂)` for target `r_cr`.
///
/// The CR rate falls below `r_cr` exactly when `Hᴴ E H < c·d - 1`. A
/// non-positive threshold means the target is always met; a form with
/// non-positive mean is scored as certain outage.
pub fn cr_outage_surrogate(
    stats: &ChannelStats,
    params: &DesignParams,
    pw: &PowerConfig,
    r_cr: f64,
    method: SurrogateMethod,
) -> Result<f64> {
    let m = build_matrices(params, pw, Some(r_cr))?;
    let threshold = m.outage_threshold().expect("target given");
    if threshold <= 0.0 {
        return Ok(0.0);
    }
    let e = m.e.expect("target given");
    let g = stats.cr_vector();
    let var = qf_variance(&g, &e)?;
    if var == 0.0 {
        return Ok(if qf_mean(&g, &e)? < threshold { 1.0 } else { 0.0 });
    }
    match chi2_params(&g, &e) {
        Ok(c2) => match method {
            SurrogateMethod::Gamma => outage_gamma(&c2, threshold),
            SurrogateMethod::Alzer => outage_alzer(&c2, threshold),
        },
        Err(Error::Domain(_)) => Ok(1.0),
        Err(e) => Err(e),
    }
}

/// Minimizes the CR outage surrogate over `α₂`: a 41×41 grid over the disc of
/// radius `2|α₂_fast|` about `α₂_fast`, then coordinate descent with halving
/// steps. Ties go to the point closest to `α₂_fast`.
pub fn solve_alpha2_slow(
    stats: &ChannelStats,
    alpha1: f64,
    pw: &PowerConfig,
    r_cr: f64,
    method: SurrogateMethod,
    domain: Alpha2Domain,
) -> Result<(C64, f64)> {
    check_alpha1(alpha1)?;
    if alpha1 >= 1.0 {
        return Err(invalid("alpha1", "precoding needs alpha1 < 1"));
    }
    if !(r_cr > 0.0) {
        return Err(invalid("r_cr", "CR target rate must be positive"));
    }
    let center = alpha2_fast(stats, alpha1, pw)?;
    let center = match domain {
        Alpha2Domain::Complex => center,
        Alpha2Domain::Real => re(center.re),
    };
    let radius = if center.norm() > 0.0 { 2.0 * center.norm() } else { 1.0 };
    let obj = |a2: C64| cr_outage_surrogate(stats, &DesignParams { alpha1, alpha2: a2 }, pw, r_cr, method);

    let half = (GRID_SIDE / 2) as i64;
    let step = radius / half as f64;
    let points: Vec<C64> = match domain {
        Alpha2Domain::Complex => (-half..=half)
            .flat_map(|i| (-half..=half).map(move |j| (i, j)))
            .filter(|&(i, j)| i * i + j * j <= half * half)
            .map(|(i, j)| center + c(i as f64 * step, j as f64 * step))
            .collect(),
        Alpha2Domain::Real => (-half..=half).map(|i| center + re(i as f64 * step)).collect(),
    };
    let values: Vec<f64> = points.par_iter().map(|&a| obj(a)).collect::<Result<_>>()?;
    let better = |v: f64, a: C64, best_v: f64, best_a: C64| {
        v < best_v || (v == best_v && (a - center).norm() < (best_a - center).norm())
    };
    let (mut best_a, mut best_v) = (points[0], values[0]);
    for (&a, &v) in points.iter().zip(&values) {
        if better(v, a, best_v, best_a) {
            best_a = a;
            best_v = v;
        }
    }
    if best_v == 0.0 {
        return Ok((best_a, 0.0));
    }

    let dirs: &[C64] = match domain {
        Alpha2Domain::Complex => &[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)],
        Alpha2Domain::Real => &[c(1.0, 0.0), c(-1.0, 0.0)],
    };
    let mut h = step;
    while h >= STEP_TOL {
        let mut moved = false;
        for d in dirs {
            let a = best_a + d * h;
            let v = obj(a)?;
            if v < best_v {
                best_a = a;
                best_v = v;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    Ok((best_a, best_v))
}

/// Outage capacity of the primary link alone: the rate `R` with
/// `P(log₂(1 + |h11|²P_p/σ²_Zp) < R) = p_out`.
pub fn primary_outage_capacity(stats: &ChannelStats, pw: &PowerConfig, p_out: f64) -> Result<f64> {
    stats.validate()?;
    pw.validate()?;
    if !(p_out > 0.0 && p_out < 1.0) {
        return Err(invalid("p_out", format!("must lie in (0, 1), got {p_out}")));
    }
    let link = &stats.h11;
    let snr = pw.p_p / pw.noise_p;
    if link.variance == 0.0 {
        return Ok((1.0 + link.mean.norm_sqr() * snr).log2());
    }
    let (lo, hi) = link.power_support();
    let cdf = |x: f64| integrate(|u| link.power_pdf(u), lo, x, 1e-12, 1e-15);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if cdf(mid)? < p_out {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-14 * b {
            break;
        }
    }
    Ok((1.0 + 0.5 * (a + b) * snr).log2())
}

/// Both stages of the slow-fading design.
#[allow(clippy::too_many_arguments)]
pub fn design_slow(
    stats: &ChannelStats,
    pw: &PowerConfig,
    r_p: f64,
    p_out: f64,
    r_cr: f64,
    method: SurrogateMethod,
    domain: Alpha2Domain,
    opts: &SlowOptions,
) -> Result<SlowDesignResult> {
    let mut res = solve_alpha1_slow(stats, pw, r_p, p_out, opts)?;
    let (a2, v) = solve_alpha2_slow(stats, res.alpha1, pw, r_cr, method, domain)?;
    res.alpha2 = Some(a2);
    res.objective_value = Some(v);
    res.method = method;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::nonfading_alpha1;

    fn pw10() -> PowerConfig {
        PowerConfig::unit_noise(10.0, 10.0)
    }

    #[test]
    fn rayleigh_outage_capacity() {
        // |h|² ~ Exp(1): quantile -ln(1 - p)
        let pw = PowerConfig::unit_noise(10.0, 100.0);
        let got = primary_outage_capacity(&ChannelStats::rician(f64::NEG_INFINITY), &pw, 0.1).unwrap();
        let expect = (1.0 - 100.0 * (0.9f64).ln()).log2();
        assert!((got - expect).abs() < 1e-8, "{got} vs {expect}");
    }

    #[test]
    fn r_selection_examples() {
        let d = cantelli_multiplier(R_UNIMODAL, 0.01).unwrap();
        assert_eq!(select_r(0.0, d, 10.0), 1.0);
        assert_eq!(select_r(10.0, 4.6, 10.0), R_UNIMODAL);
        assert_eq!(select_r(10.0, 0.5, 10.0), 1.0);
    }

    #[test]
    fn deterministic_channel_reduces_to_nonfading_root() {
        let pw = pw10();
        let r_p = (1.0 + pw.p_p).log2();
        let res = solve_alpha1_slow(&ChannelStats::deterministic(), &pw, r_p, 0.1, &SlowOptions::default()).unwrap();
        assert!((res.alpha1 - nonfading_alpha1(&pw).unwrap()).abs() < 1e-8, "{}", res.alpha1);
        let rm = delta1_moments(&ChannelStats::deterministic(), &pw, res.alpha1, RatioMethod::Delta).unwrap();
        assert!((rm.mean - 1.0 / pw.p_p).abs() < 1e-8 && rm.std == 0.0);
    }

    #[test]
    fn r_override_respects_guard() {
        let opts = SlowOptions { r_override: Some(R_UNIMODAL), ..Default::default() };
        assert!(solve_alpha1_slow(&ChannelStats::rician(0.0), &pw10(), 1.0, 0.15, &opts).is_err());
        let res = solve_alpha1_slow(&ChannelStats::rician(0.0), &pw10(), 1.0, 0.01, &opts).unwrap();
        assert_eq!(res.r_used, R_UNIMODAL);
    }

    #[test]
    fn infeasible_pair_reported() {
        let e = solve_alpha1_slow(&ChannelStats::rician(0.0), &pw10(), 6.0, 0.01, &SlowOptions::default());
        assert!(matches!(e, Err(Error::Infeasible(_))));
    }

    #[test]
    fn alzer_never_above_gamma() {
        let stats = ChannelStats::rician(10.0);
        for k in 0..25 {
            let a2 = C64::from_polar(0.2 + 0.05 * k as f64, 0.1 * k as f64);
            let p = DesignParams { alpha1: 0.3, alpha2: a2 };
            let g = cr_outage_surrogate(&stats, &p, &pw10(), 1.0, SurrogateMethod::Gamma).unwrap();
            let a = cr_outage_surrogate(&stats, &p, &pw10(), 1.0, SurrogateMethod::Alzer).unwrap();
            assert!(a <= g + 1e-15);
        }
    }

    #[test]
    fn trivially_met_target_keeps_center() {
        // quiet CR receiver: c·d - 1 <= 0 on a disc around the center
        let stats = ChannelStats::rician(10.0);
        let pw = PowerConfig::new(10.0, 10.0, 1.0, 0.01).unwrap();
        let (a2, v) = solve_alpha2_slow(&stats, 0.2, &pw, 0.1, SurrogateMethod::Gamma, Alpha2Domain::Complex).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(a2, alpha2_fast(&stats, 0.2, &pw).unwrap());
    }

    #[test]
    fn real_domain_stays_real() {
        let stats = ChannelStats::rician(5.0);
        let (a2, _) = solve_alpha2_slow(&stats, 0.3, &pw10(), 1.0, SurrogateMethod::Gamma, Alpha2Domain::Real).unwrap();
        assert_eq!(a2.im, 0.0);
    }
}
