//! Fast-fading design: the relaying ratio from a second-order expansion of the
//! primary ergodic rate, and a closed-form precoding coefficient.

use serde::{Deserialize, Serialize};

use crate::channel::{build_matrices, check_alpha1, ChannelStats, DesignParams, LinkStats, PowerConfig};
use crate::error::{Error, Result};
use crate::linalg::{re, C64};
use crate::quadform::{qf_mean, qf_variance};
use crate::solve::{first_crossing, Crossing};
use crate::special::integrate;

pub const RESIDUAL_TOL: f64 = 1e-9;
const SCAN_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastDesignResult {
    pub params: DesignParams,
    /// Primary ergodic rate the relaying ratio was designed for.
    pub r_target: f64,
    /// Design equation left-hand side minus `r_target` at the returned `α₁`.
    pub residual: f64,
}

/// `E[log₂(1 + x·snr)]` for `x = |h|²`, `h` Rician with the given statistics.
pub fn ergodic_log_rate(link: &LinkStats, snr: f64) -> Result<f64> {
    let m2 = link.mean.norm_sqr();
    let var = link.variance;
    if var == 0.0 {
        return Ok((1.0 + m2 * snr).log2());
    }
    let (lo, hi) = link.power_support();
    let mean = m2 + var;
    let f = |x: f64| link.power_pdf(x) * (1.0 + x * snr).log2();
    // split at the mean so the peak sits on an interval boundary
    let a = integrate(f, lo, mean, 1e-10, 1e-14)?;
    let b = integrate(f, mean, hi, 1e-10, 1e-14)?;
    Ok(a + b)
}

/// Primary ergodic rate without cognitive relaying,
/// `E[log₂(1 + |h11|²P_p/σ²_Zp)]`.
pub fn primary_target_ergodic(stats: &ChannelStats, pw: &PowerConfig) -> Result<f64> {
    stats.validate()?;
    pw.validate()?;
    ergodic_log_rate(&stats.h11, pw.p_p / pw.noise_p)
}

/// Left-hand side of the relaying-ratio design equation: primary ergodic rate
/// approximated by expanding `log(σ² + HᴴSH)` to second order and
/// `log(σ² + HᴴQH)` to first order about their means.
pub fn fast_design_lhs(stats: &ChannelStats, pw: &PowerConfig, alpha1: f64) -> Result<f64> {
    let m = build_matrices(&DesignParams { alpha1, alpha2: re(0.0) }, pw, None)?;
    let g = stats.primary_vector();
    let mu1 = qf_mean(&g, &m.s)?;
    let mu2 = qf_mean(&g, &m.q)?;
    let var1 = qf_variance(&g, &m.s)?;
    let n = pw.noise_p;
    Ok(((n + mu1) / (n + mu2)).log2() - 0.5 * std::f64::consts::LOG2_E * var1 / ((n + mu1) * (n + mu1)))
}

/// Smallest `α₁` whose approximate primary ergodic rate reaches `r_target`.
pub fn solve_alpha1_fast(stats: &ChannelStats, pw: &PowerConfig, r_target: f64) -> Result<FastDesignResult> {
    stats.validate()?;
    pw.validate()?;
    let lhs = |a: f64| fast_design_lhs(stats, pw, a);
    let (alpha1, residual) = match first_crossing(lhs, r_target, SCAN_POINTS, RESIDUAL_TOL)? {
        Crossing::AtZero(r) => (0.0, r),
        Crossing::Root { x, residual } => (x, residual),
        Crossing::Never => {
            return Err(Error::Infeasible(format!(
                "primary target {r_target:.6} bpcu exceeds the full-relaying rate {:.6}",
                fast_design_lhs(stats, pw, 1.0)?
            )))
        }
    };
    Ok(FastDesignResult {
        params: DesignParams { alpha1, alpha2: alpha2_fast(stats, alpha1, pw)? },
        r_target,
        residual,
    })
}

/// Precoding coefficient zeroing the derivative of the expected numerator of
/// the CR rate ratio:
/// `σ²_x̂c (μ22*μ21 + sqrt(α₁P_c/P_p)·E|h22|²) / (σ²_x̂c·E|h22|² + σ²_Zs)`.
pub fn alpha2_fast(stats: &ChannelStats, alpha1: f64, pw: &PowerConfig) -> Result<C64> {
    check_alpha1(alpha1)?;
    if alpha1 == 1.0 {
        return Ok(re(0.0));
    }
    let sx = pw.own_power(alpha1);
    let p22 = stats.h22.power();
    let num = (stats.h22.mean.conj() * stats.h21.mean + pw.relay_gain(alpha1) * p22) * sx;
    Ok(num / (sx * p22 + pw.noise_s))
}
