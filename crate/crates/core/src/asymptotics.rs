//! Convergence of the designed parameters towards the non-fading design as the
//! K-factor grows.

use serde::{Deserialize, Serialize};

use crate::channel::{check_alpha1, ChannelStats, PowerConfig};
use crate::design_fast::{fast_design_lhs, primary_target_ergodic, solve_alpha1_fast};
use crate::design_slow::{delta1_moments, primary_outage_capacity, solve_alpha1_slow, solve_alpha2_slow, Alpha2Domain, SlowOptions, SurrogateMethod};
use crate::error::{invalid, Error, Result};
use crate::linalg::{re, C64};
use crate::quadform::{qf_variance, RatioMethod};

/// Relaying ratio that gives the primary its interference-free rate
/// `log₂(1 + P_p/σ²_Zp)` on a unit-gain channel: the positive root in
/// `x = sqrt(α₁)` of `(σ²P_c + P_pP_c)x² + 2σ²sqrt(P_cP_p)x - P_pP_c = 0`.
pub fn nonfading_alpha1(pw: &PowerConfig) -> Result<f64> {
    pw.validate()?;
    let n = pw.noise_p;
    let a = n * pw.p_c + pw.p_p * pw.p_c;
    let b = 2.0 * n * (pw.p_c * pw.p_p).sqrt();
    let cc = -pw.p_p * pw.p_c;
    let x = -2.0 * cc / (b + (b * b - 4.0 * a * cc).sqrt());
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Infeasible(format!("non-fading root sqrt(alpha1) = {x} outside [0, 1]")));
    }
    Ok(x * x)
}

/// `(1 + sqrt(α₁P_c/P_p))·α₂^MMSE` with `α₂^MMSE = σ²_x̂c/(σ²_x̂c + σ²_Zs)`.
pub fn nonfading_alpha2(alpha1: f64, pw: &PowerConfig) -> Result<C64> {
    check_alpha1(alpha1)?;
    let sx = pw.own_power(alpha1);
    Ok(re((1.0 + pw.relay_gain(alpha1)) * sx / (sx + pw.noise_s)))
}

/// Slow-fading targets used along a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowTargets {
    /// Primary target rate; `None` uses the primary's own outage capacity at
    /// each K, which tends to `log₂(1 + P_p/σ²_Zp)`.
    pub r_p: Option<f64>,
    pub p_out: f64,
    pub r_cr: f64,
}

impl Default for SlowTargets {
    fn default() -> Self {
        SlowTargets { r_p: None, p_out: 0.01, r_cr: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub k_db: f64,
    pub fast_alpha1: f64,
    pub fast_alpha2: C64,
    pub slow_alpha1: f64,
    pub slow_alpha2: C64,
    /// `σ_ε1` of the fast design at the fast `α₁`.
    pub sigma_eps1: f64,
    /// `σ_Δ1 / μ_Δ1` of the slow design at the slow `α₁`.
    pub rel_sigma_delta1: f64,
    pub fast_alpha1_dev: f64,
    pub fast_alpha2_dev: f64,
    pub slow_alpha1_dev: f64,
    pub slow_alpha2_dev: f64,
}

impl AsymptoticRow {
    pub fn max_deviation(&self) -> f64 {
        self.fast_alpha1_dev.max(self.fast_alpha2_dev).max(self.slow_alpha1_dev).max(self.slow_alpha2_dev)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub alpha1_limit: f64,
    pub rows: Vec<AsymptoticRow>,
}

impl AsymptoticReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(AsymptoticRow::max_deviation).fold(0.0, f64::max)
    }

    /// Whether each deviation series is nonincreasing over rows with
    /// `K ≥ from_db`.
    pub fn monotone_from(&self, from_db: f64) -> bool {
        let tail: Vec<&AsymptoticRow> = self.rows.iter().filter(|r| r.k_db >= from_db).collect();
        let series: [fn(&AsymptoticRow) -> f64; 4] =
            [|r| r.fast_alpha1_dev, |r| r.fast_alpha2_dev, |r| r.slow_alpha1_dev, |r| r.slow_alpha2_dev];
        series.iter().all(|f| tail.windows(2).all(|w| f(w[1]) <= f(w[0]) + 1e-12))
    }
}

/// Designs both modes at every K in `k_grid` (ascending) and records the
/// distance to the non-fading closed forms.
pub fn convergence_sweep(pw: &PowerConfig, targets: &SlowTargets, k_grid: &[f64]) -> Result<AsymptoticReport> {
    if k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("k_grid", "must be strictly ascending"));
    }
    let alpha1_limit = nonfading_alpha1(pw)?;
    let mut rows = Vec::with_capacity(k_grid.len());
    for &k_db in k_grid {
        let stats = ChannelStats::rician(k_db);
        let target = primary_target_ergodic(&stats, pw)?;
        let fast = solve_alpha1_fast(&stats, pw, target)?;
        let r_p = match targets.r_p {
            Some(r) => r,
            None => primary_outage_capacity(&stats, pw, targets.p_out)?,
        };
        let slow = solve_alpha1_slow(&stats, pw, r_p, targets.p_out, &SlowOptions::default())?;
        let (slow_a2, _) =
            solve_alpha2_slow(&stats, slow.alpha1, pw, targets.r_cr, SurrogateMethod::Gamma, Alpha2Domain::Complex)?;
        let m = crate::channel::build_matrices(&fast.params, pw, None)?;
        let sigma_eps1 = qf_variance(&stats.primary_vector(), &m.s)?.sqrt();
        let rm = delta1_moments(&stats, pw, slow.alpha1, RatioMethod::Delta)?;
        let fa1 = fast.params.alpha1;
        rows.push(AsymptoticRow {
            k_db,
            fast_alpha1: fa1,
            fast_alpha2: fast.params.alpha2,
            slow_alpha1: slow.alpha1,
            slow_alpha2: slow_a2,
            sigma_eps1,
            rel_sigma_delta1: rm.std / rm.mean,
            fast_alpha1_dev: (fa1 - alpha1_limit).abs(),
            fast_alpha2_dev: (fast.params.alpha2 - nonfading_alpha2(fa1, pw)?).norm(),
            slow_alpha1_dev: (slow.alpha1 - alpha1_limit).abs(),
            slow_alpha2_dev: (slow_a2 - nonfading_alpha2(slow.alpha1, pw)?).norm(),
        });
    }
    Ok(AsymptoticReport { alpha1_limit, rows })
}

/// Residual of the non-fading design equation
/// `(P_p + α₁P_c + 2sqrt(α₁P_cP_p)) / ((1-α₁)P_c + σ²) - P_p/σ²`.
pub fn nonfading_residual(alpha1: f64, pw: &PowerConfig) -> f64 {
    let num = pw.p_p + alpha1 * pw.p_c + 2.0 * (alpha1 * pw.p_c * pw.p_p).sqrt();
    num / (pw.own_power(alpha1) + pw.noise_p) - pw.p_p / pw.noise_p
}

/// Fast-design equation residual at the non-fading root on a unit-gain
/// channel; zero up to rounding.
pub fn deterministic_fast_residual(pw: &PowerConfig) -> Result<f64> {
    let a1 = nonfading_alpha1(pw)?;
    Ok(fast_design_lhs(&ChannelStats::deterministic(), pw, a1)? - (1.0 + pw.p_p / pw.noise_p).log2())
}
