//! Channel statistics, realization sampling and per-realization rates.
//!
//! Link naming follows the receiver/transmitter convention: `h11` primary →
//! primary receiver, `h12` CR → primary receiver, `h21` primary → CR
//! receiver, `h22` CR → CR receiver. All logarithms are base 2.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{re, Mat2, Vec2, C64};
use crate::quadform::GaussianVector;
use crate::special::bessel_i0_scaled;

const UNIT_POWER_TOL: f64 = 1e-9;

/// Rician statistics of a single link: `h = mean + sqrt(variance)·CN(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub mean: C64,
    pub variance: f64,
}

impl LinkStats {
    /// Unit-power Rician link with zero-phase line-of-sight component.
    pub fn rician(k_db: f64) -> Self {
        if k_db.is_infinite() && k_db > 0.0 {
            return Self::deterministic(re(1.0));
        }
        let k = db_to_linear(k_db);
        LinkStats {
            mean: re((k / (k + 1.0)).sqrt()),
            variance: 1.0 / (k + 1.0),
        }
    }

    pub fn deterministic(gain: C64) -> Self {
        LinkStats { mean: gain, variance: 0.0 }
    }

    /// Line-of-sight to scattered power ratio in dB (`+inf` when deterministic).
    pub fn k_factor_db(&self) -> f64 {
        if self.variance == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (self.mean.norm_sqr() / self.variance).log10()
        }
    }

    pub fn power(&self) -> f64 {
        self.mean.norm_sqr() + self.variance
    }

    /// Density of `|h|²` (noncentral chi-square with two degrees of freedom);
    /// undefined for a deterministic link.
    pub fn power_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let m = self.mean.norm();
        let var = self.variance;
        let sx = x.sqrt();
        (-(sx - m) * (sx - m) / var).exp() * bessel_i0_scaled(2.0 * m * sx / var) / var
    }

    /// Interval carrying all but a negligible part of the `|h|²` mass.
    pub fn power_support(&self) -> (f64, f64) {
        let m2 = self.mean.norm_sqr();
        let var = self.variance;
        let mean = m2 + var;
        let sd = (var * var + 2.0 * m2 * var).sqrt();
        ((mean - 40.0 * sd).max(0.0), mean + 40.0 * sd)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Statistics of the four links known to the transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub h11: LinkStats,
    pub h12: LinkStats,
    pub h21: LinkStats,
    pub h22: LinkStats,
}

impl ChannelStats {
    /// Validates unit average power and non-negative variance on every link.
    pub fn new(h11: LinkStats, h12: LinkStats, h21: LinkStats, h22: LinkStats) -> Result<Self> {
        let stats = ChannelStats { h11, h12, h21, h22 };
        stats.validate()?;
        Ok(stats)
    }

    /// Independent links sharing one K-factor, as in all default scenarios.
    pub fn rician(k_db: f64) -> Self {
        let l = LinkStats::rician(k_db);
        ChannelStats { h11: l, h12: l, h21: l, h22: l }
    }

    /// Unit-gain non-fading channel.
    pub fn deterministic() -> Self {
        let l = LinkStats::deterministic(re(1.0));
        ChannelStats { h11: l, h12: l, h21: l, h22: l }
    }

    pub fn links(&self) -> [(&'static str, &LinkStats); 4] {
        [("h11", &self.h11), ("h12", &self.h12), ("h21", &self.h21), ("h22", &self.h22)]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, l) in self.links() {
            if !(l.variance >= 0.0) || !l.variance.is_finite() || !l.mean.re.is_finite() || !l.mean.im.is_finite() {
                return Err(invalid("stats", format!("{name}: variance must be finite and >= 0")));
            }
            if (l.power() - 1.0).abs() > UNIT_POWER_TOL {
                return Err(invalid(
                    "stats",
                    format!("{name}: |mean|^2 + variance = {} (must be 1)", l.power()),
                ));
            }
        }
        Ok(())
    }

    /// K-factor used for K-dependent heuristics: that of the direct primary link.
    pub fn k_factor_db(&self) -> f64 {
        self.h11.k_factor_db()
    }

    /// Distribution of `(h11, h12)`.
    pub fn primary_vector(&self) -> GaussianVector {
        GaussianVector::new(
            [self.h11.mean, self.h12.mean],
            Mat2::diag(self.h11.variance, self.h12.variance),
        )
    }

    /// Distribution of `(h21, h22)`.
    pub fn cr_vector(&self) -> GaussianVector {
        GaussianVector::new(
            [self.h21.mean, self.h22.mean],
            Mat2::diag(self.h21.variance, self.h22.variance),
        )
    }

    pub fn mean_realization(&self) -> ChannelRealization {
        ChannelRealization {
            h11: self.h11.mean,
            h12: self.h12.mean,
            h21: self.h21.mean,
            h22: self.h22.mean,
        }
    }
}

/// Transmit powers and receiver noise variances, all linear scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub p_c: f64,
    pub p_p: f64,
    pub noise_p: f64,
    pub noise_s: f64,
}

impl PowerConfig {
    pub fn new(p_c: f64, p_p: f64, noise_p: f64, noise_s: f64) -> Result<Self> {
        let pw = PowerConfig { p_c, p_p, noise_p, noise_s };
        pw.validate()?;
        Ok(pw)
    }

    /// Unit noise at both receivers.
    pub fn unit_noise(p_c: f64, p_p: f64) -> Self {
        PowerConfig { p_c, p_p, noise_p: 1.0, noise_s: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p_c", self.p_c), ("p_p", self.p_p), ("noise_p", self.noise_p), ("noise_s", self.noise_s)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Power of the CR's own (precoded) signal, `(1 - α₁)·P_c`.
    pub fn own_power(&self, alpha1: f64) -> f64 {
        (1.0 - alpha1) * self.p_c
    }

    /// Amplitude ratio `sqrt(α₁·P_c / P_p)` applied to the relayed primary signal.
    pub fn relay_gain(&self, alpha1: f64) -> f64 {
        (alpha1 * self.p_c / self.p_p).sqrt()
    }
}

/// Relaying ratio and precoding coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub alpha1: f64,
    pub alpha2: C64,
}

impl DesignParams {
    pub fn new(alpha1: f64, alpha2: C64) -> Result<Self> {
        check_alpha1(alpha1)?;
        if !alpha2.re.is_finite() || !alpha2.im.is_finite() {
            return Err(invalid("alpha2", "must be finite"));
        }
        Ok(DesignParams { alpha1, alpha2 })
    }
}

pub(crate) fn check_alpha1(alpha1: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha1) {
        return Err(invalid("alpha1", format!("must lie in [0, 1], got {alpha1}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub h11: C64,
    pub h12: C64,
    pub h21: C64,
    pub h22: C64,
}

impl ChannelRealization {
    pub fn from_real(h11: f64, h12: f64, h21: f64, h22: f64) -> Self {
        ChannelRealization { h11: re(h11), h12: re(h12), h21: re(h21), h22: re(h22) }
    }

    /// Effective interference gain at the CR receiver, `h21 + sqrt(α₁P_c/P_p)·h22`.
    pub fn interference_gain(&self, alpha1: f64, pw: &PowerConfig) -> C64 {
        self.h21 + self.h22 * pw.relay_gain(alpha1)
    }

    pub fn primary_vector(&self) -> Vec2 {
        [self.h11, self.h12]
    }

    pub fn cr_vector(&self) -> Vec2 {
        [self.h21, self.h22]
    }
}

/// ChaCha words consumed per realization: eight `u64` uniforms.
const WORDS_PER_REALIZATION: u128 = 16;

/// Counter-based realization source: realization `i` depends only on
/// `(seed, i)`, so index ranges may be generated independently.
#[derive(Debug, Clone)]
pub struct RealizationSampler {
    stats: ChannelStats,
    seed: u64,
}

impl RealizationSampler {
    pub fn new(stats: ChannelStats, seed: u64) -> Result<Self> {
        stats.validate()?;
        Ok(RealizationSampler { stats, seed })
    }

    pub fn stats(&self) -> &ChannelStats {
        &self.stats
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Realization at a single index.
    pub fn at(&self, index: u64) -> ChannelRealization {
        let mut out = [self.stats.mean_realization()];
        self.fill(index, &mut out);
        out[0]
    }

    /// Fills `out` with realizations `start, start + 1, …`.
    pub fn fill(&self, start: u64, out: &mut [ChannelRealization]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(start as u128 * WORDS_PER_REALIZATION);
        let s = &self.stats;
        let sd = [s.h11.variance.sqrt(), s.h12.variance.sqrt(), s.h21.variance.sqrt(), s.h22.variance.sqrt()];
        for r in out.iter_mut() {
            let g = std_complex_normals(&mut rng);
            // CN(0,1) has unit total variance: each component N(0, 1/2).
            *r = ChannelRealization {
                h11: s.h11.mean + g[0] * sd[0],
                h12: s.h12.mean + g[1] * sd[1],
                h21: s.h21.mean + g[2] * sd[2],
                h22: s.h22.mean + g[3] * sd[3],
            };
        }
    }

    pub fn range(&self, start: u64, n: usize) -> Vec<ChannelRealization> {
        let mut v = vec![self.stats.mean_realization(); n];
        self.fill(start, &mut v);
        v
    }
}

fn uniform_open(rng: &mut impl RngCore) -> f64 {
    // (0, 1]: never zero, so the logarithm below is finite.
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Four independent CN(0, 1) draws via Box–Muller; consumes exactly 8 `u64`.
pub(crate) fn std_complex_normals(rng: &mut impl RngCore) -> [C64; 4] {
    let mut out = [re(0.0); 4];
    for z in out.iter_mut() {
        let u1 = uniform_open(rng);
        let u2 = uniform_open(rng);
        // |z|^2 ~ Exp(1) for a unit-variance circular complex Gaussian.
        let r = (-u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        *z = C64::new(r * th.cos(), r * th.sin());
    }
    out
}

/// Draws `n` realizations reproducibly from `seed`.
pub fn sample_realizations(stats: &ChannelStats, n: usize, seed: u64) -> Result<Vec<ChannelRealization>> {
    if n == 0 {
        return Err(invalid("n", "at least one realization required"));
    }
    Ok(RealizationSampler::new(*stats, seed)?.range(0, n))
}

/// LA-GPC rate of the CR user for one realization, from the 2×2 covariance of
/// the auxiliary `U = X + α₂S` and the CR received signal.
///
/// The expression is the mutual-information difference itself and may be
/// negative when `α₂` is far from any sensible value.
pub fn cr_rate(r: &ChannelRealization, p: &DesignParams, pw: &PowerConfig) -> Result<f64> {
    check_alpha1(p.alpha1)?;
    let sx = pw.own_power(p.alpha1);
    if sx <= 0.0 {
        if p.alpha2 == re(0.0) {
            return Ok(0.0);
        }
        return Err(Error::Domain(
            "alpha1 = 1 leaves no CR signal; the (U, Y) covariance is singular for alpha2 != 0".into(),
        ));
    }
    Ok(cr_rate_unchecked(r, p.alpha1, p.alpha2, pw))
}

/// `cr_rate` without parameter validation, for tight simulation loops.
#[inline]
pub fn cr_rate_unchecked(r: &ChannelRealization, alpha1: f64, alpha2: C64, pw: &PowerConfig) -> f64 {
    let sx = pw.own_power(alpha1);
    let hs = r.interference_gain(alpha1, pw);
    let y_power = r.h22.norm_sqr() * sx + hs.norm_sqr() * pw.p_p + pw.noise_s;
    let u_power = sx + alpha2.norm_sqr() * pw.p_p;
    let cross = r.h22 * sx + alpha2.conj() * hs * pw.p_p;
    let det = u_power * y_power - cross.norm_sqr();
    (y_power * sx / det).log2()
}

/// Primary user's rate for one realization with the CR relaying a fraction
/// `α₁` of its power.
pub fn primary_rate(r: &ChannelRealization, alpha1: f64, pw: &PowerConfig) -> Result<f64> {
    check_alpha1(alpha1)?;
    Ok(primary_rate_unchecked(r, alpha1, pw))
}

#[inline]
pub fn primary_rate_unchecked(r: &ChannelRealization, alpha1: f64, pw: &PowerConfig) -> f64 {
    let cr_interference = pw.own_power(alpha1) * r.h12.norm_sqr() + pw.noise_p;
    let coherent = (r.h11 * pw.p_p.sqrt() + r.h12 * (alpha1 * pw.p_c).sqrt()).norm_sqr();
    ((cr_interference + coherent) / cr_interference).log2()
}

/// The 2×2 matrices and scalars of the quadratic-form rate expressions.
///
/// Primary form acts on `(h11, h12)`, CR form on `(h21, h22)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadMatrices {
    pub p: Mat2,
    pub q: Mat2,
    /// `P + Q`.
    pub s: Mat2,
    pub d: Mat2,
    /// `(1 - c₀·d)(P + Q) + d·D`, present when a CR target rate was given.
    pub e: Option<Mat2>,
    pub c0: f64,
    /// Constant of the CR denominator, `c₀·σ²_Zs` (equal to `c₀` at unit noise).
    pub c: f64,
    /// `2^{R_CR} / σ²_x̂c`, present when a CR target rate was given.
    pub d_scale: Option<f64>,
    /// Power of the CR's own signal.
    pub own_power: f64,
}

impl QuadMatrices {
    /// Outage threshold `c·d - 1` for the CR form `Hᴴ E H`.
    pub fn outage_threshold(&self) -> Option<f64> {
        self.d_scale.map(|d| self.c * d - 1.0)
    }

    /// `c₀(P + Q) - D`, the CR denominator matrix.
    pub fn cr_denominator(&self) -> Mat2 {
        self.s.scale(self.c0) - self.d
    }
}

pub fn build_matrices(p: &DesignParams, pw: &PowerConfig, r_cr_target: Option<f64>) -> Result<QuadMatrices> {
    check_alpha1(p.alpha1)?;
    let a1 = p.alpha1;
    let sx = pw.own_power(a1);
    let cross = (a1 * pw.p_c * pw.p_p).sqrt();
    let pm = Mat2::real_symmetric(pw.p_p, cross, a1 * pw.p_c);
    let qm = Mat2::diag(0.0, sx);
    let s = pm + qm;
    let al = p.alpha2;
    let g = re(sx) + al.conj() * cross;
    let d = Mat2::new(
        re(al.norm_sqr() * pw.p_p * pw.p_p),
        al * g * pw.p_p,
        al.conj() * g.conj() * pw.p_p,
        re(g.norm_sqr()),
    );
    let c0 = sx + al.norm_sqr() * pw.p_p;
    let c = c0 * pw.noise_s;
    let (e, d_scale) = match r_cr_target {
        Some(rate) => {
            if sx <= 0.0 {
                return Err(Error::Domain("CR target rate needs alpha1 < 1".into()));
            }
            let ds = rate.exp2() / sx;
            (Some(s.scale(1.0 - c0 * ds) + d.scale(ds)), Some(ds))
        }
        None => (None, None),
    };
    Ok(QuadMatrices { p: pm, q: qm, s, d, e, c0, c, d_scale, own_power: sx })
}

/// Primary rate through the quadratic-form ratio `Hᴴ P H / (Hᴴ Q H + σ²)`.
pub fn primary_rate_matrix(r: &ChannelRealization, m: &QuadMatrices, pw: &PowerConfig) -> f64 {
    let h = r.primary_vector();
    (1.0 + m.p.quad(&h) / (m.q.quad(&h) + pw.noise_p)).log2()
}

/// CR rate through the quadratic forms in `(h21, h22)`.
pub fn cr_rate_matrix(r: &ChannelRealization, m: &QuadMatrices, pw: &PowerConfig) -> f64 {
    let h = r.cr_vector();
    let num = m.s.quad(&h) + pw.noise_s;
    let den = m.cr_denominator().quad(&h) + m.c;
    (num / den).log2() + m.own_power.log2()
}

/// Full-CSIT precoding coefficient `α_c·h_s/h22` that cancels the known
/// interference completely.
pub fn full_csit_alpha2(r: &ChannelRealization, alpha1: f64, pw: &PowerConfig) -> C64 {
    let sx = pw.own_power(alpha1);
    let gx = r.h22.norm_sqr() * sx;
    if r.h22.norm_sqr() == 0.0 {
        return re(0.0);
    }
    let alpha_c = gx / (gx + pw.noise_s);
    r.interference_gain(alpha1, pw) / r.h22 * alpha_c
}

/// Naive DPC coefficient: the full-CSIT choice evaluated at the mean channel.
pub fn naive_dpc_alpha2(stats: &ChannelStats, alpha1: f64, pw: &PowerConfig) -> C64 {
    full_csit_alpha2(&stats.mean_realization(), alpha1, pw)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineRates {
    /// Interference treated as Gaussian noise.
    pub noise_rate: f64,
    /// Interference-free rate reached with full CSIT.
    pub full_csit_rate: f64,
    /// LA-GPC with the mean-channel DPC coefficient.
    pub naive_dpc_rate: f64,
}

pub fn interference_as_noise_rate(r: &ChannelRealization, alpha1: f64, pw: &PowerConfig) -> f64 {
    let sx = pw.own_power(alpha1);
    let hs = r.interference_gain(alpha1, pw);
    (1.0 + r.h22.norm_sqr() * sx / (hs.norm_sqr() * pw.p_p + pw.noise_s)).log2()
}

pub fn full_csit_rate(r: &ChannelRealization, alpha1: f64, pw: &PowerConfig) -> f64 {
    (1.0 + r.h22.norm_sqr() * pw.own_power(alpha1) / pw.noise_s).log2()
}

pub fn baseline_rates(r: &ChannelRealization, alpha1: f64, stats: &ChannelStats, pw: &PowerConfig) -> Result<BaselineRates> {
    check_alpha1(alpha1)?;
    let naive = DesignParams { alpha1, alpha2: naive_dpc_alpha2(stats, alpha1, pw) };
    Ok(BaselineRates {
        noise_rate: interference_as_noise_rate(r, alpha1, pw),
        full_csit_rate: full_csit_rate(r, alpha1, pw),
        naive_dpc_rate: cr_rate(r, &naive, pw)?,
    })
}
