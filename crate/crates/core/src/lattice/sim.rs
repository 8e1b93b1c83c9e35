//! Codeword error rate of the lattice precoder against SNR, with baselines and
//! the outage prediction of the unstructured rate.

use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codec::{encode, Decoder};
use super::filters::{build_filters_from, expand, to_real, SIGNAL_SECOND_MOMENT};
use super::nested::{build_nested, NestedPair};
use crate::channel::{std_complex_normals, ChannelRealization, ChannelStats, DesignParams, PowerConfig};
use crate::design_slow::{
    primary_outage_capacity, solve_alpha1_slow, solve_alpha2_slow, Alpha2Domain, SlowOptions, SurrogateMethod,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{re, C64};
use crate::montecarlo::{outage_rate, RateFn};

/// Symbols per lattice block.
pub const T: usize = 4;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeScenario {
    pub k_db: f64,
    pub q_nest: u32,
    pub snr_db: Vec<f64>,
    pub p_p: f64,
    pub noise: f64,
    /// Primary outage target protected by the relaying ratio.
    pub p_out_primary: f64,
    /// Primary target rate; the primary's own outage capacity when absent.
    pub r_p: Option<f64>,
    pub trials: u64,
    /// Realizations for the outage prediction.
    pub outage_samples: u64,
    pub seed: u64,
}

impl LatticeScenario {
    /// Default operating point for a K-factor: `P_p = 100`, unit noise,
    /// primary outage 0.1 below 10 dB and 0.01 from there on.
    pub fn new(k_db: f64, q_nest: u32) -> Self {
        LatticeScenario {
            k_db,
            q_nest,
            snr_db: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            p_p: 100.0,
            noise: 1.0,
            p_out_primary: if k_db >= 10.0 { 0.01 } else { 0.1 },
            r_p: None,
            trials: 20_000,
            outage_samples: 1_000_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeScheme {
    /// Lattice precoding with the statistical-CSIT design.
    PartialCsit,
    /// Same code and power with the interference switched off.
    NoInterference,
    /// Lattice code without precoding, interference treated as noise.
    InterferenceAsNoise,
    /// Probability that the unstructured rate falls below the code rate.
    TheoreticalOutage,
}

impl LatticeScheme {
    pub const ALL: [LatticeScheme; 4] = [
        LatticeScheme::PartialCsit,
        LatticeScheme::NoInterference,
        LatticeScheme::InterferenceAsNoise,
        LatticeScheme::TheoreticalOutage,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            LatticeScheme::PartialCsit => "la_gpc",
            LatticeScheme::NoInterference => "no_interference",
            LatticeScheme::InterferenceAsNoise => "interference_as_noise",
            LatticeScheme::TheoreticalOutage => "theoretical_outage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeRow {
    pub snr_db: f64,
    pub scheme: LatticeScheme,
    pub error_rate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub params: DesignParams,
    /// False when the primary target could not be protected at this SNR; the
    /// CR then sends nothing and every codeword is lost.
    pub feasible: bool,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(errors: u64, n: u64) -> (f64, f64) {
    let n_f = n as f64;
    let p = errors as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Random inputs of one trial; identical across SNRs and schemes.
struct Trial {
    r: ChannelRealization,
    message: u64,
    s: DVector<f64>,
    z: DVector<f64>,
    dither: super::e8::Vec8,
}

fn draw_trial(stats: &ChannelStats, pair: &NestedPair, sc: &LatticeScenario, index: u64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(index);
    let g = std_complex_normals(&mut rng);
    let sd = |l: &crate::channel::LinkStats| l.variance.sqrt();
    let r = ChannelRealization {
        h11: stats.h11.mean + g[0] * sd(&stats.h11),
        h12: stats.h12.mean + g[1] * sd(&stats.h12),
        h21: stats.h21.mean + g[2] * sd(&stats.h21),
        h22: stats.h22.mean + g[3] * sd(&stats.h22),
    };
    let message = rng.next_u64() % pair.codebook_size();
    let s = to_real(&std_complex_normals(&mut rng)) * sc.p_p.sqrt();
    let z = to_real(&std_complex_normals(&mut rng)) * sc.noise.sqrt();
    let dither = pair.sample_dither(&mut rng);
    Trial { r, message, s, z, dither }
}

/// Whether one codeword is decoded correctly.
fn run_trial(
    tr: &Trial,
    pair: &NestedPair,
    pw: &PowerConfig,
    alpha1: f64,
    alpha2: C64,
    interference: bool,
) -> Result<bool> {
    let own = pw.own_power(alpha1);
    let hs = tr.r.interference_gain(alpha1, pw);
    let p_s = if interference { pw.p_p } else { 0.0 };
    let f = build_filters_from(tr.r.h22, hs, alpha2, own, p_s, pw.noise_s, T)?;
    let x = encode(tr.message, &tr.s, &tr.dither, pair, &f, alpha1, pw.p_c)?;
    let x = DVector::from_column_slice(x.as_slice());
    let mut y = expand(tr.r.h22, T) * x + &tr.z;
    if interference {
        y += expand(hs, T) * &tr.s;
    }
    let dec = Decoder::new(&f, pair)?;
    Ok(dec.decode(&y, &tr.dither, pair) == tr.message)
}

fn error_row(snr_db: f64, scheme: LatticeScheme, errors: u64, n: u64, params: DesignParams, feasible: bool) -> LatticeRow {
    let p = errors as f64 / n as f64;
    let (lo, hi) = wilson_interval(errors, n);
    LatticeRow {
        snr_db,
        scheme,
        error_rate: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        ci_low: lo,
        ci_high: hi,
        trials: n,
        params,
        feasible,
    }
}

/// Design used at one SNR: relaying ratio protecting the primary outage
/// target, precoding minimizing the CR outage surrogate at the code rate.
pub fn design_for_snr(stats: &ChannelStats, pw: &PowerConfig, sc: &LatticeScenario, code_rate: f64) -> Result<Option<DesignParams>> {
    let r_p = match sc.r_p {
        Some(r) => r,
        None => primary_outage_capacity(stats, pw, sc.p_out_primary)?,
    };
    let a1 = match solve_alpha1_slow(stats, pw, r_p, sc.p_out_primary, &SlowOptions::default()) {
        Ok(d) => d.alpha1,
        Err(Error::Infeasible(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if a1 >= 1.0 {
        return Ok(None);
    }
    let (a2, _) = solve_alpha2_slow(stats, a1, pw, code_rate, SurrogateMethod::Gamma, Alpha2Domain::Complex)?;
    Ok(Some(DesignParams { alpha1: a1, alpha2: a2 }))
}

/// Error-rate table over the SNR sweep (SNR = `P_c/σ²`).
pub fn codeword_error_sim(sc: &LatticeScenario) -> Result<Vec<LatticeRow>> {
    let pair = build_nested(sc.q_nest, 0.5)?;
    codeword_error_sim_with(sc, &pair)
}

pub fn codeword_error_sim_with(sc: &LatticeScenario, pair: &NestedPair) -> Result<Vec<LatticeRow>> {
    if sc.trials == 0 || sc.snr_db.is_empty() {
        return Err(invalid("scenario", "need at least one trial and one SNR point"));
    }
    let stats = ChannelStats::rician(sc.k_db);
    let code_rate = pair.rate();
    let trials: Vec<Trial> = (0..sc.trials).map(|i| draw_trial(&stats, pair, sc, i)).collect();
    let mut rows = Vec::new();
    for &snr in &sc.snr_db {
        let pw = PowerConfig::new(10f64.powf(snr / 10.0) * sc.noise, sc.p_p, sc.noise, sc.noise)?;
        let Some(p) = design_for_snr(&stats, &pw, sc, code_rate)? else {
            let p = DesignParams { alpha1: 1.0, alpha2: re(0.0) };
            for scheme in LatticeScheme::ALL {
                rows.push(error_row(snr, scheme, sc.trials, sc.trials, p, false));
            }
            continue;
        };
        let count = |alpha2: C64, interference: bool| -> Result<u64> {
            let errs: Vec<u64> = trials
                .par_iter()
                .map(|tr| run_trial(tr, pair, &pw, p.alpha1, alpha2, interference).map(|ok| u64::from(!ok)))
                .collect::<Result<_>>()?;
            Ok(errs.iter().sum())
        };
        let n = sc.trials;
        rows.push(error_row(snr, LatticeScheme::PartialCsit, count(p.alpha2, true)?, n, p, true));
        let p0 = DesignParams { alpha1: p.alpha1, alpha2: re(0.0) };
        rows.push(error_row(snr, LatticeScheme::NoInterference, count(re(0.0), false)?, n, p0, true));
        rows.push(error_row(snr, LatticeScheme::InterferenceAsNoise, count(re(0.0), true)?, n, p0, true));
        let out = outage_rate(&stats, &pw, RateFn::Cr(p), code_rate, sc.outage_samples, sc.seed)?;
        let (lo, hi) = (
            (out.value - Z95 * out.std_error).max(0.0),
            (out.value + Z95 * out.std_error).min(1.0),
        );
        rows.push(LatticeRow {
            snr_db: snr,
            scheme: LatticeScheme::TheoreticalOutage,
            error_rate: out.value,
            std_error: out.std_error,
            ci_low: lo,
            ci_high: hi,
            trials: sc.outage_samples,
            params: p,
            feasible: true,
        });
    }
    Ok(rows)
}

/// Transmit samples of the designed scheme at one SNR, every real dimension
/// of `blocks` codewords, scaled to unit variance.
pub fn transmit_marginal(sc: &LatticeScenario, pair: &NestedPair, snr_db: f64, blocks: u64) -> Result<Vec<f64>> {
    let stats = ChannelStats::rician(sc.k_db);
    let pw = PowerConfig::new(10f64.powf(snr_db / 10.0) * sc.noise, sc.p_p, sc.noise, sc.noise)?;
    let p = design_for_snr(&stats, &pw, sc, pair.rate())?
        .ok_or_else(|| Error::Infeasible(format!("no feasible relaying ratio at {snr_db} dB")))?;
    let scale = 1.0 / (pw.own_power(p.alpha1) * SIGNAL_SECOND_MOMENT).sqrt();
    let blocks: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|i| {
            let tr = draw_trial(&stats, pair, sc, i);
            let hs = tr.r.interference_gain(p.alpha1, &pw);
            let f = build_filters_from(tr.r.h22, hs, p.alpha2, pw.own_power(p.alpha1), pw.p_p, pw.noise_s, T)?;
            let x = encode(tr.message, &tr.s, &tr.dither, pair, &f, p.alpha1, pw.p_c)?;
            Ok(x.iter().map(|v| v * scale).collect())
        })
        .collect::<Result<_>>()?;
    Ok(blocks.concat())
}
