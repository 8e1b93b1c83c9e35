//! Monte Carlo ground truth: ergodic rates, outage probabilities, brute-force
//! parameter searches and the per-figure comparison sweeps.
//!
//! Samples are processed in fixed-size chunks whose partial statistics are
//! combined in index order, so results do not depend on the number of worker
//! threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    check_alpha1, cr_rate_unchecked, full_csit_rate, interference_as_noise_rate, naive_dpc_alpha2,
    primary_rate_unchecked, ChannelRealization, ChannelStats, DesignParams, PowerConfig, RealizationSampler,
};
use crate::design_fast::{alpha2_fast, primary_target_ergodic, solve_alpha1_fast};
use crate::design_slow::{solve_alpha1_slow, solve_alpha2_slow, Alpha2Domain, SlowOptions, SurrogateMethod};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, re, C64};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }

    fn estimate(&self, seed: u64) -> McEstimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        McEstimate { value: self.mean, std_error: (var / self.n).sqrt(), n_samples: self.n as u64, seed }
    }
}

/// Sample mean of `f` over realizations `0..n` drawn from `(stats, seed)`.
pub fn mc_mean<F>(stats: &ChannelStats, n: u64, seed: u64, f: F) -> Result<McEstimate>
where
    F: Fn(&ChannelRealization) -> f64 + Sync,
{
    if n == 0 {
        return Err(invalid("n", "at least one sample required"));
    }
    let sampler = RealizationSampler::new(*stats, seed)?;
    let chunks = n.div_ceil(CHUNK as u64);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let start = k * CHUNK as u64;
            let len = (n - start).min(CHUNK as u64) as usize;
            let mut buf = vec![stats.mean_realization(); len];
            sampler.fill(start, &mut buf);
            let mut m = Moments::default();
            for r in &buf {
                m.push(f(r));
            }
            m
        })
        .collect();
    Ok(parts.into_iter().fold(Moments::default(), Moments::merge).estimate(seed))
}

/// Sample mean of `f` over an already drawn set of realizations.
pub fn mean_over<F>(samples: &[ChannelRealization], seed: u64, f: F) -> McEstimate
where
    F: Fn(&ChannelRealization) -> f64 + Sync,
{
    let parts: Vec<Moments> = samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut m = Moments::default();
            for r in chunk {
                m.push(f(r));
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge).estimate(seed)
}

/// Which user's rate a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum User {
    Primary,
    Cr,
}

/// Per-realization rate of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateFn {
    /// CR rate with linear-assignment precoding.
    Cr(DesignParams),
    /// Primary rate with cognitive relaying.
    Primary(f64),
    /// CR rate treating the primary signal as noise.
    InterferenceAsNoise(f64),
    /// CR rate with the interference removed.
    FullCsit(f64),
    /// Primary rate without any CR transmission.
    PrimaryAlone,
}

impl RateFn {
    #[inline]
    pub fn eval(&self, r: &ChannelRealization, pw: &PowerConfig) -> f64 {
        match *self {
            RateFn::Cr(p) => cr_rate_unchecked(r, p.alpha1, p.alpha2, pw),
            RateFn::Primary(a1) => primary_rate_unchecked(r, a1, pw),
            RateFn::InterferenceAsNoise(a1) => interference_as_noise_rate(r, a1, pw),
            RateFn::FullCsit(a1) => full_csit_rate(r, a1, pw),
            RateFn::PrimaryAlone => (1.0 + r.h11.norm_sqr() * pw.p_p / pw.noise_p).log2(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RateFn::Cr(p) => {
                check_alpha1(p.alpha1)?;
                if p.alpha1 == 1.0 && p.alpha2 != re(0.0) {
                    return Err(Error::Domain("alpha1 = 1 with alpha2 != 0".into()));
                }
                Ok(())
            }
            RateFn::Primary(a) | RateFn::InterferenceAsNoise(a) | RateFn::FullCsit(a) => check_alpha1(a),
            RateFn::PrimaryAlone => Ok(()),
        }
    }
}

/// Ergodic rate of any scheme.
pub fn ergodic_rate(stats: &ChannelStats, pw: &PowerConfig, rate: RateFn, n: u64, seed: u64) -> Result<McEstimate> {
    rate.validate()?;
    pw.validate()?;
    if rate == RateFn::Cr(DesignParams { alpha1: 1.0, alpha2: re(0.0) }) {
        return Ok(McEstimate { value: 0.0, std_error: 0.0, n_samples: n, seed });
    }
    mc_mean(stats, n, seed, |r| rate.eval(r, pw))
}

/// Probability that a scheme's rate falls below `target`.
pub fn outage_rate(
    stats: &ChannelStats,
    pw: &PowerConfig,
    rate: RateFn,
    target: f64,
    n: u64,
    seed: u64,
) -> Result<McEstimate> {
    rate.validate()?;
    pw.validate()?;
    let mut est = mc_mean(stats, n, seed, |r| if rate.eval(r, pw) < target { 1.0 } else { 0.0 })?;
    // binomial standard error
    est.std_error = (est.value * (1.0 - est.value) / n as f64).sqrt();
    Ok(est)
}

/// CR ergodic capacity under LA-GPC.
pub fn ergodic_capacity(stats: &ChannelStats, params: &DesignParams, pw: &PowerConfig, n: u64, seed: u64) -> Result<McEstimate> {
    if n < 1000 {
        return Err(invalid("n", format!("ergodic estimates need at least 1000 samples, got {n}")));
    }
    ergodic_rate(stats, pw, RateFn::Cr(*params), n, seed)
}

/// Outage probability of either user at the given design.
pub fn outage_probability(
    stats: &ChannelStats,
    params: &DesignParams,
    pw: &PowerConfig,
    r_target: f64,
    which: User,
    n: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n < 10_000 {
        return Err(invalid("n", format!("outage estimates need at least 10000 samples, got {n}")));
    }
    let rate = match which {
        User::Primary => RateFn::Primary(params.alpha1),
        User::Cr => RateFn::Cr(*params),
    };
    outage_rate(stats, pw, rate, r_target, n, seed)
}

/// Smallest `α₁ = i/grid_n` whose Monte Carlo primary ergodic rate reaches
/// `r_target`. All grid points share the same realizations.
pub fn brute_force_alpha1_fast(
    stats: &ChannelStats,
    pw: &PowerConfig,
    r_target: f64,
    grid_n: usize,
    mc_n: usize,
    seed: u64,
) -> Result<f64> {
    if grid_n < 50 {
        return Err(invalid("grid_n", "at least 50 grid intervals required"));
    }
    let samples = crate::channel::sample_realizations(stats, mc_n, seed)?;
    for i in 0..=grid_n {
        let a1 = i as f64 / grid_n as f64;
        if mean_over(&samples, seed, |r| primary_rate_unchecked(r, a1, pw)).value >= r_target {
            return Ok(a1);
        }
    }
    Err(Error::Infeasible(format!("no grid alpha1 reaches primary ergodic rate {r_target}")))
}

/// Smallest `α₁ = i/grid_n` whose Monte Carlo primary outage at `r_p` is at
/// most `p_out`.
pub fn brute_force_alpha1_slow(
    stats: &ChannelStats,
    pw: &PowerConfig,
    r_p: f64,
    p_out: f64,
    grid_n: usize,
    mc_n: usize,
    seed: u64,
) -> Result<f64> {
    if grid_n < 50 {
        return Err(invalid("grid_n", "at least 50 grid intervals required"));
    }
    let samples = crate::channel::sample_realizations(stats, mc_n, seed)?;
    for i in 0..=grid_n {
        let a1 = i as f64 / grid_n as f64;
        let out = mean_over(&samples, seed, |r| if primary_rate_unchecked(r, a1, pw) < r_p { 1.0 } else { 0.0 });
        if out.value <= p_out {
            return Ok(a1);
        }
    }
    Err(Error::Infeasible(format!("no grid alpha1 meets primary outage {p_out} at rate {r_p}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Alpha2Objective {
    /// Maximize the CR ergodic rate.
    Ergodic,
    /// Minimize the CR outage probability at the given rate.
    Outage(f64),
}

/// Square grid of side `side` restricted to the disc `|α₂ - center| ≤ radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha2Grid {
    pub center: C64,
    pub radius: f64,
    pub side: usize,
}

impl Alpha2Grid {
    /// Disc of radius `2|α₂_fast|` about the fast-fading coefficient.
    pub fn around_fast(stats: &ChannelStats, alpha1: f64, pw: &PowerConfig, side: usize) -> Result<Self> {
        let center = alpha2_fast(stats, alpha1, pw)?;
        let radius = if center.norm() > 0.0 { 2.0 * center.norm() } else { 1.0 };
        Ok(Alpha2Grid { center, radius, side })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.radius / (self.side - 1) as f64
    }

    pub fn points(&self) -> Vec<C64> {
        let half = (self.side / 2) as i64;
        let step = self.step();
        let lim = (self.radius / step) * (self.radius / step) * (1.0 + 1e-12);
        (-half..=half)
            .flat_map(|i| (-half..=half).map(move |j| (i, j)))
            .filter(|&(i, j)| ((i * i + j * j) as f64) <= lim)
            .map(|(i, j)| self.center + c(i as f64 * step, j as f64 * step))
            .collect()
    }
}

/// Grid optimum of the Monte Carlo objective, with its value. Ties go to the
/// point closest to the grid center.
pub fn brute_force_alpha2(
    stats: &ChannelStats,
    alpha1: f64,
    pw: &PowerConfig,
    objective: Alpha2Objective,
    grid: &Alpha2Grid,
    mc_n: usize,
    seed: u64,
) -> Result<(C64, f64)> {
    check_alpha1(alpha1)?;
    if alpha1 >= 1.0 {
        return Err(invalid("alpha1", "precoding needs alpha1 < 1"));
    }
    if grid.side < 3 || grid.side.is_multiple_of(2) || !(grid.radius > 0.0) {
        return Err(invalid("grid", "side must be odd and >= 3, radius positive"));
    }
    let samples = crate::channel::sample_realizations(stats, mc_n, seed)?;
    let points = grid.points();
    let score = |a2: C64| -> f64 {
        match objective {
            Alpha2Objective::Ergodic => -mean_over(&samples, seed, |r| cr_rate_unchecked(r, alpha1, a2, pw)).value,
            Alpha2Objective::Outage(t) => {
                mean_over(&samples, seed, |r| if cr_rate_unchecked(r, alpha1, a2, pw) < t { 1.0 } else { 0.0 }).value
            }
        }
    };
    let values: Vec<f64> = points.iter().map(|&a| score(a)).collect();
    let mut best = 0;
    for k in 1..points.len() {
        let closer = (points[k] - grid.center).norm() < (points[best] - grid.center).norm();
        if values[k] < values[best] || (values[k] == values[best] && closer) {
            best = k;
        }
    }
    let v = match objective {
        Alpha2Objective::Ergodic => -values[best],
        Alpha2Objective::Outage(_) => values[best],
    };
    Ok((points[best], v))
}

/// Curve families of the comparison figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Statistical-CSIT design (gamma surrogate in slow fading).
    LaGpc,
    /// Slow-fading design with the closed-form surrogate bound.
    LaGpcAlzer,
    FullCsit,
    NaiveDpc,
    InterferenceAsNoise,
    FullSearch,
    /// The primary user's own target, without a CR.
    PrimaryTarget,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::LaGpc,
        Scheme::LaGpcAlzer,
        Scheme::FullCsit,
        Scheme::NaiveDpc,
        Scheme::InterferenceAsNoise,
        Scheme::FullSearch,
        Scheme::PrimaryTarget,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::LaGpc => "la_gpc",
            Scheme::LaGpcAlzer => "la_gpc_alzer",
            Scheme::FullCsit => "full_csit",
            Scheme::NaiveDpc => "naive_dpc",
            Scheme::InterferenceAsNoise => "interference_as_noise",
            Scheme::FullSearch => "full_search",
            Scheme::PrimaryTarget => "primary_target",
        }
    }

    pub fn from_label(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PrimaryErgodicRate,
    CrErgodicRate,
    PrimaryOutage,
    CrOutage,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::PrimaryErgodicRate, Metric::CrErgodicRate, Metric::PrimaryOutage, Metric::CrOutage];

    pub fn label(&self) -> &'static str {
        match self {
            Metric::PrimaryErgodicRate => "primary_ergodic_rate",
            Metric::CrErgodicRate => "cr_ergodic_rate",
            Metric::PrimaryOutage => "primary_outage",
            Metric::CrOutage => "cr_outage",
        }
    }

    pub fn from_label(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|x| x.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub k_db: f64,
    pub scheme: Scheme,
    pub metric: Metric,
    pub value: f64,
    pub std_error: f64,
    pub params: DesignParams,
    pub seed: u64,
}

/// Primary/CR targets of one slow-fading operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowPoint {
    pub k_db: f64,
    pub r_p: f64,
    pub p_out: f64,
    pub r_cr: f64,
}

/// The four slow-fading operating points, one per K-factor.
pub fn default_slow_points() -> Vec<SlowPoint> {
    [(0.0, 1.0, 0.1, 0.2), (5.0, 2.0, 0.1, 0.5), (10.0, 2.0, 0.01, 1.0), (15.0, 2.0, 0.01, 1.5)]
        .into_iter()
        .map(|(k_db, r_p, p_out, r_cr)| SlowPoint { k_db, r_p, p_out, r_cr })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureConfig {
    pub power: PowerConfig,
    /// K-factors for the ergodic figures.
    pub k_grid: Vec<f64>,
    /// Operating points for the outage figures.
    pub slow_points: Vec<SlowPoint>,
    pub n_ergodic: u64,
    pub n_outage: u64,
    /// Realizations per brute-force candidate.
    pub n_search: usize,
    pub alpha1_grid: usize,
    pub alpha2_grid: usize,
    pub seed: u64,
    pub slow: SlowOptions,
}

impl Default for FigureConfig {
    fn default() -> Self {
        FigureConfig {
            power: PowerConfig::unit_noise(10.0, 10.0),
            k_grid: vec![0.0, 5.0, 10.0, 15.0],
            slow_points: default_slow_points(),
            n_ergodic: 100_000,
            n_outage: 1_000_000,
            n_search: 100_000,
            alpha1_grid: 200,
            alpha2_grid: 61,
            seed: 1,
            slow: SlowOptions::default(),
        }
    }
}

fn record(k_db: f64, scheme: Scheme, metric: Metric, est: McEstimate, params: DesignParams) -> SweepRecord {
    SweepRecord { k_db, scheme, metric, value: est.value, std_error: est.std_error, params, seed: est.seed }
}

fn exact(k_db: f64, scheme: Scheme, metric: Metric, value: f64, params: DesignParams, seed: u64) -> SweepRecord {
    SweepRecord { k_db, scheme, metric, value, std_error: 0.0, params, seed }
}

/// All curves of comparison figure 2 (primary ergodic rate), 3 (CR ergodic
/// rate), 4 (primary outage) or 5 (CR outage). Every scheme at a given K is
/// evaluated on the same realizations.
pub fn figure_sweep(figure_id: u32, cfg: &FigureConfig) -> Result<Vec<SweepRecord>> {
    let pw = &cfg.power;
    pw.validate()?;
    let seed = cfg.seed;
    let mut out = Vec::new();
    match figure_id {
        2 | 3 => {
            for &k in &cfg.k_grid {
                let stats = ChannelStats::rician(k);
                let target = primary_target_ergodic(&stats, pw)?;
                let design = solve_alpha1_fast(&stats, pw, target)?;
                let p = design.params;
                let a1 = p.alpha1;
                if figure_id == 2 {
                    let m = Metric::PrimaryErgodicRate;
                    let est = ergodic_rate(&stats, pw, RateFn::Primary(a1), cfg.n_ergodic, seed)?;
                    out.push(record(k, Scheme::LaGpc, m, est, p));
                    let bf = brute_force_alpha1_fast(&stats, pw, target, cfg.alpha1_grid, cfg.n_search, seed)?;
                    let bp = DesignParams { alpha1: bf, alpha2: alpha2_fast(&stats, bf, pw)? };
                    let est = ergodic_rate(&stats, pw, RateFn::Primary(bf), cfg.n_ergodic, seed)?;
                    out.push(record(k, Scheme::FullSearch, m, est, bp));
                    let zero = DesignParams { alpha1: 0.0, alpha2: re(0.0) };
                    out.push(exact(k, Scheme::PrimaryTarget, m, target, zero, seed));
                } else {
                    let m = Metric::CrErgodicRate;
                    let n = cfg.n_ergodic;
                    out.push(record(k, Scheme::LaGpc, m, ergodic_rate(&stats, pw, RateFn::Cr(p), n, seed)?, p));
                    let fp = DesignParams { alpha1: a1, alpha2: re(0.0) };
                    let est = ergodic_rate(&stats, pw, RateFn::FullCsit(a1), n, seed)?;
                    out.push(record(k, Scheme::FullCsit, m, est, fp));
                    let np = DesignParams { alpha1: a1, alpha2: naive_dpc_alpha2(&stats, a1, pw) };
                    out.push(record(k, Scheme::NaiveDpc, m, ergodic_rate(&stats, pw, RateFn::Cr(np), n, seed)?, np));
                    let est = ergodic_rate(&stats, pw, RateFn::InterferenceAsNoise(a1), n, seed)?;
                    out.push(record(k, Scheme::InterferenceAsNoise, m, est, fp));
                    let grid = Alpha2Grid::around_fast(&stats, a1, pw, cfg.alpha2_grid)?;
                    let (a2, _) = brute_force_alpha2(&stats, a1, pw, Alpha2Objective::Ergodic, &grid, cfg.n_search, seed)?;
                    let bp = DesignParams { alpha1: a1, alpha2: a2 };
                    out.push(record(k, Scheme::FullSearch, m, ergodic_rate(&stats, pw, RateFn::Cr(bp), n, seed)?, bp));
                }
            }
        }
        4 | 5 => {
            for sp in &cfg.slow_points {
                let k = sp.k_db;
                let stats = ChannelStats::rician(k);
                let s1 = solve_alpha1_slow(&stats, pw, sp.r_p, sp.p_out, &cfg.slow)?;
                let a1 = s1.alpha1;
                let n = cfg.n_outage;
                if figure_id == 4 {
                    let m = Metric::PrimaryOutage;
                    let p = DesignParams { alpha1: a1, alpha2: re(0.0) };
                    let est = outage_rate(&stats, pw, RateFn::Primary(a1), sp.r_p, n, seed)?;
                    out.push(record(k, Scheme::LaGpc, m, est, p));
                    let bf = brute_force_alpha1_slow(&stats, pw, sp.r_p, sp.p_out, cfg.alpha1_grid, cfg.n_search, seed)?;
                    let bp = DesignParams { alpha1: bf, alpha2: re(0.0) };
                    let est = outage_rate(&stats, pw, RateFn::Primary(bf), sp.r_p, n, seed)?;
                    out.push(record(k, Scheme::FullSearch, m, est, bp));
                    out.push(exact(k, Scheme::PrimaryTarget, m, sp.p_out, p, seed));
                } else {
                    let m = Metric::CrOutage;
                    let t = sp.r_cr;
                    for (scheme, method) in [(Scheme::LaGpc, SurrogateMethod::Gamma), (Scheme::LaGpcAlzer, SurrogateMethod::Alzer)] {
                        let (a2, _) = solve_alpha2_slow(&stats, a1, pw, t, method, Alpha2Domain::Complex)?;
                        let p = DesignParams { alpha1: a1, alpha2: a2 };
                        out.push(record(k, scheme, m, outage_rate(&stats, pw, RateFn::Cr(p), t, n, seed)?, p));
                    }
                    let fp = DesignParams { alpha1: a1, alpha2: re(0.0) };
                    out.push(record(k, Scheme::FullCsit, m, outage_rate(&stats, pw, RateFn::FullCsit(a1), t, n, seed)?, fp));
                    let np = DesignParams { alpha1: a1, alpha2: naive_dpc_alpha2(&stats, a1, pw) };
                    out.push(record(k, Scheme::NaiveDpc, m, outage_rate(&stats, pw, RateFn::Cr(np), t, n, seed)?, np));
                    let est = outage_rate(&stats, pw, RateFn::InterferenceAsNoise(a1), t, n, seed)?;
                    out.push(record(k, Scheme::InterferenceAsNoise, m, est, fp));
                    let grid = Alpha2Grid::around_fast(&stats, a1, pw, cfg.alpha2_grid)?;
                    let (a2, _) =
                        brute_force_alpha2(&stats, a1, pw, Alpha2Objective::Outage(t), &grid, cfg.n_search, seed)?;
                    let bp = DesignParams { alpha1: a1, alpha2: a2 };
                    out.push(record(k, Scheme::FullSearch, m, outage_rate(&stats, pw, RateFn::Cr(bp), t, n, seed)?, bp));
                }
            }
        }
        other => return Err(invalid("figure_id", format!("unknown figure {other}; expected 2, 3, 4 or 5"))),
    }
    Ok(out)
}
