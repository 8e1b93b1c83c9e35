//! Subcommand bodies: each turns a validated config into a result table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cogradio_core::asymptotics::{convergence_sweep, SlowTargets};
use cogradio_core::channel::{naive_dpc_alpha2, ChannelStats, DesignParams};
use cogradio_core::design_fast::{primary_target_ergodic, solve_alpha1_fast};
use cogradio_core::design_slow::{design_slow, SurrogateMethod};
use cogradio_core::lattice::{build_nested, codeword_error_sim_with, transmit_marginal, LatticeRow};
use cogradio_core::montecarlo::{ergodic_rate, figure_sweep, outage_rate, RateFn, Scheme};
use cogradio_core::C64;
use serde::Serialize;

use crate::config::{FadingMode, ScenarioConfig};
use crate::error::CliError;
use crate::plotdata::emit_plotdata;
use crate::table::{ResultRow, ResultTable};

pub const DEFAULT_K: [f64; 4] = [0.0, 5.0, 10.0, 15.0];
pub const ASYMPTOTIC_K: [f64; 5] = [0.0, 10.0, 20.0, 30.0, 40.0];
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    DesignFast,
    DesignSlow,
    SimulateErgodic,
    SimulateOutage,
    LatticeSim,
    AsymptoticCheck,
    ReproduceFigure(u32),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::DesignFast => "design-fast",
            Task::DesignSlow => "design-slow",
            Task::SimulateErgodic => "simulate-ergodic",
            Task::SimulateOutage => "simulate-outage",
            Task::LatticeSim => "lattice-sim",
            Task::AsymptoticCheck => "asymptotic-check",
            Task::ReproduceFigure(_) => "reproduce-figure",
        }
    }

    /// Base name of the output files.
    pub fn stem(&self) -> String {
        match self {
            Task::ReproduceFigure(n) => format!("figure{n}"),
            t => t.name().replace('-', "_"),
        }
    }
}

/// Table plus free-form lines for the terminal and extra curve files.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub table: ResultTable,
    pub notes: Vec<String>,
    /// `(file suffix, contents)` written next to the plot files.
    pub extra_plots: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub plots: Vec<PathBuf>,
    pub outcome: Outcome,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    figure: Option<u32>,
    version: &'static str,
    seed: u64,
    csv: String,
    config: &'a ScenarioConfig,
}

/// Runs a task and writes `<stem>.csv`, `<stem>.manifest.toml` and the
/// plot files under `out_dir`.
pub fn run(task: Task, cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunOutput, CliError> {
    let outcome = execute(task, cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let stem = task.stem();
    let csv = out_dir.join(format!("{stem}.csv"));
    let mut buf = Vec::new();
    outcome.table.write_csv(&mut buf)?;
    std::fs::write(&csv, buf)?;

    let manifest = out_dir.join(format!("{stem}.manifest.toml"));
    let m = Manifest {
        subcommand: task.name(),
        figure: match task {
            Task::ReproduceFigure(n) => Some(n),
            _ => None,
        },
        version: VERSION,
        seed: cfg.seed,
        csv: format!("{stem}.csv"),
        config: cfg,
    };
    let text = toml::to_string(&m).map_err(|e| CliError::Other(format!("manifest: {e}")))?;
    std::fs::write(&manifest, text)?;

    let plot_dir = out_dir.join("plotdata");
    let mut plots = emit_plotdata(&outcome.table, &plot_dir, &stem)?;
    for (suffix, body) in &outcome.extra_plots {
        let p = plot_dir.join(format!("{stem}_{suffix}.dat"));
        std::fs::write(&p, body)?;
        plots.push(p);
    }
    Ok(RunOutput { csv, manifest, plots, outcome })
}

/// Computes the result table of a task without touching the filesystem.
pub fn execute(task: Task, cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    match task {
        Task::DesignFast => design_fast_table(cfg),
        Task::DesignSlow => design_slow_table(cfg),
        Task::SimulateErgodic => ergodic_table(cfg),
        Task::SimulateOutage => outage_table(cfg),
        Task::LatticeSim => {
            let l = &cfg.lattice;
            lattice_table(cfg, &[l.k_db], l.q_nest)
        }
        Task::AsymptoticCheck => asymptotic_table(cfg),
        Task::ReproduceFigure(n @ 2..=5) => figure_table(cfg, n),
        Task::ReproduceFigure(6) => transmit_table(cfg),
        Task::ReproduceFigure(7) => lattice_table(cfg, &[0.0, 10.0], 2),
        Task::ReproduceFigure(8) => lattice_table(cfg, &[0.0, 10.0], 4),
        Task::ReproduceFigure(n) => Err(CliError::Config(format!("figure: unknown figure {n}; expected 2 to 8"))),
    }
}

fn fast_design(cfg: &ScenarioConfig, stats: &ChannelStats) -> Result<(f64, DesignParams), CliError> {
    let pw = cfg.power();
    let target = match cfg.targets.r_ergodic {
        Some(r) => r,
        None => primary_target_ergodic(stats, &pw)?,
    };
    Ok((target, solve_alpha1_fast(stats, &pw, target)?.params))
}

fn design_fast_table(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    for k in cfg.k_grid(&DEFAULT_K) {
        let (target, p) = fast_design(cfg, &ChannelStats::rician(k))?;
        out.table.rows.push(ResultRow::new(k, "la_gpc", "primary_ergodic_target", target, 0.0, p, cfg.seed));
        out.notes.push(format!("K = {k} dB: alpha1 = {:.6}, alpha2 = {:.6}", p.alpha1, p.alpha2));
    }
    Ok(out)
}

fn method_scheme(m: SurrogateMethod) -> Scheme {
    match m {
        SurrogateMethod::Gamma => Scheme::LaGpc,
        SurrogateMethod::Alzer => Scheme::LaGpcAlzer,
    }
}

fn slow_design(cfg: &ScenarioConfig, k: f64) -> Result<cogradio_core::design_slow::SlowDesignResult, CliError> {
    let pt = cfg.slow_point(k)?;
    let s = &cfg.slow;
    let stats = ChannelStats::rician(k);
    Ok(design_slow(&stats, &cfg.power(), pt.r_p, pt.p_out, pt.r_cr, s.method, s.alpha2_domain, &cfg.slow_options())?)
}

fn design_slow_table(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let scheme = method_scheme(cfg.slow.method).label();
    for k in cfg.k_grid(&DEFAULT_K) {
        let res = slow_design(cfg, k)?;
        let p = res.params();
        let seed = cfg.seed;
        let rows = &mut out.table.rows;
        rows.push(ResultRow::new(k, scheme, "cr_outage_surrogate", res.objective_value.unwrap_or(0.0), 0.0, p, seed));
        rows.push(ResultRow::new(k, scheme, "cantelli_multiplier", res.delta, 0.0, p, seed));
        rows.push(ResultRow::new(k, scheme, "cantelli_r", res.r_used, 0.0, p, seed));
        out.notes.push(format!("K = {k} dB: alpha1 = {:.6}, alpha2 = {:.6}", p.alpha1, p.alpha2));
    }
    Ok(out)
}

fn ergodic_table(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let pw = cfg.power();
    let (n, seed) = (cfg.mc.n_ergodic, cfg.seed);
    for k in cfg.k_grid(&DEFAULT_K) {
        let stats = ChannelStats::rician(k);
        let p = match cfg.fixed_design() {
            Some(p) => p,
            None => fast_design(cfg, &stats)?.1,
        };
        let base = DesignParams { alpha1: p.alpha1, alpha2: C64::new(0.0, 0.0) };
        let mut push = |scheme: Scheme, metric: &str, rate: RateFn, params: DesignParams| -> Result<(), CliError> {
            let est = ergodic_rate(&stats, &pw, rate, n, seed)?;
            out.table.rows.push(ResultRow::new(k, scheme.label(), metric, est.value, est.std_error, params, seed));
            Ok(())
        };
        push(Scheme::LaGpc, "primary_ergodic_rate", RateFn::Primary(p.alpha1), p)?;
        push(Scheme::LaGpc, "cr_ergodic_rate", RateFn::Cr(p), p)?;
        push(Scheme::FullCsit, "cr_ergodic_rate", RateFn::FullCsit(p.alpha1), base)?;
        if p.alpha1 < 1.0 {
            let np = DesignParams { alpha1: p.alpha1, alpha2: naive_dpc_alpha2(&stats, p.alpha1, &pw) };
            push(Scheme::NaiveDpc, "cr_ergodic_rate", RateFn::Cr(np), np)?;
        }
        push(Scheme::InterferenceAsNoise, "cr_ergodic_rate", RateFn::InterferenceAsNoise(p.alpha1), base)?;
    }
    Ok(out)
}

fn outage_table(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let pw = cfg.power();
    let (n, seed) = (cfg.mc.n_outage, cfg.seed);
    let scheme = method_scheme(cfg.slow.method);
    for k in cfg.k_grid(&DEFAULT_K) {
        let stats = ChannelStats::rician(k);
        let pt = cfg.slow_point(k)?;
        let p = match cfg.fixed_design() {
            Some(p) => p,
            None => slow_design(cfg, k)?.params(),
        };
        let base = DesignParams { alpha1: p.alpha1, alpha2: C64::new(0.0, 0.0) };
        let mut push = |scheme: Scheme, metric: &str, rate: RateFn, t: f64, params: DesignParams| -> Result<(), CliError> {
            let est = outage_rate(&stats, &pw, rate, t, n, seed)?;
            out.table.rows.push(ResultRow::new(k, scheme.label(), metric, est.value, est.std_error, params, seed));
            Ok(())
        };
        push(scheme, "primary_outage", RateFn::Primary(p.alpha1), pt.r_p, p)?;
        push(scheme, "cr_outage", RateFn::Cr(p), pt.r_cr, p)?;
        push(Scheme::FullCsit, "cr_outage", RateFn::FullCsit(p.alpha1), pt.r_cr, base)?;
        if p.alpha1 < 1.0 {
            let np = DesignParams { alpha1: p.alpha1, alpha2: naive_dpc_alpha2(&stats, p.alpha1, &pw) };
            push(Scheme::NaiveDpc, "cr_outage", RateFn::Cr(np), pt.r_cr, np)?;
        }
        push(Scheme::InterferenceAsNoise, "cr_outage", RateFn::InterferenceAsNoise(p.alpha1), pt.r_cr, base)?;
    }
    Ok(out)
}

fn lattice_rows(k: f64, rows: &[LatticeRow], seed: u64, out: &mut Outcome) {
    for r in rows {
        let row = ResultRow::new(k, r.scheme.label(), "codeword_error_rate", r.error_rate, r.std_error, r.params, seed);
        out.table.rows.push(row.at_snr(r.snr_db));
        if !r.feasible {
            out.notes.push(format!("K = {k} dB, SNR {} dB: primary target not protectable; CR silent", r.snr_db));
        }
    }
}

fn lattice_table(cfg: &ScenarioConfig, ks: &[f64], q_nest: u32) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let pair = build_nested(q_nest, 0.5)?;
    for &k in ks {
        let sc = cfg.lattice_scenario(k, q_nest);
        let rows = codeword_error_sim_with(&sc, &pair)?;
        lattice_rows(k, &rows, cfg.seed, &mut out);
    }
    Ok(out)
}

fn asymptotic_table(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let targets = SlowTargets {
        r_p: cfg.targets.r_p,
        p_out: cfg.targets.p_out.unwrap_or(SlowTargets::default().p_out),
        r_cr: cfg.targets.r_cr.unwrap_or(SlowTargets::default().r_cr),
    };
    let rep = convergence_sweep(&cfg.power(), &targets, &cfg.k_grid(&ASYMPTOTIC_K))?;
    let seed = cfg.seed;
    let (fast, slow) = match cfg.fading {
        FadingMode::Fast => (true, false),
        FadingMode::Slow => (false, true),
        FadingMode::Both => (true, true),
    };
    for r in &rep.rows {
        let k = r.k_db;
        let rows = &mut out.table.rows;
        if fast {
            let p = DesignParams { alpha1: r.fast_alpha1, alpha2: r.fast_alpha2 };
            rows.push(ResultRow::new(k, "la_gpc", "fast_alpha1_deviation", r.fast_alpha1_dev, 0.0, p, seed));
            rows.push(ResultRow::new(k, "la_gpc", "fast_alpha2_deviation", r.fast_alpha2_dev, 0.0, p, seed));
            rows.push(ResultRow::new(k, "la_gpc", "sigma_eps1", r.sigma_eps1, 0.0, p, seed));
        }
        if slow {
            let p = DesignParams { alpha1: r.slow_alpha1, alpha2: r.slow_alpha2 };
            rows.push(ResultRow::new(k, "la_gpc", "slow_alpha1_deviation", r.slow_alpha1_dev, 0.0, p, seed));
            rows.push(ResultRow::new(k, "la_gpc", "slow_alpha2_deviation", r.slow_alpha2_dev, 0.0, p, seed));
            rows.push(ResultRow::new(k, "la_gpc", "rel_sigma_delta1", r.rel_sigma_delta1, 0.0, p, seed));
        }
    }
    out.notes.push(format!("non-fading alpha1 = {:.6}", rep.alpha1_limit));
    if let Some(last) = rep.rows.last() {
        let mut s = format!("K = {} dB:", last.k_db);
        if fast {
            let _ = write!(s, " fast deviations {:.2e}, {:.2e};", last.fast_alpha1_dev, last.fast_alpha2_dev);
        }
        if slow {
            let _ = write!(s, " slow deviations {:.2e}, {:.2e};", last.slow_alpha1_dev, last.slow_alpha2_dev);
        }
        out.notes.push(s.trim_end_matches(';').to_string());
    }
    Ok(out)
}

fn figure_table(cfg: &ScenarioConfig, n: u32) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    for r in figure_sweep(n, &cfg.figure_config())? {
        out.table.rows.push(ResultRow::new(r.k_db, r.scheme.label(), r.metric.label(), r.value, r.std_error, r.params, r.seed));
    }
    Ok(out)
}

/// Sample moments `(variance, skewness, excess kurtosis)` about zero mean.
pub fn marginal_moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let c = |k: i32| x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / n;
    let v = c(2);
    (v, c(3) / v.powf(1.5), c(4) / (v * v) - 3.0)
}

fn transmit_table(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let l = &cfg.lattice;
    let sc = cfg.lattice_scenario(l.k_db, l.q_nest);
    let snr = l.snr_db[l.snr_db.len() / 2];
    let pair = build_nested(l.q_nest, 0.5)?;
    let x = transmit_marginal(&sc, &pair, snr, l.transmit_blocks)?;
    let (var, skew, kurt) = marginal_moments(&x);
    let n = x.len() as f64;
    let p = DesignParams { alpha1: 0.0, alpha2: C64::new(0.0, 0.0) };
    let mut out = Outcome::default();
    let k = l.k_db;
    let row = |metric: &str, v: f64, se: f64| ResultRow::new(k, "la_gpc", metric, v, se, p, cfg.seed).at_snr(snr);
    out.table.rows.push(row("transmit_power", var, (2.0 / n).sqrt() * var));
    out.table.rows.push(row("transmit_skewness", skew, (6.0 / n).sqrt()));
    out.table.rows.push(row("transmit_excess_kurtosis", kurt, (24.0 / n).sqrt()));
    out.extra_plots.push(("histogram".into(), histogram(&x, 60)));
    out.notes.push(format!("skewness {skew:.4}, excess kurtosis {kurt:.4} over {} samples", x.len()));
    Ok(out)
}

/// Density histogram with the standard normal density alongside.
fn histogram(x: &[f64], bins: usize) -> String {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in x {
        counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
    }
    let mut s = String::from("# x density normal_density\n");
    for (i, c) in counts.iter().enumerate() {
        let mid = lo + (i as f64 + 0.5) * w;
        let normal = (-0.5 * mid * mid).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let _ = writeln!(s, "{mid} {} {normal}", *c as f64 / (x.len() as f64 * w));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.mc.n_ergodic = 2000;
        cfg.mc.n_outage = 10_000;
        cfg.mc.n_search = 2000;
        cfg.mc.alpha2_grid = 11;
        cfg
    }

    #[test]
    fn figure_two_structure() {
        let out = execute(Task::ReproduceFigure(2), &quick()).unwrap();
        assert_eq!(out.table.rows.len(), 12);
        for s in ["la_gpc", "full_search", "primary_target"] {
            assert_eq!(out.table.rows.iter().filter(|r| r.scheme == s).count(), 4);
        }
    }

    #[test]
    fn figure_three_has_five_curves() {
        let out = execute(Task::ReproduceFigure(3), &quick()).unwrap();
        assert_eq!(crate::plotdata::curves(&out.table).unwrap().len(), 5);
    }

    #[test]
    fn unknown_figure_is_config_error() {
        let e = execute(Task::ReproduceFigure(9), &quick()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn infeasible_slow_target_maps_to_exit_three() {
        let mut cfg = quick();
        cfg.k_db = Some(vec![0.0]);
        cfg.targets.r_p = Some(6.0);
        cfg.targets.p_out = Some(0.01);
        cfg.targets.r_cr = Some(1.0);
        let e = execute(Task::DesignSlow, &cfg).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
    }

    #[test]
    fn fixed_design_used_for_ergodic_simulation() {
        let mut cfg = quick();
        cfg.k_db = Some(vec![5.0]);
        cfg.design = Some(crate::config::DesignSection { alpha1: 0.4, alpha2_re: 0.5, alpha2_im: 0.0 });
        let out = execute(Task::SimulateErgodic, &cfg).unwrap();
        let la = out.table.rows.iter().find(|r| r.metric == "cr_ergodic_rate" && r.scheme == "la_gpc").unwrap();
        assert_eq!((la.alpha1, la.alpha2_re), (0.4, 0.5));
    }

    #[test]
    fn histogram_integrates_to_one() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 / 999.0) * 2.0 - 1.0).collect();
        let h = histogram(&x, 10);
        let lines: Vec<Vec<f64>> =
            h.lines().skip(1).map(|l| l.split(' ').map(|v| v.parse().unwrap()).collect()).collect();
        let mass: f64 = lines.iter().map(|l| l[1] * 0.2).sum();
        assert!((mass - 1.0).abs() < 1e-9);
    }
}
