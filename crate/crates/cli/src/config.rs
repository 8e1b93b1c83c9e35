//! TOML scenario configuration.
//!
//! Every section is optional and falls back to the standard operating point:
//! `P_c = P_p = 10`, unit noise, `K ∈ {0, 5, 10, 15}` dB, and `P_p = 100`
//! for the lattice scenario.

use std::path::{Path, PathBuf};

use cogradio_core::channel::{DesignParams, PowerConfig};
use cogradio_core::design_slow::{Alpha2Domain, SlowOptions, SurrogateMethod};
use cogradio_core::lattice::LatticeScenario;
use cogradio_core::montecarlo::{default_slow_points, FigureConfig, SlowPoint};
use cogradio_core::quadform::RatioMethod;
use cogradio_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    Fast,
    Slow,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// K-factor sweep in dB; each subcommand has its own default.
    pub k_db: Option<Vec<f64>>,
    /// Modes reported by `asymptotic-check`.
    pub fading: FadingMode,
    pub out: Option<PathBuf>,
    pub power: PowerSection,
    pub targets: TargetSection,
    /// Fixed design evaluated instead of the designed one.
    pub design: Option<DesignSection>,
    pub mc: McSection,
    pub slow: SlowSection,
    pub lattice: LatticeSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerSection {
    pub p_c: f64,
    pub p_p: f64,
    pub noise_p: f64,
    pub noise_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetSection {
    /// Primary ergodic target; the primary-alone ergodic rate when absent.
    pub r_ergodic: Option<f64>,
    pub r_p: Option<f64>,
    pub p_out: Option<f64>,
    pub r_cr: Option<f64>,
    /// Per-K slow-fading targets; take precedence over `r_p`/`p_out`/`r_cr`.
    pub points: Option<Vec<SlowPoint>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSection {
    pub alpha1: f64,
    #[serde(default)]
    pub alpha2_re: f64,
    #[serde(default)]
    pub alpha2_im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McSection {
    pub n_ergodic: u64,
    pub n_outage: u64,
    pub n_search: usize,
    pub alpha1_grid: usize,
    pub alpha2_grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlowSection {
    pub method: SurrogateMethod,
    pub alpha2_domain: Alpha2Domain,
    pub r_override: Option<f64>,
    pub k_threshold_db: f64,
    pub ratio_method: RatioMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeSection {
    pub k_db: f64,
    pub q_nest: u32,
    pub snr_db: Vec<f64>,
    pub p_p: f64,
    pub noise: f64,
    /// Primary outage target; 0.1 below 10 dB and 0.01 from there on when absent.
    pub p_out_primary: Option<f64>,
    pub r_p: Option<f64>,
    pub trials: u64,
    pub outage_samples: u64,
    /// Codewords drawn for the transmit-distribution figure.
    pub transmit_blocks: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            k_db: None,
            fading: FadingMode::Both,
            out: None,
            power: PowerSection::default(),
            targets: TargetSection::default(),
            design: None,
            mc: McSection::default(),
            slow: SlowSection::default(),
            lattice: LatticeSection::default(),
        }
    }
}

impl Default for PowerSection {
    fn default() -> Self {
        PowerSection { p_c: 10.0, p_p: 10.0, noise_p: 1.0, noise_s: 1.0 }
    }
}

impl Default for McSection {
    fn default() -> Self {
        let f = FigureConfig::default();
        McSection {
            n_ergodic: f.n_ergodic,
            n_outage: f.n_outage,
            n_search: f.n_search,
            alpha1_grid: f.alpha1_grid,
            alpha2_grid: f.alpha2_grid,
        }
    }
}

impl Default for SlowSection {
    fn default() -> Self {
        let o = SlowOptions::default();
        SlowSection {
            method: SurrogateMethod::Gamma,
            alpha2_domain: Alpha2Domain::Complex,
            r_override: o.r_override,
            k_threshold_db: o.k_threshold_db,
            ratio_method: o.ratio_method,
        }
    }
}

impl Default for LatticeSection {
    fn default() -> Self {
        let sc = LatticeScenario::new(10.0, 2);
        LatticeSection {
            k_db: sc.k_db,
            q_nest: sc.q_nest,
            snr_db: sc.snr_db,
            p_p: sc.p_p,
            noise: sc.noise,
            p_out_primary: None,
            r_p: None,
            trials: sc.trials,
            outage_samples: sc.outage_samples,
            transmit_blocks: 100_000,
        }
    }
}

/// Reads a scenario file, or the `[config]` table of a run manifest.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses TOML text; unknown keys are collected and reported together.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let value: toml::Table = text.parse().map_err(|e| CliError::Config(format!("invalid TOML: {e}")))?;
    let body = match (value.get("subcommand"), value.get("config")) {
        (Some(_), Some(toml::Value::Table(inner))) => inner.clone(),
        _ => value,
    };
    let mut unknown = Vec::new();
    let cfg: ScenarioConfig = serde_ignored::deserialize(toml::Value::Table(body), |path| unknown.push(path.to_string()))
        .map_err(|e| CliError::Config(format!("schema error: {e}")))?;
    if !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    Ok(cfg)
}

fn check(problems: &mut Vec<String>, ok: bool, field: &str, msg: impl std::fmt::Display) {
    if !ok {
        problems.push(format!("{field}: {msg}"));
    }
}

fn positive(problems: &mut Vec<String>, field: &str, v: f64) {
    check(problems, v.is_finite() && v > 0.0, field, format!("must be finite and > 0, got {v}"));
}

fn probability(problems: &mut Vec<String>, field: &str, v: f64) {
    check(problems, v > 0.0 && v < 1.0, field, format!("must lie in (0, 1), got {v}"));
}

impl ScenarioConfig {
    /// Checks every field and reports all offending ones at once.
    pub fn validate(&mut self) -> Result<(), CliError> {
        let mut p = Vec::new();
        let pw = &self.power;
        positive(&mut p, "power.p_c", pw.p_c);
        positive(&mut p, "power.p_p", pw.p_p);
        positive(&mut p, "power.noise_p", pw.noise_p);
        positive(&mut p, "power.noise_s", pw.noise_s);
        if let Some(k) = &self.k_db {
            check(&mut p, !k.is_empty(), "k_db", "must not be empty");
            check(&mut p, k.iter().all(|v| v.is_finite()), "k_db", "values must be finite");
        }
        let t = &self.targets;
        if let Some(v) = t.r_ergodic {
            positive(&mut p, "targets.r_ergodic", v);
        }
        if let Some(v) = t.r_p {
            positive(&mut p, "targets.r_p", v);
        }
        if let Some(v) = t.r_cr {
            positive(&mut p, "targets.r_cr", v);
        }
        if let Some(v) = t.p_out {
            probability(&mut p, "targets.p_out", v);
        }
        for (i, pt) in t.points.iter().flatten().enumerate() {
            check(&mut p, pt.k_db.is_finite(), &format!("targets.points[{i}].k_db"), "must be finite");
            positive(&mut p, &format!("targets.points[{i}].r_p"), pt.r_p);
            positive(&mut p, &format!("targets.points[{i}].r_cr"), pt.r_cr);
            probability(&mut p, &format!("targets.points[{i}].p_out"), pt.p_out);
        }
        if let Some(d) = &self.design {
            check(&mut p, (0.0..=1.0).contains(&d.alpha1), "design.alpha1", format!("must lie in [0, 1], got {}", d.alpha1));
            check(&mut p, d.alpha2_re.is_finite() && d.alpha2_im.is_finite(), "design.alpha2", "must be finite");
            check(
                &mut p,
                d.alpha1 < 1.0 || (d.alpha2_re == 0.0 && d.alpha2_im == 0.0),
                "design.alpha2",
                "must be 0 when alpha1 = 1",
            );
        }
        let mc = &self.mc;
        check(&mut p, mc.n_ergodic >= 1000, "mc.n_ergodic", format!("must be at least 1000, got {}", mc.n_ergodic));
        check(&mut p, mc.n_outage >= 10_000, "mc.n_outage", format!("must be at least 10000, got {}", mc.n_outage));
        check(&mut p, mc.n_search >= 1000, "mc.n_search", format!("must be at least 1000, got {}", mc.n_search));
        check(&mut p, mc.alpha1_grid >= 50, "mc.alpha1_grid", format!("must be at least 50, got {}", mc.alpha1_grid));
        check(
            &mut p,
            mc.alpha2_grid >= 3 && mc.alpha2_grid % 2 == 1,
            "mc.alpha2_grid",
            format!("must be odd and at least 3, got {}", mc.alpha2_grid),
        );
        let s = &self.slow;
        check(&mut p, s.k_threshold_db.is_finite(), "slow.k_threshold_db", "must be finite");
        if let Some(r) = s.r_override {
            check(&mut p, r > 0.0 && r <= 1.0, "slow.r_override", format!("must lie in (0, 1], got {r}"));
        }
        let l = &self.lattice;
        check(&mut p, l.k_db.is_finite(), "lattice.k_db", "must be finite");
        check(&mut p, l.q_nest == 2 || l.q_nest == 4, "lattice.q_nest", format!("must be 2 or 4, got {}", l.q_nest));
        check(&mut p, !l.snr_db.is_empty(), "lattice.snr_db", "must not be empty");
        check(&mut p, l.snr_db.iter().all(|v| v.is_finite()), "lattice.snr_db", "values must be finite");
        positive(&mut p, "lattice.p_p", l.p_p);
        positive(&mut p, "lattice.noise", l.noise);
        if let Some(v) = l.p_out_primary {
            probability(&mut p, "lattice.p_out_primary", v);
        }
        if let Some(v) = l.r_p {
            positive(&mut p, "lattice.r_p", v);
        }
        check(&mut p, l.trials >= 1, "lattice.trials", "must be at least 1");
        check(
            &mut p,
            l.outage_samples >= 10_000,
            "lattice.outage_samples",
            format!("must be at least 10000, got {}", l.outage_samples),
        );
        check(&mut p, l.transmit_blocks >= 1, "lattice.transmit_blocks", "must be at least 1");
        if p.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(p.join("; ")))
        }
    }

    pub fn power(&self) -> PowerConfig {
        let p = &self.power;
        PowerConfig { p_c: p.p_c, p_p: p.p_p, noise_p: p.noise_p, noise_s: p.noise_s }
    }

    pub fn k_grid(&self, default: &[f64]) -> Vec<f64> {
        self.k_db.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn slow_options(&self) -> SlowOptions {
        SlowOptions {
            r_override: self.slow.r_override,
            k_threshold_db: self.slow.k_threshold_db,
            ratio_method: self.slow.ratio_method,
        }
    }

    pub fn fixed_design(&self) -> Option<DesignParams> {
        self.design.map(|d| DesignParams { alpha1: d.alpha1, alpha2: C64::new(d.alpha2_re, d.alpha2_im) })
    }

    /// Slow-fading targets at one K: an explicit point, then the scalar
    /// targets, then the standard operating point for that K.
    pub fn slow_point(&self, k_db: f64) -> Result<SlowPoint, CliError> {
        let t = &self.targets;
        if let Some(pt) = t.points.iter().flatten().find(|p| p.k_db == k_db) {
            return Ok(*pt);
        }
        let std = default_slow_points().into_iter().find(|p| p.k_db == k_db);
        let pick = |v: Option<f64>, f: fn(&SlowPoint) -> f64| v.or(std.as_ref().map(f));
        match (pick(t.r_p, |p| p.r_p), pick(t.p_out, |p| p.p_out), pick(t.r_cr, |p| p.r_cr)) {
            (Some(r_p), Some(p_out), Some(r_cr)) => Ok(SlowPoint { k_db, r_p, p_out, r_cr }),
            _ => Err(CliError::Config(format!(
                "targets: no slow-fading targets for K = {k_db} dB; set targets.r_p, targets.p_out and targets.r_cr"
            ))),
        }
    }

    pub fn figure_config(&self) -> FigureConfig {
        let base = FigureConfig::default();
        let k_grid = self.k_grid(&base.k_grid);
        let slow_points = match (&self.k_db, &self.targets.points) {
            (None, None) => base.slow_points,
            _ => k_grid.iter().filter_map(|&k| self.slow_point(k).ok()).collect(),
        };
        FigureConfig {
            power: self.power(),
            k_grid,
            slow_points,
            n_ergodic: self.mc.n_ergodic,
            n_outage: self.mc.n_outage,
            n_search: self.mc.n_search,
            alpha1_grid: self.mc.alpha1_grid,
            alpha2_grid: self.mc.alpha2_grid,
            seed: self.seed,
            slow: self.slow_options(),
        }
    }

    pub fn lattice_scenario(&self, k_db: f64, q_nest: u32) -> LatticeScenario {
        let l = &self.lattice;
        let base = LatticeScenario::new(k_db, q_nest);
        LatticeScenario {
            snr_db: l.snr_db.clone(),
            p_p: l.p_p,
            noise: l.noise,
            p_out_primary: l.p_out_primary.unwrap_or(base.p_out_primary),
            r_p: l.r_p,
            trials: l.trials,
            outage_samples: l.outage_samples,
            seed: self.seed,
            ..base
        }
    }

    /// Applies `--samples`: every Monte Carlo and trial count.
    pub fn override_samples(&mut self, n: u64) {
        self.mc.n_ergodic = n;
        self.mc.n_outage = n;
        self.lattice.trials = n;
    }
}
