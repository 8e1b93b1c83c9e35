//! Result rows written as CSV.

use std::io::{Read, Write};

use cogradio_core::channel::DesignParams;
use cogradio_core::lattice::LatticeScheme;
use cogradio_core::montecarlo::{Metric, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Metrics emitted besides the figure metrics.
pub const EXTRA_METRICS: [&str; 14] = [
    "primary_ergodic_target",
    "cr_outage_surrogate",
    "cantelli_multiplier",
    "cantelli_r",
    "codeword_error_rate",
    "fast_alpha1_deviation",
    "fast_alpha2_deviation",
    "slow_alpha1_deviation",
    "slow_alpha2_deviation",
    "sigma_eps1",
    "rel_sigma_delta1",
    "transmit_power",
    "transmit_skewness",
    "transmit_excess_kurtosis",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(rename = "K_dB")]
    pub k_db: f64,
    pub scheme: String,
    pub metric: String,
    pub value: f64,
    pub std_error: f64,
    pub alpha1: f64,
    pub alpha2_re: f64,
    pub alpha2_im: f64,
    pub seed: u64,
    /// Present only for rows of an SNR sweep.
    pub snr_db: Option<f64>,
}

impl ResultRow {
    pub fn new(k_db: f64, scheme: &str, metric: &str, value: f64, std_error: f64, params: DesignParams, seed: u64) -> Self {
        ResultRow {
            k_db,
            scheme: scheme.to_string(),
            metric: metric.to_string(),
            value,
            std_error,
            alpha1: params.alpha1,
            alpha2_re: params.alpha2.re,
            alpha2_im: params.alpha2.im,
            seed,
            snr_db: None,
        }
    }

    pub fn at_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = Some(snr_db);
        self
    }
}

fn known_scheme(s: &str) -> bool {
    Scheme::from_label(s).is_some() || LatticeScheme::ALL.iter().any(|l| l.label() == s)
}

fn known_metric(m: &str) -> bool {
    Metric::from_label(m).is_some() || EXTRA_METRICS.contains(&m)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Labels come from the closed sets and every number is finite.
    pub fn validate(&self) -> Result<(), CliError> {
        for (i, r) in self.rows.iter().enumerate() {
            if !known_scheme(&r.scheme) {
                return Err(CliError::Other(format!("row {i}: unknown scheme {:?}", r.scheme)));
            }
            if !known_metric(&r.metric) {
                return Err(CliError::Other(format!("row {i}: unknown metric {:?}", r.metric)));
            }
            let nums = [r.k_db, r.value, r.std_error, r.alpha1, r.alpha2_re, r.alpha2_im, r.snr_db.unwrap_or(0.0)];
            if nums.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Other(format!("row {i}: non-finite value")));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        self.validate()?;
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        wr.write_record(HEADER)?;
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, CliError> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != HEADER {
            return Err(CliError::Other(format!("unexpected header {header:?}")));
        }
        let rows = rd.deserialize().collect::<Result<Vec<ResultRow>, _>>()?;
        let t = ResultTable { rows };
        t.validate()?;
        Ok(t)
    }
}

pub const HEADER: [&str; 10] =
    ["K_dB", "scheme", "metric", "value", "std_error", "alpha1", "alpha2_re", "alpha2_im", "seed", "snr_db"];
