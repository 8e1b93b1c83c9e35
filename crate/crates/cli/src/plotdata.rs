//! Whitespace-separated curve files for gnuplot and similar tools.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::table::ResultTable;

/// One curve: rows sharing scheme and metric, ordered by x.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub scheme: String,
    pub metric: String,
    pub x_label: &'static str,
    /// `(x, y, std_error)`
    pub points: Vec<(f64, f64, f64)>,
}

impl Curve {
    pub fn render(&self) -> String {
        let mut s = format!("# {} {}\n# {} y std_error\n", self.scheme, self.metric, self.x_label);
        for (x, y, e) in &self.points {
            let _ = writeln!(s, "{x} {y} {e}");
        }
        s
    }
}

/// Splits a table into curves; x is the SNR when present, else K.
pub fn curves(table: &ResultTable) -> Result<Vec<Curve>, CliError> {
    if table.rows.is_empty() {
        return Err(CliError::Other("cannot plot an empty table".into()));
    }
    let mut groups: BTreeMap<(String, String), Curve> = BTreeMap::new();
    for r in &table.rows {
        let (x_label, x) = match r.snr_db {
            Some(s) => ("snr_db", s),
            None => ("K_dB", r.k_db),
        };
        let c = groups.entry((r.metric.clone(), r.scheme.clone())).or_insert_with(|| Curve {
            scheme: r.scheme.clone(),
            metric: r.metric.clone(),
            x_label,
            points: Vec::new(),
        });
        c.points.push((x, r.value, r.std_error));
    }
    let mut out: Vec<Curve> = groups.into_values().collect();
    for c in &mut out {
        c.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(out)
}

/// Writes `<stem>_<metric>_<scheme>.dat` per curve into `dir`.
pub fn emit_plotdata(table: &ResultTable, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for c in curves(table)? {
        let path = dir.join(format!("{stem}_{}_{}.dat", c.metric, c.scheme));
        std::fs::write(&path, c.render())?;
        paths.push(path);
    }
    Ok(paths)
}
