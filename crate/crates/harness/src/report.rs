//! Result files and summary statistics.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::run::TrialRecord;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Wilson score interval at 95%; `(0, 1)` when `n = 0`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let (k, n) = (successes as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub name: String,
    pub algorithm: Option<String>,
    pub paired: bool,
    pub runs: usize,
    pub failures: usize,
    pub eps: Option<f64>,
    /// Fraction of runs with a policy whose gap is at most `eps`.
    pub success_rate: Option<f64>,
    pub mean_gap: Option<f64>,
    pub mean_episodes: Option<f64>,
    pub pairs: Option<usize>,
    pub agreement_rate: Option<f64>,
    pub agreement_low: Option<f64>,
    pub agreement_high: Option<f64>,
    pub error: Option<String>,
}

impl Summary {
    pub fn from_records(cfg: &ExperimentConfig, paired: bool, records: &[TrialRecord]) -> Self {
        let runs = records.len();
        let gaps: Vec<f64> = records.iter().filter_map(|r| r.gap).collect();
        let eps = cfg.params.eps;
        let ok = gaps.iter().filter(|&&g| g <= eps + 1e-12).count();
        let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        let episodes: Vec<f64> = records.iter().map(|r| r.episodes as f64).collect();
        let (mut pairs, mut rate, mut low, mut high) = (None, None, None, None);
        if paired {
            let (hits, n, (lo, hi)) = crate::run::agreement(records);
            pairs = Some(n);
            rate = (n > 0).then(|| hits as f64 / n as f64);
            low = Some(lo);
            high = Some(hi);
        }
        Self {
            config_hash: cfg.hash(),
            name: cfg.name.clone(),
            algorithm: Some(serde_json::to_value(cfg.algorithm).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()),
            paired,
            runs,
            failures: runs - gaps.len(),
            eps: Some(eps),
            success_rate: (runs > 0).then(|| ok as f64 / runs as f64),
            mean_gap: mean(&gaps),
            mean_episodes: mean(&episodes),
            pairs,
            agreement_rate: rate,
            agreement_low: low,
            agreement_high: high,
            error: None,
        }
    }

    pub fn failed(config_hash: String, error: String) -> Self {
        Self {
            config_hash,
            name: String::new(),
            algorithm: None,
            paired: false,
            runs: 0,
            failures: 0,
            eps: None,
            success_rate: None,
            mean_gap: None,
            mean_episodes: None,
            pairs: None,
            agreement_rate: None,
            agreement_low: None,
            agreement_high: None,
            error: Some(error),
        }
    }
}

pub fn write_records<W: Write>(records: &[TrialRecord], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record([
            "config_hash", "trial", "side", "policy_hash", "value", "optimal_value", "gap", "episodes", "samples",
            "agreement", "error", "wall_ms",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> anyhow::Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Writes `results.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, records: &[TrialRecord], summaries: &[Summary]) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_records(records, File::create(dir.join(RESULTS_FILE))?)?;
    let mut f = File::create(dir.join(SUMMARY_FILE))?;
    serde_json::to_writer_pretty(&mut f, summaries)?;
    writeln!(f)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        let (lo, hi) = wilson_interval(100, 100);
        assert!((lo - 0.9630).abs() < 1e-4);
        assert_eq!(hi, 1.0);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }
}
