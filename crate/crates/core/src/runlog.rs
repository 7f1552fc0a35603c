//! Per-episode run records and their CSV encoding.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! `parse(emit(log)) == log` holds exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::agent::{G_DIM, Z_DIM};
use crate::env::N_ZONES;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub block: usize,
    pub n_p: usize,
    pub perturbed_steps: usize,
    pub mean_alpha: f64,
    pub mean_pred_error: f64,
    /// Euclidean norm of `g` at episode end.
    pub g_norm: f64,
    /// `g` at episode end.
    pub g: Vec<f64>,
    /// FiLM scale averaged over the episode's steps.
    pub gamma_mean: Vec<f64>,
    pub zone_counts: [u32; N_ZONES],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub records: Vec<EpisodeRecord>,
}

pub fn header() -> String {
    let mut cols: Vec<String> = [
        "episode",
        "block",
        "n_p",
        "perturbed_steps",
        "mean_alpha",
        "mean_pred_error",
        "g_norm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((0..G_DIM).map(|i| format!("g_{i}")));
    cols.extend((0..Z_DIM).map(|i| format!("gamma_{i}")));
    cols.extend((0..N_ZONES).map(|i| format!("zone_{i}")));
    cols.join(",")
}

impl RunLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = header();
        out.push('\n');
        for r in &self.records {
            write!(
                out,
                "{},{},{},{},{},{},{}",
                r.episode, r.block, r.n_p, r.perturbed_steps, r.mean_alpha, r.mean_pred_error, r.g_norm
            )
            .unwrap();
            for v in r.g.iter().chain(&r.gamma_mean) {
                write!(out, ",{v}").unwrap();
            }
            for c in r.zone_counts {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| Error::RunLog("empty file".into()))?;
        if head.trim() != header() {
            return Err(Error::RunLog("unexpected header".into()));
        }
        let n_cols = 7 + G_DIM + Z_DIM + N_ZONES;
        let mut records = Vec::new();
        for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != n_cols {
                return Err(Error::RunLog(format!(
                    "line {}: expected {n_cols} fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let bad = |i: usize| Error::RunLog(format!("line {}: bad field {i}: {:?}", lineno + 2, fields[i]));
            let int = |i: usize| fields[i].parse::<usize>().map_err(|_| bad(i));
            let float = |i: usize| fields[i].parse::<f64>().map_err(|_| bad(i));
            let floats = |from: usize, n: usize| (from..from + n).map(float).collect::<Result<Vec<f64>>>();
            let mut zone_counts = [0u32; N_ZONES];
            for (k, z) in zone_counts.iter_mut().enumerate() {
                let i = 7 + G_DIM + Z_DIM + k;
                *z = fields[i].parse().map_err(|_| bad(i))?;
            }
            records.push(EpisodeRecord {
                episode: int(0)?,
                block: int(1)?,
                n_p: int(2)?,
                perturbed_steps: int(3)?,
                mean_alpha: float(4)?,
                mean_pred_error: float(5)?,
                g_norm: float(6)?,
                g: floats(7, G_DIM)?,
                gamma_mean: floats(7 + G_DIM, Z_DIM)?,
                zone_counts,
            });
        }
        Ok(RunLog { records })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1.0..1.0f64]
    }

    prop_compose! {
        fn record()(episode in 0usize..1000, block in 0usize..3, n_p in 0usize..16,
                    alpha in finite(), err in finite(), gn in finite(),
                    g in prop::collection::vec(finite(), G_DIM),
                    gamma in prop::collection::vec(finite(), Z_DIM),
                    zones in prop::array::uniform5(0u32..241)) -> EpisodeRecord {
            EpisodeRecord {
                episode, block, n_p, perturbed_steps: n_p * 15, mean_alpha: alpha,
                mean_pred_error: err, g_norm: gn, g, gamma_mean: gamma, zone_counts: zones,
            }
        }
    }

    proptest! {
        #[test]
        fn csv_round_trip(records in prop::collection::vec(record(), 0..6)) {
            let log = RunLog { records };
            prop_assert_eq!(RunLog::from_csv(&log.to_csv()).unwrap(), log);
        }
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(RunLog::from_csv("a,b\n1,2\n").is_err());
        assert!(RunLog::from_csv("").is_err());
    }
}
