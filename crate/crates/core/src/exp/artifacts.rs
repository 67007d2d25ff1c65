//! On-disk layout of experiment outputs.
//!
//! Every run writes into its own directory: learning curves as CSV with
//! columns run,epoch,split,metric,value, per-pair transfer metrics as CSV,
//! and a JSON record tying the run together. The record's wall_seconds is
//! the one value that varies between repeated invocations; everything else
//! is a pure function of the config.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exp::train::RunCurves;
use crate::graph::data::SplitTag;
use crate::graph::io::{format_err, write_csv, FORMAT_VERSION};
use crate::transfer::{LearningCurve, MetricKind, TransferMetrics};

pub const CURVES_HEADER: &str = "run,epoch,split,metric,value";
pub const METRICS_HEADER: &str = "run,transfer_ratio,jumpstart,asymptotic";

/// One run's artifact index.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub version: u32,
    pub run: usize,
    pub seed: u64,
    /// Curve-file names keyed by arm, relative to the run directory.
    pub curves: BTreeMap<String, String>,
    /// Checkpoint directory name, relative to the run directory.
    pub checkpoint: Option<String>,
    /// Wall-clock duration of the run; informational only and the single
    /// non-reproducible field in any artifact.
    pub wall_seconds: f64,
}

impl RunRecord {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let record: RunRecord = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| format_err(path, e.to_string()))?;
        if record.version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                path: path.display().to_string(),
                found: record.version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(record)
    }
}

/// Summary of a whole experiment directory, written next to the run dirs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentMeta {
    pub version: u32,
    pub label: String,
    pub task: String,
    pub model: String,
    pub protocol: String,
    pub epochs: usize,
    pub eval_every: usize,
    pub runs: usize,
    pub dataset: String,
    #[serde(default)]
    pub source: Option<String>,
}

impl ExperimentMeta {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let meta: ExperimentMeta = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| format_err(path, e.to_string()))?;
        if meta.version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                path: path.display().to_string(),
                found: meta.version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(meta)
    }
}

pub fn write_curves_csv(path: &Path, run: usize, curves: &RunCurves) -> Result<()> {
    let rows = curves.entries().iter().flat_map(|(split, curve)| {
        let metric = curve.metric();
        curve
            .points()
            .iter()
            .map(move |&(epoch, value)| format!("{run},{epoch},{split},{metric},{value}"))
            .collect::<Vec<_>>()
    });
    write_csv(path, CURVES_HEADER, rows)
}

fn split_columns<'a>(
    path: &Path,
    line: &'a str,
    line_no: usize,
    expected: usize,
) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if cols.len() != expected {
        return Err(format_err(
            path,
            format!(
                "line {line_no}: expected {expected} columns, found {}",
                cols.len()
            ),
        ));
    }
    Ok(cols)
}

fn read_rows(path: &Path, header: &str, columns: usize) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((_, h)) => {
            return Err(format_err(
                path,
                format!("expected header {header:?}, found {h:?}"),
            ))
        }
        None => return Err(format_err(path, "empty file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_columns(path, line, i + 1, columns)?;
        rows.push(cols.into_iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn parse_f64(path: &Path, field: &str, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| format_err(path, format!("invalid {field} {s:?}")))
}

fn parse_usize(path: &Path, field: &str, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| format_err(path, format!("invalid {field} {s:?}")))
}

/// Reads a curves CSV back into per-run curve sets, in file order.
pub fn read_curves_csv(path: &Path) -> Result<Vec<(usize, RunCurves)>> {
    let rows = read_rows(path, CURVES_HEADER, 5)?;
    // Points grouped by (run, split, metric), preserving first appearance.
    let mut groups: Vec<(usize, SplitTag, MetricKind, Vec<(f64, f64)>)> = Vec::new();
    for row in rows {
        let run = parse_usize(path, "run", &row[0])?;
        let epoch = parse_f64(path, "epoch", &row[1])?;
        let split = SplitTag::parse(&row[2])?;
        let metric = MetricKind::parse(&row[3])?;
        let value = parse_f64(path, "value", &row[4])?;
        match groups
            .iter_mut()
            .find(|(r, s, m, _)| *r == run && *s == split && *m == metric)
        {
            Some((_, _, _, points)) => points.push((epoch, value)),
            None => groups.push((run, split, metric, vec![(epoch, value)])),
        }
    }

    let mut runs: Vec<(usize, Vec<(SplitTag, LearningCurve)>)> = Vec::new();
    for (run, split, metric, points) in groups {
        let curve = LearningCurve::new(metric, points)
            .map_err(|e| format_err(path, format!("run {run} {split} {metric}: {e}")))?;
        match runs.iter_mut().find(|(r, _)| *r == run) {
            Some((_, entries)) => entries.push((split, curve)),
            None => runs.push((run, vec![(split, curve)])),
        }
    }
    Ok(runs
        .into_iter()
        .map(|(run, entries)| (run, RunCurves::from_entries(entries)))
        .collect())
}

pub fn write_metrics_csv(path: &Path, rows: &[(usize, TransferMetrics)]) -> Result<()> {
    write_csv(
        path,
        METRICS_HEADER,
        rows.iter().map(|(run, m)| {
            format!("{run},{},{},{}", m.transfer_ratio, m.jumpstart, m.asymptotic)
        }),
    )
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<(usize, TransferMetrics)>> {
    read_rows(path, METRICS_HEADER, 4)?
        .into_iter()
        .map(|row| {
            Ok((
                parse_usize(path, "run", &row[0])?,
                TransferMetrics {
                    transfer_ratio: parse_f64(path, "transfer_ratio", &row[1])?,
                    jumpstart: parse_f64(path, "jumpstart", &row[2])?,
                    asymptotic: parse_f64(path, "asymptotic", &row[3])?,
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_curves() -> RunCurves {
        let accuracy = |points: Vec<(f64, f64)>| {
            LearningCurve::new(MetricKind::Accuracy, points).unwrap()
        };
        RunCurves::from_entries(vec![
            (SplitTag::Train, accuracy(vec![(0.0, 0.3), (1.0, 0.55), (2.0, 0.7)])),
            (SplitTag::Valid, accuracy(vec![(0.0, 0.25), (1.0, 0.5), (2.0, 0.6)])),
            (SplitTag::Test, accuracy(vec![(0.0, 0.2), (1.0, 0.45), (2.0, 0.65)])),
            (
                SplitTag::Test,
                LearningCurve::new(MetricKind::RocAuc, vec![(0.0, 0.5), (1.0, 0.8), (2.0, 0.9)])
                    .unwrap(),
            ),
        ])
    }

    #[test]
    fn curves_round_trip_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        let curves = sample_curves();
        write_curves_csv(&path, 3, &curves).unwrap();

        let read = read_curves_csv(&path).unwrap();
        assert_eq!(read.len(), 1);
        assert_eq!(read[0].0, 3);
        let back = &read[0].1;
        assert_eq!(back.entries().len(), curves.entries().len());
        for ((sa, ca), (sb, cb)) in curves.entries().iter().zip(back.entries()) {
            assert_eq!(sa, sb);
            assert_eq!(ca.metric(), cb.metric());
            assert_eq!(ca.points(), cb.points());
        }
    }

    #[test]
    fn curves_file_carries_the_documented_header() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        write_curves_csv(&path, 0, &sample_curves()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("run,epoch,split,metric,value\n"));
        assert!(text.contains("0,1,test,accuracy,0.45"));
    }

    #[test]
    fn metrics_round_trip_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let rows = vec![
            (0, TransferMetrics { transfer_ratio: 0.125, jumpstart: -0.03, asymptotic: 0.01 }),
            (1, TransferMetrics { transfer_ratio: 0.5, jumpstart: 0.0, asymptotic: -0.25 }),
        ];
        write_metrics_csv(&path, &rows).unwrap();
        let read = read_metrics_csv(&path).unwrap();
        assert_eq!(read.len(), 2);
        for ((ra, ma), (rb, mb)) in rows.iter().zip(&read) {
            assert_eq!(ra, rb);
            assert_eq!(ma.transfer_ratio, mb.transfer_ratio);
            assert_eq!(ma.jumpstart, mb.jumpstart);
            assert_eq!(ma.asymptotic, mb.asymptotic);
        }
    }

    #[test]
    fn malformed_rows_are_format_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "run,epoch,split,metric,value\n0,1,test,accuracy\n").unwrap();
        assert!(matches!(read_curves_csv(&path), Err(Error::Format { .. })));

        std::fs::write(&path, "wrong,header\n").unwrap();
        assert!(matches!(read_curves_csv(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn records_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("record.json");
        let record = RunRecord {
            version: FORMAT_VERSION,
            run: 2,
            seed: 99,
            curves: BTreeMap::from([
                ("base".to_string(), "base_curves.csv".to_string()),
                ("transfer".to_string(), "transfer_curves.csv".to_string()),
            ]),
            checkpoint: Some("checkpoint".into()),
            wall_seconds: 1.5,
        };
        record.save(&path).unwrap();
        let back = RunRecord::load(&path).unwrap();
        assert_eq!(back.run, 2);
        assert_eq!(back.seed, 99);
        assert_eq!(back.curves.len(), 2);
        assert_eq!(back.checkpoint.as_deref(), Some("checkpoint"));
    }

    #[test]
    fn future_record_versions_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("record.json");
        std::fs::write(
            &path,
            r#"{"version": 99, "run": 0, "seed": 1, "curves": {}, "checkpoint": null,
               "wall_seconds": 0.0}"#,
        )
        .unwrap();
        assert!(matches!(
            RunRecord::load(&path),
            Err(Error::UnsupportedVersion { .. })
        ));
    }
}
