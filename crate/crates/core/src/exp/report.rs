//! Aggregation of completed transfer experiments into tables and plots.
//!
//! Each experiment contributes one sample of every transfer metric per run.
//! The report compares every arm against a designated control arm with a
//! one-sided Welch test, and separately against the best-scoring arm per
//! metric, since "better than control" and "indistinguishable from best"
//! answer different questions.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exp::artifacts::{read_curves_csv, read_metrics_csv, ExperimentMeta, RunRecord};
use crate::exp::svg::{write_line_chart, Series, PALETTE};
use crate::graph::io::format_err;
use crate::transfer::stats::mean_and_variance;
use crate::transfer::{welch_t_greater, LearningCurve, TransferMetrics};

pub const REPORT_ALPHA: f64 = 0.1;
pub const METRIC_COLUMNS: [&str; 3] = ["transfer_ratio", "jumpstart", "asymptotic"];

pub const REPORT_HEADER: &str =
    "model,source_task,metric,runs,mean,std,p_vs_control,significant_flag";
pub const VS_BEST_HEADER: &str =
    "model,source_task,metric,runs,mean,std,p_vs_best,significant_flag";

/// One experiment directory loaded for aggregation.
#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub dir: PathBuf,
    pub meta: ExperimentMeta,
    pub metrics: Vec<(usize, TransferMetrics)>,
}

pub fn load_experiment(dir: &Path) -> Result<ExperimentResults> {
    let meta = ExperimentMeta::load(&dir.join("experiment.json"))?;
    let metrics = read_metrics_csv(&dir.join("metrics.csv"))?;
    if metrics.is_empty() {
        return Err(format_err(&dir.join("metrics.csv"), "no completed runs"));
    }
    Ok(ExperimentResults {
        dir: dir.to_path_buf(),
        meta,
        metrics,
    })
}

/// Picks the control experiment: by label or directory name when given,
/// the first experiment otherwise.
pub fn find_control(experiments: &[ExperimentResults], name: Option<&str>) -> Result<usize> {
    match name {
        None => {
            if experiments.is_empty() {
                Err(Error::InvalidInput("no experiments to report".into()))
            } else {
                Ok(0)
            }
        }
        Some(name) => experiments
            .iter()
            .position(|e| e.meta.label == name || e.dir == Path::new(name))
            .ok_or_else(|| {
                Error::InvalidInput(format!("control {name:?} is not among the experiments"))
            }),
    }
}

fn metric_sample(results: &ExperimentResults, metric: &str) -> Vec<f64> {
    results
        .metrics
        .iter()
        .map(|(_, m)| match metric {
            "transfer_ratio" => m.transfer_ratio,
            "jumpstart" => m.jumpstart,
            "asymptotic" => m.asymptotic,
            other => unreachable!("unknown metric column {other}"),
        })
        .collect()
}

fn sample_stats(sample: &[f64]) -> (f64, f64) {
    if sample.len() < 2 {
        return (sample.first().copied().unwrap_or(f64::NAN), 0.0);
    }
    let (mean, var) = mean_and_variance(sample);
    (mean, var.sqrt())
}

/// Formats the p-value and significance columns; a degenerate comparison
/// (the arm's sample has no variance) leaves both empty.
fn p_columns(sample: &[f64], reference: &[f64], alpha: f64) -> Result<(String, String)> {
    match welch_t_greater(sample, reference, alpha) {
        Ok(t) => Ok((format!("{}", t.p), format!("{}", t.significant))),
        Err(Error::DegenerateTest(_)) => Ok((String::new(), String::new())),
        Err(e) => Err(e),
    }
}

fn check_control_usable(control: &ExperimentResults) -> Result<()> {
    for metric in METRIC_COLUMNS {
        let sample = metric_sample(control, metric);
        if sample.len() < 2 {
            return Err(Error::DegenerateTest(format!(
                "control {:?} has {} runs, the test needs at least 2",
                control.meta.label,
                sample.len()
            )));
        }
        let (_, var) = mean_and_variance(&sample);
        if var == 0.0 {
            return Err(Error::DegenerateTest(format!(
                "control {:?} has zero variance in {metric}",
                control.meta.label
            )));
        }
    }
    Ok(())
}

/// Per-epoch mean and sample standard deviation over same-grid curves.
#[derive(Debug, Clone)]
pub struct CurveBand {
    pub epochs: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn aggregate_curves(curves: &[&LearningCurve]) -> Result<CurveBand> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Aggregation("no curves to aggregate".into()))?;
    for (i, curve) in curves.iter().enumerate().skip(1) {
        if !first.same_grid(curve) {
            return Err(Error::Aggregation(format!(
                "curve {i} is on a different epoch grid than curve 0"
            )));
        }
    }
    let epochs: Vec<f64> = first.points().iter().map(|p| p.0).collect();
    let mut mean = Vec::with_capacity(epochs.len());
    let mut std = Vec::with_capacity(epochs.len());
    for i in 0..epochs.len() {
        let at: Vec<f64> = curves.iter().map(|c| c.points()[i].1).collect();
        let (m, s) = sample_stats(&at);
        mean.push(m);
        std.push(s);
    }
    Ok(CurveBand { epochs, mean, std })
}

fn band_series(label: &str, color: &str, band: &CurveBand) -> Series {
    let points: Vec<(f64, f64)> = band.epochs.iter().copied().zip(band.mean.iter().copied()).collect();
    let lo: Vec<f64> = band.mean.iter().zip(&band.std).map(|(m, s)| m - s).collect();
    let hi: Vec<f64> = band.mean.iter().zip(&band.std).map(|(m, s)| m + s).collect();
    Series {
        label: label.to_string(),
        color: color.to_string(),
        points,
        band: Some((lo, hi)),
    }
}

/// Collects each arm's per-run test-accuracy curves from the run directories.
fn arm_test_curves(results: &ExperimentResults) -> Result<(Vec<LearningCurve>, Vec<LearningCurve>)> {
    let mut base = Vec::new();
    let mut transfer = Vec::new();
    for (run, _) in &results.metrics {
        let run_dir = results.dir.join(format!("run_{run:03}"));
        let record = RunRecord::load(&run_dir.join("record.json"))?;
        for (arm, file) in &record.curves {
            let sink = match arm.as_str() {
                "base" => &mut base,
                "transfer" => &mut transfer,
                _ => continue,
            };
            let runs = read_curves_csv(&run_dir.join(file))?;
            let (_, curves) = runs
                .into_iter()
                .next()
                .ok_or_else(|| format_err(&run_dir.join(file), "no curves in file"))?;
            sink.push(curves.test_accuracy()?.clone());
        }
    }
    Ok((base, transfer))
}

fn safe_file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes report.csv, vs_best.csv, and one learning-curve chart per
/// experiment into `out_dir`.
pub fn write_report(
    experiments: &[ExperimentResults],
    control: usize,
    alpha: f64,
    out_dir: &Path,
) -> Result<()> {
    if experiments.is_empty() {
        return Err(Error::InvalidInput("no experiments to report".into()));
    }
    if control >= experiments.len() {
        return Err(Error::InvalidInput(format!(
            "control index {control} out of range for {} experiments",
            experiments.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1)")));
    }
    check_control_usable(&experiments[control])?;
    fs::create_dir_all(out_dir)?;

    let mut report = String::from(REPORT_HEADER);
    report.push('\n');
    let mut vs_best = String::from(VS_BEST_HEADER);
    vs_best.push('\n');

    for metric in METRIC_COLUMNS {
        let samples: Vec<Vec<f64>> = experiments
            .iter()
            .map(|e| metric_sample(e, metric))
            .collect();
        let control_sample = &samples[control];
        let best = samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i, sample_stats(s).0))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .expect("experiments is non-empty");

        for (i, experiment) in experiments.iter().enumerate() {
            let sample = &samples[i];
            let (mean, std) = sample_stats(sample);
            let (p, flag) = p_columns(sample, control_sample, alpha)?;
            report.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                experiment.meta.model,
                experiment.meta.label,
                metric,
                sample.len(),
                mean,
                std,
                p,
                flag
            ));
            let (p, flag) = p_columns(&samples[best], sample, alpha)?;
            vs_best.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                experiment.meta.model,
                experiment.meta.label,
                metric,
                sample.len(),
                mean,
                std,
                p,
                flag
            ));
        }
    }
    fs::write(out_dir.join("report.csv"), report)?;
    fs::write(out_dir.join("vs_best.csv"), vs_best)?;

    for experiment in experiments {
        let (base, transfer) = arm_test_curves(experiment)?;
        if base.is_empty() || transfer.is_empty() {
            continue;
        }
        let base_band = aggregate_curves(&base.iter().collect::<Vec<_>>())?;
        let transfer_band = aggregate_curves(&transfer.iter().collect::<Vec<_>>())?;
        let series = vec![
            band_series("base", PALETTE[0], &base_band),
            band_series("transfer", PALETTE[1], &transfer_band),
        ];
        let name = format!("curves_{}.svg", safe_file_stem(&experiment.meta.label));
        write_line_chart(
            &out_dir.join(name),
            &format!("{} ({})", experiment.meta.label, experiment.meta.model),
            "epoch",
            "test accuracy",
            &series,
        )?;
    }
    Ok(())
}
