//! Experiment configuration: a strict on-disk schema resolved into a fully
//! explicit plan.
//!
//! Config files are JSON with unknown keys rejected, so a typo fails loudly
//! instead of silently falling back to a default. Every optional knob has a
//! documented default; `profile` bundles the common epoch/run choices.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{AggKind, TaskKind};
use crate::rng::Rng;

/// How the transfer arm of an experiment is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferProtocol {
    /// Fresh random init, identical to the base arm. A null protocol for
    /// validating the harness: every transfer metric must come out 0.
    None,
    /// Pretrained feature layers, freshly initialized output layer, all
    /// parameters trainable.
    FineTuneReinit,
    /// Pretrained weights kept wholesale, output layer included; label
    /// spaces of source and target must match.
    FineTuneOldLayer,
    /// Pretrained feature layers fixed; only the fresh output layer trains.
    Frozen,
}

impl TransferProtocol {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferProtocol::None => "none",
            TransferProtocol::FineTuneReinit => "fine_tune_reinit",
            TransferProtocol::FineTuneOldLayer => "fine_tune_old_layer",
            TransferProtocol::Frozen => "frozen",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TransferProtocol::None),
            "fine_tune_reinit" => Ok(TransferProtocol::FineTuneReinit),
            "fine_tune_old_layer" => Ok(TransferProtocol::FineTuneOldLayer),
            "frozen" => Ok(TransferProtocol::Frozen),
            other => Err(Error::InvalidInput(format!(
                "unknown transfer protocol {other:?}, expected none, \
                 fine_tune_reinit, fine_tune_old_layer, or frozen"
            ))),
        }
    }
}

impl std::fmt::Display for TransferProtocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An experiment config as written by the user. Optional fields fall back
/// to the profile (when set) and then to the documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// "node" or "graph".
    pub task: String,
    /// "gcn", "sage", or "gin".
    pub model: String,
    /// Directory holding the target dataset.
    pub dataset: PathBuf,
    /// Where run directories and summary files are written.
    pub out_dir: PathBuf,
    /// Row label used by reports; defaults to the out_dir file name.
    #[serde(default)]
    pub label: Option<String>,
    /// "desk" (epochs 200, runs 5) or "full" (epochs 2000, runs 10).
    #[serde(default)]
    pub profile: Option<String>,
    #[serde(default)]
    pub num_layers: Option<usize>,
    #[serde(default)]
    pub hidden_dim: Option<usize>,
    /// Output dimension; defaults to the dataset's class count.
    #[serde(default)]
    pub out_dim: Option<usize>,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub dropout: Option<f64>,
    #[serde(default)]
    pub batch_norm: Option<bool>,
    /// Graph-task minibatch size; node tasks always train full batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub runs: Option<usize>,
    /// Explicit per-run seeds; overrides `seed`-derived ones.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    /// Base seed from which per-run seeds are derived. Default 0.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub eval_every: Option<usize>,
    /// Transfer protocol; defaults to "none".
    #[serde(default)]
    pub protocol: Option<String>,
    /// Checkpoint directory of a pretrained source model.
    #[serde(default)]
    pub source_checkpoint: Option<PathBuf>,
    /// Source dataset directory; pretraining runs internally when given
    /// without a checkpoint.
    #[serde(default)]
    pub source_dataset: Option<PathBuf>,
    /// Replace all source features with standard-normal noise before
    /// pretraining (control arms).
    #[serde(default)]
    pub damage_source: Option<bool>,
}

/// A fully resolved experiment: every knob explicit, every seed fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub label: String,
    pub task: TaskKind,
    pub kind: AggKind,
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub out_dim: Option<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub batch_norm: bool,
    pub batch_size: usize,
    pub eval_every: usize,
    pub seeds: Vec<u64>,
    pub protocol: TransferProtocol,
    pub source_checkpoint: Option<PathBuf>,
    pub source_dataset: Option<PathBuf>,
    pub damage_source: bool,
}

/// Documented defaults for the optimizer step size: 0.01 for GCN and
/// GraphSAGE on node tasks, 0.001 everywhere else.
pub fn default_learning_rate(task: TaskKind, kind: AggKind) -> f64 {
    match (task, kind) {
        (TaskKind::Node, AggKind::Gcn) | (TaskKind::Node, AggKind::Sage) => 0.01,
        _ => 0.001,
    }
}

struct Profile {
    epochs: usize,
    runs: usize,
    eval_every: usize,
}

fn profile(name: Option<&str>) -> Result<Profile> {
    match name {
        None | Some("full") => Ok(Profile {
            epochs: 2000,
            runs: 10,
            eval_every: 1,
        }),
        Some("desk") => Ok(Profile {
            epochs: 200,
            runs: 5,
            eval_every: 1,
        }),
        Some(other) => Err(Error::InvalidInput(format!(
            "unknown profile {other:?}, expected desk or full"
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }

    /// Fills in defaults and validates cross-field constraints.
    pub fn resolve(&self) -> Result<ExperimentPlan> {
        let task = TaskKind::parse(&self.task)?;
        let kind = AggKind::parse(&self.model)?;
        let prof = profile(self.profile.as_deref())?;

        let epochs = self.epochs.unwrap_or(prof.epochs);
        if epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        let eval_every = self.eval_every.unwrap_or(prof.eval_every);
        if eval_every == 0 {
            return Err(Error::InvalidInput("eval_every must be at least 1".into()));
        }

        let seeds = match (&self.seeds, self.runs) {
            (Some(seeds), runs) => {
                if seeds.is_empty() {
                    return Err(Error::InvalidInput("seeds list is empty".into()));
                }
                if let Some(runs) = runs {
                    if runs != seeds.len() {
                        return Err(Error::InvalidInput(format!(
                            "runs = {runs} but {} seeds were listed",
                            seeds.len()
                        )));
                    }
                }
                seeds.clone()
            }
            (None, runs) => {
                let runs = runs.unwrap_or(prof.runs);
                if runs == 0 {
                    return Err(Error::InvalidInput("runs must be at least 1".into()));
                }
                let base = self.seed.unwrap_or(0);
                (0..runs)
                    .map(|i| Rng::derive(base, i as u64).next_u64())
                    .collect()
            }
        };

        let dropout = self.dropout.unwrap_or(0.5);
        let batch_size = self.batch_size.unwrap_or(32);
        if batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be at least 1".into()));
        }

        let protocol = match &self.protocol {
            Some(p) => TransferProtocol::parse(p)?,
            None => TransferProtocol::None,
        };
        if protocol != TransferProtocol::None
            && self.source_checkpoint.is_none()
            && self.source_dataset.is_none()
        {
            return Err(Error::InvalidInput(format!(
                "protocol {protocol} needs a source_checkpoint or source_dataset"
            )));
        }

        let label = match &self.label {
            Some(l) => l.clone(),
            None => self
                .out_dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "experiment".into()),
        };

        let plan = ExperimentPlan {
            label,
            task,
            kind,
            dataset: self.dataset.clone(),
            out_dir: self.out_dir.clone(),
            num_layers: self.num_layers.unwrap_or(3),
            hidden_dim: self.hidden_dim.unwrap_or(256),
            out_dim: self.out_dim,
            epochs,
            learning_rate: self
                .learning_rate
                .unwrap_or_else(|| default_learning_rate(task, kind)),
            dropout,
            batch_norm: self.batch_norm.unwrap_or(true),
            batch_size,
            eval_every,
            seeds,
            protocol,
            source_checkpoint: self.source_checkpoint.clone(),
            source_dataset: self.source_dataset.clone(),
            damage_source: self.damage_source.unwrap_or(false),
        };
        if !(plan.learning_rate > 0.0) || !plan.learning_rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "learning_rate {} must be positive and finite",
                plan.learning_rate
            )));
        }
        Ok(plan)
    }
}
