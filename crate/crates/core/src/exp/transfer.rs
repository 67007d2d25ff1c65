//! Paired transfer runs: each seed trains a from-scratch base model and a
//! transfer-initialized model under identical settings, and the pair's
//! test-accuracy curves yield one sample of each transfer metric.
//!
//! Per-run randomness comes from streams derived from the run seed alone,
//! so a base arm is bit-identical whether or not a transfer arm runs next
//! to it, and independent runs can execute on separate threads.

use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::exp::config::TransferProtocol;
use crate::exp::train::{train_graph_model, train_node_model, RunCurves, TrainSettings};
use crate::gnn::{GnnModel, GnnModelConfig, TaskKind};
use crate::graph::data::{GraphDataset, NodeGraph};
use crate::graph::io::{load_graph_dataset, load_node_graph};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::transfer::TransferMetrics;

/// Stream ids hung off a run seed; distinct streams keep initialization
/// and training draws independent of each other.
pub const STREAM_INIT: u64 = 1;
pub const STREAM_TRAIN: u64 = 2;
pub const STREAM_REINIT: u64 = 3;
pub const STREAM_DAMAGE: u64 = 4;
pub const STREAM_SOURCE: u64 = 5;
pub const STREAM_PERMUTE: u64 = 6;

/// A loaded dataset of either task family.
#[derive(Debug, Clone)]
pub enum TaskData<S: Scalar> {
    Node(NodeGraph<S>),
    Graph(GraphDataset<S>),
}

impl<S: Scalar> TaskData<S> {
    pub fn load(task: TaskKind, dir: &Path) -> Result<Self> {
        match task {
            TaskKind::Node => Ok(TaskData::Node(load_node_graph(dir)?)),
            TaskKind::Graph => Ok(TaskData::Graph(load_graph_dataset(dir)?)),
        }
    }

    pub fn task(&self) -> TaskKind {
        match self {
            TaskData::Node(_) => TaskKind::Node,
            TaskData::Graph(_) => TaskKind::Graph,
        }
    }

    pub fn num_features(&self) -> usize {
        match self {
            TaskData::Node(g) => g.num_features(),
            TaskData::Graph(d) => d.num_features,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            TaskData::Node(g) => g.num_classes,
            TaskData::Graph(d) => d.num_classes,
        }
    }

    /// Replaces every feature with standard-normal noise.
    pub fn damage(&mut self, rng: &mut Rng) {
        match self {
            TaskData::Node(g) => g.damage_features(rng),
            TaskData::Graph(d) => {
                for sample in &mut d.samples {
                    sample.damage_features(rng);
                }
            }
        }
    }
}

/// Trains `model` on `data` with the task-appropriate loop.
pub fn train_model<S: Scalar>(
    model: &mut GnnModel<S>,
    data: &TaskData<S>,
    settings: &TrainSettings,
    rng: &mut Rng,
) -> Result<RunCurves> {
    match data {
        TaskData::Node(graph) => train_node_model(model, graph, settings, rng),
        TaskData::Graph(dataset) => train_graph_model(model, dataset, settings, rng),
    }
}

/// The architecture both arms of an experiment train with.
pub fn model_config_for<S: Scalar>(
    task: TaskKind,
    kind: crate::gnn::AggKind,
    hidden_dim: usize,
    num_layers: usize,
    dropout: f64,
    batch_norm: bool,
    out_dim: Option<usize>,
    data: &TaskData<S>,
) -> GnnModelConfig {
    GnnModelConfig {
        kind,
        task,
        in_dim: data.num_features(),
        hidden_dim,
        out_dim: out_dim.unwrap_or_else(|| data.num_classes()),
        num_layers,
        dropout,
        batch_norm,
    }
}

fn check_source_compatible(source: &GnnModelConfig, target: &GnnModelConfig) -> Result<()> {
    if source.task != target.task {
        return Err(Error::Protocol(format!(
            "source model solves a {} task, target is {}",
            source.task, target.task
        )));
    }
    if source.kind != target.kind {
        return Err(Error::Protocol(format!(
            "source model is {}, target wants {}",
            source.kind, target.kind
        )));
    }
    if source.in_dim != target.in_dim {
        return Err(Error::Protocol(format!(
            "source model expects {} input features, target dataset has {}",
            source.in_dim, target.in_dim
        )));
    }
    if source.hidden_dim != target.hidden_dim
        || source.num_layers != target.num_layers
        || source.batch_norm != target.batch_norm
    {
        return Err(Error::Protocol(
            "source and target architectures differ (hidden_dim, num_layers, or batch_norm)"
                .into(),
        ));
    }
    Ok(())
}

/// Builds the transfer arm's starting model for one run.
pub fn init_transfer_model<S: Scalar>(
    protocol: TransferProtocol,
    source: Option<&GnnModel<S>>,
    target: &GnnModelConfig,
    seed: u64,
) -> Result<GnnModel<S>> {
    if protocol == TransferProtocol::None {
        return GnnModel::new(target.clone(), &mut Rng::derive(seed, STREAM_INIT));
    }
    let source = source.ok_or_else(|| {
        Error::InvalidInput(format!("protocol {protocol} needs a source model"))
    })?;
    check_source_compatible(&source.config, target)?;

    let mut model = source.clone();
    model.config.dropout = target.dropout;
    match protocol {
        TransferProtocol::None => unreachable!("handled above"),
        TransferProtocol::FineTuneReinit => {
            model.reinit_output_layer(target.out_dim, &mut Rng::derive(seed, STREAM_REINIT))?;
        }
        TransferProtocol::FineTuneOldLayer => {
            if source.config.out_dim != target.out_dim {
                return Err(Error::Protocol(format!(
                    "old-layer transfer needs matching label spaces; source has {} outputs, \
                     target needs {}",
                    source.config.out_dim, target.out_dim
                )));
            }
        }
        TransferProtocol::Frozen => {
            model.reinit_output_layer(target.out_dim, &mut Rng::derive(seed, STREAM_REINIT))?;
            model.freeze_feature_layers();
        }
    }
    Ok(model)
}

/// Everything fixed across the runs of one transfer experiment.
#[derive(Debug)]
pub struct TransferSpec<'a, S: Scalar> {
    pub protocol: TransferProtocol,
    pub source: Option<&'a GnnModel<S>>,
    pub config: GnnModelConfig,
    pub settings: TrainSettings,
    pub seeds: &'a [u64],
}

/// One completed base/transfer pair.
#[derive(Debug, Clone)]
pub struct PairedRun<S: Scalar> {
    pub run: usize,
    pub seed: u64,
    pub base: RunCurves,
    pub transfer: RunCurves,
    pub metrics: TransferMetrics,
    /// Final transfer-arm model, the run's persistable product.
    pub model: GnnModel<S>,
    pub wall_seconds: f64,
}

/// Trains the base and transfer arms for one seed and measures the pair.
pub fn run_transfer_pair<S: Scalar>(
    run: usize,
    seed: u64,
    spec: &TransferSpec<'_, S>,
    data: &TaskData<S>,
) -> Result<PairedRun<S>> {
    let started = Instant::now();

    let mut base_model = GnnModel::new(spec.config.clone(), &mut Rng::derive(seed, STREAM_INIT))?;
    let base = train_model(
        &mut base_model,
        data,
        &spec.settings,
        &mut Rng::derive(seed, STREAM_TRAIN),
    )?;

    let mut transfer_model = init_transfer_model(spec.protocol, spec.source, &spec.config, seed)?;
    let transfer = train_model(
        &mut transfer_model,
        data,
        &spec.settings,
        &mut Rng::derive(seed, STREAM_TRAIN),
    )?;

    let metrics = TransferMetrics::from_pair(transfer.test_accuracy()?, base.test_accuracy()?)?;
    Ok(PairedRun {
        run,
        seed,
        base,
        transfer,
        metrics,
        model: transfer_model,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Runs every seed of the experiment, one thread per run.
pub fn run_transfer_experiment<S: Scalar>(
    spec: &TransferSpec<'_, S>,
    data: &TaskData<S>,
) -> Result<Vec<PairedRun<S>>> {
    let handles_result: Vec<Result<PairedRun<S>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = spec
            .seeds
            .iter()
            .enumerate()
            .map(|(run, &seed)| scope.spawn(move || run_transfer_pair(run, seed, spec, data)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    });
    handles_result.into_iter().collect()
}
