//! Command entry points: each function backs one CLI subcommand, works on
//! f64 models, and returns a one-paragraph summary for stdout.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::json;

use crate::community::{
    attribute_within_inertia, general_within_inertia, modularity, structural_within_inertia,
    Partition,
};
use crate::error::{Error, Result};
use crate::exp::artifacts::{write_curves_csv, write_metrics_csv, ExperimentMeta, RunRecord};
use crate::exp::config::{ExperimentConfig, ExperimentPlan, TransferProtocol};
use crate::exp::report::{find_control, load_experiment, write_report, REPORT_ALPHA};
use crate::exp::train::TrainSettings;
use crate::exp::transfer::{
    model_config_for, run_transfer_experiment, train_model, TaskData, TransferSpec, STREAM_DAMAGE,
    STREAM_INIT, STREAM_PERMUTE, STREAM_SOURCE, STREAM_TRAIN,
};
use crate::gnn::{load_checkpoint, save_checkpoint, GnnModel, TaskKind};
use crate::graph::io::{format_err, save_graph_dataset, save_node_graph, FORMAT_VERSION};
use crate::rng::Rng;
use crate::synth::graph_task::{generate_graph_dataset, permute_labels, GraphGenConfig};
use crate::synth::planted::{calibrate_node_config, generate_node_graph, NodeGenConfig};
use crate::synth::presets::{preset, Preset};

/// Dataset-generation request: exactly one of `preset`, `node`, or `graph`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub out_dir: PathBuf,
    #[serde(default)]
    pub preset: Option<usize>,
    #[serde(default)]
    pub node: Option<NodeGenConfig>,
    #[serde(default)]
    pub graph: Option<GraphGenConfig>,
    /// Node presets carry metric targets; calibration tunes the generator
    /// toward them unless switched off. Explicit configs are used as given.
    #[serde(default = "default_true")]
    pub calibrate: bool,
    /// Shuffles all labels after generation, for negative-control sources.
    #[serde(default)]
    pub permute_labels: bool,
}

fn default_true() -> bool {
    true
}

impl GenerateConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))
    }
}

fn node_metrics_json(graph: &crate::graph::data::NodeGraph<f64>) -> Result<serde_json::Value> {
    let partition = Partition::new(graph.labels.clone(), graph.num_classes)?;
    Ok(json!({
        "task": "node",
        "num_nodes": graph.num_nodes(),
        "num_classes": graph.num_classes,
        "modularity": modularity(&graph.adj, &partition)?,
        "within_inertia": general_within_inertia(&graph.features, &partition)?,
    }))
}

fn graph_metrics_json(dataset: &crate::graph::data::GraphDataset<f64>) -> Result<serde_json::Value> {
    Ok(json!({
        "task": "graph",
        "num_graphs": dataset.len(),
        "num_classes": dataset.num_classes,
        "structural_inertia": structural_within_inertia(dataset)?,
        "attribute_inertia": attribute_within_inertia(dataset)?,
    }))
}

/// Generates a dataset into `out_dir`, alongside the resolved generator
/// config (generator.json) and the measured community metrics (metrics.json).
pub fn cmd_generate(config_path: &Path) -> Result<String> {
    let config = GenerateConfig::from_file(config_path)?;
    let sources =
        usize::from(config.preset.is_some()) + usize::from(config.node.is_some()) + usize::from(config.graph.is_some());
    if sources != 1 {
        return Err(Error::InvalidInput(
            "specify exactly one of preset, node, or graph".into(),
        ));
    }

    enum Resolved {
        Node(NodeGenConfig, Option<(f64, f64)>),
        Graph(GraphGenConfig),
    }
    let resolved = if let Some(id) = config.preset {
        match preset(id)? {
            Preset::Node(p) => {
                let targets = (p.target_modularity, p.target_inertia);
                let generator = if config.calibrate {
                    calibrate_node_config(p.target_modularity, p.target_inertia, &p.config)?
                } else {
                    p.config
                };
                Resolved::Node(generator, Some(targets))
            }
            Preset::Graph(c) => Resolved::Graph(c),
        }
    } else if let Some(node) = config.node {
        Resolved::Node(node, None)
    } else {
        Resolved::Graph(config.graph.expect("checked above"))
    };

    match resolved {
        Resolved::Node(generator, targets) => {
            if config.permute_labels {
                return Err(Error::InvalidInput(
                    "permute_labels only applies to graph datasets".into(),
                ));
            }
            let graph = generate_node_graph::<f64>(&generator)?;
            save_node_graph(&graph, &config.out_dir)?;
            fs::write(
                config.out_dir.join("generator.json"),
                serde_json::to_string_pretty(&generator)?,
            )?;
            let metrics = node_metrics_json(&graph)?;
            fs::write(
                config.out_dir.join("metrics.json"),
                serde_json::to_string_pretty(&metrics)?,
            )?;
            let mut summary = format!(
                "wrote node dataset ({} nodes, {} communities) to {}: modularity {:.3}, within inertia {:.3}",
                graph.num_nodes(),
                graph.num_classes,
                config.out_dir.display(),
                metrics["modularity"].as_f64().unwrap_or(f64::NAN),
                metrics["within_inertia"].as_f64().unwrap_or(f64::NAN),
            );
            if let Some((m, i)) = targets {
                summary.push_str(&format!(" (targets {m:.3}, {i:.3})"));
            }
            Ok(summary)
        }
        Resolved::Graph(generator) => {
            let mut dataset = generate_graph_dataset::<f64>(&generator)?;
            if config.permute_labels {
                permute_labels(&mut dataset, &mut Rng::derive(generator.seed, STREAM_PERMUTE));
            }
            save_graph_dataset(&dataset, &config.out_dir)?;
            fs::write(
                config.out_dir.join("generator.json"),
                serde_json::to_string_pretty(&generator)?,
            )?;
            let metrics = graph_metrics_json(&dataset)?;
            fs::write(
                config.out_dir.join("metrics.json"),
                serde_json::to_string_pretty(&metrics)?,
            )?;
            Ok(format!(
                "wrote graph dataset ({} graphs, {} classes{}) to {}: structural inertia {:.3}, attribute inertia {:.3}",
                dataset.len(),
                dataset.num_classes,
                if config.permute_labels { ", labels permuted" } else { "" },
                config.out_dir.display(),
                metrics["structural_inertia"].as_f64().unwrap_or(f64::NAN),
                metrics["attribute_inertia"].as_f64().unwrap_or(f64::NAN),
            ))
        }
    }
}

/// Recomputes the community metrics of a stored dataset and returns them as
/// pretty-printed JSON. The kind is detected from the directory layout.
pub fn cmd_metrics(dataset_dir: &Path) -> Result<String> {
    let metrics = if dataset_dir.join("graphs.jsonl").exists() {
        let data = TaskData::<f64>::load(TaskKind::Graph, dataset_dir)?;
        match data {
            TaskData::Graph(d) => graph_metrics_json(&d)?,
            TaskData::Node(_) => unreachable!("loaded as graph dataset"),
        }
    } else if dataset_dir.join("edges.csv").exists() {
        let data = TaskData::<f64>::load(TaskKind::Node, dataset_dir)?;
        match data {
            TaskData::Node(g) => node_metrics_json(&g)?,
            TaskData::Graph(_) => unreachable!("loaded as node graph"),
        }
    } else {
        return Err(format_err(
            dataset_dir,
            "no dataset here (expected graphs.jsonl or edges.csv)",
        ));
    };
    Ok(serde_json::to_string_pretty(&metrics)?)
}

fn settings_of(plan: &ExperimentPlan) -> TrainSettings {
    TrainSettings {
        epochs: plan.epochs,
        eval_every: plan.eval_every,
        learning_rate: plan.learning_rate,
        batch_size: plan.batch_size,
    }
}

fn meta_of(plan: &ExperimentPlan, runs: usize, source: Option<String>) -> ExperimentMeta {
    ExperimentMeta {
        version: FORMAT_VERSION,
        label: plan.label.clone(),
        task: plan.task.to_string(),
        model: plan.kind.to_string(),
        protocol: plan.protocol.to_string(),
        epochs: plan.epochs,
        eval_every: plan.eval_every,
        runs,
        dataset: plan.dataset.display().to_string(),
        source,
    }
}

/// Trains one model on the plan's dataset from scratch and writes a
/// checkpoint plus its learning curves. Uses the plan's first seed.
pub fn cmd_pretrain(config_path: &Path) -> Result<String> {
    let plan = ExperimentConfig::from_file(config_path)?.resolve()?;
    if plan.protocol != TransferProtocol::None {
        return Err(Error::InvalidInput(
            "pretraining takes no transfer protocol; train from scratch and point transfer configs at the checkpoint".into(),
        ));
    }
    let mut data = TaskData::<f64>::load(plan.task, &plan.dataset)?;
    let seed = plan.seeds[0];
    if plan.damage_source {
        data.damage(&mut Rng::derive(seed, STREAM_DAMAGE));
    }

    let config = model_config_for(
        plan.task,
        plan.kind,
        plan.hidden_dim,
        plan.num_layers,
        plan.dropout,
        plan.batch_norm,
        plan.out_dim,
        &data,
    );
    let settings = settings_of(&plan);
    let started = std::time::Instant::now();
    let mut model = GnnModel::new(config, &mut Rng::derive(seed, STREAM_INIT))?;
    let curves = train_model(&mut model, &data, &settings, &mut Rng::derive(seed, STREAM_TRAIN))?;
    let wall_seconds = started.elapsed().as_secs_f64();

    fs::create_dir_all(&plan.out_dir)?;
    save_checkpoint(&model, &plan.out_dir.join("checkpoint"))?;
    write_curves_csv(&plan.out_dir.join("curves.csv"), 0, &curves)?;
    RunRecord {
        version: FORMAT_VERSION,
        run: 0,
        seed,
        curves: [("pretrain".to_string(), "curves.csv".to_string())].into(),
        checkpoint: Some("checkpoint".into()),
        wall_seconds,
    }
    .save(&plan.out_dir.join("record.json"))?;
    meta_of(&plan, 1, None).save(&plan.out_dir.join("experiment.json"))?;

    let final_accuracy = curves
        .test_accuracy()?
        .points()
        .last()
        .map(|p| p.1)
        .unwrap_or(f64::NAN);
    Ok(format!(
        "pretrained {} on {} for {} epochs: final test accuracy {:.3}, checkpoint in {}",
        plan.kind,
        plan.dataset.display(),
        plan.epochs,
        final_accuracy,
        plan.out_dir.join("checkpoint").display(),
    ))
}

/// Obtains the source model for a transfer plan: loads the checkpoint when
/// one is given, otherwise pretrains on the source dataset and saves that
/// under `<out_dir>/source`. Returns the model and a provenance string.
fn source_model(plan: &ExperimentPlan) -> Result<Option<(GnnModel<f64>, String)>> {
    if plan.protocol == TransferProtocol::None {
        return Ok(None);
    }
    if let Some(path) = &plan.source_checkpoint {
        let model = load_checkpoint::<f64>(path)?;
        return Ok(Some((model, path.display().to_string())));
    }
    let dataset = plan
        .source_dataset
        .as_ref()
        .expect("resolve() requires a source for transfer protocols");
    let mut data = TaskData::<f64>::load(plan.task, dataset)?;
    let seed = Rng::derive(plan.seeds[0], STREAM_SOURCE).next_u64();
    if plan.damage_source {
        data.damage(&mut Rng::derive(seed, STREAM_DAMAGE));
    }
    let config = model_config_for(
        plan.task,
        plan.kind,
        plan.hidden_dim,
        plan.num_layers,
        plan.dropout,
        plan.batch_norm,
        None,
        &data,
    );
    let settings = settings_of(plan);
    let started = std::time::Instant::now();
    let mut model = GnnModel::new(config, &mut Rng::derive(seed, STREAM_INIT))?;
    let curves = train_model(&mut model, &data, &settings, &mut Rng::derive(seed, STREAM_TRAIN))?;
    let wall_seconds = started.elapsed().as_secs_f64();

    let source_dir = plan.out_dir.join("source");
    fs::create_dir_all(&source_dir)?;
    save_checkpoint(&model, &source_dir.join("checkpoint"))?;
    write_curves_csv(&source_dir.join("curves.csv"), 0, &curves)?;
    RunRecord {
        version: FORMAT_VERSION,
        run: 0,
        seed,
        curves: [("pretrain".to_string(), "curves.csv".to_string())].into(),
        checkpoint: Some("checkpoint".into()),
        wall_seconds,
    }
    .save(&source_dir.join("record.json"))?;
    Ok(Some((model, dataset.display().to_string())))
}

/// Runs the full paired experiment of a transfer plan and writes all run
/// artifacts, the per-run metrics table, and the experiment metadata.
pub fn cmd_transfer(config_path: &Path) -> Result<String> {
    let plan = ExperimentConfig::from_file(config_path)?.resolve()?;
    let data = TaskData::<f64>::load(plan.task, &plan.dataset)?;
    let source = source_model(&plan)?;
    let (source_model, source_label) = match source {
        Some((m, l)) => (Some(m), Some(l)),
        None => (None, None),
    };

    let spec = TransferSpec {
        protocol: plan.protocol,
        source: source_model.as_ref(),
        config: model_config_for(
            plan.task,
            plan.kind,
            plan.hidden_dim,
            plan.num_layers,
            plan.dropout,
            plan.batch_norm,
            plan.out_dim,
            &data,
        ),
        settings: settings_of(&plan),
        seeds: &plan.seeds,
    };
    let runs = run_transfer_experiment(&spec, &data)?;

    fs::create_dir_all(&plan.out_dir)?;
    let mut metric_rows = Vec::with_capacity(runs.len());
    for run in &runs {
        let run_dir = plan.out_dir.join(format!("run_{:03}", run.run));
        fs::create_dir_all(&run_dir)?;
        write_curves_csv(&run_dir.join("base_curves.csv"), run.run, &run.base)?;
        write_curves_csv(&run_dir.join("transfer_curves.csv"), run.run, &run.transfer)?;
        save_checkpoint(&run.model, &run_dir.join("checkpoint"))?;
        RunRecord {
            version: FORMAT_VERSION,
            run: run.run,
            seed: run.seed,
            curves: [
                ("base".to_string(), "base_curves.csv".to_string()),
                ("transfer".to_string(), "transfer_curves.csv".to_string()),
            ]
            .into(),
            checkpoint: Some("checkpoint".into()),
            wall_seconds: run.wall_seconds,
        }
        .save(&run_dir.join("record.json"))?;
        metric_rows.push((run.run, run.metrics.clone()));
    }
    write_metrics_csv(&plan.out_dir.join("metrics.csv"), &metric_rows)?;
    meta_of(&plan, runs.len(), source_label).save(&plan.out_dir.join("experiment.json"))?;

    let mean = |f: fn(&crate::transfer::TransferMetrics) -> f64| -> f64 {
        metric_rows.iter().map(|(_, m)| f(m)).sum::<f64>() / metric_rows.len() as f64
    };
    Ok(format!(
        "{}: {} paired runs of {} ({}) done; mean transfer ratio {:.4}, jumpstart {:.4}, asymptotic {:.4}; artifacts in {}",
        plan.label,
        runs.len(),
        plan.kind,
        plan.protocol,
        mean(|m| m.transfer_ratio),
        mean(|m| m.jumpstart),
        mean(|m| m.asymptotic),
        plan.out_dir.display(),
    ))
}

/// Aggregates finished experiment directories into report tables and charts.
pub fn cmd_report(dirs: &[PathBuf], control: Option<&str>, out_dir: &Path) -> Result<String> {
    let experiments = dirs
        .iter()
        .map(|d| load_experiment(d))
        .collect::<Result<Vec<_>>>()?;
    let control_idx = find_control(&experiments, control)?;
    write_report(&experiments, control_idx, REPORT_ALPHA, out_dir)?;
    Ok(format!(
        "report over {} experiments (control: {}) written to {}",
        experiments.len(),
        experiments[control_idx].meta.label,
        out_dir.display(),
    ))
}
