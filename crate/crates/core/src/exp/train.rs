//! Training loops shared by pretraining and transfer experiments.
//!
//! Both loops follow the same shape: an evaluation at epoch 0 strictly
//! before the first optimizer step, Adam updates over the training split,
//! and periodic evaluation of all three splits. Accuracy curves are always
//! recorded; two-class tasks additionally record ROC-AUC curves.

use crate::error::{Error, Result};
use crate::gnn::{AggOp, GnnModel, GraphBatch};
use crate::graph::data::{GraphDataset, NodeGraph, SplitTag};
use crate::nn::adam::{adam_step, AdamState};
use crate::nn::loss::{masked_softmax_cross_entropy, softmax_cross_entropy};
use crate::nn::tensor::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::transfer::{accuracy, roc_auc, LearningCurve, MetricKind};

const SPLITS: [SplitTag; 3] = [SplitTag::Train, SplitTag::Valid, SplitTag::Test];

/// Loop parameters already resolved by the experiment plan.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub eval_every: usize,
    pub learning_rate: f64,
    /// Graph-task minibatch size; node tasks ignore it.
    pub batch_size: usize,
}

impl TrainSettings {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.eval_every == 0 || self.batch_size == 0 {
            return Err(Error::InvalidInput(
                "epochs, eval_every, and batch_size must all be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "learning_rate {} must be positive and finite",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Epochs at which evaluation happens: 0, every `eval_every`, and the
    /// final epoch.
    fn is_eval_epoch(&self, epoch: usize) -> bool {
        epoch % self.eval_every == 0 || epoch == self.epochs
    }
}

/// All learning curves of one training run, keyed by split and metric.
#[derive(Debug, Clone)]
pub struct RunCurves {
    entries: Vec<(SplitTag, LearningCurve)>,
}

impl RunCurves {
    pub fn entries(&self) -> &[(SplitTag, LearningCurve)] {
        &self.entries
    }

    pub fn get(&self, split: SplitTag, metric: MetricKind) -> Option<&LearningCurve> {
        self.entries
            .iter()
            .find(|(tag, curve)| *tag == split && curve.metric() == metric)
            .map(|(_, curve)| curve)
    }

    /// The curve transfer metrics are computed from.
    pub fn test_accuracy(&self) -> Result<&LearningCurve> {
        self.get(SplitTag::Test, MetricKind::Accuracy)
            .ok_or_else(|| Error::InvalidInput("run has no test accuracy curve".into()))
    }

    pub fn from_entries(entries: Vec<(SplitTag, LearningCurve)>) -> Self {
        RunCurves { entries }
    }
}

/// One split's scores at a single evaluation epoch.
struct SplitEval {
    split: SplitTag,
    accuracy: f64,
    auc: Option<f64>,
}

/// Accumulates evaluation points and assembles them into curves.
struct Recorder {
    accuracy: Vec<(SplitTag, Vec<(f64, f64)>)>,
    auc: Vec<(SplitTag, Vec<(f64, f64)>)>,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            accuracy: SPLITS.iter().map(|&s| (s, Vec::new())).collect(),
            auc: Vec::new(),
        }
    }

    fn push(&mut self, epoch: usize, evals: &[SplitEval]) {
        for eval in evals {
            let slot = self
                .accuracy
                .iter_mut()
                .find(|(s, _)| *s == eval.split)
                .expect("recorder covers every split");
            slot.1.push((epoch as f64, eval.accuracy));
            if let Some(auc) = eval.auc {
                if !self.auc.iter().any(|(s, _)| *s == eval.split) {
                    self.auc.push((eval.split, Vec::new()));
                }
                let slot = self.auc.iter_mut().find(|(s, _)| *s == eval.split).unwrap();
                slot.1.push((epoch as f64, auc));
            }
        }
    }

    fn finish(self) -> Result<RunCurves> {
        let mut entries = Vec::new();
        for (split, points) in self.accuracy {
            entries.push((split, LearningCurve::new(MetricKind::Accuracy, points)?));
        }
        for (split, points) in self.auc {
            entries.push((split, LearningCurve::new(MetricKind::RocAuc, points)?));
        }
        Ok(RunCurves { entries })
    }
}

fn argmax_rows<S: Scalar>(logits: &Tensor<S>) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn check_finite(loss: f64, epoch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "training loss became non-finite at epoch {epoch}"
        )))
    }
}

/// Scores two-class tasks by the logit margin in favor of class 1.
fn binary_score<S: Scalar>(logits: &Tensor<S>, row: usize) -> f64 {
    logits.get(row, 1).to_f64_exact() - logits.get(row, 0).to_f64_exact()
}

fn eval_node<S: Scalar>(
    model: &GnnModel<S>,
    agg: &AggOp<S>,
    graph: &NodeGraph<S>,
    splits: &[(SplitTag, Vec<usize>)],
) -> Result<Vec<SplitEval>> {
    let logits = model.forward_node_eval(agg, &graph.features)?;
    let preds = argmax_rows(&logits);
    let binary = graph.num_classes == 2 && model.config.out_dim == 2;
    splits
        .iter()
        .map(|(split, idx)| {
            let predicted: Vec<usize> = idx.iter().map(|&i| preds[i]).collect();
            let actual: Vec<usize> = idx.iter().map(|&i| graph.labels[i]).collect();
            let auc = if binary {
                let scores: Vec<f64> = idx.iter().map(|&i| binary_score(&logits, i)).collect();
                let positive: Vec<bool> = actual.iter().map(|&l| l == 1).collect();
                Some(roc_auc(&scores, &positive)?)
            } else {
                None
            };
            Ok(SplitEval {
                split: *split,
                accuracy: accuracy(&predicted, &actual)?,
                auc,
            })
        })
        .collect()
}

/// Full-batch training on one attributed graph.
pub fn train_node_model<S: Scalar>(
    model: &mut GnnModel<S>,
    graph: &NodeGraph<S>,
    settings: &TrainSettings,
    rng: &mut Rng,
) -> Result<RunCurves> {
    settings.validate()?;
    if model.config.in_dim != graph.num_features() {
        return Err(Error::InvalidInput(format!(
            "model expects {} input features, dataset has {}",
            model.config.in_dim,
            graph.num_features()
        )));
    }
    if model.config.out_dim < graph.num_classes {
        return Err(Error::InvalidInput(format!(
            "model has {} outputs for {} classes",
            model.config.out_dim, graph.num_classes
        )));
    }
    let splits: Vec<(SplitTag, Vec<usize>)> = SPLITS
        .iter()
        .map(|&s| (s, graph.split_indices(s)))
        .collect();
    for (split, idx) in &splits {
        if idx.is_empty() {
            return Err(Error::InvalidInput(format!("{split} split is empty")));
        }
    }
    let train_rows = splits[0].1.clone();

    let agg = AggOp::new(model.config.kind, &graph.adj);
    let mut adam = AdamState::new();
    let mut recorder = Recorder::new();
    recorder.push(0, &eval_node(model, &agg, graph, &splits)?);

    for epoch in 1..=settings.epochs {
        let (logits, ctx) = model.forward_node_train(&agg, &graph.features, rng)?;
        let (loss, d_logits) = masked_softmax_cross_entropy(&logits, &graph.labels, &train_rows)?;
        check_finite(loss, epoch)?;
        model.backward_node(&agg, &ctx, &d_logits)?;
        let mut params = model.trainable_parameters();
        adam_step(&mut params, &mut adam, settings.learning_rate);

        if settings.is_eval_epoch(epoch) {
            recorder.push(epoch, &eval_node(model, &agg, graph, &splits)?);
        }
    }
    recorder.finish()
}

/// One split's graphs pre-batched for evaluation; batch composition is
/// fixed, so the union graphs are built once per run instead of per epoch.
struct EvalSplit<S: Scalar> {
    split: SplitTag,
    batches: Vec<GraphBatch<S>>,
    labels: Vec<usize>,
}

fn eval_graph<S: Scalar>(
    model: &GnnModel<S>,
    split: &EvalSplit<S>,
    binary: bool,
) -> Result<SplitEval> {
    let mut preds = Vec::with_capacity(split.labels.len());
    let mut scores = Vec::with_capacity(if binary { split.labels.len() } else { 0 });
    for batch in &split.batches {
        let logits = model.forward_graph_eval(batch)?;
        preds.extend(argmax_rows(&logits));
        if binary {
            scores.extend((0..logits.rows()).map(|i| binary_score(&logits, i)));
        }
    }
    let auc = if binary {
        let positive: Vec<bool> = split.labels.iter().map(|&l| l == 1).collect();
        Some(roc_auc(&scores, &positive)?)
    } else {
        None
    };
    Ok(SplitEval {
        split: split.split,
        accuracy: accuracy(&preds, &split.labels)?,
        auc,
    })
}

/// Minibatch training on a dataset of labeled graphs. Each epoch shuffles
/// the training split and walks it in `batch_size` disjoint-union batches.
pub fn train_graph_model<S: Scalar>(
    model: &mut GnnModel<S>,
    dataset: &GraphDataset<S>,
    settings: &TrainSettings,
    rng: &mut Rng,
) -> Result<RunCurves> {
    settings.validate()?;
    if model.config.in_dim != dataset.num_features {
        return Err(Error::InvalidInput(format!(
            "model expects {} input features, dataset has {}",
            model.config.in_dim, dataset.num_features
        )));
    }
    if model.config.out_dim < dataset.num_classes {
        return Err(Error::InvalidInput(format!(
            "model has {} outputs for {} classes",
            model.config.out_dim, dataset.num_classes
        )));
    }
    let kind = model.config.kind;
    let binary = dataset.num_classes == 2 && model.config.out_dim == 2;

    let mut eval_splits = Vec::with_capacity(SPLITS.len());
    for &split in &SPLITS {
        let idx = dataset.split_indices(split);
        if idx.is_empty() {
            return Err(Error::InvalidInput(format!("{split} split is empty")));
        }
        let batches = idx
            .chunks(settings.batch_size)
            .map(|chunk| GraphBatch::new(kind, dataset, chunk))
            .collect::<Result<Vec<_>>>()?;
        let labels = idx.iter().map(|&g| dataset.samples[g].label).collect();
        eval_splits.push(EvalSplit {
            split,
            batches,
            labels,
        });
    }
    let train_idx = dataset.split_indices(SplitTag::Train);

    let eval_all = |model: &GnnModel<S>| -> Result<Vec<SplitEval>> {
        eval_splits
            .iter()
            .map(|s| eval_graph(model, s, binary))
            .collect()
    };

    let mut adam = AdamState::new();
    let mut recorder = Recorder::new();
    recorder.push(0, &eval_all(model)?);

    let mut order = train_idx;
    for epoch in 1..=settings.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(settings.batch_size) {
            let batch = GraphBatch::new(kind, dataset, chunk)?;
            let (logits, ctx) = model.forward_graph_train(&batch, rng)?;
            let (loss, d_logits) = softmax_cross_entropy(&logits, &batch.labels)?;
            check_finite(loss, epoch)?;
            model.backward_graph(&batch, &ctx, &d_logits)?;
            let mut params = model.trainable_parameters();
            adam_step(&mut params, &mut adam, settings.learning_rate);
        }

        if settings.is_eval_epoch(epoch) {
            recorder.push(epoch, &eval_all(model)?);
        }
    }
    recorder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{AggKind, GnnModelConfig};
    use crate::synth::graph_task::{generate_graph_dataset, GraphGenConfig};
    use crate::synth::planted::{generate_node_graph, NodeGenConfig};

    fn small_node_graph() -> NodeGraph<f64> {
        generate_node_graph(&NodeGenConfig {
            num_nodes: 60,
            num_communities: 3,
            p_in: 0.3,
            p_out: 0.02,
            attr_noise: 0.5,
            centroid_separation: 1.0,
            n_features: 6,
            seed: 11,
        })
        .unwrap()
    }

    fn small_graph_dataset() -> GraphDataset<f64> {
        generate_graph_dataset(&GraphGenConfig {
            num_classes: 2,
            n_per_class: 12,
            n_features: 4,
            percent_swap: 0.0,
            percent_damage: 0.0,
            nodes_per_graph: 10,
            class_separation: 1.5,
            seed: 5,
        })
        .unwrap()
    }

    fn settings(epochs: usize, eval_every: usize) -> TrainSettings {
        TrainSettings {
            epochs,
            eval_every,
            learning_rate: 0.01,
            batch_size: 8,
        }
    }

    fn node_model(kind: AggKind, graph: &NodeGraph<f64>) -> GnnModel<f64> {
        let config = GnnModelConfig {
            hidden_dim: 16,
            ..GnnModelConfig::node(kind, graph.num_features(), graph.num_classes)
        };
        GnnModel::new(config, &mut Rng::derive(3, 0)).unwrap()
    }

    #[test]
    fn node_training_learns_an_easy_task() {
        let graph = small_node_graph();
        let mut model = node_model(AggKind::Gcn, &graph);
        let curves =
            train_node_model(&mut model, &graph, &settings(60, 5), &mut Rng::derive(3, 1))
                .unwrap();

        let test = curves.test_accuracy().unwrap();
        let first = test.points()[0].1;
        let last = test.points()[test.len() - 1].1;
        assert!(
            last > 0.8 && last > first,
            "test accuracy should improve well past chance, got {first} -> {last}"
        );
    }

    #[test]
    fn curve_grid_covers_zero_multiples_and_the_final_epoch() {
        let graph = small_node_graph();
        let mut model = node_model(AggKind::Sage, &graph);
        let curves =
            train_node_model(&mut model, &graph, &settings(13, 5), &mut Rng::derive(3, 2))
                .unwrap();
        let epochs: Vec<f64> = curves
            .test_accuracy()
            .unwrap()
            .points()
            .iter()
            .map(|p| p.0)
            .collect();
        assert_eq!(epochs, vec![0.0, 5.0, 10.0, 13.0]);
    }

    #[test]
    fn all_three_splits_are_recorded() {
        let graph = small_node_graph();
        let mut model = node_model(AggKind::Gin, &graph);
        let curves =
            train_node_model(&mut model, &graph, &settings(4, 1), &mut Rng::derive(3, 3))
                .unwrap();
        for split in SPLITS {
            let curve = curves.get(split, MetricKind::Accuracy).unwrap();
            assert_eq!(curve.len(), 5, "{split}");
        }
        assert!(curves.get(SplitTag::Test, MetricKind::RocAuc).is_none());
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let graph = small_node_graph();
        let run = || {
            let mut model = node_model(AggKind::Gcn, &graph);
            train_node_model(&mut model, &graph, &settings(10, 2), &mut Rng::derive(9, 1))
                .unwrap()
        };
        let a = run();
        let b = run();
        for ((sa, ca), (sb, cb)) in a.entries().iter().zip(b.entries()) {
            assert_eq!(sa, sb);
            assert_eq!(ca.points(), cb.points());
        }
    }

    #[test]
    fn graph_training_learns_and_records_auc_for_two_classes() {
        let dataset = small_graph_dataset();
        let config = GnnModelConfig {
            hidden_dim: 16,
            ..GnnModelConfig::graph(AggKind::Gin, dataset.num_features, dataset.num_classes)
        };
        let mut model = GnnModel::new(config, &mut Rng::derive(4, 0)).unwrap();
        let curves =
            train_graph_model(&mut model, &dataset, &settings(40, 5), &mut Rng::derive(4, 1))
                .unwrap();

        let test = curves.test_accuracy().unwrap();
        assert!(
            test.points().last().unwrap().1 > 0.7,
            "final test accuracy {:?}",
            test.points().last()
        );
        let auc = curves.get(SplitTag::Test, MetricKind::RocAuc).unwrap();
        assert_eq!(auc.len(), test.len());
        assert!(auc.points().last().unwrap().1 > 0.7);
    }

    #[test]
    fn dimension_mismatches_are_input_errors() {
        let graph = small_node_graph();
        let config = GnnModelConfig::node(AggKind::Gcn, graph.num_features() + 1, 3);
        let mut model = GnnModel::new(config, &mut Rng::derive(5, 0)).unwrap();
        let err =
            train_node_model(&mut model, &graph, &settings(1, 1), &mut Rng::derive(5, 1));
        assert!(matches!(err, Err(Error::InvalidInput(_))));

        let config = GnnModelConfig::node(AggKind::Gcn, graph.num_features(), 2);
        let mut model = GnnModel::new(config, &mut Rng::derive(5, 2)).unwrap();
        let err =
            train_node_model(&mut model, &graph, &settings(1, 1), &mut Rng::derive(5, 3));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }
}
