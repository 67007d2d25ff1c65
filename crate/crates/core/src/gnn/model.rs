//! Three-layer message-passing networks for node and graph classification.
//!
//! Both task heads share the same block structure: convolution, batch
//! normalization, ReLU, dropout. Node models finish with a bare convolution
//! whose outputs are the class logits. Graph models run full blocks on every
//! layer, average node embeddings per graph, and classify with a linear head.

use crate::error::{Error, Result};
use crate::graph::data::GraphDataset;
use crate::nn::batchnorm::{BatchNorm, BatchNormCtx};
use crate::nn::ops::{dropout_backward, dropout_forward, relu_backward, relu_forward, Linear};
use crate::nn::ops::LinearCtx;
use crate::nn::param::Parameter;
use crate::nn::tensor::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;

use super::agg::{AggKind, AggOp};
use super::conv::{GnnConv, GnnConvCtx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Node,
    Graph,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Node => "node",
            TaskKind::Graph => "graph",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "node" => Ok(TaskKind::Node),
            "graph" => Ok(TaskKind::Graph),
            other => Err(Error::InvalidInput(format!("unknown task kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModelConfig {
    pub kind: AggKind,
    pub task: TaskKind,
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub num_layers: usize,
    pub dropout: f64,
    pub batch_norm: bool,
}

impl GnnModelConfig {
    pub fn node(kind: AggKind, in_dim: usize, out_dim: usize) -> Self {
        GnnModelConfig {
            kind,
            task: TaskKind::Node,
            in_dim,
            hidden_dim: 256,
            out_dim,
            num_layers: 3,
            dropout: 0.5,
            batch_norm: true,
        }
    }

    pub fn graph(kind: AggKind, in_dim: usize, out_dim: usize) -> Self {
        GnnModelConfig {
            task: TaskKind::Graph,
            ..Self::node(kind, in_dim, out_dim)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.hidden_dim == 0 || self.out_dim == 0 {
            return Err(Error::InvalidInput(
                "model dimensions must be positive".into(),
            ));
        }
        if self.num_layers == 0 {
            return Err(Error::InvalidInput("model needs at least one layer".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Saved intermediates for the convolution blocks of one forward pass.
#[derive(Debug)]
pub struct BlocksCtx<S: Scalar> {
    conv_ctxs: Vec<GnnConvCtx<S>>,
    bn_ctxs: Vec<Option<BatchNormCtx<S>>>,
    relu_outs: Vec<Tensor<S>>,
    dropout_masks: Vec<Option<Tensor<S>>>,
}

#[derive(Debug)]
pub struct NodeFwdCtx<S: Scalar> {
    blocks: BlocksCtx<S>,
    output_ctx: GnnConvCtx<S>,
}

#[derive(Debug)]
pub struct GraphFwdCtx<S: Scalar> {
    blocks: BlocksCtx<S>,
    head_ctx: LinearCtx<S>,
    boundaries: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GnnModel<S: Scalar> {
    pub config: GnnModelConfig,
    convs: Vec<GnnConv<S>>,
    norms: Vec<BatchNorm<S>>,
    head: Option<Linear<S>>,
    frozen_features: bool,
}

impl<S: Scalar> GnnModel<S> {
    pub fn new(config: GnnModelConfig, rng: &mut Rng) -> Result<GnnModel<S>> {
        config.validate()?;
        let l = config.num_layers;
        let mut convs = Vec::with_capacity(l);
        let mut norms = Vec::new();
        let mut head = None;
        match config.task {
            TaskKind::Node => {
                for i in 0..l {
                    let in_dim = if i == 0 { config.in_dim } else { config.hidden_dim };
                    let out_dim = if i + 1 == l { config.out_dim } else { config.hidden_dim };
                    convs.push(GnnConv::new(config.kind, in_dim, out_dim, rng));
                    if i + 1 < l && config.batch_norm {
                        norms.push(BatchNorm::new(out_dim));
                    }
                }
            }
            TaskKind::Graph => {
                for i in 0..l {
                    let in_dim = if i == 0 { config.in_dim } else { config.hidden_dim };
                    convs.push(GnnConv::new(config.kind, in_dim, config.hidden_dim, rng));
                    if config.batch_norm {
                        norms.push(BatchNorm::new(config.hidden_dim));
                    }
                }
                let weight = crate::nn::init::glorot_uniform(config.hidden_dim, config.out_dim, rng);
                let bias = Tensor::zeros(1, config.out_dim);
                head = Some(Linear::new(weight, Some(bias)));
            }
        }
        Ok(GnnModel {
            config,
            convs,
            norms,
            head,
            frozen_features: false,
        })
    }

    pub fn frozen_features(&self) -> bool {
        self.frozen_features
    }

    /// Number of blocks that run with normalization, activation and dropout;
    /// node models end in a bare convolution instead of a block.
    fn num_blocks(&self) -> usize {
        match self.config.task {
            TaskKind::Node => self.config.num_layers - 1,
            TaskKind::Graph => self.config.num_layers,
        }
    }

    fn run_blocks_train(
        &mut self,
        agg: &AggOp<S>,
        x: &Tensor<S>,
        rng: &mut Rng,
    ) -> Result<(Tensor<S>, BlocksCtx<S>)> {
        let frozen = self.frozen_features;
        let dropout = if frozen { 0.0 } else { self.config.dropout };
        let mut h = x.clone();
        let mut ctx = BlocksCtx {
            conv_ctxs: Vec::new(),
            bn_ctxs: Vec::new(),
            relu_outs: Vec::new(),
            dropout_masks: Vec::new(),
        };
        for i in 0..self.num_blocks() {
            let (z, conv_ctx) = self.convs[i].forward(agg, &h)?;
            let (normed, bn_ctx) = if !self.config.batch_norm {
                (z, None)
            } else if frozen {
                (self.norms[i].forward_eval(&z)?, None)
            } else {
                let (normed, bn_ctx) = self.norms[i].forward_train(&z)?;
                (normed, Some(bn_ctx))
            };
            let activated = relu_forward(&normed);
            let (dropped, mask) = dropout_forward(&activated, dropout, true, rng);
            ctx.conv_ctxs.push(conv_ctx);
            ctx.bn_ctxs.push(bn_ctx);
            ctx.relu_outs.push(activated);
            ctx.dropout_masks.push(mask);
            h = dropped;
        }
        Ok((h, ctx))
    }

    fn run_blocks_eval(&self, agg: &AggOp<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
        let mut h = x.clone();
        for i in 0..self.num_blocks() {
            let (z, _) = self.convs[i].forward(agg, &h)?;
            let normed = if self.config.batch_norm {
                self.norms[i].forward_eval(&z)?
            } else {
                z
            };
            h = relu_forward(&normed);
        }
        Ok(h)
    }

    fn backward_blocks(
        &mut self,
        agg: &AggOp<S>,
        ctx: &BlocksCtx<S>,
        d_out: Tensor<S>,
    ) -> Result<()> {
        let mut d = d_out;
        for i in (0..self.num_blocks()).rev() {
            d = dropout_backward(&ctx.dropout_masks[i], &d);
            d = relu_backward(&ctx.relu_outs[i], &d);
            if self.config.batch_norm {
                let bn_ctx = ctx.bn_ctxs[i]
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("backward through frozen layers".into()))?;
                d = self.norms[i].backward(bn_ctx, &d);
            }
            d = self.convs[i].backward(agg, &ctx.conv_ctxs[i], &d)?;
        }
        Ok(())
    }

    pub fn forward_node_train(
        &mut self,
        agg: &AggOp<S>,
        x: &Tensor<S>,
        rng: &mut Rng,
    ) -> Result<(Tensor<S>, NodeFwdCtx<S>)> {
        self.expect_task(TaskKind::Node)?;
        let (h, blocks) = self.run_blocks_train(agg, x, rng)?;
        let (logits, output_ctx) = self.convs[self.config.num_layers - 1].forward(agg, &h)?;
        Ok((logits, NodeFwdCtx { blocks, output_ctx }))
    }

    pub fn forward_node_eval(&self, agg: &AggOp<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
        self.expect_task(TaskKind::Node)?;
        let h = self.run_blocks_eval(agg, x)?;
        let (logits, _) = self.convs[self.config.num_layers - 1].forward(agg, &h)?;
        Ok(logits)
    }

    pub fn backward_node(
        &mut self,
        agg: &AggOp<S>,
        ctx: &NodeFwdCtx<S>,
        d_logits: &Tensor<S>,
    ) -> Result<()> {
        let last = self.config.num_layers - 1;
        let d_h = self.convs[last].backward(agg, &ctx.output_ctx, d_logits)?;
        if self.frozen_features {
            return Ok(());
        }
        self.backward_blocks(agg, &ctx.blocks, d_h)
    }

    pub fn forward_graph_train(
        &mut self,
        batch: &GraphBatch<S>,
        rng: &mut Rng,
    ) -> Result<(Tensor<S>, GraphFwdCtx<S>)> {
        self.expect_task(TaskKind::Graph)?;
        let (h, blocks) = self.run_blocks_train(&batch.agg, &batch.features, rng)?;
        let pooled = mean_pool(&h, &batch.boundaries)?;
        let head = self.head.as_ref().expect("graph model has a head");
        let (logits, head_ctx) = head.forward(&pooled)?;
        Ok((
            logits,
            GraphFwdCtx {
                blocks,
                head_ctx,
                boundaries: batch.boundaries.clone(),
            },
        ))
    }

    pub fn forward_graph_eval(&self, batch: &GraphBatch<S>) -> Result<Tensor<S>> {
        self.expect_task(TaskKind::Graph)?;
        let h = self.run_blocks_eval(&batch.agg, &batch.features)?;
        let pooled = mean_pool(&h, &batch.boundaries)?;
        let (logits, _) = self.head.as_ref().expect("graph model has a head").forward(&pooled)?;
        Ok(logits)
    }

    pub fn backward_graph(
        &mut self,
        batch: &GraphBatch<S>,
        ctx: &GraphFwdCtx<S>,
        d_logits: &Tensor<S>,
    ) -> Result<()> {
        let head = self.head.as_mut().expect("graph model has a head");
        let d_pooled = head.backward(&ctx.head_ctx, d_logits);
        if self.frozen_features {
            return Ok(());
        }
        let d_h = mean_pool_backward(&d_pooled, &ctx.boundaries);
        self.backward_blocks(&batch.agg, &ctx.blocks, d_h)
    }

    /// Parameters the optimizer may update; excludes feature layers when
    /// those are frozen.
    pub fn trainable_parameters(&mut self) -> Vec<&mut Parameter<S>> {
        if self.frozen_features {
            return match self.config.task {
                TaskKind::Node => self.convs[self.config.num_layers - 1].parameters_mut(),
                TaskKind::Graph => self.head.as_mut().expect("head").parameters_mut(),
            };
        }
        self.all_parameters()
    }

    /// Every learnable parameter regardless of freezing.
    pub fn all_parameters(&mut self) -> Vec<&mut Parameter<S>> {
        let mut params = Vec::new();
        for conv in &mut self.convs {
            params.extend(conv.parameters_mut());
        }
        for norm in &mut self.norms {
            params.extend(norm.parameters_mut());
        }
        if let Some(head) = &mut self.head {
            params.extend(head.parameters_mut());
        }
        params
    }

    /// Replaces the classification layer with a freshly initialized one,
    /// possibly changing the number of output classes.
    pub fn reinit_output_layer(&mut self, out_dim: usize, rng: &mut Rng) -> Result<()> {
        if out_dim == 0 {
            return Err(Error::InvalidInput("output dimension must be positive".into()));
        }
        match self.config.task {
            TaskKind::Node => {
                let last = self.config.num_layers - 1;
                let in_dim = self.convs[last].in_dim();
                self.convs[last] = GnnConv::new(self.config.kind, in_dim, out_dim, rng);
            }
            TaskKind::Graph => {
                let weight = crate::nn::init::glorot_uniform(self.config.hidden_dim, out_dim, rng);
                let bias = Tensor::zeros(1, out_dim);
                self.head = Some(Linear::new(weight, Some(bias)));
            }
        }
        self.config.out_dim = out_dim;
        Ok(())
    }

    /// Locks every layer below the classification head: their parameters
    /// leave the trainable set and batch normalization keeps serving its
    /// running statistics even during training.
    pub fn freeze_feature_layers(&mut self) {
        self.frozen_features = true;
    }

    fn expect_task(&self, task: TaskKind) -> Result<()> {
        if self.config.task != task {
            return Err(Error::InvalidInput(format!(
                "model built for {} task used as {} task",
                self.config.task, task
            )));
        }
        Ok(())
    }

    /// Every persistent value in a fixed order: convolution weights (with the
    /// GIN ε where present), then per layer normalization parameters and
    /// running statistics, then the head. Checkpoints serialize exactly this.
    pub(crate) fn state_slices(&self) -> Vec<&[S]> {
        let mut out = Vec::new();
        for conv in &self.convs {
            out.push(conv.weight.value.data());
            if let Some(eps) = &conv.epsilon {
                out.push(eps.value.data());
            }
        }
        for norm in &self.norms {
            out.push(norm.gamma.value.data());
            out.push(norm.beta.value.data());
            out.push(norm.running_mean.as_slice());
            out.push(norm.running_var.as_slice());
        }
        if let Some(head) = &self.head {
            out.push(head.weight.value.data());
            if let Some(bias) = &head.bias {
                out.push(bias.value.data());
            }
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn convs_for_tests(&mut self) -> &mut [GnnConv<S>] {
        &mut self.convs
    }

    pub(crate) fn state_slices_mut(&mut self) -> Vec<&mut [S]> {
        let mut out = Vec::new();
        for conv in &mut self.convs {
            out.push(conv.weight.value.data_mut());
            if let Some(eps) = &mut conv.epsilon {
                out.push(eps.value.data_mut());
            }
        }
        for norm in &mut self.norms {
            out.push(norm.gamma.value.data_mut());
            out.push(norm.beta.value.data_mut());
            out.push(norm.running_mean.as_mut_slice());
            out.push(norm.running_var.as_mut_slice());
        }
        if let Some(head) = &mut self.head {
            out.push(head.weight.value.data_mut());
            if let Some(bias) = &mut head.bias {
                out.push(bias.value.data_mut());
            }
        }
        out
    }
}

/// Average of each graph's node embeddings. `boundaries` holds the start row
/// of each graph plus the total row count, so graph g owns rows
/// `boundaries[g]..boundaries[g+1]`.
pub fn mean_pool<S: Scalar>(h: &Tensor<S>, boundaries: &[usize]) -> Result<Tensor<S>> {
    validate_boundaries(boundaries, h.rows())?;
    let num_graphs = boundaries.len() - 1;
    let mut out = Tensor::zeros(num_graphs, h.cols());
    for g in 0..num_graphs {
        for v in boundaries[g]..boundaries[g + 1] {
            for (o, &x) in out.row_mut(g).iter_mut().zip(h.row(v)) {
                *o += x;
            }
        }
        let n = boundaries[g + 1] - boundaries[g];
        let inv = S::from_f64_lossy(1.0 / n as f64);
        for o in out.row_mut(g) {
            *o *= inv;
        }
    }
    Ok(out)
}

/// Gradient of [`mean_pool`]: each node receives its graph's gradient scaled
/// by one over the graph's node count.
pub fn mean_pool_backward<S: Scalar>(d_pooled: &Tensor<S>, boundaries: &[usize]) -> Tensor<S> {
    let total = *boundaries.last().expect("validated boundaries");
    let mut d_h = Tensor::zeros(total, d_pooled.cols());
    for g in 0..d_pooled.rows() {
        let n = boundaries[g + 1] - boundaries[g];
        let inv = S::from_f64_lossy(1.0 / n as f64);
        for v in boundaries[g]..boundaries[g + 1] {
            for (d, &x) in d_h.row_mut(v).iter_mut().zip(d_pooled.row(g)) {
                *d = inv * x;
            }
        }
    }
    d_h
}

fn validate_boundaries(boundaries: &[usize], total_rows: usize) -> Result<()> {
    if boundaries.len() < 2 || boundaries[0] != 0 {
        return Err(Error::InvalidInput(
            "pooling boundaries must start at 0 and cover at least one graph".into(),
        ));
    }
    for w in boundaries.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidInput(
                "cannot pool an empty graph".into(),
            ));
        }
    }
    if *boundaries.last().unwrap() != total_rows {
        return Err(Error::InvalidInput(format!(
            "boundaries end at {} but there are {} embedding rows",
            boundaries.last().unwrap(),
            total_rows
        )));
    }
    Ok(())
}

/// A disjoint union of graphs prepared for one forward pass: a single block
/// diagonal aggregation operator, stacked features, and per graph row ranges.
#[derive(Debug, Clone)]
pub struct GraphBatch<S: Scalar> {
    pub agg: AggOp<S>,
    pub features: Tensor<S>,
    pub labels: Vec<usize>,
    pub boundaries: Vec<usize>,
}

impl<S: Scalar> GraphBatch<S> {
    pub fn new(kind: AggKind, dataset: &GraphDataset<S>, indices: &[usize]) -> Result<GraphBatch<S>> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty graph batch".into()));
        }
        let mut boundaries = vec![0usize];
        let mut edges = Vec::new();
        let mut labels = Vec::with_capacity(indices.len());
        let mut total_nodes = 0usize;
        let mut directed: Option<bool> = None;
        for &i in indices {
            let sample = dataset
                .samples
                .get(i)
                .ok_or_else(|| Error::InvalidInput(format!("graph index {i} out of range")))?;
            match directed {
                None => directed = Some(sample.adj.is_directed()),
                Some(d) if d != sample.adj.is_directed() => {
                    return Err(Error::InvalidInput(
                        "cannot batch directed and undirected graphs together".into(),
                    ));
                }
                Some(_) => {}
            }
            let offset = total_nodes;
            for (u, v) in sample.adj.edge_list() {
                edges.push((u + offset, v + offset));
            }
            total_nodes += sample.num_nodes();
            boundaries.push(total_nodes);
            labels.push(sample.label);
        }
        let adj =
            crate::graph::adjacency::build_adjacency(&edges, total_nodes, directed.unwrap())?;
        let agg = AggOp::new(kind, &adj);
        let mut features = Tensor::zeros(total_nodes, dataset.num_features);
        let mut row = 0usize;
        for &i in indices {
            let sample = &dataset.samples[i];
            for v in 0..sample.num_nodes() {
                features.row_mut(row).copy_from_slice(sample.features.row(v));
                row += 1;
            }
        }
        Ok(GraphBatch {
            agg,
            features,
            labels,
            boundaries,
        })
    }

    pub fn num_graphs(&self) -> usize {
        self.labels.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::adjacency::build_adjacency;
    use crate::graph::data::SplitTag;
    use crate::graph::data::GraphSample;
    use crate::nn::adam::{adam_step, AdamState};
    use crate::nn::gradcheck::{gradient_check, DifferentiableLoss, DEFAULT_STEP};
    use crate::nn::loss::{masked_softmax_cross_entropy, softmax_cross_entropy};

    fn random_inputs(n: usize, dim: usize, seed: u64) -> (crate::graph::adjacency::Adjacency, Tensor<f64>, Rng) {
        let mut rng = Rng::new(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.next_bool(0.5) {
                    edges.push((u, v));
                }
            }
        }
        let adj = build_adjacency(&edges, n, false).unwrap();
        let mut x = Tensor::zeros(n, dim);
        for v in x.data_mut() {
            *v = rng.next_normal_f64();
        }
        (adj, x, rng)
    }

    fn small_node_model(kind: AggKind, seed: u64) -> GnnModel<f64> {
        let mut config = GnnModelConfig::node(kind, 3, 3);
        config.hidden_dim = 4;
        config.dropout = 0.0;
        GnnModel::new(config, &mut Rng::new(seed)).unwrap()
    }

    struct NodeModelLoss {
        model: GnnModel<f64>,
        agg: AggOp<f64>,
        x: Tensor<f64>,
        labels: Vec<usize>,
        rows: Vec<usize>,
        rng: Rng,
    }

    impl DifferentiableLoss<f64> for NodeModelLoss {
        fn loss(&mut self) -> crate::error::Result<f64> {
            let (logits, _) = self.model.forward_node_train(&self.agg, &self.x, &mut self.rng)?;
            Ok(masked_softmax_cross_entropy(&logits, &self.labels, &self.rows)?.0)
        }

        fn loss_and_backward(&mut self) -> crate::error::Result<f64> {
            let (logits, ctx) = self.model.forward_node_train(&self.agg, &self.x, &mut self.rng)?;
            let (loss, d_logits) =
                masked_softmax_cross_entropy(&logits, &self.labels, &self.rows)?;
            self.model.backward_node(&self.agg, &ctx, &d_logits)?;
            Ok(loss)
        }

        fn parameters(&mut self) -> Vec<&mut crate::nn::param::Parameter<f64>> {
            self.model.trainable_parameters()
        }
    }

    struct GraphModelLoss {
        model: GnnModel<f64>,
        batch: GraphBatch<f64>,
        rng: Rng,
    }

    impl DifferentiableLoss<f64> for GraphModelLoss {
        fn loss(&mut self) -> crate::error::Result<f64> {
            let (logits, _) = self.model.forward_graph_train(&self.batch, &mut self.rng)?;
            Ok(softmax_cross_entropy(&logits, &self.batch.labels)?.0)
        }

        fn loss_and_backward(&mut self) -> crate::error::Result<f64> {
            let (logits, ctx) = self.model.forward_graph_train(&self.batch, &mut self.rng)?;
            let (loss, d_logits) = softmax_cross_entropy(&logits, &self.batch.labels)?;
            self.model.backward_graph(&self.batch, &ctx, &d_logits)?;
            Ok(loss)
        }

        fn parameters(&mut self) -> Vec<&mut crate::nn::param::Parameter<f64>> {
            self.model.trainable_parameters()
        }
    }

    fn tiny_graph_dataset(seed: u64) -> GraphDataset<f64> {
        let mut rng = Rng::new(seed);
        let mut samples = Vec::new();
        for g in 0..4 {
            let n = 3 + g % 3;
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.next_bool(0.6) {
                        edges.push((u, v));
                    }
                }
            }
            let adj = build_adjacency(&edges, n, false).unwrap();
            let mut features = Tensor::zeros(n, 3);
            for v in features.data_mut() {
                *v = rng.next_normal_f64();
            }
            samples.push(GraphSample {
                adj,
                features,
                label: g % 2,
            });
        }
        GraphDataset::new(samples, 2, 3, vec![SplitTag::Train; 4]).unwrap()
    }

    #[test]
    fn node_model_passes_gradient_check_for_every_kind() {
        for kind in [AggKind::Gcn, AggKind::Sage, AggKind::Gin] {
            let mut model = small_node_model(kind, 17);
            if kind == AggKind::Gin {
                for conv in model.convs_for_tests() {
                    conv.epsilon.as_mut().unwrap().value.set(0, 0, 0.2);
                }
            }
            let (adj, x, mut rng) = random_inputs(7, 3, 23);
            let agg = AggOp::new(kind, &adj);
            let labels: Vec<usize> = (0..7).map(|_| rng.next_below(3)).collect();
            let mut target = NodeModelLoss {
                model,
                agg,
                x,
                labels,
                rows: vec![0, 2, 3, 6],
                rng: Rng::new(0),
            };
            let worst = gradient_check(&mut target, DEFAULT_STEP).unwrap();
            assert!(worst < 1e-4, "kind {kind}: worst {worst}");
        }
    }

    #[test]
    fn graph_model_passes_gradient_check_for_every_kind() {
        let dataset = tiny_graph_dataset(5);
        for kind in [AggKind::Gcn, AggKind::Sage, AggKind::Gin] {
            let mut config = GnnModelConfig::graph(kind, 3, 2);
            config.hidden_dim = 4;
            config.dropout = 0.0;
            let model: GnnModel<f64> = GnnModel::new(config, &mut Rng::new(31)).unwrap();
            let batch = GraphBatch::new(kind, &dataset, &[0, 1, 2, 3]).unwrap();
            let mut target = GraphModelLoss {
                model,
                batch,
                rng: Rng::new(0),
            };
            let worst = gradient_check(&mut target, DEFAULT_STEP).unwrap();
            assert!(worst < 1e-4, "kind {kind}: worst {worst}");
        }
    }

    #[test]
    fn model_without_batch_norm_passes_gradient_check() {
        let mut config = GnnModelConfig::node(AggKind::Gcn, 3, 3);
        config.hidden_dim = 4;
        config.dropout = 0.0;
        config.batch_norm = false;
        let model: GnnModel<f64> = GnnModel::new(config, &mut Rng::new(19)).unwrap();
        let (adj, x, mut rng) = random_inputs(7, 3, 61);
        let agg = AggOp::new(AggKind::Gcn, &adj);
        let labels: Vec<usize> = (0..7).map(|_| rng.next_below(3)).collect();
        let mut target = NodeModelLoss {
            model,
            agg,
            x,
            labels,
            rows: vec![0, 1, 4, 5],
            rng: Rng::new(0),
        };
        let worst = gradient_check(&mut target, DEFAULT_STEP).unwrap();
        assert!(worst < 1e-4, "worst {worst}");
    }

    #[test]
    fn frozen_model_gradients_stay_correct() {
        let dataset = tiny_graph_dataset(8);
        let mut config = GnnModelConfig::graph(AggKind::Gcn, 3, 2);
        config.hidden_dim = 4;
        config.dropout = 0.0;
        let mut model: GnnModel<f64> = GnnModel::new(config, &mut Rng::new(2)).unwrap();
        model.freeze_feature_layers();
        assert_eq!(model.trainable_parameters().len(), 2);
        let batch = GraphBatch::new(AggKind::Gcn, &dataset, &[0, 1, 2, 3]).unwrap();
        let mut target = GraphModelLoss {
            model,
            batch,
            rng: Rng::new(0),
        };
        let worst = gradient_check(&mut target, DEFAULT_STEP).unwrap();
        assert!(worst < 1e-4, "worst {worst}");
    }

    #[test]
    fn batched_eval_matches_individual_eval() {
        let dataset = tiny_graph_dataset(13);
        let mut config = GnnModelConfig::graph(AggKind::Gin, 3, 2);
        config.hidden_dim = 6;
        let model: GnnModel<f64> = GnnModel::new(config, &mut Rng::new(11)).unwrap();
        let all = GraphBatch::new(AggKind::Gin, &dataset, &[0, 1, 2, 3]).unwrap();
        let batched = model.forward_graph_eval(&all).unwrap();
        for g in 0..4 {
            let single = GraphBatch::new(AggKind::Gin, &dataset, &[g]).unwrap();
            let logits = model.forward_graph_eval(&single).unwrap();
            for j in 0..2 {
                let diff = (batched.get(g, j) - logits.get(0, j)).abs();
                assert!(diff < 1e-12, "graph {g} class {j}: diff {diff}");
            }
        }
    }

    #[test]
    fn training_reduces_node_loss() {
        let mut model = small_node_model(AggKind::Gcn, 29);
        let (adj, x, mut rng) = random_inputs(12, 3, 37);
        let agg = AggOp::new(AggKind::Gcn, &adj);
        let labels: Vec<usize> = (0..12).map(|_| rng.next_below(3)).collect();
        let rows: Vec<usize> = (0..12).collect();
        let mut state = AdamState::new();
        let mut train_rng = Rng::new(4);
        let mut first = None;
        let mut last = 0.0;
        for _ in 0..300 {
            let (logits, ctx) = model.forward_node_train(&agg, &x, &mut train_rng).unwrap();
            let (loss, d_logits) =
                masked_softmax_cross_entropy(&logits, &labels, &rows).unwrap();
            model.backward_node(&agg, &ctx, &d_logits).unwrap();
            adam_step(&mut model.trainable_parameters(), &mut state, 0.01);
            first.get_or_insert(loss);
            last = loss;
        }
        assert!(
            last < 0.5 * first.unwrap(),
            "loss went from {} to {last}",
            first.unwrap()
        );
    }

    #[test]
    fn reinit_output_layer_changes_only_the_head() {
        let mut model = small_node_model(AggKind::Gcn, 3);
        let before: Vec<Vec<f64>> = model.state_slices().iter().map(|s| s.to_vec()).collect();
        model.reinit_output_layer(5, &mut Rng::new(99)).unwrap();
        assert_eq!(model.config.out_dim, 5);
        let after = model.state_slices();
        // Layers 0 and 1 keep their weights; the final layer is new.
        assert_eq!(before[0], after[0].to_vec());
        assert_eq!(before[1], after[1].to_vec());
        assert_ne!(before[2].len(), after[2].len());

        let (adj, x, _) = random_inputs(6, 3, 41);
        let agg = AggOp::new(AggKind::Gcn, &adj);
        let logits = model.forward_node_eval(&agg, &x).unwrap();
        assert_eq!(logits.cols(), 5);
    }

    #[test]
    fn frozen_training_leaves_feature_layers_untouched() {
        let dataset = tiny_graph_dataset(21);
        let mut config = GnnModelConfig::graph(AggKind::Gcn, 3, 2);
        config.hidden_dim = 4;
        let mut model: GnnModel<f64> = GnnModel::new(config, &mut Rng::new(7)).unwrap();
        model.freeze_feature_layers();
        let before: Vec<Vec<f64>> = model.state_slices().iter().map(|s| s.to_vec()).collect();
        let batch = GraphBatch::new(AggKind::Gcn, &dataset, &[0, 1, 2, 3]).unwrap();
        let mut state = AdamState::new();
        let mut rng = Rng::new(0);
        for _ in 0..5 {
            let (logits, ctx) = model.forward_graph_train(&batch, &mut rng).unwrap();
            let (_, d_logits) = softmax_cross_entropy(&logits, &batch.labels).unwrap();
            model.backward_graph(&batch, &ctx, &d_logits).unwrap();
            adam_step(&mut model.trainable_parameters(), &mut state, 0.01);
        }
        let after = model.state_slices();
        // Three conv weights and four stats per norm stay identical; only the
        // final two slices (head weight and bias) move.
        let total = after.len();
        for (i, (b, a)) in before.iter().zip(after.iter()).enumerate() {
            if i + 2 < total {
                assert_eq!(b, &a.to_vec(), "slice {i} should be frozen");
            } else {
                assert_ne!(b, &a.to_vec(), "slice {i} should have trained");
            }
        }
    }

    #[test]
    fn mean_pool_averages_and_distributes() {
        let h = Tensor::from_vec(5, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let boundaries = vec![0, 2, 5];
        let pooled = mean_pool(&h, &boundaries).unwrap();
        assert_eq!(pooled.row(0), &[2.0, 3.0]);
        assert_eq!(pooled.row(1), &[7.0, 8.0]);

        let d_pooled = Tensor::from_vec(2, 2, vec![2.0, 4.0, 3.0, 6.0]);
        let d_h = mean_pool_backward(&d_pooled, &boundaries);
        assert_eq!(d_h.row(0), &[1.0, 2.0]);
        assert_eq!(d_h.row(1), &[1.0, 2.0]);
        assert_eq!(d_h.row(2), &[1.0, 2.0]);
        assert_eq!(d_h.row(4), &[1.0, 2.0]);
    }

    #[test]
    fn mean_pool_rejects_empty_graphs_and_bad_tails() {
        let h: Tensor<f64> = Tensor::zeros(4, 2);
        assert!(mean_pool(&h, &[0, 2, 2, 4]).is_err());
        assert!(mean_pool(&h, &[0, 3]).is_err());
        assert!(mean_pool(&h, &[1, 4]).is_err());
    }

    #[test]
    fn batch_rejects_bad_indices() {
        let dataset = tiny_graph_dataset(2);
        assert!(GraphBatch::<f64>::new(AggKind::Gcn, &dataset, &[]).is_err());
        assert!(GraphBatch::<f64>::new(AggKind::Gcn, &dataset, &[9]).is_err());
    }
}
