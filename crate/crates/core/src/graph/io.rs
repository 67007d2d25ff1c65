//! On-disk persistence for node graphs and graph datasets.
//!
//! Both formats are directories. Metadata is JSON, integer payloads are CSV,
//! and feature matrices are raw row-major 64-bit little-endian floats, so an
//! f64 round trip is bit-exact.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::adjacency::build_adjacency;
use crate::graph::data::{GraphDataset, GraphSample, NodeGraph, SplitTag};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeMeta {
    version: u32,
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
    directed: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetMeta {
    version: u32,
    num_graphs: usize,
    num_features: usize,
    num_classes: usize,
    directed: bool,
    /// Cumulative node counts into features.bin, length num_graphs + 1.
    row_offsets: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    label: usize,
    split: String,
}

pub(crate) fn format_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

fn check_version(path: &Path, found: u32) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.display().to_string(),
            found,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

fn write_features<S: Scalar>(path: &Path, features: &[&Tensor<S>]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for t in features {
        for &v in t.data() {
            w.write_all(&v.to_f64_exact().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_features<S: Scalar>(path: &Path, rows: usize, cols: usize) -> Result<Tensor<S>> {
    let bytes = fs::read(path)?;
    let expected = rows * cols * 8;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!("expected {expected} bytes for {rows}x{cols} floats, found {}", bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| S::from_f64_lossy(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect();
    Ok(Tensor::from_vec(rows, cols, data))
}

pub(crate) fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a two-column CSV with the given header; returns (col0, col1) strings per row.
fn read_csv2(path: &Path, header: &str) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((_, h)) => {
            return Err(format_err(path, format!("expected header {header:?}, found {h:?}")))
        }
        None => return Err(format_err(path, "empty file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let a = parts.next().unwrap_or("").trim().to_string();
        let b = parts
            .next()
            .ok_or_else(|| format_err(path, format!("line {}: expected two columns", i + 1)))?
            .trim()
            .to_string();
        rows.push((a, b));
    }
    Ok(rows)
}

fn parse_index(path: &Path, field: &str, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| format_err(path, format!("invalid {field} {s:?}")))
}

/// Fills a per-node column from (node, value) rows, requiring full coverage.
fn scatter_rows<T: Clone>(
    path: &Path,
    num_nodes: usize,
    rows: Vec<(usize, T)>,
) -> Result<Vec<T>> {
    let mut out: Vec<Option<T>> = vec![None; num_nodes];
    for (node, v) in rows {
        if node >= num_nodes {
            return Err(format_err(path, format!("node {node} out of range")));
        }
        if out[node].is_some() {
            return Err(format_err(path, format!("duplicate entry for node {node}")));
        }
        out[node] = Some(v);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| format_err(path, format!("missing entry for node {i}"))))
        .collect()
}

pub fn save_node_graph<S: Scalar>(graph: &NodeGraph<S>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = NodeMeta {
        version: FORMAT_VERSION,
        num_nodes: graph.num_nodes(),
        num_features: graph.num_features(),
        num_classes: graph.num_classes,
        directed: graph.adj.is_directed(),
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    write_csv(
        &dir.join("edges.csv"),
        "src,dst",
        graph.adj.edge_list().into_iter().map(|(u, v)| format!("{u},{v}")),
    )?;
    write_features(&dir.join("features.bin"), &[&graph.features])?;
    write_csv(
        &dir.join("labels.csv"),
        "node,label",
        graph.labels.iter().enumerate().map(|(i, l)| format!("{i},{l}")),
    )?;
    write_csv(
        &dir.join("splits.csv"),
        "node,tag",
        graph.split.iter().enumerate().map(|(i, t)| format!("{i},{t}")),
    )?;
    Ok(())
}

pub fn load_node_graph<S: Scalar>(dir: &Path) -> Result<NodeGraph<S>> {
    let meta_path = dir.join("meta.json");
    let meta: NodeMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)
        .map_err(|e| format_err(&meta_path, e.to_string()))?;
    check_version(&meta_path, meta.version)?;

    let edges_path = dir.join("edges.csv");
    let edges = read_csv2(&edges_path, "src,dst")?
        .into_iter()
        .map(|(a, b)| {
            Ok((
                parse_index(&edges_path, "src", &a)?,
                parse_index(&edges_path, "dst", &b)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let adj = build_adjacency(&edges, meta.num_nodes, meta.directed)?;

    let features = read_features(&dir.join("features.bin"), meta.num_nodes, meta.num_features)?;

    let labels_path = dir.join("labels.csv");
    let label_rows = read_csv2(&labels_path, "node,label")?
        .into_iter()
        .map(|(a, b)| {
            Ok((
                parse_index(&labels_path, "node", &a)?,
                parse_index(&labels_path, "label", &b)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = scatter_rows(&labels_path, meta.num_nodes, label_rows)?;

    let splits_path = dir.join("splits.csv");
    let split_rows = read_csv2(&splits_path, "node,tag")?
        .into_iter()
        .map(|(a, b)| Ok((parse_index(&splits_path, "node", &a)?, SplitTag::parse(&b)?)))
        .collect::<Result<Vec<_>>>()?;
    let split = scatter_rows(&splits_path, meta.num_nodes, split_rows)?;

    NodeGraph::new(adj, features, labels, meta.num_classes, split)
}

pub fn save_graph_dataset<S: Scalar>(dataset: &GraphDataset<S>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut row_offsets = Vec::with_capacity(dataset.len() + 1);
    row_offsets.push(0usize);
    for s in &dataset.samples {
        row_offsets.push(row_offsets.last().unwrap() + s.num_nodes());
    }
    let directed = dataset
        .samples
        .first()
        .map(|s| s.adj.is_directed())
        .unwrap_or(false);
    let meta = DatasetMeta {
        version: FORMAT_VERSION,
        num_graphs: dataset.len(),
        num_features: dataset.num_features,
        num_classes: dataset.num_classes,
        directed,
        row_offsets,
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;

    let mut w = BufWriter::new(fs::File::create(dir.join("graphs.jsonl"))?);
    for (s, &tag) in dataset.samples.iter().zip(&dataset.split) {
        let record = GraphRecord {
            num_nodes: s.num_nodes(),
            edges: s.adj.edge_list(),
            label: s.label,
            split: tag.as_str().to_string(),
        };
        writeln!(w, "{}", serde_json::to_string(&record)?)?;
    }
    w.flush()?;

    let feature_refs: Vec<&Tensor<S>> = dataset.samples.iter().map(|s| &s.features).collect();
    write_features(&dir.join("features.bin"), &feature_refs)
}

pub fn load_graph_dataset<S: Scalar>(dir: &Path) -> Result<GraphDataset<S>> {
    let meta_path = dir.join("meta.json");
    let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)
        .map_err(|e| format_err(&meta_path, e.to_string()))?;
    check_version(&meta_path, meta.version)?;
    if meta.row_offsets.len() != meta.num_graphs + 1 {
        return Err(format_err(
            &meta_path,
            format!(
                "row_offsets has {} entries, expected {}",
                meta.row_offsets.len(),
                meta.num_graphs + 1
            ),
        ));
    }

    let total_rows = *meta.row_offsets.last().unwrap_or(&0);
    let all_features: Tensor<S> =
        read_features(&dir.join("features.bin"), total_rows, meta.num_features)?;

    let graphs_path = dir.join("graphs.jsonl");
    let text = fs::read_to_string(&graphs_path)?;
    let mut samples = Vec::with_capacity(meta.num_graphs);
    let mut split = Vec::with_capacity(meta.num_graphs);
    for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let record: GraphRecord = serde_json::from_str(line)
            .map_err(|e| format_err(&graphs_path, format!("record {i}: {e}")))?;
        if i >= meta.num_graphs {
            return Err(format_err(&graphs_path, "more records than meta declares"));
        }
        let declared = meta.row_offsets[i + 1] - meta.row_offsets[i];
        if record.num_nodes != declared {
            return Err(format_err(
                &graphs_path,
                format!("record {i}: {} nodes but meta declares {declared}", record.num_nodes),
            ));
        }
        let adj = build_adjacency(&record.edges, record.num_nodes, meta.directed)?;
        let mut features = Tensor::zeros(record.num_nodes, meta.num_features);
        for r in 0..record.num_nodes {
            features
                .row_mut(r)
                .copy_from_slice(all_features.row(meta.row_offsets[i] + r));
        }
        samples.push(GraphSample {
            adj,
            features,
            label: record.label,
        });
        split.push(SplitTag::parse(&record.split)?);
    }
    if samples.len() != meta.num_graphs {
        return Err(format_err(
            &graphs_path,
            format!("{} records but meta declares {}", samples.len(), meta.num_graphs),
        ));
    }
    GraphDataset::new(samples, meta.num_classes, meta.num_features, split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn sample_node_graph() -> NodeGraph<f64> {
        let adj = build_adjacency(&[(0, 1), (1, 2), (0, 3)], 4, false).unwrap();
        let mut features = Tensor::zeros(4, 3);
        let mut rng = Rng::new(2);
        for v in features.data_mut() {
            *v = rng.next_normal_f64();
        }
        NodeGraph::new(
            adj,
            features,
            vec![0, 1, 1, 0],
            2,
            vec![SplitTag::Train, SplitTag::Train, SplitTag::Valid, SplitTag::Test],
        )
        .unwrap()
    }

    fn sample_dataset() -> GraphDataset<f64> {
        let mut rng = Rng::new(3);
        let mut samples = Vec::new();
        for i in 0..4 {
            let adj = build_adjacency(&[(0, 1), (1, 2)], 3 + i % 2, false).unwrap();
            let mut features = Tensor::zeros(3 + i % 2, 2);
            for v in features.data_mut() {
                *v = rng.next_normal_f64();
            }
            samples.push(GraphSample {
                adj,
                features,
                label: i % 2,
            });
        }
        GraphDataset::new(
            samples,
            2,
            2,
            vec![SplitTag::Train, SplitTag::Train, SplitTag::Valid, SplitTag::Test],
        )
        .unwrap()
    }

    #[test]
    fn node_graph_round_trip_is_identity() {
        let g = sample_node_graph();
        let dir = tempfile::tempdir().unwrap();
        save_node_graph(&g, dir.path()).unwrap();
        let loaded: NodeGraph<f64> = load_node_graph(dir.path()).unwrap();
        assert_eq!(g, loaded);
    }

    #[test]
    fn graph_dataset_round_trip_is_identity() {
        let d = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        save_graph_dataset(&d, dir.path()).unwrap();
        let loaded: GraphDataset<f64> = load_graph_dataset(dir.path()).unwrap();
        assert_eq!(d, loaded);
    }

    #[test]
    fn truncated_features_is_format_error() {
        let g = sample_node_graph();
        let dir = tempfile::tempdir().unwrap();
        save_node_graph(&g, dir.path()).unwrap();
        let path = dir.path().join("features.bin");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        match load_node_graph::<f64>(dir.path()) {
            Err(Error::Format { .. }) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn version_mismatch_is_reported() {
        let g = sample_node_graph();
        let dir = tempfile::tempdir().unwrap();
        save_node_graph(&g, dir.path()).unwrap();
        let meta_path = dir.path().join("meta.json");
        let text = fs::read_to_string(&meta_path)
            .unwrap()
            .replace("\"version\": 1", "\"version\": 9");
        fs::write(&meta_path, text).unwrap();
        match load_node_graph::<f64>(dir.path()) {
            Err(Error::UnsupportedVersion { found: 9, .. }) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn bad_header_is_format_error() {
        let g = sample_node_graph();
        let dir = tempfile::tempdir().unwrap();
        save_node_graph(&g, dir.path()).unwrap();
        fs::write(dir.path().join("labels.csv"), "wrong,header\n0,0\n").unwrap();
        assert!(load_node_graph::<f64>(dir.path()).is_err());
    }
}
