//! Graph embeddings over temporal-path corpora: skip-gram with negative
//! sampling where each path is a sentence, plus a per-graph token trained to
//! predict every token of its own paths (PV-DBOW). The trained graph-token
//! vector is the graph's embedding.
//!
//! Training is single-threaded and iterates documents in canonical
//! (graph_id-sorted) order, so a fixed seed gives bit-identical matrices
//! regardless of input document order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemKind {
    Graph,
    WeightVector,
    HiddenActivation,
}

/// Labeled vectors queried by kNN. Row-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct EmbeddingSpace<T: Real> {
    pub dim: usize,
    pub vectors: Vec<T>,
    pub labels: Vec<u8>,
    pub metric: Metric,
    pub item_kind: ItemKind,
}

impl<T: Real> EmbeddingSpace<T> {
    pub fn from_rows(rows: Vec<Vec<T>>, labels: Vec<u8>, metric: Metric, item_kind: ItemKind) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let mut vectors = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            debug_assert_eq!(r.len(), dim);
            vectors.extend(r);
        }
        Self { dim, vectors, labels, metric, item_kind }
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.vectors.len() != self.rows() * self.dim {
            return Err(Error::Malformed {
                what: "embedding space",
                detail: format!("{} values for {} rows of dim {}", self.vectors.len(), self.rows(), self.dim),
            });
        }
        if self.vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Malformed { what: "embedding space", detail: "non-finite entry".into() });
        }
        Ok(())
    }

    /// CSV form: one row per item, vector entries then the label last.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for i in 0..self.rows() {
            for v in self.row(i) {
                out.push_str(&format!("{}", v.to_f64_c()));
                out.push(',');
            }
            out.push_str(&format!("{}\n", self.labels[i]));
        }
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_csv(path: &Path, metric: Metric, item_kind: ItemKind) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut labels = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 2 {
                return Err(Error::Malformed { what: "embedding csv", detail: format!("line {}", ln + 1) });
            }
            let label: u8 = fields[fields.len() - 1]
                .trim()
                .parse()
                .map_err(|_| Error::Malformed { what: "embedding csv", detail: format!("label on line {}", ln + 1) })?;
            let mut row = Vec::with_capacity(fields.len() - 1);
            for f in &fields[..fields.len() - 1] {
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::Malformed { what: "embedding csv", detail: format!("value on line {}", ln + 1) })?;
                row.push(T::from_f64_c(v));
            }
            rows.push(row);
            labels.push(label);
        }
        let space = Self::from_rows(rows, labels, metric, item_kind);
        space.validate()?;
        Ok(space)
    }
}

/// One stimulus' paths, keyed by its graph id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub graph_id: String,
    pub label: u8,
    pub paths: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PathCorpus {
    pub documents: Vec<GraphDoc>,
}

impl PathCorpus {
    /// JSONL: one GraphDoc per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for d in &self.documents {
            out.push_str(&serde_json::to_string(d).expect("doc serializes"));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut documents = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: GraphDoc = serde_json::from_str(line)
                .map_err(|e| Error::Malformed { what: "corpus jsonl", detail: format!("line {}: {e}", ln + 1) })?;
            documents.push(doc);
        }
        Ok(Self { documents })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub lr_min: f64,
    pub seed: u64,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self { dim: 64, window: 5, negatives: 5, epochs: 5, lr0: 0.025, lr_min: 1e-4, seed: 1 }
    }
}

pub struct TrainedEmbeddings<T: Real> {
    pub space: EmbeddingSpace<T>,
    /// Mean negative-sampling loss per epoch.
    pub epoch_losses: Vec<f64>,
}

const NEG_TABLE_SIZE: usize = 1 << 20;
const NEG_POWER: f64 = 0.75;

/// Train graph embeddings over the corpus. Documents are canonicalized by
/// graph_id; the returned space has one row per document in that order.
pub fn train_graph_embeddings<T: Real>(corpus: &PathCorpus, params: &EmbedParams) -> Result<TrainedEmbeddings<T>> {
    let mut docs: Vec<&GraphDoc> = corpus.documents.iter().collect();
    docs.sort_by(|a, b| a.graph_id.cmp(&b.graph_id));

    // dense node vocabulary over all path tokens
    let mut vocab_of_node: HashMap<u32, u32> = HashMap::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut encoded: Vec<Vec<Vec<u32>>> = Vec::with_capacity(docs.len());
    for doc in &docs {
        let mut paths = Vec::with_capacity(doc.paths.len());
        for p in &doc.paths {
            if p.len() < 2 {
                return Err(Error::Malformed {
                    what: "path corpus",
                    detail: format!("graph {} has a path shorter than 2", doc.graph_id),
                });
            }
            let mut enc = Vec::with_capacity(p.len());
            for &node in p {
                let next = vocab_of_node.len() as u32;
                let idx = *vocab_of_node.entry(node).or_insert(next);
                if idx as usize == counts.len() {
                    counts.push(0);
                }
                counts[idx as usize] += 1;
                enc.push(idx);
            }
            paths.push(enc);
        }
        encoded.push(paths);
    }
    let n_vocab = counts.len();
    if n_vocab == 0 {
        return Err(Error::EmptyVocabulary);
    }

    let neg_table = build_negative_table(&counts);

    // input rows: node tokens then graph tokens; output rows: node tokens only
    let dim = params.dim;
    let n_graphs = docs.len();
    let mut input: Vec<T> = {
        let mut rng = stream_rng(params.seed, streams::EMBED_INIT);
        let half = 0.5 / dim as f64;
        (0..(n_vocab + n_graphs) * dim)
            .map(|_| T::from_f64_c(rng.gen_range(-half..half)))
            .collect()
    };
    let mut output: Vec<T> = vec![T::zero(); n_vocab * dim];

    // fixed pair budget for the linear lr decay
    let mut pairs_per_epoch: u64 = 0;
    for paths in &encoded {
        for p in paths {
            let len = p.len();
            for i in 0..len {
                let lo = i.saturating_sub(params.window);
                let hi = (i + params.window + 1).min(len);
                pairs_per_epoch += (hi - lo - 1) as u64; // word-word
            }
            pairs_per_epoch += len as u64; // graph-word
        }
    }
    let total_pairs = (pairs_per_epoch * params.epochs as u64).max(1);

    let mut rng = stream_rng(params.seed, streams::EMBED_NEGATIVES);
    let mut scratch: Vec<T> = vec![T::zero(); dim];
    let mut pairs_done: u64 = 0;
    let mut epoch_losses = Vec::with_capacity(params.epochs);

    for _epoch in 0..params.epochs {
        let mut loss_sum = 0.0f64;
        let mut loss_n = 0u64;
        for (doc_idx, paths) in encoded.iter().enumerate() {
            let graph_row = n_vocab + doc_idx;
            for p in paths {
                let len = p.len();
                for i in 0..len {
                    let lr = decayed_lr(params, pairs_done, total_pairs);
                    let lo = i.saturating_sub(params.window);
                    let hi = (i + params.window + 1).min(len);
                    for j in lo..hi {
                        if j == i {
                            continue;
                        }
                        loss_sum += sgns_update(
                            &mut input,
                            &mut output,
                            dim,
                            p[i] as usize,
                            p[j] as usize,
                            params.negatives,
                            &neg_table,
                            &mut rng,
                            T::from_f64_c(lr),
                            &mut scratch,
                        );
                        loss_n += 1;
                    }
                    // the owning graph token predicts every path token
                    loss_sum += sgns_update(
                        &mut input,
                        &mut output,
                        dim,
                        graph_row,
                        p[i] as usize,
                        params.negatives,
                        &neg_table,
                        &mut rng,
                        T::from_f64_c(lr),
                        &mut scratch,
                    );
                    loss_n += 1;
                    pairs_done += (hi - lo - 1) as u64 + 1;
                }
            }
        }
        epoch_losses.push(if loss_n == 0 { 0.0 } else { loss_sum / loss_n as f64 });
    }

    let rows: Vec<Vec<T>> = (0..n_graphs)
        .map(|d| input[(n_vocab + d) * dim..(n_vocab + d + 1) * dim].to_vec())
        .collect();
    let labels = docs.iter().map(|d| d.label).collect();
    let space = EmbeddingSpace::from_rows(rows, labels, Metric::Cosine, ItemKind::Graph);
    space.validate()?;
    Ok(TrainedEmbeddings { space, epoch_losses })
}

fn decayed_lr(params: &EmbedParams, done: u64, total: u64) -> f64 {
    let remaining = 1.0 - done as f64 / total as f64;
    (params.lr0 * remaining).max(params.lr_min)
}

fn build_negative_table(counts: &[u64]) -> Vec<u32> {
    let total: f64 = counts.iter().map(|&c| (c as f64).powf(NEG_POWER)).sum();
    let mut table = vec![0u32; NEG_TABLE_SIZE];
    let mut idx = 0usize;
    let mut cum = (counts[0] as f64).powf(NEG_POWER) / total;
    for (slot, entry) in table.iter_mut().enumerate() {
        *entry = idx as u32;
        if (slot as f64 + 1.0) / NEG_TABLE_SIZE as f64 > cum && idx + 1 < counts.len() {
            idx += 1;
            cum += (counts[idx] as f64).powf(NEG_POWER) / total;
        }
    }
    table
}

fn sigmoid<T: Real>(x: T) -> T {
    let clamp = T::from_f64_c(30.0);
    let x = x.min(clamp).max(-clamp);
    T::one() / (T::one() + (-x).exp())
}

/// One SGNS step for (center -> positive target) plus negative samples.
/// Returns the sample's negative-sampling loss.
#[allow(clippy::too_many_arguments)]
fn sgns_update<T: Real, R: Rng>(
    input: &mut [T],
    output: &mut [T],
    dim: usize,
    center_row: usize,
    positive: usize,
    negatives: usize,
    neg_table: &[u32],
    rng: &mut R,
    lr: T,
    scratch: &mut [T],
) -> f64 {
    for s in scratch.iter_mut() {
        *s = T::zero();
    }
    let mut loss = 0.0f64;
    let center = center_row * dim;
    for sample in 0..=negatives {
        let (target, label) = if sample == 0 {
            (positive, T::one())
        } else {
            let mut t = positive;
            for _ in 0..8 {
                t = neg_table[rng.gen_range(0..neg_table.len())] as usize;
                if t != positive {
                    break;
                }
            }
            if t == positive {
                continue;
            }
            (t, T::zero())
        };
        let out = target * dim;
        let mut dot = T::zero();
        for d in 0..dim {
            dot += input[center + d] * output[out + d];
        }
        let f = sigmoid(dot);
        let g = (label - f) * lr;
        let p = f.to_f64_c().clamp(1e-12, 1.0 - 1e-12);
        loss -= if label == T::one() { p.ln() } else { (1.0 - p).ln() };
        for d in 0..dim {
            scratch[d] += g * output[out + d];
            output[out + d] += g * input[center + d];
        }
    }
    for d in 0..dim {
        input[center + d] += scratch[d];
    }
    loss
}
