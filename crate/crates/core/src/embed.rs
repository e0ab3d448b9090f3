//! node2vec-style embeddings: second-order biased random walks over the
//! undirected projection, then skip-gram with negative sampling (SGNS).
//!
//! Walk transition weights from `cur` (having arrived from `prev`) to a
//! neighbor `x` are `1/p` if `x == prev`, `1` if `x` is adjacent to `prev`,
//! and `1/q` otherwise. The first step of a walk is uniform.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{UndirectedAdjacency, UserGraph};
use crate::scalar::{logistic, Scalar};
use crate::seed;
use crate::train::{kfold_cv, labeled_users, CvConfig, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub p: f64,
    pub q: f64,
    pub window: usize,
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub min_lr: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 20,
            p: 1.0,
            q: 1.0,
            window: 10,
            dim: 128,
            epochs: 50,
            negatives: 5,
            initial_lr: 0.025,
            min_lr: 0.0001,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("walks_per_node", self.walks_per_node),
            ("walk_length", self.walk_length),
            ("window", self.window),
            ("dim", self.dim),
            ("epochs", self.epochs),
            ("negatives", self.negatives),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config {
                    key: key.into(),
                    message: "must be positive".into(),
                });
            }
        }
        for (key, v) in [("p", self.p), ("q", self.q), ("initial_lr", self.initial_lr)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config {
                    key: key.into(),
                    message: format!("must be a positive number, got {v}"),
                });
            }
        }
        Ok(())
    }
}

fn next_step(adj: &UndirectedAdjacency, prev: Option<u32>, cur: u32, p: f64, q: f64, rng: &mut impl Rng) -> Option<u32> {
    let nbrs = adj.neighbors(cur as usize);
    if nbrs.is_empty() {
        return None;
    }
    let uniform = p == 1.0 && q == 1.0;
    match prev {
        Some(prev) if !uniform => {
            let weights: Vec<f64> = nbrs
                .iter()
                .map(|&x| {
                    if x == prev {
                        1.0 / p
                    } else if adj.has_edge(prev as usize, x as usize) {
                        1.0
                    } else {
                        1.0 / q
                    }
                })
                .collect();
            let total: f64 = weights.iter().sum();
            let mut r = rng.random::<f64>() * total;
            for (&x, w) in nbrs.iter().zip(&weights) {
                if r < *w {
                    return Some(x);
                }
                r -= w;
            }
            nbrs.last().copied()
        }
        _ => Some(nbrs[rng.random_range(0..nbrs.len())]),
    }
}

/// `walks_per_node` walks from every node, ordered round by round (all
/// nodes' first walk, then all second walks, ...). Each walk draws from its
/// own stream keyed by `(seed, node, round)`.
pub fn generate_walks(g: &UserGraph, cfg: &WalkConfig) -> Result<Vec<Vec<u32>>> {
    if g.is_empty() {
        return Err(Error::EmptyInput("graph has no nodes"));
    }
    cfg.validate()?;
    let adj = g.undirected();
    let n = g.node_count();
    Ok((0..cfg.walks_per_node * n)
        .into_par_iter()
        .map(|idx| {
            let (round, start) = (idx / n, idx % n);
            let mut rng = seed::rng_indexed(cfg.seed, "walk", &[start as u64, round as u64]);
            let mut walk = Vec::with_capacity(cfg.walk_length);
            walk.push(start as u32);
            let mut prev = None;
            while walk.len() < cfg.walk_length {
                let cur = *walk.last().expect("walk is non-empty");
                match next_step(&adj, prev, cur, cfg.p, cfg.q, &mut rng) {
                    Some(x) => {
                        prev = Some(cur);
                        walk.push(x);
                    }
                    None => break,
                }
            }
            walk
        })
        .collect())
}

/// One row of length `dim` per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, u: usize) -> &[T] {
        &self.data[u * self.dim..(u + 1) * self.dim]
    }

    pub fn cosine(&self, a: usize, b: usize) -> T {
        let (x, y) = (self.row(a), self.row(b));
        let dot: T = x.iter().zip(y).map(|(&p, &q)| p * q).sum();
        let nx: T = x.iter().map(|&p| p * p).sum::<T>().sqrt();
        let ny: T = y.iter().map(|&q| q * q).sum::<T>().sqrt();
        if nx == T::zero() || ny == T::zero() {
            T::zero()
        } else {
            dot / (nx * ny)
        }
    }

    /// `user_id,e0..e{dim-1}` with ids taken from `g`.
    pub fn write_csv<W: Write>(&self, g: &UserGraph, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["user_id".to_string()];
        header.extend((0..self.dim).map(|i| format!("e{i}")));
        wtr.write_record(&header).map_err(|e| Error::Format(e.to_string()))?;
        for u in 0..self.len() {
            let mut rec = vec![g.id(u).to_owned()];
            rec.extend(self.row(u).iter().map(|v| v.to_string()));
            wtr.write_record(&rec).map_err(|e| Error::Format(e.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::io("<embeddings>", e))
    }
}

/// Trains SGNS over `walks` for nodes `0..node_count`. Single-threaded with
/// a fixed update order, so the result depends only on the inputs and seed.
pub fn train_skipgram<T: Scalar>(walks: &[Vec<u32>], node_count: usize, cfg: &WalkConfig) -> Result<EmbeddingTable<T>> {
    cfg.validate()?;
    if walks.is_empty() || node_count == 0 {
        return Err(Error::EmptyInput("no walks to train on"));
    }
    let dim = cfg.dim;
    let mut rng = seed::rng(cfg.seed, "sgns");
    let half = 0.5 / dim as f64;
    let mut input: Vec<T> = (0..node_count * dim)
        .map(|_| T::lit(rng.random::<f64>() * 2.0 * half - half))
        .collect();
    let mut output: Vec<T> = vec![T::zero(); node_count * dim];

    let mut freq = vec![0f64; node_count];
    for w in walks {
        for &v in w {
            let slot = freq.get_mut(v as usize).ok_or_else(|| Error::InvalidValue(format!("walk visits node {v} beyond {node_count}")))?;
            *slot += 1.0;
        }
    }
    let noise = WeightedIndex::new(freq.iter().map(|f| f.powf(0.75))).map_err(|e| Error::InvalidValue(e.to_string()))?;

    let total_positions = (walks.iter().map(Vec::len).sum::<usize>() * cfg.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut grad = vec![T::zero(); dim];
    for _ in 0..cfg.epochs {
        for walk in walks {
            for (i, &center) in walk.iter().enumerate() {
                let progress = processed as f64 / total_positions;
                let lr = T::lit((cfg.initial_lr - (cfg.initial_lr - cfg.min_lr) * progress).max(cfg.min_lr));
                processed += 1;
                let reach = cfg.window - rng.random_range(0..cfg.window);
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(walk.len() - 1);
                for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let ctx = context as usize * dim;
                    grad.iter_mut().for_each(|g| *g = T::zero());
                    for d in 0..=cfg.negatives {
                        let (target, label) = if d == 0 {
                            (center as usize, T::one())
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == center as usize {
                                continue;
                            }
                            (t, T::zero())
                        };
                        let out = target * dim;
                        let dot: T = (0..dim).map(|k| input[ctx + k] * output[out + k]).sum();
                        let g = (label - logistic(dot)) * lr;
                        for k in 0..dim {
                            grad[k] += g * output[out + k];
                            output[out + k] += g * input[ctx + k];
                        }
                    }
                    for k in 0..dim {
                        input[ctx + k] += grad[k];
                    }
                }
            }
        }
    }
    Ok(EmbeddingTable { dim, data: input })
}

/// Walks plus SGNS on `g`.
pub fn embed_graph<T: Scalar>(g: &UserGraph, cfg: &WalkConfig) -> Result<EmbeddingTable<T>> {
    let walks = generate_walks(g, cfg)?;
    train_skipgram(&walks, g.node_count(), cfg)
}

/// Embeds the largest component and cross-validates logistic regression on
/// the labeled users' vectors.
pub fn embed_and_classify(dataset: &Dataset, cfg: &WalkConfig, cv: &CvConfig) -> Result<EvalReport> {
    let lcc = dataset.largest_component()?;
    let (nodes, y) = labeled_users(&lcc);
    let table = embed_graph::<f32>(&lcc.graph, cfg)?;
    let x: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&u| table.row(u).iter().map(|&v| f64::from(v)).collect())
        .collect();
    Ok(kfold_cv(&x, &y, "Node2Vec", cv)?
        .with_hyperparameter("walk", cfg)
        .with_hyperparameter("lcc_nodes", lcc.graph.node_count()))
}
