//! Seeded synthetic benchmark: a preferential-attachment follower graph with
//! a planted hateful class, homophilous rewiring, and class-conditional Beta
//! post scores.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label, PostScore, UserLabel};
use crate::error::{Error, Result};
use crate::graph::UserGraph;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    /// Edges added per new node.
    pub attach_m: usize,
    pub hate_fraction: f64,
    /// Probability that an edge is re-targeted to a node of its source's class.
    pub homophily: f64,
    /// Inclusive range of posts per user.
    pub posts_per_user: (usize, usize),
    /// Beta `(alpha, beta)` of hateful users' post scores.
    pub score_dist_hateful: (f64, f64),
    pub score_dist_benign: (f64, f64),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 2000,
            attach_m: 3,
            hate_fraction: 0.25,
            homophily: 0.8,
            posts_per_user: (5, 50),
            score_dist_hateful: (5.0, 5.0),
            score_dist_benign: (2.0, 8.0),
            seed: 0,
        }
    }
}

const REWIRE_RETRIES: usize = 10;

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_owned(),
        message: message.into(),
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.attach_m < 1 {
            return Err(config_err("attach_m", "must be at least 1"));
        }
        if self.n_users <= self.attach_m {
            return Err(config_err("n_users", "must exceed attach_m"));
        }
        if !(self.hate_fraction > 0.0 && self.hate_fraction < 1.0) {
            return Err(config_err("hate_fraction", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.homophily) {
            return Err(config_err("homophily", "must lie in [0, 1]"));
        }
        let (lo, hi) = self.posts_per_user;
        if lo > hi {
            return Err(config_err("posts_per_user", "minimum exceeds maximum"));
        }
        for (key, (a, b)) in [
            ("score_dist_hateful", self.score_dist_hateful),
            ("score_dist_benign", self.score_dist_benign),
        ] {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(config_err(key, "Beta parameters must be positive"));
            }
        }
        Ok(())
    }

    /// Parses a JSON object; missing keys take defaults, unknown or
    /// ill-typed keys are reported by name.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg = crate::config::overlay_json(&SynthConfig::default(), text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Zero-padded ids so lexicographic order equals creation order.
pub fn user_ids(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("u{i:0width$}")).collect()
}

/// Exactly `round(n * hate_fraction)` hateful users (at least one), chosen by
/// a seeded shuffle. Index `i` is user `i`.
pub fn assign_classes(cfg: &SynthConfig) -> Vec<bool> {
    let n = cfg.n_users;
    let hateful = ((n as f64 * cfg.hate_fraction).round() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(cfg.seed, "classes"));
    let mut classes = vec![false; n];
    for &u in &order[..hateful] {
        classes[u] = true;
    }
    classes
}

/// Preferential attachment followed by homophilous rewiring, before any
/// component extraction. Node `i` of the result is user `i`.
pub fn generate_graph_full(cfg: &SynthConfig, classes: &[bool]) -> Result<UserGraph> {
    cfg.validate()?;
    if classes.len() != cfg.n_users {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_users,
            actual: classes.len(),
        });
    }
    let n = cfg.n_users;
    let m = cfg.attach_m;
    let mut rng = seed::rng(cfg.seed, "attach");
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(n * m);
    // Every edge contributes both endpoints, so sampling this list uniformly
    // is sampling proportional to degree.
    let mut endpoints: Vec<u32> = Vec::with_capacity(2 * n * m);
    for v in 0..=m as u32 {
        for u in 0..v {
            edges.push((v, u));
            endpoints.extend([v, u]);
        }
    }
    let mut targets: Vec<u32> = Vec::with_capacity(m);
    for v in (m + 1) as u32..n as u32 {
        targets.clear();
        while targets.len() < m {
            let t = *endpoints.choose(&mut rng).expect("seed clique has edges");
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((v, t));
            endpoints.extend([v, t]);
        }
    }

    let mut by_class: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    for (u, &c) in classes.iter().enumerate() {
        by_class[usize::from(c)].push(u as u32);
    }
    let mut present: HashSet<(u32, u32)> = edges.iter().copied().collect();
    let mut rng = seed::rng(cfg.seed, "rewire");
    for e in edges.iter_mut() {
        if !rng.random_bool(cfg.homophily) {
            continue;
        }
        let (src, dst) = *e;
        let pool = &by_class[usize::from(classes[src as usize])];
        for _ in 0..REWIRE_RETRIES {
            let t = *pool.choose(&mut rng).expect("class is non-empty");
            if t == src || present.contains(&(src, t)) {
                continue;
            }
            present.remove(&(src, dst));
            present.insert((src, t));
            *e = (src, t);
            break;
        }
    }
    Ok(UserGraph::from_parts(user_ids(n), edges))
}

/// Largest weakly connected component of [`generate_graph_full`].
pub fn generate_graph(cfg: &SynthConfig, classes: &[bool]) -> Result<UserGraph> {
    generate_graph_full(cfg, classes)?.largest_weakly_connected_component()
}

/// Post scores per user: a uniform count from `posts_per_user`, each drawn
/// from the user's class Beta. User `i` draws from its own stream.
pub fn sample_score_table(cfg: &SynthConfig, classes: &[bool]) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let beta = |(a, b): (f64, f64), key: &str| Beta::new(a, b).map_err(|e| config_err(key, e.to_string()));
    let hateful = beta(cfg.score_dist_hateful, "score_dist_hateful")?;
    let benign = beta(cfg.score_dist_benign, "score_dist_benign")?;
    let (lo, hi) = cfg.posts_per_user;
    Ok(classes
        .iter()
        .enumerate()
        .map(|(u, &c)| {
            let mut rng = seed::rng_indexed(cfg.seed, "scores", &[u as u64]);
            let count = rng.random_range(lo..=hi);
            let dist = if c { &hateful } else { &benign };
            (0..count).map(|_| dist.sample(&mut rng).clamp(0.0, 1.0)).collect()
        })
        .collect())
}

/// [`sample_score_table`] as post records with ids `<user>-p<j>`.
pub fn sample_scores(cfg: &SynthConfig, classes: &[bool]) -> Result<Vec<PostScore>> {
    let ids = user_ids(cfg.n_users);
    let table = sample_score_table(cfg, classes)?;
    Ok(table
        .into_iter()
        .enumerate()
        .flat_map(|(u, scores)| {
            let uid = ids[u].clone();
            scores.into_iter().enumerate().map(move |(j, score)| PostScore {
                post_id: format!("{uid}-p{j}"),
                user_id: uid.clone(),
                score,
                text: None,
            })
        })
        .collect())
}

/// A generated benchmark restricted to its largest component.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub config: SynthConfig,
    pub graph: UserGraph,
    /// Class of each graph node.
    pub hateful: Vec<bool>,
    /// Scores of each graph node.
    pub scores: Vec<Vec<f64>>,
}

impl SynthData {
    pub fn generate(cfg: &SynthConfig) -> Result<Self> {
        let classes = assign_classes(cfg);
        let full = generate_graph_full(cfg, &classes)?;
        let table = sample_score_table(cfg, &classes)?;
        let graph = full.largest_weakly_connected_component()?;
        let keep: Vec<usize> = graph
            .ids()
            .iter()
            .map(|id| full.index_of(id).expect("component node exists in full graph"))
            .collect();
        let mut table: Vec<Option<Vec<f64>>> = table.into_iter().map(Some).collect();
        Ok(SynthData {
            config: cfg.clone(),
            hateful: keep.iter().map(|&u| classes[u]).collect(),
            scores: keep.iter().map(|&u| table[u].take().expect("each user once")).collect(),
            graph,
        })
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        let posts = self
            .scores
            .iter()
            .enumerate()
            .flat_map(|(u, scores)| {
                let uid = self.graph.id(u);
                scores.iter().enumerate().map(move |(j, &score)| PostScore {
                    post_id: format!("{uid}-p{j}"),
                    user_id: uid.to_owned(),
                    score,
                    text: None,
                })
            })
            .collect();
        let labels = self
            .hateful
            .iter()
            .enumerate()
            .map(|(u, &h)| UserLabel {
                user_id: self.graph.id(u).to_owned(),
                label: if h { Label::Hateful } else { Label::NotHateful },
            })
            .collect();
        Dataset::with_graph(self.graph.clone(), posts, labels)
    }

    /// Writes the dataset files plus `manifest.json` (see [`Self::manifest`]).
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.to_dataset()?.write_to_dir(dir)?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// The generating config plus summary counts.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "generator": "synth",
            "toolkit_version": crate::VERSION,
            "config": self.config,
            "users": self.graph.node_count(),
            "edges": self.graph.edge_count(),
            "posts": self.scores.iter().map(Vec::len).sum::<usize>(),
            "hateful_users": self.hateful.iter().filter(|&&h| h).count(),
        })
    }
}
