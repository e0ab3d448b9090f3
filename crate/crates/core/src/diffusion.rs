//! Label-anchored DeGroot diffusion: seeded users hold their gold label,
//! everyone else repeatedly adopts the mean belief of their undirected
//! neighbors.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, UserLabel};
use crate::error::{Error, Result};
use crate::graph::{UndirectedAdjacency, UserGraph};
use crate::scalar::Scalar;
use crate::seed;
use crate::train::{kfold_external, labeled_users, CvConfig, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    pub seed_fraction: f64,
    pub prior: f64,
    pub iterations: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            seed_fraction: 0.05,
            prior: 0.5,
            iterations: 10,
            threshold: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionState<T> {
    pub beliefs: Vec<T>,
    pub iteration: usize,
    /// Clamped nodes, ascending.
    pub seed_set: Vec<usize>,
    clamped: Vec<bool>,
}

impl<T: Scalar> DiffusionState<T> {
    /// Every node at `prior`, no seeds.
    pub fn uniform(node_count: usize, prior: T) -> Self {
        DiffusionState {
            beliefs: vec![prior; node_count],
            iteration: 0,
            seed_set: Vec::new(),
            clamped: vec![false; node_count],
        }
    }

    /// Clamps node `u` at `belief`.
    pub fn clamp(&mut self, u: usize, belief: T) {
        self.beliefs[u] = belief;
        if !self.clamped[u] {
            self.clamped[u] = true;
            let pos = self.seed_set.partition_point(|&s| s < u);
            self.seed_set.insert(pos, u);
        }
    }

    pub fn is_seed(&self, u: usize) -> bool {
        self.clamped[u]
    }
}

/// Picks `round(fraction * n)` labeled users (at least one), allocating the
/// quota across classes by largest remainder and sampling each class with a
/// seeded shuffle.
pub fn sample_seed_users(labels: &[UserLabel], fraction: f64, seed: u64) -> Result<Vec<&UserLabel>> {
    if labels.is_empty() {
        return Err(Error::InsufficientData("no labeled users to seed from".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidValue(format!("seed fraction {fraction} outside (0, 1]")));
    }
    let mut classes: BTreeMap<bool, Vec<&UserLabel>> = BTreeMap::new();
    for l in labels {
        classes.entry(l.label.is_hateful()).or_default().push(l);
    }
    let total = ((labels.len() as f64 * fraction).round() as usize).clamp(1, labels.len());
    let exact: Vec<(bool, f64)> = classes
        .iter()
        .map(|(&c, members)| (c, total as f64 * members.len() as f64 / labels.len() as f64))
        .collect();
    let mut quota: BTreeMap<bool, usize> = exact.iter().map(|&(c, e)| (c, e.floor() as usize)).collect();
    let mut by_remainder = exact.clone();
    by_remainder.sort_by(|a, b| (b.1 - b.1.floor()).total_cmp(&(a.1 - a.1.floor())).then(b.0.cmp(&a.0)));
    let mut left = total - quota.values().sum::<usize>();
    for (c, _) in by_remainder {
        if left == 0 {
            break;
        }
        *quota.get_mut(&c).expect("class present") += 1;
        left -= 1;
    }
    let mut rng = seed::rng(seed, "diffusion-seeds");
    let mut chosen = Vec::with_capacity(total);
    for (class, mut members) in classes {
        members.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        members.shuffle(&mut rng);
        chosen.extend(members.into_iter().take(quota[&class]));
    }
    Ok(chosen)
}

/// Initial state: sampled seed users hold their label, all other nodes hold
/// `prior`. Seeds absent from `g` are ignored.
pub fn seed_beliefs<T: Scalar>(
    g: &UserGraph,
    labels: &[UserLabel],
    seed_fraction: f64,
    seed: u64,
    prior: T,
) -> Result<DiffusionState<T>> {
    if !(prior >= T::zero() && prior <= T::one()) {
        return Err(Error::InvalidValue(format!("prior {prior} outside [0, 1]")));
    }
    let mut state = DiffusionState::uniform(g.node_count(), prior);
    for l in sample_seed_users(labels, seed_fraction, seed)? {
        if let Some(u) = g.index_of(&l.user_id) {
            state.clamp(u, if l.label.is_hateful() { T::one() } else { T::zero() });
        }
    }
    Ok(state)
}

/// Synchronous DeGroot updates over a fixed undirected adjacency.
pub struct DeGroot {
    adj: UndirectedAdjacency,
}

impl DeGroot {
    pub fn new(g: &UserGraph) -> Self {
        DeGroot { adj: g.undirected() }
    }

    pub fn step<T: Scalar>(&self, s: &DiffusionState<T>) -> DiffusionState<T> {
        let beliefs = (0..s.beliefs.len())
            .map(|u| {
                let nbrs = self.adj.neighbors(u);
                if s.is_seed(u) || nbrs.is_empty() {
                    s.beliefs[u]
                } else {
                    let total: T = nbrs.iter().map(|&v| s.beliefs[v as usize]).sum();
                    total / T::from_usize_lossy(nbrs.len())
                }
            })
            .collect();
        DiffusionState {
            beliefs,
            iteration: s.iteration + 1,
            seed_set: s.seed_set.clone(),
            clamped: s.clamped.clone(),
        }
    }

    pub fn run<T: Scalar>(&self, s0: &DiffusionState<T>, iterations: usize, tau: T) -> Result<(Vec<T>, Vec<bool>)> {
        if iterations == 0 {
            return Err(Error::InvalidValue("iterations must be at least 1".into()));
        }
        let mut s = s0.clone();
        for _ in 0..iterations {
            s = self.step(&s);
        }
        let classes = s.beliefs.iter().map(|&b| b >= tau).collect();
        Ok((s.beliefs, classes))
    }
}

pub fn degroot_step<T: Scalar>(g: &UserGraph, s: &DiffusionState<T>) -> DiffusionState<T> {
    DeGroot::new(g).step(s)
}

pub fn degroot_run<T: Scalar>(g: &UserGraph, s0: &DiffusionState<T>, iterations: usize, tau: T) -> Result<(Vec<T>, Vec<bool>)> {
    DeGroot::new(g).run(s0, iterations, tau)
}

/// Cross-validated diffusion on the largest component: each fold seeds from
/// its training users only and is scored on its held-out users.
pub fn diffusion_cv(dataset: &Dataset, cfg: &DiffusionConfig, cv: &CvConfig) -> Result<EvalReport> {
    let lcc = dataset.largest_component()?;
    let (nodes, y) = labeled_users(&lcc);
    let model = DeGroot::new(&lcc.graph);
    let report = kfold_external(&y, "DeGroot's Diffusion", cv, |train, test| {
        let train_labels: Vec<UserLabel> = train
            .iter()
            .map(|&i| UserLabel {
                user_id: lcc.graph.id(nodes[i]).to_owned(),
                label: lcc.label_of(nodes[i]).expect("labeled"),
            })
            .collect();
        let s0 = seed_beliefs(&lcc.graph, &train_labels, cfg.seed_fraction, cfg.seed, cfg.prior)?;
        let (beliefs, classes) = model.run(&s0, cfg.iterations, cfg.threshold)?;
        Ok((
            test.iter().map(|&i| beliefs[nodes[i]]).collect(),
            test.iter().map(|&i| classes[nodes[i]]).collect(),
        ))
    })?;
    Ok(report
        .with_hyperparameter("seed_fraction", cfg.seed_fraction)
        .with_hyperparameter("prior", cfg.prior)
        .with_hyperparameter("iterations", cfg.iterations)
        .with_hyperparameter("threshold", cfg.threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;

    fn label(id: &str, hateful: bool) -> UserLabel {
        UserLabel {
            user_id: id.into(),
            label: if hateful { Label::Hateful } else { Label::NotHateful },
        }
    }

    fn path() -> UserGraph {
        UserGraph::from_edges([("a", "b"), ("b", "c")]).unwrap()
    }

    #[test]
    fn path_hand_iteration() {
        let g = path();
        let mut s = DiffusionState::uniform(3, 0.5f64);
        s.clamp(0, 1.0);
        s.clamp(2, 0.0);
        let s1 = degroot_step(&g, &s);
        assert_eq!(s1.beliefs, vec![1.0, 0.5, 0.0]);
        assert_eq!(s1.iteration, 1);
        let s2 = degroot_step(&g, &s1);
        assert_eq!(s2.beliefs, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn consensus_is_fixed_point() {
        let g = UserGraph::from_edges([("a", "b"), ("b", "c"), ("c", "a"), ("c", "d")]).unwrap();
        let s = DiffusionState::uniform(4, 0.5f64);
        assert_eq!(degroot_step(&g, &s).beliefs, s.beliefs);
    }

    #[test]
    fn hub_adopts_unanimous_leaves() {
        let g = UserGraph::from_edges((0..4).map(|i| (format!("l{i}"), "hub".to_string()))).unwrap();
        let mut s = DiffusionState::uniform(5, 0.2f64);
        for i in 0..4 {
            s.clamp(g.index_of(&format!("l{i}")).unwrap(), 1.0);
        }
        let hub = g.index_of("hub").unwrap();
        assert_eq!(degroot_step(&g, &s).beliefs[hub], 1.0);
    }

    #[test]
    fn full_fraction_seeds_every_label() {
        let g = path();
        let labels = vec![label("a", true), label("c", false)];
        let s = seed_beliefs::<f64>(&g, &labels, 1.0, 1, 0.5).unwrap();
        assert_eq!(s.beliefs, vec![1.0, 0.5, 0.0]);
        assert_eq!(s.seed_set, vec![0, 2]);
    }

    #[test]
    fn unmatched_seeds_leave_prior() {
        let g = path();
        let s = seed_beliefs::<f64>(&g, &[label("zz", true)], 1.0, 1, 0.5).unwrap();
        assert_eq!(s.beliefs, vec![0.5; 3]);
        assert!(s.seed_set.is_empty());
        assert!(seed_beliefs::<f64>(&g, &[], 0.5, 1, 0.5).is_err());
    }

    #[test]
    fn stratified_seed_counts() {
        let labels: Vec<UserLabel> = (0..100).map(|i| label(&format!("u{i:03}"), i < 25)).collect();
        let seeds = sample_seed_users(&labels, 0.05, 9).unwrap();
        assert_eq!(seeds.len(), 5);
        let hateful = seeds.iter().filter(|l| l.label.is_hateful()).count() as f64;
        assert!((hateful - 0.05 * 25.0).abs() <= 1.0);
        assert!((5.0 - hateful - 0.05 * 75.0).abs() <= 1.0);
        let again = sample_seed_users(&labels, 0.05, 9).unwrap();
        assert_eq!(seeds, again);
    }

    #[test]
    fn run_stays_in_initial_range() {
        let g = UserGraph::from_edges([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("a", "c")]).unwrap();
        let mut s = DiffusionState::uniform(4, 0.3f64);
        s.beliefs[1] = 0.9;
        s.clamp(3, 0.1);
        let (beliefs, _) = degroot_run(&g, &s, 10, 0.5).unwrap();
        assert!(beliefs.iter().all(|&b| (0.1..=0.9).contains(&b)));
        assert!(degroot_run(&g, &s, 0, 0.5).is_err());
    }

    #[test]
    fn barbell_communities_follow_their_seeds() {
        let mut edges = Vec::new();
        for side in ["a", "b"] {
            for i in 0..10 {
                for j in i + 1..10 {
                    edges.push((format!("{side}{i}"), format!("{side}{j}")));
                }
            }
        }
        edges.push(("a9".into(), "b0".into()));
        let g = UserGraph::from_edges(edges).unwrap();
        let mut s = DiffusionState::uniform(g.node_count(), 0.5f64);
        for id in ["a0", "a1"] {
            s.clamp(g.index_of(id).unwrap(), 1.0);
        }
        for id in ["b8", "b9"] {
            s.clamp(g.index_of(id).unwrap(), 0.0);
        }
        let (_, classes) = degroot_run(&g, &s, 10, 0.5).unwrap();
        for (u, &c) in classes.iter().enumerate() {
            assert_eq!(c, g.id(u).starts_with('a'), "{}", g.id(u));
        }
    }

    #[test]
    fn zero_seeds_classify_everyone_benign() {
        let g = path();
        let mut s = DiffusionState::uniform(3, 0.0f64);
        s.clamp(1, 0.0);
        let (_, classes) = degroot_run(&g, &s, 10, 0.5).unwrap();
        assert_eq!(classes, vec![false; 3]);
    }
}
