//! Structural statistics computed on the undirected projection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{UndirectedAdjacency, UserGraph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Local clustering coefficient of every node. Nodes with fewer than two
/// neighbors get 0.
pub fn local_clustering<T: Scalar>(und: &UndirectedAdjacency) -> Vec<T> {
    (0..und.node_count())
        .into_par_iter()
        .map(|u| {
            let nu = und.neighbors(u);
            let k = nu.len();
            if k < 2 {
                return T::zero();
            }
            // Each triangle at u is seen once from each of its two other corners.
            let links: usize = nu
                .iter()
                .map(|&v| intersection_size(nu, und.neighbors(v as usize)))
                .sum();
            let closed = T::from_usize_lossy(links);
            let possible = T::from_usize_lossy(k * (k - 1));
            closed / possible
        })
        .collect()
}

/// Mean local clustering coefficient over all nodes (not global transitivity).
pub fn clustering_coefficient<T: Scalar>(g: &UserGraph) -> Result<T> {
    if g.is_empty() {
        return Err(Error::EmptyInput("graph has no nodes"));
    }
    let mut local = local_clustering::<T>(&g.undirected());
    // Summing in sorted order makes the result independent of node labels.
    local.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite coefficients"));
    let total: T = local.iter().copied().sum();
    Ok(total / T::from_usize_lossy(g.node_count()))
}

/// How the lower degree cutoff of the power-law tail is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegreeCutoff {
    Fixed(usize),
    /// Scan candidate cutoffs (each observed degree ≥ 2 leaving at least
    /// `min_tail` nodes) and keep the one whose fit has the smallest
    /// Kolmogorov-Smirnov distance to the empirical tail.
    KsOptimal { min_tail: usize },
}

impl Default for DegreeCutoff {
    fn default() -> Self {
        DegreeCutoff::KsOptimal { min_tail: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    pub gamma: T,
    pub d_min: usize,
    pub tail_size: usize,
    pub ks_distance: T,
    /// Set when the tail holds fewer than two distinct degrees; `gamma` is
    /// then `+inf`.
    pub degenerate: bool,
}

fn fit_fixed<T: Scalar>(sorted_degrees: &[usize], d_min: usize) -> Result<PowerLawFit<T>> {
    if d_min == 0 {
        return Err(Error::InvalidValue("d_min must be positive".into()));
    }
    let start = sorted_degrees.partition_point(|&d| d < d_min);
    let tail = &sorted_degrees[start..];
    if tail.is_empty() {
        return Err(Error::InsufficientData(format!("no node has degree >= {d_min}")));
    }
    if tail[0] == tail[tail.len() - 1] {
        return Ok(PowerLawFit {
            gamma: T::infinity(),
            d_min,
            tail_size: tail.len(),
            ks_distance: T::zero(),
            degenerate: true,
        });
    }
    let shift = T::from_usize_lossy(d_min) - T::lit(0.5);
    let log_sum: T = tail.iter().map(|&d| (T::from_usize_lossy(d) / shift).ln()).sum();
    let n = T::from_usize_lossy(tail.len());
    let gamma = T::one() + n / log_sum;

    // KS distance between the empirical tail CDF and the continuity-corrected
    // model CDF, evaluated at each distinct degree.
    let mut ks = T::zero();
    let mut i = 0;
    while i < tail.len() {
        let d = tail[i];
        let j = i + tail[i..].partition_point(|&x| x == d);
        let empirical = T::from_usize_lossy(j) / n;
        let x = T::from_usize_lossy(d) + T::lit(0.5);
        let model = T::one() - (x / shift).powf(T::one() - gamma);
        ks = ks.max((empirical - model).abs());
        i = j;
    }
    Ok(PowerLawFit {
        gamma,
        d_min,
        tail_size: tail.len(),
        ks_distance: ks,
        degenerate: false,
    })
}

/// Continuous maximum-likelihood power-law exponent over a degree sequence,
/// `gamma = 1 + n / sum(ln(d / (d_min - 0.5)))` over the tail `d >= d_min`.
pub fn fit_powerlaw<T: Scalar>(degrees: &[usize], cutoff: DegreeCutoff) -> Result<PowerLawFit<T>> {
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    match cutoff {
        DegreeCutoff::Fixed(d_min) => fit_fixed(&sorted, d_min),
        DegreeCutoff::KsOptimal { min_tail } => {
            let mut best: Option<PowerLawFit<T>> = None;
            let mut candidates: Vec<usize> = sorted.iter().copied().filter(|&d| d >= 2).collect();
            candidates.dedup();
            for d_min in candidates {
                let start = sorted.partition_point(|&d| d < d_min);
                if sorted.len() - start < min_tail.max(1) {
                    break;
                }
                let fit = fit_fixed::<T>(&sorted, d_min)?;
                if fit.degenerate {
                    continue;
                }
                if best.is_none_or(|b| fit.ks_distance < b.ks_distance) {
                    best = Some(fit);
                }
            }
            match best {
                Some(fit) => Ok(fit),
                None => fit_fixed(&sorted, 2),
            }
        }
    }
}

/// Power-law fit of the undirected degree sequence with a fixed cutoff.
pub fn powerlaw_gamma<T: Scalar>(g: &UserGraph, d_min: usize) -> Result<PowerLawFit<T>> {
    fit_powerlaw(&undirected_degrees(g), DegreeCutoff::Fixed(d_min))
}

pub(crate) fn undirected_degrees(g: &UserGraph) -> Vec<usize> {
    let und = g.undirected();
    (0..und.node_count()).map(|u| und.degree(u)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub undirected_edge_count: usize,
    pub component_count: usize,
    pub clustering_coefficient: f64,
    /// `None` when the degree tail is empty or holds a single value.
    pub powerlaw_gamma: Option<f64>,
    pub powerlaw_d_min: usize,
    pub powerlaw_tail_size: usize,
    pub powerlaw_degenerate: bool,
}

pub fn graph_stats(g: &UserGraph, cutoff: DegreeCutoff) -> Result<GraphStats> {
    let clustering = clustering_coefficient::<f64>(g)?;
    let fit = match fit_powerlaw::<f64>(&undirected_degrees(g), cutoff) {
        Ok(fit) => fit,
        Err(Error::InsufficientData(_)) => PowerLawFit {
            gamma: f64::INFINITY,
            d_min: 0,
            tail_size: 0,
            ks_distance: 0.0,
            degenerate: true,
        },
        Err(e) => return Err(e),
    };
    Ok(GraphStats {
        node_count: g.node_count(),
        edge_count: g.edge_count(),
        undirected_edge_count: g.undirected().edge_count(),
        component_count: g.component_count(),
        clustering_coefficient: clustering,
        powerlaw_gamma: (!fit.degenerate).then_some(fit.gamma),
        powerlaw_d_min: fit.d_min,
        powerlaw_tail_size: fit.tail_size,
        powerlaw_degenerate: fit.degenerate,
    })
}
