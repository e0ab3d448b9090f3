//! User-level aggregations of post scores: fixed-threshold counts,
//! neighbor hate fractions, and softmaxed score histograms.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UserGraph;
use crate::scalar::Scalar;

pub const DEFAULT_BINS: usize = 10;

/// Which feature family a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureMode {
    /// Own hateful-post count.
    #[serde(rename = "F")]
    Fixed,
    /// Own count plus follower / followee hate fractions.
    #[serde(rename = "R")]
    Relational,
    /// Softmaxed global-bin histogram.
    #[serde(rename = "Db")]
    Bins,
    /// Softmaxed per-user-range histogram.
    #[serde(rename = "Dq")]
    Quantiles,
    #[serde(rename = "DbDq")]
    BinsQuantiles,
    /// Relational, bins and quantiles together.
    #[serde(rename = "FULL")]
    Full,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 6] = [
        FeatureMode::Fixed,
        FeatureMode::Relational,
        FeatureMode::Bins,
        FeatureMode::Quantiles,
        FeatureMode::BinsQuantiles,
        FeatureMode::Full,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Fixed => "F",
            FeatureMode::Relational => "R",
            FeatureMode::Bins => "Db",
            FeatureMode::Quantiles => "Dq",
            FeatureMode::BinsQuantiles => "DbDq",
            FeatureMode::Full => "FULL",
        }
    }

    /// Human-readable method name as used in result tables.
    pub fn method_name(self) -> &'static str {
        match self {
            FeatureMode::Fixed => "Fixed-Threshold",
            FeatureMode::Relational => "Multimodal Relational Aggregation",
            FeatureMode::Bins => "Distributional (bins)",
            FeatureMode::Quantiles => "Distributional (quantiles)",
            FeatureMode::BinsQuantiles => "Distributional (bins+quantiles)",
            FeatureMode::Full => "Multimodal (Relational + Bins + Quantiles)",
        }
    }

    /// Length of the model input vector for `bins` histogram bins.
    pub fn dimension(self, bins: usize) -> usize {
        match self {
            FeatureMode::Fixed => 1,
            FeatureMode::Relational => RELATIONAL_DIM,
            FeatureMode::Bins | FeatureMode::Quantiles => bins,
            FeatureMode::BinsQuantiles => 2 * bins,
            FeatureMode::Full => RELATIONAL_DIM + 2 * bins,
        }
    }

    /// Column names of the model input vector.
    pub fn feature_names(self, bins: usize) -> Vec<String> {
        let rel = ["own_count", "follower_frac", "followee_frac", "miss_in", "miss_out"].map(String::from);
        let b = (0..bins).map(|i| format!("b{i}"));
        let q = (0..bins).map(|i| format!("q{i}"));
        match self {
            FeatureMode::Fixed => vec!["own_count".into()],
            FeatureMode::Relational => rel.to_vec(),
            FeatureMode::Bins => b.collect(),
            FeatureMode::Quantiles => q.collect(),
            FeatureMode::BinsQuantiles => b.chain(q).collect(),
            FeatureMode::Full => rel.into_iter().chain(b).chain(q).collect(),
        }
    }
}

const RELATIONAL_DIM: usize = 5;

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureMode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownMode(s.to_owned()))
    }
}

/// Number of scores at or above `tau_t`.
pub fn fixed_threshold_count<T: Scalar>(scores: &[T], tau_t: T) -> usize {
    scores.iter().filter(|&&s| s >= tau_t).count()
}

/// User-level decision: hateful iff `count >= tau_u`.
pub fn fixed_threshold_classify<T: Scalar>(count: usize, tau_u: T) -> bool {
    T::from_usize_lossy(count) >= tau_u
}

fn check_scores<T: Scalar>(scores: &[T]) -> Result<()> {
    match scores.iter().find(|&&s| !(s >= T::zero() && s <= T::one())) {
        Some(s) => Err(Error::InvalidValue(format!("score {s} outside [0, 1]"))),
        None => Ok(()),
    }
}

fn check_bins(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidValue(format!("need at least 2 bins, got {k}")));
    }
    Ok(())
}

/// Index of the bin holding `x` among `k` bins whose `i`-th lower edge is
/// `edge(i)`. Bins are half-open except the last, which is closed.
fn locate<T: Scalar>(x: T, k: usize, guess: T, edge: impl Fn(usize) -> T) -> usize {
    let mut i = guess.floor().to_usize().unwrap_or(0).min(k - 1);
    while i > 0 && x < edge(i) {
        i -= 1;
    }
    while i < k - 1 && x >= edge(i + 1) {
        i += 1;
    }
    i
}

fn bin_counts_unchecked<T: Scalar>(scores: &[T], k: usize) -> Vec<usize> {
    let kt = T::from_usize_lossy(k);
    let mut counts = vec![0usize; k];
    for &s in scores {
        counts[locate(s, k, s * kt, |i| T::from_usize_lossy(i) / kt)] += 1;
    }
    counts
}

fn quantile_counts_unchecked<T: Scalar>(scores: &[T], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    let lo = scores.iter().copied().fold(T::infinity(), T::min);
    let hi = scores.iter().copied().fold(T::neg_infinity(), T::max);
    if hi <= lo {
        counts[0] = scores.len();
        return counts;
    }
    let kt = T::from_usize_lossy(k);
    let range = hi - lo;
    for &s in scores {
        let guess = (s - lo) / range * kt;
        counts[locate(s, k, guess, |i| quantile_edge(lo, range, i, kt))] += 1;
    }
    counts
}

/// Lower edge of the `i`-th bin over `[lo, lo + range]` split into `k` bins.
pub fn quantile_edge<T: Scalar>(lo: T, range: T, i: usize, k: T) -> T {
    lo + range * (T::from_usize_lossy(i) / k)
}

/// Counts over `k` equal bins of `[0, 1]`: `[i/k, (i+1)/k)`, last bin closed.
pub fn bin_histogram<T: Scalar>(scores: &[T], k: usize) -> Result<Vec<usize>> {
    check_bins(k)?;
    check_scores(scores)?;
    Ok(bin_counts_unchecked(scores, k))
}

/// Counts over `k` equal bins spanning this user's `[min, max]`; a zero-width
/// range puts everything in bin 0.
pub fn quantile_histogram<T: Scalar>(scores: &[T], k: usize) -> Result<Vec<usize>> {
    check_bins(k)?;
    if scores.is_empty() {
        return Err(Error::EmptyInput("user has no posts"));
    }
    check_scores(scores)?;
    Ok(quantile_counts_unchecked(scores, k))
}

/// Max-shifted softmax.
pub fn softmax<T: Scalar>(v: &[T]) -> Result<Vec<T>> {
    if v.is_empty() {
        return Err(Error::EmptyInput("softmax of empty vector"));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidValue(format!("non-finite softmax input {x}")));
    }
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = v.iter().map(|&x| (x - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

fn softmax_counts<T: Scalar>(counts: &[usize]) -> Vec<T> {
    let v: Vec<T> = counts.iter().map(|&c| T::from_usize_lossy(c)).collect();
    softmax(&v).expect("counts are finite and non-empty")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationalFeatures<T> {
    /// Own hateful-post count.
    pub own_signal: usize,
    pub follower_frac: T,
    pub followee_frac: T,
    pub missing_followers: bool,
    pub missing_followees: bool,
}

fn hateful_fraction<T: Scalar>(neighbors: &[u32], flags: &[bool]) -> (T, bool) {
    if neighbors.is_empty() {
        return (T::zero(), true);
    }
    let hateful = neighbors.iter().filter(|&&v| flags[v as usize]).count();
    (T::from_usize_lossy(hateful) / T::from_usize_lossy(neighbors.len()), false)
}

/// Hateful fractions among `u`'s followers and followees; an empty side
/// yields 0 and sets its missing flag.
pub fn relational_features<T: Scalar>(
    g: &UserGraph,
    user: &str,
    counts: &[usize],
    flags: &[bool],
) -> Result<RelationalFeatures<T>> {
    let u = g.require(user)?;
    Ok(relational_at(g, u, counts, flags))
}

fn relational_at<T: Scalar>(g: &UserGraph, u: usize, counts: &[usize], flags: &[bool]) -> RelationalFeatures<T> {
    let (follower_frac, missing_followers) = hateful_fraction(g.in_neighbors(u), flags);
    let (followee_frac, missing_followees) = hateful_fraction(g.out_neighbors(u), flags);
    RelationalFeatures {
        own_signal: counts[u],
        follower_frac,
        followee_frac,
        missing_followers,
        missing_followees,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub tau_t: f64,
    pub tau_u: f64,
    pub bins: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            tau_t: crate::scoring::DEFAULT_TAU_T,
            tau_u: 1.0,
            bins: DEFAULT_BINS,
        }
    }
}

/// Every feature slot of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserFeatureVector<T> {
    pub user_id: String,
    pub mode: FeatureMode,
    pub own_count: usize,
    pub own_flag: bool,
    pub follower_frac: T,
    pub followee_frac: T,
    pub missing_followers: bool,
    pub missing_followees: bool,
    pub bin_hist: Vec<T>,
    pub quantile_hist: Vec<T>,
    /// No posts: the quantile histogram was built from a zero vector.
    pub no_posts: bool,
}

fn bit<T: Scalar>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

impl<T: Scalar> UserFeatureVector<T> {
    fn relational_values(&self) -> [T; RELATIONAL_DIM] {
        [
            T::from_usize_lossy(self.own_count),
            self.follower_frac,
            self.followee_frac,
            bit(self.missing_followers),
            bit(self.missing_followees),
        ]
    }

    /// Model input vector for `self.mode`.
    pub fn values(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.mode.dimension(self.bin_hist.len()));
        match self.mode {
            FeatureMode::Fixed => out.push(T::from_usize_lossy(self.own_count)),
            FeatureMode::Relational => out.extend(self.relational_values()),
            FeatureMode::Bins => out.extend_from_slice(&self.bin_hist),
            FeatureMode::Quantiles => out.extend_from_slice(&self.quantile_hist),
            FeatureMode::BinsQuantiles => {
                out.extend_from_slice(&self.bin_hist);
                out.extend_from_slice(&self.quantile_hist);
            }
            FeatureMode::Full => {
                out.extend(self.relational_values());
                out.extend_from_slice(&self.bin_hist);
                out.extend_from_slice(&self.quantile_hist);
            }
        }
        out
    }
}

/// Per-user aggregation inputs precomputed once for a graph and its scores.
pub struct FeatureContext<'a, T> {
    graph: &'a UserGraph,
    scores: &'a [Vec<T>],
    counts: Vec<usize>,
    flags: Vec<bool>,
    params: FeatureParams,
}

impl<'a, T: Scalar> FeatureContext<'a, T> {
    /// `scores[u]` holds the post scores of graph node `u`.
    pub fn new(graph: &'a UserGraph, scores: &'a [Vec<T>], params: FeatureParams) -> Result<Self> {
        if scores.len() != graph.node_count() {
            return Err(Error::DimensionMismatch {
                expected: graph.node_count(),
                actual: scores.len(),
            });
        }
        check_bins(params.bins)?;
        if !(params.tau_t > 0.0 && params.tau_t <= 1.0) {
            return Err(Error::InvalidValue(format!("tau_t {} outside (0, 1]", params.tau_t)));
        }
        if params.tau_u.is_nan() || params.tau_u < 0.0 {
            return Err(Error::InvalidValue(format!("tau_u {} must be non-negative", params.tau_u)));
        }
        scores.par_iter().try_for_each(|s| check_scores(s))?;
        let tau_t = T::lit(params.tau_t);
        let tau_u = T::lit(params.tau_u);
        let counts: Vec<usize> = scores.par_iter().map(|s| fixed_threshold_count(s, tau_t)).collect();
        let flags = counts.iter().map(|&c| fixed_threshold_classify(c, tau_u)).collect();
        Ok(FeatureContext {
            graph,
            scores,
            counts,
            flags,
            params,
        })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Fixed-threshold decision per node.
    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn params(&self) -> FeatureParams {
        self.params
    }

    /// All feature slots for node `u`, tagged with `mode`.
    pub fn user(&self, u: usize, mode: FeatureMode) -> UserFeatureVector<T> {
        let k = self.params.bins;
        let scores = &self.scores[u];
        let rel = relational_at::<T>(self.graph, u, &self.counts, &self.flags);
        let bin_hist = softmax_counts(&bin_counts_unchecked(scores, k));
        let quantile_counts = if scores.is_empty() {
            vec![0; k]
        } else {
            quantile_counts_unchecked(scores, k)
        };
        UserFeatureVector {
            user_id: self.graph.id(u).to_owned(),
            mode,
            own_count: rel.own_signal,
            own_flag: self.flags[u],
            follower_frac: rel.follower_frac,
            followee_frac: rel.followee_frac,
            missing_followers: rel.missing_followers,
            missing_followees: rel.missing_followees,
            bin_hist,
            quantile_hist: softmax_counts(&quantile_counts),
            no_posts: scores.is_empty(),
        }
    }

    /// Feature vectors for `nodes`, in the given order.
    pub fn users(&self, nodes: &[usize], mode: FeatureMode) -> Vec<UserFeatureVector<T>> {
        nodes.par_iter().map(|&u| self.user(u, mode)).collect()
    }

    /// Model input rows for `nodes`, in the given order.
    pub fn matrix(&self, nodes: &[usize], mode: FeatureMode) -> Vec<Vec<T>> {
        nodes.par_iter().map(|&u| self.user(u, mode).values()).collect()
    }
}

/// Feature vector of a single user of a dataset.
pub fn assemble_features(
    dataset: &crate::dataset::Dataset,
    user: &str,
    mode: FeatureMode,
    params: FeatureParams,
) -> Result<UserFeatureVector<f64>> {
    let u = dataset.graph.require(user)?;
    let scores = dataset.score_table();
    let ctx = FeatureContext::new(&dataset.graph, &scores, params)?;
    Ok(ctx.user(u, mode))
}

/// Writes every slot of each vector:
/// `user_id,own_count,own_flag,follower_frac,followee_frac,miss_in,miss_out,b0..,q0..`.
pub fn write_feature_csv<T: Scalar, W: Write>(mut w: W, rows: &[UserFeatureVector<T>], bins: usize) -> Result<()> {
    let mut header = vec!["user_id".to_string()];
    header.extend(
        ["own_count", "own_flag", "follower_frac", "followee_frac", "miss_in", "miss_out"].map(String::from),
    );
    header.extend((0..bins).map(|i| format!("b{i}")));
    header.extend((0..bins).map(|i| format!("q{i}")));
    let mut wtr = csv::Writer::from_writer(&mut w);
    wtr.write_record(&header).map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        let mut rec = vec![
            r.user_id.clone(),
            r.own_count.to_string(),
            u8::from(r.own_flag).to_string(),
            r.follower_frac.to_string(),
            r.followee_frac.to_string(),
            u8::from(r.missing_followers).to_string(),
            u8::from(r.missing_followees).to_string(),
        ];
        rec.extend(r.bin_hist.iter().chain(&r.quantile_hist).map(|x| x.to_string()));
        wtr.write_record(&rec).map_err(|e| Error::Format(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io("<features>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, PostScore};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn naive_bins(scores: &[f64], k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for &s in scores {
            for (i, c) in counts.iter_mut().enumerate() {
                let lo = i as f64 / k as f64;
                let hi = (i + 1) as f64 / k as f64;
                if s >= lo && (s < hi || i == k - 1) {
                    *c += 1;
                    break;
                }
            }
        }
        counts
    }

    #[test]
    fn bins_direct_placement() {
        let counts = bin_histogram(&[0.05, 0.15, 0.95], 10).unwrap();
        assert_eq!(counts, vec![1, 1, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(bin_histogram(&[1.0], 10).unwrap()[9], 1);
        assert_eq!(bin_histogram(&[0.0, 0.5], 2).unwrap(), vec![1, 1]);
        assert_eq!(bin_histogram::<f64>(&[], 10).unwrap(), vec![0; 10]);
        assert!(bin_histogram(&[0.3], 1).is_err());
        assert!(bin_histogram(&[1.3], 4).is_err());
    }

    #[test]
    fn bins_match_naive_on_edges() {
        let edges: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let nudged: Vec<f64> = edges
            .iter()
            .flat_map(|&e| [e, f64::from_bits(e.to_bits().saturating_sub(1)).max(0.0)])
            .collect();
        assert_eq!(bin_histogram(&nudged, 10).unwrap(), naive_bins(&nudged, 10));
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile_histogram(&[0.2, 0.2, 0.2], 10).unwrap()[0], 3);
        assert_eq!(quantile_histogram(&[0.0, 1.0], 2).unwrap(), vec![1, 1]);
        assert_eq!(quantile_histogram(&[0.1, 0.4, 0.4, 0.7], 3).unwrap(), vec![1, 2, 1]);
        assert!(matches!(quantile_histogram::<f64>(&[], 3), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn softmax_examples() {
        let u = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for x in u {
            assert_relative_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
        let s = softmax(&[1000.0, 0.0]).unwrap();
        assert_relative_eq!(s[0], 1.0);
        assert!(s[1] >= 0.0 && s[1] < 1e-300);
        let z: f64 = [1.0f64, 2.0, 3.0].iter().map(|x| x.exp()).sum();
        let t = softmax(&[1.0, 2.0, 3.0]).unwrap();
        for (i, x) in t.iter().enumerate() {
            assert_relative_eq!(*x, ((i + 1) as f64).exp() / z, epsilon = 1e-12);
        }
        assert!(softmax::<f64>(&[]).is_err());
        assert!(softmax(&[f64::NAN]).is_err());
        assert_relative_eq!(softmax(&[1.0f32, 2.0]).unwrap().iter().sum::<f32>(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn fixed_threshold_examples() {
        assert_eq!(fixed_threshold_count(&[0.6, 0.3, 0.7], 0.5), 2);
        assert_eq!(fixed_threshold_count::<f64>(&[], 0.5), 0);
        assert!(fixed_threshold_classify(1, 1.0));
        assert!(!fixed_threshold_classify(0, 1.0));
        assert!(fixed_threshold_classify(5, 3.0));
    }

    #[test]
    fn fixed_count_matches_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let scores: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let mut naive = 0;
        for s in &scores {
            if *s >= 0.5 {
                naive += 1;
            }
        }
        assert_eq!(fixed_threshold_count(&scores, 0.5), naive);
    }

    fn graph(edges: &[(&str, &str)]) -> UserGraph {
        UserGraph::from_edges(edges.iter().copied()).unwrap()
    }

    #[test]
    fn follower_fraction_is_mean_of_flags() {
        let g = graph(&[("a", "u"), ("b", "u"), ("c", "u")]);
        let flags: Vec<bool> = g.ids().iter().map(|id| id == "a" || id == "b").collect();
        let counts = vec![0; g.node_count()];
        let r = relational_features::<f64>(&g, "u", &counts, &flags).unwrap();
        assert_relative_eq!(r.follower_frac, 2.0 / 3.0);
        assert_eq!(r.followee_frac, 0.0);
        assert!(!r.missing_followers && r.missing_followees);
        assert!(relational_features::<f64>(&g, "nobody", &counts, &flags).is_err());
    }

    #[test]
    fn isolated_user_relational() {
        let g = UserGraph::from_edges_with_nodes([("a", "b")], ["z"]).unwrap();
        let z = g.index_of("z").unwrap();
        let mut counts = vec![0; 3];
        counts[z] = 4;
        let r = relational_features::<f64>(&g, "z", &counts, &[true; 3]).unwrap();
        assert_eq!(
            r,
            RelationalFeatures {
                own_signal: 4,
                follower_frac: 0.0,
                followee_frac: 0.0,
                missing_followers: true,
                missing_followees: true
            }
        );
    }

    #[test]
    fn all_hateful_cycle_by_enumeration() {
        let g = graph(&[("a", "b"), ("b", "c"), ("c", "a")]);
        let flags = vec![true; 3];
        for u in 0..3 {
            // Enumerate followers / followees directly from the edge list.
            let followers: Vec<usize> = (0..3).filter(|&v| g.has_edge(v, u)).collect();
            let followees: Vec<usize> = (0..3).filter(|&v| g.has_edge(u, v)).collect();
            let fr = followers.iter().filter(|&&v| flags[v]).count() as f64 / followers.len() as f64;
            let fe = followees.iter().filter(|&&v| flags[v]).count() as f64 / followees.len() as f64;
            let r = relational_features::<f64>(&g, g.id(u), &[1, 1, 1], &flags).unwrap();
            assert_eq!((r.follower_frac, r.followee_frac), (fr, fe));
            assert_eq!((fr, fe), (1.0, 1.0));
        }
    }

    fn post(user: &str, score: f64) -> PostScore {
        PostScore {
            post_id: format!("{user}-{score}"),
            user_id: user.into(),
            score,
            text: None,
        }
    }

    #[test]
    fn assemble_modes() {
        let ds = Dataset::new(&[("a".into(), "b".into())], vec![post("a", 0.9)], vec![]).unwrap();
        let f = assemble_features(&ds, "a", FeatureMode::Fixed, FeatureParams::default()).unwrap();
        assert_eq!(f.values(), vec![1.0]);

        let lonely = Dataset::new(&[("a".into(), "b".into())], vec![post("z", 0.9), post("z", 0.6)], vec![]).unwrap();
        let r = assemble_features(&lonely, "z", FeatureMode::Relational, FeatureParams::default()).unwrap();
        let z = lonely.graph.index_of("z").unwrap();
        let counts: Vec<usize> = lonely.score_table().iter().map(|s| fixed_threshold_count(s, 0.5)).collect();
        let flags: Vec<bool> = counts.iter().map(|&c| fixed_threshold_classify(c, 1.0)).collect();
        let rel = relational_features::<f64>(&lonely.graph, "z", &counts, &flags).unwrap();
        assert_eq!(r.values(), vec![rel.own_signal as f64, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(counts[z], 2);

        let full = assemble_features(&ds, "b", FeatureMode::Full, FeatureParams::default()).unwrap();
        assert_eq!(full.values().len(), 25);
        assert_eq!(FeatureMode::Full.dimension(10), 25);
        assert_eq!(FeatureMode::Full.feature_names(10).len(), 25);
        // b has no posts: both histograms are uniform softmaxes of zeros.
        assert!(full.no_posts);
        assert_relative_eq!(full.quantile_hist[3], 0.1);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("full".parse::<FeatureMode>().unwrap(), FeatureMode::Full);
        assert_eq!("DbDq".parse::<FeatureMode>().unwrap(), FeatureMode::BinsQuantiles);
        let err = "GCN".parse::<FeatureMode>().unwrap_err().to_string();
        assert!(err.contains("GCN") && err.contains("FULL"), "{err}");
    }

    #[test]
    fn feature_csv_header() {
        let ds = Dataset::new(&[("a".into(), "b".into())], vec![post("a", 0.9)], vec![]).unwrap();
        let scores = ds.score_table();
        let ctx = FeatureContext::new(&ds.graph, &scores, FeatureParams::default()).unwrap();
        let rows = ctx.users(&[0, 1], FeatureMode::Full);
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &rows, 10).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "user_id,own_count,own_flag,follower_frac,followee_frac,miss_in,miss_out,b0,b1,b2,b3,b4,b5,b6,b7,b8,b9,q0,q1,q2,q3,q4,q5,q6,q7,q8,q9"
        );
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn histograms_conserve_counts(scores in prop::collection::vec(0.0f64..=1.0, 1..50), k in 2usize..15) {
            let b = bin_histogram(&scores, k).unwrap();
            let q = quantile_histogram(&scores, k).unwrap();
            prop_assert_eq!(b.iter().sum::<usize>(), scores.len());
            prop_assert_eq!(q.iter().sum::<usize>(), scores.len());
            prop_assert_eq!(b, naive_bins(&scores, k));
        }

        #[test]
        fn histograms_ignore_score_order(mut scores in prop::collection::vec(0.0f64..=1.0, 1..40), k in 2usize..12) {
            let b = bin_histogram(&scores, k).unwrap();
            let q = quantile_histogram(&scores, k).unwrap();
            scores.reverse();
            let third = scores.len() / 3;
            scores.rotate_left(third);
            prop_assert_eq!(bin_histogram(&scores, k).unwrap(), b);
            prop_assert_eq!(quantile_histogram(&scores, k).unwrap(), q);
        }

        #[test]
        fn softmax_is_permutation_covariant(v in prop::collection::vec(-50.0f64..50.0, 1..12), rot in 0usize..12) {
            let s = softmax(&v).unwrap();
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let r = rot % v.len();
            let mut pv = v.clone();
            pv.rotate_left(r);
            let mut ps = s.clone();
            ps.rotate_left(r);
            for (a, b) in softmax(&pv).unwrap().iter().zip(&ps) {
                prop_assert!((a - b).abs() < 1e-15);
            }
        }

        #[test]
        fn low_scores_never_change_count(scores in prop::collection::vec(0.0f64..=1.0, 0..30), extra in 0.0f64..0.5) {
            let before = fixed_threshold_count(&scores, 0.5);
            let mut more = scores.clone();
            more.push(extra);
            prop_assert_eq!(fixed_threshold_count(&more, 0.5), before);
        }
    }
}
