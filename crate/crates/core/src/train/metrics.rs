//! Positive-class classification metrics.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecallF1<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    /// A 0/0 ratio occurred and was reported as 0.
    pub zero_division: bool,
}

fn ratio<T: Scalar>(num: usize, den: usize, flag: &mut bool) -> T {
    if den == 0 {
        *flag = true;
        T::zero()
    } else {
        T::from_usize_lossy(num) / T::from_usize_lossy(den)
    }
}

pub fn precision_recall_f1<T: Scalar>(pred: &[bool], gold: &[bool]) -> Result<PrecisionRecallF1<T>> {
    if pred.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            actual: pred.len(),
        });
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (&p, &g) in pred.iter().zip(gold) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let mut zero_division = false;
    let precision: T = ratio(tp, tp + fp, &mut zero_division);
    let recall: T = ratio(tp, tp + fn_, &mut zero_division);
    let f1 = if precision + recall > T::zero() {
        T::lit(2.0) * precision * recall / (precision + recall)
    } else {
        zero_division = true;
        T::zero()
    };
    Ok(PrecisionRecallF1 {
        precision,
        recall,
        f1,
        zero_division,
    })
}

/// Average precision: scores are ranked descending, tied scores form one
/// threshold, and precision at each threshold is weighted by the recall it
/// adds.
pub fn pr_auc<T: Scalar>(scores: &[T], gold: &[bool]) -> Result<T> {
    if scores.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            actual: scores.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::InvalidValue(format!("score {s}")));
    }
    let positives = gold.iter().filter(|&&g| g).count();
    if positives == 0 {
        return Err(Error::InsufficientData("no positive examples".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("scores are not NaN"));
    let total = T::from_usize_lossy(positives);
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = T::zero();
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let before = tp;
        while i < order.len() && scores[order[i]] == s {
            if gold[order[i]] {
                tp += 1;
            }
            seen += 1;
            i += 1;
        }
        if tp > before {
            let precision = T::from_usize_lossy(tp) / T::from_usize_lossy(seen);
            ap += T::from_usize_lossy(tp - before) / total * precision;
        }
    }
    Ok(ap)
}

/// Chooses the user threshold with the best F1 when users with
/// `count >= tau` are flagged. Ties go to the smaller threshold.
pub fn grid_search_tau_u<T: Scalar>(counts: &[usize], gold: &[bool], grid: &[usize]) -> Result<(usize, T)> {
    if grid.is_empty() {
        return Err(Error::InvalidValue("empty threshold grid".into()));
    }
    if counts.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            actual: counts.len(),
        });
    }
    let mut best: Option<(usize, T)> = None;
    for &tau in grid {
        let pred: Vec<bool> = counts.iter().map(|&c| c >= tau).collect();
        let f1 = precision_recall_f1::<T>(&pred, gold)?.f1;
        best = match best {
            Some((bt, bf)) if bf > f1 || (bf == f1 && bt <= tau) => Some((bt, bf)),
            _ => Some((tau, f1)),
        };
    }
    Ok(best.expect("grid is non-empty"))
}

/// User threshold grid searched for the fixed-threshold baseline.
pub const DEFAULT_TAU_GRID: [usize; 7] = [1, 3, 5, 10, 20, 50, 100];
