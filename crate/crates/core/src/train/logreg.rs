//! L2-regularized logistic regression trained by deterministic full-batch
//! gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMode;
use crate::scalar::{logistic, softplus, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub l2: f64,
    pub max_iter: usize,
    pub learning_rate: f64,
    /// Stop once the gradient's max-norm falls below this.
    pub tolerance: f64,
    pub decision_threshold: f64,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2: 1.0,
            max_iter: 5000,
            learning_rate: 0.1,
            tolerance: 1e-6,
            decision_threshold: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<T> {
    pub mode: Option<FeatureMode>,
    pub weights: Vec<T>,
    pub intercept: T,
    pub decision_threshold: T,
    pub l2_strength: T,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
}

/// Objective value after every accepted step, starting at the initial point.
#[derive(Debug, Clone, Default)]
pub struct TrainingTrace<T> {
    pub losses: Vec<T>,
}

struct Problem<'a, T> {
    x: &'a [Vec<T>],
    y: Vec<T>,
    l2: T,
    n: T,
}

impl<T: Scalar> Problem<'_, T> {
    fn margins(&self, w: &[T], b: T) -> Vec<T> {
        self.x
            .iter()
            .map(|row| row.iter().zip(w).fold(b, |acc, (&xi, &wi)| acc + xi * wi))
            .collect()
    }

    /// Mean negative log-likelihood plus `l2 / (2n) * |w|^2`.
    fn loss(&self, w: &[T], b: T) -> T {
        let nll: T = self
            .margins(w, b)
            .iter()
            .zip(&self.y)
            .map(|(&z, &y)| softplus(z) - y * z)
            .sum();
        let norm: T = w.iter().map(|&wi| wi * wi).sum();
        nll / self.n + self.l2 * norm / (T::lit(2.0) * self.n)
    }

    fn gradient(&self, w: &[T], b: T) -> (Vec<T>, T) {
        let mut gw = vec![T::zero(); w.len()];
        let mut gb = T::zero();
        for ((row, z), &y) in self.x.iter().zip(self.margins(w, b)).zip(&self.y) {
            let r = logistic(z) - y;
            gb += r;
            for (g, &xi) in gw.iter_mut().zip(row) {
                *g += r * xi;
            }
        }
        for (g, &wi) in gw.iter_mut().zip(w) {
            *g = *g / self.n + self.l2 * wi / self.n;
        }
        (gw, gb / self.n)
    }
}

fn validate<T: Scalar>(x: &[Vec<T>], y: &[bool]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("{} training samples", x.len())));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::DegenerateLabels("training labels contain a single class".into()));
    }
    let dim = x[0].len();
    for row in x {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite feature {v}")));
        }
    }
    Ok(dim)
}

/// Fits with the default schedule and the given penalty and seed.
pub fn train_logreg<T: Scalar>(x: &[Vec<T>], y: &[bool], l2: T, seed: u64) -> Result<TrainedModel<T>> {
    let cfg = LogRegConfig {
        l2: l2.as_f64(),
        seed,
        ..LogRegConfig::default()
    };
    fit_logreg(x, y, &cfg).map(|(m, _)| m)
}

/// Gradient descent from zero. A step that raises the objective is rejected
/// and the learning rate halved.
pub fn fit_logreg<T: Scalar>(x: &[Vec<T>], y: &[bool], cfg: &LogRegConfig) -> Result<(TrainedModel<T>, TrainingTrace<T>)> {
    let dim = validate(x, y)?;
    if cfg.l2.is_nan() || cfg.l2 < 0.0 {
        return Err(Error::InvalidValue(format!("l2 {} must be non-negative", cfg.l2)));
    }
    let problem = Problem {
        x,
        y: y.iter().map(|&v| if v { T::one() } else { T::zero() }).collect(),
        l2: T::lit(cfg.l2),
        n: T::from_usize_lossy(x.len()),
    };
    let tol = T::lit(cfg.tolerance);
    let slack = T::lit(4.0) * T::epsilon();
    let mut lr = T::lit(cfg.learning_rate);
    let mut w = vec![T::zero(); dim];
    let mut b = T::zero();
    let mut loss = problem.loss(&w, b);
    let mut trace = TrainingTrace { losses: vec![loss] };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let (gw, gb) = problem.gradient(&w, b);
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gmax < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let trial_w: Vec<T> = w.iter().zip(&gw).map(|(&wi, &g)| wi - lr * g).collect();
        let trial_b = b - lr * gb;
        let trial_loss = problem.loss(&trial_w, trial_b);
        // Near the optimum the true decrease drops below the objective's
        // rounding noise (quickly so in f32); a few ulps of slack keep such
        // steps from collapsing the learning rate.
        if trial_loss <= loss + slack * loss.abs() {
            w = trial_w;
            b = trial_b;
            loss = trial_loss;
            trace.losses.push(loss);
        } else {
            lr /= T::lit(2.0);
            if lr < T::epsilon() {
                // No representable step improves the objective.
                converged = true;
                break;
            }
        }
    }
    Ok((
        TrainedModel {
            mode: None,
            weights: w,
            intercept: b,
            decision_threshold: T::lit(cfg.decision_threshold),
            l2_strength: T::lit(cfg.l2),
            seed: cfg.seed,
            iterations,
            converged,
        },
        trace,
    ))
}

/// `logistic(intercept + w . x)`.
pub fn predict_proba<T: Scalar>(model: &TrainedModel<T>, x: &[T]) -> Result<T> {
    if x.len() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            actual: x.len(),
        });
    }
    let z = x.iter().zip(&model.weights).fold(model.intercept, |acc, (&xi, &wi)| acc + xi * wi);
    Ok(logistic(z))
}

impl<T: Scalar> TrainedModel<T> {
    pub fn predict(&self, x: &[T]) -> Result<bool> {
        Ok(predict_proba(self, x)? >= self.decision_threshold)
    }
}

/// Per-column z-scoring fitted on training rows. Constant columns are only
/// centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(x: &[Vec<T>]) -> Self {
        let dim = x.first().map_or(0, Vec::len);
        let n = T::from_usize_lossy(x.len().max(1));
        let mut mean = vec![T::zero(); dim];
        for row in x {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); dim];
        for row in x {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > T::epsilon() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform_row(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &[Vec<T>]) -> Vec<Vec<T>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separable() -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..20 {
            x.push(vec![-1.0]);
            y.push(false);
            x.push(vec![1.0]);
            y.push(true);
        }
        (x, y)
    }

    #[test]
    fn separable_data_fits_perfectly() {
        let (x, y) = separable();
        let m = train_logreg(&x, &y, 1.0, 0).unwrap();
        let acc = x.iter().zip(&y).filter(|(r, &t)| m.predict(r).unwrap() == t).count();
        assert_eq!(acc, 40);
        assert!(predict_proba(&m, &[1.0]).unwrap() > 0.9);
        assert!(m.converged);
    }

    #[test]
    fn float_and_double_agree() {
        // Overlapping classes keep the optimum at a moderate weight.
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            x.push(vec![if i % 2 == 0 { -1.0 } else { 1.0 }]);
            y.push((i % 2 == 1) != (i % 10 == 0 || i % 10 == 5));
        }
        let x32: Vec<Vec<f32>> = x.iter().map(|r| r.iter().map(|&v| v as f32).collect()).collect();
        let m64 = train_logreg(&x, &y, 1.0, 0).unwrap();
        let m32 = train_logreg(&x32, &y, 1.0f32, 0).unwrap();
        assert!((m64.weights[0] - m32.weights[0] as f64).abs() < 1e-3, "{} vs {}", m64.weights[0], m32.weights[0]);
    }

    #[test]
    fn huge_penalty_shrinks_weights() {
        let (x, y) = separable();
        let m = train_logreg(&x, &y, 1e6, 0).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-2));
    }

    #[test]
    fn random_labels_do_not_generalize() {
        // Held-out accuracy over 20 independent resamples stays near chance.
        let mut accs = Vec::new();
        for rep in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep);
            let x: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
            let y: Vec<bool> = (0..200).map(|_| rng.random::<bool>()).collect();
            let m = train_logreg(&x[..100], &y[..100], 1.0, rep).unwrap();
            let correct = (100..200).filter(|&i| m.predict(&x[i]).unwrap() == y[i]).count();
            let acc = correct as f64 / 100.0;
            assert!((0.35..=0.65).contains(&acc), "rep {rep}: {acc}");
            accs.push(acc);
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((mean - 0.5).abs() < 0.05);
    }

    #[test]
    fn zero_model_predicts_half() {
        let m = TrainedModel::<f64> {
            mode: None,
            weights: vec![0.0; 3],
            intercept: 0.0,
            decision_threshold: 0.5,
            l2_strength: 1.0,
            seed: 0,
            iterations: 0,
            converged: true,
        };
        assert_eq!(predict_proba(&m, &[1.0, -2.0, 3.0]).unwrap(), 0.5);
        assert!(matches!(predict_proba(&m, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn prediction_monotone_in_positive_weight() {
        let (x, y) = separable();
        let m = train_logreg(&x, &y, 1.0, 0).unwrap();
        assert!(m.weights[0] > 0.0);
        let mut prev = 0.0;
        for i in -20..=20 {
            let p = predict_proba(&m, &[i as f64 / 4.0]).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(train_logreg(&x, &[true, true], 1.0, 0), Err(Error::DegenerateLabels(_))));
        assert!(matches!(
            train_logreg(&[vec![f64::NAN], vec![1.0]], &[true, false], 1.0, 0),
            Err(Error::InvalidValue(_))
        ));
        assert!(train_logreg(&x[..1], &[true], 1.0, 0).is_err());
    }

    #[test]
    fn accepted_steps_never_increase_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Vec<f64>> = (0..150).map(|_| (0..4).map(|_| rng.random::<f64>() * 10.0).collect()).collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] + rng.random::<f64>() * 5.0 > 7.0).collect();
        let (_, trace) = fit_logreg(&x, &y, &LogRegConfig::default()).unwrap();
        assert!(trace.losses.len() > 10);
        for w in trace.losses.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-15));
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] > 0.4).collect();
        let a = train_logreg(&x, &y, 1.0, 3).unwrap();
        let b = train_logreg(&x, &y, 1.0, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let x = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(&x);
        assert_eq!(s.transform(&x), vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
    }
}
