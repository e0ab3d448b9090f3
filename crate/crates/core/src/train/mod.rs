//! User-level classifier training and evaluation.

mod cv;
mod logreg;
mod metrics;

pub use cv::{kfold_cv, kfold_external, stratified_folds, CvConfig, EvalReport, FoldMetrics, Learner, MeanStd};
pub use logreg::{fit_logreg, predict_proba, train_logreg, LogRegConfig, Standardizer, TrainedModel, TrainingTrace};
pub use metrics::{grid_search_tau_u, pr_auc, precision_recall_f1, PrecisionRecallF1, DEFAULT_TAU_GRID};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::features::{FeatureContext, FeatureMode, FeatureParams};

/// Labeled users of `dataset` (graph indices) and their labels.
pub fn labeled_users(dataset: &Dataset) -> (Vec<usize>, Vec<bool>) {
    let nodes = dataset.labeled_nodes();
    let y = nodes
        .iter()
        .map(|&u| dataset.label_of(u).expect("labeled").is_hateful())
        .collect();
    (nodes, y)
}

/// Cross-validates one feature mode on the dataset's largest weakly connected
/// component. Mode F uses the count-threshold learner unless `cfg` already
/// names one explicitly for it.
pub fn evaluate_mode(dataset: &Dataset, mode: FeatureMode, params: FeatureParams, cfg: &CvConfig) -> Result<EvalReport> {
    let lcc = dataset.largest_component()?;
    let (nodes, y) = labeled_users(&lcc);
    let scores = lcc.score_table();
    let ctx = FeatureContext::<f64>::new(&lcc.graph, &scores, params)?;
    let x = ctx.matrix(&nodes, mode);
    let cfg = match (mode, &cfg.learner) {
        (FeatureMode::Fixed, Learner::LogisticRegression(_)) => CvConfig {
            learner: Learner::count_threshold(),
            ..cfg.clone()
        },
        _ => cfg.clone(),
    };
    Ok(kfold_cv(&x, &y, mode.method_name(), &cfg)?
        .with_hyperparameter("mode", mode.as_str())
        .with_hyperparameter("tau_t", params.tau_t)
        .with_hyperparameter("tau_u", params.tau_u)
        .with_hyperparameter("bins", params.bins)
        .with_hyperparameter("lcc_nodes", lcc.graph.node_count())
        .with_hyperparameter("labeled_users", nodes.len()))
}

/// A model fitted on every labeled user of the largest component, with the
/// scaler its inputs need.
pub struct FittedPipeline {
    pub mode: FeatureMode,
    pub params: FeatureParams,
    pub scaler: Standardizer<f64>,
    pub model: TrainedModel<f64>,
}

impl FittedPipeline {
    pub fn fit(dataset: &Dataset, mode: FeatureMode, params: FeatureParams, cfg: &LogRegConfig) -> Result<Self> {
        let lcc = dataset.largest_component()?;
        let (nodes, y) = labeled_users(&lcc);
        let scores = lcc.score_table();
        let ctx = FeatureContext::<f64>::new(&lcc.graph, &scores, params)?;
        let x = ctx.matrix(&nodes, mode);
        let scaler = Standardizer::fit(&x);
        let (mut model, _) = fit_logreg(&scaler.transform(&x), &y, cfg)?;
        model.mode = Some(mode);
        Ok(FittedPipeline {
            mode,
            params,
            scaler,
            model,
        })
    }

    /// Hate probability for every node of `dataset`'s graph, by node index.
    pub fn predict_all(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        let scores = dataset.score_table();
        let ctx = FeatureContext::<f64>::new(&dataset.graph, &scores, self.params)?;
        let nodes: Vec<usize> = (0..dataset.graph.node_count()).collect();
        ctx.matrix(&nodes, self.mode)
            .iter()
            .map(|row| predict_proba(&self.model, &self.scaler.transform_row(row)))
            .collect()
    }
}
