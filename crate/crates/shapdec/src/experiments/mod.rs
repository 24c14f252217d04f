//! Scripted studies. Each returns its numbers and can write them, with
//! figures, into an output directory.

pub mod correlation;
pub mod fire;
pub mod imputation;
pub mod toy;

use serde::{Deserialize, Serialize};
use shapdec_core::models::{fit_forest, fit_ols, ForestParams, Model};
use shapdec_core::{FeatureMatrix, RngStream};

pub use correlation::{run_correlation_study, CorrelationConfig, CorrelationStudyRow};
pub use fire::{run_fire_study, FireConfig, FireResult};
pub use imputation::{run_imputation_study, Imputation, ImputationConfig, ImputationCurve, ImputationResult, Selection};
pub use toy::{run_toy, ToyResult};

/// Budgets and seed shared by every study, echoed into `results.json`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunBudget {
    pub k1: usize,
    pub k2: usize,
    pub seed: u64,
}

impl RunBudget {
    pub fn new(k1: usize, k2: usize, seed: u64) -> Self {
        RunBudget { k1, k2, seed }
    }

    pub(crate) fn engine(&self) -> shapdec_core::engine::Budget {
        shapdec_core::engine::Budget::new(self.k1, self.k2, self.seed)
    }

    pub(crate) fn root(&self) -> RngStream {
        RngStream::new(self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Forest,
}

pub fn fit_model(
    kind: ModelKind,
    data: &FeatureMatrix,
    target: &[f64],
    params: &ForestParams,
    stream: RngStream,
) -> shapdec_core::Result<Model> {
    Ok(match kind {
        ModelKind::Linear => Model::Linear(fit_ols(data, target)?),
        ModelKind::Forest => Model::Forest(fit_forest(data, target, params, stream)?),
    })
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = if n > 1.0 { values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}
