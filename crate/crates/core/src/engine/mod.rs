//! Shapley machinery: value functions, Kernel SHAP, the exact oracle,
//! interventional parts and Shapley residuals.

mod exact;
mod kernel;
mod parts;
mod residuals;
mod value;

use alloc::string::String;
use alloc::vec::Vec;

pub use exact::{additive_split_check, exact_decomposition, AdditiveSplitReport, MAX_EXACT_FEATURES};
pub use kernel::{kernel_shap, kernel_shap_with, shapley_kernel_weight, KernelConfig, KERNEL_RIDGE};
pub use parts::interventional_parts;
pub use residuals::{shapley_residuals, ResidualTable, MAX_RESIDUAL_FEATURES};
pub use value::{gauss_hermite, ValueFunction, ValueKind, MAX_QUADRATURE_POINTS};

use crate::distributions::ConditionalSampler;
use crate::error::{Error, Result};
use crate::models::Predictor;
use crate::rng::RngStream;
use crate::types::{Decomposition, DecompositionMeta};

/// Monte Carlo budgets of [`decompose`].
#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    /// Conditional draws per coalition value.
    pub k1: usize,
    /// Sampled orderings per feature for the interventional parts.
    pub k2: usize,
    pub seed: u64,
    pub kernel: KernelConfig,
}

impl Budget {
    pub fn new(k1: usize, k2: usize, seed: u64) -> Self {
        Self {
            k1,
            k2,
            seed,
            kernel: KernelConfig::default(),
        }
    }
}

/// Conditional SHAP values by Kernel SHAP, interventional parts by sampled
/// orderings, dependent parts by subtraction.
///
/// Kernel SHAP draws from `RngStream::new(seed).substream(0)`, the
/// interventional parts from `substream(1)`.
pub fn decompose(
    model: &dyn Predictor,
    sampler: &dyn ConditionalSampler,
    x: &[f64],
    budget: &Budget,
) -> Result<Decomposition> {
    decompose_in(model, sampler, x, budget, RngStream::new(budget.seed))
}

/// [`decompose`] drawing from `root` instead of the stream of `budget.seed`.
/// Used when many samples share one seed.
pub fn decompose_in(
    model: &dyn Predictor,
    sampler: &dyn ConditionalSampler,
    x: &[f64],
    budget: &Budget,
    root: RngStream,
) -> Result<Decomposition> {
    if budget.k1 == 0 || budget.k2 == 0 {
        return Err(Error::InvalidInput("K1 and K2 must be positive".into()));
    }
    let mut warnings = Vec::new();
    if budget.k2 < budget.k1 {
        warnings.push(alloc::format!(
            "K2 ({}) is smaller than K1 ({}); the permutation estimator needs more draws than Kernel SHAP",
            budget.k2,
            budget.k1
        ));
    }
    let vf = ValueFunction::conditional(model, sampler, budget.k1);
    let shap = kernel_shap_with(&vf, x, root.substream(0), &budget.kernel).map_err(|e| e.in_stage("kernel shap"))?;
    if shap.regularized {
        warnings.push(String::from("kernel regression needed a ridge term"));
    }
    let phi_int = interventional_parts(model, sampler, x, budget.k2, root.substream(1))
        .map_err(|e| e.in_stage("interventional parts"))?;
    Decomposition::from_parts(
        shap.base,
        shap.phi,
        phi_int,
        DecompositionMeta {
            sampler: sampler.kind().into(),
            model: model.id(),
            k1: budget.k1 as u64,
            k2: budget.k2 as u64,
            seed: budget.seed,
            warnings,
        },
    )
}
