//! Conditional samplers `p(X_missing | X_known = x_known)`.

mod copula;
mod discrete;
mod gaussian;
pub mod normal;

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use copula::{fit_copula, CopulaModel, EmpiricalMarginal};
pub use discrete::DiscreteJoint;
pub use gaussian::{fit_gaussian, ConditionalGaussian, GaussianModel};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};
use crate::types::{FeatureMatrix, Rows};

/// Draws used by Monte Carlo conditional means.
pub const DEFAULT_MEAN_DRAWS: usize = 10_000;

pub trait ConditionalSampler {
    fn n_features(&self) -> usize;

    /// Short identifier recorded in result metadata.
    fn kind(&self) -> &'static str;

    /// `count` draws of the features outside `known`, ascending feature
    /// order. Only the entries of `x` at `known` are read.
    fn sample_conditional(&self, known: &Coalition, x: &[f64], count: usize, rng: &mut StreamRng) -> Result<Rows>;

    /// Mean of the missing features given the known ones.
    fn conditional_mean(&self, known: &Coalition, x: &[f64]) -> Result<Vec<f64>> {
        self.conditional_mean_mc(known, x, DEFAULT_MEAN_DRAWS, RngStream::new(0))
    }

    fn conditional_mean_mc(&self, known: &Coalition, x: &[f64], draws: usize, stream: RngStream) -> Result<Vec<f64>> {
        let rows = self.sample_conditional(known, x, draws.max(1), &mut stream.rng())?;
        let mut mean = alloc::vec![0.0; rows.width()];
        for r in rows.iter() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = rows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(mean)
    }
}

fn check_width(expected: usize, known: &Coalition, x: &[f64]) -> Result<()> {
    if known.n_features() != expected || x.len() != expected {
        return Err(Error::Dimension {
            expected,
            got: x.len(),
        });
    }
    if known.members().iter().any(|&i| !x[i].is_finite()) {
        return Err(Error::InvalidInput("conditioning values must be finite".into()));
    }
    Ok(())
}

impl ConditionalSampler for GaussianModel {
    fn n_features(&self) -> usize {
        GaussianModel::n_features(self)
    }

    fn kind(&self) -> &'static str {
        "gaussian"
    }

    fn sample_conditional(&self, known: &Coalition, x: &[f64], count: usize, rng: &mut StreamRng) -> Result<Rows> {
        check_width(GaussianModel::n_features(self), known, x)?;
        self.condition(known, x)?.sample(count, rng)
    }

    fn conditional_mean(&self, known: &Coalition, x: &[f64]) -> Result<Vec<f64>> {
        check_width(GaussianModel::n_features(self), known, x)?;
        Ok(self.condition(known, x)?.mean)
    }
}

impl ConditionalSampler for CopulaModel {
    fn n_features(&self) -> usize {
        CopulaModel::n_features(self)
    }

    fn kind(&self) -> &'static str {
        "copula"
    }

    fn sample_conditional(&self, known: &Coalition, x: &[f64], count: usize, rng: &mut StreamRng) -> Result<Rows> {
        check_width(CopulaModel::n_features(self), known, x)?;
        CopulaModel::sample_conditional(self, known, x, count, rng)
    }
}

impl ConditionalSampler for DiscreteJoint {
    fn n_features(&self) -> usize {
        DiscreteJoint::n_features(self)
    }

    fn kind(&self) -> &'static str {
        "discrete"
    }

    fn sample_conditional(&self, known: &Coalition, x: &[f64], count: usize, rng: &mut StreamRng) -> Result<Rows> {
        check_width(DiscreteJoint::n_features(self), known, x)?;
        DiscreteJoint::sample_conditional(self, known, x, count, rng)
    }

    fn conditional_mean(&self, known: &Coalition, x: &[f64]) -> Result<Vec<f64>> {
        check_width(DiscreteJoint::n_features(self), known, x)?;
        known
            .missing()
            .into_iter()
            .map(|j| self.expectation(known, x, |r| r[j]))
            .collect()
    }
}

/// Whole background rows drawn uniformly with replacement.
pub fn sample_marginal_rows(data: &FeatureMatrix, count: usize, rng: &mut StreamRng) -> Rows {
    let n = data.n_rows();
    let mut out = Rows::with_capacity(data.n_features(), count);
    for _ in 0..count {
        let k = rng.random_range(0..n);
        out.push(data.row(k)).expect("width matches");
    }
    out
}

/// Ignores the known values: missing features come from whole background
/// rows, so dependence among them is kept while dependence on the known
/// features is cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarginalSampler {
    pub data: FeatureMatrix,
}

impl ConditionalSampler for MarginalSampler {
    fn n_features(&self) -> usize {
        self.data.n_features()
    }

    fn kind(&self) -> &'static str {
        "marginal"
    }

    fn sample_conditional(&self, known: &Coalition, x: &[f64], count: usize, rng: &mut StreamRng) -> Result<Rows> {
        check_width(self.data.n_features(), known, x)?;
        let t = known.missing();
        let mut out = Rows::with_capacity(t.len(), count);
        let mut buf = alloc::vec![0.0; t.len()];
        let n = self.data.n_rows();
        for _ in 0..count {
            let row = self.data.row(rng.random_range(0..n));
            for (b, &j) in buf.iter_mut().zip(&t) {
                *b = row[j];
            }
            out.push(&buf)?;
        }
        Ok(out)
    }

    fn conditional_mean(&self, known: &Coalition, x: &[f64]) -> Result<Vec<f64>> {
        check_width(self.data.n_features(), known, x)?;
        let means = self.data.column_means();
        Ok(known.missing().into_iter().map(|j| means[j]).collect())
    }
}

/// Any fitted sampler, in its JSON form `{"kind": ..., ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sampler {
    Gaussian(GaussianModel),
    Copula(CopulaModel),
    Discrete(DiscreteJoint),
    Marginal(MarginalSampler),
}

impl Sampler {
    fn inner(&self) -> &dyn ConditionalSampler {
        match self {
            Sampler::Gaussian(s) => s,
            Sampler::Copula(s) => s,
            Sampler::Discrete(s) => s,
            Sampler::Marginal(s) => s,
        }
    }
}

impl ConditionalSampler for Sampler {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn kind(&self) -> &'static str {
        self.inner().kind()
    }

    fn sample_conditional(&self, known: &Coalition, x: &[f64], count: usize, rng: &mut StreamRng) -> Result<Rows> {
        self.inner().sample_conditional(known, x, count, rng)
    }

    fn conditional_mean(&self, known: &Coalition, x: &[f64]) -> Result<Vec<f64>> {
        self.inner().conditional_mean(known, x)
    }

    fn conditional_mean_mc(&self, known: &Coalition, x: &[f64], draws: usize, stream: RngStream) -> Result<Vec<f64>> {
        self.inner().conditional_mean_mc(known, x, draws, stream)
    }
}
