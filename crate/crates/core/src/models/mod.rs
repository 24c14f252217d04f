//! Black-box predictors.

mod additive;
mod forest;
mod linear;
mod tabulated;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use additive::{AdditiveModel, Component, ComponentSubset};
pub use forest::{fit_forest, ForestModel, ForestParams, ForestTask, Node};
pub use linear::{fit_ols, LinearModel, OLS_RIDGE};
pub use tabulated::TabulatedModel;

use crate::error::{Error, Result};
use crate::types::Rows;

/// A batch prediction function `f`.
pub trait Predictor {
    fn n_features(&self) -> usize;

    /// One output per row. Implementations must be deterministic.
    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>>;

    /// Identifier recorded in result metadata.
    fn id(&self) -> String {
        String::from("model")
    }

    fn predict_one(&self, x: &[f64]) -> Result<f64> {
        let rows = Rows::from_flat(x.len(), x.to_vec())?;
        Ok(self.predict_batch(&rows)?[0])
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        (**self).predict_batch(rows)
    }
    fn id(&self) -> String {
        (**self).id()
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        (**self).predict_batch(rows)
    }
    fn id(&self) -> String {
        (**self).id()
    }
}

impl<P: Predictor + ?Sized> Predictor for Arc<P> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        (**self).predict_batch(rows)
    }
    fn id(&self) -> String {
        (**self).id()
    }
}

pub(crate) fn check_rows(rows: &Rows, width: usize) -> Result<()> {
    if rows.width() != width {
        return Err(Error::Dimension {
            expected: width,
            got: rows.width(),
        });
    }
    if rows.as_flat().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("prediction rows must be finite".into()));
    }
    Ok(())
}

/// Probability clamp applied before taking log odds.
pub const LOG_ODDS_EPS: f64 = 1e-6;

pub fn log_odds(p: f64) -> f64 {
    let p = p.clamp(LOG_ODDS_EPS, 1.0 - LOG_ODDS_EPS);
    libm::log(p / (1.0 - p))
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

/// Wraps a probability model so that it outputs log odds.
#[derive(Debug, Clone)]
pub struct LogOdds<P>(pub P);

impl<P: Predictor> Predictor for LogOdds<P> {
    fn n_features(&self) -> usize {
        self.0.n_features()
    }

    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        Ok(self.0.predict_batch(rows)?.into_iter().map(log_odds).collect())
    }

    fn id(&self) -> String {
        alloc::format!("log-odds({})", self.0.id())
    }
}

/// Predictor backed by a closure over one row.
pub struct FnModel<F> {
    n_features: usize,
    name: String,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnModel<F> {
    pub fn new(n_features: usize, name: &str, f: F) -> Self {
        Self {
            n_features,
            name: name.into(),
            f,
        }
    }
}

impl<F: Fn(&[f64]) -> f64> Predictor for FnModel<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        check_rows(rows, self.n_features)?;
        Ok(rows.iter().map(&self.f).collect())
    }

    fn id(&self) -> String {
        self.name.clone()
    }
}

/// In-process model file form `{"kind": ..., ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Linear(LinearModel),
    Forest(ForestModel),
    Tabulated(TabulatedModel),
}

impl Model {
    fn inner(&self) -> &dyn Predictor {
        match self {
            Model::Linear(m) => m,
            Model::Forest(m) => m,
            Model::Tabulated(m) => m,
        }
    }
}

impl Predictor for Model {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }
    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        self.inner().predict_batch(rows)
    }
    fn id(&self) -> String {
        self.inner().id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_odds_examples() {
        assert_eq!(log_odds(0.5), 0.0);
        assert!((log_odds(1.0) - 13.815_509_557_963_774).abs() < 1e-9);
        assert!((log_odds(0.731_058_5) - 1.0).abs() < 1e-6);
        assert!(log_odds(0.0).is_finite());
    }

    #[test]
    fn log_odds_inverts_sigmoid() {
        for k in -1300..=1300 {
            let z = k as f64 / 100.0;
            assert!((log_odds(sigmoid(z)) - z).abs() < 1e-6, "z = {z}");
        }
    }

    #[test]
    fn model_json_kinds() {
        let m = Model::Linear(LinearModel::new(alloc::vec![2.0, 3.0], 0.0));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"kind":"linear","coefficients":[2.0,3.0],"intercept":0.0}"#);
        assert_eq!(serde_json::from_str::<Model>(&s).unwrap(), m);
    }
}
