use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use super::{check_rows, Predictor};
use crate::error::{Error, Result};
use crate::types::Rows;

type ComponentFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// One additive term `f_A`; reads only the features in `features`.
#[derive(Clone)]
pub struct Component {
    features: Vec<usize>,
    f: ComponentFn,
}

impl Component {
    pub fn new(features: Vec<usize>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            features,
            f: Arc::new(f),
        }
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.features.contains(&i)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Component").field("features", &self.features).finish()
    }
}

/// `f(x) = Σ_A f_A(x_A)`.
#[derive(Debug, Clone)]
pub struct AdditiveModel {
    n_features: usize,
    components: Vec<Component>,
}

impl AdditiveModel {
    pub fn new(n_features: usize, components: Vec<Component>) -> Result<Self> {
        for c in &components {
            if let Some(&i) = c.features.iter().find(|&&i| i >= n_features) {
                return Err(Error::Index { index: i, len: n_features });
            }
        }
        Ok(Self {
            n_features,
            components,
        })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// The sum of the components selected by `keep`.
    pub fn subset(&self, keep: impl Fn(&Component) -> bool) -> ComponentSubset<'_> {
        ComponentSubset {
            model: self,
            include: self.components.iter().map(keep).collect(),
        }
    }
}

impl Predictor for AdditiveModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        check_rows(rows, self.n_features)?;
        Ok(rows.iter().map(|r| self.components.iter().map(|c| c.eval(r)).sum()).collect())
    }

    fn id(&self) -> String {
        "additive".into()
    }
}

#[derive(Debug, Clone)]
pub struct ComponentSubset<'a> {
    model: &'a AdditiveModel,
    include: Vec<bool>,
}

impl Predictor for ComponentSubset<'_> {
    fn n_features(&self) -> usize {
        self.model.n_features
    }

    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        check_rows(rows, self.model.n_features)?;
        Ok(rows
            .iter()
            .map(|r| {
                self.model
                    .components
                    .iter()
                    .zip(&self.include)
                    .filter(|(_, keep)| **keep)
                    .map(|(c, _)| c.eval(r))
                    .sum()
            })
            .collect())
    }

    fn id(&self) -> String {
        "additive-subset".into()
    }
}
