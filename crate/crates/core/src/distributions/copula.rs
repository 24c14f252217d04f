//! Gaussian copula with empirical marginals.
//!
//! Each feature is mapped to a normal score through its empirical CDF
//! (linear interpolation between order statistics, clamped to the observed
//! range). Dependence lives in the correlation matrix of those scores.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gaussian::GaussianModel;
use super::normal;
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::linalg::{self, nested_rows};
use crate::rng::StreamRng;
use crate::types::{FeatureMatrix, Rows};

/// Empirical marginal. Knot `k` pairs the `k`-th distinct sorted value
/// with the mean plotting position `(rank + 1) / (n + 1)` of its ties.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMarginal {
    sorted: Vec<f64>,
    knots: Vec<f64>,
    levels: Vec<f64>,
}

impl EmpiricalMarginal {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("marginal needs finite values".into()));
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mut knots = Vec::new();
        let mut levels = Vec::new();
        let mut start = 0;
        while start < values.len() {
            let mut end = start;
            while end + 1 < values.len() && values[end + 1] == values[start] {
                end += 1;
            }
            // mean of (k+1)/(n+1) over k in start..=end
            let mid = (start + end) as f64 / 2.0 + 1.0;
            knots.push(values[start]);
            levels.push(mid / (n + 1.0));
            start = end + 1;
        }
        Ok(Self {
            sorted: values,
            knots,
            levels,
        })
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn is_degenerate(&self) -> bool {
        self.knots.len() < 2
    }

    pub fn min(&self) -> f64 {
        self.knots[0]
    }

    pub fn max(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        interpolate(&self.knots, &self.levels, x)
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        interpolate(&self.levels, &self.knots, u)
    }
}

/// Piecewise-linear map through `(xs[k], ys[k])`, clamped outside.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v < x);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[xs.len() - 1];
    }
    if xs[k] == x {
        return ys[k];
    }
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCopula", into = "RawCopula")]
pub struct CopulaModel {
    names: Vec<String>,
    marginals: Vec<EmpiricalMarginal>,
    correlation: DMatrix<f64>,
    latent: GaussianModel,
}

#[derive(Serialize, Deserialize)]
struct RawCopula {
    names: Vec<String>,
    marginals: Vec<Vec<f64>>,
    #[serde(with = "nested_rows")]
    correlation: DMatrix<f64>,
}

impl TryFrom<RawCopula> for CopulaModel {
    type Error = Error;
    fn try_from(raw: RawCopula) -> Result<Self> {
        let marginals = raw
            .marginals
            .into_iter()
            .map(EmpiricalMarginal::new)
            .collect::<Result<Vec<_>>>()?;
        CopulaModel::from_parts(raw.names, marginals, raw.correlation)
    }
}

impl From<CopulaModel> for RawCopula {
    fn from(c: CopulaModel) -> Self {
        RawCopula {
            names: c.names,
            marginals: c.marginals.into_iter().map(|m| m.sorted).collect(),
            correlation: c.correlation,
        }
    }
}

pub fn fit_copula(data: &FeatureMatrix) -> Result<CopulaModel> {
    let m = data.n_features();
    let marginals = (0..m)
        .map(|j| EmpiricalMarginal::new(data.column(j)))
        .collect::<Result<Vec<_>>>()?;
    let mut scores = Rows::with_capacity(m, data.n_rows());
    let mut z = alloc::vec![0.0; m];
    for r in data.rows().iter() {
        for j in 0..m {
            z[j] = normal::quantile(marginals[j].cdf(r[j]));
        }
        scores.push(&z)?;
    }
    let mean = alloc::vec![0.0; m];
    let mut cov = linalg::sample_covariance(scores.iter(), &mean);
    linalg::symmetrize(&mut cov);
    let mut corr = DMatrix::identity(m, m);
    for i in 0..m {
        for j in 0..m {
            let d = libm::sqrt(cov[(i, i)] * cov[(j, j)]);
            if i != j && d > 0.0 {
                corr[(i, j)] = (cov[(i, j)] / d).clamp(-1.0, 1.0);
            }
        }
    }
    CopulaModel::from_parts(data.names().to_vec(), marginals, corr)
}

impl CopulaModel {
    pub fn from_parts(names: Vec<String>, marginals: Vec<EmpiricalMarginal>, correlation: DMatrix<f64>) -> Result<Self> {
        let m = marginals.len();
        if correlation.nrows() != m || correlation.ncols() != m || names.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: correlation.nrows(),
            });
        }
        for i in 0..m {
            if (correlation[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput("correlation diagonal must be 1".into()));
            }
        }
        let latent = GaussianModel::new(names.clone(), alloc::vec![0.0; m], correlation.clone())?;
        Ok(Self {
            names,
            marginals,
            correlation,
            latent,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_features(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[EmpiricalMarginal] {
        &self.marginals
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    pub fn to_scores(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.marginals)
            .map(|(v, m)| normal::quantile(m.cdf(*v)))
            .collect()
    }

    pub fn from_score(&self, feature: usize, z: f64) -> f64 {
        self.marginals[feature].inverse_cdf(normal::cdf(z))
    }

    pub fn sample_conditional(&self, known: &Coalition, x: &[f64], count: usize, rng: &mut StreamRng) -> Result<Rows> {
        if let Some(j) = self.marginals.iter().position(EmpiricalMarginal::is_degenerate) {
            return Err(Error::DegenerateMarginal(self.names[j].clone()));
        }
        let z = self.to_scores(x);
        let cond = self.latent.condition(known, &z)?;
        let mut draws = cond.sample(count, rng)?;
        for i in 0..draws.len() {
            let row = draws.row_mut(i);
            for (v, &t) in row.iter_mut().zip(&cond.target) {
                *v = self.from_score(t, *v);
            }
        }
        Ok(draws)
    }
}
