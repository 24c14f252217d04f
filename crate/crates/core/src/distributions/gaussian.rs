use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::linalg::{self, jittered_cholesky, nested_rows, submatrix, subvector};
use crate::rng::StreamRng;
use crate::types::{FeatureMatrix, Rows};

/// Multivariate normal over all features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    names: Vec<String>,
    mean: Vec<f64>,
    #[serde(with = "nested_rows")]
    cov: DMatrix<f64>,
    /// Features with zero sample variance.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constant: Vec<usize>,
}

/// Sample mean and covariance (divisor `n - 1`), symmetrized.
pub fn fit_gaussian(data: &FeatureMatrix) -> GaussianModel {
    let mean = data.column_means();
    let mut cov = linalg::sample_covariance(data.rows().iter(), &mean);
    linalg::symmetrize(&mut cov);
    let constant = (0..mean.len()).filter(|&i| cov[(i, i)] <= 0.0).collect();
    GaussianModel {
        names: data.names().to_vec(),
        mean,
        cov,
        constant,
    }
}

impl GaussianModel {
    pub fn new(names: Vec<String>, mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let m = mean.len();
        if names.len() != m || cov.nrows() != m || cov.ncols() != m {
            return Err(Error::Dimension {
                expected: m,
                got: cov.nrows(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite Gaussian parameters".into()));
        }
        for i in 0..m {
            if cov[(i, i)] < 0.0 {
                return Err(Error::InvalidInput("negative variance".into()));
            }
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * (1.0 + cov[(i, j)].abs()) {
                    return Err(Error::InvalidInput("covariance is not symmetric".into()));
                }
            }
        }
        if jittered_cholesky(&cov).is_none() {
            return Err(Error::InvalidInput("covariance is not positive semi-definite".into()));
        }
        let constant = (0..m).filter(|&i| cov[(i, i)] == 0.0).collect();
        Ok(Self {
            names,
            mean,
            cov,
            constant,
        })
    }

    /// Standard bivariate normal with correlation `alpha`.
    pub fn bivariate(alpha: f64) -> Result<Self> {
        Self::new(
            alloc::vec!["X1".into(), "X2".into()],
            alloc::vec![0.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[1.0, alpha, alpha, 1.0]),
        )
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn constant_features(&self) -> &[usize] {
        &self.constant
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Distribution of the features outside `known` given `x` on `known`.
    /// Only the entries of `x` at `known` are read.
    pub fn condition(&self, known: &Coalition, x: &[f64]) -> Result<ConditionalGaussian> {
        let m = self.n_features();
        if known.n_features() != m || x.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: x.len(),
            });
        }
        let s = known.members();
        let t = known.missing();
        let mu_t = subvector(&self.mean, &t);
        let cov_tt = submatrix(&self.cov, &t, &t);
        if s.is_empty() || t.is_empty() {
            return Ok(ConditionalGaussian {
                target: t,
                mean: mu_t.iter().copied().collect(),
                cov: cov_tt,
            });
        }
        let cov_ss = submatrix(&self.cov, &s, &s);
        let cov_st = submatrix(&self.cov, &s, &t);
        let (chol, _) = jittered_cholesky(&cov_ss).ok_or_else(|| Error::Singular {
            features: s.iter().map(|&i| self.names[i].clone()).collect(),
        })?;
        let diff = subvector(x, &s) - subvector(&self.mean, &s);
        // A = Σ_SS^{-1} Σ_ST
        let a = chol.solve(&cov_st);
        let mean: DVector<f64> = mu_t + a.transpose() * diff;
        let mut cov = cov_tt - cov_st.transpose() * a;
        linalg::symmetrize(&mut cov);
        Ok(ConditionalGaussian {
            target: t,
            mean: mean.iter().copied().collect(),
            cov,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussian {
    /// Features being distributed, ascending.
    pub target: Vec<usize>,
    pub mean: Vec<f64>,
    pub cov: DMatrix<f64>,
}

impl ConditionalGaussian {
    pub fn dim(&self) -> usize {
        self.target.len()
    }

    /// Lower factor `L` with `L Lᵀ ≈ cov`, jittered when singular.
    pub fn factor(&self) -> Result<DMatrix<f64>> {
        if self.dim() == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let (chol, _) = jittered_cholesky(&self.cov).ok_or_else(|| Error::Singular {
            features: self.target.iter().map(|i| alloc::format!("#{i}")).collect(),
        })?;
        Ok(chol.unpack())
    }

    pub fn sample(&self, count: usize, rng: &mut StreamRng) -> Result<Rows> {
        let l = self.factor()?;
        Ok(self.sample_with(&l, count, rng))
    }

    pub(crate) fn sample_with(&self, l: &DMatrix<f64>, count: usize, rng: &mut StreamRng) -> Rows {
        let d = self.dim();
        let mut out = Rows::with_capacity(d, count);
        let mut z = alloc::vec![0.0; d];
        let mut y = alloc::vec![0.0; d];
        for _ in 0..count {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(rng);
            }
            for i in 0..d {
                let mut acc = self.mean[i];
                for j in 0..=i {
                    acc += l[(i, j)] * z[j];
                }
                y[i] = acc;
            }
            out.push(&y).expect("width matches");
        }
        out
    }
}
