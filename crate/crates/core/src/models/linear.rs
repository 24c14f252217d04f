use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_rows, Predictor};
use crate::error::{Error, Result};
use crate::types::{FeatureMatrix, Rows};

/// Ridge penalty used when the design matrix is rank deficient.
pub const OLS_RIDGE: f64 = 1e-8;

/// `f(x) = intercept + Σ coefficients[i] * x[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn new(coefficients: Vec<f64>, intercept: f64) -> Self {
        Self {
            coefficients,
            intercept,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
    }
}

impl Predictor for LinearModel {
    fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        check_rows(rows, self.coefficients.len())?;
        Ok(rows.iter().map(|r| self.eval(r)).collect())
    }

    fn id(&self) -> String {
        "linear".into()
    }
}

/// Ordinary least squares through a QR factorization of the centered
/// design; falls back to ridge [`OLS_RIDGE`] if the design is rank deficient.
pub fn fit_ols(data: &FeatureMatrix, target: &[f64]) -> Result<LinearModel> {
    let n = data.n_rows();
    let m = data.n_features();
    if target.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: target.len(),
        });
    }
    if n <= m {
        return Err(Error::Underdetermined { rows: n, features: m });
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("target must be finite".into()));
    }
    let means = data.column_means();
    let y_mean = target.iter().sum::<f64>() / n as f64;
    let x = DMatrix::from_fn(n, m, |i, j| data.row(i)[j] - means[j]);
    let y = DVector::from_iterator(n, target.iter().map(|v| v - y_mean));

    let qr = x.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = r.diagonal().iter().map(|d| d.abs()).collect();
    let largest = diag.iter().copied().fold(0.0, f64::max);
    let full_rank = largest > 0.0 && diag.iter().all(|&d| d > 1e-10 * largest);

    let beta = if full_rank {
        let mut qty = y.clone();
        qr.q_tr_mul(&mut qty);
        let qty = qty.rows(0, m).into_owned();
        r.solve_upper_triangular(&qty)
    } else {
        None
    };
    let beta = match beta {
        Some(b) => b,
        None => {
            let mut gram = x.transpose() * &x;
            for i in 0..m {
                gram[(i, i)] += OLS_RIDGE;
            }
            let rhs = x.transpose() * &y;
            gram.cholesky()
                .map(|c| c.solve(&rhs))
                .ok_or(Error::Underdetermined { rows: n, features: m })?
        }
    };
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(&means).map(|(b, mu)| b * mu).sum::<f64>();
    Ok(LinearModel::new(coefficients, intercept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use alloc::vec;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let w = rows[0].len();
        let names = (0..w).map(|i| alloc::format!("x{i}")).collect();
        FeatureMatrix::new(names, Rows::from_rows(w, &rows).unwrap()).unwrap()
    }

    #[test]
    fn predicts_linear_combination() {
        let m = LinearModel::new(vec![2.0, 3.0], 0.0);
        assert_eq!(m.predict_one(&[1.0, 1.0]).unwrap(), 5.0);
        assert!(m.predict_one(&[1.0]).is_err());
    }

    #[test]
    fn recovers_exact_linear_data() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + 3.0 * r[1]).collect();
        let fit = fit_ols(&matrix(rows), &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-9);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-9);
        assert!(fit.intercept.abs() < 1e-9);
    }

    #[test]
    fn constant_target() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let fit = fit_ols(&matrix(rows), &[4.5; 10]).unwrap();
        assert!(fit.coefficients.iter().all(|c| c.abs() < 1e-9));
        assert!((fit.intercept - 4.5).abs() < 1e-9);
    }

    #[test]
    fn noisy_slope_is_consistent() {
        let mut rng = RngStream::new(12).rng();
        let noise = Normal::new(0.0, 0.1).unwrap();
        let rows: Vec<Vec<f64>> = (0..10_000).map(|_| vec![rng.random::<f64>() * 4.0 - 2.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] + noise.sample(&mut rng)).collect();
        let fit = fit_ols(&matrix(rows), &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 0.01);
    }

    #[test]
    fn collinear_design_falls_back_to_ridge() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 5.0 * i as f64).collect();
        let fit = fit_ols(&matrix(rows.clone()), &y).unwrap();
        for r in &rows {
            assert!((fit.eval(r) - 5.0 * r[0]).abs() < 1e-4);
        }
    }

    #[test]
    fn underdetermined_is_an_error() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(
            fit_ols(&matrix(rows), &[1.0, 2.0]).unwrap_err(),
            Error::Underdetermined { rows: 2, features: 2 }
        );
    }
}
