use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::coalition::Coalition;
use crate::distributions::{sample_marginal_rows, ConditionalSampler, DiscreteJoint, GaussianModel};
use crate::error::{Error, Result};
use crate::models::Predictor;
use crate::rng::RngStream;
use crate::types::{FeatureMatrix, Rows};

/// Largest quadrature grid evaluated by [`ValueKind::GaussianQuadrature`].
pub const MAX_QUADRATURE_POINTS: usize = 1_000_000;

/// How missing features are integrated out.
#[derive(Clone, Copy)]
pub enum ValueKind<'a> {
    /// `E[f(X) | X_S = x_S]` from `draws` conditional samples.
    Conditional {
        sampler: &'a dyn ConditionalSampler,
        draws: usize,
    },
    /// `E[f(x_S, X_S̄)]` from `draws` whole background rows.
    Interventional { background: &'a FeatureMatrix, draws: usize },
    /// Conditional expectation by summation over a finite joint.
    ExactDiscrete { joint: &'a DiscreteJoint },
    /// Conditional expectation under a Gaussian by tensor Gauss-Hermite
    /// quadrature of the given order; exact for polynomial models of degree
    /// below `2 * order`.
    GaussianQuadrature { gaussian: &'a GaussianModel, order: usize },
}

/// The cooperative game `v(S)` played by the features of one sample.
#[derive(Clone, Copy)]
pub struct ValueFunction<'a> {
    model: &'a dyn Predictor,
    kind: ValueKind<'a>,
}

impl<'a> ValueFunction<'a> {
    pub fn new(model: &'a dyn Predictor, kind: ValueKind<'a>) -> Self {
        Self { model, kind }
    }

    pub fn conditional(model: &'a dyn Predictor, sampler: &'a dyn ConditionalSampler, draws: usize) -> Self {
        Self::new(model, ValueKind::Conditional { sampler, draws })
    }

    pub fn interventional(model: &'a dyn Predictor, background: &'a FeatureMatrix, draws: usize) -> Self {
        Self::new(model, ValueKind::Interventional { background, draws })
    }

    pub fn exact_discrete(model: &'a dyn Predictor, joint: &'a DiscreteJoint) -> Self {
        Self::new(model, ValueKind::ExactDiscrete { joint })
    }

    pub fn gaussian_quadrature(model: &'a dyn Predictor, gaussian: &'a GaussianModel, order: usize) -> Self {
        Self::new(model, ValueKind::GaussianQuadrature { gaussian, order })
    }

    pub fn model(&self) -> &'a dyn Predictor {
        self.model
    }

    pub fn kind(&self) -> ValueKind<'a> {
        self.kind
    }

    pub fn n_features(&self) -> usize {
        self.model.n_features()
    }

    /// True when `value` involves no sampling.
    pub fn is_exact(&self) -> bool {
        matches!(
            self.kind,
            ValueKind::ExactDiscrete { .. } | ValueKind::GaussianQuadrature { .. }
        )
    }

    pub fn sampler_id(&self) -> String {
        match self.kind {
            ValueKind::Conditional { sampler, .. } => sampler.kind().into(),
            ValueKind::Interventional { .. } => "interventional".into(),
            ValueKind::ExactDiscrete { .. } => "discrete-exact".into(),
            ValueKind::GaussianQuadrature { .. } => "gaussian-quadrature".into(),
        }
    }

    /// `v(S)` for `known = S` at sample `x`. Sampling kinds draw from `stream`.
    pub fn value(&self, known: &Coalition, x: &[f64], stream: RngStream) -> Result<f64> {
        let m = self.model.n_features();
        if x.len() != m || known.n_features() != m {
            return Err(Error::Dimension {
                expected: m,
                got: x.len(),
            });
        }
        if known.is_full() {
            return self.model.predict_one(x);
        }
        match self.kind {
            ValueKind::Conditional { sampler, draws } => {
                let missing = known.missing();
                let fill = sampler.sample_conditional(known, x, draws.max(1), &mut stream.rng())?;
                let mut rows = Rows::with_capacity(m, fill.len());
                let mut buf = x.to_vec();
                for r in fill.iter() {
                    for (&j, v) in missing.iter().zip(r) {
                        buf[j] = *v;
                    }
                    rows.push(&buf)?;
                }
                mean(&self.model.predict_batch(&rows)?)
            }
            ValueKind::Interventional { background, draws } => {
                let mut rows = sample_marginal_rows(background, draws.max(1), &mut stream.rng());
                let members = known.members();
                for k in 0..rows.len() {
                    let row = rows.row_mut(k);
                    for &j in &members {
                        row[j] = x[j];
                    }
                }
                mean(&self.model.predict_batch(&rows)?)
            }
            ValueKind::ExactDiscrete { joint } => {
                let cond = joint.conditional(known, x)?;
                let members = known.members();
                let mut rows = Rows::with_capacity(m, cond.len());
                for &(k, _) in &cond {
                    let mut r = joint.support().row(k).to_vec();
                    for &j in &members {
                        r[j] = x[j];
                    }
                    rows.push(&r)?;
                }
                let out = self.model.predict_batch(&rows)?;
                Ok(out.iter().zip(&cond).map(|(f, (_, p))| f * p).sum())
            }
            ValueKind::GaussianQuadrature { gaussian, order } => {
                let cond = gaussian.condition(known, x)?;
                let l = cond.factor()?;
                let (nodes, weights) = gauss_hermite(order)?;
                let d = cond.dim();
                let points = checked_grid_size(order, d)?;
                let mut rows = Rows::with_capacity(m, points);
                let mut grid_w = Vec::with_capacity(points);
                let mut idx = alloc::vec![0usize; d];
                let mut buf = x.to_vec();
                for _ in 0..points {
                    let mut w = 1.0;
                    for (k, &t) in cond.target.iter().enumerate() {
                        let mut v = cond.mean[k];
                        for (j, &ij) in idx.iter().enumerate().take(k + 1) {
                            v += l[(k, j)] * nodes[ij];
                        }
                        buf[t] = v;
                    }
                    for &ij in &idx {
                        w *= weights[ij];
                    }
                    rows.push(&buf)?;
                    grid_w.push(w);
                    // odometer increment
                    for digit in idx.iter_mut() {
                        *digit += 1;
                        if *digit < order {
                            break;
                        }
                        *digit = 0;
                    }
                }
                let out = self.model.predict_batch(&rows)?;
                Ok(out.iter().zip(&grid_w).map(|(f, w)| f * w).sum())
            }
        }
    }
}

fn mean(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidInput("no model outputs to average".into()));
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

fn checked_grid_size(order: usize, dim: usize) -> Result<usize> {
    let mut size = 1usize;
    for _ in 0..dim {
        size = size
            .checked_mul(order)
            .filter(|&s| s <= MAX_QUADRATURE_POINTS)
            .ok_or_else(|| {
                Error::Unsupported(alloc::format!(
                    "quadrature of order {order} over {dim} dimensions exceeds {MAX_QUADRATURE_POINTS} points"
                ))
            })?;
    }
    Ok(size)
}

/// Nodes and weights of `order`-point Gauss-Hermite quadrature for the
/// standard normal density (weights sum to one), via the eigen-decomposition
/// of the Jacobi matrix of the Hermite recurrence.
pub fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 {
        return Err(Error::InvalidInput("quadrature order must be positive".into()));
    }
    let mut jacobi = DMatrix::zeros(order, order);
    for k in 1..order {
        let b = libm::sqrt(k as f64);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok((
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1 / total).collect(),
    ))
}
