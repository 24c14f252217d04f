use alloc::vec::Vec;

use crate::coalition::{enumerate_coalitions, permutation_weight, Coalition};
use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::value::ValueFunction;

pub const MAX_RESIDUAL_FEATURES: usize = 12;

/// Shapley residuals `r_{i,S} = φ_{i,S} - φ_i` with `φ_{i,S} = v(S ∪ {i}) - v(S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTable {
    phi: Vec<f64>,
    /// Per feature: coalitions without `i` in enumeration order, with residuals.
    residuals: Vec<Vec<(Coalition, f64)>>,
}

impl ResidualTable {
    pub fn n_features(&self) -> usize {
        self.phi.len()
    }

    /// Shapley values the residuals are measured from.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn residuals(&self, i: usize) -> &[(Coalition, f64)] {
        &self.residuals[i]
    }

    /// Euclidean norm of the coalition-indexed residual vector of feature `i`.
    pub fn norm(&self, i: usize) -> f64 {
        libm::sqrt(self.residuals[i].iter().map(|(_, r)| r * r).sum())
    }

    /// Average of `r_{i,S^R}` over all orderings `R`.
    pub fn permutation_average(&self, i: usize) -> f64 {
        let m = self.n_features();
        self.residuals[i]
            .iter()
            .map(|(c, r)| permutation_weight(m, c.len()) * r)
            .sum()
    }
}

/// Every coalition value is estimated from `stream`.
pub fn shapley_residuals(vf: &ValueFunction<'_>, x: &[f64], stream: RngStream) -> Result<ResidualTable> {
    let m = vf.n_features();
    if m == 0 || m > MAX_RESIDUAL_FEATURES {
        return Err(Error::Size {
            got: m,
            max: MAX_RESIDUAL_FEATURES,
        });
    }
    let coalitions = enumerate_coalitions(m)?;
    let mut values = alloc::vec![0.0; 1 << m];
    for c in &coalitions {
        values[c.mask() as usize] = vf.value(c, x, stream)?;
    }
    let mut phi = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for i in 0..m {
        let marginal: Vec<(Coalition, f64)> = coalitions
            .iter()
            .filter(|c| !c.contains(i))
            .map(|c| {
                let mask = c.mask() as usize;
                (c.clone(), values[mask | 1 << i] - values[mask])
            })
            .collect();
        let phi_i: f64 = marginal
            .iter()
            .map(|(c, d)| permutation_weight(m, c.len()) * d)
            .sum();
        phi.push(phi_i);
        residuals.push(marginal.into_iter().map(|(c, d)| (c, d - phi_i)).collect());
    }
    Ok(ResidualTable { phi, residuals })
}
