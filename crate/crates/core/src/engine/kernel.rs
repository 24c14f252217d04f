//! Kernel SHAP: Shapley values as the solution of a weighted least-squares
//! fit of an additive model to the coalition values.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;

use super::value::ValueFunction;
use crate::coalition::{enumerate_coalitions, Coalition};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::AttributionVector;

/// Ridge term added when the normal equations are singular.
pub const KERNEL_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    /// Enumerate every coalition while `2^M` is at most this.
    pub max_enumerated: usize,
    /// Coalitions drawn (in complementary pairs) when not enumerating.
    pub samples: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            max_enumerated: 2048,
            samples: 2048,
        }
    }
}

/// Shapley kernel weight `(M-1) / (C(M,|S|) |S| (M-|S|))` for `0 < |S| < M`.
pub fn shapley_kernel_weight(n_features: usize, size: usize) -> f64 {
    if size == 0 || size >= n_features {
        return f64::INFINITY;
    }
    let m = n_features as f64;
    let s = size as f64;
    (m - 1.0) / (binomial(n_features, size) * s * (m - s))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn kernel_shap(vf: &ValueFunction<'_>, x: &[f64], stream: RngStream) -> Result<AttributionVector> {
    kernel_shap_with(vf, x, stream, &KernelConfig::default())
}

/// Every coalition value is estimated from the same `stream`, so Monte Carlo
/// noise is shared across coalitions rather than independent.
pub fn kernel_shap_with(vf: &ValueFunction<'_>, x: &[f64], stream: RngStream, config: &KernelConfig) -> Result<AttributionVector> {
    let m = vf.n_features();
    if m == 0 {
        return Err(Error::Size { got: 0, max: usize::MAX });
    }
    let v_empty = vf.value(&Coalition::empty(m), x, stream)?;
    let v_full = vf.value(&Coalition::full(m), x, stream)?;
    let delta = v_full - v_empty;
    if m == 1 {
        return Ok(AttributionVector {
            base: v_empty,
            phi: alloc::vec![delta],
            regularized: false,
        });
    }

    let enumerate = m < 63 && (1usize << m) <= config.max_enumerated;
    let design: Vec<(Coalition, f64)> = if enumerate {
        enumerate_coalitions(m)?
            .into_iter()
            .filter(|c| !c.is_empty() && !c.is_full())
            .map(|c| {
                let w = shapley_kernel_weight(m, c.len());
                (c, w)
            })
            .collect()
    } else {
        sample_coalitions(m, config.samples.max(2), stream.substream(u64::MAX))
    };

    // Eliminate the last feature through the efficiency constraint.
    let p = m - 1;
    let mut xtwx = DMatrix::<f64>::zeros(p, p);
    let mut xtwy = DVector::<f64>::zeros(p);
    let mut row = alloc::vec![0.0; p];
    for (c, w) in &design {
        let v = vf.value(c, x, stream)?;
        let last = if c.contains(p) { 1.0 } else { 0.0 };
        let y = v - v_empty - last * delta;
        for (j, r) in row.iter_mut().enumerate() {
            *r = if c.contains(j) { 1.0 } else { 0.0 } - last;
        }
        for a in 0..p {
            if row[a] == 0.0 {
                continue;
            }
            xtwy[a] += w * row[a] * y;
            for b in 0..p {
                xtwx[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    let (beta, regularized) = match xtwx.clone().cholesky() {
        Some(c) => (c.solve(&xtwy), false),
        None => {
            let mut ridge = xtwx;
            for i in 0..p {
                ridge[(i, i)] += KERNEL_RIDGE;
            }
            let c = ridge
                .cholesky()
                .ok_or_else(|| Error::Unsupported("kernel regression is singular even with ridge".into()))?;
            (c.solve(&xtwy), true)
        }
    };
    let mut phi: Vec<f64> = beta.iter().copied().collect();
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    Ok(AttributionVector {
        base: v_empty,
        phi,
        regularized,
    })
}

/// Coalition sizes drawn in proportion to their total kernel weight, members
/// uniform within a size; each draw also adds its complement. Returns
/// distinct coalitions weighted by draw count.
fn sample_coalitions(m: usize, samples: usize, stream: RngStream) -> Vec<(Coalition, f64)> {
    let mut rng = stream.rng();
    let size_mass: Vec<f64> = (1..m).map(|s| 1.0 / (s as f64 * (m - s) as f64)).collect();
    let total: f64 = size_mass.iter().sum();
    let mut counts: BTreeMap<Coalition, f64> = BTreeMap::new();
    for _ in 0..samples.div_ceil(2) {
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut size = m - 1;
        for (k, mass) in size_mass.iter().enumerate() {
            acc += mass;
            if u < acc {
                size = k + 1;
                break;
            }
        }
        let mut c = Coalition::empty(m);
        for i in index::sample(&mut rng, m, size) {
            c.insert(i);
        }
        let comp = c.complement();
        *counts.entry(c).or_insert(0.0) += 1.0;
        *counts.entry(comp).or_insert(0.0) += 1.0;
    }
    counts.into_iter().collect()
}
