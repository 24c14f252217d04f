use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::types::{FeatureMatrix, Rows};

/// Finite joint distribution over exact value vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint")]
pub struct DiscreteJoint {
    support: Rows,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawJoint {
    support: Rows,
    probs: Vec<f64>,
}

impl TryFrom<RawJoint> for DiscreteJoint {
    type Error = Error;
    fn try_from(raw: RawJoint) -> Result<Self> {
        DiscreteJoint::new(raw.support, raw.probs)
    }
}

impl DiscreteJoint {
    pub fn new(support: Rows, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() || support.is_empty() {
            return Err(Error::Dimension {
                expected: support.len(),
                got: probs.len(),
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput("probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(alloc::format!("probabilities sum to {total}, not 1")));
        }
        for i in 0..support.len() {
            if support.row(i).iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("support contains non-finite values".into()));
            }
            if (0..i).any(|j| support.row(j) == support.row(i)) {
                return Err(Error::InvalidInput("support rows must be distinct".into()));
            }
        }
        Ok(Self { support, probs })
    }

    /// Empirical distribution of the distinct rows of `data`, in order of
    /// first appearance.
    pub fn from_data(data: &FeatureMatrix) -> Result<Self> {
        let mut support = Rows::new(data.n_features());
        let mut counts: Vec<usize> = Vec::new();
        for r in data.rows().iter() {
            match (0..support.len()).find(|&j| support.row(j) == r) {
                Some(j) => counts[j] += 1,
                None => {
                    support.push(r)?;
                    counts.push(1);
                }
            }
        }
        let n = data.n_rows() as f64;
        let mut probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        // absorb rounding so the sum is 1 to within an ulp or two
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Self::new(support, probs)
    }

    pub fn n_features(&self) -> usize {
        self.support.width()
    }

    pub fn support(&self) -> &Rows {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Support indices consistent with `x` on `known`, with renormalized
    /// probabilities.
    pub fn conditional(&self, known: &Coalition, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        let s = known.members();
        let matches: Vec<(usize, f64)> = (0..self.support.len())
            .filter(|&k| self.probs[k] > 0.0)
            .filter(|&k| s.iter().all(|&i| self.support.row(k)[i] == x[i]))
            .map(|k| (k, self.probs[k]))
            .collect();
        let total: f64 = matches.iter().map(|(_, p)| p).sum();
        if matches.is_empty() || total <= 0.0 {
            return Err(Error::NoMatchingSupport);
        }
        Ok(matches.into_iter().map(|(k, p)| (k, p / total)).collect())
    }

    /// `E[g(X) | X_known = x_known]` by exact summation.
    pub fn expectation(&self, known: &Coalition, x: &[f64], mut g: impl FnMut(&[f64]) -> f64) -> Result<f64> {
        Ok(self
            .conditional(known, x)?
            .into_iter()
            .map(|(k, p)| p * g(self.support.row(k)))
            .sum())
    }

    pub fn sample_conditional(&self, known: &Coalition, x: &[f64], count: usize, rng: &mut StreamRng) -> Result<Rows> {
        let cond = self.conditional(known, x)?;
        let t = known.missing();
        let mut out = Rows::with_capacity(t.len(), count);
        let mut buf = alloc::vec![0.0; t.len()];
        for _ in 0..count {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = cond[cond.len() - 1].0;
            for &(k, p) in &cond {
                acc += p;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            let row = self.support.row(pick);
            for (b, &j) in buf.iter_mut().zip(&t) {
                *b = row[j];
            }
            out.push(&buf)?;
        }
        Ok(out)
    }

    /// Two Bernoulli(1/2) features that agree with probability `p_equal`.
    pub fn agreeing_bits(p_equal: f64) -> Result<Self> {
        let half = p_equal / 2.0;
        let off = (1.0 - p_equal) / 2.0;
        Self::new(
            Rows::from_rows(2, &[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])?,
            alloc::vec![half, off, off, half],
        )
    }
}
