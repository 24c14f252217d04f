//! Exact decomposition by enumeration over orderings and a finite joint.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::coalition::{all_permutations, Coalition};
use crate::distributions::{DiscreteJoint, Sampler};
use crate::error::{Error, Result};
use crate::models::{AdditiveModel, Predictor};
use crate::types::{Decomposition, DecompositionMeta, Rows};

pub const MAX_EXACT_FEATURES: usize = 8;

/// Terms of one feature's contribution for one preceding set `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Contribution {
    /// `E[f(x_S, x_i, X_rest) | x_S] - E[f(x_S, X_S̄) | x_S]`
    interventional: f64,
    /// `E[f(x_S, x_i, X_rest) | x_S, x_i] - E[f(x_S, x_i, X_rest) | x_S]`
    dependent: f64,
}

struct Oracle<'a> {
    model: &'a dyn Predictor,
    joint: &'a DiscreteJoint,
    x: &'a [f64],
}

impl Oracle<'_> {
    /// `E[f(x_fixed, X_rest) | X_given = x_given]` with `given ⊆ fixed`.
    fn expectation(&self, given: &Coalition, fixed: &Coalition) -> Result<f64> {
        let cond = self.joint.conditional(given, self.x).map_err(|e| match e {
            Error::NoMatchingSupport => Error::Oracle(alloc::format!(
                "zero probability of the sample's values on features {:?}",
                given.members()
            )),
            other => other,
        })?;
        let m = self.x.len();
        let fixed = fixed.members();
        let mut rows = Rows::with_capacity(m, cond.len());
        for &(k, _) in &cond {
            let mut r = self.joint.support().row(k).to_vec();
            for &j in &fixed {
                r[j] = self.x[j];
            }
            rows.push(&r)?;
        }
        let out = self.model.predict_batch(&rows)?;
        Ok(out.iter().zip(&cond).map(|(f, (_, p))| f * p).sum())
    }

    fn contribution(&self, before: &Coalition, i: usize) -> Result<Contribution> {
        let with_i = before.with(i);
        let set_i = self.expectation(before, &with_i)?;
        let neither = self.expectation(before, before)?;
        let knowing_i = self.expectation(&with_i, &with_i)?;
        Ok(Contribution {
            interventional: set_i - neither,
            dependent: knowing_i - set_i,
        })
    }
}

/// Conditional SHAP values and both parts, computed exactly by averaging
/// over all `M!` orderings with expectations summed over `joint`.
pub fn exact_decomposition(model: &dyn Predictor, joint: &DiscreteJoint, x: &[f64]) -> Result<Decomposition> {
    let m = model.n_features();
    if m == 0 || m > MAX_EXACT_FEATURES {
        return Err(Error::Size {
            got: m,
            max: MAX_EXACT_FEATURES,
        });
    }
    if joint.n_features() != m || x.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: x.len(),
        });
    }
    let oracle = Oracle { model, joint, x };
    let mut memo: BTreeMap<(Coalition, usize), Contribution> = BTreeMap::new();
    let mut phi_int = alloc::vec![0.0; m];
    let mut phi_dep = alloc::vec![0.0; m];
    let mut count = 0usize;
    for r in all_permutations(m) {
        count += 1;
        let mut before = Coalition::empty(m);
        for &i in r.order() {
            let c = match memo.get(&(before.clone(), i)) {
                Some(c) => *c,
                None => {
                    let c = oracle.contribution(&before, i)?;
                    memo.insert((before.clone(), i), c);
                    c
                }
            };
            phi_int[i] += c.interventional;
            phi_dep[i] += c.dependent;
            before.insert(i);
        }
    }
    let n = count as f64;
    phi_int.iter_mut().for_each(|v| *v /= n);
    phi_dep.iter_mut().for_each(|v| *v /= n);
    let phi = phi_int.iter().zip(&phi_dep).map(|(a, b)| a + b).collect();
    let base = oracle.expectation(&Coalition::empty(m), &Coalition::empty(m))?;
    Ok(Decomposition {
        base,
        phi,
        phi_int,
        phi_dep,
        meta: DecompositionMeta {
            sampler: String::from("discrete-exact"),
            model: model.id(),
            k1: 0,
            k2: 0,
            seed: 0,
            warnings: Vec::new(),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveSplitReport {
    /// Interventional parts of the full model.
    pub full: Vec<f64>,
    /// Feature `i`'s interventional part of the sum of components containing `i`.
    pub restricted: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl AdditiveSplitReport {
    pub fn max_abs_delta(&self) -> f64 {
        self.deltas.iter().fold(0.0, |a, d| a.max(d.abs()))
    }
}

/// Checks that each feature's interventional part only sees the additive
/// components that contain it. Exact, so the sampler must be discrete.
pub fn additive_split_check(model: &AdditiveModel, sampler: &Sampler, x: &[f64]) -> Result<AdditiveSplitReport> {
    let Sampler::Discrete(joint) = sampler else {
        return Err(Error::Unsupported(alloc::format!(
            "additive split check needs a discrete joint, got a {} sampler",
            crate::distributions::ConditionalSampler::kind(sampler)
        )));
    };
    let full = exact_decomposition(model, joint, x)?.phi_int;
    let restricted = (0..full.len())
        .map(|i| {
            let part = model.subset(|c| c.depends_on(i));
            Ok(exact_decomposition(&part, joint, x)?.phi_int[i])
        })
        .collect::<Result<Vec<f64>>>()?;
    let deltas = full.iter().zip(&restricted).map(|(a, b)| a - b).collect();
    Ok(AdditiveSplitReport {
        full,
        restricted,
        deltas,
    })
}
