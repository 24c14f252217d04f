//! Rank statistics: Spearman correlation and partial-correlation graphs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jittered_cholesky, nested_rows};

/// Mid-ranks (1-based, ties share their average rank).
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = rank;
        }
        start = end;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), got: y.len() });
    }
    if x.len() < 3 {
        return Err(Error::InvalidInput(format!("spearman needs at least 3 pairs, got {}", x.len())));
    }
    pearson(&ranks(x), &ranks(y))
        .ok_or_else(|| Error::UndefinedCorrelation(String::from("zero rank variance")))
}

/// Named symmetric matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    #[serde(with = "nested_rows")]
    pub values: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Undirected graph in DOT. Edge labels carry the value to two decimals;
    /// red edges are positive, blue negative, and pen width is `4 |rho|`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph partial_correlations {\n");
        for name in &self.names {
            let _ = writeln!(out, "  \"{}\";", escape(name));
        }
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let rho = self.get(i, j);
                let label = format!("{:.2}", rho);
                let label = if label == "-0.00" { String::from("0.00") } else { label };
                let color = if rho >= 0.0 { "red" } else { "blue" };
                let _ = writeln!(
                    out,
                    "  \"{}\" -- \"{}\" [label=\"{}\", color={}, penwidth={:.3}];",
                    escape(&self.names[i]),
                    escape(&self.names[j]),
                    label,
                    color,
                    4.0 * rho.abs()
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Partial correlations of the rank-transformed columns, each pair
/// conditioned on all remaining columns.
pub fn partial_correlation_graph(columns: &[Vec<f64>], names: &[String]) -> Result<CorrelationMatrix> {
    let m = columns.len();
    if names.len() != m {
        return Err(Error::Dimension { expected: m, got: names.len() });
    }
    if m < 2 {
        return Err(Error::InvalidInput(String::from("need at least two columns")));
    }
    let n = columns[0].len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::Dimension { expected: n, got: c.len() });
    }
    if n < m + 2 {
        return Err(Error::InvalidInput(format!("need at least {} rows, got {n}", m + 2)));
    }
    let ranked: Vec<Vec<f64>> = columns.iter().map(|c| ranks(c)).collect();
    let mut corr = DMatrix::identity(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let r = pearson(&ranked[i], &ranked[j])
                .ok_or_else(|| Error::UndefinedCorrelation(format!("{} and {}", names[i], names[j])))?;
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    let precision = jittered_cholesky(&corr)
        .map(|(c, _)| c.inverse())
        .filter(|p| p.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular { features: names.to_vec() })?;
    let mut values = DMatrix::identity(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let d = libm::sqrt(precision[(i, i)] * precision[(j, j)]);
            if d.is_nan() || d <= 0.0 {
                return Err(Error::Singular { features: names.to_vec() });
            }
            let rho = (-precision[(i, j)] / d).clamp(-1.0, 1.0);
            values[(i, j)] = rho;
            values[(j, i)] = rho;
        }
    }
    Ok(CorrelationMatrix { names: names.to_vec(), values })
}
