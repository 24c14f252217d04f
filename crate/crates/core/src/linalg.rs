//! Dense helpers on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub(crate) const JITTER_ATTEMPTS: usize = 10;

/// Cholesky factor of `m`, adding `eps * I` when needed.
///
/// `eps` starts at `1e-9 * trace / n` (or `1e-9` for a zero trace) and
/// doubles for at most [`JITTER_ATTEMPTS`] attempts. Returns the factor and
/// the jitter that was applied.
pub(crate) fn jittered_cholesky(m: &DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(m.clone()) {
        if c.l_dirty().diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
            return Some((c, 0.0));
        }
    }
    let n = m.nrows().max(1) as f64;
    let trace = m.trace();
    let mut eps = if trace > 0.0 { 1e-9 * trace / n } else { 1e-9 };
    for _ in 0..JITTER_ATTEMPTS {
        let mut jm = m.clone();
        for i in 0..jm.nrows() {
            jm[(i, i)] += eps;
        }
        if let Some(c) = Cholesky::new(jm) {
            return Some((c, eps));
        }
        eps *= 2.0;
    }
    None
}

pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub(crate) fn subvector(v: &[f64], idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

pub(crate) fn to_nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub(crate) fn from_nested(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return None;
    }
    Some(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Sample covariance (divisor `n - 1`) of row-major data.
pub(crate) fn sample_covariance<'a>(rows: impl Iterator<Item = &'a [f64]>, mean: &[f64]) -> DMatrix<f64> {
    let m = mean.len();
    let mut cov = DMatrix::zeros(m, m);
    let mut n = 0usize;
    for r in rows {
        n += 1;
        for i in 0..m {
            let di = r[i] - mean[i];
            for j in i..m {
                cov[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..m {
        for j in i..m {
            cov[(i, j)] /= denom;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

/// Serde adapter storing a matrix as nested row arrays.
pub(crate) mod nested_rows {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_nested(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_nested(&rows).ok_or_else(|| serde::de::Error::custom("ragged matrix"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_rescues_singular_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (_, eps) = jittered_cholesky(&m).unwrap();
        assert!(eps > 0.0 && eps < 1e-5);
        let zero = DMatrix::<f64>::zeros(2, 2);
        assert!(jittered_cholesky(&zero).is_some());
    }

    #[test]
    fn indefinite_matrix_fails() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]);
        assert!(jittered_cholesky(&m).is_none());
    }
}
