use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::de::{Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major batch of equal-width rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rows {
    width: usize,
    data: Vec<f64>,
}

impl Rows {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(width: usize, rows: usize) -> Self {
        Self {
            width,
            data: Vec::with_capacity(width * rows),
        }
    }

    pub fn from_flat(width: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 && !data.is_empty() || width > 0 && !data.len().is_multiple_of(width) {
            return Err(Error::InvalidInput(alloc::format!(
                "{} values cannot be split into rows of width {}",
                data.len(),
                width
            )));
        }
        Ok(Self { width, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(width: usize, rows: &[R]) -> Result<Self> {
        let mut out = Self::with_capacity(width, rows.len());
        for r in rows {
            out.push(r.as_ref())?;
        }
        Ok(out)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.width {
            return Err(Error::Dimension {
                expected: self.width,
                got: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter().map(|r| r[j]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

impl Serialize for Rows {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.len()))?;
        for r in self.iter() {
            seq.serialize_element(r)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Rows {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        struct RowsVisitor;
        impl<'de> Visitor<'de> for RowsVisitor {
            type Value = Rows;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of equal-length numeric arrays")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> core::result::Result<Rows, A::Error> {
                let mut rows: Option<Rows> = None;
                while let Some(r) = seq.next_element::<Vec<f64>>()? {
                    let out = rows.get_or_insert_with(|| Rows::new(r.len()));
                    out.push(&r).map_err(serde::de::Error::custom)?;
                }
                Ok(rows.unwrap_or_default())
            }
        }
        d.deserialize_seq(RowsVisitor)
    }
}

/// Background data: `n` rows of `M` named numeric features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFeatureMatrix")]
pub struct FeatureMatrix {
    names: Vec<String>,
    rows: Rows,
}

#[derive(Deserialize)]
struct RawFeatureMatrix {
    names: Vec<String>,
    rows: Rows,
}

impl TryFrom<RawFeatureMatrix> for FeatureMatrix {
    type Error = Error;
    fn try_from(raw: RawFeatureMatrix) -> Result<Self> {
        FeatureMatrix::new(raw.names, raw.rows)
    }
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, rows: Rows) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidInput("at least one feature is required".into()));
        }
        if rows.width() != names.len() {
            return Err(Error::Dimension {
                expected: names.len(),
                got: rows.width(),
            });
        }
        if rows.len() < 2 {
            return Err(Error::InvalidInput(alloc::format!(
                "at least 2 rows are required, got {}",
                rows.len()
            )));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidInput(alloc::format!("duplicate feature name `{a}`")));
            }
        }
        if let Some(pos) = rows.as_flat().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "non-finite value at row {}, column `{}`",
                pos / names.len(),
                names[pos % names.len()]
            )));
        }
        Ok(Self { names, rows })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &Rows {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.rows.row(i)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.column(j)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n_rows() as f64;
        let mut means = alloc::vec![0.0; self.n_features()];
        for r in self.rows.iter() {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Splits off the named column, returning the remaining features and the column.
    pub fn split_target(&self, target: &str) -> Result<(FeatureMatrix, Vec<f64>)> {
        let t = self
            .index_of(target)
            .ok_or_else(|| Error::InvalidInput(alloc::format!("no column named `{target}`")))?;
        let names: Vec<String> = self
            .names
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != t)
            .map(|(_, n)| n.clone())
            .collect();
        let mut rows = Rows::with_capacity(names.len(), self.n_rows());
        let mut y = Vec::with_capacity(self.n_rows());
        let mut buf = Vec::with_capacity(names.len());
        for r in self.rows.iter() {
            buf.clear();
            buf.extend(r.iter().enumerate().filter(|(j, _)| *j != t).map(|(_, v)| *v));
            rows.push(&buf)?;
            y.push(r[t]);
        }
        Ok((FeatureMatrix::new(names, rows)?, y))
    }
}

/// The particular input being explained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample(pub Vec<f64>);

impl Sample {
    pub fn new(x: Vec<f64>, n_features: usize) -> Result<Self> {
        if x.len() != n_features {
            return Err(Error::Dimension {
                expected: n_features,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sample contains non-finite values".into()));
        }
        Ok(Self(x))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub base: f64,
    pub phi: Vec<f64>,
    /// Set when the regression system needed a ridge term.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub regularized: bool,
}

impl AttributionVector {
    pub fn prediction(&self) -> f64 {
        self.base + self.phi.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionMeta {
    pub sampler: String,
    pub model: String,
    /// Draws per conditional expectation; 0 marks an exact computation.
    pub k1: u64,
    /// Sampled permutations per feature; 0 marks an exact computation.
    pub k2: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Conditional SHAP values with their interventional and dependent parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub base: f64,
    pub phi: Vec<f64>,
    pub phi_int: Vec<f64>,
    pub phi_dep: Vec<f64>,
    pub meta: DecompositionMeta,
}

impl Decomposition {
    /// Builds the decomposition from SHAP values and interventional parts;
    /// the dependent part is their difference.
    pub fn from_parts(base: f64, phi: Vec<f64>, phi_int: Vec<f64>, meta: DecompositionMeta) -> Result<Self> {
        if phi.len() != phi_int.len() {
            return Err(Error::Dimension {
                expected: phi.len(),
                got: phi_int.len(),
            });
        }
        let phi_dep = phi.iter().zip(&phi_int).map(|(p, i)| p - i).collect();
        let d = Self {
            base,
            phi,
            phi_int,
            phi_dep,
            meta,
        };
        if !d.is_finite() {
            return Err(Error::InvalidInput("decomposition has non-finite entries".into()));
        }
        Ok(d)
    }

    pub fn n_features(&self) -> usize {
        self.phi.len()
    }

    pub fn is_finite(&self) -> bool {
        self.base.is_finite()
            && self
                .phi
                .iter()
                .chain(&self.phi_int)
                .chain(&self.phi_dep)
                .all(|v| v.is_finite())
    }

    /// Serializable view with feature names attached.
    pub fn named<'a>(&'a self, names: &'a [String]) -> Result<NamedDecomposition<'a>> {
        if names.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: names.len(),
            });
        }
        Ok(NamedDecomposition {
            base: self.base,
            features: names
                .iter()
                .enumerate()
                .map(|(i, name)| FeatureParts {
                    name: name.clone(),
                    phi: self.phi[i],
                    phi_int: self.phi_int[i],
                    phi_dep: self.phi_dep[i],
                })
                .collect(),
            meta: &self.meta,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureParts {
    pub name: String,
    pub phi: f64,
    pub phi_int: f64,
    pub phi_dep: f64,
}

/// Wire form of a decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct NamedDecomposition<'a> {
    pub base: f64,
    pub features: Vec<FeatureParts>,
    pub meta: &'a DecompositionMeta,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn feature_matrix_rejects_bad_input() {
        let rows = Rows::from_rows(2, &[[0.0, 1.0], [1.0, 2.0]]).unwrap();
        assert!(FeatureMatrix::new(names(&["a", "a"]), rows.clone()).is_err());
        assert!(FeatureMatrix::new(names(&["a"]), rows.clone()).is_err());
        let one = Rows::from_rows(2, &[[0.0, 1.0]]).unwrap();
        assert!(FeatureMatrix::new(names(&["a", "b"]), one).is_err());
        let nan = Rows::from_rows(2, &[[0.0, f64::NAN], [1.0, 2.0]]).unwrap();
        assert!(FeatureMatrix::new(names(&["a", "b"]), nan).is_err());
        assert!(FeatureMatrix::new(names(&["a", "b"]), rows).is_ok());
    }

    #[test]
    fn split_target_removes_column() {
        let rows = Rows::from_rows(3, &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let m = FeatureMatrix::new(names(&["a", "y", "b"]), rows).unwrap();
        let (x, y) = m.split_target("y").unwrap();
        assert_eq!(x.names(), &names(&["a", "b"])[..]);
        assert_eq!(x.row(1), &[4.0, 6.0]);
        assert_eq!(y, vec![2.0, 5.0]);
        assert!(m.split_target("zzz").is_err());
    }

    #[test]
    fn dependent_part_is_exact_difference() {
        let meta = DecompositionMeta {
            sampler: "s".into(),
            model: "m".into(),
            k1: 1,
            k2: 1,
            seed: 0,
            warnings: Vec::new(),
        };
        let d = Decomposition::from_parts(0.5, vec![0.4, 0.1], vec![0.4, 0.0], meta).unwrap();
        for i in 0..2 {
            assert_eq!(d.phi[i], d.phi_int[i] + d.phi_dep[i]);
        }
    }

    #[test]
    fn rows_json_shape() {
        let rows = Rows::from_rows(2, &[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let s = serde_json::to_string(&rows).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,4.0]]");
        let back: Rows = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rows);
        assert!(serde_json::from_str::<Rows>("[[1.0],[1.0,2.0]]").is_err());
    }
}
