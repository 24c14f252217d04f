use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_rows, Predictor};
use crate::error::{Error, Result};
use crate::types::Rows;

/// A function given by its value table; defined only on `support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct TabulatedModel {
    support: Rows,
    outputs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTable {
    support: Rows,
    outputs: Vec<f64>,
}

impl TryFrom<RawTable> for TabulatedModel {
    type Error = Error;
    fn try_from(raw: RawTable) -> Result<Self> {
        TabulatedModel::new(raw.support, raw.outputs)
    }
}

impl TabulatedModel {
    pub fn new(support: Rows, outputs: Vec<f64>) -> Result<Self> {
        if support.len() != outputs.len() || support.is_empty() {
            return Err(Error::Dimension {
                expected: support.len(),
                got: outputs.len(),
            });
        }
        if outputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("table outputs must be finite".into()));
        }
        Ok(Self { support, outputs })
    }

    /// Tabulates `f` on every row of `support`.
    pub fn from_fn(support: Rows, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let outputs = support.iter().map(f).collect();
        Self::new(support, outputs)
    }

    pub fn lookup(&self, x: &[f64]) -> Option<f64> {
        (0..self.support.len())
            .find(|&k| self.support.row(k) == x)
            .map(|k| self.outputs[k])
    }
}

impl Predictor for TabulatedModel {
    fn n_features(&self) -> usize {
        self.support.width()
    }

    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        check_rows(rows, self.support.width())?;
        rows.iter()
            .map(|r| {
                self.lookup(r)
                    .ok_or_else(|| Error::Model(alloc::format!("input {r:?} is outside the table")))
            })
            .collect()
    }

    fn id(&self) -> String {
        "tabulated".into()
    }
}
