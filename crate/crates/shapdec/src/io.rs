//! CSV and JSON files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use shapdec_core::distributions::{fit_copula, fit_gaussian, DiscreteJoint, MarginalSampler, Sampler};
use shapdec_core::models::{Model, Predictor};
use shapdec_core::{FeatureMatrix, Rows};

use crate::bridge::ExternalModel;
use crate::error::{AppError, AppResult};

pub fn read_csv(path: &Path) -> AppResult<FeatureMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AppError::ingestion(format!("{}: {e}", path.display())))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| AppError::ingestion(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Rows::new(names.len());
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| AppError::ingestion(format!("{}: {e}", path.display())))?;
        let mut row = Vec::with_capacity(names.len());
        for (field, name) in record.iter().zip(&names) {
            let v: f64 = field.parse().map_err(|_| {
                AppError::ingestion(format!("{}:{line}: column {name}: '{field}' is not a number", path.display()))
            })?;
            row.push(v);
        }
        rows.push(&row)
            .map_err(|e| AppError::ingestion(format!("{}:{line}: {e}", path.display())))?;
    }
    FeatureMatrix::new(names, rows).map_err(|e| AppError::ingestion(format!("{}: {e}", path.display())))
}

pub fn write_csv(path: &Path, data: &FeatureMatrix) -> AppResult<()> {
    let mut out = data.names().join(",");
    out.push('\n');
    for row in data.rows().iter() {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::ingestion(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AppError::ingestion(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("results serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| AppError::Output { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| AppError::Output { path: path.to_path_buf(), source })
}

/// Output directory of one command.
#[derive(Debug, Clone)]
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn new(path: impl Into<PathBuf>) -> AppResult<Self> {
        let path = path.into();
        fs::create_dir_all(&path).map_err(|source| AppError::Output { path: path.clone(), source })?;
        Ok(OutDir(path))
    }

    pub fn path(&self) -> &Path {
        &self.0
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> AppResult<()> {
        write_json(&self.file(name), value)
    }

    pub fn text(&self, name: &str, text: &str) -> AppResult<()> {
        write_text(&self.file(name), text)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ExternalFile {
    External { cmd: Vec<String> },
}

/// A model read from a JSON file.
#[derive(Debug)]
pub enum LoadedModel {
    Native(Model),
    External(ExternalModel),
}

impl Predictor for LoadedModel {
    fn n_features(&self) -> usize {
        match self {
            LoadedModel::Native(m) => m.n_features(),
            LoadedModel::External(m) => m.n_features(),
        }
    }

    fn predict_batch(&self, rows: &Rows) -> shapdec_core::Result<Vec<f64>> {
        match self {
            LoadedModel::Native(m) => m.predict_batch(rows),
            LoadedModel::External(m) => m.predict_batch(rows),
        }
    }

    fn id(&self) -> String {
        match self {
            LoadedModel::Native(m) => m.id(),
            LoadedModel::External(m) => m.id(),
        }
    }
}

/// Reads a model file. External models are started and handshaken with
/// `n_features`; in-process models must have that width.
pub fn load_model(path: &Path, n_features: usize) -> AppResult<LoadedModel> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("kind").and_then(|k| k.as_str()) == Some("external") {
        let ExternalFile::External { cmd } = serde_json::from_value(value)
            .map_err(|e| AppError::ingestion(format!("{}: {e}", path.display())))?;
        return Ok(LoadedModel::External(ExternalModel::spawn(&cmd, n_features)?));
    }
    let model: Model =
        serde_json::from_value(value).map_err(|e| AppError::ingestion(format!("{}: {e}", path.display())))?;
    if model.n_features() != n_features {
        return Err(AppError::ingestion(format!(
            "{}: model takes {} features, data has {n_features}",
            path.display(),
            model.n_features()
        )));
    }
    Ok(LoadedModel::Native(model))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Gaussian,
    Copula,
    Discrete,
    Marginal,
}

pub fn fit_sampler(kind: SamplerKind, data: &FeatureMatrix) -> AppResult<Sampler> {
    Ok(match kind {
        SamplerKind::Gaussian => Sampler::Gaussian(fit_gaussian(data)),
        SamplerKind::Copula => Sampler::Copula(fit_copula(data)?),
        SamplerKind::Discrete => Sampler::Discrete(DiscreteJoint::from_data(data)?),
        SamplerKind::Marginal => Sampler::Marginal(MarginalSampler { data: data.clone() }),
    })
}

/// `"1,0.5,2"` as a sample of width `m`.
pub fn parse_vector(text: &str, m: usize) -> AppResult<Vec<f64>> {
    let x: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| AppError::usage(format!("'{v}' is not a number"))))
        .collect::<AppResult<_>>()?;
    if x.len() != m {
        return Err(AppError::usage(format!("sample has {} values, data has {m} features", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(AppError::usage("sample values must be finite"));
    }
    Ok(x)
}
