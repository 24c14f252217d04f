//! Binary forest on fire-weather data, explained on the log-odds scale under
//! a Gaussian copula.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use shapdec_core::distributions::{fit_copula, CopulaModel};
use shapdec_core::engine::{decompose_in, kernel_shap_with, ValueFunction};
use shapdec_core::models::{fit_forest, ForestModel, ForestParams, ForestTask, LogOdds, Model, Predictor};
use shapdec_core::stats::{partial_correlation_graph, spearman, CorrelationMatrix};
use shapdec_core::viz::{render_force_plot, ForcePlotSpec, SecondaryAxis};
use shapdec_core::{AttributionVector, Decomposition, FeatureMatrix};

use super::RunBudget;
use crate::error::{AppError, AppResult};
use crate::io::OutDir;

pub const OUTPUT_NODE: &str = "f";

#[derive(Debug, Clone, PartialEq)]
pub struct FireConfig {
    pub label: String,
    /// Row explained in the force plots.
    pub sample: usize,
    pub forest: ForestParams,
    pub budget: RunBudget,
}

/// Spearman correlation of a feature with its own parts; `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartCorrelation {
    pub feature: String,
    pub phi_int: Option<f64>,
    pub phi_dep: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FireResult {
    pub features: FeatureMatrix,
    pub forest: ForestModel,
    pub copula: CopulaModel,
    pub log_odds: Vec<f64>,
    pub decompositions: Vec<Decomposition>,
    pub classic: AttributionVector,
    pub table: Vec<PartCorrelation>,
    pub graph: CorrelationMatrix,
    pub sample: usize,
}

pub fn run_fire_study(data: &FeatureMatrix, cfg: &FireConfig) -> AppResult<FireResult> {
    let (features, label) = data
        .split_target(&cfg.label)
        .map_err(|e| AppError::ingestion(format!("label column: {e}")))?;
    if let Some(v) = label.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(AppError::ingestion(format!("label '{}' must be 0 or 1, found {v}", cfg.label)));
    }
    if cfg.sample >= features.n_rows() {
        return Err(AppError::usage(format!("sample {} out of range (0..{})", cfg.sample, features.n_rows())));
    }
    let root = cfg.budget.root();
    let params = ForestParams { task: ForestTask::BinaryProbability, ..cfg.forest.clone() };
    let forest = fit_forest(&features, &label, &params, root.substream(20))?;
    let model = LogOdds(forest.clone());
    let copula = fit_copula(&features)?;
    let budget = cfg.budget.engine();
    let decompositions: Vec<Decomposition> = (0..features.n_rows())
        .into_par_iter()
        .map(|r| decompose_in(&model, &copula, features.row(r), &budget, root.substream(21).substream(r as u64)))
        .collect::<shapdec_core::Result<_>>()?;
    let x = features.row(cfg.sample);
    let vf = ValueFunction::interventional(&model, &features, cfg.budget.k1);
    let classic = kernel_shap_with(&vf, x, root.substream(22), &budget.kernel)?;
    let log_odds = model.predict_batch(features.rows())?;

    let names = features.names().to_vec();
    let table = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col = features.column(j);
            let int: Vec<f64> = decompositions.iter().map(|d| d.phi_int[j]).collect();
            let dep: Vec<f64> = decompositions.iter().map(|d| d.phi_dep[j]).collect();
            PartCorrelation {
                feature: name.clone(),
                phi_int: spearman(&col, &int).ok(),
                phi_dep: spearman(&col, &dep).ok(),
            }
        })
        .collect();
    let mut columns: Vec<Vec<f64>> = (0..features.n_features()).map(|j| features.column(j)).collect();
    columns.push(log_odds.clone());
    let mut graph_names = names;
    graph_names.push(OUTPUT_NODE.to_owned());
    let graph = partial_correlation_graph(&columns, &graph_names)?;
    Ok(FireResult { features, forest, copula, log_odds, decompositions, classic, table, graph, sample: cfg.sample })
}

impl FireResult {
    pub fn force_plots(&self) -> (ForcePlotSpec, ForcePlotSpec) {
        let names = self.features.names();
        let x = self.features.row(self.sample);
        let mut split = ForcePlotSpec::from_decomposition(&self.decompositions[self.sample], names, x);
        let mut classic = ForcePlotSpec::classic(self.classic.base, names, x, &self.classic.phi);
        for spec in [&mut split, &mut classic] {
            spec.axis_label = "log-odds".into();
            spec.secondary = Some(SecondaryAxis::Probability);
        }
        (split, classic)
    }

    pub fn write(&self, cfg: &FireConfig, out: &OutDir) -> AppResult<()> {
        let names = self.features.names();
        let rows: Vec<_> = self.decompositions.iter().map(|d| d.named(names)).collect::<Result<_, _>>()?;
        out.json(
            "results.json",
            &json!({
                "meta": {
                    "experiment": "fire",
                    "k1": cfg.budget.k1,
                    "k2": cfg.budget.k2,
                    "seed": cfg.budget.seed,
                    "label": cfg.label,
                    "sample": cfg.sample,
                },
                "sample": {
                    "row": self.sample,
                    "values": self.features.row(self.sample),
                    "log_odds": self.log_odds[self.sample],
                    "decomposition": rows[self.sample],
                    "classic": self.classic,
                },
                "correlations": self.table,
                "partial_correlations": self.graph,
                "rows": rows,
            }),
        )?;
        out.json("model.json", &Model::Forest(self.forest.clone()))?;
        let (split, classic) = self.force_plots();
        out.text("force.svg", &render_force_plot(&split)?)?;
        out.text("force_classic.svg", &render_force_plot(&classic)?)?;
        out.text("graph.dot", &self.graph.to_dot())
    }
}
