//! Impute the features with the most negative attributions and watch the
//! model output.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use shapdec_core::distributions::{fit_gaussian, ConditionalSampler, GaussianModel};
use shapdec_core::engine::{decompose_in, kernel_shap_with, ValueFunction};
use shapdec_core::models::{ForestParams, Model, Predictor};
use shapdec_core::viz::{render_line_chart, LineChartSpec, LineSeries};
use shapdec_core::{Coalition, Error, FeatureMatrix, Rows};

use super::{fit_model, mean_sd, ModelKind, RunBudget};
use crate::error::{AppError, AppResult};
use crate::io::OutDir;

pub const DEFAULT_TOWNS: usize = 200;
const TRACED_TOWNS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    InterventionalShap,
    InterventionalPart,
    ConditionalShap,
}

impl Selection {
    pub const ALL: [Selection; 3] = [Selection::InterventionalShap, Selection::InterventionalPart, Selection::ConditionalShap];

    pub fn label(self) -> &'static str {
        match self {
            Selection::InterventionalShap => "interventional SHAP",
            Selection::InterventionalPart => "interventional SHAP part",
            Selection::ConditionalShap => "conditional SHAP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Imputation {
    MarginalMean,
    ConditionalMean,
}

impl Imputation {
    pub const ALL: [Imputation; 2] = [Imputation::MarginalMean, Imputation::ConditionalMean];

    pub fn slug(self) -> &'static str {
        match self {
            Imputation::MarginalMean => "marginal-mean",
            Imputation::ConditionalMean => "conditional-mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationConfig {
    pub target: String,
    pub model: ModelKind,
    pub forest: ForestParams,
    pub towns: usize,
    pub budget: RunBudget,
}

/// Output change after imputing the `k` lowest-ranked features, `k = 0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImputationCurve {
    pub selection: Selection,
    pub imputation: Imputation,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-town curve of `selection` minus the conditional-SHAP curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveDifference {
    pub selection: Selection,
    pub imputation: Imputation,
    pub mean: Vec<f64>,
    pub traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TownResult {
    pub row: usize,
    pub attributions: Vec<Vec<f64>>,
    /// `[imputation][selection][k]`
    pub curves: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct ImputationResult {
    pub names: Vec<String>,
    pub model: Model,
    pub towns: Vec<TownResult>,
    pub curves: Vec<ImputationCurve>,
    pub differences: Vec<CurveDifference>,
}

impl ImputationResult {
    pub fn curve(&self, selection: Selection, imputation: Imputation) -> &ImputationCurve {
        self.curves
            .iter()
            .find(|c| c.selection == selection && c.imputation == imputation)
            .expect("all curves are computed")
    }
}

/// Feature indices by ascending attribution, ties by index.
pub fn ranking(attribution: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..attribution.len()).collect();
    order.sort_by(|&a, &b| attribution[a].total_cmp(&attribution[b]).then(a.cmp(&b)));
    order
}

/// Output change for `k = 0..=M` when the first `k` features of `order` are imputed.
pub fn imputation_curve(
    model: &dyn Predictor,
    sampler: &GaussianModel,
    x: &[f64],
    order: &[usize],
    imputation: Imputation,
) -> shapdec_core::Result<Vec<f64>> {
    let m = x.len();
    let mut rows = Rows::with_capacity(m, m + 1);
    rows.push(x)?;
    for k in 1..=m {
        let mut z = x.to_vec();
        match imputation {
            Imputation::MarginalMean => {
                for &j in &order[..k] {
                    z[j] = sampler.mean()[j];
                }
            }
            Imputation::ConditionalMean => {
                let known = Coalition::from_indices(m, &order[k..])?;
                let means = sampler.conditional_mean(&known, x)?;
                for (j, v) in known.missing().into_iter().zip(means) {
                    z[j] = v;
                }
            }
        }
        rows.push(&z)?;
    }
    let out = model.predict_batch(&rows)?;
    Ok(out.iter().map(|v| v - out[0]).collect())
}

pub fn run_imputation_study(data: &FeatureMatrix, cfg: &ImputationConfig) -> AppResult<ImputationResult> {
    let (features, target) = data
        .split_target(&cfg.target)
        .map_err(|e| AppError::ingestion(format!("target column: {e}")))?;
    if cfg.towns == 0 || cfg.towns > features.n_rows() {
        return Err(AppError::usage(format!("towns must be in 1..={}", features.n_rows())));
    }
    let root = cfg.budget.root();
    let model = fit_model(cfg.model, &features, &target, &cfg.forest, root.substream(10))?;
    let sampler = fit_gaussian(&features);
    let rows: Vec<usize> = sample(&mut root.substream(11).rng(), features.n_rows(), cfg.towns).into_vec();
    let budget = cfg.budget.engine();
    let towns: Vec<TownResult> = rows
        .par_iter()
        .enumerate()
        .map(|(t, &row)| {
            let x = features.row(row);
            let stream = root.substream(12).substream(t as u64);
            let d = decompose_in(&model, &sampler, x, &budget, stream.substream(0))?;
            let vf = ValueFunction::interventional(&model, &features, cfg.budget.k1);
            let shap = kernel_shap_with(&vf, x, stream.substream(1), &budget.kernel)?;
            let attributions = vec![shap.phi, d.phi_int, d.phi];
            let curves = Imputation::ALL
                .iter()
                .map(|&imp| {
                    attributions
                        .iter()
                        .map(|a| imputation_curve(&model, &sampler, x, &ranking(a), imp))
                        .collect::<shapdec_core::Result<Vec<_>>>()
                })
                .collect::<shapdec_core::Result<Vec<_>>>()?;
            Ok(TownResult { row, attributions, curves })
        })
        .collect::<Result<_, Error>>()?;

    let m = features.n_features();
    let mut curves = Vec::new();
    let mut differences = Vec::new();
    for (ii, &imputation) in Imputation::ALL.iter().enumerate() {
        for (si, &selection) in Selection::ALL.iter().enumerate() {
            let (mean, std) = (0..=m).map(|k| mean_sd(towns.iter().map(|t| t.curves[ii][si][k]))).unzip();
            curves.push(ImputationCurve { selection, imputation, mean, std });
        }
        for (si, &selection) in Selection::ALL.iter().enumerate().take(2) {
            let diff = |t: &TownResult| -> Vec<f64> {
                t.curves[ii][si].iter().zip(&t.curves[ii][2]).map(|(a, b)| a - b).collect()
            };
            let all: Vec<Vec<f64>> = towns.iter().map(diff).collect();
            let mean = (0..=m).map(|k| mean_sd(all.iter().map(|d| d[k])).0).collect();
            let traces = all.into_iter().take(TRACED_TOWNS).collect();
            differences.push(CurveDifference { selection, imputation, mean, traces });
        }
    }
    Ok(ImputationResult { names: features.names().to_vec(), model, towns, curves, differences })
}

fn ks(m: usize) -> Vec<f64> {
    (0..=m).map(|k| k as f64).collect()
}

pub fn charts(result: &ImputationResult) -> Vec<(String, LineChartSpec)> {
    let m = result.names.len();
    let mut out = Vec::new();
    for imputation in Imputation::ALL {
        let slug = imputation.slug();
        let mut spec = LineChartSpec::new(
            format!("Output change, {slug} imputation"),
            "imputed features",
            "change in model output",
            ks(m),
        );
        let mut band = spec.clone();
        for selection in Selection::ALL {
            let c = result.curve(selection, imputation);
            spec.series.push(LineSeries::new(selection.label(), c.mean.clone()));
            let mut s = LineSeries::new(selection.label(), c.mean.clone());
            s.std = Some(c.std.clone());
            band.series.push(s);
        }
        band.title = format!("Output change, {slug} imputation, one standard deviation");
        let mut diff = LineChartSpec::new(
            format!("Difference with conditional SHAP, {slug} imputation"),
            "imputed features",
            "difference in output change",
            ks(m),
        );
        for d in result.differences.iter().filter(|d| d.imputation == imputation) {
            let mut s = LineSeries::new(d.selection.label(), d.mean.clone());
            s.overlays = d.traces.clone();
            diff.series.push(s);
        }
        out.push((format!("imputation_{slug}.svg"), spec));
        out.push((format!("imputation_{slug}_band.svg"), band));
        out.push((format!("differences_{slug}.svg"), diff));
    }
    out
}

pub fn write(cfg: &ImputationConfig, result: &ImputationResult, out: &OutDir) -> AppResult<()> {
    out.json(
        "results.json",
        &json!({
            "meta": {
                "experiment": "housing",
                "k1": cfg.budget.k1,
                "k2": cfg.budget.k2,
                "seed": cfg.budget.seed,
                "model": cfg.model,
                "target": cfg.target,
                "towns": cfg.towns,
            },
            "features": result.names,
            "curves": result.curves,
            "differences": result.differences,
            "towns": result.towns,
        }),
    )?;
    out.json("model.json", &result.model)?;
    for (name, spec) in charts(result) {
        out.text(&name, &render_line_chart(&spec)?)?;
    }
    Ok(())
}
