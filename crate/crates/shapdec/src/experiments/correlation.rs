//! `f = x1 + x2 + a12 x1 x2` over a unit bivariate Gaussian with correlation
//! `alpha`, explained at `x = (1, 1)`.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use shapdec_core::distributions::GaussianModel;
use shapdec_core::engine::{decompose_in, shapley_residuals, ValueFunction};
use shapdec_core::models::FnModel;
use shapdec_core::viz::{render_line_chart, LineChartSpec, LineSeries};
use shapdec_core::Error;

use super::{mean_sd, RunBudget};
use crate::error::AppResult;
use crate::io::OutDir;

const SAMPLE: [f64; 2] = [1.0, 1.0];
// exact for the quadratic model
const QUADRATURE_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationConfig {
    pub a12: f64,
    pub alphas: Vec<f64>,
    /// Independent estimates averaged per alpha.
    pub repeats: usize,
    pub budget: RunBudget,
}

impl CorrelationConfig {
    pub fn default_alphas() -> Vec<f64> {
        (-9..=9).map(|k| k as f64 / 10.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationStudyRow {
    pub alpha: f64,
    /// Per feature, averaged over repeats.
    pub phi_dep: [f64; 2],
    pub phi_dep_sd: [f64; 2],
    pub analytic_phi_dep: f64,
    pub phi: [f64; 2],
    pub analytic_phi: f64,
    /// From Monte Carlo coalition values.
    pub residual_norm: [f64; 2],
    /// From exact coalition values.
    pub exact_residual_norm: [f64; 2],
    pub analytic_residual_norm: f64,
}

impl CorrelationStudyRow {
    pub fn mean_phi_dep(&self) -> f64 {
        0.5 * (self.phi_dep[0] + self.phi_dep[1])
    }
}

pub fn analytic_phi(a12: f64, alpha: f64) -> f64 {
    1.0 + 0.5 * a12 * (1.0 - alpha)
}

pub fn analytic_phi_dep(a12: f64, alpha: f64) -> f64 {
    0.5 * (1.0 + a12) * alpha
}

pub fn analytic_residual_norm(a12: f64, alpha: f64) -> f64 {
    std::f64::consts::SQRT_2 * (0.5 * a12 - (1.0 + 0.5 * a12) * alpha).abs()
}

struct Estimate {
    phi: Vec<f64>,
    phi_dep: Vec<f64>,
    norms: [f64; 2],
}

pub fn run_correlation_study(cfg: &CorrelationConfig) -> shapdec_core::Result<Vec<CorrelationStudyRow>> {
    if let Some(a) = cfg.alphas.iter().find(|a| a.is_nan() || a.abs() >= 0.99) {
        return Err(Error::InvalidInput(format!("correlation {a} outside (-0.99, 0.99)")));
    }
    if cfg.repeats == 0 {
        return Err(Error::InvalidInput("at least one repeat is needed".into()));
    }
    let a12 = cfg.a12;
    let model = FnModel::new(2, "x1 + x2 + a12 x1 x2", move |x: &[f64]| x[0] + x[1] + a12 * x[0] * x[1]);
    let root = cfg.budget.root();
    let budget = cfg.budget.engine();
    cfg.alphas
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let g = GaussianModel::bivariate(alpha)?;
            let exact = shapley_residuals(
                &ValueFunction::gaussian_quadrature(&model, &g, QUADRATURE_ORDER),
                &SAMPLE,
                root.substream(u64::MAX),
            )?;
            let estimates: Vec<Estimate> = (0..cfg.repeats)
                .into_par_iter()
                .map(|r| {
                    let stream = root.substream(ai as u64).substream(r as u64);
                    let d = decompose_in(&model, &g, &SAMPLE, &budget, stream.substream(0))?;
                    let vf = ValueFunction::conditional(&model, &g, cfg.budget.k1);
                    let t = shapley_residuals(&vf, &SAMPLE, stream.substream(1))?;
                    Ok(Estimate { phi: d.phi, phi_dep: d.phi_dep, norms: [t.norm(0), t.norm(1)] })
                })
                .collect::<shapdec_core::Result<_>>()?;
            let per = |f: &dyn Fn(&Estimate) -> f64| mean_sd(estimates.iter().map(f));
            let dep: [(f64, f64); 2] = [per(&|e| e.phi_dep[0]), per(&|e| e.phi_dep[1])];
            Ok(CorrelationStudyRow {
                alpha,
                phi_dep: [dep[0].0, dep[1].0],
                phi_dep_sd: [dep[0].1, dep[1].1],
                analytic_phi_dep: analytic_phi_dep(a12, alpha),
                phi: [per(&|e| e.phi[0]).0, per(&|e| e.phi[1]).0],
                analytic_phi: analytic_phi(a12, alpha),
                residual_norm: [per(&|e| e.norms[0]).0, per(&|e| e.norms[1]).0],
                exact_residual_norm: [exact.norm(0), exact.norm(1)],
                analytic_residual_norm: analytic_residual_norm(a12, alpha),
            })
        })
        .collect()
}

pub fn chart(rows: &[CorrelationStudyRow], a12: f64) -> LineChartSpec {
    let mut spec = LineChartSpec::new(
        format!("Dependent attribution, a12 = {a12}"),
        "correlation alpha",
        "attribution",
        rows.iter().map(|r| r.alpha).collect(),
    );
    let col = |f: &dyn Fn(&CorrelationStudyRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    spec.series = vec![
        LineSeries::new("dependent part (estimated)", col(&|r| r.mean_phi_dep())),
        LineSeries::new("dependent part (analytic)", col(&|r| r.analytic_phi_dep)),
        LineSeries::new("residual norm (estimated)", col(&|r| 0.5 * (r.residual_norm[0] + r.residual_norm[1]))),
        LineSeries::new("residual norm (analytic)", col(&|r| r.analytic_residual_norm)),
    ];
    spec
}

pub fn write(cfg: &CorrelationConfig, rows: &[CorrelationStudyRow], out: &OutDir) -> AppResult<()> {
    out.json(
        "results.json",
        &json!({
            "meta": {
                "experiment": "correlation",
                "k1": cfg.budget.k1,
                "k2": cfg.budget.k2,
                "seed": cfg.budget.seed,
                "a12": cfg.a12,
                "repeats": cfg.repeats,
            },
            "rows": rows,
        }),
    )?;
    out.text("correlation.svg", &render_line_chart(&chart(rows, cfg.a12))?)
}
