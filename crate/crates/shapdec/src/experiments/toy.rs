//! Two agreeing bits, `f = X1`, explained at `x = (1, 1)`.

use serde_json::json;
use shapdec_core::distributions::DiscreteJoint;
use shapdec_core::engine::{decompose, exact_decomposition};
use shapdec_core::models::{Model, TabulatedModel};
use shapdec_core::viz::{render_force_plot, ForcePlotSpec};
use shapdec_core::{Decomposition, FeatureMatrix, Rows};

use super::RunBudget;
use crate::error::AppResult;
use crate::io::OutDir;

pub const SAMPLE: [f64; 2] = [1.0, 1.0];

pub fn names() -> Vec<String> {
    vec!["X1".into(), "X2".into()]
}

/// Fair bits that agree with probability 0.7.
pub fn joint() -> DiscreteJoint {
    DiscreteJoint::agreeing_bits(0.7).expect("valid pmf")
}

pub fn model() -> TabulatedModel {
    TabulatedModel::from_fn(joint().support().clone(), |r| r[0]).expect("total on support")
}

/// 100 rows whose empirical pmf is the toy joint.
pub fn data() -> FeatureMatrix {
    let mut rows = Rows::new(2);
    for (row, count) in [([0.0, 0.0], 35), ([0.0, 1.0], 15), ([1.0, 0.0], 15), ([1.0, 1.0], 35)] {
        for _ in 0..count {
            rows.push(&row).expect("width 2");
        }
    }
    FeatureMatrix::new(names(), rows).expect("valid data")
}

#[derive(Debug, Clone)]
pub struct ToyResult {
    pub exact: Decomposition,
    pub sampled: Decomposition,
    pub budget: RunBudget,
}

pub fn run_toy(budget: RunBudget) -> shapdec_core::Result<ToyResult> {
    let joint = joint();
    let model = model();
    Ok(ToyResult {
        exact: exact_decomposition(&model, &joint, &SAMPLE)?,
        sampled: decompose(&model, &joint, &SAMPLE, &budget.engine())?,
        budget,
    })
}

impl ToyResult {
    pub fn write(&self, out: &OutDir) -> AppResult<()> {
        let names = names();
        out.json(
            "results.json",
            &json!({
                "meta": {"experiment": "toy", "k1": self.budget.k1, "k2": self.budget.k2, "seed": self.budget.seed},
                "sample": SAMPLE,
                "exact": self.exact.named(&names)?,
                "sampled": self.sampled.named(&names)?,
            }),
        )?;
        out.text("force.svg", &render_force_plot(&ForcePlotSpec::from_decomposition(&self.exact, &names, &SAMPLE))?)?;
        out.text(
            "force_sampled.svg",
            &render_force_plot(&ForcePlotSpec::from_decomposition(&self.sampled, &names, &SAMPLE))?,
        )?;
        crate::io::write_csv(&out.file("toy.csv"), &data())?;
        out.json("toy_model.json", &Model::Tabulated(model()))
    }
}
