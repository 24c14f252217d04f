//! Stand-in datasets shaped like the benchmark data.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use shapdec_core::distributions::{ConditionalSampler, GaussianModel};
use shapdec_core::{Coalition, FeatureMatrix, RngStream, Rows};

pub const HOUSING_ROWS: usize = 506;
pub const HOUSING_TARGET: &str = "MEDV";
pub const FIRE_ROWS: usize = 244;
pub const FIRE_LABEL: &str = "fire";

// name, mean, sd, loading on an "urban" and a "wealth" factor, effect on MEDV per sd
const HOUSING: [(&str, f64, f64, f64, f64, f64); 13] = [
    ("CRIM", 3.61, 8.60, 0.60, -0.20, -0.93),
    ("ZN", 11.36, 23.32, -0.60, 0.30, 1.08),
    ("INDUS", 11.14, 6.86, 0.85, -0.20, 0.14),
    ("CHAS", 0.07, 0.25, 0.05, 0.10, 0.68),
    ("NOX", 0.555, 0.116, 0.85, -0.10, -2.06),
    ("RM", 6.285, 0.70, -0.20, 0.80, 2.67),
    ("AGE", 68.57, 28.15, 0.75, -0.10, 0.02),
    ("DIS", 3.80, 2.11, -0.85, 0.00, -3.10),
    ("RAD", 9.55, 8.71, 0.75, -0.20, 2.66),
    ("TAX", 408.2, 168.5, 0.80, -0.30, -2.08),
    ("PTRATIO", 18.46, 2.16, 0.40, -0.40, -2.06),
    ("B", 356.7, 91.3, -0.40, 0.10, 0.85),
    ("LSTAT", 12.65, 7.14, 0.55, -0.70, -3.74),
];

/// Correlated Gaussian housing data: 13 features driven by two latent
/// factors plus a linear `MEDV` target with noise.
pub fn housing(n: usize, stream: RngStream) -> FeatureMatrix {
    let mut rng = stream.rng();
    let mut names: Vec<String> = HOUSING.iter().map(|h| h.0.to_owned()).collect();
    names.push(HOUSING_TARGET.to_owned());
    let mut rows = Rows::with_capacity(names.len(), n);
    let mut row = vec![0.0; names.len()];
    for _ in 0..n {
        let urban: f64 = rng.sample(StandardNormal);
        let wealth: f64 = rng.sample(StandardNormal);
        let mut medv = 22.53;
        for (j, &(_, mean, sd, lu, lw, effect)) in HOUSING.iter().enumerate() {
            let own = (1.0 - lu * lu - lw * lw).sqrt();
            let z = lu * urban + lw * wealth + own * rng.sample::<f64, _>(StandardNormal);
            row[j] = mean + sd * z;
            medv += effect * z;
        }
        row[13] = medv + 4.7 * rng.sample::<f64, _>(StandardNormal);
        rows.push(&row).expect("fixed width");
    }
    FeatureMatrix::new(names, rows).expect("generated data is valid")
}

const FIRE_NAMES: [&str; 4] = ["T", "RH", "Ws", "Rain"];

/// Fire-weather data: temperature, relative humidity, wind speed and rain
/// plus a binary `fire` label. `correlated = false` draws the four features
/// independently.
pub fn fire(n: usize, correlated: bool, stream: RngStream) -> FeatureMatrix {
    #[rustfmt::skip]
    let corr = if correlated {
        DMatrix::from_row_slice(4, 4, &[
            1.00, -0.65, -0.30, -0.30,
            -0.65, 1.00, 0.25, 0.25,
            -0.30, 0.25, 1.00, 0.10,
            -0.30, 0.25, 0.10, 1.00,
        ])
    } else {
        DMatrix::identity(4, 4)
    };
    let names: Vec<String> = FIRE_NAMES.iter().map(|s| s.to_string()).collect();
    let latent = GaussianModel::new(names.clone(), vec![0.0; 4], corr).expect("positive definite");
    let z = latent
        .sample_conditional(&Coalition::empty(4), &[0.0; 4], n, &mut stream.substream(0).rng())
        .expect("unconditional draw");
    let mut label_rng = stream.substream(1).rng();
    let round = |v: f64, step: f64| (v / step).round() * step;
    let mut all = names;
    all.push(FIRE_LABEL.to_owned());
    let mut rows = Rows::with_capacity(5, n);
    for z in z.iter() {
        let wet = (z[3] - 0.5).max(0.0);
        let t = round(32.2 + 3.6 * z[0], 1.0);
        let rh = round((62.0 + 14.8 * z[1]).clamp(21.0, 90.0), 1.0);
        let ws = round((15.5 + 2.8 * z[2]).clamp(6.0, 29.0), 1.0);
        let rain = round(2.5 * wet, 0.1);
        let eta = 0.3 + 2.0 * z[0] - 1.0 * z[1] + 0.7 * z[2] - 3.0 * wet;
        let p = 1.0 / (1.0 + (-eta).exp());
        let label = if label_rng.random::<f64>() < p { 1.0 } else { 0.0 };
        rows.push(&[t, rh, ws, rain, label]).expect("fixed width");
    }
    FeatureMatrix::new(all, rows).expect("generated data is valid")
}
