use rand::Rng;
use shapdec_core::coalition::{all_permutations, Coalition};
use shapdec_core::distributions::{ConditionalSampler, DiscreteJoint, GaussianModel, MarginalSampler, Sampler};
use shapdec_core::engine::{
    additive_split_check, decompose, exact_decomposition, interventional_parts, kernel_shap, shapley_residuals, Budget,
    ValueFunction,
};
use shapdec_core::models::{AdditiveModel, Component, FnModel, Predictor, TabulatedModel};
use shapdec_core::{FeatureMatrix, RngStream, Rows};

fn toy_joint() -> DiscreteJoint {
    DiscreteJoint::agreeing_bits(0.7).unwrap()
}

fn toy_model() -> TabulatedModel {
    TabulatedModel::from_fn(toy_joint().support().clone(), |r| r[0]).unwrap()
}

/// 100 rows in the toy proportions.
fn toy_background() -> FeatureMatrix {
    let mut rows = Rows::new(2);
    for (row, count) in [([0.0, 0.0], 35), ([0.0, 1.0], 15), ([1.0, 0.0], 15), ([1.0, 1.0], 35)] {
        for _ in 0..count {
            rows.push(&row).unwrap();
        }
    }
    FeatureMatrix::new(vec!["X1".into(), "X2".into()], rows).unwrap()
}

/// Shapley values by brute force over all orderings.
fn shapley_by_permutations(vf: &ValueFunction<'_>, x: &[f64]) -> Vec<f64> {
    let m = vf.n_features();
    let mut phi = vec![0.0; m];
    let mut count = 0.0;
    for r in all_permutations(m) {
        count += 1.0;
        let mut before = Coalition::empty(m);
        for &i in r.order() {
            let without = vf.value(&before, x, RngStream::new(0)).unwrap();
            before.insert(i);
            let with = vf.value(&before, x, RngStream::new(0)).unwrap();
            phi[i] += with - without;
        }
    }
    phi.iter().map(|p| p / count).collect()
}

/// Random joint over {0,1,2}^3 with full support, a random table model and a
/// random support point.
fn random_discrete_problem(seed: u64) -> (DiscreteJoint, TabulatedModel, Vec<f64>) {
    let mut rng = RngStream::new(seed).rng();
    let mut support = Rows::new(3);
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                support.push(&[a as f64, b as f64, c as f64]).unwrap();
            }
        }
    }
    let raw: Vec<f64> = (0..27).map(|_| rng.random::<f64>() + 0.01).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let head: f64 = probs[..26].iter().sum();
    probs[26] = 1.0 - head;
    let outputs: Vec<f64> = (0..27).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
    let x = support.row(rng.random_range(0..27)).to_vec();
    (
        DiscreteJoint::new(support.clone(), probs).unwrap(),
        TabulatedModel::new(support, outputs).unwrap(),
        x,
    )
}

#[test]
fn toy_oracle() {
    // Orderings (0,1) and (1,0) over the four outcomes:
    //   (0,1): X1 first, int 1 - 0.5, dep 0; X2 second, nothing left to explain.
    //   (1,0): X2 first, int 0, dep E[X1|X2=1] - E[X1] = 0.2; X1 second, int 1 - 0.7.
    let d = exact_decomposition(&toy_model(), &toy_joint(), &[1.0, 1.0]).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    assert!(close(d.base, 0.5));
    assert!(close(d.phi[0], 0.4) && close(d.phi[1], 0.1), "{:?}", d.phi);
    assert!(close(d.phi_int[0], 0.4) && close(d.phi_int[1], 0.0));
    assert!(close(d.phi_dep[0], 0.0) && close(d.phi_dep[1], 0.1));
    assert!(close(d.base + d.phi.iter().sum::<f64>(), 1.0));
}

#[test]
fn independent_joint_has_no_dependent_part() {
    let joint = DiscreteJoint::agreeing_bits(0.5).unwrap();
    let d = exact_decomposition(&toy_model(), &joint, &[1.0, 1.0]).unwrap();
    assert!((d.phi[0] - 0.5).abs() < 1e-12 && d.phi[1].abs() < 1e-12);
    assert!(d.phi_dep.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn single_feature_oracle() {
    let support = Rows::from_rows(1, &[[0.0], [1.0], [3.0]]).unwrap();
    let joint = DiscreteJoint::new(support.clone(), vec![0.2, 0.5, 0.3]).unwrap();
    let model = TabulatedModel::from_fn(support, |r| r[0] * r[0]).unwrap();
    let d = exact_decomposition(&model, &joint, &[3.0]).unwrap();
    let mean = 0.5 + 0.3 * 9.0;
    assert!((d.phi[0] - (9.0 - mean)).abs() < 1e-12);
    assert_eq!(d.phi_dep[0], 0.0);
}

#[test]
fn oracle_rejects_impossible_samples() {
    let support = Rows::from_rows(2, &[[0.0, 0.0], [1.0, 1.0]]).unwrap();
    let joint = DiscreteJoint::new(support, vec![0.5, 0.5]).unwrap();
    let model = FnModel::new(2, "first", |r: &[f64]| r[0]);
    let err = exact_decomposition(&model, &joint, &[1.0, 0.0]).unwrap_err();
    assert!(matches!(err, shapdec_core::Error::Oracle(_)), "{err:?}");
}

#[test]
fn value_function_examples() {
    let model = toy_model();
    let joint = toy_joint();
    let x = [1.0, 1.0];
    let known = Coalition::from_indices(2, &[1]).unwrap();

    let vf = ValueFunction::conditional(&model, &joint, 10_000);
    assert_eq!(vf.value(&Coalition::full(2), &x, RngStream::new(1)).unwrap(), 1.0);
    let v = vf.value(&known, &x, RngStream::new(1)).unwrap();
    assert!((v - 0.7).abs() < 0.01, "{v}");

    let bg = toy_background();
    let vf = ValueFunction::interventional(&model, &bg, 10_000);
    let v = vf.value(&known, &x, RngStream::new(2)).unwrap();
    assert!((v - 0.5).abs() < 0.01, "{v}");
}

#[test]
fn kernel_shap_is_exact_for_exact_values() {
    let model = toy_model();
    let joint = toy_joint();
    let vf = ValueFunction::exact_discrete(&model, &joint);
    let a = kernel_shap(&vf, &[1.0, 1.0], RngStream::new(0)).unwrap();
    assert!((a.phi[0] - 0.4).abs() < 1e-9 && (a.phi[1] - 0.1).abs() < 1e-9);
    assert!((a.base - 0.5).abs() < 1e-12);
}

#[test]
fn kernel_shap_matches_enumeration_on_random_problems() {
    for seed in 0..20 {
        let (joint, model, x) = random_discrete_problem(seed);
        let vf = ValueFunction::exact_discrete(&model, &joint);
        let kernel = kernel_shap(&vf, &x, RngStream::new(0)).unwrap();
        let brute = shapley_by_permutations(&vf, &x);
        for (k, b) in kernel.phi.iter().zip(&brute) {
            assert!((k - b).abs() < 1e-9, "seed {seed}: {k} vs {b}");
        }
        let f = model.predict_one(&x).unwrap();
        assert!((kernel.prediction() - f).abs() < 1e-9);
    }
}

#[test]
fn kernel_shap_symmetry() {
    let model = FnModel::new(2, "sum", |x: &[f64]| x[0] + x[1]);
    let g = GaussianModel::bivariate(0.0).unwrap();
    let vf = ValueFunction::gaussian_quadrature(&model, &g, 8);
    let a = kernel_shap(&vf, &[1.0, 1.0], RngStream::new(0)).unwrap();
    assert!((a.phi[0] - a.phi[1]).abs() < 1e-9);
}

#[test]
fn kernel_shap_sampled_coalitions_keep_local_accuracy() {
    // 12 features forces coalition sampling.
    let m = 12;
    let coefs: Vec<f64> = (0..m).map(|i| i as f64 - 5.0).collect();
    let model = FnModel::new(m, "linear", move |x: &[f64]| x.iter().zip(&coefs).map(|(a, b)| a * b).sum());
    let names = (0..m).map(|i| format!("x{i}")).collect();
    let cov = nalgebra::DMatrix::identity(m, m);
    let g = GaussianModel::new(names, vec![0.0; m], cov).unwrap();
    let vf = ValueFunction::gaussian_quadrature(&model, &g, 1);
    let x: Vec<f64> = (0..m).map(|i| (i % 3) as f64).collect();
    let a = kernel_shap(&vf, &x, RngStream::new(4)).unwrap();
    let f = model.predict_one(&x).unwrap();
    assert!((a.prediction() - f).abs() < 1e-9);
    // additive model with independent features: exact even from sampled coalitions
    for i in 0..m {
        assert!((a.phi[i] - (i as f64 - 5.0) * x[i]).abs() < 1e-8);
    }
}

#[test]
fn interventional_parts_on_toy() {
    let p = interventional_parts(&toy_model(), &toy_joint(), &[1.0, 1.0], 10_000, RngStream::new(5)).unwrap();
    assert!((p[0] - 0.4).abs() < 0.02 && p[1].abs() < 0.02, "{p:?}");
}

#[test]
fn dummy_feature_gets_no_interventional_part() {
    let model = FnModel::new(3, "ignores-1", |x: &[f64]| x[0] * x[2] + x[2]);
    let g = GaussianModel::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![0.0; 3],
        nalgebra::DMatrix::from_row_slice(3, 3, &[1.0, 0.6, 0.3, 0.6, 1.0, 0.5, 0.3, 0.5, 1.0]),
    )
    .unwrap();
    let p = interventional_parts(&model, &g, &[1.0, -1.0, 0.5], 5_000, RngStream::new(6)).unwrap();
    assert!(p[1].abs() <= 0.02);
}

#[test]
fn linear_parts_under_independence() {
    let coefs = [1.5, -2.0, 0.5];
    let model = FnModel::new(3, "linear", move |x: &[f64]| x.iter().zip(&coefs).map(|(a, b)| a * b).sum());
    let g = GaussianModel::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![1.0, 0.0, -1.0],
        nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 0.5])),
    )
    .unwrap();
    let x = [3.0, -2.0, 1.0];
    let p = interventional_parts(&model, &g, &x, 4_000, RngStream::new(7)).unwrap();
    for i in 0..3 {
        let expected = coefs[i] * (x[i] - g.mean()[i]);
        assert!((p[i] - expected).abs() <= 0.02 * expected.abs(), "{i}: {} vs {expected}", p[i]);
    }
}

#[test]
fn decompose_matches_toy_oracle() {
    let d = decompose(&toy_model(), &toy_joint(), &[1.0, 1.0], &Budget::new(10_000, 10_000, 3)).unwrap();
    let exact = [0.4, 0.1, 0.4, 0.0, 0.0, 0.1];
    let got = [d.phi[0], d.phi[1], d.phi_int[0], d.phi_int[1], d.phi_dep[0], d.phi_dep[1]];
    for (g, e) in got.iter().zip(&exact) {
        assert!((g - e).abs() < 0.02, "{got:?}");
    }
    assert_eq!(d.meta.k1, 10_000);
    assert_eq!(d.meta.sampler, "discrete");
    assert!(d.meta.warnings.is_empty());
}

#[test]
fn decompose_warns_when_k2_below_k1() {
    let d = decompose(&toy_model(), &toy_joint(), &[1.0, 1.0], &Budget::new(200, 100, 0)).unwrap();
    assert_eq!(d.meta.warnings.len(), 1);
}

#[test]
fn decompose_independent_gaussian_has_small_dependent_part() {
    let model = FnModel::new(2, "interaction", |x: &[f64]| x[0] + x[1] + x[0] * x[1]);
    let g = GaussianModel::bivariate(0.0).unwrap();
    let d = decompose(&model, &g, &[1.0, -0.5], &Budget::new(20_000, 40_000, 1)).unwrap();
    assert!(d.phi_dep.iter().all(|v| v.abs() <= 0.03), "{:?}", d.phi_dep);
}

#[test]
fn decompose_dependent_part_follows_correlation() {
    let model = FnModel::new(2, "interaction", |x: &[f64]| x[0] + x[1] + 2.0 * x[0] * x[1]);
    let g = GaussianModel::bivariate(0.5).unwrap();
    let d = decompose(&model, &g, &[1.0, 1.0], &Budget::new(20_000, 40_000, 2)).unwrap();
    for v in &d.phi_dep {
        assert!((v - 0.75).abs() <= 0.05, "{:?}", d.phi_dep);
    }
}

#[test]
fn decomposition_errors_carry_stage() {
    let support = Rows::from_rows(2, &[[0.0, 0.0], [1.0, 1.0]]).unwrap();
    let joint = DiscreteJoint::new(support.clone(), vec![0.5, 0.5]).unwrap();
    let model = TabulatedModel::from_fn(support, |r| r[0]).unwrap();
    let err = decompose(&model, &joint, &[1.0, 0.0], &Budget::new(10, 10, 0)).unwrap_err();
    assert!(matches!(err, shapdec_core::Error::Stage { stage: "kernel shap", .. }));
}

fn interaction_residuals(alpha: f64) -> shapdec_core::engine::ResidualTable {
    let model = FnModel::new(2, "interaction", |x: &[f64]| x[0] + x[1] + 2.0 * x[0] * x[1]);
    let g = GaussianModel::bivariate(alpha).unwrap();
    let vf = ValueFunction::gaussian_quadrature(&model, &g, 6);
    shapley_residuals(&vf, &[1.0, 1.0], RngStream::new(0)).unwrap()
}

#[test]
fn residual_norm_closed_form() {
    for (alpha, norm) in [(0.0, std::f64::consts::SQRT_2), (0.5, 0.0)] {
        let t = interaction_residuals(alpha);
        for i in 0..2 {
            assert!((t.norm(i) - norm).abs() < 1e-9, "alpha {alpha}: {}", t.norm(i));
            assert!((t.phi()[i] - (2.0 - alpha)).abs() < 1e-9);
        }
    }
}

#[test]
fn residuals_average_to_zero_over_orderings() {
    for seed in 0..5 {
        let (joint, model, x) = random_discrete_problem(100 + seed);
        let vf = ValueFunction::exact_discrete(&model, &joint);
        let t = shapley_residuals(&vf, &x, RngStream::new(0)).unwrap();
        for i in 0..3 {
            assert!(t.permutation_average(i).abs() < 1e-12);
        }
    }
}

#[test]
fn additive_split_examples() {
    let joint = Sampler::Discrete(toy_joint());
    let separable = AdditiveModel::new(
        2,
        vec![
            Component::new(vec![0], |x: &[f64]| 2.0 * x[0]),
            Component::new(vec![1], |x: &[f64]| -x[1]),
        ],
    )
    .unwrap();
    let r = additive_split_check(&separable, &joint, &[1.0, 1.0]).unwrap();
    assert_eq!(r.max_abs_delta(), 0.0);

    let interacting = AdditiveModel::new(
        2,
        vec![
            Component::new(vec![0], |x: &[f64]| x[0]),
            Component::new(vec![1], |x: &[f64]| 3.0 * x[1]),
            Component::new(vec![0, 1], |x: &[f64]| x[0] * x[1]),
        ],
    )
    .unwrap();
    let r = additive_split_check(&interacting, &joint, &[1.0, 0.0]).unwrap();
    assert!(r.max_abs_delta() <= 1e-12);

    let single = AdditiveModel::new(2, vec![Component::new(vec![0, 1], |x: &[f64]| x[0] - x[1])]).unwrap();
    assert_eq!(additive_split_check(&single, &joint, &[0.0, 0.0]).unwrap().max_abs_delta(), 0.0);

    let g = Sampler::Gaussian(GaussianModel::bivariate(0.1).unwrap());
    assert!(matches!(
        additive_split_check(&single, &g, &[0.0, 0.0]),
        Err(shapdec_core::Error::Unsupported(_))
    ));
}

#[test]
fn marginal_sampler_gives_interventional_values() {
    // conditional values under a marginal sampler are interventional values
    let model = toy_model();
    let bg = toy_background();
    let sampler = MarginalSampler { data: bg.clone() };
    let known = Coalition::from_indices(2, &[1]).unwrap();
    let a = ValueFunction::conditional(&model, &sampler, 500).value(&known, &[1.0, 1.0], RngStream::new(3)).unwrap();
    assert!((a - 0.5).abs() < 0.1);
    assert_eq!(sampler.kind(), "marginal");
}

#[test]
fn estimator_noise_shrinks_with_budget() {
    let model = toy_model();
    let joint = toy_joint();
    let spread = |k: usize| {
        let runs: Vec<Vec<f64>> = (0..200)
            .map(|s| {
                let d = decompose(&model, &joint, &[1.0, 1.0], &Budget::new(k, k, 1_000 + s)).unwrap();
                vec![d.phi[0], d.phi[1], d.phi_int[0]]
            })
            .collect();
        (0..3)
            .map(|j| {
                let col: Vec<f64> = runs.iter().map(|r| r[j]).collect();
                let m = col.iter().sum::<f64>() / col.len() as f64;
                (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64).sqrt()
            })
            .collect::<Vec<f64>>()
    };
    let small = spread(200);
    let large = spread(400);
    for (s, l) in small.iter().zip(&large) {
        let ratio = l / s;
        let target = std::f64::consts::FRAC_1_SQRT_2;
        assert!((ratio - target).abs() <= 0.2 * target, "ratio {ratio}");
    }
}
