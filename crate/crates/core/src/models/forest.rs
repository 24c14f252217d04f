//! Random forest of CART trees.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_rows, Predictor};
use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};
use crate::types::{FeatureMatrix, Rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForestTask {
    Regression,
    /// 0/1 targets; leaves hold class-1 frequencies.
    BinaryProbability,
}

/// Rows with `x[feature] < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        value: f64,
    },
}

impl Node {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] < *threshold { left } else { right },
            }
        }
    }

    fn validate(&self, n_features: usize, task: ForestTask) -> Result<()> {
        match self {
            Node::Leaf { value } => {
                let ok = value.is_finite() && (task == ForestTask::Regression || (0.0..=1.0).contains(value));
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(alloc::format!("invalid leaf value {value}")))
                }
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= n_features || !threshold.is_finite() {
                    return Err(Error::InvalidInput(alloc::format!(
                        "split on feature {feature} at {threshold} is invalid for {n_features} features"
                    )));
                }
                left.validate(n_features, task)?;
                right.validate(n_features, task)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawForest")]
pub struct ForestModel {
    n_features: usize,
    task: ForestTask,
    trees: Vec<Node>,
}

#[derive(Deserialize)]
struct RawForest {
    n_features: usize,
    task: ForestTask,
    trees: Vec<Node>,
}

impl TryFrom<RawForest> for ForestModel {
    type Error = Error;
    fn try_from(raw: RawForest) -> Result<Self> {
        ForestModel::new(raw.n_features, raw.task, raw.trees)
    }
}

impl ForestModel {
    pub fn new(n_features: usize, task: ForestTask, trees: Vec<Node>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidInput("a forest needs at least one tree".into()));
        }
        for t in &trees {
            t.validate(n_features, task)?;
        }
        Ok(Self {
            n_features,
            task,
            trees,
        })
    }

    pub fn task(&self) -> ForestTask {
        self.task
    }

    pub fn trees(&self) -> &[Node] {
        &self.trees
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.eval(x)).sum::<f64>() / self.trees.len() as f64
    }
}

impl Predictor for ForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        check_rows(rows, self.n_features)?;
        Ok(rows.iter().map(|r| self.eval(r)).collect())
    }

    fn id(&self) -> String {
        "forest".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Defaults to `ceil(sqrt(M))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub task: ForestTask,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 200,
            max_depth: 8,
            min_leaf: 5,
            features_per_split: None,
            bootstrap: true,
            task: ForestTask::Regression,
        }
    }
}

/// Tree `t` is grown from `stream.substream(t)`.
pub fn fit_forest(data: &FeatureMatrix, target: &[f64], params: &ForestParams, stream: RngStream) -> Result<ForestModel> {
    let n = data.n_rows();
    let m = data.n_features();
    if target.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: target.len(),
        });
    }
    if params.trees == 0 || params.min_leaf == 0 {
        return Err(Error::InvalidInput("trees and min_leaf must be positive".into()));
    }
    if n < 2 * params.min_leaf {
        return Err(Error::InvalidInput(alloc::format!(
            "{n} rows cannot fill two leaves of {} rows",
            params.min_leaf
        )));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("target must be finite".into()));
    }
    if params.task == ForestTask::BinaryProbability && target.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidInput("binary forest needs 0/1 targets".into()));
    }
    let mtry = params
        .features_per_split
        .unwrap_or_else(|| libm::ceil(libm::sqrt(m as f64)) as usize)
        .clamp(1, m);
    let builder = TreeBuilder {
        data,
        target,
        params,
        mtry,
    };
    let trees = (0..params.trees as u64)
        .map(|t| {
            let mut rng = stream.substream(t).rng();
            let mut rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            builder.grow(&mut rows, 0, &mut rng)
        })
        .collect();
    ForestModel::new(m, params.task, trees)
}

struct TreeBuilder<'a> {
    data: &'a FeatureMatrix,
    target: &'a [f64],
    params: &'a ForestParams,
    mtry: usize,
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl TreeBuilder<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let value = rows.iter().map(|&i| self.target[i]).sum::<f64>() / rows.len() as f64;
        Node::Leaf { value }
    }

    /// Weighted impurity of a node with `count` rows, target sum `s` and sum of squares `ss`.
    fn impurity(&self, count: f64, s: f64, ss: f64) -> f64 {
        match self.params.task {
            ForestTask::Regression => ss - s * s / count,
            ForestTask::BinaryProbability => 2.0 * s * (count - s) / count,
        }
    }

    fn grow(&self, rows: &mut [usize], depth: usize, rng: &mut StreamRng) -> Node {
        let n = rows.len();
        if depth >= self.params.max_depth || n < 2 * self.params.min_leaf {
            return self.leaf(rows);
        }
        let (s, ss) = rows.iter().fold((0.0, 0.0), |(s, ss), &i| {
            let y = self.target[i];
            (s + y, ss + y * y)
        });
        let parent = self.impurity(n as f64, s, ss);
        if parent <= 1e-12 * (1.0 + ss) {
            return self.leaf(rows);
        }
        let mut features: Vec<usize> = (0..self.data.n_features()).collect();
        features.partial_shuffle(rng, self.mtry);
        let mut best: Option<SplitCandidate> = None;
        for &f in &features[..self.mtry] {
            if let Some(c) = self.best_split(rows, f, s, ss) {
                if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best.filter(|b| b.impurity < parent - 1e-12 * (1.0 + parent.abs())) else {
            return self.leaf(rows);
        };
        let x = |i: usize| self.data.row(i)[best.feature];
        // stable partition
        let mut left: Vec<usize> = rows.iter().copied().filter(|&i| x(i) < best.threshold).collect();
        let mut right: Vec<usize> = rows.iter().copied().filter(|&i| x(i) >= best.threshold).collect();
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(&mut left, depth + 1, rng)),
            right: Box::new(self.grow(&mut right, depth + 1, rng)),
        }
    }

    fn best_split(&self, rows: &[usize], feature: usize, s: f64, ss: f64) -> Option<SplitCandidate> {
        let mut sorted: Vec<(f64, f64)> = rows
            .iter()
            .map(|&i| (self.data.row(i)[feature], self.target[i]))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let min_leaf = self.params.min_leaf;
        let (mut ls, mut lss) = (0.0, 0.0);
        let mut best: Option<SplitCandidate> = None;
        for pos in 1..n {
            let y = sorted[pos - 1].1;
            ls += y;
            lss += y * y;
            if pos < min_leaf || n - pos < min_leaf || sorted[pos - 1].0 >= sorted[pos].0 {
                continue;
            }
            let impurity = self.impurity(pos as f64, ls, lss) + self.impurity((n - pos) as f64, s - ls, ss - lss);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let (lo, hi) = (sorted[pos - 1].0, sorted[pos].0);
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid > lo { mid } else { hi };
                best = Some(SplitCandidate {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand_distr::{Distribution, StandardNormal};

    fn random_data(n: usize, m: usize, seed: u64) -> FeatureMatrix {
        let mut rng = RngStream::new(seed).rng();
        let mut rows = Rows::new(m);
        for _ in 0..n {
            let r: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            rows.push(&r).unwrap();
        }
        let names = (0..m).map(|i| alloc::format!("x{i}")).collect();
        FeatureMatrix::new(names, rows).unwrap()
    }

    #[test]
    fn single_split_tree() {
        let tree = Node::Split {
            feature: 0,
            threshold: 0.5,
            left: Box::new(Node::Leaf { value: 0.0 }),
            right: Box::new(Node::Leaf { value: 1.0 }),
        };
        let f = ForestModel::new(2, ForestTask::Regression, vec![tree]).unwrap();
        assert_eq!(f.predict_one(&[0.2, 9.0]).unwrap(), 0.0);
        assert_eq!(f.predict_one(&[0.5, 9.0]).unwrap(), 1.0);
    }

    #[test]
    fn invalid_trees_are_rejected() {
        let bad = Node::Split {
            feature: 3,
            threshold: 0.0,
            left: Box::new(Node::Leaf { value: 0.0 }),
            right: Box::new(Node::Leaf { value: 1.0 }),
        };
        assert!(ForestModel::new(2, ForestTask::Regression, vec![bad]).is_err());
        let prob = Node::Leaf { value: 1.5 };
        assert!(ForestModel::new(2, ForestTask::BinaryProbability, vec![prob]).is_err());
    }

    #[test]
    fn constant_target_predicts_constant() {
        let data = random_data(100, 3, 1);
        let f = fit_forest(&data, &[2.5; 100], &ForestParams::default(), RngStream::new(0)).unwrap();
        assert!(f.trees().iter().all(|t| t.depth() == 0));
        assert_eq!(f.predict_one(&[10.0, -3.0, 0.0]).unwrap(), 2.5);
    }

    #[test]
    fn separable_binary_target() {
        let data = random_data(2000, 3, 2);
        let y: Vec<f64> = data.rows().iter().map(|r| if r[0] > 0.0 { 1.0 } else { 0.0 }).collect();
        let params = ForestParams {
            task: ForestTask::BinaryProbability,
            trees: 50,
            ..ForestParams::default()
        };
        let f = fit_forest(&data, &y, &params, RngStream::new(3)).unwrap();
        let p = f.predict_batch(data.rows()).unwrap();
        let correct = p.iter().zip(&y).filter(|(p, y)| (**p > 0.5) == (**y == 1.0)).count();
        assert!(correct as f64 / 2000.0 >= 0.99, "{correct}");
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn same_seed_same_forest() {
        let data = random_data(300, 4, 5);
        let y: Vec<f64> = data.rows().iter().map(|r| r[0] * r[1] + r[2]).collect();
        let params = ForestParams {
            trees: 10,
            ..ForestParams::default()
        };
        let a = fit_forest(&data, &y, &params, RngStream::new(9)).unwrap();
        let b = fit_forest(&data, &y, &params, RngStream::new(9)).unwrap();
        assert_eq!(a, b);
        let c = fit_forest(&data, &y, &params, RngStream::new(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tree_order_does_not_matter() {
        let data = random_data(200, 2, 6);
        let y: Vec<f64> = data.rows().iter().map(|r| r[0] - r[1]).collect();
        let params = ForestParams {
            trees: 7,
            ..ForestParams::default()
        };
        let f = fit_forest(&data, &y, &params, RngStream::new(1)).unwrap();
        let mut rev = f.trees().to_vec();
        rev.reverse();
        let g = ForestModel::new(2, ForestTask::Regression, rev).unwrap();
        let a = f.predict_batch(data.rows()).unwrap();
        let b = g.predict_batch(data.rows()).unwrap();
        for (a, b) in a.iter().zip(&b) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_rows() {
        let data = random_data(8, 2, 7);
        assert!(fit_forest(&data, &[0.0; 8], &ForestParams::default(), RngStream::new(0)).is_err());
    }

    #[test]
    fn nested_json_nodes() {
        let tree = Node::Split {
            feature: 0,
            threshold: 0.5,
            left: Box::new(Node::Leaf { value: 0.0 }),
            right: Box::new(Node::Leaf { value: 1.0 }),
        };
        let f = ForestModel::new(1, ForestTask::BinaryProbability, vec![tree]).unwrap();
        let s = serde_json::to_string(&super::super::Model::Forest(f.clone())).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"forest","n_features":1,"task":"binary-probability","trees":[{"feature":0,"threshold":0.5,"left":{"value":0.0},"right":{"value":1.0}}]}"#
        );
        let back: super::super::Model = serde_json::from_str(&s).unwrap();
        assert_eq!(back, super::super::Model::Forest(f));
    }
}
