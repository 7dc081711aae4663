//! Gradient-boosted regression trees with squared-error loss.
//!
//! Each stage fits a depth-limited tree to the current residuals by
//! exhaustive search over midpoints between distinct sorted feature values,
//! then adds it to the ensemble scaled by the learning rate.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    pub subsample: f64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 5,
            subsample: 1.0,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_trees > 0
            && self.max_depth >= 1
            && self.learning_rate > 0.0
            && self.learning_rate <= 1.0
            && self.min_leaf >= 1
            && self.subsample > 0.0
            && self.subsample <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config("gbdt needs n_trees > 0, max_depth >= 1, learning_rate in (0,1], min_leaf >= 1, subsample in (0,1]"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Node::Leaf { value } => *value,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

/// Best split of `idx` found by exhaustive midpoint search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    /// Reduction in the sum of squared residuals.
    pub gain: f64,
}

/// Exhaustive search for the SSE-minimizing split of the rows in `idx`.
/// Ties keep the earliest feature and lowest threshold.
pub fn best_split(x: &[Vec<f64>], r: &[f64], idx: &[usize], min_leaf: usize) -> Option<BestSplit> {
    let n = idx.len();
    if n < 2 * min_leaf {
        return None;
    }
    let total: f64 = idx.iter().map(|&i| r[i]).sum();
    let base = total * total / n as f64;
    let n_features = x.get(idx[0]).map_or(0, Vec::len);
    let mut best: Option<BestSplit> = None;
    let mut order = idx.to_vec();
    for f in 0..n_features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += r[order[k]];
            let nl = k + 1;
            let (lo, hi) = (x[order[k]][f], x[order[k + 1]][f]);
            if lo == hi || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain =
                left_sum * left_sum / nl as f64 + right_sum * right_sum / (n - nl) as f64 - base;
            if best.map_or(gain > 1e-12 * (1.0 + base.abs()), |b| gain > b.gain) {
                best = Some(BestSplit {
                    feature: f,
                    threshold: 0.5 * (lo + hi),
                    gain,
                });
            }
        }
    }
    best
}

fn grow(x: &[Vec<f64>], r: &[f64], idx: &[usize], depth: usize, cfg: &GbdtConfig) -> Node {
    let mean = idx.iter().map(|&i| r[i]).sum::<f64>() / idx.len() as f64;
    if depth == 0 {
        return Node::Leaf { value: mean };
    }
    match best_split(x, r, idx, cfg.min_leaf) {
        None => Node::Leaf { value: mean },
        Some(s) => {
            let (l, rt): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| x[i][s.feature] <= s.threshold);
            Node::Split {
                feature: s.feature,
                threshold: s.threshold,
                left: Box::new(grow(x, r, &l, depth - 1, cfg)),
                right: Box::new(grow(x, r, &rt, depth - 1, cfg)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbdt {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<Node>,
    /// Training mean squared error after each stage (index 0 is the constant model).
    pub train_loss: Vec<f64>,
}

impl Gbdt {
    pub fn fit(x: &[Vec<f64>], y: &[f64], cfg: &GbdtConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(format!(
                "{} feature rows for {} targets",
                x.len(),
                y.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::EmptyInput("gbdt training set".into()));
        }
        if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord("gbdt inputs must be finite".into()));
        }
        let n = y.len();
        let base = y.iter().sum::<f64>() / n as f64;
        let mut pred = vec![base; n];
        let mse = |p: &[f64]| p.iter().zip(y).map(|(a, b)| (b - a).powi(2)).sum::<f64>() / n as f64;
        let mut train_loss = vec![mse(&pred)];
        let mut trees = Vec::with_capacity(cfg.n_trees);
        let m = ((cfg.subsample * n as f64).round() as usize).clamp(1, n);
        let mut rng = stream(seed, "gbdt-subsample", 0);
        for _ in 0..cfg.n_trees {
            let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
            let idx: Vec<usize> = if m == n {
                (0..n).collect()
            } else {
                let mut v = sample(&mut rng, n, m).into_vec();
                v.sort_unstable();
                v
            };
            let tree = grow(x, &resid, &idx, cfg.max_depth, cfg);
            for (p, row) in pred.iter_mut().zip(x) {
                *p += cfg.learning_rate * tree.predict(row);
            }
            train_loss.push(mse(&pred));
            trees.push(tree);
        }
        Ok(Gbdt {
            base,
            learning_rate: cfg.learning_rate,
            trees,
            train_loss,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}
