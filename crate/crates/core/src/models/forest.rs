use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_data, Regressor};
use crate::{Error, Matrix, Result, Vector};

/// Number of candidate features drawn at each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// ⌊M/3⌋ (at least one).
    Third,
    All,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    fn resolve(self, m: usize) -> Result<usize> {
        let k = match self {
            MaxFeatures::Third => m / 3,
            MaxFeatures::All => m,
            MaxFeatures::Count(k) => k,
            MaxFeatures::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::config(format!(
                        "max_features fraction must lie in (0, 1], got {f}"
                    )));
                }
                (f * m as f64).floor() as usize
            }
        };
        Ok(k.clamp(1, m))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfHyperparams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for RfHyperparams {
    fn default() -> Self {
        Self {
            n_trees: 91,
            max_features: MaxFeatures::Third,
            min_leaf: 1,
            bootstrap: true,
            max_depth: None,
            seed: 0,
        }
    }
}

impl RfHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::config("a forest needs at least one tree"));
        }
        if self.min_leaf < 1 {
            return Err(Error::config("min_leaf must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// `n_t·i(t) − n_L·i(L) − n_R·i(R)`.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Mean response of the training rows reaching the node.
    pub value: f64,
    pub n_samples: usize,
    /// Response variance i(t) at the node.
    pub impurity: f64,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Preorder node array; the root is `nodes[0]`.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            let node = &self.nodes[k];
            match node.split {
                Some(s) => k = if x[s.feature] <= s.threshold { s.left } else { s.right },
                None => return node.value,
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    pub hyper: RfHyperparams,
}

impl RfModel {
    pub fn n_nodes(&self) -> usize {
        self.trees.iter().map(Tree::n_nodes).sum()
    }
}

impl Regressor for RfModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn rf_fit(x: &Matrix, y: &Vector, h: &RfHyperparams) -> Result<RfModel> {
    check_training_data(x, y, 2)?;
    h.validate()?;
    let k = h.max_features.resolve(x.ncols())?;
    let mut master = ChaCha8Rng::seed_from_u64(h.seed);
    let seeds: Vec<u64> = (0..h.n_trees).map(|_| master.random()).collect();
    let trees = seeds.into_par_iter().map(|s| grow_tree(x, y, h, k, s)).collect();
    Ok(RfModel {
        trees,
        n_features: x.ncols(),
        hyper: h.clone(),
    })
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a Vector,
    h: &'a RfHyperparams,
    k: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    // Scratch buffer reused across split searches.
    pairs: Vec<(f64, f64)>,
}

fn grow_tree(x: &Matrix, y: &Vector, h: &RfHyperparams, k: usize, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.nrows();
    let mut samples: Vec<usize> = if h.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut g = Grower {
        x,
        y,
        h,
        k,
        rng,
        nodes: Vec::new(),
        pairs: Vec::with_capacity(n),
    };
    g.build(&mut samples, 0);
    Tree { nodes: g.nodes }
}

impl Grower<'_> {
    fn build(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let n = samples.len();
        let mean = samples.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        let sse: f64 = samples.iter().map(|&i| (self.y[i] - mean).powi(2)).sum();
        let id = self.nodes.len();
        self.nodes.push(Node {
            value: mean,
            n_samples: n,
            impurity: sse / n as f64,
            split: None,
        });

        let noise_floor = n as f64 * (1e-14 * mean.abs().max(1.0)).powi(2);
        let depth_ok = self.h.max_depth.is_none_or(|d| depth < d);
        if n < 2 * self.h.min_leaf || !depth_ok || sse <= noise_floor {
            return id;
        }
        let Some((feature, threshold, gain)) = self.best_split(samples, mean) else {
            return id;
        };
        if gain <= noise_floor {
            return id;
        }
        let mid = partition_in_place(samples, |&i| self.x[(i, feature)] <= threshold);
        let (l, r) = samples.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id].split = Some(Split {
            feature,
            threshold,
            left,
            right,
            gain,
        });
        id
    }

    /// Best (feature, threshold, gain); ties keep the lowest feature, then the lowest threshold.
    fn best_split(&mut self, samples: &[usize], mean: f64) -> Option<(usize, f64, f64)> {
        let m = self.x.ncols();
        let mut features: Vec<usize> = rand::seq::index::sample(&mut self.rng, m, self.k).into_vec();
        features.sort_unstable();
        let n = samples.len();
        let min_leaf = self.h.min_leaf;
        let mut best: Option<(usize, f64, f64)> = None;
        for f in features {
            self.pairs.clear();
            self.pairs
                .extend(samples.iter().map(|&i| (self.x[(i, f)], self.y[i] - mean)));
            self.pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut s_left = 0.0;
            for p in 1..n {
                s_left += self.pairs[p - 1].1;
                if p < min_leaf || n - p < min_leaf || self.pairs[p - 1].0 >= self.pairs[p].0 {
                    continue;
                }
                // Centered responses: the SSE reduction is s_L²·(1/n_L + 1/n_R).
                let gain = s_left * s_left * (1.0 / p as f64 + 1.0 / (n - p) as f64);
                if best.is_none_or(|b| gain > b.2) {
                    let (lo, hi) = (self.pairs[p - 1].0, self.pairs[p].0);
                    let mut thr = 0.5 * (lo + hi);
                    if !(thr >= lo && thr < hi) {
                        thr = lo;
                    }
                    best = Some((f, thr, gain));
                }
            }
        }
        best
    }
}

/// Stable-enough in-place partition; returns the count of elements satisfying `pred`.
fn partition_in_place<F: Fn(&usize) -> bool>(v: &mut [usize], pred: F) -> usize {
    let mut left: Vec<usize> = Vec::with_capacity(v.len());
    let mut right: Vec<usize> = Vec::new();
    for &i in v.iter() {
        if pred(&i) {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    let mid = left.len();
    v[..mid].copy_from_slice(&left);
    v[mid..].copy_from_slice(&right);
    mid
}
