use rand::seq::{index, SliceRandom};
use rayon::prelude::*;

use super::{check_width, instance_rng, Attribution};
use crate::models::Regressor;
use crate::selectors::FeatureRanking;
use crate::{linalg, Error, Matrix, Result};

/// Largest feature count accepted by exact enumeration.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone)]
pub struct ShapConfig {
    pub mode: ShapMode,
    pub n_permutations: usize,
    /// Reference rows standing in for absent features.
    pub background: Matrix,
    pub exact_limit: usize,
    pub seed: u64,
}

impl ShapConfig {
    pub fn exact(background: Matrix) -> Self {
        Self {
            mode: ShapMode::Exact,
            n_permutations: 0,
            background,
            exact_limit: EXACT_LIMIT,
            seed: 0,
        }
    }

    pub fn sampled(background: Matrix, n_permutations: usize, seed: u64) -> Self {
        Self {
            mode: ShapMode::Sampled,
            n_permutations,
            background,
            exact_limit: EXACT_LIMIT,
            seed,
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.background.nrows() == 0 {
            return Err(Error::config("Shapley background set is empty"));
        }
        if self.background.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: self.background.ncols(),
            });
        }
        match self.mode {
            ShapMode::Exact if m > self.exact_limit => Err(Error::config(format!(
                "exact Shapley enumeration supports at most {} features, got {m}",
                self.exact_limit
            ))),
            ShapMode::Sampled if self.n_permutations == 0 => {
                Err(Error::config("sampled Shapley needs at least one permutation"))
            }
            _ => Ok(()),
        }
    }
}

/// Shapley values of `f` at `x` under interventional masking against `cfg.background`.
pub fn shapley_local(f: &dyn Regressor, x: &[f64], cfg: &ShapConfig) -> Result<Attribution> {
    explain_one(f, x, 0, cfg)
}

/// Attributions for every row of `xs`, computed in parallel.
pub fn shap_attributions(f: &dyn Regressor, xs: &Matrix, cfg: &ShapConfig) -> Result<Vec<Attribution>> {
    check_width(f, xs.ncols())?;
    cfg.validate(xs.ncols())?;
    let rows = linalg::rows(xs);
    rows.par_iter()
        .enumerate()
        .map(|(i, x)| explain_one(f, x, i, cfg))
        .collect()
}

/// `score_j` = mean over instances of `|value_j|`.
pub fn shap_rank(f: &dyn Regressor, xs: &Matrix, cfg: &ShapConfig) -> Result<FeatureRanking> {
    if xs.nrows() == 0 {
        return Err(Error::invalid("no instances to explain"));
    }
    let attrs = shap_attributions(f, xs, cfg)?;
    Ok(shap_rank_from(&attrs, xs.ncols()))
}

/// Global SHAP ranking from precomputed local attributions of width `m`.
pub fn shap_rank_from(attrs: &[Attribution], m: usize) -> FeatureRanking {
    let n = attrs.len().max(1) as f64;
    let mut scores = vec![0.0; m];
    for a in attrs {
        for (s, v) in scores.iter_mut().zip(&a.values) {
            *s += v.abs() / n;
        }
    }
    FeatureRanking::from_scores(scores, "SHAP")
}

fn explain_one(f: &dyn Regressor, x: &[f64], id: usize, cfg: &ShapConfig) -> Result<Attribution> {
    let m = x.len();
    check_width(f, m)?;
    cfg.validate(m)?;
    let background = linalg::rows(&cfg.background);
    let base_value = background.iter().map(|b| f.predict_row(b)).sum::<f64>() / background.len() as f64;
    let model_output = f.predict_row(x);
    let values = match cfg.mode {
        ShapMode::Exact => exact_values(f, x, &background),
        ShapMode::Sampled => sampled_values(f, x, &background, cfg.n_permutations, cfg.seed, id),
    };
    Ok(Attribution {
        instance_id: id,
        values,
        base_value,
        model_output,
        local_fit_r2: None,
    })
}

/// Enumerates every coalition. `g[mask]` is the background-averaged output with
/// the features in `mask` taken from `x`; each background row walks all masks
/// along a Gray code so consecutive evaluations differ in one feature.
fn exact_values(f: &dyn Regressor, x: &[f64], background: &[Vec<f64>]) -> Vec<f64> {
    let m = x.len();
    let n_masks = 1usize << m;
    let mut g = vec![0.0; n_masks];
    let inv_b = 1.0 / background.len() as f64;
    for b in background {
        let mut steps = Vec::with_capacity(n_masks - 1);
        let mut gray = 0usize;
        for i in 1..n_masks {
            let j = i.trailing_zeros() as usize;
            gray ^= 1 << j;
            steps.push((j, if gray & (1 << j) != 0 { x[j] } else { b[j] }));
        }
        let path = f.predict_path(b, &steps);
        for (i, v) in path.iter().enumerate() {
            g[i ^ (i >> 1)] += v * inv_b;
        }
    }
    // weight[s] = s!(m−s−1)!/m!
    let mut weight = vec![0.0; m];
    for (s, w) in weight.iter_mut().enumerate() {
        *w = 1.0 / (m as f64 * binomial(m - 1, s));
    }
    let mut values = vec![0.0; m];
    for mask in 0..n_masks {
        let s = mask.count_ones() as usize;
        for (j, v) in values.iter_mut().enumerate() {
            if mask & (1 << j) == 0 {
                *v += weight[s] * (g[mask | (1 << j)] - g[mask]);
            }
        }
    }
    values
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Averages marginal contributions along seeded permutations; every permutation
/// is walked from each background row.
fn sampled_values(
    f: &dyn Regressor,
    x: &[f64],
    background: &[Vec<f64>],
    n_perm: usize,
    seed: u64,
    id: usize,
) -> Vec<f64> {
    let m = x.len();
    let mut rng = instance_rng(seed, id);
    let mut perm: Vec<usize> = (0..m).collect();
    let mut values = vec![0.0; m];
    let mut steps = Vec::with_capacity(m);
    let scale = 1.0 / (n_perm * background.len()) as f64;
    for _ in 0..n_perm {
        perm.shuffle(&mut rng);
        steps.clear();
        steps.extend(perm.iter().map(|&j| (j, x[j])));
        for b in background {
            let path = f.predict_path(b, &steps);
            for (k, &j) in perm.iter().enumerate() {
                values[j] += (path[k + 1] - path[k]) * scale;
            }
        }
    }
    values
}

/// Rows for a background set, sampled proportionally from quantile strata of `f(X)`.
///
/// Rows with equal outputs always share a stratum, so a constant model yields a
/// simple random sample. When `n` allows it every occupied stratum gets at least
/// one row. Returned indices are ascending.
pub fn stratified_background(
    x: &Matrix,
    f: &dyn Regressor,
    n: usize,
    n_strata: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let rows = x.nrows();
    if n == 0 || n > rows {
        return Err(Error::config(format!(
            "background size must lie in [1, {rows}], got {n}"
        )));
    }
    if n_strata == 0 {
        return Err(Error::config("need at least one stratum"));
    }
    check_width(f, x.ncols())?;
    let out = f.predict(x);
    let mut sorted: Vec<f64> = out.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let cuts: Vec<f64> = (1..n_strata)
        .map(|k| sorted[(k * rows).div_ceil(n_strata).max(1) - 1])
        .collect();
    let mut strata: Vec<Vec<usize>> = vec![Vec::new(); n_strata];
    for (i, &v) in out.iter().enumerate() {
        let s = cuts.iter().filter(|&&c| v > c).count();
        strata[s].push(i);
    }
    let alloc = allocate(&strata.iter().map(Vec::len).collect::<Vec<_>>(), n);
    let mut rng = instance_rng(seed, 0);
    let mut picked = Vec::with_capacity(n);
    for (members, &k) in strata.iter().zip(&alloc) {
        picked.extend(
            index::sample(&mut rng, members.len(), k)
                .into_iter()
                .map(|p| members[p]),
        );
    }
    picked.sort_unstable();
    Ok(picked)
}

/// Largest-remainder proportional allocation of `n` over stratum sizes, with
/// a floor of one per non-empty stratum when `n` covers them all.
fn allocate(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let mut alloc: Vec<usize> = sizes.iter().map(|&s| s * n / total).collect();
    let mut rem: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(i, &s)| (s * n % total, i)).collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = n - alloc.iter().sum::<usize>();
    for &(_, i) in rem.iter().take(short) {
        alloc[i] += 1;
    }
    let occupied = sizes.iter().filter(|&&s| s > 0).count();
    if n >= occupied {
        while let Some(i) = (0..sizes.len()).find(|&i| sizes[i] > 0 && alloc[i] == 0) {
            let donor = (0..sizes.len())
                .filter(|&d| alloc[d] > 1)
                .max_by_key(|&d| (alloc[d], std::cmp::Reverse(d)));
            match donor {
                Some(d) => {
                    alloc[d] -= 1;
                    alloc[i] += 1;
                }
                None => break,
            }
        }
    }
    alloc
}
