use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{check_width, instance_rng, Attribution};
use crate::models::Regressor;
use crate::selectors::FeatureRanking;
use crate::spectra::StandardizationParams;
use crate::{linalg, Error, Matrix, Result, Vector};

/// Features kept per instance when LIME explanations are aggregated.
pub const DEFAULT_LIME_K: usize = 50;

#[derive(Debug, Clone)]
pub struct LimeConfig {
    pub n_perturbations: usize,
    /// Proximity kernel width in standardized units; `None` means `0.75·√M`.
    pub kernel_width: Option<f64>,
    pub ridge_penalty: f64,
    /// Per-feature scale used to perturb and to measure distance.
    pub train_stats: StandardizationParams,
    pub seed: u64,
}

impl LimeConfig {
    pub fn new(train_stats: StandardizationParams, seed: u64) -> Self {
        Self {
            n_perturbations: 1000,
            kernel_width: None,
            ridge_penalty: 1e-3,
            train_stats,
            seed,
        }
    }

    fn width(&self, m: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (m as f64).sqrt())
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.train_stats.n_features() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: self.train_stats.n_features(),
            });
        }
        if self.n_perturbations < 2 {
            return Err(Error::config("LIME needs at least two perturbations"));
        }
        if !(self.ridge_penalty > 0.0) || !(self.width(m) > 0.0) {
            return Err(Error::config("LIME ridge penalty and kernel width must be positive"));
        }
        Ok(())
    }
}

/// Local linear explanation of `f` around `x`.
///
/// `values` are the local slopes per training standard deviation; `base_value`
/// is the local intercept at `x`.
pub fn lime_local(f: &dyn Regressor, x: &[f64], cfg: &LimeConfig) -> Result<Attribution> {
    check_width(f, x.len())?;
    cfg.validate(x.len())?;
    if cfg.n_perturbations < x.len() {
        log::warn!(
            "LIME uses {} perturbations for {} features; the local fit is underdetermined",
            cfg.n_perturbations,
            x.len()
        );
    }
    explain_one(f, x, 0, cfg)
}

pub fn lime_attributions(f: &dyn Regressor, xs: &Matrix, cfg: &LimeConfig) -> Result<Vec<Attribution>> {
    check_width(f, xs.ncols())?;
    cfg.validate(xs.ncols())?;
    if cfg.n_perturbations < xs.ncols() {
        log::warn!(
            "LIME uses {} perturbations for {} features; the local fit is underdetermined",
            cfg.n_perturbations,
            xs.ncols()
        );
    }
    linalg::rows(xs)
        .par_iter()
        .enumerate()
        .map(|(i, x)| explain_one(f, x, i, cfg))
        .collect()
}

/// Selection frequency of each feature among the per-instance top `per_instance_k`
/// by `|value|`; ties go to the larger mean `|value|`.
pub fn lime_rank(f: &dyn Regressor, xs: &Matrix, cfg: &LimeConfig, per_instance_k: usize) -> Result<FeatureRanking> {
    if per_instance_k == 0 {
        return Err(Error::config("per-instance k must be at least 1"));
    }
    if xs.nrows() == 0 {
        return Err(Error::invalid("no instances to explain"));
    }
    let attrs = lime_attributions(f, xs, cfg)?;
    Ok(aggregate(&attrs, xs.ncols(), per_instance_k))
}

/// [`lime_rank`] over precomputed attributions of width `m`.
pub fn lime_rank_from(attrs: &[Attribution], m: usize, per_instance_k: usize) -> Result<FeatureRanking> {
    if per_instance_k == 0 {
        return Err(Error::config("per-instance k must be at least 1"));
    }
    if attrs.is_empty() {
        return Err(Error::invalid("no instances to explain"));
    }
    Ok(aggregate(attrs, m, per_instance_k))
}

fn aggregate(attrs: &[Attribution], m: usize, k: usize) -> FeatureRanking {
    let n = attrs.len() as f64;
    let mut freq = vec![0.0; m];
    let mut mean_abs = vec![0.0; m];
    for a in attrs {
        let local = FeatureRanking::from_scores(a.values.iter().map(|v| v.abs()).collect(), "");
        for &j in local.top(k) {
            freq[j] += 1.0;
        }
        for (s, v) in mean_abs.iter_mut().zip(&a.values) {
            *s += v.abs() / n;
        }
    }
    freq.iter_mut().for_each(|c| *c /= n);
    FeatureRanking::from_scores_with_tiebreak(freq, &mean_abs, "LIME")
}

fn explain_one(f: &dyn Regressor, x: &[f64], id: usize, cfg: &LimeConfig) -> Result<Attribution> {
    let m = x.len();
    let n = cfg.n_perturbations;
    let stats = &cfg.train_stats;
    let xs = stats.apply_row(x)?;
    let mut rng = instance_rng(cfg.seed, id);
    // Offsets from x in standardized space; row i is one perturbation.
    let offsets = Matrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut rng));
    let mut raw = vec![0.0; m];
    let targets = Vector::from_iterator(
        n,
        (0..n).map(|i| {
            for (j, r) in raw.iter_mut().enumerate() {
                *r = if stats.is_constant(j) {
                    x[j]
                } else {
                    stats.invert_value(j, xs[j] + offsets[(i, j)])
                };
            }
            f.predict_row(&raw)
        }),
    );
    let d2: Vec<f64> = offsets.row_iter().map(|r| r.norm_squared()).collect();
    let mut width = cfg.width(m);
    let mut weights = Vector::from_iterator(n, d2.iter().map(|d| (-d / (width * width)).exp()));
    while weights.max() < 1e-8 {
        width *= 2.0;
        log::warn!("LIME proximity weights vanished; widening kernel to {width}");
        weights = Vector::from_iterator(n, d2.iter().map(|d| (-d / (width * width)).exp()));
    }
    let (intercept, coef) = linalg::weighted_ridge(&offsets, &targets, &weights, cfg.ridge_penalty)?;
    let fitted = &offsets * &coef;
    let wsum = weights.sum();
    let ybar = weights.dot(&targets) / wsum;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..n {
        ss_res += weights[i] * (targets[i] - intercept - fitted[i]).powi(2);
        ss_tot += weights[i] * (targets[i] - ybar).powi(2);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(Attribution {
        instance_id: id,
        values: coef.iter().copied().collect(),
        base_value: intercept,
        model_output: f.predict_row(x),
        local_fit_r2: Some(r2),
    })
}
