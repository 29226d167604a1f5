use serde::{Deserialize, Serialize};

use super::{pca_fit, pls_fit, FeatureRanking, PcaModel, PlsModel};
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Pca,
    Pls,
}

/// Anything exposing per-component explained shares and feature-space vectors.
pub trait ComponentModel {
    fn component_explained(&self) -> Vec<f64>;
    /// One row per component, one column per feature.
    fn component_vectors(&self) -> &Matrix;
    fn method_name(&self) -> &'static str;
}

impl ComponentModel for PcaModel {
    fn component_explained(&self) -> Vec<f64> {
        self.explained_variance_ratio()
    }

    fn component_vectors(&self) -> &Matrix {
        &self.loadings
    }

    fn method_name(&self) -> &'static str {
        "PCA"
    }
}

impl ComponentModel for PlsModel {
    fn component_explained(&self) -> Vec<f64> {
        self.explained.clone()
    }

    fn component_vectors(&self) -> &Matrix {
        &self.weights
    }

    fn method_name(&self) -> &'static str {
        "PLS"
    }
}

/// `s_j = Σ_p ev_p · |v_pj|`.
pub fn component_scores(explained: &[f64], vectors: &Matrix, method: &str) -> Result<FeatureRanking> {
    if explained.len() != vectors.nrows() {
        return Err(Error::DimensionMismatch {
            expected: vectors.nrows(),
            found: explained.len(),
        });
    }
    let scores = (0..vectors.ncols())
        .map(|j| {
            explained
                .iter()
                .enumerate()
                .map(|(p, ev)| ev * vectors[(p, j)].abs())
                .sum()
        })
        .collect();
    Ok(FeatureRanking::from_scores(scores, method))
}

pub fn component_feature_scores<C: ComponentModel>(model: &C) -> FeatureRanking {
    component_scores(
        &model.component_explained(),
        model.component_vectors(),
        model.method_name(),
    )
    .expect("component model shapes agree")
}

/// Point of greatest concavity on the cumulative curve, with `c₀ = 0` prepended.
///
/// Ties go to the smaller count. Needs at least two entries.
pub fn elbow(cumulative: &[f64]) -> Result<usize> {
    let k = cumulative.len();
    if k < 2 {
        return Err(Error::config("elbow needs at least two components"));
    }
    let c: Vec<f64> = std::iter::once(0.0).chain(cumulative.iter().copied()).collect();
    let mut best = (1, f64::INFINITY);
    for p in 1..k {
        let d2 = c[p + 1] - 2.0 * c[p] + c[p - 1];
        if d2 < best.1 {
            best = (p, d2);
        }
    }
    Ok(best.0)
}

/// Chooses the component count and returns the fitted model with that many components.
///
/// PCA uses the elbow of its cumulative explained variance. PLS takes the smallest
/// count whose validation error is within `1e-9 · SS_val` of the best.
pub fn choose_components(
    kind: ComponentKind,
    x: &Matrix,
    y: &Vector,
    max_p: usize,
    val: Option<(&Matrix, &Vector)>,
) -> Result<(usize, Box<dyn ComponentModelBox>)> {
    let cap = max_p.min(x.ncols()).min(x.nrows().saturating_sub(1));
    if cap < 2 {
        return Err(Error::config("component search needs room for at least two components"));
    }
    match kind {
        ComponentKind::Pca => {
            let probe = pca_fit(x, cap)?;
            let p = elbow(&probe.cumulative_explained())?;
            Ok((p, Box::new(pca_fit(x, p)?)))
        }
        ComponentKind::Pls => {
            let (vx, vy) = val.ok_or_else(|| Error::config("PLS component choice needs validation data"))?;
            let model = pls_fit(x, y, cap)?;
            let mses: Vec<f64> = (1..=model.n_components())
                .map(|p| {
                    model
                        .predict(vx, p)
                        .and_then(|pred| crate::metrics::mse(vy.as_slice(), pred.as_slice()))
                })
                .collect::<Result<_>>()?;
            let best = mses.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = vy.mean();
            let ss = vy.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vy.len().max(1) as f64;
            let p = mses
                .iter()
                .position(|&e| e <= best + 1e-9 * ss.max(f64::MIN_POSITIVE))
                .unwrap_or(0)
                + 1;
            Ok((p, Box::new(truncate_pls(model, p))))
        }
    }
}

/// Object-safe view used by [`choose_components`].
pub trait ComponentModelBox: Send + Sync {
    fn ranking(&self) -> FeatureRanking;
    fn n_components(&self) -> usize;
}

impl ComponentModelBox for PcaModel {
    fn ranking(&self) -> FeatureRanking {
        component_feature_scores(self)
    }

    fn n_components(&self) -> usize {
        PcaModel::n_components(self)
    }
}

impl ComponentModelBox for PlsModel {
    fn ranking(&self) -> FeatureRanking {
        component_feature_scores(self)
    }

    fn n_components(&self) -> usize {
        PlsModel::n_components(self)
    }
}

fn truncate_pls(m: PlsModel, p: usize) -> PlsModel {
    PlsModel {
        weights: m.weights.rows(0, p).into_owned(),
        x_loadings: m.x_loadings.rows(0, p).into_owned(),
        y_loadings: m.y_loadings[..p].to_vec(),
        scores: m.scores.columns(0, p).into_owned(),
        explained: m.explained[..p].to_vec(),
        stopped_early: m.stopped_early,
        x_params: m.x_params,
        y_mean: m.y_mean,
        y_std: m.y_std,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn elbow_example() {
        assert_eq!(elbow(&[0.5, 0.9, 0.93, 0.95]).unwrap(), 2);
        assert!(elbow(&[1.0]).is_err());
        // Straight line: every second difference is zero, so the smallest count wins.
        assert_eq!(elbow(&[0.25, 0.5, 0.75, 1.0]).unwrap(), 1);
    }

    #[test]
    fn single_component_scores() {
        let v = Matrix::from_row_slice(1, 2, &[0.6, -0.8]);
        let r = component_scores(&[1.0], &v, "PCA").unwrap();
        assert_eq!(r.order, vec![1, 0]);
        assert!((r.scores[0] - 0.6).abs() < 1e-15 && (r.scores[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pls_choice_on_rank_two_data() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let f = Matrix::from_fn(40, 2, |_, _| rng.random_range(-1.0..1.0));
        let mix = Matrix::from_fn(2, 12, |_, _| rng.random_range(-1.0..1.0));
        let x = &f * &mix;
        let y = Vector::from_fn(40, |i, _| 2.0 * f[(i, 0)] + f[(i, 1)]);
        let (tx, vx) = (x.rows(0, 30).into_owned(), x.rows(30, 10).into_owned());
        let (ty, vy) = (y.rows(0, 30).into_owned(), y.rows(30, 10).into_owned());
        let (p, m) = choose_components(ComponentKind::Pls, &tx, &ty, 6, Some((&vx, &vy))).unwrap();
        assert_eq!(p, 2);
        assert_eq!(m.n_components(), 2);
    }

    #[test]
    fn pca_choice_sees_a_two_factor_elbow() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let f = Matrix::from_fn(50, 2, |_, _| rng.random_range(-1.0..1.0));
        let mix = Matrix::from_fn(2, 10, |_, _| rng.random_range(-1.0..1.0));
        let x = &f * &mix + Matrix::from_fn(50, 10, |_, _| rng.random_range(-1e-3..1e-3));
        let y = Vector::zeros(50);
        let (p, _) = choose_components(ComponentKind::Pca, &x, &y, 6, None).unwrap();
        assert_eq!(p, 2);
    }
}
