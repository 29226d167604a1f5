use serde::{Deserialize, Serialize};

use super::check_width;
use crate::models::{ridge_fit_with, Regressor};
use crate::selectors::FeatureRanking;
use crate::spectra::StandardizationParams;
use crate::{metrics, Error, Matrix, Result};

/// Ridge penalty stabilizing the global surrogate.
pub const SURROGATE_ALPHA: f64 = 1e-3;

/// Linear model on standardized inputs fitted to a black box's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub params: StandardizationParams,
    /// Slopes per training standard deviation.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// R² of surrogate outputs against the black box on the fitting rows.
    pub fidelity: f64,
}

impl Regressor for SurrogateModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept
            + x.iter()
                .enumerate()
                .map(|(j, &v)| self.weights[j] * self.params.apply_value(j, v))
                .sum::<f64>()
    }
}

pub fn surrogate_fit(f: &dyn Regressor, x: &Matrix) -> Result<SurrogateModel> {
    if x.nrows() == 0 {
        return Err(Error::invalid("surrogate needs at least one row"));
    }
    check_width(f, x.ncols())?;
    let params = StandardizationParams::fit(x)?;
    let z = params.apply(x)?;
    let target = f.predict(x);
    let lin = ridge_fit_with(&z, &target, SURROGATE_ALPHA, true)?;
    let mut s = SurrogateModel {
        params,
        weights: lin.weights,
        intercept: lin.intercept,
        fidelity: 0.0,
    };
    let approx = s.predict(x);
    s.fidelity = metrics::r_squared(target.as_slice(), approx.as_slice())?;
    Ok(s)
}

pub fn surrogate_rank(s: &SurrogateModel) -> FeatureRanking {
    FeatureRanking::from_scores(s.weights.iter().map(|w| w.abs()).collect(), "GS")
}
