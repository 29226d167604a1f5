use serde::{Deserialize, Serialize};

use super::{check_training_data, Regressor};
use crate::linalg;
use crate::{Error, Matrix, Result, Vector};

/// `ŷ = wᵀx + b`, produced by [`ols_fit`] or [`ridge_fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Penalty used in fitting (0 for OLS).
    pub alpha: f64,
}

pub type OlsModel = LinearModel;
pub type RidgeModel = LinearModel;

impl LinearModel {
    pub fn n_parameters(&self) -> usize {
        self.weights.len() + 1
    }
}

impl Regressor for LinearModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + linalg::dot(&self.weights, x)
    }

    fn predict_path(&self, start: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
        let mut x = start.to_vec();
        let mut v = self.predict_row(&x);
        let mut out = Vec::with_capacity(steps.len() + 1);
        out.push(v);
        for &(j, new) in steps {
            v += self.weights[j] * (new - x[j]);
            x[j] = new;
            out.push(v);
        }
        out
    }
}

/// Least squares; the minimum-norm solution when the system is rank deficient.
pub fn ols_fit(x: &Matrix, y: &Vector) -> Result<OlsModel> {
    ridge_fit_with(x, y, 0.0, true)
}

/// Minimizes `RSS + α‖w‖²` with an unpenalized intercept.
pub fn ridge_fit(x: &Matrix, y: &Vector, alpha: f64) -> Result<RidgeModel> {
    ridge_fit_with(x, y, alpha, true)
}

pub fn ridge_fit_with(x: &Matrix, y: &Vector, alpha: f64, fit_intercept: bool) -> Result<RidgeModel> {
    check_training_data(x, y, 1)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!(
            "ridge penalty must be finite and >= 0, got {alpha}"
        )));
    }
    if !fit_intercept {
        let w = linalg::ridge_coefficients(x, y, alpha)?;
        return Ok(LinearModel {
            weights: w.iter().copied().collect(),
            intercept: 0.0,
            alpha,
        });
    }
    let (xc, means) = linalg::center_columns(x);
    let ybar = y.mean();
    let yc = y.add_scalar(-ybar);
    let w = linalg::ridge_coefficients(&xc, &yc, alpha)?;
    let intercept = ybar - means.dot(&w);
    Ok(LinearModel {
        weights: w.iter().copied().collect(),
        intercept,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random(n: usize, m: usize, seed: u64) -> (Matrix, Vector) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let y = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        (x, y)
    }

    #[test]
    fn square_system_interpolates() {
        let (x, y) = random(4, 3, 1);
        let m = ols_fit(&x, &y).unwrap();
        let r = m.predict(&x) - &y;
        assert!(r.amax() < 1e-10, "{}", r.amax());
    }

    #[test]
    fn huge_penalty_predicts_the_mean() {
        let (x, y) = random(12, 4, 2);
        let m = ridge_fit(&x, &y, 1e9).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-3));
        let p = m.predict(&x);
        assert!((p - Vector::from_element(12, y.mean())).amax() < 1e-3);
    }

    /// Closed form `(XᵀX + αI)⁻¹Xᵀy` on centered data, computed by hand.
    #[test]
    fn matches_closed_form_oracle() {
        let x = Matrix::from_row_slice(5, 2, &[1.0, 2.0, 2.0, 1.0, 3.0, 5.0, 4.0, 3.0, 5.0, 6.0]);
        let y = Vector::from_vec(vec![3.0, 2.0, 7.0, 6.0, 9.0]);
        let (xm, ym) = ((1.0 + 2.0 + 3.0 + 4.0 + 5.0) / 5.0, (2.0 + 1.0 + 5.0 + 3.0 + 6.0) / 5.0);
        let ybar = 27.0 / 5.0;
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (1.0, 0.0, 1.0, 0.0, 0.0);
        for i in 0..5 {
            let (u, v, t) = (x[(i, 0)] - xm, x[(i, 1)] - ym, y[i] - ybar);
            a11 += u * u;
            a12 += u * v;
            a22 += v * v;
            b1 += u * t;
            b2 += v * t;
        }
        let det = a11 * a22 - a12 * a12;
        let w = [(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det];
        let m = ridge_fit(&x, &y, 1.0).unwrap();
        assert!((m.weights[0] - w[0]).abs() < 1e-12 && (m.weights[1] - w[1]).abs() < 1e-12);
        assert!((m.intercept - (ybar - w[0] * xm - w[1] * ym)).abs() < 1e-12);
    }

    #[test]
    fn wide_system_gets_minimum_norm_fit() {
        let (x, y) = random(5, 20, 3);
        let m = ols_fit(&x, &y).unwrap();
        assert!((m.predict(&x) - &y).amax() < 1e-9);
        // Minimum-norm: weights lie in the row space of the centered data.
        let (xc, _) = linalg::center_columns(&x);
        let w = Vector::from_vec(m.weights.clone());
        let proj = xc.transpose() * linalg::ridge_coefficients(&xc.transpose(), &w, 0.0).unwrap();
        assert!((proj - &w).amax() < 1e-9);
    }

    #[test]
    fn incremental_path_matches_pointwise() {
        let (x, y) = random(10, 4, 5);
        let m = ridge_fit(&x, &y, 0.1).unwrap();
        let steps = [(1, 0.5), (3, -2.0), (1, 1.0)];
        let fast = m.predict_path(&[0.1, 0.2, 0.3, 0.4], &steps);
        let mut row = vec![0.1, 0.2, 0.3, 0.4];
        let mut slow = vec![m.predict_row(&row)];
        for (j, v) in steps {
            row[j] = v;
            slow.push(m.predict_row(&row));
        }
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn shrinkage_is_monotone(seed in any::<u64>(), a1 in 0.0f64..10.0, extra in 1e-3f64..10.0) {
            let (x, y) = random(8, 5, seed);
            let w1 = Vector::from_vec(ridge_fit(&x, &y, a1).unwrap().weights).norm();
            let w2 = Vector::from_vec(ridge_fit(&x, &y, a1 + extra).unwrap().weights).norm();
            prop_assert!(w2 <= w1 + 1e-10);
        }
    }
}
