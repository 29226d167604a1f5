//! Predictive models and hyperparameter search.

mod arch;
mod forest;
mod kernel;
mod linear;
mod mlp;
mod persist;
mod svr;
mod tune;

pub use arch::{gen_architecture, ArchPattern, ArchSpec, MAX_WIDTH, RANDOM_MIN_WIDTH};
pub use forest::{rf_fit, MaxFeatures, Node, RfHyperparams, RfModel, Split, Tree};
pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use linear::{ols_fit, ridge_fit, ridge_fit_with, LinearModel, OlsModel, RidgeModel};
pub use mlp::{mlp_fit, Activation, Gradients, MlpArch, MlpHyperparams, MlpModel, Optimizer, WeightInit};
pub use persist::{load_model, save_model, ModelFile, SavedModel, MODEL_FORMAT_VERSION};
pub use svr::{model_complexity, svr_fit, svr_fit_traced, SolverStatus, SvrHyperparams, SvrModel};
pub use tune::{
    grid, mlp_from_params, mlp_space, rf_space, ridge_space, svr_space, tune, Dimension, DimensionKind, ParamSet,
    ParamValue, SearchSpace, Strategy, TrialRecord, TunerResult, TunerSpec,
};

use std::sync::Arc;

use crate::{Error, Matrix, Result, Vector};

/// A fitted model mapping one spectrum to a scalar prediction.
///
/// Implementations are immutable after fitting, so prediction is reentrant.
pub trait Regressor: Send + Sync {
    fn n_features(&self) -> usize;

    /// Prediction for one row. `x.len()` must equal [`n_features`](Self::n_features).
    fn predict_row(&self, x: &[f64]) -> f64;

    /// Predictions for every row of `x`.
    ///
    /// # Panics
    /// When the column count differs from [`n_features`](Self::n_features);
    /// use [`try_predict`](Self::try_predict) for a checked call.
    fn predict(&self, x: &Matrix) -> Vector {
        assert_eq!(x.ncols(), self.n_features(), "input width does not match the model");
        let mut buf = vec![0.0; x.ncols()];
        Vector::from_iterator(
            x.nrows(),
            (0..x.nrows()).map(|i| {
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = x[(i, j)];
                }
                self.predict_row(&buf)
            }),
        )
    }

    fn try_predict(&self, x: &Matrix) -> Result<Vector> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x.ncols(),
            });
        }
        Ok(self.predict(x))
    }

    /// Evaluates `f(start)` and then `f` after each successive single-feature
    /// assignment in `steps`; the result has `steps.len() + 1` entries.
    ///
    /// Models override this when they can update a prediction faster than a
    /// full re-evaluation.
    fn predict_path(&self, start: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
        let mut x = start.to_vec();
        let mut out = Vec::with_capacity(steps.len() + 1);
        out.push(self.predict_row(&x));
        for &(j, v) in steps {
            x[j] = v;
            out.push(self.predict_row(&x));
        }
        out
    }
}

impl<T: Regressor + ?Sized> Regressor for &T {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        (**self).predict_row(x)
    }
    fn predict(&self, x: &Matrix) -> Vector {
        (**self).predict(x)
    }
    fn predict_path(&self, start: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
        (**self).predict_path(start, steps)
    }
}

impl<T: Regressor + ?Sized> Regressor for Box<T> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        (**self).predict_row(x)
    }
    fn predict(&self, x: &Matrix) -> Vector {
        (**self).predict(x)
    }
    fn predict_path(&self, start: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
        (**self).predict_path(start, steps)
    }
}

impl<T: Regressor + ?Sized> Regressor for Arc<T> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        (**self).predict_row(x)
    }
    fn predict(&self, x: &Matrix) -> Vector {
        (**self).predict(x)
    }
    fn predict_path(&self, start: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
        (**self).predict_path(start, steps)
    }
}

/// Wraps a closure as a [`Regressor`].
pub struct FnModel<F> {
    n_features: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnModel<F> {
    pub fn new(n_features: usize, f: F) -> Self {
        Self { n_features, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Regressor for FnModel<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Model restricted to a subset of the columns of a wider input.
pub struct SubsetModel<M> {
    inner: M,
    indices: Vec<usize>,
    n_features: usize,
}

impl<M: Regressor> SubsetModel<M> {
    pub fn new(inner: M, indices: Vec<usize>, n_features: usize) -> Result<Self> {
        if indices.len() != inner.n_features() {
            return Err(Error::DimensionMismatch {
                expected: inner.n_features(),
                found: indices.len(),
            });
        }
        if let Some(&j) = indices.iter().find(|&&j| j >= n_features) {
            return Err(Error::invalid(format!("subset index {j} out of range")));
        }
        Ok(Self {
            inner,
            indices,
            n_features,
        })
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<M: Regressor> Regressor for SubsetModel<M> {
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        let sub: Vec<f64> = self.indices.iter().map(|&j| x[j]).collect();
        self.inner.predict_row(&sub)
    }
}

/// Checks the shared preconditions of every trainer.
pub(crate) fn check_training_data(x: &Matrix, y: &Vector, min_rows: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if x.nrows() < min_rows {
        return Err(Error::invalid(format!(
            "need at least {min_rows} training rows, got {}",
            x.nrows()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::invalid("training data has no features"));
    }
    if !crate::linalg::is_finite_matrix(x) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_path_matches_pointwise() {
        let f = FnModel::new(3, |x: &[f64]| x[0] * x[1] + x[2]);
        let path = f.predict_path(&[1.0, 2.0, 3.0], &[(0, 4.0), (2, -1.0)]);
        assert_eq!(path, vec![5.0, 11.0, 7.0]);
    }

    #[test]
    fn subset_model_reads_selected_columns() {
        let inner = FnModel::new(2, |x: &[f64]| x[0] - x[1]);
        let m = SubsetModel::new(inner, vec![3, 1], 4).unwrap();
        assert_eq!(m.predict_row(&[0.0, 1.0, 0.0, 5.0]), 4.0);
        let bad = SubsetModel::new(FnModel::new(2, |_: &[f64]| 0.0), vec![9, 1], 4);
        assert!(bad.is_err());
    }

    #[test]
    fn try_predict_checks_width() {
        let f = FnModel::new(2, |x: &[f64]| x[0]);
        assert!(f.try_predict(&Matrix::zeros(3, 5)).is_err());
        assert_eq!(
            f.try_predict(&Matrix::from_element(2, 2, 1.5)).unwrap().as_slice(),
            &[1.5, 1.5]
        );
    }
}
