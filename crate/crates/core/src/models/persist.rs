use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LinearModel, MlpModel, Regressor, RfModel, SvrModel};
use crate::{Error, Result};

/// Version of the serialized model layout.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SavedModel {
    Linear(LinearModel),
    Svr(SvrModel),
    Mlp(MlpModel),
    RandomForest(RfModel),
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::Linear(_) => "linear",
            SavedModel::Svr(_) => "svr",
            SavedModel::Mlp(_) => "mlp",
            SavedModel::RandomForest(_) => "random_forest",
        }
    }

    fn inner(&self) -> &dyn Regressor {
        match self {
            SavedModel::Linear(m) => m,
            SavedModel::Svr(m) => m,
            SavedModel::Mlp(m) => m,
            SavedModel::RandomForest(m) => m,
        }
    }
}

impl Regressor for SavedModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.inner().predict_row(x)
    }
    fn predict(&self, x: &crate::Matrix) -> crate::Vector {
        self.inner().predict(x)
    }
    fn predict_path(&self, start: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
        self.inner().predict_path(start, steps)
    }
}

/// A fitted model together with the axis it expects.
///
/// When `feature_indices` is set the model reads only those columns of an
/// input on the full `wavenumbers` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub crate_version: String,
    pub model: SavedModel,
    pub feature_indices: Option<Vec<usize>>,
    pub wavenumbers: Vec<f64>,
}

impl ModelFile {
    pub fn new(model: SavedModel, wavenumbers: Vec<f64>, feature_indices: Option<Vec<usize>>) -> Result<Self> {
        let file = Self {
            format_version: MODEL_FORMAT_VERSION,
            crate_version: crate::VERSION.to_string(),
            model,
            feature_indices,
            wavenumbers,
        };
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::config(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        let width = match &self.feature_indices {
            Some(idx) => {
                if let Some(&j) = idx.iter().find(|&&j| j >= self.wavenumbers.len()) {
                    return Err(Error::invalid(format!("model feature index {j} exceeds the axis")));
                }
                idx.len()
            }
            None => self.wavenumbers.len(),
        };
        if width != self.model.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.model.n_features(),
                found: width,
            });
        }
        validate_shapes(&self.model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(s)?;
        file.validate()?;
        Ok(file)
    }
}

/// Rejects internally inconsistent deserialized models.
fn validate_shapes(m: &SavedModel) -> Result<()> {
    let bad = |msg: &str| Err(Error::invalid(format!("corrupt model: {msg}")));
    match m {
        SavedModel::Linear(_) => Ok(()),
        SavedModel::Svr(s) => {
            if s.dual_coefs.len() != s.support_vectors.len() || s.support_indices.len() != s.dual_coefs.len() {
                return bad("support-vector arrays differ in length");
            }
            if s.support_vectors.iter().any(|v| v.len() != s.n_features) {
                return bad("support vector width");
            }
            if s.scaler.as_ref().is_some_and(|p| p.n_features() != s.n_features) {
                return bad("scaler width");
            }
            Ok(())
        }
        SavedModel::Mlp(n) => {
            let sizes = &n.layer_sizes;
            if sizes.len() < 2 || n.weights.len() != sizes.len() - 1 || n.biases.len() != sizes.len() - 1 {
                return bad("layer count");
            }
            for l in 0..n.weights.len() {
                if n.weights[l].shape() != (sizes[l + 1], sizes[l]) || n.biases[l].len() != sizes[l + 1] {
                    return bad("layer shape");
                }
            }
            if sizes[sizes.len() - 1] != 1 {
                return bad("output width");
            }
            Ok(())
        }
        SavedModel::RandomForest(f) => {
            if f.trees.is_empty() {
                return bad("empty forest");
            }
            for t in &f.trees {
                if t.nodes.is_empty() {
                    return bad("empty tree");
                }
                for (k, node) in t.nodes.iter().enumerate() {
                    if let Some(s) = node.split {
                        // Children follow their parent in preorder, which also rules out cycles.
                        if s.feature >= f.n_features
                            || s.left <= k
                            || s.right <= k
                            || s.left >= t.nodes.len()
                            || s.right >= t.nodes.len()
                        {
                            return bad("tree links");
                        }
                    }
                }
            }
            Ok(())
        }
    }
}

impl Regressor for ModelFile {
    fn n_features(&self) -> usize {
        self.wavenumbers.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        match &self.feature_indices {
            Some(idx) => {
                let sub: Vec<f64> = idx.iter().map(|&j| x[j]).collect();
                self.model.predict_row(&sub)
            }
            None => self.model.predict_row(x),
        }
    }
}

pub fn save_model(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, file.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::*;
    use crate::{Matrix, Vector};

    fn xy() -> (Matrix, Vector) {
        let x = Matrix::from_fn(12, 3, |i, j| ((i * 5 + j * 7) % 11) as f64 / 3.0);
        let y = Vector::from_fn(12, |i, _| x[(i, 0)] * 2.0 - x[(i, 2)]);
        (x, y)
    }

    fn round_trip(model: SavedModel, x: &Matrix) {
        let before = model.predict(x);
        let file = ModelFile::new(model, vec![1.0, 2.0, 3.0], None).unwrap();
        let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.predict(x), before);
    }

    #[test]
    fn every_model_round_trips_bit_exactly() {
        let (x, y) = xy();
        round_trip(SavedModel::Linear(ridge_fit(&x, &y, 0.1).unwrap()), &x);
        let h = SvrHyperparams {
            standardize: true,
            ..SvrHyperparams::bo_default()
        };
        round_trip(SavedModel::Svr(svr_fit(&x, &y, &h).unwrap()), &x);
        let arch = MlpArch::new(3, &[4], Activation::Relu, Activation::Linear);
        let hp = MlpHyperparams {
            epochs: 3,
            ..Default::default()
        };
        round_trip(SavedModel::Mlp(mlp_fit(&x, &y, &arch, &hp).unwrap()), &x);
        round_trip(
            SavedModel::RandomForest(
                rf_fit(
                    &x,
                    &y,
                    &RfHyperparams {
                        n_trees: 3,
                        ..Default::default()
                    },
                )
                .unwrap(),
            ),
            &x,
        );
    }

    #[test]
    fn subset_file_reads_selected_columns() {
        let (x, y) = xy();
        let sub = crate::linalg::select_columns(&x, &[2, 0]);
        let m = ols_fit(&sub, &y).unwrap();
        let file = ModelFile::new(SavedModel::Linear(m.clone()), vec![1.0, 2.0, 3.0], Some(vec![2, 0])).unwrap();
        assert_eq!(file.predict(&x), m.predict(&sub));
        assert!(ModelFile::new(SavedModel::Linear(m), vec![1.0, 2.0, 3.0], None).is_err());
    }

    #[test]
    fn version_and_corruption_checks() {
        let (x, y) = xy();
        let mut file = ModelFile::new(SavedModel::Linear(ols_fit(&x, &y).unwrap()), vec![1.0, 2.0, 3.0], None).unwrap();
        file.format_version = 99;
        assert!(ModelFile::from_json(&serde_json::to_string(&file).unwrap()).is_err());
        assert!(ModelFile::from_json("{}").is_err());
    }
}
