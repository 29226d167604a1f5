use serde::{Deserialize, Serialize};

use super::SpectraDataset;
use crate::{Error, Matrix, Result};

/// Lower clamp for per-feature standard deviations.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-feature mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct StandardizationParams {
    means: Vec<f64>,
    stds: Vec<f64>,
    constant: Vec<bool>,
}

#[derive(Deserialize)]
struct RawParams {
    means: Vec<f64>,
    stds: Vec<f64>,
    constant: Vec<bool>,
}

impl TryFrom<RawParams> for StandardizationParams {
    type Error = String;

    fn try_from(r: RawParams) -> std::result::Result<Self, String> {
        if r.stds.len() != r.means.len() || r.constant.len() != r.means.len() {
            return Err("standardization vectors differ in length".into());
        }
        if r.stds.iter().any(|&s| !(s >= STD_FLOOR && s.is_finite())) || r.means.iter().any(|m| !m.is_finite()) {
            return Err("standardization parameters must be finite with positive spread".into());
        }
        Ok(Self {
            means: r.means,
            stds: r.stds,
            constant: r.constant,
        })
    }
}

impl StandardizationParams {
    pub fn fit(x: &Matrix) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::invalid("cannot standardize an empty matrix"));
        }
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        let mut constant = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            means.push(mean);
            constant.push(sd <= STD_FLOOR);
            stds.push(sd.max(STD_FLOOR));
        }
        Ok(Self { means, stds, constant })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    /// True when the training column had (numerically) zero spread.
    pub fn is_constant(&self, j: usize) -> bool {
        self.constant[j]
    }

    pub fn apply_value(&self, j: usize, v: f64) -> f64 {
        if self.constant[j] {
            0.0
        } else {
            (v - self.means[j]) / self.stds[j]
        }
    }

    pub fn invert_value(&self, j: usize, z: f64) -> f64 {
        z * self.stds[j] + self.means[j]
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x.ncols())?;
        Ok(Matrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            self.apply_value(j, x[(i, j)])
        }))
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        Ok(row.iter().enumerate().map(|(j, &v)| self.apply_value(j, v)).collect())
    }

    /// `z·std + mean`; exact inverse of [`apply`](Self::apply) on non-constant features.
    pub fn invert(&self, z: &Matrix) -> Result<Matrix> {
        self.check(z.ncols())?;
        Ok(Matrix::from_fn(z.nrows(), z.ncols(), |i, j| {
            self.invert_value(j, z[(i, j)])
        }))
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            means: idx.iter().map(|&j| self.means[j]).collect(),
            stds: idx.iter().map(|&j| self.stds[j]).collect(),
            constant: idx.iter().map(|&j| self.constant[j]).collect(),
        }
    }

    fn check(&self, m: usize) -> Result<()> {
        if m != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                found: m,
            });
        }
        Ok(())
    }
}

pub fn standardize_fit(train: &SpectraDataset) -> Result<StandardizationParams> {
    StandardizationParams::fit(train.intensities())
}

pub fn standardize_apply(p: &StandardizationParams, x: &Matrix) -> Result<Matrix> {
    p.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_point_column() {
        let x = Matrix::from_column_slice(2, 1, &[1.0, 3.0]);
        let p = StandardizationParams::fit(&x).unwrap();
        assert_eq!(p.means(), &[2.0]);
        assert_eq!(p.stds(), &[1.0]);
        assert_eq!(p.apply(&x).unwrap().as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let x = Matrix::from_column_slice(3, 1, &[5.0, 5.0, 5.0]);
        let p = StandardizationParams::fit(&x).unwrap();
        assert!(p.is_constant(0));
        assert_eq!(p.apply(&x).unwrap().as_slice(), &[0.0, 0.0, 0.0]);
        let other = Matrix::from_column_slice(2, 1, &[7.0, -1.0]);
        assert_eq!(p.apply(&other).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn empty_fit_errors() {
        assert!(StandardizationParams::fit(&Matrix::zeros(0, 3)).is_err());
    }

    proptest! {
        #[test]
        fn fitted_columns_have_zero_mean_unit_variance(
            data in proptest::collection::vec(-1e3f64..1e3, 24)
        ) {
            let x = Matrix::from_row_slice(8, 3, &data);
            let p = StandardizationParams::fit(&x).unwrap();
            let z = p.apply(&x).unwrap();
            for j in 0..3 {
                let col: Vec<f64> = z.column(j).iter().copied().collect();
                let mean = col.iter().sum::<f64>() / 8.0;
                prop_assert!(mean.abs() < 1e-10);
                if !p.is_constant(j) {
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
                    prop_assert!((var - 1.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn apply_then_invert_round_trips(
            data in proptest::collection::vec(-1e3f64..1e3, 24)
        ) {
            let x = Matrix::from_row_slice(6, 4, &data);
            let p = StandardizationParams::fit(&x).unwrap();
            let back = p.invert(&p.apply(&x).unwrap()).unwrap();
            for j in 0..4 {
                if p.is_constant(j) { continue; }
                let scale = x.column(j).amax().max(1.0);
                for i in 0..6 {
                    let tol = 1e-12 * scale;
                    prop_assert!((back[(i, j)] - x[(i, j)]).abs() <= tol);
                }
            }
        }
    }
}
