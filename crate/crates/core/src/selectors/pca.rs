use serde::{Deserialize, Serialize};

use crate::linalg::sorted_symmetric_eigen;
use crate::spectra::StandardizationParams;
use crate::{Error, Matrix, Result};

/// Principal axes of standardized intensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// One unit-norm loading per row (`P × M`).
    pub loadings: Matrix,
    /// Eigenvalues of the sample covariance, descending.
    pub variances: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
    pub params: StandardizationParams,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.variances.len()];
        }
        self.variances.iter().map(|v| v / self.total_variance).collect()
    }

    pub fn cumulative_explained(&self) -> Vec<f64> {
        self.explained_variance_ratio()
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    /// Variance left outside the retained components.
    pub fn residual_variance(&self) -> f64 {
        (self.total_variance - self.variances.iter().sum::<f64>()).max(0.0)
    }

    /// Component scores `Z Vᵀ` for raw intensities.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.params.apply(x)? * self.loadings.transpose())
    }
}

/// Leading `p` principal components; `p` must not exceed `min(N − 1, M)`.
///
/// Uses the `N × N` Gram matrix when features outnumber samples.
pub fn pca_fit(x: &Matrix, p: usize) -> Result<PcaModel> {
    let (n, m) = x.shape();
    if n < 2 {
        return Err(Error::invalid("PCA needs at least two samples"));
    }
    let max_p = (n - 1).min(m);
    if p == 0 || p > max_p {
        return Err(Error::config(format!(
            "component count must lie in [1, {max_p}], got {p}"
        )));
    }
    if !crate::linalg::is_finite_matrix(x) {
        return Err(Error::invalid("intensities contain non-finite values"));
    }
    let params = StandardizationParams::fit(x)?;
    let z = params.apply(x)?;
    let scale = 1.0 / (n - 1) as f64;
    let total_variance = z.iter().map(|v| v * v).sum::<f64>() * scale;

    let mut loadings = Matrix::zeros(p, m);
    let mut variances = Vec::with_capacity(p);
    if m <= n {
        let (vals, vecs) = sorted_symmetric_eigen(z.tr_mul(&z) * scale);
        for k in 0..p {
            loadings.row_mut(k).copy_from(&vecs.column(k).transpose());
            variances.push(vals[k].max(0.0));
        }
    } else {
        let (vals, vecs) = sorted_symmetric_eigen(&z * z.transpose() * scale);
        for k in 0..p {
            let v = z.tr_mul(&vecs.column(k));
            let norm = v.norm();
            if norm > 0.0 {
                loadings.row_mut(k).copy_from(&(v / norm).transpose());
            }
            variances.push(vals[k].max(0.0));
        }
    }
    // Fix the sign so the largest-magnitude entry is positive.
    for mut row in loadings.row_iter_mut() {
        let pivot = row
            .iter()
            .copied()
            .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if pivot < 0.0 {
            row.neg_mut();
        }
    }
    Ok(PcaModel {
        loadings,
        variances,
        total_variance,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random(n: usize, m: usize, seed: u64) -> Matrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
    }

    fn covariance(m: &PcaModel, x: &Matrix) -> Matrix {
        let z = m.params.apply(x).unwrap();
        z.tr_mul(&z) / (x.nrows() - 1) as f64
    }

    #[test]
    fn two_by_two_example() {
        let x = Matrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let m = pca_fit(&x, 1).unwrap();
        assert!((m.loadings[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(m.loadings[(0, 1)].abs() < 1e-12);
        assert!((m.variances[0] - 2.0).abs() < 1e-12);
        assert!(m.residual_variance() < 1e-12);
        assert!(pca_fit(&x, 2).is_err());
    }

    #[test]
    fn gram_and_covariance_paths_agree() {
        // Wide input takes the Gram path; check it against the covariance directly.
        let x = random(8, 20, 4);
        let m = pca_fit(&x, 5).unwrap();
        let c = covariance(&m, &x);
        let (vals, _) = sorted_symmetric_eigen(c.clone());
        for k in 0..5 {
            assert!((m.variances[k] - vals[k]).abs() < 1e-9 * vals[0]);
            let v = m.loadings.row(k).transpose();
            assert!((&c * &v - &v * m.variances[k]).norm() < 1e-9 * vals[0]);
        }
    }

    #[test]
    fn constant_column_gets_zero_loading() {
        let mut x = random(12, 4, 9);
        x.column_mut(2).fill(3.0);
        let m = pca_fit(&x, 3).unwrap();
        for k in 0..3 {
            assert!(m.loadings[(k, 2)].abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn loadings_orthonormal_and_eigen(seed in any::<u64>(), n in 3usize..15, mm in 2usize..15) {
            let x = random(n, mm, seed);
            let p = (n - 1).min(mm);
            let m = pca_fit(&x, p).unwrap();
            let g = &m.loadings * m.loadings.transpose();
            let c = covariance(&m, &x);
            for a in 0..p {
                // Null-space directions of the Gram path are not recoverable; skip them.
                if m.variances[a] < 1e-9 { continue; }
                for b in 0..p {
                    if m.variances[b] < 1e-9 { continue; }
                    let want = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((g[(a, b)] - want).abs() < 1e-8);
                }
                let v = m.loadings.row(a).transpose();
                prop_assert!((&c * &v - &v * m.variances[a]).norm() < 1e-8 * (1.0 + m.variances[0]));
            }
            for w in m.variances.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }

        #[test]
        fn invariant_to_feature_scaling(seed in any::<u64>(), s in 0.01f64..100.0) {
            let x = random(10, 6, seed);
            let mut xs = x.clone();
            xs.column_mut(1).scale_mut(s);
            let a = pca_fit(&x, 3).unwrap();
            let b = pca_fit(&xs, 3).unwrap();
            for k in 0..3 {
                prop_assert!((a.variances[k] - b.variances[k]).abs() < 1e-8);
            }
        }
    }
}
