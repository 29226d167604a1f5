//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::{Error, Matrix, Result, Vector};

/// Relative cutoff below which singular values count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn row(x: &Matrix, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

pub fn rows(x: &Matrix) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| row(x, i)).collect()
}

pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Matrix {
    Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

pub fn select_columns(x: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(x.nrows(), idx.len(), |i, j| x[(i, idx[j])])
}

pub fn select_rows(x: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)])
}

pub fn select_entries(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub fn column_means(x: &Matrix) -> Vector {
    let n = x.nrows().max(1) as f64;
    Vector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Subtracts column means; returns the centered matrix and the means.
pub fn center_columns(x: &Matrix) -> (Matrix, Vector) {
    let means = column_means(x);
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    (c, means)
}

/// Coefficients minimizing `‖y − Xw‖² + α‖w‖²` (no intercept).
///
/// Solved through the thin SVD, so it is rank tolerant: with `α = 0` the
/// result is the minimum-norm least-squares solution.
pub fn ridge_coefficients(x: &Matrix, y: &Vector, alpha: f64) -> Result<Vector> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!("ridge penalty must be >= 0, got {alpha}")));
    }
    let m = x.ncols();
    if x.nrows() == 0 || m == 0 {
        return Ok(Vector::zeros(m));
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().ok_or(Error::Singular)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::Singular)?;
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = s_max * RANK_TOLERANCE * (x.nrows().max(m) as f64);
    let uty = u.transpose() * y;
    let mut scaled = Vector::zeros(s.len());
    for k in 0..s.len() {
        let sk = s[k];
        if alpha == 0.0 {
            if sk > cutoff {
                scaled[k] = uty[k] / sk;
            }
        } else {
            scaled[k] = uty[k] * sk / (sk * sk + alpha);
        }
    }
    Ok(v_t.transpose() * scaled)
}

/// Weighted ridge with an unpenalized intercept:
/// `min Σ πᵢ (yᵢ − b − zᵢᵀw)² + λ‖w‖²`.
///
/// Uses the primal normal equations when features ≤ samples and the dual
/// (kernel) form otherwise. Requires `λ > 0`.
pub fn weighted_ridge(z: &Matrix, y: &Vector, weights: &Vector, lambda: f64) -> Result<(f64, Vector)> {
    let (n, m) = z.shape();
    if y.len() != n || weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len().min(weights.len()),
        });
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("weighted ridge requires a positive penalty"));
    }
    let wsum: f64 = weights.sum();
    if !(wsum > 0.0) {
        return Err(Error::invalid("weighted ridge requires positive total weight"));
    }
    let zbar = Vector::from_iterator(
        m,
        (0..m).map(|j| (0..n).map(|i| weights[i] * z[(i, j)]).sum::<f64>() / wsum),
    );
    let ybar = weights.dot(y) / wsum;
    // Rows scaled by sqrt(weight) after weighted centering.
    let mut zt = Matrix::zeros(n, m);
    let mut yt = Vector::zeros(n);
    for i in 0..n {
        let s = weights[i].max(0.0).sqrt();
        yt[i] = s * (y[i] - ybar);
        for j in 0..m {
            zt[(i, j)] = s * (z[(i, j)] - zbar[j]);
        }
    }
    let coef = if m <= n {
        let mut a = zt.tr_mul(&zt);
        for j in 0..m {
            a[(j, j)] += lambda;
        }
        let rhs = zt.tr_mul(&yt);
        solve_spd(a, &rhs)?
    } else {
        let mut k = &zt * zt.transpose();
        for i in 0..n {
            k[(i, i)] += lambda;
        }
        let dual = solve_spd(k, &yt)?;
        zt.tr_mul(&dual)
    };
    let intercept = ybar - zbar.dot(&coef);
    Ok((intercept, coef))
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn solve_spd(a: Matrix, b: &Vector) -> Result<Vector> {
    Cholesky::new(a).map(|c| c.solve(b)).ok_or(Error::Singular)
}

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue.
pub fn sorted_symmetric_eigen(a: Matrix) -> (Vec<f64>, Matrix) {
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

pub fn is_finite_matrix(x: &Matrix) -> bool {
    x.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_solution_for_wide_system() {
        // x1 + x2 = 2 has minimum-norm solution (1, 1).
        let x = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let y = Vector::from_vec(vec![2.0]);
        let w = ridge_coefficients(&x, &y, 0.0).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_ridge_primal_and_dual_agree() {
        let z = Matrix::from_fn(4, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * j as f64);
        let y = Vector::from_vec(vec![1.0, -0.5, 2.0, 0.3]);
        let w = Vector::from_vec(vec![1.0, 0.5, 0.25, 2.0]);
        let (b1, c1) = weighted_ridge(&z, &y, &w, 0.1).unwrap();
        // Same problem with duplicated zero-weight columns forces the dual path.
        let wide = Matrix::from_fn(4, 6, |i, j| if j < 3 { z[(i, j)] } else { 0.0 });
        let (b2, c2) = weighted_ridge(&wide, &y, &w, 0.1).unwrap();
        assert!((b1 - b2).abs() < 1e-10);
        for j in 0..3 {
            assert!((c1[j] - c2[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn eigen_sorted_descending() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let (vals, vecs) = sorted_symmetric_eigen(a);
        assert_eq!(vals, vec![3.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }
}
