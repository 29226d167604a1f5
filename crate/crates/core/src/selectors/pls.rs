use serde::{Deserialize, Serialize};

use crate::spectra::StandardizationParams;
use crate::{Error, Matrix, Result, Vector};

/// PLS1 regression on standardized intensities and response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsModel {
    /// Unit-norm weight vectors, one per row (`P × M`).
    pub weights: Matrix,
    /// X loadings, one per row (`P × M`).
    pub x_loadings: Matrix,
    pub y_loadings: Vec<f64>,
    /// Training scores (`N × P`).
    pub scores: Matrix,
    /// Share of response variance explained by each component.
    pub explained: Vec<f64>,
    /// True when fewer components than requested could be extracted.
    pub stopped_early: bool,
    pub x_params: StandardizationParams,
    pub y_mean: f64,
    pub y_std: f64,
}

impl PlsModel {
    pub fn n_components(&self) -> usize {
        self.weights.nrows()
    }

    pub fn cumulative_explained(&self) -> Vec<f64> {
        self.explained
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    /// Standardized-space coefficients using the first `p` components: `W (PᵀW)⁻¹ q`.
    pub fn coefficients(&self, p: usize) -> Result<Vector> {
        if p == 0 || p > self.n_components() {
            return Err(Error::config(format!(
                "component count must lie in [1, {}], got {p}",
                self.n_components()
            )));
        }
        let w = self.weights.rows(0, p).transpose();
        let pl = self.x_loadings.rows(0, p);
        let ptw = pl * &w;
        let q = Vector::from_column_slice(&self.y_loadings[..p]);
        let inner = ptw.lu().solve(&q).ok_or(Error::Singular)?;
        Ok(w * inner)
    }

    /// Response predictions using the first `p` components.
    pub fn predict(&self, x: &Matrix, p: usize) -> Result<Vector> {
        let b = self.coefficients(p)?;
        let z = self.x_params.apply(x)?;
        Ok((z * b).map(|v| self.y_mean + self.y_std * v))
    }
}

/// NIPALS PLS1 with up to `p` components.
pub fn pls_fit(x: &Matrix, y: &Vector, p: usize) -> Result<PlsModel> {
    let (n, m) = x.shape();
    if n < 2 {
        return Err(Error::invalid("PLS needs at least two samples"));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if p == 0 || p > m.min(n - 1) {
        return Err(Error::config(format!(
            "component count must lie in [1, {}], got {p}",
            m.min(n - 1)
        )));
    }
    if !crate::linalg::is_finite_matrix(x) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite training data"));
    }
    let x_params = StandardizationParams::fit(x)?;
    let mut xr = x_params.apply(x)?;
    let y_mean = y.mean();
    let y_std = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if y_std <= crate::spectra::STD_FLOOR {
        return Err(Error::invalid("response is constant; PLS has no covariance to extract"));
    }
    let mut yr = y.map(|v| (v - y_mean) / y_std);
    let tss = yr.norm_squared();

    let mut ws = Vec::new();
    let mut ps = Vec::new();
    let mut qs = Vec::new();
    let mut ts = Vec::new();
    let mut explained = Vec::new();
    let mut first_norm = None;
    for _ in 0..p {
        let mut w = xr.tr_mul(&yr);
        let norm = w.norm();
        let base = *first_norm.get_or_insert(norm);
        // Residual covariance has vanished relative to the start.
        if norm <= 1e-10 * base || norm == 0.0 {
            break;
        }
        w /= norm;
        let t = &xr * &w;
        let tt = t.norm_squared();
        if tt <= 0.0 {
            break;
        }
        let pl = xr.tr_mul(&t) / tt;
        let q = yr.dot(&t) / tt;
        xr -= &t * pl.transpose();
        yr -= &t * q;
        explained.push(q * q * tt / tss);
        ws.push(w);
        ps.push(pl);
        qs.push(q);
        ts.push(t);
    }
    let k = ws.len();
    if k == 0 {
        return Err(Error::invalid("no PLS component could be extracted"));
    }
    let stopped_early = k < p;
    if stopped_early {
        log::warn!("PLS stopped after {k} of {p} components: residual covariance is zero");
    }
    Ok(PlsModel {
        weights: Matrix::from_fn(k, m, |a, j| ws[a][j]),
        x_loadings: Matrix::from_fn(k, m, |a, j| ps[a][j]),
        y_loadings: qs,
        scores: Matrix::from_fn(n, k, |i, a| ts[a][i]),
        explained,
        stopped_early,
        x_params,
        y_mean,
        y_std,
    })
}
