use serde::{Deserialize, Serialize};

use super::{check_training_data, KernelSpec, Regressor};
use crate::spectra::StandardizationParams;
use crate::{linalg, Error, Matrix, Result, Vector};

/// Dual coefficients smaller than this in magnitude do not count as support vectors.
const SV_THRESHOLD: f64 = 1e-9;
/// Curvature substitute for non-positive second-order terms.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrHyperparams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Stopping threshold on the maximal KKT violation.
    pub tol: f64,
    /// Standardize inputs with training statistics before the kernel.
    #[serde(default)]
    pub standardize: bool,
}

impl SvrHyperparams {
    /// poly(d=3, γ=0.7, coef0=0.1), C=0.7, ε=0.1.
    pub fn bo_default() -> Self {
        Self {
            kernel: KernelSpec::poly(0.7, 0.1, 3),
            c: 0.7,
            epsilon: 0.1,
            max_iter: 100_000,
            tol: 1e-3,
            standardize: false,
        }
    }

    /// The BO default with the wider ε = 0.66 tube.
    pub fn fine_tuned() -> Self {
        Self {
            epsilon: 0.66,
            ..Self::bo_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!("SVR C must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config(format!("SVR epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.max_iter < 1 {
            return Err(Error::config("SVR max_iter must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("SVR tol must be positive"));
        }
        Ok(())
    }
}

impl Default for SvrHyperparams {
    fn default() -> Self {
        Self::bo_default()
    }
}

/// Outcome of the dual solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverStatus {
    pub iterations: usize,
    /// False when `max_iter` stopped the solver first.
    pub converged: bool,
    /// Final maximal KKT violation (`m(α) − M(α)`).
    pub kkt_gap: f64,
    /// Dual objective in maximization form.
    pub dual_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub epsilon: f64,
    pub n_features: usize,
    /// Training-row indices of the support vectors.
    pub support_indices: Vec<usize>,
    /// `α_i − α_i*` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    /// Support-vector inputs (after scaling when `scaler` is set).
    pub support_vectors: Vec<Vec<f64>>,
    pub scaler: Option<StandardizationParams>,
    pub status: SolverStatus,
}

impl SvrModel {
    pub fn n_support(&self) -> usize {
        self.support_indices.len()
    }

    fn scaled(&self, x: &[f64]) -> Vec<f64> {
        match &self.scaler {
            Some(s) => x.iter().enumerate().map(|(j, &v)| s.apply_value(j, v)).collect(),
            None => x.to_vec(),
        }
    }

    fn kernel_from_stats(&self, stats: &[f64]) -> f64 {
        self.bias
            + self
                .dual_coefs
                .iter()
                .zip(stats)
                .map(|(b, &s)| b * self.kernel.from_stat(s))
                .sum::<f64>()
    }
}

impl Regressor for SvrModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let z = self.scaled(x);
        let stats: Vec<f64> = self.support_vectors.iter().map(|sv| self.kernel.stat(sv, &z)).collect();
        self.kernel_from_stats(&stats)
    }

    fn predict_path(&self, start: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
        let mut z = self.scaled(start);
        let mut stats: Vec<f64> = self.support_vectors.iter().map(|sv| self.kernel.stat(sv, &z)).collect();
        let rbf = self.kernel.kind == super::KernelKind::Rbf;
        let mut out = Vec::with_capacity(steps.len() + 1);
        out.push(self.kernel_from_stats(&stats));
        for &(j, v) in steps {
            let new = match &self.scaler {
                Some(s) => s.apply_value(j, v),
                None => v,
            };
            let old = z[j];
            if new != old {
                for (st, sv) in stats.iter_mut().zip(&self.support_vectors) {
                    if rbf {
                        *st += (new - sv[j]).powi(2) - (old - sv[j]).powi(2);
                    } else {
                        *st += sv[j] * (new - old);
                    }
                }
                z[j] = new;
            }
            out.push(self.kernel_from_stats(&stats));
        }
        out
    }
}

/// Support-vector count, the complexity measure for SVR.
pub fn model_complexity(m: &SvrModel) -> usize {
    m.dual_coefs.iter().filter(|c| c.abs() > SV_THRESHOLD).count()
}

pub fn svr_fit(x: &Matrix, y: &Vector, h: &SvrHyperparams) -> Result<SvrModel> {
    fit(x, y, h, None)
}

/// Like [`svr_fit`], also returning the dual objective after every iteration.
pub fn svr_fit_traced(x: &Matrix, y: &Vector, h: &SvrHyperparams) -> Result<(SvrModel, Vec<f64>)> {
    let mut trace = Vec::new();
    let model = fit(x, y, h, Some(&mut trace))?;
    Ok((model, trace))
}

fn fit(x: &Matrix, y: &Vector, h: &SvrHyperparams, trace: Option<&mut Vec<f64>>) -> Result<SvrModel> {
    check_training_data(x, y, 2)?;
    h.validate()?;
    let (xs, scaler) = if h.standardize {
        let s = StandardizationParams::fit(x)?;
        (s.apply(x)?, Some(s))
    } else {
        (x.clone(), None)
    };
    let k = kernel_matrix(&xs, &h.kernel);
    let (alpha, rho, status) = smo(&k, y.as_slice(), h.c, h.epsilon, h.max_iter, h.tol, trace);
    if !status.converged {
        log::warn!(
            "SVR solver stopped at max_iter = {} with KKT gap {:.3e}",
            h.max_iter,
            status.kkt_gap
        );
    }
    let n = y.len();
    let mut support_indices = Vec::new();
    let mut dual_coefs = Vec::new();
    for i in 0..n {
        let beta = alpha[i] - alpha[i + n];
        if beta.abs() > SV_THRESHOLD {
            support_indices.push(i);
            dual_coefs.push(beta);
        }
    }
    let support_vectors = support_indices.iter().map(|&i| linalg::row(&xs, i)).collect();
    Ok(SvrModel {
        kernel: h.kernel,
        c: h.c,
        epsilon: h.epsilon,
        n_features: x.ncols(),
        support_indices,
        dual_coefs,
        bias: -rho,
        support_vectors,
        scaler,
        status,
    })
}

fn kernel_matrix(x: &Matrix, spec: &KernelSpec) -> Matrix {
    let n = x.nrows();
    let rows = linalg::rows(x);
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = spec.eval(&rows[i], &rows[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Second-order SMO on the 2N-variable ε-SVR dual
/// `min ½αᵀQα + pᵀα  s.t. sᵀα = 0, 0 ≤ α ≤ C`,
/// with `s = (+1…, −1…)`, `Q_tu = s_t s_u K`, `p = (ε − y, ε + y)`.
///
/// Returns the 2N multipliers, the offset ρ (decision = Σβ K − ρ) and the status.
fn smo(
    k: &Matrix,
    y: &[f64],
    c: f64,
    eps: f64,
    max_iter: usize,
    tol: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> (Vec<f64>, f64, SolverStatus) {
    let n = y.len();
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let kk = |t: usize, u: usize| k[(t % n, u % n)];
    let p: Vec<f64> = (0..l)
        .map(|t| if t < n { eps - y[t] } else { eps + y[t - n] })
        .collect();
    let qd: Vec<f64> = (0..l).map(|t| kk(t, t)).collect();
    let mut alpha = vec![0.0; l];
    let mut g = p.clone();
    let objective = |alpha: &[f64], g: &[f64]| -> f64 { -0.5 * (0..l).map(|t| alpha[t] * (g[t] + p[t])).sum::<f64>() };

    let mut iterations = 0;
    let mut converged = false;
    let mut gap;
    loop {
        // Maximal violating pair with second-order choice of j.
        let mut gmax = f64::NEG_INFINITY;
        let mut sel_i = None;
        for t in 0..l {
            if sign(t) > 0.0 {
                if alpha[t] < c && -g[t] >= gmax {
                    gmax = -g[t];
                    sel_i = Some(t);
                }
            } else if alpha[t] > 0.0 && g[t] >= gmax {
                gmax = g[t];
                sel_i = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut sel_j = None;
        if let Some(i) = sel_i {
            // With Q_it = s_i s_t K_it the curvature reduces to K_ii + K_tt − 2K_it.
            let mut obj_min = f64::INFINITY;
            for t in 0..l {
                let st = sign(t);
                let (movable, grad_diff, quad) = if st > 0.0 {
                    if alpha[t] > 0.0 {
                        gmax2 = gmax2.max(g[t]);
                        (true, gmax + g[t], qd[i] + qd[t] - 2.0 * kk(i, t))
                    } else {
                        (false, 0.0, 0.0)
                    }
                } else if alpha[t] < c {
                    gmax2 = gmax2.max(-g[t]);
                    (true, gmax - g[t], qd[i] + qd[t] - 2.0 * kk(i, t))
                } else {
                    (false, 0.0, 0.0)
                };
                if movable && grad_diff > 0.0 {
                    let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= obj_min {
                        obj_min = obj;
                        sel_j = Some(t);
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let (i, j) = match (sel_i, sel_j) {
            (Some(i), Some(j)) if gap >= tol => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (yi, yj) = (sign(i), sign(j));
        let qij = yi * yj * kk(i, j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if yi != yj {
            let quad = qd[i] + qd[j] + 2.0 * qij;
            let delta = (-g[i] - g[j]) / if quad > 0.0 { quad } else { TAU };
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = qd[i] + qd[j] - 2.0 * qij;
            let delta = (g[i] - g[j]) / if quad > 0.0 { quad } else { TAU };
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            let st = sign(t);
            g[t] += st * (yi * kk(t, i) * di + yj * kk(t, j) * dj);
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(objective(&alpha, &g));
        }
    }

    // Offset from free variables, else the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = sign(t) * g[t];
        if alpha[t] >= c {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let status = SolverStatus {
        iterations,
        converged,
        kkt_gap: gap.max(0.0),
        dual_objective: objective(&alpha, &g),
    };
    (alpha, rho, status)
}
