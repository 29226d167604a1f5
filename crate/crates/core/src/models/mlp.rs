use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{check_training_data, Regressor};
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Sgd,
    Rmsprop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    /// N(0, 0.05²).
    RandomNormal,
    /// U(±√(6 / (fan_in + fan_out))).
    GlorotUniform,
    /// N(0, 2 / fan_in).
    HeNormal,
}

/// Layer widths from input to output plus activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArch {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpArch {
    /// `[n_inputs, hidden…, 1]`.
    pub fn new(
        n_inputs: usize,
        hidden: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Self {
        let mut layer_sizes = vec![n_inputs];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(1);
        Self {
            layer_sizes,
            hidden_activation,
            output_activation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::config("an MLP needs at least an input and an output layer"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::config("MLP layer widths must be positive"));
        }
        if *self.layer_sizes.last().unwrap() != 1 {
            return Err(Error::config("MLP output layer must have width 1"));
        }
        if self.hidden_activation == Activation::Linear {
            return Err(Error::config("hidden activation must be relu or sigmoid"));
        }
        if self.output_activation == Activation::Relu {
            return Err(Error::config("output activation must be linear or sigmoid"));
        }
        Ok(())
    }

    pub fn n_parameters(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpHyperparams {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Penalty `l2·Σ‖W‖²` on weights (biases are not penalized).
    pub l2_penalty: f64,
    pub weight_init: WeightInit,
    pub init_seed: u64,
    /// Seed for the per-epoch mini-batch order.
    pub shuffle_seed: u64,
}

impl Default for MlpHyperparams {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Adam,
            learning_rate: 0.0011,
            batch_size: 32,
            epochs: 200,
            l2_penalty: 0.0,
            weight_init: WeightInit::GlorotUniform,
            init_seed: 0,
            shuffle_seed: 0,
        }
    }
}

impl MlpHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(Error::config("epochs and batch size must be at least 1"));
        }
        if !(self.l2_penalty >= 0.0) {
            return Err(Error::config("l2 penalty must be >= 0"));
        }
        Ok(())
    }
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    /// `weights[l]` maps layer `l` to layer `l + 1` (shape out × in).
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vector>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

impl MlpModel {
    /// Network with every weight and bias set to zero.
    pub fn zeros(arch: &MlpArch) -> Result<Self> {
        arch.validate()?;
        let s = &arch.layer_sizes;
        Ok(Self {
            layer_sizes: s.clone(),
            weights: s.windows(2).map(|w| Matrix::zeros(w[1], w[0])).collect(),
            biases: s.windows(2).map(|w| Vector::zeros(w[1])).collect(),
            hidden_activation: arch.hidden_activation,
            output_activation: arch.output_activation,
            loss_history: Vec::new(),
        })
    }

    /// Seeded initialization; biases start at zero.
    pub fn init(arch: &MlpArch, scheme: WeightInit, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut m.weights {
            let (fan_out, fan_in) = w.shape();
            match scheme {
                WeightInit::RandomNormal => fill(w, &Normal::new(0.0, 0.05).unwrap(), &mut rng),
                WeightInit::GlorotUniform => {
                    let lim = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    fill(w, &Uniform::new_inclusive(-lim, lim).unwrap(), &mut rng)
                }
                WeightInit::HeNormal => fill(w, &Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap(), &mut rng),
            }
        }
        Ok(m)
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.n_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Pre-activations and activations for a batch stored column-wise (M × B).
    fn forward(&self, a0: &Matrix) -> (Vec<Matrix>, Vec<Matrix>) {
        let mut zs = Vec::with_capacity(self.n_layers());
        let mut acts = vec![a0.clone()];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * acts.last().unwrap();
            for mut col in z.column_iter_mut() {
                col += b;
            }
            let g = self.activation(l);
            let a = z.map(|v| g.apply(v));
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    /// Continues a forward pass from the first-layer pre-activation.
    fn forward_from_first(&self, z1: &Vector) -> f64 {
        let mut a = z1.map(|v| self.activation(0).apply(v));
        for l in 1..self.n_layers() {
            let g = self.activation(l);
            a = (&self.weights[l] * &a + &self.biases[l]).map(|v| g.apply(v));
        }
        a[0]
    }

    /// Mean squared error plus the weight penalty on rows of `x`.
    pub fn loss(&self, x: &Matrix, y: &Vector, l2: f64) -> f64 {
        let pred = self.predict(x);
        let mse = (pred - y).norm_squared() / y.len() as f64;
        mse + l2 * self.weights.iter().map(|w| w.norm_squared()).sum::<f64>()
    }

    /// Loss and its gradient by backpropagation over the rows of `x`.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &Vector, l2: f64) -> (f64, Gradients) {
        self.batch_gradient(&x.transpose(), y.as_slice(), l2)
    }

    fn batch_gradient(&self, a0: &Matrix, y: &[f64], l2: f64) -> (f64, Gradients) {
        let n = y.len() as f64;
        let (zs, acts) = self.forward(a0);
        let out = acts.last().unwrap();
        let last = self.n_layers() - 1;
        let mut sq = 0.0;
        let mut delta = Matrix::zeros(1, y.len());
        for (b, &t) in y.iter().enumerate() {
            let r = out[(0, b)] - t;
            sq += r * r;
            delta[(0, b)] = 2.0 / n * r * self.output_activation.derivative(zs[last][(0, b)], out[(0, b)]);
        }
        let penalty: f64 = self.weights.iter().map(|w| w.norm_squared()).sum();
        let loss = sq / n + l2 * penalty;

        let mut gw = vec![Matrix::zeros(0, 0); self.n_layers()];
        let mut gb = vec![Vector::zeros(0); self.n_layers()];
        for l in (0..self.n_layers()).rev() {
            let mut dw = &delta * acts[l].transpose();
            if l2 > 0.0 {
                dw += &self.weights[l] * (2.0 * l2);
            }
            gw[l] = dw;
            gb[l] = delta.column_sum();
            if l > 0 {
                let mut back = self.weights[l].transpose() * &delta;
                let g = self.activation(l - 1);
                back.zip_zip_apply(&zs[l - 1], &acts[l], |d, z, a| *d *= g.derivative(z, a));
                delta = back;
            }
        }
        (
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        )
    }

    /// Every parameter as one vector (weights column-major per layer, then biases).
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_parameters());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            v.extend_from_slice(w.as_slice());
            v.extend_from_slice(b.as_slice());
        }
        v
    }

    pub fn set_flat_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_parameters() {
            return Err(Error::DimensionMismatch {
                expected: self.n_parameters(),
                found: flat.len(),
            });
        }
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let nw = w.len();
            w.as_mut_slice().copy_from_slice(&flat[k..k + nw]);
            k += nw;
            let nb = b.len();
            b.as_mut_slice().copy_from_slice(&flat[k..k + nb]);
            k += nb;
        }
        Ok(())
    }
}

impl Gradients {
    /// Same ordering as [`MlpModel::flat_parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            v.extend_from_slice(w.as_slice());
            v.extend_from_slice(b.as_slice());
        }
        v
    }
}

fn fill<D: Distribution<f64>>(w: &mut Matrix, dist: &D, rng: &mut ChaCha8Rng) {
    for v in w.iter_mut() {
        *v = dist.sample(rng);
    }
}

impl Regressor for MlpModel {
    fn n_features(&self) -> usize {
        self.layer_sizes[0]
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let z1 = &self.weights[0] * Vector::from_column_slice(x) + &self.biases[0];
        self.forward_from_first(&z1)
    }

    fn predict(&self, x: &Matrix) -> Vector {
        assert_eq!(x.ncols(), self.n_features(), "input width does not match the model");
        let (_, acts) = self.forward(&x.transpose());
        acts.last().unwrap().row(0).transpose()
    }

    fn predict_path(&self, start: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
        let mut x = start.to_vec();
        let mut z1 = &self.weights[0] * Vector::from_column_slice(&x) + &self.biases[0];
        let mut out = Vec::with_capacity(steps.len() + 1);
        out.push(self.forward_from_first(&z1));
        for &(j, v) in steps {
            let d = v - x[j];
            if d != 0.0 {
                z1.axpy(d, &self.weights[0].column(j), 1.0);
                x[j] = v;
            }
            out.push(self.forward_from_first(&z1));
        }
        out
    }
}

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const RMS_RHO: f64 = 0.9;
const OPT_EPS: f64 = 1e-7;

impl OptimizerState {
    fn new(kind: Optimizer, lr: f64, model: &MlpModel) -> Self {
        let shapes: Vec<usize> = model
            .weights
            .iter()
            .zip(&model.biases)
            .flat_map(|(w, b)| [w.len(), b.len()])
            .collect();
        Self {
            kind,
            lr,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn update(&mut self, model: &mut MlpModel, grads: &Gradients) {
        self.step += 1;
        let mut params: Vec<&mut [f64]> = Vec::new();
        for (w, b) in model.weights.iter_mut().zip(model.biases.iter_mut()) {
            params.push(w.as_mut_slice());
            params.push(b.as_mut_slice());
        }
        let g: Vec<&[f64]> = grads
            .weights
            .iter()
            .zip(&grads.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect();
        let (bc1, bc2) = (1.0 - ADAM_BETA1.powi(self.step), 1.0 - ADAM_BETA2.powi(self.step));
        for (k, p) in params.into_iter().enumerate() {
            let (gk, m, v) = (g[k], &mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                match self.kind {
                    Optimizer::Sgd => p[i] -= self.lr * gk[i],
                    Optimizer::Rmsprop => {
                        v[i] = RMS_RHO * v[i] + (1.0 - RMS_RHO) * gk[i] * gk[i];
                        p[i] -= self.lr * gk[i] / (v[i].sqrt() + OPT_EPS);
                    }
                    Optimizer::Adam => {
                        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * gk[i];
                        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * gk[i] * gk[i];
                        p[i] -= self.lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + OPT_EPS);
                    }
                }
            }
        }
    }
}

/// Mini-batch training of an MSE regressor.
pub fn mlp_fit(x: &Matrix, y: &Vector, arch: &MlpArch, h: &MlpHyperparams) -> Result<MlpModel> {
    check_training_data(x, y, 1)?;
    h.validate()?;
    arch.validate()?;
    if arch.layer_sizes[0] != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: arch.layer_sizes[0],
            found: x.ncols(),
        });
    }
    let mut model = MlpModel::init(arch, h.weight_init, h.init_seed)?;
    let mut opt = OptimizerState::new(h.optimizer, h.learning_rate, &model);
    let mut rng = ChaCha8Rng::seed_from_u64(h.shuffle_seed);
    let xt = x.transpose();
    let n = x.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..h.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(h.batch_size) {
            let a0 = Matrix::from_fn(x.ncols(), batch.len(), |j, b| xt[(j, batch[b])]);
            let yb: Vec<f64> = batch.iter().map(|&i| y[i]).collect();
            let (loss, grads) = model.batch_gradient(&a0, &yb, h.l2_penalty);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            total += loss * batch.len() as f64;
            opt.update(&mut model, &grads);
        }
        let epoch_loss = total / n as f64;
        if !model.flat_parameters().iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged { epoch, loss: f64::NAN });
        }
        model.loss_history.push(epoch_loss);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_data(n: usize, m: usize, seed: u64) -> (Matrix, Vector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let y = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        (x, y)
    }

    #[test]
    fn zero_network_predicts_zero() {
        let m = MlpModel::zeros(&MlpArch::new(4, &[3], Activation::Relu, Activation::Linear)).unwrap();
        assert_eq!(m.predict_row(&[1.0, -2.0, 3.0, 0.5]), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = random_data(5, 3, 1);
        for act in [Activation::Sigmoid, Activation::Relu] {
            let arch = MlpArch::new(3, &[4], act, Activation::Linear);
            let model = MlpModel::init(&arch, WeightInit::GlorotUniform, 7).unwrap();
            let (_, g) = model.loss_and_gradient(&x, &y, 0.01);
            let analytic = g.flatten();
            let theta = model.flat_parameters();
            let h = 1e-5;
            let mut probe = model.clone();
            for k in 0..theta.len() {
                let mut t = theta.clone();
                t[k] += h;
                probe.set_flat_parameters(&t).unwrap();
                let up = probe.loss(&x, &y, 0.01);
                t[k] -= 2.0 * h;
                probe.set_flat_parameters(&t).unwrap();
                let down = probe.loss(&x, &y, 0.01);
                let numeric = (up - down) / (2.0 * h);
                let scale = analytic[k].abs().max(numeric.abs()).max(1e-8);
                assert!(
                    (analytic[k] - numeric).abs() / scale < 1e-4,
                    "param {k}: {} vs {numeric}",
                    analytic[k]
                );
            }
        }
    }

    #[test]
    fn learns_a_linear_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Matrix::from_fn(50, 2, |_, _| rng.random_range(-1.0..1.0));
        let y = Vector::from_fn(50, |i, _| 3.0 * x[(i, 0)]);
        let arch = MlpArch::new(2, &[16], Activation::Relu, Activation::Linear);
        let h = MlpHyperparams {
            epochs: 500,
            learning_rate: 0.01,
            batch_size: 10,
            ..Default::default()
        };
        let m = mlp_fit(&x, &y, &arch, &h).unwrap();
        let mse = (m.predict(&x) - &y).norm_squared() / 50.0;
        assert!(mse < 1e-2, "mse {mse}");
        assert_eq!(m.loss_history.len(), 500);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = random_data(20, 3, 4);
        let arch = MlpArch::new(3, &[5, 4], Activation::Sigmoid, Activation::Linear);
        let h = MlpHyperparams {
            epochs: 20,
            batch_size: 7,
            optimizer: Optimizer::Rmsprop,
            ..Default::default()
        };
        assert_eq!(mlp_fit(&x, &y, &arch, &h).unwrap(), mlp_fit(&x, &y, &arch, &h).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let (x, y) = random_data(20, 3, 5);
        let y = y * 1e150;
        let arch = MlpArch::new(3, &[8], Activation::Relu, Activation::Linear);
        let h = MlpHyperparams {
            optimizer: Optimizer::Sgd,
            learning_rate: 1.0,
            epochs: 50,
            ..Default::default()
        };
        assert!(matches!(mlp_fit(&x, &y, &arch, &h), Err(Error::Diverged { .. })));
    }

    #[test]
    fn input_width_must_match() {
        let (x, y) = random_data(10, 3, 6);
        let arch = MlpArch::new(512, &[8], Activation::Relu, Activation::Linear);
        assert!(mlp_fit(&x, &y, &arch, &MlpHyperparams::default()).is_err());
    }

    #[test]
    fn path_and_batch_prediction_agree_with_rows() {
        let (x, _) = random_data(6, 4, 8);
        let arch = MlpArch::new(4, &[6, 3], Activation::Sigmoid, Activation::Sigmoid);
        let m = MlpModel::init(&arch, WeightInit::HeNormal, 2).unwrap();
        let batch = m.predict(&x);
        for i in 0..6 {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            assert!((batch[i] - m.predict_row(&row)).abs() < 1e-12);
        }
        let start: Vec<f64> = x.row(0).iter().copied().collect();
        let steps = [(0, 0.3), (3, -0.7), (1, 0.0)];
        let path = m.predict_path(&start, &steps);
        let mut row = start.clone();
        for (k, &(j, v)) in steps.iter().enumerate() {
            row[j] = v;
            assert!((path[k + 1] - m.predict_row(&row)).abs() < 1e-12);
        }
        assert_eq!(arch.n_parameters(), m.n_parameters());
    }
}
