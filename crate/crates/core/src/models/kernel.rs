use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Poly,
    Rbf,
    Sigmoid,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Poly,
        KernelKind::Rbf,
        KernelKind::Sigmoid,
        KernelKind::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Poly => "poly",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "poly" => Ok(KernelKind::Poly),
            "rbf" => Ok(KernelKind::Rbf),
            "sigmoid" => Ok(KernelKind::Sigmoid),
            _ => Err(Error::config(format!("unknown kernel {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub coef0: f64,
    pub degree: u32,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            gamma: 1.0,
            coef0: 0.0,
            degree: 1,
        }
    }

    pub fn poly(gamma: f64, coef0: f64, degree: u32) -> Self {
        Self {
            kind: KernelKind::Poly,
            gamma,
            coef0,
            degree,
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        Self {
            kind: KernelKind::Rbf,
            gamma,
            coef0: 0.0,
            degree: 1,
        }
    }

    pub fn sigmoid(gamma: f64, coef0: f64) -> Self {
        Self {
            kind: KernelKind::Sigmoid,
            gamma,
            coef0,
            degree: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::config("kernel degree must be at least 1"));
        }
        if self.kind != KernelKind::Linear && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!(
                "kernel gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !self.coef0.is_finite() {
            return Err(Error::config("kernel coef0 must be finite"));
        }
        Ok(())
    }

    /// Kernel value given the inner product (linear, poly, sigmoid) or the
    /// squared distance (rbf).
    #[inline]
    pub fn from_stat(&self, stat: f64) -> f64 {
        match self.kind {
            KernelKind::Linear => stat,
            KernelKind::Poly => (self.gamma * stat + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => (-self.gamma * stat).exp(),
            KernelKind::Sigmoid => (self.gamma * stat + self.coef0).tanh(),
        }
    }

    /// The statistic [`from_stat`](Self::from_stat) expects.
    #[inline]
    pub fn stat(&self, x: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Rbf => x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum(),
            _ => x.iter().zip(z).map(|(a, b)| a * b).sum(),
        }
    }

    /// Unchecked evaluation; slices must have equal length.
    #[inline]
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        self.from_stat(self.stat(x, z))
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    Ok(spec.eval(x, z))
}
