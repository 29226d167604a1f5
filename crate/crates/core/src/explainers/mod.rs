//! Model-agnostic attributions and their global rankings.
//!
//! Every explainer treats the model as a black box through [`Regressor`].
//! Per-instance work runs in parallel; each instance draws from its own
//! ChaCha stream keyed by the instance index, so results do not depend on
//! the thread schedule.

mod lime;
mod shapley;
mod surrogate;

pub use lime::{lime_attributions, lime_local, lime_rank, lime_rank_from, LimeConfig, DEFAULT_LIME_K};
pub use shapley::{
    shap_attributions, shap_rank, shap_rank_from, shapley_local, stratified_background, ShapConfig, ShapMode,
    EXACT_LIMIT,
};
pub use surrogate::{surrogate_fit, surrogate_rank, SurrogateModel, SURROGATE_ALPHA};

use std::io::Write;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::models::Regressor;
use crate::spectra::WavenumberAxis;

/// Signed per-feature contributions for one explained instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub instance_id: usize,
    pub values: Vec<f64>,
    /// Expected output over the background (Shapley) or local intercept (LIME).
    pub base_value: f64,
    /// `f(x)`.
    pub model_output: f64,
    /// Weighted R² of the local linear fit; LIME only.
    pub local_fit_r2: Option<f64>,
}

impl Attribution {
    /// `|Σ values − (model_output − base_value)|`.
    pub fn additivity_gap(&self) -> f64 {
        (self.values.iter().sum::<f64>() - (self.model_output - self.base_value)).abs()
    }
}

/// Long-format `instance,wavenumber,value` table.
pub fn write_attributions<W: Write>(attrs: &[Attribution], axis: &WavenumberAxis, mut w: W) -> std::io::Result<()> {
    writeln!(w, "instance,wavenumber,value")?;
    for a in attrs {
        for (j, v) in a.values.iter().enumerate() {
            writeln!(w, "{},{},{}", a.instance_id, axis.values()[j], v)?;
        }
    }
    Ok(())
}

pub(crate) fn instance_rng(seed: u64, instance: usize) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance as u64);
    rng
}

pub(crate) fn check_width(f: &dyn Regressor, m: usize) -> crate::Result<()> {
    if f.n_features() != m {
        return Err(crate::Error::DimensionMismatch {
            expected: f.n_features(),
            found: m,
        });
    }
    Ok(())
}
