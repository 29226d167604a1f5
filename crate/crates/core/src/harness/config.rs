use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::models::{Activation, MlpHyperparams, RfHyperparams, Strategy, SvrHyperparams};
use crate::selectors::SubsetRule;
use crate::spectra::{DatasetSchema, ScenarioKind, SynthConfig};
use crate::{Error, Result};

/// Where the old and new batches come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic {
        #[serde(default)]
        config: SynthConfig,
        #[serde(default)]
        seed: u64,
    },
    /// `old` holds every row when `new` is absent; rows are then split on the batch column.
    Files {
        old: PathBuf,
        #[serde(default)]
        new: Option<PathBuf>,
        #[serde(default)]
        schema: DatasetSchema,
        /// One wavenumber per line; needed for the Expert method and correctness.
        #[serde(default)]
        expert: Option<PathBuf>,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            config: SynthConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SelectionMethod {
    Expert,
    #[serde(rename = "PCA")]
    Pca,
    #[serde(rename = "PLS")]
    Pls,
    #[serde(rename = "RF")]
    Rf,
    Ridge,
    #[serde(rename = "SHAP")]
    Shap,
    #[serde(rename = "GS")]
    Gs,
    #[serde(rename = "LIME")]
    Lime,
    FullModel,
}

impl SelectionMethod {
    pub const ALL: [SelectionMethod; 9] = [
        SelectionMethod::Expert,
        SelectionMethod::Pca,
        SelectionMethod::Pls,
        SelectionMethod::Rf,
        SelectionMethod::Ridge,
        SelectionMethod::Shap,
        SelectionMethod::Gs,
        SelectionMethod::Lime,
        SelectionMethod::FullModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionMethod::Expert => "Expert",
            SelectionMethod::Pca => "PCA",
            SelectionMethod::Pls => "PLS",
            SelectionMethod::Rf => "RF",
            SelectionMethod::Ridge => "Ridge",
            SelectionMethod::Shap => "SHAP",
            SelectionMethod::Gs => "GS",
            SelectionMethod::Lime => "LIME",
            SelectionMethod::FullModel => "FullModel",
        }
    }

    /// Methods that produce a ranking (and hence a correctness curve).
    pub fn ranks(self) -> bool {
        !matches!(self, SelectionMethod::Expert | SelectionMethod::FullModel)
    }

    /// Methods that need a fitted black box.
    pub fn model_agnostic(self) -> bool {
        matches!(
            self,
            SelectionMethod::Shap | SelectionMethod::Gs | SelectionMethod::Lime
        )
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SelectionMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown selection method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    #[serde(default)]
    pub train: MlpHyperparams,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32],
            hidden_activation: Activation::Relu,
            output_activation: Activation::Linear,
            train: MlpHyperparams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    /// OLS at `alpha = 0`, ridge otherwise.
    Linear {
        #[serde(default)]
        alpha: f64,
    },
    Svr(SvrHyperparams),
    Mlp(MlpSpec),
    RandomForest(RfHyperparams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneSettings {
    pub budget: usize,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
}

fn default_strategy() -> Strategy {
    Strategy::Random
}

/// A named roster entry; `tune` replaces the fixed hyperparameters by a
/// validation-set search over the model family's space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub tune: Option<TuneSettings>,
}

impl ModelEntry {
    pub fn new(name: &str, model: ModelSpec) -> Self {
        Self {
            name: name.to_string(),
            model,
            tune: None,
        }
    }

    pub fn linear() -> Self {
        Self::new("LR", ModelSpec::Linear { alpha: 0.0 })
    }

    pub fn svr_bo() -> Self {
        Self::new("SVR-BO", ModelSpec::Svr(SvrHyperparams::bo_default()))
    }

    pub fn svr_fine_tuned() -> Self {
        Self::new("SVR-FT", ModelSpec::Svr(SvrHyperparams::fine_tuned()))
    }

    pub fn mlp() -> Self {
        Self::new("NN", ModelSpec::Mlp(MlpSpec::default()))
    }
}

/// Settings for the model-agnostic selectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainSettings {
    /// Model fitted on each training partition and then explained.
    pub black_box: ModelSpec,
    /// Training rows explained by SHAP (seeded subsample when fewer than available).
    pub shap_instances: usize,
    pub shap_permutations: usize,
    pub background_size: usize,
    pub background_strata: usize,
    pub lime_instances: usize,
    pub lime_perturbations: usize,
    /// Per-instance top-k used to aggregate LIME.
    pub lime_k: usize,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            black_box: ModelSpec::Svr(SvrHyperparams::fine_tuned()),
            shap_instances: 50,
            shap_permutations: 10,
            background_size: 10,
            background_strata: 5,
            lime_instances: 20,
            lime_perturbations: 1000,
            lime_k: crate::explainers::DEFAULT_LIME_K,
        }
    }
}

/// Which (model, scenario) cells feed the correctness/performance trade-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTarget {
    pub model: String,
    pub scenario: ScenarioKind,
}

impl Default for TradeoffTarget {
    fn default() -> Self {
        Self {
            model: "SVR-FT".into(),
            scenario: ScenarioKind::Realtime,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Optional `[lo, hi]` wavenumber window applied before anything else.
    pub trim: Option<(f64, f64)>,
    pub scenarios: Vec<ScenarioKind>,
    pub models: Vec<ModelEntry>,
    pub methods: Vec<SelectionMethod>,
    pub subset_rule: SubsetRule,
    pub n_repeats: usize,
    pub base_seed: u64,
    /// Correctness bin width in cm⁻¹; defaults to twice the axis resolution.
    pub bin_width: Option<f64>,
    pub curve_ks: Vec<usize>,
    /// Subset size at which the trade-off table reads correctness.
    pub tradeoff_k: usize,
    pub tradeoff: TradeoffTarget,
    /// Upper bound on PCA/PLS components searched.
    pub max_components: usize,
    pub explain: ExplainSettings,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            trim: None,
            scenarios: ScenarioKind::ALL.to_vec(),
            models: vec![ModelEntry::linear(), ModelEntry::svr_bo(), ModelEntry::svr_fine_tuned()],
            methods: SelectionMethod::ALL.to_vec(),
            subset_rule: SubsetRule::Count(120),
            n_repeats: 30,
            base_seed: 0,
            bin_width: None,
            curve_ks: crate::metrics::default_curve_ks(),
            tradeoff_k: 120,
            tradeoff: TradeoffTarget::default(),
            max_components: 10,
            explain: ExplainSettings::default(),
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_repeats < 1 {
            return Err(Error::config("n_repeats must be at least 1"));
        }
        if self.scenarios.is_empty() || self.models.is_empty() || self.methods.is_empty() {
            return Err(Error::config("scenario, model and method rosters must be nonempty"));
        }
        let mut names: Vec<&str> = self.models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("model names must be unique"));
        }
        let mut methods = self.methods.clone();
        methods.sort_unstable();
        methods.dedup();
        if methods.len() != self.methods.len() {
            return Err(Error::config("selection methods must be unique"));
        }
        if let Some(w) = self.bin_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::config(format!("bin width must be positive, got {w}")));
            }
        }
        if let Some((lo, hi)) = self.trim {
            if !(lo < hi) {
                return Err(Error::config(format!("trim window [{lo}, {hi}] is empty")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads must be at least 1"));
        }
        if self.max_components < 2 {
            return Err(Error::config("max_components must be at least 2"));
        }
        let e = &self.explain;
        if e.shap_instances == 0 || e.shap_permutations == 0 || e.background_size == 0 || e.background_strata == 0 {
            return Err(Error::config("SHAP settings must all be at least 1"));
        }
        if e.lime_instances == 0 || e.lime_perturbations < 2 || e.lime_k == 0 {
            return Err(Error::config(
                "LIME needs instances, k >= 1 and at least two perturbations",
            ));
        }
        for m in &self.models {
            validate_model(&m.model)?;
            if let Some(t) = m.tune {
                if t.budget == 0 {
                    return Err(Error::config(format!(
                        "model {:?}: tuning budget must be at least 1",
                        m.name
                    )));
                }
            }
        }
        validate_model(&e.black_box)?;
        let mut ks = self.curve_ks.clone();
        ks.sort_unstable();
        if ks != self.curve_ks || ks.contains(&0) {
            return Err(Error::config("curve_ks must be ascending and positive"));
        }
        if let SubsetRule::Count(0) = self.subset_rule {
            return Err(Error::config("subset size must be at least 1"));
        }
        if let SubsetRule::Cumulative(q) = self.subset_rule {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::config(format!(
                    "cumulative fraction must lie in (0, 1], got {q}"
                )));
            }
        }
        Ok(())
    }
}

fn validate_model(m: &ModelSpec) -> Result<()> {
    match m {
        ModelSpec::Linear { alpha } if !(*alpha >= 0.0 && alpha.is_finite()) => {
            Err(Error::config(format!("linear alpha must be >= 0, got {alpha}")))
        }
        ModelSpec::Linear { .. } => Ok(()),
        ModelSpec::Svr(h) => h.validate(),
        ModelSpec::Mlp(s) => {
            if s.hidden.contains(&0) {
                return Err(Error::config("MLP hidden widths must be positive"));
            }
            s.train.validate()
        }
        ModelSpec::RandomForest(h) => h.validate(),
    }
}
