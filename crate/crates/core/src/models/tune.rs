use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    gen_architecture, Activation, ArchPattern, ArchSpec, KernelKind, KernelSpec, MlpArch, MlpHyperparams, Optimizer,
    Regressor, RfHyperparams, SvrHyperparams, WeightInit,
};
use crate::metrics::mse;
use crate::spectra::SpectraDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<&str> for ParamValue {
    fn from(s: &str) -> Self {
        ParamValue::Text(s.to_string())
    }
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(v) => f.write_str(v),
        }
    }
}

/// One sampled configuration, keyed by dimension name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamSet(pub BTreeMap<String, ParamValue>);

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, v: ParamValue) -> Self {
        self.0.insert(name.to_string(), v);
        self
    }

    fn get(&self, name: &str) -> Result<&ParamValue> {
        self.0
            .get(name)
            .ok_or_else(|| Error::config(format!("missing hyperparameter {name:?}")))
    }

    pub fn f64(&self, name: &str) -> Result<f64> {
        match self.get(name)? {
            ParamValue::Float(v) => Ok(*v),
            ParamValue::Int(v) => Ok(*v as f64),
            ParamValue::Text(_) => Err(Error::config(format!("hyperparameter {name:?} is not numeric"))),
        }
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        match self.get(name)? {
            ParamValue::Int(v) => Ok(*v),
            _ => Err(Error::config(format!("hyperparameter {name:?} is not an integer"))),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        match self.get(name)? {
            ParamValue::Text(v) => Ok(v),
            _ => Err(Error::config(format!("hyperparameter {name:?} is not a string"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionKind {
    /// Continuous range; `log` samples uniformly in log space.
    Float {
        lo: f64,
        hi: f64,
        log: bool,
    },
    Int {
        lo: i64,
        hi: i64,
        step: i64,
    },
    Choice(Vec<ParamValue>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub kind: DimensionKind,
}

impl Dimension {
    pub fn float(name: &str, lo: f64, hi: f64, log: bool) -> Self {
        Self {
            name: name.into(),
            kind: DimensionKind::Float { lo, hi, log },
        }
    }

    pub fn int(name: &str, lo: i64, hi: i64, step: i64) -> Self {
        Self {
            name: name.into(),
            kind: DimensionKind::Int { lo, hi, step },
        }
    }

    pub fn choice(name: &str, values: Vec<ParamValue>) -> Self {
        Self {
            name: name.into(),
            kind: DimensionKind::Choice(values),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match &self.kind {
            DimensionKind::Float { lo, hi, log } => lo <= hi && lo.is_finite() && hi.is_finite() && (!log || *lo > 0.0),
            DimensionKind::Int { lo, hi, step } => lo <= hi && *step >= 1,
            DimensionKind::Choice(v) => !v.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid search dimension {:?}", self.name)))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> ParamValue {
        match &self.kind {
            DimensionKind::Float { lo, hi, log } => {
                if lo == hi {
                    ParamValue::Float(*lo)
                } else if *log {
                    ParamValue::Float(rng.random_range(lo.ln()..=hi.ln()).exp().clamp(*lo, *hi))
                } else {
                    ParamValue::Float(rng.random_range(*lo..=*hi))
                }
            }
            DimensionKind::Int { lo, hi, step } => {
                let k = rng.random_range(0..=(hi - lo) / step);
                ParamValue::Int(lo + k * step)
            }
            DimensionKind::Choice(v) => v[rng.random_range(0..v.len())].clone(),
        }
    }

    fn contains(&self, v: &ParamValue) -> bool {
        match (&self.kind, v) {
            (DimensionKind::Float { lo, hi, .. }, ParamValue::Float(x)) => lo <= x && x <= hi,
            (DimensionKind::Int { lo, hi, step }, ParamValue::Int(x)) => lo <= x && x <= hi && (x - lo) % step == 0,
            (DimensionKind::Choice(vals), v) => vals.contains(v),
            _ => false,
        }
    }

    fn grid_values(&self) -> Result<Vec<ParamValue>> {
        match &self.kind {
            DimensionKind::Float { lo, hi, .. } if lo == hi => Ok(vec![ParamValue::Float(*lo)]),
            DimensionKind::Float { .. } => Err(Error::config(format!(
                "grid search needs discrete values for {:?}",
                self.name
            ))),
            DimensionKind::Int { lo, hi, step } => {
                Ok((0..=(hi - lo) / step).map(|k| ParamValue::Int(lo + k * step)).collect())
            }
            DimensionKind::Choice(v) => Ok(v.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchSpace(pub Vec<Dimension>);

impl SearchSpace {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> ParamSet {
        ParamSet(self.0.iter().map(|d| (d.name.clone(), d.sample(rng))).collect())
    }

    pub fn contains(&self, p: &ParamSet) -> bool {
        self.0.iter().all(|d| p.0.get(&d.name).is_some_and(|v| d.contains(v)))
    }

    pub fn validate(&self) -> Result<()> {
        self.0.iter().try_for_each(Dimension::validate)
    }
}

/// Cartesian product of the dimension values, last dimension varying fastest.
pub fn grid(space: &SearchSpace) -> Result<Vec<ParamSet>> {
    let mut out = vec![ParamSet::new()];
    for d in &space.0 {
        let values = d.grid_values()?;
        out = out
            .into_iter()
            .flat_map(|p| values.iter().map(move |v| p.clone().with(&d.name, v.clone())))
            .collect();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerSpec {
    pub space: SearchSpace,
    /// Number of trials (grid search evaluates at most this many points).
    pub budget: usize,
    pub strategy: Strategy,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub params: ParamSet,
    pub val_mse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerResult {
    pub best: ParamSet,
    pub best_val_mse: f64,
    pub best_index: usize,
    pub trials: Vec<TrialRecord>,
}

/// Evaluates sampled configurations by validation MSE and keeps the best
/// (earliest trial on ties). Trainer errors are logged per trial.
pub fn tune<M, F>(trainer: F, spec: &TunerSpec, train: &SpectraDataset, val: &SpectraDataset) -> Result<TunerResult>
where
    M: Regressor,
    F: Fn(&ParamSet, &SpectraDataset) -> Result<M>,
{
    if spec.budget < 1 {
        return Err(Error::config("tuner budget must be at least 1"));
    }
    if val.is_empty() {
        return Err(Error::invalid("tuning needs a nonempty validation set"));
    }
    spec.space.validate()?;
    let configs = match spec.strategy {
        Strategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..spec.budget).map(|_| spec.space.sample(&mut rng)).collect()
        }
        Strategy::Grid => {
            let mut g = grid(&spec.space)?;
            g.truncate(spec.budget);
            g
        }
    };
    let mut trials = Vec::with_capacity(configs.len());
    let mut best: Option<(usize, f64)> = None;
    for (index, params) in configs.into_iter().enumerate() {
        let outcome = trainer(&params, train).and_then(|m| {
            let pred = m.try_predict(val.intensities())?;
            let err = mse(val.response().as_slice(), pred.as_slice())?;
            if err.is_finite() {
                Ok(err)
            } else {
                Err(Error::invalid("validation MSE is not finite"))
            }
        });
        match outcome {
            Ok(err) => {
                if best.is_none_or(|(_, b)| err < b) {
                    best = Some((index, err));
                }
                trials.push(TrialRecord {
                    index,
                    params,
                    val_mse: Some(err),
                    error: None,
                });
            }
            Err(e) => trials.push(TrialRecord {
                index,
                params,
                val_mse: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let (best_index, best_val_mse) = best.ok_or_else(|| Error::invalid("every tuning trial failed"))?;
    Ok(TunerResult {
        best: trials[best_index].params.clone(),
        best_val_mse,
        best_index,
        trials,
    })
}

fn texts(v: &[&str]) -> Vec<ParamValue> {
    v.iter().map(|&s| s.into()).collect()
}

/// Kernel, degree 1–4, γ ∈ [1e-4, 1], coef0 ∈ [0.01, 10], C ∈ [0.1, 1000], ε ∈ [0.01, 10].
pub fn svr_space() -> SearchSpace {
    SearchSpace(vec![
        Dimension::choice("kernel", texts(&["poly", "rbf", "sigmoid", "linear"])),
        Dimension::int("degree", 1, 4, 1),
        Dimension::float("gamma", 1e-4, 1.0, true),
        Dimension::float("coef0", 0.01, 10.0, true),
        Dimension::float("c", 0.1, 1000.0, true),
        Dimension::float("epsilon", 0.01, 10.0, true),
    ])
}

/// Hidden layers 1–10, units 32–8000 (step 32), learning rate, penalty,
/// initializer, batch size 32–100, epochs 100–1000 and the width pattern.
pub fn mlp_space() -> SearchSpace {
    SearchSpace(vec![
        Dimension::choice("hidden_activation", texts(&["relu", "sigmoid"])),
        Dimension::int("n_hidden", 1, 10, 1),
        Dimension::int("units", 32, 8000, 32),
        Dimension::choice("output_activation", texts(&["linear", "sigmoid"])),
        Dimension::choice("optimizer", texts(&["adam", "sgd", "rmsprop"])),
        Dimension::float("learning_rate", 1e-4, 1.0, true),
        Dimension::float("l2_penalty", 1e-4, 1e-2, true),
        Dimension::choice("weight_init", texts(&["random_normal", "glorot_uniform", "he_normal"])),
        Dimension::int("batch_size", 32, 100, 1),
        Dimension::int("epochs", 100, 1000, 1),
        Dimension::choice("pattern", texts(&["up", "down", "up-down", "down-up", "random"])),
        Dimension::float("turn", 0.0, 1.0, false),
        Dimension::int("arch_seed", 0, i32::MAX as i64, 1),
    ])
}

/// Tree count T ∈ [1, 200].
pub fn rf_space() -> SearchSpace {
    SearchSpace(vec![Dimension::int("n_trees", 1, 200, 1)])
}

/// Ridge penalty α ∈ [0.001, 1].
pub fn ridge_space() -> SearchSpace {
    SearchSpace(vec![Dimension::float("alpha", 0.001, 1.0, true)])
}

impl SvrHyperparams {
    pub fn from_params(p: &ParamSet) -> Result<Self> {
        let kind: KernelKind = p.text("kernel")?.parse()?;
        let degree = u32::try_from(p.int("degree")?).map_err(|_| Error::config("degree out of range"))?;
        let h = Self {
            kernel: KernelSpec {
                kind,
                gamma: p.f64("gamma")?,
                coef0: p.f64("coef0")?,
                degree,
            },
            c: p.f64("c")?,
            epsilon: p.f64("epsilon")?,
            ..Self::bo_default()
        };
        h.validate()?;
        Ok(h)
    }
}

impl RfHyperparams {
    pub fn from_params(p: &ParamSet, seed: u64) -> Result<Self> {
        let n_trees = usize::try_from(p.int("n_trees")?).map_err(|_| Error::config("n_trees out of range"))?;
        let h = Self {
            n_trees,
            seed,
            ..Self::default()
        };
        h.validate()?;
        Ok(h)
    }
}

fn parse_choice<T: for<'de> Deserialize<'de>>(p: &ParamSet, name: &str) -> Result<T> {
    let s = p.text(name)?;
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::config(format!("unknown value {s:?} for {name:?}")))
}

/// Builds the architecture and training settings for `n_inputs` features.
pub fn mlp_from_params(p: &ParamSet, n_inputs: usize) -> Result<(MlpArch, MlpHyperparams)> {
    let hidden_activation: Activation = parse_choice(p, "hidden_activation")?;
    let output_activation: Activation = parse_choice(p, "output_activation")?;
    let pattern: ArchPattern = parse_choice(p, "pattern")?;
    let depth = usize::try_from(p.int("n_hidden")?).map_err(|_| Error::config("n_hidden out of range"))?;
    let base_width = usize::try_from(p.int("units")?).map_err(|_| Error::config("units out of range"))?;
    let turn = (p.f64("turn")? * depth.saturating_sub(1) as f64).round() as usize;
    let spec = ArchSpec {
        turn: Some(turn),
        seed: p.int("arch_seed")? as u64,
        ..ArchSpec::new(pattern, depth, base_width)
    };
    let hidden = gen_architecture(&spec)?;
    let arch = MlpArch::new(n_inputs, &hidden, hidden_activation, output_activation);
    let h = MlpHyperparams {
        optimizer: parse_choice::<Optimizer>(p, "optimizer")?,
        learning_rate: p.f64("learning_rate")?,
        batch_size: p.int("batch_size")? as usize,
        epochs: p.int("epochs")? as usize,
        l2_penalty: p.f64("l2_penalty")?,
        weight_init: parse_choice::<WeightInit>(p, "weight_init")?,
        ..MlpHyperparams::default()
    };
    arch.validate()?;
    h.validate()?;
    Ok((arch, h))
}
