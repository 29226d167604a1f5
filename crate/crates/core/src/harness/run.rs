use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{DataSource, ExperimentConfig, ExplainSettings, ModelEntry, ModelSpec, SelectionMethod};
use super::report::{CellStatus, DatasetSummary, EvalCell, EvalReport, MeanSd, MethodSummary, REPORT_FORMAT_VERSION};
use crate::explainers::{
    lime_attributions, lime_rank_from, shap_attributions, shap_rank_from, stratified_background, surrogate_fit,
    surrogate_rank, Attribution, LimeConfig, ShapConfig, SurrogateModel, EXACT_LIMIT,
};
use crate::metrics::{
    correctness, correctness_curve, mse, tradeoff, BinScheme, ExpertFeatureSet, ExpertSource, TradeoffRow,
};
use crate::models::{
    mlp_fit, mlp_from_params, ols_fit, rf_fit, rf_space, ridge_fit, ridge_space, svr_fit, svr_space, tune, MlpArch,
    Regressor, RfHyperparams, SavedModel, SvrHyperparams, TunerSpec,
};
use crate::selectors::{choose_components, rf_rank, ridge_rank, select_top, ComponentKind, FeatureRanking};
use crate::spectra::{
    generate_synthetic, load_dataset, make_scenario, trim_axis, Batch, ScenarioKind, ScenarioSpec, SpectraDataset,
    StandardizationParams,
};
use crate::{linalg, Error, Matrix, Result};

/// Penalty of the ridge ranking model.
pub const RIDGE_RANK_ALPHA: f64 = 0.001;

/// Old and new batches plus the expert locations, after trimming.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub old: SpectraDataset,
    pub new: SpectraDataset,
    pub expert: Option<ExpertFeatureSet>,
}

pub fn load_experiment_data(cfg: &ExperimentConfig) -> Result<ExperimentData> {
    let (mut old, mut new, mut expert) = match &cfg.data {
        DataSource::Synthetic { config, seed } => {
            let s = generate_synthetic(config, *seed)?;
            let expert = ExpertFeatureSet::new(s.truth.wavenumbers.clone(), ExpertSource::Synthetic);
            (s.old, s.new, Some(expert))
        }
        DataSource::Files {
            old,
            new,
            schema,
            expert,
        } => {
            let first = load_dataset(old, schema)?;
            let (o, n) = match new {
                Some(p) => (first, load_dataset(p, schema)?),
                None => split_batches(&first)?,
            };
            let e = expert.as_ref().map(ExpertFeatureSet::load).transpose()?;
            (o, n, e)
        }
    };
    if let Some((lo, hi)) = cfg.trim {
        old = trim_axis(&old, lo, hi)?;
        new = trim_axis(&new, lo, hi)?;
        if let Some(e) = expert.as_mut() {
            e.wavenumbers.retain(|&w| w >= lo && w <= hi);
        }
    }
    if old.axis() != new.axis() {
        return Err(Error::invalid("old and new batches use different wavenumber axes"));
    }
    if let Some(e) = &expert {
        e.check_axis(old.axis())?;
    }
    Ok(ExperimentData { old, new, expert })
}

fn split_batches(ds: &SpectraDataset) -> Result<(SpectraDataset, SpectraDataset)> {
    let pick = |b: Batch| -> Vec<usize> { (0..ds.n_samples()).filter(|&i| ds.batch()[i] == b).collect() };
    let (o, n) = (pick(Batch::Old), pick(Batch::New));
    if o.is_empty() || n.is_empty() {
        return Err(Error::invalid(
            "a single data file must contain both old and new batch rows",
        ));
    }
    Ok((ds.subset_rows(&o), ds.subset_rows(&n)))
}

/// Parameter count, support-vector count or node count, by model family.
pub fn complexity(m: &SavedModel) -> usize {
    match m {
        SavedModel::Linear(l) => l.n_parameters(),
        SavedModel::Svr(s) => s.n_support(),
        SavedModel::Mlp(n) => n.n_parameters(),
        SavedModel::RandomForest(f) => f.n_nodes(),
    }
}

/// Fits one model; `seed` perturbs the model's own seeds so repeats differ.
pub fn fit_model(spec: &ModelSpec, x: &Matrix, y: &crate::Vector, seed: u64) -> Result<SavedModel> {
    Ok(match spec {
        ModelSpec::Linear { alpha } if *alpha == 0.0 => SavedModel::Linear(ols_fit(x, y)?),
        ModelSpec::Linear { alpha } => SavedModel::Linear(ridge_fit(x, y, *alpha)?),
        ModelSpec::Svr(h) => SavedModel::Svr(svr_fit(x, y, h)?),
        ModelSpec::Mlp(s) => {
            let arch = MlpArch::new(x.ncols(), &s.hidden, s.hidden_activation, s.output_activation);
            let mut h = s.train.clone();
            h.init_seed = h.init_seed.wrapping_add(seed);
            h.shuffle_seed = h.shuffle_seed.wrapping_add(seed);
            SavedModel::Mlp(mlp_fit(x, y, &arch, &h)?)
        }
        ModelSpec::RandomForest(h) => SavedModel::RandomForest(rf_fit(
            x,
            y,
            &RfHyperparams {
                seed: h.seed.wrapping_add(seed),
                ..h.clone()
            },
        )?),
    })
}

/// Fits a roster entry on `train`, searching hyperparameters on `val` when requested.
pub fn fit_entry(entry: &ModelEntry, train: &SpectraDataset, val: &SpectraDataset, seed: u64) -> Result<SavedModel> {
    let Some(t) = entry.tune else {
        return fit_model(&entry.model, train.intensities(), train.response(), seed);
    };
    let spec = |space| TunerSpec {
        space,
        budget: t.budget,
        strategy: t.strategy,
        seed,
    };
    let best = match &entry.model {
        ModelSpec::Linear { .. } => {
            let r = tune(
                |p, d| {
                    Ok(SavedModel::Linear(ridge_fit(
                        d.intensities(),
                        d.response(),
                        p.f64("alpha")?,
                    )?))
                },
                &spec(ridge_space()),
                train,
                val,
            )?;
            ModelSpec::Linear {
                alpha: r.best.f64("alpha")?,
            }
        }
        ModelSpec::Svr(base) => {
            let keep = |p: &crate::models::ParamSet| -> Result<SvrHyperparams> {
                let h = SvrHyperparams::from_params(p)?;
                Ok(SvrHyperparams {
                    max_iter: base.max_iter,
                    tol: base.tol,
                    standardize: base.standardize,
                    ..h
                })
            };
            let r = tune(
                |p, d| svr_fit(d.intensities(), d.response(), &keep(p)?),
                &spec(svr_space()),
                train,
                val,
            )?;
            ModelSpec::Svr(keep(&r.best)?)
        }
        ModelSpec::RandomForest(base) => {
            let keep = |p: &crate::models::ParamSet| -> Result<RfHyperparams> {
                let h = RfHyperparams::from_params(p, base.seed.wrapping_add(seed))?;
                Ok(RfHyperparams {
                    n_trees: h.n_trees,
                    ..base.clone()
                })
            };
            let r = tune(
                |p, d| rf_fit(d.intensities(), d.response(), &keep(p)?),
                &spec(rf_space()),
                train,
                val,
            )?;
            ModelSpec::RandomForest(keep(&r.best)?)
        }
        ModelSpec::Mlp(_) => {
            let m = train.n_features();
            let r = tune(
                |p, d| {
                    let (arch, h) = mlp_from_params(p, m)?;
                    mlp_fit(d.intensities(), d.response(), &arch, &h)
                },
                &spec(crate::models::mlp_space()),
                train,
                val,
            )?;
            let (arch, h) = mlp_from_params(&r.best, m)?;
            return Ok(SavedModel::Mlp(mlp_fit(
                train.intensities(),
                train.response(),
                &arch,
                &h,
            )?));
        }
    };
    fit_model(&best, train.intensities(), train.response(), seed)
}

/// A ranking plus the diagnostics reported next to it.
#[derive(Debug, Clone)]
pub struct MethodRanking {
    pub ranking: FeatureRanking,
    pub n_components: Option<usize>,
    /// R² of the global surrogate (GS only).
    pub fidelity: Option<f64>,
}

impl MethodRanking {
    fn plain(ranking: FeatureRanking) -> Self {
        Self {
            ranking,
            n_components: None,
            fidelity: None,
        }
    }
}

/// Ranks the features of `train` with one of the ranking methods.
///
/// PLS picks its component count on `val`; without one it holds out a seeded
/// fifth of `train`.
pub fn rank_features(
    method: SelectionMethod,
    train: &SpectraDataset,
    val: Option<&SpectraDataset>,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<MethodRanking> {
    let x = train.intensities();
    let y = train.response();
    match method {
        SelectionMethod::Pca => {
            let (p, m) = choose_components(ComponentKind::Pca, x, y, cfg.max_components, None)?;
            Ok(MethodRanking {
                ranking: m.ranking(),
                n_components: Some(p),
                fidelity: None,
            })
        }
        SelectionMethod::Pls => {
            let (p, m) = match val {
                Some(v) => choose_components(
                    ComponentKind::Pls,
                    x,
                    y,
                    cfg.max_components,
                    Some((v.intensities(), v.response())),
                )?,
                None => {
                    let (fit, hold) = holdout(train, seed)?;
                    choose_components(
                        ComponentKind::Pls,
                        fit.intensities(),
                        fit.response(),
                        cfg.max_components,
                        Some((hold.intensities(), hold.response())),
                    )?
                }
            };
            Ok(MethodRanking {
                ranking: m.ranking(),
                n_components: Some(p),
                fidelity: None,
            })
        }
        SelectionMethod::Rf => {
            let model = rf_fit(
                x,
                y,
                &RfHyperparams {
                    seed,
                    ..RfHyperparams::default()
                },
            )?;
            Ok(MethodRanking::plain(rf_rank(&model)))
        }
        SelectionMethod::Ridge => {
            let z = StandardizationParams::fit(x)?.apply(x)?;
            Ok(MethodRanking::plain(ridge_rank(&ridge_fit(&z, y, RIDGE_RANK_ALPHA)?)))
        }
        SelectionMethod::Shap | SelectionMethod::Gs | SelectionMethod::Lime => {
            let f = fit_model(&cfg.explain.black_box, x, y, seed)?;
            explain_rank(method, &f, x, cfg, seed)
        }
        SelectionMethod::Expert | SelectionMethod::FullModel => {
            Err(Error::config(format!("{method} does not produce a ranking")))
        }
    }
}

fn explain_rank(
    method: SelectionMethod,
    f: &dyn Regressor,
    x: &Matrix,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<MethodRanking> {
    let e = explain_model(method, f, x, &cfg.explain, seed)?;
    Ok(MethodRanking {
        ranking: e.ranking,
        n_components: None,
        fidelity: e.fidelity,
    })
}

/// Output of a model-agnostic explainer run over a set of rows.
#[derive(Debug, Clone)]
pub struct Explanation {
    pub ranking: FeatureRanking,
    /// Local attributions of the explained rows; empty for the global surrogate.
    pub attributions: Vec<Attribution>,
    pub fidelity: Option<f64>,
    pub surrogate: Option<SurrogateModel>,
}

/// Explains `f` on the rows of `x` with SHAP, LIME or a global surrogate.
///
/// SHAP and LIME explain a seeded subsample of at most
/// `shap_instances` / `lime_instances` rows.
pub fn explain_model(
    method: SelectionMethod,
    f: &dyn Regressor,
    x: &Matrix,
    e: &ExplainSettings,
    seed: u64,
) -> Result<Explanation> {
    let n = x.nrows();
    let m = x.ncols();
    if n == 0 {
        return Err(Error::invalid("nothing to explain: no rows"));
    }
    let subsample = |k: usize, stream: u64| -> Matrix {
        if k >= n {
            return x.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut idx = index::sample(&mut rng, n, k).into_vec();
        idx.sort_unstable();
        linalg::select_rows(x, &idx)
    };
    let local = |ranking: FeatureRanking, attributions| Explanation {
        ranking,
        attributions,
        fidelity: None,
        surrogate: None,
    };
    match method {
        SelectionMethod::Shap => {
            let bg = stratified_background(x, f, e.background_size.min(n), e.background_strata, seed)?;
            let background = linalg::select_rows(x, &bg);
            let shap = if m <= EXACT_LIMIT {
                ShapConfig {
                    seed,
                    ..ShapConfig::exact(background)
                }
            } else {
                ShapConfig::sampled(background, e.shap_permutations, seed)
            };
            let attrs = shap_attributions(f, &subsample(e.shap_instances, 1), &shap)?;
            Ok(local(shap_rank_from(&attrs, m), attrs))
        }
        SelectionMethod::Gs => {
            let s = surrogate_fit(f, x)?;
            Ok(Explanation {
                ranking: surrogate_rank(&s),
                attributions: Vec::new(),
                fidelity: Some(s.fidelity),
                surrogate: Some(s),
            })
        }
        SelectionMethod::Lime => {
            let lime = LimeConfig {
                n_perturbations: e.lime_perturbations,
                ..LimeConfig::new(StandardizationParams::fit(x)?, seed)
            };
            let attrs = lime_attributions(f, &subsample(e.lime_instances, 2), &lime)?;
            Ok(local(lime_rank_from(&attrs, m, e.lime_k.min(m))?, attrs))
        }
        other => Err(Error::config(format!("{other} is not a model-agnostic explainer"))),
    }
}

/// Seeded 4:1 split of the rows of `ds` (fit, holdout).
pub fn holdout_split(ds: &SpectraDataset, seed: u64) -> Result<(SpectraDataset, SpectraDataset)> {
    holdout(ds, seed)
}

fn holdout(ds: &SpectraDataset, seed: u64) -> Result<(SpectraDataset, SpectraDataset)> {
    let n = ds.n_samples();
    let n_hold = n / 5;
    if n_hold < 1 || n - n_hold < 3 {
        return Err(Error::invalid("too few rows for an internal holdout"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut fit, mut hold) = (perm[n_hold..].to_vec(), perm[..n_hold].to_vec());
    fit.sort_unstable();
    hold.sort_unstable();
    Ok((ds.subset_rows(&fit), ds.subset_rows(&hold)))
}

fn expert_indices(expert: Option<&ExpertFeatureSet>, ds: &SpectraDataset) -> Result<Vec<usize>> {
    let e = expert.ok_or_else(|| Error::config("the Expert method needs an expert feature file"))?;
    let mut idx: Vec<usize> = e.wavenumbers.iter().map(|&w| ds.axis().nearest_index(w)).collect();
    idx.sort_unstable();
    idx.dedup();
    if idx.is_empty() {
        return Err(Error::invalid("expert feature set is empty"));
    }
    Ok(idx)
}

/// One (model, method) outcome within a single job.
#[derive(Debug, Clone)]
struct RunRecord {
    train_mse: f64,
    test_mse: f64,
    fit_time: f64,
    complexity: usize,
    n_features: usize,
}

struct JobOutput {
    scenario: usize,
    /// `[method][model]`
    runs: Vec<Vec<std::result::Result<RunRecord, String>>>,
    selection_time: Vec<f64>,
}

fn run_job(data: &ExperimentData, cfg: &ExperimentConfig, repeat: usize, scenario: usize) -> JobOutput {
    let seed = cfg.base_seed.wrapping_add(repeat as u64);
    let kind = cfg.scenarios[scenario];
    let n_models = cfg.models.len();
    let split = match make_scenario(&data.old, &data.new, &ScenarioSpec::new(kind, seed)) {
        Ok(s) => s,
        Err(e) => {
            let msg = format!("repeat {repeat}: split failed: {e}");
            return JobOutput {
                scenario,
                runs: vec![vec![Err(msg); n_models]; cfg.methods.len()],
                selection_time: vec![0.0; cfg.methods.len()],
            };
        }
    };
    let mut runs = Vec::with_capacity(cfg.methods.len());
    let mut selection_time = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let t0 = Instant::now();
        let subset = match method {
            SelectionMethod::FullModel => Ok((0..split.train.n_features()).collect::<Vec<_>>()),
            SelectionMethod::Expert => expert_indices(data.expert.as_ref(), &split.train),
            _ => rank_features(method, &split.train, Some(&split.val), cfg, seed)
                .and_then(|r| select_top(&r.ranking, cfg.subset_rule, split.train.axis()))
                .map(|s| s.indices),
        };
        selection_time.push(t0.elapsed().as_secs_f64());
        let subset = match subset {
            Ok(s) => s,
            Err(e) => {
                runs.push(vec![
                    Err(format!("repeat {repeat}: {method} selection failed: {e}"));
                    n_models
                ]);
                continue;
            }
        };
        let row: Vec<_> = cfg
            .models
            .iter()
            .map(|entry| {
                fit_and_score(entry, &split, &subset, seed).map_err(|e| format!("repeat {repeat}: {}: {e}", entry.name))
            })
            .collect();
        runs.push(row);
    }
    JobOutput {
        scenario,
        runs,
        selection_time,
    }
}

fn fit_and_score(
    entry: &ModelEntry,
    split: &crate::spectra::ScenarioSplit,
    subset: &[usize],
    seed: u64,
) -> Result<RunRecord> {
    let train = split.train.select_features(subset)?;
    let val = split.val.select_features(subset)?;
    let t0 = Instant::now();
    let model = fit_entry(entry, &train, &val, seed)?;
    let fit_time = t0.elapsed().as_secs_f64();
    let train_pred = model.try_predict(train.intensities())?;
    let train_mse = mse(train.response().as_slice(), train_pred.as_slice())?;
    // The test partition is opened only here, after fitting.
    let test = split.test.reveal().select_features(subset)?;
    let test_pred = model.try_predict(test.intensities())?;
    let test_mse = mse(test.response().as_slice(), test_pred.as_slice())?;
    if !train_mse.is_finite() || !test_mse.is_finite() {
        return Err(Error::invalid("non-finite MSE"));
    }
    Ok(RunRecord {
        train_mse,
        test_mse,
        fit_time,
        complexity: complexity(&model),
        n_features: subset.len(),
    })
}

/// Runs the full protocol; per-cell failures are recorded, not raised.
pub fn run_evaluation(cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(|| run_inner(cfg)),
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &ExperimentConfig) -> Result<EvalReport> {
    let start = Instant::now();
    let data = load_experiment_data(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.n_repeats)
        .flat_map(|r| (0..cfg.scenarios.len()).map(move |s| (r, s)))
        .collect();
    // Collected in job order, so aggregation is independent of scheduling.
    let outputs: Vec<JobOutput> = jobs.par_iter().map(|&(r, s)| run_job(&data, cfg, r, s)).collect();

    let mut cells = Vec::new();
    for (si, &scenario) in cfg.scenarios.iter().enumerate() {
        for (mi, entry) in cfg.models.iter().enumerate() {
            for (ki, &method) in cfg.methods.iter().enumerate() {
                let runs: Vec<_> = outputs
                    .iter()
                    .filter(|o| o.scenario == si)
                    .map(|o| &o.runs[ki][mi])
                    .collect();
                let sel: f64 = outputs
                    .iter()
                    .filter(|o| o.scenario == si)
                    .map(|o| o.selection_time[ki])
                    .sum();
                cells.push(aggregate_cell(scenario, &entry.name, method, &runs, sel));
            }
        }
    }

    let (methods, correctness_rows, tradeoff_rows) = correctness_section(&data, cfg, &cells)?;
    let scheme = bin_scheme(cfg, &data.old)?;
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        crate_version: crate::VERSION.to_string(),
        config: cfg.clone(),
        dataset: DatasetSummary {
            n_old: data.old.n_samples(),
            n_new: data.new.n_samples(),
            n_features: data.old.n_features(),
            axis_lo: data.old.axis().lo(),
            axis_hi: data.old.axis().hi(),
            bin_width: scheme.width,
            n_expert: data.expert.as_ref().map(|e| e.wavenumbers.len()),
        },
        cells,
        methods,
        correctness: correctness_rows,
        tradeoff: tradeoff_rows,
        total_wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn bin_scheme(cfg: &ExperimentConfig, ds: &SpectraDataset) -> Result<BinScheme> {
    match cfg.bin_width {
        Some(w) => BinScheme::new(w, ds.axis().lo()),
        None => Ok(BinScheme::for_axis(ds.axis())),
    }
}

fn aggregate_cell(
    scenario: ScenarioKind,
    model: &str,
    method: SelectionMethod,
    runs: &[&std::result::Result<RunRecord, String>],
    selection_time: f64,
) -> EvalCell {
    let ok: Vec<&RunRecord> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let errors: Vec<String> = runs.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    let fit_total: f64 = ok.iter().map(|r| r.fit_time).sum();
    let complete = errors.is_empty() && !ok.is_empty();
    let stat =
        |f: &dyn Fn(&RunRecord) -> f64| complete.then(|| MeanSd::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>()));
    EvalCell {
        scenario,
        model: model.to_string(),
        method,
        status: if complete { CellStatus::Ok } else { CellStatus::Failed },
        n_runs: ok.len(),
        train_mse: stat(&|r| r.train_mse),
        test_mse: stat(&|r| r.test_mse),
        complexity: stat(&|r| r.complexity as f64).map(|s| s.mean),
        n_features: stat(&|r| r.n_features as f64).map(|s| s.mean),
        wall_time_s: fit_total + selection_time,
        mean_fit_time_s: if ok.is_empty() {
            0.0
        } else {
            fit_total / ok.len() as f64
        },
        errors,
    }
}

type Correctness = (
    Vec<MethodSummary>,
    Vec<crate::metrics::CorrectnessResult>,
    Vec<TradeoffRow>,
);

/// Rankings on the whole old pool, their correctness curves and the trade-off table.
fn correctness_section(data: &ExperimentData, cfg: &ExperimentConfig, cells: &[EvalCell]) -> Result<Correctness> {
    let axis = data.old.axis();
    let scheme = bin_scheme(cfg, &data.old)?;
    let ks: Vec<usize> = cfg.curve_ks.iter().copied().filter(|&k| k <= axis.len()).collect();
    let k_trade = cfg.tradeoff_k.min(axis.len());
    let ranked: Vec<SelectionMethod> = cfg.methods.iter().copied().filter(|m| m.ranks()).collect();
    let results: Vec<(SelectionMethod, f64, Result<MethodRanking>)> = ranked
        .par_iter()
        .map(|&m| {
            let t0 = Instant::now();
            let r = rank_features(m, &data.old, None, cfg, cfg.base_seed);
            (m, t0.elapsed().as_secs_f64(), r)
        })
        .collect();
    let mut summaries = Vec::new();
    let mut curve = Vec::new();
    let mut trade = Vec::new();
    let target = cfg
        .models
        .iter()
        .find(|m| m.name == cfg.tradeoff.model)
        .or(cfg.models.first())
        .map(|m| m.name.as_str());
    for (method, secs, r) in results {
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                summaries.push(MethodSummary::failed(method, secs, e.to_string()));
                continue;
            }
        };
        let mut s = MethodSummary {
            method,
            ranking_time_s: secs,
            n_components: r.n_components,
            fidelity: r.fidelity,
            top_wavenumbers: r.ranking.top(k_trade).iter().map(|&j| axis.values()[j]).collect(),
            correctness_at_k: None,
            error: None,
        };
        if let Some(expert) = &data.expert {
            if !ks.is_empty() {
                curve.extend(correctness_curve(&r.ranking, expert, &ks, &scheme, axis)?);
            }
            let c = correctness(&r.ranking, expert, k_trade, &scheme, axis)?;
            s.correctness_at_k = Some(c.jaccard);
            let cell = cells.iter().find(|c| {
                Some(c.model.as_str()) == target && c.scenario == cfg.tradeoff.scenario && c.method == method
            });
            if let Some(test) = cell.and_then(|c| c.test_mse) {
                trade.push(TradeoffRow {
                    method: method.name().to_string(),
                    correctness: c.jaccard,
                    test_mse_mean: test.mean,
                    test_mse_sd: test.sd,
                });
            }
        }
        summaries.push(s);
    }
    let trade = if trade.is_empty() { trade } else { tradeoff(&trade)? };
    Ok((summaries, curve, trade))
}
