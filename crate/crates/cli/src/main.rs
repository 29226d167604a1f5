//! Command-line front end: synthetic data, evaluation runs, feature
//! selection, model fitting and explanation.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 data error,
//! 3 evaluation finished but some cells failed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spectral_xai::explainers::write_attributions;
use spectral_xai::harness::{
    emit_report, explain_model, fit_entry, holdout_split, load_report, rank_features, run_evaluation, ExperimentConfig,
    ModelEntry, ReportFormat, SelectionMethod,
};
use spectral_xai::metrics::write_expert;
use spectral_xai::models::{save_model, ModelFile};
use spectral_xai::selectors::{parse_subset, select_top, write_ranking, write_subset, SubsetRule};
use spectral_xai::spectra::{
    generate_synthetic, load_dataset, write_dataset, DatasetSchema, SpectraDataset, SynthConfig,
};
use spectral_xai::Error;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} evaluation cells failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Lib(Error::Config(_)) => 1,
            CliError::Lib(_) => 2,
            CliError::Partial { .. } => 3,
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "spectral-xai",
    version,
    about = "Explainable regression and feature selection for spectra"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic old/new spectra pair with its ground-truth feature list.
    Synth {
        /// Generator settings (JSON); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the repeated-split scenario evaluation.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Json, Format::Csv])]
        format: Vec<Format>,
    },
    /// Rank the features of a dataset and keep the top k.
    Select {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: SelectionMethod,
        #[arg(long)]
        k: usize,
        /// Subset file, one wavenumber per line.
        #[arg(long)]
        out: PathBuf,
        /// Also write the full ranking as CSV.
        #[arg(long)]
        ranking: Option<PathBuf>,
        /// Experiment config supplying explainer and component settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit one model and save it as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Preset name (LR, SVR-BO, SVR-FT, NN) or a JSON model entry.
        #[arg(long)]
        model: String,
        /// Restrict the model to the wavenumbers listed in this file.
        #[arg(long)]
        subset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Explain a saved model on the rows of a dataset.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        method: ExplainMethod,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a stored evaluation report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExplainMethod {
    Shap,
    Lime,
    Surrogate,
}

impl From<ExplainMethod> for SelectionMethod {
    fn from(m: ExplainMethod) -> Self {
        match m {
            ExplainMethod::Shap => SelectionMethod::Shap,
            ExplainMethod::Lime => SelectionMethod::Lime,
            ExplainMethod::Surrogate => SelectionMethod::Gs,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> CliResult {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synth { config, out, seed } => synth(config.as_deref(), &out, seed),
        Command::Evaluate {
            config,
            out,
            seed,
            format,
        } => evaluate(&config, &out, seed, &format),
        Command::Select {
            data,
            method,
            k,
            out,
            ranking,
            config,
            seed,
        } => select(&data, method, k, &out, ranking.as_deref(), config.as_deref(), seed),
        Command::Fit {
            data,
            model,
            subset,
            out,
            seed,
        } => fit(&data, &model, subset.as_deref(), &out, seed),
        Command::Explain {
            model,
            data,
            method,
            out,
            config,
            seed,
        } => explain(&model, &data, method, &out, config.as_deref(), seed),
        Command::Report { input, format } => report(&input, format),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(io_err(path))
}

fn load_experiment(path: Option<&Path>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn synth(config: Option<&Path>, out: &Path, seed: u64) -> CliResult {
    let cfg: SynthConfig = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    let s = generate_synthetic(&cfg, seed)?;
    create_dir(out)?;
    for (name, ds) in [("old.csv", &s.old), ("new.csv", &s.new)] {
        let path = out.join(name);
        let mut w = create(&path)?;
        write_dataset(ds, &mut w)?;
        w.flush().map_err(io_err(&path))?;
    }
    let path = out.join("expert.txt");
    let mut w = create(&path)?;
    write_expert(&s.truth.wavenumbers, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&path))?;
    write_json(&out.join("truth.json"), &s.truth)?;
    eprintln!(
        "wrote {} old and {} new spectra ({} features) to {}",
        s.old.n_samples(),
        s.new.n_samples(),
        s.old.n_features(),
        out.display()
    );
    Ok(())
}

fn evaluate(config: &Path, out: &Path, seed: Option<u64>, formats: &[Format]) -> CliResult {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    cfg.validate()?;
    let rep = run_evaluation(&cfg)?;
    create_dir(out)?;
    let formats: Vec<ReportFormat> = formats.iter().map(|&f| f.into()).collect();
    for p in emit_report(&rep, out, &formats)? {
        eprintln!("wrote {}", p.display());
    }
    match rep.failed_cells() {
        0 => Ok(()),
        failed => Err(CliError::Partial {
            failed,
            total: rep.cells.len(),
        }),
    }
}

fn load_data(path: &Path) -> Result<SpectraDataset, Error> {
    load_dataset(path, &DatasetSchema::default())
}

fn select(
    data: &Path,
    method: SelectionMethod,
    k: usize,
    out: &Path,
    ranking_out: Option<&Path>,
    config: Option<&Path>,
    seed: u64,
) -> CliResult {
    if !method.ranks() {
        return Err(CliError::Usage(format!("{method} does not rank features")));
    }
    let cfg = load_experiment(config)?;
    let ds = load_data(data)?;
    let r = rank_features(method, &ds, None, &cfg, seed)?;
    let subset = select_top(&r.ranking, SubsetRule::Count(k), ds.axis())?;
    let mut w = create(out)?;
    write_subset(&subset, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(out))?;
    if let Some(p) = ranking_out {
        let mut w = create(p)?;
        write_ranking(&r.ranking, ds.axis(), &mut w)
            .and_then(|_| w.flush())
            .map_err(io_err(p))?;
    }
    if let Some(f) = r.fidelity {
        eprintln!("surrogate fidelity R² = {f:.4}");
    }
    if let Some(p) = r.n_components {
        eprintln!("{method} components: {p}");
    }
    Ok(())
}

fn model_entry(spec: &str) -> Result<ModelEntry, Error> {
    let preset = [
        ModelEntry::linear(),
        ModelEntry::svr_bo(),
        ModelEntry::svr_fine_tuned(),
        ModelEntry::mlp(),
    ]
    .into_iter()
    .find(|e| e.name.eq_ignore_ascii_case(spec));
    if let Some(e) = preset {
        return Ok(e);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Config(format!("{spec:?} is neither a model preset nor a file")));
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{spec}: {e}")))
}

fn fit(data: &Path, model: &str, subset: Option<&Path>, out: &Path, seed: u64) -> CliResult {
    let entry = model_entry(model)?;
    let full = load_data(data)?;
    let indices = match subset {
        Some(p) => {
            let file = File::open(p).map_err(io_err(p))?;
            Some(parse_subset(file, full.axis())?.indices)
        }
        None => None,
    };
    let ds = match &indices {
        Some(idx) => full.select_features(idx)?,
        None => full.clone(),
    };
    let fitted = if entry.tune.is_some() {
        let (train, val) = holdout_split(&ds, seed)?;
        fit_entry(&entry, &train, &val, seed)?
    } else {
        fit_entry(&entry, &ds, &ds, seed)?
    };
    let file = ModelFile::new(fitted, full.axis().values().to_vec(), indices)?;
    save_model(out, &file)?;
    eprintln!(
        "saved {} model {:?} to {}",
        file.model.kind(),
        entry.name,
        out.display()
    );
    Ok(())
}

fn explain(
    model: &Path,
    data: &Path,
    method: ExplainMethod,
    out: &Path,
    config: Option<&Path>,
    seed: u64,
) -> CliResult {
    let cfg = load_experiment(config)?;
    let f = spectral_xai::models::load_model(model)?;
    let ds = load_data(data)?;
    let same_axis = f.wavenumbers.len() == ds.n_features()
        && f.wavenumbers
            .iter()
            .zip(ds.axis().values())
            .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
    if !same_axis {
        return Err(Error::InvalidInput("data axis differs from the axis the model was fitted on".into()).into());
    }
    let e = explain_model(method.into(), &f, ds.intensities(), &cfg.explain, seed)?;
    create_dir(out)?;
    let path = out.join("ranking.csv");
    let mut w = create(&path)?;
    write_ranking(&e.ranking, ds.axis(), &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&path))?;
    if !e.attributions.is_empty() {
        let path = out.join("attributions.csv");
        let mut w = create(&path)?;
        write_attributions(&e.attributions, ds.axis(), &mut w)
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
    }
    if let Some(s) = &e.surrogate {
        write_json(&out.join("surrogate.json"), s)?;
        eprintln!("surrogate fidelity R² = {:.4}", s.fidelity);
    }
    Ok(())
}

fn report(dir: &Path, format: Format) -> CliResult {
    let rep = load_report(dir)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    match format {
        Format::Json => writeln!(w, "{}", rep.to_json()?),
        Format::Csv => rep.write_table_csv(&mut w),
    }
    .or_else(|e| {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            Ok(())
        } else {
            Err(e)
        }
    })
    .map_err(|e| Error::Io {
        path: "<stdout>".into(),
        source: e,
    })?;
    Ok(())
}
