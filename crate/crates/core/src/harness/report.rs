use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SelectionMethod};
use crate::metrics::{write_curve_csv, write_tradeoff_csv, CorrectnessResult, TradeoffRow};
use crate::spectra::ScenarioKind;
use crate::{Error, Result};

/// Version of the report JSON layout.
pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(v: &[f64]) -> Self {
        let n = v.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// Aggregate over all repeats of one (scenario, model, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub scenario: ScenarioKind,
    pub model: String,
    pub method: SelectionMethod,
    pub status: CellStatus,
    /// Successful repeats.
    pub n_runs: usize,
    pub train_mse: Option<MeanSd>,
    pub test_mse: Option<MeanSd>,
    /// Mean support vectors, parameters or tree nodes.
    pub complexity: Option<f64>,
    pub n_features: Option<f64>,
    /// Selection plus fitting time summed over repeats.
    pub wall_time_s: f64,
    pub mean_fit_time_s: f64,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_old: usize,
    pub n_new: usize,
    pub n_features: usize,
    pub axis_lo: f64,
    pub axis_hi: f64,
    pub bin_width: f64,
    pub n_expert: Option<usize>,
}

/// Full-pool ranking of one method and what it was judged on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: SelectionMethod,
    pub ranking_time_s: f64,
    pub n_components: Option<usize>,
    pub fidelity: Option<f64>,
    /// Top-`tradeoff_k` wavenumbers in rank order.
    pub top_wavenumbers: Vec<f64>,
    pub correctness_at_k: Option<f64>,
    pub error: Option<String>,
}

impl MethodSummary {
    pub(crate) fn failed(method: SelectionMethod, secs: f64, error: String) -> Self {
        Self {
            method,
            ranking_time_s: secs,
            n_components: None,
            fidelity: None,
            top_wavenumbers: Vec::new(),
            correctness_at_k: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub cells: Vec<EvalCell>,
    pub methods: Vec<MethodSummary>,
    pub correctness: Vec<CorrectnessResult>,
    pub tradeoff: Vec<TradeoffRow>,
    pub total_wall_time_s: f64,
}

impl EvalReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellStatus::Failed).count()
    }

    pub fn cell(&self, scenario: ScenarioKind, model: &str, method: SelectionMethod) -> Option<&EvalCell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.model == model && c.method == method)
    }

    /// Copy with every timing field zeroed, for byte comparisons.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.total_wall_time_s = 0.0;
        for c in &mut r.cells {
            c.wall_time_s = 0.0;
            c.mean_fit_time_s = 0.0;
        }
        for m in &mut r.methods {
            m.ranking_time_s = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "report format version {} is not supported (expected {REPORT_FORMAT_VERSION})",
                r.format_version
            )));
        }
        Ok(r)
    }

    /// Table with one row per (model, method) and a column group per scenario.
    pub fn write_table_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let scenarios = &self.config.scenarios;
        let mut header = vec!["model".to_string(), "method".to_string()];
        for s in scenarios {
            for col in [
                "train_mse_mean",
                "train_mse_sd",
                "test_mse_mean",
                "test_mse_sd",
                "wall_time_s",
                "complexity",
            ] {
                header.push(format!("{}_{col}", s.name()));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        let mut rows: Vec<(&str, SelectionMethod)> = Vec::new();
        for c in &self.cells {
            if !rows.contains(&(c.model.as_str(), c.method)) {
                rows.push((c.model.as_str(), c.method));
            }
        }
        let num = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for (model, method) in rows {
            let mut line = vec![model.to_string(), method.name().to_string()];
            for &s in scenarios {
                match self.cell(s, model, method) {
                    Some(c) => {
                        line.push(num(c.train_mse.map(|m| m.mean)));
                        line.push(num(c.train_mse.map(|m| m.sd)));
                        line.push(num(c.test_mse.map(|m| m.mean)));
                        line.push(num(c.test_mse.map(|m| m.sd)));
                        line.push(c.wall_time_s.to_string());
                        line.push(num(c.complexity));
                    }
                    None => line.extend(std::iter::repeat_n(String::new(), 6)),
                }
            }
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub const REPORT_JSON: &str = "report.json";
pub const TABLE_CSV: &str = "table.csv";
pub const CURVE_CSV: &str = "correctness_curve.csv";
pub const TRADEOFF_CSV: &str = "tradeoff.csv";

/// Writes the report into `dir` (created if missing) and returns the written paths.
pub fn emit_report(rep: &EvalReport, dir: impl AsRef<Path>, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    if formats.contains(&ReportFormat::Json) {
        put(REPORT_JSON, rep.to_json()?.into_bytes())?;
    }
    if formats.contains(&ReportFormat::Csv) {
        let csv_err = |e: std::io::Error| Error::io(dir, e);
        let mut table = Vec::new();
        rep.write_table_csv(&mut table).map_err(csv_err)?;
        put(TABLE_CSV, table)?;
        let mut curve = Vec::new();
        write_curve_csv(&rep.correctness, &mut curve).map_err(csv_err)?;
        put(CURVE_CSV, curve)?;
        let mut trade = Vec::new();
        write_tradeoff_csv(&rep.tradeoff, &mut trade).map_err(csv_err)?;
        put(TRADEOFF_CSV, trade)?;
    }
    Ok(written)
}

pub fn load_report(dir: impl AsRef<Path>) -> Result<EvalReport> {
    let path = dir.as_ref().join(REPORT_JSON);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    EvalReport::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary() -> DatasetSummary {
        DatasetSummary {
            n_old: 10,
            n_new: 5,
            n_features: 4,
            axis_lo: 1.0,
            axis_hi: 4.0,
            bin_width: 2.0,
            n_expert: None,
        }
    }

    fn report(cells: Vec<EvalCell>) -> EvalReport {
        EvalReport {
            format_version: REPORT_FORMAT_VERSION,
            crate_version: crate::VERSION.into(),
            config: ExperimentConfig::default(),
            dataset: summary(),
            cells,
            methods: Vec::new(),
            correctness: Vec::new(),
            tradeoff: Vec::new(),
            total_wall_time_s: 1.5,
        }
    }

    fn cell() -> EvalCell {
        EvalCell {
            scenario: ScenarioKind::Mixed,
            model: "LR".into(),
            method: SelectionMethod::Rf,
            status: CellStatus::Ok,
            n_runs: 3,
            train_mse: Some(MeanSd::of(&[1.0, 2.0, 3.0])),
            test_mse: Some(MeanSd { mean: 4.25, sd: 0.1 }),
            complexity: Some(121.0),
            n_features: Some(120.0),
            wall_time_s: 0.7,
            mean_fit_time_s: 0.2,
            errors: Vec::new(),
        }
    }

    #[test]
    fn mean_sd() {
        let s = MeanSd::of(&[1.0, 2.0, 3.0]);
        assert_eq!((s.mean, s.sd), (2.0, 1.0));
        assert_eq!(MeanSd::of(&[5.0]).sd, 0.0);
    }

    #[test]
    fn empty_report_files() {
        let dir = tempfile::tempdir().unwrap();
        let rep = report(Vec::new());
        let files = emit_report(&rep, dir.path(), &[ReportFormat::Json, ReportFormat::Csv]).unwrap();
        assert_eq!(files.len(), 4);
        let table = fs::read_to_string(dir.path().join(TABLE_CSV)).unwrap();
        assert_eq!(table.lines().count(), 1);
        assert_eq!(load_report(dir.path()).unwrap(), rep);
    }

    #[test]
    fn one_cell_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rep = report(vec![cell()]);
        emit_report(&rep, dir.path(), &[ReportFormat::Json, ReportFormat::Csv]).unwrap();
        assert_eq!(load_report(dir.path()).unwrap(), rep);
        let table = fs::read_to_string(dir.path().join(TABLE_CSV)).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("LR,RF,"));
        // Control group empty, Mixed group filled.
        let cols: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cols[2], "");
        assert_eq!(cols[8], "2");
        assert_eq!(cols[10], "4.25");
    }

    #[test]
    fn timings_are_stripped() {
        let r = report(vec![cell()]).without_timings();
        assert_eq!(r.total_wall_time_s, 0.0);
        assert_eq!(r.cells[0].wall_time_s, 0.0);
        assert_eq!(r.cells[0].test_mse.unwrap().mean, 4.25);
    }

    #[test]
    fn version_is_checked() {
        let mut rep = report(Vec::new());
        rep.format_version = 99;
        assert!(EvalReport::from_json(&rep.to_json().unwrap()).is_err());
        assert!(EvalReport::from_json("{").is_err());
    }
}
