use spectral_xai::harness::{
    emit_report, load_report, run_evaluation, CellStatus, DataSource, ExperimentConfig, ModelEntry, ModelSpec,
    ReportFormat, SelectionMethod, TradeoffTarget, CURVE_CSV, TABLE_CSV, TRADEOFF_CSV,
};
use spectral_xai::selectors::SubsetRule;
use spectral_xai::spectra::{BatchShift, Peak, ScenarioKind, SynthConfig};

fn small_synth(noiseless: bool) -> SynthConfig {
    let peak = |center, width, amplitude| Peak {
        center,
        width,
        amplitude,
    };
    let mut cfg = SynthConfig {
        m_features: 300,
        axis_range: (400.0, 1200.0),
        peaks: vec![
            peak(500.0, 10.0, 1.0),
            peak(700.0, 12.0, 1.2),
            peak(900.0, 9.0, 0.8),
            peak(1100.0, 14.0, 1.1),
        ],
        active_peaks: vec![1, 3],
        response_weights: vec![8.0, -5.0],
        interactions: vec![],
        ..SynthConfig::default()
    };
    if noiseless {
        cfg.noise_sd = 0.0;
        cfg.response_noise_sd = 0.0;
        cfg.batch_shift = BatchShift {
            baseline: 0.0,
            noise_scale: 1.0,
        };
    }
    cfg
}

fn ols() -> ModelEntry {
    ModelEntry::new("OLS", ModelSpec::Linear { alpha: 0.0 })
}

fn base_config(noiseless: bool) -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Synthetic {
            config: small_synth(noiseless),
            seed: 4,
        },
        n_repeats: 3,
        models: vec![ols()],
        subset_rule: SubsetRule::Count(30),
        curve_ks: vec![30, 60],
        tradeoff_k: 30,
        tradeoff: TradeoffTarget {
            model: "OLS".into(),
            scenario: ScenarioKind::Control,
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn noiseless_control_is_recovered_exactly_on_the_true_peaks() {
    let cfg = ExperimentConfig {
        scenarios: vec![ScenarioKind::Control],
        methods: vec![SelectionMethod::Expert],
        ..base_config(true)
    };
    let rep = run_evaluation(&cfg).unwrap();
    let cell = rep.cell(ScenarioKind::Control, "OLS", SelectionMethod::Expert).unwrap();
    assert_eq!(cell.status, CellStatus::Ok);
    assert_eq!(cell.n_runs, 3);
    let test = cell.test_mse.unwrap();
    assert!(test.mean < 1e-6, "test MSE {}", test.mean);
}

#[test]
fn single_repeat_has_zero_spread() {
    let cfg = ExperimentConfig {
        n_repeats: 1,
        scenarios: vec![ScenarioKind::Mixed],
        methods: vec![SelectionMethod::FullModel],
        models: vec![ModelEntry::new("ridge", ModelSpec::Linear { alpha: 0.1 })],
        ..base_config(false)
    };
    let rep = run_evaluation(&cfg).unwrap();
    assert_eq!(rep.cells.len(), 1);
    let cell = &rep.cells[0];
    assert_eq!(cell.train_mse.unwrap().sd, 0.0);
    assert_eq!(cell.test_mse.unwrap().sd, 0.0);
    assert_eq!(cell.n_features, Some(300.0));
}

#[test]
fn report_files_round_trip_and_line_up() {
    let methods = vec![
        SelectionMethod::FullModel,
        SelectionMethod::Expert,
        SelectionMethod::Ridge,
        SelectionMethod::Pca,
    ];
    let cfg = ExperimentConfig {
        methods: methods.clone(),
        ..base_config(false)
    };
    let rep = run_evaluation(&cfg).unwrap();
    assert_eq!(rep.cells.len(), 3 * methods.len());
    assert_eq!(rep.failed_cells(), 0);

    let dir = tempfile::tempdir().unwrap();
    emit_report(&rep, dir.path(), &[ReportFormat::Json, ReportFormat::Csv]).unwrap();
    assert_eq!(load_report(dir.path()).unwrap(), rep);

    let table = std::fs::read_to_string(dir.path().join(TABLE_CSV)).unwrap();
    assert_eq!(table.lines().count(), 1 + methods.len());
    // Expert, Ridge and PCA are ranked against the expert list; FullModel is not.
    let tradeoff = std::fs::read_to_string(dir.path().join(TRADEOFF_CSV)).unwrap();
    assert_eq!(tradeoff.lines().count(), 1 + 2);
    let curve = std::fs::read_to_string(dir.path().join(CURVE_CSV)).unwrap();
    assert_eq!(curve.lines().count(), 1 + 2 * 2);
}

#[test]
fn better_recovery_goes_with_lower_reduced_error_on_noiseless_data() {
    let methods = vec![
        SelectionMethod::Pca,
        SelectionMethod::Pls,
        SelectionMethod::Rf,
        SelectionMethod::Ridge,
    ];
    let cfg = ExperimentConfig {
        scenarios: vec![ScenarioKind::Control],
        methods: methods.clone(),
        models: vec![ModelEntry::new("ridge", ModelSpec::Linear { alpha: 1e-6 })],
        tradeoff: TradeoffTarget {
            model: "ridge".into(),
            scenario: ScenarioKind::Control,
        },
        ..base_config(true)
    };
    let rep = run_evaluation(&cfg).unwrap();
    let points: Vec<(f64, f64)> = rep.tradeoff.iter().map(|r| (r.correctness, r.test_mse_mean)).collect();
    assert_eq!(points.len(), methods.len());
    let rank = |v: Vec<f64>| -> Vec<f64> {
        v.iter()
            .map(|a| {
                v.iter().filter(|b| *b < a).count() as f64 + 0.5 * (v.iter().filter(|b| *b == a).count() - 1) as f64
            })
            .collect()
    };
    let rc = rank(points.iter().map(|p| p.0).collect());
    let re = rank(points.iter().map(|p| -p.1).collect());
    let mean = (methods.len() as f64 - 1.0) / 2.0;
    let cov: f64 = rc.iter().zip(&re).map(|(a, b)| (a - mean) * (b - mean)).sum();
    assert!(cov > 0.0, "correctness vs error points {points:?}");
}
