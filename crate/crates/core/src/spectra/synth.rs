use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Batch, SpectraDataset, WavenumberAxis, DEFAULT_RESOLUTION};
use crate::{Error, Matrix, Result, Vector};

/// Gaussian band: `amplitude · exp(-(ν - center)² / (2·width²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// Response term `coef · amp[a] · amp[b]` (a quadratic term when `a == b`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub a: usize,
    pub b: usize,
    pub coef: f64,
}

/// Distortion applied to the `new` batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchShift {
    /// Added to every intensity.
    pub baseline: f64,
    /// Multiplies the intensity noise standard deviation.
    pub noise_scale: f64,
}

impl Default for BatchShift {
    fn default() -> Self {
        Self {
            baseline: 0.05,
            noise_scale: 2.0,
        }
    }
}

impl BatchShift {
    pub const NONE: BatchShift = BatchShift {
        baseline: 0.0,
        noise_scale: 1.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub m_features: usize,
    pub axis_range: (f64, f64),
    pub resolution: f64,
    pub peaks: Vec<Peak>,
    pub active_peaks: Vec<usize>,
    pub response_weights: Vec<f64>,
    pub response_offset: f64,
    pub interactions: Vec<Interaction>,
    /// Log-normal spread of per-sample amplitudes around each base value.
    pub amplitude_spread: f64,
    pub noise_sd: f64,
    pub response_noise_sd: f64,
    pub batch_shift: BatchShift,
    pub n_old: usize,
    pub n_new: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let peak = |center, width, amplitude| Peak {
            center,
            width,
            amplitude,
        };
        Self {
            m_features: 1562,
            axis_range: (181.45, 3200.82),
            resolution: DEFAULT_RESOLUTION,
            peaks: vec![
                peak(285.0, 10.0, 0.8),
                peak(465.0, 12.0, 1.2),
                peak(620.0, 9.0, 0.6),
                peak(815.0, 14.0, 1.0),
                peak(1005.0, 8.0, 1.5),
                peak(1300.0, 15.0, 0.9),
                peak(1450.0, 12.0, 1.1),
                peak(1655.0, 10.0, 0.7),
                peak(2870.0, 18.0, 1.3),
                peak(2935.0, 14.0, 1.0),
            ],
            active_peaks: vec![1, 4, 6, 8],
            response_weights: vec![10.0, -6.0, 8.0, 7.0],
            response_offset: 24.0,
            interactions: vec![Interaction { a: 1, b: 6, coef: 2.0 }],
            amplitude_spread: 0.2,
            noise_sd: 0.02,
            response_noise_sd: 0.3,
            batch_shift: BatchShift::default(),
            n_old: 145,
            n_new: 100,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(msg));
        let (lo, hi) = self.axis_range;
        if self.m_features < 2 {
            return bad(format!("m_features must be at least 2, got {}", self.m_features));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("axis_range must satisfy lo < hi, got ({lo}, {hi})"));
        }
        for (k, p) in self.peaks.iter().enumerate() {
            if !(lo..=hi).contains(&p.center) {
                return bad(format!("peak {k} center {} lies outside the axis range", p.center));
            }
            if !(p.width > 0.0 && p.width.is_finite() && p.amplitude.is_finite()) {
                return bad(format!("peak {k} needs a positive width and finite amplitude"));
            }
        }
        if let Some(&a) = self.active_peaks.iter().find(|&&a| a >= self.peaks.len()) {
            return bad(format!("active peak {a} does not exist"));
        }
        if self.response_weights.len() != self.active_peaks.len() {
            return bad(format!(
                "{} response weights for {} active peaks",
                self.response_weights.len(),
                self.active_peaks.len()
            ));
        }
        if let Some(t) = self
            .interactions
            .iter()
            .find(|t| t.a >= self.peaks.len() || t.b >= self.peaks.len())
        {
            return bad(format!("interaction references missing peak ({}, {})", t.a, t.b));
        }
        let nonneg = [
            ("amplitude_spread", self.amplitude_spread),
            ("noise_sd", self.noise_sd),
            ("response_noise_sd", self.response_noise_sd),
            ("batch_shift.noise_scale", self.batch_shift.noise_scale),
        ];
        if let Some((name, v)) = nonneg.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return bad(format!("{name} must be non-negative, got {v}"));
        }
        if self.n_old == 0 {
            return bad("n_old must be at least 1".into());
        }
        Ok(())
    }

    pub fn axis(&self) -> Result<WavenumberAxis> {
        WavenumberAxis::linspace(self.axis_range.0, self.axis_range.1, self.m_features, self.resolution)
    }
}

/// Feature locations that truly drive the response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Axis indices within one width of an active-peak center, ascending.
    pub indices: Vec<usize>,
    pub wavenumbers: Vec<f64>,
    /// The same indices grouped per active peak (in `active_peaks` order).
    pub peak_regions: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpectra {
    pub old: SpectraDataset,
    pub new: SpectraDataset,
    pub truth: GroundTruth,
    /// Per-sample peak amplitudes (rows = samples, columns = peaks).
    pub old_amplitudes: Matrix,
    pub new_amplitudes: Matrix,
}

pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<SyntheticSpectra> {
    cfg.validate()?;
    let axis = cfg.axis()?;
    let w = axis.values();
    let profiles: Vec<Vec<f64>> = cfg
        .peaks
        .iter()
        .map(|p| {
            w.iter()
                .map(|&v| (-(v - p.center).powi(2) / (2.0 * p.width * p.width)).exp())
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (old, old_amplitudes) = draw_batch(cfg, &axis, &profiles, cfg.n_old, Batch::Old, BatchShift::NONE, &mut rng)?;
    let (new, new_amplitudes) = draw_batch(cfg, &axis, &profiles, cfg.n_new, Batch::New, cfg.batch_shift, &mut rng)?;

    let peak_regions: Vec<Vec<usize>> = cfg
        .active_peaks
        .iter()
        .map(|&k| {
            let p = cfg.peaks[k];
            (0..w.len()).filter(|&j| (w[j] - p.center).abs() <= p.width).collect()
        })
        .collect();
    let mut indices: Vec<usize> = peak_regions.iter().flatten().copied().collect();
    indices.sort_unstable();
    indices.dedup();
    let wavenumbers = indices.iter().map(|&j| w[j]).collect();
    Ok(SyntheticSpectra {
        old,
        new,
        truth: GroundTruth {
            indices,
            wavenumbers,
            peak_regions,
        },
        old_amplitudes,
        new_amplitudes,
    })
}

fn draw_batch(
    cfg: &SynthConfig,
    axis: &WavenumberAxis,
    profiles: &[Vec<f64>],
    n: usize,
    batch: Batch,
    shift: BatchShift,
    rng: &mut ChaCha8Rng,
) -> Result<(SpectraDataset, Matrix)> {
    let m = axis.len();
    let n_peaks = cfg.peaks.len();
    let s = cfg.amplitude_spread;
    let noise_sd = cfg.noise_sd * shift.noise_scale;
    let mut amps = Matrix::zeros(n, n_peaks);
    let mut x = Matrix::zeros(n, m);
    let mut y = Vector::zeros(n);
    for i in 0..n {
        for (k, p) in cfg.peaks.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            amps[(i, k)] = p.amplitude * (s * z - 0.5 * s * s).exp();
        }
        for j in 0..m {
            let signal: f64 = (0..n_peaks).map(|k| amps[(i, k)] * profiles[k][j]).sum();
            let e: f64 = rng.sample(StandardNormal);
            x[(i, j)] = signal + shift.baseline + noise_sd * e;
        }
        let mut response = cfg.response_offset;
        for (&k, &c) in cfg.active_peaks.iter().zip(&cfg.response_weights) {
            response += c * amps[(i, k)];
        }
        for t in &cfg.interactions {
            response += t.coef * amps[(i, t.a)] * amps[(i, t.b)];
        }
        let e: f64 = rng.sample(StandardNormal);
        y[i] = response + cfg.response_noise_sd * e;
    }
    let tag = batch.as_str();
    let ids = (0..n).map(|i| format!("{tag}-{i:03}")).collect();
    let ds = SpectraDataset::new(axis.clone(), x, y, vec![batch; n], ids, vec!["1".to_string(); n])?;
    Ok((ds, amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::models::Regressor;
    use crate::spectra::trim_axis;

    fn quiet() -> SynthConfig {
        SynthConfig {
            m_features: 400,
            noise_sd: 0.0,
            response_noise_sd: 0.0,
            interactions: vec![],
            n_old: 40,
            n_new: 10,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid_and_sized() {
        let cfg = SynthConfig::default();
        cfg.validate().unwrap();
        let s = generate_synthetic(
            &SynthConfig {
                n_old: 3,
                n_new: 2,
                ..cfg
            },
            0,
        )
        .unwrap();
        assert_eq!(s.old.n_features(), 1562);
        assert_eq!(s.old.axis().lo(), 181.45);
        assert_eq!(s.old.axis().hi(), 3200.82);
        assert_eq!((s.old.n_samples(), s.new.n_samples()), (3, 2));
        assert_eq!(s.truth.peak_regions.len(), 4);
        assert!(s.truth.peak_regions.iter().all(|r| !r.is_empty()));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SynthConfig {
            m_features: 200,
            n_old: 12,
            n_new: 5,
            ..SynthConfig::default()
        };
        assert_eq!(
            generate_synthetic(&cfg, 9).unwrap(),
            generate_synthetic(&cfg, 9).unwrap()
        );
        assert_ne!(
            generate_synthetic(&cfg, 9).unwrap().old,
            generate_synthetic(&cfg, 10).unwrap().old
        );
    }

    #[test]
    fn noiseless_single_peak_response_is_linear_in_its_region() {
        let cfg = SynthConfig {
            active_peaks: vec![3],
            response_weights: vec![2.0],
            response_offset: 0.0,
            ..quiet()
        };
        let s = generate_synthetic(&cfg, 4).unwrap();
        let p = cfg.peaks[3];
        let region = trim_axis(&s.old, p.center - p.width, p.center + p.width).unwrap();
        let model = crate::models::ols_fit(region.intensities(), region.response()).unwrap();
        let pred = model.predict(region.intensities());
        let mse = crate::metrics::mse(region.response().as_slice(), pred.as_slice()).unwrap();
        assert!(mse < 1e-8, "mse {mse}");
    }

    #[test]
    fn response_is_exact_in_active_amplitudes_without_noise() {
        let cfg = quiet();
        let s = generate_synthetic(&cfg, 2).unwrap();
        let a = linalg::select_columns(&s.old_amplitudes, &cfg.active_peaks);
        let model = crate::models::ols_fit(&a, s.old.response()).unwrap();
        let pred = model.predict(&a);
        let mse = crate::metrics::mse(s.old.response().as_slice(), pred.as_slice()).unwrap();
        assert!(mse < 1e-8, "mse {mse}");
    }

    #[test]
    fn baseline_shift_raises_new_batch_mean() {
        let cfg = SynthConfig {
            batch_shift: BatchShift {
                baseline: 0.5,
                noise_scale: 1.0,
            },
            n_old: 400,
            n_new: 400,
            ..quiet()
        };
        let s = generate_synthetic(&cfg, 11).unwrap();
        let mean = |ds: &SpectraDataset| ds.intensities().mean();
        let diff = mean(&s.new) - mean(&s.old);
        assert!((diff - 0.5).abs() < 0.01, "diff {diff}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = SynthConfig::default();
        let mut c = base.clone();
        c.active_peaks.push(99);
        c.response_weights.push(1.0);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.peaks[0].center = 10.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.response_weights.pop();
        assert!(c.validate().is_err());
    }
}
