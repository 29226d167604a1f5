//! Spectral datasets on a wavenumber axis.

mod io;
mod scenario;
mod standardize;
mod synth;

pub use io::{load_dataset, parse_dataset, write_dataset, DatasetSchema};
pub use scenario::{make_scenario, ScenarioKind, ScenarioSpec, ScenarioSplit, Sealed};
pub use standardize::{standardize_apply, standardize_fit, StandardizationParams, STD_FLOOR};
pub use synth::{generate_synthetic, BatchShift, GroundTruth, Interaction, Peak, SynthConfig, SyntheticSpectra};

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Matrix, Result, Vector};

/// Nominal instrument resolution in cm⁻¹ when none is given.
pub const DEFAULT_RESOLUTION: f64 = 7.1;

/// Strictly increasing wavenumber grid (cm⁻¹).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavenumberAxis {
    values: Vec<f64>,
    resolution: f64,
}

impl WavenumberAxis {
    pub fn new(values: Vec<f64>, resolution: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("wavenumber axis is empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite wavenumber {v}")));
        }
        if let Some(w) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "wavenumber axis not strictly increasing at position {}",
                w + 1
            )));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::invalid(format!("resolution must be positive, got {resolution}")));
        }
        Ok(Self { values, resolution })
    }

    /// Evenly spaced grid including both endpoints exactly.
    pub fn linspace(lo: f64, hi: f64, n: usize, resolution: f64) -> Result<Self> {
        if n == 0 || !(hi > lo) {
            return Err(Error::invalid(format!("bad linspace [{lo}, {hi}] with {n} points")));
        }
        if n == 1 {
            return Self::new(vec![lo], resolution);
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut values: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        values[n - 1] = hi;
        Self::new(values, resolution)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.values[0]
    }

    pub fn hi(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Index of the grid point nearest to `wavenumber` (lower index on ties).
    pub fn nearest_index(&self, wavenumber: f64) -> usize {
        let pos = self.values.partition_point(|&v| v < wavenumber);
        if pos == 0 {
            return 0;
        }
        if pos == self.values.len() {
            return pos - 1;
        }
        if (wavenumber - self.values[pos - 1]) <= (self.values[pos] - wavenumber) {
            pos - 1
        } else {
            pos
        }
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.values[i]).collect(), self.resolution)
    }
}

/// Acquisition batch of an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Batch {
    Old,
    New,
}

impl Batch {
    pub fn as_str(self) -> &'static str {
        match self {
            Batch::Old => "old",
            Batch::New => "new",
        }
    }
}

impl std::str::FromStr for Batch {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "old" => Ok(Batch::Old),
            "new" => Ok(Batch::New),
            _ => Err(()),
        }
    }
}

/// N observations × M intensities with a scalar response per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraDataset {
    axis: WavenumberAxis,
    intensities: Matrix,
    response: Vector,
    batch: Vec<Batch>,
    sample_id: Vec<String>,
    replicate_id: Vec<String>,
}

impl SpectraDataset {
    pub fn new(
        axis: WavenumberAxis,
        intensities: Matrix,
        response: Vector,
        batch: Vec<Batch>,
        sample_id: Vec<String>,
        replicate_id: Vec<String>,
    ) -> Result<Self> {
        let n = intensities.nrows();
        if intensities.ncols() != axis.len() {
            return Err(Error::DimensionMismatch {
                expected: axis.len(),
                found: intensities.ncols(),
            });
        }
        for len in [response.len(), batch.len(), sample_id.len(), replicate_id.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if !linalg::is_finite_matrix(&intensities) || response.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Self {
            axis,
            intensities,
            response,
            batch,
            sample_id,
            replicate_id,
        })
    }

    /// Dataset with generated identifiers and every row in `batch`.
    pub fn from_parts(axis: WavenumberAxis, intensities: Matrix, response: Vector, batch: Batch) -> Result<Self> {
        let n = intensities.nrows();
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::new(
            axis,
            intensities,
            response,
            vec![batch; n],
            ids,
            vec!["0".to_string(); n],
        )
    }

    pub fn axis(&self) -> &WavenumberAxis {
        &self.axis
    }

    pub fn intensities(&self) -> &Matrix {
        &self.intensities
    }

    pub fn response(&self) -> &Vector {
        &self.response
    }

    pub fn batch(&self) -> &[Batch] {
        &self.batch
    }

    pub fn sample_id(&self) -> &[String] {
        &self.sample_id
    }

    pub fn replicate_id(&self) -> &[String] {
        &self.replicate_id
    }

    pub fn n_samples(&self) -> usize {
        self.intensities.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.intensities.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples() == 0
    }

    pub fn subset_rows(&self, idx: &[usize]) -> Self {
        Self {
            axis: self.axis.clone(),
            intensities: linalg::select_rows(&self.intensities, idx),
            response: linalg::select_entries(&self.response, idx),
            batch: idx.iter().map(|&i| self.batch[i]).collect(),
            sample_id: idx.iter().map(|&i| self.sample_id[i].clone()).collect(),
            replicate_id: idx.iter().map(|&i| self.replicate_id[i].clone()).collect(),
        }
    }

    pub fn select_features(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.n_features()) {
            return Err(Error::invalid(format!("feature index {bad} out of range")));
        }
        Ok(Self {
            axis: self.axis.select(idx)?,
            intensities: linalg::select_columns(&self.intensities, idx),
            ..self.clone()
        })
    }

    /// Stacks the rows of `other` below `self`; both must share an axis.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.axis.values != other.axis.values {
            return Err(Error::invalid("cannot concatenate datasets on different axes"));
        }
        let (n1, n2, m) = (self.n_samples(), other.n_samples(), self.n_features());
        let intensities = Matrix::from_fn(n1 + n2, m, |i, j| {
            if i < n1 {
                self.intensities[(i, j)]
            } else {
                other.intensities[(i - n1, j)]
            }
        });
        let response = Vector::from_iterator(n1 + n2, self.response.iter().chain(other.response.iter()).copied());
        Ok(Self {
            axis: self.axis.clone(),
            intensities,
            response,
            batch: self.batch.iter().chain(&other.batch).copied().collect(),
            sample_id: self.sample_id.iter().chain(&other.sample_id).cloned().collect(),
            replicate_id: self.replicate_id.iter().chain(&other.replicate_id).cloned().collect(),
        })
    }
}

/// Keeps exactly the features with `lo ≤ wavenumber ≤ hi`.
pub fn trim_axis(ds: &SpectraDataset, lo: f64, hi: f64) -> Result<SpectraDataset> {
    if !(lo < hi) {
        return Err(Error::invalid(format!(
            "trim bounds must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let keep: Vec<usize> = ds
        .axis
        .values
        .iter()
        .enumerate()
        .filter(|(_, &w)| lo <= w && w <= hi)
        .map(|(j, _)| j)
        .collect();
    if keep.is_empty() {
        return Err(Error::invalid(format!("no wavenumbers inside [{lo}, {hi}]")));
    }
    ds.select_features(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(values: Vec<f64>) -> SpectraDataset {
        let m = values.len();
        let axis = WavenumberAxis::new(values, 7.1).unwrap();
        let x = Matrix::from_fn(3, m, |i, j| (i * m + j) as f64);
        SpectraDataset::from_parts(axis, x, Vector::from_vec(vec![1.0, 2.0, 3.0]), Batch::Old).unwrap()
    }

    #[test]
    fn trim_counts_grid_points_inside_interval() {
        let axis = WavenumberAxis::linspace(52.52, 3712.89, 2048, 7.1).unwrap();
        let expected = axis
            .values()
            .iter()
            .filter(|&&w| (181.45..=3200.82).contains(&w))
            .count();
        let x = Matrix::zeros(2, 2048);
        let ds = SpectraDataset::from_parts(axis, x, Vector::from_vec(vec![0.0, 1.0]), Batch::Old).unwrap();
        let t = trim_axis(&ds, 181.45, 3200.82).unwrap();
        assert_eq!(t.n_features(), expected);
        assert!(t.axis().lo() >= 181.45 && t.axis().hi() <= 3200.82);
        assert_eq!(t.response(), ds.response());
    }

    #[test]
    fn trim_whole_axis_is_identity() {
        let ds = toy(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(trim_axis(&ds, 0.0, 10.0).unwrap(), ds);
    }

    #[test]
    fn trim_rejects_degenerate_bounds() {
        let ds = toy(vec![1.0, 2.0, 3.0]);
        assert!(trim_axis(&ds, 2.0, 2.0).is_err());
        assert!(trim_axis(&ds, 5.0, 6.0).is_err());
    }

    #[test]
    fn axis_requires_strict_increase() {
        assert!(WavenumberAxis::new(vec![3.0, 2.0, 1.0], 7.1).is_err());
        assert!(WavenumberAxis::new(vec![1.0, 1.0], 7.1).is_err());
    }

    #[test]
    fn nearest_index_picks_closest() {
        let axis = WavenumberAxis::new(vec![10.0, 20.0, 30.0], 7.1).unwrap();
        assert_eq!(axis.nearest_index(-5.0), 0);
        assert_eq!(axis.nearest_index(14.0), 0);
        assert_eq!(axis.nearest_index(16.0), 1);
        assert_eq!(axis.nearest_index(99.0), 2);
    }

    proptest! {
        #[test]
        fn trim_is_idempotent(a in 0.0f64..50.0, width in 1.0f64..60.0) {
            let ds = toy((0..40).map(|i| i as f64 * 1.7).collect());
            let (lo, hi) = (a, a + width);
            if let Ok(once) = trim_axis(&ds, lo, hi) {
                let twice = trim_axis(&once, lo, hi).unwrap();
                prop_assert_eq!(once, twice);
            }
        }
    }
}
