use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SpectraDataset;
use crate::{Error, Result};

/// Which rows form the pool and where the test set comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Old batch only.
    Control,
    /// Old and new batches pooled.
    Mixed,
    /// Train/val from the old batch, test is the whole new batch.
    Realtime,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::Control, ScenarioKind::Mixed, ScenarioKind::Realtime];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Control => "Control",
            ScenarioKind::Mixed => "Mixed",
            ScenarioKind::Realtime => "Realtime",
        }
    }

    pub fn default_fractions(self) -> (f64, f64, f64) {
        match self {
            ScenarioKind::Control | ScenarioKind::Mixed => (0.8, 0.1, 0.1),
            ScenarioKind::Realtime => (0.8, 0.2, 0.0),
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// (train, val, test). The test share is ignored for `Realtime`.
    pub fractions: (f64, f64, f64),
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Self {
            kind,
            fractions: kind.default_fractions(),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b, c) = self.fractions;
        if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::config(format!(
                "split fractions must lie in [0, 1], got {:?}",
                self.fractions
            )));
        }
        let sum = match self.kind {
            ScenarioKind::Realtime => a + b,
            _ => a + b + c,
        };
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "split fractions must sum to 1, got {:?}",
                self.fractions
            )));
        }
        Ok(())
    }
}

/// Test partition that stays out of reach of selection and tuning code.
///
/// Only [`reveal`](Sealed::reveal) hands out the rows, so every access point
/// is easy to audit.
#[derive(Debug, Clone, PartialEq)]
pub struct Sealed<T>(T);

impl<T> Sealed<T> {
    pub fn reveal(&self) -> &T {
        &self.0
    }
}

/// Result of [`make_scenario`]. Index vectors refer to rows of the pool
/// (old rows first, then new rows for `Mixed`; rows of `new` for the
/// `Realtime` test set).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSplit {
    pub kind: ScenarioKind,
    pub train: SpectraDataset,
    pub val: SpectraDataset,
    pub test: Sealed<SpectraDataset>,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl ScenarioSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train_idx.len(), self.val_idx.len(), self.test_idx.len())
    }
}

fn floor_share(f: f64, n: usize) -> usize {
    (f * n as f64 + 1e-9).floor() as usize
}

/// Seeded permutation split: `val` and `test` get `floor(f·N)` rows, `train` the remainder.
fn partition(n: usize, val_frac: f64, test_frac: f64, seed: u64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = floor_share(val_frac, n);
    let n_test = floor_share(test_frac, n);
    let mut val = perm[..n_val].to_vec();
    let mut test = perm[n_val..n_val + n_test].to_vec();
    let mut train = perm[n_val + n_test..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    (train, val, test)
}

pub fn make_scenario(old: &SpectraDataset, new: &SpectraDataset, spec: &ScenarioSpec) -> Result<ScenarioSplit> {
    spec.validate()?;
    let (_, f_val, f_test) = spec.fractions;
    match spec.kind {
        ScenarioKind::Control | ScenarioKind::Mixed => {
            let pool = if spec.kind == ScenarioKind::Control {
                old.clone()
            } else {
                old.concat(new)?
            };
            if pool.is_empty() {
                return Err(Error::invalid("scenario pool is empty"));
            }
            let (train_idx, val_idx, test_idx) = partition(pool.n_samples(), f_val, f_test, spec.seed);
            Ok(ScenarioSplit {
                kind: spec.kind,
                train: pool.subset_rows(&train_idx),
                val: pool.subset_rows(&val_idx),
                test: Sealed(pool.subset_rows(&test_idx)),
                train_idx,
                val_idx,
                test_idx,
            })
        }
        ScenarioKind::Realtime => {
            if old.is_empty() {
                return Err(Error::invalid("scenario pool is empty"));
            }
            if new.is_empty() {
                return Err(Error::invalid("Realtime scenario requires a nonempty new batch"));
            }
            if old.axis() != new.axis() {
                return Err(Error::invalid("old and new batches use different axes"));
            }
            let (train_idx, val_idx, _) = partition(old.n_samples(), f_val, 0.0, spec.seed);
            let test_idx: Vec<usize> = (0..new.n_samples()).collect();
            Ok(ScenarioSplit {
                kind: spec.kind,
                train: old.subset_rows(&train_idx),
                val: old.subset_rows(&val_idx),
                test: Sealed(new.clone()),
                train_idx,
                val_idx,
                test_idx,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{Batch, WavenumberAxis};
    use crate::{Matrix, Vector};
    use proptest::prelude::*;

    fn rows(n: usize, batch: Batch) -> SpectraDataset {
        let axis = WavenumberAxis::new(vec![1.0, 2.0], 7.1).unwrap();
        let x = Matrix::from_fn(n, 2, |i, j| (i * 2 + j) as f64);
        SpectraDataset::from_parts(axis, x, Vector::from_fn(n, |i, _| i as f64), batch).unwrap()
    }

    #[test]
    fn paper_sized_splits() {
        let (old, new) = (rows(145, Batch::Old), rows(100, Batch::New));
        let sizes = |kind| make_scenario(&old, &new, &ScenarioSpec::new(kind, 3)).unwrap().sizes();
        assert_eq!(sizes(ScenarioKind::Control), (117, 14, 14));
        assert_eq!(sizes(ScenarioKind::Mixed), (197, 24, 24));
        assert_eq!(sizes(ScenarioKind::Realtime), (116, 29, 100));
    }

    #[test]
    fn realtime_test_is_the_new_batch() {
        let (old, new) = (rows(20, Batch::Old), rows(7, Batch::New));
        let s = make_scenario(&old, &new, &ScenarioSpec::new(ScenarioKind::Realtime, 1)).unwrap();
        assert_eq!(s.test.reveal(), &new);
        assert!(s.train.batch().iter().chain(s.val.batch()).all(|&b| b == Batch::Old));
    }

    #[test]
    fn error_cases() {
        let empty = rows(0, Batch::New);
        let old = rows(10, Batch::Old);
        assert!(make_scenario(&old, &empty, &ScenarioSpec::new(ScenarioKind::Realtime, 0)).is_err());
        assert!(make_scenario(&empty, &empty, &ScenarioSpec::new(ScenarioKind::Control, 0)).is_err());
        let bad = ScenarioSpec {
            kind: ScenarioKind::Control,
            fractions: (0.5, 0.1, 0.1),
            seed: 0,
        };
        assert!(make_scenario(&old, &empty, &bad).is_err());
    }

    #[test]
    fn different_seeds_differ() {
        let old = rows(145, Batch::Old);
        let a = make_scenario(&old, &old, &ScenarioSpec::new(ScenarioKind::Control, 1)).unwrap();
        let b = make_scenario(&old, &old, &ScenarioSpec::new(ScenarioKind::Control, 2)).unwrap();
        assert_ne!(a.test_idx, b.test_idx);
    }

    proptest! {
        #[test]
        fn partitions_are_disjoint_exhaustive_and_reproducible(
            n_old in 1usize..80, n_new in 0usize..40, seed in any::<u64>(), mixed in any::<bool>()
        ) {
            let (old, new) = (rows(n_old, Batch::Old), rows(n_new, Batch::New));
            let kind = if mixed { ScenarioKind::Mixed } else { ScenarioKind::Control };
            let spec = ScenarioSpec::new(kind, seed);
            let s = make_scenario(&old, &new, &spec).unwrap();
            let n = if mixed { n_old + n_new } else { n_old };
            let mut all: Vec<usize> = s.train_idx.iter().chain(&s.val_idx).chain(&s.test_idx).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let again = make_scenario(&old, &new, &spec).unwrap();
            prop_assert_eq!(s, again);
        }
    }
}
