//! Prediction error and correctness against expert feature locations.

mod expert;

pub use expert::{parse_expert, write_expert, ExpertFeatureSet, ExpertSource};

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::selectors::FeatureRanking;
use crate::spectra::WavenumberAxis;
use crate::{Error, Result};

/// Mean squared error.
pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            found: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::invalid("mse of empty vectors"));
    }
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Coefficient of determination of `yhat` as a predictor of `y`.
///
/// Returns 1 when `y` is constant and matched exactly, 0 when constant and missed.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64> {
    let err = mse(y, yhat)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / y.len() as f64;
    if tss <= f64::EPSILON * mean.abs().max(1.0) {
        return Ok(if err <= f64::EPSILON * mean.abs().max(1.0) {
            1.0
        } else {
            0.0
        });
    }
    Ok(1.0 - err / tss)
}

/// Fixed-width bins anchored at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinScheme {
    pub width: f64,
    pub origin: f64,
}

impl BinScheme {
    pub fn new(width: f64, origin: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && origin.is_finite()) {
            return Err(Error::invalid(format!(
                "bin width must be positive and finite, got {width}"
            )));
        }
        Ok(Self { width, origin })
    }

    /// Width of two resolution units, starting at the first axis point.
    pub fn for_axis(axis: &WavenumberAxis) -> Self {
        Self {
            width: 2.0 * axis.resolution(),
            origin: axis.lo(),
        }
    }

    pub fn bin(&self, wavenumber: f64) -> i64 {
        ((wavenumber - self.origin) / self.width).floor() as i64
    }
}

pub fn bin_set(wavenumbers: &[f64], scheme: &BinScheme) -> BTreeSet<i64> {
    wavenumbers.iter().map(|&w| scheme.bin(w)).collect()
}

/// |A∩B| / |A∪B|, with J(∅, ∅) = 0.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        log::warn!("jaccard of two empty sets; reporting 0");
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessResult {
    pub method: String,
    pub k: usize,
    pub jaccard: f64,
    pub percent: f64,
}

pub fn correctness(
    r: &FeatureRanking,
    expert: &ExpertFeatureSet,
    k: usize,
    scheme: &BinScheme,
    axis: &WavenumberAxis,
) -> Result<CorrectnessResult> {
    if r.scores.len() != axis.len() {
        return Err(Error::DimensionMismatch {
            expected: axis.len(),
            found: r.scores.len(),
        });
    }
    if k > axis.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {} available features",
            axis.len()
        )));
    }
    let selected: Vec<f64> = r.order[..k].iter().map(|&j| axis.values()[j]).collect();
    let j = jaccard(&bin_set(&selected, scheme), &bin_set(&expert.wavenumbers, scheme));
    Ok(CorrectnessResult {
        method: r.method.clone(),
        k,
        jaccard: j,
        percent: 100.0 * j,
    })
}

/// k = 120, 140, …, 500.
pub fn default_curve_ks() -> Vec<usize> {
    (120..=500).step_by(20).collect()
}

pub fn correctness_curve(
    r: &FeatureRanking,
    expert: &ExpertFeatureSet,
    ks: &[usize],
    scheme: &BinScheme,
    axis: &WavenumberAxis,
) -> Result<Vec<CorrectnessResult>> {
    if ks.is_empty() {
        return Err(Error::invalid("correctness curve needs at least one k"));
    }
    if ks.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("curve ks must be ascending"));
    }
    ks.iter().map(|&k| correctness(r, expert, k, scheme, axis)).collect()
}

pub fn write_curve_csv<W: Write>(rows: &[CorrectnessResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "method,k,jaccard,percent")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.method, r.k, r.jaccard, r.percent)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub method: String,
    pub correctness: f64,
    pub test_mse_mean: f64,
    pub test_mse_sd: f64,
}

/// Sorts the per-method points by method name.
pub fn tradeoff(results: &[TradeoffRow]) -> Result<Vec<TradeoffRow>> {
    if results.is_empty() {
        return Err(Error::invalid("trade-off table needs at least one method"));
    }
    let mut rows = results.to_vec();
    rows.sort_by(|a, b| a.method.cmp(&b.method));
    Ok(rows)
}

pub fn write_tradeoff_csv<W: Write>(rows: &[TradeoffRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "method,correctness,test_mse_mean,test_mse_sd")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.method, r.correctness, r.test_mse_mean, r.test_mse_sd
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[i64]) -> BTreeSet<i64> {
        v.iter().copied().collect()
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 2.5);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn binning_examples() {
        let s = BinScheme::new(10.0, 0.0).unwrap();
        assert_eq!(bin_set(&[3.0, 7.0, 15.0], &s), set(&[0, 1]));
        assert!(bin_set(&[], &s).is_empty());
        let s = BinScheme::new(14.2, 0.0).unwrap();
        assert_eq!(bin_set(&[1.0, 15.2], &s).len(), 2);
        assert!(BinScheme::new(0.0, 0.0).is_err());
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&set(&[1, 2]), &set(&[1, 2])), 1.0);
        assert_eq!(jaccard(&set(&[1, 2]), &set(&[3])), 0.0);
        assert_eq!(jaccard(&set(&[1, 2, 3]), &set(&[2, 3, 4])), 0.5);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 0.0);
    }

    #[test]
    fn default_bin_width_is_two_resolutions() {
        let axis = WavenumberAxis::new(vec![181.45, 200.0], 7.1).unwrap();
        let s = BinScheme::for_axis(&axis);
        assert!((s.width - 14.2).abs() < 1e-12);
        assert_eq!(s.origin, 181.45);
    }

    #[test]
    fn correctness_perfect_match() {
        let axis = WavenumberAxis::new((0..20).map(|i| i as f64 * 10.0).collect(), 5.0).unwrap();
        let mut scores = vec![0.0; 20];
        for j in [2, 5, 11] {
            scores[j] = 1.0 + j as f64;
        }
        let r = FeatureRanking::from_scores(scores, "test");
        let expert = ExpertFeatureSet::new(vec![20.0, 50.0, 110.0], ExpertSource::Inline);
        let c = correctness(&r, &expert, 3, &BinScheme::for_axis(&axis), &axis).unwrap();
        assert_eq!(c.jaccard, 1.0);
        assert_eq!(c.percent, 100.0);
        assert!(correctness(&r, &expert, 21, &BinScheme::for_axis(&axis), &axis).is_err());
    }

    #[test]
    fn curve_over_whole_axis() {
        let axis = WavenumberAxis::new((0..30).map(|i| i as f64 * 3.3).collect(), 7.1).unwrap();
        let r = FeatureRanking::from_scores((0..30).map(|i| ((i * 7) % 11) as f64).collect(), "t");
        let expert = ExpertFeatureSet::new(axis.values().to_vec(), ExpertSource::Inline);
        let scheme = BinScheme::for_axis(&axis);
        let full = correctness_curve(&r, &expert, &[30], &scheme, &axis).unwrap();
        assert_eq!(full[0].jaccard, 1.0);
        let ks: Vec<usize> = (1..=30).collect();
        assert_eq!(correctness_curve(&r, &expert, &ks, &scheme, &axis).unwrap().len(), 30);
        assert!(correctness_curve(&r, &expert, &[5, 2], &scheme, &axis).is_err());
        assert_eq!(default_curve_ks().len(), 20);
    }

    #[test]
    fn tradeoff_single_and_sorted() {
        let row = |m: &str| TradeoffRow {
            method: m.into(),
            correctness: 0.4,
            test_mse_mean: 2.0,
            test_mse_sd: 0.1,
        };
        assert_eq!(tradeoff(&[row("RF")]).unwrap(), vec![row("RF")]);
        let t = tradeoff(&[row("SHAP"), row("LIME"), row("RF")]).unwrap();
        assert_eq!(
            t.iter().map(|r| r.method.as_str()).collect::<Vec<_>>(),
            ["LIME", "RF", "SHAP"]
        );
        assert!(tradeoff(&[]).is_err());
    }

    #[test]
    fn r_squared_basics() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert!(r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap().abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn jaccard_symmetric_and_bounded(a in proptest::collection::btree_set(0i64..30, 0..15),
                                         b in proptest::collection::btree_set(0i64..30, 0..15)) {
            let j = jaccard(&a, &b);
            prop_assert_eq!(j, jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&j));
            if !a.is_empty() {
                prop_assert_eq!(jaccard(&a, &a), 1.0);
            }
        }

        #[test]
        fn mse_is_homogeneous(r in proptest::collection::vec(-10.0f64..10.0, 1..20), c in -5.0f64..5.0) {
            let zero = vec![0.0; r.len()];
            let scaled: Vec<f64> = r.iter().map(|v| v * c).collect();
            let a = mse(&scaled, &zero).unwrap();
            let b = c * c * mse(&r, &zero).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }

        #[test]
        fn coarser_bins_keep_matched_pairs(x in 0.0f64..1000.0, y in 0.0f64..1000.0, w in 0.5f64..50.0) {
            let fine = BinScheme::new(w, 0.0).unwrap();
            let coarse = BinScheme::new(2.0 * w, 0.0).unwrap();
            if fine.bin(x) == fine.bin(y) {
                prop_assert_eq!(coarse.bin(x), coarse.bin(y));
            }
        }

        #[test]
        fn correctness_ignores_order_beyond_k(seed in any::<u64>(), k in 1usize..20) {
            use rand::{seq::SliceRandom, SeedableRng};
            let m = 20;
            let axis = WavenumberAxis::new((0..m).map(|i| 100.0 + i as f64 * 4.0).collect(), 7.1).unwrap();
            let scheme = BinScheme::for_axis(&axis);
            let expert = ExpertFeatureSet::new(vec![104.0, 150.0, 170.0], ExpertSource::Inline);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            let a = FeatureRanking { scores: vec![0.0; m], order: order.clone(), method: "x".into() };
            order[k..].shuffle(&mut rng);
            let b = FeatureRanking { scores: vec![0.0; m], order, method: "x".into() };
            let ca = correctness(&a, &expert, k, &scheme, &axis).unwrap();
            let cb = correctness(&b, &expert, k, &scheme, &axis).unwrap();
            prop_assert_eq!(ca.jaccard, cb.jaccard);
        }
    }
}
