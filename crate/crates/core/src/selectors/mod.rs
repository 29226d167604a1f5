//! Model-based feature rankings and subset extraction.

mod components;
mod pca;
mod pls;

pub use components::{
    choose_components, component_feature_scores, component_scores, elbow, ComponentKind, ComponentModel,
    ComponentModelBox,
};
pub use pca::{pca_fit, PcaModel};
pub use pls::{pls_fit, PlsModel};

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::models::{LinearModel, RfModel};
use crate::spectra::WavenumberAxis;
use crate::{Error, LoadError, Result};

/// Non-negative importance per feature with the induced ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub scores: Vec<f64>,
    /// Feature indices by descending score, ties by ascending index.
    pub order: Vec<usize>,
    pub method: String,
}

impl FeatureRanking {
    /// Negative or non-finite scores are clamped to zero.
    pub fn from_scores(scores: Vec<f64>, method: impl Into<String>) -> Self {
        let scores: Vec<f64> = scores
            .into_iter()
            .map(|s| if s.is_finite() && s > 0.0 { s } else { 0.0 })
            .collect();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self {
            scores,
            order,
            method: method.into(),
        }
    }

    /// Like [`from_scores`](Self::from_scores) but equal scores are ordered by
    /// descending `secondary` before falling back to the index.
    pub fn from_scores_with_tiebreak(scores: Vec<f64>, secondary: &[f64], method: impl Into<String>) -> Self {
        let mut r = Self::from_scores(scores, method);
        let sec = |j: usize| secondary.get(j).copied().filter(|v| v.is_finite()).unwrap_or(0.0);
        r.order.sort_by(|&a, &b| {
            r.scores[b]
                .total_cmp(&r.scores[a])
                .then(sec(b).total_cmp(&sec(a)))
                .then(a.cmp(&b))
        });
        r
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }

    /// The same ranking expressed on a wider axis where feature `i` sits at `indices[i]`.
    pub fn lift(&self, indices: &[usize], n_features: usize) -> Result<Self> {
        if indices.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: indices.len(),
            });
        }
        let mut scores = vec![0.0; n_features];
        let mut placed = vec![false; n_features];
        for (i, &j) in indices.iter().enumerate() {
            if j >= n_features || placed[j] {
                return Err(Error::invalid(format!("lift index {j} is out of range or repeated")));
            }
            scores[j] = self.scores[i];
            placed[j] = true;
        }
        // Keep the existing order (including its tie-breaks); unseen features trail.
        let mut order: Vec<usize> = self.order.iter().map(|&i| indices[i]).collect();
        order.extend((0..n_features).filter(|&j| !placed[j]));
        Ok(Self {
            scores,
            order,
            method: self.method.clone(),
        })
    }
}

/// Selected feature positions (ascending) and their wavenumbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub indices: Vec<usize>,
    pub wavenumbers: Vec<f64>,
}

impl FeatureSubset {
    pub fn new(mut indices: Vec<usize>, axis: &WavenumberAxis) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&j) = indices.iter().find(|&&j| j >= axis.len()) {
            return Err(Error::invalid(format!(
                "subset index {j} outside an axis of {} points",
                axis.len()
            )));
        }
        let wavenumbers = indices.iter().map(|&j| axis.values()[j]).collect();
        Ok(Self { indices, wavenumbers })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetRule {
    /// First `k` features of the ranking.
    Count(usize),
    /// Shortest prefix whose score sum reaches `q` of the total.
    Cumulative(f64),
}

pub fn select_top(r: &FeatureRanking, rule: SubsetRule, axis: &WavenumberAxis) -> Result<FeatureSubset> {
    if r.len() != axis.len() {
        return Err(Error::DimensionMismatch {
            expected: axis.len(),
            found: r.len(),
        });
    }
    let k = match rule {
        SubsetRule::Count(k) => {
            if k == 0 || k > r.len() {
                return Err(Error::config(format!(
                    "subset size must lie in [1, {}], got {k}",
                    r.len()
                )));
            }
            k
        }
        SubsetRule::Cumulative(q) => {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::config(format!(
                    "cumulative fraction must lie in (0, 1], got {q}"
                )));
            }
            let total: f64 = r.scores.iter().sum();
            if total <= 0.0 {
                return Err(Error::invalid("cumulative rule needs at least one positive score"));
            }
            let target = q * total;
            let mut acc = 0.0;
            let mut k = r.len();
            for (n, &j) in r.order.iter().enumerate() {
                acc += r.scores[j];
                // Relative slack absorbs summation-order rounding.
                if acc >= target * (1.0 - 1e-12) {
                    k = n + 1;
                    break;
                }
            }
            k
        }
    };
    FeatureSubset::new(r.order[..k].to_vec(), axis)
}

/// Impurity importance: per-feature total of weighted variance reductions, normalized to 1.
pub fn rf_rank(model: &RfModel) -> FeatureRanking {
    let mut scores = vec![0.0; model.n_features];
    for tree in &model.trees {
        for node in &tree.nodes {
            if let Some(s) = node.split {
                scores[s.feature] += s.gain;
            }
        }
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        scores.iter_mut().for_each(|s| *s /= total);
    }
    FeatureRanking::from_scores(scores, "RF")
}

/// `|w_j|` of a linear model (fit on standardized inputs for a scale-free ranking).
pub fn ridge_rank(model: &LinearModel) -> FeatureRanking {
    FeatureRanking::from_scores(model.weights.iter().map(|w| w.abs()).collect(), "Ridge")
}

/// Two-column `wavenumber,score` table in rank order.
pub fn write_ranking<W: Write>(r: &FeatureRanking, axis: &WavenumberAxis, mut w: W) -> std::io::Result<()> {
    writeln!(w, "wavenumber,score")?;
    for &j in &r.order {
        writeln!(w, "{},{}", axis.values()[j], r.scores[j])?;
    }
    Ok(())
}

/// Reads a table written by [`write_ranking`] back onto `axis`.
pub fn parse_ranking<R: Read>(reader: R, axis: &WavenumberAxis, method: &str) -> Result<FeatureRanking> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut scores = vec![0.0; axis.len()];
    let mut seen = vec![false; axis.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(LoadError::from)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(LoadError::RowWidthMismatch {
                line,
                expected: 2,
                found: rec.len(),
            }
            .into());
        }
        let num = |col: usize| -> Result<f64> {
            let cell = &rec[col];
            cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                LoadError::NonNumericCell {
                    line,
                    column: col,
                    value: cell.to_string(),
                }
                .into()
            })
        };
        let (w, s) = (num(0)?, num(1)?);
        let j = axis.nearest_index(w);
        if axis.values()[j] != w || seen[j] {
            return Err(Error::invalid(format!(
                "line {line}: wavenumber {w} is not a unique axis point"
            )));
        }
        seen[j] = true;
        scores[j] = s;
    }
    Ok(FeatureRanking::from_scores(scores, method))
}

/// Sidecar subset file: one wavenumber per line.
pub fn write_subset<W: Write>(s: &FeatureSubset, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# selected wavenumbers (cm^-1)")?;
    for v in &s.wavenumbers {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Maps each listed wavenumber to its exact axis position.
pub fn parse_subset<R: Read>(reader: R, axis: &WavenumberAxis) -> Result<FeatureSubset> {
    let mut idx = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| LoadError::from(csv::Error::from(e)))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let w: f64 = t
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| LoadError::InvalidExpertLine {
                line: i + 1,
                value: t.to_string(),
            })?;
        let j = axis.nearest_index(w);
        if axis.values()[j] != w {
            return Err(Error::invalid(format!(
                "line {}: wavenumber {w} is not on the axis",
                i + 1
            )));
        }
        idx.push(j);
    }
    FeatureSubset::new(idx, axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{rf_fit, ridge_fit, MaxFeatures, RfHyperparams};
    use crate::{Matrix, Vector};
    use proptest::prelude::*;

    fn axis(m: usize) -> WavenumberAxis {
        WavenumberAxis::new((0..m).map(|i| 100.0 + 2.5 * i as f64).collect(), 7.1).unwrap()
    }

    #[test]
    fn ridge_rank_example() {
        let m = LinearModel {
            weights: vec![3.0, -4.0, 0.0],
            intercept: 1.0,
            alpha: 0.0,
        };
        let r = ridge_rank(&m);
        assert_eq!(r.order, vec![1, 0, 2]);
        assert_eq!(r.scores, vec![3.0, 4.0, 0.0]);
        let z = ridge_rank(&LinearModel {
            weights: vec![0.0; 4],
            intercept: 0.0,
            alpha: 0.0,
        });
        assert_eq!(z.order, vec![0, 1, 2, 3]);
        assert!(z.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn cumulative_rule_example() {
        let r = FeatureRanking::from_scores(vec![0.5, 0.3, 0.2], "t");
        let s = select_top(&r, SubsetRule::Cumulative(0.8), &axis(3)).unwrap();
        assert_eq!(s.indices, vec![0, 1]);
        let full = select_top(&r, SubsetRule::Count(3), &axis(3)).unwrap();
        assert_eq!(full.indices, vec![0, 1, 2]);
        assert!(select_top(&r, SubsetRule::Count(4), &axis(3)).is_err());
        assert!(select_top(&r, SubsetRule::Count(0), &axis(3)).is_err());
    }

    #[test]
    fn rf_rank_finds_the_driving_feature() {
        let x = Matrix::from_fn(60, 5, |i, j| ((i * (j + 3) * 7919) % 101) as f64 / 101.0);
        let y = Vector::from_fn(60, |i, _| 10.0 * x[(i, 0)]);
        let h = RfHyperparams {
            n_trees: 30,
            max_features: MaxFeatures::All,
            seed: 2,
            ..Default::default()
        };
        let m = rf_fit(&x, &y, &h).unwrap();
        let r = rf_rank(&m);
        assert!(r.scores[0] > 0.9, "{:?}", r.scores);
        assert!((r.scores.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let mut by_hand = vec![0.0; 5];
        for t in &m.trees {
            for n in &t.nodes {
                if let Some(s) = n.split {
                    by_hand[s.feature] += s.gain;
                }
            }
        }
        let total: f64 = by_hand.iter().sum();
        for j in 0..5 {
            assert!((r.scores[j] - by_hand[j] / total).abs() < 1e-12);
        }
    }

    #[test]
    fn unused_feature_scores_zero() {
        let x = Matrix::from_fn(10, 2, |i, j| if j == 0 { i as f64 } else { 1.0 });
        let y = Vector::from_fn(10, |i, _| i as f64);
        let h = RfHyperparams {
            n_trees: 3,
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        assert_eq!(rf_rank(&rf_fit(&x, &y, &h).unwrap()).scores[1], 0.0);
    }

    #[test]
    fn ranking_and_subset_files_round_trip() {
        let ax = axis(6);
        let r = FeatureRanking::from_scores(vec![0.1, 0.0, 0.7, 0.2, 0.05, 0.3], "x");
        let mut buf = Vec::new();
        write_ranking(&r, &ax, &mut buf).unwrap();
        assert_eq!(parse_ranking(buf.as_slice(), &ax, "x").unwrap(), r);
        let s = select_top(&r, SubsetRule::Count(3), &ax).unwrap();
        let mut buf = Vec::new();
        write_subset(&s, &mut buf).unwrap();
        assert_eq!(parse_subset(buf.as_slice(), &ax).unwrap(), s);
        assert!(parse_subset("101.0\n".as_bytes(), &ax).is_err());
    }

    #[test]
    fn lift_places_scores() {
        let r = FeatureRanking::from_scores(vec![2.0, 1.0], "x");
        let l = r.lift(&[3, 1], 5).unwrap();
        assert_eq!(l.scores, vec![0.0, 1.0, 0.0, 2.0, 0.0]);
        assert_eq!(l.order, vec![3, 1, 0, 2, 4]);
    }

    #[test]
    fn secondary_breaks_ties() {
        let r = FeatureRanking::from_scores_with_tiebreak(vec![1.0, 1.0, 0.5, 1.0], &[0.1, 0.3, 9.0, 0.3], "x");
        assert_eq!(r.order, vec![1, 3, 0, 2]);
    }

    proptest! {
        #[test]
        fn order_sorts_scores_descending(scores in proptest::collection::vec(0.0f64..5.0, 1..40)) {
            let r = FeatureRanking::from_scores(scores.iter().map(|s| (s * 4.0).round() / 4.0).collect(), "p");
            for w in r.order.windows(2) {
                let (a, b) = (r.scores[w[0]], r.scores[w[1]]);
                prop_assert!(a > b || (a == b && w[0] < w[1]));
            }
        }

        #[test]
        fn cumulative_prefix_is_shortest(scores in proptest::collection::vec(0.01f64..5.0, 1..30), q in 0.05f64..1.0) {
            let ax = axis(scores.len());
            let r = FeatureRanking::from_scores(scores, "p");
            let s = select_top(&r, SubsetRule::Cumulative(q), &ax).unwrap();
            let total: f64 = r.scores.iter().sum();
            let k = s.len();
            let prefix: f64 = r.order[..k].iter().map(|&j| r.scores[j]).sum();
            prop_assert!(prefix >= q * total * (1.0 - 1e-12));
            if k > 1 {
                let shorter: f64 = r.order[..k - 1].iter().map(|&j| r.scores[j]).sum();
                prop_assert!(shorter < q * total * (1.0 - 1e-12));
            }
        }

        #[test]
        fn ridge_rank_is_permutation_equivariant(seed in any::<u64>()) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = Matrix::from_fn(15, 5, |_, _| rng.random_range(-1.0..1.0));
            let y = Vector::from_fn(15, |i, _| x[(i, 1)] - 2.0 * x[(i, 3)]);
            let mut perm: Vec<usize> = (0..5).collect();
            perm.shuffle(&mut rng);
            let xp = crate::linalg::select_columns(&x, &perm);
            let a = ridge_rank(&ridge_fit(&x, &y, 0.1).unwrap());
            let b = ridge_rank(&ridge_fit(&xp, &y, 0.1).unwrap());
            for (k, &j) in perm.iter().enumerate() {
                prop_assert!((a.scores[j] - b.scores[k]).abs() < 1e-9);
            }
        }
    }
}
