//! Score bucketing and chance-corrected inter-rater agreement.
//!
//! Humans and model judges are treated uniformly as raters over items.
//! Pairwise agreement is unweighted Cohen's kappa with pairwise deletion of
//! missing ratings; all-rater agreement is Fleiss' kappa with listwise
//! deletion. Scores can be coarsened through bucket schemes before either.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgreementError {
    #[error("score {0} outside 1..=5")]
    ScoreOutOfRange(u8),
    #[error("fewer than 2 items rated by both raters")]
    InsufficientOverlap,
    #[error("degenerate marginals: a single shared category with disagreement")]
    DegenerateMarginals,
    #[error("all ratings fall in one category")]
    AllOneCategory,
    #[error("unknown rater {0}")]
    UnknownRater(String),
    #[error("bad bucket scheme {0:?}: {1}")]
    BadScheme(String, String),
    #[error("ratings file: {0}")]
    Io(#[from] std::io::Error),
    #[error("ratings file: {0}")]
    Csv(#[from] csv::Error),
}

/// Item-by-rater integer grid; `None` marks a missing rating.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    pub items: Vec<String>,
    pub raters: Vec<String>,
    scores: Vec<Option<u8>>,
}

impl RatingMatrix {
    pub fn new(items: Vec<String>, raters: Vec<String>) -> RatingMatrix {
        let scores = vec![None; items.len() * raters.len()];
        RatingMatrix {
            items,
            raters,
            scores,
        }
    }

    pub fn set(&mut self, item: usize, rater: usize, score: Option<u8>) {
        let cols = self.raters.len();
        self.scores[item * cols + rater] = score;
    }

    pub fn get(&self, item: usize, rater: usize) -> Option<u8> {
        self.scores[item * self.raters.len() + rater]
    }

    pub fn rater_index(&self, rater: &str) -> Option<usize> {
        self.raters.iter().position(|r| r == rater)
    }

    /// One rater's scores across all items.
    pub fn column(&self, rater: usize) -> Vec<Option<u8>> {
        (0..self.items.len()).map(|i| self.get(i, rater)).collect()
    }

    fn row(&self, item: usize) -> &[Option<u8>] {
        let cols = self.raters.len();
        &self.scores[item * cols..(item + 1) * cols]
    }
}

/// Total mapping from raw scores 1..=5 to bucket indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketScheme {
    pub name: String,
    mapping: [u8; 5],
}

impl BucketScheme {
    /// Scores 1-3 vs 4-5.
    pub fn coarse() -> BucketScheme {
        BucketScheme {
            name: "coarse".into(),
            mapping: [0, 0, 0, 1, 1],
        }
    }

    /// Scores 1-2 vs 3 vs 4-5.
    pub fn mid() -> BucketScheme {
        BucketScheme {
            name: "mid".into(),
            mapping: [0, 0, 1, 2, 2],
        }
    }

    /// Every score its own bucket.
    pub fn fine() -> BucketScheme {
        BucketScheme {
            name: "fine".into(),
            mapping: [0, 1, 2, 3, 4],
        }
    }

    pub fn by_name(name: &str) -> Option<BucketScheme> {
        match name {
            "coarse" => Some(Self::coarse()),
            "mid" => Some(Self::mid()),
            "fine" => Some(Self::fine()),
            _ => None,
        }
    }

    /// Parses custom partitions such as `"1-2|3-5"`. Groups are separated
    /// by `|`; each group is a single score or an inclusive range. The
    /// partition must cover 1..=5 without overlap.
    pub fn parse(spec: &str) -> Result<BucketScheme, AgreementError> {
        if let Some(named) = Self::by_name(spec) {
            return Ok(named);
        }
        let bad = |why: &str| AgreementError::BadScheme(spec.to_string(), why.to_string());
        let mut mapping = [u8::MAX; 5];
        for (bucket, group) in spec.split('|').enumerate() {
            let group = group.trim();
            let (lo, hi) = match group.split_once('-') {
                Some((lo, hi)) => (
                    lo.trim().parse::<u8>().map_err(|_| bad("bad number"))?,
                    hi.trim().parse::<u8>().map_err(|_| bad("bad number"))?,
                ),
                None => {
                    let v = group.parse::<u8>().map_err(|_| bad("bad number"))?;
                    (v, v)
                }
            };
            if !(1..=5).contains(&lo) || !(1..=5).contains(&hi) || lo > hi {
                return Err(bad("range outside 1..=5"));
            }
            for score in lo..=hi {
                if mapping[(score - 1) as usize] != u8::MAX {
                    return Err(bad("overlapping groups"));
                }
                mapping[(score - 1) as usize] = bucket as u8;
            }
        }
        if mapping.contains(&u8::MAX) {
            return Err(bad("scores not fully covered"));
        }
        Ok(BucketScheme {
            name: spec.to_string(),
            mapping,
        })
    }

    pub fn apply(&self, score: u8) -> Result<u8, AgreementError> {
        if (1..=5).contains(&score) {
            Ok(self.mapping[(score - 1) as usize])
        } else {
            Err(AgreementError::ScoreOutOfRange(score))
        }
    }
}

/// Replaces raw scores by bucket indices; missing ratings are preserved.
pub fn bucket(m: &RatingMatrix, scheme: &BucketScheme) -> Result<RatingMatrix, AgreementError> {
    let mut out = RatingMatrix::new(m.items.clone(), m.raters.clone());
    for item in 0..m.items.len() {
        for rater in 0..m.raters.len() {
            let mapped = match m.get(item, rater) {
                Some(score) => Some(scheme.apply(score)?),
                None => None,
            };
            out.set(item, rater, mapped);
        }
    }
    Ok(out)
}

const MARGINAL_EPS: f64 = 1e-12;

/// Unweighted Cohen's kappa over two rater columns, with pairwise deletion.
pub fn cohen_kappa(a: &[Option<u8>], b: &[Option<u8>]) -> Result<f64, AgreementError> {
    let pairs: Vec<(u8, u8)> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.len() < 2 {
        return Err(AgreementError::InsufficientOverlap);
    }
    let n = pairs.len() as f64;
    let categories: BTreeSet<u8> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    let observed = pairs.iter().filter(|(x, y)| x == y).count() as f64 / n;
    let expected: f64 = categories
        .iter()
        .map(|&c| {
            let pa = pairs.iter().filter(|(x, _)| *x == c).count() as f64 / n;
            let pb = pairs.iter().filter(|(_, y)| *y == c).count() as f64 / n;
            pa * pb
        })
        .sum();
    if (1.0 - expected).abs() < MARGINAL_EPS {
        return if (1.0 - observed).abs() < MARGINAL_EPS {
            Ok(1.0)
        } else {
            Err(AgreementError::DegenerateMarginals)
        };
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Fleiss' kappa over all raters, dropping incompletely rated items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleissKappa {
    pub kappa: f64,
    pub items_used: usize,
    pub items_dropped: usize,
}

pub fn fleiss_kappa(m: &RatingMatrix) -> Result<FleissKappa, AgreementError> {
    let rater_count = m.raters.len();
    if rater_count < 2 {
        return Err(AgreementError::InsufficientOverlap);
    }
    let complete: Vec<usize> = (0..m.items.len())
        .filter(|&i| m.row(i).iter().all(Option::is_some))
        .collect();
    let dropped = m.items.len() - complete.len();
    if complete.len() < 2 {
        return Err(AgreementError::InsufficientOverlap);
    }

    let categories: BTreeSet<u8> = complete
        .iter()
        .flat_map(|&i| m.row(i).iter().flatten().copied())
        .collect();
    let n = rater_count as f64;
    let total = complete.len() as f64;

    let mut category_mass: BTreeMap<u8, f64> = BTreeMap::new();
    let mut item_agreement_sum = 0.0;
    for &i in &complete {
        let mut counts: BTreeMap<u8, f64> = BTreeMap::new();
        for score in m.row(i).iter().flatten() {
            *counts.entry(*score).or_insert(0.0) += 1.0;
        }
        let sum_sq: f64 = counts.values().map(|c| c * c).sum();
        item_agreement_sum += (sum_sq - n) / (n * (n - 1.0));
        for (cat, c) in counts {
            *category_mass.entry(cat).or_insert(0.0) += c;
        }
    }
    let p_bar = item_agreement_sum / total;
    let p_expected: f64 = categories
        .iter()
        .map(|c| {
            let share = category_mass.get(c).copied().unwrap_or(0.0) / (total * n);
            share * share
        })
        .sum();
    if (1.0 - p_expected).abs() < MARGINAL_EPS {
        return Err(AgreementError::AllOneCategory);
    }
    Ok(FleissKappa {
        kappa: (p_bar - p_expected) / (1.0 - p_expected),
        items_used: complete.len(),
        items_dropped: dropped,
    })
}

/// One heatmap cell: either a kappa value or the reason it is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaCell {
    Value(f64),
    Degenerate { error: String },
}

/// Pairwise kappa over all rater pairs after bucketing; the diagonal is 1.
pub fn pairwise_heatmap(m: &RatingMatrix, scheme: &BucketScheme) -> Result<Vec<Vec<KappaCell>>, AgreementError> {
    let bucketed = bucket(m, scheme)?;
    let r = bucketed.raters.len();
    let pairs: Vec<(usize, usize)> = (0..r)
        .flat_map(|i| (i + 1..r).map(move |j| (i, j)))
        .collect();
    let computed: Vec<((usize, usize), Result<f64, AgreementError>)> = pairs
        .into_par_iter()
        .map(|(i, j)| {
            let a = bucketed.column(i);
            let b = bucketed.column(j);
            ((i, j), cohen_kappa(&a, &b))
        })
        .collect();

    let mut grid = vec![vec![KappaCell::Value(1.0); r]; r];
    for ((i, j), result) in computed {
        let cell = match result {
            Ok(v) => KappaCell::Value(v),
            Err(e) => KappaCell::Degenerate { error: e.to_string() },
        };
        grid[i][j] = cell.clone();
        grid[j][i] = cell;
    }
    Ok(grid)
}

/// Per-scheme, per-dimension agreement summary for `agreement.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementReport {
    pub schemes: BTreeMap<String, SchemeAgreement>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeAgreement {
    pub novelty: DimensionAgreement,
    pub usefulness: DimensionAgreement,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionAgreement {
    pub raters: Vec<String>,
    pub pairwise: Vec<Vec<KappaCell>>,
    pub fleiss: Option<FleissKappa>,
    pub fleiss_error: Option<String>,
}

fn dimension_agreement(
    matrix: &RatingMatrix,
    scheme: &BucketScheme,
) -> Result<DimensionAgreement, AgreementError> {
    let pairwise = pairwise_heatmap(matrix, scheme)?;
    let (fleiss, fleiss_error) = match bucket(matrix, scheme).and_then(|b| fleiss_kappa(&b)) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(DimensionAgreement {
        raters: matrix.raters.clone(),
        pairwise,
        fleiss,
        fleiss_error,
    })
}

/// Computes the full agreement report over both dimensions and the given
/// schemes.
pub fn compute_report(
    novelty: &RatingMatrix,
    usefulness: &RatingMatrix,
    schemes: &[BucketScheme],
) -> Result<AgreementReport, AgreementError> {
    let mut out = BTreeMap::new();
    for scheme in schemes {
        out.insert(
            scheme.name.clone(),
            SchemeAgreement {
                novelty: dimension_agreement(novelty, scheme)?,
                usefulness: dimension_agreement(usefulness, scheme)?,
            },
        );
    }
    Ok(AgreementReport { schemes: out })
}

/// Long-format ratings row: one (item, rater) pair with both dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatingRecord {
    pub item_id: String,
    pub rater_id: String,
    pub novelty: Option<u8>,
    pub usefulness: Option<u8>,
}

/// Reads `ratings.csv` (item_id, rater_id, novelty, usefulness) into one
/// matrix per dimension. Raters and items keep first-seen order.
pub fn read_ratings(path: &Path) -> Result<(RatingMatrix, RatingMatrix), AgreementError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.deserialize::<RatingRecord>() {
        records.push(row?);
    }
    build_matrices(&records)
}

pub fn build_matrices(
    records: &[RatingRecord],
) -> Result<(RatingMatrix, RatingMatrix), AgreementError> {
    let mut items = Vec::new();
    let mut raters = Vec::new();
    for rec in records {
        if !items.contains(&rec.item_id) {
            items.push(rec.item_id.clone());
        }
        if !raters.contains(&rec.rater_id) {
            raters.push(rec.rater_id.clone());
        }
    }
    let mut novelty = RatingMatrix::new(items.clone(), raters.clone());
    let mut usefulness = RatingMatrix::new(items.clone(), raters.clone());
    for rec in records {
        for score in [rec.novelty, rec.usefulness].into_iter().flatten() {
            if !(1..=5).contains(&score) {
                return Err(AgreementError::ScoreOutOfRange(score));
            }
        }
        let item = items.iter().position(|i| *i == rec.item_id).unwrap();
        let rater = raters.iter().position(|r| *r == rec.rater_id).unwrap();
        novelty.set(item, rater, rec.novelty);
        usefulness.set(item, rater, rec.usefulness);
    }
    Ok((novelty, usefulness))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[u8]) -> Vec<Option<u8>> {
        values.iter().map(|v| Some(*v)).collect()
    }

    #[test]
    fn bucket_schemes_map_as_documented() {
        let coarse = BucketScheme::coarse();
        assert_eq!(coarse.apply(3).unwrap(), 0);
        assert_eq!(coarse.apply(4).unwrap(), 1);
        let fine = BucketScheme::fine();
        for s in 1..=5 {
            assert_eq!(fine.apply(s).unwrap(), s - 1);
        }
        let mid = BucketScheme::mid();
        let expected = [0, 0, 1, 2, 2];
        for s in 1..=5u8 {
            assert_eq!(mid.apply(s).unwrap(), expected[(s - 1) as usize]);
        }
    }

    #[test]
    fn custom_scheme_parsing() {
        let scheme = BucketScheme::parse("1-2|3-5").unwrap();
        assert_eq!(scheme.apply(2).unwrap(), 0);
        assert_eq!(scheme.apply(3).unwrap(), 1);
        assert_eq!(scheme.apply(5).unwrap(), 1);
        assert!(BucketScheme::parse("1-2|2-5").is_err());
        assert!(BucketScheme::parse("1-2|4-5").is_err());
        assert!(BucketScheme::parse("0-5").is_err());
    }

    #[test]
    fn bucketing_preserves_missing() {
        let mut m = RatingMatrix::new(vec!["i1".into()], vec!["a".into(), "b".into()]);
        m.set(0, 0, Some(4));
        let out = bucket(&m, &BucketScheme::coarse()).unwrap();
        assert_eq!(out.get(0, 0), Some(1));
        assert_eq!(out.get(0, 1), None);
    }

    #[test]
    fn identical_raters_have_kappa_one() {
        let a = col(&[1, 2, 3, 2, 1]);
        assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn cohen_hand_examples() {
        // p_o = 0.5, p_e = 0.5 -> 0.
        let k = cohen_kappa(&col(&[1, 1, 2, 2]), &col(&[1, 2, 1, 2])).unwrap();
        assert!(k.abs() < 1e-12);
        // p_o = 0.75, p_e = 0.5 -> 0.5.
        let k = cohen_kappa(&col(&[1, 1, 1, 2]), &col(&[1, 1, 2, 2])).unwrap();
        assert!((k - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cohen_constant_equal_raters() {
        assert_eq!(cohen_kappa(&col(&[2, 2, 2]), &col(&[2, 2, 2])).unwrap(), 1.0);
    }

    #[test]
    fn cohen_pairwise_deletion() {
        let a = vec![Some(1), None, Some(2), Some(2)];
        let b = vec![Some(1), Some(2), None, Some(2)];
        // Only items 0 and 3 overlap; both agree.
        assert_eq!(cohen_kappa(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn fleiss_unanimity_is_one() {
        let mut m = RatingMatrix::new(
            (0..4).map(|i| format!("i{i}")).collect(),
            vec!["a".into(), "b".into(), "c".into()],
        );
        for item in 0..4 {
            for rater in 0..3 {
                m.set(item, rater, Some((item % 5) as u8 + 1));
            }
        }
        let result = fleiss_kappa(&m).unwrap();
        assert!((result.kappa - 1.0).abs() < 1e-12);
        assert_eq!(result.items_dropped, 0);
    }

    #[test]
    fn fleiss_balanced_disagreement_is_negative() {
        // 2 items, 2 raters, complete disagreement, balanced categories:
        // P_bar = 0, P_e = 0.5 -> kappa = -1.
        let mut m = RatingMatrix::new(
            vec!["i1".into(), "i2".into()],
            vec!["a".into(), "b".into()],
        );
        m.set(0, 0, Some(1));
        m.set(0, 1, Some(2));
        m.set(1, 0, Some(2));
        m.set(1, 1, Some(1));
        let result = fleiss_kappa(&m).unwrap();
        assert!((result.kappa + 1.0).abs() < 1e-12);
    }

    #[test]
    fn fleiss_drops_incomplete_items() {
        let mut m = RatingMatrix::new(
            vec!["i1".into(), "i2".into(), "i3".into()],
            vec!["a".into(), "b".into()],
        );
        m.set(0, 0, Some(1));
        m.set(0, 1, Some(1));
        m.set(1, 0, Some(2));
        m.set(1, 1, Some(2));
        m.set(2, 0, Some(3));
        let result = fleiss_kappa(&m).unwrap();
        assert_eq!(result.items_used, 2);
        assert_eq!(result.items_dropped, 1);
    }

    #[test]
    fn fleiss_single_category_errors() {
        let mut m = RatingMatrix::new(
            vec!["i1".into(), "i2".into()],
            vec!["a".into(), "b".into()],
        );
        for item in 0..2 {
            for rater in 0..2 {
                m.set(item, rater, Some(3));
            }
        }
        assert!(matches!(fleiss_kappa(&m), Err(AgreementError::AllOneCategory)));
    }

    #[test]
    fn heatmap_matches_direct_calls() {
        let mut m = RatingMatrix::new(
            (0..6).map(|i| format!("i{i}")).collect(),
            vec!["a".into(), "b".into(), "c".into()],
        );
        let grid = [
            [1, 1, 2],
            [2, 2, 3],
            [3, 3, 4],
            [4, 4, 5],
            [5, 5, 1],
            [1, 2, 2],
        ];
        for (item, row) in grid.iter().enumerate() {
            for (rater, &score) in row.iter().enumerate() {
                m.set(item, rater, Some(score));
            }
        }
        let scheme = BucketScheme::fine();
        let heatmap = pairwise_heatmap(&m, &scheme).unwrap();
        let bucketed = bucket(&m, &scheme).unwrap();
        for i in 0..3 {
            assert_eq!(heatmap[i][i], KappaCell::Value(1.0));
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let direct = cohen_kappa(&bucketed.column(i), &bucketed.column(j));
                match (&heatmap[i][j], direct) {
                    (KappaCell::Value(v), Ok(d)) => assert!((v - d).abs() < 1e-15),
                    (KappaCell::Degenerate { .. }, Err(_)) => {}
                    other => panic!("mismatch: {other:?}"),
                }
                assert_eq!(heatmap[i][j], heatmap[j][i]);
            }
        }
    }

    #[test]
    fn chance_level_agreement_is_near_zero() {
        use rand::Rng;
        let mut rng = crate::rng::substream(99, "agreement.chance");
        let a: Vec<Option<u8>> = (0..10_000).map(|_| Some(rng.gen_range(1..=5u8))).collect();
        let b: Vec<Option<u8>> = (0..10_000).map(|_| Some(rng.gen_range(1..=5u8))).collect();
        let k = cohen_kappa(&a, &b).unwrap();
        assert!(k.abs() < 0.05, "kappa {k}");
    }

    #[test]
    fn kappa_never_exceeds_one() {
        use rand::Rng;
        let mut rng = crate::rng::substream(5, "agreement.bound");
        for _ in 0..50 {
            let a: Vec<Option<u8>> = (0..30).map(|_| Some(rng.gen_range(1..=5u8))).collect();
            let b: Vec<Option<u8>> = (0..30)
                .map(|i| if rng.gen_bool(0.5) { a[i] } else { Some(rng.gen_range(1..=5u8)) })
                .collect();
            if let Ok(k) = cohen_kappa(&a, &b) {
                assert!(k <= 1.0 + 1e-12);
            }
        }
    }
}
