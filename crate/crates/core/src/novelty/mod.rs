//! Package co-occurrence atypicality via a degree-preserving null model.
//!
//! For every year, projects and the packages they import form a binary
//! incidence matrix. A Monte-Carlo simulation redraws each project's imports
//! uniformly from the year's package universe while keeping the project's
//! import count fixed. Comparing observed pair co-occurrence against the
//! simulated mean and spread yields a z-score per package pair, which is
//! log-compressed into the smoothed score used downstream. A low smoothed
//! score marks a rare combination, the novelty proxy.

mod simulate;

pub use simulate::{simulate_null, NullStats};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imports::ImportProfile;

/// Replacement z magnitude when the null spread is zero but observation and
/// expectation differ. Far beyond any plausible finite z; smoothing
/// compresses it to about +/-3.93.
pub const Z_CAP: f64 = 50.0;

#[derive(Debug, Error)]
pub enum NoveltyError {
    #[error("no eligible profiles for year {0}")]
    EmptyYear(i32),
    #[error("profile {project_id} is not eligible for year {year}")]
    IneligibleProfile { project_id: String, year: i32 },
    #[error("duplicate project {0} in year matrix")]
    DuplicateProject(String),
    #[error("project {project_id} needs {degree} packages but the universe has {universe}")]
    DegreeExceedsUniverse {
        project_id: String,
        degree: usize,
        universe: usize,
    },
    #[error("pair ({a}, {b}) not covered by the year {year} table")]
    MissingPair { a: String, b: String, year: i32 },
}

/// Binary project-by-package incidence for one year. Rows and columns are
/// ordered by id, so construction is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct YearMatrix {
    pub year: i32,
    pub project_ids: Vec<String>,
    pub package_ids: Vec<String>,
    /// Per project, the sorted column indices it imports.
    rows: Vec<Vec<u32>>,
    pub row_degrees: Vec<usize>,
}

impl YearMatrix {
    /// Builds the matrix from explicit rows. The package universe is the
    /// given list (sorted, deduplicated); rows reference it by name.
    pub fn from_rows(
        year: i32,
        rows: Vec<(String, Vec<String>)>,
        universe: Vec<String>,
    ) -> Result<YearMatrix, NoveltyError> {
        let mut package_ids = universe;
        package_ids.sort();
        package_ids.dedup();
        let index: BTreeMap<&str, u32> = package_ids
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i as u32))
            .collect();

        let mut sorted_rows = rows;
        sorted_rows.sort_by(|a, b| a.0.cmp(&b.0));
        let mut project_ids = Vec::with_capacity(sorted_rows.len());
        let mut bit_rows = Vec::with_capacity(sorted_rows.len());
        for (project_id, packages) in sorted_rows {
            if project_ids.last() == Some(&project_id) {
                return Err(NoveltyError::DuplicateProject(project_id));
            }
            let mut cols: Vec<u32> = packages
                .iter()
                .map(|p| {
                    index.get(p.as_str()).copied().ok_or_else(|| {
                        NoveltyError::MissingPair {
                            a: p.clone(),
                            b: String::new(),
                            year,
                        }
                    })
                })
                .collect::<Result<_, _>>()?;
            cols.sort_unstable();
            cols.dedup();
            project_ids.push(project_id);
            bit_rows.push(cols);
        }
        let row_degrees = bit_rows.iter().map(Vec::len).collect();
        Ok(YearMatrix {
            year,
            project_ids,
            package_ids,
            rows: bit_rows,
            row_degrees,
        })
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn package_count(&self) -> usize {
        self.package_ids.len()
    }

    pub fn project_count(&self) -> usize {
        self.project_ids.len()
    }

    pub fn bit(&self, project: usize, package: u32) -> bool {
        self.rows[project].binary_search(&package).is_ok()
    }

    /// Observed co-occurrence count per package pair (canonical i < j keys).
    /// Only pairs appearing in at least one project are materialized.
    pub fn observed_counts(&self) -> BTreeMap<(u32, u32), u64> {
        let mut counts = BTreeMap::new();
        for row in &self.rows {
            for (a_pos, &a) in row.iter().enumerate() {
                for &b in &row[a_pos + 1..] {
                    *counts.entry((a, b)).or_insert(0u64) += 1;
                }
            }
        }
        counts
    }
}

/// Builds the year's incidence matrix from eligible import profiles.
pub fn build_year_matrix(
    profiles: &[ImportProfile],
    year: i32,
) -> Result<YearMatrix, NoveltyError> {
    let of_year: Vec<&ImportProfile> = profiles.iter().filter(|p| p.year == year).collect();
    if of_year.is_empty() {
        return Err(NoveltyError::EmptyYear(year));
    }
    if let Some(bad) = of_year.iter().find(|p| p.packages.len() < 2) {
        return Err(NoveltyError::IneligibleProfile {
            project_id: bad.project_id.clone(),
            year,
        });
    }
    let universe: Vec<String> = of_year
        .iter()
        .flat_map(|p| p.packages.iter().cloned())
        .collect();
    let rows = of_year
        .iter()
        .map(|p| (p.project_id.clone(), p.packages.iter().cloned().collect()))
        .collect();
    YearMatrix::from_rows(year, rows, universe)
}

/// Eq-style z: deviation of the observed pair count from the simulated
/// mean, in units of the simulated spread. With zero spread the score is 0
/// on exact agreement and +/-[`Z_CAP`] otherwise.
pub fn zscore(obs: f64, exp: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        if obs == exp {
            0.0
        } else {
            Z_CAP * (obs - exp).signum()
        }
    } else {
        (obs - exp) / sigma
    }
}

/// Signed log compression of a z-score: `ln(z+1)` for non-negative z,
/// `-ln(-z+1)` otherwise. Odd, strictly increasing, exact at 0.
pub fn smooth_z(z: f64) -> f64 {
    if z >= 0.0 {
        z.ln_1p()
    } else {
        -(-z).ln_1p()
    }
}

/// Atypicality scores for one pair of packages in one year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub obs: u64,
    pub exp: f64,
    pub sigma: f64,
    pub z: f64,
    pub z_smoothed: f64,
}

impl PairScore {
    const ZERO: PairScore = PairScore {
        obs: 0,
        exp: 0.0,
        sigma: 0.0,
        z: 0.0,
        z_smoothed: 0.0,
    };
}

/// Per-year map from unordered package pairs to their scores. Pairs of
/// in-universe packages that never co-occur (observed or simulated) resolve
/// to the all-zero score, so every project pair is always defined.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScoreTable {
    pub year: i32,
    pub package_ids: Vec<String>,
    index: BTreeMap<String, u32>,
    entries: BTreeMap<(u32, u32), PairScore>,
    pub runs: usize,
    pub seed: u64,
}

impl PairScoreTable {
    /// Symmetric lookup; argument order is irrelevant.
    pub fn get(&self, a: &str, b: &str) -> Result<PairScore, NoveltyError> {
        let ia = self.index.get(a).copied().ok_or_else(|| self.missing(a, b))?;
        let ib = self.index.get(b).copied().ok_or_else(|| self.missing(a, b))?;
        let key = (ia.min(ib), ia.max(ib));
        Ok(self.entries.get(&key).copied().unwrap_or(PairScore::ZERO))
    }

    fn missing(&self, a: &str, b: &str) -> NoveltyError {
        NoveltyError::MissingPair {
            a: a.to_string(),
            b: b.to_string(),
            year: self.year,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((&str, &str), &PairScore)> {
        self.entries.iter().map(|((a, b), score)| {
            (
                (
                    self.package_ids[*a as usize].as_str(),
                    self.package_ids[*b as usize].as_str(),
                ),
                score,
            )
        })
    }

    /// Flat records for JSONL emission, in canonical pair order.
    pub fn to_records(&self) -> Vec<PairScoreRecord> {
        self.iter()
            .map(|((a, b), s)| PairScoreRecord {
                pkg_a: a.to_string(),
                pkg_b: b.to_string(),
                obs: s.obs,
                exp: s.exp,
                sigma: s.sigma,
                z: s.z,
                z_smoothed: s.z_smoothed,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScoreRecord {
    pub pkg_a: String,
    pub pkg_b: String,
    pub obs: u64,
    pub exp: f64,
    pub sigma: f64,
    pub z: f64,
    pub z_smoothed: f64,
}

/// Scores every pair of one year's matrix against the simulated null.
pub fn score_year(
    matrix: &YearMatrix,
    runs: usize,
    seed: u64,
) -> Result<PairScoreTable, NoveltyError> {
    let null = simulate_null(matrix, runs, seed)?;
    let observed = matrix.observed_counts();

    let mut keys: Vec<(u32, u32)> = observed.keys().copied().collect();
    keys.extend(null.pairs());
    keys.sort_unstable();
    keys.dedup();

    let entries = keys
        .into_iter()
        .map(|key| {
            let obs = observed.get(&key).copied().unwrap_or(0);
            let (exp, sigma) = null.exp_sigma(key);
            let z = zscore(obs as f64, exp, sigma);
            (
                key,
                PairScore {
                    obs,
                    exp,
                    sigma,
                    z,
                    z_smoothed: smooth_z(z),
                },
            )
        })
        .collect();

    Ok(PairScoreTable {
        year: matrix.year,
        package_ids: matrix.package_ids.clone(),
        index: matrix
            .package_ids
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect(),
        entries,
        runs,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    Min,
    Mean,
}

impl std::str::FromStr for Aggregator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "min" => Ok(Aggregator::Min),
            "mean" => Ok(Aggregator::Mean),
            other => Err(format!("unknown aggregator {other:?} (expected min|mean)")),
        }
    }
}

/// Project-level novelty: the smoothed scores of all package pairs of one
/// project, reduced to their minimum and mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectNovelty {
    pub project_id: String,
    pub year: i32,
    pub min_z: f64,
    pub mean_z: f64,
    pub pair_count: usize,
    pub aggregator_used: Aggregator,
}

impl ProjectNovelty {
    /// The score the classifier consumes, per the chosen aggregator.
    pub fn aggregated(&self) -> f64 {
        match self.aggregator_used {
            Aggregator::Min => self.min_z,
            Aggregator::Mean => self.mean_z,
        }
    }
}

/// Reduces one project's pair scores. Every package of the profile must be
/// in the table's universe.
pub fn project_novelty(
    profile: &ImportProfile,
    table: &PairScoreTable,
    aggregator: Aggregator,
) -> Result<ProjectNovelty, NoveltyError> {
    if profile.packages.len() < 2 {
        return Err(NoveltyError::IneligibleProfile {
            project_id: profile.project_id.clone(),
            year: profile.year,
        });
    }
    let packages: Vec<&str> = profile.packages.iter().map(String::as_str).collect();
    let mut min_z = f64::INFINITY;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, a) in packages.iter().enumerate() {
        for b in &packages[i + 1..] {
            let score = table.get(a, b)?;
            min_z = min_z.min(score.z_smoothed);
            sum += score.z_smoothed;
            count += 1;
        }
    }
    Ok(ProjectNovelty {
        project_id: profile.project_id.clone(),
        year: profile.year,
        min_z,
        mean_z: sum / count as f64,
        pair_count: count,
        aggregator_used: aggregator,
    })
}

/// Full novelty stage: groups eligible profiles by year, scores each year,
/// and reduces every profile. Ineligible profiles are skipped.
pub fn score_profiles(
    profiles: &[ImportProfile],
    runs: usize,
    seed: u64,
    aggregator: Aggregator,
) -> Result<(BTreeMap<i32, PairScoreTable>, Vec<ProjectNovelty>), NoveltyError> {
    let eligible: Vec<ImportProfile> = profiles.iter().filter(|p| p.eligible()).cloned().collect();
    let mut years: Vec<i32> = eligible.iter().map(|p| p.year).collect();
    years.sort_unstable();
    years.dedup();

    let mut tables = BTreeMap::new();
    let mut novelties = Vec::new();
    for year in years {
        let matrix = build_year_matrix(&eligible, year)?;
        let table = score_year(&matrix, runs, seed)?;
        for profile in eligible.iter().filter(|p| p.year == year) {
            novelties.push(project_novelty(profile, &table, aggregator)?);
        }
        tables.insert(year, table);
    }
    novelties.sort_by(|a, b| a.project_id.cmp(&b.project_id));
    Ok((tables, novelties))
}
