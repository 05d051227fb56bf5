//! Usefulness flags, the creative/non-creative label and the
//! regression-ready feature table.
//!
//! A project is creative when it won any linked hackathon and its
//! aggregated smoothed novelty score is at or below the threshold. The
//! feature table carries one row per labeled project, grouped by its
//! earliest linked hackathon, with individual-level columns averaged over
//! the team.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collab::{competition, team_features, CollabMetrics, WeightedWinning};
use crate::corpus::{Corpus, Project};
use crate::imports::DataProfile;
use crate::judge::DescriptionDistances;
use crate::novelty::{Aggregator, ProjectNovelty};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("feature table has no rows")]
    EmptyTable,
    #[error("features file: {0}")]
    Io(#[from] std::io::Error),
    #[error("features file: {0}")]
    Csv(#[from] csv::Error),
    #[error("features file: {0}")]
    BadColumn(String),
}

/// Accessibility-oriented usefulness signals for one project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsefulnessFlags {
    pub project_id: String,
    pub is_winner: bool,
    pub has_noncode_data: bool,
    pub has_license: bool,
}

pub fn usefulness_flags(project: &Project, data_profile: Option<&DataProfile>) -> UsefulnessFlags {
    UsefulnessFlags {
        project_id: project.id.clone(),
        is_winner: project.is_winner(),
        has_noncode_data: data_profile
            .is_some_and(|d| d.noncode_file_count > 0 || d.noncode_folder_count > 0),
        has_license: data_profile.is_some_and(|d| d.has_license),
    }
}

/// Outcome of one hackathon entry, retained for grouping and auditing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryOutcome {
    pub hackathon_id: String,
    pub winner: bool,
}

/// Per-project creative label with its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreativeLabel {
    pub project_id: String,
    pub is_winner: bool,
    pub has_noncode_data: bool,
    pub has_license: bool,
    /// Aggregated smoothed novelty score (per `aggregator`).
    pub novelty_z: f64,
    pub min_z: f64,
    pub mean_z: f64,
    pub aggregator: Aggregator,
    pub z_threshold: f64,
    pub novel: bool,
    pub creative: bool,
    pub entries: Vec<EntryOutcome>,
}

/// Combines usefulness flags and aggregated novelty into the label:
/// novel when the score is at or below `tau`, creative when also a winner.
pub fn creative_label(
    flags: &UsefulnessFlags,
    novelty: &ProjectNovelty,
    tau: f64,
    entries: Vec<EntryOutcome>,
) -> CreativeLabel {
    let score = novelty.aggregated();
    let novel = score <= tau;
    CreativeLabel {
        project_id: flags.project_id.clone(),
        is_winner: flags.is_winner,
        has_noncode_data: flags.has_noncode_data,
        has_license: flags.has_license,
        novelty_z: score,
        min_z: novelty.min_z,
        mean_z: novelty.mean_z,
        aggregator: novelty.aggregator_used,
        z_threshold: tau,
        novel,
        creative: flags.is_winner && novel,
        entries,
    }
}

/// Labels every scored project. Warns when more than half the projects
/// come out creative, which almost always means a misconfigured threshold.
pub fn build_labels(
    corpus: &Corpus,
    data_profiles: &BTreeMap<String, DataProfile>,
    novelties: &[ProjectNovelty],
    tau: f64,
) -> BTreeMap<String, CreativeLabel> {
    let mut labels = BTreeMap::new();
    for novelty in novelties {
        let Some(project) = corpus.projects.get(&novelty.project_id) else {
            log::warn!("novelty record for unknown project {}", novelty.project_id);
            continue;
        };
        let flags = usefulness_flags(project, data_profiles.get(&project.id));
        let entries = project
            .hackathon_entries
            .iter()
            .map(|e| EntryOutcome {
                hackathon_id: e.hackathon_id.clone(),
                winner: e.winner,
            })
            .collect();
        labels.insert(
            project.id.clone(),
            creative_label(&flags, novelty, tau, entries),
        );
    }
    if !labels.is_empty() {
        let creative = labels.values().filter(|l| l.creative).count();
        let fraction = creative as f64 / labels.len() as f64;
        if fraction > 0.5 {
            log::warn!(
                "{:.1}% of projects labeled creative; check the z threshold",
                100.0 * fraction
            );
        }
    }
    labels
}

/// Feature column names in emission order.
pub const FEATURE_COLUMNS: [&str; 32] = [
    "hackathon_participants",
    "hackathon_onsite",
    "hackathon_duration_days",
    "team_competition",
    "team_size",
    "team_common_interests",
    "team_different_interests",
    "team_all_interests",
    "team_common_skills",
    "team_different_skills",
    "team_all_skills",
    "team_collab_repetition_project",
    "team_collab_repetition_hackathon",
    "project_has_likes",
    "project_has_comments",
    "repo_watches",
    "noncode_bytes",
    "repo_lifespan_days",
    "repo_stars",
    "cos_i_w",
    "cos_r_w",
    "has_license",
    "noncode_file_count",
    "noncode_folder_count",
    "ind_avg_won_hackathons",
    "ind_avg_weighted_winning",
    "ind_repetition_project",
    "ind_repetition_hackathon",
    "ind_has_followers",
    "ind_avg_hackathon_count",
    "ind_competition",
    "ind_has_likes",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub project_id: String,
    pub hackathon_id: String,
    pub creative: bool,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
    pub scaled: bool,
}

pub struct FeatureInputs<'a> {
    pub corpus: &'a Corpus,
    pub labels: &'a BTreeMap<String, CreativeLabel>,
    pub data_profiles: &'a BTreeMap<String, DataProfile>,
    pub collab: &'a CollabMetrics,
    pub weighted: &'a BTreeMap<String, WeightedWinning>,
    pub distances: &'a BTreeMap<String, DescriptionDistances>,
    /// Standardize non-binary numeric columns to mean 0 / sd 1.
    pub scale: bool,
}

/// Assembles the project-level design table. Missing numerics are imputed
/// with the column mean before optional standardization; binary columns
/// (all values 0/1) are never scaled. Projects without a linked hackathon
/// are dropped with a warning.
pub fn build_feature_table(inputs: &FeatureInputs<'_>) -> Result<FeatureTable, ClassifyError> {
    let corpus = inputs.corpus;
    let mut rows = Vec::new();
    let mut raw: Vec<Vec<Option<f64>>> = Vec::new();

    for (project_id, label) in inputs.labels {
        let Some(project) = corpus.projects.get(project_id) else {
            continue;
        };
        let Some(hackathon) = corpus.primary_hackathon(project) else {
            log::warn!("project {project_id} has no grouping hackathon; row dropped");
            continue;
        };
        let comp = competition(hackathon, corpus).ok();
        let team = team_features(project, corpus);
        let members: Vec<&crate::corpus::Participant> = project
            .creator_ids
            .iter()
            .filter_map(|id| corpus.participants.get(id))
            .collect();
        let data = inputs.data_profiles.get(project_id);
        let repo = corpus.repos.get(project_id);
        let dist = inputs.distances.get(project_id);

        let member_mean = |f: &dyn Fn(&crate::corpus::Participant) -> f64| -> Option<f64> {
            if members.is_empty() {
                None
            } else {
                Some(members.iter().map(|m| f(m)).sum::<f64>() / members.len() as f64)
            }
        };
        let counter_mean = |map: &BTreeMap<String, u64>| -> Option<f64> {
            if members.is_empty() {
                None
            } else {
                Some(
                    members
                        .iter()
                        .map(|m| map.get(&m.id).copied().unwrap_or(0) as f64)
                        .sum::<f64>()
                        / members.len() as f64,
                )
            }
        };

        let values: Vec<Option<f64>> = vec![
            Some(corpus.hackathon_creators(&hackathon.id).len() as f64),
            Some(if hackathon.onsite { 1.0 } else { 0.0 }),
            hackathon.duration_days.map(|d| d as f64),
            comp.as_ref().map(|c| c.competition_team),
            Some(team.team_size as f64),
            Some(team.common_interests as f64),
            Some(team.different_interests as f64),
            Some(team.all_interests as f64),
            Some(team.common_skills as f64),
            Some(team.different_skills as f64),
            Some(team.all_skills as f64),
            counter_mean(&inputs.collab.counters.collab_repetition_project),
            counter_mean(&inputs.collab.counters.collab_repetition_hackathon),
            Some(if project.has_likes() { 1.0 } else { 0.0 }),
            Some(if project.has_comments() { 1.0 } else { 0.0 }),
            repo.map(|r| r.watches as f64),
            data.map(|d| d.noncode_bytes as f64),
            repo.and_then(|r| r.lifespan_days).map(|d| d as f64),
            repo.map(|r| r.stars as f64),
            dist.and_then(|d| d.cos_i_w),
            dist.and_then(|d| d.cos_r_w),
            Some(if label.has_license { 1.0 } else { 0.0 }),
            data.map(|d| d.noncode_file_count as f64),
            data.map(|d| d.noncode_folder_count as f64),
            member_mean(&|m| {
                inputs
                    .weighted
                    .get(&m.id)
                    .map(|w| w.n_won as f64)
                    .unwrap_or(0.0)
            }),
            member_mean(&|m| {
                inputs
                    .weighted
                    .get(&m.id)
                    .map(|w| w.avg_weighted_winning)
                    .unwrap_or(0.0)
            }),
            counter_mean(&inputs.collab.counters.repetition_project),
            counter_mean(&inputs.collab.counters.repetition_hackathon),
            member_mean(&|m| if m.has_followers { 1.0 } else { 0.0 }),
            member_mean(&|m| m.hackathon_ids.len() as f64),
            comp.as_ref().map(|c| c.competition_individual),
            member_mean(&|m| if m.has_likes { 1.0 } else { 0.0 }),
        ];
        debug_assert_eq!(values.len(), FEATURE_COLUMNS.len());
        raw.push(values);
        rows.push(FeatureRow {
            project_id: project_id.clone(),
            hackathon_id: hackathon.id.clone(),
            creative: label.creative,
            values: Vec::new(),
        });
    }

    if rows.is_empty() {
        return Err(ClassifyError::EmptyTable);
    }
    let filled = impute_and_scale(&raw, inputs.scale);
    for (row, values) in rows.iter_mut().zip(filled) {
        row.values = values;
    }
    Ok(FeatureTable {
        columns: FEATURE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
        scaled: inputs.scale,
    })
}

/// Mean-imputes missing cells per column, then standardizes non-binary
/// columns to sample mean 0 / sd 1 when `scale` is set.
fn impute_and_scale(raw: &[Vec<Option<f64>>], scale: bool) -> Vec<Vec<f64>> {
    let n = raw.len();
    let p = raw.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; p]; n];
    for j in 0..p {
        let present: Vec<f64> = raw.iter().filter_map(|r| r[j]).collect();
        let mean = if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        };
        let column: Vec<f64> = raw.iter().map(|r| r[j].unwrap_or(mean)).collect();
        let binary = column.iter().all(|v| *v == 0.0 || *v == 1.0);
        if !scale || binary {
            for (i, v) in column.into_iter().enumerate() {
                out[i][j] = v;
            }
            continue;
        }
        let m = column.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            column.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        for (i, v) in column.into_iter().enumerate() {
            out[i][j] = if sd > 0.0 { (v - m) / sd } else { 0.0 };
        }
    }
    out
}

/// Writes the table as RFC-4180 CSV with a header row.
pub fn write_features_csv(table: &FeatureTable, path: &Path) -> Result<(), ClassifyError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["project_id".to_string(), "hackathon_id".to_string(), "creative".to_string()];
    header.extend(table.columns.iter().cloned());
    writer.write_record(&header)?;
    for row in &table.rows {
        let mut record = vec![
            row.project_id.clone(),
            row.hackathon_id.clone(),
            if row.creative { "1".to_string() } else { "0".to_string() },
        ];
        record.extend(row.values.iter().map(|v| format!("{v}")));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Design matrix view of a features CSV for the regression stage.
pub struct RegressionData {
    /// Intercept column first.
    pub design: DMatrix<f64>,
    pub response: DVector<f64>,
    pub groups: Vec<usize>,
    pub group_names: Vec<String>,
    pub names: Vec<String>,
}

/// Reads a features CSV back into a design matrix. `columns` selects a
/// subset of feature columns (all when empty); `label` and `group` name
/// the response and grouping columns.
pub fn read_features_csv(
    path: &Path,
    label: &str,
    group: &str,
    columns: &[String],
) -> Result<RegressionData, ClassifyError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    let label_idx = header
        .iter()
        .position(|h| h == label)
        .ok_or_else(|| ClassifyError::BadColumn(format!("label column {label:?} not found")))?;
    let group_idx = header
        .iter()
        .position(|h| h == group)
        .ok_or_else(|| ClassifyError::BadColumn(format!("group column {group:?} not found")))?;
    let feature_idx: Vec<usize> = if columns.is_empty() {
        header
            .iter()
            .enumerate()
            .filter(|(i, h)| {
                *i != label_idx && *i != group_idx && h.as_str() != "project_id"
            })
            .map(|(i, _)| i)
            .collect()
    } else {
        columns
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| ClassifyError::BadColumn(format!("column {c:?} not found")))
            })
            .collect::<Result<_, _>>()?
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut response = Vec::new();
    let mut groups = Vec::new();
    let mut group_names: Vec<String> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let y: f64 = record
            .get(label_idx)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ClassifyError::BadColumn(format!("bad {label} value")))?;
        response.push(y);
        let group_name = record.get(group_idx).unwrap_or("").to_string();
        let gid = match group_names.iter().position(|g| *g == group_name) {
            Some(i) => i,
            None => {
                group_names.push(group_name);
                group_names.len() - 1
            }
        };
        groups.push(gid);
        let mut row = Vec::with_capacity(feature_idx.len() + 1);
        row.push(1.0);
        for &idx in &feature_idx {
            let v: f64 = record
                .get(idx)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| ClassifyError::BadColumn(format!("bad value in column {idx}")))?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ClassifyError::EmptyTable);
    }
    let p = rows[0].len();
    let design = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let mut names = vec!["(intercept)".to_string()];
    names.extend(feature_idx.iter().map(|&i| header[i].clone()));
    Ok(RegressionData {
        design,
        response: DVector::from_vec(response),
        groups,
        group_names,
        names,
    })
}
