//! JSONL snapshot ingestion with cross-reference validation.
//!
//! Loading fails only on malformed records (invalid JSON, missing required
//! fields, duplicate ids). Snapshot inconsistencies that real crawls
//! accumulate (dangling references, unparseable dates, unknown languages)
//! are collected as warnings and the corpus loads anyway.

use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use super::{
    derive_hackathon_fields, derive_participant_fields, derive_repo_fields, Corpus, Hackathon,
    Language, Participant, Project, RepoSnapshot,
};
use crate::jsonl;

/// Locations of the four entity snapshot files.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub hackathons: PathBuf,
    pub projects: PathBuf,
    pub participants: PathBuf,
    pub repos: PathBuf,
}

impl CorpusPaths {
    /// Standard layout: `<dir>/{hackathons,projects,participants,repos}.jsonl`.
    pub fn from_dir(dir: &Path) -> Self {
        CorpusPaths {
            hackathons: dir.join("hackathons.jsonl"),
            projects: dir.join("projects.jsonl"),
            participants: dir.join("participants.jsonl"),
            repos: dir.join("repos.jsonl"),
        }
    }
}

/// A record that could not be accepted; collected before loading fails.
#[derive(Debug, Clone)]
pub struct MalformedRecord {
    pub file: String,
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for MalformedRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.reason)
    }
}

/// Snapshot inconsistency kept as a warning.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadWarning {
    /// A link names an entity that is not in the snapshot.
    DanglingReference {
        entity: String,
        id: String,
        missing_kind: String,
        missing_id: String,
    },
    UnparseableSchedule {
        record_id: String,
        reason: String,
    },
    UnknownLanguage {
        record_id: String,
        language: String,
    },
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadWarning::DanglingReference {
                entity,
                id,
                missing_kind,
                missing_id,
            } => write!(
                f,
                "{entity} {id} references missing {missing_kind} {missing_id}"
            ),
            LoadWarning::UnparseableSchedule { record_id, reason } => {
                write!(f, "{record_id}: unparseable schedule: {reason}")
            }
            LoadWarning::UnknownLanguage {
                record_id,
                language,
            } => write!(f, "{record_id}: unknown language {language:?} dropped"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub warnings: Vec<LoadWarning>,
}

impl LoadReport {
    pub fn dangling_count(&self) -> usize {
        self.warnings
            .iter()
            .filter(|w| matches!(w, LoadWarning::DanglingReference { .. }))
            .count()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{} malformed record(s); first: {}", .0.len(), .0[0])]
    Malformed(Vec<MalformedRecord>),
}

/// A corpus together with the warnings its load produced.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub report: LoadReport,
}

#[derive(Deserialize)]
struct RawHackathon {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    url: String,
    #[serde(default)]
    schedule_start: Option<String>,
    #[serde(default)]
    schedule_end: Option<String>,
    #[serde(default)]
    venue: String,
    #[serde(default)]
    places: u32,
}

#[derive(Deserialize)]
struct RawRepo {
    project_id: String,
    #[serde(default)]
    root_path: String,
    #[serde(default)]
    primary_languages: Vec<String>,
    #[serde(default)]
    license_id: Option<String>,
    #[serde(default)]
    created_at: Option<String>,
    #[serde(default)]
    last_commit_at: Option<String>,
    #[serde(default)]
    stars: u32,
    #[serde(default)]
    watches: u32,
}

/// Accepts `YYYY-MM-DD` or an RFC 3339 timestamp.
fn parse_date(s: &str) -> Option<NaiveDate> {
    s.parse::<NaiveDate>()
        .ok()
        .or_else(|| chrono::DateTime::parse_from_rfc3339(s).ok().map(|d| d.date_naive()))
}

fn take_date(
    raw: Option<String>,
    record_id: &str,
    field: &str,
    warnings: &mut Vec<LoadWarning>,
) -> Option<NaiveDate> {
    let s = raw?;
    if s.trim().is_empty() {
        return None;
    }
    match parse_date(&s) {
        Some(d) => Some(d),
        None => {
            warnings.push(LoadWarning::UnparseableSchedule {
                record_id: record_id.to_string(),
                reason: format!("{field} {s:?} is not an ISO-8601 date"),
            });
            None
        }
    }
}

/// Loads and links the four snapshot files. Derived fields are populated;
/// dangling references become warnings in the report.
pub fn load_corpus(paths: &CorpusPaths) -> Result<LoadedCorpus, CorpusError> {
    let mut malformed = Vec::new();
    let mut warnings = Vec::new();
    let mut corpus = Corpus::default();

    let (raw_hackathons, bad) = jsonl::read_jsonl::<RawHackathon>(&paths.hackathons)?;
    collect_bad(&paths.hackathons, bad, &mut malformed);
    for raw in raw_hackathons {
        let schedule_start = take_date(raw.schedule_start, &raw.id, "schedule_start", &mut warnings);
        let schedule_end = take_date(raw.schedule_end, &raw.id, "schedule_end", &mut warnings);
        let (h, warning) = derive_hackathon_fields(Hackathon {
            id: raw.id,
            title: raw.title,
            url: raw.url,
            schedule_start,
            schedule_end,
            venue: raw.venue,
            places: raw.places,
            year: None,
            duration_days: None,
            onsite: false,
        });
        warnings.extend(warning);
        if corpus.hackathons.insert(h.id.clone(), h.clone()).is_some() {
            malformed.push(duplicate(&paths.hackathons, "hackathon", &h.id));
        }
    }

    let (projects, bad) = jsonl::read_jsonl::<Project>(&paths.projects)?;
    collect_bad(&paths.projects, bad, &mut malformed);
    for p in projects {
        if corpus.projects.insert(p.id.clone(), p.clone()).is_some() {
            malformed.push(duplicate(&paths.projects, "project", &p.id));
        }
    }

    let (participants, bad) = jsonl::read_jsonl::<Participant>(&paths.participants)?;
    collect_bad(&paths.participants, bad, &mut malformed);
    for p in participants {
        let p = derive_participant_fields(p);
        if corpus.participants.insert(p.id.clone(), p.clone()).is_some() {
            malformed.push(duplicate(&paths.participants, "participant", &p.id));
        }
    }

    let (raw_repos, bad) = jsonl::read_jsonl::<RawRepo>(&paths.repos)?;
    collect_bad(&paths.repos, bad, &mut malformed);
    for raw in raw_repos {
        let created_at = take_date(raw.created_at, &raw.project_id, "created_at", &mut warnings);
        let last_commit_at =
            take_date(raw.last_commit_at, &raw.project_id, "last_commit_at", &mut warnings);
        let mut languages = std::collections::BTreeSet::new();
        for lang in &raw.primary_languages {
            match Language::parse(lang) {
                Some(l) => {
                    languages.insert(l);
                }
                None => warnings.push(LoadWarning::UnknownLanguage {
                    record_id: raw.project_id.clone(),
                    language: lang.clone(),
                }),
            }
        }
        let (r, warning) = derive_repo_fields(RepoSnapshot {
            project_id: raw.project_id,
            root_path: raw.root_path,
            primary_languages: languages,
            license_id: raw.license_id.filter(|s| !s.trim().is_empty()),
            created_at,
            last_commit_at,
            lifespan_days: None,
            stars: raw.stars,
            watches: raw.watches,
        });
        warnings.extend(warning);
        if corpus.repos.insert(r.project_id.clone(), r.clone()).is_some() {
            malformed.push(duplicate(&paths.repos, "repo", &r.project_id));
        }
    }

    if !malformed.is_empty() {
        return Err(CorpusError::Malformed(malformed));
    }

    validate_links(&corpus, &mut warnings);
    corpus.relink();
    Ok(LoadedCorpus {
        corpus,
        report: LoadReport { warnings },
    })
}

fn collect_bad(path: &Path, bad: Vec<jsonl::BadLine>, malformed: &mut Vec<MalformedRecord>) {
    let file = path.display().to_string();
    malformed.extend(bad.into_iter().map(|b| MalformedRecord {
        file: file.clone(),
        line: b.line,
        reason: b.reason,
    }));
}

fn duplicate(path: &Path, kind: &str, id: &str) -> MalformedRecord {
    MalformedRecord {
        file: path.display().to_string(),
        line: 0,
        reason: format!("duplicate {kind} id {id:?}"),
    }
}

fn validate_links(corpus: &Corpus, warnings: &mut Vec<LoadWarning>) {
    let mut dangling = |entity: &str, id: &str, missing_kind: &str, missing_id: &str| {
        warnings.push(LoadWarning::DanglingReference {
            entity: entity.to_string(),
            id: id.to_string(),
            missing_kind: missing_kind.to_string(),
            missing_id: missing_id.to_string(),
        });
    };
    for project in corpus.projects.values() {
        for cid in &project.creator_ids {
            if !corpus.participants.contains_key(cid) {
                dangling("project", &project.id, "participant", cid);
            }
        }
        for entry in &project.hackathon_entries {
            if !corpus.hackathons.contains_key(&entry.hackathon_id) {
                dangling("project", &project.id, "hackathon", &entry.hackathon_id);
            }
        }
    }
    for participant in corpus.participants.values() {
        for pid in &participant.project_ids {
            if !corpus.projects.contains_key(pid) {
                dangling("participant", &participant.id, "project", pid);
            }
        }
        for hid in &participant.hackathon_ids {
            if !corpus.hackathons.contains_key(hid) {
                dangling("participant", &participant.id, "hackathon", hid);
            }
        }
    }
    for repo in corpus.repos.values() {
        if !corpus.projects.contains_key(&repo.project_id) {
            dangling("repo", &repo.project_id, "project", &repo.project_id);
        }
    }
}

/// Serializes a corpus back to the standard four-file JSONL layout.
/// Reloading the result yields an identical corpus.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let hackathons: Vec<_> = corpus.hackathons.values().collect();
    let projects: Vec<_> = corpus.projects.values().collect();
    let participants: Vec<_> = corpus.participants.values().collect();
    let repos: Vec<_> = corpus.repos.values().collect();
    jsonl::write_jsonl(&dir.join("hackathons.jsonl"), &hackathons)?;
    jsonl::write_jsonl(&dir.join("projects.jsonl"), &projects)?;
    jsonl::write_jsonl(&dir.join("participants.jsonl"), &participants)?;
    jsonl::write_jsonl(&dir.join("repos.jsonl"), &repos)?;
    Ok(())
}
