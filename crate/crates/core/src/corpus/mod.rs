//! Domain model for hackathon snapshots and the preprocessing funnel.
//!
//! Entities arrive as JSONL snapshots (see [`load`]), are cross-validated and
//! linked into an immutable [`Corpus`], and then flow through the filtering
//! [`funnel`] that narrows all projects down to the novelty-eligible subset.

mod load;

pub use load::{
    load_corpus, save_corpus, CorpusError, CorpusPaths, LoadReport, LoadWarning, LoadedCorpus,
    MalformedRecord,
};

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

/// The five languages the analysis covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "Python")]
    Python,
    #[serde(rename = "Node.js")]
    NodeJs,
    #[serde(rename = "Java")]
    Java,
    #[serde(rename = "C#")]
    CSharp,
    #[serde(rename = "PHP")]
    Php,
}

impl Language {
    pub const ALL: [Language; 5] = [
        Language::Python,
        Language::NodeJs,
        Language::Java,
        Language::CSharp,
        Language::Php,
    ];

    /// Tie-break precedence when repositories mix languages (highest first).
    pub fn precedence(self) -> usize {
        match self {
            Language::Python => 0,
            Language::NodeJs => 1,
            Language::Java => 2,
            Language::CSharp => 3,
            Language::Php => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Language::Python => "Python",
            Language::NodeJs => "Node.js",
            Language::Java => "Java",
            Language::CSharp => "C#",
            Language::Php => "PHP",
        }
    }

    /// Parses both the display name and the short CLI tag (`py`, `js`, ...).
    pub fn parse(s: &str) -> Option<Language> {
        match s.trim().to_ascii_lowercase().as_str() {
            "python" | "py" => Some(Language::Python),
            "node.js" | "nodejs" | "node" | "js" => Some(Language::NodeJs),
            "java" => Some(Language::Java),
            "c#" | "csharp" | "cs" => Some(Language::CSharp),
            "php" => Some(Language::Php),
            _ => None,
        }
    }
}

/// Venue strings that mark a hackathon as not held on site.
/// Matched case-insensitively against the whole trimmed venue.
pub const ONLINE_MARKERS: [&str; 5] = ["online", "virtual", "remote", "digital", ""];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hackathon {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub url: String,
    pub schedule_start: Option<NaiveDate>,
    pub schedule_end: Option<NaiveDate>,
    #[serde(default)]
    pub venue: String,
    /// Count of reserved winning spots.
    #[serde(default)]
    pub places: u32,
    /// Derived: year of `schedule_start`.
    #[serde(default)]
    pub year: Option<i32>,
    /// Derived: whole days between start and end.
    #[serde(default)]
    pub duration_days: Option<i64>,
    /// Derived from `venue` via [`ONLINE_MARKERS`].
    #[serde(default)]
    pub onsite: bool,
}

/// One submission of a project to a hackathon, with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HackathonEntry {
    pub hackathon_id: String,
    #[serde(default)]
    pub winner: bool,
    #[serde(default)]
    pub like_count: u32,
    #[serde(default)]
    pub comment_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub creator_ids: Vec<String>,
    #[serde(default)]
    pub hackathon_entries: Vec<HackathonEntry>,
    #[serde(default)]
    pub description_fields: BTreeMap<String, String>,
    #[serde(default)]
    pub repo_links: Vec<String>,
    /// Derived: earliest linked hackathon's year, repo creation year as
    /// fallback. One year per project anchors the novelty simulation.
    #[serde(default)]
    pub year: Option<i32>,
}

impl Project {
    /// Won in any linked hackathon.
    pub fn is_winner(&self) -> bool {
        self.hackathon_entries.iter().any(|e| e.winner)
    }

    pub fn has_likes(&self) -> bool {
        self.hackathon_entries.iter().any(|e| e.like_count > 0)
    }

    pub fn has_comments(&self) -> bool {
        self.hackathon_entries.iter().any(|e| e.comment_count > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    #[serde(default)]
    pub interests: BTreeSet<String>,
    #[serde(default)]
    pub skills: BTreeSet<String>,
    #[serde(default)]
    pub follower_count: u32,
    #[serde(default)]
    pub like_count: u32,
    #[serde(default)]
    pub first_seen_year: Option<i32>,
    #[serde(default)]
    pub hackathon_ids: Vec<String>,
    #[serde(default)]
    pub project_ids: Vec<String>,
    /// Derived: `follower_count > 0`.
    #[serde(default)]
    pub has_followers: bool,
    /// Derived: `like_count > 0`.
    #[serde(default)]
    pub has_likes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoSnapshot {
    pub project_id: String,
    pub root_path: String,
    #[serde(default)]
    pub primary_languages: BTreeSet<Language>,
    #[serde(default)]
    pub license_id: Option<String>,
    pub created_at: Option<NaiveDate>,
    pub last_commit_at: Option<NaiveDate>,
    /// Derived: days between creation and last commit.
    #[serde(default)]
    pub lifespan_days: Option<i64>,
    #[serde(default)]
    pub stars: u32,
    #[serde(default)]
    pub watches: u32,
}

/// Fully linked snapshot. Immutable once loaded; shareable across threads.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub hackathons: BTreeMap<String, Hackathon>,
    pub projects: BTreeMap<String, Project>,
    pub participants: BTreeMap<String, Participant>,
    /// Repository snapshots keyed by project id.
    pub repos: BTreeMap<String, RepoSnapshot>,
    /// Hackathon id -> ids of projects submitted to it.
    pub hackathon_projects: BTreeMap<String, Vec<String>>,
    /// Participant id -> ids of projects they created.
    pub participant_projects: BTreeMap<String, Vec<String>>,
}

impl Corpus {
    /// Distinct projects submitted to a hackathon.
    pub fn submitted_project_count(&self, hackathon_id: &str) -> usize {
        self.hackathon_projects
            .get(hackathon_id)
            .map_or(0, |v| v.len())
    }

    /// Distinct creators across all projects submitted to a hackathon.
    pub fn hackathon_creators(&self, hackathon_id: &str) -> BTreeSet<&str> {
        let mut creators = BTreeSet::new();
        if let Some(project_ids) = self.hackathon_projects.get(hackathon_id) {
            for pid in project_ids {
                if let Some(project) = self.projects.get(pid) {
                    creators.extend(project.creator_ids.iter().map(String::as_str));
                }
            }
        }
        creators
    }

    /// Rebuilds both link indexes and derived project years. Called by the
    /// loader; exposed for tests that assemble a corpus in memory.
    pub fn relink(&mut self) {
        self.hackathon_projects.clear();
        self.participant_projects.clear();
        for (pid, project) in &self.projects {
            let mut seen = BTreeSet::new();
            for entry in &project.hackathon_entries {
                if self.hackathons.contains_key(&entry.hackathon_id)
                    && seen.insert(entry.hackathon_id.as_str())
                {
                    self.hackathon_projects
                        .entry(entry.hackathon_id.clone())
                        .or_default()
                        .push(pid.clone());
                }
            }
            for cid in &project.creator_ids {
                if self.participants.contains_key(cid) {
                    self.participant_projects
                        .entry(cid.clone())
                        .or_default()
                        .push(pid.clone());
                }
            }
        }
        let years: BTreeMap<String, Option<i32>> = self
            .projects
            .values()
            .map(|p| (p.id.clone(), self.derive_project_year(p)))
            .collect();
        for project in self.projects.values_mut() {
            project.year = years.get(&project.id).copied().flatten();
        }
    }

    fn derive_project_year(&self, project: &Project) -> Option<i32> {
        let from_hackathons = project
            .hackathon_entries
            .iter()
            .filter_map(|e| self.hackathons.get(&e.hackathon_id))
            .filter_map(|h| h.year)
            .min();
        from_hackathons.or_else(|| {
            self.repos
                .get(&project.id)
                .and_then(|r| r.created_at)
                .map(|d| d.year())
        })
    }

    /// Earliest linked hackathon (by year, then id); the grouping key for
    /// the feature table.
    pub fn primary_hackathon(&self, project: &Project) -> Option<&Hackathon> {
        project
            .hackathon_entries
            .iter()
            .filter_map(|e| self.hackathons.get(&e.hackathon_id))
            .min_by_key(|h| (h.year.unwrap_or(i32::MAX), h.id.clone()))
    }
}

/// Fills the derived fields of a raw hackathon record. Returns the record
/// plus an optional warning when the schedule could not be interpreted.
pub fn derive_hackathon_fields(mut h: Hackathon) -> (Hackathon, Option<LoadWarning>) {
    let mut warning = None;
    match (h.schedule_start, h.schedule_end) {
        (Some(start), Some(end)) => {
            if end < start {
                warning = Some(LoadWarning::UnparseableSchedule {
                    record_id: h.id.clone(),
                    reason: format!("schedule_end {end} precedes schedule_start {start}"),
                });
                h.schedule_start = None;
                h.schedule_end = None;
                h.year = None;
                h.duration_days = None;
            } else {
                h.year = Some(start.year());
                h.duration_days = Some((end - start).num_days());
            }
        }
        (Some(start), None) => {
            h.year = Some(start.year());
            h.duration_days = None;
        }
        _ => {
            h.year = None;
            h.duration_days = None;
        }
    }
    h.onsite = is_onsite(&h.venue);
    (h, warning)
}

/// Case-insensitive whole-string match against the online-marker list.
pub fn is_onsite(venue: &str) -> bool {
    let v = venue.trim().to_lowercase();
    !ONLINE_MARKERS.contains(&v.as_str())
}

/// Fills the derived fields of a participant record.
pub fn derive_participant_fields(mut p: Participant) -> Participant {
    p.has_followers = p.follower_count > 0;
    p.has_likes = p.like_count > 0;
    p
}

/// Fills the derived fields of a repo record. Inconsistent date pairs are
/// cleared and reported.
pub fn derive_repo_fields(mut r: RepoSnapshot) -> (RepoSnapshot, Option<LoadWarning>) {
    let mut warning = None;
    r.lifespan_days = match (r.created_at, r.last_commit_at) {
        (Some(created), Some(last)) => {
            if last < created {
                warning = Some(LoadWarning::UnparseableSchedule {
                    record_id: r.project_id.clone(),
                    reason: format!("last_commit_at {last} precedes created_at {created}"),
                });
                None
            } else {
                Some((last - created).num_days())
            }
        }
        _ => None,
    };
    (r, warning)
}

/// Per-project import statistics the funnel's last two stages consume.
/// Decoupled from the imports module so this module stays upstream of it.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ProfileStats {
    pub script_count: usize,
    pub package_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunnelStage {
    pub name: String,
    pub count: usize,
    #[serde(skip)]
    pub surviving: BTreeSet<String>,
}

/// Ordered filtering stages from the raw snapshot down to the subset
/// eligible for novelty analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunnelReport {
    pub stages: Vec<FunnelStage>,
}

impl FunnelReport {
    /// Aligned-column rendering for terminals.
    pub fn to_text(&self) -> String {
        let width = self
            .stages
            .iter()
            .map(|s| s.name.len())
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        for stage in &self.stages {
            out.push_str(&format!("{:width$}  {}\n", stage.name, stage.count));
        }
        out
    }
}

pub const FUNNEL_STAGE_NAMES: [&str; 6] = [
    "all projects",
    "has repo link",
    "repo accessible",
    "top-5 language",
    "scripts non-empty",
    ">=2 imported packages",
];

/// Runs the six-stage preprocessing funnel. `repo_check` decides whether a
/// linked repository snapshot is accessible; `profiles` supplies per-project
/// import statistics for the last two stages.
pub fn funnel(
    corpus: &Corpus,
    repo_check: impl Fn(&RepoSnapshot) -> bool,
    profiles: &BTreeMap<String, ProfileStats>,
) -> FunnelReport {
    let all: BTreeSet<String> = corpus.projects.keys().cloned().collect();
    let has_link: BTreeSet<String> = all
        .iter()
        .filter(|id| !corpus.projects[*id].repo_links.is_empty())
        .cloned()
        .collect();
    let accessible: BTreeSet<String> = has_link
        .iter()
        .filter(|id| corpus.repos.get(*id).is_some_and(&repo_check))
        .cloned()
        .collect();
    let top5: BTreeSet<String> = accessible
        .iter()
        .filter(|id| !corpus.repos[*id].primary_languages.is_empty())
        .cloned()
        .collect();
    let scripted: BTreeSet<String> = top5
        .iter()
        .filter(|id| profiles.get(*id).is_some_and(|s| s.script_count > 0))
        .cloned()
        .collect();
    let eligible: BTreeSet<String> = scripted
        .iter()
        .filter(|id| profiles.get(*id).is_some_and(|s| s.package_count >= 2))
        .cloned()
        .collect();

    let stages = FUNNEL_STAGE_NAMES
        .iter()
        .zip([all, has_link, accessible, top5, scripted, eligible])
        .map(|(name, surviving)| FunnelStage {
            name: (*name).to_string(),
            count: surviving.len(),
            surviving,
        })
        .collect();
    FunnelReport { stages }
}
