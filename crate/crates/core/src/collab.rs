//! Collaboration accumulators, weighted-winning scores, team set features
//! and hackathon competition ratios.
//!
//! The accumulators walk projects and hackathons in chronological year order
//! (ids break ties within a year). Every unordered pair of co-members
//! increments the pair counter once per shared project or hackathon; each
//! member's participation counter increments by one, and the cumulative
//! repetition counter grows by the participation counter's current value,
//! which deliberately compounds repeated participation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Hackathon, Participant, Project};

/// Unordered creator pair; constructor normalizes the order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CreatorPair(String, String);

impl CreatorPair {
    pub fn new(a: &str, b: &str) -> CreatorPair {
        if a <= b {
            CreatorPair(a.to_string(), b.to_string())
        } else {
            CreatorPair(b.to_string(), a.to_string())
        }
    }

    pub fn first(&self) -> &str {
        &self.0
    }

    pub fn second(&self) -> &str {
        &self.1
    }
}

/// The six counter maps, in one state snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollabCounters {
    pub pair_projects: BTreeMap<CreatorPair, u64>,
    pub pair_hackathons: BTreeMap<CreatorPair, u64>,
    pub collab_repetition_project: BTreeMap<String, u64>,
    pub collab_repetition_hackathon: BTreeMap<String, u64>,
    pub repetition_project: BTreeMap<String, u64>,
    pub repetition_hackathon: BTreeMap<String, u64>,
}

impl CollabCounters {
    fn record_project_team(&mut self, members: &BTreeSet<&str>) {
        for a in members {
            for b in members.iter().filter(|b| *b > a) {
                *self.pair_projects.entry(CreatorPair::new(a, b)).or_insert(0) += 1;
            }
        }
        for member in members {
            let participation = self
                .collab_repetition_project
                .entry((*member).to_string())
                .or_insert(0);
            *participation += 1;
            let participation = *participation;
            *self.repetition_project.entry((*member).to_string()).or_insert(0) +=
                participation;
        }
    }

    fn record_hackathon_cohort(&mut self, members: &BTreeSet<&str>) {
        for a in members {
            for b in members.iter().filter(|b| *b > a) {
                *self.pair_hackathons.entry(CreatorPair::new(a, b)).or_insert(0) += 1;
            }
        }
        for member in members {
            let participation = self
                .collab_repetition_hackathon
                .entry((*member).to_string())
                .or_insert(0);
            *participation += 1;
            let participation = *participation;
            *self.repetition_hackathon.entry((*member).to_string()).or_insert(0) +=
                participation;
        }
    }
}

/// Final counters plus the cumulative state after each year.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollabMetrics {
    pub counters: CollabCounters,
    pub by_year: BTreeMap<i32, CollabCounters>,
}

#[derive(Debug, Error)]
pub enum CollabError {
    #[error("hackathon {0} has no submitted projects")]
    NoSubmissions(String),
    #[error("hackathon {0} has no linked participants")]
    NoParticipants(String),
}

/// Runs the accumulators over the whole corpus. Projects and hackathons
/// with no derivable year are processed before the first dated year.
pub fn accumulate_interactions(corpus: &Corpus) -> CollabMetrics {
    let mut projects: Vec<&Project> = corpus.projects.values().collect();
    projects.sort_by_key(|p| (p.year.unwrap_or(i32::MIN), p.id.clone()));
    let mut hackathons: Vec<&Hackathon> = corpus.hackathons.values().collect();
    hackathons.sort_by_key(|h| (h.year.unwrap_or(i32::MIN), h.id.clone()));

    let mut years: Vec<i32> = projects
        .iter()
        .filter_map(|p| p.year)
        .chain(hackathons.iter().filter_map(|h| h.year))
        .collect();
    years.sort_unstable();
    years.dedup();

    let mut counters = CollabCounters::default();
    let mut by_year = BTreeMap::new();
    let mut next_project = projects.into_iter().peekable();
    let mut next_hackathon = hackathons.into_iter().peekable();

    // Undated records first, outside any snapshot.
    while next_project.peek().is_some_and(|p| p.year.is_none()) {
        let project = next_project.next().unwrap();
        let members: BTreeSet<&str> = project.creator_ids.iter().map(String::as_str).collect();
        counters.record_project_team(&members);
    }
    while next_hackathon.peek().is_some_and(|h| h.year.is_none()) {
        let hackathon = next_hackathon.next().unwrap();
        let members = corpus.hackathon_creators(&hackathon.id);
        counters.record_hackathon_cohort(&members);
    }

    for year in years {
        while next_project.peek().is_some_and(|p| p.year == Some(year)) {
            let project = next_project.next().unwrap();
            let members: BTreeSet<&str> =
                project.creator_ids.iter().map(String::as_str).collect();
            counters.record_project_team(&members);
        }
        while next_hackathon.peek().is_some_and(|h| h.year == Some(year)) {
            let hackathon = next_hackathon.next().unwrap();
            let members = corpus.hackathon_creators(&hackathon.id);
            counters.record_hackathon_cohort(&members);
        }
        by_year.insert(year, counters.clone());
    }

    CollabMetrics { counters, by_year }
}

/// Per-participant mean of `places / (team size * submitted projects)` over
/// their winning entries; 0 with no wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedWinning {
    pub participant_id: String,
    pub n_won: usize,
    pub avg_weighted_winning: f64,
}

pub fn weighted_winning(participant: &Participant, corpus: &Corpus) -> WeightedWinning {
    let mut terms = Vec::new();
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    if let Some(project_ids) = corpus.participant_projects.get(&participant.id) {
        for pid in project_ids {
            let Some(project) = corpus.projects.get(pid) else {
                continue;
            };
            let team: BTreeSet<&str> = project.creator_ids.iter().map(String::as_str).collect();
            for entry in &project.hackathon_entries {
                if !entry.winner || !seen.insert((entry.hackathon_id.as_str(), pid.as_str())) {
                    continue;
                }
                let Some(hackathon) = corpus.hackathons.get(&entry.hackathon_id) else {
                    continue;
                };
                let submitted = corpus.submitted_project_count(&entry.hackathon_id);
                if team.is_empty() || submitted == 0 {
                    log::warn!(
                        "weighted winning: zero denominator for {} in {}; term skipped",
                        participant.id,
                        entry.hackathon_id
                    );
                    continue;
                }
                terms.push(hackathon.places as f64 / (team.len() * submitted) as f64);
            }
        }
    }
    let n_won = terms.len();
    let avg = if n_won == 0 {
        0.0
    } else {
        terms.iter().sum::<f64>() / n_won as f64
    };
    WeightedWinning {
        participant_id: participant.id.clone(),
        n_won,
        avg_weighted_winning: avg,
    }
}

/// Intersection/union set features over the team's interests and skills.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamFeatures {
    pub project_id: String,
    pub team_size: usize,
    pub common_interests: usize,
    pub different_interests: usize,
    pub all_interests: usize,
    pub common_skills: usize,
    pub different_skills: usize,
    pub all_skills: usize,
}

pub fn team_features(project: &Project, corpus: &Corpus) -> TeamFeatures {
    let member_ids: BTreeSet<&str> = project.creator_ids.iter().map(String::as_str).collect();
    let mut interest_sets = Vec::new();
    let mut skill_sets = Vec::new();
    for id in &member_ids {
        match corpus.participants.get(*id) {
            Some(p) => {
                interest_sets.push(p.interests.clone());
                skill_sets.push(p.skills.clone());
            }
            None => {
                log::warn!("team features: participant {id} missing; counted as empty sets");
                interest_sets.push(BTreeSet::new());
                skill_sets.push(BTreeSet::new());
            }
        }
    }
    let (common_interests, all_interests) = intersect_union(&interest_sets);
    let (common_skills, all_skills) = intersect_union(&skill_sets);
    TeamFeatures {
        project_id: project.id.clone(),
        team_size: member_ids.len(),
        common_interests,
        different_interests: all_interests - common_interests,
        all_interests,
        common_skills,
        different_skills: all_skills - common_skills,
        all_skills,
    }
}

fn intersect_union(sets: &[BTreeSet<String>]) -> (usize, usize) {
    let Some(first) = sets.first() else {
        return (0, 0);
    };
    let mut intersection = first.clone();
    let mut union = first.clone();
    for set in &sets[1..] {
        intersection.retain(|x| set.contains(x));
        union.extend(set.iter().cloned());
    }
    (intersection.len(), union.len())
}

/// Reserved winning spots relative to team and participant counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionMetrics {
    pub hackathon_id: String,
    pub competition_team: f64,
    pub competition_individual: f64,
}

pub fn competition(hackathon: &Hackathon, corpus: &Corpus) -> Result<CompetitionMetrics, CollabError> {
    let teams = corpus.submitted_project_count(&hackathon.id);
    if teams == 0 {
        return Err(CollabError::NoSubmissions(hackathon.id.clone()));
    }
    let participants = corpus.hackathon_creators(&hackathon.id).len();
    if participants == 0 {
        return Err(CollabError::NoParticipants(hackathon.id.clone()));
    }
    Ok(CompetitionMetrics {
        hackathon_id: hackathon.id.clone(),
        competition_team: hackathon.places as f64 / teams as f64,
        competition_individual: hackathon.places as f64 / participants as f64,
    })
}

/// JSONL record kinds for the collaboration metrics file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CollabRecord {
    Creator {
        creator_id: String,
        collab_repetition_project: u64,
        collab_repetition_hackathon: u64,
        repetition_project: u64,
        repetition_hackathon: u64,
        by_year: BTreeMap<i32, CreatorYearCounts>,
    },
    Pair {
        a: String,
        b: String,
        project_count: u64,
        hackathon_count: u64,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CreatorYearCounts {
    pub collab_repetition_project: u64,
    pub collab_repetition_hackathon: u64,
    pub repetition_project: u64,
    pub repetition_hackathon: u64,
}

impl CollabMetrics {
    /// Flattens the counters into serializable records, creators first.
    pub fn to_records(&self) -> Vec<CollabRecord> {
        let mut creator_ids: BTreeSet<&String> = self
            .counters
            .collab_repetition_project
            .keys()
            .chain(self.counters.collab_repetition_hackathon.keys())
            .collect();
        creator_ids.extend(self.counters.repetition_project.keys());

        let mut records: Vec<CollabRecord> = creator_ids
            .into_iter()
            .map(|id| {
                let by_year = self
                    .by_year
                    .iter()
                    .map(|(year, c)| {
                        (
                            *year,
                            CreatorYearCounts {
                                collab_repetition_project: c
                                    .collab_repetition_project
                                    .get(id)
                                    .copied()
                                    .unwrap_or(0),
                                collab_repetition_hackathon: c
                                    .collab_repetition_hackathon
                                    .get(id)
                                    .copied()
                                    .unwrap_or(0),
                                repetition_project: c
                                    .repetition_project
                                    .get(id)
                                    .copied()
                                    .unwrap_or(0),
                                repetition_hackathon: c
                                    .repetition_hackathon
                                    .get(id)
                                    .copied()
                                    .unwrap_or(0),
                            },
                        )
                    })
                    .collect();
                CollabRecord::Creator {
                    creator_id: id.clone(),
                    collab_repetition_project: self
                        .counters
                        .collab_repetition_project
                        .get(id)
                        .copied()
                        .unwrap_or(0),
                    collab_repetition_hackathon: self
                        .counters
                        .collab_repetition_hackathon
                        .get(id)
                        .copied()
                        .unwrap_or(0),
                    repetition_project: self
                        .counters
                        .repetition_project
                        .get(id)
                        .copied()
                        .unwrap_or(0),
                    repetition_hackathon: self
                        .counters
                        .repetition_hackathon
                        .get(id)
                        .copied()
                        .unwrap_or(0),
                    by_year,
                }
            })
            .collect();

        let mut pairs: BTreeSet<&CreatorPair> = self.counters.pair_projects.keys().collect();
        pairs.extend(self.counters.pair_hackathons.keys());
        records.extend(pairs.into_iter().map(|pair| CollabRecord::Pair {
            a: pair.first().to_string(),
            b: pair.second().to_string(),
            project_count: self.counters.pair_projects.get(pair).copied().unwrap_or(0),
            hackathon_count: self
                .counters
                .pair_hackathons
                .get(pair)
                .copied()
                .unwrap_or(0),
        }));
        records
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{HackathonEntry, Participant};
    use std::collections::BTreeMap as Map;

    fn corpus_with(
        hackathons: &[(&str, i32, u32)],
        projects: &[(&str, i32, &[&str], &[(&str, bool)])],
        participants: &[(&str, &[&str], &[&str])],
    ) -> Corpus {
        let mut corpus = Corpus::default();
        for (id, year, places) in hackathons {
            corpus.hackathons.insert(
                (*id).into(),
                Hackathon {
                    id: (*id).into(),
                    title: String::new(),
                    url: String::new(),
                    schedule_start: chrono::NaiveDate::from_ymd_opt(*year, 1, 1),
                    schedule_end: chrono::NaiveDate::from_ymd_opt(*year, 1, 2),
                    venue: "Somewhere".into(),
                    places: *places,
                    year: Some(*year),
                    duration_days: Some(1),
                    onsite: true,
                },
            );
        }
        for (id, _year, creators, entries) in projects {
            corpus.projects.insert(
                (*id).into(),
                Project {
                    id: (*id).into(),
                    title: String::new(),
                    creator_ids: creators.iter().map(|s| s.to_string()).collect(),
                    hackathon_entries: entries
                        .iter()
                        .map(|(hid, winner)| HackathonEntry {
                            hackathon_id: hid.to_string(),
                            winner: *winner,
                            like_count: 0,
                            comment_count: 0,
                        })
                        .collect(),
                    description_fields: Map::new(),
                    repo_links: vec![],
                    year: None,
                },
            );
        }
        for (id, interests, skills) in participants {
            corpus.participants.insert(
                (*id).into(),
                Participant {
                    id: (*id).into(),
                    interests: interests.iter().map(|s| s.to_string()).collect(),
                    skills: skills.iter().map(|s| s.to_string()).collect(),
                    follower_count: 0,
                    like_count: 0,
                    first_seen_year: None,
                    hackathon_ids: vec![],
                    project_ids: vec![],
                    has_followers: false,
                    has_likes: false,
                },
            );
        }
        corpus.relink();
        corpus
    }

    #[test]
    fn single_project_pair_count() {
        let corpus = corpus_with(
            &[("h1", 2020, 1)],
            &[("p1", 2020, &["A", "B"], &[("h1", false)])],
            &[("A", &[], &[]), ("B", &[], &[])],
        );
        let metrics = accumulate_interactions(&corpus);
        assert_eq!(
            metrics.counters.pair_projects.get(&CreatorPair::new("A", "B")),
            Some(&1)
        );
    }

    #[test]
    fn repeated_pair_counts_twice() {
        let corpus = corpus_with(
            &[("h1", 2020, 1)],
            &[
                ("p1", 2020, &["A", "B"], &[("h1", false)]),
                ("p2", 2020, &["A", "B"], &[("h1", false)]),
            ],
            &[("A", &[], &[]), ("B", &[], &[])],
        );
        let metrics = accumulate_interactions(&corpus);
        assert_eq!(
            metrics.counters.pair_projects.get(&CreatorPair::new("B", "A")),
            Some(&2)
        );
        // Two projects: participation 2, cumulative 1 + 2 = 3.
        assert_eq!(metrics.counters.collab_repetition_project.get("A"), Some(&2));
        assert_eq!(metrics.counters.repetition_project.get("A"), Some(&3));
    }

    #[test]
    fn pair_keys_are_symmetric() {
        assert_eq!(CreatorPair::new("x", "y"), CreatorPair::new("y", "x"));
    }

    #[test]
    fn yearly_snapshots_are_monotone() {
        let corpus = corpus_with(
            &[("h1", 2019, 1), ("h2", 2020, 1)],
            &[
                ("p1", 2019, &["A", "B"], &[("h1", false)]),
                ("p2", 2020, &["A", "B"], &[("h2", false)]),
                ("p3", 2020, &["A", "C"], &[("h2", false)]),
            ],
            &[("A", &[], &[]), ("B", &[], &[]), ("C", &[], &[])],
        );
        let metrics = accumulate_interactions(&corpus);
        let years: Vec<i32> = metrics.by_year.keys().copied().collect();
        assert_eq!(years, vec![2019, 2020]);
        let mut prev = 0;
        for counters in metrics.by_year.values() {
            let current = counters.repetition_project.get("A").copied().unwrap_or(0);
            assert!(current >= prev);
            prev = current;
        }
        assert_eq!(
            metrics.by_year[&2020].repetition_project.get("A"),
            metrics.counters.repetition_project.get("A")
        );
    }

    #[test]
    fn weighted_winning_examples() {
        // n=1, places=1, team of 1, 1 submitted project -> 1.0
        let corpus = corpus_with(
            &[("h1", 2020, 1)],
            &[("p1", 2020, &["A"], &[("h1", true)])],
            &[("A", &[], &[])],
        );
        let ww = weighted_winning(&corpus.participants["A"], &corpus);
        assert_eq!(ww.n_won, 1);
        assert_eq!(ww.avg_weighted_winning, 1.0);

        // n=1, places=2, team of 2, 10 submitted -> 2/(2*10) = 0.1
        let mut projects: Vec<(&str, i32, &[&str], &[(&str, bool)])> =
            vec![("p0", 2020, &["A", "B"], &[("h1", true)])];
        let fillers = [
            "p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "p9",
        ];
        for f in &fillers {
            projects.push((f, 2020, &["C"], &[("h1", false)]));
        }
        let corpus = corpus_with(
            &[("h1", 2020, 2)],
            &projects,
            &[("A", &[], &[]), ("B", &[], &[]), ("C", &[], &[])],
        );
        let ww = weighted_winning(&corpus.participants["A"], &corpus);
        assert_eq!(ww.n_won, 1);
        assert!((ww.avg_weighted_winning - 0.1).abs() < 1e-15);
    }

    #[test]
    fn weighted_winning_averages_terms() {
        // Terms 0.1 and 0.3 -> 0.2: h1 places 1, team 2, 5 submitted (0.1);
        // h2 places 3, team 2, 5 submitted (0.3).
        let projects: Vec<(&str, i32, &[&str], &[(&str, bool)])> = vec![
            ("p0", 2020, &["A", "B"], &[("h1", true)]),
            ("q0", 2020, &["A", "B"], &[("h2", true)]),
            ("p1", 2020, &["C"], &[("h1", false)]),
            ("p2", 2020, &["C"], &[("h1", false)]),
            ("p3", 2020, &["C"], &[("h1", false)]),
            ("p4", 2020, &["C"], &[("h1", false)]),
            ("q1", 2020, &["C"], &[("h2", false)]),
            ("q2", 2020, &["C"], &[("h2", false)]),
            ("q3", 2020, &["C"], &[("h2", false)]),
            ("q4", 2020, &["C"], &[("h2", false)]),
        ];
        let corpus = corpus_with(
            &[("h1", 2020, 1), ("h2", 2020, 3)],
            &projects,
            &[("A", &[], &[]), ("B", &[], &[]), ("C", &[], &[])],
        );
        let ww = weighted_winning(&corpus.participants["A"], &corpus);
        assert_eq!(ww.n_won, 2);
        assert!((ww.avg_weighted_winning - 0.2).abs() < 1e-15);
    }

    #[test]
    fn no_wins_scores_zero() {
        let corpus = corpus_with(
            &[("h1", 2020, 1)],
            &[("p1", 2020, &["A"], &[("h1", false)])],
            &[("A", &[], &[])],
        );
        let ww = weighted_winning(&corpus.participants["A"], &corpus);
        assert_eq!(ww.n_won, 0);
        assert_eq!(ww.avg_weighted_winning, 0.0);
    }

    #[test]
    fn team_feature_set_identities() {
        let corpus = corpus_with(
            &[("h1", 2020, 1)],
            &[
                ("solo", 2020, &["A"], &[("h1", false)]),
                ("duo", 2020, &["B", "C"], &[("h1", false)]),
            ],
            &[
                ("A", &["x", "y"], &[]),
                ("B", &["x", "y"], &["s"]),
                ("C", &["y", "z"], &["t"]),
            ],
        );
        let solo = team_features(&corpus.projects["solo"], &corpus);
        assert_eq!(
            (solo.common_interests, solo.different_interests, solo.all_interests),
            (2, 0, 2)
        );
        let duo = team_features(&corpus.projects["duo"], &corpus);
        assert_eq!(
            (duo.common_interests, duo.different_interests, duo.all_interests),
            (1, 2, 3)
        );
        assert_eq!((duo.common_skills, duo.different_skills, duo.all_skills), (0, 2, 2));
    }

    #[test]
    fn competition_ratios() {
        let mut projects: Vec<(&str, i32, &[&str], &[(&str, bool)])> = Vec::new();
        let names = [
            "t00", "t01", "t02", "t03", "t04", "t05", "t06", "t07", "t08", "t09",
        ];
        for name in &names {
            projects.push((name, 2020, &["A", "B"], &[("h1", false)]));
        }
        let corpus = corpus_with(
            &[("h1", 2020, 3)],
            &projects,
            &[("A", &[], &[]), ("B", &[], &[])],
        );
        let metrics = competition(&corpus.hackathons["h1"], &corpus).unwrap();
        assert!((metrics.competition_team - 0.3).abs() < 1e-15);
        assert!((metrics.competition_individual - 1.5).abs() < 1e-15);
    }

    #[test]
    fn competition_requires_submissions() {
        let corpus = corpus_with(&[("h1", 2020, 1)], &[], &[]);
        assert!(matches!(
            competition(&corpus.hackathons["h1"], &corpus),
            Err(CollabError::NoSubmissions(_))
        ));
    }

    #[test]
    fn conservation_of_pair_totals() {
        let corpus = corpus_with(
            &[("h1", 2020, 1)],
            &[
                ("p1", 2020, &["A", "B", "C"], &[("h1", false)]),
                ("p2", 2020, &["A", "B"], &[("h1", false)]),
                ("p3", 2020, &["D"], &[("h1", false)]),
            ],
            &[
                ("A", &[], &[]),
                ("B", &[], &[]),
                ("C", &[], &[]),
                ("D", &[], &[]),
            ],
        );
        let metrics = accumulate_interactions(&corpus);
        let total: u64 = metrics.counters.pair_projects.values().sum();
        // C(3,2) + C(2,2->1) + C(1,2->0) = 3 + 1 + 0.
        assert_eq!(total, 4);
    }
}
