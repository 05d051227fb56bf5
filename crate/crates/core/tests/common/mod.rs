//! Shared fixtures and independent oracles for the integration suites.
//!
//! The oracles here deliberately re-derive results through different data
//! structures than the library (dense incidence matrices, quadratic pair
//! scans, closed forms) so agreement is meaningful.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use creascope_core::corpus::{Corpus, Hackathon, HackathonEntry, Participant, Project};
use creascope_core::imports::ImportProfile;
use creascope_core::novelty::YearMatrix;
use creascope_core::rng::{novelty_run_path, substream};
use rand::Rng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn profile(id: &str, year: i32, packages: &[&str]) -> ImportProfile {
    ImportProfile {
        project_id: id.into(),
        year,
        language: creascope_core::corpus::Language::Python,
        packages: packages.iter().map(|s| s.to_string()).collect(),
        script_count: 1,
    }
}

/// Independent recomputation of one year's pair scores: dense incidence,
/// quadratic pair counting, and the pinned draw procedure (per-run
/// substream, partial Fisher-Yates of the sorted universe).
pub struct OracleScores {
    pub packages: Vec<String>,
    /// (pkg_a, pkg_b) -> (obs, exp, sigma, z, z_smoothed), canonical order.
    pub pairs: BTreeMap<(String, String), (u64, f64, f64, f64, f64)>,
}

pub fn oracle_scores(matrix: &YearMatrix, runs: usize, seed: u64) -> OracleScores {
    let universe = matrix.package_count();
    let projects = matrix.project_count();

    // Dense observed incidence.
    let mut observed = vec![vec![false; universe]; projects];
    for (i, row) in (0..projects).map(|i| (i, matrix.row(i))) {
        for &col in row {
            observed[i][col as usize] = true;
        }
    }
    let count_pairs = |incidence: &Vec<Vec<bool>>| -> Vec<Vec<u64>> {
        let mut counts = vec![vec![0u64; universe]; universe];
        for a in 0..universe {
            for b in (a + 1)..universe {
                for row in incidence {
                    if row[a] && row[b] {
                        counts[a][b] += 1;
                    }
                }
            }
        }
        counts
    };
    let obs_counts = count_pairs(&observed);

    // Simulated runs with the pinned substream and draw procedure.
    let mut sums = vec![vec![0u64; universe]; universe];
    let mut sumsqs = vec![vec![0u64; universe]; universe];
    for run in 0..runs {
        let mut rng = substream(seed, &novelty_run_path(matrix.year, run));
        let mut incidence = vec![vec![false; universe]; projects];
        for (i, &degree) in matrix.row_degrees.iter().enumerate() {
            let mut pool: Vec<u32> = (0..universe as u32).collect();
            for slot in 0..degree {
                let pick = rng.gen_range(slot..universe);
                pool.swap(slot, pick);
            }
            for &col in &pool[..degree] {
                incidence[i][col as usize] = true;
            }
        }
        let run_counts = count_pairs(&incidence);
        for a in 0..universe {
            for b in (a + 1)..universe {
                let c = run_counts[a][b];
                sums[a][b] += c;
                sumsqs[a][b] += c * c;
            }
        }
    }

    let mut pairs = BTreeMap::new();
    for a in 0..universe {
        for b in (a + 1)..universe {
            let obs = obs_counts[a][b];
            let (sum, sumsq) = (sums[a][b], sumsqs[a][b]);
            if obs == 0 && sum == 0 {
                continue;
            }
            let exp = sum as f64 / runs as f64;
            let var = sumsq as f64 / runs as f64 - exp * exp;
            let sigma = var.max(0.0).sqrt();
            let z = if sigma == 0.0 {
                if obs as f64 == exp {
                    0.0
                } else {
                    50.0 * (obs as f64 - exp).signum()
                }
            } else {
                (obs as f64 - exp) / sigma
            };
            let z_smoothed = if z < 0.0 { -(-z).ln_1p() } else { z.ln_1p() };
            pairs.insert(
                (
                    matrix.package_ids[a].clone(),
                    matrix.package_ids[b].clone(),
                ),
                (obs, exp, sigma, z, z_smoothed),
            );
        }
    }
    OracleScores {
        packages: matrix.package_ids.clone(),
        pairs,
    }
}

/// Closed-form collaboration counters from a quadratic scan.
pub struct OracleCollab {
    pub pair_projects: BTreeMap<(String, String), u64>,
    pub pair_hackathons: BTreeMap<(String, String), u64>,
    pub collab_repetition_project: BTreeMap<String, u64>,
    pub collab_repetition_hackathon: BTreeMap<String, u64>,
    pub repetition_project: BTreeMap<String, u64>,
    pub repetition_hackathon: BTreeMap<String, u64>,
}

pub fn oracle_collab(corpus: &Corpus) -> OracleCollab {
    let project_teams: Vec<BTreeSet<&str>> = corpus
        .projects
        .values()
        .map(|p| p.creator_ids.iter().map(String::as_str).collect())
        .collect();
    let hackathon_cohorts: Vec<BTreeSet<&str>> = corpus
        .hackathons
        .keys()
        .map(|hid| corpus.hackathon_creators(hid))
        .collect();

    let creators: BTreeSet<&str> = project_teams
        .iter()
        .chain(&hackathon_cohorts)
        .flatten()
        .copied()
        .collect();

    let mut out = OracleCollab {
        pair_projects: BTreeMap::new(),
        pair_hackathons: BTreeMap::new(),
        collab_repetition_project: BTreeMap::new(),
        collab_repetition_hackathon: BTreeMap::new(),
        repetition_project: BTreeMap::new(),
        repetition_hackathon: BTreeMap::new(),
    };

    let key = |a: &str, b: &str| {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    };
    for (i, a) in creators.iter().enumerate() {
        for b in creators.iter().skip(i + 1) {
            let shared_projects = project_teams
                .iter()
                .filter(|t| t.contains(a) && t.contains(b))
                .count() as u64;
            if shared_projects > 0 {
                out.pair_projects.insert(key(a, b), shared_projects);
            }
            let shared_hackathons = hackathon_cohorts
                .iter()
                .filter(|t| t.contains(a) && t.contains(b))
                .count() as u64;
            if shared_hackathons > 0 {
                out.pair_hackathons.insert(key(a, b), shared_hackathons);
            }
        }
    }
    // Participation n gives cumulative repetition 1 + 2 + ... + n.
    for c in &creators {
        let n_projects = project_teams.iter().filter(|t| t.contains(c)).count() as u64;
        if n_projects > 0 {
            out.collab_repetition_project.insert(c.to_string(), n_projects);
            out.repetition_project
                .insert(c.to_string(), n_projects * (n_projects + 1) / 2);
        }
        let n_hackathons = hackathon_cohorts.iter().filter(|t| t.contains(c)).count() as u64;
        if n_hackathons > 0 {
            out.collab_repetition_hackathon
                .insert(c.to_string(), n_hackathons);
            out.repetition_hackathon
                .insert(c.to_string(), n_hackathons * (n_hackathons + 1) / 2);
        }
    }
    out
}

/// A 9-creator / 6-project / 3-hackathon corpus with overlapping teams.
pub fn collab_fixture_corpus() -> Corpus {
    let mut corpus = Corpus::default();
    let hackathons = [("ha", 2019, 2u32), ("hb", 2020, 3), ("hc", 2021, 1)];
    for (id, year, places) in hackathons {
        corpus.hackathons.insert(
            id.into(),
            Hackathon {
                id: id.into(),
                title: String::new(),
                url: String::new(),
                schedule_start: chrono::NaiveDate::from_ymd_opt(year, 3, 1),
                schedule_end: chrono::NaiveDate::from_ymd_opt(year, 3, 2),
                venue: "Hall".into(),
                places,
                year: Some(year),
                duration_days: Some(1),
                onsite: true,
            },
        );
    }
    let projects: [(&str, &str, &[&str], bool); 6] = [
        ("q1", "ha", &["c1", "c2", "c3"], true),
        ("q2", "ha", &["c2", "c4"], false),
        ("q3", "hb", &["c1", "c2"], false),
        ("q4", "hb", &["c5", "c6", "c7"], true),
        ("q5", "hc", &["c7", "c8"], false),
        ("q6", "hc", &["c1", "c8", "c9"], true),
    ];
    for (id, hid, team, winner) in projects {
        corpus.projects.insert(
            id.into(),
            Project {
                id: id.into(),
                title: String::new(),
                creator_ids: team.iter().map(|s| s.to_string()).collect(),
                hackathon_entries: vec![HackathonEntry {
                    hackathon_id: hid.into(),
                    winner,
                    like_count: 0,
                    comment_count: 0,
                }],
                description_fields: BTreeMap::new(),
                repo_links: vec![],
                year: None,
            },
        );
    }
    for i in 1..=9 {
        let id = format!("c{i}");
        corpus.participants.insert(
            id.clone(),
            Participant {
                id,
                interests: BTreeSet::new(),
                skills: BTreeSet::new(),
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
