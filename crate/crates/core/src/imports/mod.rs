//! Import profiling and non-code data profiling of repository trees.

mod extract;

pub use extract::extract_imports;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Language, ProfileStats, RepoSnapshot};

/// File extensions counted as non-code data, outside dependency/vendor dirs.
pub const NONCODE_EXTENSIONS: [&str; 20] = [
    "csv", "json", "tsv", "xml", "txt", "md", "yaml", "yml", "xlsx", "parquet", "db", "sqlite",
    "png", "jpg", "jpeg", "svg", "wav", "mp3", "mp4", "pdf",
];

/// Directories whose contents never count as project data.
pub const EXCLUDED_DIRS: [&str; 3] = ["node_modules", "vendor", ".git"];

/// Source-file extensions per language.
pub fn source_extensions(language: Language) -> &'static [&'static str] {
    match language {
        Language::Python => &["py"],
        Language::NodeJs => &["js", "mjs", "cjs"],
        Language::Java => &["java"],
        Language::CSharp => &["cs"],
        Language::Php => &["php"],
    }
}

/// Normalized per-project import identity set for one year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportProfile {
    pub project_id: String,
    pub year: i32,
    pub language: Language,
    pub packages: BTreeSet<String>,
    pub script_count: usize,
}

impl ImportProfile {
    /// Novelty analysis needs at least one package pair.
    pub fn eligible(&self) -> bool {
        self.packages.len() >= 2
    }

    pub fn stats(&self) -> ProfileStats {
        ProfileStats {
            script_count: self.script_count,
            package_count: self.packages.len(),
        }
    }
}

/// Non-code data footprint of a repository tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataProfile {
    pub project_id: String,
    pub noncode_file_count: usize,
    pub noncode_folder_count: usize,
    pub noncode_bytes: u64,
    pub has_license: bool,
    pub license_id: Option<String>,
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("repo for project {project_id} unreadable: {reason}")]
    RepoUnreadable { project_id: String, reason: String },
}

/// Walks one repository tree and produces its import and data profiles.
/// The import profile is `None` when no source file of an allowed language
/// exists. `repos_root` anchors relative `root_path` values.
pub fn profile_repo(
    repo: &RepoSnapshot,
    project_year: i32,
    repos_root: &Path,
    langs: &BTreeSet<Language>,
) -> Result<(Option<ImportProfile>, DataProfile), ImportError> {
    let root = resolve_root(repo, repos_root);
    if !root.is_dir() {
        return Err(ImportError::RepoUnreadable {
            project_id: repo.project_id.clone(),
            reason: format!("{} is not a readable directory", root.display()),
        });
    }

    let mut source_files: BTreeMap<Language, Vec<PathBuf>> = BTreeMap::new();
    let mut noncode_files = 0usize;
    let mut noncode_dirs: BTreeSet<PathBuf> = BTreeSet::new();
    let mut noncode_bytes = 0u64;
    // Names resolvable inside the repo itself; Python imports of these are
    // intra-repo modules, not packages.
    let mut local_names: BTreeSet<String> = BTreeSet::new();

    let walker = walkdir::WalkDir::new(&root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| !(e.file_type().is_dir() && is_excluded_dir(e.file_name())));
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(err) => {
                log::warn!("{}: skipping unreadable entry: {err}", repo.project_id);
                continue;
            }
        };
        if entry.file_type().is_dir() {
            if let Some(name) = entry.file_name().to_str() {
                local_names.insert(name.to_lowercase());
            }
            continue;
        }
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        if let Some(lang) = language_of_extension(&ext) {
            if lang == Language::Python {
                if let Some(stem) = entry.path().file_stem().and_then(|s| s.to_str()) {
                    local_names.insert(stem.to_lowercase());
                }
            }
            if langs.contains(&lang) {
                source_files.entry(lang).or_default().push(entry.into_path());
            }
        } else if NONCODE_EXTENSIONS.contains(&ext.as_str()) {
            noncode_files += 1;
            if let Some(parent) = entry.path().parent() {
                noncode_dirs.insert(parent.to_path_buf());
            }
            noncode_bytes += entry.metadata().map(|m| m.len()).unwrap_or(0);
        }
    }

    let data_profile = DataProfile {
        project_id: repo.project_id.clone(),
        noncode_file_count: noncode_files,
        noncode_folder_count: noncode_dirs.len(),
        noncode_bytes,
        has_license: repo.license_id.is_some(),
        license_id: repo.license_id.clone(),
    };

    let Some(dominant) = dominant_language(&source_files) else {
        return Ok((None, data_profile));
    };
    let files = &source_files[&dominant];
    let mut packages = BTreeSet::new();
    for file in files {
        match std::fs::read_to_string(file) {
            Ok(text) => packages.extend(extract_imports(&text, dominant)),
            Err(err) => log::warn!(
                "{}: skipping unreadable source {}: {err}",
                repo.project_id,
                file.display()
            ),
        }
    }
    if dominant == Language::Python {
        packages.retain(|p| !local_names.contains(p));
    }
    let profile = ImportProfile {
        project_id: repo.project_id.clone(),
        year: project_year,
        language: dominant,
        packages,
        script_count: files.len(),
    };
    Ok((Some(profile), data_profile))
}

fn resolve_root(repo: &RepoSnapshot, repos_root: &Path) -> PathBuf {
    let path = Path::new(&repo.root_path);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        repos_root.join(path)
    }
}

fn is_excluded_dir(name: &std::ffi::OsStr) -> bool {
    name.to_str().is_some_and(|n| EXCLUDED_DIRS.contains(&n))
}

fn language_of_extension(ext: &str) -> Option<Language> {
    Language::ALL
        .into_iter()
        .find(|l| source_extensions(*l).contains(&ext))
}

/// Language with the most source files; ties resolved by the fixed
/// precedence Python > Node.js > Java > C# > PHP.
pub fn dominant_language(source_files: &BTreeMap<Language, Vec<PathBuf>>) -> Option<Language> {
    source_files
        .iter()
        .filter(|(_, files)| !files.is_empty())
        .max_by(|(a, fa), (b, fb)| {
            fa.len()
                .cmp(&fb.len())
                .then(b.precedence().cmp(&a.precedence()))
        })
        .map(|(lang, _)| *lang)
}

/// Result of profiling every repo of a corpus.
#[derive(Debug, Default)]
pub struct RepoProfiles {
    pub import_profiles: Vec<ImportProfile>,
    pub data_profiles: Vec<DataProfile>,
    /// (project_id, reason) pairs for repos excluded from analysis.
    pub skipped: Vec<(String, String)>,
}

impl RepoProfiles {
    /// Per-project statistics for the funnel's last two stages.
    pub fn funnel_stats(&self) -> BTreeMap<String, ProfileStats> {
        self.import_profiles
            .iter()
            .map(|p| (p.project_id.clone(), p.stats()))
            .collect()
    }
}

/// Profiles all repos in parallel; output is sorted by project id, so the
/// merge is deterministic regardless of thread count.
pub fn profile_corpus_repos(
    corpus: &Corpus,
    repos_root: &Path,
    langs: &BTreeSet<Language>,
) -> RepoProfiles {
    let repos: Vec<&RepoSnapshot> = corpus.repos.values().collect();
    let results: Vec<_> = repos
        .par_iter()
        .map(|repo| {
            let year = corpus
                .projects
                .get(&repo.project_id)
                .and_then(|p| p.year)
                .or_else(|| repo.created_at.map(|d| chrono::Datelike::year(&d)));
            match year {
                Some(year) => (
                    repo.project_id.clone(),
                    profile_repo(repo, year, repos_root, langs),
                ),
                None => (
                    repo.project_id.clone(),
                    Err(ImportError::RepoUnreadable {
                        project_id: repo.project_id.clone(),
                        reason: "no attributable year".into(),
                    }),
                ),
            }
        })
        .collect();

    let mut out = RepoProfiles::default();
    for (project_id, result) in results {
        match result {
            Ok((import_profile, data_profile)) => {
                out.import_profiles.extend(import_profile);
                out.data_profiles.push(data_profile);
            }
            Err(err) => out.skipped.push((project_id, err.to_string())),
        }
    }
    out.import_profiles.sort_by(|a, b| a.project_id.cmp(&b.project_id));
    out.data_profiles.sort_by(|a, b| a.project_id.cmp(&b.project_id));
    out.skipped.sort();
    out
}
