//! Extraction against the 50-file polyglot fixture and repo profiling
//! against the checked-in trees.

mod common;

use std::collections::BTreeSet;

use creascope_core::corpus::Language;
use creascope_core::imports::{extract_imports, profile_repo};
use serde::Deserialize;

#[derive(Deserialize)]
struct Manifest {
    files: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct ManifestEntry {
    path: String,
    language: Language,
    packages: Vec<String>,
}

fn manifest() -> Manifest {
    let path = common::fixture_dir().join("polyglot/manifest.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn polyglot_corpus_matches_annotations_exactly() {
    let manifest = manifest();
    assert_eq!(manifest.files.len(), 50);
    let mut mismatches = Vec::new();
    for entry in &manifest.files {
        let source =
            std::fs::read_to_string(common::fixture_dir().join("polyglot").join(&entry.path))
                .unwrap();
        let got = extract_imports(&source, entry.language);
        let expected: BTreeSet<String> = entry.packages.iter().cloned().collect();
        if got != expected {
            mismatches.push(format!("{}: got {got:?}, expected {expected:?}", entry.path));
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn polyglot_extraction_is_idempotent() {
    for entry in manifest().files {
        let source =
            std::fs::read_to_string(common::fixture_dir().join("polyglot").join(&entry.path))
                .unwrap();
        assert_eq!(
            extract_imports(&source, entry.language),
            extract_imports(&source, entry.language)
        );
    }
}

fn snapshot(project_id: &str, root: &str, license: Option<&str>) -> creascope_core::corpus::RepoSnapshot {
    creascope_core::corpus::RepoSnapshot {
        project_id: project_id.into(),
        root_path: root.into(),
        primary_languages: BTreeSet::new(),
        license_id: license.map(String::from),
        created_at: None,
        last_commit_at: None,
        lifespan_days: None,
        stars: 0,
        watches: 0,
    }
}

fn all_langs() -> BTreeSet<Language> {
    Language::ALL.into_iter().collect()
}

#[test]
fn fixture_repo_profiles() {
    let repos_root = common::fixture_dir().join("repos");

    // Python repo: union over two scripts, CSV data footprint.
    let (imports, data) = profile_repo(
        &snapshot("p01", "r_p01", Some("MIT")),
        2019,
        &repos_root,
        &all_langs(),
    )
    .unwrap();
    let imports = imports.unwrap();
    assert_eq!(imports.language, Language::Python);
    assert_eq!(imports.script_count, 2);
    let expected: BTreeSet<String> = ["matplotlib", "numpy", "pandas", "requests", "scipy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(imports.packages, expected);
    assert_eq!(data.noncode_file_count, 3);
    assert_eq!(data.noncode_folder_count, 2);
    assert_eq!(data.noncode_bytes, 1807);
    assert!(data.has_license);

    // Sentinel local module and relative import never surface.
    let (imports, _) = profile_repo(&snapshot("p02", "r_p02", None), 2019, &repos_root, &all_langs())
        .unwrap();
    let imports = imports.unwrap();
    assert!(!imports.packages.contains("localmod"));
    assert_eq!(imports.script_count, 3);
    let expected: BTreeSet<String> = ["flask", "numpy", "pandas", "requests", "scipy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(imports.packages, expected);

    // Node repo: dependency dirs are skipped entirely.
    let (imports, data) = profile_repo(&snapshot("p03", "r_p03", None), 2020, &repos_root, &all_langs())
        .unwrap();
    let imports = imports.unwrap();
    assert_eq!(imports.language, Language::NodeJs);
    let expected: BTreeSet<String> = ["express", "lodash"].iter().map(|s| s.to_string()).collect();
    assert_eq!(imports.packages, expected);
    assert!(!imports.packages.contains("hidden-dep"));
    assert_eq!(data.noncode_file_count, 1, "node_modules json must not count");
}
