//! Consolidated report over a finished run directory: one JSON, one text
//! rendering, and plot-ready CSVs for the funnel, the fit table, the score
//! distributions and the agreement matrices.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{PipelineError, RunManifest};
use crate::agreement::KappaCell;
use crate::classify::CreativeLabel;
use crate::corpus::FunnelReport;
use crate::jsonl;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelSummary {
    pub total: usize,
    pub creative: usize,
    pub winners: usize,
    pub novel: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub stages_run: Vec<String>,
    pub funnel: Option<FunnelReport>,
    pub labels: Option<LabelSummary>,
    pub fit: Option<Value>,
    pub score_distribution: Option<Value>,
    pub agreement: Option<Value>,
    /// Sections whose stage did not run.
    pub not_run: Vec<String>,
}

fn read_json(path: &Path) -> Option<Value> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

/// Assembles the consolidated report from a run directory. Sections whose
/// artifacts are absent are marked not-run rather than failing, except the
/// manifest itself, which every report needs.
pub fn report(run_dir: &Path) -> Result<(Report, Vec<PathBuf>), PipelineError> {
    let manifest = RunManifest::load(&run_dir.join("manifest.json")).ok_or_else(|| {
        PipelineError::MissingArtifact(format!("{}/manifest.json", run_dir.display()))
    })?;

    let funnel: Option<FunnelReport> =
        read_json(&run_dir.join("funnel.json")).and_then(|v| serde_json::from_value(v).ok());

    let labels = match jsonl::read_jsonl::<CreativeLabel>(&run_dir.join("labels.jsonl")) {
        Ok((rows, _)) if !rows.is_empty() => Some(LabelSummary {
            total: rows.len(),
            creative: rows.iter().filter(|l| l.creative).count(),
            winners: rows.iter().filter(|l| l.is_winner).count(),
            novel: rows.iter().filter(|l| l.novel).count(),
        }),
        _ => None,
    };

    let fit = read_json(&run_dir.join("fit.json"));
    let score_distribution = read_json(&run_dir.join("score_distribution.json"));
    let agreement = read_json(&run_dir.join("agreement.json"));

    let mut not_run = Vec::new();
    for (present, name) in [
        (funnel.is_some(), "funnel"),
        (labels.is_some(), "labels"),
        (fit.is_some(), "fit"),
        (score_distribution.is_some(), "score_distribution"),
        (agreement.is_some(), "agreement"),
    ] {
        if !present {
            not_run.push(name.to_string());
        }
    }

    let report = Report {
        tool_version: manifest.tool_version.clone(),
        stages_run: manifest.stages.iter().map(|s| s.stage.name().to_string()).collect(),
        funnel,
        labels,
        fit,
        score_distribution,
        agreement,
        not_run,
    };

    let mut written = Vec::new();
    let json_path = run_dir.join("report.json");
    super::write_json(&json_path, &report)
        .map_err(|e| PipelineError::MissingArtifact(format!("report.json: {e}")))?;
    written.push(json_path);

    let text_path = run_dir.join("report.txt");
    std::fs::write(&text_path, render_text(&report))
        .map_err(|e| PipelineError::MissingArtifact(format!("report.txt: {e}")))?;
    written.push(text_path);

    written.extend(write_plot_csvs(run_dir, &report)?);
    Ok((report, written))
}

fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "creascope report (v{})", report.tool_version);
    let _ = writeln!(out, "stages: {}", report.stages_run.join(", "));
    let _ = writeln!(out);

    match &report.funnel {
        Some(funnel) => {
            let _ = writeln!(out, "Preprocessing funnel");
            out.push_str(&funnel.to_text());
        }
        None => {
            let _ = writeln!(out, "Preprocessing funnel: not run");
        }
    }
    let _ = writeln!(out);

    match &report.labels {
        Some(l) => {
            let _ = writeln!(
                out,
                "Labels: {} projects, {} creative, {} winners, {} novel",
                l.total, l.creative, l.winners, l.novel
            );
        }
        None => {
            let _ = writeln!(out, "Labels: not run");
        }
    }
    let _ = writeln!(out);

    match &report.fit {
        Some(fit) => {
            let _ = writeln!(out, "Regression fit");
            if let Some(rows) = fit.pointer("/fit/coefficients").and_then(Value::as_array) {
                let _ = writeln!(
                    out,
                    "{:<34} {:>12} {:>12} {:>9} {:>12}",
                    "term", "estimate", "std error", "z", "p"
                );
                for row in rows {
                    let _ = writeln!(
                        out,
                        "{:<34} {:>12.6} {:>12.6} {:>9.3} {:>12.3e}",
                        row.pointer("/name").and_then(Value::as_str).unwrap_or("?"),
                        row.pointer("/estimate").and_then(Value::as_f64).unwrap_or(f64::NAN),
                        row.pointer("/std_error").and_then(Value::as_f64).unwrap_or(f64::NAN),
                        row.pointer("/z_value").and_then(Value::as_f64).unwrap_or(f64::NAN),
                        row.pointer("/p_value").and_then(Value::as_f64).unwrap_or(f64::NAN),
                    );
                }
            }
            for (label, pointer) in [
                ("sigma^2 (random intercept)", "/fit/random_intercept_variance"),
                ("R2 marginal", "/fit/r2_marginal"),
                ("R2 conditional", "/fit/r2_conditional"),
            ] {
                if let Some(v) = fit.pointer(pointer).and_then(Value::as_f64) {
                    let _ = writeln!(out, "{label}: {v:.6}");
                }
            }
        }
        None => {
            let _ = writeln!(out, "Regression fit: not run");
        }
    }
    let _ = writeln!(out);

    match &report.score_distribution {
        Some(dist) => {
            let _ = writeln!(out, "Judge score distribution");
            if let Some(models) = dist.pointer("/models").and_then(Value::as_object) {
                for (model, hist) in models {
                    let counts = |key: &str| -> String {
                        hist.pointer(key)
                            .and_then(Value::as_array)
                            .map(|a| {
                                a.iter()
                                    .map(|v| v.as_u64().unwrap_or(0).to_string())
                                    .collect::<Vec<_>>()
                                    .join("/")
                            })
                            .unwrap_or_default()
                    };
                    let _ = writeln!(
                        out,
                        "{model}: novelty 1..5 = {}, usefulness 1..5 = {}",
                        counts("/novelty_counts"),
                        counts("/usefulness_counts")
                    );
                }
            }
        }
        None => {
            let _ = writeln!(out, "Judge score distribution: not run");
        }
    }
    let _ = writeln!(out);

    match &report.agreement {
        Some(agreement) => {
            let _ = writeln!(out, "Inter-rater agreement (Fleiss kappa per scheme)");
            if let Some(schemes) = agreement.pointer("/schemes").and_then(Value::as_object) {
                for (scheme, value) in schemes {
                    for dim in ["novelty", "usefulness"] {
                        if let Some(k) = value
                            .pointer(&format!("/{dim}/fleiss/kappa"))
                            .and_then(Value::as_f64)
                        {
                            let _ = writeln!(out, "{scheme}/{dim}: {k:.4}");
                        }
                    }
                }
            }
        }
        None => {
            let _ = writeln!(out, "Inter-rater agreement: not run");
        }
    }
    out
}

fn write_plot_csvs(run_dir: &Path, report: &Report) -> Result<Vec<PathBuf>, PipelineError> {
    let plots = run_dir.join("plots");
    std::fs::create_dir_all(&plots)
        .map_err(|e| PipelineError::MissingArtifact(format!("plots dir: {e}")))?;
    let mut written = Vec::new();
    let io = |e: csv::Error| PipelineError::MissingArtifact(format!("plot csv: {e}"));

    if let Some(funnel) = &report.funnel {
        let path = plots.join("funnel.csv");
        let mut w = csv::Writer::from_path(&path)
            .map_err(|e| PipelineError::MissingArtifact(e.to_string()))?;
        w.write_record(["stage", "count"]).map_err(io)?;
        for stage in &funnel.stages {
            w.write_record([stage.name.as_str(), &stage.count.to_string()])
                .map_err(io)?;
        }
        w.flush().ok();
        written.push(path);
    }

    if let Some(fit) = &report.fit {
        if let Some(rows) = fit.pointer("/fit/coefficients").and_then(Value::as_array) {
            let path = plots.join("fit.csv");
            let mut w = csv::Writer::from_path(&path)
                .map_err(|e| PipelineError::MissingArtifact(e.to_string()))?;
            w.write_record(["term", "estimate", "std_error", "z_value", "p_value"])
                .map_err(io)?;
            for row in rows {
                let cell = |key: &str| {
                    row.pointer(key)
                        .and_then(Value::as_f64)
                        .map(|v| v.to_string())
                        .unwrap_or_default()
                };
                w.write_record([
                    row.pointer("/name").and_then(Value::as_str).unwrap_or(""),
                    &cell("/estimate"),
                    &cell("/std_error"),
                    &cell("/z_value"),
                    &cell("/p_value"),
                ])
                .map_err(io)?;
            }
            w.flush().ok();
            written.push(path);
        }
    }

    if let Some(dist) = &report.score_distribution {
        if let Some(models) = dist.pointer("/models").and_then(Value::as_object) {
            let path = plots.join("score_distribution.csv");
            let mut w = csv::Writer::from_path(&path)
                .map_err(|e| PipelineError::MissingArtifact(e.to_string()))?;
            w.write_record(["model", "dimension", "score", "count", "proportion"])
                .map_err(io)?;
            for (model, hist) in models {
                for (dim, counts_key, props_key) in [
                    ("novelty", "/novelty_counts", "/novelty_proportions"),
                    ("usefulness", "/usefulness_counts", "/usefulness_proportions"),
                ] {
                    let counts = hist.pointer(counts_key).and_then(Value::as_array);
                    let props = hist.pointer(props_key).and_then(Value::as_array);
                    if let (Some(counts), Some(props)) = (counts, props) {
                        for score in 0..5 {
                            w.write_record([
                                model.as_str(),
                                dim,
                                &(score + 1).to_string(),
                                &counts[score].as_u64().unwrap_or(0).to_string(),
                                &props[score].as_f64().unwrap_or(0.0).to_string(),
                            ])
                            .map_err(io)?;
                        }
                    }
                }
            }
            w.flush().ok();
            written.push(path);
        }
    }

    if let Some(agreement) = &report.agreement {
        if let Some(schemes) = agreement.pointer("/schemes").and_then(Value::as_object) {
            let path = plots.join("agreement.csv");
            let mut w = csv::Writer::from_path(&path)
                .map_err(|e| PipelineError::MissingArtifact(e.to_string()))?;
            w.write_record(["scheme", "dimension", "rater_a", "rater_b", "kappa", "note"])
                .map_err(io)?;
            for (scheme, value) in schemes {
                for dim in ["novelty", "usefulness"] {
                    let raters: Vec<String> = value
                        .pointer(&format!("/{dim}/raters"))
                        .and_then(Value::as_array)
                        .map(|a| {
                            a.iter()
                                .map(|v| v.as_str().unwrap_or("").to_string())
                                .collect()
                        })
                        .unwrap_or_default();
                    let matrix: Option<Vec<Vec<KappaCell>>> = value
                        .pointer(&format!("/{dim}/pairwise"))
                        .and_then(|v| serde_json::from_value(v.clone()).ok());
                    let Some(matrix) = matrix else { continue };
                    for (i, row) in matrix.iter().enumerate() {
                        for (j, cell) in row.iter().enumerate() {
                            let (kappa, note) = match cell {
                                KappaCell::Value(v) => (v.to_string(), String::new()),
                                KappaCell::Degenerate { error } => {
                                    (String::new(), error.clone())
                                }
                            };
                            w.write_record([
                                scheme.as_str(),
                                dim,
                                raters.get(i).map(String::as_str).unwrap_or(""),
                                raters.get(j).map(String::as_str).unwrap_or(""),
                                &kappa,
                                &note,
                            ])
                            .map_err(io)?;
                        }
                    }
                }
            }
            w.flush().ok();
            written.push(path);
        }
    }

    Ok(written)
}
