use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::RunManifest;
use crate::error::Result;

pub const REPORT_FILE: &str = "report.md";
/// Every bound row from every section, with a `source` column.
pub const PLOT_FILE: &str = "plot_bounds.csv";
pub const ACCEPTANCE_FILE: &str = "acceptance.csv";

/// One acceptance criterion outcome, as written by the acceptance suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRow {
    pub criterion: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub fn write_acceptance_csv(dir: &Path, rows: &[AcceptanceRow]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(ACCEPTANCE_FILE))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub markdown: String,
    /// Missing or stale artifacts.
    pub gaps: Vec<String>,
    pub violations: usize,
}

impl Report {
    /// 1 with gaps, 2 with violations, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if !self.gaps.is_empty() {
            1
        } else if self.violations > 0 {
            2
        } else {
            0
        }
    }
}

/// Sections and their default artifacts. All but `acceptance` have a manifest.
const SECTIONS: [(&str, &[&str]); 7] = [
    ("simulate", &["runs.csv"]),
    ("bounds", &["bounds.csv", "xi.json"]),
    ("classify", &["audit.csv"]),
    ("select-layers", &["selection.json", "envelope.csv"]),
    ("regions", &["regions.csv", "region_counts.csv", "region_bounds.csv"]),
    ("mgale-check", &["mgale_bounds.csv", "mgale_grades.json"]),
    ("acceptance", &[ACCEPTANCE_FILE]),
];

const BOUND_FILES: [&str; 3] = ["bounds.csv", "region_bounds.csv", "mgale_bounds.csv"];

/// Builds a markdown summary of the artifacts in `dir` and writes it with a
/// combined bound table. Output depends only on the artifact contents.
pub fn emit_report(dir: &Path) -> Result<Report> {
    let mut md = String::from("# Run report\n\n");
    let mut gaps = Vec::new();
    let mut violations = 0;
    let mut plot: Vec<Vec<String>> = Vec::new();
    let present: Vec<bool> = SECTIONS
        .iter()
        .map(|(name, files)| {
            dir.join(RunManifest::file_name(name)).exists() || files.iter().any(|f| dir.join(f).exists())
        })
        .collect();
    let any = present.iter().any(|p| *p);

    for ((name, defaults), present) in SECTIONS.iter().zip(present) {
        let _ = writeln!(md, "## {name}\n");
        if !present {
            if any {
                md.push_str("Not run.\n\n");
            } else {
                gaps.push(format!("{name}: no artifacts"));
                md.push_str("**GAP**: no artifacts.\n\n");
            }
            continue;
        }
        let files: Vec<String> = if *name == "acceptance" {
            defaults.iter().map(|f| f.to_string()).collect()
        } else {
            let path = dir.join(RunManifest::file_name(name));
            match fs::read_to_string(&path).ok().and_then(|t| serde_json::from_str::<RunManifest>(&t).ok()) {
                Some(m) => {
                    let _ = writeln!(md, "config `{}`, seed {}\n", &m.config_sha256[..16], m.seed);
                    for stale in m.stale_outputs(dir) {
                        gaps.push(format!("{name}: {stale} missing or changed"));
                        let _ = writeln!(md, "**GAP**: `{stale}` missing or changed since the run.\n");
                    }
                    m.outputs.iter().map(|o| o.file.clone()).collect()
                }
                None => {
                    gaps.push(format!("{name}: manifest missing or unreadable"));
                    md.push_str("**GAP**: manifest missing or unreadable.\n\n");
                    defaults.iter().filter(|f| dir.join(f).exists()).map(|f| f.to_string()).collect()
                }
            }
        };
        for file in files {
            let path = dir.join(&file);
            let Ok(text) = fs::read_to_string(&path) else {
                if *name == "acceptance" {
                    gaps.push(format!("{name}: {file} missing"));
                    let _ = writeln!(md, "**GAP**: `{file}` missing.\n");
                }
                continue;
            };
            violations += render(&mut md, &file, &text, &mut plot);
        }
    }

    if !gaps.is_empty() {
        md.push_str("## Gaps\n\n");
        for g in &gaps {
            let _ = writeln!(md, "- {g}");
        }
        md.push('\n');
    }
    let _ = writeln!(md, "Violated verdicts: {violations}");

    fs::create_dir_all(dir)?;
    fs::write(dir.join(REPORT_FILE), &md)?;
    let mut w = csv::Writer::from_path(dir.join(PLOT_FILE))?;
    w.write_record(["source", "kind", "l", "t", "analytic", "empirical", "se", "n", "verdict"])?;
    for row in &plot {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(Report {
        markdown: md,
        gaps,
        violations,
    })
}

fn read_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().ok()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    Some((header, rows))
}

fn table(md: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(md, "| {} |", header.join(" | "));
    let _ = writeln!(md, "|{}", "---|".repeat(header.len()));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.replace('|', "\\|")).collect();
        let _ = writeln!(md, "| {} |", cells.join(" | "));
    }
    md.push('\n');
}

fn column(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

/// Renders one artifact and returns its number of violated verdicts.
fn render(md: &mut String, file: &str, text: &str, plot: &mut Vec<Vec<String>>) -> usize {
    let _ = writeln!(md, "### {file}\n");
    if file.ends_with(".json") {
        return render_json(md, file, text);
    }
    let Some((header, rows)) = read_csv(text) else {
        md.push_str("Unreadable CSV.\n\n");
        return 0;
    };
    match file {
        "runs.csv" => {
            let runs = column(&header, "run").map_or(0, |c| {
                rows.iter().map(|r| r[c].as_str()).collect::<std::collections::BTreeSet<_>>().len()
            });
            let _ = writeln!(md, "{} rows from {runs} runs.\n", rows.len());
            0
        }
        "region_counts.csv" => {
            let counts: Vec<u64> = rows.iter().filter_map(|r| r.get(1)?.parse().ok()).collect();
            let b1 = rows.first().and_then(|r| r.get(2).cloned()).unwrap_or_default();
            let (lo, hi) = counts.iter().fold((u64::MAX, 0), |(lo, hi), c| (lo.min(*c), hi.max(*c)));
            let _ = writeln!(md, "{} networks, counts in [{lo}, {hi}], lattice bound b1 = {b1}.\n", counts.len());
            0
        }
        _ => {
            table(md, &header, &rows);
            let flagged = if let Some(c) = column(&header, "verdict") {
                rows.iter().filter(|r| r[c] == "violated").count()
            } else if let Some(c) = column(&header, "passed") {
                rows.iter().filter(|r| r[c] != "true").count()
            } else if let Some(c) = column(&header, "agree") {
                rows.iter().filter(|r| r[c] != "true").count()
            } else {
                0
            };
            if BOUND_FILES.contains(&file) {
                let source = file.trim_end_matches(".csv");
                plot.extend(rows.iter().map(|r| std::iter::once(source.to_string()).chain(r.iter().cloned()).collect()));
            }
            flagged
        }
    }
}

fn render_json(md: &mut String, file: &str, text: &str) -> usize {
    let Ok(v) = serde_json::from_str::<serde_json::Value>(text) else {
        md.push_str("Unreadable JSON.\n\n");
        return 0;
    };
    match file {
        "xi.json" => {
            let rows: Vec<Vec<String>> = v
                .as_array()
                .into_iter()
                .flatten()
                .map(|c| vec![c["layer"].to_string(), c["xi"].to_string()])
                .collect();
            table(md, &["layer".into(), "xi".into()], &rows);
        }
        "selection.json" => {
            let s = &v["solution"];
            let _ = writeln!(md, "- method: {}", s["method"]);
            let _ = writeln!(md, "- tau: {}", s["tau"]);
            let _ = writeln!(md, "- value: {}", s["value"]);
            let _ = writeln!(md, "- shape: {}", v["shape"]["shape"]);
            for w in s["warnings"].as_array().into_iter().flatten() {
                let _ = writeln!(md, "- warning: {w}");
            }
            md.push('\n');
        }
        "mgale_grades.json" => {
            let _ = writeln!(md, "- M: {} (plug-in: {})", v["m"], v["m_plug_in"]);
            let _ = writeln!(md, "- very weak: {}", v["grades"]["very_weak"]["verdict"]);
            let _ = writeln!(md, "- weak: {}", v["grades"]["weak"]["verdict"]);
            md.push('\n');
        }
        _ => {
            md.push_str("Machine-readable copy.\n\n");
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dir_is_all_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let r = emit_report(dir.path()).unwrap();
        assert_eq!(r.gaps.len(), SECTIONS.len());
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn acceptance_rows_render_one_line_each() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<AcceptanceRow> = (1..=3)
            .map(|k| AcceptanceRow {
                criterion: k,
                name: format!("c{k}"),
                passed: k != 2,
                detail: "d".into(),
                seconds: 0.5,
            })
            .collect();
        write_acceptance_csv(dir.path(), &rows).unwrap();
        let r = emit_report(dir.path()).unwrap();
        assert!(r.gaps.is_empty());
        assert_eq!(r.violations, 1);
        assert_eq!(r.markdown.lines().filter(|l| l.ends_with("| d | 0.5 |")).count(), 3);
        let again = emit_report(dir.path()).unwrap();
        assert_eq!(r, again);
    }
}
