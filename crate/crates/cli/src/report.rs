//! Writes a [`RunReport`] to disk. Layouts are documented in `docs/FORMATS.md`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::run::{ManifestEntry, RunReport};

pub const REPORT_FILE: &str = "report.json";
pub const METADATA_FILE: &str = "metadata.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const SUMMARY_HEADER: [&str; 7] = ["task", "kind", "check", "passed", "margin", "tolerance", "note"];

fn summary_csv(report: &RunReport) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for t in &report.tasks {
        if let Some(ok) = t.converged {
            w.write_record([
                t.index.to_string(),
                t.kind.clone(),
                "converged".into(),
                ok.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        for r in &t.reports {
            w.write_record([
                t.index.to_string(),
                t.kind.clone(),
                r.check.clone(),
                r.passed.to_string(),
                format!("{:e}", r.margin),
                format!("{:e}", r.tolerance),
                r.note.clone().unwrap_or_default(),
            ])?;
        }
    }
    Ok(w.into_inner()?)
}

fn summary_text(report: &RunReport) -> String {
    let mut out = String::new();
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "fracsym run: {verdict} ({} task(s))", report.tasks.len());
    let _ = writeln!(
        out,
        "domain {} on {:?} cells, h = {}, s = {}",
        report.config.domain.label(),
        report.config.grid.extents,
        report.config.grid.h,
        report.config.kernel.s
    );
    for t in &report.tasks {
        let _ = writeln!(out, "\n[{}] {} {}", t.index, t.kind, if t.passed { "PASS" } else { "FAIL" });
        if let Some(ok) = t.converged {
            let _ = writeln!(out, "  converged: {ok}");
        }
        for (k, v) in &t.values {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for r in &t.reports {
            let _ = writeln!(
                out,
                "  {} {}: margin {:e}, tolerance {:e}{}",
                if r.passed { "ok  " } else { "FAIL" },
                r.check,
                r.margin,
                r.tolerance,
                r.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
            );
        }
        for n in &t.notes {
            let _ = writeln!(out, "  note: {n}");
        }
    }
    out
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes task artifacts, `summary.csv`, `summary.txt`, `metadata.json` and
/// finally `report.json`, whose manifest lists every other file. Everything
/// except `metadata.json` is a function of the report alone. Returns the
/// written paths.
pub fn emit_report(report: &mut RunReport, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(String, Vec<u8>)> = report.artifacts.iter().map(|a| (a.name.clone(), a.bytes.clone())).collect();
    files.push((SUMMARY_CSV.into(), summary_csv(report)?));
    files.push((SUMMARY_TXT.into(), summary_text(report).into_bytes()));

    let mut written = Vec::new();
    report.manifest.clear();
    for (name, bytes) in &files {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        report.manifest.push(ManifestEntry {
            path: name.clone(),
            bytes: Some(bytes.len() as u64),
            sha256: Some(hex(&Sha256::digest(bytes))),
        });
        written.push(path);
    }
    let meta = dir.join(METADATA_FILE);
    fs::write(&meta, serde_json::to_vec_pretty(&report.metadata)?)?;
    report.manifest.push(ManifestEntry {
        path: METADATA_FILE.into(),
        bytes: None,
        sha256: None,
    });
    written.push(meta);

    let path = dir.join(REPORT_FILE);
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    fs::write(&path, json)?;
    written.push(path);
    Ok(written)
}
