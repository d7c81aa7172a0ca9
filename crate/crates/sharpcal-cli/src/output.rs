//! Report emission: deterministic bodies, atomic writes.
//!
//! A JSON report is `{"manifest": ..., "results": ...}`; a CSV report is
//! the table preceded by a `# manifest ...` comment line.  The results
//! section is a pure function of the manifest's inputs and seeds, so
//! reruns produce byte-identical results; only the manifest timestamp
//! moves.  Files are written to a temporary sibling and renamed into
//! place so readers never observe a half-written report.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;

use crate::failure::Failure;
use crate::manifest::RunManifest;

/// Report rendering. CSV is available for the subcommands with a natural
/// tabular shape; the rest are JSON-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Render and deliver one report.
///
/// With `--out` the report goes to the file (atomically) and the one-line
/// summary to stdout; without it the report body goes to stdout and the
/// summary to stderr, keeping stdout machine-readable either way.
pub fn emit(
    out: Option<&Path>,
    format: Format,
    manifest: &RunManifest,
    results: &serde_json::Value,
    csv: Option<String>,
    summary: &str,
) -> Result<(), Failure> {
    let body = match format {
        Format::Json => {
            let doc = serde_json::json!({ "manifest": manifest, "results": results });
            let mut text = serde_json::to_string_pretty(&doc)
                .map_err(|e| Failure::new(4, format!("cannot serialize report: {e}")))?;
            text.push('\n');
            text
        }
        Format::Csv => {
            let Some(table) = csv else {
                return Err(Failure::new(
                    2,
                    "this report has no CSV rendering; use --format json",
                ));
            };
            let manifest_line = serde_json::to_string(manifest)
                .map_err(|e| Failure::new(4, format!("cannot serialize manifest: {e}")))?;
            format!("# manifest {manifest_line}\n{table}")
        }
    };
    match out {
        Some(path) => {
            write_atomic(path, &body)?;
            println!("{summary}");
        }
        None => {
            print!("{body}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

/// Write a plain text file (no manifest wrapper) with the same atomicity
/// and summary conventions as `emit`; used for built scenario files.
pub fn emit_plain(out: Option<&Path>, body: &str, summary: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            write_atomic(path, body)?;
            println!("{summary}");
        }
        None => {
            print!("{body}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn write_atomic(path: &Path, body: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".sharpcal.")
        .tempfile_in(dir)
        .map_err(|e| {
            Failure::new(
                1,
                format!("cannot create temporary file in {}: {e}", dir.display()),
            )
        })?;
    tmp.write_all(body.as_bytes())
        .map_err(|e| Failure::new(1, format!("cannot write report: {e}")))?;
    tmp.persist(path).map_err(|e| {
        Failure::new(
            1,
            format!("cannot move report into place at {}: {e}", path.display()),
        )
    })?;
    Ok(())
}
