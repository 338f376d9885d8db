//! Table rendering of report artifacts: label reports in the
//! (method, accuracy, retrievable_points) layout and path sweeps in the
//! (threshold, psi, psi_random, psi_phi) layout, floats to 4 decimals.

use std::path::{Path, PathBuf};

use manifold_core::retrieval::RetrievalReport;
use manifold_core::smoothness::PathCountReport;
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const LABEL_KIND: &str = "label_retrieval";
pub const PATH_KIND: &str = "smooth_path_sweep";

pub const PATH_VARIANTS: [&str; 3] = ["psi", "psi_random", "psi_phi"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Label,
    Path,
}

impl TableKind {
    pub fn header(self) -> String {
        match self {
            TableKind::Label => RetrievalReport::CSV_HEADER.to_string(),
            TableKind::Path => format!("threshold,{}", PATH_VARIANTS.join(",")),
        }
    }
}

pub fn label_table(reports: &[RetrievalReport]) -> String {
    let mut out = TableKind::Label.header();
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Natural-log counts; an empty cell stands for a zero count.
pub fn path_table(rows: &[PathCountReport]) -> CliResult<String> {
    let mut out = TableKind::Path.header();
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:.4}", r.threshold));
        for name in PATH_VARIANTS {
            let v =
                r.variants
                    .iter()
                    .find(|v| v.variant == name)
                    .ok_or_else(|| CliError::SchemaMismatch {
                        path: PathBuf::new(),
                        reason: format!("threshold {} has no `{name}` column", r.threshold),
                    })?;
            match v.ln_count {
                Some(l) => out.push_str(&format!(",{l:.4}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn field<T: DeserializeOwned>(path: &Path, doc: &Value, key: &str) -> CliResult<T> {
    let v = doc.get(key).ok_or_else(|| CliError::SchemaMismatch {
        path: path.to_path_buf(),
        reason: format!("missing `{key}`"),
    })?;
    serde_json::from_value(v.clone()).map_err(|e| CliError::SchemaMismatch {
        path: path.to_path_buf(),
        reason: format!("`{key}`: {e}"),
    })
}

/// Renders report files into one table. All files must be of the same
/// kind; with no files the table of `empty_kind` is just its header.
pub fn render(files: &[PathBuf], empty_kind: TableKind) -> CliResult<String> {
    let mut kind = None;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for path in files {
        let text = std::fs::read_to_string(path).map_err(CliError::io)?;
        let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::SchemaMismatch {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        let this = match doc.get("kind").and_then(Value::as_str) {
            Some(LABEL_KIND) => TableKind::Label,
            Some(PATH_KIND) => TableKind::Path,
            other => {
                return Err(CliError::SchemaMismatch {
                    path: path.clone(),
                    reason: format!("not a label or path report (kind {other:?})"),
                })
            }
        };
        if kind.is_some_and(|k| k != this) {
            return Err(CliError::SchemaMismatch {
                path: path.clone(),
                reason: "cannot mix label and path reports in one table".into(),
            });
        }
        kind = Some(this);
        match this {
            TableKind::Label => labels.extend(field::<Vec<RetrievalReport>>(path, &doc, "reports")?),
            TableKind::Path => rows.extend(field::<Vec<PathCountReport>>(path, &doc, "rows")?),
        }
    }
    match kind.unwrap_or(empty_kind) {
        TableKind::Label => Ok(label_table(&labels)),
        TableKind::Path => path_table(&rows),
    }
}
