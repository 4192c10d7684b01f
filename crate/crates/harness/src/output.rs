//! Writes an experiment's tables and manifest into a directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::Result;
use crate::experiments::ExperimentOutput;
use crate::spec::ExperimentSpec;

pub const MANIFEST: &str = "manifest.json";

/// The manifest: tool version, the full spec and its hash, output files,
/// per-seed outcomes and the experiment summary.
pub fn manifest(spec: &ExperimentSpec, out: &ExperimentOutput) -> serde_json::Value {
    let files: Vec<String> = out.tables.iter().map(|(stem, _)| format!("{stem}.csv")).collect();
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "spec": spec,
        "spec_hash": spec.content_hash(),
        "outputs": files,
        "outcomes": out.outcomes,
        "summary": out.summary,
    })
}

/// Writes `<stem>.csv` for every table and `manifest.json`; returns the
/// paths written, manifest last.
pub fn write_outputs(dir: &Path, spec: &ExperimentSpec, out: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (stem, table) in &out.tables {
        let path = dir.join(format!("{stem}.csv"));
        fs::write(&path, table.to_csv())?;
        written.push(path);
    }
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest(spec, out)).expect("manifest serializes");
    fs::write(&path, text + "\n")?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::ExperimentKind;

    #[test]
    fn writes_tables_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::new(ExperimentKind::PhaseCurve);
        spec.grid = 4;
        let out = crate::run(&spec, 1).unwrap();
        let paths = write_outputs(dir.path(), &spec, &out).unwrap();
        assert_eq!(paths.len(), out.tables.len() + 1);
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m["spec_hash"], spec.content_hash());
        let back: ExperimentSpec = serde_json::from_value(m["spec"].clone()).unwrap();
        assert_eq!(back, spec);
    }
}
