pub mod convert;
pub mod eval;
pub mod filter;
pub mod loss;
pub mod split;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Split-manifest file schema: version and config echo, then the manifest
/// fields (`seed`, `prng`, `folds`) inlined at the top level.
#[derive(Serialize, Deserialize)]
pub struct ManifestFile {
    pub version: String,
    pub config: serde_json::Value,
    #[serde(flatten)]
    pub manifest: polygate_core::dataset::SplitManifest,
}

pub fn read_manifest(path: &Path) -> Result<ManifestFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: invalid manifest: {e}", path.display())))
}

/// Recursively collect files with the given extension, keyed by their
/// relative path without the extension (forward slashes).
pub fn collect_by_rel_stem(
    root: &Path,
    extension: &str,
) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = std::fs::read_dir(&dir)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", dir.display())))?;
        for entry in entries {
            let entry = entry
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", dir.display())))?;
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let matches = path
                .extension()
                .and_then(|e| e.to_str())
                .map(|e| e.eq_ignore_ascii_case(extension))
                .unwrap_or(false);
            if !matches {
                continue;
            }
            let rel = path
                .strip_prefix(root)
                .expect("entry lives under the scanned root")
                .with_extension("");
            let key = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.insert(key, path);
        }
    }
    Ok(out)
}
