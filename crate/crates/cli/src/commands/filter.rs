use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use polygate_core::outlier::{filter_outliers, lof_scores, luminance_features, standardize, FeatureVector};

use crate::artifact::{write_json_atomic, TOOL_VERSION};
use crate::commands::{read_manifest, ManifestFile};
use crate::error::CliError;

#[derive(Args)]
pub struct FilterArgs {
    /// Manifest produced by `split`
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fold index to filter
    #[arg(long)]
    pub fold: usize,
    /// Image root; sample ids resolve to `<images>/<id>.<ext>` or by stem
    #[arg(long)]
    pub images: PathBuf,
    /// Neighbor count for LOF
    #[arg(long, default_value_t = 30)]
    pub k: usize,
    /// Fraction of train+val samples to remove
    #[arg(long, default_value_t = 0.05)]
    pub contamination: f64,
    /// Side length of the area-averaged luminance resample
    #[arg(long, default_value_t = 32)]
    pub feature_side: usize,
    /// Updated manifest path (default: overwrite the input manifest)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Removal report path (default `<manifest>.filter-fold<N>.json`)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize, Clone)]
struct FilterConfig {
    manifest: String,
    fold: usize,
    images: String,
    k: usize,
    contamination: f64,
    feature_side: usize,
}

#[derive(Serialize)]
struct ScoreEntry {
    id: String,
    lof: f64,
    lrd: f64,
}

#[derive(Serialize)]
struct RemovalEntry {
    id: String,
    score: f64,
}

#[derive(Serialize)]
struct FilterReport {
    version: String,
    config: FilterConfig,
    samples: usize,
    removed: Vec<RemovalEntry>,
    /// Every scored sample, highest LOF first (ties by ascending id).
    scores: Vec<ScoreEntry>,
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

type ImageIndex = (BTreeMap<String, PathBuf>, BTreeMap<String, Vec<PathBuf>>);

/// Map every image under `root` by its extension-less relative path, plus a
/// bare-stem fallback index for flat layouts.
fn index_images(root: &Path) -> Result<ImageIndex, CliError> {
    let mut by_rel = BTreeMap::new();
    let mut by_stem: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
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
            let ext = path
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase)
                .unwrap_or_default();
            if !IMAGE_EXTENSIONS.contains(&ext.as_str()) {
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
            if let Some(previous) = by_rel.insert(key.clone(), path.clone()) {
                return Err(CliError::Input(format!(
                    "ambiguous image stem '{key}': {} and {}",
                    previous.display(),
                    path.display()
                )));
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                by_stem.entry(stem.to_string()).or_default().push(path);
            }
        }
    }
    Ok((by_rel, by_stem))
}

fn resolve_image(
    id: &str,
    by_rel: &BTreeMap<String, PathBuf>,
    by_stem: &BTreeMap<String, Vec<PathBuf>>,
) -> Result<PathBuf, CliError> {
    if let Some(p) = by_rel.get(id) {
        return Ok(p.clone());
    }
    let stem = id.rsplit('/').next().unwrap_or(id);
    match by_stem.get(stem).map(Vec::as_slice) {
        Some([single]) => Ok(single.clone()),
        Some(many) if many.len() > 1 => Err(CliError::Input(format!(
            "sample '{id}': stem '{stem}' is ambiguous ({} candidates)",
            many.len()
        ))),
        _ => Err(CliError::Input(format!(
            "sample '{id}': no image found under the --images root"
        ))),
    }
}

pub fn run(args: FilterArgs) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&args.contamination) {
        return Err(CliError::Usage(format!(
            "--contamination must be in [0, 1), got {}",
            args.contamination
        )));
    }
    let mut file = read_manifest(&args.manifest)?;
    let fold_count = file.manifest.folds.len();
    let fold = file
        .manifest
        .folds
        .get(args.fold)
        .ok_or_else(|| CliError::Usage(format!(
            "--fold {} out of range: manifest has {fold_count} folds",
            args.fold
        )))?;

    // prior removals are honored: score only the still-active samples
    let ids: Vec<String> = fold
        .effective_train()
        .into_iter()
        .chain(fold.effective_val())
        .collect();

    let (by_rel, by_stem) = index_images(&args.images)?;
    let mut features: Vec<FeatureVector<f64>> = Vec::with_capacity(ids.len());
    for id in &ids {
        let path = resolve_image(id, &by_rel, &by_stem)?;
        let gray = image::open(&path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?
            .to_luma8();
        let values = luminance_features::<f64>(&gray, args.feature_side)?;
        features.push(
            FeatureVector::new(id.clone(), values)
                .map_err(|e| CliError::Internal(e.to_string()))?,
        );
    }
    standardize(&mut features)?;

    let scored = lof_scores(&features, args.k)?;
    let result = filter_outliers(scored, args.contamination)?;

    let removals: Vec<(String, f64)> = result
        .removed_ids
        .iter()
        .map(|id| {
            let score = result
                .samples
                .iter()
                .find(|s| &s.sample_id == id)
                .expect("removed id was scored")
                .lof;
            (id.clone(), score)
        })
        .collect();
    file.manifest.attach_removals(args.fold, removals.clone())?;
    file.manifest
        .validate()
        .map_err(CliError::Internal)?;

    let config = FilterConfig {
        manifest: args.manifest.display().to_string(),
        fold: args.fold,
        images: args.images.display().to_string(),
        k: args.k,
        contamination: args.contamination,
        feature_side: args.feature_side,
    };

    let mut scores: Vec<ScoreEntry> = result
        .samples
        .iter()
        .map(|s| ScoreEntry {
            id: s.sample_id.clone(),
            lof: s.lof,
            lrd: s.lrd,
        })
        .collect();
    scores.sort_by(|a, b| {
        b.lof
            .partial_cmp(&a.lof)
            .expect("scores are finite")
            .then(a.id.cmp(&b.id))
    });

    let report = FilterReport {
        version: TOOL_VERSION.to_string(),
        config: config.clone(),
        samples: result.samples.len(),
        removed: removals
            .iter()
            .map(|(id, score)| RemovalEntry {
                id: id.clone(),
                score: *score,
            })
            .collect(),
        scores,
    };

    let manifest_out = args.output.clone().unwrap_or_else(|| args.manifest.clone());
    let report_path = args.report.clone().unwrap_or_else(|| {
        args.manifest
            .with_extension(format!("filter-fold{}.json", args.fold))
    });

    let out_file = ManifestFile {
        version: TOOL_VERSION.to_string(),
        config: serde_json::to_value(&config)
            .map_err(|e| CliError::Internal(e.to_string()))?,
        manifest: file.manifest,
    };
    write_json_atomic(&manifest_out, &out_file)?;
    write_json_atomic(&report_path, &report)?;

    println!(
        "fold {}: scored {} samples, removed {} -> {}",
        args.fold,
        report.samples,
        report.removed.len(),
        manifest_out.display()
    );
    Ok(())
}
