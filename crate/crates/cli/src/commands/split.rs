use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use polygate_core::dataset::kfold_split;

use crate::artifact::{write_json_atomic, TOOL_VERSION};
use crate::commands::{collect_by_rel_stem, ManifestFile};
use crate::error::CliError;

#[derive(Args)]
pub struct SplitArgs {
    /// Label root produced by `convert`; every `.txt` file is one sample
    #[arg(long)]
    pub labels: PathBuf,
    /// Manifest output path
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Test fraction per fold (must be ~ 1/folds for rotation)
    #[arg(long, default_value_t = 0.20)]
    pub test: f64,
    /// Validation fraction of the corpus
    #[arg(long, default_value_t = 0.15)]
    pub val: f64,
    /// Shuffle seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Serialize)]
struct SplitConfig {
    labels: String,
    folds: usize,
    test: f64,
    val: f64,
    seed: u64,
}

pub fn run(args: SplitArgs) -> Result<(), CliError> {
    let labels = collect_by_rel_stem(&args.labels, "txt")?;
    if labels.is_empty() {
        return Err(CliError::Input(format!(
            "no label files found under {}",
            args.labels.display()
        )));
    }
    let ids: Vec<String> = labels.keys().cloned().collect();
    let manifest = kfold_split(&ids, args.folds, args.test, args.val, args.seed)?;
    manifest
        .validate()
        .map_err(CliError::Internal)?;

    let config = SplitConfig {
        labels: args.labels.display().to_string(),
        folds: args.folds,
        test: args.test,
        val: args.val,
        seed: args.seed,
    };
    let file = ManifestFile {
        version: TOOL_VERSION.to_string(),
        config: serde_json::to_value(&config)
            .map_err(|e| CliError::Internal(e.to_string()))?,
        manifest,
    };
    write_json_atomic(&args.output, &file)?;

    println!(
        "split {} samples into {} folds -> {}",
        ids.len(),
        args.folds,
        args.output.display()
    );
    Ok(())
}
