use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use polygate_core::dataset::{ingest, write_labels, IngestOptions};
use polygate_core::geometry::Connectivity;

use crate::artifact::{write_json_atomic, TOOL_VERSION};
use crate::error::CliError;

#[derive(Args)]
pub struct ConvertArgs {
    /// Directory of input images
    #[arg(long)]
    pub images: PathBuf,
    /// Directory of segmentation masks (matching file stems)
    #[arg(long)]
    pub masks: PathBuf,
    /// Dataset name; sample ids become `<dataset>/<stem>`
    #[arg(long)]
    pub dataset: String,
    /// Label output root; files go to `<labels>/<dataset>/<stem>.txt`
    #[arg(long)]
    pub labels: PathBuf,
    /// Conversion report path (default `<labels>/<dataset>.convert.json`)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Mask binarization threshold
    #[arg(long, default_value_t = 128)]
    pub threshold: u8,
    /// Minimum component area in pixels; smaller components are speckle
    #[arg(long, default_value_t = 64)]
    pub min_area: usize,
    /// Pixel connectivity: 4 or 8
    #[arg(long, default_value_t = 8, value_parser = parse_connectivity_flag)]
    pub connectivity: u8,
}

fn parse_connectivity_flag(s: &str) -> Result<u8, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("connectivity must be 4 or 8, got '{s}'")),
    }
}

#[derive(Serialize)]
struct ConvertConfig {
    images: String,
    masks: String,
    dataset: String,
    labels: String,
    threshold: u8,
    min_area: usize,
    connectivity: u8,
}

#[derive(Serialize)]
struct ImageEntry {
    id: String,
    boxes: usize,
    dropped_components: usize,
}

#[derive(Serialize)]
struct ConvertReport {
    version: String,
    config: ConvertConfig,
    images: usize,
    total_boxes: usize,
    per_image: Vec<ImageEntry>,
}

pub fn run(args: ConvertArgs) -> Result<(), CliError> {
    let opts = IngestOptions {
        threshold: args.threshold,
        min_area: args.min_area,
        connectivity: if args.connectivity == 4 {
            Connectivity::Four
        } else {
            Connectivity::Eight
        },
    };

    let samples = ingest(&args.images, &args.masks, &args.dataset, &opts)?;

    let out_dir = args.labels.join(&args.dataset);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out_dir.display())))?;
    for sample in &samples {
        write_labels(sample, &out_dir)?;
    }

    let report = ConvertReport {
        version: TOOL_VERSION.to_string(),
        config: ConvertConfig {
            images: args.images.display().to_string(),
            masks: args.masks.display().to_string(),
            dataset: args.dataset.clone(),
            labels: args.labels.display().to_string(),
            threshold: args.threshold,
            min_area: args.min_area,
            connectivity: args.connectivity,
        },
        images: samples.len(),
        total_boxes: samples.iter().map(|s| s.boxes.len()).sum(),
        per_image: samples
            .iter()
            .map(|s| ImageEntry {
                id: s.sample_id.clone(),
                boxes: s.boxes.len(),
                dropped_components: s.dropped_components,
            })
            .collect(),
    };
    let report_path = args
        .report
        .unwrap_or_else(|| args.labels.join(format!("{}.convert.json", args.dataset)));
    write_json_atomic(&report_path, &report)?;

    println!(
        "converted {} images ({} boxes) -> {}",
        report.images,
        report.total_boxes,
        out_dir.display()
    );
    Ok(())
}
