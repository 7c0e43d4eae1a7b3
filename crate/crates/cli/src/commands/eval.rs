use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use polygate_core::dataset::{parse_labels, parse_predictions};
use polygate_core::evaluation::{evaluate, Detection, EvalReport, GroundTruth};

use crate::artifact::{write_json_atomic, TOOL_VERSION};
use crate::commands::collect_by_rel_stem;
use crate::error::CliError;

#[derive(Args)]
pub struct EvalArgs {
    /// Ground-truth label root (`.txt` per image)
    #[arg(long)]
    pub labels: PathBuf,
    /// Prediction root; files mirror the label tree, missing files mean
    /// no detections for that image
    #[arg(long)]
    pub predictions: PathBuf,
    /// Report output path
    #[arg(long)]
    pub output: PathBuf,
    /// IoU threshold for the scalar precision/recall/F1 row
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    /// Per-image detection cap applied before matching
    #[arg(long, default_value_t = 300)]
    pub max_det: usize,
}

#[derive(Serialize)]
struct EvalConfig {
    labels: String,
    predictions: String,
    iou: f64,
    max_det: usize,
}

/// Report file schema: version and config echo, then the report fields
/// inlined at the top level.
#[derive(Serialize)]
struct EvalReportFile {
    version: String,
    config: EvalConfig,
    #[serde(flatten)]
    report: EvalReport<f64>,
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    if !(args.iou > 0.0 && args.iou < 1.0) {
        return Err(CliError::Usage(format!(
            "--iou must be in (0, 1), got {}",
            args.iou
        )));
    }

    let label_files = collect_by_rel_stem(&args.labels, "txt")?;
    if label_files.is_empty() {
        return Err(CliError::Input(format!(
            "no ground-truth label files under {}",
            args.labels.display()
        )));
    }
    let pred_files = collect_by_rel_stem(&args.predictions, "txt")?;
    let orphans: Vec<&String> = pred_files
        .keys()
        .filter(|k| !label_files.contains_key(*k))
        .collect();
    if !orphans.is_empty() {
        return Err(CliError::Input(format!(
            "{} prediction file(s) have no matching label file, e.g. '{}'",
            orphans.len(),
            orphans[0]
        )));
    }

    // IoU is invariant under per-axis normalization, so ground truth and
    // predictions are compared in the unit frame.
    let mut gts: Vec<GroundTruth<f64>> = Vec::new();
    let mut dets: Vec<Detection<f64>> = Vec::new();
    for (image_id, label_path) in &label_files {
        for norm in parse_labels(label_path)? {
            gts.push(GroundTruth {
                image_id: image_id.clone(),
                class_id: norm.class_id(),
                bbox: norm.from_norm(1.0, 1.0)?,
            });
        }
        if let Some(pred_path) = pred_files.get(image_id) {
            dets.extend(parse_predictions(pred_path, image_id, 1.0, 1.0)?);
        }
    }
    if gts.is_empty() {
        return Err(CliError::Input(format!(
            "label files under {} contain no boxes: nothing to evaluate against",
            args.labels.display()
        )));
    }

    let report = evaluate(&dets, &gts, args.iou, args.max_det)
        .map_err(|e| CliError::Input(e.to_string()))?;

    let file = EvalReportFile {
        version: TOOL_VERSION.to_string(),
        config: EvalConfig {
            labels: args.labels.display().to_string(),
            predictions: args.predictions.display().to_string(),
            iou: args.iou,
            max_det: args.max_det,
        },
        report: report.clone(),
    };
    write_json_atomic(&args.output, &file)?;

    println!("images      {}", label_files.len());
    println!("detections  {}", dets.len());
    println!("tp/fp/fn    {}/{}/{}", report.counts.tp, report.counts.fp, report.counts.fn_);
    println!("precision   {:.6}", report.precision);
    println!("recall      {:.6}", report.recall);
    println!("f1          {:.6}", report.f1);
    println!("mAP@0.5     {:.6}", report.map50);
    println!("mAP@0.5:.95 {:.6}", report.map50_95);
    println!("report -> {}", args.output.display());
    Ok(())
}
