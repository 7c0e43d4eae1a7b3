use clap::Args;

use polygate_core::geometry::BBox;
use polygate_core::losses::{
    box_loss, cls_loss, dfl_loss, total_loss, ClsBatch, DflBatch, LossWeights,
};

use crate::error::CliError;

#[derive(Args)]
pub struct LossArgs {
    /// Predicted box as `x_min,y_min,x_max,y_max`
    #[arg(long)]
    pub pred_box: String,
    /// Ground-truth box as `x_min,y_min,x_max,y_max`
    #[arg(long)]
    pub gt_box: String,
    /// Classification labels (0/1, comma-separated)
    #[arg(long)]
    pub cls_labels: Option<String>,
    /// Classification probabilities
    #[arg(long)]
    pub cls_probs: Option<String>,
    /// Per-class weights (defaults to 1 for every entry)
    #[arg(long)]
    pub cls_weights: Option<String>,
    /// Localization weights
    #[arg(long)]
    pub dfl_weights: Option<String>,
    /// Predicted coordinates
    #[arg(long)]
    pub dfl_pred: Option<String>,
    /// Ground-truth coordinates
    #[arg(long)]
    pub dfl_gt: Option<String>,
    #[arg(long, default_value_t = 7.5)]
    pub lambda_box: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_cls: f64,
    #[arg(long, default_value_t = 1.5)]
    pub lambda_dfl: f64,
}

fn parse_list(flag: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("--{flag}: '{t}': {e}")))
        })
        .collect()
}

fn parse_box(flag: &str, s: &str) -> Result<BBox<f64>, CliError> {
    let v = parse_list(flag, s)?;
    if v.len() != 4 {
        return Err(CliError::Usage(format!(
            "--{flag} needs 4 comma-separated values, got {}",
            v.len()
        )));
    }
    BBox::new(v[0], v[1], v[2], v[3]).map_err(|e| CliError::Input(e.to_string()))
}

pub fn run(args: LossArgs) -> Result<(), CliError> {
    let pred = parse_box("pred-box", &args.pred_box)?;
    let gt = parse_box("gt-box", &args.gt_box)?;
    let weights = LossWeights::new(args.lambda_box, args.lambda_cls, args.lambda_dfl)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let box_l = box_loss(&pred, &gt);

    let cls_l = match (&args.cls_labels, &args.cls_probs) {
        (None, None) => 0.0,
        (Some(labels), Some(probs)) => {
            let y: Vec<bool> = parse_list("cls-labels", labels)?
                .into_iter()
                .map(|v| v != 0.0)
                .collect();
            let p = parse_list("cls-probs", probs)?;
            let w = match &args.cls_weights {
                Some(s) => parse_list("cls-weights", s)?,
                None => vec![1.0; y.len()],
            };
            let batch = ClsBatch::new(y, p, w).map_err(|e| CliError::Usage(e.to_string()))?;
            cls_loss(&batch)
        }
        _ => {
            return Err(CliError::Usage(
                "--cls-labels and --cls-probs must be given together".into(),
            ))
        }
    };

    let dfl_l = match (&args.dfl_weights, &args.dfl_pred, &args.dfl_gt) {
        (None, None, None) => 0.0,
        (Some(w), Some(xp), Some(xg)) => {
            let batch = DflBatch::new(
                parse_list("dfl-weights", w)?,
                parse_list("dfl-pred", xp)?,
                parse_list("dfl-gt", xg)?,
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            dfl_loss(&batch)
        }
        _ => {
            return Err(CliError::Usage(
                "--dfl-weights, --dfl-pred, and --dfl-gt must be given together".into(),
            ))
        }
    };

    let total = total_loss(box_l, cls_l, dfl_l, &weights);
    println!("box    {box_l:.12}");
    println!("cls    {cls_l:.12}");
    println!("dfl    {dfl_l:.12}");
    println!(
        "total  {total:.12}  (lambda_box {} lambda_cls {} lambda_dfl {})",
        weights.lambda_box, weights.lambda_cls, weights.lambda_dfl
    );
    Ok(())
}
