//! `polygate` — pipeline CLI for polyp-detection dataset tooling.
//!
//! Subcommands mirror the pipeline stages: `convert` masks to YOLO labels,
//! `split` the corpus into seeded k-fold manifests, `filter` train/val
//! samples with LOF, `eval` predictions against labels, and `loss` for
//! spot-checking the loss kernels.

mod artifact;
mod commands;
mod error;

use clap::error::ErrorKind;
use clap::Parser;

use commands::{convert, eval, filter, loss, split};

#[derive(Parser)]
#[command(name = "polygate", version, about = "Polyp-detection dataset pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Generate YOLO label files from segmentation masks
    Convert(convert::ConvertArgs),
    /// Build a deterministic k-fold split manifest
    Split(split::SplitArgs),
    /// Score one fold's train+val images with LOF and record removals
    Filter(filter::FilterArgs),
    /// Evaluate prediction files against ground-truth labels
    Eval(eval::EvalArgs),
    /// Evaluate the loss kernels on explicit inputs
    Loss(loss::LossArgs),
}

fn main() {
    // die quietly when a downstream pipe closes (e.g. `polygate eval | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let result = match cli.command {
        Command::Convert(args) => convert::run(args),
        Command::Split(args) => split::run(args),
        Command::Filter(args) => filter::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Loss(args) => loss::run(args),
    };

    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
