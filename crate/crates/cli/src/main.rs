//! `memmatte` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error,
//! 3 numeric failure (non-finite loss during fitting).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memmatte::compositor::SpriteKind;

const AFTER_HELP: &str = "\
Formats:
  Frame sequences are directories of frame_00000.png, frame_00001.png, ...
  Alpha: 8-bit grayscale (value/255); 16-bit grayscale is accepted on read.
  Images and foregrounds: 8-bit RGB. Values are quantised to 1/255 on write.
  JSON is used for manifests, configs, weights and reports; CSV for traces
  and flattened metrics. See the README for the schemas.

Exit codes: 0 ok, 1 usage/validation, 2 I/O, 3 numeric failure.";

#[derive(Parser, Debug)]
#[command(name = "memmatte", version, about = "Video matting numerics: synthesis, compositing, metrics, memory-block demo and MAC counting", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic clip: frames/, alpha/, fg/, bg.png and manifest.json.
    Synth(SynthArgs),
    /// Composite an alpha/foreground sequence over a new background image.
    Composite(CompositeArgs),
    /// Compare predicted and ground-truth alpha sequences; writes report.json and report.csv.
    Eval(EvalArgs),
    /// Run the toy network on a synthetic clip and fit its memory block by direct supervision.
    AttnDemo(AttnDemoArgs),
    /// Count multiply-accumulates of a convolution chain.
    Macs(MacsArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory (must not exist unless --force is given).
    #[arg(long)]
    out: PathBuf,
    /// JSON file with a full synth spec; individual flags are then ignored.
    ///
    /// Keys: frames, height, width, sprite ("disk" | "square"), radius,
    /// softness, velocity ([vx, vy]), seed. Unknown keys are rejected.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    frames: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, value_enum, default_value_t = Sprite::Disk)]
    sprite: Sprite,
    /// Radius of the fully opaque core in pixels.
    #[arg(long, default_value_t = 14.0)]
    radius: f64,
    /// Width of the linear alpha ramp in pixels.
    #[arg(long, default_value_t = 4.0)]
    softness: f64,
    /// Horizontal velocity in pixels per frame.
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    vx: f64,
    /// Vertical velocity in pixels per frame.
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    vy: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Replace the generated parts of an existing output directory.
    #[arg(long)]
    force: bool,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Sprite {
    Disk,
    Square,
}

impl From<Sprite> for SpriteKind {
    fn from(s: Sprite) -> Self {
        match s {
            Sprite::Disk => SpriteKind::Disk,
            Sprite::Square => SpriteKind::Square,
        }
    }
}

#[derive(Args, Debug)]
struct CompositeArgs {
    /// Alpha sequence directory.
    #[arg(long)]
    alpha: PathBuf,
    /// Foreground sequence directory.
    #[arg(long)]
    fg: PathBuf,
    /// Background PNG (8-bit RGB) with the same size as the frames.
    #[arg(long)]
    bg: PathBuf,
    /// Output sequence directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Predicted alpha sequence (a directory with an alpha/ subdirectory is also accepted).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth alpha sequence (same rule as --pred).
    #[arg(long)]
    gt: PathBuf,
    /// Directory that receives report.json and report.csv.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated subset of mad,mse,grad,conn,dtssd.
    #[arg(long, default_value = "mad,mse,grad,conn,dtssd")]
    metrics: String,
    /// Gaussian sigma of the Grad metric.
    #[arg(long, default_value_t = 1.4)]
    grad_sigma: f64,
    /// Number of threshold levels of the Conn metric.
    #[arg(long, default_value_t = 10)]
    conn_levels: usize,
}

#[derive(Args, Debug)]
struct AttnDemoArgs {
    /// Clip directory written by `memmatte synth`.
    #[arg(long)]
    clip: PathBuf,
    /// Output directory for loss_trace.csv, params.json and report.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    step_size: f64,
    /// Seed for the network weights.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Laplacian pyramid levels for the reported loss breakdown.
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct MacsArgs {
    /// Network config JSON: {"layers": [{"name", "in_ch", "out_ch", "kernel",
    /// "stride" = 1, "concat_ch" = 0, "upsample" = 1}, ...]}. Defaults to the
    /// toy network's convolution chain.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    height: usize,
    #[arg(long, default_value_t = 512)]
    width: usize,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Composite(a) => commands::composite(a),
        Command::Eval(a) => commands::eval(a),
        Command::AttnDemo(a) => commands::attn_demo(a),
        Command::Macs(a) => commands::macs(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
