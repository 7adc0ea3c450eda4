use std::fs;
use std::path::{Path, PathBuf};

use memmatte::attention::FitOptions;
use memmatte::compositor::{replace_background, synth_clip, Clip, Role, SynthSpec};
use memmatte::io::{read_png, read_sequence, write_atomic, write_png, write_sequence};
use memmatte::losses::{video_loss, MattingOutputs};
use memmatte::metrics::{evaluate, mac_table, ConnOptions, EvalOptions, GradOptions, MacReport, MetricSet, NetworkConfig};
use memmatte::net::{fit_memory_block, forward_clip, lowres_targets, ToyNetConfig, ToyNetWeights};
use memmatte::{Error, Result};

use crate::{AttnDemoArgs, CompositeArgs, EvalArgs, MacsArgs, SynthArgs};

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Image { .. } => 2,
        Error::NonFiniteLoss { .. } => 3,
        _ => 1,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn require_dir(path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        })
    }
}

/// Creates `out`, refusing to reuse an existing directory unless `force`.
fn prepare_output(out: &Path, force: bool) -> Result<()> {
    if out.exists() && !force {
        return Err(Error::Argument(format!("{} already exists; pass --force to overwrite", out.display())));
    }
    fs::create_dir_all(out).map_err(io_err(out))
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let spec = match &args.spec {
        Some(p) => serde_json::from_str::<SynthSpec>(&read_text(p)?)?,
        None => SynthSpec {
            frames: args.frames,
            height: args.height,
            width: args.width,
            sprite: args.sprite.into(),
            radius: args.radius,
            softness: args.softness,
            velocity: [args.vx, args.vy],
            seed: args.seed,
        },
    };
    spec.validate()?;
    prepare_output(&args.out, args.force)?;
    let clip = synth_clip(&spec)?;
    for (name, c) in [("frames", &clip.frames), ("alpha", &clip.gt_alpha), ("fg", &clip.gt_fg)] {
        let dir = args.out.join(name);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        write_sequence(&dir, c)?;
    }
    write_png(&args.out.join("bg.png"), &clip.bg)?;
    let manifest = serde_json::json!({ "spec": spec });
    write_atomic(&args.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    println!("wrote {} frames of {}x{} to {}", spec.frames, spec.height, spec.width, args.out.display());
    Ok(())
}

pub fn composite(args: CompositeArgs) -> Result<()> {
    require_dir(&args.alpha)?;
    require_dir(&args.fg)?;
    let alpha = read_sequence(&args.alpha, Role::Alpha)?;
    let fg = read_sequence(&args.fg, Role::Foreground)?;
    let bg = read_png(&args.bg, 3)?;
    let frames = replace_background(&alpha, &fg, &bg)?;
    prepare_output(&args.out, args.force)?;
    write_sequence(&args.out, &frames)?;
    println!("wrote {} composited frames to {}", frames.len(), args.out.display());
    Ok(())
}

/// A synth output root is accepted in place of its `alpha/` sequence.
fn alpha_dir(path: &Path) -> PathBuf {
    let nested = path.join("alpha");
    if nested.is_dir() {
        nested
    } else {
        path.to_path_buf()
    }
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let options = EvalOptions {
        metrics: MetricSet::parse(&args.metrics)?,
        grad: GradOptions { sigma: args.grad_sigma },
        conn: ConnOptions { levels: args.conn_levels, ..ConnOptions::default() },
    };
    require_dir(&args.pred)?;
    require_dir(&args.gt)?;
    let pred = read_sequence(&alpha_dir(&args.pred), Role::Alpha)?;
    let gt = read_sequence(&alpha_dir(&args.gt), Role::Alpha)?;
    let report = evaluate(&pred, &gt, &options)?;
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    write_atomic(&args.out.join("report.json"), report.to_json()?.as_bytes())?;
    write_atomic(&args.out.join("report.csv"), report.to_csv().as_bytes())?;
    println!("{}", report.summary_line());
    Ok(())
}

pub fn attn_demo(args: AttnDemoArgs) -> Result<()> {
    for sub in ["frames", "alpha", "fg"] {
        require_dir(&args.clip.join(sub))?;
    }
    let options = FitOptions { steps: args.steps, step_size: args.step_size };
    let frames = read_sequence(&args.clip.join("frames"), Role::Image)?;
    let gt_alpha = read_sequence(&args.clip.join("alpha"), Role::Alpha)?;
    let gt_fg = read_sequence(&args.clip.join("fg"), Role::Foreground)?;
    prepare_output(&args.out, args.force)?;

    let config = ToyNetConfig::demo(args.seed);
    let mut weights = ToyNetWeights::seeded(&config)?;
    let fit = fit_memory_block(&frames, &gt_alpha, &gt_fg, &config, &weights, options)?;

    let mut trace = String::from("step,loss\n");
    for (i, l) in fit.trace.iter().enumerate() {
        trace.push_str(&format!("{i},{l}\n"));
    }
    write_atomic(&args.out.join("loss_trace.csv"), trace.as_bytes())?;
    write_atomic(&args.out.join("params.json"), fit.params.to_named().to_json()?.as_bytes())?;

    weights.memory = fit.params;
    let outputs = forward_clip(&frames, &config, &weights)?;
    let (ga_lr, gf_lr) = lowres_targets(&gt_alpha, &gt_fg)?;
    let pred = MattingOutputs {
        alpha: outputs.alpha.clone(),
        fg: outputs.fg,
        alpha_lr: Clip::new(outputs.alpha_lr, Role::Alpha)?,
        fg_lr: Clip::new(outputs.fg_lr, Role::Foreground)?,
    };
    let gt = MattingOutputs {
        alpha: gt_alpha.clone(),
        fg: gt_fg,
        alpha_lr: Clip::new(ga_lr, Role::Alpha)?,
        fg_lr: Clip::new(gf_lr, Role::Foreground)?,
    };
    let metrics = MetricSet { dtssd: frames.len() >= 2, ..MetricSet::default() };
    let mut report = evaluate(&pred.alpha, &gt_alpha, &EvalOptions { metrics, ..EvalOptions::default() })?;
    report.losses = Some(video_loss(&pred, &gt, args.levels)?);
    write_atomic(&args.out.join("report.json"), report.to_json()?.as_bytes())?;

    let initial = fit.trace[0];
    println!("initial_loss={initial} final_loss={} ratio={}", fit.final_loss, fit.final_loss / initial);
    Ok(())
}

/// Aligned per-layer table followed by a `total` line.
pub fn format_mac_table(report: &MacReport) -> String {
    let width = report.layers.iter().map(|l| l.name.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<width$}  {:>6}  {:>6}  {:>14}\n", "layer", "out_h", "out_w", "macs");
    for l in &report.layers {
        out.push_str(&format!("{:<width$}  {:>6}  {:>6}  {:>14}\n", l.name, l.out_h, l.out_w, l.macs));
    }
    out.push_str(&format!("total {}\n", report.total));
    out
}

pub fn macs(args: MacsArgs) -> Result<()> {
    let config = match &args.config {
        Some(p) => NetworkConfig::from_json(&read_text(p)?).map_err(|e| Error::Config(e.to_string()))?,
        None => ToyNetConfig::default().network_config(),
    };
    let report = mac_table(&config, args.height, args.width)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", format_mac_table(&report));
    }
    Ok(())
}
