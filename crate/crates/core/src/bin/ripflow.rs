use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use ripflow::config::{PipelineConfig, WaveSource};
use ripflow::detect::LikelihoodMatrix;
use ripflow::eval::{pr_curve, write_pr_csv};
use ripflow::frame_io::{load_frame, load_mask, load_sequence, read_grid_csv, save_bool_png, write_grid_csv, MaskKind};
use ripflow::optflow::{estimate_flow, FlowConfig, Method, VelocityField};
use ripflow::pipeline::run_pipeline;
use ripflow::segmentation::WaveThresholds;
use ripflow::synthlab::{render_sequence, write_scene, SceneSpec};
use ripflow::viz::{
    block_average, frame_rgb, render_drifters, render_heatmap, render_quiver, save_rgb, simulate_drifters,
    write_trajectories, DrifterConfig, Integrator, Rect,
};
use ripflow::Error;

#[derive(Parser)]
#[command(name = "ripflow", version, about = "Rip current detection from nearshore video")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic nearshore scene with ground truth.
    Synth(SynthArgs),
    /// Estimate flow for adjacent frame pairs.
    Flow(FlowArgs),
    /// Fuse rip evidence over T frame pairs into a likelihood matrix.
    Detect(DetectArgs),
    /// Precision-recall curve and AUC of a likelihood matrix.
    Eval(EvalArgs),
    /// Block-averaged arrow plot of one flow field.
    Quiver(QuiverArgs),
    /// Likelihood heatmap with legend.
    Heatmap(HeatmapArgs),
    /// Advect a grid of virtual drifters through saved flow fields.
    Drifters(DrifterArgs),
    /// Full pipeline from a TOML config.
    Run(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scene TOML; the built-in default scene when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// Directory of frames.
    #[arg(long)]
    frames: PathBuf,
    #[arg(long, default_value = "*.png")]
    pattern: String,
    /// Seconds per frame.
    #[arg(long, default_value_t = 1.0)]
    frame_interval: f64,
}

#[derive(Args)]
struct EstimatorArgs {
    #[arg(long, default_value = "hor-hs")]
    method: Method,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "lambda")]
    lambda_hor: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    presmooth: Option<f64>,
}

impl EstimatorArgs {
    fn config(&self) -> FlowConfig {
        let d = FlowConfig::with_method(self.method);
        FlowConfig {
            window: self.window.unwrap_or(d.window),
            gamma: self.gamma.unwrap_or(d.gamma),
            lambda_hor: self.lambda_hor.unwrap_or(d.lambda_hor),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            tol: self.tol.unwrap_or(d.tol),
            presmooth_sigma: self.presmooth.unwrap_or(d.presmooth_sigma),
            ..d
        }
    }
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Only the pair (K, K+1).
    #[arg(long)]
    pair: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Number of fused frame pairs.
    #[arg(long = "T", default_value_t = 20)]
    t: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value_t = 0.0)]
    speed_eps: f64,
    /// External shore mask; threshold heuristic otherwise.
    #[arg(long)]
    shore_mask: Option<PathBuf>,
    /// Static wave mask file.
    #[arg(long, conflicts_with = "wave_hsv")]
    wave_mask: Option<PathBuf>,
    /// Foam thresholds "s_max,v_min" (color frames).
    #[arg(long)]
    wave_hsv: Option<String>,
    /// Ground-truth rip mask for evaluation.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    write_flow: bool,
    #[arg(long)]
    quiver: bool,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    likelihood: PathBuf,
    /// Fusion window the counts were accumulated over.
    #[arg(long = "T", default_value_t = 20)]
    t: u32,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QuiverArgs {
    /// Directory holding u.csv, v.csv and optionally valid.png.
    #[arg(long)]
    flow: PathBuf,
    /// Background frame.
    #[arg(long)]
    frame: PathBuf,
    #[arg(long, default_value_t = 16)]
    block: usize,
    #[arg(long, default_value_t = 4.0)]
    scale: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    likelihood: PathBuf,
    #[arg(long = "T", default_value_t = 20)]
    t: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DrifterArgs {
    /// Directory of pair_NNNNNN/ flow folders, used in name order.
    #[arg(long)]
    flow_dir: PathBuf,
    /// Seeding box "x,y,width,height"; a centered 200x200 box by default.
    #[arg(long = "box")]
    region: Option<String>,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    rk2: bool,
    #[arg(long)]
    out: PathBuf,
    /// Background frame for a rendered trajectory image.
    #[arg(long, requires = "render")]
    frame: Option<PathBuf>,
    #[arg(long, requires = "frame")]
    render: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides [run] jobs.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(3, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Flow(a) => flow(a),
        Command::Detect(a) => detect(a),
        Command::Eval(a) => eval(a),
        Command::Quiver(a) => quiver(a),
        Command::Heatmap(a) => heatmap(a),
        Command::Drifters(a) => drifters(a),
        Command::Run(a) => run(a),
    }
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<SceneSpec>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => SceneSpec::default(),
    };
    let scene = render_sequence(&spec)?;
    write_scene(&spec, &scene, &a.out)?;
    info!("wrote {} frames to {}", spec.n_frames, a.out.display());
    Ok(())
}

fn pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn write_flow_dir(flow: &VelocityField, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_grid_csv(&flow.u, &dir.join("u.csv"))?;
    write_grid_csv(&flow.v, &dir.join("v.csv"))?;
    save_bool_png(&flow.valid, &dir.join("valid.png"))?;
    Ok(())
}

fn flow(a: FlowArgs) -> anyhow::Result<()> {
    use rayon::prelude::*;
    let cfg = a.est.config();
    cfg.validate()?;
    let seq = load_sequence(&a.input.frames, &a.input.pattern, a.input.frame_interval)?;
    let pairs: Vec<usize> = match a.pair {
        Some(k) if k + 1 < seq.len() => vec![k],
        Some(k) => bail!(Error::InvalidArgument(format!(
            "pair {k} needs frames {k} and {}, sequence has {}",
            k + 1,
            seq.len()
        ))),
        None => (0..seq.len() - 1).collect(),
    };
    pool(a.jobs)?.install(|| {
        pairs.par_iter().try_for_each(|&k| -> anyhow::Result<()> {
            let f = estimate_flow(seq.frame(k), seq.frame(k + 1), &cfg)?;
            write_flow_dir(&f, &a.out.join(format!("pair_{k:06}")))
        })
    })?;
    info!("{} flow fields ({}) in {}", pairs.len(), cfg.method, a.out.display());
    Ok(())
}

fn detect(a: DetectArgs) -> anyhow::Result<()> {
    let mut cfg = PipelineConfig::default();
    cfg.input.frames_dir = a.input.frames;
    cfg.input.pattern = a.input.pattern;
    cfg.input.frame_interval = a.input.frame_interval;
    cfg.flow = a.est.config();
    cfg.detect.t = a.t;
    cfg.detect.stride = a.stride;
    cfg.detect.speed_eps = a.speed_eps;
    cfg.segmentation.shore_mask = a.shore_mask;
    if let Some(p) = a.wave_mask {
        cfg.segmentation.wave = WaveSource::External;
        cfg.segmentation.wave_mask = Some(p);
    }
    if let Some(s) = &a.wave_hsv {
        cfg.segmentation.wave = WaveSource::Hsv;
        cfg.segmentation.wave_hsv = WaveThresholds::parse(s)?;
    }
    cfg.eval.ground_truth = a.gt;
    cfg.output.dir = a.out;
    cfg.output.write_flow = a.write_flow;
    cfg.output.quiver = a.quiver;
    cfg.run.jobs = a.jobs;
    report(run_pipeline(&cfg)?);
    Ok(())
}

fn report(out: ripflow::pipeline::PipelineOutput) {
    let s = &out.summary;
    info!("{} over T = {}: artifacts in {}", s.method, s.t, out.out_dir.display());
    if let Some(e) = &s.evaluation {
        info!("AUC = {:.4}", e.auc);
    }
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let counts = read_grid_csv::<u32>(&a.likelihood)?;
    let lik = LikelihoodMatrix::from_counts(counts, a.t)?;
    let gt = load_mask(&a.gt, MaskKind::GroundTruth, Some(lik.dims()))?;
    let curve = pr_curve(&lik, &gt)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_pr_csv(&curve, &a.out.join("pr_curve.csv"))?;
    let summary = serde_json::json!({
        "T": a.t,
        "auc": curve.auc,
        "operating_points": curve.operating_points().count(),
        "ground_truth": a.gt,
    });
    std::fs::write(a.out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    info!("AUC = {:.4}", curve.auc);
    Ok(())
}

fn read_flow_dir(dir: &Path) -> anyhow::Result<VelocityField> {
    let u = read_grid_csv::<f64>(&dir.join("u.csv"))?;
    let v = read_grid_csv::<f64>(&dir.join("v.csv"))?;
    u.check_dims(&v, "v.csv")?;
    let mut f = VelocityField::from_fn(u.width(), u.height(), |x, y| [*u.get(x, y), *v.get(x, y)]);
    let valid = dir.join("valid.png");
    if valid.exists() {
        f.valid = load_mask(&valid, MaskKind::Region, Some(u.dims()))?.bits;
    }
    Ok(f)
}

fn quiver(a: QuiverArgs) -> anyhow::Result<()> {
    let flow = read_flow_dir(&a.flow)?;
    let frame = load_frame(&a.frame)?;
    flow.u.check_dims(&frame.gray, "background frame")?;
    let blocks = block_average(&flow, a.block, a.block)?;
    save_rgb(&render_quiver(&frame_rgb(&frame), &blocks, a.scale)?, &a.out)?;
    info!("{} arrows in {}", blocks.non_empty(), a.out.display());
    Ok(())
}

fn heatmap(a: HeatmapArgs) -> anyhow::Result<()> {
    let lik = LikelihoodMatrix::from_counts(read_grid_csv::<u32>(&a.likelihood)?, a.t)?;
    save_rgb(&render_heatmap(&lik)?, &a.out)?;
    Ok(())
}

fn parse_box(s: &str) -> anyhow::Result<Rect> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("bad box {s:?}")))?;
    match v.as_slice() {
        &[x, y, width, height] => Ok(Rect { x, y, width, height }),
        _ => bail!(Error::InvalidArgument(format!("box needs x,y,width,height, got {s:?}"))),
    }
}

fn drifters(a: DrifterArgs) -> anyhow::Result<()> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&a.flow_dir)
        .with_context(|| format!("listing {}", a.flow_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("u.csv").exists())
        .collect();
    dirs.sort();
    let flows = dirs.iter().map(|d| read_flow_dir(d)).collect::<anyhow::Result<Vec<_>>>()?;
    let Some(first) = flows.first() else {
        bail!(Error::InsufficientData(format!("no flow fields under {}", a.flow_dir.display())));
    };
    let (w, h) = first.dims();
    let steps = a.steps.unwrap_or(((flows.len() as f64) / a.dt).floor() as usize);
    let mut cfg = DrifterConfig::centered(w, h, steps);
    if let Some(b) = &a.region {
        cfg.region = parse_box(b)?;
    }
    cfg.n = a.n;
    cfg.dt = a.dt;
    if a.rk2 {
        cfg.integrator = Integrator::Rk2;
    }
    let paths = simulate_drifters(&flows, &cfg)?;
    write_trajectories(&paths, &a.out)?;
    if let (Some(frame), Some(render)) = (&a.frame, &a.render) {
        let bg = frame_rgb(&load_frame(frame)?);
        save_rgb(&render_drifters(&bg, &paths, steps), render)?;
    }
    info!("{} drifters x {steps} steps in {}", paths.len(), a.out.display());
    Ok(())
}

fn run(a: RunArgs) -> anyhow::Result<()> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    if let Some(j) = a.jobs {
        cfg.run.jobs = j;
    }
    report(run_pipeline(&cfg)?);
    Ok(())
}
