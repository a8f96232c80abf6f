//! End-to-end batch run: frames, masks, offshore field, fused likelihood,
//! optional evaluation, artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{PipelineConfig, WaveSource};
use crate::detect::{fusion_pairs, run_detection_with, LikelihoodMatrix, SceneMasks};
use crate::error::{Error, Result};
use crate::eval::{mask_iou_f1, pr_curve, threshold_region, write_pr_csv};
use crate::frame_io::{load_mask, load_sequence, save_bool_png, save_mask, write_grid_csv, BinaryMask, FrameSequence, MaskKind};
use crate::geometry::offshore_from_shore;
use crate::optflow::VelocityField;
use crate::segmentation::{combined_mask, shore_mask, wave_mask, ShoreSource};
use crate::viz::{block_average, direction_blocks, frame_rgb, render_heatmap, render_quiver, save_rgb};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub method: String,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    #[serde(rename = "T")]
    pub t: u32,
    pub stride: usize,
    pub mean_likelihood: f64,
    /// Pixels with `L >= ceil(T / 2)`.
    pub majority_pixels: usize,
    pub evaluation: Option<EvalSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalSummary {
    pub ground_truth: PathBuf,
    pub auc: f64,
    pub operating_points: usize,
    pub best_f1: f64,
    pub best_f1_threshold: u32,
    pub majority_iou: f64,
    pub majority_f1: f64,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub out_dir: PathBuf,
    pub likelihood: LikelihoodMatrix,
    pub summary: Summary,
}

/// Runs the configured pipeline on a pool of `cfg.run.jobs` threads.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(cfg))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn scene_masks(cfg: &PipelineConfig, seq: &FrameSequence, shore: &BinaryMask) -> Result<SceneMasks> {
    let seg = &cfg.segmentation;
    let dims = Some((seq.width(), seq.height()));
    let use_hsv = match seg.wave {
        WaveSource::Off => false,
        WaveSource::Hsv => true,
        WaveSource::Auto => seq.frame(0).color.is_some(),
        WaveSource::External => {
            let path = seg.wave_mask.as_ref().expect("validated");
            let wave = load_mask(path, MaskKind::Wave, dims)?;
            return Ok(SceneMasks::Static(combined_mask(shore, &wave)?));
        }
    };
    if !use_hsv {
        return Ok(SceneMasks::Static(combined_mask(
            shore,
            &BinaryMask::filled(seq.width(), seq.height(), false, MaskKind::Wave),
        )?));
    }
    seq.frames()
        .iter()
        .map(|f| combined_mask(shore, &wave_mask(f, &seg.wave_hsv)?))
        .collect::<Result<_>>()
        .map(SceneMasks::PerFrame)
}

fn run_inner(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let seq = load_sequence(&cfg.input.frames_dir, &cfg.input.pattern, cfg.input.frame_interval)
        .map_err(|e| e.in_stage("frame-io"))?;
    let params = cfg.detect.params();
    let pairs = fusion_pairs(&params, seq.len()).map_err(|e| e.in_stage("detect"))?;

    let source = match &cfg.segmentation.shore_mask {
        Some(p) => ShoreSource::External(p.clone()),
        None => ShoreSource::Threshold(cfg.segmentation.shore_threshold),
    };
    let shore = shore_mask(seq.frame(0), &source).map_err(|e| e.in_stage("segmentation"))?;
    let masks = scene_masks(cfg, &seq, &shore).map_err(|e| e.in_stage("segmentation"))?;
    let (offshore, _) = offshore_from_shore(&shore, &cfg.geometry).map_err(|e| e.in_stage("geometry"))?;

    let out = &cfg.output.dir;
    create_dir(out).map_err(|e| e.in_stage("output"))?;
    let flow_dir = out.join("flow");
    let quiver_dir = out.join("quiver");
    if cfg.output.write_flow {
        create_dir(&flow_dir).map_err(|e| e.in_stage("output"))?;
    }
    if cfg.output.quiver {
        create_dir(&quiver_dir).map_err(|e| e.in_stage("output"))?;
    }

    let sink = |k: usize, flow: &VelocityField| -> Result<()> {
        let first = pairs[k].0;
        if cfg.output.write_flow {
            let dir = flow_dir.join(format!("pair_{first:06}"));
            create_dir(&dir)?;
            write_grid_csv(&flow.u, &dir.join("u.csv"))?;
            write_grid_csv(&flow.v, &dir.join("v.csv"))?;
            save_bool_png(&flow.valid, &dir.join("valid.png"))?;
        }
        if cfg.output.quiver {
            let b = cfg.output.quiver_block.min(flow.width()).min(flow.height());
            let blocks = block_average(flow, b, b)?;
            let img = render_quiver(&frame_rgb(seq.frame(first)), &blocks, cfg.output.quiver_scale)?;
            save_rgb(&img, &quiver_dir.join(format!("pair_{first:06}.png")))?;
        }
        Ok(())
    };
    let lik = run_detection_with(&seq, &cfg.flow, &masks, &offshore, &params, sink)
        .map_err(|e| e.in_stage("optflow/detect"))?;

    let stage = |e: Error| e.in_stage("output");
    write_grid_csv(&lik.counts, &out.join("likelihood.csv")).map_err(stage)?;
    save_rgb(&render_heatmap(&lik)?, &out.join("heatmap.png")).map_err(stage)?;
    save_mask(&shore, &out.join("shore_mask.png")).map_err(stage)?;
    let b = 16.min(seq.width()).min(seq.height());
    let omap = render_quiver(&frame_rgb(seq.frame(0)), &direction_blocks(&offshore, b, b)?, b as f64 / 2.0)?;
    save_rgb(&omap, &out.join("offshore.png")).map_err(stage)?;

    let majority = lik.t.div_ceil(2);
    let majority_region = threshold_region(&lik, majority);
    let evaluation = match &cfg.eval.ground_truth {
        None => None,
        Some(gt_path) => Some(
            evaluate(&lik, gt_path, &majority_region, out).map_err(|e| e.in_stage("eval"))?,
        ),
    };

    let summary = Summary {
        method: cfg.flow.method.to_string(),
        frames: seq.len(),
        width: seq.width(),
        height: seq.height(),
        t: lik.t,
        stride: params.stride,
        mean_likelihood: lik.normalized().mean(),
        majority_pixels: majority_region.count(),
        evaluation,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?;
    write_text(&out.join("summary.json"), &json).map_err(stage)?;
    write_text(&out.join("config.effective.toml"), &cfg.to_toml()?).map_err(stage)?;

    Ok(PipelineOutput {
        out_dir: out.clone(),
        likelihood: lik,
        summary,
    })
}

fn evaluate(lik: &LikelihoodMatrix, gt_path: &Path, majority: &BinaryMask, out: &Path) -> Result<EvalSummary> {
    let gt = load_mask(gt_path, MaskKind::GroundTruth, Some(lik.dims()))?;
    let curve = pr_curve(lik, &gt)?;
    write_pr_csv(&curve, &out.join("pr_curve.csv"))?;
    let (best_f1, best_f1_threshold) = curve
        .operating_points()
        .map(|p| {
            let f1 = if p.precision + p.recall > 0.0 {
                2.0 * p.precision * p.recall / (p.precision + p.recall)
            } else {
                0.0
            };
            (f1, p.threshold)
        })
        .fold((0.0, lik.t + 1), |a, b| if b.0 > a.0 { b } else { a });
    let (majority_iou, majority_f1) = mask_iou_f1(majority, &gt)?;
    Ok(EvalSummary {
        ground_truth: gt_path.to_path_buf(),
        auc: curve.auc,
        operating_points: curve.operating_points().count(),
        best_f1,
        best_f1_threshold,
        majority_iou,
        majority_f1,
    })
}
