//! Synthetic nearshore scenes with known surface flow.
//!
//! Sea rows (`y < shoreline_row`) carry a band-limited noise texture advected
//! by an analytic flow: a cross-shore jet (offshore, i.e. `-y`) inside a
//! vertical band, alongshore drift (`+x`) elsewhere, and a spatially uniform
//! cross-shore oscillation standing in for swell. Rows at and below
//! `shoreline_row` are static sand.
//!
//! Frame `t` is rendered by tracing each pixel back through the flow to frame
//! 0 and sampling the base texture once, so frame `t + 1` equals frame `t`
//! backward-warped by the flow at time `t` without accumulated blur.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_io::{
    save_gray16, save_mask, write_grid_csv, BinaryMask, Frame, FrameSequence, MaskKind,
};
use crate::grid::{gaussian_blur, Grid};
use crate::optflow::VelocityField;

/// Speeds at or above this break the small-motion assumption of the
/// single-scale estimators.
pub const MAX_SPEED: f64 = 3.0;

/// Smoothing applied to white noise to make the sea texture.
pub const TEXTURE_SIGMA: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jet {
    pub center_x: f64,
    pub width: f64,
    /// Offshore speed inside the band, pixels/frame.
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub shoreline_row: usize,
    pub jet: Jet,
    pub alongshore_speed: f64,
    /// Amplitude of the cross-shore oscillation, pixels/frame.
    pub wave_amp: f64,
    /// Oscillation period, frames.
    pub wave_period: f64,
    /// Standard deviation of per-frame sensor noise added to intensities.
    pub noise_sigma: f64,
    pub seed: u64,
    #[serde(default = "default_texture_sigma")]
    pub texture_sigma: f64,
}

fn default_texture_sigma() -> f64 {
    TEXTURE_SIGMA
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            width: 256,
            height: 256,
            n_frames: 41,
            shoreline_row: 208,
            jet: Jet {
                center_x: 128.0,
                width: 48.0,
                speed: 1.0,
            },
            alongshore_speed: 0.6,
            wave_amp: 0.3,
            wave_period: 7.0,
            noise_sigma: 0.0,
            seed: 7,
            texture_sigma: TEXTURE_SIGMA,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.width < 8 || self.height < 8 {
            return bad(format!("scene {}x{} is too small", self.width, self.height));
        }
        if self.n_frames < 2 {
            return bad("a scene needs at least 2 frames".into());
        }
        if self.shoreline_row > self.height {
            return bad(format!(
                "shoreline_row {} is outside the {}-row frame",
                self.shoreline_row, self.height
            ));
        }
        let half = self.jet.width / 2.0;
        if !(self.jet.width > 0.0)
            || self.jet.center_x - half < 0.0
            || self.jet.center_x + half > self.width as f64
        {
            return bad("jet band must lie within the frame".into());
        }
        let peak_v = self.jet.speed.abs() + self.wave_amp.abs();
        if peak_v >= MAX_SPEED || self.alongshore_speed.abs() >= MAX_SPEED {
            return bad(format!("speeds must stay below {MAX_SPEED} px/frame"));
        }
        if !(self.wave_period > 0.0) {
            return bad("wave_period must be > 0".into());
        }
        if !(self.noise_sigma >= 0.0) || !(self.texture_sigma > 0.0) {
            return bad("noise_sigma must be >= 0 and texture_sigma > 0".into());
        }
        Ok(())
    }

    pub fn in_jet(&self, x: f64) -> bool {
        (x - self.jet.center_x).abs() < self.jet.width / 2.0
    }

    pub fn is_sea(&self, y: f64) -> bool {
        y < self.shoreline_row as f64
    }

    /// Closed-form surface velocity at a continuous position and time.
    pub fn velocity_at(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        if !self.is_sea(y) {
            return [0.0, 0.0];
        }
        let swell = self.wave_amp * (2.0 * PI * t / self.wave_period).sin();
        if self.in_jet(x) {
            [0.0, -self.jet.speed + swell]
        } else {
            [self.alongshore_speed, swell]
        }
    }

    fn max_displacement(&self) -> f64 {
        let s = self
            .jet
            .speed
            .abs()
            .max(self.alongshore_speed.abs())
            + self.wave_amp.abs();
        s * self.n_frames as f64
    }
}

/// Flow from frame `t` to frame `t + 1`.
pub fn ground_truth_flow(spec: &SceneSpec, t: usize) -> Result<VelocityField> {
    if t >= spec.n_frames {
        return Err(Error::InvalidArgument(format!(
            "frame {t} is beyond the scene's {} frames",
            spec.n_frames
        )));
    }
    Ok(VelocityField::from_fn(spec.width, spec.height, |x, y| {
        spec.velocity_at(x as f64, y as f64, t as f64)
    }))
}

/// Gaussian-filtered white noise rescaled to mean 0.5, standard deviation
/// 0.12 and clamped to `[0, 1]`.
pub fn noise_texture(width: usize, height: usize, sigma: f64, seed: u64) -> Grid<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white = Grid::from_fn(width, height, |_, _| StandardNormal.sample(&mut rng));
    let smooth = gaussian_blur(&white, sigma);
    let mean = smooth.mean();
    let var = smooth.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / smooth.len() as f64;
    let sd = var.sqrt().max(f64::MIN_POSITIVE);
    smooth.map(|v| (0.5 + 0.12 * (v - mean) / sd).clamp(0.0, 1.0))
}

#[derive(Clone, Debug)]
pub struct RenderedScene {
    pub sequence: FrameSequence,
    pub shore: BinaryMask,
    pub rip_truth: BinaryMask,
}

pub fn render_sequence(spec: &SceneSpec) -> Result<RenderedScene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let pad = spec.max_displacement().ceil() as usize + 4;
    let sea = noise_texture(w + 2 * pad, h + 2 * pad, spec.texture_sigma, spec.seed);
    let sand = noise_texture(w, h, spec.texture_sigma, spec.seed ^ 0x5A4D)
        .map(|v| 0.75 + 0.5 * (v - 0.5));

    let frames: Vec<Frame> = (0..spec.n_frames)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1 + t as u64));
            let gray = Grid::from_fn(w, h, |x, y| {
                let base = if spec.is_sea(y as f64) {
                    let (mut px, mut py) = (x as f64, y as f64);
                    for k in (0..t).rev() {
                        let [u, v] = spec.velocity_at(px, py, k as f64);
                        px -= u;
                        py -= v;
                    }
                    sea.bilinear(px + pad as f64, py + pad as f64)
                } else {
                    *sand.get(x, y)
                };
                if spec.noise_sigma > 0.0 {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    (base + spec.noise_sigma * n).clamp(0.0, 1.0)
                } else {
                    base
                }
            });
            Frame::from_gray(gray)
        })
        .collect();

    let shore = BinaryMask::new(
        Grid::from_fn(w, h, |_, y| !spec.is_sea(y as f64)),
        MaskKind::Shore,
    );
    let rip_truth = BinaryMask::new(
        Grid::from_fn(w, h, |x, y| spec.is_sea(y as f64) && spec.in_jet(x as f64)),
        MaskKind::GroundTruth,
    );
    Ok(RenderedScene {
        sequence: FrameSequence::new(frames, 1.0)?,
        shore,
        rip_truth,
    })
}

/// Writes `frames/frame_NNNNNN.png` (16-bit), `shore_mask.png`,
/// `rip_gt.png`, `flow_gt/u_NNNNNN.csv` / `v_NNNNNN.csv` and `scene.toml`.
pub fn write_scene(spec: &SceneSpec, scene: &RenderedScene, out: &Path) -> Result<()> {
    let frames_dir = out.join("frames");
    let flow_dir = out.join("flow_gt");
    for d in [out, frames_dir.as_path(), flow_dir.as_path()] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    for (t, f) in scene.sequence.frames().iter().enumerate() {
        save_gray16(&f.gray, &frames_dir.join(format!("frame_{t:06}.png")))?;
    }
    for t in 0..spec.n_frames - 1 {
        let gt = ground_truth_flow(spec, t)?;
        write_grid_csv(&gt.u, &flow_dir.join(format!("u_{t:06}.csv")))?;
        write_grid_csv(&gt.v, &flow_dir.join(format!("v_{t:06}.csv")))?;
    }
    save_mask(&scene.shore, &out.join("shore_mask.png"))?;
    save_mask(&scene.rip_truth, &out.join("rip_gt.png"))?;
    let text = toml::to_string_pretty(spec).map_err(|e| Error::Config(e.to_string()))?;
    let path = out.join("scene.toml");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
