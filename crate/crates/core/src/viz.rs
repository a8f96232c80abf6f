//! Quiver plots, likelihood heatmaps and virtual drifters.

use std::path::Path;

use image::{Rgb, RgbImage};
use rayon::prelude::*;

use crate::detect::LikelihoodMatrix;
use crate::error::{Error, Result};
use crate::frame_io::Frame;
use crate::geometry::DirectionField;
use crate::grid::Grid;
use crate::optflow::VelocityField;

/// Block-mean vectors; `None` for blocks without a valid member pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockField {
    pub block_w: usize,
    pub block_h: usize,
    pub means: Grid<Option<[f64; 2]>>,
}

impl BlockField {
    pub fn non_empty(&self) -> usize {
        self.means.iter().filter(|m| m.is_some()).count()
    }
}

/// Mean of the valid vectors in each `block_w x block_h` tile. Trailing
/// partial tiles average over the pixels they actually contain.
pub fn block_average(v: &VelocityField, block_w: usize, block_h: usize) -> Result<BlockField> {
    let (w, h) = v.dims();
    if block_w == 0 || block_h == 0 || block_w > w || block_h > h {
        return Err(Error::InvalidArgument(format!(
            "block {block_w}x{block_h} does not fit a {w}x{h} frame"
        )));
    }
    let (nx, ny) = (w.div_ceil(block_w), h.div_ceil(block_h));
    let means = Grid::from_fn(nx, ny, |bx, by| {
        let mut n = 0usize;
        let mut s = [0.0; 2];
        for y in by * block_h..((by + 1) * block_h).min(h) {
            for x in bx * block_w..((bx + 1) * block_w).min(w) {
                if v.is_valid(x, y) {
                    let [u, vv] = v.at(x, y);
                    s[0] += u;
                    s[1] += vv;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| [s[0] / n as f64, s[1] / n as f64])
    });
    Ok(BlockField {
        block_w,
        block_h,
        means,
    })
}

/// Block means of an offshore direction field, for offshore flow maps.
pub fn direction_blocks(o: &DirectionField, block_w: usize, block_h: usize) -> Result<BlockField> {
    let (w, h) = o.dims();
    let mut v = VelocityField::from_fn(w, h, |x, y| o.at(x, y));
    v.valid = o.valid.clone();
    block_average(&v, block_w, block_h)
}

pub const ARROW_COLOR: Rgb<u8> = Rgb([255, 32, 32]);

/// The frame as an 8-bit RGB image (color planes when present).
pub fn frame_rgb(frame: &Frame) -> RgbImage {
    let (w, h) = (frame.width(), frame.height());
    let to8 = |c: f64| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        match &frame.color {
            Some(c) => {
                let [r, g, b] = c.get(x, y).to_rgb();
                Rgb([to8(r), to8(g), to8(b)])
            }
            None => {
                let g = to8(*frame.gray.get(x, y));
                Rgb([g, g, g])
            }
        }
    })
}

/// Arrow tail and tip for one block, or `None` when nothing is drawn.
/// The tail sits at the block center; the length is `scale * |v|`, capped
/// at the block diagonal.
pub fn arrow_geometry(blocks: &BlockField, bx: usize, by: usize, scale: f64) -> Option<([f64; 2], [f64; 2])> {
    let [u, v] = (*blocks.means.get(bx, by))?;
    let speed = u.hypot(v);
    if speed == 0.0 || scale <= 0.0 {
        return None;
    }
    let cap = (blocks.block_w as f64).hypot(blocks.block_h as f64);
    let len = (scale * speed).min(cap);
    let tail = [
        bx as f64 * blocks.block_w as f64 + (blocks.block_w as f64 - 1.0) / 2.0,
        by as f64 * blocks.block_h as f64 + (blocks.block_h as f64 - 1.0) / 2.0,
    ];
    Some((tail, [tail[0] + len * u / speed, tail[1] + len * v / speed]))
}

/// Draws one arrow per non-empty, non-zero block over `base`.
pub fn render_quiver(base: &RgbImage, blocks: &BlockField, scale: f64) -> Result<RgbImage> {
    let (w, h) = (base.width() as usize, base.height() as usize);
    if blocks.means.dims() != (w.div_ceil(blocks.block_w), h.div_ceil(blocks.block_h)) {
        return Err(Error::Dimension(format!(
            "block grid {:?} does not tile a {w}x{h} image",
            blocks.means.dims()
        )));
    }
    let mut img = base.clone();
    let (nx, ny) = blocks.means.dims();
    for by in 0..ny {
        for bx in 0..nx {
            if let Some((tail, tip)) = arrow_geometry(blocks, bx, by, scale) {
                draw_line(&mut img, tail, tip);
                let (dx, dy) = (tip[0] - tail[0], tip[1] - tail[1]);
                let len = dx.hypot(dy);
                let head = (len * 0.3).clamp(1.0, 4.0);
                let (ux, uy) = (dx / len, dy / len);
                for side in [-1.0, 1.0] {
                    let bx = tip[0] - head * (ux * 0.866 - side * uy * 0.5);
                    let by = tip[1] - head * (uy * 0.866 + side * ux * 0.5);
                    draw_line(&mut img, tip, [bx, by]);
                }
            }
        }
    }
    Ok(img)
}

fn draw_line(img: &mut RgbImage, a: [f64; 2], b: [f64; 2]) {
    let n = (b[0] - a[0]).abs().max((b[1] - a[1]).abs()).ceil().max(1.0) as usize;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let x = (a[0] + t * (b[0] - a[0])).round();
        let y = (a[1] + t * (b[1] - a[1])).round();
        if x >= 0.0 && y >= 0.0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, ARROW_COLOR);
        }
    }
}

/// Black-red-yellow-white ramp; every channel is non-decreasing in the index.
pub fn colormap(index: u8) -> Rgb<u8> {
    let i = index as u32;
    let r = (i * 3).min(255);
    let g = (i * 3).saturating_sub(255).min(255);
    let b = (i * 3).saturating_sub(510).min(255);
    Rgb([r as u8, g as u8, b as u8])
}

/// Colormap index of `L / T` for every pixel.
pub fn heatmap_indices(lik: &LikelihoodMatrix) -> Result<Grid<u8>> {
    if lik.t == 0 {
        return Err(Error::InvalidArgument("heatmap needs T > 0".into()));
    }
    let t = lik.t as f64;
    Ok(lik.counts.map(|&c| ((c as f64 / t).clamp(0.0, 1.0) * 255.0).round() as u8))
}

pub const LEGEND_GAP: u32 = 4;
pub const LEGEND_WIDTH: u32 = 12;

/// Heatmap of `L / T`, with a vertical legend bar (hottest at the top)
/// appended to the right of the `W x H` map area.
pub fn render_heatmap(lik: &LikelihoodMatrix) -> Result<RgbImage> {
    let idx = heatmap_indices(lik)?;
    let (w, h) = (idx.width() as u32, idx.height() as u32);
    let mut img = RgbImage::from_pixel(w + LEGEND_GAP + LEGEND_WIDTH, h, Rgb([255, 255, 255]));
    for y in 0..h {
        for x in 0..w {
            img.put_pixel(x, y, colormap(*idx.get(x as usize, y as usize)));
        }
        let level = if h > 1 {
            255 - (y as f64 * 255.0 / (h - 1) as f64).round() as u8
        } else {
            255
        };
        for x in w + LEGEND_GAP..w + LEGEND_GAP + LEGEND_WIDTH {
            img.put_pixel(x, y, colormap(level));
        }
    }
    Ok(img)
}

pub fn save_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| Error::image(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Euler,
    /// Midpoint rule.
    Rk2,
}

/// Axis-aligned seeding box in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrifterConfig {
    pub region: Rect,
    /// Drifters per side; `n * n` in total.
    pub n: usize,
    /// Step length in frames.
    pub dt: f64,
    pub steps: usize,
    pub integrator: Integrator,
}

impl DrifterConfig {
    /// 20 x 20 drifters in a 200 x 200 box centered on the frame.
    pub fn centered(width: usize, height: usize, steps: usize) -> Self {
        let side = 200.0_f64.min(width as f64).min(height as f64);
        DrifterConfig {
            region: Rect {
                x: (width as f64 - side) / 2.0,
                y: (height as f64 - side) / 2.0,
                width: side,
                height: side,
            },
            n: 20,
            dt: 1.0,
            steps,
            integrator: Integrator::Euler,
        }
    }
}

/// Cell-centered `n x n` seed positions, row by row.
pub fn seed_grid(region: Rect, n: usize) -> Vec<[f64; 2]> {
    let (sx, sy) = (region.width / n as f64, region.height / n as f64);
    (0..n)
        .flat_map(|j| (0..n).map(move |i| [region.x + (i as f64 + 0.5) * sx, region.y + (j as f64 + 0.5) * sy]))
        .collect()
}

/// Advects drifters through the flow series. At time `t` (in frames) the
/// field `flows[floor(t)]` is used, holding the last field once the series
/// is exhausted. Returns `steps + 1` positions per drifter, clamped to the
/// frame.
pub fn simulate_drifters(flows: &[VelocityField], cfg: &DrifterConfig) -> Result<Vec<Vec<[f64; 2]>>> {
    let first = flows
        .first()
        .ok_or_else(|| Error::InsufficientData("drifters need at least one flow field".into()))?;
    let (w, h) = first.dims();
    if flows.iter().any(|f| f.dims() != (w, h)) {
        return Err(Error::Dimension("flow series has mixed dimensions".into()));
    }
    if cfg.n == 0 || !(cfg.dt > 0.0) {
        return Err(Error::InvalidArgument("drifter grid must be non-empty and dt > 0".into()));
    }
    let r = cfg.region;
    if r.x < 0.0 || r.y < 0.0 || r.x + r.width > w as f64 || r.y + r.height > h as f64 {
        return Err(Error::InvalidArgument(format!(
            "seeding box {r:?} lies outside the {w}x{h} frame"
        )));
    }
    let clamp = |p: [f64; 2]| [p[0].clamp(0.0, (w - 1) as f64), p[1].clamp(0.0, (h - 1) as f64)];
    let field = |t: f64| &flows[(t.max(0.0) as usize).min(flows.len() - 1)];
    Ok(seed_grid(r, cfg.n)
        .into_par_iter()
        .map(|seed| {
            let mut p = clamp(seed);
            let mut path = Vec::with_capacity(cfg.steps + 1);
            path.push(p);
            for k in 0..cfg.steps {
                let t = k as f64 * cfg.dt;
                let v = match cfg.integrator {
                    Integrator::Euler => field(t).sample(p[0], p[1]),
                    Integrator::Rk2 => {
                        let v0 = field(t).sample(p[0], p[1]);
                        let mid = clamp([p[0] + 0.5 * cfg.dt * v0[0], p[1] + 0.5 * cfg.dt * v0[1]]);
                        field(t + 0.5 * cfg.dt).sample(mid[0], mid[1])
                    }
                };
                p = clamp([p[0] + cfg.dt * v[0], p[1] + cfg.dt * v[1]]);
                path.push(p);
            }
            path
        })
        .collect())
}

/// Writes `drifter_id,step,x,y` rows.
pub fn write_trajectories(paths: &[Vec<[f64; 2]>], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["drifter_id", "step", "x", "y"])
        .map_err(|e| Error::csv(path, e))?;
    for (id, track) in paths.iter().enumerate() {
        for (step, p) in track.iter().enumerate() {
            w.write_record([id.to_string(), step.to_string(), p[0].to_string(), p[1].to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Draws every trajectory up to `step` over `base`.
pub fn render_drifters(base: &RgbImage, paths: &[Vec<[f64; 2]>], step: usize) -> RgbImage {
    let mut img = base.clone();
    for track in paths {
        let upto = &track[..=step.min(track.len() - 1)];
        for seg in upto.windows(2) {
            draw_line(&mut img, seg[0], seg[1]);
        }
        if let Some(p) = upto.last() {
            draw_line(&mut img, *p, *p);
        }
    }
    img
}
