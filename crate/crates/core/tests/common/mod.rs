#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ripflow::frame_io::Frame;
use ripflow::grid::Grid;
use ripflow::optflow::{GradientFields, VelocityField};
use ripflow::synthlab::noise_texture;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, lo: f64, hi: f64) -> Grid<f64> {
    Grid::from_fn(w, h, |_, _| rng.random_range(lo..hi))
}

pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, p: f64) -> Grid<bool> {
    Grid::from_fn(w, h, |_, _| rng.random_bool(p))
}

pub fn random_gradients(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GradientFields {
    GradientFields {
        ix: random_grid(rng, w, h, -1.0, 1.0),
        iy: random_grid(rng, w, h, -1.0, 1.0),
        it: random_grid(rng, w, h, -1.0, 1.0),
    }
}

/// Frames `f0(x, y) = T(x, y)` and `f1(x, y) = T(x - sx, y - sy)` cut from
/// one band-limited texture, so the true flow is exactly `(sx, sy)`.
pub fn translated_pair(w: usize, h: usize, sx: isize, sy: isize, sigma: f64, seed: u64) -> (Frame, Frame) {
    let pad = 8;
    let tex = noise_texture(w + 2 * pad, h + 2 * pad, sigma, seed);
    let cut = |dx: isize, dy: isize| {
        Frame::from_gray(Grid::from_fn(w, h, |x, y| {
            *tex.get((x as isize + pad as isize - dx) as usize, (y as isize + pad as isize - dy) as usize)
        }))
    };
    (cut(0, 0), cut(sx, sy))
}

/// Mean endpoint error over valid pixels at least `margin` from the border.
pub fn interior_epe(v: &VelocityField, truth: [f64; 2], margin: usize) -> f64 {
    let (w, h) = v.dims();
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in margin..h - margin {
        for x in margin..w - margin {
            if v.is_valid(x, y) {
                let [u, vv] = v.at(x, y);
                sum += (u - truth[0]).hypot(vv - truth[1]);
                n += 1;
            }
        }
    }
    assert!(n > 0, "no valid interior pixels");
    sum / n as f64
}

/// Brute-force nearest-point Euclidean distance.
pub fn brute_distance(points: &[(usize, usize)], w: usize, h: usize) -> Grid<f64> {
    Grid::from_fn(w, h, |x, y| {
        points
            .iter()
            .map(|&(px, py)| ((x as f64 - px as f64).powi(2) + (y as f64 - py as f64).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    })
}

/// `(precision, recall)` by direct counting; precision 1 for an empty region.
pub fn count_pr(region: &Grid<bool>, truth: &Grid<bool>) -> (f64, f64) {
    let mut tp = 0usize;
    let mut np = 0usize;
    let mut ng = 0usize;
    for y in 0..region.height() {
        for x in 0..region.width() {
            let (r, g) = (*region.get(x, y), *truth.get(x, y));
            if r {
                np += 1;
            }
            if g {
                ng += 1;
            }
            if r && g {
                tp += 1;
            }
        }
    }
    let precision = if np == 0 { 1.0 } else { tp as f64 / np as f64 };
    (precision, tp as f64 / ng as f64)
}

/// Exhaustive sweep over every level `0..=T+1`, keeping levels that are
/// present in `L` plus the empty sentinel, then trapezoids over recall.
pub fn sweep_auc(counts: &Grid<u32>, t: u32, truth: &Grid<bool>) -> f64 {
    let mut pts: Vec<(f64, f64, usize, u32)> = Vec::new();
    for a in 0..=t + 1 {
        if a != t + 1 && !counts.iter().any(|c| *c == a) {
            continue;
        }
        let region = counts.map(|c| *c >= a);
        let size = region.iter().filter(|b| **b).count();
        let (p, r) = count_pr(&region, truth);
        pts.push((r, p, size, a));
    }
    let mut ops: Vec<(f64, f64, u32)> = pts.iter().filter(|p| p.2 > 0).map(|p| (p.0, p.1, p.3)).collect();
    ops.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.2.cmp(&a.2)));
    if ops.is_empty() {
        return 0.0;
    }
    let mut curve = vec![(0.0, ops[0].1)];
    curve.extend(ops.iter().map(|o| (o.0, o.1)));
    if curve.last().unwrap().0 < 1.0 {
        curve.push((1.0, 0.0));
    }
    curve.windows(2).map(|s| (s[1].0 - s[0].0) * (s[1].1 + s[0].1) / 2.0).sum()
}
