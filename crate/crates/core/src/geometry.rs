//! Coastline and skyline extraction and the per-pixel offshore direction
//! field.
//!
//! Local directions follow the gradient of the Euclidean distance to the
//! detected coastline. When a skyline is visible (flat camera view), global
//! directions point at the focal point on the skyline and the two are blended
//! with weight `R = (Q / Q_max)^2`, where `Q` is a pixel's distance to the
//! focal point and `Q_max` the largest coastline-to-focal distance:
//! `O = normalize(O_global * (1 - R) + O_local * R)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_io::BinaryMask;
use crate::grid::{gaussian_blur, Grid};

/// Gradient norms below this mark ridge pixels of the distance map invalid.
pub const DEGENERATE_GRADIENT: f64 = 1e-6;

/// Edge rows within this many pixels of the skyline are not coastline.
const SKYLINE_MARGIN: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryParams {
    pub gauss_sigma: f64,
    pub canny_lo: f64,
    pub canny_hi: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            gauss_sigma: 2.0,
            canny_lo: 0.1,
            canny_hi: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Shoreline {
    /// `(x, y)` pixel coordinates, ordered by column.
    pub points: Vec<(usize, usize)>,
    /// Columns with no detected edge, filled from the bottom row.
    pub filled_columns: Vec<usize>,
    pub closed_by_border: bool,
}

impl Shoreline {
    pub fn from_points(points: Vec<(usize, usize)>, width: usize, height: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::NoCoastline("empty shoreline".into()));
        }
        if let Some(p) = points.iter().find(|(x, y)| *x >= width || *y >= height) {
            return Err(Error::InvalidArgument(format!(
                "shoreline point {p:?} outside {width}x{height}"
            )));
        }
        Ok(Shoreline {
            points,
            filled_columns: Vec::new(),
            closed_by_border: false,
        })
    }

    /// Points that came from detected edges rather than border filling.
    pub fn detected_points(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.points
            .iter()
            .filter(|(x, _)| self.filled_columns.binary_search(x).is_err())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub s: Grid<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Skyline {
    /// First water row under the sky band for each column of the band.
    pub rows: Vec<Option<usize>>,
    pub focal: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionField {
    pub dirs: Grid<[f64; 2]>,
    pub valid: Grid<bool>,
    pub focal: Option<[f64; 2]>,
    pub local: Option<Box<DirectionField>>,
    pub global: Option<Box<DirectionField>>,
}

impl DirectionField {
    pub fn invalid(width: usize, height: usize) -> Self {
        DirectionField {
            dirs: Grid::filled(width, height, [0.0, 0.0]),
            valid: Grid::filled(width, height, false),
            focal: None,
            local: None,
            global: None,
        }
    }

    /// The same unit direction on every pixel.
    pub fn uniform(width: usize, height: usize, dir: [f64; 2]) -> Self {
        DirectionField {
            dirs: Grid::filled(width, height, dir),
            valid: Grid::filled(width, height, true),
            focal: None,
            local: None,
            global: None,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dirs.dims()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> [f64; 2] {
        *self.dirs.get(x, y)
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        *self.valid.get(x, y)
    }
}

#[inline]
fn normalize(v: [f64; 2]) -> Option<[f64; 2]> {
    let n = v[0].hypot(v[1]);
    if n > 0.0 && n.is_finite() {
        Some([v[0] / n, v[1] / n])
    } else {
        None
    }
}

/// Canny edges of a real-valued image: Gaussian smoothing, Sobel gradients,
/// non-maximum suppression and hysteresis on the magnitude normalized by its
/// maximum.
pub fn canny(image: &Grid<f64>, sigma: f64, lo: f64, hi: f64) -> Grid<bool> {
    let smooth = gaussian_blur(image, sigma);
    let (w, h) = smooth.dims();
    let p = |x: usize, y: usize, dx: isize, dy: isize| smooth.clamped(x as isize + dx, y as isize + dy);
    let mut gx = Grid::new(w, h);
    let mut gy = Grid::new(w, h);
    for y in 0..h {
        for x in 0..w {
            gx.set(
                x,
                y,
                (p(x, y, 1, -1) + 2.0 * p(x, y, 1, 0) + p(x, y, 1, 1))
                    - (p(x, y, -1, -1) + 2.0 * p(x, y, -1, 0) + p(x, y, -1, 1)),
            );
            gy.set(
                x,
                y,
                (p(x, y, -1, 1) + 2.0 * p(x, y, 0, 1) + p(x, y, 1, 1))
                    - (p(x, y, -1, -1) + 2.0 * p(x, y, 0, -1) + p(x, y, 1, -1)),
            );
        }
    }
    let mag = Grid::from_fn(w, h, |x, y| gx.get(x, y).hypot(*gy.get(x, y)));
    let peak = mag.max_abs();
    if peak <= 1e-12 {
        return Grid::filled(w, h, false);
    }
    let norm = mag.map(|m| m / peak);

    // non-maximum suppression along the quantized gradient direction
    let at = |x: isize, y: isize| norm.get_signed(x, y).copied().unwrap_or(0.0);
    let thin = Grid::from_fn(w, h, |x, y| {
        let m = *norm.get(x, y);
        if m < lo {
            return 0.0;
        }
        let angle = gy.get(x, y).atan2(*gx.get(x, y)).to_degrees().rem_euclid(180.0);
        let (dx, dy) = if !(22.5..157.5).contains(&angle) {
            (1, 0)
        } else if angle < 67.5 {
            (1, 1)
        } else if angle < 112.5 {
            (0, 1)
        } else {
            (-1, 1)
        };
        let (xi, yi) = (x as isize, y as isize);
        let ahead = at(xi + dx, yi + dy);
        let behind = at(xi - dx, yi - dy);
        if m >= ahead && m > behind {
            m
        } else {
            0.0
        }
    });

    // hysteresis: weak pixels survive when 8-connected to a strong one
    let mut edges = Grid::filled(w, h, false);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if *thin.get(x, y) >= hi && !edges.get(x, y) {
                edges.set(x, y, true);
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for dy in -1..=1isize {
                        for dx in -1..=1isize {
                            let (nx, ny) = (cx as isize + dx, cy as isize + dy);
                            if let Some(&m) = thin.get_signed(nx, ny) {
                                let (nx, ny) = (nx as usize, ny as usize);
                                if m >= lo && !edges.get(nx, ny) {
                                    edges.set(nx, ny, true);
                                    stack.push((nx, ny));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    edges
}

/// Coastline as the lowest edge pixel per column below any skyline band;
/// columns without one fall back to the bottom row.
pub fn detect_coastline(shore: &BinaryMask, gauss_sigma: f64, canny_lo: f64, canny_hi: f64) -> Result<Shoreline> {
    if !shore.any() || shore.all() {
        return Err(Error::NoCoastline(
            "shore mask must contain both shore and water pixels".into(),
        ));
    }
    let (w, h) = shore.dims();
    let image = shore.bits.map(|&b| if b { 1.0 } else { 0.0 });
    let edges = canny(&image, gauss_sigma, canny_lo, canny_hi);
    let skyline = detect_skyline(shore);

    let mut points = Vec::with_capacity(w);
    let mut filled = Vec::new();
    for x in 0..w {
        let floor = skyline
            .as_ref()
            .and_then(|s| s.rows[x])
            .map(|r| r + SKYLINE_MARGIN);
        let found = (0..h)
            .rev()
            .take_while(|&y| floor.is_none_or(|f| y > f))
            .find(|&y| *edges.get(x, y));
        match found {
            Some(y) => points.push((x, y)),
            None => {
                points.push((x, h - 1));
                filled.push(x);
            }
        }
    }
    Ok(Shoreline {
        points,
        closed_by_border: !filled.is_empty(),
        filled_columns: filled,
    })
}

/// Exact Euclidean distance from every pixel to the nearest shoreline point
/// (separable squared distance transform, Felzenszwalb-Huttenlocher).
pub fn distance_matrix(shoreline: &Shoreline, width: usize, height: usize) -> Result<DistanceMatrix> {
    if shoreline.points.is_empty() {
        return Err(Error::NoCoastline("empty shoreline".into()));
    }
    let mut f = Grid::filled(width, height, f64::INFINITY);
    for &(x, y) in &shoreline.points {
        if x >= width || y >= height {
            return Err(Error::InvalidArgument(format!(
                "shoreline point ({x}, {y}) outside {width}x{height}"
            )));
        }
        f.set(x, y, 0.0);
    }
    let mut col = vec![0.0; height];
    for x in 0..width {
        for (y, c) in col.iter_mut().enumerate() {
            *c = *f.get(x, y);
        }
        for (y, d) in squared_edt_1d(&col).into_iter().enumerate() {
            f.set(x, y, d);
        }
    }
    let mut row = vec![0.0; width];
    for y in 0..height {
        row.copy_from_slice(&f.as_slice()[y * width..(y + 1) * width]);
        let d = squared_edt_1d(&row);
        f.as_mut_slice()[y * width..(y + 1) * width].copy_from_slice(&d);
    }
    Ok(DistanceMatrix { s: f.map(|d| d.sqrt()) })
}

/// Lower envelope of parabolas `(q - p)^2 + f(p)` over the finite samples.
fn squared_edt_1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let sites: Vec<usize> = (0..n).filter(|&p| f[p].is_finite()).collect();
    if sites.is_empty() {
        return vec![f64::INFINITY; n];
    }
    let mut v: Vec<usize> = Vec::with_capacity(sites.len());
    let mut z: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    let intersect = |q: usize, p: usize| -> f64 {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
    };
    for &q in &sites {
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.clear();
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let s = intersect(q, p);
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; n];
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
    out
}

/// Normalized central-difference gradient of the distance map on sea pixels.
pub fn local_offshore(dist: &DistanceMatrix, sea: &BinaryMask) -> Result<DirectionField> {
    let s = &dist.s;
    s.check_dims(&sea.bits, "sea mask")?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("distance matrix has non-finite entries".into()));
    }
    let (w, h) = s.dims();
    let mut out = DirectionField::invalid(w, h);
    for y in 0..h {
        for x in 0..w {
            if !sea.get(x, y) {
                continue;
            }
            let gx = if w < 2 {
                0.0
            } else if x == 0 {
                s.get(1, y) - s.get(0, y)
            } else if x == w - 1 {
                s.get(w - 1, y) - s.get(w - 2, y)
            } else {
                (s.get(x + 1, y) - s.get(x - 1, y)) / 2.0
            };
            let gy = if h < 2 {
                0.0
            } else if y == 0 {
                s.get(x, 1) - s.get(x, 0)
            } else if y == h - 1 {
                s.get(x, h - 1) - s.get(x, h - 2)
            } else {
                (s.get(x, y + 1) - s.get(x, y - 1)) / 2.0
            };
            if gx.hypot(gy) < DEGENERATE_GRADIENT {
                continue;
            }
            if let Some(d) = normalize([gx, gy]) {
                out.dirs.set(x, y, d);
                out.valid.set(x, y, true);
            }
        }
    }
    Ok(out)
}

/// Sky band detection: the longest run of columns whose top pixel is
/// non-water must span at least half the width. Each column's skyline row is
/// the first water row below the band; the focal point is the middle column
/// of the run at its skyline row.
pub fn detect_skyline(shore: &BinaryMask) -> Option<Skyline> {
    let (w, h) = shore.dims();
    if w == 0 || h == 0 {
        return None;
    }
    let mut best = (0, 0);
    let mut start = None;
    for x in 0..=w {
        let top = x < w && shore.get(x, 0);
        match (top, start) {
            (true, None) => start = Some(x),
            (false, Some(s)) => {
                if x - s > best.1 - best.0 {
                    best = (s, x);
                }
                start = None;
            }
            _ => {}
        }
    }
    let (x0, x1) = best;
    let span = x1 - x0;
    if span == 0 || 2 * span < w {
        return None;
    }
    let mut rows = vec![None; w];
    for (x, row) in rows.iter_mut().enumerate().take(x1).skip(x0) {
        let depth = (0..h).find(|&y| !shore.get(x, y)).unwrap_or(h);
        *row = Some(depth);
    }
    // a band reaching the bottom in every column is not a skyline
    if rows[x0..x1].iter().all(|r| *r == Some(h)) {
        return None;
    }
    let mid = x0 + span / 2;
    let focal = [mid as f64, rows[mid].unwrap() as f64];
    Some(Skyline { rows, focal })
}

/// `O_global = normalize(focal - p)` on sea pixels; undefined at the focal
/// point itself.
pub fn global_offshore(focal: [f64; 2], width: usize, height: usize, sea: &BinaryMask) -> Result<DirectionField> {
    if sea.dims() != (width, height) {
        return Err(Error::Dimension(format!(
            "sea mask is {:?}, expected {width}x{height}",
            sea.dims()
        )));
    }
    let mut out = DirectionField::invalid(width, height);
    out.focal = Some(focal);
    for y in 0..height {
        for x in 0..width {
            if !sea.get(x, y) {
                continue;
            }
            if let Some(d) = normalize([focal[0] - x as f64, focal[1] - y as f64]) {
                out.dirs.set(x, y, d);
                out.valid.set(x, y, true);
            }
        }
    }
    Ok(out)
}

/// Blend weights `(1 - R, R)` with `R = (q / q_max)^2` clamped to `[0, 1]`.
pub fn blend_weights(q: f64, q_max: f64) -> (f64, f64) {
    let r = if q_max > 0.0 {
        ((q / q_max).powi(2)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (1.0 - r, r)
}

/// `normalize(global * (1 - r) + local * r)`; the endpoints return the
/// corresponding input unchanged.
pub fn blend_directions(global: [f64; 2], local: [f64; 2], r: f64) -> Option<[f64; 2]> {
    if r <= 0.0 {
        return Some(global);
    }
    if r >= 1.0 {
        return Some(local);
    }
    let g = 1.0 - r;
    normalize([global[0] * g + local[0] * r, global[1] * g + local[1] * r])
}

/// Combines local and (when a skyline exists) global directions.
pub fn aggregate_offshore(
    local: &DirectionField,
    global: Option<&DirectionField>,
    focal: Option<[f64; 2]>,
    shoreline: &Shoreline,
) -> Result<DirectionField> {
    if !local.valid.iter().any(|v| *v) {
        return Err(Error::InvalidArgument(
            "local offshore field has no valid pixels".into(),
        ));
    }
    let (global, focal) = match (global, focal) {
        (Some(g), Some(f)) => (g, f),
        _ => {
            let mut out = local.clone();
            out.local = None;
            out.global = None;
            out.focal = None;
            return Ok(out);
        }
    };
    local.dirs.check_dims(&global.dirs, "global offshore field")?;
    let (w, h) = local.dims();
    let dist = |x: f64, y: f64| (focal[0] - x).hypot(focal[1] - y);
    let q_max = shoreline
        .points
        .iter()
        .map(|&(x, y)| dist(x as f64, y as f64))
        .fold(0.0, f64::max);

    let mut out = DirectionField::invalid(w, h);
    for y in 0..h {
        for x in 0..w {
            let (_, r) = blend_weights(dist(x as f64, y as f64), q_max);
            let need_global = r < 1.0;
            let need_local = r > 0.0;
            if (need_global && !global.is_valid(x, y)) || (need_local && !local.is_valid(x, y)) {
                continue;
            }
            if let Some(d) = blend_directions(global.at(x, y), local.at(x, y), r) {
                out.dirs.set(x, y, d);
                out.valid.set(x, y, true);
            }
        }
    }
    out.focal = Some(focal);
    out.local = Some(Box::new(local.clone()));
    out.global = Some(Box::new(global.clone()));
    Ok(out)
}

/// Full chain from a shore mask: coastline, distance map, local directions,
/// optional skyline perspective, aggregation.
pub fn offshore_from_shore(shore: &BinaryMask, params: &GeometryParams) -> Result<(DirectionField, Shoreline)> {
    let (w, h) = shore.dims();
    let shoreline = detect_coastline(shore, params.gauss_sigma, params.canny_lo, params.canny_hi)?;
    let dist = distance_matrix(&shoreline, w, h)?;
    let sea = shore.not(crate::frame_io::MaskKind::Combined);
    let local = local_offshore(&dist, &sea)?;
    let field = match detect_skyline(shore) {
        Some(sky) => {
            let global = global_offshore(sky.focal, w, h, &sea)?;
            aggregate_offshore(&local, Some(&global), Some(sky.focal), &shoreline)?
        }
        None => aggregate_offshore(&local, None, None, &shoreline)?,
    };
    Ok((field, shoreline))
}
