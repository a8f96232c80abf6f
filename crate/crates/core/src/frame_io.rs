//! Frame sequences, binary masks, and their on-disk formats.
//!
//! Frames are decoded from PNG or PGM/PPM. Grayscale intensities are scaled
//! to `[0, 1]` by the maximum code of the bit depth; color frames also carry an
//! HSV plane and derive gray with fixed luma weights.

use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, Luma};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Luma weights for RGB to gray (ITU-R BT.601).
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Hsv {
    /// Hue in degrees, `[0, 360)`.
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl Hsv {
    pub fn from_rgb(r: f64, g: f64, b: f64) -> Self {
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let delta = max - min;
        let h = if delta == 0.0 {
            0.0
        } else if max == r {
            60.0 * ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            60.0 * ((b - r) / delta + 2.0)
        } else {
            60.0 * ((r - g) / delta + 4.0)
        };
        let s = if max == 0.0 { 0.0 } else { delta / max };
        Hsv {
            h: if h >= 360.0 { h - 360.0 } else { h },
            s,
            v: max,
        }
    }

    pub fn to_rgb(self) -> [f64; 3] {
        let c = self.v * self.s;
        let hp = self.h.rem_euclid(360.0) / 60.0;
        let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
        let (r, g, b) = match hp as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = self.v - c;
        [r + m, g + m, b + m]
    }
}

pub fn luma(rgb: [f64; 3]) -> f64 {
    LUMA_WEIGHTS[0] * rgb[0] + LUMA_WEIGHTS[1] * rgb[1] + LUMA_WEIGHTS[2] * rgb[2]
}

#[derive(Clone, Debug)]
pub struct Frame {
    pub gray: Grid<f64>,
    pub color: Option<Grid<Hsv>>,
}

impl Frame {
    pub fn from_gray(gray: Grid<f64>) -> Self {
        Frame { gray, color: None }
    }

    /// Builds a color frame; gray is derived from the HSV plane via luma.
    pub fn from_hsv(color: Grid<Hsv>) -> Self {
        let gray = color.map(|c| luma(c.to_rgb()));
        Frame {
            gray,
            color: Some(color),
        }
    }

    pub fn from_rgb(rgb: &Grid<[f64; 3]>) -> Self {
        let gray = rgb.map(|&c| luma(c));
        let color = rgb.map(|c| Hsv::from_rgb(c[0], c[1], c[2]));
        Frame {
            gray,
            color: Some(color),
        }
    }

    pub fn width(&self) -> usize {
        self.gray.width()
    }

    pub fn height(&self) -> usize {
        self.gray.height()
    }
}

#[derive(Clone, Debug)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    width: usize,
    height: usize,
    frame_interval: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, frame_interval: f64) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a sequence needs at least 2 frames, got {}",
                frames.len()
            )));
        }
        if !(frame_interval > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "frame interval must be positive, got {frame_interval}"
            )));
        }
        let (width, height) = frames[0].gray.dims();
        for (i, f) in frames.iter().enumerate() {
            if f.gray.dims() != (width, height) {
                return Err(Error::Dimension(format!(
                    "frame {i} is {}x{}, expected {width}x{height}",
                    f.width(),
                    f.height()
                )));
            }
        }
        Ok(FrameSequence {
            frames,
            width,
            height,
            frame_interval,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &Frame {
        &self.frames[i]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_interval(&self) -> f64 {
        self.frame_interval
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskKind {
    Shore,
    Wave,
    Combined,
    GroundTruth,
    /// Detected rip region (per-frame predicate or thresholded likelihood).
    Region,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMask {
    pub bits: Grid<bool>,
    pub kind: MaskKind,
}

impl BinaryMask {
    pub fn new(bits: Grid<bool>, kind: MaskKind) -> Self {
        BinaryMask { bits, kind }
    }

    pub fn filled(width: usize, height: usize, value: bool, kind: MaskKind) -> Self {
        BinaryMask {
            bits: Grid::filled(width, height, value),
            kind,
        }
    }

    pub fn width(&self) -> usize {
        self.bits.width()
    }

    pub fn height(&self) -> usize {
        self.bits.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.bits.dims()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        *self.bits.get(x, y)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|b| *b)
    }

    pub fn all(&self) -> bool {
        self.bits.iter().all(|b| *b)
    }

    pub fn not(&self, kind: MaskKind) -> BinaryMask {
        BinaryMask {
            bits: self.bits.map(|b| !b),
            kind,
        }
    }
}

/// Loads every file in `directory` whose name matches `pattern`, ordered by
/// filename.
pub fn load_sequence(directory: &Path, pattern: &str, frame_interval: f64) -> Result<FrameSequence> {
    let paths = list_frames(directory, pattern)?;
    if paths.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} holds {} frame(s) matching {pattern:?}; at least 2 are required",
            directory.display(),
            paths.len()
        )));
    }
    let frames: Vec<Frame> = paths
        .par_iter()
        .map(|p| load_frame(p))
        .collect::<Result<_>>()?;
    let (w, h) = frames[0].gray.dims();
    for (p, f) in paths.iter().zip(&frames) {
        if f.gray.dims() != (w, h) {
            return Err(Error::Dimension(format!(
                "{} is {}x{}, expected {w}x{h}",
                p.display(),
                f.width(),
                f.height()
            )));
        }
    }
    FrameSequence::new(frames, frame_interval)
}

/// Files in `directory` matching the filename glob, sorted lexicographically.
pub fn list_frames(directory: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    let pat = glob::Pattern::new(pattern)
        .map_err(|e| Error::InvalidArgument(format!("bad frame pattern {pattern:?}: {e}")))?;
    let entries = std::fs::read_dir(directory).map_err(|e| Error::io(directory, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(directory, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            if pat.matches(name) {
                paths.push(path);
            }
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn load_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|e| Error::image(path, e))?;
    Ok(decode_frame(img))
}

fn decode_frame(img: DynamicImage) -> Frame {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb32f();
        let planes = Grid::from_fn(w, h, |x, y| {
            let p = rgb.get_pixel(x as u32, y as u32).0;
            [p[0] as f64, p[1] as f64, p[2] as f64]
        });
        Frame::from_rgb(&planes)
    } else if img.color().bytes_per_pixel() / img.color().channel_count() > 1 {
        let l = img.to_luma16();
        Frame::from_gray(Grid::from_fn(w, h, |x, y| {
            l.get_pixel(x as u32, y as u32).0[0] as f64 / u16::MAX as f64
        }))
    } else {
        let l = img.to_luma8();
        Frame::from_gray(Grid::from_fn(w, h, |x, y| {
            l.get_pixel(x as u32, y as u32).0[0] as f64 / u8::MAX as f64
        }))
    }
}

/// Loads a mask: a pixel is set iff its luminance exceeds 0.5.
pub fn load_mask(path: &Path, kind: MaskKind, reference: Option<(usize, usize)>) -> Result<BinaryMask> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let frame = load_frame(path)?;
    if let Some((w, h)) = reference {
        if frame.gray.dims() != (w, h) {
            return Err(Error::Dimension(format!(
                "mask {} is {}x{}, expected {w}x{h}",
                path.display(),
                frame.width(),
                frame.height()
            )));
        }
    }
    Ok(BinaryMask::new(frame.gray.map(|&v| v > 0.5), kind))
}

pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    save_bool_png(&mask.bits, path)
}

pub fn save_bool_png(bits: &Grid<bool>, path: &Path) -> Result<()> {
    let (w, h) = bits.dims();
    let img: GrayImage = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        Luma([if *bits.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    img.save(path).map_err(|e| Error::image(path, e))
}

/// Writes intensities in `[0, 1]` as a 16-bit grayscale PNG.
pub fn save_gray16(gray: &Grid<f64>, path: &Path) -> Result<()> {
    let (w, h) = gray.dims();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let v = gray.get(x as usize, y as usize).clamp(0.0, 1.0);
        Luma([(v * u16::MAX as f64).round() as u16])
    });
    img.save(path).map_err(|e| Error::image(path, e))
}

/// Writes intensities in `[0, 1]` as an 8-bit grayscale PNG.
pub fn save_gray8(gray: &Grid<f64>, path: &Path) -> Result<()> {
    let (w, h) = gray.dims();
    let img: GrayImage = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let v = gray.get(x as usize, y as usize).clamp(0.0, 1.0);
        Luma([(v * 255.0).round() as u8])
    });
    img.save(path).map_err(|e| Error::image(path, e))
}

/// Row-major CSV, one grid row per line, no header.
pub fn write_grid_csv<T: std::fmt::Display>(grid: &Grid<T>, path: &Path) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    for row in grid.rows() {
        wtr.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

pub fn read_grid_csv<T: std::str::FromStr>(path: &Path) -> Result<Grid<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut data = Vec::new();
    let mut width = None;
    let mut height = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        if *width.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::Dimension(format!(
                "{}: ragged row {height}",
                path.display()
            )));
        }
        for field in rec.iter() {
            let v = field.trim().parse::<T>().map_err(|_| {
                Error::InvalidArgument(format!("{}: cannot parse {field:?}", path.display()))
            })?;
            data.push(v);
        }
        height += 1;
    }
    Grid::from_vec(width.unwrap_or(0), height, data)
}
