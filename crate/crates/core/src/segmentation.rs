//! Shore, wave-foam and combined exclusion masks.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_io::{load_mask, BinaryMask, Frame, MaskKind};
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq)]
pub enum ShoreSource {
    External(PathBuf),
    Threshold(ShoreThresholds),
}

/// Heuristic water test used when no external shore mask is supplied.
///
/// A pixel is non-water when its blue dominance `b - max(r, g)` is below
/// `min_blue_dominance` (color frames only), or when the local standard
/// deviation of gray in a `(2*radius+1)^2` window exceeds `max_texture_std`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShoreThresholds {
    pub min_blue_dominance: f64,
    pub max_texture_std: f64,
    pub radius: usize,
}

impl Default for ShoreThresholds {
    fn default() -> Self {
        ShoreThresholds {
            min_blue_dominance: 0.05,
            max_texture_std: 0.2,
            radius: 2,
        }
    }
}

/// Foam box in HSV: saturation at most `s_max`, value at least `v_min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveThresholds {
    pub s_max: f64,
    pub v_min: f64,
}

impl Default for WaveThresholds {
    fn default() -> Self {
        WaveThresholds {
            s_max: 0.25,
            v_min: 0.70,
        }
    }
}

impl WaveThresholds {
    /// Parses `"s_max,v_min"`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let parse = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad HSV threshold {p:?} in {s:?}")))
        };
        match parts.as_slice() {
            [a, b] => Ok(WaveThresholds {
                s_max: parse(a)?,
                v_min: parse(b)?,
            }),
            _ => Err(Error::InvalidArgument(format!(
                "expected \"s_max,v_min\", got {s:?}"
            ))),
        }
    }

    #[inline]
    pub fn is_foam(&self, s: f64, v: f64) -> bool {
        s <= self.s_max && v >= self.v_min
    }
}

/// Non-water mask (`true` = shore, sky or objects).
pub fn shore_mask(frame: &Frame, source: &ShoreSource) -> Result<BinaryMask> {
    match source {
        ShoreSource::External(path) => {
            load_mask(path, MaskKind::Shore, Some((frame.width(), frame.height())))
        }
        ShoreSource::Threshold(t) => Ok(threshold_shore(frame, t)),
    }
}

fn threshold_shore(frame: &Frame, t: &ShoreThresholds) -> BinaryMask {
    let (w, h) = frame.gray.dims();
    let r = t.radius as isize;
    let texture = Grid::from_fn(w, h, |x, y| {
        let mut n = 0.0;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                if let Some(v) = frame.gray.get_signed(x as isize + dx, y as isize + dy) {
                    n += 1.0;
                    s += v;
                    s2 += v * v;
                }
            }
        }
        let mean = s / n;
        (s2 / n - mean * mean).max(0.0).sqrt()
    });
    let bits = Grid::from_fn(w, h, |x, y| {
        let not_blue = frame.color.as_ref().is_some_and(|c| {
            let [r, g, b] = c.get(x, y).to_rgb();
            b - r.max(g) < t.min_blue_dominance
        });
        not_blue || *texture.get(x, y) > t.max_texture_std
    });
    BinaryMask::new(bits, MaskKind::Shore)
}

/// Foam mask from the HSV box; hue is not consulted.
pub fn wave_mask(frame: &Frame, thresholds: &WaveThresholds) -> Result<BinaryMask> {
    let color = frame.color.as_ref().ok_or_else(|| {
        Error::UnsupportedInput(
            "wave masks need color frames; supply a wave mask file for grayscale input".into(),
        )
    })?;
    Ok(BinaryMask::new(
        color.map(|c| thresholds.is_foam(c.s, c.v)),
        MaskKind::Wave,
    ))
}

/// Pointwise union of shore and wave masks.
pub fn combined_mask(shore: &BinaryMask, wave: &BinaryMask) -> Result<BinaryMask> {
    shore.bits.check_dims(&wave.bits, "wave mask")?;
    let bits = Grid::from_vec(
        shore.width(),
        shore.height(),
        shore
            .bits
            .iter()
            .zip(wave.bits.iter())
            .map(|(a, b)| *a || *b)
            .collect(),
    )?;
    Ok(BinaryMask::new(bits, MaskKind::Combined))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_io::Hsv;

    fn hsv_frame(w: usize, h: usize, f: impl FnMut(usize, usize) -> Hsv) -> Frame {
        Frame::from_hsv(Grid::from_fn(w, h, f))
    }

    #[test]
    fn foam_archetypes() {
        let t = WaveThresholds::default();
        let white = hsv_frame(1, 1, |_, _| Hsv { h: 0.0, s: 0.0, v: 1.0 });
        assert!(wave_mask(&white, &t).unwrap().get(0, 0));
        let deep = hsv_frame(1, 1, |_, _| Hsv { h: 230.0, s: 1.0, v: 0.4 });
        assert!(!wave_mask(&deep, &t).unwrap().get(0, 0));
    }

    #[test]
    fn grayscale_wave_mask_is_unsupported() {
        let f = Frame::from_gray(Grid::new(3, 3));
        assert!(matches!(
            wave_mask(&f, &WaveThresholds::default()),
            Err(Error::UnsupportedInput(_))
        ));
    }

    #[test]
    fn union_identity_and_absorption() {
        let a = BinaryMask::new(Grid::from_fn(5, 4, |x, y| (x + y) % 3 == 0), MaskKind::Shore);
        let none = BinaryMask::filled(5, 4, false, MaskKind::Wave);
        let c = combined_mask(&a, &none).unwrap();
        assert_eq!(c.bits, a.bits);
        assert_eq!(c.kind, MaskKind::Combined);
        let all = BinaryMask::filled(5, 4, true, MaskKind::Shore);
        assert!(combined_mask(&all, &a).unwrap().all());
    }

    #[test]
    fn union_rejects_mismatch() {
        let a = BinaryMask::filled(5, 4, false, MaskKind::Shore);
        let b = BinaryMask::filled(4, 4, false, MaskKind::Wave);
        assert!(matches!(combined_mask(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn threshold_parsing() {
        let t = WaveThresholds::parse("0.3, 0.8").unwrap();
        assert_eq!((t.s_max, t.v_min), (0.3, 0.8));
        assert!(WaveThresholds::parse("0.3").is_err());
    }

    #[test]
    fn missing_external_mask_names_path() {
        let f = Frame::from_gray(Grid::new(3, 3));
        let err = shore_mask(&f, &ShoreSource::External("/nonexistent/shore.png".into())).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/shore.png"));
    }
}
