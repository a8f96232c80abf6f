//! TOML pipeline configuration, one section per stage.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Every field has a default, so an empty `[input]` section pointing
//! at a frame directory is a complete config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detect::DetectParams;
use crate::error::{Error, Result};
use crate::geometry::GeometryParams;
use crate::optflow::FlowConfig;
use crate::segmentation::{ShoreThresholds, WaveThresholds};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputSection,
    pub flow: FlowConfig,
    pub segmentation: SegmentationSection,
    pub geometry: GeometryParams,
    pub detect: DetectSection,
    pub eval: EvalSection,
    pub output: OutputSection,
    pub run: RunSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub frames_dir: PathBuf,
    pub pattern: String,
    /// Seconds per frame.
    pub frame_interval: f64,
}

impl Default for InputSection {
    fn default() -> Self {
        InputSection {
            frames_dir: PathBuf::from("frames"),
            pattern: "*.png".into(),
            frame_interval: 1.0,
        }
    }
}

/// Where wave-foam masks come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveSource {
    /// HSV thresholds on color frames, none for grayscale frames.
    #[default]
    Auto,
    /// HSV thresholds; grayscale frames are an error.
    Hsv,
    Off,
    /// Static mask read from `wave_mask`.
    External,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationSection {
    /// External shore mask; the threshold heuristic on the first frame is
    /// used when absent.
    pub shore_mask: Option<PathBuf>,
    pub shore_threshold: ShoreThresholds,
    pub wave: WaveSource,
    pub wave_mask: Option<PathBuf>,
    pub wave_hsv: WaveThresholds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSection {
    #[serde(rename = "T", alias = "t")]
    pub t: usize,
    pub stride: usize,
    pub speed_eps: f64,
}

impl Default for DetectSection {
    fn default() -> Self {
        let d = DetectParams::default();
        DetectSection {
            t: d.t,
            stride: d.stride,
            speed_eps: d.speed_eps,
        }
    }
}

impl DetectSection {
    pub fn params(&self) -> DetectParams {
        DetectParams {
            t: self.t,
            stride: self.stride,
            speed_eps: self.speed_eps,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Ground-truth rip mask; enables `pr_curve.csv` and AUC.
    pub ground_truth: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub write_flow: bool,
    pub quiver: bool,
    pub quiver_block: usize,
    pub quiver_scale: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            write_flow: false,
            quiver: false,
            quiver_block: 16,
            quiver_scale: 4.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input.frames_dir);
        fix(&mut self.output.dir);
        for p in [
            &mut self.segmentation.shore_mask,
            &mut self.segmentation.wave_mask,
            &mut self.eval.ground_truth,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.flow.validate().map_err(|e| Error::Config(format!("[flow] {e}")))?;
        if !(self.input.frame_interval > 0.0) {
            return bad(format!("[input] frame_interval must be > 0, got {}", self.input.frame_interval));
        }
        if self.detect.t == 0 || self.detect.stride == 0 {
            return bad("[detect] T and stride must be >= 1".into());
        }
        if self.segmentation.wave == WaveSource::External && self.segmentation.wave_mask.is_none() {
            return bad("[segmentation] wave = \"external\" needs wave_mask".into());
        }
        if self.output.quiver && self.output.quiver_block == 0 {
            return bad("[output] quiver_block must be >= 1".into());
        }
        Ok(())
    }
}
