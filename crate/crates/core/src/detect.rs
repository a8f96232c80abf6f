//! Per-frame rip predicate and temporal likelihood fusion.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame_io::{BinaryMask, FrameSequence, MaskKind};
use crate::geometry::DirectionField;
use crate::grid::Grid;
use crate::optflow::{estimate_flow, FlowConfig, VelocityField};

/// Per-pixel count of fused fields in which the pixel met the rip predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LikelihoodMatrix {
    pub counts: Grid<u32>,
    /// Number of fused fields.
    pub t: u32,
}

impl LikelihoodMatrix {
    pub fn new(width: usize, height: usize) -> Self {
        LikelihoodMatrix {
            counts: Grid::new(width, height),
            t: 0,
        }
    }

    pub fn from_counts(counts: Grid<u32>, t: u32) -> Result<Self> {
        if let Some(c) = counts.iter().find(|c| **c > t) {
            return Err(Error::InvalidArgument(format!("count {c} exceeds T = {t}")));
        }
        Ok(LikelihoodMatrix { counts, t })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.counts.dims()
    }

    /// `L / T` in `[0, 1]`; all zeros while `T = 0`.
    pub fn normalized(&self) -> Grid<f64> {
        let t = self.t.max(1) as f64;
        self.counts.map(|&c| c as f64 / t)
    }

    /// Associative merge of two partial sums over disjoint sets of fields.
    pub fn merge(mut self, other: &LikelihoodMatrix) -> Result<Self> {
        self.counts.check_dims(&other.counts, "likelihood partial")?;
        for (a, b) in self.counts.as_mut_slice().iter_mut().zip(other.counts.iter()) {
            *a += *b;
        }
        self.t += other.t;
        Ok(self)
    }
}

/// Pixels on open water whose flow exceeds `speed_eps` and has a strictly
/// positive component along the offshore direction.
pub fn rip_region(
    flow: &VelocityField,
    offshore: &DirectionField,
    combined: &BinaryMask,
    speed_eps: f64,
) -> Result<BinaryMask> {
    flow.u.check_dims(&offshore.dirs, "offshore field")?;
    flow.u.check_dims(&combined.bits, "combined mask")?;
    let (w, h) = flow.dims();
    let bits = Grid::from_fn(w, h, |x, y| {
        if combined.get(x, y) || !flow.is_valid(x, y) || !offshore.is_valid(x, y) {
            return false;
        }
        let [u, v] = flow.at(x, y);
        let [ox, oy] = offshore.at(x, y);
        u.hypot(v) > speed_eps && u * ox + v * oy > 0.0
    });
    Ok(BinaryMask::new(bits, MaskKind::Region))
}

/// One fusion step: members of `region` gain one count and `T` grows by one.
pub fn accumulate(mut lik: LikelihoodMatrix, region: &BinaryMask) -> Result<LikelihoodMatrix> {
    lik.counts.check_dims(&region.bits, "rip region")?;
    for (c, r) in lik.counts.as_mut_slice().iter_mut().zip(region.bits.iter()) {
        if *r {
            *c += 1;
        }
    }
    lik.t += 1;
    Ok(lik)
}

/// Combined masks for a sequence: one static mask or one per frame.
#[derive(Clone, Debug)]
pub enum SceneMasks {
    Static(BinaryMask),
    PerFrame(Vec<BinaryMask>),
}

impl SceneMasks {
    pub fn for_frame(&self, t: usize) -> Result<&BinaryMask> {
        match self {
            SceneMasks::Static(m) => Ok(m),
            SceneMasks::PerFrame(ms) => ms.get(t).ok_or_else(|| {
                Error::InsufficientData(format!("no combined mask for frame {t}"))
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectParams {
    /// Number of fused velocity fields.
    pub t: usize,
    /// Frames between the starts of consecutive fused pairs.
    pub stride: usize,
    pub speed_eps: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            t: 20,
            stride: 1,
            speed_eps: 0.0,
        }
    }
}

/// Frame pairs `(k * stride, k * stride + 1)` for `k < T`.
pub fn fusion_pairs(params: &DetectParams, n_frames: usize) -> Result<Vec<(usize, usize)>> {
    if params.t == 0 || params.stride == 0 {
        return Err(Error::InvalidArgument("T and stride must be >= 1".into()));
    }
    let needed = params.t * params.stride + 1;
    if n_frames < needed {
        return Err(Error::InsufficientData(format!(
            "T = {} with stride {} needs {needed} frames, sequence has {n_frames}",
            params.t, params.stride
        )));
    }
    Ok((0..params.t).map(|k| (k * params.stride, k * params.stride + 1)).collect())
}

/// Estimates flow on every fused pair, applies the rip predicate and sums
/// the regions. Pairs run on the current rayon pool; the integer merge makes
/// the result independent of scheduling.
pub fn run_detection(
    seq: &FrameSequence,
    cfg: &FlowConfig,
    masks: &SceneMasks,
    offshore: &DirectionField,
    params: &DetectParams,
) -> Result<LikelihoodMatrix> {
    run_detection_with(seq, cfg, masks, offshore, params, |_, _| Ok(()))
}

/// As [`run_detection`], handing each pair's flow to `sink` (e.g. to write
/// it out) before it is dropped.
pub fn run_detection_with<F>(
    seq: &FrameSequence,
    cfg: &FlowConfig,
    masks: &SceneMasks,
    offshore: &DirectionField,
    params: &DetectParams,
    sink: F,
) -> Result<LikelihoodMatrix>
where
    F: Fn(usize, &VelocityField) -> Result<()> + Sync,
{
    cfg.validate()?;
    let pairs = fusion_pairs(params, seq.len())?;
    let (w, h) = (seq.width(), seq.height());
    if offshore.dims() != (w, h) {
        return Err(Error::Dimension(format!(
            "offshore field is {:?}, frames are {w}x{h}",
            offshore.dims()
        )));
    }
    let partials: Vec<LikelihoodMatrix> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let flow = estimate_flow(seq.frame(a), seq.frame(b), cfg)?;
            sink(k, &flow)?;
            let region = rip_region(&flow, offshore, masks.for_frame(a)?, params.speed_eps)?;
            accumulate(LikelihoodMatrix::new(w, h), &region)
        })
        .collect::<Result<_>>()?;
    partials
        .iter()
        .try_fold(LikelihoodMatrix::new(w, h), |acc, p| acc.merge(p))
}
