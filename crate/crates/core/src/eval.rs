//! Pixel-level detection metrics.
//!
//! Acceptance levels sweep every distinct likelihood count plus the sentinel
//! `T + 1` (always empty). The area under the precision-recall curve is the
//! trapezoidal integral over recall of the non-empty operating points,
//! extended left to recall 0 at the precision of the smallest non-empty
//! region and right to recall 1 at precision 0 when full recall is never
//! reached.

use std::path::Path;

use serde::Serialize;

use crate::detect::LikelihoodMatrix;
use crate::error::{Error, Result};
use crate::frame_io::{BinaryMask, MaskKind};

/// `R^a = { p : L(p) >= a }`.
pub fn threshold_region(lik: &LikelihoodMatrix, a: u32) -> BinaryMask {
    BinaryMask::new(lik.counts.map(|&c| c >= a), MaskKind::Region)
}

fn overlap(pred: &BinaryMask, gt: &BinaryMask) -> Result<(usize, usize, usize)> {
    pred.bits.check_dims(&gt.bits, "ground truth")?;
    let mut inter = 0;
    let mut np = 0;
    let mut ng = 0;
    for (p, g) in pred.bits.iter().zip(gt.bits.iter()) {
        np += *p as usize;
        ng += *g as usize;
        inter += (*p && *g) as usize;
    }
    Ok((inter, np, ng))
}

/// `(precision, recall)`; an empty prediction has precision 1 by convention.
pub fn precision_recall(region: &BinaryMask, truth: &BinaryMask) -> Result<(f64, f64)> {
    let (inter, np, ng) = overlap(region, truth)?;
    if ng == 0 {
        return Err(Error::UndefinedGroundTruth(
            "ground-truth rip region is empty".into(),
        ));
    }
    let precision = if np == 0 { 1.0 } else { inter as f64 / np as f64 };
    Ok((precision, inter as f64 / ng as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: u32,
    pub precision: f64,
    pub recall: f64,
    /// `|R^a|`.
    pub region_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrCurve {
    /// All swept levels including the empty sentinel, sorted by recall
    /// (ties by descending threshold).
    pub points: Vec<PrPoint>,
    pub auc: f64,
}

impl PrCurve {
    /// Points with a non-empty detected region.
    pub fn operating_points(&self) -> impl Iterator<Item = &PrPoint> {
        self.points.iter().filter(|p| p.region_size > 0)
    }
}

pub fn pr_curve(lik: &LikelihoodMatrix, truth: &BinaryMask) -> Result<PrCurve> {
    lik.counts.check_dims(&truth.bits, "ground truth")?;
    let ng = truth.count();
    if ng == 0 {
        return Err(Error::UndefinedGroundTruth(
            "ground-truth rip region is empty".into(),
        ));
    }
    let sentinel = lik.t + 1;
    let top = lik.counts.iter().copied().max().unwrap_or(0).max(sentinel) as usize;

    // histograms of counts overall and inside the truth, then suffix sums
    let mut all = vec![0usize; top + 2];
    let mut hit = vec![0usize; top + 2];
    for (c, g) in lik.counts.iter().zip(truth.bits.iter()) {
        all[*c as usize] += 1;
        if *g {
            hit[*c as usize] += 1;
        }
    }
    for a in (0..=top).rev() {
        all[a] += all[a + 1];
        hit[a] += hit[a + 1];
    }

    let mut levels: Vec<u32> = lik.counts.iter().copied().collect();
    levels.push(sentinel);
    levels.sort_unstable();
    levels.dedup();

    let mut points: Vec<PrPoint> = levels
        .iter()
        .map(|&a| {
            let np = all[a as usize];
            let inter = hit[a as usize];
            PrPoint {
                threshold: a,
                precision: if np == 0 { 1.0 } else { inter as f64 / np as f64 },
                recall: inter as f64 / ng as f64,
                region_size: np,
            }
        })
        .collect();
    points.sort_by(|p, q| {
        p.recall
            .total_cmp(&q.recall)
            .then(q.threshold.cmp(&p.threshold))
    });
    let auc = area_under(&points);
    Ok(PrCurve { points, auc })
}

fn area_under(points: &[PrPoint]) -> f64 {
    let ops: Vec<&PrPoint> = points.iter().filter(|p| p.region_size > 0).collect();
    let Some(first) = ops.first() else {
        return 0.0;
    };
    let mut prev = (0.0, first.precision);
    let mut area = 0.0;
    for p in &ops {
        area += (p.recall - prev.0) * (p.precision + prev.1) / 2.0;
        prev = (p.recall, p.precision);
    }
    if prev.0 < 1.0 {
        area += (1.0 - prev.0) * prev.1 / 2.0;
    }
    area.clamp(0.0, 1.0)
}

/// `(IoU, F1)`; both are 1 when both masks are empty.
pub fn mask_iou_f1(pred: &BinaryMask, truth: &BinaryMask) -> Result<(f64, f64)> {
    let (inter, np, ng) = overlap(pred, truth)?;
    let union = np + ng - inter;
    if union == 0 {
        return Ok((1.0, 1.0));
    }
    Ok((
        inter as f64 / union as f64,
        2.0 * inter as f64 / (np + ng) as f64,
    ))
}

/// Writes `a,precision,recall,region_size` rows in curve order.
pub fn write_pr_csv(curve: &PrCurve, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["a", "precision", "recall", "region_size"])
        .map_err(|e| Error::csv(path, e))?;
    for p in &curve.points {
        w.write_record([
            p.threshold.to_string(),
            p.precision.to_string(),
            p.recall.to_string(),
            p.region_size.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
