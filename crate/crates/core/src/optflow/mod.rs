//! Dense optical flow between adjacent frames.
//!
//! Four estimators share one linearized brightness-constancy model
//! `D = Ix*u + Iy*v + It`:
//!
//! * [`lucas_kanade`]: windowed least squares, independent per pixel.
//! * [`horn_schunck`]: global quadratic smoothness, Jacobi iteration.
//! * [`hor_variant`]: either of the above plus a squared-Laplacian penalty
//!   `lambda_hor * (|Lap u|^2 + |Lap v|^2)` on the flow.
//!
//! Flow is measured from frame `t` to frame `t + 1` in pixels per frame,
//! `u` rightward and `v` downward.

mod gradients;
mod horn_schunck;
mod lucas_kanade;
mod stencil;

pub use gradients::{compute_gradients, dfd, GradientFields};
pub use horn_schunck::{horn_schunck, hs_objective, solve_observed, HsTrace};
pub use lucas_kanade::{lucas_kanade, normal_matrices, NormalMatrix};
pub use stencil::{apply_laplacian, laplacian_diag, NEIGHBORS};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_io::Frame;
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lk,
    Hs,
    HorLk,
    HorHs,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lk, Method::Hs, Method::HorLk, Method::HorHs];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lk => "lk",
            Method::Hs => "hs",
            Method::HorLk => "hor-lk",
            Method::HorHs => "hor-hs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown flow method {s:?} (expected lk, hs, hor-lk or hor-hs)"
                ))
            })
    }
}

/// Estimator parameters.
///
/// `gamma` and `lambda_hor` weigh the regularizers against a data term whose
/// intensities are multiplied by `intensity_scale`, so the defaults are tuned
/// for 8-bit intensity units while frames stay normalized to `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub method: Method,
    /// Lucas-Kanade window side, odd, in pixels.
    pub window: usize,
    pub gamma: f64,
    pub lambda_hor: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub presmooth_sigma: f64,
    pub intensity_scale: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            method: Method::HorHs,
            window: 15,
            gamma: 100.0,
            lambda_hor: 1.0,
            max_iters: 300,
            tol: 1e-4,
            presmooth_sigma: 1.0,
            intensity_scale: 255.0,
        }
    }
}

impl FlowConfig {
    pub fn with_method(method: Method) -> Self {
        FlowConfig {
            method,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.window < 3 || self.window.is_multiple_of(2) {
            return bad(format!("window must be odd and >= 3, got {}", self.window));
        }
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be > 0, got {}", self.tol));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be finite and >= 0, got {}", self.gamma));
        }
        if !(self.lambda_hor >= 0.0) || !self.lambda_hor.is_finite() {
            return bad(format!("lambda_hor must be finite and >= 0, got {}", self.lambda_hor));
        }
        if !(self.presmooth_sigma >= 0.0) {
            return bad(format!("presmooth_sigma must be >= 0, got {}", self.presmooth_sigma));
        }
        if !(self.intensity_scale > 0.0) {
            return bad(format!("intensity_scale must be > 0, got {}", self.intensity_scale));
        }
        Ok(())
    }

    /// Regularizer weights expressed on the `[0, 1]` intensity scale.
    pub(crate) fn scaled_weights(&self) -> (f64, f64) {
        let s2 = self.intensity_scale * self.intensity_scale;
        (self.gamma / s2, self.lambda_hor / s2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub u: Grid<f64>,
    pub v: Grid<f64>,
    pub valid: Grid<bool>,
    pub converged: bool,
    pub iterations: usize,
}

impl VelocityField {
    pub fn zeros(width: usize, height: usize) -> Self {
        VelocityField {
            u: Grid::new(width, height),
            v: Grid::new(width, height),
            valid: Grid::filled(width, height, true),
            converged: true,
            iterations: 0,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                let [u, v] = f(x, y);
                out.u.set(x, y, u);
                out.v.set(x, y, v);
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.u.width()
    }

    pub fn height(&self) -> usize {
        self.u.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.u.dims()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> [f64; 2] {
        [*self.u.get(x, y), *self.v.get(x, y)]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        *self.valid.get(x, y)
    }

    /// Bilinearly interpolated velocity at a continuous position.
    pub fn sample(&self, x: f64, y: f64) -> [f64; 2] {
        [self.u.bilinear(x, y), self.v.bilinear(x, y)]
    }

    /// Invariant check: no non-finite entries where valid.
    pub fn is_well_formed(&self) -> bool {
        self.u
            .iter()
            .zip(self.v.iter())
            .zip(self.valid.iter())
            .all(|((u, v), ok)| !ok || (u.is_finite() && v.is_finite()))
    }
}

/// Computes gradients for the pair and runs the configured estimator.
pub fn estimate_flow(f0: &Frame, f1: &Frame, cfg: &FlowConfig) -> Result<VelocityField> {
    cfg.validate()?;
    let g = compute_gradients(f0, f1, cfg.presmooth_sigma)?;
    estimate_from_gradients(&g, cfg)
}

pub fn estimate_from_gradients(g: &GradientFields, cfg: &FlowConfig) -> Result<VelocityField> {
    match cfg.method {
        Method::Lk => lucas_kanade(g, cfg),
        Method::Hs => horn_schunck(g, cfg),
        Method::HorLk | Method::HorHs => hor_variant(g, cfg),
    }
}

/// High-order-regularized estimators.
///
/// `HorHs` folds the squared-Laplacian term into the Jacobi iteration.
/// `HorLk` solves the windowed least-squares problem first, then finds the
/// minimizer of `sum (V - V_lk)^T N (V - V_lk) + lambda * |Lap V|^2`, where `N`
/// is each pixel's normal matrix; this is exactly the windowed objective
/// expanded around its minimum plus the penalty.
pub fn hor_variant(g: &GradientFields, cfg: &FlowConfig) -> Result<VelocityField> {
    match cfg.method {
        Method::HorHs => horn_schunck::solve(g, cfg, true),
        Method::HorLk => {
            let base = lucas_kanade(g, cfg)?;
            let normals = normal_matrices(g, cfg.window);
            let weights = normals.map(|n| if n.singular { [0.0; 3] } else { [n.xx, n.xy, n.yy] });
            let (_, lambda) = cfg.scaled_weights();
            let mut out = smooth_high_order(&base, Some(&weights), lambda, cfg.max_iters, cfg.tol)?;
            for i in 0..out.valid.len() {
                if !base.valid.as_slice()[i] {
                    out.u.as_mut_slice()[i] = 0.0;
                    out.v.as_mut_slice()[i] = 0.0;
                }
            }
            out.valid = base.valid.clone();
            Ok(out)
        }
        m => Err(Error::InvalidArgument(format!(
            "hor_variant needs hor-lk or hor-hs, got {m}"
        ))),
    }
}

/// Minimizes `sum_i (V_i - B_i)^T W_i (V_i - B_i) + lambda * sum_i |(L V)_i|^2`
/// by conjugate gradients, starting from the base field `B`.
///
/// `weights` holds symmetric 2x2 blocks `[xx, xy, yy]`; `None` means identity.
/// With `lambda = 0` the initial residual is exactly zero and `base` is
/// returned unchanged.
pub fn smooth_high_order(
    base: &VelocityField,
    weights: Option<&Grid<[f64; 3]>>,
    lambda: f64,
    max_iters: usize,
    tol: f64,
) -> Result<VelocityField> {
    let (w, h) = base.dims();
    if let Some(wts) = weights {
        base.u.check_dims(wts, "smoothing weights")?;
    }
    let n = w * h;
    let weight = |i: usize| -> [f64; 3] {
        match weights {
            Some(g) => g.as_slice()[i],
            None => [1.0, 0.0, 1.0],
        }
    };
    let apply = |xu: &Grid<f64>, xv: &Grid<f64>| -> (Grid<f64>, Grid<f64>) {
        let mut yu = apply_laplacian(&apply_laplacian(xu));
        let mut yv = apply_laplacian(&apply_laplacian(xv));
        for i in 0..n {
            let [a, b, c] = weight(i);
            let (pu, pv) = (xu.as_slice()[i], xv.as_slice()[i]);
            let ru = &mut yu.as_mut_slice()[i];
            *ru = a * pu + b * pv + lambda * *ru;
            let rv = &mut yv.as_mut_slice()[i];
            *rv = b * pu + c * pv + lambda * *rv;
        }
        (yu, yv)
    };

    let mut xu = base.u.clone();
    let mut xv = base.v.clone();
    let mut bu = Grid::new(w, h);
    let mut bv = Grid::new(w, h);
    for i in 0..n {
        let [a, b, c] = weight(i);
        let (pu, pv) = (xu.as_slice()[i], xv.as_slice()[i]);
        bu.as_mut_slice()[i] = a * pu + b * pv;
        bv.as_mut_slice()[i] = b * pu + c * pv;
    }
    let (au, av) = apply(&xu, &xv);
    let mut ru = Grid::from_fn(w, h, |x, y| bu.get(x, y) - au.get(x, y));
    let mut rv = Grid::from_fn(w, h, |x, y| bv.get(x, y) - av.get(x, y));

    let dot = |a: &Grid<f64>, b: &Grid<f64>, c: &Grid<f64>, d: &Grid<f64>| -> f64 {
        a.iter().zip(b.iter()).map(|(p, q)| p * q).sum::<f64>()
            + c.iter().zip(d.iter()).map(|(p, q)| p * q).sum::<f64>()
    };
    let b_norm = dot(&bu, &bu, &bv, &bv).sqrt();
    let mut rr = dot(&ru, &ru, &rv, &rv);
    let mut out = base.clone();
    if rr == 0.0 {
        out.converged = true;
        out.iterations = 0;
        return Ok(out);
    }
    let threshold = tol * b_norm.max(f64::MIN_POSITIVE);
    let mut pu = ru.clone();
    let mut pv = rv.clone();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iters {
        iterations = it + 1;
        let (qu, qv) = apply(&pu, &pv);
        let pq = dot(&pu, &qu, &pv, &qv);
        if !(pq > 0.0) {
            converged = rr.sqrt() <= threshold;
            break;
        }
        let alpha = rr / pq;
        for i in 0..n {
            xu.as_mut_slice()[i] += alpha * pu.as_slice()[i];
            xv.as_mut_slice()[i] += alpha * pv.as_slice()[i];
            ru.as_mut_slice()[i] -= alpha * qu.as_slice()[i];
            rv.as_mut_slice()[i] -= alpha * qv.as_slice()[i];
        }
        let rr_next = dot(&ru, &ru, &rv, &rv);
        if rr_next.sqrt() <= threshold {
            rr = rr_next;
            converged = true;
            break;
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            pu.as_mut_slice()[i] = ru.as_slice()[i] + beta * pu.as_slice()[i];
            pv.as_mut_slice()[i] = rv.as_slice()[i] + beta * pv.as_slice()[i];
        }
    }
    if xu.iter().chain(xv.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("high-order smoothing diverged".into()));
    }
    let _ = rr;
    out.u = xu;
    out.v = xv;
    out.converged = converged;
    out.iterations = iterations;
    Ok(out)
}
