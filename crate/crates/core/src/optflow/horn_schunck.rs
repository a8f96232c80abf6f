//! Horn-Schunck flow and its high-order-regularized extension.
//!
//! The discrete objective minimized is
//!
//! ```text
//! E(u, v) = sum_i D_i^2
//!         + g * sum_{i~j} w_ij ((u_i - u_j)^2 + (v_i - v_j)^2)
//!         + l * sum_i ((L u)_i^2 + (L v)_i^2)
//! ```
//!
//! over unordered neighbor pairs `i~j` of the 8-neighbor stencil, with
//! `g = gamma / s^2`, `l = lambda_hor / s^2` and `s` the intensity scale.
//! Each Jacobi sweep minimizes `E` exactly over every pixel's `(u_i, v_i)`
//! with its neighbors held at the previous iterate. With `l = 0` this is the
//! classic neighbor-average update
//! `u <- ubar - Ix (Ix ubar + Iy vbar + It) / (g*s_i + Ix^2 + Iy^2)`.
//! The data block is diagonal-dominant enough that the sweep never increases
//! `E` when `l = 0` (the Jacobi splitting `2D - A` is the signless Laplacian
//! plus a PSD block).

use crate::error::{Error, Result};
use crate::grid::Grid;

use super::stencil::{laplacian_diag, neighbor_sum, stencil_weights};
use super::{apply_laplacian, FlowConfig, GradientFields, Method, VelocityField, NEIGHBORS};

/// Observer called after every sweep with the iteration index and `(u, v)`.
pub type HsTrace<'a> = dyn FnMut(usize, &Grid<f64>, &Grid<f64>) + 'a;

pub fn horn_schunck(g: &GradientFields, cfg: &FlowConfig) -> Result<VelocityField> {
    if cfg.method != Method::Hs {
        return Err(Error::InvalidArgument(format!(
            "horn_schunck called with method {}",
            cfg.method
        )));
    }
    solve(g, cfg, false)
}

pub(crate) fn solve(g: &GradientFields, cfg: &FlowConfig, high_order: bool) -> Result<VelocityField> {
    solve_observed(g, cfg, high_order, &mut |_, _, _| {})
}

/// Runs the Jacobi iteration, reporting each iterate to `trace`.
pub fn solve_observed(
    g: &GradientFields,
    cfg: &FlowConfig,
    high_order: bool,
    trace: &mut HsTrace<'_>,
) -> Result<VelocityField> {
    g.check()?;
    cfg.validate()?;
    if !(cfg.gamma > 0.0) {
        return Err(Error::InvalidArgument("Horn-Schunck needs gamma > 0".into()));
    }
    let (gamma, lambda) = cfg.scaled_weights();
    let lambda = if high_order { lambda } else { 0.0 };
    let (w, h) = g.dims();
    let s = stencil_weights(w, h);
    let d = laplacian_diag(w, h);

    let mut u = Grid::new(w, h);
    let mut v = Grid::new(w, h);
    let mut next_u = Grid::new(w, h);
    let mut next_v = Grid::new(w, h);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..cfg.max_iters {
        iterations = iter + 1;
        let (l2u, l2v) = if lambda > 0.0 {
            (
                Some(apply_laplacian(&apply_laplacian(&u))),
                Some(apply_laplacian(&apply_laplacian(&v))),
            )
        } else {
            (None, None)
        };
        let mut max_step: f64 = 0.0;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (nu, _) = neighbor_sum(&u, x, y);
                let (nv, _) = neighbor_sum(&v, x, y);
                let (ou, ov) = (u.as_slice()[i], v.as_slice()[i]);
                let mut kappa = gamma * s.as_slice()[i];
                let mut pull_u = gamma * nu;
                let mut pull_v = gamma * nv;
                if let (Some(l2u), Some(l2v)) = (&l2u, &l2v) {
                    let di = d.as_slice()[i];
                    kappa += lambda * di;
                    pull_u -= lambda * (l2u.as_slice()[i] - di * ou);
                    pull_v -= lambda * (l2v.as_slice()[i] - di * ov);
                }
                let (au, av) = (pull_u / kappa, pull_v / kappa);
                let ix = g.ix.as_slice()[i];
                let iy = g.iy.as_slice()[i];
                let it = g.it.as_slice()[i];
                let k = (ix * au + iy * av + it) / (kappa + ix * ix + iy * iy);
                let (nu_i, nv_i) = (au - ix * k, av - iy * k);
                max_step = max_step.max((nu_i - ou).abs()).max((nv_i - ov).abs());
                next_u.as_mut_slice()[i] = nu_i;
                next_v.as_mut_slice()[i] = nv_i;
            }
        }
        std::mem::swap(&mut u, &mut next_u);
        std::mem::swap(&mut v, &mut next_v);
        trace(iter, &u, &v);
        if !max_step.is_finite() {
            return Err(Error::Numerical("Horn-Schunck iteration diverged".into()));
        }
        if max_step < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(VelocityField {
        u,
        v,
        valid: Grid::filled(w, h, true),
        converged,
        iterations,
    })
}

/// Evaluates the discrete objective `E(u, v)` documented at module level.
pub fn hs_objective(g: &GradientFields, flow: &VelocityField, cfg: &FlowConfig, high_order: bool) -> f64 {
    let (gamma, lambda) = cfg.scaled_weights();
    let (w, h) = g.dims();
    let mut data = 0.0;
    let mut smooth = 0.0;
    for y in 0..h {
        for x in 0..w {
            let [u, v] = flow.at(x, y);
            let dv = g.ix.get(x, y) * u + g.iy.get(x, y) * v + g.it.get(x, y);
            data += dv * dv;
            // each unordered pair once: forward half of the stencil
            for &(dx, dy, wt) in NEIGHBORS.iter() {
                if (dy, dx) <= (0, 0) {
                    continue;
                }
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if let (Some(nu), Some(nv)) = (flow.u.get_signed(nx, ny), flow.v.get_signed(nx, ny)) {
                    smooth += wt * ((u - nu).powi(2) + (v - nv).powi(2));
                }
            }
        }
    }
    let mut total = data + gamma * smooth;
    if high_order {
        let lu = apply_laplacian(&flow.u);
        let lv = apply_laplacian(&flow.v);
        let hor: f64 = lu.iter().chain(lv.iter()).map(|v| v * v).sum();
        total += lambda * hor;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_temporal_derivative_is_a_fixed_point() {
        let g = GradientFields {
            ix: Grid::from_fn(8, 8, |x, y| ((x * 3 + y) % 5) as f64 * 0.01),
            iy: Grid::from_fn(8, 8, |x, y| ((x + 2 * y) % 7) as f64 * 0.01),
            it: Grid::new(8, 8),
        };
        let f = horn_schunck(&g, &FlowConfig::with_method(Method::Hs)).unwrap();
        assert!(f.converged);
        assert_eq!(f.iterations, 1);
        assert!(f.u.max_abs() == 0.0 && f.v.max_abs() == 0.0);
    }

    #[test]
    fn gamma_must_be_positive() {
        let g = GradientFields::zeros(4, 4);
        let cfg = FlowConfig {
            gamma: 0.0,
            ..FlowConfig::with_method(Method::Hs)
        };
        assert!(horn_schunck(&g, &cfg).is_err());
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let g = GradientFields {
            ix: Grid::from_fn(16, 16, |x, y| (((x * 7 + y * 13) % 11) as f64 - 5.0) * 0.02),
            iy: Grid::from_fn(16, 16, |x, y| (((x * 5 + y * 3) % 9) as f64 - 4.0) * 0.02),
            it: Grid::from_fn(16, 16, |x, y| (((x + y * 7) % 13) as f64 - 6.0) * 0.01),
        };
        let cfg = FlowConfig {
            max_iters: 2,
            tol: 1e-14,
            ..FlowConfig::with_method(Method::Hs)
        };
        let f = horn_schunck(&g, &cfg).unwrap();
        assert!(!f.converged);
        assert_eq!(f.iterations, 2);
    }
}
