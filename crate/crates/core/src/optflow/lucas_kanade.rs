use crate::error::{Error, Result};
use crate::grid::Grid;

use super::{FlowConfig, GradientFields, Method, VelocityField};

/// A pixel is rejected when the smallest eigenvalue of its normal matrix is
/// below this fraction of the window's pixel count.
pub const SINGULAR_EIGEN_PER_PIXEL: f64 = 1e-6;

/// Windowed normal equations `A^T A V = A^T b` with `A = [Ix, Iy]`, `b = -It`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormalMatrix {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
    pub bx: f64,
    pub by: f64,
    pub area: usize,
    pub singular: bool,
}

impl NormalMatrix {
    pub fn min_eigenvalue(&self) -> f64 {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        mean - (half_diff * half_diff + self.xy * self.xy).sqrt()
    }

    pub fn solve(&self) -> [f64; 2] {
        let det = self.xx * self.yy - self.xy * self.xy;
        [
            (self.yy * self.bx - self.xy * self.by) / det,
            (self.xx * self.by - self.xy * self.bx) / det,
        ]
    }
}

/// Per-pixel normal matrices over a `window x window` neighborhood clipped to
/// the frame.
pub fn normal_matrices(g: &GradientFields, window: usize) -> Grid<NormalMatrix> {
    let (w, h) = g.dims();
    let r = (window / 2) as isize;
    let products = Grid::from_fn(w, h, |x, y| {
        let (ix, iy, it) = (*g.ix.get(x, y), *g.iy.get(x, y), *g.it.get(x, y));
        [ix * ix, ix * iy, iy * iy, -ix * it, -iy * it]
    });

    // separable box sums: rows first, then columns
    let row_sums = Grid::from_fn(w, h, |x, y| {
        let lo = (x as isize - r).max(0) as usize;
        let hi = ((x as isize + r) as usize).min(w - 1);
        let mut acc = [0.0; 5];
        for xx in lo..=hi {
            let p = products.get(xx, y);
            for k in 0..5 {
                acc[k] += p[k];
            }
        }
        acc
    });
    Grid::from_fn(w, h, |x, y| {
        let lo = (y as isize - r).max(0) as usize;
        let hi = ((y as isize + r) as usize).min(h - 1);
        let mut acc = [0.0; 5];
        for yy in lo..=hi {
            let p = row_sums.get(x, yy);
            for k in 0..5 {
                acc[k] += p[k];
            }
        }
        let xlo = (x as isize - r).max(0) as usize;
        let xhi = ((x as isize + r) as usize).min(w - 1);
        let area = (xhi - xlo + 1) * (hi - lo + 1);
        let mut n = NormalMatrix {
            xx: acc[0],
            xy: acc[1],
            yy: acc[2],
            bx: acc[3],
            by: acc[4],
            area,
            singular: false,
        };
        n.singular = !(n.min_eigenvalue() >= SINGULAR_EIGEN_PER_PIXEL * area as f64);
        n
    })
}

/// Lucas-Kanade flow: `V = (A^T A)^-1 A^T b` per pixel. Rank-deficient
/// windows are flagged invalid with zero velocity.
pub fn lucas_kanade(g: &GradientFields, cfg: &FlowConfig) -> Result<VelocityField> {
    if !matches!(cfg.method, Method::Lk | Method::HorLk) {
        return Err(Error::InvalidArgument(format!(
            "lucas_kanade called with method {}",
            cfg.method
        )));
    }
    g.check()?;
    cfg.validate()?;
    let normals = normal_matrices(g, cfg.window);
    let (w, h) = g.dims();
    let mut out = VelocityField::zeros(w, h);
    for (i, n) in normals.iter().enumerate() {
        if n.singular {
            out.valid.as_mut_slice()[i] = false;
            continue;
        }
        let [u, v] = n.solve();
        if u.is_finite() && v.is_finite() {
            out.u.as_mut_slice()[i] = u;
            out.v.as_mut_slice()[i] = v;
        } else {
            out.valid.as_mut_slice()[i] = false;
        }
    }
    Ok(out)
}
