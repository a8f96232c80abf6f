//! The 8-neighbor averaging stencil shared by the smoothness terms.
//!
//! Axial neighbors weigh 1/6 and diagonal neighbors 1/12, so an interior
//! pixel's weights sum to one. Off-grid neighbors are dropped, which keeps the
//! associated graph Laplacian `L u = s*u - sum(w_j u_j)` symmetric positive
//! semidefinite with constants in its null space.

use crate::grid::Grid;

pub const NEIGHBORS: [(isize, isize, f64); 8] = [
    (-1, 0, 1.0 / 6.0),
    (1, 0, 1.0 / 6.0),
    (0, -1, 1.0 / 6.0),
    (0, 1, 1.0 / 6.0),
    (-1, -1, 1.0 / 12.0),
    (1, -1, 1.0 / 12.0),
    (-1, 1, 1.0 / 12.0),
    (1, 1, 1.0 / 12.0),
];

/// Weighted neighbor sum and total in-grid weight at `(x, y)`.
#[inline]
pub(crate) fn neighbor_sum(g: &Grid<f64>, x: usize, y: usize) -> (f64, f64) {
    let mut sum = 0.0;
    let mut weight = 0.0;
    for &(dx, dy, w) in &NEIGHBORS {
        if let Some(v) = g.get_signed(x as isize + dx, y as isize + dy) {
            sum += w * v;
            weight += w;
        }
    }
    (sum, weight)
}

/// Total in-grid stencil weight per pixel.
pub(crate) fn stencil_weights(width: usize, height: usize) -> Grid<f64> {
    let probe = Grid::filled(width, height, 0.0);
    Grid::from_fn(width, height, |x, y| neighbor_sum(&probe, x, y).1)
}

/// `(L u)_i = s_i u_i - sum_j w_ij u_j`, the negated discrete Laplacian.
pub fn apply_laplacian(u: &Grid<f64>) -> Grid<f64> {
    let (w, h) = u.dims();
    Grid::from_fn(w, h, |x, y| {
        let (sum, weight) = neighbor_sum(u, x, y);
        weight * u.get(x, y) - sum
    })
}

/// Diagonal of `L^T L`: `s_i^2 + sum_j w_ij^2`.
pub fn laplacian_diag(width: usize, height: usize) -> Grid<f64> {
    Grid::from_fn(width, height, |x, y| {
        let mut s = 0.0;
        let mut sq = 0.0;
        for &(dx, dy, w) in &NEIGHBORS {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
                s += w;
                sq += w * w;
            }
        }
        s * s + sq
    })
}
