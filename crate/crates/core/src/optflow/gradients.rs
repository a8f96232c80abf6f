use crate::error::{Error, Result};
use crate::frame_io::Frame;
use crate::grid::{gaussian_blur, Grid};

use super::VelocityField;

/// Spatial and temporal intensity derivatives for one frame pair.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientFields {
    pub ix: Grid<f64>,
    pub iy: Grid<f64>,
    pub it: Grid<f64>,
}

impl GradientFields {
    pub fn dims(&self) -> (usize, usize) {
        self.ix.dims()
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        GradientFields {
            ix: Grid::new(width, height),
            iy: Grid::new(width, height),
            it: Grid::new(width, height),
        }
    }

    pub fn check(&self) -> Result<()> {
        self.ix.check_dims(&self.iy, "Iy")?;
        self.ix.check_dims(&self.it, "It")
    }
}

/// `Ix`, `Iy` are central differences of the mean of the (optionally
/// presmoothed) pair, one-sided at the borders; `It = f1 - f0`.
pub fn compute_gradients(f0: &Frame, f1: &Frame, presmooth_sigma: f64) -> Result<GradientFields> {
    f0.gray.check_dims(&f1.gray, "second frame of pair")?;
    let a = gaussian_blur(&f0.gray, presmooth_sigma);
    let b = gaussian_blur(&f1.gray, presmooth_sigma);
    let (w, h) = a.dims();
    let avg = Grid::from_fn(w, h, |x, y| (a.get(x, y) + b.get(x, y)) / 2.0);
    let it = Grid::from_fn(w, h, |x, y| b.get(x, y) - a.get(x, y));
    let ix = Grid::from_fn(w, h, |x, y| {
        if w < 2 {
            0.0
        } else if x == 0 {
            avg.get(1, y) - avg.get(0, y)
        } else if x == w - 1 {
            avg.get(w - 1, y) - avg.get(w - 2, y)
        } else {
            (avg.get(x + 1, y) - avg.get(x - 1, y)) / 2.0
        }
    });
    let iy = Grid::from_fn(w, h, |x, y| {
        if h < 2 {
            0.0
        } else if y == 0 {
            avg.get(x, 1) - avg.get(x, 0)
        } else if y == h - 1 {
            avg.get(x, h - 1) - avg.get(x, h - 2)
        } else {
            (avg.get(x, y + 1) - avg.get(x, y - 1)) / 2.0
        }
    });
    Ok(GradientFields { ix, iy, it })
}

/// Displaced frame difference `D = Ix*u + Iy*v + It`.
pub fn dfd(g: &GradientFields, flow: &VelocityField) -> Result<Grid<f64>> {
    g.check()?;
    if g.dims() != flow.dims() {
        return Err(Error::Dimension(format!(
            "gradients are {:?}, flow is {:?}",
            g.dims(),
            flow.dims()
        )));
    }
    let (w, h) = g.dims();
    Ok(Grid::from_fn(w, h, |x, y| {
        g.ix.get(x, y) * flow.u.get(x, y) + g.iy.get(x, y) * flow.v.get(x, y) + g.it.get(x, y)
    }))
}
