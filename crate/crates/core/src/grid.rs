//! Uniform staggered grid on `[0, L]`, discrete operators and quadrature.
//!
//! Densities and order parameters live at the `n` cell centers, velocities at
//! the `n + 1` faces. The first and last faces are walls: velocity vanishes
//! there and centered fields see a zero normal gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_cells: usize,
    length: f64,
    dx: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, length: f64) -> Result<Self> {
        if n_cells < 4 {
            return Err(Error::Resolution(format!("grid needs at least 4 cells, got {n_cells}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!("domain length must be positive, got {length}")));
        }
        Ok(Self {
            n_cells,
            length,
            dx: length / n_cells as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_faces(&self) -> usize {
        self.n_cells + 1
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn face(&self, f: usize) -> f64 {
        f as f64 * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn faces(&self) -> Vec<f64> {
        (0..self.n_faces()).map(|f| self.face(f)).collect()
    }

    pub(crate) fn check_centers(&self, field: &[f64], what: &'static str) -> Result<()> {
        if field.len() != self.n_cells {
            return Err(Error::SizeMismatch {
                what,
                expected: self.n_cells,
                got: field.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_faces(&self, field: &[f64], what: &'static str) -> Result<()> {
        if field.len() != self.n_faces() {
            return Err(Error::SizeMismatch {
                what,
                expected: self.n_faces(),
                got: field.len(),
            });
        }
        Ok(())
    }
}

/// Density, velocity and order parameter at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub t: f64,
    /// Density at cell centers.
    pub rho: Vec<f64>,
    /// Velocity at faces; zero on both walls.
    pub u: Vec<f64>,
    /// Order parameter at cell centers.
    pub c: Vec<f64>,
}

impl FluidState {
    pub fn new(t: f64, rho: Vec<f64>, u: Vec<f64>, c: Vec<f64>) -> Self {
        Self { t, rho, u, c }
    }

    /// Uniform rest state `rho = c = value`, `u = 0`.
    pub fn rest(grid: &Grid1D, value: f64) -> Self {
        Self {
            t: 0.0,
            rho: vec![value; grid.n_cells()],
            u: vec![0.0; grid.n_faces()],
            c: vec![value; grid.n_cells()],
        }
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        grid.check_centers(&self.rho, "rho")?;
        grid.check_centers(&self.c, "c")?;
        grid.check_faces(&self.u, "u")?;
        if !self.t.is_finite() {
            return Err(Error::NonFinite("t"));
        }
        if self.rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("rho"));
        }
        if self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("u"));
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("c"));
        }
        if let Some(r) = self.rho.iter().find(|&&r| r < 0.0) {
            return Err(Error::Domain(format!("negative density {r}")));
        }
        if self.u[0] != 0.0 || self.u[self.u.len() - 1] != 0.0 {
            return Err(Error::Domain("velocity must vanish on the walls".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.rho.iter().chain(&self.u).chain(&self.c).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    /// Centers to faces; wall faces get zero (mirrored ghost cells).
    GradCenterToFace,
    /// Faces to centers.
    DivFaceToCenter,
    /// Centers to centers with zero normal gradient on the walls.
    LaplaceNeumann,
    /// Faces to faces with zero velocity on the walls.
    LaplaceDirichlet,
}

/// Size-checked application of one of the discrete operators.
pub fn apply_operator(grid: &Grid1D, field: &[f64], which: Operator) -> Result<Vec<f64>> {
    match which {
        Operator::GradCenterToFace => {
            grid.check_centers(field, "gradient input")?;
            Ok(grad_center_to_face(grid, field))
        }
        Operator::DivFaceToCenter => {
            grid.check_faces(field, "divergence input")?;
            Ok(div_face_to_center(grid, field))
        }
        Operator::LaplaceNeumann => {
            grid.check_centers(field, "Neumann Laplacian input")?;
            Ok(laplace_neumann(grid, field))
        }
        Operator::LaplaceDirichlet => {
            grid.check_faces(field, "Dirichlet Laplacian input")?;
            Ok(laplace_dirichlet(grid, field))
        }
    }
}

pub fn grad_center_to_face(grid: &Grid1D, c: &[f64]) -> Vec<f64> {
    let n = grid.n_cells();
    let mut g = vec![0.0; n + 1];
    for f in 1..n {
        g[f] = (c[f] - c[f - 1]) / grid.dx();
    }
    g
}

pub fn div_face_to_center(grid: &Grid1D, u: &[f64]) -> Vec<f64> {
    (0..grid.n_cells()).map(|i| (u[i + 1] - u[i]) / grid.dx()).collect()
}

pub fn laplace_neumann(grid: &Grid1D, c: &[f64]) -> Vec<f64> {
    let n = grid.n_cells();
    let h2 = grid.dx() * grid.dx();
    (0..n)
        .map(|i| {
            let left = if i == 0 { c[0] } else { c[i - 1] };
            let right = if i + 1 == n { c[n - 1] } else { c[i + 1] };
            (right - 2.0 * c[i] + left) / h2
        })
        .collect()
}

pub fn laplace_dirichlet(grid: &Grid1D, u: &[f64]) -> Vec<f64> {
    let n = grid.n_cells();
    let h2 = grid.dx() * grid.dx();
    let mut out = vec![0.0; n + 1];
    for f in 1..n {
        out[f] = (u[f + 1] - 2.0 * u[f] + u[f - 1]) / h2;
    }
    out
}

/// Face velocity averaged to cell centers.
pub fn face_to_center(u: &[f64]) -> Vec<f64> {
    u.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Centered gradient at cell centers using mirrored ghosts on the walls.
pub fn grad_at_centers(grid: &Grid1D, c: &[f64]) -> Vec<f64> {
    let g = grad_center_to_face(grid, c);
    face_to_center(&g)
}

/// Midpoint rule over cell centers.
pub fn integrate(grid: &Grid1D, field: &[f64]) -> f64 {
    field.iter().sum::<f64>() * grid.dx()
}

/// Trapezoidal rule over faces.
pub fn integrate_faces(grid: &Grid1D, field: &[f64]) -> f64 {
    let n = field.len();
    if n == 0 {
        return 0.0;
    }
    let interior: f64 = field[1..n - 1].iter().sum();
    (interior + 0.5 * (field[0] + field[n - 1])) * grid.dx()
}

/// Discrete L2 norm over cell centers.
pub fn l2_norm(grid: &Grid1D, field: &[f64]) -> f64 {
    (field.iter().map(|v| v * v).sum::<f64>() * grid.dx()).sqrt()
}

/// Number of cells on each side of the box kernel for a window of width `h`.
pub fn window_half_width(grid: &Grid1D, window_h: f64) -> usize {
    let cells = window_h / grid.dx();
    (((cells - 1.0) / 2.0) + 1e-9).floor().max(0.0) as usize
}

/// Box-kernel local average over the `2k + 1` cells whose total width does not
/// exceed `window_h`, with the window clipped at the walls.
pub fn mollify(grid: &Grid1D, field: &[f64], window_h: f64) -> Result<Vec<f64>> {
    grid.check_centers(field, "mollify input")?;
    if !(window_h >= grid.dx() * (1.0 - 1e-12)) {
        return Err(Error::Domain(format!(
            "mollifier window {window_h} is smaller than dx = {}",
            grid.dx()
        )));
    }
    let k = window_half_width(grid, window_h);
    let n = grid.n_cells();
    // Averaging deviations from the center value reproduces constants exactly.
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(k);
            let hi = (i + k).min(n - 1);
            let s: f64 = field[lo..=hi].iter().map(|v| v - field[i]).sum();
            field[i] + s / (hi - lo + 1) as f64
        })
        .collect())
}
