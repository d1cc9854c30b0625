//! Uniform grid on [0, 1], the zero-flux Laplacian and trapezoid quadrature.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid1D {
    n_cells: usize,
}

impl Grid1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidParameter(format!("grid needs at least 2 cells, got {n_cells}")));
        }
        Ok(Grid1D { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    /// x_k = k/N; the last node is exactly 1.
    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.n_cells as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|k| self.node(k))
    }

    pub fn field_from(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.nodes().map(f).collect())
    }

    pub fn constant(&self, value: f64) -> Field {
        Field(vec![value; self.n_nodes()])
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.len() == self.n_nodes() {
            Ok(())
        } else {
            Err(Error::SizeMismatch { expected: self.n_nodes(), found: u.len() })
        }
    }
}

/// Nodal values aligned with a [`Grid1D`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(pub Vec<f64>);

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// max − min over the nodes.
    pub fn spread(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

/// Second-order Neumann Laplacian with ghost-node reflection u₋₁ = u₁, u_{N+1} = u_{N−1}.
pub fn laplacian_neumann(u: &Field, grid: &Grid1D) -> Result<Field> {
    grid.check(u)?;
    let mut out = Field::zeros(u.len());
    laplacian_into(u, grid.spacing(), &mut out);
    Ok(out)
}

/// Unchecked kernel of [`laplacian_neumann`]; `out` must have the same length as `u`.
pub(crate) fn laplacian_into(u: &[f64], h: f64, out: &mut [f64]) {
    let n = u.len() - 1;
    let inv_h2 = 1.0 / (h * h);
    out[0] = 2.0 * (u[1] - u[0]) * inv_h2;
    for k in 1..n {
        out[k] = (u[k + 1] - 2.0 * u[k] + u[k - 1]) * inv_h2;
    }
    out[n] = 2.0 * (u[n - 1] - u[n]) * inv_h2;
}

/// Composite trapezoid rule over [0, 1].
pub fn integrate_field(u: &Field, grid: &Grid1D) -> Result<f64> {
    grid.check(u)?;
    Ok(trapezoid(u, grid.spacing()))
}

pub(crate) fn trapezoid(u: &[f64], h: f64) -> f64 {
    let n = u.len() - 1;
    let interior: f64 = u[1..n].iter().sum();
    h * (0.5 * (u[0] + u[n]) + interior)
}
