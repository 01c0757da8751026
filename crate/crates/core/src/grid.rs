//! Uniform radial mesh on `[0, R]` and the discrete radial Laplacian
//! `u_rr + ((n-1)/r) u_r` for radially symmetric functions on the n-ball.
//!
//! The coordinate singularity at `r = 0` is removed with the symmetry limit
//! `Δu(0) = n u_rr(0) ≈ 2n (u_1 - u_0) / h²`. At `r = R` the caller supplies a
//! [`BoundaryClosure`]: either a pinned value or an outward flux imposed via an
//! (algebraically eliminated) ghost node `u_{M+1} = u_{M-1} + 2h·flux`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest mesh the solver accepts.
pub const MIN_CELLS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("spatial dimension must be >= 1, got {0}")]
    Dimension(usize),
    #[error("radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("need at least {MIN_CELLS} cells, got {0}")]
    TooFewCells(usize),
    #[error("field has {got} values, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },
}

/// Uniform mesh `r_i = i·h`, `i = 0..=M`, on the radius of an n-dimensional ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    n_dim: usize,
    radius: f64,
    num_cells: usize,
    spacing: f64,
}

impl RadialGrid {
    pub fn new(n_dim: usize, radius: f64, num_cells: usize) -> Result<Self, GridError> {
        if n_dim < 1 {
            return Err(GridError::Dimension(n_dim));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GridError::Radius(radius));
        }
        if num_cells < MIN_CELLS {
            return Err(GridError::TooFewCells(num_cells));
        }
        Ok(Self { n_dim, radius, num_cells, spacing: radius / num_cells as f64 })
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    /// Dimension as a float, for use in stencil coefficients.
    pub fn dim(&self) -> f64 {
        self.n_dim as f64
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_nodes(&self) -> usize {
        self.num_cells + 1
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Radius of node `i`. The last node is exactly `R`.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.num_cells);
        if i == self.num_cells {
            self.radius
        } else {
            i as f64 * self.spacing
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.num_cells).map(move |i| self.node(i))
    }
}

/// Values at the nodes of a [`RadialGrid`]. Always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalField {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.num_nodes() {
            return Err(GridError::LengthMismatch { expected: grid.num_nodes(), got: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(r)` at every node.
    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: RadialGrid, c: f64) -> Result<Self, GridError> {
        Self::from_fn(grid, |_| c)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value; ties resolve to the smallest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.values)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// What happens at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryClosure {
    /// `u(R) = value`. The boundary row of the output is zero (the node is pinned).
    Dirichlet { value: f64 },
    /// `u_r(R) = flux`, imposed through the ghost node `u_{M+1} = u_{M-1} + 2h·flux`.
    Neumann { flux: f64 },
}

/// Discrete radial Laplacian of `field` under `boundary`.
pub fn radial_laplacian(field: &NodalField, boundary: BoundaryClosure) -> NodalField {
    let mut out = vec![0.0; field.values.len()];
    laplacian_into(&field.grid, &field.values, boundary, &mut out);
    // Finite inputs and a finite closure give finite outputs; a non-finite flux is the caller's bug.
    NodalField::new(field.grid, out).expect("laplacian of a finite field is finite")
}

/// Slice version of [`radial_laplacian`] for hot loops. `u` and `out` must have
/// `grid.num_nodes()` entries.
pub fn laplacian_into(grid: &RadialGrid, u: &[f64], boundary: BoundaryClosure, out: &mut [f64]) {
    let m = grid.num_cells;
    debug_assert_eq!(u.len(), m + 1);
    debug_assert_eq!(out.len(), m + 1);
    let h = grid.spacing;
    let inv_h2 = 1.0 / (h * h);
    let nm1 = grid.dim() - 1.0;

    out[0] = 2.0 * grid.dim() * (u[1] - u[0]) * inv_h2;

    let u_right_edge = match boundary {
        BoundaryClosure::Dirichlet { value } => value,
        BoundaryClosure::Neumann { .. } => u[m],
    };
    for i in 1..m {
        let right = if i + 1 == m { u_right_edge } else { u[i + 1] };
        let left = u[i - 1];
        let r = i as f64 * h;
        out[i] = (right - 2.0 * u[i] + left) * inv_h2 + nm1 / r * (right - left) / (2.0 * h);
    }

    out[m] = match boundary {
        BoundaryClosure::Dirichlet { .. } => 0.0,
        BoundaryClosure::Neumann { flux } => {
            // ghost: u_{M+1} = u_{M-1} + 2h·flux
            2.0 * (u[m - 1] - u[m]) * inv_h2 + 2.0 * flux / h + nm1 / grid.radius * flux
        }
    };
}
