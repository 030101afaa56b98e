//! Discretizations of three-dimensional space.
//!
//! Two layouts are supported: a cell-centered radial grid for radially
//! symmetric fields, and a cell-centered cubic box. Both carry volume
//! quadrature weights so that `Σ w_i u_i` approximates `∫ u dx` over the
//! truncated domain (fields vanish outside it).

use std::f64::consts::PI;

use crate::error::{param_err, ChoquardError, Result};

/// Cell-centered radial grid on `[0, L]`; nodes `r_i = (i + 1/2) h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    length: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 2 {
            return param_err(format!("radial grid needs n >= 2, got {n}"));
        }
        if !(length > 0.0) || !length.is_finite() {
            return param_err(format!("radial grid needs L > 0, got {length}"));
        }
        let h = length / n as f64;
        let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        let weights = nodes.iter().map(|r| 4.0 * PI * r * r * h).collect();
        Ok(Self {
            n,
            length,
            h,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Radius of the face between node `i` and node `i + 1`.
    pub fn face(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }
}

/// Uniform cell-centered grid on the cube `[-L, L]^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    n_per_axis: usize,
    half_width: f64,
    h: f64,
    axis: Vec<f64>,
    radii: Vec<f64>,
    weights: Vec<f64>,
}

impl BoxGrid {
    pub fn new(n_per_axis: usize, half_width: f64) -> Result<Self> {
        if n_per_axis < 2 {
            return param_err(format!("box grid needs n >= 2 per axis, got {n_per_axis}"));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return param_err(format!("box grid needs L > 0, got {half_width}"));
        }
        let n = n_per_axis;
        let h = 2.0 * half_width / n as f64;
        let axis: Vec<f64> = (0..n).map(|i| -half_width + (i as f64 + 0.5) * h).collect();
        let mut radii = Vec::with_capacity(n * n * n);
        for &x in &axis {
            for &y in &axis {
                for &z in &axis {
                    radii.push((x * x + y * y + z * z).sqrt());
                }
            }
        }
        let weights = vec![h * h * h; n * n * n];
        Ok(Self {
            n_per_axis,
            half_width,
            h,
            axis,
            radii,
            weights,
        })
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n_per_axis + iy) * self.n_per_axis + iz
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.n_per_axis;
        let iz = idx % n;
        let iy = (idx / n) % n;
        let ix = idx / (n * n);
        [self.axis[ix], self.axis[iy], self.axis[iz]]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Radial(RadialGrid),
    Box(BoxGrid),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.len(),
            Grid::Box(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Grid::Radial(g) => g.weights(),
            Grid::Box(g) => g.weights(),
        }
    }

    /// Distance of every node from the origin.
    pub fn radii(&self) -> &[f64] {
        match self {
            Grid::Radial(g) => g.nodes(),
            Grid::Box(g) => g.radii(),
        }
    }

    pub fn spacing(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.spacing(),
            Grid::Box(g) => g.spacing(),
        }
    }

    pub fn as_radial(&self) -> Option<&RadialGrid> {
        match self {
            Grid::Radial(g) => Some(g),
            Grid::Box(_) => None,
        }
    }

    pub fn as_box(&self) -> Option<&BoxGrid> {
        match self {
            Grid::Box(g) => Some(g),
            Grid::Radial(_) => None,
        }
    }

    /// Quadrature `Σ w_i u_i` of raw node values.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        let w = self.weights();
        if values.len() != w.len() {
            return Err(ChoquardError::DimensionMismatch {
                expected: w.len(),
                got: values.len(),
            });
        }
        Ok(w.iter().zip(values).map(|(w, u)| w * u).sum())
    }

    /// Sample a radial profile at every node.
    pub fn sample(&self, profile: impl Fn(f64) -> f64) -> Vec<f64> {
        self.radii().iter().map(|&r| profile(r)).collect()
    }
}

impl From<RadialGrid> for Grid {
    fn from(g: RadialGrid) -> Self {
        Grid::Radial(g)
    }
}

impl From<BoxGrid> for Grid {
    fn from(g: BoxGrid) -> Self {
        Grid::Box(g)
    }
}

pub fn make_radial_grid(n: usize, length: f64) -> Result<RadialGrid> {
    RadialGrid::new(n, length)
}

pub fn make_box_grid(n_per_axis: usize, half_width: f64) -> Result<BoxGrid> {
    BoxGrid::new(n_per_axis, half_width)
}
