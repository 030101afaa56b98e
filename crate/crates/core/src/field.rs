//! Sampled fields and the discrete operators acting on them.
//!
//! The radial Laplacian is the conservative stencil
//! `r_i^{-2} h^{-2} [r_{i+1/2}^2 (u_{i+1} - u_i) - r_{i-1/2}^2 (u_i - u_{i-1})]`
//! with zero flux through the origin and a Dirichlet closure at `r = L`
//! (antisymmetric ghost value). The box Laplacian is the 7-point stencil with
//! the same Dirichlet closure on the cube faces. In both cases
//! `Σ w u (-Δu)` equals [`dirichlet_energy`] exactly, which is what makes the
//! discrete energy gradients consistent.

use std::sync::Arc;

use crate::error::{ChoquardError, Result};
use crate::grid::{BoxGrid, Grid, RadialGrid};

/// Real values sampled on the nodes of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    grid: Arc<Grid>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ChoquardError::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ChoquardError::NonFinite(format!("field value at node {i}")));
        }
        Ok(Self { values, grid })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { values, grid }
    }

    pub fn from_profile(grid: Arc<Grid>, profile: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.sample(profile);
        Self::new(grid, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// New field on the same grid; values are checked for finiteness.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| t * v).collect(),
            grid: self.grid.clone(),
        }
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &Field) -> Result<Self> {
        self.check_same(other)?;
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + t * b)
                .collect(),
        )
    }

    pub fn positive_part(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
            grid: self.grid.clone(),
        }
    }

    pub fn integrate(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, u)| w * u)
            .sum()
    }

    /// Weighted inner product `Σ w_i u_i v_i`.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.check_same(other)?;
        Ok(weighted_dot(self.grid.weights(), &self.values, &other.values))
    }

    pub fn l2_norm(&self) -> f64 {
        weighted_dot(self.grid.weights(), &self.values, &self.values).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self
            .grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, u)| w * u.abs().powf(p))
            .sum();
        s.powf(1.0 / p)
    }

    /// `max_i |u_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn laplacian(&self) -> Field {
        let values = laplacian(&self.grid, &self.values);
        Field {
            values,
            grid: self.grid.clone(),
        }
    }

    /// `∫|∇u|²` in the discrete sense.
    pub fn dirichlet_energy(&self) -> f64 {
        dirichlet_energy(&self.grid, &self.values)
    }

    pub(crate) fn check_same(&self, other: &Field) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(ChoquardError::DimensionMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        if !self.same_grid(other) {
            return Err(ChoquardError::GridMismatch(
                "fields live on different grids".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

pub fn laplacian(grid: &Grid, u: &[f64]) -> Vec<f64> {
    match grid {
        Grid::Radial(g) => radial_laplacian(g, u),
        Grid::Box(g) => box_laplacian(g, u),
    }
}

pub fn dirichlet_energy(grid: &Grid, u: &[f64]) -> f64 {
    match grid {
        Grid::Radial(g) => radial_dirichlet_energy(g, u),
        Grid::Box(g) => box_dirichlet_energy(g, u),
    }
}

fn radial_laplacian(g: &RadialGrid, u: &[f64]) -> Vec<f64> {
    let n = g.len();
    let h = g.spacing();
    let r = g.nodes();
    let mut flux = vec![0.0; n + 1];
    for i in 0..n - 1 {
        let rf = g.face(i);
        flux[i + 1] = rf * rf * (u[i + 1] - u[i]) / h;
    }
    let l = g.length();
    flux[n] = l * l * (-2.0 * u[n - 1]) / h;
    (0..n)
        .map(|i| (flux[i + 1] - flux[i]) / (r[i] * r[i] * h))
        .collect()
}

fn radial_dirichlet_energy(g: &RadialGrid, u: &[f64]) -> f64 {
    let n = g.len();
    let h = g.spacing();
    let four_pi = 4.0 * std::f64::consts::PI;
    let mut e = 0.0;
    for i in 0..n - 1 {
        let rf = g.face(i);
        let du = u[i + 1] - u[i];
        e += rf * rf * du * du / h;
    }
    // half cell between the last node and the Dirichlet point r = L
    let l = g.length();
    e += l * l * 2.0 * u[n - 1] * u[n - 1] / h;
    four_pi * e
}

fn box_laplacian(g: &BoxGrid, u: &[f64]) -> Vec<f64> {
    let n = g.n_per_axis();
    let h2 = g.spacing() * g.spacing();
    let mut out = vec![0.0; u.len()];
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let i = g.index(ix, iy, iz);
                let c = u[i];
                let mut acc = 0.0;
                let nb = |jx: isize, jy: isize, jz: isize| -> f64 {
                    let m = n as isize;
                    if jx < 0 || jy < 0 || jz < 0 || jx >= m || jy >= m || jz >= m {
                        -c
                    } else {
                        u[g.index(jx as usize, jy as usize, jz as usize)]
                    }
                };
                let (x, y, z) = (ix as isize, iy as isize, iz as isize);
                acc += nb(x + 1, y, z) + nb(x - 1, y, z);
                acc += nb(x, y + 1, z) + nb(x, y - 1, z);
                acc += nb(x, y, z + 1) + nb(x, y, z - 1);
                out[i] = (acc - 6.0 * c) / h2;
            }
        }
    }
    out
}

fn box_dirichlet_energy(g: &BoxGrid, u: &[f64]) -> f64 {
    let n = g.n_per_axis();
    let h = g.spacing();
    let mut e = 0.0;
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let c = u[g.index(ix, iy, iz)];
                let mut boundary_faces = 0;
                for (i, j, k) in [(ix + 1, iy, iz), (ix, iy + 1, iz), (ix, iy, iz + 1)] {
                    if i < n && j < n && k < n {
                        let d = u[g.index(i, j, k)] - c;
                        e += h * d * d;
                    }
                }
                for coord in [ix, iy, iz] {
                    if coord == 0 {
                        boundary_faces += 1;
                    }
                    if coord == n - 1 {
                        boundary_faces += 1;
                    }
                }
                e += 2.0 * h * c * c * boundary_faces as f64;
            }
        }
    }
    e
}

/// `∫_{|x| >= rho} |∇u|² + V u²`, counting the difference terms whose
/// endpoints both lie in the region.
pub fn tail_energy(grid: &Grid, u: &[f64], potential: &[f64], rho: f64) -> f64 {
    let pot: f64 = grid
        .weights()
        .iter()
        .zip(grid.radii())
        .zip(u.iter().zip(potential))
        .filter(|((_, r), _)| **r >= rho)
        .map(|((w, _), (x, v))| w * v * x * x)
        .sum();
    let grad = match grid {
        Grid::Radial(g) => {
            let n = g.len();
            let h = g.spacing();
            let r = g.nodes();
            let mut e = 0.0;
            for i in 0..n - 1 {
                if r[i] >= rho {
                    let rf = g.face(i);
                    let du = u[i + 1] - u[i];
                    e += rf * rf * du * du / h;
                }
            }
            if r[n - 1] >= rho {
                let l = g.length();
                e += l * l * 2.0 * u[n - 1] * u[n - 1] / h;
            }
            4.0 * std::f64::consts::PI * e
        }
        Grid::Box(g) => {
            let n = g.n_per_axis();
            let h = g.spacing();
            let radii = g.radii();
            let mut e = 0.0;
            for ix in 0..n {
                for iy in 0..n {
                    for iz in 0..n {
                        let a = g.index(ix, iy, iz);
                        if radii[a] < rho {
                            continue;
                        }
                        let c = u[a];
                        for (i, j, k) in [(ix + 1, iy, iz), (ix, iy + 1, iz), (ix, iy, iz + 1)] {
                            if i < n && j < n && k < n {
                                let b = g.index(i, j, k);
                                if radii[b] >= rho {
                                    let d = u[b] - c;
                                    e += h * d * d;
                                }
                            }
                        }
                        let faces = [ix, iy, iz].iter().filter(|&&q| q == 0).count()
                            + [ix, iy, iz].iter().filter(|&&q| q == n - 1).count();
                        e += 2.0 * h * c * c * faces as f64;
                    }
                }
            }
            e
        }
    };
    grad + pot
}

/// Solves `(-Δ_h + V) z = b` on the grid. `potential` must be nonnegative.
///
/// Tridiagonal elimination on radial grids; Jacobi-preconditioned conjugate
/// gradients on box grids.
pub fn solve_schrodinger(grid: &Grid, potential: &[f64], rhs: &[f64]) -> Vec<f64> {
    match grid {
        Grid::Radial(g) => radial_solve(g, potential, rhs),
        Grid::Box(g) => box_solve(g, potential, rhs),
    }
}

fn radial_solve(g: &RadialGrid, potential: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = g.len();
    let h = g.spacing();
    let r = g.nodes();
    let l = g.length();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let s = r[i] * r[i] * h * h;
        let inner = if i == 0 { 0.0 } else { g.face(i - 1).powi(2) };
        let outer = if i + 1 < n {
            g.face(i).powi(2)
        } else {
            2.0 * l * l
        };
        lower[i] = -inner / s;
        upper[i] = if i + 1 < n { -outer / s } else { 0.0 };
        diag[i] = (inner + outer) / s + potential[i];
    }
    // Thomas algorithm
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut z = vec![0.0; n];
    z[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        z[i] = d[i] - c[i] * z[i + 1];
    }
    z
}

fn box_solve(g: &BoxGrid, potential: &[f64], rhs: &[f64]) -> Vec<f64> {
    let grid = Grid::Box(g.clone());
    let apply = |x: &[f64]| -> Vec<f64> {
        let lap = laplacian(&grid, x);
        lap.iter()
            .zip(x)
            .zip(potential)
            .map(|((l, x), v)| -l + v * x)
            .collect()
    };
    let h2 = g.spacing() * g.spacing();
    let inv_diag: Vec<f64> = potential.iter().map(|v| 1.0 / (6.0 / h2 + v)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a * b).sum::<f64>();

    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut res = rhs.to_vec();
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return x;
    }
    let mut z: Vec<f64> = res.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&res, &z);
    for _ in 0..10 * n {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            res[i] -= alpha * ap[i];
        }
        if dot(&res, &res).sqrt() <= 1e-13 * b_norm {
            break;
        }
        z = res.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let rz_new = dot(&res, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// Norms of a field relative to a sampled potential.
#[derive(Debug, Clone, PartialEq)]
pub struct Norms {
    /// `(∫|∇u|²)^{1/2}`
    pub d12: f64,
    /// `(∫|∇u|² + V u²)^{1/2}`
    pub e_norm: f64,
    /// `(p, |u|_p)` for every requested exponent.
    pub lp: Vec<(f64, f64)>,
}

/// Computes the `D^{1,2}` norm, the energy norm and requested Lebesgue norms.
///
/// A negative potential sample is reported as an error since the energy norm
/// is only a norm for `V >= 0`.
pub fn norms(u: &Field, potential: &[f64], exponents: &[f64]) -> Result<Norms> {
    if potential.len() != u.len() {
        return Err(ChoquardError::DimensionMismatch {
            expected: u.len(),
            got: potential.len(),
        });
    }
    if let Some((node, &value)) = potential.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(ChoquardError::NegativePotential { node, value });
    }
    let d12_sq = u.dirichlet_energy();
    let e_sq = energy_norm_sq(u, potential);
    Ok(Norms {
        d12: d12_sq.sqrt(),
        e_norm: e_sq.sqrt(),
        lp: exponents.iter().map(|&p| (p, u.lp_norm(p))).collect(),
    })
}

/// `∫|∇u|² + ∫ V u²`.
pub fn energy_norm_sq(u: &Field, potential: &[f64]) -> f64 {
    let w = u.grid().weights();
    let pot: f64 = (0..u.len())
        .map(|i| w[i] * potential[i] * u.values[i] * u.values[i])
        .sum();
    u.dirichlet_energy() + pot
}
