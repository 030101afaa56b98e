//! Riesz potentials `K(x) = ∫ ρ(y) |x - y|^{-μ} dy` on the discrete grids.
//!
//! Three engines share one discrete quadrature per grid type:
//!
//! * [`ConvolutionEngine::RadialClosedForm`] integrates the kernel over
//!   spheres analytically, `A_μ(r, s) = 2π / (r s (2-μ)) [(r+s)^{2-μ} - |r-s|^{2-μ}]`,
//!   and uses the exact shell integral `∫_cell A_μ(r_i, s) s² ds` on the
//!   diagonal where the kernel is singular.
//! * [`ConvolutionEngine::BoxConvolution`] evaluates the discrete 3D sum with
//!   zero-padded FFTs; the self-cell entry is the cell average of `|y|^{-μ}`.
//! * [`ConvolutionEngine::BruteForce`] evaluates the same sums pair by pair
//!   from numerical quadrature of the kernel (radial) or direct summation
//!   (box). It exists to cross-check the other two.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{param_err, ChoquardError, Result};
use crate::field::{weighted_dot, Field};
use crate::grid::{BoxGrid, Grid, RadialGrid};
use crate::nonlinearity::DIM;
use crate::quad;

/// Angular integral of `|x - y|^{-μ}` over the sphere `|y| = s`, divided by
/// `s²`, for `|x| = r`. Singular at `r = s` when `μ >= 2`.
pub fn radial_kernel(r: f64, s: f64, mu: f64) -> f64 {
    if is_log_case(mu) {
        return 2.0 * PI / (r * s) * ((r + s) / (r - s).abs()).ln();
    }
    let a = 2.0 - mu;
    2.0 * PI / (r * s * a) * ((r + s).powf(a) - (r - s).abs().powf(a))
}

fn is_log_case(mu: f64) -> bool {
    (mu - 2.0).abs() < 1e-12
}

/// `∫_a^b A_μ(r, s) s² ds` in closed form, i.e. the potential at radius `r`
/// of a unit-density shell `a <= |y| <= b`.
pub fn shell_potential(r: f64, a: f64, b: f64, mu: f64) -> f64 {
    let anti = |s: f64| -> f64 {
        if is_log_case(mu) {
            // ∫ s ln(r+s) - s ln|r-s|
            let plus = 0.5 * (s * s - r * r) * (r + s).ln() - 0.25 * s * s + 0.5 * r * s;
            let diff = (r - s).abs();
            let minus_log = if diff == 0.0 {
                0.0
            } else {
                0.5 * (s * s - r * r) * diff.ln()
            };
            let minus = minus_log - 0.25 * s * s - 0.5 * r * s;
            (2.0 * PI / r) * (plus - minus)
        } else {
            let al = 2.0 - mu;
            let p = (r + s).powf(al + 2.0) / (al + 2.0) - r * (r + s).powf(al + 1.0) / (al + 1.0);
            let q = if s <= r {
                let t = r - s;
                -(r * t.powf(al + 1.0) / (al + 1.0) - t.powf(al + 2.0) / (al + 2.0))
            } else {
                let t = s - r;
                t.powf(al + 2.0) / (al + 2.0) + r * t.powf(al + 1.0) / (al + 1.0)
            };
            (2.0 * PI / (r * al)) * (p - q)
        }
    };
    anti(b) - anti(a)
}

/// Radial kernel matrix: `K_i = Σ_j W_ij ρ_j`.
#[derive(Debug, Clone)]
pub enum RadialKernelMatrix {
    Dense { n: usize, entries: Vec<f64> },
    /// `μ = 1`: `A₁(r, s) = 4π min(r, s) / (r s)` is separable, so the
    /// off-diagonal sum reduces to two running sums.
    Newtonian { nodes: Vec<f64>, h: f64, diag: Vec<f64> },
}

impl RadialKernelMatrix {
    fn closed_form(grid: &RadialGrid, mu: f64) -> Self {
        let n = grid.len();
        let h = grid.spacing();
        let r = grid.nodes();
        if mu == 1.0 {
            let diag = r
                .iter()
                .map(|&ri| shell_potential(ri, ri - 0.5 * h, ri + 0.5 * h, mu))
                .collect();
            return Self::Newtonian {
                nodes: r.to_vec(),
                h,
                diag,
            };
        }
        let mut entries = vec![0.0; n * n];
        entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                row[j] = if i == j {
                    shell_potential(r[i], r[i] - 0.5 * h, r[i] + 0.5 * h, mu)
                } else {
                    radial_kernel(r[i], r[j], mu) * r[j] * r[j] * h
                };
            }
        });
        Self::Dense { n, entries }
    }

    fn quadrature(grid: &RadialGrid, mu: f64) -> Self {
        let n = grid.len();
        let h = grid.spacing();
        let r = grid.nodes();
        let mut entries = vec![0.0; n * n];
        entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                row[j] = if i == j {
                    shell_potential_by_distance(r[i], r[i] - 0.5 * h, r[i] + 0.5 * h, mu)
                } else {
                    angular_kernel_quadrature(r[i], r[j], mu) * r[j] * r[j] * h
                };
            }
        });
        Self::Dense { n, entries }
    }

    fn apply(&self, rho: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense { n, entries } => {
                let n = *n;
                let mut out = vec![0.0; n];
                out.par_iter_mut().enumerate().for_each(|(i, o)| {
                    let row = &entries[i * n..(i + 1) * n];
                    *o = row.iter().zip(rho).map(|(w, p)| w * p).sum();
                });
                out
            }
            Self::Newtonian { nodes, h, diag } => {
                let n = nodes.len();
                let four_pi_h = 4.0 * PI * h;
                // inner[i] = Σ_{j<i} ρ_j r_j², outer[i] = Σ_{j>i} ρ_j r_j
                let mut out = vec![0.0; n];
                let mut inner = 0.0;
                for i in 0..n {
                    out[i] = four_pi_h * inner / nodes[i];
                    inner += rho[i] * nodes[i] * nodes[i];
                }
                let mut outer = 0.0;
                for i in (0..n).rev() {
                    out[i] += four_pi_h * outer + diag[i] * rho[i];
                    outer += rho[i] * nodes[i];
                }
                out
            }
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Dense { n, entries } => entries[i * n + j],
            Self::Newtonian { nodes, h, diag } => {
                if i == j {
                    diag[i]
                } else {
                    radial_kernel(nodes[i], nodes[j], 1.0) * nodes[j] * nodes[j] * h
                }
            }
        }
    }
}

/// `2π ∫_{-1}^{1} (r² + s² - 2 r s c)^{-μ/2} dc` by adaptive quadrature,
/// with breakpoints clustered where the integrand peaks (`c → 1`).
pub fn angular_kernel_quadrature(r: f64, s: f64, mu: f64) -> f64 {
    let d2 = (r - s) * (r - s);
    let rs = r * s;
    // c = 1 - x, x in [0, 2]
    let f = |x: f64| (d2 + 2.0 * rs * x).powf(-0.5 * mu);
    let mut breaks = vec![0.0];
    let mut b = (d2 / rs).max(1e-300);
    while b < 2.0 {
        breaks.push(b);
        b *= 8.0;
    }
    breaks.push(2.0);
    2.0 * PI * quad::integrate_pieces(f, &breaks, 0.0, 1e-14)
}

/// Potential at radius `r` of a unit-density shell `a <= |y| <= b`, computed
/// by integrating `t^{-μ}` against the area of the sphere `|y - x| = t`
/// lying inside the shell.
pub fn shell_potential_by_distance(r: f64, a: f64, b: f64, mu: f64) -> f64 {
    let inside = |t: f64, s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if t >= r + s {
            0.0
        } else if t <= s - r {
            4.0 * PI * t * t
        } else if t <= r - s {
            0.0
        } else {
            PI * t / r * (s * s - (r - t) * (r - t))
        }
    };
    let f = |t: f64| t.powf(-mu) * (inside(t, b) - inside(t, a));
    let mut breaks = vec![0.0, (r - a).abs(), (r - b).abs(), r + a, r + b];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    quad::integrate_pieces(f, &breaks, 0.0, 1e-14)
}

/// Cell average of `|y|^{-μ}` over `[-1/2, 1/2]^3`, times the unit volume.
fn unit_cube_self_integral(mu: f64) -> f64 {
    // face decomposition: (3 / (3 - μ)) ∫∫_{[-1/2,1/2]²} (x² + y² + 1/4)^{-μ/2}
    let inner = |x: f64| {
        quad::integrate(
            |y| (x * x + y * y + 0.25).powf(-0.5 * mu),
            -0.5,
            0.5,
            0.0,
            1e-14,
        )
    };
    3.0 / (3.0 - mu) * quad::integrate(inner, -0.5, 0.5, 0.0, 1e-14)
}

/// Discrete box kernel for integer displacement `(dx, dy, dz)`.
#[derive(Debug, Clone, Copy)]
struct BoxKernel {
    h: f64,
    mu: f64,
    self_entry: f64,
}

impl BoxKernel {
    fn new(h: f64, mu: f64) -> Self {
        Self {
            h,
            mu,
            self_entry: unit_cube_self_integral(mu) * h.powf(3.0 - mu),
        }
    }

    #[inline]
    fn weight(&self, dx: i64, dy: i64, dz: i64) -> f64 {
        if dx == 0 && dy == 0 && dz == 0 {
            self.self_entry
        } else {
            let d2 = (dx * dx + dy * dy + dz * dz) as f64;
            self.h.powi(3) * (self.h * self.h * d2).powf(-0.5 * self.mu)
        }
    }
}

/// FFT-based linear convolution on a box grid (padded to twice the size).
#[derive(Clone)]
pub struct BoxFft {
    n: usize,
    m: usize,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for BoxFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoxFft").field("n", &self.n).field("m", &self.m).finish()
    }
}

impl BoxFft {
    fn new(grid: &BoxGrid, mu: f64) -> Self {
        let n = grid.n_per_axis();
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let kernel = BoxKernel::new(grid.spacing(), mu);
        let wrap = |k: usize| -> Option<i64> {
            if k < n {
                Some(k as i64)
            } else if k > n {
                Some(k as i64 - m as i64)
            } else {
                None
            }
        };
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); m * m * m];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    if let (Some(dx), Some(dy), Some(dz)) = (wrap(a), wrap(b), wrap(c)) {
                        kernel_hat[(a * m + b) * m + c] = Complex64::new(kernel.weight(dx, dy, dz), 0.0);
                    }
                }
            }
        }
        fft3(&mut kernel_hat, m, forward.as_ref());
        Self {
            n,
            m,
            kernel_hat,
            forward,
            inverse,
        }
    }

    fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m * m];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    buf[(a * m + b) * m + c] = Complex64::new(rho[(a * n + b) * n + c], 0.0);
                }
            }
        }
        fft3(&mut buf, m, self.forward.as_ref());
        for (x, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *x *= k;
        }
        fft3(&mut buf, m, self.inverse.as_ref());
        let scale = 1.0 / (m * m * m) as f64;
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out[(a * n + b) * n + c] = buf[(a * m + b) * m + c].re * scale;
                }
            }
        }
        out
    }
}

/// In-place 3D transform of an `m³` row-major cube.
fn fft3(buf: &mut [Complex64], m: usize, fft: &dyn Fft<f64>) {
    // last axis is contiguous
    for line in buf.chunks_mut(m) {
        fft.process(line);
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); m];
    for a in 0..m {
        for c in 0..m {
            for b in 0..m {
                scratch[b] = buf[(a * m + b) * m + c];
            }
            fft.process(&mut scratch);
            for b in 0..m {
                buf[(a * m + b) * m + c] = scratch[b];
            }
        }
    }
    for b in 0..m {
        for c in 0..m {
            for a in 0..m {
                scratch[a] = buf[(a * m + b) * m + c];
            }
            fft.process(&mut scratch);
            for a in 0..m {
                buf[(a * m + b) * m + c] = scratch[a];
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ConvolutionEngine {
    RadialClosedForm {
        grid: Arc<Grid>,
        mu: f64,
        matrix: Arc<RadialKernelMatrix>,
    },
    BoxConvolution {
        grid: Arc<Grid>,
        mu: f64,
        fft: Arc<BoxFft>,
    },
    BruteForce {
        grid: Arc<Grid>,
        mu: f64,
        radial_table: Arc<OnceLock<RadialKernelMatrix>>,
    },
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < DIM) {
        return param_err(format!("Riesz exponent must lie in (0, N), got {mu}"));
    }
    Ok(())
}

impl ConvolutionEngine {
    pub fn radial(grid: Arc<Grid>, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        let Some(rg) = grid.as_radial() else {
            return Err(ChoquardError::GridMismatch(
                "radial closed-form engine needs a radial grid".into(),
            ));
        };
        let matrix = Arc::new(RadialKernelMatrix::closed_form(rg, mu));
        Ok(Self::RadialClosedForm { grid, mu, matrix })
    }

    pub fn box_fft(grid: Arc<Grid>, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        let Some(bg) = grid.as_box() else {
            return Err(ChoquardError::GridMismatch(
                "box convolution engine needs a box grid".into(),
            ));
        };
        let fft = Arc::new(BoxFft::new(bg, mu));
        Ok(Self::BoxConvolution { grid, mu, fft })
    }

    pub fn brute_force(grid: Arc<Grid>, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        Ok(Self::BruteForce {
            grid,
            mu,
            radial_table: Arc::new(OnceLock::new()),
        })
    }

    /// The production engine for a grid.
    pub fn for_grid(grid: Arc<Grid>, mu: f64) -> Result<Self> {
        match &*grid {
            Grid::Radial(_) => Self::radial(grid, mu),
            Grid::Box(_) => Self::box_fft(grid, mu),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        match self {
            Self::RadialClosedForm { grid, .. }
            | Self::BoxConvolution { grid, .. }
            | Self::BruteForce { grid, .. } => grid,
        }
    }

    pub fn mu(&self) -> f64 {
        match self {
            Self::RadialClosedForm { mu, .. }
            | Self::BoxConvolution { mu, .. }
            | Self::BruteForce { mu, .. } => *mu,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::RadialClosedForm { .. } => "radial-closed-form",
            Self::BoxConvolution { .. } => "box-fft",
            Self::BruteForce { .. } => "brute-force",
        }
    }

    /// Raw convolution of node values.
    pub fn convolve(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let grid = self.grid();
        if rho.len() != grid.len() {
            return Err(ChoquardError::DimensionMismatch {
                expected: grid.len(),
                got: rho.len(),
            });
        }
        Ok(match self {
            Self::RadialClosedForm { matrix, .. } => matrix.apply(rho),
            Self::BoxConvolution { fft, .. } => fft.apply(rho),
            Self::BruteForce {
                grid,
                mu,
                radial_table,
            } => match &**grid {
                Grid::Radial(rg) => radial_table
                    .get_or_init(|| RadialKernelMatrix::quadrature(rg, *mu))
                    .apply(rho),
                Grid::Box(bg) => box_direct_sum(bg, *mu, rho),
            },
        })
    }

    /// `K(r)` at an arbitrary radius (radial engines only).
    pub fn potential_at(&self, r: f64, rho: &[f64]) -> Result<f64> {
        let Some(rg) = self.grid().as_radial() else {
            return Err(ChoquardError::GridMismatch(
                "off-grid evaluation is only available on radial grids".into(),
            ));
        };
        if rho.len() != rg.len() {
            return Err(ChoquardError::DimensionMismatch {
                expected: rg.len(),
                got: rho.len(),
            });
        }
        let h = rg.spacing();
        let mu = self.mu();
        let mut acc = 0.0;
        for (&s, &p) in rg.nodes().iter().zip(rho) {
            let (a, b) = (s - 0.5 * h, s + 0.5 * h);
            acc += p * if r >= a && r < b {
                shell_potential(r, a, b, mu)
            } else {
                radial_kernel(r, s, mu) * s * s * h
            };
        }
        Ok(acc)
    }
}

fn box_direct_sum(grid: &BoxGrid, mu: f64, rho: &[f64]) -> Vec<f64> {
    let n = grid.n_per_axis();
    let kernel = BoxKernel::new(grid.spacing(), mu);
    let mut out = vec![0.0; rho.len()];
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        let (ix, iy, iz) = ((i / (n * n)) as i64, ((i / n) % n) as i64, (i % n) as i64);
        let mut acc = 0.0;
        for (j, &p) in rho.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let (jx, jy, jz) = ((j / (n * n)) as i64, ((j / n) % n) as i64, (j % n) as i64);
            acc += kernel.weight(ix - jx, iy - jy, iz - jz) * p;
        }
        *o = acc;
    });
    out
}

/// `K = |x|^{-μ} * ρ` as a field on the engine's grid.
pub fn riesz_convolve(engine: &ConvolutionEngine, rho: &Field) -> Result<Field> {
    if !Arc::ptr_eq(engine.grid(), rho.grid()) && **engine.grid() != **rho.grid() {
        return Err(ChoquardError::GridMismatch(format!(
            "{} engine was built for a different grid",
            engine.name()
        )));
    }
    let k = engine.convolve(rho.values())?;
    rho.with_values(k)
}

/// `∬ g(x) h(y) |x - y|^{-μ} dx dy`.
pub fn bilinear(engine: &ConvolutionEngine, g: &Field, h: &Field) -> Result<f64> {
    g.check_same(h)?;
    let kh = riesz_convolve(engine, h)?;
    Ok(weighted_dot(g.grid().weights(), g.values(), kh.values()))
}

/// `∬ g h |x-y|^{-μ} / (|g|_s |h|_r)` with `1/s + μ/N + 1/r = 2`.
pub fn hls_ratio(engine: &ConvolutionEngine, g: &Field, h: &Field, s: f64, r: f64) -> Result<f64> {
    let mu = engine.mu();
    if !(s > 1.0 && r > 1.0) || (1.0 / s + mu / DIM + 1.0 / r - 2.0).abs() > 1e-12 {
        return param_err(format!(
            "HLS exponents must satisfy 1/s + mu/N + 1/r = 2 with s, r > 1 (s={s}, r={r}, mu={mu})"
        ));
    }
    let denom = g.lp_norm(s) * h.lp_norm(r);
    if !(denom > 0.0) {
        return param_err("HLS ratio needs nonzero fields");
    }
    Ok(bilinear(engine, g, h)? / denom)
}

/// Conjugate exponent pair `s = r = 2N/(2N - μ)`.
pub fn symmetric_hls_exponent(mu: f64) -> f64 {
    2.0 * DIM / (2.0 * DIM - mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_box_grid, make_radial_grid};

    fn radial(n: usize, l: f64) -> Arc<Grid> {
        Arc::new(make_radial_grid(n, l).unwrap().into())
    }

    #[test]
    fn newtonian_kernel_is_shell_theorem() {
        assert!((radial_kernel(2.0, 1.0, 1.0) - 2.0 * PI).abs() < 1e-14);
        for (r, s) in [(0.3, 2.0), (5.0, 0.1), (1.0, 1.5)] {
            let expect = 4.0 * PI * f64::min(r, s) / (r * s);
            assert!((radial_kernel(r, s, 1.0) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn kernel_is_symmetric() {
        for mu in [0.5, 1.0, 1.7, 2.0, 2.4] {
            for (r, s) in [(0.3, 2.0), (5.0, 0.1), (1.0, 1.5)] {
                assert_eq!(radial_kernel(r, s, mu), radial_kernel(s, r, mu));
            }
        }
    }

    #[test]
    fn point_mass_limit() {
        // kernel averaged over a small shell of mass 1 approaches r^{-μ}
        for mu in [1.0, 1.5] {
            let (r, s) = (3.0, 1e-4);
            let val = radial_kernel(r, s, mu) / (4.0 * PI);
            assert!((val - r.powf(-mu)).abs() < 1e-6, "{val}");
        }
    }

    #[test]
    fn closed_form_kernel_matches_angular_quadrature() {
        for mu in [0.5, 1.0, 2.0, 2.4] {
            for (r, s) in [(0.3, 2.0), (1.0, 1.01), (3.0, 0.2)] {
                let a = radial_kernel(r, s, mu);
                let b = angular_kernel_quadrature(r, s, mu);
                assert!((a - b).abs() <= 1e-11 * a, "mu {mu} ({r},{s}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn shell_potential_routes_agree() {
        for mu in [0.5, 1.0, 1.9, 2.0, 2.1, 2.5] {
            for (r, a, b) in [(0.05, 0.0, 0.1), (1.0, 0.99, 1.01), (2.0, 0.5, 1.0), (0.5, 1.0, 3.0)] {
                let x = shell_potential(r, a, b, mu);
                let y = shell_potential_by_distance(r, a, b, mu);
                assert!((x - y).abs() <= 1e-10 * x.abs(), "mu {mu} r {r} [{a},{b}]: {x} vs {y}");
            }
        }
    }

    #[test]
    fn ball_exterior_potential() {
        // uniform ball, μ = 1: K(r) = mass / r outside the support
        let g = radial(1000, 5.0);
        let rho: Vec<f64> = g.radii().iter().map(|&r| if r < 1.0 { 1.0 } else { 0.0 }).collect();
        let mass = g.integrate(&rho).unwrap();
        let eng = ConvolutionEngine::radial(g.clone(), 1.0).unwrap();
        for r in [1.5, 2.0, 4.0] {
            let k = eng.potential_at(r, &rho).unwrap();
            assert!((k - mass / r).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn newtonian_fast_path_matches_dense_entries() {
        let g = radial(50, 3.0);
        let rg = g.as_radial().unwrap();
        let fast = RadialKernelMatrix::closed_form(rg, 1.0);
        assert!(matches!(fast, RadialKernelMatrix::Newtonian { .. }));
        let rho = g.sample(|r| (1.0 + r).recip());
        let k = fast.apply(&rho);
        for (i, ki) in k.iter().enumerate() {
            let dense: f64 = (0..50).map(|j| fast.entry(i, j) * rho[j]).sum();
            assert!((ki - dense).abs() <= 1e-13 * dense);
        }
    }

    #[test]
    fn zero_density_gives_zero_potential() {
        let g = radial(32, 2.0);
        let eng = ConvolutionEngine::radial(g.clone(), 1.3).unwrap();
        assert!(eng.convolve(&vec![0.0; 32]).unwrap().iter().all(|&k| k == 0.0));
    }

    #[test]
    fn engines_reject_wrong_grid() {
        let rg = radial(8, 1.0);
        let bg: Arc<Grid> = Arc::new(make_box_grid(4, 1.0).unwrap().into());
        assert!(ConvolutionEngine::radial(bg.clone(), 1.0).is_err());
        assert!(ConvolutionEngine::box_fft(rg.clone(), 1.0).is_err());
        assert!(ConvolutionEngine::radial(rg.clone(), 3.0).is_err());
        let eng = ConvolutionEngine::radial(rg, 1.0).unwrap();
        let f = Field::zeros(radial(9, 1.0));
        assert!(riesz_convolve(&eng, &f).is_err());
    }

    #[test]
    fn bilinear_form_is_symmetric() {
        let g = radial(300, 6.0);
        for mu in [1.0, 2.0, 2.4] {
            let eng = ConvolutionEngine::radial(g.clone(), mu).unwrap();
            let a = Field::from_profile(g.clone(), |r| (-r * r).exp()).unwrap();
            let b = Field::from_profile(g.clone(), |r| 1.0 / (1.0 + r.powi(4))).unwrap();
            let ab = bilinear(&eng, &a, &b).unwrap();
            let ba = bilinear(&eng, &b, &a).unwrap();
            assert!((ab - ba).abs() <= 1e-13 * ab.abs());
        }
    }

    #[test]
    fn box_fft_matches_direct_sum_small() {
        let g: Arc<Grid> = Arc::new(make_box_grid(6, 1.5).unwrap().into());
        let rho = g.sample(|r| (-(r * r)).exp() * (1.0 + r));
        let fft = ConvolutionEngine::box_fft(g.clone(), 1.2).unwrap();
        let bf = ConvolutionEngine::brute_force(g, 1.2).unwrap();
        let a = fft.convolve(&rho).unwrap();
        let b = bf.convolve(&rho).unwrap();
        let scale = b.iter().cloned().fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn unit_cube_self_integral_limits() {
        // μ → 0 gives the unit volume
        assert!((unit_cube_self_integral(1e-9) - 1.0).abs() < 1e-8);
        // inscribed/circumscribed ball bounds for μ = 1
        let v = unit_cube_self_integral(1.0);
        assert!(v > 1.0 / 3f64.sqrt() * 2.0 && v < 2.0 * 1.0 * 1.7, "{v}");
    }

    #[test]
    fn hls_rejects_bad_exponents_and_zero_fields() {
        let g = radial(64, 4.0);
        let eng = ConvolutionEngine::radial(g.clone(), 1.0).unwrap();
        let z = Field::zeros(g.clone());
        let s = symmetric_hls_exponent(1.0);
        assert!((s - 1.2).abs() < 1e-15);
        assert!(hls_ratio(&eng, &z, &z, s, s).is_err());
        let u = Field::from_profile(g, |r| (-r * r).exp()).unwrap();
        assert!(hls_ratio(&eng, &u, &u, 1.5, 1.5).is_err());
        let a = hls_ratio(&eng, &u, &u, s, s).unwrap();
        let b = hls_ratio(&eng, &u.scaled(2.0), &u, s, s).unwrap();
        assert!((a - b).abs() < 1e-13 * a);
    }
}
