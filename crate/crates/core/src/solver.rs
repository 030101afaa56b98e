//! Nonnegative critical points of the penalized functional.
//!
//! Each step moves along the preconditioned gradient `(-Δ + V)^{-1} Φ'(u)`,
//! clips negative values, and rescales the trial field to the maximum of
//! `Φ` along its ray. The iterates therefore stay on the set where
//! `Φ'(u) u = 0`, and `Φ` decreases monotonically along them; the limit is
//! a mountain-pass type critical point. When `Ψ ≡ 0` there is no such set
//! and the iteration reduces to plain descent towards `u = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{scale, Functional, State};
use crate::error::{param_err, ChoquardError, Result};
use crate::field::{solve_schrodinger, Field};
use crate::nonlinearity::{Nonlinearity, NonlinearityModel};
use crate::penalty::{consistency_check, ConsistencyReport, PenalizationConfig};
use crate::riesz::ConvolutionEngine;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitProfile {
    /// `exp(-r²/w²)`.
    Gaussian { width: f64 },
    /// `(1 - r²/w²)₊^k`.
    Bump { width: f64, power: u32 },
}

impl InitProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Self::Gaussian { width } => (-(r / width).powi(2)).exp(),
            Self::Bump { width, power } => (1.0 - (r / width).powi(2)).max(0.0).powi(power as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Stop once `‖Φ'(u)‖ <= grad_tol · ‖Φ'(u₀)‖`.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    /// Step growth after an accepted step.
    pub grow: f64,
    pub max_step: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub init: InitProfile,
    /// Multiplier on the ray-maximum scaling of the initial profile.
    pub init_scale: f64,
    /// Relative amplitude of the seeded smooth perturbation of the start.
    pub perturbation: f64,
    pub seed: u64,
    /// Gradient norm that `grad_tol` is relative to; defaults to the
    /// initial one. Set it when restarting from a converged field.
    pub reference_grad_norm: Option<f64>,
    /// Relaunches with a doubled `init_scale` after a collapse to zero.
    pub max_relaunch: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            grad_tol: 1e-6,
            initial_step: 1.0,
            shrink: 0.5,
            grow: 1.5,
            max_step: 4.0,
            armijo: 1e-4,
            init: InitProfile::Gaussian { width: 1.0 },
            init_scale: 1.0,
            perturbation: 1e-3,
            seed: 42,
            reference_grad_norm: None,
            max_relaunch: 3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.grad_tol < 1.0) {
            return param_err(format!("grad_tol must lie in (0, 1), got {}", self.grad_tol));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return param_err(format!("shrink factor must lie in (0, 1), got {}", self.shrink));
        }
        if !(self.initial_step > 0.0 && self.max_step >= self.initial_step) {
            return param_err("step sizes must satisfy 0 < initial_step <= max_step");
        }
        if !(self.grow >= 1.0) || !(self.armijo > 0.0 && self.armijo < 1.0) {
            return param_err("need grow >= 1 and armijo in (0, 1)");
        }
        if !(self.init_scale > 0.0) || !(self.perturbation >= 0.0) {
            return param_err("init_scale must be positive and perturbation nonnegative");
        }
        if self.max_iter == 0 {
            return param_err("max_iter must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    pub u: Field,
    pub phi: f64,
    /// `‖u‖² = ∫ |∇u|² + V u²`.
    pub e_norm_sq: f64,
    pub sup_u: f64,
    /// Grid `L²` norm of `-Δu + V u - K(u) g(x, u)`.
    pub grad_norm: f64,
    pub reference_grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The last relaunch still collapsed to zero.
    pub collapsed: bool,
    pub relaunches: usize,
    pub consistency: ConsistencyReport,
    /// Smallest node value over `|x| <= R`.
    pub positivity: f64,
    /// Smallest node value overall.
    pub min_value: f64,
    /// `Φ` after every accepted step, starting with the initial iterate.
    pub phi_history: Vec<f64>,
}

impl SolutionReport {
    pub fn grad_ratio(&self) -> f64 {
        if self.reference_grad_norm > 0.0 {
            self.grad_norm / self.reference_grad_norm
        } else {
            0.0
        }
    }
}

fn l2(functional: &Functional, v: &[f64]) -> f64 {
    functional
        .grid()
        .weights()
        .iter()
        .zip(v)
        .map(|(w, x)| w * x * x)
        .sum::<f64>()
        .sqrt()
}

fn dot(functional: &Functional, a: &[f64], b: &[f64]) -> f64 {
    functional
        .grid()
        .weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x * y)
        .sum()
}

/// Rescale `w` to the zero of `t ↦ t‖w‖² - Ψ'(tw) w` (the ray maximum).
/// Returns `None` when `Ψ(w) = 0`.
pub fn nehari_project(functional: &Functional, w: &[f64]) -> Result<Option<(f64, State)>> {
    let a = functional.norm_sq(w);
    let st1 = functional.state(w)?;
    if !(st1.energy.nonlocal > 0.0) || !(a > 0.0) {
        return Ok(None);
    }
    // φ(y) = ln(Ψ'(e^y w) w) - y - ln a is increasing in y
    let eval = |y: f64| -> Result<(f64, State)> {
        let st = functional.state(&scale(w, y.exp()))?;
        let p = functional.psi_prime_dot(&st, &st.u);
        if !(p > 0.0) {
            return Err(ChoquardError::NonFinite("Psi'(tw)tw vanished along a ray with Psi > 0".into()));
        }
        // Ψ'(tw)(tw) = t Ψ'(tw) w
        Ok((p.ln() - 2.0 * y - a.ln(), st))
    };
    let p1 = functional.psi_prime_dot(&st1, w);
    let mut y0 = 0.0;
    let mut f0 = p1.ln() - a.ln();
    let mut st0 = st1;
    if f0 == 0.0 {
        return Ok(Some((1.0, st0)));
    }
    // homogeneous guess: Ψ'(tw)(tw) ∝ t^{2s̄}
    let degree = (2.0 * functional.model().upper_critical_exponent() - 2.0).max(1.0);
    let mut y1 = -f0 / degree;
    let (mut f1, mut st1) = eval(y1)?;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (y, f) in [(y0, f0), (y1, f1)] {
        if f < 0.0 {
            lo = lo.max(y);
        } else {
            hi = hi.min(y);
        }
    }
    for _ in 0..200 {
        if f1 == 0.0 || (y1 - y0).abs() <= 1e-15 * (1.0 + y1.abs()) {
            break;
        }
        let slope = (f1 - f0) / (y1 - y0);
        let mut y2 = if slope > 0.0 { y1 - f1 / slope } else { f64::NAN };
        if !(y2 > lo && y2 < hi) {
            y2 = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo + 1.0
            } else {
                hi - 1.0
            };
        }
        let (f2, st2) = eval(y2)?;
        if f2 < 0.0 {
            lo = lo.max(y2);
        } else {
            hi = hi.min(y2);
        }
        y0 = y1;
        f0 = f1;
        st0 = st1;
        y1 = y2;
        f1 = f2;
        st1 = st2;
    }
    let _ = st0;
    Ok(Some((y1.exp(), st1)))
}

fn smooth_perturbation(functional: &Functional, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (0..4)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.5..3.0)))
        .collect();
    functional
        .grid()
        .radii()
        .iter()
        .map(|&r| {
            amplitude
                * coeffs
                    .iter()
                    .map(|&(c, w)| c * (-(r / w).powi(2)).exp())
                    .sum::<f64>()
        })
        .collect()
}

struct RunOutcome {
    state: State,
    grad: Vec<f64>,
    grad_norm: f64,
    reference: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn run_descent(functional: &Functional, scfg: &SolverConfig, start: Vec<f64>) -> Result<RunOutcome> {
    let grid = functional.grid().clone();
    let pot = functional.potential().to_vec();
    let mut st = match nehari_project(functional, &start)? {
        Some((t, st)) if t.is_finite() => st,
        _ => functional.state(&start)?,
    };
    let on_nehari = st.energy.nonlocal > 0.0;
    let mut grad = functional.gradient_of(&st);
    let mut grad_norm = l2(functional, &grad);
    let reference = scfg.reference_grad_norm.unwrap_or(grad_norm);
    let mut history = vec![st.energy.total];
    let mut tau = scfg.initial_step;
    let mut iterations = 0;
    let mut converged = grad_norm <= scfg.grad_tol * reference;
    while !converged && iterations < scfg.max_iter {
        iterations += 1;
        let dir = solve_schrodinger(&grid, &pot, &grad);
        let slope = dot(functional, &grad, &dir);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = st.u.iter().zip(&dir).map(|(u, d)| (u - tau * d).max(0.0)).collect();
            let cand = if on_nehari {
                nehari_project(functional, &trial)?.map(|(_, s)| s)
            } else {
                Some(functional.state(&trial)?)
            };
            if let Some(c) = cand {
                if c.energy.total <= st.energy.total - scfg.armijo * tau * slope {
                    accepted = Some(c);
                    break;
                }
                // at the noise floor a non-increase is still progress
                if c.energy.total <= st.energy.total && tau * slope <= 1e-14 * st.energy.total.abs().max(1e-300) {
                    accepted = Some(c);
                    break;
                }
            }
            tau *= scfg.shrink;
        }
        let Some(next) = accepted else {
            break;
        };
        st = next;
        if !st.energy.total.is_finite() {
            return Err(ChoquardError::NonFinite(format!("energy became non-finite at iteration {iterations}")));
        }
        history.push(st.energy.total);
        grad = functional.gradient_of(&st);
        grad_norm = l2(functional, &grad);
        converged = grad_norm <= scfg.grad_tol * reference;
        tau = (tau * scfg.grow).min(scfg.max_step);
    }
    Ok(RunOutcome {
        state: st,
        grad,
        grad_norm,
        reference,
        iterations,
        converged,
        history,
    })
}

/// Descend from the configured initial profile (or from `start`, if given).
pub fn solve(
    functional: &Functional,
    cfg: &PenalizationConfig,
    scfg: &SolverConfig,
    start: Option<&Field>,
) -> Result<SolutionReport> {
    scfg.validate()?;
    let grid = functional.grid().clone();
    let base: Vec<f64> = match start {
        Some(u) => {
            if u.len() != grid.len() {
                return Err(ChoquardError::DimensionMismatch {
                    expected: grid.len(),
                    got: u.len(),
                });
            }
            u.values().to_vec()
        }
        None => {
            let profile = grid.sample(|r| scfg.init.eval(r));
            let pert = smooth_perturbation(functional, scfg.perturbation, scfg.seed);
            profile.iter().zip(&pert).map(|(p, e)| (p * (1.0 + e)).max(0.0)).collect()
        }
    };
    let mut init_scale = scfg.init_scale;
    let mut relaunches = 0;
    let (outcome, collapsed) = loop {
        let start = scale(&base, init_scale);
        let out = run_descent(functional, scfg, start)?;
        let sup = out.state.u.iter().cloned().fold(0.0, f64::max);
        let has_nonlocal = out.history[0] != 0.0 && functional.state(&base)?.energy.nonlocal > 0.0;
        let collapsed = has_nonlocal && (sup == 0.0 || out.state.energy.total <= 1e-12 * out.history[0].abs());
        if !collapsed || relaunches >= scfg.max_relaunch {
            break (out, collapsed);
        }
        relaunches += 1;
        init_scale *= 2.0;
    };
    let u = Field::new(grid.clone(), outcome.state.u.clone())?;
    let sup_u = u.sup_norm();
    let consistency = consistency_check(cfg, functional.model(), functional.potential(), &u)?;
    let positivity = grid
        .radii()
        .iter()
        .zip(u.values())
        .filter(|(r, _)| **r <= cfg.cutoff)
        .map(|(_, &x)| x)
        .fold(f64::INFINITY, f64::min);
    let _ = &outcome.grad;
    Ok(SolutionReport {
        phi: outcome.state.energy.total,
        e_norm_sq: functional.norm_sq(u.values()),
        sup_u,
        grad_norm: outcome.grad_norm,
        reference_grad_norm: outcome.reference,
        iterations: outcome.iterations,
        converged: outcome.converged,
        collapsed,
        relaunches,
        consistency,
        positivity,
        min_value: u.min_value(),
        phi_history: outcome.history,
        u,
    })
}

/// Grid `L²` norm of `-Δu + V u - (|x|^{-μ} * F(u)) f(u)`.
pub fn residual_original(
    u: &Field,
    model: &NonlinearityModel,
    potential: &[f64],
    engine: &ConvolutionEngine,
) -> Result<f64> {
    let functional = Functional::original(engine.clone(), potential.to_vec(), model.clone())?;
    let st = functional.state(u.values())?;
    Ok(l2(&functional, &functional.gradient_of(&st)))
}

/// Same norm for the penalized equation.
pub fn residual_penalized(u: &Field, functional: &Functional) -> Result<f64> {
    let st = functional.state(u.values())?;
    Ok(l2(functional, &functional.gradient_of(&st)))
}

/// `f` evaluated at the solution, for profile export.
pub fn nonlinearity_at(u: &Field, functional: &Functional) -> Vec<f64> {
    let model = functional.model();
    match functional.nonlocal() {
        crate::energy::Nonlocal::Penalized(p) => u.values().iter().enumerate().map(|(i, &s)| p.g(i, s)).collect(),
        crate::energy::Nonlocal::Original(_) => u.values().iter().map(|&s| model.f(s)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_radial_grid, Grid};
    use crate::penalty::PenalizedNonlinearity;
    use std::sync::Arc;

    fn setup(model: NonlinearityModel, n: usize, l: f64, w0: f64, cutoff: f64, ell: f64) -> (Functional, PenalizationConfig) {
        let g: Arc<Grid> = Arc::new(make_radial_grid(n, l).unwrap().into());
        let pot = g.sample(|r| if r < 1.0 { 2.0 * w0 } else { 2.0 * w0 * r.powf(-1.5) });
        let cfg = PenalizationConfig::new(cutoff, ell).unwrap();
        let pen = PenalizedNonlinearity::new(cfg, model.clone(), &g, &pot).unwrap();
        let eng = ConvolutionEngine::radial(g, model.mu).unwrap();
        (Functional::penalized(eng, pot, pen).unwrap(), cfg)
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.grad_tol = 1.0;
        assert!(c.validate().is_err());
        let c = SolverConfig {
            shrink: 0.0,
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_nonlinearity_descends_to_zero() {
        let (f, cfg) = setup(NonlinearityModel::zero(1.0), 128, 10.0, 1.0, 2.0, 2.0);
        let rep = solve(&f, &cfg, &SolverConfig::default(), None).unwrap();
        assert!(rep.converged);
        assert!(rep.sup_u < 1e-6, "{}", rep.sup_u);
        assert!(rep.phi.abs() < 1e-10);
    }

    #[test]
    fn nehari_projection_zeroes_the_radial_derivative() {
        let (f, _) = setup(NonlinearityModel::homogeneous(1.0).unwrap(), 256, 10.0, 2.0, 2.0, 3.0);
        let w = f.grid().sample(|r| 0.3 * (-r).exp());
        let (t, st) = nehari_project(&f, &w).unwrap().unwrap();
        let h = f.norm_sq(&st.u) - f.psi_prime_dot(&st, &st.u);
        assert!(h.abs() < 1e-12 * f.norm_sq(&st.u), "{h}");
        assert!(t > 0.0);
    }

    #[test]
    fn descent_is_monotone_and_nonnegative() {
        let model = NonlinearityModel::homogeneous(1.0).unwrap();
        let (f, cfg) = setup(model, 256, 20.0, 15.0, 2.0, 1.75);
        let scfg = SolverConfig {
            max_iter: 200,
            ..SolverConfig::default()
        };
        let rep = solve(&f, &cfg, &scfg, None).unwrap();
        for w in rep.phi_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(rep.min_value >= 0.0 && rep.sup_u > 0.0);
        assert!(rep.phi > 0.0);
    }
}
