//! Discrete energies `Φ(u) = ½‖u‖² - Ψ(u)` (penalized) and `I(u)` (original),
//! their gradients, rays `t ↦ Φ(tu)` and the level bound `d`.

use std::sync::Arc;

use crate::error::{param_err, ChoquardError, Result};
use crate::field::{dirichlet_energy, laplacian, weighted_dot, Field};
use crate::grid::{make_radial_grid, Grid};
use crate::nonlinearity::{Nonlinearity, NonlinearityKind, NonlinearityModel};
use crate::penalty::PenalizedNonlinearity;
use crate::riesz::ConvolutionEngine;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `½ ∫ |∇u|² + V u²`.
    pub quad: f64,
    /// `Ψ(u) = ½ ∬ G(x,u) G(y,u) |x-y|^{-μ}`.
    pub nonlocal: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(quad: f64, nonlocal: f64) -> Self {
        Self {
            quad,
            nonlocal,
            total: quad - nonlocal,
        }
    }
}

/// Which nonlinearity enters the nonlocal term.
#[derive(Debug, Clone)]
pub enum Nonlocal {
    /// `G(x, s)`, `g(x, s)`: the functional `Φ`.
    Penalized(PenalizedNonlinearity),
    /// `F(s)`, `f(s)`: the functional `I`.
    Original(NonlinearityModel),
}

/// Node values reused between energy, gradient and Hessian evaluations.
#[derive(Debug, Clone)]
pub struct State {
    pub u: Vec<f64>,
    /// `G(x_i, u_i)`.
    pub big_g: Vec<f64>,
    /// `g(x_i, u_i)`.
    pub small_g: Vec<f64>,
    /// `K = |x|^{-μ} * G(·, u)`.
    pub k: Vec<f64>,
    pub energy: EnergyBreakdown,
}

#[derive(Debug, Clone)]
pub struct Functional {
    engine: ConvolutionEngine,
    potential: Arc<Vec<f64>>,
    nonlocal: Nonlocal,
}

impl Functional {
    pub fn new(engine: ConvolutionEngine, potential: Vec<f64>, nonlocal: Nonlocal) -> Result<Self> {
        let n = engine.grid().len();
        if potential.len() != n {
            return Err(ChoquardError::DimensionMismatch {
                expected: n,
                got: potential.len(),
            });
        }
        if let Some((node, &value)) = potential.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(ChoquardError::NegativePotential { node, value });
        }
        Ok(Self {
            engine,
            potential: Arc::new(potential),
            nonlocal,
        })
    }

    pub fn penalized(engine: ConvolutionEngine, potential: Vec<f64>, pen: PenalizedNonlinearity) -> Result<Self> {
        Self::new(engine, potential, Nonlocal::Penalized(pen))
    }

    pub fn original(engine: ConvolutionEngine, potential: Vec<f64>, model: NonlinearityModel) -> Result<Self> {
        Self::new(engine, potential, Nonlocal::Original(model))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.engine.grid()
    }

    pub fn engine(&self) -> &ConvolutionEngine {
        &self.engine
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn nonlocal(&self) -> &Nonlocal {
        &self.nonlocal
    }

    pub fn model(&self) -> &NonlinearityModel {
        match &self.nonlocal {
            Nonlocal::Penalized(p) => p.model(),
            Nonlocal::Original(m) => m,
        }
    }

    #[inline]
    fn big_g_at(&self, i: usize, s: f64) -> f64 {
        match &self.nonlocal {
            Nonlocal::Penalized(p) => p.G(i, s),
            Nonlocal::Original(m) => m.F(s),
        }
    }

    #[inline]
    fn g_at(&self, i: usize, s: f64) -> f64 {
        match &self.nonlocal {
            Nonlocal::Penalized(p) => p.g(i, s),
            Nonlocal::Original(m) => m.f(s),
        }
    }

    #[inline]
    fn dg_at(&self, i: usize, s: f64) -> f64 {
        match &self.nonlocal {
            Nonlocal::Penalized(p) => p.dg(i, s),
            Nonlocal::Original(m) => m.df(s),
        }
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        let n = self.grid().len();
        if u.len() != n {
            return Err(ChoquardError::DimensionMismatch {
                expected: n,
                got: u.len(),
            });
        }
        Ok(())
    }

    /// `‖u‖² = ∫ |∇u|² + V u²` on the grid.
    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        let grid = self.grid();
        let pot: f64 = grid
            .weights()
            .iter()
            .zip(u)
            .zip(self.potential.iter())
            .map(|((w, x), v)| w * v * x * x)
            .sum();
        dirichlet_energy(grid, u) + pot
    }

    pub fn state(&self, u: &[f64]) -> Result<State> {
        self.check(u)?;
        let big_g: Vec<f64> = u.iter().enumerate().map(|(i, &s)| self.big_g_at(i, s)).collect();
        let small_g: Vec<f64> = u.iter().enumerate().map(|(i, &s)| self.g_at(i, s)).collect();
        let k = self.engine.convolve(&big_g)?;
        let w = self.grid().weights();
        let nonlocal = 0.5 * weighted_dot(w, &big_g, &k);
        let energy = EnergyBreakdown::new(0.5 * self.norm_sq(u), nonlocal);
        if !energy.total.is_finite() {
            return Err(ChoquardError::NonFinite("energy evaluation overflowed".into()));
        }
        Ok(State {
            u: u.to_vec(),
            big_g,
            small_g,
            k,
            energy,
        })
    }

    pub fn breakdown(&self, u: &Field) -> Result<EnergyBreakdown> {
        Ok(self.state(u.values())?.energy)
    }

    /// Strong-form residual `-Δu + V u - K(u) g(x, u)` at the nodes.
    pub fn gradient_of(&self, st: &State) -> Vec<f64> {
        let lap = laplacian(self.grid(), &st.u);
        lap.iter()
            .zip(&st.u)
            .zip(self.potential.iter())
            .zip(st.k.iter().zip(&st.small_g))
            .map(|(((l, x), v), (k, g))| -l + v * x - k * g)
            .collect()
    }

    pub fn gradient(&self, u: &Field) -> Result<Field> {
        let st = self.state(u.values())?;
        u.with_values(self.gradient_of(&st))
    }

    /// `Ψ'(u) u = ∫ K(u) g(x, u) u`.
    pub fn psi_prime_dot(&self, st: &State, phi: &[f64]) -> f64 {
        let w = self.grid().weights();
        w.iter()
            .zip(&st.k)
            .zip(st.small_g.iter().zip(phi))
            .map(|((w, k), (g, p))| w * k * g * p)
            .sum()
    }

    /// `Φ''(u) φ` in strong form.
    pub fn hessian_apply(&self, st: &State, phi: &[f64]) -> Result<Vec<f64>> {
        self.check(phi)?;
        let lap = laplacian(self.grid(), phi);
        let gphi: Vec<f64> = st.small_g.iter().zip(phi).map(|(g, p)| g * p).collect();
        let kg = self.engine.convolve(&gphi)?;
        Ok((0..phi.len())
            .map(|i| {
                -lap[i] + self.potential[i] * phi[i]
                    - st.k[i] * self.dg_at(i, st.u[i]) * phi[i]
                    - st.small_g[i] * kg[i]
            })
            .collect())
    }

    /// `Φ(t u)` for `t = t_max · k / steps`, `k = 0..=steps`.
    pub fn ray_scan(&self, u: &Field, t_max: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
        if u.is_zero() {
            return param_err("ray scan needs a nonzero direction");
        }
        if !(t_max > 0.0) || steps == 0 {
            return param_err("ray scan needs t_max > 0 and at least one step");
        }
        (0..=steps)
            .map(|k| {
                let t = t_max * k as f64 / steps as f64;
                Ok((t, self.state(&scale(u.values(), t))?.energy.total))
            })
            .collect()
    }

    /// Maximum of `t ↦ Φ(t u)` over `t > 0`: coarse geometric scan, then
    /// golden-section refinement.
    pub fn ray_max(&self, u: &Field) -> Result<RayMax> {
        if u.is_zero() {
            return param_err("ray maximum needs a nonzero direction");
        }
        let phi = |t: f64| -> Result<f64> { Ok(self.state(&scale(u.values(), t))?.energy.total) };
        // G(x, ts) vanishes for every t > 0 as soon as it vanishes at t = 1
        if self.state(u.values())?.energy.nonlocal <= 0.0 {
            return Ok(RayMax::NoMountainPass);
        }
        // Φ(2^k) on a geometric ladder until it turns down and goes negative
        let mut ts = Vec::new();
        let mut vals = Vec::new();
        let mut k = -40i32;
        loop {
            let t = 2f64.powi(k);
            let v = phi(t)?;
            ts.push(t);
            vals.push(v);
            let n = vals.len();
            if n >= 3 && v < 0.0 && vals[n - 2] > v {
                break;
            }
            k += 1;
            if k > 200 {
                return Ok(RayMax::NoMountainPass);
            }
        }
        let best = (0..vals.len())
            .max_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .unwrap_or(0);
        if vals[best] <= 0.0 {
            return Ok(RayMax::NoMountainPass);
        }
        let lo = ts[best.saturating_sub(1)];
        let hi = ts[(best + 1).min(ts.len() - 1)];
        let (t, value) = golden_max(&phi, lo, hi, 1e-12)?;
        Ok(RayMax::Interior { t, value })
    }

    /// Closed-form ray maximum for the pure power model when `G = F` along
    /// the whole ray (no exterior node is reached by the penalization).
    pub fn homogeneous_ray_max(&self, u: &Field) -> Option<(f64, f64)> {
        let model = self.model();
        if model.kind != NonlinearityKind::Homogeneous {
            return None;
        }
        if let Nonlocal::Penalized(p) = &self.nonlocal {
            if u.values().iter().enumerate().any(|(i, &s)| s > 0.0 && p.is_exterior(i)) {
                return None;
            }
        }
        let st = self.state(u.values()).ok()?;
        let a = 2.0 * st.energy.quad;
        let b = 2.0 * st.energy.nonlocal;
        if !(b > 0.0) {
            return None;
        }
        let sb = model.upper_critical_exponent();
        let t = (a / (sb * b)).powf(1.0 / (2.0 * sb - 2.0));
        Some((t, 0.5 * a * t * t - 0.5 * b * t.powf(2.0 * sb)))
    }
}

pub(crate) fn scale(u: &[f64], t: f64) -> Vec<f64> {
    u.iter().map(|x| t * x).collect()
}

fn golden_max(phi: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = phi(c)?;
    let mut fd = phi(d)?;
    for _ in 0..200 {
        if (b - a) <= rel_tol * (a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = phi(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = phi(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayMax {
    Interior { t: f64, value: f64 },
    /// `Ψ` vanishes along the ray, so `Φ(tu) = t²‖u‖²/2` has no interior maximum.
    NoMountainPass,
}

/// `Φ` with the penalized nonlinearity.
pub fn phi_eval(functional: &Functional, u: &Field) -> Result<EnergyBreakdown> {
    if !matches!(functional.nonlocal(), Nonlocal::Penalized(_)) {
        return param_err("phi_eval needs a penalized functional");
    }
    functional.breakdown(u)
}

/// `I` with the original nonlinearity.
pub fn i_eval(functional: &Functional, u: &Field) -> Result<EnergyBreakdown> {
    if !matches!(functional.nonlocal(), Nonlocal::Original(_)) {
        return param_err("i_eval needs an unpenalized functional");
    }
    functional.breakdown(u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelEstimate {
    /// Smallest ray maximum over the trial family.
    pub d: f64,
    /// Exponent `k` of the minimizing trial profile `(1 - r²)^k`.
    pub best_power: usize,
    /// Ray maximum per trial, in order `k = 1..=trial_count`.
    pub per_trial: Vec<f64>,
}

/// Default unit-ball resolution for [`d_estimate`].
pub const LEVEL_GRID_NODES: usize = 1024;

/// Upper bound for the level `d` on the unit ball with constant potential
/// `m` and Dirichlet data at `r = 1`, from the profiles `(1 - r²)^k`.
pub fn d_estimate(model: &NonlinearityModel, m: f64, trial_count: usize, nodes: usize) -> Result<LevelEstimate> {
    if !(m >= 0.0) || !m.is_finite() {
        return param_err(format!("m must be finite and nonnegative, got {m}"));
    }
    if trial_count == 0 {
        return param_err("d estimate needs at least one trial profile");
    }
    let grid: Arc<Grid> = Arc::new(make_radial_grid(nodes, 1.0)?.into());
    let engine = ConvolutionEngine::radial(grid.clone(), model.mu)?;
    let functional = Functional::original(engine, vec![m; grid.len()], model.clone())?;
    let mut per_trial = Vec::with_capacity(trial_count);
    for k in 1..=trial_count {
        let u = Field::from_profile(grid.clone(), |r| (1.0 - r * r).max(0.0).powi(k as i32))?;
        let value = match functional.homogeneous_ray_max(&u) {
            Some((_, v)) => v,
            None => match functional.ray_max(&u)? {
                RayMax::Interior { value, .. } => value,
                RayMax::NoMountainPass => f64::INFINITY,
            },
        };
        per_trial.push(value);
    }
    let (best, d) = per_trial
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    if !d.is_finite() {
        return param_err("no trial profile has a mountain-pass ray (is f identically zero?)");
    }
    Ok(LevelEstimate {
        d,
        best_power: best + 1,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_radial_grid;
    use crate::penalty::PenalizationConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, l: f64) -> Arc<Grid> {
        Arc::new(make_radial_grid(n, l).unwrap().into())
    }

    fn homog() -> NonlinearityModel {
        NonlinearityModel::homogeneous(1.0).unwrap()
    }

    fn penalized(g: &Arc<Grid>, model: NonlinearityModel, cutoff: f64, ell: f64) -> Functional {
        let pot = g.sample(|r| if r < 1.0 { 2.0 } else { 2.0 * r.powf(-1.5) });
        let pen = PenalizedNonlinearity::new(PenalizationConfig::new(cutoff, ell).unwrap(), model.clone(), g, &pot).unwrap();
        Functional::penalized(ConvolutionEngine::radial(g.clone(), model.mu).unwrap(), pot, pen).unwrap()
    }

    #[test]
    fn zero_field() {
        let g = grid(64, 8.0);
        let f = penalized(&g, homog(), 2.0, 5.0);
        let z = Field::zeros(g);
        let e = phi_eval(&f, &z).unwrap();
        assert_eq!((e.quad, e.nonlocal, e.total), (0.0, 0.0, 0.0));
        assert!(f.gradient(&z).unwrap().is_zero());
        assert!(f.ray_max(&z).is_err());
        assert!(i_eval(&f, &z).is_err());
    }

    #[test]
    fn interior_support_matches_unpenalized() {
        let g = grid(200, 8.0);
        let phi = penalized(&g, homog(), 3.0, 5.0);
        let i = Functional::original(phi.engine().clone(), phi.potential().to_vec(), homog()).unwrap();
        let u = Field::from_profile(g, |r| 1.5 * (1.0 - r * r / 9.0).max(0.0)).unwrap();
        assert_eq!(phi_eval(&phi, &u).unwrap(), i_eval(&i, &u).unwrap());
    }

    #[test]
    fn nonlocal_is_homogeneous_of_degree_ten() {
        let g = grid(300, 10.0);
        let i = Functional::original(ConvolutionEngine::radial(g.clone(), 1.0).unwrap(), vec![1.0; 300], homog()).unwrap();
        let u = Field::from_profile(g, |r| (-r * r).exp()).unwrap();
        let a = i.breakdown(&u).unwrap().nonlocal;
        let b = i.breakdown(&u.scaled(2.0)).unwrap().nonlocal;
        assert!((b / a - 1024.0).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = grid(120, 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let models = [homog(), NonlinearityModel::piecewise(1.5, 6.0, 1.0, 2.5).unwrap()];
        for model in models {
            let phi = penalized(&g, model.clone(), 2.0, 3.0);
            let i = Functional::original(phi.engine().clone(), phi.potential().to_vec(), model).unwrap();
            for f in [&phi, &i] {
                for _ in 0..4 {
                    let (a, w, c) = (rng.random_range(0.5..1.5), rng.random_range(0.5..3.0), rng.random_range(0.0..2.0));
                    let u = Field::from_profile(g.clone(), |r| a * (-((r - c) / w).powi(2)).exp()).unwrap();
                    let p: Vec<f64> = (0..120).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let p = u.with_values(p).unwrap();
                    let grad = f.gradient(&u).unwrap();
                    let exact = grad.dot(&p).unwrap();
                    let eps = 1e-4;
                    let fp = f.breakdown(&u.axpy(eps, &p).unwrap()).unwrap().total;
                    let fm = f.breakdown(&u.axpy(-eps, &p).unwrap()).unwrap().total;
                    let fd = (fp - fm) / (2.0 * eps);
                    assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3), "{fd} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let g = grid(100, 8.0);
        let f = penalized(&g, homog(), 2.0, 3.0);
        let u = Field::from_profile(g.clone(), |r| (-(r * r) / 4.0).exp()).unwrap();
        let p = Field::from_profile(g, |r| (r * 0.7).sin() / (1.0 + r)).unwrap();
        let st = f.state(u.values()).unwrap();
        let hp = f.hessian_apply(&st, p.values()).unwrap();
        let eps = 1e-5;
        let gp = f.gradient(&u.axpy(eps, &p).unwrap()).unwrap();
        let gm = f.gradient(&u.axpy(-eps, &p).unwrap()).unwrap();
        let scale = hp.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for (i, h) in hp.iter().enumerate().take(100) {
            let fd = (gp.values()[i] - gm.values()[i]) / (2.0 * eps);
            assert!((fd - h).abs() < 1e-6 * scale, "{i}: {fd} vs {h}");
        }
    }

    #[test]
    fn harmonic_profile_has_vanishing_gradient() {
        let g = grid(400, 10.0);
        let f = Functional::original(ConvolutionEngine::radial(g.clone(), 1.0).unwrap(), vec![0.0; 400], NonlinearityModel::zero(1.0)).unwrap();
        let u = Field::from_profile(g.clone(), |r| 1.0 / r).unwrap();
        let grad = f.gradient(&u).unwrap();
        for (i, &r) in g.radii().iter().enumerate() {
            if r > 1.0 && r < 9.0 {
                assert!(grad.values()[i].abs() < 1e-3 * r.powi(-3), "{r}");
            }
        }
    }

    #[test]
    fn ray_without_nonlocal_term() {
        let g = grid(64, 8.0);
        let f = penalized(&g, homog(), 2.0, 3.0);
        let u = Field::from_profile(g.clone(), |r| -(-r * r).exp()).unwrap();
        assert_eq!(f.ray_max(&u).unwrap(), RayMax::NoMountainPass);
        let scan = f.ray_scan(&u, 3.0, 3).unwrap();
        let q = f.norm_sq(u.values());
        for (t, v) in scan {
            assert!((v - 0.5 * t * t * q).abs() <= 1e-12 * q.max(v));
        }
    }

    #[test]
    fn golden_section_matches_closed_form() {
        let g = grid(400, 10.0);
        let f = penalized(&g, homog(), 4.0, 3.0);
        let u = Field::from_profile(g, |r| (1.0 - r * r / 9.0).max(0.0).powi(2)).unwrap();
        let (tc, vc) = f.homogeneous_ray_max(&u).unwrap();
        let RayMax::Interior { t, value } = f.ray_max(&u).unwrap() else {
            panic!("expected an interior maximum")
        };
        assert!((t - tc).abs() <= 1e-6 * tc, "{t} vs {tc}");
        assert!((value - vc).abs() <= 1e-9 * vc);
        assert!(value > 0.0);
    }

    #[test]
    fn level_estimate_orderings() {
        let m = homog();
        let d0 = d_estimate(&m, 0.0, 4, 256).unwrap();
        let d1 = d_estimate(&m, 1.0, 4, 256).unwrap();
        assert!(d0.d <= d1.d && d0.d > 0.0);
        let d1_more = d_estimate(&m, 1.0, 8, 256).unwrap();
        assert!(d1_more.d <= d1.d);
        assert!(d_estimate(&NonlinearityModel::zero(1.0), 1.0, 2, 64).is_err());
        assert!(d_estimate(&m, -1.0, 2, 64).is_err());
    }
}
