//! Nonlinearities `f` and their primitives `F(s) = ∫_0^s f`.
//!
//! All models vanish for `s <= 0`. Two families are provided: the pure power
//! `f(s) = s^{(4-μ)/(N-2) + 1}` and a piecewise model that behaves like
//! `s^{q-1}` near zero and `s^{p-1}` at infinity, joined on `[1, 2]` by the
//! cubic Hermite interpolant of the two branches.

use crate::error::{param_err, Result};

/// Ambient dimension of all numerics.
pub const DIM: f64 = 3.0;

/// Critical Sobolev exponent `2N/(N-2)`.
pub const SOBOLEV_CRITICAL: f64 = 2.0 * DIM / (DIM - 2.0);

/// Pointwise evaluation of a nonlinearity and its primitive.
pub trait Nonlinearity {
    fn f(&self, s: f64) -> f64;
    #[allow(non_snake_case)]
    fn F(&self, s: f64) -> f64;
}

/// Cubic `a + b x + c x² + d x³` in `x = t - 1` on `[1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicBridge {
    coeffs: [f64; 4],
}

impl CubicBridge {
    /// Hermite interpolant of `(y0, m0)` at `t = 1` and `(y1, m1)` at `t = 2`.
    pub fn hermite(y0: f64, m0: f64, y1: f64, m1: f64) -> Self {
        let c = 3.0 * (y1 - y0) - 2.0 * m0 - m1;
        let d = 2.0 * (y0 - y1) + m0 + m1;
        Self {
            coeffs: [y0, m0, c, d],
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = t - 1.0;
        let [a, b, c, d] = self.coeffs;
        a + x * (b + x * (c + x * d))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let x = t - 1.0;
        let [_, b, c, d] = self.coeffs;
        b + x * (2.0 * c + x * 3.0 * d)
    }

    /// `∫_1^t` of the cubic.
    pub fn integral(&self, t: f64) -> f64 {
        let x = t - 1.0;
        let [a, b, c, d] = self.coeffs;
        x * (a + x * (b / 2.0 + x * (c / 3.0 + x * d / 4.0)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind {
    /// `f(s) = s^{(4-μ)/(N-2)} s` for `s >= 0`.
    Homogeneous,
    /// `s^{q-1}` on `[0,1]`, Hermite bridge on `[1,2]`, `s^{p-1}` beyond.
    PiecewiseBL { p: f64, q: f64, bridge: CubicBridge },
    /// `f ≡ 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearityModel {
    pub kind: NonlinearityKind,
    /// Riesz exponent `μ` of the convolution the model is paired with.
    pub mu: f64,
    /// Ambrosetti–Rabinowitz exponent, `2 < θ < 4`.
    pub theta: f64,
    /// Growth constant.
    pub c0: f64,
}

impl NonlinearityModel {
    /// Pure power model with `θ = 3` and the exact growth constant `c₀ = 1`.
    pub fn homogeneous(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 4.0 && mu < DIM) {
            return param_err(format!("homogeneous model needs 0 < mu < min(N, 4), got {mu}"));
        }
        Ok(Self {
            kind: NonlinearityKind::Homogeneous,
            mu,
            theta: 3.0,
            c0: 1.0,
        })
    }

    /// Piecewise model; `c₀` is calibrated from dense samples on `[0, 10]`.
    pub fn piecewise(p: f64, q: f64, mu: f64, theta: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < DIM) {
            return param_err(format!("mu must lie in (0, N), got {mu}"));
        }
        let p_max = 2.0 * (DIM - mu) / (DIM - 2.0);
        if !(p > 1.0 && p < p_max) {
            return param_err(format!("p must lie in (1, {p_max}), got {p}"));
        }
        if !(q >= SOBOLEV_CRITICAL) {
            return param_err(format!("q must be >= {SOBOLEV_CRITICAL}, got {q}"));
        }
        check_theta(theta)?;
        let bridge = CubicBridge::hermite(1.0, q - 1.0, 2f64.powf(p - 1.0), (p - 1.0) * 2f64.powf(p - 2.0));
        let mut model = Self {
            kind: NonlinearityKind::PiecewiseBL { p, q, bridge },
            mu,
            theta,
            c0: 1.0,
        };
        if (0..=1000).any(|i| bridge.value(1.0 + i as f64 / 1000.0) <= 0.0) {
            return param_err("cubic bridge is not positive on [1, 2]");
        }
        let samples: Vec<f64> = (1..=10_000).map(|i| i as f64 * 1e-3).collect();
        model.c0 = model.calibrate_c0(&samples);
        Ok(model)
    }

    pub fn zero(mu: f64) -> Self {
        Self {
            kind: NonlinearityKind::Zero,
            mu,
            theta: 3.0,
            c0: 1.0,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        self.theta = theta;
        Ok(self)
    }

    pub fn with_c0(mut self, c0: f64) -> Result<Self> {
        if !(c0 > 0.0) {
            return param_err(format!("c0 must be positive, got {c0}"));
        }
        self.c0 = c0;
        Ok(self)
    }

    /// `(4-μ)/(N-2)`: the power of `f(s)/s` in the homogeneous model.
    pub fn homogeneous_ratio_power(&self) -> f64 {
        (4.0 - self.mu) / (DIM - 2.0)
    }

    /// `(2N-μ)/(N-2)`: degree of `F` in the homogeneous model.
    pub fn upper_critical_exponent(&self) -> f64 {
        (2.0 * DIM - self.mu) / (DIM - 2.0)
    }

    pub fn df(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            NonlinearityKind::Homogeneous => {
                let k = self.homogeneous_ratio_power();
                (k + 1.0) * s.powf(k)
            }
            NonlinearityKind::PiecewiseBL { p, q, bridge } => {
                if s <= 1.0 {
                    (q - 1.0) * s.powf(q - 2.0)
                } else if s <= 2.0 {
                    bridge.derivative(s)
                } else {
                    (p - 1.0) * s.powf(p - 2.0)
                }
            }
            NonlinearityKind::Zero => 0.0,
        }
    }

    /// Positive points `τ` where `f(τ) = level · τ`, sorted. Tangential
    /// touches are not reported.
    pub fn ratio_crossings(&self, level: f64) -> Vec<f64> {
        if !(level > 0.0) {
            return Vec::new();
        }
        match &self.kind {
            NonlinearityKind::Zero => Vec::new(),
            NonlinearityKind::Homogeneous => {
                vec![level.powf(1.0 / self.homogeneous_ratio_power())]
            }
            NonlinearityKind::PiecewiseBL { p, q, bridge } => {
                let mut out = Vec::new();
                let t = level.powf(1.0 / (q - 2.0));
                if t < 1.0 {
                    out.push(t);
                }
                let excess = |t: f64| bridge.value(t) - level * t;
                let pieces = 64;
                for j in 0..pieces {
                    let (mut a, mut b) = (1.0 + j as f64 / pieces as f64, 1.0 + (j + 1) as f64 / pieces as f64);
                    let (mut fa, fb) = (excess(a), excess(b));
                    if fa == 0.0 && j == 0 {
                        // t = 1 already handled by the first branch boundary
                        continue;
                    }
                    if fa * fb < 0.0 || (fb == 0.0 && fa != 0.0) {
                        for _ in 0..200 {
                            let m = 0.5 * (a + b);
                            let fm = excess(m);
                            if fa * fm <= 0.0 {
                                b = m;
                            } else {
                                a = m;
                                fa = fm;
                            }
                            if b - a <= 1e-15 {
                                break;
                            }
                        }
                        out.push(0.5 * (a + b));
                    }
                }
                if (p - 2.0).abs() > 1e-14 {
                    let t = level.powf(1.0 / (p - 2.0));
                    if t > 2.0 {
                        out.push(t);
                    }
                }
                out.sort_by(f64::total_cmp);
                out.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
                out
            }
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 2.0 && theta < 4.0) {
        return param_err(format!("theta must lie in (2, 4), got {theta}"));
    }
    Ok(())
}

impl Nonlinearity for NonlinearityModel {
    fn f(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            NonlinearityKind::Homogeneous => s.powf(self.homogeneous_ratio_power() + 1.0),
            NonlinearityKind::PiecewiseBL { p, q, bridge } => {
                if s <= 1.0 {
                    s.powf(q - 1.0)
                } else if s <= 2.0 {
                    bridge.value(s)
                } else {
                    s.powf(p - 1.0)
                }
            }
            NonlinearityKind::Zero => 0.0,
        }
    }

    fn F(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            NonlinearityKind::Homogeneous => {
                let e = self.upper_critical_exponent();
                s.powf(e) / e
            }
            NonlinearityKind::PiecewiseBL { p, q, bridge } => {
                if s <= 1.0 {
                    s.powf(*q) / q
                } else if s <= 2.0 {
                    1.0 / q + bridge.integral(s)
                } else {
                    1.0 / q + bridge.integral(2.0) + (s.powf(*p) - 2f64.powf(*p)) / p
                }
            }
            NonlinearityKind::Zero => 0.0,
        }
    }
}

/// Smallest constant for one growth bound `|s f(s)| <= c |s|^e`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthBound {
    pub exponent: f64,
    pub minimal_constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub bounds: Vec<GrowthBound>,
    pub c0: f64,
    pub pass: bool,
}

impl NonlinearityModel {
    /// Exponents of the growth bounds that apply to this model. The
    /// piecewise family uses all four (`2*`, `q`, `(2N-μ)/(N-2)`, `p`); the
    /// pure power only its own degree.
    pub fn growth_exponents(&self) -> Vec<f64> {
        match &self.kind {
            NonlinearityKind::PiecewiseBL { p, q, .. } => {
                vec![SOBOLEV_CRITICAL, *q, self.upper_critical_exponent(), *p]
            }
            _ => vec![self.upper_critical_exponent()],
        }
    }

    /// Largest sampled growth ratio plus a 10% margin.
    pub fn calibrate_c0(&self, samples: &[f64]) -> f64 {
        let report = check_growth(self, samples);
        let worst = report
            .bounds
            .iter()
            .map(|b| b.minimal_constant)
            .fold(0.0, f64::max);
        if worst > 0.0 {
            1.1 * worst
        } else {
            1.0
        }
    }
}

pub fn check_growth(model: &NonlinearityModel, samples: &[f64]) -> GrowthReport {
    let bounds: Vec<GrowthBound> = model
        .growth_exponents()
        .into_iter()
        .map(|e| {
            let minimal_constant = samples
                .iter()
                .filter(|s| **s != 0.0)
                .map(|&s| (s * model.f(s)).abs() / s.abs().powf(e))
                .fold(0.0, f64::max);
            GrowthBound {
                exponent: e,
                minimal_constant,
            }
        })
        .collect();
    let pass = bounds
        .iter()
        .all(|b| b.minimal_constant <= model.c0 * (1.0 + 1e-12));
    GrowthReport {
        bounds,
        c0: model.c0,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArReport {
    pub theta: f64,
    /// Smallest sampled `2 f(s) s / F(s)` (infinite when no sample has `F > 0`).
    pub min_ratio: f64,
    pub violations: Vec<f64>,
    pub pass: bool,
}

/// Pointwise Ambrosetti–Rabinowitz check `0 < θ F(s) <= 2 f(s) s`.
pub fn check_ar_pointwise(model: &impl Nonlinearity, theta: f64, samples: &[f64]) -> ArReport {
    let mut min_ratio = f64::INFINITY;
    let mut violations = Vec::new();
    for &s in samples {
        let big_f = model.F(s);
        let lhs = theta * big_f;
        let rhs = 2.0 * model.f(s) * s;
        if big_f > 0.0 {
            min_ratio = min_ratio.min(rhs / big_f);
        }
        if !(big_f > 0.0) || lhs > rhs {
            violations.push(s);
        }
    }
    ArReport {
        theta,
        min_ratio,
        pass: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use proptest::prelude::*;

    fn bl() -> NonlinearityModel {
        NonlinearityModel::piecewise(2.2, 6.0, 1.0, 3.0).unwrap()
    }

    #[test]
    fn homogeneous_values() {
        let m = NonlinearityModel::homogeneous(1.0).unwrap();
        assert!((m.f(2.0) - 16.0).abs() < 1e-12);
        assert!((m.F(2.0) - 6.4).abs() < 1e-12);
        assert_eq!(m.f(-1.0), 0.0);
        assert_eq!(m.F(-1.0), 0.0);
    }

    #[test]
    fn piecewise_is_c1_at_joins() {
        let m = bl();
        let NonlinearityKind::PiecewiseBL { bridge, .. } = &m.kind else {
            unreachable!()
        };
        let eps = 1e-9;
        assert!((m.f(1.0 - eps) - 1.0).abs() < 1e-7);
        assert!((bridge.value(1.0) - 1.0).abs() < 1e-15);
        assert!((m.f(1.0 + eps) - 1.0).abs() < 1e-7);
        // derivative matching via one-sided differences
        let d = 1e-6;
        for t in [1.0, 2.0] {
            let left = (m.f(t) - m.f(t - d)) / d;
            let right = (m.f(t + d) - m.f(t)) / d;
            assert!((left - right).abs() < 1e-4, "t={t}: {left} vs {right}");
        }
        assert!((bridge.value(2.0) - 2f64.powf(1.2)).abs() < 1e-14);
    }

    #[test]
    fn primitive_matches_quadrature() {
        for m in [NonlinearityModel::homogeneous(1.0).unwrap(), NonlinearityModel::homogeneous(1.7).unwrap(), bl()] {
            for i in 0..=40 {
                let s = -5.0 + 0.25 * i as f64;
                let exact = if s <= 0.0 {
                    0.0
                } else {
                    quad::integrate_pieces(
                        |t| m.f(t),
                        &[0.0, s.min(1.0), s.min(2.0).max(s.min(1.0)), s],
                        1e-15,
                        1e-13,
                    )
                };
                let got = m.F(s);
                assert!(
                    (got - exact).abs() <= 1e-8 * exact.abs().max(1e-300),
                    "s={s}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn homogeneous_growth_constant_is_one() {
        let m = NonlinearityModel::homogeneous(1.0).unwrap();
        let samples: Vec<f64> = (0..=100).map(|i| 0.1 * i as f64).collect();
        let rep = check_growth(&m, &samples);
        assert_eq!(rep.bounds.len(), 1);
        assert_eq!(rep.bounds[0].exponent, 5.0);
        assert!((rep.bounds[0].minimal_constant - 1.0).abs() < 1e-12);
        assert!(rep.pass);

        let rep0 = check_growth(&m, &[0.0]);
        assert_eq!(rep0.bounds[0].minimal_constant, 0.0);
        assert!(rep0.pass);
    }

    #[test]
    fn piecewise_growth_constant_is_stable() {
        let m = bl();
        let coarse: Vec<f64> = (1..=1_000).map(|i| i as f64 * 1e-2).collect();
        let fine: Vec<f64> = (1..=100_000).map(|i| i as f64 * 1e-4).collect();
        let a = check_growth(&m, &coarse);
        let b = check_growth(&m, &fine);
        for (x, y) in a.bounds.iter().zip(&b.bounds) {
            assert!(x.minimal_constant.is_finite());
            assert!((x.minimal_constant - y.minimal_constant).abs() <= 1e-3 * y.minimal_constant);
        }
        assert!(b.pass, "{b:?}");
        assert_eq!(a.bounds.len(), 4);
    }

    #[test]
    fn ar_ratio_of_power_is_ten() {
        let m = NonlinearityModel::homogeneous(1.0).unwrap();
        let samples: Vec<f64> = (1..=50).map(|i| 0.2 * i as f64).collect();
        for theta in [2.01, 3.0, 3.99] {
            let rep = check_ar_pointwise(&m, theta, &samples);
            assert!(rep.pass);
            assert!((rep.min_ratio - 10.0).abs() < 1e-10);
        }
        let tiny = check_ar_pointwise(&m, 3.0, &[1e-60]);
        assert!(tiny.pass);
    }

    struct Linear;
    impl Nonlinearity for Linear {
        fn f(&self, s: f64) -> f64 {
            if s > 0.0 { 1.0 } else { 0.0 }
        }
        #[allow(non_snake_case)]
        fn F(&self, s: f64) -> f64 {
            s.max(0.0)
        }
    }

    #[test]
    fn ar_fails_for_constant_f() {
        let rep = check_ar_pointwise(&Linear, 3.0, &[0.5, 1.0, 10.0]);
        assert!(!rep.pass);
        assert_eq!(rep.violations.len(), 3);
        assert!((rep.min_ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_s_limits_vanish() {
        let m = bl();
        let e = m.upper_critical_exponent();
        let mut prev = f64::INFINITY;
        for k in 1..8 {
            let s = 10f64.powi(-k);
            let ratio = s * m.f(s) / s.powf(e);
            assert!(ratio < prev);
            prev = ratio;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn crossings_solve_ratio_equation() {
        let m = bl();
        for level in [1e-3, 0.5, 1.2, 1.25, 5.0] {
            for t in m.ratio_crossings(level) {
                assert!((m.f(t) / t - level).abs() < 1e-9, "level {level}, t {t}");
            }
        }
        let h = NonlinearityModel::homogeneous(1.0).unwrap();
        let c = h.ratio_crossings(8.0);
        assert_eq!(c.len(), 1);
        assert!((c[0] - 2.0).abs() < 1e-14);
        assert!(h.ratio_crossings(0.0).is_empty());
    }

    #[test]
    fn parameter_windows() {
        assert!(NonlinearityModel::piecewise(4.0, 6.0, 1.0, 3.0).is_err());
        assert!(NonlinearityModel::piecewise(1.5, 6.0, 1.0, 3.0).is_ok());
        assert!(NonlinearityModel::piecewise(2.2, 5.0, 1.0, 3.0).is_err());
        assert!(NonlinearityModel::piecewise(2.2, 6.0, 1.0, 4.5).is_err());
        assert!(NonlinearityModel::homogeneous(0.0).is_err());
        assert!(NonlinearityModel::homogeneous(3.0).is_err());
    }

    proptest! {
        #[test]
        fn f_is_nonnegative(s in -10.0f64..10.0, mu in 0.5f64..2.4) {
            let m = NonlinearityModel::homogeneous(mu).unwrap();
            prop_assert!(m.f(s) >= 0.0);
            prop_assert!(m.F(s) >= 0.0);
            prop_assert!(bl().f(s) >= 0.0);
        }
    }
}
