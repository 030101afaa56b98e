//! Independent reference computations checked against the library.

use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use statrs::function::erf::erf;

use choquard::field::Field;
use choquard::grid::{make_radial_grid, Grid};
use choquard::nonlinearity::{Nonlinearity, NonlinearityModel};
use choquard::penalty::{ell0_from_samples, g_eval, G_eval, PenalizationConfig};
use choquard::potential::PotentialModel;
use choquard::riesz::{radial_kernel, riesz_convolve, symmetric_hls_exponent, ConvolutionEngine};
use choquard::verify::{threshold_verdict, threshold_w0, ThresholdKind};

fn radial(n: usize, l: f64) -> Arc<Grid> {
    Arc::new(make_radial_grid(n, l).unwrap().into())
}

/// `2π ∫_{-1}^{1} (r² + s² - 2rst)^{-μ/2} dt` by composite Simpson.
fn angular_average(r: f64, s: f64, mu: f64) -> f64 {
    let m = 20_000;
    let h = 2.0 / m as f64;
    let f = |t: f64| (r * r + s * s - 2.0 * r * s * t).powf(-mu / 2.0);
    let mut acc = f(-1.0) + f(1.0);
    for k in 1..m {
        let t = -1.0 + k as f64 * h;
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    2.0 * PI * acc * h / 3.0
}

#[test]
fn radial_kernel_matches_angular_simpson() {
    for mu in [0.5, 1.0, 1.5, 2.0, 2.4] {
        for (r, s) in [(2.0, 1.0), (0.3, 1.7), (5.0, 4.0)] {
            assert_relative_eq!(radial_kernel(r, s, mu), angular_average(r, s, mu), max_relative = 1e-9);
        }
    }
    assert_eq!(radial_kernel(2.0, 1.0, 1.0), 2.0 * PI);
}

#[test]
fn gaussian_newtonian_potential() {
    let g = radial(2048, 40.0);
    let eng = ConvolutionEngine::radial(g.clone(), 1.0).unwrap();
    let rho = g.sample(|r| (-r * r).exp());
    for r in [0.25, 0.5, 1.0, 2.0, 5.0] {
        let exact = PI.powf(1.5) * erf(r) / r;
        assert_relative_eq!(eng.potential_at(r, &rho).unwrap(), exact, max_relative = 1e-4);
    }
}

#[test]
fn k_of_gaussian_matches_brute_force() {
    let g = radial(300, 12.0);
    let model = NonlinearityModel::homogeneous(1.0).unwrap();
    let u = Field::from_profile(g.clone(), |r| 1.3 * (-r * r / 2.0).exp()).unwrap();
    let rho = u.map(|s| model.F(s)).unwrap();
    let fast = riesz_convolve(&ConvolutionEngine::radial(g.clone(), 1.0).unwrap(), &rho).unwrap();
    let slow = riesz_convolve(&ConvolutionEngine::brute_force(g, 1.0).unwrap(), &rho).unwrap();
    let scale = slow.sup_norm();
    for (a, b) in fast.values().iter().zip(slow.values()) {
        assert!((a - b).abs() <= 1e-6 * scale);
    }
}

#[test]
fn homogeneous_crossover_and_capped_primitive() {
    let model = NonlinearityModel::homogeneous(1.0).unwrap();
    let cfg = PenalizationConfig::new(2.0, 3.0).unwrap();
    let (v, r) = (0.8, 5.0);
    let s_star = (v / 3.0f64).powf(1.0 / 3.0);
    for s in [0.2 * s_star, 0.9 * s_star, 1.5 * s_star, 4.0 * s_star] {
        let (g, big_g) = if s <= s_star {
            (s.powi(4), s.powi(5) / 5.0)
        } else {
            (v * s / 3.0, s_star.powi(5) / 5.0 + v * (s * s - s_star * s_star) / 6.0)
        };
        assert_relative_eq!(g_eval(&cfg, &model, v, r, s), g, max_relative = 1e-12);
        assert_relative_eq!(G_eval(&cfg, &model, v, r, s), big_g, max_relative = 1e-12);
    }
    assert_eq!(g_eval(&cfg, &model, v, 1.0, 2.0), 16.0);
}

#[test]
fn frozen_constants() {
    assert_relative_eq!(symmetric_hls_exponent(1.0), 1.2, max_relative = 1e-15);
    let g = radial(64, 8.0);
    let eng = ConvolutionEngine::radial(g.clone(), 1.0).unwrap();
    let model = NonlinearityModel::homogeneous(1.0).unwrap();
    // F(u) = 1/w_0 on the first cell: a uniform ball of radius h, whose
    // potential at r = h/2 is 2π(h² - r²/3)/(π h³) = 11/(6h)
    let w0 = g.weights()[0];
    let h = g.spacing();
    let s = (5.0 / w0).powf(0.2);
    let u = Field::new(g.clone(), (0..64).map(|i| if i == 0 { s } else { 0.0 }).collect()).unwrap();
    let sup = choquard::penalty::k_op_unpenalized(&eng, &model, &u).unwrap().1;
    let est = ell0_from_samples(&eng, &model, &[u], 0.1).unwrap();
    assert_relative_eq!(est.ell0, 2.2 * sup, max_relative = 1e-15);
    assert_relative_eq!(sup, 11.0 / (6.0 * h), max_relative = 1e-12);
    // 𝒲₀ = ℓ₀ (CA)³ at μ = 1
    assert_relative_eq!(threshold_w0(2.0, 0.5, 4.0, 1.0).unwrap(), 16.0, max_relative = 1e-15);
}

#[test]
fn example2_inverts_power_law() {
    let e2 = PotentialModel::example2(0.5, 1.0).unwrap();
    let w0 = 5.0;
    let ladder: Vec<f64> = (1..4000).map(|k| 1.0 + 0.01 * k as f64).collect();
    let v = threshold_verdict(&e2, ThresholdKind::W0, w0, 1.0, &ladder).unwrap();
    let r = v.witness.unwrap();
    assert!(r > 25.0 && r <= 25.0 + 0.01 + 1e-9, "{r}");
}
