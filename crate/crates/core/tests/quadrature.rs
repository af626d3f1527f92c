mod common;

use std::f64::consts::PI;

use frac_kansa::quadrature::*;

#[test]
fn moments_are_exact_up_to_degree_2n_minus_1() {
    let moments = common::jacobi_moments();
    for a in [0.0, -0.6, -0.8] {
        for n in 1..=16 {
            let worst = common::worst_moment_error(&moments, n, a);
            assert!(worst <= 1e-12, "n {n} a {a}: {worst}");
        }
    }
}

#[test]
fn weight_sum_matches_mass() {
    let rule = gauss_jacobi(8, -0.6, 0.0).unwrap();
    let sum: f64 = rule.weights.iter().sum();
    assert!((sum - 2f64.powf(0.4) / 0.4).abs() < 1e-12);
}

#[test]
fn nodes_are_sorted_inside_the_interval() {
    for a in [0.0, -0.3, -0.6, -0.8, -0.95] {
        let rule = gauss_jacobi(40, a, 0.0).unwrap();
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes.iter().all(|x| x.abs() < 1.0));
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }
}

#[test]
fn two_point_legendre() {
    let rule = gauss_jacobi(2, 0.0, 0.0).unwrap();
    let r = 1.0 / 3f64.sqrt();
    assert!((rule.nodes[0] + r).abs() < 1e-15 && (rule.nodes[1] - r).abs() < 1e-15);
    assert!(rule.weights.iter().all(|w| (w - 1.0).abs() < 1e-14));
}

#[test]
fn angular_rule_is_spectral_on_periodic_integrands() {
    let rule = angular_rule(32).unwrap();
    assert_eq!(rule.len(), 32);
    // ∫ exp(cos θ) dθ = 2π I0(1)
    let want = 2.0 * PI * 1.266_065_877_752_008_4;
    assert!((rule.integrate(|t| t.cos().exp()) - want).abs() < 1e-13);
    assert!((rule.integrate(|t| (3.0 * t).sin().powi(2)) - PI).abs() < 1e-13);
}
