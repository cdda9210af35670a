mod common;

use beamalign::analysis::{
    chi2_ratio_cdf, doubly_noncentral_f_cdf, marcum_q1, noncentral_chi2_cdf, order_stat_pdf,
};
use beamalign::quad::integrate;
use common::{mc_f_cdf, mc_marcum_q1, mc_ncx2_cdf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SAMPLES: u64 = 1_000_000;

#[test]
fn marcum_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for &(a, b) in &[(1.0, 1.0), (0.5, 2.0), (2.5, 1.5), (3.0, 3.5)] {
        let q = marcum_q1(a, b).unwrap();
        let mc = mc_marcum_q1(&mut rng, a, b, SAMPLES);
        assert!(mc.z(q, SAMPLES) < 4.0, "Q1({a}, {b}) = {q}, MC {mc:?}");
    }
}

#[test]
fn marcum_edges() {
    assert_eq!(marcum_q1(1.7, 0.0).unwrap(), 1.0);
    for &b in &[0.1, 1.0, 2.5, 6.0] {
        assert!((marcum_q1(0.0, b).unwrap() - (-b * b / 2.0).exp()).abs() < 1e-14);
    }
    assert!(marcum_q1(-1.0, 1.0).is_err());
}

#[test]
fn chi2_cdf_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for &(x, lambda) in &[(4.0, 4.0), (1.0, 0.5), (12.0, 9.0), (30.0, 20.0)] {
        let c = noncentral_chi2_cdf(x, lambda).unwrap();
        let mc = mc_ncx2_cdf(&mut rng, x, lambda, SAMPLES);
        assert!(mc.z(c, SAMPLES) < 4.0, "F({x}; {lambda}) = {c}, MC {mc:?}");
    }
}

#[test]
fn chi2_cdf_edges() {
    assert!((noncentral_chi2_cdf(2.0, 0.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
    assert_eq!(noncentral_chi2_cdf(0.0, 3.0).unwrap(), 0.0);
    assert_eq!(noncentral_chi2_cdf(-1.0, 3.0).unwrap(), 0.0);
}

#[test]
fn f_cdf_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for &(z, e1, e2) in &[(1.0, 5.0, 2.0), (0.3, 1.0, 8.0), (2.5, 10.0, 0.0), (0.8, 0.0, 3.0)] {
        let f = doubly_noncentral_f_cdf(z, e1, e2).unwrap();
        let mc = mc_f_cdf(&mut rng, z, e1, e2, SAMPLES);
        assert!(mc.z(f, SAMPLES) < 4.0, "F({z}; {e1}, {e2}) = {f}, MC {mc:?}");
    }
}

#[test]
fn f_cdf_central_case() {
    for &z in &[0.0, 0.1, 1.0, 3.0, 50.0] {
        assert!((doubly_noncentral_f_cdf(z, 0.0, 0.0).unwrap() - z / (1.0 + z)).abs() < 1e-10);
    }
    assert!(doubly_noncentral_f_cdf(1.0, -1.0, 0.0).is_err());
}

#[test]
fn ratio_route_agrees_with_mixture() {
    for &(s, lx, ly) in &[(0.2, 30.0, 4.0), (0.5, 3.0, 3.0), (0.05, 80.0, 40.0), (1.5, 0.0, 12.0)] {
        let fast = chi2_ratio_cdf(s, lx, ly);
        let slow = doubly_noncentral_f_cdf(s, lx, ly).unwrap();
        assert!((fast - slow).abs() < 1e-9, "{s} {lx} {ly}: {fast} vs {slow}");
    }
}

#[test]
fn order_stat_normalization_and_mean() {
    for &(k, n) in &[(1usize, 4usize), (3, 8), (117, 128)] {
        let mass = integrate(|x| order_stat_pdf(x, k, n).unwrap(), 0.0, 200.0, 1e-12, 1e-300, 32, 4000).value;
        assert!((mass - 1.0).abs() < 1e-8, "({k}, {n}) mass {mass}");
        let mean = integrate(|x| x * order_stat_pdf(x, k, n).unwrap(), 0.0, 200.0, 1e-12, 1e-300, 32, 4000).value;
        let spacings: f64 = (1..=k).map(|j| 2.0 / (n - j) as f64).sum();
        assert!((mean - spacings).abs() < 1e-6, "({k}, {n}) mean {mean} vs {spacings}");
    }
}

#[test]
fn order_stat_single_sample() {
    for &x in &[0.0, 0.5, 3.0, 10.0] {
        assert!((order_stat_pdf(x, 1, 2).unwrap() - 0.5 * (-x / 2.0f64).exp()).abs() < 1e-14);
    }
    assert!(order_stat_pdf(1.0, 0, 4).is_err());
    assert!(order_stat_pdf(1.0, 4, 4).is_err());
}
