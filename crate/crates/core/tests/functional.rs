use std::f64::consts::PI;
use std::sync::Arc;

use meanfield::blowup::{bubble_distance, rescale_profile};
use meanfield::discretization::{triangulate, Field};
use meanfield::functional::{continuation, eval_I, mt_bound_check, FunctionalParams, MeshPolicy};
use meanfield::suite::{directional_fd_error, random_field, suite_domains};
use meanfield::Domain;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Radial solution on the unit disk: `u = 2 ln((1 + d) / (1 + d r^2))`, `d = lambda / (8 pi - lambda)`.
fn disk_delta(lambda: f64) -> f64 {
    lambda / (8.0 * PI - lambda)
}

/// `I_lambda` of the radial solution by direct radial quadrature.
fn disk_energy_quadrature(lambda: f64) -> f64 {
    let d = disk_delta(lambda);
    let n = 20000;
    let (mut grad, mut mass) = (0.0, 0.0);
    for k in 0..n {
        let r = (k as f64 + 0.5) / n as f64;
        let du = 4.0 * d * r / (1.0 + d * r * r);
        grad += du * du * 2.0 * PI * r / n as f64;
        mass += (1.0 + d) / (1.0 + d * r * r) * (1.0 + d) / (1.0 + d * r * r) * 2.0 * PI * r / n as f64;
    }
    // e^u = ((1 + d) / (1 + d r^2))^2
    grad / (2.0 * lambda) - (mass / PI).ln()
}

#[test]
fn disk_continuation_tracks_radial_solutions() {
    let d = Domain::disk(1.0).unwrap();
    let schedule = [2.0 * PI, 4.0 * PI, 6.0 * PI];
    let trace = continuation(&d, &schedule, 0.0, &MeshPolicy::default()).unwrap();
    assert!(trace.truncated.is_none());
    for s in &trace.steps {
        let exact = disk_energy_quadrature(s.result.lambda);
        assert!((s.result.energy - exact).abs() < 2e-3, "lambda {}: {} vs {exact}", s.result.lambda, s.result.energy);
        let peak = 2.0 * (1.0 + disk_delta(s.result.lambda)).ln();
        assert!((s.result.max_value - peak).abs() < 1e-2 * peak);
        assert!((s.alpha - (1.0 + disk_delta(s.result.lambda)).sqrt()).abs() < 1e-2);
    }
}

#[test]
fn disk_profile_at_six_pi_is_far_from_the_bubble() {
    let d = Domain::disk(1.0).unwrap();
    let trace = continuation(&d, &[4.0 * PI, 6.0 * PI], 0.0, &MeshPolicy::default()).unwrap();
    let last = &trace.steps.last().unwrap().result;
    let window = 1.9;
    let prof = rescale_profile(last, window).unwrap();
    // phi = -2 ln(1 + (lambda / 8 pi) s^2) against -2 ln(1 + s^2), largest at s = window.
    let oracle = 2.0 * ((1.0 + window * window) / (1.0 + 0.75 * window * window)).ln();
    let dist = bubble_distance(&prof);
    assert!((dist - oracle).abs() < 1e-2, "{dist} vs {oracle}");
    assert!(rescale_profile(last, 2.2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn moser_trudinger_bound_holds(seed in 0u64..10_000, j in 0usize..6) {
        let suite = suite_domains().unwrap();
        let mesh = Arc::new(triangulate(&suite[j].domain, 0.08).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&suite[j].domain, &mesh, &mut rng);
        prop_assert!(mt_bound_check(&f) >= -1e-3);
    }

    #[test]
    fn gradient_matches_central_differences(seed in 0u64..10_000, lambda in 1.0..25.0f64, eps in 0.0..0.5f64) {
        let d = Domain::disk(1.0).unwrap();
        let mesh = Arc::new(triangulate(&d, 0.1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&d, &mesh, &mut rng);
        let dir = random_field(&d, &mesh, &mut rng);
        let p = FunctionalParams::new(lambda, eps).unwrap();
        prop_assert!(directional_fd_error(&f, &dir, &p).unwrap() <= 1e-6);
    }

    #[test]
    fn dirichlet_part_is_quadratic(seed in 0u64..10_000, lambda in 1.0..25.0f64, t in 0.1..3.0f64) {
        // With epsilon -> 1 only the Dirichlet term survives.
        let d = Domain::disk(1.0).unwrap();
        let mesh = Arc::new(triangulate(&d, 0.1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&d, &mesh, &mut rng);
        let p = FunctionalParams::new(lambda, 1.0 - 1e-12).unwrap();
        let base = eval_I(&f, &p).unwrap();
        let scaled = Field::new(Arc::clone(&mesh), f.values().iter().map(|v| t * v).collect()).unwrap();
        let expected = t * t * base;
        prop_assert!((eval_I(&scaled, &p).unwrap() - expected).abs() < 1e-6 * expected.abs().max(1.0));
    }
}
