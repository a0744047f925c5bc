use std::f64::consts::{PI, TAU};

use meanfield::greens::{robin_disk, strip_gamma, ChargeSystem, GreenEvaluator};
use meanfield::{Domain, DomainKind, Point};
use proptest::prelude::*;

/// Robin function of the strip `0 < y < d` from the conformal map onto the half plane.
fn strip_robin_oracle(y: f64, d: f64) -> f64 {
    ((2.0 * d / PI) * (PI * y / d).sin()).ln() / (2.0 * PI)
}

/// Green's function of the rectangle `(0, a) x (0, b)` from the sine series
/// in `x`, each mode solved in closed form in `y`.
fn rectangle_green_series(a: f64, b: f64, x: Point, y: Point, modes: usize) -> f64 {
    let mut g = 0.0;
    for n in 1..=modes {
        let k = n as f64 * PI / a;
        let (lo, hi) = if x.y < y.y { (x.y, y.y) } else { (y.y, x.y) };
        // sinh(k lo) sinh(k (b - hi)) / (k sinh(k b)) without overflow.
        let g_y = (k * (lo - hi)).exp() * (-(-2.0 * k * lo).exp_m1()) * (-(-2.0 * k * (b - hi)).exp_m1())
            / (2.0 * k * (-(-2.0 * k * b).exp_m1()));
        g += (2.0 / a) * (k * x.x).sin() * (k * y.x).sin() * g_y;
    }
    g
}

#[test]
fn strip_closed_form_matches_conformal_map() {
    for d in [0.5, 0.8, 1.0, 2.0] {
        assert!((strip_gamma(d) - strip_robin_oracle(d / 2.0, d)).abs() < 1e-14);
    }
}

#[test]
fn rectangle_green_matches_sine_series() {
    let (a, b) = (3.0, 1.0);
    let dom = Domain::new(DomainKind::Rectangle { a, b }, Point::new(a / 2.0, b / 2.0), 0.0).unwrap();
    let pole = Point::new(1.2, 0.4);
    let g = GreenEvaluator::for_domain(&dom, pole, 256).unwrap();
    for p in [Point::new(1.7, 0.55), Point::new(0.6, 0.3), Point::new(2.5, 0.8)] {
        let series = rectangle_green_series(a, b, pole, p, 4000);
        assert!((g.value(p).unwrap() - series).abs() < 1e-6, "{p:?} {} {series}", g.value(p).unwrap());
        let regular = series + (p - pole).norm().ln() / (2.0 * PI);
        assert!((g.regular(p) - regular).abs() < 1e-6);
    }
}

#[test]
fn long_rectangle_midline_approaches_strip() {
    let d = 1.0;
    let dom = Domain::rectangle(6.0, d).unwrap();
    let sys = ChargeSystem::new(&dom, 256).unwrap();
    let est = sys.robin(Point::origin()).unwrap();
    assert!((est.gamma - strip_gamma(d)).abs() < 1e-4, "{} vs {}", est.gamma, strip_gamma(d));
    let off = sys.robin(Point::new(0.0, 0.25)).unwrap();
    assert!((off.gamma - strip_robin_oracle(0.75, d)).abs() < 1e-4);
}

#[test]
fn shifted_disk_matches_closed_form() {
    let c = Point::new(0.7, -0.3);
    let dom = Domain::new(DomainKind::Disk { radius: 1.0 }, c, 0.0).unwrap();
    let sys = ChargeSystem::new(&dom, 256).unwrap();
    for p in [Point::new(0.0, 0.0), Point::new(0.5, 0.2), Point::new(-0.6, 0.1)] {
        let est = sys.robin(c + p.coords).unwrap();
        assert!((est.gamma - robin_disk(p).unwrap()).abs() < 1e-6, "{p:?}");
        assert!(est.residual < 1e-6);
    }
}

fn ellipse() -> Domain {
    Domain::new(DomainKind::Ellipse { a: 1.4, b: 0.7 }, Point::new(0.2, 0.1), 0.4).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_is_symmetric(t1 in 0.0..TAU, r1 in 0.0..0.7f64, t2 in 0.0..TAU, r2 in 0.0..0.7f64) {
        let dom = ellipse();
        let (c, inr) = dom.inscribed_disk();
        let x = c + meanfield::Vector::new(t1.cos(), t1.sin()) * r1 * inr;
        let y = c + meanfield::Vector::new(t2.cos(), t2.sin()) * r2 * inr;
        prop_assume!((x - y).norm() > 1e-3);
        let gx = GreenEvaluator::for_domain(&dom, x, 256).unwrap();
        let gy = GreenEvaluator::for_domain(&dom, y, 256).unwrap();
        prop_assert!((gx.value(y).unwrap() - gy.value(x).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn robin_scales_logarithmically(t in 0.3..3.0f64, px in -0.4..0.4f64, py in -0.2..0.2f64) {
        let base = Domain::ellipse(1.0, 0.6).unwrap();
        let scaled = Domain::ellipse(t, 0.6 * t).unwrap();
        let p = Point::new(px, py);
        let g0 = ChargeSystem::new(&base, 256).unwrap().robin(p).unwrap().gamma;
        let g1 = ChargeSystem::new(&scaled, 256).unwrap().robin(Point::from(p.coords * t)).unwrap().gamma;
        prop_assert!((g1 - g0 - t.ln() / (2.0 * PI)).abs() < 1e-6);
    }

    #[test]
    fn robin_is_monotone_under_inclusion(px in -0.3..0.3f64, py in -0.3..0.3f64) {
        let p = Point::new(px, py);
        let small = Domain::rectangle(1.2, 1.2).unwrap();
        let mid = Domain::ellipse(1.0, 0.9).unwrap();
        let big = Domain::disk(1.2).unwrap();
        let g: Vec<f64> = [small, mid, big]
            .iter()
            .map(|d| ChargeSystem::new(d, 256).unwrap().robin(p).unwrap().gamma)
            .collect();
        prop_assert!(g[0] < g[1] && g[1] < g[2], "{g:?}");
    }
}
