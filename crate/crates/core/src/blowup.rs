//! Concentration diagnostics along continuation traces.

use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;

use crate::discretization::fem::exp_integral;
use crate::discretization::Field;
use crate::error::{Error, Result};
use crate::functional::{
    concentration_scale, continuation, ContinuationTrace, MeshPolicy, MinimizeResult, CRITICAL_LAMBDA,
};
use crate::geometry::{Domain, Point, Vector};
use crate::greens::{extrapolation_radius, GreenEvaluator};
use crate::testfn::standard_bubble;

/// Directions sampled around the concentration point.
pub const PROFILE_DIRECTIONS: usize = 8;
pub const PROFILE_SAMPLES: usize = 65;
/// Sampling radius of the rescaled profile.
pub const DEFAULT_WINDOW: f64 = 4.0;
/// Budget for the `o(1)` term in the lower bound `u >= G + D_eps`.
pub const LOWER_BOUND_BUDGET: f64 = 0.05;
/// Charges used for Green's functions with the pole at the concentration point.
const CHARGES: usize = 256;

/// `phi_eps(x) = u(x / alpha + x_eps) - lambda_eps` sampled on rays.
#[derive(Clone, Debug)]
pub struct RescaledProfile {
    pub radii: Vec<f64>,
    /// `values[d][k]`: direction `d`, radius `radii[k]`.
    pub values: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl RescaledProfile {
    /// Direction average at each radius.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.radii.len())
            .map(|k| self.values.iter().map(|v| v[k]).sum::<f64>() / self.values.len() as f64)
            .collect()
    }
}

/// Peak of the least-squares quadratic through the vertices near the nodal maximum.
/// Falls back to the maximizing vertex when the fit is not concave or the peak leaves the patch.
pub fn refined_peak(f: &Field) -> Point {
    let mesh = f.mesh();
    let (i, _) = f.max();
    let x0 = mesh.vertices()[i];
    let radius = 3.0 * mesh.max_edge_near(x0, 0.0);
    let patch: Vec<(Vector, f64)> = mesh
        .vertices()
        .iter()
        .zip(f.values())
        .filter(|(p, _)| (*p - x0).norm() <= radius)
        .map(|(p, &v)| (p - x0, v))
        .collect();
    if patch.len() < 10 || radius == 0.0 {
        return x0;
    }
    // Scaled coordinates keep the normal equations well conditioned.
    let rows: Vec<[f64; 6]> = patch
        .iter()
        .map(|(d, _)| {
            let (x, y) = (d.x / radius, d.y / radius);
            [1.0, x, y, x * x, x * y, y * y]
        })
        .collect();
    let a = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
    let b = DVector::from_iterator(patch.len(), patch.iter().map(|(_, v)| *v));
    let Ok(c) = a.svd(true, true).solve(&b, 1e-12) else { return x0 };
    let hess = Matrix2::new(2.0 * c[3], c[4], c[4], 2.0 * c[5]);
    if !(hess[(0, 0)] < 0.0 && hess.determinant() > 0.0) {
        return x0;
    }
    let Some(inv) = hess.try_inverse() else { return x0 };
    let step = -(inv * Vector2::new(c[1], c[2]));
    if step.norm() > 1.0 {
        return x0;
    }
    x0 + step * radius
}

pub fn rescale_profile(r: &MinimizeResult, window: f64) -> Result<RescaledProfile> {
    let alpha = concentration_scale(r);
    let mesh = r.field.mesh();
    let x_eps = refined_peak(&r.field);
    // The mesh polygon is inscribed in the domain; its border stands in for the boundary.
    let dist = mesh
        .vertices()
        .iter()
        .zip(mesh.boundary())
        .filter(|(_, &b)| b)
        .map(|(p, _)| (p - x_eps).norm())
        .fold(f64::INFINITY, f64::min);
    if window / alpha > dist * (1.0 + 1e-9) {
        return Err(Error::Window { max_radius: dist * alpha });
    }
    let loc = mesh.locator();
    let radii: Vec<f64> = (0..PROFILE_SAMPLES).map(|k| window * k as f64 / (PROFILE_SAMPLES - 1) as f64).collect();
    let values = (0..PROFILE_DIRECTIONS)
        .map(|d| {
            let t = 2.0 * PI * d as f64 / PROFILE_DIRECTIONS as f64;
            let dir = Vector::new(t.cos(), t.sin());
            radii
                .iter()
                .map(|&s| {
                    let x = x_eps + dir * (s / alpha);
                    loc.interpolate(r.field.values(), x).unwrap_or(0.0) - r.max_value
                })
                .collect()
        })
        .collect();
    Ok(RescaledProfile { radii, values, alpha })
}

/// `sup |phi_eps - phi0|` over all sampled points.
pub fn bubble_distance(profile: &RescaledProfile) -> f64 {
    profile
        .values
        .iter()
        .enumerate()
        .flat_map(|(d, v)| {
            let t = 2.0 * PI * d as f64 / profile.values.len() as f64;
            profile
                .radii
                .iter()
                .zip(v)
                .map(move |(&s, &phi)| (phi - standard_bubble(Vector::new(t.cos(), t.sin()) * s)).abs())
        })
        .fold(0.0, f64::max)
}

/// `D_eps = -lambda_eps + 2 ln((1/pi) int e^u) + 2 ln(R^2 / (1 + R^2)) - A`;
/// an infinite `R` drops the window term.
pub fn d_epsilon(r: &MinimizeResult, window: f64, a: f64) -> f64 {
    let ln_q = exp_integral(&r.field).ln();
    let tail = if window.is_infinite() { 0.0 } else { 2.0 * (window * window / (1.0 + window * window)).ln() };
    -r.max_value + 2.0 * (ln_q - PI.ln()) + tail - a
}

/// `int e^{phi_eps}` over the rescaled domain, `alpha^2 e^{-lambda_eps} int e^u`.
pub fn rescaled_mass(r: &MinimizeResult, alpha: f64) -> f64 {
    alpha * alpha * (exp_integral(&r.field).ln() - r.max_value).exp()
}

fn annulus_points(center: Point, r0: f64, r1: f64, rings: usize, per_ring: usize) -> Vec<Point> {
    (0..rings)
        .flat_map(|i| {
            let r = r0 + (r1 - r0) * i as f64 / (rings - 1).max(1) as f64;
            (0..per_ring).map(move |k| {
                let t = 2.0 * PI * (k as f64 + 0.5 * (i % 2) as f64) / per_ring as f64;
                center + Vector::new(t.cos(), t.sin()) * r
            })
        })
        .collect()
}

/// Far-field comparison on the annulus `[0.4, 0.8] inradius` around the pole of `green`.
#[derive(Clone, Copy, Debug)]
pub struct FarField {
    /// `sup |u - 8 pi G(., x_eps)|`.
    pub error: f64,
    /// `sup u` over the annulus.
    pub sup_u: f64,
}

pub fn far_field_check(r: &MinimizeResult, domain: &Domain, green: &GreenEvaluator) -> Result<FarField> {
    let inr = domain.inradius();
    let pts = annulus_points(green.pole(), 0.4 * inr, 0.8 * inr, 9, 48);
    let loc = r.field.mesh().locator();
    let mut out = FarField { error: 0.0, sup_u: f64::NEG_INFINITY };
    for x in pts {
        if !domain.contains(x) {
            return Err(Error::OutsideDomain { x: x.x, y: x.y, reason: "far-field annulus leaves the domain".into() });
        }
        let u = loc.interpolate(r.field.values(), x).unwrap_or(0.0);
        let g = 8.0 * PI * green.value(x)?;
        out.error = out.error.max((u - g).abs());
        out.sup_u = out.sup_u.max(u);
    }
    Ok(out)
}

/// Sampled check of `u >= 8 pi G + D_eps - budget` for `4 / alpha <= |x - x_eps| <= 0.9 dist`.
#[derive(Clone, Copy, Debug)]
pub struct LowerBoundCheck {
    /// `min (u - 8 pi G - D_eps)` over the samples.
    pub min_margin: f64,
    pub samples: usize,
}

impl LowerBoundCheck {
    pub fn passed(&self, budget: f64) -> bool {
        self.min_margin >= -budget
    }
}

pub fn lower_bound_check(
    r: &MinimizeResult,
    domain: &Domain,
    green: &GreenEvaluator,
    d_eps: f64,
    samples: usize,
) -> Result<LowerBoundCheck> {
    let alpha = concentration_scale(r);
    let x_eps = green.pole();
    let (r0, r1) = (4.0 / alpha, 0.9 * domain.distance_to_boundary(x_eps));
    if r0 >= r1 {
        return Err(Error::Window { max_radius: r1 * alpha });
    }
    let loc = r.field.mesh().locator();
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut min_margin = f64::INFINITY;
    for k in 0..samples {
        let s = r0 + (r1 - r0) * k as f64 / (samples - 1).max(1) as f64;
        let t = golden * k as f64;
        let x = x_eps + Vector::new(t.cos(), t.sin()) * s;
        let u = loc.interpolate(r.field.values(), x).unwrap_or(0.0);
        min_margin = min_margin.min(u - 8.0 * PI * green.value(x)? - d_eps);
    }
    Ok(LowerBoundCheck { min_margin, samples })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Bounded,
    Blowup,
    Undecided,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Bounded => "bounded",
            Classification::Blowup => "blowup",
            Classification::Undecided => "undecided",
        })
    }
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub lambda: f64,
    pub epsilon: f64,
    pub lambda_eps: f64,
    pub x_eps: Point,
    pub tau: f64,
    pub alpha: f64,
    /// `ln int e^u`.
    pub ln_mass: f64,
    pub vertices: usize,
    /// `A = 8 pi gamma(x_eps)`.
    pub a: f64,
    pub d_eps: f64,
    /// `None` when the sampling window leaves the domain.
    pub profile_error: Option<f64>,
    pub far_field: Option<FarField>,
    pub rescaled_mass: f64,
    pub boundary_distance: f64,
}

impl TraceStep {
    /// `lambda (1 - eps)`, the effective coupling.
    pub fn effective_lambda(&self) -> f64 {
        self.lambda * (1.0 - self.epsilon)
    }
}

#[derive(Clone, Debug)]
pub struct BlowupTrace {
    pub steps: Vec<TraceStep>,
    pub window: f64,
    pub truncated: Option<String>,
    pub classification: Classification,
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Minimum `lambda_eps` for a blow-up verdict.
pub const BLOWUP_FLOOR: f64 = 4.0;
/// Least slope of `lambda_eps` against `ln(1 / (8 pi - lambda (1 - eps)))`; the disk family has slope 2.
pub const BLOWUP_SLOPE: f64 = 1.0;
/// Largest variation of `lambda_eps` over the last four steps of a bounded run.
pub const PLATEAU: f64 = 0.5;
pub const BOUNDED_REACH: f64 = 7.9 * PI;

/// Blow-up: over the last three steps `lambda_eps` grows with slope at least one in
/// `ln(1 / (8 pi - lambda (1 - eps)))`, `alpha` increases strictly and `lambda_eps >= 4`.
/// Bounded: `lambda_eps` varies by at most 0.5 over the last four steps and the
/// effective coupling reached `7.9 pi`. Anything else, or fewer than four steps, is undecided.
pub fn classify(steps: &[TraceStep]) -> Classification {
    if steps.len() < 4 {
        return Classification::Undecided;
    }
    let last3 = &steps[steps.len() - 3..];
    let x: Vec<f64> = last3.iter().map(|s| -(CRITICAL_LAMBDA - s.effective_lambda()).ln()).collect();
    let y: Vec<f64> = last3.iter().map(|s| s.lambda_eps).collect();
    let alpha_up = last3.windows(2).all(|w| w[1].alpha > w[0].alpha);
    let last = &steps[steps.len() - 1];
    if x.iter().all(|v| v.is_finite()) && slope(&x, &y) >= BLOWUP_SLOPE && alpha_up && last.lambda_eps >= BLOWUP_FLOOR {
        return Classification::Blowup;
    }
    let last4 = &steps[steps.len() - 4..];
    let (lo, hi) = last4
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.lambda_eps), hi.max(s.lambda_eps)));
    if hi - lo <= PLATEAU && last.effective_lambda() >= BOUNDED_REACH * (1.0 - 1e-12) {
        return Classification::Bounded;
    }
    Classification::Undecided
}

/// Diagnostics of one converged step; the Green's function pole is the refined peak.
pub fn trace_step(domain: &Domain, r: &MinimizeResult, window: f64) -> Result<TraceStep> {
    let x_eps = refined_peak(&r.field);
    let green = GreenEvaluator::for_domain(domain, x_eps, CHARGES)?;
    let a = 8.0 * PI * green.robin(extrapolation_radius(domain, x_eps));
    let alpha = concentration_scale(r);
    Ok(TraceStep {
        lambda: r.lambda,
        epsilon: r.epsilon,
        lambda_eps: r.max_value,
        x_eps,
        tau: (0.5 * r.max_value).exp(),
        alpha,
        ln_mass: exp_integral(&r.field).ln(),
        vertices: r.field.mesh().vertex_count(),
        a,
        d_eps: d_epsilon(r, window, a),
        profile_error: rescale_profile(r, window).ok().map(|p| bubble_distance(&p)),
        far_field: far_field_check(r, domain, &green).ok(),
        rescaled_mass: rescaled_mass(r, alpha),
        boundary_distance: domain.distance_to_boundary(x_eps),
    })
}

pub fn analyze(domain: &Domain, trace: &ContinuationTrace, window: f64) -> Result<BlowupTrace> {
    let steps = trace.steps.par_iter().map(|s| trace_step(domain, &s.result, window)).collect::<Result<Vec<_>>>()?;
    let classification = classify(&steps);
    Ok(BlowupTrace { steps, window, truncated: trace.truncated.clone(), classification })
}

/// Continuation along `schedule` followed by the per-step diagnostics.
pub fn blowup_trace(
    domain: &Domain,
    schedule: &[f64],
    epsilon: f64,
    policy: &MeshPolicy,
    window: f64,
) -> Result<(ContinuationTrace, BlowupTrace)> {
    let trace = continuation(domain, schedule, epsilon, policy)?;
    let analysis = analyze(domain, &trace, window)?;
    Ok((trace, analysis))
}

impl BlowupTrace {
    /// `C(K)`: largest `sup u` on the far-field annulus over the trace.
    pub fn far_field_bound(&self) -> Option<f64> {
        self.steps.iter().filter_map(|s| s.far_field.map(|f| f.sup_u)).reduce(f64::max)
    }

    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let mut s =
            String::from("step\tlambda\tlambda_eps\talpha_eps\tD_eps\tbubble_distance\tfar_field_error\tclass\n");
        for (k, st) in self.steps.iter().enumerate() {
            let _ = writeln!(
                s,
                "{k}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}",
                st.lambda,
                st.lambda_eps,
                st.alpha,
                st.d_eps,
                opt(st.profile_error),
                opt(st.far_field.map(|f| f.error)),
                self.classification
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Mesh;
    use std::sync::Arc;

    fn step(lambda: f64, lambda_eps: f64, alpha: f64) -> TraceStep {
        TraceStep {
            lambda,
            epsilon: 0.0,
            lambda_eps,
            x_eps: Point::origin(),
            tau: (0.5 * lambda_eps).exp(),
            alpha,
            ln_mass: 0.0,
            vertices: 0,
            a: 0.0,
            d_eps: 0.0,
            profile_error: None,
            far_field: None,
            rescaled_mass: PI,
            boundary_distance: 1.0,
        }
    }

    /// Disk family `lambda_eps = 2 ln(1 + delta)`, `alpha = sqrt(1 + delta)`.
    fn disk_step(lambda: f64) -> TraceStep {
        let delta = lambda / (CRITICAL_LAMBDA - lambda);
        step(lambda, 2.0 * (1.0 + delta).ln(), (1.0 + delta).sqrt())
    }

    #[test]
    fn classification_rules() {
        let sched = [4.0, 6.0, 7.0, 7.5, 7.6, 7.7, 7.8, 7.9].map(|k| k * PI);
        let disk: Vec<TraceStep> = sched.iter().map(|&l| disk_step(l)).collect();
        assert_eq!(classify(&disk), Classification::Blowup);
        let flat: Vec<TraceStep> = sched.iter().map(|&l| step(l, 0.7 + 0.01 * l / PI, 1.0)).collect();
        assert_eq!(classify(&flat), Classification::Bounded);
        assert_eq!(classify(&disk[..3]), Classification::Undecided);
        // A plateau that stops short of 7.9 pi is not a verdict.
        let short: Vec<TraceStep> = sched[..5].iter().map(|&l| step(l, 0.7, 1.0)).collect();
        assert_eq!(classify(&short), Classification::Undecided);
    }

    #[test]
    fn d_epsilon_of_the_disk_family_is_delta_free() {
        // With lambda_eps = 2 ln(1 + delta) and int e^u = pi (1 + delta) the first two terms cancel.
        for delta in [3.0f64, 79.0] {
            let lam = 2.0 * (1.0 + delta).ln();
            let d = -lam + 2.0 * (PI * (1.0 + delta) / PI).ln() + 2.0 * (16.0f64 / 17.0).ln();
            assert!((d - 2.0 * (16.0f64 / 17.0).ln()).abs() < 1e-12);
            assert!((d + 0.12125).abs() < 1e-4);
        }
    }

    fn disk_solution(mesh: &Arc<Mesh>, delta: f64) -> MinimizeResult {
        let f = Field::interpolate(Arc::clone(mesh), true, |x| {
            2.0 * ((1.0 + delta) / (1.0 + delta * x.coords.norm_squared())).ln()
        });
        let (i, max) = f.max();
        MinimizeResult {
            argmax: mesh.vertices()[i],
            energy: 0.0,
            lambda: CRITICAL_LAMBDA * delta / (1.0 + delta),
            epsilon: 0.0,
            max_value: max,
            grad_norm: 0.0,
            iterations: 0,
            mt_slack: 0.0,
            history: vec![],
            field: f,
        }
    }

    fn graded_disk() -> Arc<Mesh> {
        use crate::discretization::{triangulate_graded, Grading};
        Arc::new(triangulate_graded(&Domain::disk(1.0).unwrap(), 0.03, Grading::new(Point::origin(), 2e-3)).unwrap())
    }

    #[test]
    fn interpolated_disk_family_diagnostics() {
        let mesh = graded_disk();
        let d = Domain::disk(1.0).unwrap();
        let green = GreenEvaluator::for_domain(&d, Point::origin(), CHARGES).unwrap();
        let r = disk_solution(&mesh, 79.0);
        let prof = rescale_profile(&r, 4.0).unwrap();
        assert!(prof.values.iter().all(|v| v[0].abs() < 1e-3));
        let mean = prof.mean();
        assert!(mean.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        // Closed form: sup over B(4) of 2 ln((1 + r^2) / (1 + (79/80) r^2)).
        let exact = 2.0 * (17.0f64 / (1.0 + 79.0 / 80.0 * 16.0)).ln();
        let dist = bubble_distance(&prof);
        assert!(dist <= 0.05 && (dist - exact).abs() < 1e-2, "{dist} vs {exact}");
        let d_eps = d_epsilon(&r, 4.0, 0.0);
        assert!((d_eps - 2.0 * (16.0f64 / 17.0).ln()).abs() < 1e-2, "{d_eps}");
        let ff = far_field_check(&r, &d, &green).unwrap();
        let oracle = 2.0 * ((1.0f64 + 79.0 * 0.16) / (0.16 * 80.0)).ln();
        assert!((ff.error - oracle).abs() < 1e-2, "{} vs {oracle}", ff.error);
        let lb = lower_bound_check(&r, &d, &green, d_eps, 50).unwrap();
        assert!(lb.passed(LOWER_BOUND_BUDGET), "{}", lb.min_margin);
        let alpha = concentration_scale(&r);
        assert!((rescaled_mass(&r, alpha) - PI).abs() < 2e-2 * PI);
    }

    #[test]
    fn window_error_reports_admissible_radius() {
        let mesh = graded_disk();
        let r = disk_solution(&mesh, 3.0);
        match rescale_profile(&r, 10.0) {
            Err(Error::Window { max_radius }) => assert!((max_radius - 2.0).abs() < 0.05, "{max_radius}"),
            other => panic!("expected window error, got {other:?}"),
        }
        let prof = rescale_profile(&r, 1.9).unwrap();
        let exact = 2.0 * ((1.0 + 1.9f64.powi(2)) / (1.0 + 0.75 * 1.9f64.powi(2))).ln();
        assert!((bubble_distance(&prof) - exact).abs() < 1e-2);
    }

    #[test]
    fn slope_of_a_line() {
        assert!((slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
    }
}
