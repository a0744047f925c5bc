//! Glued bubble test functions realizing the upper bound `-1 - 4 pi gamma`
//! for the critical functional.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::discretization::fem::triangle_gradient;
use crate::discretization::{triangulate_graded, Field, Grading, Mesh};
use crate::error::{Error, Result};
use crate::functional::{eval_I, FunctionalParams};
use crate::geometry::{Domain, Point, Vector};
use crate::greens::GreenEvaluator;

/// `phi0(x) = 2 ln(1 / (1 + |x|^2))`.
pub fn standard_bubble(x: Vector) -> f64 {
    -2.0 * x.norm_squared().ln_1p()
}

/// `int_{B(R)} e^phi0 = pi R^2 / (1 + R^2)`; the whole-plane mass is `pi`.
pub fn bubble_mass(r: f64) -> f64 {
    PI * r * r / (1.0 + r * r)
}

/// `int_{B(R)} |grad phi0|^2 = 16 pi (ln(1 + R^2) - R^2 / (1 + R^2))`.
pub fn bubble_energy_ball(r: f64) -> f64 {
    let s = r * r;
    16.0 * PI * (s.ln_1p() - s / (1.0 + s))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleParams {
    pub center: Point,
    pub epsilon: f64,
    /// The shape parameter `Lambda`; the inner radius is `rho = Lambda epsilon`.
    pub shape: f64,
    /// Robin value at the center.
    pub gamma: f64,
}

impl BubbleParams {
    pub fn new(center: Point, epsilon: f64, shape: f64, gamma: f64) -> Result<Self> {
        if !(epsilon > 0.0 && shape > 0.0 && epsilon.is_finite() && shape.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "bubble needs epsilon > 0 and Lambda > 0, got epsilon = {epsilon}, Lambda = {shape}"
            )));
        }
        Ok(BubbleParams { center, epsilon, shape, gamma })
    }

    pub fn rho(&self) -> f64 {
        self.shape * self.epsilon
    }

    /// `A = 8 pi gamma(x0)`.
    pub fn a(&self) -> f64 {
        8.0 * PI * self.gamma
    }

    /// `sigma = 1 / (1 + Lambda^2)`.
    pub fn sigma(&self) -> f64 {
        1.0 / (1.0 + self.shape * self.shape)
    }

    pub fn c_eps(&self) -> f64 {
        2.0 * (1.0 - self.sigma()).ln() - self.a()
    }

    /// The cutoff annulus `rho <= |x - x0| <= 2 rho` must stay inside the domain.
    pub fn check_admissible(&self, domain: &Domain) -> Result<()> {
        let c = self.center;
        if !domain.contains(c) {
            return Err(Error::OutsideDomain { x: c.x, y: c.y, reason: "bubble center".into() });
        }
        let dist = domain.distance_to_boundary(c);
        if 2.0 * self.rho() >= dist {
            return Err(Error::NotAdmissible(format!(
                "2 rho = {:.4} reaches the boundary (distance {dist:.4})",
                2.0 * self.rho()
            )));
        }
        Ok(())
    }
}

/// Closed-form bookkeeping of the glued field at `lambda = 8 pi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GluedPieces {
    /// `(1/16 pi) int_{B(rho)} |grad phi|^2 = -ln sigma - 1 + sigma`.
    pub inner: f64,
    /// Leading part of the outer energy over `16 pi`: `2 ln(1/rho) + A/2`.
    pub outer: f64,
    pub total_over_16pi: f64,
    /// Upper bound for `-ln((1/pi) int e^phi)`.
    pub log_term: f64,
    /// `total_over_16pi + log_term = -1 + sigma - A/2`.
    pub bound: f64,
}

pub fn glued_energy_pieces(p: &BubbleParams) -> GluedPieces {
    let sigma = p.sigma();
    let a = p.a();
    let l2 = p.shape * p.shape;
    let inner = -sigma.ln() - 1.0 + sigma;
    let outer = -2.0 * p.rho().ln() + 0.5 * a;
    let total_over_16pi = inner + outer;
    let log_term = -a + 2.0 * p.epsilon.ln() - ((1.0 + l2) / l2).ln();
    GluedPieces { inner, outer, total_over_16pi, log_term, bound: total_over_16pi + log_term }
}

/// Cubic smoothstep cutoff: 1 at `s <= 0`, 0 at `s >= 1`, `|eta'| <= 1.5`.
fn cutoff(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    1.0 - s * s * (3.0 - 2.0 * s)
}

/// Value of the glued function at `x`. The scaled Green's function `G = 8 pi G(., x0)`
/// is taken from `green`, whose pole must be the bubble center.
pub fn glued_value(p: &BubbleParams, green: &GreenEvaluator, x: Point) -> f64 {
    let r = (x - p.center).norm();
    let rho = p.rho();
    if r <= rho {
        return -2.0 * (p.epsilon * p.epsilon + r * r).ln() - p.c_eps();
    }
    let regular = 8.0 * PI * green.regular(x);
    let g = -4.0 * r.ln() + regular;
    if r >= 2.0 * rho {
        return g;
    }
    let alpha = regular - p.a();
    g - cutoff((r - rho) / rho) * alpha
}

/// Size growth rate away from the bubble center; the interpolation error of the
/// logarithmic profile accumulates over every dyadic ring.
const GLUED_GRADING: f64 = 0.05;

/// Mesh graded toward the bubble center so that the scale `epsilon` is resolved.
pub fn glued_mesh(domain: &Domain, center: Point, epsilon: f64, h: f64) -> Result<Mesh> {
    let min_size = (epsilon / 8.0).min(h);
    triangulate_graded(domain, h, Grading { center, factor: GLUED_GRADING, min_size })
}

/// Nodal interpolant of the three-zone glued function; boundary values are zero.
pub fn build_glued_field(domain: &Domain, p: &BubbleParams, mesh: &Arc<Mesh>, green: &GreenEvaluator) -> Result<Field> {
    p.check_admissible(domain)?;
    if (green.pole() - p.center).norm() > 1e-12 {
        return Err(Error::InvalidParameters("Green's function pole differs from the bubble center".into()));
    }
    let required = p.epsilon / 4.0;
    let found = mesh.max_edge_near(p.center, p.epsilon / 2.0);
    if found > required || found == 0.0 {
        return Err(Error::Resolution { x: p.center.x, y: p.center.y, found, required });
    }
    Ok(Field::interpolate(Arc::clone(mesh), true, |x| glued_value(p, green, x)))
}

/// Signed area of the disk `|x| < r` intersected with the triangle `(0, a, b)`.
fn wedge_disk_area(a: Vector, b: Vector, r: f64) -> f64 {
    let d = b - a;
    let (qa, qb, qc) = (d.norm_squared(), 2.0 * a.dot(&d), a.norm_squared() - r * r);
    let mut cuts = vec![0.0];
    let disc = qb * qb - 4.0 * qa * qc;
    if qa > 0.0 && disc > 0.0 {
        let s = disc.sqrt();
        for t in [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)] {
            if t > 0.0 && t < 1.0 {
                cuts.push(t);
            }
        }
    }
    cuts.push(1.0);
    cuts.windows(2)
        .map(|w| {
            let (p, q) = (a + d * w[0], a + d * w[1]);
            let cross = p.x * q.y - p.y * q.x;
            if (a + d * (0.5 * (w[0] + w[1]))).norm() <= r {
                0.5 * cross
            } else {
                0.5 * r * r * cross.atan2(p.dot(&q))
            }
        })
        .sum()
}

/// Exact area of a triangle intersected with the disk `B(r, c)`.
pub fn triangle_disk_area(tri: [Point; 3], c: Point, r: f64) -> f64 {
    (0..3).map(|k| wedge_disk_area(tri[k] - c, tri[(k + 1) % 3] - c, r)).sum::<f64>().abs()
}

/// `int_{B(r, c)} |grad u|^2` for the piecewise-linear field.
pub fn dirichlet_energy_in_disk(f: &Field, c: Point, r: f64) -> f64 {
    let mesh = f.mesh();
    let v = mesh.vertices();
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let area = triangle_disk_area([v[t[0]], v[t[1]], v[t[2]]], c, r);
            if area > 0.0 {
                area * triangle_gradient(mesh, k, f.values()).norm_squared()
            } else {
                0.0
            }
        })
        .sum()
}

pub const DEFAULT_EPSILONS: [f64; 3] = [1e-1, 3e-2, 1e-2];
pub const DEFAULT_SHAPES: [f64; 3] = [10.0, 1e2, 1e3];

#[derive(Clone, Debug)]
pub struct TestfnRow {
    pub epsilon: f64,
    pub shape: f64,
    pub rho: f64,
    pub bound: f64,
    /// `I(phi)` at `lambda = 8 pi`, or why the point was skipped.
    pub value: std::result::Result<f64, String>,
}

#[derive(Clone, Debug)]
pub struct TestfnTable {
    pub center: Point,
    pub gamma: f64,
    pub rows: Vec<TestfnRow>,
}

impl TestfnTable {
    /// Smallest computed energy and its row.
    pub fn best(&self) -> Option<&TestfnRow> {
        self.rows
            .iter()
            .filter(|r| r.value.is_ok())
            .min_by(|a, b| a.value.as_ref().unwrap().total_cmp(b.value.as_ref().unwrap()))
    }

    pub fn to_table(&self) -> String {
        let mut s = String::from("epsilon\tLambda\trho\tbound\tI\n");
        for r in &self.rows {
            let v = match &r.value {
                Ok(v) => format!("{v:.8}"),
                Err(e) => format!("skipped ({e})"),
            };
            let _ = writeln!(s, "{:.4e}\t{:.4e}\t{:.4e}\t{:.8}\t{v}", r.epsilon, r.shape, r.rho, r.bound);
        }
        s
    }
}

/// Builds and evaluates the glued field over an `(epsilon, Lambda)` grid.
/// Grid points whose cutoff annulus leaves the domain are reported, not evaluated.
pub fn testfn_grid(
    domain: &Domain,
    green: &GreenEvaluator,
    gamma: f64,
    epsilons: &[f64],
    shapes: &[f64],
    h: f64,
) -> Result<TestfnTable> {
    let center = green.pole();
    let params = FunctionalParams::regularized(0.0)?;
    let per_eps: Vec<Vec<TestfnRow>> = epsilons
        .par_iter()
        .map(|&eps| {
            let pts: Vec<Result<BubbleParams>> =
                shapes.iter().map(|&l| BubbleParams::new(center, eps, l, gamma)).collect();
            let any_ok = pts.iter().any(|p| matches!(p, Ok(p) if p.check_admissible(domain).is_ok()));
            let mesh = if any_ok { Some(glued_mesh(domain, center, eps, h).map(Arc::new)) } else { None };
            pts.into_iter()
                .zip(shapes)
                .map(|(p, &shape)| {
                    let row = |bound, value| TestfnRow { epsilon: eps, shape, rho: eps * shape, bound, value };
                    let p = match p {
                        Ok(p) => p,
                        Err(e) => return row(f64::NAN, Err(e.to_string())),
                    };
                    let bound = glued_energy_pieces(&p).bound;
                    let value = (|| {
                        p.check_admissible(domain)?;
                        let mesh = match &mesh {
                            Some(Ok(m)) => m,
                            Some(Err(e)) => return Err(Error::InvalidParameters(e.to_string())),
                            None => unreachable!("mesh exists when a point is admissible"),
                        };
                        let f = build_glued_field(domain, &p, mesh, green)?;
                        eval_I(&f, &params)
                    })();
                    row(bound, value.map_err(|e| e.to_string()))
                })
                .collect()
        })
        .collect();
    Ok(TestfnTable { center, gamma, rows: per_eps.into_iter().flatten().collect() })
}
