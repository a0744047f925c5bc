//! Schwarz symmetrization of piecewise-linear fields onto the unit disk.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::discretization::fem::{dirichlet_energy_values, triangle_gradient};
use crate::discretization::{Field, Mesh};

/// Uniform levels before refinement.
const BASE_LEVELS: usize = 256;
const MAX_LEVELS: usize = 16384;
/// Largest radius jump tolerated between neighbouring levels.
const RADIUS_STEP: f64 = 2e-3;
/// Level gaps below this fraction of `max u` are plateaus and are not split.
const MIN_GAP: f64 = 1e-10;

/// Superlevel-set measures `mu(tau) = |{u > tau}|` and radii `rho = sqrt(mu / pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelProfile {
    pub thresholds: Vec<f64>,
    pub measures: Vec<f64>,
    pub radii: Vec<f64>,
}

impl LevelProfile {
    /// Two-column table `tau mu`.
    pub fn to_table(&self) -> String {
        let mut s = String::from("tau\tmu\n");
        for (t, m) in self.thresholds.iter().zip(&self.measures) {
            let _ = writeln!(s, "{t:.12e}\t{m:.12e}");
        }
        s
    }
}

fn sorted3(t: &[usize; 3], u: &[f64]) -> [f64; 3] {
    let mut v = [u[t[0]], u[t[1]], u[t[2]]];
    v.sort_by(f64::total_cmp);
    v
}

/// Fraction of a triangle where its linear interpolant exceeds `tau`.
fn superlevel_fraction(v: [f64; 3], tau: f64) -> f64 {
    let [v0, v1, v2] = v;
    if tau <= v0 {
        1.0
    } else if tau >= v2 {
        0.0
    } else if tau <= v1 {
        1.0 - (tau - v0) * (tau - v0) / ((v1 - v0) * (v2 - v0))
    } else {
        (v2 - tau) * (v2 - tau) / ((v2 - v0) * (v2 - v1))
    }
}

/// `|{u > tau}|` of the piecewise-linear interpolant.
pub fn superlevel_measure(mesh: &Mesh, u: &[f64], tau: f64) -> f64 {
    mesh.triangles().iter().zip(mesh.geometry()).map(|(t, g)| g.area * superlevel_fraction(sorted3(t, u), tau)).sum()
}

/// Exact level measures at the given thresholds.
pub fn level_profile(f: &Field, thresholds: &[f64]) -> LevelProfile {
    let mesh = f.mesh();
    let sorted: Vec<([f64; 3], f64)> =
        mesh.triangles().iter().zip(mesh.geometry()).map(|(t, g)| (sorted3(t, f.values()), g.area)).collect();
    let measures: Vec<f64> =
        thresholds.iter().map(|&tau| sorted.iter().map(|(v, a)| a * superlevel_fraction(*v, tau)).sum()).collect();
    let radii = measures.iter().map(|m: &f64| (m / PI).sqrt()).collect();
    LevelProfile { thresholds: thresholds.to_vec(), measures, radii }
}

/// Profile of the positive part on `[0, max u]`: uniform levels refined until
/// neighbouring radii differ by at most a small step.
pub fn adaptive_profile(f: &Field) -> LevelProfile {
    let top = f.values().iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return level_profile(f, &[0.0]);
    }
    let mut taus: Vec<f64> = (0..=BASE_LEVELS).map(|k| top * k as f64 / BASE_LEVELS as f64).collect();
    let mut prof = level_profile(f, &taus);
    loop {
        let mut extra = Vec::new();
        for k in 0..taus.len() - 1 {
            if prof.radii[k] - prof.radii[k + 1] > RADIUS_STEP && taus[k + 1] - taus[k] > MIN_GAP * top {
                extra.push(0.5 * (taus[k] + taus[k + 1]));
            }
        }
        if extra.is_empty() || taus.len() + extra.len() > MAX_LEVELS {
            return prof;
        }
        let add = level_profile(f, &extra);
        let mut merged: Vec<(f64, f64)> = taus
            .iter()
            .copied()
            .zip(prof.measures.iter().copied())
            .chain(add.thresholds.iter().copied().zip(add.measures.iter().copied()))
            .collect();
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        taus = merged.iter().map(|m| m.0).collect();
        let measures: Vec<f64> = merged.iter().map(|m| m.1).collect();
        prof = LevelProfile {
            radii: measures.iter().map(|m| (m / PI).sqrt()).collect(),
            thresholds: taus.clone(),
            measures,
        };
    }
}

/// Value of the radial rearrangement at radius `r`, by interpolation in the radius.
fn rearranged_value(prof: &LevelProfile, r: f64) -> f64 {
    let (t, rho) = (&prof.thresholds, &prof.radii);
    if r >= rho[0] {
        return 0.0;
    }
    // rho is non-increasing in tau.
    let k = rho.partition_point(|&x| x > r);
    if k == 0 {
        return t[0];
    }
    if k >= rho.len() {
        return *t.last().unwrap();
    }
    let (r0, r1) = (rho[k - 1], rho[k]);
    if r0 == r1 {
        return t[k];
    }
    t[k - 1] + (t[k] - t[k - 1]) * (r0 - r) / (r0 - r1)
}

/// Radially non-increasing rearrangement of the positive part onto `disk_mesh`
/// (the unit disk centered at the origin).
pub fn symmetrize(f: &Field, disk_mesh: &Arc<Mesh>) -> Field {
    let prof = adaptive_profile(f);
    let mut values: Vec<f64> = disk_mesh.vertices().iter().map(|p| rearranged_value(&prof, p.coords.norm())).collect();
    for (v, &b) in values.iter_mut().zip(disk_mesh.boundary()) {
        if b {
            *v = 0.0;
        }
    }
    Field::new(Arc::clone(disk_mesh), values).expect("one value per vertex")
}

/// `int |grad f|^2 - int |grad f*|^2`.
pub fn polya_szego_slack(f: &Field, disk_mesh: &Arc<Mesh>) -> f64 {
    let star = symmetrize(f, disk_mesh);
    dirichlet_energy_values(f.mesh(), f.values()) - dirichlet_energy_values(disk_mesh, star.values())
}

/// Level-set quantities at one threshold: `P = int_{u=tau} |grad u|`,
/// `Q = int_{u=tau} 1/|grad u| = -mu'(tau)` and `mu(tau)`.
#[derive(Clone, Copy, Debug)]
pub struct LevelSetData {
    pub flux: f64,
    pub inverse_flux: f64,
    pub measure: f64,
    pub length: f64,
}

pub fn level_set_data(mesh: &Mesh, u: &[f64], tau: f64) -> LevelSetData {
    let mut d = LevelSetData { flux: 0.0, inverse_flux: 0.0, measure: 0.0, length: 0.0 };
    let verts = mesh.vertices();
    for (k, (t, g)) in mesh.triangles().iter().zip(mesh.geometry()).enumerate() {
        let v = sorted3(t, u);
        d.measure += g.area * superlevel_fraction(v, tau);
        if !(tau > v[0] && tau < v[2]) {
            continue;
        }
        // Crossing points on the edges that straddle tau.
        let mut pts = Vec::with_capacity(2);
        for e in 0..3 {
            let (i, j) = (t[e], t[(e + 1) % 3]);
            let (a, b) = (u[i], u[j]);
            if (a - tau) * (b - tau) < 0.0 || (a == tau && b != tau) {
                let s = (tau - a) / (b - a);
                pts.push(verts[i] + (verts[j] - verts[i]) * s);
            }
        }
        if pts.len() < 2 {
            continue;
        }
        let len = (pts[1] - pts[0]).norm();
        let grad = triangle_gradient(mesh, k, u).norm();
        if grad > 0.0 {
            d.length += len;
            d.flux += grad * len;
            d.inverse_flux += len / grad;
        }
    }
    d
}

/// Comparison function `phi(t) = int_{u<t} |grad u|^2 - int_{u*<t} |grad u*|^2`
/// through the coarea formula, `phi(t) = int_0^t (P - 4 pi mu / Q) dtau`.
/// The integrand is non-negative level by level (Cauchy–Schwarz and the
/// isoperimetric inequality), so `phi >= 0` holds on any mesh.
pub fn phi_comparison(f: &Field, t: f64, panels: usize) -> f64 {
    let (mesh, u) = (f.mesh(), f.values());
    // Two-point Gauss–Legendre per panel avoids evaluating at tau = 0.
    let g = 0.5 / 3f64.sqrt();
    let integrand = |tau: f64| {
        let d = level_set_data(mesh, u, tau);
        if d.inverse_flux > 0.0 {
            d.flux - 4.0 * PI * d.measure / d.inverse_flux
        } else {
            0.0
        }
    };
    let w = t / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = (k as f64 + 0.5) * w;
            0.5 * w * (integrand(mid - g * w) + integrand(mid + g * w))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{triangulate, triangulate_graded, Grading};
    use crate::geometry::Domain;
    use crate::geometry::Point;

    fn disk(h: f64) -> Arc<Mesh> {
        Arc::new(triangulate(&Domain::disk(1.0).unwrap(), h).unwrap())
    }

    #[test]
    fn superlevel_fraction_pieces() {
        assert_eq!(superlevel_fraction([0.0, 1.0, 2.0], -1.0), 1.0);
        assert_eq!(superlevel_fraction([0.0, 1.0, 2.0], 2.0), 0.0);
        assert!((superlevel_fraction([0.0, 1.0, 2.0], 1.0) - 0.5).abs() < 1e-15);
        // Continuity at the middle value.
        let a = superlevel_fraction([0.0, 0.3, 2.0], 0.3 - 1e-12);
        let b = superlevel_fraction([0.0, 0.3, 2.0], 0.3 + 1e-12);
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn cone_measures() {
        let m = disk(0.02);
        let f = Field::interpolate(m.clone(), true, |p| 1.0 - p.coords.norm());
        let prof = level_profile(&f, &[-1.0, 0.0, 0.5]);
        assert!((prof.measures[0] - m.area()).abs() < 1e-12);
        assert!((prof.measures[1] - PI).abs() < 5e-3);
        assert!((prof.measures[2] - PI / 4.0).abs() < 5e-3);
        assert!(prof.measures.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn radial_field_is_a_fixed_point() {
        let m = disk(0.03);
        let f = Field::interpolate(m.clone(), true, |p| 1.0 - p.coords.norm_squared());
        let s = symmetrize(&f, &m);
        let err = f.values().iter().zip(s.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        let slack = polya_szego_slack(&f, &m);
        assert!(slack.abs() <= 1e-2 * dirichlet_energy_values(&m, f.values()));
    }

    #[test]
    fn symmetrized_values_non_increasing_in_radius() {
        let m = disk(0.05);
        let f =
            Field::interpolate(m.clone(), true, |p| (1.0 - p.coords.norm_squared()) * (2.0 + (3.0 * p.x).sin() + p.y));
        let s = symmetrize(&f, &m);
        let mut pairs: Vec<(f64, f64)> =
            m.vertices().iter().map(|p| p.coords.norm()).zip(s.values().iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
    }

    fn disk_green_field() -> Field {
        let d = Domain::disk(1.0).unwrap();
        let m = Arc::new(triangulate_graded(&d, 0.05, Grading::new(Point::origin(), 1e-6)).unwrap());
        Field::interpolate(m, true, |p| -(p.coords.norm().max(5e-7)).ln() / (2.0 * PI))
    }

    #[test]
    fn green_level_radii_match_images() {
        let f = disk_green_field();
        let taus = [1.0, 1.25, 1.5];
        let prof = level_profile(&f, &taus);
        for (t, r) in taus.iter().zip(&prof.radii) {
            let lo = (-2.0 * PI * (t + 1e-3)).exp();
            let hi = (-2.0 * PI * (t - 1e-3)).exp();
            assert!(*r >= lo && *r <= hi, "tau {t}: {r} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn phi_on_disk_green_is_small_and_nonnegative() {
        let f = disk_green_field();
        for t in [0.5, 1.0, 1.5] {
            let phi = phi_comparison(&f, t, 32);
            assert!((0.0..=1e-2).contains(&phi), "t {t}: {phi}");
        }
    }
}
