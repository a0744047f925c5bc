//! Green's functions and Robin functions.
//!
//! Closed forms cover the unit disk and the infinite strip. General domains
//! use the method of fundamental solutions: the regular part of `G(., pole)`
//! is a sum of logarithmic charges on a dilated copy of the boundary plus a
//! constant, fitted by least squares to the boundary data.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Domain, DomainKind, Point, Vector};

const INV_2PI: f64 = 1.0 / TAU;

/// Green's function of the unit disk, `(1/2pi) ln(|1 - x conj(y)| / |x - y|)`.
pub fn disk_green(x: Point, y: Point) -> Result<f64> {
    for p in [x, y] {
        if p.coords.norm_squared() >= 1.0 {
            return Err(Error::OutsideDomain {
                x: p.x,
                y: p.y,
                reason: "unit disk Green's function needs |x|, |y| < 1".into(),
            });
        }
    }
    let d = (x - y).norm();
    if d == 0.0 {
        return Err(Error::Singularity { x: x.x, y: x.y });
    }
    Ok(INV_2PI * (disk_reflection(x, y) / d).ln())
}

/// `|1 - x conj(y)|`, the image-charge distance for the unit disk.
fn disk_reflection(x: Point, y: Point) -> f64 {
    let (zx, zy) = (Complex64::new(x.x, x.y), Complex64::new(y.x, y.y));
    (Complex64::new(1.0, 0.0) - zx * zy.conj()).norm()
}

/// Robin function of the unit disk, `(1/2pi) ln(1 - |x|^2)`.
pub fn robin_disk(x: Point) -> Result<f64> {
    let r2 = x.coords.norm_squared();
    if r2 >= 1.0 {
        return Err(Error::OutsideDomain {
            x: x.x,
            y: x.y,
            reason: "Robin function of the unit disk needs |x| < 1".into(),
        });
    }
    Ok(INV_2PI * (1.0 - r2).ln())
}

fn check_strip(alpha: f64, d: f64) -> Result<()> {
    if !(d > 0.0) || !(alpha > 0.0 && alpha < d) {
        return Err(Error::OutsideDomain {
            x: 0.0,
            y: alpha,
            reason: format!("pole height {alpha} must lie in (0, {d})"),
        });
    }
    Ok(())
}

/// Green's function of the strip `0 < Im z < d` with pole at `alpha i`,
/// via the conformal map `w = exp(pi z / d)` onto the upper half plane.
pub fn strip_green(z: Point, alpha: f64, d: f64) -> Result<f64> {
    check_strip(alpha, d)?;
    if !(z.y >= 0.0 && z.y <= d) {
        return Err(Error::OutsideDomain { x: z.x, y: z.y, reason: format!("strip of width {d}") });
    }
    if z.x == 0.0 && z.y == alpha {
        return Err(Error::Singularity { x: z.x, y: z.y });
    }
    let k = PI / d;
    let pole_in = Complex64::from_polar(1.0, k * alpha);
    let pole_out = pole_in.conj();
    let phase = Complex64::from_polar(1.0, k * z.y);
    // |(w - conj(p)) / (w - p)| with w = e^{kx} e^{i k y}; divide through by
    // the larger of |w| and 1 to stay finite for large |Re z|.
    let ratio = if z.x <= 0.0 {
        let w = phase * (k * z.x).exp();
        (w - pole_out).norm() / (w - pole_in).norm()
    } else {
        let s = (-k * z.x).exp();
        (phase - pole_out * s).norm() / (phase - pole_in * s).norm()
    };
    Ok(INV_2PI * ratio.ln())
}

/// Robin function of the strip at height `alpha`: `(1/2pi) log(2 sin(alpha pi/d) / (pi/d))`.
pub fn strip_robin(alpha: f64, d: f64) -> Result<f64> {
    check_strip(alpha, d)?;
    Ok(INV_2PI * (2.0 * (alpha * PI / d).sin() / (PI / d)).ln())
}

/// Supremum of the strip Robin function, `(1/2pi) log(2d/pi)`, attained on the midline.
pub fn strip_gamma(d: f64) -> f64 {
    INV_2PI * (2.0 * d / PI).ln()
}

/// Dilation of the boundary used to place the charges.
pub const CHARGE_DILATION: f64 = 1.5;
/// Relative singular value cutoff of the least-squares solve.
const SVD_CUTOFF: f64 = 1e-9;
/// Fewer retained singular values than this means the charge layout is degenerate.
pub const MIN_EFFECTIVE_RANK: usize = 32;
/// Default accuracy gate on the Dirichlet residual.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// How a [`GreenEvaluator`] represents the regular part.
#[derive(Clone, Debug, PartialEq)]
pub enum GreenMethod {
    ClosedForm,
    FundamentalSolutions { charges: usize, offset: f64 },
}

/// Factored charge system for one domain; shared by every pole.
#[derive(Debug)]
pub struct ChargeSystem {
    domain: Domain,
    charges: Vec<Point>,
    collocation: Vec<Point>,
    /// Least-squares solution operator, `(N + 1) x 2N`.
    solve: DMatrix<f64>,
    /// Ratio of extreme singular values; geometric decay makes this huge by design.
    condition: f64,
}

impl ChargeSystem {
    pub fn new(domain: &Domain, n: usize) -> Result<Arc<Self>> {
        if n < 64 {
            return Err(Error::InvalidParameters(format!("at least 64 charges are required, got {n}")));
        }
        let c = domain.centroid();
        let charges: Vec<Point> = (0..n)
            .map(|j| {
                let b = domain.boundary_point((j as f64 + 0.5) / n as f64);
                c + (b - c) * CHARGE_DILATION
            })
            .collect();
        let collocation = domain.sample_boundary(2 * n);
        let m = collocation.len();
        let a = DMatrix::from_fn(m, n + 1, |i, j| if j == n { 1.0 } else { (collocation[i] - charges[j]).norm().ln() });
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        let rank = svd.singular_values.iter().filter(|&&s| s > SVD_CUTOFF * smax).count();
        if !smax.is_finite() || rank < MIN_EFFECTIVE_RANK {
            return Err(Error::IllConditioned { condition });
        }
        let solve = svd.pseudo_inverse(SVD_CUTOFF * smax).map_err(|e| Error::SingularSystem(e.to_string()))?;
        Ok(Arc::new(ChargeSystem { domain: domain.clone(), charges, collocation, solve, condition }))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn charge_count(&self) -> usize {
        self.charges.len()
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn collocation_spacing(&self) -> f64 {
        self.domain.perimeter() / self.collocation.len() as f64
    }

    /// Evaluator for `G(., pole)`.
    pub fn evaluator(self: &Arc<Self>, pole: Point) -> Result<GreenEvaluator> {
        if !self.domain.contains(pole) {
            return Err(Error::OutsideDomain { x: pole.x, y: pole.y, reason: "pole must be interior".into() });
        }
        let rhs = DVector::from_iterator(
            self.collocation.len(),
            self.collocation.iter().map(|x| INV_2PI * (x - pole).norm().ln()),
        );
        let coef = &self.solve * rhs;
        let n = self.charges.len();
        Ok(GreenEvaluator {
            pole,
            repr: Repr::Charges {
                system: Arc::clone(self),
                weights: coef.rows(0, n).iter().copied().collect(),
                constant: coef[n],
            },
        })
    }
}

#[derive(Clone, Debug)]
enum Repr {
    /// Disk of the given radius and center.
    Disk {
        center: Point,
        radius: f64,
    },
    Charges {
        system: Arc<ChargeSystem>,
        weights: Vec<f64>,
        constant: f64,
    },
}

/// `G(., pole)` for one domain, immutable after construction.
#[derive(Clone, Debug)]
pub struct GreenEvaluator {
    pole: Point,
    repr: Repr,
}

impl GreenEvaluator {
    /// Closed form when the domain is a disk, fundamental solutions otherwise.
    pub fn for_domain(domain: &Domain, pole: Point, charges: usize) -> Result<Self> {
        match domain.kind() {
            DomainKind::Disk { radius } => {
                if !domain.contains(pole) {
                    return Err(Error::OutsideDomain { x: pole.x, y: pole.y, reason: "pole must be interior".into() });
                }
                Ok(GreenEvaluator { pole, repr: Repr::Disk { center: domain.center(), radius: *radius } })
            }
            _ => ChargeSystem::new(domain, charges)?.evaluator(pole),
        }
    }

    pub fn pole(&self) -> Point {
        self.pole
    }

    pub fn method(&self) -> GreenMethod {
        match &self.repr {
            Repr::Disk { .. } => GreenMethod::ClosedForm,
            Repr::Charges { system, .. } => {
                GreenMethod::FundamentalSolutions { charges: system.charges.len(), offset: CHARGE_DILATION }
            }
        }
    }

    /// Regular part `gamma(x, pole) = G(x, pole) - (1/2pi) ln(1/|x - pole|)`, harmonic in x.
    pub fn regular(&self, x: Point) -> f64 {
        match &self.repr {
            Repr::Disk { center, radius } => {
                let (u, v) = ((x - center) / *radius, (self.pole - center) / *radius);
                let refl = disk_reflection(Point::from(u), Point::from(v));
                INV_2PI * (radius.ln() + refl.ln())
            }
            Repr::Charges { system, weights, constant } => {
                system.charges.iter().zip(weights).map(|(s, w)| w * (x - s).norm().ln()).sum::<f64>() + constant
            }
        }
    }

    /// Gradient of the regular part in x.
    pub fn regular_gradient(&self, x: Point) -> Vector {
        match &self.repr {
            Repr::Disk { .. } => {
                let h = 1e-6;
                let dx = Vector::new(h, 0.0);
                let dy = Vector::new(0.0, h);
                Vector::new(
                    (self.regular(x + dx) - self.regular(x - dx)) / (2.0 * h),
                    (self.regular(x + dy) - self.regular(x - dy)) / (2.0 * h),
                )
            }
            Repr::Charges { system, weights, .. } => system
                .charges
                .iter()
                .zip(weights)
                .map(|(s, w)| {
                    let d = x - s;
                    d * (w / d.norm_squared())
                })
                .sum(),
        }
    }

    pub fn value(&self, x: Point) -> Result<f64> {
        let r = (x - self.pole).norm();
        if r == 0.0 {
            return Err(Error::Singularity { x: x.x, y: x.y });
        }
        Ok(-INV_2PI * r.ln() + self.regular(x))
    }

    /// Robin value `gamma(pole)`: mean of the regular part over circles of
    /// radius r, r/2, r/4 around the pole, Richardson-extrapolated to r = 0.
    pub fn robin(&self, r: f64) -> f64 {
        let mean = |rad: f64| -> f64 {
            let m = 16;
            (0..m)
                .map(|k| {
                    let t = TAU * (k as f64 + 0.5) / m as f64;
                    self.regular(self.pole + Vector::new(t.cos(), t.sin()) * rad)
                })
                .sum::<f64>()
                / m as f64
        };
        let (m1, m2, m4) = (mean(r), mean(r / 2.0), mean(r / 4.0));
        // Error expansion in even powers of r.
        let r1 = (4.0 * m2 - m1) / 3.0;
        let r2 = (4.0 * m4 - m2) / 3.0;
        (16.0 * r2 - r1) / 15.0
    }

    /// Largest |G| over `n` boundary points not used in the fit.
    pub fn boundary_residual(&self, domain: &Domain, n: usize) -> f64 {
        (0..n)
            .map(|i| {
                let x = domain.boundary_point((i as f64 + 0.37) / n as f64);
                self.value(x).map(f64::abs).unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }
}

/// Radius used for the regular-part extrapolation at `x0`.
pub fn extrapolation_radius(domain: &Domain, x0: Point) -> f64 {
    (0.05 * domain.inradius()).min(0.5 * domain.distance_to_boundary(x0))
}

/// Robin value with the diagnostics behind it.
#[derive(Clone, Debug)]
pub struct RobinEstimate {
    pub point: Point,
    pub gamma: f64,
    pub residual: f64,
    pub warning: Option<String>,
}

impl ChargeSystem {
    pub fn robin(self: &Arc<Self>, x0: Point) -> Result<RobinEstimate> {
        let dist = self.domain.distance_to_boundary(x0);
        let g = self.evaluator(x0)?;
        let gamma = g.robin(extrapolation_radius(&self.domain, x0));
        let residual = g.boundary_residual(&self.domain, 4 * self.charges.len());
        let warning = (dist < 2.0 * self.collocation_spacing())
            .then(|| format!("pole ({:.6}, {:.6}) is within two collocation spacings of the boundary", x0.x, x0.y));
        Ok(RobinEstimate { point: x0, gamma, residual, warning })
    }
}

/// Robin function `gamma(x0)` by fundamental solutions with `n` charges.
pub fn robin_numeric(domain: &Domain, x0: Point, n: usize) -> Result<f64> {
    let est = ChargeSystem::new(domain, n)?.robin(x0)?;
    if est.residual > RESIDUAL_TOL {
        return Err(Error::Accuracy(format!(
            "Dirichlet residual {:.3e} exceeds {RESIDUAL_TOL:.0e} with {n} charges",
            est.residual
        )));
    }
    Ok(est.gamma)
}

#[derive(Clone, Debug)]
pub struct RobinOptions {
    /// Grid points along the longer side of the bounding box.
    pub grid: usize,
    pub charges: usize,
    /// Samples closer than this fraction of the diameter to the boundary are skipped.
    pub boundary_margin: f64,
    pub residual_tol: f64,
    /// Allowed change of the supremum when the charge count is doubled.
    pub convergence_tol: f64,
    /// Number of best grid points refined by local ascent.
    pub refine: usize,
}

impl Default for RobinOptions {
    fn default() -> Self {
        RobinOptions {
            grid: 41,
            charges: 256,
            boundary_margin: 0.02,
            residual_tol: RESIDUAL_TOL,
            convergence_tol: 1e-6,
            refine: 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceCheck {
    pub charges: usize,
    pub gamma: f64,
    pub doubled_gamma: f64,
    pub passed: bool,
}

/// Sampled Robin function and its supremum for one domain.
#[derive(Clone, Debug)]
pub struct RobinReport {
    pub domain: Domain,
    pub method: GreenMethod,
    pub samples: Vec<(Point, f64)>,
    pub gamma_sup: f64,
    pub argmax: Point,
    /// Distinct local maxima reached by the refinement, best first.
    pub local_maxima: Vec<(Point, f64)>,
    pub residual: f64,
    pub condition: f64,
    pub convergence: ConvergenceCheck,
    pub corners: bool,
    pub warnings: Vec<String>,
}

impl RobinReport {
    /// Whether every numerical gate of the report passed.
    pub fn gates_passed(&self, opts: &RobinOptions) -> bool {
        self.convergence.passed && self.residual <= opts.residual_tol
    }
}

/// Samples `gamma` on an interior grid and refines the best points by quasi-Newton ascent.
pub fn robin_sup(domain: &Domain, opts: &RobinOptions) -> Result<RobinReport> {
    let system = ChargeSystem::new(domain, opts.charges)?;
    let margin = opts.boundary_margin * domain.diameter();
    let (lo, hi) = domain.bounding_box();
    let span = (hi.x - lo.x).max(hi.y - lo.y);
    let step = span / (opts.grid.max(2) - 1) as f64;
    let nx = ((hi.x - lo.x) / step).floor() as usize + 1;
    let ny = ((hi.y - lo.y) / step).floor() as usize + 1;
    let ox = 0.5 * (hi.x - lo.x - (nx - 1) as f64 * step);
    let oy = 0.5 * (hi.y - lo.y - (ny - 1) as f64 * step);
    let grid: Vec<Point> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| Point::new(lo.x + ox + i as f64 * step, lo.y + oy + j as f64 * step))
        .filter(|&p| domain.contains(p) && domain.distance_to_boundary(p) >= margin)
        .collect();
    if grid.is_empty() {
        return Err(Error::InvalidParameters("robin grid has no interior points".into()));
    }

    let estimates: Vec<Result<RobinEstimate>> = grid.par_iter().map(|&p| system.robin(p)).collect();
    let mut warnings = Vec::new();
    let mut samples = Vec::with_capacity(grid.len());
    let mut excluded = 0;
    for (p, est) in grid.iter().zip(estimates) {
        match est {
            Ok(e) if e.residual <= opts.residual_tol => samples.push((*p, e.gamma)),
            Ok(_) => excluded += 1,
            Err(e) => warnings.push(format!("sample ({:.6}, {:.6}) failed: {e}", p.x, p.y)),
        }
    }
    if excluded > 0 {
        warnings.push(format!("{excluded} grid samples excluded: Dirichlet residual above {:.0e}", opts.residual_tol));
    }
    if samples.is_empty() {
        return Err(Error::Accuracy("no grid sample met the residual gate".into()));
    }

    // Best grid points; ties within 1e-9 keep grid order.
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        let (ga, gb) = (samples[a].1, samples[b].1);
        if (ga - gb).abs() <= 1e-9 {
            a.cmp(&b)
        } else {
            gb.total_cmp(&ga)
        }
    });
    let starts: Vec<Point> = order.iter().take(opts.refine.max(1)).map(|&k| samples[k].0).collect();
    let refined: Vec<(Point, f64)> = starts.par_iter().map(|&p| ascend(&system, p, margin)).collect::<Result<_>>()?;

    let mut local_maxima: Vec<(Point, f64)> = Vec::new();
    for (p, g) in refined {
        if !local_maxima.iter().any(|(q, _)| (p - q).norm() < 1e-3 * domain.diameter()) {
            local_maxima.push((p, g));
        }
    }
    local_maxima.sort_by(
        |a, b| {
            if (a.1 - b.1).abs() <= 1e-9 {
                std::cmp::Ordering::Equal
            } else {
                b.1.total_cmp(&a.1)
            }
        },
    );
    let (argmax, gamma_sup) = local_maxima[0];

    let best = system.robin(argmax)?;
    let doubled = ChargeSystem::new(domain, 2 * opts.charges)?.robin(argmax)?;
    let convergence = ConvergenceCheck {
        charges: opts.charges,
        gamma: best.gamma,
        doubled_gamma: doubled.gamma,
        passed: (best.gamma - doubled.gamma).abs() <= opts.convergence_tol,
    };
    if !convergence.passed {
        warnings
            .push(format!("doubling the charge count moved gamma_sup by {:.3e}", (best.gamma - doubled.gamma).abs()));
    }
    if domain.has_corners() {
        warnings.push("domain has corners; boundary regularity is reduced".into());
    }
    if let Some(w) = best.warning {
        warnings.push(w);
    }

    Ok(RobinReport {
        domain: domain.clone(),
        method: GreenMethod::FundamentalSolutions { charges: opts.charges, offset: CHARGE_DILATION },
        samples,
        gamma_sup,
        argmax,
        local_maxima,
        residual: best.residual,
        condition: system.condition(),
        convergence,
        corners: domain.has_corners(),
        warnings,
    })
}

/// BFGS ascent of `gamma` from `start`, kept at least `margin` from the boundary.
fn ascend(system: &Arc<ChargeSystem>, start: Point, margin: f64) -> Result<(Point, f64)> {
    let domain = system.domain();
    let admissible = |p: Point| domain.contains(p) && domain.distance_to_boundary(p) >= margin;
    let f = |p: Point| -> Result<f64> {
        let g = system.evaluator(p)?;
        Ok(g.regular(p))
    };
    let fd = 1e-5 * domain.diameter();
    let grad = |p: Point| -> Result<Vector> {
        let dx = Vector::new(fd, 0.0);
        let dy = Vector::new(0.0, fd);
        Ok(Vector::new((f(p + dx)? - f(p - dx)?) / (2.0 * fd), (f(p + dy)? - f(p - dy)?) / (2.0 * fd)))
    };
    let mut x = start;
    let mut fx = f(x)?;
    let mut g = grad(x)?;
    let mut hinv = nalgebra::Matrix2::<f64>::identity() * (0.05 * domain.diameter());
    for _ in 0..100 {
        if g.norm() < 1e-10 {
            break;
        }
        let mut dir = hinv * g;
        if dir.dot(&g) <= 0.0 {
            hinv = nalgebra::Matrix2::identity() * (0.05 * domain.diameter());
            dir = hinv * g;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let y = x + dir * t;
            if admissible(y) {
                let fy = f(y)?;
                if fy >= fx + 1e-4 * t * dir.dot(&g) {
                    accepted = Some((y, fy));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((y, fy)) = accepted else { break };
        let gy = grad(y)?;
        let s = y - x;
        // Ascent: curvature pair for the negated objective.
        let yv = g - gy;
        let sy = s.dot(&yv);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i = nalgebra::Matrix2::<f64>::identity();
            hinv = (i - s * yv.transpose() * rho) * hinv * (i - yv * s.transpose() * rho) + s * s.transpose() * rho;
        }
        let done = s.norm() < 1e-12 * domain.diameter();
        x = y;
        fx = fy;
        g = gy;
        if done {
            break;
        }
    }
    Ok((x, system.robin(x)?.gamma))
}
