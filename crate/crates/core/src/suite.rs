//! The six area-`pi` reference domains, the composite checks built on them and
//! the acceptance battery.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blowup::{analyze, blowup_trace, BlowupTrace, Classification, DEFAULT_WINDOW};
use crate::discretization::fem::dirichlet_energy;
use crate::discretization::{triangulate, triangulate_graded, Field, Grading, Mesh};
use crate::error::Result;
use crate::functional::{
    continuation, disk_energy, eval_I, grad_I, minimize, mt_bound_check, FunctionalParams, MeshPolicy, CRITICAL_LAMBDA,
};
use crate::geometry::{Domain, DomainKind, Point, Vector};
use crate::greens::{
    robin_sup, strip_gamma, strip_robin, ChargeSystem, GreenEvaluator, RobinOptions, RobinReport, RESIDUAL_TOL,
};
use crate::rearrangement::{phi_comparison, polya_szego_slack, symmetrize};
use crate::testfn::{testfn_grid, TestfnTable, DEFAULT_EPSILONS, DEFAULT_SHAPES};

/// Coefficients of the perturbed-disk member before area normalization.
pub const FOURIER_COEFFICIENTS: [f64; 7] = [1.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.05];

/// Width threshold `pi / (2 sqrt e)` below which the critical infimum is attained.
pub fn strip_threshold() -> f64 {
    PI / (2.0 * 0.5f64.exp())
}

#[derive(Clone, Debug)]
pub struct SuiteDomain {
    pub name: &'static str,
    pub domain: Domain,
}

pub fn suite_domains() -> Result<Vec<SuiteDomain>> {
    let s = PI.sqrt();
    let r2 = 2f64.sqrt();
    Ok(vec![
        SuiteDomain { name: "disk", domain: Domain::disk(1.0)? },
        SuiteDomain { name: "square", domain: Domain::rectangle(s, s)? },
        SuiteDomain { name: "ellipse-2:1", domain: Domain::ellipse(r2, 1.0 / r2)? },
        SuiteDomain { name: "ellipse-4:1", domain: Domain::ellipse(2.0, 0.5)? },
        SuiteDomain { name: "rectangle-0.8", domain: Domain::rectangle(PI / 0.8, 0.8)? },
        SuiteDomain { name: "fourier", domain: Domain::fourier(FOURIER_COEFFICIENTS.to_vec())?.normalize_area(PI)? },
    ])
}

/// Acceptance tolerances; `scaled` multiplies every entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub robin_residual: f64,
    pub robin_convergence: f64,
    /// Allowed shortfall of an energy estimate below `-1`.
    pub energy: f64,
    /// Least excess `E + 1` for non-disk domains.
    pub excess: f64,
    /// Relative Polya–Szego slack and absolute energy comparison budget.
    pub rearrangement: f64,
    pub testfn_margin: f64,
    pub bubble_distance: f64,
    pub lower_bound_budget: f64,
    pub mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            robin_residual: 1e-6,
            robin_convergence: 1e-6,
            energy: 1e-2,
            excess: 4.0 * PI * 1e-3,
            rearrangement: 1e-2,
            testfn_margin: 5e-2,
            bubble_distance: 5e-2,
            lower_bound_budget: 5e-2,
            mass: 2e-2,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Tolerances {
            robin_residual: self.robin_residual * s,
            robin_convergence: self.robin_convergence * s,
            energy: self.energy * s,
            excess: self.excess * s,
            rearrangement: self.rearrangement * s,
            testfn_margin: self.testfn_margin * s,
            bubble_distance: self.bubble_distance * s,
            lower_bound_budget: self.lower_bound_budget * s,
            mass: self.mass * s,
        }
    }

    pub fn robin_options(&self) -> RobinOptions {
        RobinOptions {
            residual_tol: self.robin_residual,
            convergence_tol: self.robin_convergence,
            ..Default::default()
        }
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("robin_residual", self.robin_residual),
            ("robin_convergence", self.robin_convergence),
            ("energy", self.energy),
            ("excess", self.excess),
            ("rearrangement", self.rearrangement),
            ("testfn_margin", self.testfn_margin),
            ("bubble_distance", self.bubble_distance),
            ("lower_bound_budget", self.lower_bound_budget),
            ("mass", self.mass),
        ]
    }
}

/// Coupling used for the rearrangement comparison.
pub const COMPARISON_LAMBDA: f64 = 6.0 * PI;

/// Energy estimate and rearrangement comparison for one area-normalized domain.
#[derive(Clone, Debug)]
pub struct EnergyComparisonRow {
    pub name: String,
    pub gamma_sup: f64,
    /// `-1 - 4 pi gamma(Omega)`.
    pub estimate: f64,
    pub is_disk: bool,
    pub ps_slack: f64,
    pub energy: f64,
    /// `I(u)` of the minimizer on the domain and `I(u*)` of its rearrangement on the disk.
    pub i_field: f64,
    pub i_star: f64,
    pub failures: Vec<String>,
}

impl EnergyComparisonRow {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn unit_disk_mesh(h: f64) -> Result<Arc<Mesh>> {
    Ok(Arc::new(triangulate(&Domain::disk(1.0)?, h)?))
}

/// `domain` must already have area `pi`; `robin` is its `robin_sup` report.
pub fn energy_comparison_row(
    name: &str,
    domain: &Domain,
    robin: &RobinReport,
    h: f64,
    tol: &Tolerances,
) -> Result<EnergyComparisonRow> {
    let estimate = -1.0 - 4.0 * PI * robin.gamma_sup;
    let is_disk = matches!(domain.kind(), DomainKind::Disk { .. });
    let mesh = Arc::new(triangulate(domain, h)?);
    let p = FunctionalParams::new(COMPARISON_LAMBDA, 0.0)?;
    let u = minimize(&mesh, &p, &Field::zeros(Arc::clone(&mesh)))?.field;
    let disk = unit_disk_mesh(h)?;
    let star = symmetrize(&u, &disk);
    let energy = dirichlet_energy(&u);
    let ps_slack = polya_szego_slack(&u, &disk);
    let (i_field, i_star) = (eval_I(&u, &p)?, eval_I(&star, &p)?);
    let mut failures = Vec::new();
    if estimate < -1.0 - tol.energy {
        failures.push(format!("estimate {estimate:.6} below -1 - {}", tol.energy));
    }
    if is_disk && (estimate + 1.0).abs() > tol.energy {
        failures.push(format!("disk estimate {estimate:.6} not within {} of -1", tol.energy));
    }
    if !is_disk && estimate + 1.0 < tol.excess {
        failures.push(format!("excess {:.6} below {:.6}", estimate + 1.0, tol.excess));
    }
    if ps_slack < -tol.rearrangement * energy {
        failures.push(format!("Polya-Szego slack {ps_slack:.3e} below -{} energy", tol.rearrangement));
    }
    if i_star > i_field + tol.rearrangement {
        failures.push(format!("I(u*) = {i_star:.6} exceeds I(u) = {i_field:.6}"));
    }
    Ok(EnergyComparisonRow {
        name: name.to_string(),
        gamma_sup: robin.gamma_sup,
        estimate,
        is_disk,
        ps_slack,
        energy,
        i_field,
        i_star,
        failures,
    })
}

pub fn energy_comparison_table(rows: &[EnergyComparisonRow]) -> String {
    let mut s = String::from("domain\tgamma_sup\testimate\texcess\tps_slack\tI(u)\tI(u*)\tstatus\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{:.8}\t{:.8}\t{:.8}\t{:.4e}\t{:.8}\t{:.8}\t{}",
            r.name,
            r.gamma_sup,
            r.estimate,
            r.estimate + 1.0,
            r.ps_slack,
            r.i_field,
            r.i_star,
            if r.passed() { "ok".to_string() } else { r.failures.join("; ") }
        );
    }
    s
}

/// `{4, 6, 7, 7.5, 7.6, 7.7, 7.8, 7.9} pi`.
pub fn default_schedule() -> Vec<f64> {
    [4.0, 6.0, 7.0, 7.5, 7.6, 7.7, 7.8, 7.9].iter().map(|k| k * PI).collect()
}

#[derive(Clone, Debug)]
pub struct StripVerdict {
    pub width: f64,
    pub direction: f64,
    pub satisfied: bool,
    pub trace: BlowupTrace,
}

impl StripVerdict {
    pub fn verdict(&self) -> String {
        let t = strip_threshold();
        if self.satisfied {
            format!("criterion satisfied: {:.4} ≤ {t:.4}", self.width)
        } else {
            format!("criterion violated: {:.4} > {t:.4}", self.width)
        }
    }

    /// A thin domain whose continuation blows up contradicts the attainment criterion.
    pub fn consistent(&self) -> bool {
        !(self.satisfied && self.trace.classification == Classification::Blowup)
    }
}

pub fn strip_check(domain: &Domain, schedule: &[f64], policy: &MeshPolicy) -> Result<StripVerdict> {
    let cover = domain.min_strip_width();
    let (_, trace) = blowup_trace(domain, schedule, 0.0, policy, DEFAULT_WINDOW)?;
    Ok(StripVerdict {
        width: cover.width,
        direction: cover.direction,
        satisfied: cover.width <= strip_threshold(),
        trace,
    })
}

/// `testfn_grid` at the Robin maximizer of an area-normalized domain.
pub fn testfn_bound(
    domain: &Domain,
    robin: &RobinReport,
    epsilons: &[f64],
    shapes: &[f64],
    h: f64,
) -> Result<TestfnTable> {
    let green = GreenEvaluator::for_domain(domain, robin.argmax, robin.convergence.charges)?;
    testfn_grid(domain, &green, robin.gamma_sup, epsilons, shapes, h)
}

/// Smooth random field vanishing on the boundary: a positive trigonometric sum
/// or a Liouville bubble at a random interior point, times a distance cutoff.
pub fn random_field(domain: &Domain, mesh: &Arc<Mesh>, rng: &mut ChaCha8Rng) -> Field {
    let inr = domain.inradius();
    let (c, _) = domain.inscribed_disk();
    let ramp = 0.25 * inr;
    let amp = 10f64.powf(rng.gen_range(-1.0..1.0));
    if rng.gen_bool(0.5) {
        let modes: Vec<(Vector, f64, f64)> = (0..4)
            .map(|_| {
                let w = Vector::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                (w, rng.gen_range(0.0..2.0 * PI), rng.gen_range(-0.5..0.5))
            })
            .collect();
        Field::interpolate(Arc::clone(mesh), true, |x| {
            let cut = (domain.distance_to_boundary(x) / ramp).min(1.0);
            let wave: f64 = modes.iter().map(|(w, ph, a)| a * (w.dot(&x.coords) + ph).sin()).sum();
            amp * cut * (1.0 + 0.5 * wave)
        })
    } else {
        let t = rng.gen_range(0.0..2.0 * PI);
        let center = c + Vector::new(t.cos(), t.sin()) * rng.gen_range(0.0..0.5 * inr);
        let k = 10f64.powf(rng.gen_range(0.0..2.5));
        Field::interpolate(Arc::clone(mesh), true, |x| {
            let cut = (domain.distance_to_boundary(x) / ramp).min(1.0);
            cut * 2.0 * ((1.0 + k) / (1.0 + k * (x - center).norm_squared() / (inr * inr))).ln()
        })
    }
}

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {}: {} ({:.1} s) {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.detail
        )
    }
}

fn outcome(id: usize, title: &'static str, start: Instant, r: Result<(bool, String)>) -> CriterionOutcome {
    let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome { id, title, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

pub fn criterion_1() -> CriterionOutcome {
    let start = Instant::now();
    let r = (|| {
        let d = Domain::disk(1.0)?;
        let system = ChargeSystem::new(&d, 256)?;
        let mut worst: f64 = 0.0;
        let mut residual: f64 = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let r = 0.7 * (i as f64 + 0.5) / 5.0;
                let t = 2.0 * PI * (j as f64 + 0.25 * i as f64) / 5.0;
                let x = Point::new(r * t.cos(), r * t.sin());
                let exact = (1.0 - r * r).ln() / (2.0 * PI);
                let est = system.robin(x)?;
                residual = residual.max(est.residual);
                worst = worst.max((est.gamma - exact).abs());
            }
        }
        let secs = start.elapsed().as_secs_f64();
        Ok((
            worst <= 1e-6 && residual <= RESIDUAL_TOL && secs <= 5.0,
            format!("max error {worst:.2e}, boundary residual {residual:.1e}, budget 5 s"),
        ))
    })();
    outcome(1, "Robin function of the disk", start, r)
}

pub fn criterion_2() -> CriterionOutcome {
    let start = Instant::now();
    let r = (|| {
        let mut worst: f64 = 0.0;
        for d in [0.5, 1.0, PI / 2.0] {
            let sup = golden_max(|a| strip_robin(a, d).unwrap_or(f64::NEG_INFINITY), 1e-9 * d, d * (1.0 - 1e-9));
            worst = worst.max((sup - (2.0 * d / PI).ln() / (2.0 * PI)).abs());
        }
        let at_half_pi = strip_robin(PI / 4.0, PI / 2.0)?;
        let ok = worst <= 1e-10 && strip_gamma(PI / 2.0) == 0.0 && at_half_pi.abs() <= 1e-15;
        Ok((ok, format!("max error {worst:.2e}, gamma(pi/2) = {at_half_pi:e}")))
    })();
    outcome(2, "strip closed forms", start, r)
}

/// Robin reports of the suite, computed once per battery.
pub fn suite_reports(tol: &Tolerances) -> Result<Vec<(SuiteDomain, RobinReport)>> {
    let opts = tol.robin_options();
    suite_domains()?
        .into_par_iter()
        .map(|m| {
            let r = robin_sup(&m.domain, &opts)?;
            Ok((m, r))
        })
        .collect()
}

pub fn criterion_3(reports: &Result<Vec<(SuiteDomain, RobinReport)>>, seconds: f64) -> CriterionOutcome {
    let start = Instant::now();
    let r = match reports {
        Err(e) => Err(crate::Error::Accuracy(e.to_string())),
        Ok(reports) => {
            let mut ok = seconds <= 120.0;
            let mut detail = String::new();
            for (m, r) in reports {
                let g = r.gamma_sup;
                let good = g <= 1e-4 && if m.name == "disk" { g.abs() <= 1e-5 } else { g <= -1e-3 };
                ok &= good;
                let _ = write!(detail, "{} {g:.7}; ", m.name);
            }
            Ok((ok, format!("{detail}budget 120 s")))
        }
    };
    let mut out = outcome(3, "Robin suprema of the suite", start, r);
    out.seconds += seconds;
    out
}

pub fn criterion_4() -> CriterionOutcome {
    let start = Instant::now();
    let r = (|| {
        let lambdas: Vec<f64> = [4.0, 6.0, 7.0, 7.5, 7.9].iter().map(|k| k * PI).collect();
        let trace = continuation(&Domain::disk(1.0)?, &lambdas, 0.0, &MeshPolicy::default())?;
        if let Some(t) = &trace.truncated {
            return Ok((false, t.clone()));
        }
        let mut worst: f64 = 0.0;
        let mut vertices = 0;
        for s in &trace.steps {
            worst = worst.max((s.result.energy - disk_energy(s.result.lambda)).abs());
            vertices = vertices.max(s.vertices);
        }
        let secs = start.elapsed().as_secs_f64();
        Ok((
            worst <= 1e-2 && vertices <= 100_000 && secs <= 600.0,
            format!("max |E - oracle| {worst:.2e}, {vertices} vertices"),
        ))
    })();
    outcome(4, "subcritical disk energies", start, r)
}

pub fn criterion_5(reports: &Result<Vec<(SuiteDomain, RobinReport)>>, tol: &Tolerances) -> CriterionOutcome {
    let start = Instant::now();
    let r = (|| {
        let reports = reports.as_ref().map_err(|e| crate::Error::Accuracy(e.to_string()))?;
        let rows = reports
            .par_iter()
            .map(|(m, r)| energy_comparison_row(m.name, &m.domain, r, 0.05, tol))
            .collect::<Result<Vec<_>>>()?;
        let failures: Vec<String> =
            rows.iter().flat_map(|r| r.failures.iter().map(move |f| format!("{}: {f}", r.name))).collect();
        let min = rows.iter().map(|r| r.estimate).fold(f64::INFINITY, f64::min);
        Ok((failures.is_empty(), format!("min estimate {min:.6} {}", failures.join("; "))))
    })();
    outcome(5, "energy estimates against the disk", start, r)
}

pub fn criterion_6(reports: &Result<Vec<(SuiteDomain, RobinReport)>>, tol: &Tolerances) -> CriterionOutcome {
    let start = Instant::now();
    let r = (|| {
        let reports = reports.as_ref().map_err(|e| crate::Error::Accuracy(e.to_string()))?;
        let mut ok = true;
        let mut detail = String::new();
        for (m, r) in reports {
            let table = testfn_bound(&m.domain, r, &DEFAULT_EPSILONS, &DEFAULT_SHAPES, 0.05)?;
            let best = table.best().and_then(|b| b.value.clone().ok()).unwrap_or(f64::INFINITY);
            let target = -1.0 - 4.0 * PI * r.gamma_sup + tol.testfn_margin;
            ok &= best <= target;
            let _ = write!(detail, "{} {best:.4} <= {target:.4}; ", m.name);
        }
        Ok((ok, detail))
    })();
    outcome(6, "glued test function bound", start, r)
}

pub fn criterion_7() -> CriterionOutcome {
    let start = Instant::now();
    let r = (|| {
        let policy = MeshPolicy::default();
        let rect = strip_check(&Domain::rectangle(PI / 0.8, 0.8)?, &default_schedule(), &policy)?;
        let disk = strip_check(&Domain::disk(1.0)?, &default_schedule(), &policy)?;
        let ok = rect.satisfied
            && rect.trace.classification == Classification::Bounded
            && !disk.satisfied
            && disk.trace.classification == Classification::Blowup;
        Ok((
            ok,
            format!(
                "rectangle: {}, {}; disk: {}, {}",
                rect.verdict(),
                rect.trace.classification,
                disk.verdict(),
                disk.trace.classification
            ),
        ))
    })();
    outcome(7, "covering strip criterion and continuation probe", start, r)
}

pub fn criterion_8(tol: &Tolerances) -> CriterionOutcome {
    let start = Instant::now();
    let r = (|| {
        let d = Domain::disk(1.0)?;
        let trace = continuation(&d, &default_schedule(), 0.0, &MeshPolicy::default())?;
        let an = analyze(&d, &trace, DEFAULT_WINDOW)?;
        let last = an.steps.last().ok_or_else(|| crate::Error::Accuracy("empty trace".into()))?;
        let dist = last.profile_error.unwrap_or(f64::INFINITY);
        let oracle = 2.0 * (16.0f64 / 17.0).ln();
        let ok = (last.lambda - 7.9 * PI).abs() < 1e-12
            && dist <= tol.bubble_distance
            && (last.d_eps - oracle).abs() <= 1e-2;
        Ok((ok, format!("bubble distance {dist:.4}, D_eps {:.5} vs {oracle:.5}", last.d_eps)))
    })();
    outcome(8, "bubble profile on the disk", start, r)
}

pub fn criterion_9(seed: u64, tol: &Tolerances) -> CriterionOutcome {
    let start = Instant::now();
    let r = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let suite = suite_domains()?;
        let meshes = suite.iter().map(|m| Ok(Arc::new(triangulate(&m.domain, 0.06)?))).collect::<Result<Vec<_>>>()?;
        let disk = unit_disk_mesh(0.05)?;
        let mut mt_min = f64::INFINITY;
        for k in 0..200 {
            let j = k % suite.len();
            let f = random_field(&suite[j].domain, &meshes[j], &mut rng);
            mt_min = mt_min.min(mt_bound_check(&f));
        }
        let mut ps_worst = f64::INFINITY;
        let mut cmp_worst = f64::NEG_INFINITY;
        let p = FunctionalParams::new(COMPARISON_LAMBDA, 0.0)?;
        let fields: Vec<Field> = (0..100)
            .map(|k| {
                let j = k % suite.len();
                random_field(&suite[j].domain, &meshes[j], &mut rng)
            })
            .collect();
        let ps: Vec<(f64, f64)> = fields
            .par_iter()
            .map(|f| {
                let star = symmetrize(f, &disk);
                let slack = polya_szego_slack(f, &disk) / dirichlet_energy(f);
                let cmp = eval_I(&star, &p).unwrap_or(f64::INFINITY) - eval_I(f, &p).unwrap_or(f64::NEG_INFINITY);
                (slack, cmp)
            })
            .collect();
        for (s, c) in ps {
            ps_worst = ps_worst.min(s);
            cmp_worst = cmp_worst.max(c);
        }
        let mut fd_worst: f64 = 0.0;
        let dm = &meshes[0];
        for _ in 0..20 {
            let f = random_field(&suite[0].domain, dm, &mut rng);
            let dir = random_field(&suite[0].domain, dm, &mut rng);
            let p = FunctionalParams::new(rng.gen_range(1.0..CRITICAL_LAMBDA), rng.gen_range(0.0..0.5))?;
            fd_worst = fd_worst.max(directional_fd_error(&f, &dir, &p)?);
        }
        let ok =
            mt_min >= -1e-3 && ps_worst >= -tol.rearrangement && cmp_worst <= tol.rearrangement && fd_worst <= 1e-6;
        Ok((
            ok,
            format!(
                "MT slack min {mt_min:.3e}; PS slack/energy min {ps_worst:.3e}; I(u*) - I(u) max {cmp_worst:.3e}; gradient rel err {fd_worst:.2e}"
            ),
        ))
    })();
    outcome(9, "property suites", start, r)
}

/// Relative mismatch between the analytic directional derivative and a central difference.
pub fn directional_fd_error(f: &Field, dir: &Field, p: &FunctionalParams) -> Result<f64> {
    let g = grad_I(f, p)?;
    let norm = dir.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let unit: Vec<f64> = dir.values().iter().map(|v| v / norm).collect();
    let analytic: f64 = g.values().iter().zip(&unit).map(|(a, b)| a * b).sum();
    let s = 1e-4;
    let shifted = |sign: f64| -> Result<f64> {
        let vals: Vec<f64> = f.values().iter().zip(&unit).map(|(a, b)| a + sign * s * b).collect();
        eval_I(&Field::new(Arc::clone(f.mesh()), vals)?, p)
    };
    let fd = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * s);
    Ok((fd - analytic).abs() / analytic.abs().max(1e-300))
}

/// Disk Green's function with pole 0 on a mesh graded to `1e-6` at the pole.
pub fn disk_green_field() -> Result<Field> {
    let d = Domain::disk(1.0)?;
    let m = Arc::new(triangulate_graded(&d, 0.05, Grading::new(Point::origin(), 1e-6))?);
    Ok(Field::interpolate(m, true, |p| -(p.coords.norm().max(5e-7)).ln() / (2.0 * PI)))
}

pub fn criterion_10() -> CriterionOutcome {
    let start = Instant::now();
    let r = (|| {
        let f = disk_green_field()?;
        let phis: Vec<f64> = (0..=10).map(|k| phi_comparison(&f, 0.5 + 0.1 * k as f64, 32)).collect();
        let (lo, hi) = phis.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        Ok((lo >= 0.0 && hi <= 1e-2, format!("phi(t) in [{lo:.3e}, {hi:.3e}] for t in [0.5, 1.5]")))
    })();
    outcome(10, "level-set comparison on the disk", start, r)
}

/// Runs criteria 1 to 10 in order.
pub fn battery(seed: u64, tol: &Tolerances) -> Vec<CriterionOutcome> {
    let mut out = vec![criterion_1(), criterion_2()];
    let start = Instant::now();
    let reports = suite_reports(tol);
    let secs = start.elapsed().as_secs_f64();
    out.push(criterion_3(&reports, secs));
    out.push(criterion_4());
    out.push(criterion_5(&reports, tol));
    out.push(criterion_6(&reports, tol));
    out.push(criterion_7());
    out.push(criterion_8(tol));
    out.push(criterion_9(seed, tol));
    out.push(criterion_10());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_members_have_area_pi() {
        let s = suite_domains().unwrap();
        assert_eq!(s.len(), 6);
        for m in &s {
            assert!((m.domain.area() - PI).abs() < 1e-9, "{}: {}", m.name, m.domain.area());
        }
    }

    #[test]
    fn threshold_value() {
        assert!((strip_threshold() - 0.9527).abs() < 1e-4);
    }

    #[test]
    fn golden_max_finds_the_midline() {
        let v = golden_max(|a| strip_robin(a, 1.0).unwrap(), 1e-9, 1.0 - 1e-9);
        assert!((v - strip_gamma(1.0)).abs() < 1e-12);
    }

    #[test]
    fn tolerances_scale() {
        let t = Tolerances::default().scaled(2.0);
        assert_eq!(t.energy, 2e-2);
        assert_eq!(t.entries().len(), 9);
    }

    #[test]
    fn random_fields_are_admissible() {
        let d = Domain::ellipse(2.0, 0.5).unwrap();
        let m = Arc::new(triangulate(&d, 0.1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let f = random_field(&d, &m, &mut rng);
            assert!(f.is_admissible());
            assert!(f.values().iter().all(|v| v.is_finite()));
        }
    }
}
