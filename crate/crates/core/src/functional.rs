//! The functional `I(u) = (1/2 lambda) int |grad u|^2 - (1 - eps) ln((1/|Omega|) int e^u)`,
//! its minimization, and continuation in lambda.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::sparse::SparseColMat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::fem::{
    assemble, dirichlet_energy_values, exp_integral_values, local_stiffness, spmv, stiffness_free, SparseFactor,
};
use crate::discretization::{triangulate, triangulate_graded, Field, Grading, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::greens::{robin_sup, RobinOptions};

pub const CRITICAL_LAMBDA: f64 = 8.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalParams {
    pub lambda: f64,
    pub epsilon: f64,
    /// `|Omega|` in the log term; the mesh area when unset.
    pub area: Option<f64>,
}

impl FunctionalParams {
    pub fn new(lambda: f64, epsilon: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= CRITICAL_LAMBDA * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameters(format!("lambda = {lambda} must lie in (0, 8 pi]")));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidParameters(format!("epsilon = {epsilon} must lie in [0, 1)")));
        }
        Ok(FunctionalParams { lambda, epsilon, area: None })
    }

    /// The regularized critical functional with `lambda = 8 pi`.
    pub fn regularized(epsilon: f64) -> Result<Self> {
        Self::new(CRITICAL_LAMBDA, epsilon)
    }

    pub fn with_area(mut self, area: f64) -> Self {
        self.area = Some(area);
        self
    }

    fn area_for(&self, mesh: &Mesh) -> f64 {
        self.area.unwrap_or_else(|| mesh.area())
    }

    fn is_critical(&self) -> bool {
        self.lambda >= CRITICAL_LAMBDA * (1.0 - 1e-12) && self.epsilon == 0.0
    }
}

fn value_parts(mesh: &Mesh, u: &[f64], p: &FunctionalParams) -> f64 {
    let d = dirichlet_energy_values(mesh, u);
    let q = exp_integral_values(mesh, u);
    d / (2.0 * p.lambda) - (1.0 - p.epsilon) * (q.ln() - p.area_for(mesh).ln())
}

/// Value of the discrete functional on an admissible field.
#[allow(non_snake_case)]
pub fn eval_I(f: &Field, p: &FunctionalParams) -> Result<f64> {
    f.check_admissible()?;
    Ok(value_parts(f.mesh(), f.values(), p))
}

/// Derivatives of `Q(u) = int e^u` (edge-midpoint rule), scaled by `e^-shift`.
struct ExpDerivatives {
    /// `dQ/du_i / Q`.
    grad: Vec<f64>,
}

fn exp_derivatives(mesh: &Mesh, u: &[f64]) -> ExpDerivatives {
    let shift = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut grad = vec![0.0; u.len()];
    let mut q = 0.0;
    for (t, g) in mesh.triangles().iter().zip(mesh.geometry()) {
        let w = g.area / 3.0;
        for k in 0..3 {
            let (i, j) = (t[k], t[(k + 1) % 3]);
            let e = w * (0.5 * (u[i] + u[j]) - shift).exp();
            q += e;
            grad[i] += 0.5 * e;
            grad[j] += 0.5 * e;
        }
    }
    grad.iter_mut().for_each(|g| *g /= q);
    ExpDerivatives { grad }
}

fn gradient_values(
    mesh: &Mesh,
    k: &SparseColMat<usize, f64>,
    free: &[usize],
    u: &[f64],
    p: &FunctionalParams,
) -> Vec<f64> {
    let uf: Vec<f64> = free.iter().map(|&i| u[i]).collect();
    let ku = spmv(k, &uf);
    let ed = exp_derivatives(mesh, u);
    free.iter().zip(ku).map(|(&i, kui)| kui / p.lambda - (1.0 - p.epsilon) * ed.grad[i]).collect()
}

/// Nodal gradient of the discrete functional; zero on boundary vertices.
#[allow(non_snake_case)]
pub fn grad_I(f: &Field, p: &FunctionalParams) -> Result<Field> {
    f.check_admissible()?;
    let mesh = f.mesh();
    let (free, _) = mesh.free_dofs();
    let k = stiffness_free(mesh)?;
    let g = gradient_values(mesh, &k, &free, f.values(), p);
    let mut out = vec![0.0; mesh.vertex_count()];
    for (&i, gi) in free.iter().zip(g) {
        out[i] = gi;
    }
    Field::new(Arc::clone(mesh), out)
}

/// Slack in `int e^u <= |Omega| e exp(int |grad u|^2 / 16 pi)`.
pub fn mt_bound_check(f: &Field) -> f64 {
    let mesh = f.mesh();
    let d = dirichlet_energy_values(mesh, f.values());
    let q = exp_integral_values(mesh, f.values());
    // Compare in a common scale to survive large fields.
    let lhs_ln = mesh.area().ln() + 1.0 + d / (16.0 * PI);
    let scale = lhs_ln.max(q.ln());
    ((lhs_ln - scale).exp() - (q.ln() - scale).exp()) * scale.exp()
}

/// Both sides of the sharp inequality
/// `int |grad w|^2 >= 4 pi (ln(a e^{-2b} / pi r^2) + pi r^2 / (a e^{-2b}) - 1)`
/// for `w = f + b`, `a = int e^{2w}` and `pi r^2 = |Omega|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZhuSides {
    pub energy: f64,
    pub bound: f64,
}

impl ZhuSides {
    pub fn slack(&self) -> f64 {
        self.energy - self.bound
    }
}

pub fn zhu_sides(f: &Field, b: f64) -> ZhuSides {
    let mesh = f.mesh();
    let doubled: Vec<f64> = f.values().iter().map(|v| 2.0 * (v + b)).collect();
    let ln_a = exp_integral_values(mesh, &doubled).ln();
    let x = ln_a - 2.0 * b - mesh.area().ln();
    ZhuSides { energy: dirichlet_energy_values(mesh, f.values()), bound: 4.0 * PI * (x + (-x).exp() - 1.0) }
}

#[derive(Clone, Debug)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { max_iterations: 200, tolerance: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub field: Field,
    pub energy: f64,
    pub lambda: f64,
    pub epsilon: f64,
    /// `lambda_eps = max u`.
    pub max_value: f64,
    /// `x_eps`, where the maximum is attained.
    pub argmax: Point,
    pub grad_norm: f64,
    pub iterations: usize,
    pub mt_slack: f64,
    /// Energies of the accepted iterates, starting with the initial field.
    pub history: Vec<f64>,
}

/// Damped Newton descent with Armijo backtracking.
pub fn minimize(mesh: &Arc<Mesh>, p: &FunctionalParams, init: &Field) -> Result<MinimizeResult> {
    minimize_with(mesh, p, init, &MinimizeOptions::default())
}

pub fn minimize_with(
    mesh: &Arc<Mesh>,
    p: &FunctionalParams,
    init: &Field,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    if p.is_critical() {
        return Err(Error::InvalidParameters(
            "lambda = 8 pi with epsilon = 0 is only approached by continuation".into(),
        ));
    }
    if init.values().len() != mesh.vertex_count() {
        return Err(Error::InvalidParameters("initial field lives on another mesh".into()));
    }
    init.check_admissible()?;
    let (free, index) = mesh.free_dofs();
    let k = stiffness_free(mesh)?;
    let sobolev = SparseFactor::cholesky(&k)?;
    let mut u = init.values().to_vec();
    let mut energy = value_parts(mesh, &u, p);
    let mut history = vec![energy];
    let c = 1.0 - p.epsilon;

    for iter in 0..=opts.max_iterations {
        let g = gradient_values(mesh, &k, &free, &u, p);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= opts.tolerance * (1.0 + energy.abs()) {
            return Ok(finish(mesh, p, u, energy, gnorm, iter, history));
        }
        if iter == opts.max_iterations {
            return Err(Error::Diverged {
                iterations: iter,
                reason: format!("gradient norm {gnorm:.3e} after the iteration limit"),
                last_iterate: u,
            });
        }

        let dir = newton_direction(mesh, p, &index, free.len(), &u, &g, c)
            .filter(|d| {
                let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
                slope < 0.0 && slope.is_finite()
            })
            .unwrap_or_else(|| sobolev.solve(&g).iter().map(|v| -p.lambda * v).collect());
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();

        let trial = |t: f64| -> Vec<f64> {
            let mut v = u.clone();
            for (&i, d) in free.iter().zip(&dir) {
                v[i] += t * d;
            }
            v
        };
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-12 {
            let v = trial(t);
            let e = value_parts(mesh, &v, p);
            if e.is_finite() && e <= energy + 1e-4 * t * slope {
                accepted = Some((v, e));
                break;
            }
            t *= 0.5;
        }
        if accepted.is_none() {
            // Near convergence energy differences drown in rounding; accept the
            // full step if it does not raise the energy beyond that level and
            // reduces the gradient.
            let v = trial(1.0);
            let e = value_parts(mesh, &v, p);
            let gv = gradient_values(mesh, &k, &free, &v, p);
            let gvn = gv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if e <= energy + 1e-13 * (1.0 + energy.abs()) && gvn < gnorm {
                accepted = Some((v, e));
            }
        }
        match accepted {
            Some((v, e)) => {
                u = v;
                energy = e;
                history.push(e);
            }
            None => {
                return Err(Error::Diverged {
                    iterations: iter,
                    reason: format!("line search failed at gradient norm {gnorm:.3e}"),
                    last_iterate: u,
                })
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Solves `(A + c v v^T) d = -g` with `A = K / lambda - c Hq / Q` and `v = grad Q / Q`.
fn newton_direction(
    mesh: &Mesh,
    p: &FunctionalParams,
    index: &[Option<usize>],
    n: usize,
    u: &[f64],
    g: &[f64],
    c: f64,
) -> Option<Vec<f64>> {
    let shift = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let q: f64 = mesh
        .triangles()
        .iter()
        .zip(mesh.geometry())
        .map(|(t, geo)| {
            let e = |a: usize, b: usize| (0.5 * (u[t[a]] + u[t[b]]) - shift).exp();
            geo.area / 3.0 * (e(0, 1) + e(1, 2) + e(2, 0))
        })
        .sum();
    let a = assemble(mesh, index, n, |k, geo| {
        let t = mesh.triangles()[k];
        let mut m = local_stiffness(geo);
        for row in m.iter_mut() {
            row.iter_mut().for_each(|x| *x /= p.lambda);
        }
        let w = geo.area / 3.0 / q;
        for e in 0..3 {
            let (i, j) = (e, (e + 1) % 3);
            let h = 0.25 * w * (0.5 * (u[t[i]] + u[t[j]]) - shift).exp();
            m[i][i] -= c * h;
            m[j][j] -= c * h;
            m[i][j] -= c * h;
            m[j][i] -= c * h;
        }
        m
    })
    .ok()?;
    let ed = exp_derivatives(mesh, u);
    let mut v = vec![0.0; n];
    for (i, idx) in index.iter().enumerate() {
        if let Some(k) = idx {
            v[*k] = ed.grad[i];
        }
    }
    let factor = SparseFactor::cholesky(&a).or_else(|_| SparseFactor::lu(&a)).ok()?;
    let ag = factor.solve(g);
    let av = factor.solve(&v);
    let vag: f64 = v.iter().zip(&ag).map(|(x, y)| x * y).sum();
    let vav: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
    let denom = 1.0 + c * vav;
    if !(denom.abs() > 1e-14) {
        return None;
    }
    let d: Vec<f64> = ag.iter().zip(&av).map(|(x, y)| -(x - c * y * vag / denom)).collect();
    d.iter().all(|x| x.is_finite()).then_some(d)
}

fn finish(
    mesh: &Arc<Mesh>,
    p: &FunctionalParams,
    u: Vec<f64>,
    energy: f64,
    grad_norm: f64,
    iterations: usize,
    history: Vec<f64>,
) -> MinimizeResult {
    let field = Field::new(Arc::clone(mesh), u).expect("length checked");
    let (i, max_value) = field.max();
    let mt_slack = mt_bound_check(&field);
    MinimizeResult {
        argmax: mesh.vertices()[i],
        field,
        energy,
        lambda: p.lambda,
        epsilon: p.epsilon,
        max_value,
        grad_norm,
        iterations,
        mt_slack,
        history,
    }
}

/// Outcome of one start of [`minimize_multistart`].
#[derive(Clone, Debug)]
pub struct Branch {
    pub label: String,
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Clone, Debug)]
pub struct MultiStartResult {
    pub best: MinimizeResult,
    pub branches: Vec<Branch>,
    pub seed: u64,
}

/// Radial bubble `max(0, 2 ln((1 + k) / (1 + k |x - c|^2 / r^2)))` supported in the inscribed disk.
pub fn bubble_initializer(mesh: &Arc<Mesh>, center: Point, radius: f64, k: f64) -> Field {
    Field::interpolate(Arc::clone(mesh), true, |x| {
        let s = (x - center).norm_squared() / (radius * radius);
        (2.0 * ((1.0 + k) / (1.0 + k * s)).ln()).max(0.0)
    })
}

/// Minimizes from zero and from a seeded, perturbed bubble; the lowest energy wins.
pub fn minimize_multistart(
    domain: &Domain,
    mesh: &Arc<Mesh>,
    p: &FunctionalParams,
    seed: u64,
) -> Result<MultiStartResult> {
    let (center, radius) = domain.inscribed_disk();
    let k = if p.lambda < CRITICAL_LAMBDA { (p.lambda / (CRITICAL_LAMBDA - p.lambda)).min(1e3) } else { 1e2 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bubble = bubble_initializer(mesh, center, radius, k);
    for v in bubble.values_mut() {
        *v *= 1.0 + 0.01 * rng.gen_range(-1.0..1.0);
    }
    let starts = [("zero", Field::zeros(Arc::clone(mesh))), ("bubble", bubble)];
    let mut best: Option<MinimizeResult> = None;
    let mut branches = Vec::new();
    let mut last_err = None;
    for (label, init) in starts {
        match minimize(mesh, p, &init) {
            Ok(r) => {
                branches.push(Branch { label: label.into(), outcome: Ok(r.energy) });
                if best.as_ref().map_or(true, |b| r.energy < b.energy) {
                    best = Some(r);
                }
            }
            Err(e) => {
                branches.push(Branch { label: label.into(), outcome: Err(e.to_string()) });
                last_err = Some(e);
            }
        }
    }
    match best {
        Some(best) => Ok(MultiStartResult { best, branches, seed }),
        None => Err(last_err.expect("at least one branch ran")),
    }
}

/// Mesh refinement rules along a continuation.
#[derive(Clone, Debug)]
pub struct MeshPolicy {
    /// Coarse edge length away from the concentration point.
    pub h: f64,
    /// Regrade once `max u` exceeds this.
    pub trigger: f64,
    /// Geometric grading factor.
    pub grading: f64,
    /// Target element size at the maximum, in units of the bubble length `1 / alpha`.
    pub resolution: f64,
    pub max_regrades: usize,
}

impl Default for MeshPolicy {
    fn default() -> Self {
        MeshPolicy { h: 0.05, trigger: 2.0, grading: 0.05, resolution: 0.05, max_regrades: 2 }
    }
}

impl MeshPolicy {
    fn mesh_for(&self, domain: &Domain, focus: Option<(Point, f64)>) -> Result<Arc<Mesh>> {
        Ok(Arc::new(match focus {
            None => triangulate(domain, self.h)?,
            Some((c, size)) => triangulate_graded(
                domain,
                self.h,
                Grading { center: c, factor: self.grading, min_size: size.min(self.h) },
            )?,
        }))
    }
}

/// Bubble scale `alpha` with `tau = e^{lambda_eps / 2}`: `alpha = sqrt((1 - eps) pi / int e^u) tau`.
pub fn concentration_scale(r: &MinimizeResult) -> f64 {
    let ln_q = exp_integral_values(r.field.mesh(), r.field.values()).ln();
    ((1.0 - r.epsilon) * PI).sqrt() * (0.5 * (r.max_value - ln_q)).exp()
}

#[derive(Clone, Debug)]
pub struct ContinuationStep {
    pub result: MinimizeResult,
    pub alpha: f64,
    pub mesh_h: f64,
    pub vertices: usize,
    pub regrades: usize,
    /// `max u` exceeded `2 ln(vertex count)`.
    pub blowup_flag: bool,
}

#[derive(Clone, Debug)]
pub struct ContinuationTrace {
    pub steps: Vec<ContinuationStep>,
    /// Set when a step failed; the trace stops there.
    pub truncated: Option<String>,
}

/// Warm-started minimization along an increasing lambda schedule.
pub fn continuation(domain: &Domain, schedule: &[f64], epsilon: f64, policy: &MeshPolicy) -> Result<ContinuationTrace> {
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameters("schedule must be strictly increasing".into()));
    }
    if epsilon == 0.0 && schedule.iter().any(|&l| l >= CRITICAL_LAMBDA) {
        return Err(Error::InvalidParameters("schedule must stay below 8 pi".into()));
    }
    let mut mesh = policy.mesh_for(domain, None)?;
    let mut current = Field::zeros(Arc::clone(&mesh));
    let mut steps: Vec<ContinuationStep> = Vec::new();
    for &lambda in schedule {
        let p = FunctionalParams::new(lambda, epsilon)?;
        let mut regrades = 0;
        let step = loop {
            let result = match minimize(&mesh, &p, &current) {
                Ok(r) => r,
                Err(_) if regrades < policy.max_regrades => {
                    // Refine around the last known maximum and retry.
                    let (i, _) = current.max();
                    let size = (policy.resolution * mesh.local_size()[i]).max(1e-7);
                    let finer = policy.mesh_for(domain, Some((mesh.vertices()[i], size)))?;
                    current = transfer(&current, &finer);
                    mesh = finer;
                    regrades += 1;
                    continue;
                }
                Err(e) => {
                    return Ok(ContinuationTrace {
                        steps,
                        truncated: Some(format!("blow-up suspected at lambda = {lambda:.6}: {e}")),
                    })
                }
            };
            let alpha = concentration_scale(&result);
            let want = policy.resolution / alpha;
            if result.max_value > policy.trigger
                && regrades < policy.max_regrades
                && want < policy.h
                && mesh.max_edge_near(result.argmax, want) > 2.0 * want
            {
                let finer = policy.mesh_for(domain, Some((result.argmax, want)))?;
                current = transfer(&result.field, &finer);
                mesh = finer;
                regrades += 1;
                continue;
            }
            let vertices = mesh.vertex_count();
            break ContinuationStep {
                blowup_flag: result.max_value > 2.0 * (vertices as f64).ln(),
                alpha,
                mesh_h: policy.h,
                vertices,
                regrades,
                result,
            };
        };
        current = step.result.field.clone();
        steps.push(step);
    }
    Ok(ContinuationTrace { steps, truncated: None })
}

/// Interpolates a field onto another mesh of the same domain; boundary values stay 0.
pub fn transfer(f: &Field, target: &Arc<Mesh>) -> Field {
    let loc = f.mesh().locator();
    Field::interpolate(Arc::clone(target), true, |x| loc.interpolate(f.values(), x).unwrap_or(0.0))
}

/// Two-sided energy estimate `-1 - 4 pi gamma(Omega)`.
#[derive(Clone, Debug)]
pub struct EnergyEstimate {
    /// Unconditional upper bound for the critical infimum.
    pub upper: f64,
    /// Valid only when the critical infimum is not attained.
    pub lower: f64,
    pub gamma_sup: f64,
    pub argmax: Point,
}

pub fn energy_estimate(domain: &Domain) -> Result<EnergyEstimate> {
    energy_estimate_with(domain, &RobinOptions::default())
}

pub fn energy_estimate_with(domain: &Domain, opts: &RobinOptions) -> Result<EnergyEstimate> {
    if (domain.area() - PI).abs() > 1e-6 * PI {
        return Err(Error::InvalidParameters(format!(
            "energy estimate needs an area-pi domain (area {}); normalize first",
            domain.area()
        )));
    }
    let report = robin_sup(domain, opts)?;
    let e = -1.0 - 4.0 * PI * report.gamma_sup;
    Ok(EnergyEstimate { upper: e, lower: e, gamma_sup: report.gamma_sup, argmax: report.argmax })
}

/// Closed-form disk energy `ln(1 + delta) / delta - 1`, `delta = lambda / (8 pi - lambda)`.
pub fn disk_energy(lambda: f64) -> f64 {
    let delta = lambda / (CRITICAL_LAMBDA - lambda);
    (1.0 + delta).ln() / delta - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_mesh(h: f64) -> Arc<Mesh> {
        Arc::new(triangulate(&Domain::disk(1.0).unwrap(), h).unwrap())
    }

    #[test]
    fn zero_field_values() {
        let m = disk_mesh(0.1);
        let z = Field::zeros(m.clone());
        for (l, e) in [(1.0, 0.0), (4.0 * PI, 0.3), (CRITICAL_LAMBDA, 0.0)] {
            assert_eq!(eval_I(&z, &FunctionalParams::new(l, e).unwrap()).unwrap(), 0.0);
        }
        let slack = mt_bound_check(&z);
        assert!((slack - m.area() * (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn inadmissible_fields_rejected() {
        let m = disk_mesh(0.2);
        let f = Field::interpolate(m, false, |_| 1.0);
        assert!(matches!(eval_I(&f, &FunctionalParams::new(4.0 * PI, 0.0).unwrap()), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn params_validated() {
        assert!(FunctionalParams::new(30.0, 0.0).is_err());
        assert!(FunctionalParams::new(1.0, 1.0).is_err());
        let m = disk_mesh(0.2);
        let p = FunctionalParams::new(CRITICAL_LAMBDA, 0.0).unwrap();
        assert!(matches!(minimize(&m, &p, &Field::zeros(m.clone())), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = disk_mesh(0.15);
        let p = FunctionalParams::new(5.0 * PI, 0.1).unwrap();
        let f = Field::interpolate(m.clone(), true, |x| 3.0 * (1.0 - x.coords.norm_squared()) + x.x);
        let v = Field::interpolate(m.clone(), true, |x| (2.0 * x.y).sin() + 0.3);
        let g = grad_I(&f, &p).unwrap();
        let dd: f64 = g.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
        let t = 1e-5;
        let shifted = |s: f64| {
            let vals = f.values().iter().zip(v.values()).map(|(a, b)| a + s * b).collect();
            eval_I(&Field::new(m.clone(), vals).unwrap(), &p).unwrap()
        };
        let fd = (shifted(t) - shifted(-t)) / (2.0 * t);
        assert!((dd - fd).abs() <= 1e-6 * fd.abs().max(1e-8), "{dd} vs {fd}");
    }

    #[test]
    fn disk_minimizer_at_four_pi() {
        let m = disk_mesh(0.04);
        let p = FunctionalParams::new(4.0 * PI, 0.0).unwrap();
        let r = minimize(&m, &p, &Field::zeros(m.clone())).unwrap();
        assert!((r.energy - (2f64.ln() - 1.0)).abs() < 1e-2, "{}", r.energy);
        assert!(r.argmax.coords.norm() < 0.05);
        assert!(r.grad_norm <= 1e-8 * (1.0 + r.energy.abs()));
        assert!(r.history.windows(2).all(|w| w[1] <= w[0] + 1e-13));
        assert!(r.mt_slack >= -1e-3);
    }

    #[test]
    fn small_lambda_minimizer_is_small() {
        let m = disk_mesh(0.1);
        let p = FunctionalParams::new(0.1, 0.0).unwrap();
        let r = minimize(&m, &p, &Field::zeros(m.clone())).unwrap();
        assert!(r.energy <= 0.0 && (r.energy - disk_energy(0.1)).abs() < 1e-4, "{}", r.energy);
        assert!(r.max_value <= 1e-2);
    }

    #[test]
    fn disk_energy_closed_form() {
        assert!((disk_energy(4.0 * PI) - (2f64.ln() - 1.0)).abs() < 1e-14);
        assert!((disk_energy(6.0 * PI) - (4f64.ln() / 3.0 - 1.0)).abs() < 1e-14);
        assert!((disk_energy(7.9 * PI) - (80f64.ln() / 79.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn zhu_inequality_on_zero_and_bump() {
        let m = disk_mesh(0.05);
        let z = zhu_sides(&Field::zeros(m.clone()), 0.7);
        assert!(z.bound.abs() < 1e-12);
        let f = Field::interpolate(m, true, |x| 1.5 * (1.0 - x.coords.norm_squared()));
        assert!(zhu_sides(&f, 0.0).slack() >= 0.0);
    }
}
