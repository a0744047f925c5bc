use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::mesh::{Mesh, TriangleGeometry};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Nodal values of a piecewise-linear function on a mesh.
#[derive(Clone, Debug)]
pub struct Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.vertex_count() {
            return Err(Error::InvalidParameters(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.vertex_count()
            )));
        }
        Ok(Field { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.vertex_count();
        Field { mesh, values: vec![0.0; n] }
    }

    /// Interpolant of `f`; boundary vertices get exactly zero when `dirichlet` is set.
    pub fn interpolate(mesh: Arc<Mesh>, dirichlet: bool, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh
            .vertices()
            .iter()
            .zip(mesh.boundary())
            .map(|(&p, &b)| if dirichlet && b { 0.0 } else { f(p) })
            .collect();
        Field { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Boundary values are exactly zero.
    pub fn is_admissible(&self) -> bool {
        self.values.iter().zip(self.mesh.boundary()).all(|(&v, &b)| !b || v == 0.0)
    }

    pub fn check_admissible(&self) -> Result<()> {
        match self.values.iter().zip(self.mesh.boundary()).position(|(&v, &b)| b && v != 0.0) {
            None => Ok(()),
            Some(i) => Err(Error::NotAdmissible(format!("boundary vertex {i} carries value {}", self.values[i]))),
        }
    }

    /// Largest nodal value and its vertex.
    pub fn max(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a })
    }

    /// Text format: `field <mesh hash> <count>` followed by one value per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("field {} {}\n", self.mesh.hash(), self.values.len());
        for v in &self.values {
            s.push_str(&format!("{v:e}\n"));
        }
        s
    }

    pub fn from_text(mesh: Arc<Mesh>, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> =
            lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?.split_whitespace().collect();
        if header.len() != 3 || header[0] != "field" {
            return Err(Error::Parse("expected `field <hash> <count>`".into()));
        }
        if header[1] != mesh.hash() {
            return Err(Error::Parse("field was saved on a different mesh".into()));
        }
        let values = lines
            .map(|l| l.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{l}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if header[2].parse::<usize>().ok() != Some(values.len()) {
            return Err(Error::Parse("field length disagrees with the header".into()));
        }
        Field::new(mesh, values)
    }
}

/// Gradient of the interpolant on triangle `t`.
pub fn triangle_gradient(mesh: &Mesh, t: usize, u: &[f64]) -> nalgebra::Vector2<f64> {
    let tri = mesh.triangles()[t];
    let g = &mesh.geometry()[t];
    g.grads[0] * u[tri[0]] + g.grads[1] * u[tri[1]] + g.grads[2] * u[tri[2]]
}

/// `int |grad u|^2` of the piecewise-linear interpolant.
pub fn dirichlet_energy_values(mesh: &Mesh, u: &[f64]) -> f64 {
    (0..mesh.triangle_count()).map(|t| mesh.geometry()[t].area * triangle_gradient(mesh, t, u).norm_squared()).sum()
}

pub fn dirichlet_energy(f: &Field) -> f64 {
    dirichlet_energy_values(&f.mesh, &f.values)
}

/// `int e^u` stored as `shift + ln(scaled)`, where `scaled` was summed with
/// `shift = max u` subtracted so large fields never overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpIntegral {
    pub shift: f64,
    pub scaled: f64,
}

impl ExpIntegral {
    pub fn ln(&self) -> f64 {
        self.shift + self.scaled.ln()
    }

    /// Plain value; infinite when it overflows.
    pub fn value(&self) -> f64 {
        self.ln().exp()
    }
}

/// Edge-midpoint quadrature of `e^u` on every triangle.
pub fn exp_integral_values(mesh: &Mesh, u: &[f64]) -> ExpIntegral {
    let shift = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled = mesh
        .triangles()
        .iter()
        .zip(mesh.geometry())
        .map(|(t, g)| {
            let e = |a: usize, b: usize| (0.5 * (u[t[a]] + u[t[b]]) - shift).exp();
            g.area / 3.0 * (e(0, 1) + e(1, 2) + e(2, 0))
        })
        .sum();
    ExpIntegral { shift, scaled }
}

pub fn exp_integral(f: &Field) -> ExpIntegral {
    exp_integral_values(&f.mesh, &f.values)
}

/// Assembles `sum_T local(T)` over free vertices into a sparse matrix.
pub fn assemble(
    mesh: &Mesh,
    index: &[Option<usize>],
    n: usize,
    local: impl Fn(usize, &TriangleGeometry) -> [[f64; 3]; 3],
) -> Result<SparseColMat<usize, f64>> {
    let mut trip = Vec::with_capacity(9 * mesh.triangle_count());
    for (k, (t, g)) in mesh.triangles().iter().zip(mesh.geometry()).enumerate() {
        let m = local(k, g);
        for a in 0..3 {
            let Some(i) = index[t[a]] else { continue };
            for b in 0..3 {
                if let Some(j) = index[t[b]] {
                    trip.push(Triplet::new(i, j, m[a][b]));
                }
            }
        }
    }
    SparseColMat::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::SingularSystem(format!("sparse assembly failed: {e:?}")))
}

/// Local P1 stiffness matrix.
pub fn local_stiffness(g: &TriangleGeometry) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            m[a][b] = g.area * g.grads[a].dot(&g.grads[b]);
        }
    }
    m
}

/// Local consistent P1 mass matrix.
pub fn local_mass(g: &TriangleGeometry) -> [[f64; 3]; 3] {
    let d = g.area / 6.0;
    let o = g.area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Stiffness matrix restricted to the free vertices.
pub fn stiffness_free(mesh: &Mesh) -> Result<SparseColMat<usize, f64>> {
    let (free, index) = mesh.free_dofs();
    assemble(mesh, &index, free.len(), |_, g| local_stiffness(g))
}

/// `y = A x` for a column-major sparse matrix.
pub fn spmv(a: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    let sym = a.symbolic();
    let (cp, ri, val) = (sym.col_ptr(), sym.row_idx(), a.val());
    let mut y = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        for k in cp[j]..cp[j + 1] {
            y[ri[k]] += val[k] * x[j];
        }
    }
    y
}

/// Sparse direct factorization.
pub enum SparseFactor {
    Cholesky(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

impl SparseFactor {
    pub fn cholesky(a: &SparseColMat<usize, f64>) -> Result<Self> {
        a.sp_cholesky(Side::Lower)
            .map(SparseFactor::Cholesky)
            .map_err(|e| Error::SingularSystem(format!("Cholesky factorization failed: {e:?}")))
    }

    pub fn lu(a: &SparseColMat<usize, f64>) -> Result<Self> {
        a.sp_lu().map(SparseFactor::Lu).map_err(|e| Error::SingularSystem(format!("LU factorization failed: {e:?}")))
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        match self {
            SparseFactor::Cholesky(f) => f.solve_in_place(x.as_mut()),
            SparseFactor::Lu(f) => f.solve_in_place(x.as_mut()),
        }
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }
}

/// Factored Dirichlet Laplacian of one mesh.
pub struct PoissonSolver {
    mesh: Arc<Mesh>,
    free: Vec<usize>,
    index: Vec<Option<usize>>,
    matrix: SparseColMat<usize, f64>,
    factor: SparseFactor,
}

/// Relative residual required of every solve.
pub const SOLVE_TOL: f64 = 1e-10;

impl PoissonSolver {
    pub fn new(mesh: Arc<Mesh>) -> Result<Self> {
        let (free, index) = mesh.free_dofs();
        if free.is_empty() {
            return Err(Error::SingularSystem("mesh has no interior vertices".into()));
        }
        let matrix = stiffness_free(&mesh)?;
        let factor = SparseFactor::cholesky(&matrix)?;
        Ok(PoissonSolver { mesh, free, index, matrix, factor })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Solves `K u = load` on the free vertices (load given per vertex); boundary values are 0.
    pub fn solve_load(&self, load: &[f64]) -> Result<Vec<f64>> {
        let b: Vec<f64> = self.free.iter().map(|&i| load[i]).collect();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = self.factor.solve(&b);
        for _ in 0..4 {
            let r: Vec<f64> = spmv(&self.matrix, &x).iter().zip(&b).map(|(ax, bi)| bi - ax).collect();
            let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rnorm <= SOLVE_TOL * bnorm || bnorm == 0.0 {
                let mut u = vec![0.0; self.mesh.vertex_count()];
                for (k, &i) in self.free.iter().enumerate() {
                    u[i] = x[k];
                }
                return Ok(u);
            }
            let dx = self.factor.solve(&r);
            x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
        }
        Err(Error::SingularSystem("Poisson solve did not reach the residual target".into()))
    }

    /// Galerkin solution of `-Lap u = f`, `u = 0` on the boundary, for nodal `f`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut load = vec![0.0; self.mesh.vertex_count()];
        for (t, g) in self.mesh.triangles().iter().zip(self.mesh.geometry()) {
            let m = local_mass(g);
            for a in 0..3 {
                load[t[a]] += (0..3).map(|b| m[a][b] * rhs[t[b]]).sum::<f64>();
            }
        }
        self.solve_load(&load)
    }

    /// Discrete Green's function: unit point load at `pole`.
    pub fn green(&self, pole: Point) -> Result<Vec<f64>> {
        let (t, l) = self.mesh.locator().locate(pole).ok_or(Error::OutsideDomain {
            x: pole.x,
            y: pole.y,
            reason: "pole is not covered by the mesh".into(),
        })?;
        let mut load = vec![0.0; self.mesh.vertex_count()];
        for (a, &i) in self.mesh.triangles()[t].iter().enumerate() {
            load[i] = l[a];
        }
        self.solve_load(&load)
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn index(&self) -> &[Option<usize>] {
        &self.index
    }
}

pub fn poisson_solve(mesh: &Arc<Mesh>, rhs: &Field) -> Result<Field> {
    if !Arc::ptr_eq(mesh, rhs.mesh()) && mesh.hash() != rhs.mesh().hash() {
        return Err(Error::InvalidParameters("right-hand side lives on another mesh".into()));
    }
    let u = PoissonSolver::new(Arc::clone(mesh))?.solve(rhs.values())?;
    Field::new(Arc::clone(mesh), u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::mesh::triangulate;
    use crate::geometry::Domain;
    use std::f64::consts::PI;

    fn disk_mesh(h: f64) -> Arc<Mesh> {
        Arc::new(triangulate(&Domain::disk(1.0).unwrap(), h).unwrap())
    }

    fn u_delta(delta: f64) -> impl Fn(Point) -> f64 {
        move |p: Point| 2.0 * ((1.0 + delta) / (1.0 + delta * p.coords.norm_squared())).ln()
    }

    #[test]
    fn energy_and_exp_integral_of_radial_family() {
        let m = disk_mesh(0.02);
        let f = Field::interpolate(m.clone(), true, u_delta(1.0));
        let e = dirichlet_energy(&f);
        let exact = 16.0 * PI * (2f64.ln() - 0.5);
        assert!((e - exact).abs() / exact < 0.01, "{e} vs {exact}");
        let q = exp_integral(&f).value();
        assert!((q - 2.0 * PI).abs() / (2.0 * PI) < 0.01);
        assert_eq!(dirichlet_energy(&Field::zeros(m)), 0.0);
    }

    #[test]
    fn exp_integral_shift_and_overflow() {
        let m = disk_mesh(0.1);
        let f = Field::interpolate(m.clone(), false, |p| p.x);
        let g = Field::interpolate(m.clone(), false, |p| p.x + 2.5);
        let (a, b) = (exp_integral(&f).value(), exp_integral(&g).value());
        assert!((b / a - 2.5f64.exp()).abs() < 1e-10 * 2.5f64.exp());
        let big = Field::interpolate(m.clone(), false, |p| 900.0 + p.y);
        let l = exp_integral(&big).ln();
        assert!(l.is_finite() && (l - 900.0 - exp_integral(&Field::interpolate(m, false, |p| p.y)).ln()).abs() < 1e-9);
    }

    #[test]
    fn manufactured_poisson_second_order() {
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for h in [0.05, 0.025, 0.0125] {
            let m = disk_mesh(h);
            let h = (m.area() / m.vertex_count() as f64).sqrt();
            let rhs = Field::interpolate(m.clone(), false, |_| 1.0);
            let u = poisson_solve(&m, &rhs).unwrap();
            let err = m
                .vertices()
                .iter()
                .zip(u.values())
                .map(|(p, v)| (v - (1.0 - p.coords.norm_squared()) / 4.0).abs())
                .fold(0.0, f64::max);
            errs.push(err);
            hs.push(h);
        }
        for k in 0..2 {
            let order = (errs[k] / errs[k + 1]).ln() / (hs[k] / hs[k + 1]).ln();
            assert!(order >= 1.8, "order {order}, errors {errs:?}");
        }
    }

    #[test]
    fn poisson_linearity_and_zero() {
        let m = disk_mesh(0.1);
        let s = PoissonSolver::new(m.clone()).unwrap();
        let f: Vec<f64> = m.vertices().iter().map(|p| p.x * p.x + 1.0).collect();
        let g: Vec<f64> = m.vertices().iter().map(|p| (3.0 * p.y).sin()).collect();
        let combo: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let (uf, ug, uc) = (s.solve(&f).unwrap(), s.solve(&g).unwrap(), s.solve(&combo).unwrap());
        for i in 0..uf.len() {
            assert!((uc[i] - (2.0 * uf[i] - 0.5 * ug[i])).abs() < 1e-10);
        }
        assert!(s.solve(&vec![0.0; m.vertex_count()]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn discrete_green_is_nonnegative() {
        let m = disk_mesh(0.05);
        let s = PoissonSolver::new(m.clone()).unwrap();
        let g = s.green(Point::new(0.3, -0.2)).unwrap();
        let flagged = m.obtuse_edges();
        if flagged == 0 {
            assert!(g.iter().all(|&v| v >= -1e-14));
        } else {
            assert!(g.iter().all(|&v| v >= -1e-3));
        }
    }

    #[test]
    fn field_text_round_trip_checks_mesh() {
        let m = disk_mesh(0.2);
        let f = Field::interpolate(m.clone(), true, |p| p.x * p.y);
        let back = Field::from_text(m.clone(), &f.to_text()).unwrap();
        assert_eq!(back.values(), f.values());
        let other = disk_mesh(0.15);
        assert!(Field::from_text(other, &f.to_text()).is_err());
    }
}
