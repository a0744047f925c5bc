use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{Domain, DomainKind, Point, Vector};

/// Interior points closer than this multiple of the local size to the boundary are dropped.
const BOUNDARY_CLEARANCE: f64 = 0.55;
/// Geometric grading factor used by refinement call sites by default.
pub const DEFAULT_GRADING: f64 = 0.15;

/// Local refinement toward a point: size(x) = clamp(factor |x - center|, min_size, h).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grading {
    pub center: Point,
    pub factor: f64,
    pub min_size: f64,
}

impl Grading {
    pub fn new(center: Point, min_size: f64) -> Self {
        Grading { center, factor: DEFAULT_GRADING, min_size }
    }
}

#[derive(Clone, Copy, Debug)]
struct SizeField {
    h: f64,
    grading: Option<Grading>,
}

impl SizeField {
    fn at(&self, p: Point) -> f64 {
        match self.grading {
            None => self.h,
            Some(g) => (g.factor * (p - g.center).norm()).clamp(g.min_size, self.h),
        }
    }
}

/// Conforming triangulation with per-vertex boundary flags.
#[derive(Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    h: f64,
    geometry: Vec<TriangleGeometry>,
    hash: OnceLock<String>,
}

/// Area and barycentric-coordinate gradients of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct TriangleGeometry {
    pub area: f64,
    pub grads: [Vector; 3],
}

impl TriangleGeometry {
    fn new(p: [Point; 3]) -> Self {
        let area2 = (p[1] - p[0]).perp(&(p[2] - p[0]));
        let rot = |v: Vector| Vector::new(-v.y, v.x) / area2;
        TriangleGeometry { area: 0.5 * area2, grads: [rot(p[2] - p[1]), rot(p[0] - p[2]), rot(p[1] - p[0])] }
    }
}

impl Mesh {
    /// Builds a mesh from raw tables; triangles are reoriented counterclockwise.
    pub fn from_parts(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        h: f64,
    ) -> Result<Self> {
        if boundary.len() != vertices.len() {
            return Err(Error::Parse("boundary flags do not match the vertex count".into()));
        }
        for t in triangles.iter_mut() {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Parse(format!("triangle {t:?} references a missing vertex")));
            }
            let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if (b - a).perp(&(c - a)) < 0.0 {
                t.swap(1, 2);
            }
        }
        let geometry =
            triangles.iter().map(|t| TriangleGeometry::new([vertices[t[0]], vertices[t[1]], vertices[t[2]]])).collect();
        Ok(Mesh { vertices, triangles, boundary, h, geometry, hash: OnceLock::new() })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn geometry(&self) -> &[TriangleGeometry] {
        &self.geometry
    }

    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Length of the shortest edge incident to each vertex.
    pub fn local_size(&self) -> Vec<f64> {
        let mut s = vec![f64::INFINITY; self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                let (i, j) = (t[k], t[(k + 1) % 3]);
                let l = (self.vertices[i] - self.vertices[j]).norm();
                s[i] = s[i].min(l);
                s[j] = s[j].min(l);
            }
        }
        s
    }

    /// Longest edge among triangles touching the disk of radius `r` around `p`.
    pub fn max_edge_near(&self, p: Point, r: f64) -> f64 {
        self.triangles
            .iter()
            .filter(|t| t.iter().any(|&i| (self.vertices[i] - p).norm() <= r))
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(i, j)| (self.vertices[i] - self.vertices[j]).norm())
            .fold(0.0, f64::max)
    }

    /// Interior edges whose stiffness entry is positive (opposite angles sum past pi).
    pub fn obtuse_edges(&self) -> usize {
        use std::collections::HashMap;
        let mut coupling: HashMap<(usize, usize), f64> = HashMap::new();
        for (t, g) in self.triangles.iter().zip(&self.geometry) {
            for a in 0..3 {
                for b in a + 1..3 {
                    let key = (t[a].min(t[b]), t[a].max(t[b]));
                    *coupling.entry(key).or_default() += g.area * g.grads[a].dot(&g.grads[b]);
                }
            }
        }
        coupling.iter().filter(|((i, j), &k)| !(self.boundary[*i] && self.boundary[*j]) && k > 1e-14).count()
    }

    /// Indices of free (non-boundary) vertices and the inverse map.
    pub fn free_dofs(&self) -> (Vec<usize>, Vec<Option<usize>>) {
        let mut free = Vec::new();
        let mut index = vec![None; self.vertices.len()];
        for (i, &b) in self.boundary.iter().enumerate() {
            if !b {
                index[i] = Some(free.len());
                free.push(i);
            }
        }
        (free, index)
    }

    /// SHA-256 over the vertex and triangle tables.
    pub fn hash(&self) -> &str {
        self.hash.get_or_init(|| {
            let mut hasher = Sha256::new();
            for (p, b) in self.vertices.iter().zip(&self.boundary) {
                hasher.update(p.x.to_le_bytes());
                hasher.update(p.y.to_le_bytes());
                hasher.update([*b as u8]);
            }
            for t in &self.triangles {
                for i in t {
                    hasher.update((*i as u64).to_le_bytes());
                }
            }
            hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
        })
    }

    /// Text format: a header line, one `v x y flag` line per vertex, one `t i j k` line per triangle.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mesh {} {} {:e}", self.vertices.len(), self.triangles.len(), self.h);
        for (p, b) in self.vertices.iter().zip(&self.boundary) {
            let _ = writeln!(s, "v {:e} {:e} {}", p.x, p.y, *b as u8);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "t {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> =
            lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?.split_whitespace().collect();
        if header.len() != 4 || header[0] != "mesh" {
            return Err(Error::Parse("expected `mesh <vertices> <triangles> <h>`".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let idx = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let (nv, nt, h) = (idx(header[1])?, idx(header[2])?, num(header[3])?);
        let mut vertices = Vec::with_capacity(nv);
        let mut boundary = Vec::with_capacity(nv);
        let mut triangles = Vec::with_capacity(nt);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                ["v", x, y, b] => {
                    vertices.push(Point::new(num(x)?, num(y)?));
                    boundary.push(*b == "1");
                }
                ["t", i, j, k] => triangles.push([idx(i)?, idx(j)?, idx(k)?]),
                _ => return Err(Error::Parse(format!("unrecognized mesh line `{line}`"))),
            }
        }
        if vertices.len() != nv || triangles.len() != nt {
            return Err(Error::Parse("mesh table sizes disagree with the header".into()));
        }
        Mesh::from_parts(vertices, triangles, boundary, h)
    }

    /// Barycentric point location through a uniform bucket grid.
    pub fn locator(&self) -> PointLocator<'_> {
        PointLocator::new(self)
    }
}

/// Finds the triangle containing a point.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    fn new(mesh: &'a Mesh) -> Self {
        let (mut lo, mut hi) = (Point::new(f64::MAX, f64::MAX), Point::new(f64::MIN, f64::MIN));
        for p in &mesh.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n = (mesh.triangles.len() as f64).sqrt().ceil().max(1.0);
        let cell = ((hi.x - lo.x).max(hi.y - lo.y) / n).max(1e-12);
        let nx = ((hi.x - lo.x) / cell) as usize + 1;
        let ny = ((hi.y - lo.y) / cell) as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (k, t) in mesh.triangles.iter().enumerate() {
            let ps = t.map(|i| mesh.vertices[i]);
            let cx = |x: f64| (((x - lo.x) / cell) as usize).min(nx - 1);
            let cy = |y: f64| (((y - lo.y) / cell) as usize).min(ny - 1);
            let (x0, x1) = (
                cx(ps.iter().map(|p| p.x).fold(f64::MAX, f64::min)),
                cx(ps.iter().map(|p| p.x).fold(f64::MIN, f64::max)),
            );
            let (y0, y1) = (
                cy(ps.iter().map(|p| p.y).fold(f64::MAX, f64::min)),
                cy(ps.iter().map(|p| p.y).fold(f64::MIN, f64::max)),
            );
            for j in y0..=y1 {
                for i in x0..=x1 {
                    buckets[j * nx + i].push(k);
                }
            }
        }
        PointLocator { mesh, origin: lo, cell, nx, ny, buckets }
    }

    fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let tri = self.mesh.triangles[t];
        let g = &self.mesh.geometry[t];
        let a = self.mesh.vertices[tri[0]];
        let l1 = g.grads[1].dot(&(p - a));
        let l2 = g.grads[2].dot(&(p - a));
        [1.0 - l1 - l2, l1, l2]
    }

    /// Containing triangle and barycentric coordinates.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let i = ((p.x - self.origin.x) / self.cell).floor();
        let j = ((p.y - self.origin.y) / self.cell).floor();
        if i < 0.0 || j < 0.0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let bucket = &self.buckets[j as usize * self.nx + i as usize];
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in bucket {
            let l = self.barycentric(t, p);
            let worst = l.iter().copied().fold(f64::MAX, f64::min);
            if worst >= 0.0 {
                return Some((t, l));
            }
            if best.map_or(true, |b| worst > b.2) {
                best = Some((t, l, worst));
            }
        }
        // Tolerate points on shared edges lost to rounding.
        best.filter(|b| b.2 > -1e-10).map(|b| (b.0, b.1))
    }

    /// Piecewise-linear interpolation of nodal values; `None` outside the mesh.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Option<f64> {
        self.locate(p).map(|(t, l)| {
            let tri = self.mesh.triangles[t];
            l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]
        })
    }
}

/// Uniform triangulation with target edge length `h`.
pub fn triangulate(domain: &Domain, h: f64) -> Result<Mesh> {
    build(domain, SizeField { h, grading: None })
}

/// Triangulation graded geometrically toward `grading.center`.
pub fn triangulate_graded(domain: &Domain, h: f64, grading: Grading) -> Result<Mesh> {
    if !(grading.factor > 0.0 && grading.min_size > 0.0 && grading.min_size <= h) {
        return Err(Error::InvalidParameters(format!(
            "grading needs factor > 0 and 0 < min_size <= h, got {grading:?}"
        )));
    }
    build(domain, SizeField { h, grading: Some(grading) })
}

fn build(domain: &Domain, size: SizeField) -> Result<Mesh> {
    let h = size.h;
    if !(h > 0.0 && h < domain.diameter() / 4.0) {
        return Err(Error::InvalidParameters(format!(
            "mesh size {h} must lie in (0, diameter/4 = {})",
            domain.diameter() / 4.0
        )));
    }
    let boundary = boundary_points(domain, &size);
    let nb = boundary.len();
    let mut points = boundary.clone();
    points.extend(interior_points(domain, &size));

    let mut edges: Vec<[usize; 2]> = (0..nb).map(|i| [i, (i + 1) % nb]).collect();
    edges.dedup();
    let vertices: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let mut conflicts = Vec::new();
    let cdt =
        ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(vertices, edges, |e| conflicts.push(e))
            .map_err(|e| Error::Mesh { segment: 0, reason: e.to_string() })?;
    if let Some(e) = conflicts.first() {
        return Err(Error::Mesh {
            segment: e[0],
            reason: "boundary segments intersect at mesh resolution (sliver)".into(),
        });
    }
    if cdt.num_vertices() != points.len() {
        return Err(Error::Mesh { segment: 0, reason: "coincident mesh vertices".into() });
    }

    // Faces reachable from the outer face without crossing the boundary are exterior.
    let mut outside = vec![false; cdt.num_all_faces()];
    let mut stack = Vec::new();
    for e in cdt.convex_hull() {
        if e.is_constraint_edge() {
            continue;
        }
        for f in [e.face(), e.rev().face()] {
            if let Some(inner) = f.as_inner() {
                if !outside[inner.fix().index()] {
                    outside[inner.fix().index()] = true;
                    stack.push(inner.fix());
                }
            }
        }
    }
    while let Some(f) = stack.pop() {
        for e in cdt.face(f).adjacent_edges() {
            if e.is_constraint_edge() {
                continue;
            }
            if let Some(next) = e.rev().face().as_inner() {
                let k = next.fix().index();
                if !outside[k] {
                    outside[k] = true;
                    stack.push(next.fix());
                }
            }
        }
    }

    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if outside[face.fix().index()] {
            continue;
        }
        let v = face.vertices();
        triangles.push([v[0].fix().index(), v[1].fix().index(), v[2].fix().index()]);
    }
    let mut used = vec![false; points.len()];
    for t in &triangles {
        for &i in t {
            used[i] = true;
        }
    }
    let mut remap = vec![usize::MAX; points.len()];
    let mut verts = Vec::new();
    let mut flags = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if used[i] {
            remap[i] = verts.len();
            verts.push(*p);
            flags.push(i < nb);
        }
    }
    for t in triangles.iter_mut() {
        *t = t.map(|i| remap[i]);
    }
    let mesh = Mesh::from_parts(verts, triangles, flags, h)?;
    if let Some((k, _)) = mesh.geometry.iter().enumerate().find(|(_, g)| !(g.area > 0.0)) {
        let t = mesh.triangles[k];
        return Err(Error::Mesh { segment: t[0].min(nb.saturating_sub(1)), reason: "degenerate triangle".into() });
    }
    Ok(mesh)
}

/// Boundary vertices spaced by the size field; polygon corners are kept exactly.
fn boundary_points(domain: &Domain, size: &SizeField) -> Vec<Point> {
    match domain.kind() {
        DomainKind::Rectangle { .. } | DomainKind::Polygon { .. } => {
            let corners = domain.outline().to_vec();
            let mut out = Vec::new();
            for (k, &a) in corners.iter().enumerate() {
                let b = corners[(k + 1) % corners.len()];
                let ts = spaced_parameters(|t| a + (b - a) * t, 1.0, 4096, size);
                out.extend(ts[..ts.len() - 1].iter().map(|&t| a + (b - a) * t));
            }
            out
        }
        _ => {
            let m = 8192;
            let ts = spaced_parameters(|t| domain.boundary_point(t), 1.0, m, size);
            ts[..ts.len() - 1].iter().map(|&t| domain.boundary_point(t)).collect()
        }
    }
}

/// Parameters in `[0, end]` whose spacing follows the size field along `curve`.
fn spaced_parameters(curve: impl Fn(f64) -> Point, end: f64, base: usize, size: &SizeField) -> Vec<f64> {
    // Resolve the size field: at least a few fine samples per local size.
    let approx_len: f64 =
        (0..64).map(|i| (curve(end * (i + 1) as f64 / 64.0) - curve(end * i as f64 / 64.0)).norm()).sum();
    let min_size = size.grading.map_or(size.h, |g| g.min_size.min(size.h));
    let m = base.max((8.0 * approx_len / min_size).ceil().min(4e6) as usize);
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    let mut prev = curve(0.0);
    for i in 1..=m {
        let p = curve(end * i as f64 / m as f64);
        let mid = Point::from((prev.coords + p.coords) / 2.0);
        cum.push(cum[i - 1] + (p - prev).norm() / size.at(mid));
        prev = p;
    }
    let total = cum[m];
    let n = (total.round() as usize).max(1);
    let mut ts = Vec::with_capacity(n + 1);
    let mut j = 0;
    for k in 0..=n {
        let target = total * k as f64 / n as f64;
        while j < m - 1 && cum[j + 1] < target {
            j += 1;
        }
        let span = cum[j + 1] - cum[j];
        let frac = if span > 0.0 { ((target - cum[j]) / span).clamp(0.0, 1.0) } else { 0.0 };
        ts.push(end * (j as f64 + frac) / m as f64);
    }
    ts
}

fn interior_points(domain: &Domain, size: &SizeField) -> Vec<Point> {
    let h = size.h;
    let (lo, hi) = domain.bounding_box();
    let mut candidates = Vec::new();
    // Radius inside which rings replace the lattice.
    let ring_zone = size.grading.map(|g| (g.center, h / g.factor));

    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((hi.y - lo.y) / dy).ceil() as usize + 1;
    let cols = ((hi.x - lo.x) / h).ceil() as usize + 2;
    for j in 0..rows {
        let y = lo.y + j as f64 * dy;
        let shift = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        for i in 0..cols {
            let p = Point::new(lo.x + shift + i as f64 * h - 0.25 * h, y);
            if let Some((c, r)) = ring_zone {
                if (p - c).norm() < r {
                    continue;
                }
            }
            candidates.push(p);
        }
    }
    if let Some(g) = size.grading {
        let (c, zone) = ring_zone.unwrap();
        candidates.push(c);
        let mut r = g.min_size;
        let mut k = 0usize;
        while r < zone {
            let s = size.at(c + Vector::new(r, 0.0));
            let n = ((TAU * r / s).ceil() as usize).max(6);
            // Stagger successive rings.
            let phase = if k % 2 == 1 { 0.5 } else { 0.0 };
            for i in 0..n {
                let t = TAU * (i as f64 + phase) / n as f64;
                candidates.push(c + Vector::new(t.cos(), t.sin()) * r);
            }
            r += s;
            k += 1;
        }
    }
    let mut seen = HashSet::new();
    candidates
        .into_iter()
        .filter(|&p| domain.contains(p) && domain.distance_to_boundary(p) >= BOUNDARY_CLEARANCE * size.at(p))
        .filter(|p| seen.insert((p.x.to_bits(), p.y.to_bits())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_mesh_area_and_orientation() {
        let d = Domain::disk(1.0).unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        assert!((m.area() - PI).abs() <= 10.0 * 0.01);
        assert!(m.geometry().iter().all(|g| g.area >= 1e-3 * 0.01));
        for (p, &b) in m.vertices().iter().zip(m.boundary()) {
            if b {
                assert!((p.coords.norm() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rectangle_boundary_vertices_exact() {
        let d = Domain::rectangle(PI / 0.8, 0.8).unwrap();
        let m = triangulate(&d, 0.05).unwrap();
        for (p, &b) in m.vertices().iter().zip(m.boundary()) {
            if b {
                let on = ((p.x.abs() - PI / 1.6).abs() < 1e-8 && p.y.abs() <= 0.4 + 1e-8)
                    || ((p.y.abs() - 0.4).abs() < 1e-8 && p.x.abs() <= PI / 1.6 + 1e-8);
                assert!(on, "{p:?}");
            }
        }
        assert!((m.area() - PI).abs() < 1e-10);
    }

    #[test]
    fn refinement_scaling() {
        let d = Domain::disk(1.0).unwrap();
        let a = triangulate(&d, 0.1).unwrap().vertex_count() as f64;
        let b = triangulate(&d, 0.05).unwrap().vertex_count() as f64;
        let r = b / a;
        assert!((3.5..=4.5).contains(&r), "ratio {r}");
    }

    #[test]
    fn graded_mesh_resolves_center() {
        let d = Domain::disk(1.0).unwrap();
        let m = triangulate_graded(&d, 0.05, Grading::new(Point::origin(), 1e-4)).unwrap();
        assert!(m.max_edge_near(Point::origin(), 1e-4) < 5e-4);
        assert!((m.area() - PI).abs() < 10.0 * 0.0025);
        assert!(m.geometry().iter().all(|g| g.area > 0.0));
    }

    #[test]
    fn text_round_trip() {
        let d = Domain::ellipse(1.2, 0.7).unwrap();
        let m = triangulate(&d, 0.2).unwrap();
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary(), m.boundary());
        assert_eq!(back.hash(), m.hash());
    }

    #[test]
    fn locator_reproduces_linear_functions() {
        let d = Domain::disk(1.0).unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        let vals: Vec<f64> = m.vertices().iter().map(|p| 2.0 * p.x - p.y + 0.5).collect();
        let loc = m.locator();
        for p in [Point::new(0.1, 0.2), Point::new(-0.5, 0.3), Point::new(0.0, -0.8)] {
            let v = loc.interpolate(&vals, p).unwrap();
            assert!((v - (2.0 * p.x - p.y + 0.5)).abs() < 1e-12);
        }
        assert!(loc.interpolate(&vals, Point::new(2.0, 0.0)).is_none());
    }

    #[test]
    fn rejects_oversized_h() {
        let d = Domain::disk(1.0).unwrap();
        assert!(matches!(triangulate(&d, 0.6), Err(Error::InvalidParameters(_))));
    }
}
