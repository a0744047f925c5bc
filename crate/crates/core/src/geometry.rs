//! Bounded simply connected plane domains.
//!
//! A [`Domain`] is a shape given in a local frame plus a rigid placement
//! (center and rotation). Smooth shapes are additionally resolved as a dense
//! counterclockwise outline used for containment and distance queries.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};

pub type Point = Point2<f64>;
pub type Vector = Vector2<f64>;

/// Number of outline samples used for smooth boundaries.
const OUTLINE_SAMPLES: usize = 4096;
/// Samples used by the self-intersection check on smooth boundaries.
const INTERSECTION_SAMPLES: usize = 512;
/// Initial boundary sampling for hull and strip-width computations.
const HULL_SAMPLES: usize = 2048;
const HULL_MAX_SAMPLES: usize = 1 << 20;
const WIDTH_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    Disk {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Rectangle {
        a: f64,
        b: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// Closed convex curve given by the support function
    /// `h(t) = c[0] + sum_k c[2k-1] cos(kt) + c[2k] sin(kt)`.
    FourierBoundary {
        coefficients: Vec<f64>,
    },
}

impl DomainKind {
    pub fn name(&self) -> &'static str {
        match self {
            DomainKind::Disk { .. } => "disk",
            DomainKind::Ellipse { .. } => "ellipse",
            DomainKind::Rectangle { .. } => "rectangle",
            DomainKind::Polygon { .. } => "polygon",
            DomainKind::FourierBoundary { .. } => "fourier-boundary",
        }
    }

    /// Flat parameter list in the order used by domain-spec files.
    pub fn params(&self) -> Vec<f64> {
        match self {
            DomainKind::Disk { radius } => vec![*radius],
            DomainKind::Ellipse { a, b } | DomainKind::Rectangle { a, b } => vec![*a, *b],
            DomainKind::Polygon { vertices } => vertices.iter().flat_map(|v| [v[0], v[1]]).collect(),
            DomainKind::FourierBoundary { coefficients } => coefficients.clone(),
        }
    }

    pub fn from_params(kind: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if params.len() != n {
                return Err(Error::InvalidDomain(format!("{kind} expects {n} parameter(s), got {}", params.len())));
            }
            Ok(())
        };
        Ok(match kind {
            "disk" => {
                need(1)?;
                DomainKind::Disk { radius: params[0] }
            }
            "ellipse" => {
                need(2)?;
                DomainKind::Ellipse { a: params[0], b: params[1] }
            }
            "rectangle" => {
                need(2)?;
                DomainKind::Rectangle { a: params[0], b: params[1] }
            }
            "square" => {
                need(1)?;
                DomainKind::Rectangle { a: params[0], b: params[0] }
            }
            "polygon" => {
                if params.len() % 2 != 0 {
                    return Err(Error::InvalidDomain("polygon parameters must be x,y pairs".into()));
                }
                DomainKind::Polygon { vertices: params.chunks(2).map(|c| [c[0], c[1]]).collect() }
            }
            "fourier-boundary" | "fourier" => DomainKind::FourierBoundary { coefficients: params.to_vec() },
            other => return Err(Error::InvalidDomain(format!("unknown kind '{other}'"))),
        })
    }

    fn scaled(&self, s: f64) -> Self {
        match self {
            DomainKind::Disk { radius } => DomainKind::Disk { radius: radius * s },
            DomainKind::Ellipse { a, b } => DomainKind::Ellipse { a: a * s, b: b * s },
            DomainKind::Rectangle { a, b } => DomainKind::Rectangle { a: a * s, b: b * s },
            DomainKind::Polygon { vertices } => {
                DomainKind::Polygon { vertices: vertices.iter().map(|v| [v[0] * s, v[1] * s]).collect() }
            }
            DomainKind::FourierBoundary { coefficients } => {
                DomainKind::FourierBoundary { coefficients: coefficients.iter().map(|c| c * s).collect() }
            }
        }
    }
}

/// Minimal covering strip: its width and the angle of the strip direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripCover {
    pub width: f64,
    pub direction: f64,
}

#[derive(Clone, Debug)]
pub struct Domain {
    kind: DomainKind,
    center: Point,
    rotation: f64,
    outline: Outline,
    inscribed: OnceLock<(Point, f64)>,
    diameter: OnceLock<f64>,
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.center == other.center && self.rotation == other.rotation
    }
}

impl Domain {
    pub fn new(kind: DomainKind, center: Point, rotation: f64) -> Result<Self> {
        let kind = validate(kind)?;
        if !center.x.is_finite() || !center.y.is_finite() || !rotation.is_finite() {
            return Err(Error::InvalidDomain("non-finite placement".into()));
        }
        let mut d = Domain {
            kind,
            center,
            rotation,
            outline: Outline::default(),
            inscribed: OnceLock::new(),
            diameter: OnceLock::new(),
        };
        let pts = match &d.kind {
            DomainKind::Polygon { vertices } => vertices.iter().map(|v| d.to_world(Point::new(v[0], v[1]))).collect(),
            DomainKind::Rectangle { a, b } => {
                let (x, y) = (a / 2.0, b / 2.0);
                [(-x, -y), (x, -y), (x, y), (-x, y)].iter().map(|&(px, py)| d.to_world(Point::new(px, py))).collect()
            }
            _ => d.sample_boundary(OUTLINE_SAMPLES),
        };
        d.outline = Outline::new(pts);
        if d.area() <= 0.0 {
            return Err(Error::InvalidDomain("area must be positive".into()));
        }
        Ok(d)
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(DomainKind::Disk { radius }, Point::origin(), 0.0)
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(DomainKind::Ellipse { a, b }, Point::origin(), 0.0)
    }

    pub fn rectangle(a: f64, b: f64) -> Result<Self> {
        Self::new(DomainKind::Rectangle { a, b }, Point::origin(), 0.0)
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(DomainKind::Polygon { vertices }, Point::origin(), 0.0)
    }

    pub fn fourier(coefficients: Vec<f64>) -> Result<Self> {
        Self::new(DomainKind::FourierBoundary { coefficients }, Point::origin(), 0.0)
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    /// Same shape under a new placement.
    pub fn placed(&self, center: Point, rotation: f64) -> Self {
        Self::new(self.kind.clone(), center, rotation).expect("placement of a valid shape")
    }

    /// Uniformly scaled copy about the domain center.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameters(format!("scale factor {s} must be positive")));
        }
        Self::new(self.kind.scaled(s), self.center, self.rotation)
    }

    pub fn normalize_area(&self, target: f64) -> Result<Self> {
        if !(target > 0.0) {
            return Err(Error::InvalidParameters(format!("target area {target} must be positive")));
        }
        let s = (target / self.area()).sqrt();
        if (s - 1.0).abs() < 1e-15 {
            return Ok(self.clone());
        }
        self.scaled(s)
    }

    /// Polygonal kinds have corners where boundary regularity is lost.
    pub fn has_corners(&self) -> bool {
        matches!(self.kind, DomainKind::Rectangle { .. } | DomainKind::Polygon { .. })
    }

    pub fn to_world(&self, local: Point) -> Point {
        let (s, c) = self.rotation.sin_cos();
        Point::new(self.center.x + c * local.x - s * local.y, self.center.y + s * local.x + c * local.y)
    }

    pub fn to_local(&self, world: Point) -> Point {
        let (s, c) = self.rotation.sin_cos();
        let d = world - self.center;
        Point::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }

    /// Boundary point at fractional position `s in [0, 1)`, counterclockwise.
    /// Smooth kinds use their natural angle parameter, polygonal kinds arc length.
    pub fn boundary_point(&self, s: f64) -> Point {
        let s = s.rem_euclid(1.0);
        match &self.kind {
            DomainKind::Disk { .. } | DomainKind::Ellipse { .. } | DomainKind::FourierBoundary { .. } => {
                self.to_world(self.smooth_local(TAU * s).0)
            }
            DomainKind::Rectangle { .. } | DomainKind::Polygon { .. } => {
                self.outline.at_arclength(s * self.outline.perimeter)
            }
        }
    }

    /// `n` boundary points, counterclockwise.
    pub fn sample_boundary(&self, n: usize) -> Vec<Point> {
        (0..n).map(|i| self.boundary_point(i as f64 / n as f64)).collect()
    }

    /// Dense outline polygon (exact for polygonal kinds).
    pub fn outline(&self) -> &[Point] {
        &self.outline.points
    }

    pub fn perimeter(&self) -> f64 {
        self.outline.perimeter
    }

    /// Local boundary point and derivative for the smooth kinds.
    pub(crate) fn smooth_local(&self, t: f64) -> (Point, Vector) {
        let (s, c) = t.sin_cos();
        match &self.kind {
            DomainKind::Disk { radius } => (Point::new(radius * c, radius * s), Vector::new(-radius * s, radius * c)),
            DomainKind::Ellipse { a, b } => (Point::new(a * c, b * s), Vector::new(-a * s, b * c)),
            DomainKind::FourierBoundary { coefficients } => {
                let (h, dh, d2h) = support(coefficients, t);
                let curv = h + d2h;
                (Point::new(h * c - dh * s, h * s + dh * c), Vector::new(-curv * s, curv * c))
            }
            _ => unreachable!("smooth_local on a polygonal kind"),
        }
    }

    pub fn area(&self) -> f64 {
        match &self.kind {
            DomainKind::Disk { radius } => PI * radius * radius,
            DomainKind::Ellipse { a, b } => PI * a * b,
            DomainKind::Rectangle { a, b } => a * b,
            DomainKind::Polygon { .. } => self.outline.signed_area(),
            DomainKind::FourierBoundary { coefficients } => {
                // Trapezoidal rule on the periodic integrand h (h + h'') / 2 is spectrally exact.
                let m = OUTLINE_SAMPLES;
                (0..m)
                    .map(|i| {
                        let (h, _, d2h) = support(coefficients, TAU * i as f64 / m as f64);
                        0.5 * h * (h + d2h)
                    })
                    .sum::<f64>()
                    * TAU
                    / m as f64
            }
        }
    }

    /// Area centroid in world coordinates.
    pub fn centroid(&self) -> Point {
        match &self.kind {
            DomainKind::Disk { .. } | DomainKind::Ellipse { .. } | DomainKind::Rectangle { .. } => self.center,
            _ => self.outline.centroid(),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let q = self.to_local(p);
        match &self.kind {
            DomainKind::Disk { radius } => q.coords.norm_squared() < radius * radius,
            DomainKind::Ellipse { a, b } => (q.x / a).powi(2) + (q.y / b).powi(2) < 1.0,
            DomainKind::Rectangle { a, b } => q.x.abs() < a / 2.0 && q.y.abs() < b / 2.0,
            _ => self.outline.contains(p),
        }
    }

    /// Unsigned distance to the boundary curve.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        let q = self.to_local(p);
        match &self.kind {
            DomainKind::Disk { radius } => (q.coords.norm() - radius).abs(),
            DomainKind::Rectangle { a, b } if self.contains(p) => (a / 2.0 - q.x.abs()).min(b / 2.0 - q.y.abs()),
            _ => self.outline.distance(p),
        }
    }

    /// Center and radius of a largest inscribed disk.
    pub fn inscribed_disk(&self) -> (Point, f64) {
        *self.inscribed.get_or_init(|| match &self.kind {
            DomainKind::Disk { radius } => (self.center, *radius),
            DomainKind::Ellipse { a, b } => (self.center, a.min(*b)),
            DomainKind::Rectangle { a, b } => (self.center, a.min(*b) / 2.0),
            _ => self.search_incenter(),
        })
    }

    pub fn inradius(&self) -> f64 {
        self.inscribed_disk().1
    }

    pub fn diameter(&self) -> f64 {
        *self.diameter.get_or_init(|| {
            let hull = convex_hull(&self.outline.points);
            let mut best: f64 = 0.0;
            for (i, p) in hull.iter().enumerate() {
                for q in &hull[i + 1..] {
                    best = best.max((p - q).norm());
                }
            }
            best
        })
    }

    /// Axis-aligned bounding box `(min, max)` in world coordinates.
    pub fn bounding_box(&self) -> (Point, Point) {
        self.outline.bbox()
    }

    /// Minimal width over all orientations of a strip covering the domain,
    /// by rotating calipers on the convex hull of a boundary sampling.
    pub fn min_strip_width(&self) -> StripCover {
        if self.has_corners() {
            return calipers(&convex_hull(&self.outline.points));
        }
        let mut n = HULL_SAMPLES;
        let mut current = calipers(&convex_hull(&self.sample_boundary(n)));
        while n < HULL_MAX_SAMPLES {
            n *= 2;
            let next = calipers(&convex_hull(&self.sample_boundary(n)));
            let change = (next.width - current.width).abs();
            current = next;
            if change < WIDTH_TOL {
                break;
            }
        }
        current
    }

    fn search_incenter(&self) -> (Point, f64) {
        let (lo, hi) = self.bounding_box();
        let n = 48;
        let mut best = (self.centroid(), 0.0);
        for i in 0..=n {
            for j in 0..=n {
                let p =
                    Point::new(lo.x + (hi.x - lo.x) * i as f64 / n as f64, lo.y + (hi.y - lo.y) * j as f64 / n as f64);
                if self.contains(p) {
                    let r = self.distance_to_boundary(p);
                    if r > best.1 {
                        best = (p, r);
                    }
                }
            }
        }
        // Pattern search refinement.
        let mut step = (hi.x - lo.x).max(hi.y - lo.y) / n as f64;
        while step > 1e-10 * self.outline.perimeter {
            let mut improved = false;
            for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let p = best.0 + Vector::new(dx * step, dy * step);
                if self.contains(p) {
                    let r = self.distance_to_boundary(p);
                    if r > best.1 {
                        best = (p, r);
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best
    }
}

/// Support function and its first two derivatives.
fn support(c: &[f64], t: f64) -> (f64, f64, f64) {
    let mut h = c[0];
    let mut dh = 0.0;
    let mut d2h = 0.0;
    for (k, pair) in c[1..].chunks(2).enumerate() {
        let k = (k + 1) as f64;
        let (s, co) = (k * t).sin_cos();
        let a = pair[0];
        let b = pair.get(1).copied().unwrap_or(0.0);
        h += a * co + b * s;
        dh += k * (-a * s + b * co);
        d2h += -k * k * (a * co + b * s);
    }
    (h, dh, d2h)
}

fn validate(kind: DomainKind) -> Result<DomainKind> {
    let positive = |v: f64, what: &str| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("{what} must be positive, got {v}")))
        }
    };
    match kind {
        DomainKind::Disk { radius } => {
            positive(radius, "radius")?;
            Ok(kind)
        }
        DomainKind::Ellipse { a, b } | DomainKind::Rectangle { a, b } => {
            positive(a, "first semi-axis/side")?;
            positive(b, "second semi-axis/side")?;
            Ok(kind)
        }
        DomainKind::Polygon { mut vertices } => {
            if vertices.len() < 3 {
                return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
            }
            if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
                return Err(Error::InvalidDomain("non-finite polygon vertex".into()));
            }
            let scale = vertices.iter().map(|v| v[0].abs().max(v[1].abs())).fold(0.0, f64::max).max(1e-300);
            for i in 0..vertices.len() {
                for j in i + 1..vertices.len() {
                    let (p, q) = (vertices[i], vertices[j]);
                    if (p[0] - q[0]).hypot(p[1] - q[1]) <= 1e-12 * scale {
                        return Err(Error::InvalidDomain(format!("repeated polygon vertex at indices {i} and {j}")));
                    }
                }
            }
            let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
            check_simple(&pts)?;
            let area = Outline::new(pts).signed_area();
            if area.abs() <= 1e-14 * scale * scale {
                return Err(Error::InvalidDomain("degenerate polygon".into()));
            }
            if area < 0.0 {
                vertices.reverse();
            }
            Ok(DomainKind::Polygon { vertices })
        }
        DomainKind::FourierBoundary { coefficients } => {
            if coefficients.is_empty() {
                return Err(Error::InvalidDomain("fourier boundary needs coefficients".into()));
            }
            positive(coefficients[0], "mean support value")?;
            if coefficients.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidDomain("non-finite fourier coefficient".into()));
            }
            // The support parametrization describes a curve only where the
            // radius of curvature h + h'' stays positive.
            for i in 0..OUTLINE_SAMPLES {
                let (h, _, d2h) = support(&coefficients, TAU * i as f64 / OUTLINE_SAMPLES as f64);
                if h + d2h <= 0.0 {
                    return Err(Error::InvalidDomain("support function has non-positive radius of curvature".into()));
                }
            }
            let pts: Vec<Point> = (0..INTERSECTION_SAMPLES)
                .map(|i| {
                    let t = TAU * i as f64 / INTERSECTION_SAMPLES as f64;
                    let (h, dh, _) = support(&coefficients, t);
                    let (s, c) = t.sin_cos();
                    Point::new(h * c - dh * s, h * s + dh * c)
                })
                .collect();
            check_simple(&pts)?;
            Ok(DomainKind::FourierBoundary { coefficients })
        }
    }
}

fn cross(a: Vector, b: Vector) -> f64 {
    a.x * b.y - a.y * b.x
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(b - a, c - a)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0 && c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Rejects closed polylines whose non-adjacent edges meet.
fn check_simple(pts: &[Point]) -> Result<()> {
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::SelfIntersection { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Andrew's monotone chain; counterclockwise, no repeated endpoint.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let half = |iter: &mut dyn Iterator<Item = &Point>| {
        let mut chain: Vec<Point> = Vec::new();
        for &p in iter {
            while chain.len() >= 2 && orient(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0.0 {
                chain.pop();
            }
            chain.push(p);
        }
        chain.pop();
        chain
    };
    let mut hull = half(&mut pts.iter());
    hull.extend(half(&mut pts.iter().rev()));
    hull
}

/// Minimal width of a convex polygon (counterclockwise vertices).
pub fn calipers(hull: &[Point]) -> StripCover {
    let m = hull.len();
    if m < 3 {
        return StripCover { width: 0.0, direction: 0.0 };
    }
    let mut best = StripCover { width: f64::INFINITY, direction: 0.0 };
    let mut j = 1;
    for i in 0..m {
        let (a, b) = (hull[i], hull[(i + 1) % m]);
        let edge = b - a;
        while cross(edge, hull[(j + 1) % m] - a) > cross(edge, hull[j] - a) {
            j = (j + 1) % m;
        }
        let w = cross(edge, hull[j] - a) / edge.norm();
        if w < best.width {
            best = StripCover { width: w, direction: edge.y.atan2(edge.x) };
        }
    }
    best
}

/// Closed polyline with a two-level distance index.
#[derive(Clone, Debug, Default)]
struct Outline {
    points: Vec<Point>,
    cumulative: Vec<f64>,
    perimeter: f64,
    /// Coarse segment starts (indices into `points`) and the maximal deviation
    /// of the fine polyline from each coarse chord.
    coarse: Vec<(usize, f64)>,
}

const COARSE_STRIDE: usize = 16;

impl Outline {
    fn new(points: Vec<Point>) -> Self {
        let n = points.len();
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        for i in 0..n {
            let l = (points[(i + 1) % n] - points[i]).norm();
            cumulative.push(cumulative[i] + l);
        }
        let perimeter = cumulative[n];
        let mut coarse = Vec::new();
        if n > 256 {
            let mut start = 0;
            while start < n {
                let end = (start + COARSE_STRIDE).min(n);
                let (a, b) = (points[start], points[end % n]);
                let dev = (start..=end).map(|k| point_segment_distance(points[k % n], a, b)).fold(0.0, f64::max);
                coarse.push((start, dev));
                start = end;
            }
        }
        Outline { points, cumulative, perimeter, coarse }
    }

    fn signed_area(&self) -> f64 {
        let n = self.points.len();
        0.5 * (0..n)
            .map(|i| {
                let (p, q) = (self.points[i], self.points[(i + 1) % n]);
                p.x * q.y - q.x * p.y
            })
            .sum::<f64>()
    }

    fn centroid(&self) -> Point {
        let n = self.points.len();
        let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (p, q) = (self.points[i], self.points[(i + 1) % n]);
            let w = p.x * q.y - q.x * p.y;
            a += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point::new(cx / (3.0 * a), cy / (3.0 * a))
    }

    fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    fn at_arclength(&self, s: f64) -> Point {
        let n = self.points.len();
        let i = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        let l = self.cumulative[i + 1] - self.cumulative[i];
        let t = if l > 0.0 { (s - self.cumulative[i]) / l } else { 0.0 };
        let (a, b) = (self.points[i], self.points[(i + 1) % n]);
        a + (b - a) * t
    }

    fn contains(&self, p: Point) -> bool {
        let n = self.points.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.points[i], self.points[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    fn fine_distance(&self, from: usize, to: usize, p: Point) -> f64 {
        let n = self.points.len();
        (from..to)
            .map(|k| point_segment_distance(p, self.points[k % n], self.points[(k + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    fn distance(&self, p: Point) -> f64 {
        let n = self.points.len();
        if self.coarse.is_empty() {
            return self.fine_distance(0, n, p);
        }
        let mut bounds: Vec<(f64, usize)> = self
            .coarse
            .iter()
            .enumerate()
            .map(|(k, &(start, dev))| {
                let end = self.coarse.get(k + 1).map_or(n, |c| c.0);
                let d = point_segment_distance(p, self.points[start], self.points[end % n]);
                (d - dev, k)
            })
            .collect();
        bounds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        for (lower, k) in bounds {
            if lower >= best {
                break;
            }
            let start = self.coarse[k].0;
            let end = self.coarse.get(k + 1).map_or(n, |c| c.0);
            best = best.min(self.fine_distance(start, end, p));
        }
        best
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_areas() {
        assert!((Domain::disk(1.0).unwrap().area() - PI).abs() < 1e-15);
        assert!((Domain::ellipse(2.0, 0.5).unwrap().area() - PI).abs() < 1e-15);
        let s = PI.sqrt();
        assert!((Domain::rectangle(s, s).unwrap().area() - PI).abs() < 1e-14);
        let r = Domain::rectangle(0.8, PI / 0.8).unwrap();
        assert!((r.area() - PI).abs() < 1e-14);
    }

    #[test]
    fn fourier_area_matches_closed_form() {
        // pi a0^2 + (pi/2) sum (1 - k^2)(a_k^2 + b_k^2)
        let c = vec![1.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.05];
        let d = Domain::fourier(c).unwrap();
        let exact = PI + 0.5 * PI * (-3.0 * 0.01 - 8.0 * 0.0025);
        assert!((d.area() - exact).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Domain::disk(0.0).is_err());
        assert!(Domain::rectangle(-1.0, 1.0).is_err());
        assert!(Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        let repeated = Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(repeated, Err(Error::InvalidDomain(_))));
        let bowtie = Domain::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(bowtie, Err(Error::SelfIntersection { .. })));
        // radius of curvature 1 - 9 * 0.2 < 0
        assert!(Domain::fourier(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.2]).is_err());
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let d = Domain::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((d.area() - 1.0).abs() < 1e-15);
        assert!(d.contains(Point::new(0.5, 0.5)));
    }

    #[test]
    fn normalization() {
        let d = Domain::disk(2.0).unwrap().normalize_area(PI).unwrap();
        assert_eq!(d.kind(), &DomainKind::Disk { radius: 1.0 });
        let sq = Domain::rectangle(1.0, 1.0).unwrap().normalize_area(PI).unwrap();
        match sq.kind() {
            DomainKind::Rectangle { a, b } => {
                assert!((a - PI.sqrt()).abs() < 1e-14 && (b - PI.sqrt()).abs() < 1e-14)
            }
            k => panic!("kind changed: {k:?}"),
        }
        let f = Domain::fourier(vec![1.3, 0.0, 0.0, 0.1]).unwrap();
        let once = f.normalize_area(PI).unwrap();
        let twice = once.normalize_area(PI).unwrap();
        assert!((once.area() - PI).abs() < 1e-10);
        assert_eq!(once, twice);
    }

    #[test]
    fn strip_widths() {
        assert!((Domain::disk(1.0).unwrap().min_strip_width().width - 2.0).abs() < 1e-8);
        let r = Domain::rectangle(0.8, PI / 0.8).unwrap();
        assert!((r.min_strip_width().width - 0.8).abs() < 1e-12);
        let e = Domain::ellipse(2.0, 0.5).unwrap();
        assert!((e.min_strip_width().width - 1.0).abs() < 1e-8);
    }

    #[test]
    fn distances_and_inradius() {
        let e = Domain::ellipse(2.0, 0.5).unwrap();
        assert!((e.distance_to_boundary(Point::origin()) - 0.5).abs() < 1e-6);
        assert!((e.inradius() - 0.5).abs() < 1e-15);
        let p = Domain::polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]).unwrap();
        let (c, r) = p.inscribed_disk();
        assert!((r - 0.5).abs() < 1e-8, "{r}");
        assert!((c.y - 0.5).abs() < 1e-6);
        let f = Domain::fourier(vec![1.0]).unwrap();
        assert!((f.inradius() - 1.0).abs() < 1e-5);
        assert!((f.diameter() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn placement_round_trip() {
        let d = Domain::ellipse(2.0, 0.5).unwrap().placed(Point::new(3.0, -1.0), 0.7);
        let p = Point::new(0.3, 0.2);
        let q = d.to_local(d.to_world(p));
        assert!((p - q).norm() < 1e-14);
        assert!(d.contains(d.to_world(Point::new(1.9, 0.0))));
        assert!(!d.contains(Point::new(1.9, 0.0) + Vector::new(0.0, 0.6)));
    }
}
