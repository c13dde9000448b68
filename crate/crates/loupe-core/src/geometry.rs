//! Plane geometry: points on the Riemann sphere, Möbius maps, domains, target sets and curves.
//!
//! Every type here is an immutable value. Distance queries are exact for the primitive
//! variants and vertex-resolution accurate for polylines.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex number alias used throughout the crate.
pub type C64 = Complex64;

/// Shorthand constructor for a finite complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A point of the Riemann sphere: a finite complex number or the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ComplexPoint {
    Finite(C64),
    Infinity,
}

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Self {
        ComplexPoint::Finite(c64(re, im))
    }

    pub fn finite(self) -> Option<C64> {
        match self {
            ComplexPoint::Finite(z) => Some(z),
            ComplexPoint::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ComplexPoint::Infinity)
    }

    /// Modulus; infinite for the point at infinity.
    pub fn norm(self) -> f64 {
        match self {
            ComplexPoint::Finite(z) => z.norm(),
            ComplexPoint::Infinity => f64::INFINITY,
        }
    }
}

impl From<C64> for ComplexPoint {
    fn from(z: C64) -> Self {
        ComplexPoint::Finite(z)
    }
}

impl fmt::Display for ComplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComplexPoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            ComplexPoint::Infinity => write!(f, "inf"),
        }
    }
}

/// Möbius transformation `z ↦ (az + b)/(cz + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl MobiusMap {
    /// Builds a map, rejecting degenerate coefficients.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = (a.norm() + b.norm()) * (c.norm() + d.norm());
        if !(det.norm() > 1e-300 && det.norm() > 1e-14 * scale) {
            return Err(Error::InvalidInput("degenerate Möbius coefficients (ad - bc = 0)".into()));
        }
        Ok(MobiusMap { a, b, c, d })
    }

    pub fn identity() -> Self {
        MobiusMap { a: C64::new(1.0, 0.0), b: C64::new(0.0, 0.0), c: C64::new(0.0, 0.0), d: C64::new(1.0, 0.0) }
    }

    /// `z ↦ λ z` for a nonzero complex `λ`.
    pub fn dilation(lambda: C64) -> Self {
        MobiusMap { a: lambda, b: C64::new(0.0, 0.0), c: C64::new(0.0, 0.0), d: C64::new(1.0, 0.0) }
    }

    /// `z ↦ z + w`.
    pub fn translation(w: C64) -> Self {
        MobiusMap { a: C64::new(1.0, 0.0), b: w, c: C64::new(0.0, 0.0), d: C64::new(1.0, 0.0) }
    }

    /// `z ↦ 1/z`.
    pub fn inversion() -> Self {
        MobiusMap { a: C64::new(0.0, 0.0), b: C64::new(1.0, 0.0), c: C64::new(1.0, 0.0), d: C64::new(0.0, 0.0) }
    }

    /// Disk automorphism `z ↦ e^{iφ} (z − p)/(1 − p̄ z)` with `|p| < 1`.
    pub fn disk_automorphism(p: C64, phi: f64) -> Result<Self> {
        if p.norm() >= 1.0 {
            return Err(Error::InvalidInput("disk automorphism needs |p| < 1".into()));
        }
        let rot = C64::from_polar(1.0, phi);
        MobiusMap::new(rot, -rot * p, -p.conj(), C64::new(1.0, 0.0))
    }

    pub fn determinant(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Image of a point of the sphere; the pole maps to ∞ and ∞ maps to `a/c`.
    pub fn apply(&self, z: ComplexPoint) -> ComplexPoint {
        match z {
            ComplexPoint::Infinity => {
                if self.c == C64::new(0.0, 0.0) {
                    ComplexPoint::Infinity
                } else {
                    ComplexPoint::Finite(self.a / self.c)
                }
            }
            ComplexPoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den == C64::new(0.0, 0.0) {
                    ComplexPoint::Infinity
                } else {
                    ComplexPoint::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Image of a finite point that is known not to be the pole.
    #[inline]
    pub fn apply_c(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Complex derivative at a finite non-pole point.
    #[inline]
    pub fn derivative(&self, z: C64) -> C64 {
        let den = self.c * z + self.d;
        self.determinant() / (den * den)
    }

    /// The preimage of ∞.
    pub fn pole(&self) -> ComplexPoint {
        if self.c == C64::new(0.0, 0.0) {
            ComplexPoint::Infinity
        } else {
            ComplexPoint::Finite(-self.d / self.c)
        }
    }

    /// Image of a circle, computed from three mapped points and their circumcircle.
    ///
    /// Fails with [`Error::PoleOnCircle`] when the image is a line.
    pub fn image_circle(&self, circle: &Circle) -> Result<Circle> {
        if let ComplexPoint::Finite(p) = self.pole() {
            let gap = ((p - circle.center).norm() - circle.radius).abs();
            if gap <= 1e-12 * circle.radius.max(1.0) {
                return Err(Error::PoleOnCircle);
            }
        }
        let pts: Vec<C64> = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]
            .iter()
            .map(|&t| self.apply_c(circle.point_at(t)))
            .collect();
        Circle::through(pts[0], pts[1], pts[2])
    }
}

/// A circle in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: C64,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: C64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::InvalidInput(format!("circle radius must be positive and finite, got {radius}")));
        }
        Ok(Circle { center, radius })
    }

    /// Circle centered at the origin.
    pub fn centered(radius: f64) -> Result<Self> {
        Circle::new(C64::new(0.0, 0.0), radius)
    }

    #[inline]
    pub fn point_at(&self, theta: f64) -> C64 {
        self.center + C64::from_polar(self.radius, theta)
    }

    /// Circumcircle of three non-collinear points.
    pub fn through(p: C64, q: C64, r: C64) -> Result<Circle> {
        let (ax, ay) = (p.re, p.im);
        let (bx, by) = (q.re, q.im);
        let (cx, cy) = (r.re, r.im);
        let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        let scale = (p - q).norm().max((q - r).norm()).max((r - p).norm());
        if d.abs() <= 1e-14 * scale * scale {
            return Err(Error::PoleOnCircle);
        }
        let a2 = ax * ax + ay * ay;
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
        let uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
        let center = C64::new(ux, uy);
        let radius = ((p - center).norm() + (q - center).norm() + (r - center).norm()) / 3.0;
        Circle::new(center, radius)
    }

    /// Distance from `z` to the circle itself.
    #[inline]
    pub fn distance(&self, z: C64) -> f64 {
        ((z - self.center).norm() - self.radius).abs()
    }

    /// True if `z` lies strictly inside the open disk bounded by the circle.
    #[inline]
    pub fn encloses(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// True if the closed disk of `other` lies inside the open disk of `self`.
    pub fn encloses_circle(&self, other: &Circle) -> bool {
        (other.center - self.center).norm() + other.radius < self.radius
    }

    /// True if the two circles neither meet nor touch.
    pub fn disjoint(&self, other: &Circle) -> bool {
        let d = (self.center - other.center).norm();
        d > self.radius + other.radius || d + self.radius.min(other.radius) < self.radius.max(other.radius)
    }

    pub fn scaled(&self, lambda: f64) -> Circle {
        Circle { center: self.center * lambda, radius: self.radius * lambda.abs() }
    }

    pub fn translated(&self, w: C64) -> Circle {
        Circle { center: self.center + w, radius: self.radius }
    }
}

/// Ordered vertex list with optional capacity stamps `t` (so that `ccap γ_t = log t`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyCurve {
    vertices: Vec<C64>,
    cap_times: Option<Vec<f64>>,
}

impl PolyCurve {
    /// Builds a curve; consecutive vertices must differ and stamps must increase strictly.
    pub fn new(vertices: Vec<C64>, cap_times: Option<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput("a curve needs at least two vertices".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("consecutive curve vertices must be distinct".into()));
        }
        if vertices.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("curve vertices must be finite".into()));
        }
        if let Some(t) = &cap_times {
            if t.len() != vertices.len() {
                return Err(Error::InvalidInput("one capacity stamp per vertex is required".into()));
            }
            if t.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidInput("capacity stamps must increase strictly".into()));
            }
        }
        Ok(PolyCurve { vertices, cap_times })
    }

    /// Straight segment `[p, q]` as a two-vertex curve.
    pub fn segment(p: C64, q: C64) -> Result<Self> {
        PolyCurve::new(vec![p, q], None)
    }

    pub fn vertices(&self) -> &[C64] {
        &self.vertices
    }

    pub fn cap_times(&self) -> Option<&[f64]> {
        self.cap_times.as_deref()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Exact distance from `z` to the polyline.
    pub fn distance(&self, z: C64) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| segment_distance(z, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Nearest point of the polyline to `z`.
    pub fn nearest_point(&self, z: C64) -> C64 {
        let mut best = (f64::INFINITY, self.vertices[0]);
        for w in self.vertices.windows(2) {
            let p = segment_nearest(z, w[0], w[1]);
            let d = (z - p).norm();
            if d < best.0 {
                best = (d, p);
            }
        }
        best.1
    }

    /// Largest modulus `max |z − center|` over the vertices.
    pub fn radius_about(&self, center: C64) -> f64 {
        self.vertices.iter().map(|v| (v - center).norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Result<PolyCurve> {
        PolyCurve::new(self.vertices.iter().map(|&v| f(v)).collect(), None)
    }
}

/// Distance from `z` to the segment `[a, b]`.
#[inline]
pub fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    (z - segment_nearest(z, a, b)).norm()
}

/// Nearest point to `z` on the segment `[a, b]`.
#[inline]
pub fn segment_nearest(z: C64, a: C64, b: C64) -> C64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return a;
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / len2;
    a + ab * t.clamp(0.0, 1.0)
}

/// A circular arc `center + radius·e^{iθ}` for `θ` from `start` over `sweep` (radians, `0 < sweep < 2π`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub circle: Circle,
    pub start: f64,
    pub sweep: f64,
}

impl Arc {
    pub fn new(circle: Circle, start: f64, sweep: f64) -> Result<Self> {
        if !(sweep > 0.0 && sweep < 2.0 * PI) {
            return Err(Error::InvalidInput("arc sweep must lie in (0, 2π)".into()));
        }
        Ok(Arc { circle, start, sweep })
    }

    /// True if the direction of `z` from the center falls within the arc's angular range.
    pub fn covers_angle(&self, theta: f64) -> bool {
        (theta - self.start).rem_euclid(2.0 * PI) <= self.sweep
    }

    pub fn endpoints(&self) -> (C64, C64) {
        (self.circle.point_at(self.start), self.circle.point_at(self.start + self.sweep))
    }

    pub fn distance(&self, z: C64) -> f64 {
        let rel = z - self.circle.center;
        if rel.norm() > 0.0 && self.covers_angle(rel.arg()) {
            self.circle.distance(z)
        } else {
            let (p, q) = self.endpoints();
            (z - p).norm().min((z - q).norm())
        }
    }
}

/// Closed target set `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CompactSet {
    Circle(Circle),
    ClosedDisk(Circle),
    Arc(Arc),
    /// Open chain of segments through the vertices.
    Segments(PolyCurve),
    /// Discretized hull, for example an SLE trace.
    Hull(PolyCurve),
    Union(Vec<CompactSet>),
}

impl CompactSet {
    pub fn circle(cx: f64, cy: f64, r: f64) -> Result<Self> {
        Ok(CompactSet::Circle(Circle::new(c64(cx, cy), r)?))
    }

    pub fn closed_disk(cx: f64, cy: f64, r: f64) -> Result<Self> {
        Ok(CompactSet::ClosedDisk(Circle::new(c64(cx, cy), r)?))
    }

    pub fn segment(p: C64, q: C64) -> Result<Self> {
        Ok(CompactSet::Segments(PolyCurve::segment(p, q)?))
    }

    /// Euclidean distance from `z` to the set.
    pub fn distance(&self, z: C64) -> f64 {
        match self {
            CompactSet::Circle(c) => c.distance(z),
            CompactSet::ClosedDisk(c) => ((z - c.center).norm() - c.radius).max(0.0),
            CompactSet::Arc(a) => a.distance(z),
            CompactSet::Segments(p) | CompactSet::Hull(p) => p.distance(z),
            CompactSet::Union(v) => v.iter().map(|s| s.distance(z)).fold(f64::INFINITY, f64::min),
        }
    }

    /// True if `z` is within `tol` of the set.
    pub fn hits(&self, z: C64, tol: f64) -> bool {
        self.distance(z) <= tol
    }

    /// Largest distance from `center` to a point of the set.
    pub fn radius_about(&self, center: C64) -> f64 {
        match self {
            CompactSet::Circle(c) | CompactSet::ClosedDisk(c) => (c.center - center).norm() + c.radius,
            CompactSet::Arc(a) => {
                let n = 256;
                (0..=n)
                    .map(|k| (a.circle.point_at(a.start + a.sweep * k as f64 / n as f64) - center).norm())
                    .fold(0.0, f64::max)
                    .max(a.distance(center).max(0.0))
            }
            CompactSet::Segments(p) | CompactSet::Hull(p) => p.radius_about(center),
            CompactSet::Union(v) => v.iter().map(|s| s.radius_about(center)).fold(0.0, f64::max),
        }
    }

    /// The set as a circle-type primitive, if it is one: `(circle, filled)`.
    pub fn as_circle(&self) -> Option<(Circle, bool)> {
        match self {
            CompactSet::Circle(c) => Some((*c, false)),
            CompactSet::ClosedDisk(c) => Some((*c, true)),
            _ => None,
        }
    }

    /// Image under `z ↦ λ z + w` with real `λ > 0`.
    pub fn affine(&self, lambda: f64, w: C64) -> Result<CompactSet> {
        let f = |z: C64| z * lambda + w;
        Ok(match self {
            CompactSet::Circle(c) => CompactSet::Circle(Circle::new(f(c.center), c.radius * lambda)?),
            CompactSet::ClosedDisk(c) => CompactSet::ClosedDisk(Circle::new(f(c.center), c.radius * lambda)?),
            CompactSet::Arc(a) => CompactSet::Arc(Arc::new(Circle::new(f(a.circle.center), a.circle.radius * lambda)?, a.start, a.sweep)?),
            CompactSet::Segments(p) => CompactSet::Segments(p.map(f)?),
            CompactSet::Hull(p) => CompactSet::Hull(p.map(f)?),
            CompactSet::Union(v) => CompactSet::Union(v.iter().map(|s| s.affine(lambda, w)).collect::<Result<_>>()?),
        })
    }

    /// Möbius image of a circle or closed disk. The filled side follows the mapped interior.
    pub fn mobius_image(&self, f: &MobiusMap) -> Result<CompactSet> {
        match self {
            CompactSet::Circle(c) => Ok(CompactSet::Circle(f.image_circle(c)?)),
            CompactSet::ClosedDisk(c) => {
                let img = f.image_circle(c)?;
                match f.pole() {
                    ComplexPoint::Finite(p) if c.encloses(p) => Err(Error::Unsupported(
                        "Möbius image of a closed disk containing the pole is unbounded".into(),
                    )),
                    _ => Ok(CompactSet::ClosedDisk(img)),
                }
            }
            CompactSet::Segments(p) | CompactSet::Hull(p) => {
                // Segments map to circular arcs; each is resolved by 16 chords.
                let pole = f.pole().finite();
                let v = p.vertices();
                let mut out = Vec::with_capacity(16 * v.len());
                for (i, w) in v.windows(2).enumerate() {
                    let from = if i == 0 { 0 } else { 1 };
                    for k in from..=16 {
                        let z = w[0] + (w[1] - w[0]) * (k as f64 / 16.0);
                        if pole.is_some_and(|q| (z - q).norm() < 1e-12 * (1.0 + q.norm())) {
                            return Err(Error::PoleOnCircle);
                        }
                        out.push(f.apply_c(z));
                    }
                }
                if v.len() == 1 {
                    out.push(f.apply_c(v[0]));
                }
                let curve = PolyCurve::new(out, None)?;
                Ok(if matches!(self, CompactSet::Hull(_)) { CompactSet::Hull(curve) } else { CompactSet::Segments(curve) })
            }
            CompactSet::Union(list) => Ok(CompactSet::Union(list.iter().map(|s| s.mobius_image(f)).collect::<Result<_>>()?)),
            CompactSet::Arc(_) => Err(Error::Unsupported("Möbius images of arcs are not supported".into())),
        }
    }
}

/// Region of the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// Open disk `{|z − center| < radius}`.
    Disk { center: C64, radius: f64 },
    /// Exterior `{|z − center| > radius}` (contains ∞).
    ExteriorDisk { center: C64, radius: f64 },
    /// Annulus `{inner < |z| < outer}` centered at the origin.
    Annulus { inner: f64, outer: f64 },
    /// Upper half-plane `{Im z > 0}`.
    HalfPlane,
    /// Complement of a compact set.
    HullComplement(CompactSet),
    /// Interior of a simple closed polygon.
    PolylineJordan(Vec<C64>),
    Intersection(Vec<Domain>),
}

impl Domain {
    pub fn disk(cx: f64, cy: f64, r: f64) -> Result<Self> {
        Circle::new(c64(cx, cy), r)?;
        Ok(Domain::Disk { center: c64(cx, cy), radius: r })
    }

    pub fn unit_disk() -> Self {
        Domain::Disk { center: c64(0.0, 0.0), radius: 1.0 }
    }

    pub fn exterior(cx: f64, cy: f64, r: f64) -> Result<Self> {
        Circle::new(c64(cx, cy), r)?;
        Ok(Domain::ExteriorDisk { center: c64(cx, cy), radius: r })
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::InvalidInput(format!("annulus needs 0 < r < R, got r={inner}, R={outer}")));
        }
        Ok(Domain::Annulus { inner, outer })
    }

    /// Interior of a polygon; the vertex list must describe a simple closed curve.
    pub fn polygon(vertices: Vec<C64>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput("a polygon needs at least three vertices".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]) {
                    return Err(Error::InvalidInput("polygon boundary is not simple".into()));
                }
            }
        }
        Ok(Domain::PolylineJordan(vertices))
    }

    /// Membership test, total for finite points.
    pub fn contains(&self, z: C64) -> bool {
        match self {
            Domain::Disk { center, radius } => (z - center).norm() < *radius,
            Domain::ExteriorDisk { center, radius } => (z - center).norm() > *radius,
            Domain::Annulus { inner, outer } => {
                let r = z.norm();
                r > *inner && r < *outer
            }
            Domain::HalfPlane => z.im > 0.0,
            Domain::HullComplement(k) => k.distance(z) > 0.0,
            Domain::PolylineJordan(v) => point_in_polygon(z, v) && polygon_boundary_distance(z, v) > 0.0,
            Domain::Intersection(list) => list.iter().all(|d| d.contains(z)),
        }
    }

    /// Distance from `z` to the boundary (for `z` in the domain: the radius of the largest inscribed disk).
    pub fn boundary_distance(&self, z: C64) -> f64 {
        match self {
            Domain::Disk { center, radius } | Domain::ExteriorDisk { center, radius } => ((z - center).norm() - radius).abs(),
            Domain::Annulus { inner, outer } => {
                let r = z.norm();
                (r - inner).abs().min((outer - r).abs())
            }
            Domain::HalfPlane => z.im.abs(),
            Domain::HullComplement(k) => k.distance(z),
            Domain::PolylineJordan(v) => polygon_boundary_distance(z, v),
            Domain::Intersection(list) => list.iter().map(|d| d.boundary_distance(z)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Nearest boundary point to `z`.
    pub fn project_to_boundary(&self, z: C64) -> C64 {
        match self {
            Domain::Disk { center, radius } | Domain::ExteriorDisk { center, radius } => project_circle(z, *center, *radius),
            Domain::Annulus { inner, outer } => {
                let r = z.norm();
                if (r - inner).abs() <= (outer - r).abs() {
                    project_circle(z, c64(0.0, 0.0), *inner)
                } else {
                    project_circle(z, c64(0.0, 0.0), *outer)
                }
            }
            Domain::HalfPlane => c64(z.re, 0.0),
            Domain::HullComplement(k) => project_to_set(k, z),
            Domain::PolylineJordan(v) => {
                let n = v.len();
                let mut best = (f64::INFINITY, v[0]);
                for i in 0..n {
                    let p = segment_nearest(z, v[i], v[(i + 1) % n]);
                    let d = (z - p).norm();
                    if d < best.0 {
                        best = (d, p);
                    }
                }
                best.1
            }
            Domain::Intersection(list) => {
                let mut best = (f64::INFINITY, z);
                for d in list {
                    let dist = d.boundary_distance(z);
                    if dist < best.0 {
                        best = (dist, d.project_to_boundary(z));
                    }
                }
                best.1
            }
        }
    }

    /// True if the domain is bounded.
    pub fn is_bounded(&self) -> bool {
        match self {
            Domain::Disk { .. } | Domain::Annulus { .. } | Domain::PolylineJordan(_) => true,
            Domain::ExteriorDisk { .. } | Domain::HalfPlane | Domain::HullComplement(_) => false,
            Domain::Intersection(list) => list.iter().any(|d| d.is_bounded()),
        }
    }

    /// Boundary of a simply or doubly connected canonical domain as a compact set.
    pub fn boundary_set(&self) -> Result<CompactSet> {
        match self {
            Domain::Disk { center, radius } | Domain::ExteriorDisk { center, radius } => Ok(CompactSet::Circle(Circle::new(*center, *radius)?)),
            Domain::Annulus { inner, outer } => Ok(CompactSet::Union(vec![CompactSet::circle(0.0, 0.0, *inner)?, CompactSet::circle(0.0, 0.0, *outer)?])),
            Domain::PolylineJordan(v) => {
                let mut closed = v.clone();
                closed.push(v[0]);
                Ok(CompactSet::Segments(PolyCurve::new(closed, None)?))
            }
            Domain::HullComplement(k) => Ok(k.clone()),
            _ => Err(Error::Unsupported("boundary set of this domain variant".into())),
        }
    }

    /// Image under `z ↦ λ z + w` with real `λ > 0`.
    pub fn affine(&self, lambda: f64, w: C64) -> Result<Domain> {
        let f = |z: C64| z * lambda + w;
        Ok(match self {
            Domain::Disk { center, radius } => Domain::Disk { center: f(*center), radius: radius * lambda },
            Domain::ExteriorDisk { center, radius } => Domain::ExteriorDisk { center: f(*center), radius: radius * lambda },
            Domain::Annulus { inner, outer } => {
                if w != c64(0.0, 0.0) {
                    return Err(Error::Unsupported("annuli are centered at the origin; translate via an intersection of disks".into()));
                }
                Domain::Annulus { inner: inner * lambda, outer: outer * lambda }
            }
            Domain::HalfPlane => {
                if w.im != 0.0 {
                    return Err(Error::Unsupported("half-plane translation off the real axis".into()));
                }
                Domain::HalfPlane
            }
            Domain::HullComplement(k) => Domain::HullComplement(k.affine(lambda, w)?),
            Domain::PolylineJordan(v) => Domain::PolylineJordan(v.iter().map(|&z| f(z)).collect()),
            Domain::Intersection(list) => Domain::Intersection(list.iter().map(|d| d.affine(lambda, w)).collect::<Result<_>>()?),
        })
    }
}

fn project_circle(z: C64, center: C64, radius: f64) -> C64 {
    let rel = z - center;
    if rel.norm() == 0.0 {
        center + c64(radius, 0.0)
    } else {
        center + rel * (radius / rel.norm())
    }
}

/// Nearest point of a compact set to `z`.
pub fn project_to_set(k: &CompactSet, z: C64) -> C64 {
    match k {
        CompactSet::Circle(c) => project_circle(z, c.center, c.radius),
        CompactSet::ClosedDisk(c) => {
            if c.encloses(z) {
                z
            } else {
                project_circle(z, c.center, c.radius)
            }
        }
        CompactSet::Arc(a) => {
            let rel = z - a.circle.center;
            if rel.norm() > 0.0 && a.covers_angle(rel.arg()) {
                project_circle(z, a.circle.center, a.circle.radius)
            } else {
                let (p, q) = a.endpoints();
                if (z - p).norm() <= (z - q).norm() {
                    p
                } else {
                    q
                }
            }
        }
        CompactSet::Segments(p) | CompactSet::Hull(p) => p.nearest_point(z),
        CompactSet::Union(v) => {
            let mut best = (f64::INFINITY, z);
            for s in v {
                let d = s.distance(z);
                if d < best.0 {
                    best = (d, project_to_set(s, z));
                }
            }
            best.1
        }
    }
}

fn polygon_boundary_distance(z: C64, v: &[C64]) -> f64 {
    let n = v.len();
    (0..n).map(|i| segment_distance(z, v[i], v[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(z: C64, v: &[C64]) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Closed-segment intersection test.
pub fn segments_intersect(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: C64, b: C64, p: C64, d: f64| d == 0.0 && segment_distance(p, a, b) == 0.0;
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn parse_args(s: &str, name: &str) -> Result<Vec<f64>> {
    let body = s
        .trim()
        .strip_prefix(name)
        .and_then(|r| r.trim().strip_prefix('('))
        .and_then(|r| r.trim_end().strip_suffix(')'))
        .ok_or_else(|| Error::InvalidInput(format!("expected {name}(...), got `{s}`")))?;
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number `{}` in `{s}`", t.trim()))))
        .collect()
}

fn literal_head(s: &str) -> &str {
    s.trim().split('(').next().unwrap_or("").trim()
}

fn pairs(args: &[f64], s: &str) -> Result<Vec<C64>> {
    if args.len() % 2 != 0 || args.is_empty() {
        return Err(Error::InvalidInput(format!("expected an even number of coordinates in `{s}`")));
    }
    Ok(args.chunks(2).map(|p| c64(p[0], p[1])).collect())
}

/// Parses a point literal: `x,y`, `(x,y)`, `point(x,y)` or `inf`.
pub fn parse_point(s: &str) -> Result<ComplexPoint> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t == "∞" {
        return Ok(ComplexPoint::Infinity);
    }
    let inner = if literal_head(t) == "point" {
        parse_args(t, "point")?
    } else {
        let stripped = t.trim_start_matches('(').trim_end_matches(')');
        stripped
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad point literal `{s}`"))))
            .collect::<Result<Vec<_>>>()?
    };
    match inner.as_slice() {
        [x] => Ok(ComplexPoint::new(*x, 0.0)),
        [x, y] => Ok(ComplexPoint::new(*x, *y)),
        _ => Err(Error::InvalidInput(format!("bad point literal `{s}`"))),
    }
}

/// Parses a target-set literal: `circle(x,y,r)`, `disk(x,y,r)`, `segment(x1,y1,x2,y2)`,
/// `polyline(x1,y1,...)`, `arc(x,y,r,start,sweep)`, or `union(a;b;...)`.
pub fn parse_set(s: &str) -> Result<CompactSet> {
    let t = s.trim();
    match literal_head(t) {
        "circle" => match parse_args(t, "circle")?.as_slice() {
            [x, y, r] => CompactSet::circle(*x, *y, *r),
            _ => Err(Error::InvalidInput(format!("circle(x,y,r) expected, got `{s}`"))),
        },
        "disk" => match parse_args(t, "disk")?.as_slice() {
            [x, y, r] => CompactSet::closed_disk(*x, *y, *r),
            _ => Err(Error::InvalidInput(format!("disk(x,y,r) expected, got `{s}`"))),
        },
        "segment" => match parse_args(t, "segment")?.as_slice() {
            [x1, y1, x2, y2] => CompactSet::segment(c64(*x1, *y1), c64(*x2, *y2)),
            _ => Err(Error::InvalidInput(format!("segment(x1,y1,x2,y2) expected, got `{s}`"))),
        },
        "polyline" => {
            let a = parse_args(t, "polyline")?;
            Ok(CompactSet::Segments(PolyCurve::new(pairs(&a, s)?, None)?))
        }
        "arc" => match parse_args(t, "arc")?.as_slice() {
            [x, y, r, a, w] => Ok(CompactSet::Arc(Arc::new(Circle::new(c64(*x, *y), *r)?, *a, *w)?)),
            _ => Err(Error::InvalidInput(format!("arc(x,y,r,start,sweep) expected, got `{s}`"))),
        },
        "union" => {
            let body = t
                .strip_prefix("union")
                .and_then(|r| r.trim().strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| Error::InvalidInput(format!("bad union literal `{s}`")))?;
            Ok(CompactSet::Union(body.split(';').map(parse_set).collect::<Result<_>>()?))
        }
        _ => Err(Error::InvalidInput(format!("unknown set literal `{s}`"))),
    }
}

/// Parses a domain literal: `disk(x,y,r)`, `exterior(x,y,r)`, `annulus(r,R)`, `halfplane()`,
/// `polygon(x1,y1,...)`, or `complement(<set literal>)`.
pub fn parse_domain(s: &str) -> Result<Domain> {
    let t = s.trim();
    match literal_head(t) {
        "disk" => match parse_args(t, "disk")?.as_slice() {
            [x, y, r] => Domain::disk(*x, *y, *r),
            _ => Err(Error::InvalidInput(format!("disk(x,y,r) expected, got `{s}`"))),
        },
        "exterior" => match parse_args(t, "exterior")?.as_slice() {
            [x, y, r] => Domain::exterior(*x, *y, *r),
            _ => Err(Error::InvalidInput(format!("exterior(x,y,r) expected, got `{s}`"))),
        },
        "annulus" => match parse_args(t, "annulus")?.as_slice() {
            [r, rr] => Domain::annulus(*r, *rr),
            _ => Err(Error::InvalidInput(format!("annulus(r,R) expected, got `{s}`"))),
        },
        "halfplane" => Ok(Domain::HalfPlane),
        "polygon" => {
            let a = parse_args(t, "polygon")?;
            Domain::polygon(pairs(&a, s)?)
        }
        "complement" => {
            let body = t
                .strip_prefix("complement")
                .and_then(|r| r.trim().strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| Error::InvalidInput(format!("bad complement literal `{s}`")))?;
            Ok(Domain::HullComplement(parse_set(body)?))
        }
        _ => Err(Error::InvalidInput(format!("unknown domain literal `{s}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn apply_examples() {
        let id = MobiusMap::identity();
        assert_eq!(id.apply(ComplexPoint::new(3.0, 4.0)), ComplexPoint::new(3.0, 4.0));
        let inv = MobiusMap::inversion();
        assert_eq!(inv.apply(ComplexPoint::new(2.0, 0.0)), ComplexPoint::new(0.5, 0.0));
        assert_eq!(inv.apply(ComplexPoint::new(0.0, 0.0)), ComplexPoint::Infinity);
        assert_eq!(inv.apply(ComplexPoint::Infinity), ComplexPoint::new(0.0, 0.0));
    }

    #[test]
    fn degenerate_map_rejected() {
        let one = c64(1.0, 0.0);
        assert!(MobiusMap::new(one, one, one, one).is_err());
    }

    #[test]
    fn image_circle_examples() {
        let unit = Circle::centered(1.0).unwrap();
        let d = MobiusMap::dilation(c64(2.0, 0.0)).image_circle(&unit).unwrap();
        assert!(close(d.center, c64(0.0, 0.0), 1e-14) && (d.radius - 2.0).abs() < 1e-14);
        let t = MobiusMap::translation(c64(1.0, 0.0)).image_circle(&unit).unwrap();
        assert!(close(t.center, c64(1.0, 0.0), 1e-14) && (t.radius - 1.0).abs() < 1e-14);
        // Oracle: images of 2, 4 and 3+i under 1/z, circumcircle solved independently.
        let (p, q, r) = (c64(0.5, 0.0), c64(0.25, 0.0), c64(1.0, 0.0) / c64(3.0, 1.0));
        let centre_x = (p.re + q.re) / 2.0;
        let centre_y = ((r.re - centre_x).powi(2) + r.im * r.im - (p.re - centre_x).powi(2)) / (2.0 * r.im);
        assert!((centre_x - 0.375).abs() < 1e-15 && centre_y.abs() < 1e-15);
        let c = Circle::new(c64(3.0, 0.0), 1.0).unwrap();
        let img = MobiusMap::inversion().image_circle(&c).unwrap();
        assert!(close(img.center, c64(0.375, 0.0), 1e-13));
        assert!((img.radius - 0.125).abs() < 1e-13);
    }

    #[test]
    fn pole_on_circle_rejected() {
        let c = Circle::new(c64(1.0, 0.0), 1.0).unwrap();
        assert!(matches!(MobiusMap::inversion().image_circle(&c), Err(Error::PoleOnCircle)));
    }

    #[test]
    fn distance_examples() {
        let c2 = CompactSet::circle(0.0, 0.0, 2.0).unwrap();
        assert_eq!(c2.distance(c64(0.0, 0.0)), 2.0);
        let seg = CompactSet::segment(c64(-1.0, 0.0), c64(1.0, 0.0)).unwrap();
        assert_eq!(seg.distance(c64(3.0, 0.0)), 2.0);
        // Oracle: dense sampling of the circle.
        let c = CompactSet::circle(3.0, 0.0, 1.0).unwrap();
        let z = c64(1.0, 1.0);
        let dense = (0..200_000)
            .map(|k| (z - c64(3.0, 0.0) - C64::from_polar(1.0, 2.0 * PI * k as f64 / 200_000.0)).norm())
            .fold(f64::INFINITY, f64::min);
        assert!((c.distance(z) - dense).abs() < 1e-9);
        assert!((c.distance(z) - 1.236_067_977_499_79).abs() < 1e-12);
    }

    #[test]
    fn arc_distance() {
        let arc = Arc::new(Circle::centered(1.0).unwrap(), 0.0, PI / 2.0).unwrap();
        assert!((arc.distance(c64(2.0, 2.0)) - (8f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!((arc.distance(c64(-2.0, 0.0)) - 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn polycurve_validation() {
        assert!(PolyCurve::new(vec![c64(0.0, 0.0), c64(0.0, 0.0)], None).is_err());
        assert!(PolyCurve::new(vec![c64(0.0, 0.0), c64(1.0, 0.0)], Some(vec![1.0, 1.0])).is_err());
        assert!(PolyCurve::new(vec![c64(0.0, 0.0), c64(1.0, 0.0)], Some(vec![1.0, 2.0])).is_ok());
    }

    #[test]
    fn domain_membership_and_boundary() {
        let d = Domain::annulus(1.0, 10.0).unwrap();
        assert!(d.contains(c64(2.0, 0.0)));
        assert!(!d.contains(c64(0.5, 0.0)));
        assert_eq!(d.boundary_distance(c64(2.0, 0.0)), 1.0);
        let sq = Domain::polygon(vec![c64(-1.0, -1.0), c64(1.0, -1.0), c64(1.0, 1.0), c64(-1.0, 1.0)]).unwrap();
        assert!(sq.contains(c64(0.0, 0.0)));
        assert!((sq.boundary_distance(c64(0.5, 0.0)) - 0.5).abs() < 1e-15);
        assert!(Domain::polygon(vec![c64(0.0, 0.0), c64(1.0, 1.0), c64(1.0, 0.0), c64(0.0, 1.0)]).is_err());
        assert!(Domain::annulus(2.0, 1.0).is_err());
    }

    #[test]
    fn literals() {
        assert_eq!(parse_set("circle(0,0,1)").unwrap(), CompactSet::circle(0.0, 0.0, 1.0).unwrap());
        assert_eq!(parse_domain("annulus(0.5,2)").unwrap(), Domain::annulus(0.5, 2.0).unwrap());
        assert_eq!(parse_domain("disk(0,0,2)").unwrap(), Domain::disk(0.0, 0.0, 2.0).unwrap());
        assert_eq!(parse_point("2,0").unwrap(), ComplexPoint::new(2.0, 0.0));
        assert_eq!(parse_point("inf").unwrap(), ComplexPoint::Infinity);
        assert!(parse_set("circle(0,0)").is_err());
        assert!(parse_domain("blob(1)").is_err());
        let u = parse_set("union(circle(0,0,1); segment(2,0,3,0))").unwrap();
        assert!(matches!(u, CompactSet::Union(ref v) if v.len() == 2));
    }

    fn arb_map() -> impl Strategy<Value = MobiusMap> {
        proptest::array::uniform8(-3.0f64..3.0).prop_filter_map("nondegenerate", |v| {
            MobiusMap::new(c64(v[0], v[1]), c64(v[2], v[3]), c64(v[4], v[5]), c64(v[6], v[7])).ok()
                .filter(|m| m.determinant().norm() > 0.1)
        })
    }

    proptest! {
        #[test]
        fn composition_law(f in arb_map(), g in arb_map(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let z = ComplexPoint::new(x, y);
            let lhs = f.compose(&g).apply(z);
            let rhs = f.apply(g.apply(z));
            match (lhs, rhs) {
                (ComplexPoint::Finite(a), ComplexPoint::Finite(b)) => {
                    let scale = 1.0 + a.norm().max(b.norm());
                    prop_assume!(scale < 1e6);
                    prop_assert!((a - b).norm() <= 1e-9 * scale * scale);
                }
                (ComplexPoint::Infinity, ComplexPoint::Infinity) => {}
                _ => {}
            }
        }

        #[test]
        fn inverse_law(f in arb_map(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let z = c64(x, y);
            if let ComplexPoint::Finite(w) = f.apply(ComplexPoint::Finite(z)) {
                prop_assume!(w.norm() < 1e6);
                if let ComplexPoint::Finite(back) = f.inverse().apply(ComplexPoint::Finite(w)) {
                    prop_assert!((back - z).norm() < 1e-7 * (1.0 + w.norm()).powi(2));
                }
            }
        }

        #[test]
        fn circle_image_contains_images(f in arb_map(), cx in -2.0f64..2.0, cy in -2.0f64..2.0, r in 0.1f64..2.0) {
            let c = Circle::new(c64(cx, cy), r).unwrap();
            if let ComplexPoint::Finite(p) = f.pole() {
                prop_assume!(((p - c.center).norm() - r).abs() > 0.05);
            }
            let img = f.image_circle(&c).unwrap();
            prop_assume!(img.radius < 1e4);
            for k in 0..100 {
                let w = f.apply_c(c.point_at(0.0628 * k as f64 + 0.01));
                prop_assert!(img.distance(w) <= 1e-12 * (1.0 + img.radius + img.center.norm()));
            }
        }

        #[test]
        fn distance_zero_iff_member(theta in 0.0f64..6.28, s in 0.0f64..1.0, off in 0.01f64..1.0) {
            let c = CompactSet::circle(0.5, -0.5, 1.5).unwrap();
            let on = c64(0.5, -0.5) + C64::from_polar(1.5, theta);
            prop_assert!(c.distance(on) < 1e-14);
            prop_assert!(c.distance(c64(0.5, -0.5) + C64::from_polar(1.5 + off, theta)) > 0.0);
            let seg = CompactSet::segment(c64(-1.0, 0.0), c64(1.0, 2.0)).unwrap();
            let p = c64(-1.0, 0.0) + (c64(1.0, 2.0) - c64(-1.0, 0.0)) * s;
            prop_assert!(seg.distance(p) < 1e-14);
            prop_assert!(seg.distance(p + c64(off, -off)) > 0.0);
        }
    }
}
