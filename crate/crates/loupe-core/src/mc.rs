//! Monte Carlo planar Brownian motion by walk-on-spheres.
//!
//! A walk jumps to a uniform point of the largest disk centered at the current position that
//! avoids the boundary, and stops once within `eps` of it, returning the nearest boundary point.
//! In unbounded domains with bounded boundary, a walk that leaves a fixed enclosing circle is
//! returned to that circle in one step by sampling the exact exterior hitting distribution, so
//! recurrence costs a bounded number of steps.
//!
//! Estimators split their samples into fixed blocks, block `k` drawing from stream `k` of the
//! seed; blocks run in parallel and are reduced in block order, so results do not depend on
//! the number of threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::geometry::{c64, segment_nearest, Arc, Circle, CompactSet, Domain, C64};
use crate::rng::{RngStream, StreamRng};

/// Default cap on walk-on-spheres steps per walk.
pub const MAX_STEPS: u64 = 10_000_000;

/// Samples per parallel block (one random stream per block).
pub const BLOCK: u64 = 256;

/// Segments per bounding circle in chunked polylines.
const CHUNK: usize = 16;

/// Polyline with per-chunk bounding circles for fast distance queries.
#[derive(Clone, Debug)]
pub struct ChunkedPolyline {
    vertices: Vec<C64>,
    chunks: Vec<(C64, f64, usize, usize)>,
}

impl ChunkedPolyline {
    pub fn new(vertices: Vec<C64>) -> Self {
        let nseg = vertices.len().saturating_sub(1);
        let mut chunks = Vec::with_capacity(nseg / CHUNK + 1);
        let mut s = 0;
        while s < nseg {
            let e = (s + CHUNK).min(nseg);
            let pts = &vertices[s..=e];
            let (mut lo, mut hi) = (pts[0], pts[0]);
            for p in pts {
                lo = c64(lo.re.min(p.re), lo.im.min(p.im));
                hi = c64(hi.re.max(p.re), hi.im.max(p.im));
            }
            let c = (lo + hi) * 0.5;
            let r = pts.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
            chunks.push((c, r, s, e));
            s = e;
        }
        ChunkedPolyline { vertices, chunks }
    }

    fn scan(&self, z: C64, s: usize, e: usize, best: &mut (f64, C64)) {
        for i in s..e {
            let p = segment_nearest(z, self.vertices[i], self.vertices[i + 1]);
            let d = (z - p).norm();
            if d < best.0 {
                *best = (d, p);
            }
        }
    }

    /// Distance to the polyline and the nearest point.
    pub fn nearest(&self, z: C64) -> (f64, C64) {
        let mut first = 0;
        let mut lb_min = f64::INFINITY;
        for (k, &(c, r, _, _)) in self.chunks.iter().enumerate() {
            let lb = (z - c).norm() - r;
            if lb < lb_min {
                lb_min = lb;
                first = k;
            }
        }
        let mut best = (f64::INFINITY, self.vertices[0]);
        let (_, _, s0, e0) = self.chunks[first];
        self.scan(z, s0, e0, &mut best);
        for (k, &(c, r, s, e)) in self.chunks.iter().enumerate() {
            if k != first && (z - c).norm() - r < best.0 {
                self.scan(z, s, e, &mut best);
            }
        }
        best
    }

    fn bbox(&self) -> (C64, C64) {
        bbox_of(self.vertices.iter().copied())
    }
}

fn bbox_of(points: impl Iterator<Item = C64>) -> (C64, C64) {
    let mut lo = c64(f64::INFINITY, f64::INFINITY);
    let mut hi = c64(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = c64(lo.re.min(p.re), lo.im.min(p.im));
        hi = c64(hi.re.max(p.re), hi.im.max(p.im));
    }
    (lo, hi)
}

#[derive(Clone, Debug)]
enum Prim {
    Circle(Circle),
    RealAxis,
    Arc(Arc),
    Poly(ChunkedPolyline),
}

impl Prim {
    fn nearest(&self, z: C64) -> (f64, C64) {
        match self {
            Prim::Circle(c) => {
                let rel = z - c.center;
                let m = rel.norm();
                let p = if m > 0.0 { c.center + rel * (c.radius / m) } else { c.center + c64(c.radius, 0.0) };
                ((m - c.radius).abs(), p)
            }
            Prim::RealAxis => (z.im.abs(), c64(z.re, 0.0)),
            Prim::Arc(a) => {
                let rel = z - a.circle.center;
                if rel.norm() > 0.0 && a.covers_angle(rel.arg()) {
                    let p = a.circle.center + rel * (a.circle.radius / rel.norm());
                    (a.circle.distance(z), p)
                } else {
                    let (p, q) = a.endpoints();
                    let (dp, dq) = ((z - p).norm(), (z - q).norm());
                    if dp <= dq {
                        (dp, p)
                    } else {
                        (dq, q)
                    }
                }
            }
            Prim::Poly(p) => p.nearest(z),
        }
    }

    fn distance(&self, z: C64) -> f64 {
        match self {
            Prim::Circle(c) => ((z - c.center).norm() - c.radius).abs(),
            Prim::RealAxis => z.im.abs(),
            _ => self.nearest(z).0,
        }
    }

    /// Bounding box, or `None` for unbounded primitives.
    fn bbox(&self) -> Option<(C64, C64)> {
        match self {
            Prim::Circle(c) => Some((c.center - c64(c.radius, c.radius), c.center + c64(c.radius, c.radius))),
            Prim::Arc(a) => {
                let c = a.circle;
                Some((c.center - c64(c.radius, c.radius), c.center + c64(c.radius, c.radius)))
            }
            Prim::Poly(p) => Some(p.bbox()),
            Prim::RealAxis => None,
        }
    }
}

/// Boundary of a domain or a target set, flattened into primitives with fast distance queries.
#[derive(Clone, Debug)]
pub struct Boundary {
    prims: Vec<Prim>,
}

impl Boundary {
    pub fn of_set(set: &CompactSet) -> Boundary {
        let mut prims = Vec::new();
        push_set(set, &mut prims);
        Boundary { prims }
    }

    pub fn of_domain(domain: &Domain) -> Boundary {
        let mut prims = Vec::new();
        push_domain(domain, &mut prims);
        Boundary { prims }
    }

    pub fn distance(&self, z: C64) -> f64 {
        self.prims.iter().map(|p| p.distance(z)).fold(f64::INFINITY, f64::min)
    }

    pub fn nearest(&self, z: C64) -> (f64, C64) {
        let mut best = (f64::INFINITY, z);
        for p in &self.prims {
            let (d, q) = p.nearest(z);
            if d < best.0 {
                best = (d, q);
            }
        }
        best
    }

    fn bbox(&self) -> Option<(C64, C64)> {
        let mut out: Option<(C64, C64)> = None;
        for p in &self.prims {
            let (lo, hi) = p.bbox()?;
            out = Some(match out {
                None => (lo, hi),
                Some((a, b)) => (c64(a.re.min(lo.re), a.im.min(lo.im)), c64(b.re.max(hi.re), b.im.max(hi.im))),
            });
        }
        out
    }
}

fn push_set(set: &CompactSet, out: &mut Vec<Prim>) {
    match set {
        CompactSet::Circle(c) | CompactSet::ClosedDisk(c) => out.push(Prim::Circle(*c)),
        CompactSet::Arc(a) => out.push(Prim::Arc(*a)),
        CompactSet::Segments(p) | CompactSet::Hull(p) => out.push(Prim::Poly(ChunkedPolyline::new(p.vertices().to_vec()))),
        CompactSet::Union(v) => v.iter().for_each(|s| push_set(s, out)),
    }
}

fn push_domain(domain: &Domain, out: &mut Vec<Prim>) {
    match domain {
        Domain::Disk { center, radius } | Domain::ExteriorDisk { center, radius } => out.push(Prim::Circle(Circle { center: *center, radius: *radius })),
        Domain::Annulus { inner, outer } => {
            out.push(Prim::Circle(Circle { center: c64(0.0, 0.0), radius: *inner }));
            out.push(Prim::Circle(Circle { center: c64(0.0, 0.0), radius: *outer }));
        }
        Domain::HalfPlane => out.push(Prim::RealAxis),
        Domain::HullComplement(k) => push_set(k, out),
        Domain::PolylineJordan(v) => {
            let mut closed = v.clone();
            closed.push(v[0]);
            out.push(Prim::Poly(ChunkedPolyline::new(closed)));
        }
        Domain::Intersection(list) => list.iter().for_each(|d| push_domain(d, out)),
    }
}

/// Outcome of a walk with intermediate targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exit {
    /// Boundary point where the walk stopped.
    pub point: C64,
    /// Walk position when it stopped, within `eps` of `point`.
    pub raw: C64,
    /// Bit `i` is set if target `i` was hit before exit.
    pub hits: u64,
    pub steps: u64,
}

/// Walk-on-spheres sampler for a domain, optionally recording hits of interior target sets.
#[derive(Clone, Debug)]
pub struct Walker {
    boundary: Boundary,
    targets: Vec<Boundary>,
    far: Option<Circle>,
    pub eps: f64,
    pub max_steps: u64,
}

impl Walker {
    /// Walker for `domain` with boundary tolerance `eps`.
    pub fn new(domain: &Domain, eps: f64) -> Result<Walker> {
        Walker::with_targets(domain, &[], eps)
    }

    /// Walker that also records hits of `targets` (sets inside the domain that do not stop the walk).
    pub fn with_targets(domain: &Domain, targets: &[CompactSet], eps: f64) -> Result<Walker> {
        if !(eps > 0.0) {
            return Err(Error::InvalidInput("walk tolerance eps must be positive".into()));
        }
        if targets.len() > 64 {
            return Err(Error::InvalidInput("at most 64 targets".into()));
        }
        let boundary = Boundary::of_domain(domain);
        let targets: Vec<Boundary> = targets.iter().map(Boundary::of_set).collect();
        let far = if domain.is_bounded() {
            None
        } else {
            let mut bb = boundary.bbox();
            for t in &targets {
                bb = match (bb, t.bbox()) {
                    (Some((a, b)), Some((lo, hi))) => Some((c64(a.re.min(lo.re), a.im.min(lo.im)), c64(b.re.max(hi.re), b.im.max(hi.im)))),
                    _ => None,
                };
            }
            bb.map(|(lo, hi)| {
                let center = (lo + hi) * 0.5;
                let radius = 2.0 * ((hi - lo) * 0.5).norm().max(eps);
                Circle { center, radius }
            })
        };
        Ok(Walker { boundary, targets, far, eps, max_steps: MAX_STEPS })
    }

    /// Default tolerance: `1e−6` of the boundary's extent (or of `scale` when unbounded).
    pub fn default_eps(domain: &Domain, scale: f64) -> f64 {
        match Boundary::of_domain(domain).bbox() {
            Some((lo, hi)) => 1e-6 * (hi - lo).norm().max(1e-300),
            None => 1e-6 * scale,
        }
    }

    pub fn distance_to_boundary(&self, z: C64) -> f64 {
        self.boundary.distance(z)
    }

    /// Samples the exit point of Brownian motion started at `z`.
    pub fn exit(&self, z: C64, rng: &mut StreamRng) -> Result<C64> {
        Ok(self.walk(z, rng)?.point)
    }

    /// Runs one walk from `z`, recording target hits.
    pub fn walk(&self, z: C64, rng: &mut StreamRng) -> Result<Exit> {
        self.walk_from(z, 0, false, rng)
    }

    /// Bit mask with one bit per target.
    pub fn all_targets(&self) -> u64 {
        if self.targets.is_empty() {
            0
        } else {
            u64::MAX >> (64 - self.targets.len())
        }
    }

    /// Runs one walk from `z` with the targets in `hits` already counted as hit. With
    /// `stop_when_all`, the walk stops as soon as every target has been hit and returns that
    /// position as both `point` and `raw`.
    pub fn walk_from(&self, z: C64, mut hits: u64, stop_when_all: bool, rng: &mut StreamRng) -> Result<Exit> {
        let mut x = z;
        let all = self.all_targets();
        for step in 0..self.max_steps {
            let (db, nearest) = self.boundary.nearest(x);
            if db <= self.eps {
                return Ok(Exit { point: nearest, raw: x, hits, steps: step });
            }
            let mut d = db;
            if hits != all {
                for (i, t) in self.targets.iter().enumerate() {
                    if hits & (1 << i) == 0 {
                        let dt = t.distance(x);
                        if dt <= self.eps {
                            hits |= 1 << i;
                        } else {
                            d = d.min(dt);
                        }
                    }
                }
                if stop_when_all && hits == all {
                    return Ok(Exit { point: x, raw: x, hits, steps: step });
                }
            }
            if let Some(far) = &self.far {
                let rel = x - far.center;
                if rel.norm() > far.radius {
                    x = far.center + exterior_hit(rel / far.radius, rng) * far.radius;
                    continue;
                }
            }
            x += rng.unit() * d;
        }
        Err(Error::StepLimitExceeded(self.max_steps))
    }
}

/// First hitting point of the unit circle for Brownian motion from `z` with `|z| > 1`.
fn exterior_hit(z: C64, rng: &mut StreamRng) -> C64 {
    // The hitting law from z equals the exit law of the disk from the reflected point 1/z̄,
    // which is the image of the uniform law under the automorphism sending 0 to 1/z̄.
    let a = 1.0 / z.conj();
    let u = rng.unit();
    (u + a) / (c64(1.0, 0.0) + a.conj() * u)
}

/// Runs `score` on `n` samples split into stream-indexed blocks and pools the results.
pub fn run_blocks<F>(n: u64, seed: u64, score: F) -> Result<Estimate>
where
    F: Fn(&mut StreamRng) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let nblocks = n.div_ceil(BLOCK);
    let sums: Vec<Result<(f64, f64)>> = (0..nblocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(seed, b).rng();
            let count = BLOCK.min(n - b * BLOCK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let v = score(&mut rng)?;
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect();
    let (mut s, mut s2) = (0.0, 0.0);
    for r in sums {
        let (a, b) = r?;
        s += a;
        s2 += b;
    }
    Ok(Estimate::from_sums(s, s2, n, seed))
}

/// Like [`run_blocks`] for `k` scores per sample drawn from the same walks.
pub fn run_blocks_multi<F>(n: u64, seed: u64, k: usize, score: F) -> Result<Vec<Estimate>>
where
    F: Fn(&mut StreamRng, &mut [f64]) -> Result<()> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let nblocks = n.div_ceil(BLOCK);
    let sums: Vec<Result<Vec<(f64, f64)>>> = (0..nblocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(seed, b).rng();
            let count = BLOCK.min(n - b * BLOCK);
            let mut acc = vec![(0.0, 0.0); k];
            let mut buf = vec![0.0; k];
            for _ in 0..count {
                buf.iter_mut().for_each(|x| *x = 0.0);
                score(&mut rng, &mut buf)?;
                for (a, v) in acc.iter_mut().zip(&buf) {
                    a.0 += v;
                    a.1 += v * v;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut tot = vec![(0.0, 0.0); k];
    for r in sums {
        for (t, a) in tot.iter_mut().zip(r?) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    Ok(tot.into_iter().map(|(s, s2)| Estimate::from_sums(s, s2, n, seed)).collect())
}

/// One walk-on-spheres exit sample from `z` in `domain`, drawn from `stream`.
pub fn wos_exit_sample(domain: &Domain, z: C64, eps: f64, stream: RngStream) -> Result<C64> {
    check_start(domain, z)?;
    Walker::new(domain, eps)?.exit(z, &mut stream.rng())
}

fn check_start(domain: &Domain, z: C64) -> Result<()> {
    if !domain.contains(z) {
        return Err(Error::DomainViolation(format!("start point {z} is not in the domain")));
    }
    Ok(())
}

/// Estimate of the harmonic measure `h_D(z, V)` for `V` a subset of `∂D`.
pub fn hitting_prob(domain: &Domain, z: C64, v: &CompactSet, n: u64, seed: u64) -> Result<Estimate> {
    check_start(domain, z)?;
    let eps = Walker::default_eps(domain, z.norm().max(1.0));
    let walker = Walker::new(domain, eps)?;
    let target = Boundary::of_set(v);
    run_blocks(n, seed, |rng| {
        let p = walker.exit(z, rng)?;
        Ok(if target.distance(p) <= 4.0 * eps { 1.0 } else { 0.0 })
    })
}

/// Per-level values of an excursion estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcursionLadder {
    pub eps: Vec<f64>,
    pub levels: Vec<Estimate>,
    pub extrapolated: Estimate,
}

/// Excursion measure `exc_D(z, V)`: finite differences `h_D(z + εn, V)/ε` on a halving ladder,
/// extrapolated by Richardson's rule. With three or more levels the difference of the last two
/// extrapolants is added to the error as the residual.
pub fn excursion_estimate(domain: &Domain, z: C64, normal: C64, v: &CompactSet, ladder: &[f64], n: u64, seed: u64) -> Result<ExcursionLadder> {
    if ladder.len() < 2 {
        return Err(Error::InvalidInput("the excursion ladder needs at least two levels".into()));
    }
    let nrm = normal / normal.norm();
    let mut levels = Vec::with_capacity(ladder.len());
    for (k, &e) in ladder.iter().enumerate() {
        let h = hitting_prob(domain, z + nrm * e, v, n, RngStream::new(seed, 0).child(k as u64).seed)?;
        levels.push(h.affine(1.0 / e, 0.0));
    }
    let mut out = richardson(ladder, &levels)?;
    out.n = levels.iter().map(|l| l.n).sum();
    out.seed = seed;
    Ok(ExcursionLadder { eps: ladder.to_vec(), levels, extrapolated: out })
}

/// Richardson extrapolation to `ε → 0` of per-level estimates with `O(ε)` bias. With three or
/// more levels the difference of the last two extrapolants is added to the error as the residual,
/// and sign-alternating significant differences are rejected.
pub fn richardson(ladder: &[f64], levels: &[Estimate]) -> Result<Estimate> {
    if ladder.len() < 2 || ladder.len() != levels.len() {
        return Err(Error::InvalidInput("the ladder needs at least two levels, one estimate each".into()));
    }
    let rich = |i: usize| {
        let ratio = ladder[i] / ladder[i + 1];
        levels[i + 1].affine(ratio / (ratio - 1.0), 0.0).sub(&levels[i].affine(1.0 / (ratio - 1.0), 0.0))
    };
    let last = ladder.len() - 2;
    let mut out = rich(last);
    if ladder.len() >= 3 {
        let prev = rich(last - 1);
        let residual = (out.value - prev.value).abs();
        out.stderr = out.stderr.hypot(residual);
        let d1 = levels[last - 1].sub(&levels[last]);
        let d2 = levels[last].sub(&levels[last + 1]);
        if d1.value * d2.value < 0.0 && d1.value.abs() > 3.0 * d1.stderr && d2.value.abs() > 3.0 * d2.stderr {
            return Err(Error::ExtrapolationUnstable(format!("ladder differences {:.3e} and {:.3e} change sign", d1.value, d2.value)));
        }
    }
    Ok(out)
}

/// Conformal-map derivative `ψ′(0) = exp(−E⁰[log |B_τ|])` of the uniformizer onto the unit disk.
pub fn conformal_radius(domain: &Domain, n: u64, seed: u64) -> Result<Estimate> {
    let z = c64(0.0, 0.0);
    check_start(domain, z)?;
    if !domain.is_bounded() {
        return Err(Error::DomainViolation("conformal radius needs a bounded domain".into()));
    }
    let walker = Walker::new(domain, Walker::default_eps(domain, 1.0))?;
    let m = run_blocks(n, seed, |rng| Ok(walker.exit(z, rng)?.norm().ln()))?;
    let v = (-m.value).exp();
    Ok(Estimate { value: v, stderr: v * m.stderr, n: m.n, seed, variance: v * v * m.variance })
}

/// A point of the filled hull of `k`, used as the origin for `log |B_σ − c|`.
pub fn hull_anchor(k: &CompactSet) -> C64 {
    match k {
        CompactSet::Circle(c) | CompactSet::ClosedDisk(c) => c.center,
        CompactSet::Arc(a) => a.endpoints().0,
        CompactSet::Segments(p) | CompactSet::Hull(p) => p.vertices()[0],
        CompactSet::Union(v) => hull_anchor(&v[0]),
    }
}

/// Logarithmic capacity `ccap K = E[log |B_σ − c|]` for Brownian motion started uniformly on the
/// circle of radius `launch` about the anchor `c` of `K` and run until it hits `K`.
pub fn capacity_estimate(k: &CompactSet, n: u64, seed: u64, launch: f64) -> Result<Estimate> {
    let c = hull_anchor(k);
    let rad = k.radius_about(c);
    if !(launch > rad) {
        return Err(Error::InvalidInput(format!("launch radius {launch} must exceed the hull radius {rad}")));
    }
    let domain = Domain::HullComplement(k.clone());
    let walker = Walker::new(&domain, 1e-6 * rad.max(1e-300))?;
    run_blocks(n, seed, |rng| {
        let start = c + rng.unit() * launch;
        // Near the anchor the unprojected stopping point avoids snapping onto it.
        let e = walker.walk(start, rng)?;
        let d = (e.point - c).norm();
        Ok(if d > 10.0 * walker.eps { d.ln() } else { (e.raw - c).norm().ln() })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_distance_matches_direct_scan() {
        let verts: Vec<C64> = (0..200).map(|k| C64::from_polar(1.0 + 0.3 * (k as f64 * 0.37).sin(), k as f64 * 0.05)).collect();
        let poly = ChunkedPolyline::new(verts.clone());
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..500 {
            let z = c64(4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0);
            let direct = verts.windows(2).map(|w| crate::geometry::segment_distance(z, w[0], w[1])).fold(f64::INFINITY, f64::min);
            assert!((poly.nearest(z).0 - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn exterior_hit_matches_poisson_kernel_mean() {
        // E[w] under the exterior Poisson kernel from z is 1/z̄.
        let z = c64(1.5, 2.0);
        let mut rng = RngStream::new(9, 0).rng();
        let n = 200_000;
        let mut acc = c64(0.0, 0.0);
        for _ in 0..n {
            let w = exterior_hit(z, &mut rng);
            assert!((w.norm() - 1.0).abs() < 1e-12);
            acc += w;
        }
        let mean = acc / n as f64;
        assert!((mean - 1.0 / z.conj()).norm() < 0.01);
    }

    #[test]
    fn blocks_are_thread_count_independent() {
        let a = run_blocks(1000, 3, |r| Ok(r.uniform())).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| run_blocks(1000, 3, |r| Ok(r.uniform()))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn whole_boundary_is_hit_with_probability_one() {
        let d = Domain::annulus(1.0, 10.0).unwrap();
        let v = d.boundary_set().unwrap();
        let h = hitting_prob(&d, c64(2.0, 0.0), &v, 2000, 1).unwrap();
        assert_eq!(h.value, 1.0);
        assert_eq!(h.stderr, 0.0);
    }

    #[test]
    fn start_outside_domain_is_rejected() {
        let d = Domain::unit_disk();
        assert!(matches!(wos_exit_sample(&d, c64(2.0, 0.0), 1e-6, RngStream::new(1, 0)), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn step_limit_is_reported() {
        let d = Domain::unit_disk();
        let mut w = Walker::new(&d, 1e-300).unwrap();
        w.max_steps = 3;
        assert!(matches!(w.exit(c64(0.5, 0.0), &mut RngStream::new(1, 0).rng()), Err(Error::StepLimitExceeded(3))));
    }
}
