//! Brownian loop-measure masses `Λ(V₁, …, V_k; D)`.
//!
//! Two engines compute the same quantity along independent routes:
//!
//! * [`Engine::Determinant`]: for circle configurations, `Λ(V₁, V₂; D) = −log det(I − A B)` where
//!   `A` and `B` are the hitting operators between the two sets (Brownian motion from `V₁` stopped
//!   on `V₂` and back, killed on `∂D`). The operators are discretized in Fourier modes on each
//!   circle and the Dirichlet problems are solved by [`CircleSolver`]. More sets follow from
//!   `Λ(V₁, …, V_k; D) = Λ(V₁, …, V_{k−1}; D) − Λ(V₁, …, V_{k−1}; D ∖ V_k)`.
//! * [`Engine::Bubble`]: radial decomposition by the loop point closest to (or furthest from) a
//!   center, `Λ = ∫ b(u) du` in `u = ±log(radius)`, where `b` is the root-integrated bubble mass
//!   of the rescaled configuration ([`separated_bubble`]), with a finite-difference fallback on
//!   radii where a set straddles the root circle.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bubble::{rho, separated_bubble, RHO_BAND_CONSTANT};
use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::geometry::{c64, Circle, CompactSet, Domain, MobiusMap, C64};
use crate::harmonic::{domain_circles, fourier_coefficients, fourier_mode, CircleRegion, CircleSolver};
use crate::kernels::{poisson_disk_at, poisson_exterior_at};
use crate::mc::{run_blocks, Walker};
use crate::quad::{gauss_legendre_on, integrate};
use crate::rng::RngStream;

/// `Λ(C_1, C_R; 𝒪_s)` with its leading-order prediction and band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CirclesLoopMass {
    pub estimate: Estimate,
    /// `log[log(R/s)/log R]`.
    pub prediction: f64,
    /// Bound on `|estimate − prediction|` from the bubble band of [`rho`].
    pub band: f64,
}

/// `Λ(C_1, C_R; 𝒪_s) = 2 ∫_s^1 ρ(R/r) dr/r` by adaptive quadrature in `log r`.
pub fn loop_mass_circles(s: f64, big_r: f64) -> Result<CirclesLoopMass> {
    if !(s > 0.0 && s <= 1.0 && big_r > 1.0) {
        return Err(Error::DomainViolation(format!("need 0 < s ≤ 1 < R, got s={s}, R={big_r}")));
    }
    let prediction = ((big_r / s).ln() / big_r.ln()).ln();
    let band = 2.0 * RHO_BAND_CONSTANT * (1.0 - s) / (big_r * big_r.ln());
    if s == 1.0 {
        return Ok(CirclesLoopMass { estimate: Estimate::exact(0.0, 0.0), prediction, band });
    }
    let mut failure = None;
    let q = integrate(
        |u| match rho(big_r * (-u).exp()) {
            Ok(m) => 2.0 * m.value,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        },
        s.ln(),
        0.0,
        1e-11,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let q = q?;
    Ok(CirclesLoopMass { estimate: Estimate::exact(q.value, q.error), prediction, band })
}

/// Exact `Λ(C_{r₁}, C_{r₂}; 𝒪_s)` for concentric circles about the origin with `s < r₁ < r₂`.
pub fn concentric_loop_mass(s: f64, r1: f64, r2: f64) -> Result<f64> {
    if !(s > 0.0 && s < r1 && r1 < r2) {
        return Err(Error::DomainViolation(format!("need 0 < s < r₁ < r₂, got {s}, {r1}, {r2}")));
    }
    let big_r = r2 / r1;
    let rho = s / r1;
    let mut v = ((big_r / rho).ln() / big_r.ln()).ln();
    for n in 1..100_000 {
        let a = (rho / big_r).powi(2 * n);
        let b = big_r.powi(-2 * n);
        let t = 2.0 * ((-a).ln_1p() - (-b).ln_1p());
        v += t;
        if t.abs() < 1e-18 {
            break;
        }
    }
    Ok(v)
}

/// The circles of a circle-type set (circle, closed disk, or unions of those).
pub fn set_circles(v: &CompactSet) -> Result<Vec<Circle>> {
    match v {
        CompactSet::Circle(c) | CompactSet::ClosedDisk(c) => Ok(vec![*c]),
        CompactSet::Union(list) => {
            let mut out = Vec::new();
            for s in list {
                out.extend(set_circles(s)?);
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported("the determinant engine needs circle-type sets".into())),
    }
}

/// Geometric decay rate of Fourier modes on `t` induced by the circle `o`.
fn mode_ratio(t: &Circle, o: &Circle) -> f64 {
    let d = (o.center - t.center).norm();
    if o.encloses_circle(t) {
        (d + t.radius) / o.radius
    } else if t.encloses_circle(o) {
        (d + o.radius) / t.radius
    } else {
        t.radius / (d - o.radius)
    }
}

/// Number of Fourier modes needed on `t` given the other circles.
fn mode_count(t: &Circle, others: &[Circle], tol: f64) -> usize {
    let q = others.iter().filter(|o| *o != t).map(|o| mode_ratio(t, o)).fold(0.0, f64::max);
    if q <= 0.0 {
        return 4;
    }
    ((tol.ln() / q.min(0.995).ln()).ceil() as usize).clamp(4, 128)
}

/// Hitting operator in Fourier coordinates: column `(k, j)` holds the Fourier coefficients on the
/// `eval` circles of the harmonic function equal to mode `j` on `source[k]` and zero on the rest of
/// the boundary of the component of `ℂ ∖ (dom ∪ source)` around each evaluation circle.
fn hitting_operator(eval: &[Circle], emodes: &[usize], source: &[Circle], smodes: &[usize], dom: &[Circle], tol: f64) -> Result<DMatrix<f64>> {
    let rows: usize = emodes.iter().map(|k| 2 * k + 1).sum();
    let cols: usize = smodes.iter().map(|k| 2 * k + 1).sum();
    let mut h = DMatrix::zeros(rows, cols);
    let mut all: Vec<Circle> = dom.to_vec();
    all.extend_from_slice(source);
    let mut row0 = 0;
    for (ci, c) in eval.iter().enumerate() {
        let region = CircleRegion::component(&all, c.point_at(0.0))?;
        let bnd = region.boundary();
        if !bnd.iter().all(|b| c.disjoint(b)) {
            return Err(Error::InvalidInput("sets and boundary circles must be disjoint".into()));
        }
        let data_modes = source.iter().zip(smodes).filter(|(s, _)| bnd.contains(s)).map(|(_, m)| *m).max().unwrap_or(0);
        let solver = CircleSolver::with_data_modes(region, tol, data_modes)?;
        // Map each source mode to a data column.
        let mut jobs = Vec::new();
        let mut col0 = 0;
        for (k, s) in source.iter().enumerate() {
            let n = 2 * smodes[k] + 1;
            if let Some(bi) = bnd.iter().position(|b| b == s) {
                for j in 0..n {
                    jobs.push((bi, j, col0 + j));
                }
            }
            col0 += n;
        }
        if !jobs.is_empty() {
            let fits = solver.solve_many(jobs.len(), |m, k, t| if jobs[m].0 == k { fourier_mode(jobs[m].1, t) } else { 0.0 })?;
            let q = 4 * emodes[ci] + 8;
            let pts: Vec<C64> = (0..q).map(|i| c.point_at(std::f64::consts::TAU * (i as f64 + 0.5) / q as f64)).collect();
            for (fit, job) in fits.iter().zip(&jobs) {
                let samples: Vec<f64> = pts.iter().map(|&z| fit.value(z)).collect();
                let coef = fourier_coefficients(&samples, emodes[ci]);
                for (r, v) in coef.iter().enumerate() {
                    h[(row0 + r, job.2)] = *v;
                }
            }
        }
        row0 += 2 * emodes[ci] + 1;
    }
    Ok(h)
}

/// Default accuracy target of the deterministic engine.
pub const DET_TOL: f64 = 1e-13;

/// `Λ(V₁, V₂; D)` for circle-type sets in the domain bounded by `dom` (the component containing
/// the sets), by the hitting-operator determinant.
pub fn det_loop_mass2(v1: &[Circle], v2: &[Circle], dom: &[Circle]) -> Result<f64> {
    let mut everything: Vec<Circle> = dom.to_vec();
    everything.extend_from_slice(v1);
    everything.extend_from_slice(v2);
    let m1: Vec<usize> = v1.iter().map(|c| mode_count(c, &everything, DET_TOL)).collect();
    let m2: Vec<usize> = v2.iter().map(|c| mode_count(c, &everything, DET_TOL)).collect();
    let a = hitting_operator(v1, &m1, v2, &m2, dom, DET_TOL)?;
    let b = hitting_operator(v2, &m2, v1, &m1, dom, DET_TOL)?;
    let n = a.nrows();
    let m = DMatrix::<f64>::identity(n, n) - &a * &b;
    let det = m.lu().determinant();
    if !(det > 0.0 && det <= 1.0 + 1e-9) {
        return Err(Error::SolverUnstable(format!("hitting-operator determinant {det} outside (0, 1]")));
    }
    Ok(-det.ln().min(0.0))
}

/// `Λ(V₁, …, V_k; D)` for `k ≥ 2` circle-type sets by the deterministic engine.
pub fn det_loop_mass(sets: &[Vec<Circle>], dom: &[Circle]) -> Result<f64> {
    match sets.len() {
        0 | 1 => Err(Error::InvalidInput("the loop mass needs at least two sets".into())),
        2 => det_loop_mass2(&sets[0], &sets[1], dom),
        k => {
            let head = &sets[..k - 1];
            let mut cut: Vec<Circle> = dom.to_vec();
            cut.extend_from_slice(&sets[k - 1]);
            Ok(det_loop_mass(head, dom)? - det_loop_mass(head, &cut)?)
        }
    }
}

/// Root convention of the radial decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Root {
    /// Loops rooted at their point closest to the center.
    Closest(C64),
    /// Loops rooted at their point furthest from the center.
    Furthest(C64),
}

/// Engine used by [`loop_mass`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Engine {
    Determinant,
    Bubble { root: Root, radial_nodes: usize, samples: u64 },
}

/// A loop-mass query `Λ(V₁, …, V_k; D)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopMassQuery {
    pub sets: Vec<CompactSet>,
    pub domain: Domain,
    pub engine: Engine,
}

fn check_sets_in_domain(sets: &[CompactSet], domain: &Domain) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::InvalidInput("at least one set is required".into()));
    }
    for s in sets {
        let probe = match s.as_circle() {
            Some((c, _)) => c.point_at(0.3),
            None => match s {
                CompactSet::Segments(p) | CompactSet::Hull(p) => p.vertices()[0],
                CompactSet::Arc(a) => a.endpoints().0,
                _ => continue,
            },
        };
        if !domain.contains(probe) {
            return Err(Error::DomainViolation("every set must meet the domain".into()));
        }
    }
    Ok(())
}

/// Computes a loop mass with the query's engine. Deterministic engines report the numerical error
/// in `stderr`.
pub fn loop_mass(q: &LoopMassQuery, seed: u64) -> Result<Estimate> {
    check_sets_in_domain(&q.sets, &q.domain)?;
    if q.sets.len() == 1 {
        return Err(Error::InvalidInput("a single set carries infinite loop mass; give at least two".into()));
    }
    match q.engine {
        Engine::Determinant => {
            let sets = q.sets.iter().map(set_circles).collect::<Result<Vec<_>>>()?;
            let dom = domain_circles(&q.domain)?;
            let v = det_loop_mass(&sets, &dom)?;
            Ok(Estimate::exact(v, 1e-9 * (1.0 + v.abs())))
        }
        Engine::Bubble { root, radial_nodes, samples } => bubble_loop_mass(&q.sets, &q.domain, root, radial_nodes, samples, seed),
    }
}

/// Pieces of the domain boundary as compact sets.
fn boundary_pieces(d: &Domain) -> Result<Vec<CompactSet>> {
    fn flatten(s: CompactSet, out: &mut Vec<CompactSet>) {
        match s {
            CompactSet::Union(v) => v.into_iter().for_each(|x| flatten(x, out)),
            x => out.push(x),
        }
    }
    let mut out = Vec::new();
    match d {
        Domain::Intersection(list) => {
            for x in list {
                out.extend(boundary_pieces(x)?);
            }
        }
        Domain::HalfPlane => return Err(Error::Unsupported("half-plane boundaries in the bubble engine".into())),
        other => flatten(other.boundary_set()?, &mut out),
    }
    Ok(out)
}

fn dist_to(k: &CompactSet, c: C64) -> f64 {
    k.distance(c)
}

/// How a set relates to the root circle of radius `σ` about `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Relation {
    /// Entirely on the far side (outside the root disk for closest roots).
    Far,
    /// Entirely on the near side.
    Near,
    /// Filled set that covers the root circle.
    Covers,
    /// Crosses the root circle.
    Straddles,
}

fn relation(k: &CompactSet, c: C64, sigma: f64, closest: bool) -> Relation {
    let (lo, hi) = (dist_to(k, c), k.radius_about(c));
    let (far, near) = if closest { (lo > sigma, hi < sigma) } else { (hi < sigma, lo > sigma) };
    if far {
        Relation::Far
    } else if near {
        Relation::Near
    } else if let Some((circ, true)) = k.as_circle() {
        // A closed disk covers the whole root circle if it contains the circle's disk (closest)
        // or the circle itself (either convention).
        let contains_circle = (circ.center - c).norm() + sigma <= circ.radius;
        if contains_circle {
            Relation::Covers
        } else {
            Relation::Straddles
        }
    } else {
        Relation::Straddles
    }
}

/// Root-integrated bubble mass `b` at radius `σ` (see [`loop_mass`]).
fn radial_integrand(sets: &[CompactSet], pieces: &[CompactSet], c: C64, sigma: f64, closest: bool, n: u64, seed: u64) -> Result<Estimate> {
    let to_unit = if closest {
        MobiusMap::new(c64(0.0, 0.0), c64(sigma, 0.0), c64(1.0, 0.0), -c)?
    } else {
        MobiusMap::new(c64(1.0 / sigma, 0.0), -c / sigma, c64(0.0, 0.0), c64(1.0, 0.0))?
    };
    let mut targets = Vec::new();
    let mut straddle = false;
    for s in sets {
        match relation(s, c, sigma, closest) {
            Relation::Far => targets.push(s.mobius_image(&to_unit)?),
            Relation::Near => return Ok(Estimate::exact(0.0, 0.0)),
            Relation::Covers => {}
            Relation::Straddles => straddle = true,
        }
    }
    let mut killing = Vec::new();
    for p in pieces {
        match relation(p, c, sigma, closest) {
            Relation::Far => killing.push(p.mobius_image(&to_unit)?),
            Relation::Near => {}
            Relation::Covers => return Ok(Estimate::exact(0.0, 0.0)),
            Relation::Straddles => return Err(Error::Unsupported("domain boundary crosses a root circle of the radial decomposition".into())),
        }
    }
    if targets.is_empty() && !straddle {
        return Err(Error::Unsupported("every set covers the root circle; the radial integrand diverges".into()));
    }
    if !straddle {
        return Ok(separated_bubble(&targets, &killing, n, seed)?.estimate);
    }
    if !killing.is_empty() {
        return Err(Error::Unsupported("a set straddles the root circle inside a domain with further boundary".into()));
    }
    let hit: Vec<CompactSet> = sets.iter().filter(|s| relation(s, c, sigma, closest) != Relation::Covers).cloned().collect();
    fd_bubble(&hit, c, sigma, closest, n, seed)
}

/// Finite-difference root-integrated bubble mass for the domain `𝒪_σ(c)` (closest) or `𝔻_σ(c)`
/// (furthest): `b = 2πσ² E_θ[h(B, z_θ)/ε]` over walks from `z_θ ± ε e^{iθ}` that hit every set,
/// with `B` the point where the last set is hit; Richardson-extrapolated in `ε`.
fn fd_bubble(sets: &[CompactSet], c: C64, sigma: f64, closest: bool, n: u64, seed: u64) -> Result<Estimate> {
    let domain = if closest { Domain::ExteriorDisk { center: c, radius: sigma } } else { Domain::Disk { center: c, radius: sigma } };
    let ladder = [sigma / 32.0, sigma / 64.0, sigma / 128.0];
    let walker = Walker::with_targets(&domain, sets, 1e-6 * sigma)?;
    let sign = if closest { 1.0 } else { -1.0 };
    let mut levels = Vec::new();
    for (k, &e) in ladder.iter().enumerate() {
        let est = run_blocks(n, RngStream::new(seed, 0).child(k as u64).seed, |rng| {
            let th = rng.angle();
            let dir = C64::from_polar(1.0, th);
            let z = c + dir * sigma;
            let ex = walker.walk_from(z + dir * (sign * e), 0, true, rng)?;
            if ex.hits != walker.all_targets() {
                return Ok(0.0);
            }
            let b = ex.point;
            let h = if closest { poisson_exterior_at(c, sigma, b, z)?.value } else { poisson_disk_at(c, sigma, b, z)?.value };
            Ok(std::f64::consts::TAU * sigma * sigma * h / e)
        })?;
        levels.push(est);
    }
    let mut out = crate::mc::richardson(&ladder, &levels)?;
    out.n = levels.iter().map(|l| l.n).sum();
    Ok(out)
}

/// Radial range of the decomposition and the breakpoints where a set changes its relation to
/// the root circle.
fn radial_range(sets: &[CompactSet], pieces: &[CompactSet], c: C64, closest: bool) -> Result<(f64, f64, Vec<f64>)> {
    let mut breaks = Vec::new();
    for s in sets.iter().chain(pieces) {
        breaks.push(dist_to(s, c));
        breaks.push(s.radius_about(c));
        if let Some((circ, true)) = s.as_circle() {
            let r = circ.radius - (circ.center - c).norm();
            if r > 0.0 {
                breaks.push(r);
            }
        }
    }
    let (lo, hi) = if closest {
        // With the center outside the domain, every loop stays at least `dist(c, ∂D)` away.
        let lo = pieces.iter().map(|p| dist_to(p, c)).fold(f64::INFINITY, f64::min);
        let hi = sets.iter().map(|s| s.radius_about(c)).fold(f64::INFINITY, f64::min);
        (lo, hi)
    } else {
        let lo = sets.iter().map(|s| dist_to(s, c)).fold(0.0, f64::max);
        let hi = pieces.iter().map(|p| p.radius_about(c)).fold(0.0, f64::max);
        (lo, hi)
    };
    if closest && !(lo > 0.0) {
        return Err(Error::InvalidInput("closest-point decomposition needs the center outside the domain".into()));
    }
    if !closest && !hi.is_finite() {
        return Err(Error::InvalidInput("furthest-point decomposition needs a bounded domain".into()));
    }
    let mut b: Vec<f64> = breaks.into_iter().filter(|x| *x > lo && *x < hi).collect();
    b.sort_by(|a, b| a.partial_cmp(b).unwrap());
    b.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    Ok((lo, hi, b))
}

fn bubble_loop_mass(sets: &[CompactSet], domain: &Domain, root: Root, nodes: usize, n: u64, seed: u64) -> Result<Estimate> {
    let pieces = boundary_pieces(domain)?;
    let (c, closest) = match root {
        Root::Closest(c) => (c, true),
        Root::Furthest(c) => (c, false),
    };
    if domain.contains(c) == closest {
        return Err(Error::InvalidInput(if closest { "closest-point center must lie outside the domain" } else { "furthest-point center must lie in the domain" }.into()));
    }
    let (lo, hi, breaks) = radial_range(sets, &pieces, c, closest)?;
    if !(hi > lo) {
        return Ok(Estimate::exact(0.0, 0.0));
    }
    let mut edges = vec![lo];
    edges.extend(breaks);
    edges.push(hi);
    let mut total = Estimate::exact(0.0, 0.0);
    let mut var = 0.0;
    let mut count = 0u64;
    let mut node = 0u64;
    for w in edges.windows(2) {
        let (a, b) = (w[0].ln(), w[1].ln());
        if !(b > a) {
            continue;
        }
        let per = ((nodes as f64) * (b - a) / (hi.ln() - lo.ln())).ceil().max(4.0) as usize;
        for (u, wt) in gauss_legendre_on(per, a, b) {
            let sigma = u.exp();
            let e = radial_integrand(sets, &pieces, c, sigma, closest, n, RngStream::new(seed, 1).child(node).seed)?;
            node += 1;
            total.value += wt * e.value;
            var += (wt * e.stderr).powi(2);
            count += e.n;
        }
    }
    total.stderr = var.sqrt();
    total.n = count;
    total.seed = seed;
    Ok(total)
}

/// Residual `Λ(V; D) − [Λ(V, E; D) + Λ(V; D ∖ E)]` of the cascade identity for `V = (V₁, …, V_k)`
/// and the extra set `E`.
pub fn cascade_check(sets: &[CompactSet], extra: &CompactSet, domain: &Domain, engine: Engine, seed: u64) -> Result<Estimate> {
    let cut = Domain::Intersection(vec![domain.clone(), Domain::HullComplement(extra.clone())]);
    let mut with = sets.to_vec();
    with.push(extra.clone());
    let q = |sets: Vec<CompactSet>, d: Domain, s: u64| loop_mass(&LoopMassQuery { sets, domain: d, engine }, s);
    let base = q(sets.to_vec(), domain.clone(), seed)?;
    let a = q(with, domain.clone(), RngStream::new(seed, 0).child(1).seed)?;
    let b = q(sets.to_vec(), cut, RngStream::new(seed, 0).child(2).seed)?;
    Ok(base.sub(&a.add(&b)))
}

/// Residual `Λ(V₁ ∪ V₂, W; D) + Λ(V₁, V₂, W; D) − Λ(V₁, W; D) − Λ(V₂, W; D)` of the
/// inclusion–exclusion identity.
pub fn inclusion_exclusion_check(v1: &CompactSet, v2: &CompactSet, w: &CompactSet, domain: &Domain, engine: Engine, seed: u64) -> Result<Estimate> {
    let q = |sets: Vec<CompactSet>, k: u64| loop_mass(&LoopMassQuery { sets, domain: domain.clone(), engine }, RngStream::new(seed, 0).child(k).seed);
    let union = CompactSet::Union(vec![v1.clone(), v2.clone()]);
    let a = q(vec![union, w.clone()], 1)?;
    let b = q(vec![v1.clone(), v2.clone(), w.clone()], 2)?;
    let c = q(vec![v1.clone(), w.clone()], 3)?;
    let d = q(vec![v2.clone(), w.clone()], 4)?;
    Ok(a.add(&b).sub(&c.add(&d)))
}

/// One shell term of the dyadic decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellTerm {
    pub j: i32,
    pub mass: Estimate,
}

/// Sum of the shell terms `Λ(V₁, V₂, V^{j+1}; D ∩ 𝒪_{e^j})` over `j ∈ [j_lo, j_hi]`, with
/// `V^{j+1}` the closed annulus `e^j ≤ |z| ≤ e^{j+1}`. Inside `D ∩ 𝒪_{e^j}` hitting it is hitting
/// the closed disk `|z| ≤ e^{j+1}`. Fails with `ShellRangeInsufficient` if either end shell
/// carries more than `tol`.
pub fn dyadic_loop_mass(v1: &CompactSet, v2: &CompactSet, domain: &Domain, j_lo: i32, j_hi: i32, engine: Engine, tol: f64, seed: u64) -> Result<(Estimate, Vec<ShellTerm>)> {
    if j_hi < j_lo {
        return Err(Error::InvalidInput("empty shell range".into()));
    }
    let mut terms = Vec::new();
    let mut total = Estimate::exact(0.0, 0.0);
    for j in j_lo..=j_hi {
        let m = shell_term(v1, v2, domain, j, engine, seed)?;
        total = total.add(&m);
        terms.push(ShellTerm { j, mass: m });
    }
    // The neighbouring shells bound what the truncated range leaves out.
    let below = shell_term(v1, v2, domain, j_lo - 1, engine, seed)?.value.abs();
    let above = shell_term(v1, v2, domain, j_hi + 1, engine, seed)?.value.abs();
    if below.max(above) > tol {
        return Err(Error::ShellRangeInsufficient(below.max(above)));
    }
    Ok((total, terms))
}

/// `Λ(V₁, V₂, V^{j+1}; D ∩ 𝒪_{e^j})`.
fn shell_term(v1: &CompactSet, v2: &CompactSet, domain: &Domain, j: i32, engine: Engine, seed: u64) -> Result<Estimate> {
    let origin = c64(0.0, 0.0);
    let engine = match engine {
        Engine::Bubble { radial_nodes, samples, .. } => Engine::Bubble { root: Root::Closest(origin), radial_nodes, samples },
        e => e,
    };
    let (inner, outer) = ((j as f64).exp(), ((j + 1) as f64).exp());
    let dj = Domain::Intersection(vec![domain.clone(), Domain::ExteriorDisk { center: origin, radius: inner }]);
    let seed = RngStream::new(seed, 0).child(j as u64).seed;
    let pair = [v1, v2];
    if pair.iter().any(|v| v.radius_about(origin) <= inner) {
        // A set inside the removed disk is never hit.
        return Ok(Estimate::exact(0.0, 0.0));
    }
    if pair.iter().any(|v| v.distance(origin) <= inner) {
        return Err(Error::Unsupported(format!("a set crosses the shell radius e^{j}")));
    }
    if pair.iter().any(|v| v.radius_about(origin) <= outer) {
        // Hitting a set inside the shell disk already hits the disk.
        return loop_mass(&LoopMassQuery { sets: vec![v1.clone(), v2.clone()], domain: dj, engine }, seed);
    }
    if pair.iter().any(|v| v.distance(origin) <= outer) {
        return Err(Error::Unsupported(format!("a set crosses the shell radius e^{}", j + 1)));
    }
    let shell = CompactSet::ClosedDisk(Circle::new(origin, outer)?);
    match loop_mass(&LoopMassQuery { sets: vec![v1.clone(), v2.clone(), shell], domain: dj, engine }, seed) {
        Ok(m) => Ok(m),
        // The shell disk lies outside the domain: no loop reaches it.
        Err(Error::DomainViolation(_)) => Ok(Estimate::exact(0.0, 0.0)),
        Err(e) => Err(e),
    }
}
