//! Brownian bubble-difference masses `m(z; D, D̃)`.
//!
//! Three independent routes are provided: quadrature of exact kernels ([`rho`]), a
//! finite-difference Monte Carlo estimator of the defining limit ([`bubble_diff_mass`]), and a
//! separating-circle estimator ([`separated_bubble`]) that integrates bubble masses over all
//! roots on the unit circle without finite differences.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::geometry::{c64, CompactSet, Domain, C64};
use crate::kernels::{boundary_poisson_annulus, poisson_disk_at, poisson_exterior_at, poisson_half_plane};
use crate::mc::{hull_anchor, richardson, run_blocks, run_blocks_multi, Walker};
use crate::quad::periodic_trapezoid;
use crate::rng::RngStream;

/// A bubble mass with its numerical error, the leading-order value and the asymptotic band
/// `|value − leading| ≤ band`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleMass {
    pub value: f64,
    pub error: f64,
    pub leading: f64,
    pub band: f64,
}

/// Constant `C` in `|ρ(R) − 1/(2 log R)| ≤ C/(R log R)` for `R ≥ 2`; the supremum of the left side
/// times `R log R` is attained at `R = 2` (about 1.50).
pub const RHO_BAND_CONSTANT: f64 = 1.6;

/// `ρ(R) = m(1; 𝒪, A_R)` by quadrature of `π ∮_{C_R} h_{∂A_R}(1, z) h_𝒪(z, 1) |dz|` with the
/// exact annulus kernel.
pub fn rho(big_r: f64) -> Result<BubbleMass> {
    if !(big_r > 1.0) || !big_r.is_finite() {
        return Err(Error::DomainViolation(format!("ρ(R) needs R > 1, got {big_r}")));
    }
    let one = c64(1.0, 0.0);
    let integrand = |phi: f64| {
        let h = boundary_poisson_annulus(big_r, phi).map(|k| k.value).unwrap_or(f64::NAN);
        let z = C64::from_polar(big_r, phi);
        let e = (z.norm_sqr() - 1.0) / (TAU * (z - one).norm_sqr());
        PI * h * e * big_r
    };
    let mut n = 64;
    let mut prev = periodic_trapezoid(integrand, n);
    loop {
        n *= 2;
        let cur = periodic_trapezoid(integrand, n);
        let err = (cur - prev).abs();
        if !cur.is_finite() {
            return Err(Error::QuadratureNonconvergent("ρ(R) integrand is not finite".into()));
        }
        if err <= 1e-14 * cur.abs() || n >= 1 << 22 {
            let l = big_r.ln();
            let band = if big_r >= 2.0 { RHO_BAND_CONSTANT / (big_r * l) } else { f64::INFINITY };
            return Ok(BubbleMass { value: cur, error: err, leading: 1.0 / (2.0 * l), band });
        }
        prev = cur;
    }
}

/// Poisson kernel `h_D(W, z)` for the canonical domains, if `D` is one.
fn canonical_poisson(d: &Domain, w: C64, z: C64) -> Option<f64> {
    match d {
        Domain::Disk { center, radius } => poisson_disk_at(*center, *radius, w, z).ok().map(|k| k.value),
        Domain::ExteriorDisk { center, radius } => poisson_exterior_at(*center, *radius, w, z).ok().map(|k| k.value),
        Domain::HalfPlane => poisson_half_plane(w, z.re).ok().map(|k| k.value),
        _ => None,
    }
}

/// Settings of [`bubble_diff_mass`].
#[derive(Clone, Debug, PartialEq)]
pub struct BubbleOptions {
    /// Finite-difference offsets, decreasing.
    pub ladder: Vec<f64>,
    /// Inner walks per outer sample for the small-arc density when `D` has no explicit kernel.
    pub arc_walks: u64,
    /// Length scale of the small arc: half-length `η = arc_scale · (n · arc_walks)^{−1/4}`.
    pub arc_scale: f64,
}

impl BubbleOptions {
    /// Ladder `scale · {1/16, 1/32, 1/64}` and 256 inner walks.
    pub fn with_scale(scale: f64) -> Self {
        BubbleOptions { ladder: vec![scale / 16.0, scale / 32.0, scale / 64.0], arc_walks: 256, arc_scale: scale }
    }
}

/// Monte Carlo estimate of `m(z; D, D̃)` for `z ∈ ∂D ∩ ∂D̃` with inward unit normal `normal`.
///
/// At each offset `ε` a walk from `z + εn` in `D̃` that leaves through `∂D̃ ∩ D` at `W` scores
/// `π h_D(W, z)/ε`; the per-level means are Richardson-extrapolated. `h_D` is explicit for disks,
/// disk exteriors and the half-plane, and otherwise estimated from nested walks by the frequency
/// of exits within a small arc around `z`.
pub fn bubble_diff_mass(z: C64, normal: C64, d: &Domain, dt: &Domain, opts: &BubbleOptions, n: u64, seed: u64) -> Result<Estimate> {
    if opts.ladder.len() < 2 {
        return Err(Error::InvalidInput("the ladder needs at least two levels".into()));
    }
    let nrm = normal / normal.norm();
    if !(d.boundary_distance(z) < 1e-9 * (1.0 + z.norm()) && dt.boundary_distance(z) < 1e-9 * (1.0 + z.norm())) {
        return Err(Error::DomainViolation("root must lie on both boundaries".into()));
    }
    let probe = z + nrm * opts.ladder[opts.ladder.len() - 1];
    if !d.contains(probe) || !dt.contains(probe) {
        return Err(Error::DomainViolation("normal does not point into the domains".into()));
    }
    let explicit = canonical_poisson(d, probe, z).is_some();
    let eta = opts.arc_scale * ((n * opts.arc_walks) as f64).powf(-0.25);
    let eps_walk = 1e-5 * opts.ladder[opts.ladder.len() - 1];
    let outer = Walker::new(dt, eps_walk)?;
    let inner = Walker::new(d, 1e-3 * eta)?;
    let mut levels = Vec::new();
    let mut arc_counts = (0u64, 0u64, 0u64);
    for (k, &e) in opts.ladder.iter().enumerate() {
        let start = z + nrm * e;
        let lvl_seed = RngStream::new(seed, 0).child(k as u64).seed;
        let counts = std::sync::Mutex::new((0u64, 0u64, 0u64));
        let est = run_blocks(n, lvl_seed, |rng| {
            let w = outer.walk(start, rng)?.point;
            if d.boundary_distance(w) <= 10.0 * eps_walk {
                return Ok(0.0);
            }
            let h = if explicit {
                canonical_poisson(d, w, z).unwrap_or(0.0)
            } else {
                let (mut near, mut half) = (0u64, 0u64);
                for _ in 0..opts.arc_walks {
                    let x = inner.exit(w, rng)?;
                    let r = (x - z).norm();
                    if r < eta {
                        near += 1;
                        if r < 0.5 * eta {
                            half += 1;
                        }
                    }
                }
                let mut c = counts.lock().unwrap();
                c.0 += near;
                c.1 += half;
                c.2 += opts.arc_walks;
                near as f64 / (opts.arc_walks as f64 * 2.0 * eta)
            };
            Ok(PI * h / e)
        })?;
        let c = counts.into_inner().unwrap();
        arc_counts = (arc_counts.0 + c.0, arc_counts.1 + c.1, arc_counts.2 + c.2);
        levels.push(est);
    }
    if !explicit && arc_counts.2 > 0 {
        // Density at arc η versus η/2: the O(η²) bias is 4/3 of their difference.
        let m = arc_counts.2 as f64;
        let d1 = arc_counts.0 as f64 / (m * 2.0 * eta);
        let d2 = arc_counts.1 as f64 / (m * eta);
        let bias = 4.0 / 3.0 * (d1 - d2).abs();
        let se = (arc_counts.1.max(1) as f64).sqrt() / (m * eta);
        if bias > se.max(1e-300) && (d1 - d2).abs() > 3.0 * se {
            return Err(Error::ArcTooCoarse { bias, stderr: se });
        }
    }
    let mut out = richardson(&opts.ladder, &levels)?;
    out.n = levels.iter().map(|l| l.n).sum();
    out.seed = seed;
    Ok(out)
}

/// Output of [`bubble_mass_blocked`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockedMass {
    /// `m(w; D, A_R)`.
    pub inside: Estimate,
    /// `m(w; 𝒪, D)`.
    pub escaping: Estimate,
    /// Probability that Brownian motion started uniformly on `C_R` leaves `D` through `C_1`.
    pub q: Estimate,
    /// `ρ(R) = m(w; 𝒪, A_R)`.
    pub rho: f64,
    /// Leading orders `q/(2 log R)` and `(1 − q)/(2 log R)`.
    pub predicted_inside: f64,
    pub predicted_escaping: f64,
}

/// Splits `ρ(R)` for a domain `A_R ⊆ D ⊆ 𝒪` into the bubbles at `w ∈ C_1` that stay in `D` and
/// those that leave it.
///
/// A bubble leaving `A_R` first reaches `C_R` at `y` with density `π h_{∂A_R}(w, y)`; `y` is drawn
/// uniformly with that weight. From `y` a walk runs in `D`. If it leaves through the far boundary
/// at `B`, the escaping mass scores `h_𝒪(B, w)` (explicit); if it returns to `C_1`, the inside mass
/// scores the exit density at `w` by a small angular arc of half-width `η = n^{−1/4}`.
pub fn bubble_mass_blocked(w: C64, d: &Domain, big_r: f64, n: u64, seed: u64) -> Result<BlockedMass> {
    if (w.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::DomainViolation("root must lie on the unit circle".into()));
    }
    if !(big_r > 1.0) {
        return Err(Error::DomainViolation(format!("need R > 1, got {big_r}")));
    }
    for k in 0..64 {
        let t = TAU * k as f64 / 64.0;
        for s in [1.0 + 1e-6 * (big_r - 1.0), 0.5 * (1.0 + big_r), big_r * (1.0 - 1e-9)] {
            if !d.contains(C64::from_polar(s, t)) {
                return Err(Error::DomainViolation("D must contain the annulus A_R".into()));
            }
        }
        if d.contains(C64::from_polar(1.0 - 1e-6, t)) {
            return Err(Error::DomainViolation("D must lie outside the unit disk".into()));
        }
    }
    let rho_r = rho(big_r)?.value;
    let eta = (n as f64).powf(-0.25).min(0.25);
    let eps = 1e-6 * eta;
    let walker = Walker::new(d, eps)?;
    let phase = w.arg();
    let est = run_blocks_multi(n, seed, 3, |rng, out| {
        let phi = rng.angle();
        let y = C64::from_polar(big_r, phi);
        let weight = PI * TAU * big_r * boundary_poisson_annulus(big_r, phi - phase)?.value;
        let b = walker.walk(y, rng)?.point;
        if b.norm() <= 1.0 + 10.0 * eps {
            if (b / w).arg().abs() < eta {
                out[0] = weight / (2.0 * eta);
            }
            out[2] = 1.0;
        } else {
            out[1] = weight * (b.norm_sqr() - 1.0) / (TAU * (b - w).norm_sqr());
        }
        Ok(())
    })?;
    let (inside, escaping, q) = (est[0], est[1], est[2]);
    let l = 2.0 * big_r.ln();
    Ok(BlockedMass { inside, escaping, q, rho: rho_r, predicted_inside: q.value / l, predicted_escaping: (1.0 - q.value) / l })
}

/// Result of [`separated_bubble`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparatedBubble {
    pub estimate: Estimate,
    /// Radius of the separating circle.
    pub rho0: f64,
}

/// Largest distance from the origin to the set.
fn outer_radius(k: &CompactSet) -> f64 {
    k.radius_about(c64(0.0, 0.0))
}

/// Length scale of a set, used for the walk tolerance.
fn set_scale(k: &CompactSet) -> f64 {
    match k.as_circle() {
        Some((c, _)) => c.radius,
        None => k.radius_about(hull_anchor(k)),
    }
}

/// Inner radius of the disk bounded by a circle target enclosing the origin.
fn enclosed_radius(k: &CompactSet) -> Option<f64> {
    let (c, _) = k.as_circle()?;
    let r = c.radius - c.center.norm();
    (r > 0.0).then_some(r)
}

/// `(1/π) ∫₀^{2π} m(e^{iθ}; 𝔻 ∖ killing, ·) dθ` restricted to bubbles that hit every target.
///
/// A bubble from `e^{iθ}` that hits a target inside `𝔻_{ρ₀}` first crosses `C_{ρ₀}` at
/// `y = ρ₀e^{iφ}` with density `h_{∂A_{ρ₀,1}}(e^{iθ}, y)`, so the integral equals
/// `2π E_φ E^y[k(Θ − φ); all targets hit, exit through ∂𝔻]` with the annulus kernel `k` and the
/// exit angle `Θ`. Without killing sets the exit angle is integrated out once all targets are hit
/// at `B`: the score becomes `1/log R + Σ 4n Re((B e^{−iφ})ⁿ)/(Rⁿ − R⁻ⁿ)` with `R = 1/ρ₀`.
///
/// Circle targets that enclose `𝔻_{ρ₀}` are hit by every such bubble and need no tracking. At
/// least one target and every killing set must lie inside a disk `𝔻_{ρ₀}` that those circles
/// enclose; sets reaching the unit circle are rejected as `Unsupported`.
pub fn separated_bubble(targets: &[CompactSet], killing: &[CompactSet], n: u64, seed: u64) -> Result<SeparatedBubble> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("at least one target is required".into()));
    }
    for s in targets.iter().chain(killing) {
        if !(outer_radius(s) < 1.0) {
            return Err(Error::Unsupported("targets and killing sets must lie inside the unit disk".into()));
        }
    }
    // Classify enclosing circle targets as separating until the split is consistent.
    let mut separating: Vec<bool> = targets.iter().map(|t| enclosed_radius(t).is_some()).collect();
    loop {
        let a_max = targets
            .iter()
            .zip(&separating)
            .filter(|(_, s)| !**s)
            .map(|(t, _)| outer_radius(t))
            .chain(killing.iter().map(outer_radius))
            .fold(0.0, f64::max);
        let mut changed = false;
        for (t, s) in targets.iter().zip(separating.iter_mut()) {
            if *s && enclosed_radius(t).unwrap() <= a_max {
                *s = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if separating.iter().all(|s| *s) {
        // The innermost enclosing circle becomes the tracked target.
        let (i, _) = targets.iter().enumerate().map(|(i, t)| (i, enclosed_radius(t).unwrap())).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        separating[i] = false;
    }
    let inner: Vec<CompactSet> = targets.iter().zip(&separating).filter(|(_, s)| !**s).map(|(t, _)| t.clone()).collect();
    let a_max = inner.iter().chain(killing).map(outer_radius).fold(0.0, f64::max);
    let upper = targets.iter().zip(&separating).filter(|(_, s)| **s).filter_map(|(t, _)| enclosed_radius(t)).fold(1.0, f64::min);
    if !(a_max < upper) {
        return Err(Error::Unsupported("no circle about the origin separates the targets from the unit circle".into()));
    }
    let rho0 = (a_max * upper).sqrt();
    let big_r = 1.0 / rho0;
    let log_r = big_r.ln();
    let mut coef = Vec::new();
    let mut rn = 1.0;
    for m in 1.. {
        rn *= big_r;
        let c = 4.0 * m as f64 / (rn - 1.0 / rn);
        if c < 1e-16 / log_r || m > 200_000 {
            break;
        }
        coef.push(c);
    }
    let domain = if killing.is_empty() {
        Domain::unit_disk()
    } else {
        Domain::Intersection(vec![Domain::unit_disk(), Domain::HullComplement(CompactSet::Union(killing.to_vec()))])
    };
    let eps = 1e-5 * inner.iter().chain(killing).map(set_scale).fold(f64::INFINITY, f64::min).min(1.0 - upper.min(1.0) + 1e-3);
    let walker = Walker::with_targets(&domain, &inner, eps)?;
    let all = walker.all_targets();
    let rb = killing.is_empty();
    let cut = 0.5 * (1.0 + upper.max(rho0));
    let estimate = run_blocks(n, seed, |rng| {
        let phi = rng.angle();
        let y = C64::from_polar(rho0, phi);
        let e = walker.walk_from(y, 0, rb, rng)?;
        if e.hits != all {
            return Ok(0.0);
        }
        let rot = C64::from_polar(1.0, -phi);
        if rb {
            let x = e.point * rot;
            let mut p = c64(1.0, 0.0);
            let mut s = 1.0 / log_r;
            for c in &coef {
                p *= x;
                s += c * p.re;
            }
            Ok(s)
        } else if e.point.norm() > cut {
            let a = (e.point * rot).arg();
            let mut s = 1.0 / log_r;
            for (m, c) in coef.iter().enumerate() {
                s += c * ((m + 1) as f64 * a).cos();
            }
            Ok(s)
        } else {
            Ok(0.0)
        }
    })?;
    Ok(SeparatedBubble { estimate, rho0 })
}
