//! Whole-plane SLE_κ by a radial zipper, and the reversed radial SLE density.
//!
//! Normalization: the hull `K_t` grows from `0` with `ccap K_t = log t`, and `g_t` maps `ℂ ∖ K_t`
//! onto `{|w| > t}` with `g_t(z) = z + O(1)` at `∞`. The process starts from a straight segment
//! of capacity `t₀` in a uniform direction. Each step of log-capacity `δ` composes the exact
//! radial slit map at the current driving angle, which moves by `√(κδ)` times a standard normal.
//!
//! Far from the hull, `g_t` is stored as its Laurent expansion at `∞`. All quantities of the
//! density come from Dirichlet problems in `g_t`-coordinates, on the doubly connected region
//! between `{|w| = t}` and the image of a circle.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::geometry::{c64, Circle, CompactSet, Domain, MobiusMap, PolyCurve, C64};
use crate::harmonic::{HarmonicFit, LaurentSolver};
use crate::mc::{run_blocks, run_blocks_multi, Walker};
use crate::quad::gauss_legendre_on;
use crate::rng::{RngStream, StreamRng};

/// SLE exponents for `0 < κ ≤ 4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SLEParams {
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub btilde: f64,
    pub c: f64,
}

/// Exponents `a = 2/κ`, `b = (6 − κ)/(2κ)`, `b̃ = (κ − 2) b/4`, `c = (3κ − 8) b`.
pub fn exponents(kappa: f64) -> Result<SLEParams> {
    if !(kappa > 0.0 && kappa <= 4.0) {
        return Err(Error::KappaOutOfRange(kappa));
    }
    let b = (6.0 - kappa) / (2.0 * kappa);
    Ok(SLEParams { kappa, a: 2.0 / kappa, b, btilde: (kappa - 2.0) * b / 4.0, c: (3.0 * kappa - 8.0) * b })
}

impl SLEParams {
    /// True when the central charge vanishes (`κ = 8/3`).
    pub fn central_charge_vanishes(&self) -> bool {
        self.c.abs() < 1e-12
    }
}

/// Default starting capacity `t₀ = e^{−12}` of the whole-plane process.
pub const DEFAULT_T0: f64 = 6.144_212_353_328_21e-6;

/// Default log-capacity step.
pub const DEFAULT_DT: f64 = 1e-4;

/// Sampling options.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Log-capacity step `δ`.
    pub dt: f64,
    /// Starting capacity `t₀`.
    pub t0: f64,
    /// Record the trace tip every `trace_stride` steps; `0` records no trace.
    pub trace_stride: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { dt: DEFAULT_DT, t0: DEFAULT_T0, trace_stride: 0 }
    }
}

/// Driving angles on a uniform log-capacity grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    pub t0: f64,
    /// Log-capacity step.
    pub du: f64,
    /// `angles[0]` is the direction of the initial segment; `angles[k]` drives step `k`.
    pub angles: Vec<f64>,
    pub seed: u64,
}

impl DrivingPath {
    /// Brownian driving `ξ_k = ξ_{k−1} + √(κ δ) N_k` from a uniform initial direction.
    pub fn brownian(kappa: f64, t0: f64, t_end: f64, dt: f64, seed: u64) -> Result<Self> {
        let mut rng = RngStream::new(seed, 0).rng();
        Self::brownian_with(kappa, t0, t_end, dt, &mut rng, seed)
    }

    fn brownian_with(kappa: f64, t0: f64, t_end: f64, dt: f64, rng: &mut StreamRng, seed: u64) -> Result<Self> {
        let (n, du) = grid(t0, t_end, dt)?;
        let sd = (kappa * du).sqrt();
        let mut angles = Vec::with_capacity(n + 1);
        angles.push(rng.angle());
        for k in 1..=n {
            let prev = angles[k - 1];
            angles.push(prev + sd * rng.normal());
        }
        Ok(DrivingPath { t0, du, angles, seed })
    }

    /// Constant driving (the `κ → 0` limit): a straight radial slit.
    pub fn constant(angle: f64, t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        let (n, du) = grid(t0, t_end, dt)?;
        Ok(DrivingPath { t0, du, angles: vec![angle; n + 1], seed: 0 })
    }

    pub fn steps(&self) -> usize {
        self.angles.len() - 1
    }

    /// Capacity grid `t_0 < t_1 < … < t_n`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| self.capacity(k)).collect()
    }

    /// Capacity after `k` steps.
    pub fn capacity(&self, k: usize) -> f64 {
        self.t0 * (self.du * k as f64).exp()
    }
}

fn grid(t0: f64, t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t0 > 0.0 && t_end > t0 && dt > 0.0) {
        return Err(Error::InvalidInput(format!("need 0 < t0 < t_end and dt > 0, got t0={t0}, t_end={t_end}, dt={dt}")));
    }
    let span = (t_end / t0).ln();
    let n = (span / dt).ceil() as usize;
    Ok((n, span / n as f64))
}

/// `J⁻¹(w) = (w + √(w² − 4))/2`, the branch mapping `ℂ ∖ [−2, 2]` onto `{|ζ| > 1}`.
#[inline]
fn jinv(w: C64) -> C64 {
    let r = w * w;
    0.5 * w * (1.0 + (1.0 - 4.0 / r).sqrt())
}

#[inline]
fn joukowski(z: C64) -> C64 {
    z + 1.0 / z
}

/// Radial slit map of log-capacity `δ` at angle `0`: `F = J⁻¹ ∘ A ∘ J`.
#[derive(Clone, Copy, Debug)]
struct SlitMap {
    m: f64,
    half: f64,
}

impl SlitMap {
    fn new(delta: f64) -> Self {
        let ell = 2.0 * delta.exp();
        let b = 2.0 * ell - 2.0;
        SlitMap { m: (b - 2.0) / 2.0, half: ell / 2.0 }
    }

    #[inline]
    fn forward(&self, z: C64, lambda: C64) -> C64 {
        let w = (joukowski(z / lambda) - self.m) / self.half;
        lambda * jinv(w)
    }

    #[inline]
    fn inverse(&self, z: C64, lambda: C64) -> C64 {
        let w = joukowski(z / lambda) * self.half + self.m;
        lambda * jinv(w)
    }
}

/// Incremental zipper: tracks `G_k(z) = g_{t_k}(z)/t_k` on a fixed set of points.
struct Zipper<'a> {
    path: &'a DrivingPath,
    slit: SlitMap,
    step: usize,
    values: Vec<C64>,
}

impl<'a> Zipper<'a> {
    fn new(path: &'a DrivingPath, points: &[C64]) -> Self {
        let len = 4.0 * path.t0;
        let l0 = C64::from_polar(1.0, path.angles[0]);
        let values = points.iter().map(|&z| l0 * jinv(4.0 * z / (len * l0) - 2.0)).collect();
        Zipper { path, slit: SlitMap::new(path.du), step: 0, values }
    }

    fn advance_to(&mut self, k: usize) {
        while self.step < k {
            self.step += 1;
            let lambda = C64::from_polar(1.0, self.path.angles[self.step]);
            for v in &mut self.values {
                *v = self.slit.forward(*v, lambda);
            }
        }
    }

    fn scaled(&self) -> Vec<C64> {
        let t = self.path.capacity(self.step);
        self.values.iter().map(|v| v * t).collect()
    }
}

/// Laurent expansion `g(z) = z + Σ_{k≥0} c_k z^{−k}` at `∞`, accurate for `|z| ≥ radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub t: f64,
    pub coeffs: Vec<C64>,
    pub radius: f64,
}

/// Sampling points for [`FarField`]: ratio of sampling radius to `t` and point count.
const FAR_RATIO: f64 = 16.0;
const FAR_POINTS: usize = 48;

impl FarField {
    fn from_samples(t: f64, radius: f64, values: &[C64]) -> Self {
        let m = values.len();
        let coeffs = (0..m / 2)
            .map(|k| {
                let mut acc = c64(0.0, 0.0);
                for (i, g) in values.iter().enumerate() {
                    let z = C64::from_polar(radius, TAU * i as f64 / m as f64);
                    acc += (g - z) * C64::from_polar(1.0, TAU * (k * i) as f64 / m as f64);
                }
                acc / m as f64 * radius.powi(k as i32)
            })
            .collect();
        FarField { t, coeffs, radius }
    }

    /// Identity map of the closed disk `|z − center| ≤ t` (translated).
    pub fn disk(center: C64, t: f64) -> Self {
        let mut coeffs = vec![c64(0.0, 0.0); 4];
        coeffs[0] = -center;
        FarField { t, coeffs, radius: center.norm() + t }
    }

    fn check(&self, z: C64) -> Result<()> {
        if z.norm() < self.radius * (1.0 - 1e-12) {
            return Err(Error::DomainViolation(format!("|z| = {} is inside the far-field radius {}", z.norm(), self.radius)));
        }
        Ok(())
    }

    /// `g(z)`.
    pub fn map(&self, z: C64) -> Result<C64> {
        self.check(z)?;
        let inv = 1.0 / z;
        let mut acc = c64(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * inv + c;
        }
        Ok(z + acc)
    }

    /// `g′(z)`.
    pub fn derivative(&self, z: C64) -> Result<C64> {
        self.check(z)?;
        let inv = 1.0 / z;
        let mut acc = c64(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * inv + c * k as f64;
        }
        Ok(1.0 - acc * inv * inv)
    }
}

/// A sampled hull at capacity `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SLEHull {
    pub kappa: f64,
    pub t: f64,
    pub far: FarField,
    /// `U_t = g_t(tip)`, on `{|w| = t}`.
    pub tip_image: C64,
    /// Trace through the recorded tips, with capacity stamps `log t_k`.
    pub trace: Option<PolyCurve>,
    /// Self-intersections detected in the recorded trace.
    pub self_intersections: usize,
}

impl SLEHull {
    /// The trace as a compact set.
    pub fn hull_set(&self) -> Result<CompactSet> {
        self.trace.clone().map(CompactSet::Hull).ok_or_else(|| Error::InvalidInput("hull was sampled without a trace".into()))
    }

    /// Fails with `SolverUnstable` when the recorded trace crosses itself.
    pub fn check_simple(&self) -> Result<()> {
        if self.self_intersections > 0 {
            return Err(Error::SolverUnstable(format!("trace has {} self-intersections", self.self_intersections)));
        }
        Ok(())
    }

    /// Radius of the recorded trace about the origin.
    pub fn radius(&self) -> Option<f64> {
        self.trace.as_ref().map(|p| p.radius_about(c64(0.0, 0.0)))
    }
}

fn far_points(t: f64) -> (f64, Vec<C64>) {
    let radius = FAR_RATIO * t;
    (radius, (0..FAR_POINTS).map(|i| C64::from_polar(radius, TAU * i as f64 / FAR_POINTS as f64)).collect())
}

/// Tips `γ(t_k)` for `k` in `steps`, by inverting the zipper.
fn trace_tips(path: &DrivingPath, steps: &[usize]) -> Vec<C64> {
    let slit = SlitMap::new(path.du);
    let len = 4.0 * path.t0;
    let l0 = C64::from_polar(1.0, path.angles[0]);
    steps
        .iter()
        .map(|&k| {
            let mut z = C64::from_polar(1.0, path.angles[k]);
            for j in (1..=k).rev() {
                z = slit.inverse(z, C64::from_polar(1.0, path.angles[j]));
            }
            len * l0 / 4.0 * (joukowski(z / l0) + 2.0)
        })
        .collect()
}

/// Segments closer than this along the trace are not tested against each other.
///
/// With piecewise-constant driving each new slit grows from `λ_k` rather than from the previous
/// tip, so consecutive tips zigzag at scale `√δ · t`; chords a couple of steps apart can cross
/// there without the curve crossing itself.
pub const LOCAL_WINDOW: usize = 3;

fn count_self_intersections(v: &[C64]) -> usize {
    let mut n = 0;
    for i in 0..v.len().saturating_sub(1) {
        for j in i + 1 + LOCAL_WINDOW..v.len() - 1 {
            if crate::geometry::segments_intersect(v[i], v[i + 1], v[j], v[j + 1]) {
                n += 1;
            }
        }
    }
    n
}

/// Builds hulls from a driving path at the capacities `times` (increasing, each at most the
/// path's final capacity). The far fields all use points at `16 · max(times)`.
pub fn hulls_from_path(path: &DrivingPath, kappa: f64, times: &[f64], trace_stride: usize) -> Result<Vec<SLEHull>> {
    let t_max = path.capacity(path.steps());
    if times.is_empty() || !times.windows(2).all(|w| w[1] > w[0]) || times[times.len() - 1] > t_max * (1.0 + 1e-12) || times[0] <= path.t0 {
        return Err(Error::InvalidInput("capacities must increase within the driving path".into()));
    }
    let top = *times.last().unwrap();
    let (radius, points) = far_points(top);
    let mut zipper = Zipper::new(path, &points);
    let mut out = Vec::new();
    for &t in times {
        let k = ((t / path.t0).ln() / path.du).round() as usize;
        zipper.advance_to(k);
        let tk = path.capacity(k);
        let far = FarField::from_samples(tk, radius, &zipper.scaled());
        let (trace, self_intersections) = if trace_stride > 0 {
            let mut steps: Vec<usize> = (0..=k).step_by(trace_stride).collect();
            if *steps.last().unwrap() != k {
                steps.push(k);
            }
            let mut verts = vec![c64(0.0, 0.0)];
            verts.extend(trace_tips(path, &steps));
            let mut caps = vec![f64::NEG_INFINITY];
            caps.extend(steps.iter().map(|&j| path.capacity(j).ln()));
            let n = count_self_intersections(&verts);
            (Some(PolyCurve::new(verts, Some(caps))?), n)
        } else {
            (None, 0)
        };
        out.push(SLEHull { kappa, t: tk, far, tip_image: tk * C64::from_polar(1.0, path.angles[k]), trace, self_intersections });
    }
    Ok(out)
}

/// One whole-plane SLE_κ hull at capacity `t_end`. With a recorded trace, a self-crossing trace
/// is an error; [`hulls_from_path`] reports the count instead.
pub fn whole_plane_sample(params: &SLEParams, t_end: f64, opts: &SampleOptions, seed: u64) -> Result<SLEHull> {
    let path = DrivingPath::brownian(params.kappa, opts.t0, t_end, opts.dt, seed)?;
    let hull = hulls_from_path(&path, params.kappa, &[path.capacity(path.steps())], opts.trace_stride)?.remove(0);
    hull.check_simple()?;
    Ok(hull)
}

/// Dirichlet problems in `g`-coordinates on the region between `{|w| = t}` and `g(C)` for a
/// circle `C` around the hull.
struct GRegion {
    angles: Vec<f64>,
    images: Vec<C64>,
    derivs: Vec<C64>,
    solver: LaurentSolver,
    inner: usize,
}

impl GRegion {
    fn new(far: &FarField, circle: Circle, order: usize) -> Result<Self> {
        let m = 2 * order + 16;
        let angles: Vec<f64> = (0..m).map(|i| TAU * (i as f64 + 0.5) / m as f64).collect();
        let zs: Vec<C64> = angles.iter().map(|&a| circle.point_at(a)).collect();
        let images = zs.iter().map(|&z| far.map(z)).collect::<Result<Vec<_>>>()?;
        let derivs = zs.iter().map(|&z| far.derivative(z)).collect::<Result<Vec<_>>>()?;
        let mut points: Vec<C64> = (0..m).map(|i| C64::from_polar(far.t, TAU * (i as f64 + 0.25) / m as f64)).collect();
        points.extend_from_slice(&images);
        let rho_out = images.iter().map(|w| w.norm()).fold(0.0, f64::max);
        let solver = LaurentSolver::new(c64(0.0, 0.0), far.t, rho_out, order, points)?;
        Ok(GRegion { angles, images, derivs, solver, inner: m })
    }

    /// Solves with `0` on the inner circle and `outer(j, i)` at the image of angle `i`.
    fn solve(&self, cols: usize, outer: impl Fn(usize, usize) -> f64) -> Result<Vec<HarmonicFit>> {
        let m = self.angles.len();
        let mut data = DMatrix::zeros(self.inner + m, cols);
        for j in 0..cols {
            for i in 0..m {
                data[(self.inner + i, j)] = outer(j, i);
            }
        }
        self.solver.solve(&data)
    }

    /// Radial derivative `∂_ρ (u ∘ g)` at circle point `i`.
    fn radial(&self, fit: &HarmonicFit, i: usize) -> f64 {
        (fit.derivative(self.images[i]) * self.derivs[i] * C64::from_polar(1.0, self.angles[i])).re
    }

    /// Largest boundary residual of the harmonic measure of the outer curve.
    fn residual(&self, fit: &HarmonicFit, t: f64) -> f64 {
        let m = self.angles.len();
        let inner = (0..m).map(|i| fit.value(C64::from_polar(t, TAU * (i as f64 + 0.75) / m as f64)).abs()).fold(0.0, f64::max);
        let outer = self.images.iter().map(|&w| (fit.value(w) - 1.0).abs()).fold(0.0, f64::max);
        inner.max(outer)
    }
}

fn order_for(far: &FarField, circle: &Circle) -> usize {
    let ecc = circle.center.norm() / circle.radius;
    let ratio = (4.0 * far.t / (circle.radius - circle.center.norm())).max(ecc);
    ((-34.0 / ratio.max(1e-3).ln()).ceil() as usize).clamp(12, 96)
}

/// Harmonic measure of `g(C)` in the `g`-region, with `log(1/s) = 1/(log coefficient)`.
struct ModulusSolve {
    fit: HarmonicFit,
    log_inv_s: f64,
}

fn modulus_solve(far: &FarField, circle: Circle) -> Result<ModulusSolve> {
    let order = order_for(far, &circle);
    let region = GRegion::new(far, circle, order)?;
    let fit = region.solve(1, |_, _| 1.0)?.remove(0);
    let res = region.residual(&fit, far.t);
    if !(res < 1e-8) {
        return Err(Error::SolverUnstable(format!("modulus solve residual {res:.2e}")));
    }
    let a = fit.log_coefficient(c64(0.0, 0.0));
    if !(a > 0.0) {
        return Err(Error::SolverUnstable("non-positive flux in the modulus solve".into()));
    }
    Ok(ModulusSolve { fit, log_inv_s: 1.0 / a })
}

fn disk_of(d: &Domain) -> Result<Circle> {
    match d {
        Domain::Disk { center, radius } => Circle::new(*center, *radius),
        _ => Err(Error::Unsupported("the uniformizing-map route needs a disk domain".into())),
    }
}

fn check_inside(far: &FarField, c: &Circle) -> Result<()> {
    if !c.encloses(c64(0.0, 0.0)) || c.radius - c.center.norm() <= far.radius {
        return Err(Error::HullTouchesBoundary);
    }
    Ok(())
}

/// Conformal modulus `s` of `D ∖ K` for a disk `D` (the annulus `D ∖ K` is conformally `A_{s,1}`),
/// from the uniformizing map of the hull.
pub fn hull_annulus_modulus(far: &FarField, d: &Domain) -> Result<f64> {
    let c = disk_of(d)?;
    check_inside(far, &c)?;
    Ok((-modulus_solve(far, c)?.log_inv_s).exp())
}

/// Root-integrated bubble mass `β(r)` of loops in `𝔻_r(p)` that hit the hull, with the loop's
/// furthest point from `p` on `C_r(p)`.
fn beta(far: &FarField, p: C64, r: f64) -> Result<f64> {
    let circle = Circle::new(p, r)?;
    let order = order_for(far, &circle);
    let ratio = (4.0 * far.t + p.norm()) / r;
    let modes = ((-36.0 / (2.0 * ratio.ln())).ceil() as usize).clamp(1, order / 2);
    let region = GRegion::new(far, circle, order.max(2 * modes + 8))?;
    let fits = region.solve(1 + 2 * modes, |j, i| {
        if j == 0 {
            1.0
        } else {
            let n = j.div_ceil(2) as f64;
            let (s, c) = (n * region.angles[i]).sin_cos();
            if j % 2 == 1 {
                c
            } else {
                s
            }
        }
    })?;
    let m = region.angles.len();
    let mut acc = 0.0;
    for i in 0..m {
        let th = region.angles[i];
        let mut v = region.radial(&fits[0], i);
        for n in 1..=modes {
            let du = c64(region.radial(&fits[2 * n - 1], i), region.radial(&fits[2 * n], i));
            let dv = -(n as f64) / r * C64::from_polar(1.0, n as f64 * th) + du;
            v += 2.0 * (C64::from_polar(1.0, -(n as f64) * th) * dv).re;
        }
        acc += v;
    }
    Ok(acc / m as f64)
}

/// Radial quadrature nodes for [`hull_lambda_star`].
pub const HULL_RADIAL_NODES: usize = 20;

/// `Λ*(K, C)` for a hull with uniformizing map `far` and a circle `C = C_{R₀}(p)` around it:
/// `−log log(R₀/t) + ∫_{R₀}^∞ [β(r) − 1/(r log(r/t))] dr`, integrated in `x = R₀/r`.
pub fn hull_lambda_star(far: &FarField, c: &Circle) -> Result<Estimate> {
    check_inside(far, c)?;
    let (r0, t) = (c.radius, far.t);
    let integrand = |x: f64| -> Result<f64> {
        let r = r0 / x;
        Ok((beta(far, c.center, r)? - 1.0 / (r * (r / t).ln())) * r0 / (x * x))
    };
    let mut total = 0.0;
    let mut coarse = 0.0;
    for (nodes, out) in [(HULL_RADIAL_NODES, &mut total), (HULL_RADIAL_NODES / 2, &mut coarse)] {
        for (x, w) in gauss_legendre_on(nodes, 0.0, 1.0) {
            *out += w * integrand(x)?;
        }
    }
    let value = -(r0 / t).ln().ln() + total;
    Ok(Estimate::exact(value, (total - coarse).abs()))
}

/// Factors of the density at one hull.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTerms {
    pub value: f64,
    /// `Λ*(γ_t, Dᶜ)`; `None` when `c = 0` and the loop term is identically `1`.
    pub lambda_star: Option<f64>,
    pub s: f64,
    pub t: f64,
    pub g_prime_w: f64,
    pub rho_prime_u: f64,
    pub rho_prime_gw: f64,
}

/// Reversed radial SLE density at one hull, for a disk `D ∋ 0` and boundary point `w`:
/// `exp{(c/2)Λ*} t^{b−b̃} |g′(w)|^b |ρ′(U)|^b |ρ′(g(w))|^b s^{b̃−b} [log(1/s)]^{c/2}`, where `ρ` maps
/// `g(D ∖ K)` onto `A_{s,1}`.
pub fn rn_density(hull: &SLEHull, d: &Domain, w: C64, params: &SLEParams) -> Result<DensityTerms> {
    let c = disk_of(d)?;
    check_inside(&hull.far, &c)?;
    if ((w - c.center).norm() - c.radius).abs() > 1e-9 * c.radius {
        return Err(Error::InvalidInput(format!("w = {w} is not on the boundary of the domain")));
    }
    let ms = modulus_solve(&hull.far, c)?;
    let l = ms.log_inv_s;
    let s = (-l).exp();
    let t = hull.t;
    let gw = hull.far.map(w)?;
    let g_prime_w = hull.far.derivative(w)?.norm();
    let rho_prime_u = s * l * ms.fit.derivative(hull.tip_image).norm();
    let rho_prime_gw = l * ms.fit.derivative(gw).norm();
    let (loop_term, lambda_star) = if params.central_charge_vanishes() {
        (1.0, None)
    } else {
        let ls = hull_lambda_star(&hull.far, &c)?.value;
        ((params.c / 2.0 * ls).exp(), Some(ls))
    };
    let (b, bt) = (params.b, params.btilde);
    let value = loop_term * t.powf(b - bt) * (g_prime_w * rho_prime_u * rho_prime_gw).powf(b) * s.powf(bt - b) * l.powf(params.c / 2.0);
    Ok(DensityTerms { value, lambda_star, s, t, g_prime_w, rho_prime_u, rho_prime_gw })
}

/// `|ψ′(0)|^{b̃} |ψ′(w)|^b` for the Möbius uniformizer `ψ` of a disk onto `𝔻` with `ψ(0) = 0`.
pub fn density_target(d: &Domain, w: C64, params: &SLEParams) -> Result<f64> {
    let c = disk_of(d)?;
    let psi = disk_uniformizer(&c)?;
    Ok(psi.derivative(c64(0.0, 0.0)).norm().powf(params.btilde) * psi.derivative(w).norm().powf(params.b))
}

/// Möbius map of the disk bounded by `c` onto `𝔻` sending `0` to `0`.
pub fn disk_uniformizer(c: &Circle) -> Result<MobiusMap> {
    if !c.encloses(c64(0.0, 0.0)) {
        return Err(Error::DomainViolation("the disk must contain the origin".into()));
    }
    let to_unit = MobiusMap::new(c64(1.0 / c.radius, 0.0), -c.center / c.radius, c64(0.0, 0.0), c64(1.0, 0.0))?;
    let a = to_unit.apply_c(c64(0.0, 0.0));
    Ok(MobiusMap::disk_automorphism(a, 0.0)?.compose(&to_unit))
}

/// Per-capacity row of [`density_limit_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub t: f64,
    pub mean: Estimate,
    pub target: f64,
    /// `mean − target`.
    pub deviation: f64,
    /// Mean of `|density − target|` over the samples.
    pub abs_deviation: Estimate,
}

/// Mean densities over `n` hulls at each capacity in `t_ladder` (one driving path per sample,
/// evaluated at every capacity), with the paired difference between the first two capacities.
pub fn density_limit_check(d: &Domain, w: C64, params: &SLEParams, t_ladder: &[f64], opts: &SampleOptions, n: u64, seed: u64) -> Result<(Vec<DensityRow>, Option<Estimate>)> {
    let mut times = t_ladder.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let k = times.len();
    let target = density_target(d, w, params)?;
    let top = *times.last().ok_or_else(|| Error::InvalidInput("empty capacity ladder".into()))?;
    let est = run_blocks_multi(n, seed, 2 * k + 1, |rng, out| {
        let path = DrivingPath::brownian_with(params.kappa, opts.t0, top, opts.dt, rng, seed)?;
        let hulls = hulls_from_path(&path, params.kappa, &times, 0)?;
        for (i, h) in hulls.iter().enumerate() {
            out[i] = rn_density(h, d, w, params)?.value;
            out[k + 1 + i] = (out[i] - target).abs();
        }
        if k >= 2 {
            out[k] = out[0] - out[1];
        }
        Ok(())
    })?;
    let rows = times
        .iter()
        .enumerate()
        .map(|(i, &t)| DensityRow { t, mean: est[i], target, deviation: est[i].value - target, abs_deviation: est[k + 1 + i] })
        .collect();
    Ok((rows, if k >= 2 { Some(est[k]) } else { None }))
}

/// Monte Carlo conformal modulus `s` of `D ∖ K` for a compact `K ∋ 0` inside a disk `D`.
///
/// `u(z) = P^z(hit K before ∂D)` is `log(1/|φ(z)|)/log(1/s)` under the uniformization
/// `φ: D ∖ K → A_{s,1}`, so its mean over a circle `C_ρ(p)` enclosing `K` is affine in `log ρ`
/// with slope `−1/log(1/s)`. Means on two circles give `log(1/s)`.
pub fn annulus_modulus(d: &Domain, k: &CompactSet, n: u64, seed: u64) -> Result<Estimate> {
    let c = disk_of(d)?;
    let hull_r = k.radius_about(c.center);
    if k.distance(c64(0.0, 0.0)) > 0.0 || hull_r >= c.radius {
        return Err(Error::InvalidInput("K must contain 0 and lie inside D".into()));
    }
    let (rho1, rho2) = ((hull_r * hull_r * c.radius).cbrt(), (hull_r * c.radius * c.radius).cbrt());
    let dom = Domain::Intersection(vec![d.clone(), Domain::HullComplement(k.clone())]);
    let eps = 1e-6 * hull_r;
    let walker = Walker::new(&dom, eps)?;
    let means = run_blocks_multi(n, seed, 2, |rng, out| {
        for (j, rho) in [rho1, rho2].into_iter().enumerate() {
            let z = c.center + rng.unit() * rho;
            let p = walker.exit(z, rng)?;
            out[j] = if k.distance(p) <= 4.0 * eps { 1.0 } else { 0.0 };
        }
        Ok(())
    })?;
    let diff = means[0].sub(&means[1]);
    if !(diff.value > 0.0) {
        return Err(Error::SolverUnstable("circle means do not decrease outward".into()));
    }
    let span = (rho2 / rho1).ln();
    let l = span / diff.value;
    let s = (-l).exp();
    Ok(Estimate { value: s, stderr: s * l * diff.stderr / diff.value, n: diff.n, seed, variance: 0.0 })
}

/// Mean of a per-hull statistic over `n` independent hulls at capacity `t`.
pub fn mean_over_hulls(params: &SLEParams, t: f64, opts: &SampleOptions, n: u64, seed: u64, stat: impl Fn(&SLEHull) -> Result<f64> + Sync) -> Result<Estimate> {
    run_blocks(n, seed, |rng| {
        let path = DrivingPath::brownian_with(params.kappa, opts.t0, t, opts.dt, rng, seed)?;
        let h = hulls_from_path(&path, params.kappa, &[path.capacity(path.steps())], opts.trace_stride)?.remove(0);
        stat(&h)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_match_substitution() {
        let p = exponents(2.0).unwrap();
        assert_eq!((p.b, p.btilde, p.c), (1.0, 0.0, -2.0));
        let p = exponents(8.0 / 3.0).unwrap();
        assert!((p.b - 0.625).abs() < 1e-15 && (p.btilde - 5.0 / 48.0).abs() < 1e-15 && p.central_charge_vanishes());
        let p = exponents(4.0).unwrap();
        assert_eq!((p.b, p.btilde, p.c), (0.25, 0.125, 1.0));
        assert!(matches!(exponents(4.5), Err(Error::KappaOutOfRange(_))));
        assert!(matches!(exponents(0.0), Err(Error::KappaOutOfRange(_))));
    }

    #[test]
    fn slit_maps_invert_and_fix_the_tip() {
        let f = SlitMap::new(0.01);
        let l = C64::from_polar(1.0, 0.7);
        for z in [c64(2.0, 1.0), c64(-1.5, 0.2), c64(0.1, -1.3)] {
            assert!((f.inverse(f.forward(z, l), l) - z).norm() < 1e-13);
        }
        let tip = f.inverse(l, l);
        assert!((f.forward(tip * (1.0 + 1e-12), l) - l).norm() < 1e-5);
        // Far field: F(ζ) ≈ e^{−δ} ζ.
        let z = c64(1e6, 0.0);
        assert!((f.forward(z, c64(1.0, 0.0)) / z - (-0.01f64).exp()).norm() < 1e-6);
    }

    #[test]
    fn zero_noise_gives_a_straight_slit_of_length_four_t() {
        let t = (-4.0f64).exp();
        let path = DrivingPath::constant(0.3, DEFAULT_T0, t, 1e-3).unwrap();
        let h = hulls_from_path(&path, 0.0, &[t], 50).unwrap().remove(0);
        let tip = *h.trace.as_ref().unwrap().vertices().last().unwrap();
        assert!((tip - C64::from_polar(4.0 * t, 0.3)).norm() < 1e-9 * t, "{tip}");
        // The exterior map of the slit is explicit: g(z) = t λ J⁻¹(z/(tλ) − 2).
        let l = C64::from_polar(1.0, 0.3);
        for z in [c64(1.0, 0.5), c64(-0.7, -0.2)] {
            let exact = t * l * jinv(z / (t * l) - 2.0);
            assert!((h.far.map(z).unwrap() - exact).norm() < 1e-12, "{z}");
        }
        assert_eq!(h.self_intersections, 0);
    }

    #[test]
    fn far_field_derivative_obeys_distortion_bounds() {
        let p = exponents(2.0).unwrap();
        let h = whole_plane_sample(&p, 0.05, &SampleOptions { dt: 1e-3, ..Default::default() }, 4).unwrap();
        for z in [c64(1.0, 0.0), c64(0.0, -1.5), c64(-3.0, 2.0)] {
            let r = 4.0 * h.t / z.norm();
            let d = h.far.derivative(z).unwrap().norm();
            assert!(d >= ((1.0 - r) / (1.0 + r)).powi(3) && d <= ((1.0 + r) / (1.0 - r)).powi(3));
            let fd = (h.far.map(z + 1e-6).unwrap() - h.far.map(z - 1e-6).unwrap()) / 2e-6;
            assert!((fd - h.far.derivative(z).unwrap()).norm() < 1e-8);
        }
    }

    /// Modulus of `𝔻_R ∖ closed 𝔻_r(a)` for real `a ≥ 0`, from the automorphism `z ↦ (z − x)/(1 − xz)`
    /// whose fixed pair `x, 1/x` is symmetric for both circles.
    fn eccentric_modulus(r: f64, a: f64, big: f64) -> f64 {
        let (r, a) = (r / big, a / big);
        if a == 0.0 {
            return r;
        }
        let q = 1.0 + a * a - r * r;
        let x = (q - (q * q - 4.0 * a * a).sqrt()) / (2.0 * a);
        ((a + r - x) / (1.0 - x * (a + r))).abs()
    }

    #[test]
    fn disk_hull_reproduces_closed_forms() {
        let d = Domain::disk(0.0, 0.0, 2.0).unwrap();
        for (center, t) in [(c64(0.0, 0.0), 0.05), (c64(0.01, -0.02), 0.03)] {
            let far = FarField::disk(center, t);
            let s = hull_annulus_modulus(&far, &d).unwrap();
            let exact = eccentric_modulus(t, center.norm(), 2.0);
            assert!((s - exact).abs() < 1e-9 * exact, "{s} vs {exact}");
        }
    }

    #[test]
    fn centered_disk_hull_has_concentric_lambda_star_and_exact_density() {
        let t = 0.05;
        let far = FarField::disk(c64(0.0, 0.0), t);
        let c = Circle::centered(2.0).unwrap();
        let ls = hull_lambda_star(&far, &c).unwrap();
        let r = 2.0 / t;
        let exact = -r.ln().ln() - 2.0 * (1..200).map(|n| (1.0 - r.powi(-2 * n)).ln()).sum::<f64>();
        assert!((ls.value - exact).abs() < 1e-8, "{} vs {exact}", ls.value);
        let hull = SLEHull { kappa: 2.0, t, far, tip_image: c64(t, 0.0), trace: None, self_intersections: 0 };
        let p = exponents(2.0).unwrap();
        let d = Domain::disk(0.0, 0.0, 2.0).unwrap();
        let dens = rn_density(&hull, &d, c64(0.0, 2.0), &p).unwrap();
        let target = density_target(&d, c64(0.0, 2.0), &p).unwrap();
        assert!((target - 0.5).abs() < 1e-15);
        assert!((dens.value - exact_disk_density(t, 2.0, &p, exact)).abs() < 1e-9, "{dens:?}");
    }

    /// Density of the centered disk hull `𝔻̄_t` in `𝔻_R`: `g` is the identity, `ρ(w) = w/R`.
    fn exact_disk_density(t: f64, big: f64, p: &SLEParams, ls: f64) -> f64 {
        let s = t / big;
        let l = (1.0 / s).ln();
        (p.c / 2.0 * ls).exp() * t.powf(p.b - p.btilde) * (1.0 / big).powf(2.0 * p.b) * s.powf(p.btilde - p.b) * l.powf(p.c / 2.0)
    }

    #[test]
    fn off_center_disk_lambda_star_matches_determinant_route() {
        let (center, t) = (c64(0.1, 0.05), 0.04);
        let far = FarField::disk(center, t);
        let c = Circle::new(c64(0.2, -0.1), 1.5).unwrap();
        let ls = hull_lambda_star(&far, &c).unwrap();
        let k = CompactSet::ClosedDisk(Circle::new(center, t).unwrap());
        let det = crate::lambda_star::lambda_star(
            &k,
            &CompactSet::Circle(c),
            &crate::lambda_star::Schedule::deep(),
            crate::loops::Engine::Determinant,
            0,
        )
        .unwrap();
        assert!((ls.value - det.value).abs() < 2e-4, "{} vs {}", ls.value, det.value);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn exponent_relations(kappa in 0.05f64..4.0) {
            let p = exponents(kappa).unwrap();
            prop_assert!((p.btilde - (kappa - 2.0) * p.b / 4.0).abs() < 1e-12);
            prop_assert!((p.c - (3.0 * kappa - 8.0) * p.b).abs() < 1e-10 * p.b.max(1.0));
            prop_assert!((p.a - 2.0 / kappa).abs() < 1e-15);
            prop_assert!(p.b > 0.0);
        }

        #[test]
        fn slit_map_round_trip(delta in 1e-4f64..0.1, r in 1.2f64..5.0, th in 0.0f64..TAU, lam in 0.0f64..TAU) {
            let f = SlitMap::new(delta);
            let l = C64::from_polar(1.0, lam);
            let z = C64::from_polar(r, th);
            let w = f.forward(z, l);
            prop_assert!(w.norm() > 1.0);
            prop_assert!((f.inverse(w, l) - z).norm() < 1e-11 * r);
        }

        #[test]
        fn disk_far_field_is_a_translation(x in -1.0f64..1.0, y in -1.0f64..1.0, t in 0.01f64..0.5, r in 3.0f64..10.0, th in 0.0f64..TAU) {
            let center = c64(x, y);
            let far = FarField::disk(center, t);
            let z = C64::from_polar(r, th);
            prop_assert!((far.map(z).unwrap() - (z - center)).norm() < 1e-12 * r);
            prop_assert!((far.derivative(z).unwrap() - 1.0).norm() < 1e-12);
        }
    }
}
