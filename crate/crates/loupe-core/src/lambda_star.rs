//! The normalized loop measure `Λ*(V₁, V₂) = lim_{r↓0} [Λ(V₁, V₂; 𝒪_r) − log log(1/r)]`.
//!
//! The renormalized sequence is evaluated on a schedule of `L = log(1/r)` values and extrapolated
//! in `x = 1/L`. Schedules are given in `L` so that very small radii never underflow.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::geometry::{c64, Circle, CompactSet, ComplexPoint, Domain, MobiusMap, C64};
use crate::loops::{loop_mass, Engine, LoopMassQuery, Root};
use crate::mc::{capacity_estimate, conformal_radius};
use crate::rng::RngStream;

/// Tail model of the renormalized sequence in `x = 1/log(1/r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    /// `Λ* + a x`.
    Linear,
    /// `Λ* + a x + b x²`.
    Quadratic,
}

/// Schedule of `L = log(1/r)` values with the extrapolation applied to its tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub logs: Vec<f64>,
    pub fit: FitModel,
    /// Number of trailing schedule points used by the fit.
    pub fit_points: usize,
}

impl Default for Schedule {
    /// `r_j = e^{−j}`, `j = 1..8`, linear fit on the last four points.
    fn default() -> Self {
        Schedule { logs: (1..=8).map(f64::from).collect(), fit: FitModel::Linear, fit_points: 4 }
    }
}

impl Schedule {
    /// `L = 2^j`, `j = 3..9`, quadratic fit on the last five points.
    pub fn deep() -> Self {
        Schedule { logs: (3..=9).map(|j| 2f64.powi(j)).collect(), fit: FitModel::Quadratic, fit_points: 5 }
    }

    /// The schedule shifted so that every radius stays below `r_max`.
    pub fn below(&self, r_max: f64) -> Self {
        let shift = (-r_max.ln() - self.logs[0]).max(0.0);
        Schedule { logs: self.logs.iter().map(|l| l + shift).collect(), ..self.clone() }
    }

    fn check(&self) -> Result<()> {
        let need = match self.fit {
            FitModel::Linear => 2,
            FitModel::Quadratic => 3,
        };
        if self.fit_points < need || self.fit_points > self.logs.len() {
            return Err(Error::InvalidInput(format!("fit needs {need}..={} points, got {}", self.logs.len(), self.fit_points)));
        }
        if !self.logs.windows(2).all(|w| w[1] > w[0]) || !(self.logs[0] > 0.0) {
            return Err(Error::InvalidInput("schedule logs must be positive and increasing".into()));
        }
        Ok(())
    }
}

/// One schedule point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// `L = log(1/r)` (or `log R` for the disk family).
    pub log_inv_r: f64,
    pub mass: Estimate,
    /// `mass − log L`.
    pub renormalized: f64,
}

/// Extrapolated limit with the table it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    pub value: f64,
    /// Slope of `log |renormalized − value|` against `log L`; `−1` for a `1/L` tail.
    pub residual_slope: f64,
    /// Fitted coefficient of `1/L`.
    pub tail_coefficient: f64,
    pub table: Vec<TableRow>,
    /// Combined error: statistical error of the fit plus the spread between neighbouring fits.
    pub error: f64,
    /// The renormalized sequence is monotone up to its errors.
    pub monotone: bool,
    /// Direction of the sequence when monotone.
    pub increasing: bool,
}

impl ExtrapolationResult {
    pub fn estimate(&self) -> Estimate {
        Estimate::exact(self.value, self.error)
    }
}

/// Family of domains whose limit defines `Λ*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Center {
    /// `𝒪_r(z)`, shrinking disks about `z`.
    Point(C64),
    /// `𝔻_R` about the origin, `R = 1/r → ∞`.
    Infinity,
}

impl From<ComplexPoint> for Center {
    fn from(p: ComplexPoint) -> Self {
        match p {
            ComplexPoint::Finite(z) => Center::Point(z),
            ComplexPoint::Infinity => Center::Infinity,
        }
    }
}

/// Least-squares fit of `y = Λ* + a x (+ b x²)`; returns coefficients and their standard errors.
fn fit_tail(xs: &[f64], ys: &[f64], sig: &[f64], model: FitModel) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = match model {
        FitModel::Linear => 2,
        FitModel::Quadratic => 3,
    };
    let n = xs.len();
    let floor = sig.iter().cloned().fold(0.0, f64::max).max(1e-15);
    let w: Vec<f64> = sig.iter().map(|s| 1.0 / s.max(floor * 1e-3)).collect();
    let a = DMatrix::from_fn(n, p, |i, j| xs[i].powi(j as i32) * w[i]);
    let b = DVector::from_fn(n, |i, _| ys[i] * w[i]);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-14).map_err(|e| Error::Linear(e.to_string()))?;
    let cov = (a.transpose() * &a).try_inverse().ok_or_else(|| Error::Linear("singular normal matrix".into()))?;
    let se = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    Ok((coef.iter().copied().collect(), se))
}

fn check_disjoint(sets: &[CompactSet]) -> Result<()> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if let (Some((ca, fa)), Some((cb, fb))) = (a.as_circle(), b.as_circle()) {
                let d = (ca.center - cb.center).norm();
                let nested_ok = (ca.radius > cb.radius && d + cb.radius < ca.radius && !fa) || (cb.radius > ca.radius && d + ca.radius < cb.radius && !fb);
                if !(d > ca.radius + cb.radius || nested_ok) {
                    return Err(Error::InvalidInput("sets must be pairwise disjoint".into()));
                }
            }
        }
    }
    Ok(())
}

fn engine_for(engine: Engine, center: Center) -> Engine {
    match (engine, center) {
        (Engine::Bubble { radial_nodes, samples, .. }, Center::Point(z)) => Engine::Bubble { root: Root::Closest(z), radial_nodes, samples },
        (Engine::Bubble { radial_nodes, samples, .. }, Center::Infinity) => Engine::Bubble { root: Root::Furthest(c64(0.0, 0.0)), radial_nodes, samples },
        (e, _) => e,
    }
}

/// Renormalized masses `Λ(V₁, …, V_k; D_L) − log L` on the schedule, extrapolated to `L → ∞`.
///
/// For a finite center the configuration is translated so the center sits at the origin, which
/// keeps very small radii representable.
pub fn renormalized_limit(sets: &[CompactSet], center: Center, schedule: &Schedule, engine: Engine, seed: u64) -> Result<ExtrapolationResult> {
    schedule.check()?;
    if sets.len() < 2 {
        return Err(Error::InvalidInput("Λ* needs at least two sets".into()));
    }
    check_disjoint(sets)?;
    let origin = c64(0.0, 0.0);
    let sets: Vec<CompactSet> = match center {
        Center::Point(z) => {
            if sets.iter().any(|s| s.distance(z) == 0.0) {
                return Err(Error::DomainViolation("the center must lie off the sets".into()));
            }
            sets.iter().map(|s| s.affine(1.0, -z)).collect::<Result<_>>()?
        }
        Center::Infinity => sets.to_vec(),
    };
    let reach = match center {
        Center::Point(_) => sets.iter().map(|s| s.distance(origin)).fold(f64::INFINITY, f64::min),
        Center::Infinity => 1.0 / sets.iter().map(|s| s.radius_about(origin)).fold(0.0, f64::max),
    };
    if !(-schedule.logs[0] < reach.ln()) {
        return Err(Error::DomainViolation(format!("first schedule radius e^−{} does not clear the sets (limit {reach:.4e})", schedule.logs[0])));
    }
    let engine = engine_for(engine, center);
    let mut table = Vec::new();
    for (j, &l) in schedule.logs.iter().enumerate() {
        let domain = match center {
            Center::Point(_) => Domain::ExteriorDisk { center: origin, radius: (-l).exp() },
            Center::Infinity => Domain::Disk { center: origin, radius: l.exp() },
        };
        let mass = loop_mass(&LoopMassQuery { sets: sets.clone(), domain, engine }, RngStream::new(seed, 0).child(j as u64).seed)?;
        table.push(TableRow { log_inv_r: l, mass, renormalized: mass.value - l.ln() });
    }
    extrapolate(table, schedule)
}

/// Fits the tail of a renormalized table.
pub fn extrapolate(table: Vec<TableRow>, schedule: &Schedule) -> Result<ExtrapolationResult> {
    let tail = &table[table.len() - schedule.fit_points..];
    let xs: Vec<f64> = tail.iter().map(|r| 1.0 / r.log_inv_r).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.renormalized).collect();
    let sig: Vec<f64> = tail.iter().map(|r| r.mass.stderr).collect();
    let (coef, se) = fit_tail(&xs, &ys, &sig, schedule.fit)?;
    let value = coef[0];
    // Spread against the same model on the window one point earlier, when there is one.
    let spread = if table.len() > schedule.fit_points {
        let prev = &table[table.len() - schedule.fit_points - 1..table.len() - 1];
        let xs: Vec<f64> = prev.iter().map(|r| 1.0 / r.log_inv_r).collect();
        let ys: Vec<f64> = prev.iter().map(|r| r.renormalized).collect();
        let sig: Vec<f64> = prev.iter().map(|r| r.mass.stderr).collect();
        (fit_tail(&xs, &ys, &sig, schedule.fit)?.0[0] - value).abs()
    } else {
        0.0
    };
    let stat = if sig.iter().all(|s| *s == 0.0) { 0.0 } else { se[0] };
    let error = stat + spread;

    // Decay rate of the residuals, over points that stand clear of the error.
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|r| (r.renormalized - value).abs() > 3.0 * (error + r.mass.stderr))
        .map(|r| (r.log_inv_r.ln(), (r.renormalized - value).abs().ln()))
        .collect();
    let residual_slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NEG_INFINITY
    };
    if residual_slope >= 0.0 {
        return Err(Error::TailNotDecaying(residual_slope));
    }

    let tol = |a: &TableRow, b: &TableRow| 2.0 * (a.mass.stderr + b.mass.stderr) + 1e-12;
    let up = table.windows(2).all(|w| w[1].renormalized >= w[0].renormalized - tol(&w[0], &w[1]));
    let down = table.windows(2).all(|w| w[1].renormalized <= w[0].renormalized + tol(&w[0], &w[1]));
    Ok(ExtrapolationResult { value, residual_slope, tail_coefficient: coef[1], table, error, monotone: up || down, increasing: up })
}

/// `Λ*(V₁, V₂)` with shrinking disks about the origin.
pub fn lambda_star(v1: &CompactSet, v2: &CompactSet, schedule: &Schedule, engine: Engine, seed: u64) -> Result<ExtrapolationResult> {
    lambda_star_centered(v1, v2, Center::Point(c64(0.0, 0.0)), schedule, engine, seed)
}

/// `Λ*(V₁, V₂)` along the family selected by `center`.
pub fn lambda_star_centered(v1: &CompactSet, v2: &CompactSet, center: Center, schedule: &Schedule, engine: Engine, seed: u64) -> Result<ExtrapolationResult> {
    renormalized_limit(&[v1.clone(), v2.clone()], center, schedule, engine, seed)
}

/// `|Λ*(f V₁, f V₂) − Λ*(V₁, V₂)|` with its combined error.
pub fn mobius_invariance_gap(v1: &CompactSet, v2: &CompactSet, f: &MobiusMap, schedule: &Schedule, engine: Engine, seed: u64) -> Result<Estimate> {
    let base = lambda_star(v1, v2, schedule, engine, seed)?;
    let (w1, w2) = (v1.mobius_image(f)?, v2.mobius_image(f)?);
    let moved = lambda_star(&w1, &w2, schedule, engine, RngStream::new(seed, 0).child(1).seed)?;
    Ok(Estimate::exact((moved.value - base.value).abs(), base.error + moved.error))
}

/// The bridging mass `Λ(V…, 𝔻̄_r; 𝒪_{αr}(z))`, which tends to `log 2` with a `c/log(1/r)` error.
/// `sets` lists the sets the loops must also hit (a single set, possibly a union, or several).
/// For the center `∞` the domain is `𝔻_{1/(αr)}`.
pub fn bridging_mass(sets: &[CompactSet], center: Center, r: f64, alpha: f64, engine: Engine, seed: u64) -> Result<Estimate> {
    if sets.is_empty() || !(r > 0.0 && alpha > 0.0) {
        return Err(Error::InvalidInput("bridging mass needs a set, r > 0 and α > 0".into()));
    }
    let origin = c64(0.0, 0.0);
    let domain = match center {
        Center::Point(z) => {
            if z.norm() <= (1.0 + alpha) * r {
                return Err(Error::InvalidInput("the two small disks must be disjoint".into()));
            }
            Domain::ExteriorDisk { center: z, radius: alpha * r }
        }
        Center::Infinity => Domain::Disk { center: origin, radius: 1.0 / (alpha * r) },
    };
    let engine = match center {
        Center::Point(z) => engine_for(engine, Center::Point(z)),
        Center::Infinity => engine_for(engine, Center::Infinity),
    };
    let mut all = sets.to_vec();
    all.push(CompactSet::ClosedDisk(Circle::new(origin, r)?));
    loop_mass(&LoopMassQuery { sets: all, domain, engine }, seed)
}

/// `Λ*(V₁, …, V_k)` through `Λ*(V₁, …, V_k) = Λ*(V₁, …, V_{k−1}) − Λ(V₁, …, V_{k−1}; ℂ ∖ V_k)`.
pub fn lambda_star_multi(sets: &[CompactSet], schedule: &Schedule, engine: Engine, seed: u64) -> Result<ExtrapolationResult> {
    match sets.len() {
        0 | 1 => Err(Error::InvalidInput("Λ* needs at least two sets".into())),
        2 => lambda_star(&sets[0], &sets[1], schedule, engine, seed),
        k => {
            let mut head = lambda_star_multi(&sets[..k - 1], schedule, engine, seed)?;
            let q = LoopMassQuery { sets: sets[..k - 1].to_vec(), domain: Domain::HullComplement(sets[k - 1].clone()), engine: engine_for(engine, Center::Point(c64(0.0, 0.0))) };
            let cut = loop_mass(&q, RngStream::new(seed, 0).child(k as u64).seed)?;
            head.value -= cut.value;
            head.error += cut.stderr;
            for row in &mut head.table {
                row.renormalized = f64::NAN;
            }
            Ok(head)
        }
    }
}

/// Measured `Λ*(K, ∂D)` and the prediction `−log log(1/(ψ′(0) t))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingComparison {
    pub measured: ExtrapolationResult,
    pub predicted: Estimate,
    /// `e^{ccap K}`.
    pub t: Estimate,
    /// `ψ′(0)`.
    pub psi_prime: Estimate,
}

/// Budget for the Monte Carlo pieces of [`annulus_crossing_lambda_star`] (used only when `K` or
/// `D` has no closed form).
pub const CROSSING_MC_SAMPLES: u64 = 20_000;

/// `Λ*(K, ∂D)` for a circle-type hull `K ∋ 0` inside a domain with `dist(0, ∂D) = 1`, measured
/// along the disk family (the center `∞` avoids `K`), with the predicted value.
pub fn annulus_crossing_lambda_star(k: &CompactSet, d: &Domain, schedule: &Schedule, engine: Engine, seed: u64) -> Result<CrossingComparison> {
    let origin = c64(0.0, 0.0);
    if k.distance(origin) > 0.0 && !matches!(k.as_circle(), Some((c, true)) if c.encloses(origin)) {
        return Err(Error::InvalidInput("the hull must contain the origin".into()));
    }
    if !d.contains(origin) || (d.boundary_distance(origin) - 1.0).abs() > 1e-9 {
        return Err(Error::DomainViolation("the domain must satisfy dist(0, ∂D) = 1".into()));
    }
    if k.radius_about(origin) >= 1.0 {
        return Err(Error::HullTouchesBoundary);
    }
    let boundary = d.boundary_set()?;
    let measured = lambda_star_centered(k, &boundary, Center::Infinity, schedule, engine, seed)?;
    let t = match k.as_circle() {
        Some((c, _)) => Estimate::exact(c.radius, 0.0),
        None => {
            let launch = 2.0 * k.radius_about(crate::mc::hull_anchor(k));
            let cap = capacity_estimate(k, CROSSING_MC_SAMPLES, RngStream::new(seed, 0).child(10).seed, launch)?;
            Estimate { value: cap.value.exp(), stderr: cap.value.exp() * cap.stderr, ..cap }
        }
    };
    let psi_prime = match d {
        Domain::Disk { center, radius } => Estimate::exact(radius / (radius * radius - center.norm_sqr()), 0.0),
        _ => {
            let c = conformal_radius(d, CROSSING_MC_SAMPLES, RngStream::new(seed, 0).child(11).seed)?;
            Estimate { value: 1.0 / c.value, stderr: c.stderr / (c.value * c.value), ..c }
        }
    };
    let q = psi_prime.value * t.value;
    let l = (1.0 / q).ln();
    let dq = (psi_prime.stderr / psi_prime.value + t.stderr / t.value).abs();
    let predicted = Estimate::exact(-l.ln(), dq / l);
    Ok(CrossingComparison { measured, predicted, t, psi_prime })
}
