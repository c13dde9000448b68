//! Least-squares harmonic solvers built from multipole and Laurent expansions.
//!
//! A solution is `u = Re F` with `F = Σ c_j h_j` for analytic (possibly multivalued) basis
//! functions `h_j`: powers `((z − a)/ρ)^{±n}`, logarithms `log(z − a)` and constants. The
//! coefficients are fitted to Dirichlet data at collocation points by a QR least-squares solve.
//! [`CircleRegion`] covers domains bounded by finitely many disjoint circles; [`LaurentSolver`]
//! covers doubly connected domains around a center, with arbitrary collocation curves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{c64, Circle, Domain, C64};

/// One analytic basis function.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Basis {
    /// `c` (complex constant, so `Re` and `Im` parts are both available).
    Const(C64),
    /// `w · ((z − a)/ρ)^n` for integer `n ≠ 0`.
    Pow { a: C64, rho: f64, n: i32, w: C64 },
    /// `log(z − a)`.
    Log { a: C64 },
    /// `log(z − a) − log(z − b)`.
    LogDiff { a: C64, b: C64 },
}

impl Basis {
    fn value(&self, z: C64) -> (C64, C64) {
        match *self {
            Basis::Const(c) => (c, c64(0.0, 0.0)),
            Basis::Pow { a, rho, n, w } => {
                let x = (z - a) / rho;
                let p = x.powi(n);
                (w * p, w * p * (n as f64) / (z - a))
            }
            Basis::Log { a } => ((z - a).ln(), 1.0 / (z - a)),
            Basis::LogDiff { a, b } => ((z - a).ln() - (z - b).ln(), 1.0 / (z - a) - 1.0 / (z - b)),
        }
    }

    /// Real part of the basis function (single-valued for logarithms).
    fn re(&self, z: C64) -> f64 {
        match *self {
            Basis::Log { a } => (z - a).norm().ln(),
            Basis::LogDiff { a, b } => ((z - a).norm() / (z - b).norm()).ln(),
            _ => self.value(z).0.re,
        }
    }
}

/// Fitted harmonic function `u = Re F`.
#[derive(Clone, Debug)]
pub struct HarmonicFit {
    basis: Vec<Basis>,
    coeffs: Vec<f64>,
}

impl HarmonicFit {
    pub fn value(&self, z: C64) -> f64 {
        self.basis.iter().zip(&self.coeffs).map(|(b, c)| c * b.re(z)).sum()
    }

    /// Complex derivative `F′(z)`; the gradient of `u` is `conj(F′)`.
    pub fn derivative(&self, z: C64) -> C64 {
        self.basis.iter().zip(&self.coeffs).map(|(b, c)| b.value(z).1 * *c).sum()
    }

    /// Coefficient of `log |z − a|` for the logarithm centered at `a` (flux `2π` times it).
    pub fn log_coefficient(&self, a: C64) -> f64 {
        self.basis
            .iter()
            .zip(&self.coeffs)
            .map(|(b, c)| match *b {
                Basis::Log { a: x } if x == a => *c,
                Basis::LogDiff { a: x, .. } if x == a => *c,
                Basis::LogDiff { b: x, .. } if x == a => -*c,
                _ => 0.0,
            })
            .sum()
    }
}

/// Least-squares system: scaled collocation matrix with its QR factors.
#[derive(Clone, Debug)]
struct LsqSystem {
    basis: Vec<Basis>,
    scale: Vec<f64>,
    qt: DMatrix<f64>,
    r: DMatrix<f64>,
    points: Vec<C64>,
}

impl LsqSystem {
    fn new(basis: Vec<Basis>, points: Vec<C64>) -> Result<Self> {
        let (m, p) = (points.len(), basis.len());
        if m < p {
            return Err(Error::SolverUnstable(format!("{m} collocation points for {p} unknowns")));
        }
        let mut a = DMatrix::<f64>::zeros(m, p);
        for (j, b) in basis.iter().enumerate() {
            for (i, &z) in points.iter().enumerate() {
                a[(i, j)] = b.re(z);
            }
        }
        let mut scale = vec![1.0; p];
        for j in 0..p {
            let s = a.column(j).amax();
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::SolverUnstable(format!("basis column {j} vanishes or overflows on the collocation set")));
            }
            scale[j] = 1.0 / s;
            a.column_mut(j).scale_mut(scale[j]);
        }
        let qr = a.qr();
        let r = qr.r();
        let dmax = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let dmin = (0..p).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if !(dmin > 1e-13 * dmax) {
            return Err(Error::SolverUnstable(format!("collocation matrix is rank deficient (diagonal ratio {:.2e})", dmin / dmax)));
        }
        Ok(LsqSystem { basis, scale, qt: qr.q().transpose(), r, points })
    }

    /// Fits each column of `data` (one row per collocation point).
    fn solve(&self, data: &DMatrix<f64>) -> Result<Vec<HarmonicFit>> {
        let rhs = &self.qt * data;
        let sol = self.r.solve_upper_triangular(&rhs).ok_or_else(|| Error::Linear("singular triangular factor".into()))?;
        Ok((0..data.ncols())
            .map(|k| HarmonicFit { basis: self.basis.clone(), coeffs: (0..self.basis.len()).map(|j| sol[(j, k)] * self.scale[j]).collect() })
            .collect())
    }
}

/// Region bounded by disjoint circles: inside `outer` (if any) and outside every hole.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleRegion {
    pub outer: Option<Circle>,
    pub holes: Vec<Circle>,
}

impl CircleRegion {
    /// The connected component of the complement of `circles` that contains `x`.
    pub fn component(circles: &[Circle], x: C64) -> Result<CircleRegion> {
        for (i, a) in circles.iter().enumerate() {
            if a.distance(x) == 0.0 {
                return Err(Error::DomainViolation("reference point lies on a boundary circle".into()));
            }
            for b in &circles[i + 1..] {
                if !a.disjoint(b) {
                    return Err(Error::InvalidInput(format!("circles {a:?} and {b:?} intersect")));
                }
            }
        }
        let outer = circles.iter().filter(|c| c.encloses(x)).min_by(|a, b| a.radius.partial_cmp(&b.radius).unwrap()).copied();
        let outside: Vec<Circle> = circles.iter().filter(|c| !c.encloses(x)).filter(|c| outer.is_none_or(|o| o.encloses_circle(c))).copied().collect();
        let holes = outside.iter().filter(|c| !outside.iter().any(|d| d != *c && d.encloses_circle(c))).copied().collect();
        Ok(CircleRegion { outer, holes })
    }

    /// All boundary circles, outer first.
    pub fn boundary(&self) -> Vec<Circle> {
        self.outer.iter().copied().chain(self.holes.iter().copied()).collect()
    }

    pub fn contains(&self, z: C64) -> bool {
        self.outer.is_none_or(|o| o.encloses(z)) && self.holes.iter().all(|h| !h.encloses(z) && h.distance(z) > 0.0)
    }
}

/// Boundary circles of a circle-bounded domain.
pub fn domain_circles(domain: &Domain) -> Result<Vec<Circle>> {
    use crate::geometry::CompactSet;
    fn set_circles(s: &CompactSet, out: &mut Vec<Circle>) -> Result<()> {
        match s {
            CompactSet::Circle(c) | CompactSet::ClosedDisk(c) => out.push(*c),
            CompactSet::Union(v) => {
                for x in v {
                    set_circles(x, out)?;
                }
            }
            _ => return Err(Error::Unsupported("deterministic solver needs circle boundaries".into())),
        }
        Ok(())
    }
    let mut out = Vec::new();
    match domain {
        Domain::Disk { center, radius } | Domain::ExteriorDisk { center, radius } => out.push(Circle::new(*center, *radius)?),
        Domain::Annulus { inner, outer } => {
            out.push(Circle::new(c64(0.0, 0.0), *inner)?);
            out.push(Circle::new(c64(0.0, 0.0), *outer)?);
        }
        Domain::HullComplement(k) => set_circles(k, &mut out)?,
        Domain::Intersection(list) => {
            for d in list {
                out.extend(domain_circles(d)?);
            }
        }
        _ => return Err(Error::Unsupported("deterministic solver needs circle boundaries".into())),
    }
    Ok(out)
}

/// Multipole least-squares solver for the Dirichlet problem on a [`CircleRegion`].
#[derive(Clone, Debug)]
pub struct CircleSolver {
    pub region: CircleRegion,
    circles: Vec<Circle>,
    /// Collocation angles per boundary circle (same order as `region.boundary()`).
    angles: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    system: LsqSystem,
}

/// Multipole order needed on circle `k` for relative accuracy `tol`.
fn multipole_order(circles: &[Circle], k: usize, outer: bool, tol: f64) -> usize {
    let c = circles[k];
    let mut ratio: f64 = 0.0;
    for (j, o) in circles.iter().enumerate() {
        if j == k {
            continue;
        }
        let d = (o.center - c.center).norm();
        let q = if outer { (d + o.radius) / c.radius } else { c.radius / (d - o.radius).max(1e-300) };
        ratio = ratio.max(q.abs());
    }
    if ratio <= 0.0 {
        return 4;
    }
    // Images of one circle in another contract the ratio by roughly a square.
    let n = (tol.ln() / ratio.min(0.999).ln()).ceil() as usize;
    n.clamp(4, 96)
}

impl CircleSolver {
    /// Builds a solver for `region` with target relative accuracy `tol`.
    pub fn new(region: CircleRegion, tol: f64) -> Result<Self> {
        Self::with_data_modes(region, tol, 0)
    }

    /// Like [`CircleSolver::new`], sized for boundary data with Fourier content up to `data_modes`.
    pub fn with_data_modes(region: CircleRegion, tol: f64, data_modes: usize) -> Result<Self> {
        let circles = region.boundary();
        if circles.is_empty() {
            return Err(Error::InvalidInput("region has no boundary".into()));
        }
        let has_outer = region.outer.is_some();
        let mut basis = vec![Basis::Const(c64(1.0, 0.0))];
        let mut orders = Vec::new();
        for (k, c) in circles.iter().enumerate() {
            let outer = has_outer && k == 0;
            let n = multipole_order(&circles, k, outer, tol) + data_modes;
            orders.push(n);
            for m in 1..=n as i32 {
                let e = if outer { m } else { -m };
                basis.push(Basis::Pow { a: c.center, rho: c.radius, n: e, w: c64(1.0, 0.0) });
                basis.push(Basis::Pow { a: c.center, rho: c.radius, n: e, w: c64(0.0, -1.0) });
            }
        }
        let holes = &region.holes;
        if has_outer {
            for h in holes {
                basis.push(Basis::Log { a: h.center });
            }
        } else {
            for h in holes.iter().skip(1) {
                basis.push(Basis::LogDiff { a: h.center, b: holes[0].center });
            }
        }
        let mut angles = Vec::new();
        let mut offsets = Vec::new();
        let mut points = Vec::new();
        for (k, c) in circles.iter().enumerate() {
            let m = 4 * orders[k] + 8;
            let a: Vec<f64> = (0..m).map(|i| std::f64::consts::TAU * (i as f64 + 0.5) / m as f64).collect();
            offsets.push(points.len());
            points.extend(a.iter().map(|&t| c.point_at(t)));
            angles.push(a);
        }
        let system = LsqSystem::new(basis, points)?;
        Ok(CircleSolver { region, circles, angles, offsets, system })
    }

    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    /// Collocation angles on boundary circle `k`.
    pub fn angles(&self, k: usize) -> &[f64] {
        &self.angles[k]
    }

    /// Solves with boundary data `g(k, θ)` on circle `k` at angle `θ`, for several data sets at once.
    pub fn solve_many(&self, count: usize, g: impl Fn(usize, usize, f64) -> f64) -> Result<Vec<HarmonicFit>> {
        let m = self.system.points.len();
        let mut data = DMatrix::<f64>::zeros(m, count);
        for (k, a) in self.angles.iter().enumerate() {
            for (i, &t) in a.iter().enumerate() {
                for j in 0..count {
                    data[(self.offsets[k] + i, j)] = g(j, k, t);
                }
            }
        }
        self.system.solve(&data)
    }

    pub fn solve(&self, g: impl Fn(usize, f64) -> f64) -> Result<HarmonicFit> {
        Ok(self.solve_many(1, |_, k, t| g(k, t))?.remove(0))
    }

    /// Largest boundary-data mismatch of `fit` at points midway between collocation nodes.
    pub fn residual(&self, fit: &HarmonicFit, g: impl Fn(usize, f64) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, a) in self.angles.iter().enumerate() {
            let h = std::f64::consts::TAU / a.len() as f64;
            for &t in a {
                let tt = t + 0.5 * h;
                worst = worst.max((fit.value(self.circles[k].point_at(tt)) - g(k, tt)).abs());
            }
        }
        worst
    }
}

/// Laurent least-squares solver about a center, for doubly connected regions whose boundary
/// curves are given by collocation points.
#[derive(Clone, Debug)]
pub struct LaurentSolver {
    center: C64,
    system: LsqSystem,
}

impl LaurentSolver {
    /// Basis `1, log|z − c|, ((z − c)/ρ_out)^n, (ρ_in/(z − c))^n` for `n ≤ order`; collocation
    /// at `points`.
    pub fn new(center: C64, rho_in: f64, rho_out: f64, order: usize, points: Vec<C64>) -> Result<Self> {
        let mut basis = vec![Basis::Const(c64(1.0, 0.0)), Basis::Log { a: center }];
        for m in 1..=order as i32 {
            for (rho, e) in [(rho_out, m), (rho_in, -m)] {
                basis.push(Basis::Pow { a: center, rho, n: e, w: c64(1.0, 0.0) });
                basis.push(Basis::Pow { a: center, rho, n: e, w: c64(0.0, -1.0) });
            }
        }
        Ok(LaurentSolver { center, system: LsqSystem::new(basis, points)? })
    }

    /// Fits one harmonic function per column of `data` (rows follow the collocation points).
    pub fn solve(&self, data: &DMatrix<f64>) -> Result<Vec<HarmonicFit>> {
        self.system.solve(data)
    }

    pub fn points(&self) -> &[C64] {
        &self.system.points
    }

    pub fn center(&self) -> C64 {
        self.center
    }
}

/// Real Fourier coefficients `[a_0, a_1, b_1, …, a_K, b_K]` of samples on an equispaced grid of
/// angles `(i + ½)·2π/m`.
pub fn fourier_coefficients(samples: &[f64], modes: usize) -> DVector<f64> {
    let m = samples.len();
    let mut out = DVector::zeros(2 * modes + 1);
    for (i, &v) in samples.iter().enumerate() {
        let t = std::f64::consts::TAU * (i as f64 + 0.5) / m as f64;
        out[0] += v / m as f64;
        for k in 1..=modes {
            let (s, c) = (k as f64 * t).sin_cos();
            out[2 * k - 1] += 2.0 * v * c / m as f64;
            out[2 * k] += 2.0 * v * s / m as f64;
        }
    }
    out
}

/// Value of real Fourier mode `j` (ordering as in [`fourier_coefficients`]) at angle `t`.
pub fn fourier_mode(j: usize, t: f64) -> f64 {
    if j == 0 {
        1.0
    } else {
        let k = j.div_ceil(2) as f64;
        if j % 2 == 1 {
            (k * t).cos()
        } else {
            (k * t).sin()
        }
    }
}
