//! Closed-form harmonic measures, Poisson kernels and excursion measures in canonical domains.
//!
//! Conventions: `h_D(z, w)` is the density of harmonic measure from `z` with respect to arc
//! length at the boundary point `w`; `exc_D(z, V)` is the inward normal derivative of `h_D(·, V)`
//! at the boundary point `z`; `h_{∂D}(z, w)` is the boundary Poisson kernel, the inward normal
//! derivative of `h_D(·, w)` at `z`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::C64;

/// Tolerance for the `|w| = 1` precondition.
const ON_CIRCLE: f64 = 1e-9;

/// Density or probability value of a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
}

/// Which circle of an annulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Inner,
    Outer,
}

/// Poisson kernel of the unit disk: `(1 − |z|²) / (2π |z − w|²)`.
pub fn poisson_disk(z: C64, w: C64) -> Result<KernelValue> {
    if !(z.norm() < 1.0) {
        return Err(Error::DomainViolation(format!("poisson_disk needs |z| < 1, got |z| = {}", z.norm())));
    }
    if (w.norm() - 1.0).abs() > ON_CIRCLE {
        return Err(Error::DomainViolation(format!("poisson_disk needs |w| = 1, got |w| = {}", w.norm())));
    }
    Ok(KernelValue { value: (1.0 - z.norm_sqr()) / (TAU * (z - w).norm_sqr()) })
}

/// Poisson kernel of the exterior of the unit disk: `(|z|² − 1) / (2π |z − w|²)`.
///
/// Satisfies `|2π h(z, w) − 1| ≤ 4/|z|` for `|z| ≥ 2`.
pub fn poisson_exterior(z: C64, w: C64) -> Result<KernelValue> {
    if !(z.norm() > 1.0) {
        return Err(Error::DomainViolation(format!("poisson_exterior needs |z| > 1, got |z| = {}", z.norm())));
    }
    if (w.norm() - 1.0).abs() > ON_CIRCLE {
        return Err(Error::DomainViolation(format!("poisson_exterior needs |w| = 1, got |w| = {}", w.norm())));
    }
    Ok(KernelValue { value: (z.norm_sqr() - 1.0) / (TAU * (z - w).norm_sqr()) })
}

/// Explicit constant in the exterior-kernel bound `|2π h_𝒪(z, w) − 1| ≤ C/|z|`, valid for `|z| ≥ 2`.
pub const EXTERIOR_BOUND: f64 = 4.0;

/// Poisson kernel of the disk `{|z − center| < radius}` at the boundary point `w`.
pub fn poisson_disk_at(center: C64, radius: f64, z: C64, w: C64) -> Result<KernelValue> {
    let k = poisson_disk((z - center) / radius, (w - center) / radius)?;
    Ok(KernelValue { value: k.value / radius })
}

/// Poisson kernel of the exterior `{|z − center| > radius}` at the boundary point `w`.
pub fn poisson_exterior_at(center: C64, radius: f64, z: C64, w: C64) -> Result<KernelValue> {
    let k = poisson_exterior((z - center) / radius, (w - center) / radius)?;
    Ok(KernelValue { value: k.value / radius })
}

/// Poisson kernel of the upper half-plane: `Im z / (π |z − x|²)`.
pub fn poisson_half_plane(z: C64, x: f64) -> Result<KernelValue> {
    if !(z.im > 0.0) {
        return Err(Error::DomainViolation("poisson_half_plane needs Im z > 0".into()));
    }
    Ok(KernelValue { value: z.im / (std::f64::consts::PI * (z - C64::new(x, 0.0)).norm_sqr()) })
}

/// Harmonic measure of one boundary circle of `A_{r,R}` seen from `z`.
pub fn harm_annulus(z: C64, r: f64, big_r: f64, side: Side) -> Result<KernelValue> {
    check_annulus(r, big_r)?;
    let m = z.norm();
    if !(m > r && m < big_r) {
        return Err(Error::DomainViolation(format!("harm_annulus needs {r} < |z| < {big_r}, got {m}")));
    }
    let outer = (m / r).ln() / (big_r / r).ln();
    Ok(KernelValue { value: if side == Side::Outer { outer } else { 1.0 - outer } })
}

/// Which boundary point an annulus excursion starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExcursionStart {
    /// From a point of the inner circle to the whole outer circle.
    InnerPoint,
    /// From a point of the outer circle to the whole inner circle.
    OuterPoint,
}

/// Excursion measure in `A_{r,R}` from a point of one circle to the whole opposite circle.
pub fn exc_annulus(which: ExcursionStart, r: f64, big_r: f64) -> Result<KernelValue> {
    check_annulus(r, big_r)?;
    let l = (big_r / r).ln();
    Ok(KernelValue {
        value: match which {
            ExcursionStart::InnerPoint => 1.0 / (r * l),
            ExcursionStart::OuterPoint => 1.0 / (big_r * l),
        },
    })
}

/// Leading-order boundary Poisson kernel between the circles of `A_R = A_{1,R}`:
/// returns `1/(2π R log R)` and the error band `C/R²`.
pub fn boundary_poisson_annulus_asym(big_r: f64) -> Result<(KernelValue, f64)> {
    if !(big_r >= 2.0) || !big_r.is_finite() {
        return Err(Error::DomainViolation(format!("asymptotic annulus kernel needs R ≥ 2, got {big_r}")));
    }
    Ok((KernelValue { value: 1.0 / (TAU * big_r * big_r.ln()) }, ANNULUS_ASYM_CONSTANT / (big_r * big_r)))
}

/// Constant of the `C/R²` band of [`boundary_poisson_annulus_asym`], fitted against the exact
/// series: `R² sup_φ |h − 1/(2πR log R)|` decreases in `R` from about 2.77 at `R = 2` to `2/π`.
pub const ANNULUS_ASYM_CONSTANT: f64 = 3.0;

/// Exact boundary Poisson kernel of `A_R = A_{1,R}` from `1` to `R e^{iφ}`:
/// `(1/2πR) [1/log R + Σ_{n≥1} 4n cos(nφ) / (R^n − R^{−n})]`.
pub fn boundary_poisson_annulus(big_r: f64, phi: f64) -> Result<KernelValue> {
    check_annulus(1.0, big_r)?;
    let l = big_r.ln();
    let mut sum = 1.0 / l;
    let mut rn = 1.0;
    for n in 1.. {
        rn *= big_r;
        let term = 4.0 * n as f64 / (rn - 1.0 / rn);
        sum += term * (n as f64 * phi).cos();
        if term < 1e-17 * sum.abs().max(1e-300) || n > 1_000_000 {
            break;
        }
    }
    Ok(KernelValue { value: sum / (TAU * big_r) })
}

/// Exact boundary Poisson kernel of `A_{r,R}` between `z` on `C_r` and `w` on `C_R`.
pub fn boundary_poisson_annulus_between(r: f64, big_r: f64, z: C64, w: C64) -> Result<KernelValue> {
    check_annulus(r, big_r)?;
    if (z.norm() - r).abs() > ON_CIRCLE * r || (w.norm() - big_r).abs() > ON_CIRCLE * big_r {
        return Err(Error::DomainViolation("points must lie on the inner and outer circles".into()));
    }
    let k = boundary_poisson_annulus(big_r / r, w.arg() - z.arg())?;
    Ok(KernelValue { value: k.value / (r * r) })
}

/// The bubble mass `ρ(R) = m(1; 𝒪, A_R)` in closed form:
/// `1/(2 log R) + 2 Σ_{n≥1} n/(R^{2n} − 1)`.
pub fn rho_series(big_r: f64) -> Result<f64> {
    check_annulus(1.0, big_r)?;
    let r2 = big_r * big_r;
    let mut sum = 0.0;
    let mut p = 1.0;
    for n in 1.. {
        p *= r2;
        let term = n as f64 / (p - 1.0);
        sum += term;
        if term < 1e-18 * sum || n > 1_000_000 {
            break;
        }
    }
    Ok(1.0 / (2.0 * big_r.ln()) + 2.0 * sum)
}

fn check_annulus(r: f64, big_r: f64) -> Result<()> {
    if !(r > 0.0 && big_r > r && big_r.is_finite()) {
        return Err(Error::DomainViolation(format!("annulus needs 0 < r < R, got r={r}, R={big_r}")));
    }
    Ok(())
}
