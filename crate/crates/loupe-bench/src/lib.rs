//! Shared fixtures for the criterion benchmarks.

use loupe_core::geometry::{c64, CompactSet, Domain};

/// The two concentric circles `C₁` and `C₁₀₀`.
pub fn concentric_pair() -> (CompactSet, CompactSet) {
    (CompactSet::circle(0.0, 0.0, 1.0).unwrap(), CompactSet::circle(0.0, 0.0, 100.0).unwrap())
}

/// The annulus `{1 < |z| < 10}`.
pub fn unit_annulus() -> Domain {
    Domain::annulus(1.0, 10.0).unwrap()
}

/// The exterior of the disk of radius `0.01` at the origin.
pub fn small_exterior() -> Domain {
    Domain::ExteriorDisk { center: c64(0.0, 0.0), radius: 0.01 }
}
