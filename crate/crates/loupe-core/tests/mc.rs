mod common;

use std::f64::consts::{PI, TAU};

use loupe_core::geometry::{Arc, Circle};
use loupe_core::kernels::{exc_annulus, harm_annulus, ExcursionStart, Side};
use loupe_core::mc::{capacity_estimate, conformal_radius, excursion_estimate, hitting_prob, run_blocks, wos_exit_sample, Walker};
use loupe_core::{c64, CompactSet, Domain, RngStream, C64};

fn square() -> Domain {
    Domain::polygon(vec![c64(-1.0, -1.0), c64(1.0, -1.0), c64(1.0, 1.0), c64(-1.0, 1.0)]).unwrap()
}

#[test]
fn disk_exit_angle_is_uniform() {
    let d = Domain::unit_disk();
    let walker = Walker::new(&d, 1e-6).unwrap();
    let n = 100_000;
    let mut rng = RngStream::new(17, 0).rng();
    let xs: Vec<f64> = (0..n).map(|_| walker.exit(c64(0.0, 0.0), &mut rng).unwrap().arg().rem_euclid(TAU) / TAU).collect();
    let p = common::ks_pvalue(common::ks_uniform(xs), n);
    assert!(p > 0.01, "KS p-value {p}");
}

#[test]
fn annulus_outer_fraction_matches_log_ratio() {
    let d = Domain::annulus(1.0, 10.0).unwrap();
    let v = CompactSet::circle(0.0, 0.0, 10.0).unwrap();
    let h = hitting_prob(&d, c64(2.0, 0.0), &v, 100_000, 2).unwrap();
    let exact = harm_annulus(c64(2.0, 0.0), 1.0, 10.0, Side::Outer).unwrap().value;
    assert!(h.within(exact, 3.0, 0.0), "{h:?} vs {exact}");
    assert!(h.stderr < 2e-3);
}

#[test]
fn single_exit_samples_lie_on_the_boundary() {
    let d = Domain::annulus(1.0, 10.0).unwrap();
    for k in 0..50 {
        let p = wos_exit_sample(&d, c64(0.0, 3.0), 1e-6, RngStream::new(8, k)).unwrap();
        assert!((p.norm() - 1.0).abs() < 1e-12 || (p.norm() - 10.0).abs() < 1e-12);
    }
}

#[test]
fn square_exit_distribution_matches_grid_walk() {
    // Discrete harmonic measure of each side from z on a mesh-1/256 grid; the other three
    // sides follow from the square's rotation symmetry evaluated at rotated points.
    let n = 512;
    let u = common::square_dirichlet(n, |x, y| {
        if (x - 1.0).abs() < 1e-12 && y.abs() < 1.0 - 1e-12 {
            1.0
        } else if (x - 1.0).abs() < 1e-12 {
            0.5
        } else {
            0.0
        }
    });
    let z = c64(0.25, 0.125);
    let d = square();
    let walker = Walker::new(&d, 1e-7).unwrap();
    for side in 0..4 {
        // Rotating the configuration by −90°·side sends this side to x = 1.
        let w = z * C64::from_polar(1.0, -PI / 2.0 * side as f64);
        let oracle = u[common::grid_index(n, w.re)][common::grid_index(n, w.im)];
        let est = run_blocks(100_000, 4, |rng| {
            let p = walker.exit(z, rng)?;
            let s = if p.re > 1.0 - 1e-6 { 0 } else if p.im > 1.0 - 1e-6 { 1 } else if p.re < -1.0 + 1e-6 { 2 } else { 3 };
            Ok(if s == side { 1.0 } else { 0.0 })
        })
        .unwrap();
        assert!(est.within(oracle, 3.0, 0.0), "side {side}: {est:?} vs grid {oracle}");
    }
}

#[test]
fn two_disk_complement_hitting_matches_log_ratio() {
    // D_{s,r} = 𝒪_s ∩ 𝒪_r(1/2) with s = 1e−3, r = 1e−2, started at |w| = 1.
    let (s, r) = (1e-3, 1e-2);
    let d = Domain::Intersection(vec![Domain::exterior(0.0, 0.0, s).unwrap(), Domain::exterior(0.5, 0.0, r).unwrap()]);
    let v = CompactSet::circle(0.0, 0.0, s).unwrap();
    let h = hitting_prob(&d, c64(0.0, 1.0), &v, 20_000, 5).unwrap();
    let ratio = h.value * (r * s).ln() / r.ln();
    // Band c/log(1/r) with the constant fitted as 1.
    assert!((ratio - 1.0).abs() <= 1.0 / (1.0 / r).ln() + 3.0 * h.stderr * (r * s).ln() / r.ln(), "ratio {ratio}");
}

#[test]
fn excursion_measure_in_annulus() {
    let d = Domain::annulus(1.0, 10.0).unwrap();
    let outer = CompactSet::circle(0.0, 0.0, 10.0).unwrap();
    let inner = CompactSet::circle(0.0, 0.0, 1.0).unwrap();
    let a = excursion_estimate(&d, c64(1.0, 0.0), c64(1.0, 0.0), &outer, &[0.02, 0.01], 200_000, 6).unwrap().extrapolated;
    let exact = exc_annulus(ExcursionStart::InnerPoint, 1.0, 10.0).unwrap().value;
    assert!(a.within(exact, 3.0, 0.0), "{a:?} vs {exact}");
    let b = excursion_estimate(&d, c64(10.0, 0.0), c64(-1.0, 0.0), &inner, &[0.2, 0.1], 200_000, 7).unwrap().extrapolated;
    let exact = exc_annulus(ExcursionStart::OuterPoint, 1.0, 10.0).unwrap().value;
    assert!(b.within(exact, 3.0, 0.0), "{b:?} vs {exact}");
}

#[test]
fn excursion_measure_is_covariant_under_dilation() {
    // exc_{2𝔻}(2, 2·arc) = exc_𝔻(1, arc)/2.
    let arc = Arc::new(Circle::new(c64(0.0, 0.0), 1.0).unwrap(), 2.0, 2.0).unwrap();
    let arc2 = Arc::new(Circle::new(c64(0.0, 0.0), 2.0).unwrap(), 2.0, 2.0).unwrap();
    let one = excursion_estimate(&Domain::unit_disk(), c64(1.0, 0.0), c64(-1.0, 0.0), &CompactSet::Arc(arc), &[0.02, 0.01], 200_000, 8).unwrap().extrapolated;
    let two = excursion_estimate(&Domain::disk(0.0, 0.0, 2.0).unwrap(), c64(2.0, 0.0), c64(-1.0, 0.0), &CompactSet::Arc(arc2), &[0.04, 0.02], 200_000, 9).unwrap().extrapolated;
    let diff = one.affine(0.5, 0.0).sub(&two);
    assert!(diff.within(0.0, 3.0, 0.0), "{diff:?}");
    // Closed form on the unit disk: ∫_arc (1/π)|dw|/|1 − w|² ... checked through the Poisson
    // kernel's normal derivative 1/(π |1 − w|²).
    let exact = loupe_core::quad::integrate(|t| 1.0 / (PI * (c64(1.0, 0.0) - C64::from_polar(1.0, t)).norm_sqr()), 2.0, 4.0, 1e-12).unwrap().value;
    assert!(one.within(exact, 3.0, 0.0), "{one:?} vs {exact}");
}

#[test]
fn excursion_rejects_short_ladder() {
    let d = Domain::unit_disk();
    let v = CompactSet::circle(0.0, 0.0, 1.0).unwrap();
    assert!(excursion_estimate(&d, c64(1.0, 0.0), c64(-1.0, 0.0), &v, &[0.1], 10, 1).is_err());
}

#[test]
fn conformal_radius_of_disks() {
    let two = conformal_radius(&Domain::disk(0.0, 0.0, 2.0).unwrap(), 20_000, 10).unwrap();
    assert!((two.value - 0.5).abs() < 1e-5, "{two:?}");
    let one = conformal_radius(&Domain::unit_disk(), 20_000, 11).unwrap();
    assert!((one.value - 1.0).abs() < 1e-5, "{one:?}");
    let off = conformal_radius(&Domain::disk(0.3, 0.0, 1.3).unwrap(), 100_000, 12).unwrap();
    // Disk automorphism: ψ′(0) = R/(R² − |c|²).
    assert!(off.within(1.3 / (1.69 - 0.09), 3.0, 0.0), "{off:?}");
}

#[test]
fn conformal_radius_of_square_matches_grid_solver() {
    let n = 512;
    let u = common::square_dirichlet(n, |x, y| (x * x + y * y).sqrt().ln());
    let mid = common::grid_index(n, 0.0);
    let oracle = (-u[mid][mid]).exp();
    let est = conformal_radius(&square(), 100_000, 13).unwrap();
    assert!(est.within(oracle, 3.0, 2e-4), "{est:?} vs grid {oracle}");
    // Dilation covariance: ψ′ of 2·square is half.
    let big = conformal_radius(&square().affine(2.0, c64(0.0, 0.0)).unwrap(), 100_000, 14).unwrap();
    assert!(big.affine(2.0, 0.0).sub(&est).within(0.0, 3.0, 0.0), "{big:?} {est:?}");
}

#[test]
fn capacity_of_disk_and_segment() {
    let t: f64 = 0.05;
    let disk = capacity_estimate(&CompactSet::closed_disk(0.0, 0.0, t).unwrap(), 20_000, 15, 4.0 * t).unwrap();
    assert!(disk.within(t.ln(), 3.0, 1e-9), "{disk:?}");
    let seg = capacity_estimate(&CompactSet::segment(c64(-2.0, 0.0), c64(2.0, 0.0)).unwrap(), 100_000, 16, 5.0).unwrap();
    assert!(seg.within(0.0, 3.0, 0.0) && seg.value.abs() < 0.01, "{seg:?}");
}

#[test]
fn hull_radius_lies_between_t_and_4t() {
    for (k, verts) in [
        vec![c64(0.0, 0.0), c64(0.3, 0.0)],
        vec![c64(0.0, 0.0), c64(0.1, 0.1), c64(0.0, 0.2), c64(-0.1, 0.25)],
        vec![c64(0.0, 0.0), c64(0.2, 0.0), c64(0.2, 0.2)],
    ]
    .into_iter()
    .enumerate()
    {
        let hull = CompactSet::Hull(loupe_core::PolyCurve::new(verts, None).unwrap());
        let cap = capacity_estimate(&hull, 20_000, 20 + k as u64, 3.0).unwrap();
        let rad = hull.radius_about(c64(0.0, 0.0));
        let (lo, hi) = ((cap.value - 3.0 * cap.stderr).exp(), (cap.value + 3.0 * cap.stderr).exp());
        assert!(rad >= lo && rad <= 4.0 * hi, "rad {rad} vs t ∈ [{lo}, {hi}]");
    }
}

#[test]
fn small_circle_hitting_decays_like_inverse_log() {
    // h_{D_r}(z, C_r) for D = 𝔻_2, z = 1: exactly log 2 / log(2/r); the fitted constant of the
    // c/log(1/r) bound is stable over the ladder.
    let mut constants = Vec::new();
    for (k, r) in [1e-2f64, 1e-3, 1e-4].into_iter().enumerate() {
        let d = Domain::Intersection(vec![Domain::disk(0.0, 0.0, 2.0).unwrap(), Domain::exterior(0.0, 0.0, r).unwrap()]);
        let h = hitting_prob(&d, c64(1.0, 0.0), &CompactSet::circle(0.0, 0.0, r).unwrap(), 40_000, 30 + k as u64).unwrap();
        assert!(h.within(2f64.ln() / (2.0 / r).ln(), 3.0, 0.0), "r={r}: {h:?}");
        constants.push(h.value * (1.0 / r).ln());
    }
    let (lo, hi) = constants.iter().fold((f64::INFINITY, 0.0f64), |a, &c| (a.0.min(c), a.1.max(c)));
    assert!(hi / lo < 1.3, "{constants:?}");
}

#[test]
fn small_circle_hitting_sandwich() {
    // D = square (−1.5, 1.5)² ⊃ 𝔻; the lower bound log r/log s and the inflated upper bound.
    let d = Domain::polygon(vec![c64(-1.5, -1.5), c64(1.5, -1.5), c64(1.5, 1.5), c64(-1.5, 1.5)]).unwrap();
    let half = Domain::Intersection(vec![d.clone(), Domain::exterior(0.0, 0.0, 0.5).unwrap()]);
    let p = (0..8)
        .map(|k| {
            let w = C64::from_polar(1.0, k as f64 * PI / 4.0);
            let h = hitting_prob(&half, w, &CompactSet::circle(0.0, 0.0, 0.5).unwrap(), 20_000, 40 + k).unwrap();
            h.value + 3.0 * h.stderr
        })
        .fold(0.0, f64::max);
    let (r, s) = (0.1f64, 1e-3f64);
    let ds = Domain::Intersection(vec![d, Domain::exterior(0.0, 0.0, s).unwrap()]);
    let h = hitting_prob(&ds, c64(0.0, r), &CompactSet::circle(0.0, 0.0, s).unwrap(), 40_000, 50).unwrap();
    let lower = r.ln() / s.ln();
    let upper = lower / (1.0 - p * 2f64.ln() / ((1.0 - p) * (1.0 / r).ln()));
    assert!(h.value + 3.0 * h.stderr >= lower && h.value - 3.0 * h.stderr <= upper, "{h:?} not in [{lower}, {upper}]");
}

#[test]
fn estimates_are_deterministic() {
    let d = Domain::annulus(1.0, 10.0).unwrap();
    let v = CompactSet::circle(0.0, 0.0, 10.0).unwrap();
    let a = hitting_prob(&d, c64(2.0, 0.0), &v, 5_000, 99).unwrap();
    let b = hitting_prob(&d, c64(2.0, 0.0), &v, 5_000, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}
