mod common;

use loupe_core::geometry::{c64, Circle, CompactSet, Domain, MobiusMap, C64};
use loupe_core::mc::{capacity_estimate, conformal_radius};
use loupe_core::sle::*;

fn opts(dt: f64, stride: usize) -> SampleOptions {
    SampleOptions { dt, trace_stride: stride, ..Default::default() }
}

/// A traced hull; trace crossings are counted rather than rejected.
fn traced(kappa: f64, t: f64, dt: f64, stride: usize, seed: u64) -> SLEHull {
    let path = DrivingPath::brownian(kappa, DEFAULT_T0, t, dt, seed).unwrap();
    hulls_from_path(&path, kappa, &[path.capacity(path.steps())], stride).unwrap().remove(0)
}

#[test]
fn trace_capacity_matches_log_t() {
    let p = exponents(2.0).unwrap();
    for (t, seed) in [((-2.0f64).exp(), 1), ((-4.0f64).exp(), 2)] {
        let k = traced(p.kappa, t, 1e-3, 5, seed).hull_set().unwrap();
        let cap = capacity_estimate(&k, 4000, seed, 8.0 * t).unwrap();
        assert!((cap.value - t.ln()).abs() < 0.02 + 3.0 * cap.stderr, "t={t}: {cap:?}");
    }
}

#[test]
fn trace_radius_lies_between_t_and_4t() {
    for kappa in [0.5, 2.0, 4.0] {
        let p = exponents(kappa).unwrap();
        let t = (-4.0f64).exp();
        for seed in 0..10 {
            let r = traced(p.kappa, t, 1e-3, 10, seed).radius().unwrap();
            assert!(r >= t * (1.0 - 1e-3) && r <= 4.0 * t, "kappa={kappa} seed={seed}: {}", r / t);
        }
    }
}

#[test]
fn derivative_deviation_is_order_t_and_stable_under_halving() {
    let p = exponents(3.0).unwrap();
    let t = 0.06;
    let path = DrivingPath::brownian(3.0, DEFAULT_T0, t, 1e-3, 7).unwrap();
    let times: Vec<f64> = (0..4).map(|j| path.capacity(path.steps()) / 2f64.powi(3 - j)).collect();
    let hulls = hulls_from_path(&path, p.kappa, &times, 0).unwrap();
    for h in &hulls {
        for z in [c64(1.0, 0.0), c64(0.0, 1.0), c64(-0.8, -0.6)] {
            let coef = (h.far.derivative(z).unwrap() - 1.0).norm() / h.t;
            // Koebe distortion bound ((1 + 4t)/(1 − 4t))³ − 1 ≤ 24t + O(t²) at |z| = 1.
            assert!(coef < 30.0, "t={} coef={coef}", h.t);
        }
    }
}

#[test]
fn desk_scale_traces_are_simple() {
    let mut crossings = 0;
    let total = 60;
    for kappa in [2.0, 3.0] {
        let p = exponents(kappa).unwrap();
        for seed in 0..total / 2 {
            let path = DrivingPath::brownian(p.kappa, (-8.0f64).exp(), (-3.0f64).exp(), 1e-3, seed).unwrap();
            let h = hulls_from_path(&path, p.kappa, &[path.capacity(path.steps())], 1).unwrap().remove(0);
            if h.self_intersections > 0 {
                eprintln!("kappa={kappa} seed={seed}: {} crossings", h.self_intersections);
                crossings += 1;
            }
        }
    }
    assert!(crossings as f64 / total as f64 <= 0.001, "{crossings} of {total} traces cross");
}

#[test]
fn radius_law_is_scale_invariant() {
    let p = exponents(2.0).unwrap();
    let sample = |t: f64, base: u64| -> Vec<f64> {
        (0..150).map(|i| traced(p.kappa, t, 1e-3, 20, base + i).radius().unwrap() / t).collect()
    };
    let a = sample((-5.0f64).exp(), 0);
    let b = sample((-3.0f64).exp(), 10_000);
    let (d, pval) = common::ks_two_sample(&a, &b);
    assert!(pval > 0.01, "KS D={d} p={pval}");
}

#[test]
fn starting_capacity_bias_is_below_noise() {
    let p = exponents(2.0).unwrap();
    let t = (-4.0f64).exp();
    let d = Domain::disk(0.0, 0.0, 1.0).unwrap();
    let stat = |h: &SLEHull| hull_annulus_modulus(&h.far, &d).map(|s| s / h.t);
    let a = mean_over_hulls(&p, t, &SampleOptions { dt: 1e-3, t0: DEFAULT_T0, trace_stride: 0 }, 64, 1, stat).unwrap();
    let b = mean_over_hulls(&p, t, &SampleOptions { dt: 1e-3, t0: (-9.0f64).exp(), trace_stride: 0 }, 64, 2, stat).unwrap();
    let gap = (a.value - b.value).abs();
    assert!(gap < 3.0 * (a.stderr.hypot(b.stderr)) + 1e-3, "{a:?} vs {b:?}");
}

#[test]
fn capacity_shifts_by_log_derivative_under_disk_automorphisms() {
    let p = exponents(2.0).unwrap();
    let f = MobiusMap::disk_automorphism(c64(0.3, -0.2), 0.4).unwrap();
    let mut gaps = Vec::new();
    for (t, seed) in [((-3.0f64).exp(), 11), ((-5.0f64).exp(), 12)] {
        let k = traced(p.kappa, t, 1e-3, 5, seed).hull_set().unwrap();
        let fk = k.mobius_image(&f).unwrap();
        let launch = 8.0 * t * f.derivative(c64(0.0, 0.0)).norm().max(1.0);
        let a = capacity_estimate(&k, 4000, seed, 8.0 * t).unwrap();
        let b = capacity_estimate(&fk, 4000, seed + 100, launch).unwrap();
        let gap = b.value - f.derivative(c64(0.0, 0.0)).norm().ln() - a.value;
        let sd = a.stderr.hypot(b.stderr);
        assert!(gap.abs() < 3.0 * sd + 4.0 * t, "t={t}: gap {gap} sd {sd}");
        gaps.push(gap);
    }
    eprintln!("composite gaps {gaps:?}");
}

#[test]
fn modulus_of_a_disk_in_the_unit_disk() {
    let k = CompactSet::closed_disk(0.0, 0.0, 0.05).unwrap();
    let s = annulus_modulus(&Domain::unit_disk(), &k, 20_000, 3).unwrap();
    assert!((s.value - 0.05).abs() < 3.0 * s.stderr + 1e-3, "{s:?}");
}

#[test]
fn hull_modulus_is_psi_prime_times_t() {
    let p = exponents(8.0 / 3.0).unwrap();
    for (d, psi) in [(Domain::unit_disk(), 1.0), (Domain::disk(0.0, 0.0, 2.0).unwrap(), 0.5)] {
        for t in [(-3.0f64).exp(), (-5.0f64).exp()] {
            let h = whole_plane_sample(&p, t, &opts(1e-3, 0), 5).unwrap();
            let s = hull_annulus_modulus(&h.far, &d).unwrap();
            let ratio = s / (psi * t);
            assert!((ratio - 1.0).abs() < 8.0 * psi * t, "t={t}: ratio {ratio}");
        }
    }
}

#[test]
fn circle_mean_modulus_agrees_with_the_uniformizing_map() {
    let p = exponents(2.0).unwrap();
    let t = (-3.0f64).exp();
    let h = traced(p.kappa, t, 1e-3, 2, 8);
    let d = Domain::disk(0.0, 0.0, 2.0).unwrap();
    let exact = hull_annulus_modulus(&h.far, &d).unwrap();
    let mc = annulus_modulus(&d, &h.hull_set().unwrap(), 20_000, 9).unwrap();
    // The polyline trace misses the fine structure between recorded tips.
    assert!((mc.value - exact).abs() < 3.0 * mc.stderr + 0.02 * exact, "{mc:?} vs {exact}");
}

#[test]
fn outer_boundary_derivative_is_one_plus_order_s() {
    let p = exponents(2.0).unwrap();
    let d = Domain::unit_disk();
    for t in [(-3.0f64).exp(), (-5.0f64).exp()] {
        let h = whole_plane_sample(&p, t, &opts(1e-3, 0), 21).unwrap();
        for th in [0.3, 2.0, 4.4] {
            let w = C64::from_polar(1.0, th);
            let terms = rn_density(&h, &d, w, &p).unwrap();
            let dev = (terms.rho_prime_gw * terms.g_prime_w - 1.0).abs();
            assert!(dev < 10.0 * terms.s, "t={t}: dev {dev} s {}", terms.s);
        }
    }
}

#[test]
fn zero_central_charge_has_unit_loop_term() {
    let p = exponents(8.0 / 3.0).unwrap();
    let h = whole_plane_sample(&p, (-4.0f64).exp(), &opts(1e-3, 0), 4).unwrap();
    let d = Domain::disk(0.0, 0.0, 2.0).unwrap();
    let terms = rn_density(&h, &d, c64(2.0, 0.0), &p).unwrap();
    assert!(terms.lambda_star.is_none());
    let (b, bt) = (p.b, p.btilde);
    let partition = terms.t.powf(b - bt) * (terms.g_prime_w * terms.rho_prime_u * terms.rho_prime_gw).powf(b) * terms.s.powf(bt - b);
    assert!((terms.value - partition).abs() < 1e-12 * partition);
}

#[test]
fn density_targets_from_disk_uniformizers() {
    let p = exponents(3.0).unwrap();
    assert!((density_target(&Domain::unit_disk(), c64(1.0, 0.0), &p).unwrap() - 1.0).abs() < 1e-14);
    let d = Domain::disk(0.3, 0.0, 1.3).unwrap();
    let w = c64(0.3, 1.3);
    let psi = disk_uniformizer(&Circle::new(c64(0.3, 0.0), 1.3).unwrap()).unwrap();
    let cr = conformal_radius(&d, 20_000, 5).unwrap();
    assert!((psi.derivative(c64(0.0, 0.0)).norm() - cr.value).abs() < 3.0 * cr.stderr + 2e-3, "{cr:?}");
    let expect = cr.value.powf(p.btilde) * psi.derivative(w).norm().powf(p.b);
    assert!((density_target(&d, w, &p).unwrap() - expect).abs() < 0.01 * expect);
}

#[test]
fn hull_touching_the_boundary_is_rejected() {
    let p = exponents(2.0).unwrap();
    let h = whole_plane_sample(&p, 0.1, &opts(1e-3, 0), 1).unwrap();
    let d = Domain::disk(0.0, 0.0, 0.3).unwrap();
    assert!(matches!(rn_density(&h, &d, c64(0.3, 0.0), &p), Err(loupe_core::Error::HullTouchesBoundary)));
}

#[test]
fn density_mean_and_consistency_on_a_small_run() {
    let p = exponents(2.0).unwrap();
    let d = Domain::disk(0.0, 0.0, 2.0).unwrap();
    let t = (-4.0f64).exp();
    let (rows, diff) = density_limit_check(&d, c64(2.0, 0.0), &p, &[t / 2.0, t], &opts(1e-3, 0), 64, 17).unwrap();
    for r in &rows {
        assert!(r.deviation.abs() < 3.0 * r.mean.stderr + 0.01, "{r:?}");
    }
    let diff = diff.unwrap();
    assert!(diff.value.abs() < 3.0 * diff.stderr + 1e-3, "{diff:?}");
}
