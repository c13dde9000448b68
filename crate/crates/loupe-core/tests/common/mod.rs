//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

/// Discrete harmonic extension on the square `[-1, 1]²` with mesh `2/n`, solved by successive
/// over-relaxation. `g` gives the boundary data; the result is indexed `[i][j]` for the point
/// `(-1 + 2i/n, -1 + 2j/n)`.
pub fn square_dirichlet(n: usize, g: impl Fn(f64, f64) -> f64) -> Vec<Vec<f64>> {
    let h = 2.0 / n as f64;
    let coord = |k: usize| -1.0 + h * k as f64;
    let mut u = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            if i == 0 || j == 0 || i == n || j == n {
                u[i][j] = g(coord(i), coord(j));
            }
        }
    }
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / n as f64).sin());
    for _sweep in 0..20 * n {
        let mut change: f64 = 0.0;
        for i in 1..n {
            for j in 1..n {
                let avg = 0.25 * (u[i - 1][j] + u[i + 1][j] + u[i][j - 1] + u[i][j + 1]);
                let d = omega * (avg - u[i][j]);
                u[i][j] += d;
                change = change.max(d.abs());
            }
        }
        if change < 1e-13 {
            break;
        }
    }
    u
}

/// Grid index of the coordinate `x` on the mesh `2/n` (must be a grid point).
pub fn grid_index(n: usize, x: f64) -> usize {
    let k = (x + 1.0) * n as f64 / 2.0;
    assert!((k - k.round()).abs() < 1e-9, "{x} is not a grid point");
    k.round() as usize
}

/// Two-sided Kolmogorov–Smirnov p-value for the statistic `d` with `n` samples.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k + 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// KS statistic of samples in `[0, 1)` against the uniform law.
pub fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter().enumerate().map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs())).fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let p = 2.0 * (1..100).map(|k| (-1f64).powi(k as i32 - 1) * (-2.0 * (k * k) as f64 * lambda * lambda).exp()).sum::<f64>();
    (d, p.clamp(0.0, 1.0))
}
