//! Monte Carlo estimates with exact pooling.

use serde::{Deserialize, Serialize};

/// A Monte Carlo result: mean, standard error, sample count and the seed that produced it.
///
/// The sample variance is kept alongside so that merging pools runs exactly by sample counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    /// Unbiased sample variance of the per-sample scores (zero for deterministic values).
    pub variance: f64,
}

impl Estimate {
    /// A deterministic value carrying a numerical error bound in place of a standard error.
    pub fn exact(value: f64, error: f64) -> Self {
        Estimate { value, stderr: error.abs(), n: 0, seed: 0, variance: 0.0 }
    }

    /// Builds an estimate from running sums of scores and squared scores.
    pub fn from_sums(sum: f64, sum_sq: f64, n: u64, seed: u64) -> Self {
        if n == 0 {
            return Estimate { value: 0.0, stderr: 0.0, n: 0, seed, variance: 0.0 };
        }
        let nf = n as f64;
        let mean = sum / nf;
        let variance = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Estimate { value: mean, stderr: (variance / nf).sqrt(), n, seed, variance }
    }

    /// Builds an estimate from individual scores.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len() as u64;
        if n == 0 {
            return Estimate::from_sums(0.0, 0.0, 0, seed);
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0) } else { 0.0 };
        Estimate { value: mean, stderr: (variance / n as f64).sqrt(), n, seed, variance }
    }

    /// Pools two runs over disjoint samples; the result equals a single run over the union.
    pub fn merge(&self, other: &Estimate) -> Estimate {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let (n1, n2) = (self.n as f64, other.n as f64);
        let n = n1 + n2;
        let mean = (n1 * self.value + n2 * other.value) / n;
        let ss1 = self.variance * (n1 - 1.0) + n1 * self.value * self.value;
        let ss2 = other.variance * (n2 - 1.0) + n2 * other.value * other.value;
        let variance = ((ss1 + ss2 - n * mean * mean) / (n - 1.0)).max(0.0);
        Estimate { value: mean, stderr: (variance / n).sqrt(), n: self.n + other.n, seed: self.seed.min(other.seed), variance }
    }

    /// `a·self + b` with the error scaled accordingly.
    pub fn affine(&self, a: f64, b: f64) -> Estimate {
        Estimate { value: a * self.value + b, stderr: a.abs() * self.stderr, n: self.n, seed: self.seed, variance: a * a * self.variance }
    }

    /// Sum of independent estimates (errors combined in quadrature).
    pub fn add(&self, other: &Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            stderr: self.stderr.hypot(other.stderr),
            n: self.n + other.n,
            seed: self.seed,
            variance: 0.0,
        }
    }

    /// Difference of independent estimates.
    pub fn sub(&self, other: &Estimate) -> Estimate {
        self.add(&other.affine(-1.0, 0.0))
    }

    /// True if `target` lies within `k` standard errors plus an absolute slack.
    pub fn within(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + slack
    }
}
