//! Success counts and their confidence intervals.

use serde::Serialize;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489004;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub wilson99_low: f64,
    pub wilson99_high: f64,
}

impl Rate {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (lo, hi) = wilson(successes, trials, Z99);
        Rate { successes, trials, rate: successes as f64 / trials as f64, wilson99_low: lo, wilson99_high: hi }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_point_estimate() {
        let (lo, hi) = wilson(90, 100, Z99);
        assert!(lo < 0.9 && 0.9 < hi);
        // reference values from the closed form
        assert!((lo - 0.7962).abs() < 1e-3 && (hi - 0.9540).abs() < 1e-3, "{lo} {hi}");
        let (lo, hi) = wilson(100, 100, Z99);
        assert!(hi == 1.0 && lo > 0.93 && lo < 0.95);
        assert!(wilson(0, 10, Z99).0 < 1e-12);
    }
}
