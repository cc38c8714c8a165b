//! Probability-query oracles.
//!
//! The noisy oracle models an approximate counter: a query with true
//! probability `p` returns `p * (1 + u)` with `u` uniform on a grid in
//! `[-1/eps_mult, 1/eps_mult]`, except that with probability `1/fail` it
//! fails and returns 0. Query `c` reads stream `(seed, ESTIMATE, c)`:
//! first `below(fail) == 0` decides failure, then `k = below(2^24 + 1)`
//! gives `u = (2k - 2^24) / (2^24 * eps_mult)`.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::family::{check_outcome, check_param, ratio, Family};
use crate::rng::{stream, Coins};

/// Resolution of the multiplicative noise.
pub const NOISE_GRID: u64 = 1 << 24;
/// Largest supported `eps_mult`, keeping scaled values inside `u128`.
pub const MAX_EPS_MULT: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorMode {
    Exact,
    Noisy { eps_mult: u64, fail: u64, seed: u64 },
}

#[derive(Clone, Copy)]
pub struct Estimator<'a> {
    fam: &'a dyn Family,
    mode: EstimatorMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EstimateResult {
    pub value: BigRational,
    /// Set when the failure branch fired. Algorithms under test never read it.
    pub failed: bool,
}

/// Outcome of the coins behind one query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Noise {
    Failed,
    /// Multiplier `factor / scale` with `scale = NOISE_GRID * eps_mult`.
    Factor(u64),
}

pub fn exact_estimator(fam: &dyn Family) -> Estimator<'_> {
    Estimator { fam, mode: EstimatorMode::Exact }
}

pub fn noisy_estimator(fam: &dyn Family, eps_mult: u64, fail: u64, seed: u64) -> Result<Estimator<'_>> {
    Estimator::new(fam, EstimatorMode::Noisy { eps_mult, fail, seed })
}

impl<'a> Estimator<'a> {
    pub fn new(fam: &'a dyn Family, mode: EstimatorMode) -> Result<Self> {
        if let EstimatorMode::Noisy { eps_mult, fail, .. } = mode {
            if !(2..=MAX_EPS_MULT).contains(&eps_mult) {
                return Err(Error::Precondition(format!("eps_mult {eps_mult} outside [2, {MAX_EPS_MULT}]")));
            }
            if fail < 2 {
                return Err(Error::Precondition(format!("fail {fail} < 2")));
            }
        }
        Ok(Estimator { fam, mode })
    }

    pub fn family(&self) -> &'a dyn Family {
        self.fam
    }

    pub fn mode(&self) -> EstimatorMode {
        self.mode
    }

    /// Query number `ctr` for `Pr[x ← D(z)]`.
    pub fn estimate(&self, z: BitString, x: BitString, ctr: u64) -> Result<EstimateResult> {
        let zi = check_param(self.fam, z)?;
        let xi = check_outcome(self.fam, x)?;
        let count = self.fam.counts(zi)[xi as usize];
        let p = ratio(count, self.fam.denom());
        Ok(match self.noise(ctr) {
            None => EstimateResult { value: p, failed: false },
            Some(Noise::Failed) => EstimateResult { value: BigRational::from_integer(0.into()), failed: true },
            Some(Noise::Factor(f)) => EstimateResult {
                value: p * BigRational::new(BigInt::from(f), BigInt::from(self.scale())),
                failed: false,
            },
        })
    }

    /// `None` for the exact oracle.
    pub(crate) fn noise(&self, ctr: u64) -> Option<Noise> {
        match self.mode {
            EstimatorMode::Exact => None,
            EstimatorMode::Noisy { eps_mult, fail, seed } => {
                let mut coins = Coins::new(seed, stream::ESTIMATE, ctr);
                let failed = coins.below(fail) == 0;
                let k = coins.below(NOISE_GRID + 1);
                Some(if failed {
                    Noise::Failed
                } else {
                    Noise::Factor(NOISE_GRID * eps_mult + 2 * k - NOISE_GRID)
                })
            }
        }
    }

    /// Denominator of [`Noise::Factor`]; 1 for the exact oracle.
    pub(crate) fn scale(&self) -> u64 {
        match self.mode {
            EstimatorMode::Exact => 1,
            EstimatorMode::Noisy { eps_mult, .. } => NOISE_GRID * eps_mult,
        }
    }
}
