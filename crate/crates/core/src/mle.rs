//! Exhaustive maximum-likelihood estimation.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bits::BitString;
use crate::error::{check_len, Error, Result};
use crate::family::{check_outcome, check_param, Family, SampleSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MleResult {
    /// Lexicographically smallest maximizer.
    pub argmax_z: BitString,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub max_likelihood: BigRational,
    pub tie_count: u64,
}

/// Sparse sample histogram `(outcome, multiplicity)`, sorted by outcome.
pub(crate) fn sparse_histogram(fam: &(impl Family + ?Sized), samples: &[BitString]) -> Result<Vec<(u32, u32)>> {
    let mut raw: Vec<u32> = Vec::with_capacity(samples.len());
    for s in samples {
        raw.push(check_outcome(fam, *s)?);
    }
    raw.sort_unstable();
    let mut hist: Vec<(u32, u32)> = Vec::new();
    for x in raw {
        match hist.last_mut() {
            Some((y, n)) if *y == x => *n += 1,
            _ => hist.push((x, 1)),
        }
    }
    Ok(hist)
}

/// Numerator of the likelihood over the common denominator `denom^t`.
pub(crate) fn likelihood_numer(fam: &(impl Family + ?Sized), z: u32, hist: &[(u32, u32)]) -> BigUint {
    let row = fam.counts(z);
    let mut acc = BigUint::one();
    for &(x, n) in hist {
        let c = row[x as usize];
        if c == 0 {
            return BigUint::zero();
        }
        acc *= BigUint::from(c).pow(n);
    }
    acc
}

fn denom_power(fam: &(impl Family + ?Sized), t: usize) -> BigUint {
    BigUint::from(fam.denom()).pow(t as u32)
}

/// `Π_i Pr[x_i ← D(z)]`.
pub fn likelihood(fam: &(impl Family + ?Sized), z: BitString, samples: &SampleSet) -> Result<BigRational> {
    let zi = check_param(fam, z)?;
    let hist = sparse_histogram(fam, &samples.samples)?;
    Ok(BigRational::new(
        BigInt::from(likelihood_numer(fam, zi, &hist)),
        BigInt::from(denom_power(fam, samples.t())),
    ))
}

/// Scans every parameter; first maximizer in lexicographic order wins.
pub fn eval_mle(fam: &(impl Family + ?Sized), samples: &SampleSet) -> Result<MleResult> {
    let hist = sparse_histogram(fam, &samples.samples)?;
    Ok(mle_from_histogram(fam, &hist, samples.t()))
}

pub(crate) fn mle_from_histogram(fam: &(impl Family + ?Sized), hist: &[(u32, u32)], t: usize) -> MleResult {
    let k = fam.param_bits();
    let mut best = BigUint::zero();
    let mut arg = 0u32;
    let mut ties = 0u64;
    for z in 0..1u32 << k {
        let l = likelihood_numer(fam, z, hist);
        if z == 0 || l > best {
            best = l;
            arg = z;
            ties = 1;
        } else if l == best {
            ties += 1;
        }
    }
    MleResult {
        argmax_z: BitString::raw(arg, k),
        max_likelihood: BigRational::new(BigInt::from(best), BigInt::from(denom_power(fam, t))),
        tie_count: ties,
    }
}

/// `max_a Pr[x ← D(a)] / Pr[x ← D(h)]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MlRatio {
    Finite(BigRational),
    Infinite,
}

impl MlRatio {
    pub fn log2(&self) -> f64 {
        match self {
            MlRatio::Finite(r) => crate::dist::log2_rational(r),
            MlRatio::Infinite => f64::INFINITY,
        }
    }

    /// `self ≤ 2^(1/e)`, decided exactly as `self^e ≤ 2`.
    pub fn at_most_root_of_two(&self, e: u64) -> bool {
        match self {
            MlRatio::Finite(r) => num_traits::pow(r.clone(), e as usize) <= BigRational::from_integer(2.into()),
            MlRatio::Infinite => false,
        }
    }
}

impl fmt::Display for MlRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MlRatio::Finite(r) => write!(f, "{r}"),
            MlRatio::Infinite => f.write_str("inf"),
        }
    }
}

pub fn ml_ratio(fam: &(impl Family + ?Sized), x: BitString, h: BitString) -> Result<MlRatio> {
    let xi = check_outcome(fam, x)?;
    check_len(fam.param_bits(), h.len())?;
    let best = (0..1u32 << fam.param_bits()).map(|a| fam.counts(a)[xi as usize]).max().unwrap();
    if best == 0 {
        return Err(Error::Precondition(format!("{x} has probability 0 under every parameter")));
    }
    let at_h = fam.counts(h.value())[xi as usize];
    Ok(if at_h == 0 {
        MlRatio::Infinite
    } else {
        MlRatio::Finite(BigRational::new(BigInt::from(best), BigInt::from(at_h)))
    })
}
