//! The puzzle built from a learning instance: `Samp` draws `z` and `t`
//! samples of `D(z)`, `Vrfy` accepts `h` when `D(h)` is close to the
//! maximum-likelihood fit of the puzzle.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bits::BitString;
use crate::dist::{composition_count, factorials, for_each_composition};
use crate::error::{check_len, Error, Result};
use crate::family::{check_param, draw_samples, sd_numer, Family, SampleSet};
use crate::instance::LearningInstance;
use crate::limits::{MAX_TUPLE_BITS, MAX_TYPE_CLASSES};
use crate::mle::{likelihood_numer, mle_from_histogram, sparse_histogram};
use crate::report::Exact;
use crate::rng::{derive_seed, stream};
use crate::stats::Rate;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Puzzle {
    pub puzz: SampleSet,
    pub ans: BitString,
}

/// `16 * eps^2 * n`.
pub fn owp_default_t(eps: u64, n: u64) -> Result<u64> {
    if eps == 0 || n == 0 {
        return Err(Error::Precondition(format!("eps and n must be at least 1 (got {eps}, {n})")));
    }
    Ok(16 * eps * eps * n)
}

pub fn owp_samp(inst: &LearningInstance, seed: u64) -> Result<Puzzle> {
    let ans = inst.sampler.draw(seed, stream::SAMPLER);
    let puzz = draw_samples(&inst.family, ans, inst.params.t as usize, seed)?;
    Ok(Puzzle { puzz, ans })
}

/// `SD(D(a), D(b)) <= 3 / (2 eps)`, boundary included.
fn accepts(fam: &(impl Family + ?Sized), eps: u64, a: u32, b: u32) -> bool {
    2 * eps as u128 * sd_numer(fam, a, b) as u128 <= 3 * fam.denom() as u128
}

pub fn owp_vrfy(inst: &LearningInstance, puzz: &SampleSet, h: BitString) -> Result<bool> {
    let h = check_param(&inst.family, h)?;
    if puzz.t() as u64 != inst.params.t {
        return Err(Error::Length { expected: inst.params.t as usize, got: puzz.t() });
    }
    let hist = sparse_histogram(&inst.family, &puzz.samples)?;
    let zstar = mle_from_histogram(&inst.family, &hist, puzz.t()).argmax_z.value();
    Ok(accepts(&inst.family, inst.params.eps, zstar, h))
}

/// Honest acceptance over `trials` seeded runs.
pub fn owp_completeness(inst: &LearningInstance, trials: u64, seed: u64) -> Result<Rate> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let mut ok = 0;
    for i in 0..trials {
        let p = owp_samp(inst, derive_seed(seed, stream::TRIAL, i))?;
        if owp_vrfy(inst, &p.puzz, p.ans)? {
            ok += 1;
        }
    }
    Ok(Rate::new(ok, trials))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AttackReport {
    Exact { success: Exact, puzzle_types: u64 },
    MonteCarlo { success: Rate },
}

impl AttackReport {
    pub fn success_f64(&self) -> f64 {
        match self {
            AttackReport::Exact { success, .. } => num_traits::ToPrimitive::to_f64(&success.0).unwrap(),
            AttackReport::MonteCarlo { success } => success.rate,
        }
    }
}

/// Success probability of the best unbounded adversary: for each puzzle,
/// whether any `h` is accepted, weighted by the puzzle's probability.
///
/// Exact when `t * out_bits` is within the tuple cap; otherwise a Monte
/// Carlo estimate is produced only if `fallback = Some((trials, seed))`.
pub fn owp_best_attack(inst: &LearningInstance, fallback: Option<(u64, u64)>) -> Result<AttackReport> {
    let fam = &inst.family;
    let t = inst.params.t as usize;
    let k = fam.param_bits();
    let best_for = |zstar: u32| (0..1u32 << k).any(|h| accepts(fam, inst.params.eps, zstar, h));
    let prior = inst.sampler.distribution()?;
    let mut outcomes: Vec<u32> = prior
        .iter()
        .flat_map(|(z, _)| fam.counts(z.value()).iter().enumerate().filter(|(_, c)| **c > 0).map(|(x, _)| x as u32))
        .collect();
    outcomes.sort_unstable();
    outcomes.dedup();
    let classes = composition_count(t as u64, outcomes.len() as u64);
    let enumerable = t * fam.out_bits() <= MAX_TUPLE_BITS && classes <= BigUint::from(MAX_TYPE_CLASSES);
    if !enumerable {
        let (trials, seed) = fallback.ok_or_else(|| {
            Error::Limit(format!(
                "{} puzzle bits ({classes} sample types) are not enumerable; enable the Monte Carlo fallback",
                t * fam.out_bits()
            ))
        })?;
        let mut ok = 0;
        for i in 0..trials {
            let p = owp_samp(inst, derive_seed(seed, stream::TRIAL, i))?;
            let hist = sparse_histogram(fam, &p.puzz.samples)?;
            if best_for(mle_from_histogram(fam, &hist, t).argmax_z.value()) {
                ok += 1;
            }
        }
        return Ok(AttackReport::MonteCarlo { success: Rate::new(ok, trials) });
    }
    let fact = factorials(t);
    let denom_t = BigInt::from(BigUint::from(fam.denom()).pow(t as u32));
    let mut memo: Vec<Option<bool>> = vec![None; 1 << k];
    let mut total = BigRational::zero();
    let mut types = 0u64;
    for_each_composition(t as u32, outcomes.len(), |counts| {
        types += 1;
        let hist: Vec<(u32, u32)> =
            outcomes.iter().zip(counts).filter(|(_, n)| **n > 0).map(|(x, n)| (*x, *n)).collect();
        let zstar = mle_from_histogram(fam, &hist, t).argmax_z.value();
        let win = *memo[zstar as usize].get_or_insert_with(|| best_for(zstar));
        if win {
            let mult = counts.iter().fold(fact[t].clone(), |acc, &c| acc / &fact[c as usize]);
            let mut mass = BigRational::zero();
            for (z, pz) in prior.iter() {
                let l = likelihood_numer(fam, z.value(), &hist);
                if !l.is_zero() {
                    mass += pz * BigRational::new(BigInt::from(l), denom_t.clone());
                }
            }
            total += mass * BigRational::from_integer(BigInt::from(mult));
        }
    });
    Ok(AttackReport::Exact { success: Exact(total), puzzle_types: types })
}

/// For one `z`: probability over `t` samples that the maximum-likelihood
/// fit lands within `1/(2 eps)` of `D(z)`, against `1 - 2^(1-k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UsefulReport {
    pub z: BitString,
    pub t: u64,
    pub probability: f64,
    pub exact: Option<Exact>,
    pub monte_carlo: Option<Rate>,
    pub bound: Exact,
    pub holds: bool,
}

pub fn claim_useful(
    fam: &(impl Family + ?Sized),
    eps: u64,
    t: u64,
    z: BitString,
    fallback: Option<(u64, u64)>,
) -> Result<UsefulReport> {
    let zi = check_param(fam, z)?;
    let k = fam.param_bits();
    let bound = BigRational::one() - BigRational::new(BigInt::one(), BigInt::one() << k) * BigInt::from(2);
    let close = |zstar: u32| 2 * eps as u128 * sd_numer(fam, zi, zstar) as u128 <= fam.denom() as u128;
    let tu = t as usize;
    let outcomes: Vec<u32> =
        fam.counts(zi).iter().enumerate().filter(|(_, c)| **c > 0).map(|(x, _)| x as u32).collect();
    let classes = composition_count(t, outcomes.len() as u64);
    if classes <= BigUint::from(MAX_TYPE_CLASSES) {
        let fact = factorials(tu);
        let denom_t = BigInt::from(BigUint::from(fam.denom()).pow(t as u32));
        let mut good = BigRational::zero();
        for_each_composition(t as u32, outcomes.len(), |counts| {
            let hist: Vec<(u32, u32)> =
                outcomes.iter().zip(counts).filter(|(_, n)| **n > 0).map(|(x, n)| (*x, *n)).collect();
            if close(mle_from_histogram(fam, &hist, tu).argmax_z.value()) {
                let mult = counts.iter().fold(fact[tu].clone(), |acc, &c| acc / &fact[c as usize]);
                good += BigRational::new(BigInt::from(likelihood_numer(fam, zi, &hist) * mult), denom_t.clone());
            }
        });
        let holds = good >= bound;
        return Ok(UsefulReport {
            z,
            t,
            probability: num_traits::ToPrimitive::to_f64(&good).unwrap(),
            exact: Some(Exact(good)),
            monte_carlo: None,
            bound: Exact(bound),
            holds,
        });
    }
    let (trials, seed) =
        fallback.ok_or_else(|| Error::Limit(format!("{classes} sample types; enable the Monte Carlo fallback")))?;
    let mut ok = 0;
    for i in 0..trials {
        let s = draw_samples(fam, z, tu, derive_seed(seed, stream::TRIAL, i))?;
        let hist = sparse_histogram(fam, &s.samples)?;
        if close(mle_from_histogram(fam, &hist, tu).argmax_z.value()) {
            ok += 1;
        }
    }
    let rate = Rate::new(ok, trials);
    let holds = rate.wilson99_high >= num_traits::ToPrimitive::to_f64(&bound).unwrap();
    Ok(UsefulReport {
        z,
        t,
        probability: rate.rate,
        exact: None,
        monte_carlo: Some(rate),
        bound: Exact(bound),
        holds,
    })
}

/// Acceptance of the verifier depends on `h` only through `D(h)`.
pub fn same_distribution(fam: &(impl Family + ?Sized), a: BitString, b: BitString) -> Result<bool> {
    check_len(a.len(), b.len())?;
    Ok(fam.counts(check_param(fam, a)?) == fam.counts(check_param(fam, b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{rat, Distribution};
    use crate::family::CircuitFamily;
    use crate::instance::{LearnParams, Sampler};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn identity(k: usize) -> CircuitFamily {
        let outs: Vec<String> = (0..k).map(|i| i.to_string()).collect();
        CircuitFamily::from_json(&format!(
            r#"{{"param_bits":{k},"rand_bits":0,"out_bits":{k},"gates":[],"outputs":[{}]}}"#,
            outs.join(",")
        ))
        .unwrap()
    }

    fn uniform_prior(k: usize) -> Sampler {
        Sampler::Explicit(Distribution::uniform(k).unwrap())
    }

    #[test]
    fn default_t() {
        assert_eq!(owp_default_t(1, 1).unwrap(), 16);
        assert_eq!(owp_default_t(2, 3).unwrap(), 192);
        assert!(owp_default_t(1, 0).is_err());
    }

    #[test]
    fn samp_and_vrfy_on_point_masses() {
        let inst = LearningInstance::new(
            Sampler::Explicit(Distribution::point_mass(bs("10"))),
            identity(2),
            LearnParams::new(2, 2, 5).unwrap(),
        )
        .unwrap();
        let p = owp_samp(&inst, 3).unwrap();
        assert_eq!(p.ans, bs("10"));
        assert_eq!(p.puzz.samples, vec![bs("10"); 5]);
        assert_eq!(owp_samp(&inst, 3).unwrap(), p);
        assert!(owp_vrfy(&inst, &p.puzz, bs("10")).unwrap());
        // SD 1 against 3/4: rejected
        assert!(!owp_vrfy(&inst, &p.puzz, bs("01")).unwrap());
        assert!(owp_vrfy(&inst, &p.puzz, bs("1")).is_err());
    }

    #[test]
    fn threshold_is_inclusive() {
        // D(0) = {0: 1}, D(1) = {0: 1/4, 1: 3/4}: SD = 3/4 = 3/(2*2)
        let fam = CircuitFamily::from_json(
            r#"{"param_bits":1,"rand_bits":2,"out_bits":1,
                "gates":[{"op":"OR","in":[1,2]},{"op":"AND","in":[0,3]}],"outputs":[4]}"#,
        )
        .unwrap();
        let inst = LearningInstance::new(uniform_prior(1), fam, LearnParams::new(2, 2, 1).unwrap()).unwrap();
        let puzz = SampleSet { samples: vec![bs("0")], seed: 0 };
        assert!(owp_vrfy(&inst, &puzz, bs("1")).unwrap());
        let strict = LearningInstance { params: LearnParams::new(3, 2, 1).unwrap(), ..inst };
        assert!(!owp_vrfy(&strict, &puzz, bs("1")).unwrap());
    }

    #[test]
    fn completeness_and_attack_on_identity() {
        let inst = LearningInstance::new(uniform_prior(2), identity(2), LearnParams::new(1, 2, 3).unwrap()).unwrap();
        assert_eq!(owp_completeness(&inst, 50, 1).unwrap().rate, 1.0);
        assert!(owp_completeness(&inst, 0, 1).is_err());
        match owp_best_attack(&inst, None).unwrap() {
            AttackReport::Exact { success, .. } => assert_eq!(success.0, rat(1, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn attack_on_degenerate_family() {
        let fam = CircuitFamily::from_json(r#"{"param_bits":2,"rand_bits":2,"out_bits":2,"gates":[],"outputs":[2,3]}"#)
            .unwrap();
        let inst = LearningInstance::new(uniform_prior(2), fam, LearnParams::new(2, 2, 3).unwrap()).unwrap();
        assert_eq!(owp_best_attack(&inst, None).unwrap().success_f64(), 1.0);
    }

    #[test]
    fn attack_needs_fallback_beyond_the_cap() {
        let inst = LearningInstance::new(uniform_prior(2), identity(2), LearnParams::new(1, 2, 13).unwrap()).unwrap();
        assert!(matches!(owp_best_attack(&inst, None), Err(Error::Limit(_))));
        match owp_best_attack(&inst, Some((20, 5))).unwrap() {
            AttackReport::MonteCarlo { success } => assert_eq!(success.rate, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn useful_claim_on_biased_bit() {
        // out = z xor (r0 and r1)
        let fam = CircuitFamily::from_json(
            r#"{"param_bits":1,"rand_bits":2,"out_bits":1,
                "gates":[{"op":"AND","in":[1,2]},{"op":"XOR","in":[0,3]}],"outputs":[4]}"#,
        )
        .unwrap();
        // eps = 1: both hypotheses are within 1/2, so the event is certain
        let r = claim_useful(&fam, 1, owp_default_t(1, 1).unwrap(), bs("0"), None).unwrap();
        assert_eq!(r.exact.unwrap().0, rat(1, 1));
        // eps = 2: only z* = 0 is close; oracle Pr[Bin(64, 3/4) >= 32], ties go to 0
        let t = owp_default_t(2, 1).unwrap();
        let r = claim_useful(&fam, 2, t, bs("0"), None).unwrap();
        assert!(r.holds);
        let mut p = BigRational::zero();
        for j in 32..=64u32 {
            let c = crate::dist::binomial(64, j as u64);
            p += BigRational::new(BigInt::from(c * BigUint::from(3u32).pow(j)), BigInt::from(4).pow(64));
        }
        assert_eq!(r.exact.unwrap().0, p);
    }
}
