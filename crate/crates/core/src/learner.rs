//! The likelihood-comparison distinguisher, the empirical gap statistic,
//! the `∃a ∀b` threshold query, and the bit-by-bit agnostic learner built
//! on them. Also the KL learner and the proper-learning benchmark.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::bits::BitString;
use crate::dist::{statistical_distance, Distribution};
use crate::error::{check_len, Error, Result};
use crate::estimate::{Estimator, EstimatorMode, Noise};
use crate::family::{check_param, dist_vector, draw_samples, is_fully_supported, sd_numer, Family, SampleSet};
use crate::instance::{LearnParams, LearningInstance};
use crate::mle::eval_mle;
use crate::report::Exact;
use crate::rng::{derive_seed, stream};
use crate::stats::Rate;

/// Query counters of the fresh-sample distinguisher calls start here; the
/// target-sample calls use `0 .. t`.
pub const FRESH_QUERY_OFFSET: u64 = 1 << 40;

/// Multiplier inside the distinguisher's estimator: precision and failure
/// rate are both `1 / (DIS_PRECISION * eps)`.
pub const DIS_PRECISION: u64 = 500;

/// Outputs 1 iff `16 eps E_l >= (16 eps + 1) E_m`, where `E_l`, `E_m` are
/// the estimator's answers for `(l, x)` and `(m, x)` under counters
/// `2 q` and `2 q + 1`.
pub fn dis(est: &Estimator, l: BitString, m: BitString, x: BitString, eps: u64, query_ctr: u64) -> Result<bool> {
    let el = est.estimate(l, x, 2 * query_ctr)?.value;
    let em = est.estimate(m, x, 2 * query_ctr + 1)?.value;
    let c = BigInt::from(16 * eps);
    Ok(el * &c >= em * (c + 1))
}

/// Estimator with the distinguisher's default precision for `eps`.
pub fn dis_estimator(fam: &dyn Family, eps: u64, seed: u64) -> Result<Estimator<'_>> {
    Estimator::new(
        fam,
        EstimatorMode::Noisy { eps_mult: DIS_PRECISION * eps, fail: DIS_PRECISION * eps, seed },
    )
}

/// `a * b <= c * d` without overflow.
fn le_products(a: u128, b: u128, c: u128, d: u128) -> bool {
    match (a.checked_mul(b), c.checked_mul(d)) {
        (Some(l), Some(r)) => l <= r,
        _ => BigUint::from(a) * BigUint::from(b) <= BigUint::from(c) * BigUint::from(d),
    }
}

/// Noise multipliers of one distinguisher call; 0 marks a failed query.
#[derive(Clone, Copy, Debug)]
struct CallNoise {
    first: u128,
    second: u128,
}

fn call_noise(est: &Estimator, query_ctr: u64) -> CallNoise {
    let f = |n: Option<Noise>| match n {
        None => 1,
        Some(Noise::Failed) => 0,
        Some(Noise::Factor(v)) => v as u128,
    };
    CallNoise { first: f(est.noise(2 * query_ctr)), second: f(est.noise(2 * query_ctr + 1)) }
}

/// Distinguisher calls grouped by outcome so that all `(a, b)` pairs can be
/// counted with one binary search per outcome.
struct Bucketed {
    /// per outcome: both queries failed / only the first / only the second
    both_failed: Vec<u64>,
    first_failed: Vec<u64>,
    second_failed: Vec<u64>,
    /// clean calls per outcome, sorted by `second / first`
    offsets: Vec<usize>,
    ratios: Vec<(u128, u128)>,
}

impl Bucketed {
    /// `order` lists clean call indices sorted by ratio.
    fn new(outcomes: &[u32], noise: &[CallNoise], order: &[usize], width: usize) -> Self {
        let n = 1usize << width;
        let mut both_failed = vec![0; n];
        let mut first_failed = vec![0; n];
        let mut second_failed = vec![0; n];
        let mut clean = vec![0usize; n];
        for (i, &x) in outcomes.iter().enumerate() {
            let c = noise[i];
            match (c.first == 0, c.second == 0) {
                (true, true) => both_failed[x as usize] += 1,
                (true, false) => first_failed[x as usize] += 1,
                (false, true) => second_failed[x as usize] += 1,
                (false, false) => clean[x as usize] += 1,
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for x in 0..n {
            offsets[x + 1] = offsets[x] + clean[x];
        }
        let mut fill = offsets.clone();
        let mut ratios = vec![(0, 0); offsets[n]];
        for &i in order {
            let x = outcomes[i] as usize;
            ratios[fill[x]] = (noise[i].second, noise[i].first);
            fill[x] += 1;
        }
        Bucketed { both_failed, first_failed, second_failed, offsets, ratios }
    }

    fn total(&self, x: usize) -> u64 {
        self.both_failed[x] + self.first_failed[x] + self.second_failed[x] + (self.offsets[x + 1] - self.offsets[x]) as u64
    }

    /// Number of calls in outcome `x` on which the distinguisher says 1,
    /// given the true counts `ca = c_a(x)`, `cb = c_b(x)`.
    fn ones(&self, x: usize, ca: u64, cb: u64, eps: u64) -> u64 {
        let clean = &self.ratios[self.offsets[x]..self.offsets[x + 1]];
        let mut n = self.both_failed[x] + self.second_failed[x];
        if cb == 0 {
            n += self.first_failed[x] + clean.len() as u64;
        } else if ca > 0 {
            let lhs = (16 * eps as u128 + 1) * cb as u128;
            let rhs = 16 * eps as u128 * ca as u128;
            n += clean.partition_point(|&(second, first)| le_products(second, lhs, first, rhs)) as u64;
        }
        n
    }
}

fn sorted_clean(noise: &[CallNoise]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..noise.len()).filter(|&i| noise[i].first != 0 && noise[i].second != 0).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (noise[i], noise[j]);
        // a.second / a.first vs b.second / b.first
        (a.second * b.first).cmp(&(b.second * a.first)).then(i.cmp(&j))
    });
    order
}

/// Gap values `|mean dis over target − mean dis over D(a)|` for every
/// `(a, b)`, stored as numerators over a common denominator.
#[derive(Clone, Debug)]
pub struct GapOracle {
    k: usize,
    denom: BigInt,
    gaps: Vec<BigInt>,
    max_gap: Vec<BigInt>,
}

impl GapOracle {
    fn from_gaps(k: usize, denom: BigInt, gaps: Vec<BigInt>) -> Self {
        let n = 1usize << k;
        let max_gap = (0..n).map(|a| gaps[a * n..(a + 1) * n].iter().max().unwrap().clone()).collect();
        GapOracle { k, denom, gaps, max_gap }
    }

    /// The empirical statistic: target samples `x_i` with coins `r_i(1)`
    /// (query counter `i`), fresh draws `X_{a,i}` from `D(a)` on stream
    /// `(fresh_seed, FRESH)`, shared across `a`, with coins `r_i(3)`
    /// (query counter `FRESH_QUERY_OFFSET + i`).
    pub fn empirical(
        fam: &dyn Family,
        est: &Estimator,
        eps: u64,
        samples: &SampleSet,
        fresh_seed: u64,
    ) -> Result<Self> {
        let k = fam.param_bits();
        let m = fam.out_bits();
        let t = samples.t();
        if t == 0 {
            return Err(Error::Precondition("no target samples".into()));
        }
        let mut target = Vec::with_capacity(t);
        for s in &samples.samples {
            check_len(m, s.len())?;
            target.push(s.value());
        }
        let n = 1usize << k;
        let noise_t: Vec<CallNoise> = (0..t as u64).map(|i| call_noise(est, i)).collect();
        let noise_f: Vec<CallNoise> = (0..t as u64).map(|i| call_noise(est, FRESH_QUERY_OFFSET + i)).collect();
        let target_b = Bucketed::new(&target, &noise_t, &sorted_clean(&noise_t), m);
        let order_f = sorted_clean(&noise_f);
        let live_t: Vec<usize> = (0..1usize << m).filter(|&x| target_b.total(x) > 0).collect();
        let mut gaps = vec![BigInt::zero(); n * n];
        for a in 0..n {
            let fresh = fam.sample_range(a as u32, fresh_seed, stream::FRESH, 0, t);
            let fresh_b = Bucketed::new(&fresh, &noise_f, &order_f, m);
            let live_f: Vec<usize> = (0..1usize << m).filter(|&x| fresh_b.total(x) > 0).collect();
            let ca = fam.counts(a as u32);
            for b in 0..n {
                let cb = fam.counts(b as u32);
                let on_target: u64 = live_t.iter().map(|&x| target_b.ones(x, ca[x], cb[x], eps)).sum();
                let on_fresh: u64 = live_f.iter().map(|&x| fresh_b.ones(x, ca[x], cb[x], eps)).sum();
                gaps[a * n + b] = BigInt::from(on_target.abs_diff(on_fresh));
            }
        }
        Ok(Self::from_gaps(k, BigInt::from(t), gaps))
    }

    /// Exact gaps `|Pr_T[dis = 1] − Pr_{D(a)}[dis = 1]|` under the exact
    /// estimator: the learner's statistic with sampling error removed.
    pub fn exact(fam: &dyn Family, target: &Distribution, eps: u64) -> Result<Self> {
        let k = fam.param_bits();
        let m = fam.out_bits();
        check_len(m, target.width())?;
        let n = 1usize << k;
        let td = BigInt::from(target.common_denom());
        let fd = BigInt::from(fam.denom());
        let denom = td.lcm(&fd);
        let tw: Vec<BigInt> = (0..1u32 << m).map(|x| (target.prob_raw(x) * BigRational::from(denom.clone())).to_integer()).collect();
        let fscale = &denom / &fd;
        let mut gaps = vec![BigInt::zero(); n * n];
        for a in 0..n {
            let ca = fam.counts(a as u32);
            let diff: Vec<BigInt> = (0..1usize << m).map(|x| &tw[x] - BigInt::from(ca[x]) * &fscale).collect();
            for b in 0..n {
                let cb = fam.counts(b as u32);
                let mut acc = BigInt::zero();
                for x in 0..1usize << m {
                    if 16 * eps as u128 * ca[x] as u128 >= (16 * eps as u128 + 1) * cb[x] as u128 {
                        acc += &diff[x];
                    }
                }
                gaps[a * n + b] = acc.abs();
            }
        }
        Ok(Self::from_gaps(k, denom, gaps))
    }

    pub fn param_bits(&self) -> usize {
        self.k
    }

    pub fn gap(&self, a: BitString, b: BitString) -> BigRational {
        let n = 1usize << self.k;
        BigRational::new(self.gaps[a.value() as usize * n + b.value() as usize].clone(), self.denom.clone())
    }

    /// `max_b gap(a, b)`
    pub fn max_gap(&self, a: BitString) -> BigRational {
        BigRational::new(self.max_gap[a.value() as usize].clone(), self.denom.clone())
    }

    /// Smallest `max_b gap` over all completions of `prefix`.
    pub fn best_completion(&self, prefix: BitString) -> BigRational {
        let free = self.k - prefix.len();
        let start = (prefix.value() as usize) << free;
        let best = self.max_gap[start..start + (1 << free)].iter().min().unwrap();
        BigRational::new(best.clone(), self.denom.clone())
    }

    /// `∃ suffix a ∀ b: gap(prefix ‖ a, b) <= omega`.
    pub fn sigma3(&self, prefix: BitString, omega: &BigRational) -> bool {
        assert!(prefix.len() <= self.k, "prefix longer than the parameter");
        if omega.is_negative() {
            return false;
        }
        let free = self.k - prefix.len();
        let start = (prefix.value() as usize) << free;
        let lhs_scale = omega.denom();
        let rhs = omega.numer() * &self.denom;
        self.max_gap[start..start + (1 << free)].iter().any(|g| g * lhs_scale <= rhs)
    }
}

/// Result of one bit-by-bit run: the hypothesis plus, per stage, the best
/// value reachable from the accepted prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnTrace {
    pub h: BitString,
    pub stage_values: Vec<BigRational>,
}

/// Bit-by-bit search: for each position, binary-search the threshold over
/// `k` rounds and keep the bit whose query alone succeeds; if the rounds run
/// out with both answers equal, the bit is 1.
pub fn bit_by_bit(oracle: &GapOracle) -> LearnTrace {
    let k = oracle.param_bits();
    let mut prefix = BitString::EMPTY;
    let mut stage_values = Vec::with_capacity(k);
    for _ in 0..k {
        let mut p = BigRational::new(BigInt::one(), BigInt::from(2));
        let mut out = true;
        for j in 1..=k {
            let q0 = oracle.sigma3(prefix.push(false).unwrap(), &p);
            let q1 = oracle.sigma3(prefix.push(true).unwrap(), &p);
            if q0 != q1 {
                out = q1;
                break;
            }
            if j == k {
                out = true;
                break;
            }
            let step = BigRational::new(BigInt::one(), BigInt::one() << (j + 1));
            if q0 {
                p -= step;
            } else {
                p += step;
            }
        }
        prefix = prefix.push(out).unwrap();
        stage_values.push(oracle.best_completion(prefix));
    }
    LearnTrace { h: prefix, stage_values }
}

/// `|mean dis(a, b, x_i) − mean dis(a, b, X_{a,i})|` computed call by call.
pub fn empirical_gap(
    fam: &dyn Family,
    est: &Estimator,
    a: BitString,
    b: BitString,
    samples: &SampleSet,
    fresh_seed: u64,
    eps: u64,
) -> Result<BigRational> {
    let ai = check_param(fam, a)?;
    check_param(fam, b)?;
    let t = samples.t();
    let m = fam.out_bits();
    let mut on_target = 0i64;
    for (i, x) in samples.samples.iter().enumerate() {
        on_target += dis(est, a, b, *x, eps, i as u64)? as i64;
    }
    let fresh = fam.sample_range(ai, fresh_seed, stream::FRESH, 0, t);
    let mut on_fresh = 0i64;
    for (i, x) in fresh.into_iter().enumerate() {
        on_fresh += dis(est, a, b, BitString::raw(x, m), eps, FRESH_QUERY_OFFSET + i as u64)? as i64;
    }
    Ok(BigRational::new(BigInt::from((on_target - on_fresh).abs()), BigInt::from(t)))
}

/// One threshold query, building the gap table from scratch.
pub fn sigma3_query(
    fam: &dyn Family,
    est: &Estimator,
    prefix: BitString,
    omega: &BigRational,
    samples: &SampleSet,
    fresh_seed: u64,
    eps: u64,
) -> Result<bool> {
    if prefix.len() > fam.param_bits() {
        return Err(Error::Invalid(format!("prefix of {} bits for {} parameter bits", prefix.len(), fam.param_bits())));
    }
    Ok(GapOracle::empirical(fam, est, eps, samples, fresh_seed)?.sigma3(prefix, omega))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LearnReport {
    pub h: BitString,
    pub achieved_sd: Exact,
    pub opt: Exact,
    pub bound: Exact,
    pub within_bound: bool,
}

/// `min_a SD(T, D(a))`.
pub fn agnostic_opt(fam: &dyn Family, target: &Distribution) -> Result<BigRational> {
    let mut best: Option<BigRational> = None;
    for a in BitString::all(fam.param_bits()) {
        let sd = statistical_distance(target, &dist_vector(fam, a)?)?;
        if best.as_ref().is_none_or(|b| sd < *b) {
            best = Some(sd);
        }
    }
    Ok(best.unwrap())
}

/// Exact post-hoc evaluation of a hypothesis against
/// `(3 + 1/eps) * opt + 1/eps`.
pub fn learn_report(fam: &dyn Family, target: &Distribution, h: BitString, eps: u64) -> Result<LearnReport> {
    let achieved = statistical_distance(target, &dist_vector(fam, h)?)?;
    let opt = agnostic_opt(fam, target)?;
    let inv = BigRational::new(BigInt::one(), BigInt::from(eps));
    let bound = (BigRational::from_integer(BigInt::from(3)) + &inv) * &opt + &inv;
    let within = achieved <= bound;
    Ok(LearnReport { h, achieved_sd: Exact(achieved), opt: Exact(opt), bound: Exact(bound), within_bound: within })
}

/// `ceil(100 k^2 eps^2 (k + log2 delta))`.
pub fn default_agnostic_t(k: u64, eps: u64, delta: u64) -> u64 {
    let v = 100.0 * (k * k * eps * eps) as f64 * (k as f64 + (delta as f64).log2());
    v.ceil() as u64
}

/// Estimator used inside the distinguisher.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DisMode {
    Exact,
    /// Precision and failure rate `1/(mult * eps)`.
    Noisy { mult: u64 },
}

impl Default for DisMode {
    fn default() -> Self {
        DisMode::Noisy { mult: DIS_PRECISION }
    }
}

/// The agnostic learner's hypothesis for the given samples. Estimator
/// coins and fresh draws come from `seed`.
pub fn agnostic_hypothesis(
    fam: &dyn Family,
    samples: &SampleSet,
    eps: u64,
    mode: DisMode,
    seed: u64,
) -> Result<BitString> {
    let est = match mode {
        DisMode::Exact => Estimator::new(fam, EstimatorMode::Exact)?,
        DisMode::Noisy { mult } => Estimator::new(
            fam,
            EstimatorMode::Noisy { eps_mult: mult * eps, fail: mult * eps, seed: derive_seed(seed, stream::COINS, 0) },
        )?,
    };
    let oracle = GapOracle::empirical(fam, &est, eps, samples, derive_seed(seed, stream::FRESH, 0))?;
    Ok(bit_by_bit(&oracle).h)
}

/// Runs the learner on `samples` and scores it against `target`.
pub fn learn_sd_agnostic(
    fam: &dyn Family,
    target: &Distribution,
    samples: &SampleSet,
    params: &LearnParams,
    mode: DisMode,
    seed: u64,
) -> Result<LearnReport> {
    params.validate()?;
    if samples.t() as u64 != params.t {
        return Err(Error::Invalid(format!("expected {} samples, got {}", params.t, samples.t())));
    }
    let h = agnostic_hypothesis(fam, samples, params.eps, mode, seed)?;
    learn_report(fam, target, h, params.eps)
}

/// The learner with exact gaps in place of sampled ones.
pub fn oracle_learn(fam: &dyn Family, target: &Distribution, eps: u64) -> Result<LearnTrace> {
    Ok(bit_by_bit(&GapOracle::exact(fam, target, eps)?))
}

/// Likelihood maximizer on a fully supported family.
pub fn learn_kl(fam: &dyn Family, samples: &SampleSet, _eps: u64) -> Result<BitString> {
    if !is_fully_supported(fam) {
        return Err(Error::Support("the family is not fully supported".into()));
    }
    Ok(eval_mle(fam, samples)?.argmax_z)
}

/// A proper learner: samples and a seed in, parameter out.
pub type ProperLearner<'a> = dyn Fn(&SampleSet, u64) -> Result<BitString> + 'a;

/// Fraction of trials with `SD(D(z), D(h)) <= 1/eps`, where `z` comes from
/// the instance's sampler and `h` from the learner on `t` samples of `D(z)`.
pub fn learn_proper_avg_benchmark(
    inst: &LearningInstance,
    learner: &ProperLearner,
    trials: u64,
    seed: u64,
) -> Result<Rate> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let fam = &inst.family;
    let mut ok = 0;
    for i in 0..trials {
        let s = derive_seed(seed, stream::TRIAL, i);
        let z = inst.sampler.draw(s, stream::SAMPLER);
        let samples = draw_samples(fam, z, inst.params.t as usize, s)?;
        let h = learner(&samples, derive_seed(s, stream::COINS, 1))?;
        let h = check_param(fam, h)?;
        if inst.params.eps as u128 * sd_numer(fam, z.value(), h) as u128 <= fam.denom() as u128 {
            ok += 1;
        }
    }
    Ok(Rate::new(ok, trials))
}

/// `Pr_{x ← D(l)}[dis = 1] − Pr_{x ← D(m)}[dis = 1]` with the exact estimator.
pub fn dis_advantage_exact(fam: &dyn Family, l: BitString, m: BitString, eps: u64) -> Result<BigRational> {
    let (li, mi) = (check_param(fam, l)?, check_param(fam, m)?);
    let (cl, cm) = (fam.counts(li), fam.counts(mi));
    let mut acc: i128 = 0;
    for x in 0..cl.len() {
        if 16 * eps as u128 * cl[x] as u128 >= (16 * eps as u128 + 1) * cm[x] as u128 {
            acc += cl[x] as i128 - cm[x] as i128;
        }
    }
    Ok(BigRational::new(BigInt::from(acc), BigInt::from(fam.denom())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::rat;
    use crate::estimate::exact_estimator;
    use crate::family::{CircuitFamily, TableFamily};
    use crate::instance::Sampler;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    /// out = (z0 xor r0 r1, z1 xor r2 r3 r4)
    fn noisy_pair() -> CircuitFamily {
        CircuitFamily::from_json(
            r#"{"param_bits":2,"rand_bits":5,"out_bits":2,
                "gates":[{"op":"AND","in":[2,3]},{"op":"XOR","in":[0,7]},
                         {"op":"AND","in":[4,5,6]},{"op":"XOR","in":[1,9]}],
                "outputs":[8,10]}"#,
        )
        .unwrap()
    }

    fn check_table_against_reference(est: &Estimator, samples: &SampleSet, fresh: u64, eps: u64) {
        let fam = est.family();
        let oracle = GapOracle::empirical(fam, est, eps, samples, fresh).unwrap();
        for a in BitString::all(2) {
            for b in BitString::all(2) {
                let reference = empirical_gap(fam, est, a, b, samples, fresh, eps).unwrap();
                assert_eq!(oracle.gap(a, b), reference, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn gap_table_matches_call_by_call_evaluation() {
        let fam = noisy_pair();
        let samples = draw_samples(&fam, bs("10"), 300, 7).unwrap();
        check_table_against_reference(&exact_estimator(&fam), &samples, 11, 2);
        // a coarse estimator so failures and noise both matter
        let est = Estimator::new(&fam, EstimatorMode::Noisy { eps_mult: 2, fail: 3, seed: 5 }).unwrap();
        check_table_against_reference(&est, &samples, 11, 2);
        let est = dis_estimator(&fam, 2, 9).unwrap();
        check_table_against_reference(&est, &samples, 12, 2);
    }

    #[test]
    fn dis_compares_scaled_probabilities() {
        // Pr[0 | z=0] = 3/4, Pr[0 | z=1] = 1/4
        let fam = TableFamily::new(&[
            Distribution::new(1, vec![(bs("0"), rat(3, 4)), (bs("1"), rat(1, 4))]).unwrap(),
            Distribution::new(1, vec![(bs("0"), rat(1, 4)), (bs("1"), rat(3, 4))]).unwrap(),
        ])
        .unwrap();
        let est = exact_estimator(&fam);
        assert!(dis(&est, bs("0"), bs("1"), bs("0"), 1, 0).unwrap());
        assert!(!dis(&est, bs("0"), bs("1"), bs("1"), 1, 0).unwrap());
        // equal probabilities never pass the strict (1 + 1/16e) factor
        assert!(!dis(&est, bs("0"), bs("0"), bs("0"), 1, 0).unwrap());
        assert_eq!(dis_advantage_exact(&fam, bs("0"), bs("1"), 1).unwrap(), rat(1, 2));
    }

    #[test]
    fn sigma3_thresholds() {
        let fam = noisy_pair();
        let target = dist_vector(&fam, bs("01")).unwrap();
        let oracle = GapOracle::exact(&fam, &target, 4).unwrap();
        assert_eq!(oracle.max_gap(bs("01")), rat(0, 1));
        assert!(oracle.sigma3(BitString::EMPTY, &rat(0, 1)));
        assert!(oracle.sigma3(bs("0"), &rat(0, 1)));
        assert!(!oracle.sigma3(bs("1"), &rat(0, 1)));
        assert!(oracle.sigma3(bs("1"), &rat(1, 1)));
        assert!(!oracle.sigma3(bs("01"), &rat(-1, 8)));
        for p in BitString::all(1).chain(BitString::all(2)) {
            for w in [rat(0, 1), rat(1, 16), rat(1, 4), rat(1, 2)] {
                let free = 2 - p.len();
                let brute = BitString::all(free).any(|s| oracle.max_gap(p.concat(s).unwrap()) <= w);
                assert_eq!(oracle.sigma3(p, &w), brute);
            }
        }
    }

    #[test]
    fn learner_recovers_a_realizable_parameter() {
        let fam = noisy_pair();
        for z in BitString::all(2) {
            let target = dist_vector(&fam, z).unwrap();
            let trace = oracle_learn(&fam, &target, 4).unwrap();
            assert_eq!(trace.h, z);
            assert!(trace.stage_values.iter().all(|v| v.is_zero()));
        }
    }

    #[test]
    fn report_bound_is_exact() {
        let fam = noisy_pair();
        let target = dist_vector(&fam, bs("00")).unwrap();
        let r = learn_report(&fam, &target, bs("11"), 4).unwrap();
        assert_eq!(r.opt.0, rat(0, 1));
        assert_eq!(r.bound.0, rat(1, 4));
        // D(00) vs D(11): each coordinate differs by 3/4 resp. 7/8
        assert_eq!(r.achieved_sd.0, statistical_distance(&target, &dist_vector(&fam, bs("11")).unwrap()).unwrap());
        assert!(!r.within_bound);
    }

    #[test]
    fn default_sample_count() {
        // 100 * 4 * 4 * (2 + log2 4)
        assert_eq!(default_agnostic_t(2, 2, 4), 6400);
        assert_eq!(default_agnostic_t(1, 1, 1), 100);
    }

    #[test]
    fn agnostic_learner_on_a_noisy_mixture() {
        let fam = noisy_pair();
        let target = dist_vector(&fam, bs("10")).unwrap().mix(&Distribution::uniform(2).unwrap(), &rat(1, 10)).unwrap();
        let samples = SampleSet { samples: target.sample(2000, 3, stream::TARGET), seed: 3 };
        let params = LearnParams::new(4, 10, 2000).unwrap();
        let r = learn_sd_agnostic(&fam, &target, &samples, &params, DisMode::default(), 1).unwrap();
        assert!(r.within_bound, "{r:?}");
        let wrong_t = LearnParams::new(4, 10, 10).unwrap();
        assert!(learn_sd_agnostic(&fam, &target, &samples, &wrong_t, DisMode::Exact, 1).is_err());
    }

    #[test]
    fn kl_learner_needs_full_support() {
        let fam = noisy_pair();
        let samples = draw_samples(&fam, bs("11"), 200, 4).unwrap();
        assert_eq!(learn_kl(&fam, &samples, 2).unwrap(), bs("11"));
        let id = CircuitFamily::from_json(r#"{"param_bits":1,"rand_bits":0,"out_bits":1,"gates":[],"outputs":[0]}"#)
            .unwrap();
        let s = SampleSet { samples: vec![bs("1")], seed: 0 };
        assert!(matches!(learn_kl(&id, &s, 2), Err(Error::Support(_))));
    }

    #[test]
    fn benchmark_of_a_constant_learner() {
        // D(z) = point mass at z on one bit; h = 0 is right exactly when z = 0
        let id = CircuitFamily::from_json(r#"{"param_bits":1,"rand_bits":0,"out_bits":1,"gates":[],"outputs":[0]}"#)
            .unwrap();
        let inst = LearningInstance::new(
            Sampler::Explicit(Distribution::uniform(1).unwrap()),
            id,
            LearnParams::new(2, 2, 4).unwrap(),
        )
        .unwrap();
        let rate = learn_proper_avg_benchmark(&inst, &|_, _| Ok(bs("0")), 2000, 1).unwrap();
        assert!(rate.wilson99_low < 0.5 && 0.5 < rate.wilson99_high, "{rate:?}");
        let mle = learn_proper_avg_benchmark(&inst, &|s, _| Ok(eval_mle(&inst.family, s)?.argmax_z), 200, 1).unwrap();
        assert_eq!(mle.successes, 200);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn bucketed_counts_match_direct_calls(
            xs in proptest::collection::vec(0u32..4, 1..40),
            fresh in any::<u64>(),
            seed in any::<u64>(),
            fail in 2u64..6,
        ) {
            let fam = noisy_pair();
            let samples = SampleSet { samples: xs.iter().map(|x| BitString::new(*x, 2).unwrap()).collect(), seed: 0 };
            let est = Estimator::new(&fam, EstimatorMode::Noisy { eps_mult: 2, fail, seed }).unwrap();
            let oracle = GapOracle::empirical(&fam, &est, 1, &samples, fresh).unwrap();
            for a in BitString::all(2) {
                for b in BitString::all(2) {
                    prop_assert_eq!(oracle.gap(a, b), empirical_gap(&fam, &est, a, b, &samples, fresh, 1).unwrap());
                }
            }
        }

        #[test]
        fn gaps_lie_in_the_unit_interval(z in 0u32..4, w in 0u64..=10) {
            let fam = noisy_pair();
            let target = dist_vector(&fam, BitString::new(z, 2).unwrap()).unwrap()
                .mix(&Distribution::uniform(2).unwrap(), &rat(w as i64, 10)).unwrap();
            let oracle = GapOracle::exact(&fam, &target, 2).unwrap();
            for a in BitString::all(2) {
                prop_assert!(oracle.max_gap(a) <= rat(1, 1));
                prop_assert!(!oracle.max_gap(a).is_negative());
            }
        }
    }
}
