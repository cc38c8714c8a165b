//! Constructions linking learning to the other tasks: the postselection
//! gadget and its likelihood decision, uniform smoothing, repeated sampling,
//! and the generator-based hard instance with its checker and breaker.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::Value;

use crate::bits::BitString;
use crate::circuit::{Circuit, CircuitBuilder};
use crate::dist::{rat, tensor_power, Distribution};
use crate::error::{check_len, Error, Result};
use crate::family::{check_param, dist_vector, min_prob_exponent, CircuitFamily, Family, SampleSet, TableFamily};
use crate::instance::{LearnParams, LearningInstance, Sampler};
use crate::learner::ProperLearner;
use crate::limits::{MAX_OUT_BITS, MAX_RAND_BITS};
use crate::mle::{eval_mle, likelihood, MleResult, MlRatio};
use crate::rng::{derive_seed, stream, Coins};
use crate::stats::Rate;

fn role_json(text: &str, role: &str) -> Result<serde_json::Map<String, Value>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("{role} JSON: {e}")))?;
    let mut obj = match v {
        Value::Object(o) => o,
        _ => return Err(Error::Parse(format!("{role} must be a JSON object"))),
    };
    match obj.remove("role") {
        Some(Value::String(r)) if r == role => Ok(obj),
        other => Err(Error::Parse(format!("expected \"role\": {role:?}, found {other:?}"))),
    }
}

/// A machine emitting `(b, b*)` on input `x`; the circuit's parameter is `x`
/// and its two outputs are `b` then `b*`.
#[derive(Clone, Debug)]
pub struct PostselectMachine {
    circuit: CircuitFamily,
}

impl PostselectMachine {
    /// `b` and `b*` are read from the given wires; the circuit's own
    /// outputs are ignored.
    pub fn new(circuit: &Circuit, b_wire: u32, bstar_wire: u32) -> Result<Self> {
        let mut desc = circuit.desc().clone();
        desc.outputs = vec![b_wire, bstar_wire];
        desc.out_bits = 2;
        Ok(PostselectMachine { circuit: CircuitFamily::new(Circuit::from_desc(desc)?) })
    }

    /// Circuit JSON plus `"role": "postselect"`, `"b_wire"`, `"bstar_wire"`.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut obj = role_json(text, "postselect")?;
        let mut wire = |name: &str| {
            obj.remove(name)
                .and_then(|v| v.as_u64())
                .and_then(|w| u32::try_from(w).ok())
                .ok_or_else(|| Error::Parse(format!("postselect machine needs an integer {name:?}")))
        };
        let (b, bstar) = (wire("b_wire")?, wire("bstar_wire")?);
        let circuit = Circuit::from_json(&Value::Object(obj).to_string())?;
        Self::new(&circuit, b, bstar)
    }

    pub fn input_bits(&self) -> usize {
        self.circuit.param_bits()
    }

    pub fn circuit(&self) -> &CircuitFamily {
        &self.circuit
    }

    /// `(Pr[b=0 ∧ b*=1], Pr[b=1 ∧ b*=1])` as numerators over the
    /// machine's denominator.
    fn masses(&self, x: BitString) -> Result<(u64, u64)> {
        let xi = check_param(&self.circuit, x)?;
        let row = self.circuit.counts(xi);
        Ok((row[0b01], row[0b11]))
    }

    /// `Pr[b = 1 | b* = 1]`.
    pub fn conditional_one(&self, x: BitString) -> Result<BigRational> {
        let (q0, q1) = self.masses(x)?;
        if q0 + q1 == 0 {
            return Err(Error::Precondition(format!("Pr[b* = 1] = 0 on input {x}")));
        }
        Ok(rat(q1 as i64, (q0 + q1) as i64))
    }
}

/// Output of the gadget on `(x, c)`: `x‖1` when `b = c` and `b* = 1`,
/// otherwise the all-zero string `⊥`.
pub fn postselect_gadget(mach: &PostselectMachine, x: BitString, c: bool) -> Result<Distribution> {
    let (q0, q1) = mach.masses(x)?;
    if q0 + q1 == 0 {
        return Err(Error::Precondition(format!("Pr[b* = 1] = 0 on input {x}")));
    }
    let hit = BigRational::new(BigInt::from(if c { q1 } else { q0 }), BigInt::from(mach.circuit.denom()));
    let tagged = x.push(true)?;
    let bottom = BitString::zeros(x.len() + 1)?;
    Distribution::new(tagged.len(), [(tagged, hit.clone()), (bottom, BigRational::one() - hit)])
}

/// The two-member family `c ↦ gadget(x, c)`.
pub fn gadget_family(mach: &PostselectMachine, x: BitString) -> Result<TableFamily> {
    TableFamily::new(&[postselect_gadget(mach, x, false)?, postselect_gadget(mach, x, true)?])
}

/// `Pr[x‖1 ← gadget(x, 1)] / Pr[x‖1 ← gadget(x, 0)]`, which equals
/// `Pr[b=1 | b*=1] / Pr[b=0 | b*=1]`.
pub fn gadget_ratio(mach: &PostselectMachine, x: BitString) -> Result<MlRatio> {
    let fam = gadget_family(mach, x)?;
    let obs = SampleSet { samples: vec![x.push(true)?], seed: 0 };
    let l1 = likelihood(&fam, BitString::new(1, 1)?, &obs)?;
    let l0 = likelihood(&fam, BitString::new(0, 1)?, &obs)?;
    Ok(if l0.is_zero() { MlRatio::Infinite } else { MlRatio::Finite(l1 / l0) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    InLanguage,
    NotInLanguage,
}

/// Runs the likelihood maximizer over `c` on the observation `x‖1` and
/// decides by the likelihood ratio: at least 3 means `x` is in the
/// language, at most 1/3 means it is not, anything between is reported as
/// a promise violation.
pub fn decide_by_mle(mach: &PostselectMachine, x: BitString) -> Result<Verdict> {
    let fam = gadget_family(mach, x)?;
    let mle: MleResult = eval_mle(&fam, &SampleSet { samples: vec![x.push(true)?], seed: 0 })?;
    let ratio = gadget_ratio(mach, x)?;
    let three = BigRational::from_integer(3.into());
    let verdict = match &ratio {
        MlRatio::Infinite => Verdict::InLanguage,
        MlRatio::Finite(r) if *r >= three => Verdict::InLanguage,
        MlRatio::Finite(r) if r * &three <= BigRational::one() => Verdict::NotInLanguage,
        MlRatio::Finite(r) => {
            return Err(Error::Promise(format!("likelihood ratio {r} on input {x} lies strictly between 1/3 and 3")))
        }
    };
    debug_assert_eq!(mle.argmax_z.bit(0), verdict == Verdict::InLanguage);
    Ok(verdict)
}

/// Machine with `b* = [r < post_below]` and `b = [r < accept_below] ⊕ parity(x)`
/// over `rand_bits` random bits, so `Pr[b = 1 | b* = 1]` is
/// `accept_below / post_below` on even-parity inputs and its complement on
/// odd ones.
pub fn threshold_machine(input_bits: usize, rand_bits: usize, accept_below: u64, post_below: u64) -> Result<PostselectMachine> {
    if accept_below > post_below || post_below == 0 || post_below > 1 << rand_bits {
        return Err(Error::Invalid(format!(
            "need 0 <= accept_below <= post_below <= 2^rand_bits, post_below >= 1 (got {accept_below}, {post_below})"
        )));
    }
    let mut b = CircuitBuilder::new(input_bits, rand_bits);
    let r: Vec<u32> = (0..rand_bits).map(|j| b.rand(j)).collect();
    let post = b.less_than(&r, post_below);
    let mut bit = b.less_than(&r, accept_below);
    for i in 0..input_bits {
        bit = b.xor(bit, b.param(i));
    }
    let c = b.finish(vec![bit, post])?;
    PostselectMachine::new(&c, c.desc().outputs[0], c.desc().outputs[1])
}

/// Largest number of selector bits spent on the smoothing weight.
pub const SMOOTHING_EXTRA_BITS: usize = 12;

/// A family mixed with the uniform distribution.
#[derive(Clone, Debug)]
pub struct SmoothedFamily {
    pub family: CircuitFamily,
    /// Weight actually used: the target weight rounded down to a multiple
    /// of `2^-extra_bits`.
    pub weight: BigRational,
    /// Target weight `(α − α²) 2^-(m+1-p)` with `α = 2^(-1/(2 eps))`.
    pub target_weight: f64,
    pub extra_bits: usize,
    pub min_exponent: u32,
}

impl SmoothedFamily {
    /// Upper bound on `target_weight − weight`.
    pub fn rounding_bound(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::one() << self.extra_bits)
    }
}

/// Rational `(lo, hi)` around `2^(-1/e)`, from bracketing partial sums of
/// the series for `exp(-y)` at `y = ln 2 / e` and a bracket on `ln 2`.
fn root_of_half(e: u64) -> (BigRational, BigRational) {
    let ten16 = BigInt::from(10u64.pow(16));
    let ln2_lo = BigRational::new(BigInt::from(6_931_471_805_599_453u64), ten16.clone());
    let ln2_hi = BigRational::new(BigInt::from(6_931_471_805_599_454u64), ten16);
    // partial sums through an odd number of terms lie above exp(-y), through an even number below
    let partial = |y: &BigRational, terms: usize| {
        let mut sum = BigRational::zero();
        let mut term = BigRational::one();
        for i in 0..terms {
            sum += &term;
            term = -(term * y) / BigInt::from(i as u64 + 1);
        }
        sum
    };
    let e = BigInt::from(e);
    (partial(&(ln2_hi / &e), 14), partial(&(ln2_lo / &e), 15))
}

/// Rigorous bounds on `(α − α²) 2^-(m+1-p)`, `α = 2^(-1/(2 eps))`.
pub fn smoothing_weight_bounds(eps: u64, m: u32, p: u32) -> Result<(BigRational, BigRational)> {
    if eps == 0 {
        return Err(Error::Precondition("eps must be at least 1".into()));
    }
    if m < p {
        return Err(Error::Precondition(format!("m = {m} below p = {p}")));
    }
    let (lo, hi) = root_of_half(2 * eps);
    // α − α² decreases for α ≥ 1/2
    let scale = BigRational::new(BigInt::one(), BigInt::one() << (m + 1 - p));
    Ok(((&hi - &hi * &hi) * &scale, (&lo - &lo * &lo) * &scale))
}

pub fn smoothing_weight(eps: u64, m: u32, p: u32) -> f64 {
    let a = (-1.0 / (2.0 * eps as f64)).exp2();
    (a - a * a) * (-((m + 1 - p) as f64)).exp2()
}

/// Mixes every `D(z)` with the uniform distribution. `m` is the smallest
/// integer with every positive probability at least `2^-m`, raised to the
/// output width when smaller, so the weight stays below 1/2.
pub fn smooth_family(fam: &CircuitFamily, eps: u64) -> Result<SmoothedFamily> {
    let p = fam.out_bits();
    let m = min_prob_exponent(fam).max(p as u32);
    let (lo, _) = smoothing_weight_bounds(eps, m, p as u32)?;
    let rho = fam.rand_bits();
    let room = MAX_RAND_BITS.saturating_sub(rho + p);
    let extra = room.min(SMOOTHING_EXTRA_BITS);
    if extra == 0 {
        return Err(Error::Limit(format!("no randomness left for smoothing ({rho} + {p} bits in use)")));
    }
    let numer = (lo * BigRational::from_integer(BigInt::one() << extra)).floor().to_integer();
    let numer = numer.to_u64().unwrap();
    let weight = BigRational::new(BigInt::from(numer), BigInt::one() << extra);
    let target = smoothing_weight(eps, m, p as u32);
    if numer == 0 {
        return Ok(SmoothedFamily { family: fam.clone(), weight, target_weight: target, extra_bits: extra, min_exponent: m });
    }
    let k = fam.param_bits();
    let mut b = CircuitBuilder::new(k, rho + extra + p);
    let params: Vec<u32> = (0..k).map(|i| b.param(i)).collect();
    let rands: Vec<u32> = (0..rho).map(|j| b.rand(j)).collect();
    let inner = b.inline(fam.circuit().desc(), &params, &rands);
    let sel_bits: Vec<u32> = (0..extra).map(|j| b.rand(rho + j)).collect();
    let sel = b.less_than(&sel_bits, numer);
    let outputs = inner
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u = b.rand(rho + extra + i);
            b.mux(sel, u, w)
        })
        .collect();
    Ok(SmoothedFamily {
        family: CircuitFamily::new(b.finish(outputs)?),
        weight,
        target_weight: target,
        extra_bits: extra,
        min_exponent: m,
    })
}

/// Outcome of checking the smoothing chain over every `(x, h)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SmoothingCheck {
    pub pairs: u64,
    /// Pairs whose smoothed ratio is at most `2^(1/(2 eps))`.
    pub premise_pairs: u64,
    pub violations: u64,
}

/// Every `(x, h)` whose smoothed likelihood ratio is at most
/// `2^(1/(2 eps))` must have an original ratio of at most `2^(1/eps)`.
pub fn check_smoothing_ratio(fam: &CircuitFamily, smoothed: &SmoothedFamily, eps: u64) -> Result<SmoothingCheck> {
    let k = fam.param_bits();
    let m = fam.out_bits();
    let mut out = SmoothingCheck { pairs: 0, premise_pairs: 0, violations: 0 };
    let best: Vec<u64> = (0..1usize << m).map(|x| (0..1u32 << k).map(|a| fam.counts(a)[x]).max().unwrap()).collect();
    for x in BitString::all(m) {
        if best[x.value() as usize] == 0 {
            continue;
        }
        for h in BitString::all(k) {
            out.pairs += 1;
            if crate::mle::ml_ratio(&smoothed.family, x, h)?.at_most_root_of_two(2 * eps) {
                out.premise_pairs += 1;
                if !crate::mle::ml_ratio(fam, x, h)?.at_most_root_of_two(eps) {
                    out.violations += 1;
                }
            }
        }
    }
    Ok(out)
}

/// `ceil(1000 m^2 eps^2 (k + log2(2 delta)))`.
pub fn repeat_t(m: u64, eps: u64, k: u64, delta: u64) -> u64 {
    let v = 1000.0 * (m * m * eps * eps) as f64 * (k as f64 + (2.0 * delta as f64).log2());
    v.ceil() as u64
}

/// `z ↦ D(z)^t`, outcomes written as `x_1‖...‖x_t`.
#[derive(Clone, Debug)]
pub struct RepeatedFamily<F> {
    base: F,
    t: usize,
    table: Option<TableFamily>,
}

impl<F: Family> RepeatedFamily<F> {
    /// With `sampling_only`, tuples too wide to tabulate are allowed and only
    /// the sample-based methods work.
    pub fn new(base: F, t: usize, sampling_only: bool) -> Result<Self> {
        if t == 0 {
            return Err(Error::Precondition("t must be at least 1".into()));
        }
        let table = if base.out_bits() * t <= MAX_OUT_BITS {
            let dists: Result<Vec<_>> = BitString::all(base.param_bits())
                .map(|z| tensor_power(&dist_vector(&base, z)?, t))
                .collect();
            match TableFamily::new(&dists?) {
                Ok(tab) => Some(tab),
                Err(Error::Limit(_)) if sampling_only => None,
                Err(e) => return Err(e),
            }
        } else if sampling_only {
            None
        } else {
            return Err(Error::Limit(format!(
                "{} tuple bits exceed {MAX_OUT_BITS}; use sampling-only mode",
                base.out_bits() * t
            )));
        };
        Ok(RepeatedFamily { base, t, table })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn base(&self) -> &F {
        &self.base
    }

    /// The tabulated family, when the tuples are narrow enough.
    pub fn table(&self) -> Option<&TableFamily> {
        self.table.as_ref()
    }

    /// Likelihood of one tuple: the product over its coordinates.
    pub fn likelihood(&self, z: BitString, tuple: &[BitString]) -> Result<BigRational> {
        check_len(self.t, tuple.len())?;
        likelihood(&self.base, z, &SampleSet { samples: tuple.to_vec(), seed: 0 })
    }

    pub fn split(&self, x: BitString) -> Result<Vec<BitString>> {
        let p = self.base.out_bits();
        check_len(p * self.t, x.len())?;
        Ok((0..self.t).map(|i| x.suffix(p * (self.t - i)).prefix(p)).collect())
    }

    /// One tuple from `D(z)^t`.
    pub fn sample(&self, z: BitString, seed: u64) -> Result<Vec<BitString>> {
        Ok(crate::family::draw_samples(&self.base, z, self.t, seed)?.samples)
    }

    /// Likelihood maximizer for one tuple.
    pub fn eval_mle(&self, tuple: &[BitString]) -> Result<MleResult> {
        check_len(self.t, tuple.len())?;
        eval_mle(&self.base, &SampleSet { samples: tuple.to_vec(), seed: 0 })
    }
}

/// Repetition count from [`repeat_t`] with `m` the family's smallest
/// probability exponent.
pub fn repeat_family<F: Family>(base: F, eps: u64, delta: u64, sampling_only: bool) -> Result<RepeatedFamily<F>> {
    let m = min_prob_exponent(&base) as u64;
    let t = repeat_t(m, eps, base.param_bits() as u64, delta);
    RepeatedFamily::new(base, t as usize, sampling_only)
}

/// A generator with advice `μ ∈ [n]` in `ceil(log2 n)` bits, emitting `n` bits.
#[derive(Clone, Debug)]
pub struct PrgSpec {
    pub gen: CircuitFamily,
}

pub fn advice_bits(n: usize) -> usize {
    n.next_power_of_two().trailing_zeros() as usize
}

impl PrgSpec {
    pub fn new(gen: CircuitFamily) -> Result<Self> {
        let n = gen.out_bits();
        if n == 0 {
            return Err(Error::Invalid("generator emits no bits".into()));
        }
        check_len(advice_bits(n), gen.param_bits())
            .map_err(|_| Error::Invalid(format!("{n}-bit generator needs {} advice bits", advice_bits(n))))?;
        Ok(PrgSpec { gen })
    }

    /// Circuit JSON plus `"role": "prg"`.
    pub fn from_json(text: &str) -> Result<Self> {
        let obj = role_json(text, "prg")?;
        Self::new(CircuitFamily::from_json(&Value::Object(obj).to_string())?)
    }

    pub fn n(&self) -> usize {
        self.gen.out_bits()
    }

    pub fn advice(&self, mu: usize) -> Result<BitString> {
        if mu >= self.n() {
            return Err(Error::Invalid(format!("advice {mu} outside [0, {})", self.n())));
        }
        BitString::new(mu as u32, advice_bits(self.n()))
    }
}

/// Generator whose output has even parity under advice `mu_star` and is
/// uniform under every other advice.
pub fn parity_prg(n: usize, mu_star: usize) -> Result<PrgSpec> {
    let mb = advice_bits(n);
    if n < 2 || mu_star >= n {
        return Err(Error::Invalid(format!("parity generator needs n >= 2 and mu_star < n (got {n}, {mu_star})")));
    }
    let mut b = CircuitBuilder::new(mb, n);
    // 1 iff the advice equals mu_star
    let mut hit: Option<u32> = None;
    for i in 0..mb {
        let bit = if (mu_star >> (mb - 1 - i)) & 1 == 1 { b.param(i) } else { b.not(b.param(i)) };
        hit = Some(match hit {
            None => bit,
            Some(h) => b.and(h, bit),
        });
    }
    let mut outs: Vec<u32> = (0..n - 1).map(|j| b.rand(j)).collect();
    let parity = b.gate(crate::circuit::Op::Xor, &outs.clone());
    let last = match hit {
        Some(h) => b.mux(h, parity, b.rand(n - 1)),
        None => parity,
    };
    outs.push(last);
    PrgSpec::new(CircuitFamily::new(b.finish(outs)?))
}

/// Generator ignoring its randomness and emitting `s`.
pub fn constant_prg(s: BitString) -> Result<PrgSpec> {
    let n = s.len();
    let mut b = CircuitBuilder::new(advice_bits(n), 1);
    let zero = b.xor(b.rand(0), b.rand(0));
    let one = b.not(zero);
    let outs = (0..n).map(|i| if s.bit(i) { one } else { zero }).collect();
    PrgSpec::new(CircuitFamily::new(b.finish(outs)?))
}

/// Parameter `(μ, b)`, output `(ξ, μ)` with `ξ ← Gen(μ)` when `b = 0` and
/// `ξ` uniform when `b = 1`. The sampler draws `μ` uniformly from `[n]`
/// and `b` uniformly.
pub fn prg_learning_instance(prg: &PrgSpec, params: LearnParams) -> Result<LearningInstance> {
    let n = prg.n();
    let mb = advice_bits(n);
    let gr = prg.gen.rand_bits();
    let mut b = CircuitBuilder::new(mb + 1, gr + n);
    let advice: Vec<u32> = (0..mb).map(|i| b.param(i)).collect();
    let rands: Vec<u32> = (0..gr).map(|j| b.rand(j)).collect();
    let gen_out = b.inline(prg.gen.circuit().desc(), &advice, &rands);
    let flag = b.param(mb);
    let mut outs: Vec<u32> = gen_out
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            let u = b.rand(gr + j);
            b.mux(flag, u, g)
        })
        .collect();
    outs.extend(&advice);
    let family = CircuitFamily::new(b.finish(outs)?);
    let weight = rat(1, 2 * n as i64);
    let support: Vec<(BitString, BigRational)> = (0..n)
        .flat_map(|mu| [false, true].map(move |bit| (mu, bit)))
        .map(|(mu, bit)| Ok((prg.advice(mu)?.push(bit)?, weight.clone())))
        .collect::<Result<_>>()?;
    let sampler = Sampler::Explicit(Distribution::new(mb + 1, support)?);
    LearningInstance::new(sampler, family, params)
}

/// `(n, advice bits)` of an instance built by [`prg_learning_instance`].
fn prg_shape(inst: &LearningInstance) -> Result<(usize, usize)> {
    let k = inst.family.param_bits();
    let out = inst.family.out_bits();
    if k == 0 || out + 1 < k {
        return Err(Error::Invalid("not a generator learning instance".into()));
    }
    let n = out + 1 - k;
    if advice_bits(n) != k - 1 {
        return Err(Error::Invalid("not a generator learning instance".into()));
    }
    Ok((n, k - 1))
}

fn tagged(samples: &[BitString], mu: BitString) -> Result<SampleSet> {
    let samples = samples.iter().map(|x| x.concat(mu)).collect::<Result<_>>()?;
    Ok(SampleSet { samples, seed: 0 })
}

/// The learner's `b` answer on the given `n`-bit samples tagged with `mu`.
fn learner_bit(learner: &ProperLearner, inst: &LearningInstance, xs: &[BitString], mu: BitString, seed: u64) -> Result<bool> {
    let h = learner(&tagged(xs, mu)?, seed)?;
    check_len(inst.family.param_bits(), h.len())?;
    Ok(h.bit(h.len() - 1))
}

/// True iff the learner answers `b = 1` in all `reps` runs on fresh
/// uniform samples tagged with `mu`.
pub fn check_mu(learner: &ProperLearner, inst: &LearningInstance, mu: usize, reps: u64, seed: u64) -> Result<bool> {
    if reps == 0 {
        return Err(Error::Precondition("reps must be at least 1".into()));
    }
    let (n, mb) = prg_shape(inst)?;
    if mu >= n {
        return Err(Error::Invalid(format!("advice {mu} outside [0, {n})")));
    }
    let tag = BitString::new(mu as u32, mb)?;
    let t = inst.params.t as usize;
    for j in 0..reps {
        let s = derive_seed(seed, stream::CHECK, j);
        let mut coins = Coins::new(s, stream::CHECK, 0);
        let xs: Vec<BitString> = (0..t).map(|_| BitString::raw(coins.below(1 << n) as u32, n)).collect();
        if !learner_bit(learner, inst, &xs, tag, derive_seed(s, stream::COINS, 0))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Guesses whether `samples` are uniform (true) or generator outputs
/// (false): false iff some advice is both flagged by [`check_mu`] and gets
/// a `b = 0` answer on the samples.
pub fn prg_breaker(
    learner: &ProperLearner,
    inst: &LearningInstance,
    samples: &[BitString],
    reps: u64,
    seed: u64,
) -> Result<bool> {
    let (n, mb) = prg_shape(inst)?;
    for x in samples {
        check_len(n, x.len())?;
    }
    for mu in 0..n {
        let tag = BitString::new(mu as u32, mb)?;
        let b = learner_bit(learner, inst, samples, tag, derive_seed(seed, stream::COINS, mu as u64))?;
        if !b && check_mu(learner, inst, mu, reps, derive_seed(seed, stream::CHECK, mu as u64))? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BreakerReport {
    /// Trials answered "uniform" on uniform samples.
    pub on_uniform: Rate,
    /// Trials answered "uniform" on generator samples.
    pub on_generator: Rate,
    pub advantage: f64,
}

/// Runs the breaker on `trials` uniform and `trials` generator sample sets
/// (advice `mu_star`, `t` samples each).
pub fn breaker_advantage(
    learner: &ProperLearner,
    prg: &PrgSpec,
    inst: &LearningInstance,
    mu_star: usize,
    trials: u64,
    reps: u64,
    seed: u64,
) -> Result<BreakerReport> {
    let n = prg.n();
    let advice = prg.advice(mu_star)?;
    let t = inst.params.t as usize;
    let (mut u_ok, mut g_ok) = (0, 0);
    for i in 0..trials {
        let s = derive_seed(seed, stream::TRIAL, i);
        let mut coins = Coins::new(s, stream::TARGET, 0);
        let uniform: Vec<BitString> = (0..t).map(|_| BitString::raw(coins.below(1 << n) as u32, n)).collect();
        let gen: Vec<BitString> = prg
            .gen
            .sample_range(advice.value(), s, stream::SAMPLES, 0, t)
            .into_iter()
            .map(|x| BitString::raw(x, n))
            .collect();
        u_ok += prg_breaker(learner, inst, &uniform, reps, derive_seed(s, stream::CHECK, 0))? as u64;
        g_ok += prg_breaker(learner, inst, &gen, reps, derive_seed(s, stream::CHECK, 1))? as u64;
    }
    let on_uniform = Rate::new(u_ok, trials);
    let on_generator = Rate::new(g_ok, trials);
    let advantage = (on_uniform.rate - on_generator.rate).abs();
    Ok(BreakerReport { on_uniform, on_generator, advantage })
}

/// Exhaustive likelihood maximizer as a learner.
pub fn mle_learner(fam: &CircuitFamily) -> impl Fn(&SampleSet, u64) -> Result<BitString> + '_ {
    move |s, _| Ok(eval_mle(fam, s)?.argmax_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{kl_divergence, statistical_distance};
    use crate::family::{draw_samples, is_fully_supported};
    use crate::mle::ml_ratio;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn gadget_examples() {
        // b ≡ 1, b* ≡ 1
        let always = PostselectMachine::from_json(
            r#"{"role":"postselect","b_wire":2,"bstar_wire":2,"param_bits":1,"rand_bits":1,
                "out_bits":1,"gates":[{"op":"XOR","in":[1,1]},{"op":"NOT","in":[3]}],"outputs":[0]}"#,
        )
        .unwrap_err();
        assert!(matches!(always, Error::Invalid(_)), "wire 2 is randomness, not the constant");
        let always = PostselectMachine::from_json(
            r#"{"role":"postselect","b_wire":3,"bstar_wire":3,"param_bits":1,"rand_bits":1,
                "out_bits":1,"gates":[{"op":"XOR","in":[1,1]},{"op":"NOT","in":[2]}],"outputs":[0]}"#,
        )
        .unwrap();
        let x = bs("1");
        assert_eq!(postselect_gadget(&always, x, true).unwrap(), Distribution::point_mass(bs("11")));
        assert_eq!(postselect_gadget(&always, x, false).unwrap(), Distribution::point_mass(bs("00")));

        // Pr[b* = 1] = 1/2, Pr[b = 1 | b* = 1] = 3/4
        let m = threshold_machine(2, 3, 3, 4).unwrap();
        assert_eq!(m.conditional_one(bs("00")).unwrap(), rat(3, 4));
        assert_eq!(gadget_ratio(&m, bs("00")).unwrap(), MlRatio::Finite(rat(3, 1)));
        assert_eq!(gadget_ratio(&m, bs("01")).unwrap(), MlRatio::Finite(rat(1, 3)));
        // fair coin, b* ≡ 1
        let fair = threshold_machine(1, 1, 1, 2).unwrap();
        assert_eq!(gadget_ratio(&fair, bs("0")).unwrap(), MlRatio::Finite(rat(1, 1)));
        let never = threshold_machine(1, 2, 0, 1).unwrap();
        assert_eq!(gadget_ratio(&never, bs("1")).unwrap(), MlRatio::Infinite);
    }

    #[test]
    fn postselection_needs_mass() {
        let c = Circuit::from_json(
            r#"{"param_bits":1,"rand_bits":1,"out_bits":1,"gates":[{"op":"XOR","in":[1,1]}],"outputs":[2]}"#,
        )
        .unwrap();
        let m = PostselectMachine::new(&c, 1, 2).unwrap();
        assert!(postselect_gadget(&m, bs("0"), true).is_err());
        assert!(PostselectMachine::from_json(r#"{"role":"prg","param_bits":0,"rand_bits":1,"out_bits":1,"gates":[],"outputs":[0]}"#).is_err());
    }

    #[test]
    fn decisions() {
        let yes = threshold_machine(1, 2, 3, 4).unwrap();
        assert_eq!(decide_by_mle(&yes, bs("0")).unwrap(), Verdict::InLanguage);
        assert_eq!(decide_by_mle(&yes, bs("1")).unwrap(), Verdict::NotInLanguage);
        let gap = threshold_machine(1, 2, 2, 4).unwrap();
        assert!(matches!(decide_by_mle(&gap, bs("0")), Err(Error::Promise(_))));
    }

    #[test]
    fn smoothing_weight_values() {
        assert!((smoothing_weight(1, 3, 2) - 0.051777).abs() < 1e-6);
        let (lo, hi) = smoothing_weight_bounds(1, 3, 2).unwrap();
        assert!(lo <= hi);
        let gap = (&hi - &lo).to_f64().unwrap();
        assert!(gap < 1e-12 && lo.to_f64().unwrap() <= smoothing_weight(1, 3, 2) + 1e-15);
    }

    /// out = (z0 and r0, z1 xor r1 r2): not fully supported for z0 = 0.
    fn sparse() -> CircuitFamily {
        CircuitFamily::from_json(
            r#"{"param_bits":2,"rand_bits":3,"out_bits":2,
                "gates":[{"op":"AND","in":[0,2]},{"op":"AND","in":[3,4]},{"op":"XOR","in":[1,6]}],
                "outputs":[5,7]}"#,
        )
        .unwrap()
    }

    #[test]
    fn smoothing_fills_the_support() {
        let fam = sparse();
        let s = smooth_family(&fam, 1).unwrap();
        assert_eq!(s.min_exponent, 3);
        assert!(is_fully_supported(&s.family));
        assert!(s.weight > BigRational::zero());
        assert!(s.target_weight - s.weight.to_f64().unwrap() <= s.rounding_bound().to_f64().unwrap());
        let floor = &s.weight / BigInt::from(4);
        for z in BitString::all(2) {
            let d = dist_vector(&s.family, z).unwrap();
            let expect = dist_vector(&fam, z).unwrap().mix(&Distribution::uniform(2).unwrap(), &s.weight).unwrap();
            assert_eq!(d, expect);
            assert!(d.iter().all(|(_, p)| *p >= floor));
        }
        let check = check_smoothing_ratio(&fam, &s, 1).unwrap();
        assert_eq!(check.violations, 0);
        assert!(check.premise_pairs > 0);
    }

    #[test]
    fn smoothing_uniform_and_vanishing_weight() {
        let uni = CircuitFamily::from_json(r#"{"param_bits":1,"rand_bits":2,"out_bits":2,"gates":[],"outputs":[1,2]}"#)
            .unwrap();
        let s = smooth_family(&uni, 2).unwrap();
        for z in BitString::all(1) {
            assert_eq!(dist_vector(&s.family, z).unwrap(), dist_vector(&uni, z).unwrap());
        }
        let s = smooth_family(&sparse(), 1 << 20).unwrap();
        assert!(s.weight.is_zero());
        assert_eq!(s.family.circuit(), sparse().circuit());
    }

    #[test]
    fn kl_gap_on_a_point_mass_is_the_log_ratio() {
        let s = smooth_family(&sparse(), 2).unwrap();
        let fam = &s.family;
        for x in BitString::all(2) {
            let px = Distribution::point_mass(x);
            let kls: Vec<f64> =
                BitString::all(2).map(|a| kl_divergence(&px, &dist_vector(fam, a).unwrap()).unwrap()).collect();
            let min = kls.iter().cloned().fold(f64::INFINITY, f64::min);
            for h in BitString::all(2) {
                let lhs = kls[h.value() as usize] - min;
                assert!((lhs - ml_ratio(fam, x, h).unwrap().log2()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repetition() {
        assert_eq!(repeat_t(1, 1, 1, 1), 2000);
        let fam = sparse();
        let rep = RepeatedFamily::new(fam.clone(), 3, false).unwrap();
        let tab = rep.table().unwrap();
        let z = bs("11");
        let tuple = [bs("10"), bs("01"), bs("11")];
        let joined = tuple[0].concat(tuple[1]).unwrap().concat(tuple[2]).unwrap();
        assert_eq!(rep.split(joined).unwrap(), tuple.to_vec());
        let direct = crate::family::exact_prob(tab, z, joined).unwrap();
        assert_eq!(rep.likelihood(z, &tuple).unwrap(), direct);
        let single = SampleSet { samples: vec![joined], seed: 0 };
        let a = eval_mle(tab, &single).unwrap();
        let b = rep.eval_mle(&tuple).unwrap();
        assert_eq!((a.argmax_z, a.max_likelihood, a.tie_count), (b.argmax_z, b.max_likelihood, b.tie_count));
        assert!(RepeatedFamily::new(fam.clone(), 9, false).is_err());
        let wide = RepeatedFamily::new(fam.clone(), 9, true).unwrap();
        assert!(wide.table().is_none());
        assert_eq!(wide.sample(z, 3).unwrap().len(), 9);
        assert!(repeat_family(fam, 1, 1, false).is_err());
    }

    fn prg_instance(prg: &PrgSpec, t: u64) -> LearningInstance {
        prg_learning_instance(prg, LearnParams::new(4, 10, t).unwrap()).unwrap()
    }

    #[test]
    fn generator_instance_shape() {
        let prg = parity_prg(4, 2).unwrap();
        let inst = prg_instance(&prg, 8);
        let fam = &inst.family;
        assert_eq!((fam.param_bits(), fam.out_bits()), (3, 6));
        // b = 1: uniform ξ, advice echoed
        let d = dist_vector(fam, bs("011")).unwrap();
        assert_eq!(d.support_size(), 16);
        assert!(d.iter().all(|(x, p)| x.suffix(2) == bs("01") && *p == rat(1, 16)));
        let far = statistical_distance(&dist_vector(fam, bs("100")).unwrap(), &dist_vector(fam, bs("101")).unwrap());
        assert_eq!(far.unwrap(), rat(1, 2));
        let near = statistical_distance(&dist_vector(fam, bs("000")).unwrap(), &dist_vector(fam, bs("001")).unwrap());
        assert_eq!(near.unwrap(), rat(0, 1));
        let konst = prg_instance(&constant_prg(bs("0110")).unwrap(), 8);
        assert_eq!(dist_vector(&konst.family, bs("110")).unwrap(), Distribution::point_mass(bs("011011")));
        assert_eq!(inst.sampler.distribution().unwrap().support_size(), 8);
        assert!(parity_prg(4, 4).is_err());
    }

    #[test]
    fn checker_and_breaker_with_fixed_learners() {
        let prg = parity_prg(4, 2).unwrap();
        let inst = prg_instance(&prg, 8);
        let ones = |_: &SampleSet, _: u64| Ok(bs("001"));
        let zeros = |_: &SampleSet, _: u64| Ok(bs("000"));
        assert!(check_mu(&ones, &inst, 1, 4, 0).unwrap());
        assert!(!check_mu(&zeros, &inst, 1, 4, 0).unwrap());
        let xs = vec![bs("0000"); 8];
        assert!(prg_breaker(&ones, &inst, &xs, 4, 0).unwrap());
        assert!(prg_breaker(&zeros, &inst, &xs, 4, 0).unwrap());
    }

    #[test]
    fn breaker_with_the_likelihood_learner() {
        let prg = parity_prg(4, 2).unwrap();
        let inst = prg_instance(&prg, 16);
        let learner = mle_learner(&inst.family);
        let gen = draw_samples(&prg.gen, bs("10"), 16, 1).unwrap().samples;
        assert!(!prg_breaker(&learner, &inst, &gen, 16, 2).unwrap());
        let report = breaker_advantage(&learner, &prg, &inst, 2, 40, 16, 3).unwrap();
        assert!(report.advantage >= 0.9, "{report:?}");
    }
}
