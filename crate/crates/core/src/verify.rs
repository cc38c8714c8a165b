//! The claim suite: each check runs on built-in corpora and reports
//! whether the inequality held everywhere it applies.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bits::BitString;
use crate::bounds::{verify_hoeffding_empirical, verify_sd_threshold, verify_tensor_amplification};
use crate::dist::{half_l1, kl_divergence, rat, statistical_distance, tensor_sd, Distribution};
use crate::error::{Error, Result};
use crate::estimate::{exact_estimator, Estimator, EstimatorMode};
use crate::family::{dist_vector, draw_samples, CircuitFamily, Family, SampleSet};
use crate::fixtures::{self, AgnosticFixture};
use crate::learner::{agnostic_opt, learn_kl, learn_sd_agnostic, oracle_learn, DisMode, GapOracle, DIS_PRECISION};
use crate::mle::{eval_mle, likelihood, ml_ratio, MlRatio};
use crate::owpuzz::{claim_useful, owp_completeness};
use crate::reductions::{
    breaker_advantage, check_smoothing_ratio, decide_by_mle, gadget_ratio, mle_learner, prg_learning_instance,
    smooth_family, BreakerReport, Verdict,
};
use crate::instance::LearnParams;
use crate::report::Exact;
use crate::rng::{derive_seed, stream, Coins};
use crate::stats::Rate;

/// Every claim id, in suite order.
pub const CLAIMS: &[&str] = &[
    "sd_axioms",
    "kl_axioms",
    "tensor_monotone",
    "probabilistic_argument",
    "statistical_distance",
    "estimate_soundness",
    "mle_oracle",
    "owp_completeness",
    "owp_useful",
    "NP_distinguish",
    "Distinguish_well_in_S",
    "Not_fooled_in_U",
    "behave_well",
    "ag_SD",
    "kl_identity",
    "kl_learner",
    "smoothing_ratio",
    "gadget_monotone",
    "postselect_decision",
    "prg_breaker",
    "hoeffding",
];

#[derive(Clone, Debug, Serialize)]
pub struct ClaimResult {
    pub claim: String,
    pub holds: bool,
    /// Individual comparisons made.
    pub checked: u64,
    pub violations: u64,
    pub detail: Value,
}

impl ClaimResult {
    fn new(claim: &str, checked: u64, violations: u64, detail: Value) -> Self {
        ClaimResult { claim: claim.into(), holds: violations == 0, checked, violations, detail }
    }
}

/// Corpus sizes and trial counts for the suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub axiom_pairs: usize,
    pub amplification_pairs: usize,
    pub owp_trials: u64,
    pub agnostic_runs: u64,
    pub breaker_trials: u64,
    pub breaker_reps: u64,
    /// Test hook: replace the distinguisher by the constant 0.
    pub broken_dis: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: fixtures::DEFAULT_SEED,
            axiom_pairs: 1000,
            amplification_pairs: 200,
            owp_trials: 500,
            agnostic_runs: 200,
            breaker_trials: 500,
            breaker_reps: 16,
            broken_dis: false,
        }
    }
}

/// Runs the named claims (all of them when `ids` is empty), in suite order.
pub fn run_suite(ids: &[String], cfg: &SuiteConfig) -> Result<Vec<ClaimResult>> {
    for id in ids {
        if !CLAIMS.contains(&id.as_str()) {
            return Err(Error::Invalid(format!("unknown claim {id:?}; known: {}", CLAIMS.join(", "))));
        }
    }
    let wanted = |c: &str| ids.is_empty() || ids.iter().any(|i| i == c);
    let mut scan = None;
    let mut out = Vec::new();
    for &c in CLAIMS.iter().filter(|c| wanted(c)) {
        let r = match c {
            "NP_distinguish" | "Distinguish_well_in_S" | "Not_fooled_in_U" => {
                if scan.is_none() {
                    scan = Some(distinguisher_scan(cfg)?);
                }
                let s = scan.as_ref().unwrap();
                match c {
                    "NP_distinguish" => s.np_distinguish(),
                    "Distinguish_well_in_S" => s.distinguish_well(),
                    _ => s.not_fooled(),
                }
            }
            _ => run_claim(c, cfg)?,
        };
        out.push(r);
    }
    Ok(out)
}

pub fn run_claim(id: &str, cfg: &SuiteConfig) -> Result<ClaimResult> {
    let seed = cfg.seed;
    match id {
        "sd_axioms" => sd_axioms(cfg.axiom_pairs, seed),
        "kl_axioms" => kl_axioms(cfg.axiom_pairs, seed),
        "tensor_monotone" => tensor_monotone(100, seed),
        "probabilistic_argument" => probabilistic_argument(cfg.amplification_pairs, seed),
        "statistical_distance" => sd_threshold_claim(cfg.amplification_pairs, seed),
        "estimate_soundness" => estimate_soundness(20_000, seed),
        "mle_oracle" => mle_oracle(seed),
        "owp_completeness" => Ok(owp_completeness_claim(cfg.owp_trials, seed)?.0),
        "owp_useful" => owp_useful(seed),
        "NP_distinguish" => Ok(distinguisher_scan(cfg)?.np_distinguish()),
        "Distinguish_well_in_S" => Ok(distinguisher_scan(cfg)?.distinguish_well()),
        "Not_fooled_in_U" => Ok(distinguisher_scan(cfg)?.not_fooled()),
        "behave_well" => behave_well(),
        "ag_SD" => Ok(agnostic_claim(cfg.agnostic_runs, seed)?.0),
        "kl_identity" => kl_identity(),
        "kl_learner" => kl_learner(seed),
        "smoothing_ratio" => smoothing_ratio(),
        "gadget_monotone" => gadget_monotone(seed),
        "postselect_decision" => postselect_decision(seed),
        "prg_breaker" => Ok(prg_breaker_claim(cfg.breaker_trials, cfg.breaker_reps, seed)?.0),
        "hoeffding" => hoeffding(seed),
        _ => Err(Error::Invalid(format!("unknown claim {id:?}"))),
    }
}

fn random_triple(coins: &mut Coins, max_width: u64) -> Result<(Distribution, Distribution, Distribution)> {
    let width = 1 + coins.below(max_width) as usize;
    Ok((
        fixtures::random_distribution(coins, width, 16)?,
        fixtures::random_distribution(coins, width, 16)?,
        fixtures::random_distribution(coins, width, 16)?,
    ))
}

fn total(p: &Distribution) -> BigRational {
    p.iter().map(|(_, v)| v.clone()).sum()
}

/// Normalization, symmetry, `SD(P, P) = 0`, nonnegativity, the triangle
/// inequality, and agreement of the two SD formulas.
pub fn sd_axioms(pairs: usize, seed: u64) -> Result<ClaimResult> {
    let mut coins = Coins::new(seed, stream::CORPUS, 10);
    let (mut checked, mut bad) = (0u64, 0u64);
    let mut tally = |ok: bool| {
        checked += 1;
        bad += !ok as u64;
    };
    for _ in 0..pairs {
        let (p, q, r) = random_triple(&mut coins, 4)?;
        for d in [&p, &q, &r] {
            tally(total(d).is_one());
        }
        let pq = statistical_distance(&p, &q)?;
        tally(pq == statistical_distance(&q, &p)?);
        tally(statistical_distance(&p, &p)?.is_zero());
        tally(!pq.is_negative());
        tally(statistical_distance(&p, &r)? <= &pq + statistical_distance(&q, &r)?);
        tally(pq == half_l1(&p, &q)?);
    }
    Ok(ClaimResult::new("sd_axioms", checked, bad, json!({ "pairs": pairs })))
}

/// `KL >= 0`, `KL(P, P) = 0`, and `KL(P, Q) > 0` for `P != Q`.
pub fn kl_axioms(pairs: usize, seed: u64) -> Result<ClaimResult> {
    let mut coins = Coins::new(seed, stream::CORPUS, 11);
    let (mut checked, mut bad, mut equal_pairs) = (0u64, 0u64, 0u64);
    for _ in 0..pairs {
        let width = 1 + coins.below(4) as usize;
        let p = fixtures::random_distribution(&mut coins, width, 16)?;
        // Q shares P's support or is P itself, so KL stays finite
        let q = match coins.below(4) {
            0 => p.clone(),
            1 => {
                let w = rat(1 + coins.below(7) as i64, 8);
                p.mix(&Distribution::uniform(width)?, &w)?
            }
            _ => {
                let other = fixtures::random_distribution(&mut coins, width, 16)?;
                let w = rat(1 + coins.below(7) as i64, 8);
                p.mix(&other, &w)?
            }
        };
        let kl = kl_divergence(&p, &q)?;
        let same = p == q;
        equal_pairs += same as u64;
        checked += 2;
        bad += !(kl >= 0.0) as u64;
        bad += ((kl == 0.0) != same) as u64;
        checked += 1;
        bad += (kl_divergence(&p, &p)? != 0.0) as u64;
    }
    Ok(ClaimResult::new("kl_axioms", checked, bad, json!({ "pairs": pairs, "equal_pairs": equal_pairs, "log_base": 2 })))
}

/// `SD(P^t, Q^t)` is nondecreasing for `t <= 6` on supports of size at most 4.
pub fn tensor_monotone(pairs: usize, seed: u64) -> Result<ClaimResult> {
    let mut coins = Coins::new(seed, stream::CORPUS, 12);
    let (mut checked, mut bad) = (0u64, 0u64);
    for _ in 0..pairs {
        let width = 1 + coins.below(3) as usize;
        let p = fixtures::random_distribution(&mut coins, width, 4)?;
        let q = fixtures::random_distribution(&mut coins, width, 4)?;
        let mut prev = statistical_distance(&p, &q)?;
        for t in 2..=6 {
            let cur = tensor_sd(&p, &q, t)?;
            checked += 1;
            bad += (cur < prev) as u64;
            prev = cur;
        }
    }
    Ok(ClaimResult::new("tensor_monotone", checked, bad, json!({ "pairs": pairs, "t_max": 6 })))
}

/// Exact tensor-power amplification on every corpus pair and every `t`
/// under the tuple cap.
pub fn probabilistic_argument(pairs: usize, seed: u64) -> Result<ClaimResult> {
    let (mut checked, mut bad, mut vacuous) = (0u64, 0u64, 0u64);
    for (p, q, eps) in fixtures::amplification_corpus(pairs, seed)? {
        for r in verify_tensor_amplification(&p, &q, eps, crate::limits::MAX_TUPLE_BITS)? {
            checked += 1;
            bad += !r.holds as u64;
            vacuous += (r.predicted <= 0.0) as u64;
        }
    }
    Ok(ClaimResult::new(
        "probabilistic_argument",
        checked,
        bad,
        json!({ "pairs": pairs, "tuple_bits_cap": crate::limits::MAX_TUPLE_BITS, "vacuous": vacuous }),
    ))
}

/// `Pr_{x ← P}[P(x) > Q(x)] > 1/(2 eps)` on the amplification corpus.
pub fn sd_threshold_claim(pairs: usize, seed: u64) -> Result<ClaimResult> {
    let mut bad = 0;
    for (p, q, eps) in fixtures::amplification_corpus(pairs, seed)? {
        bad += !verify_sd_threshold(&p, &q, &rat(1, 2 * eps as i64))?.holds as u64;
    }
    Ok(ClaimResult::new("statistical_distance", pairs as u64, bad, json!({ "pairs": pairs })))
}

/// Multiplicative error on non-failed queries and the failure frequency.
pub fn estimate_soundness(queries: u64, seed: u64) -> Result<ClaimResult> {
    let fam = fixtures::switched_family(4)?;
    let (eps_mult, fail) = (50u64, 20u64);
    let est = Estimator::new(&fam, EstimatorMode::Noisy { eps_mult, fail, seed: derive_seed(seed, stream::ESTIMATE, 0) })?;
    let mut coins = Coins::new(seed, stream::CORPUS, 13);
    let (mut bad, mut failed) = (0u64, 0u64);
    for ctr in 0..queries {
        let z = BitString::raw(coins.below(16) as u32, 4);
        let x = BitString::raw(coins.below(8) as u32, 3);
        let p = crate::family::exact_prob(&fam, z, x)?;
        let r = est.estimate(z, x, ctr)?;
        if r.failed {
            failed += 1;
        } else if (&r.value - &p).abs() * BigInt::from(eps_mult) > p {
            bad += 1;
        }
    }
    let n = queries as f64;
    let f = 1.0 / fail as f64;
    let observed = failed as f64 / n;
    let band = 3.0 * (f * (1.0 - f) / n).sqrt();
    bad += ((observed - f).abs() > band) as u64;
    Ok(ClaimResult::new(
        "estimate_soundness",
        queries + 1,
        bad,
        json!({ "eps_mult": eps_mult, "fail": fail, "failure_rate": observed, "band": band }),
    ))
}

/// `eval_mle` against an independent scan of every parameter, and
/// `ml_ratio(x, argmax) = 1`.
pub fn mle_oracle(seed: u64) -> Result<ClaimResult> {
    let (mut checked, mut bad) = (0u64, 0u64);
    for (i, (_, fam)) in fixtures::distinguisher_families()?.into_iter().enumerate() {
        let k = fam.param_bits();
        for j in 0..4u64 {
            let z = BitString::raw(Coins::new(seed, stream::CORPUS, 14 + i as u64).below(1 << k) as u32 ^ j as u32, k);
            let s = draw_samples(&fam, z, 3 + 5 * j as usize, derive_seed(seed, stream::SAMPLES, (i as u64) << 8 | j))?;
            let got = eval_mle(&fam, &s)?;
            let mut best: Option<(BigRational, BitString, u64)> = None;
            for a in BitString::all(k) {
                let l = likelihood(&fam, a, &s)?;
                best = match best {
                    Some((bl, ba, n)) if l < bl => Some((bl, ba, n)),
                    Some((bl, ba, n)) if l == bl => Some((bl, ba, n + 1)),
                    _ => Some((l, a, 1)),
                };
            }
            let (bl, ba, n) = best.unwrap();
            checked += 1;
            bad += !(got.argmax_z == ba && got.max_likelihood == bl && got.tie_count == n) as u64;
        }
        for x in BitString::all(fam.out_bits()) {
            let single = SampleSet { samples: vec![x], seed: 0 };
            let m = eval_mle(&fam, &single)?;
            if m.max_likelihood.is_zero() {
                continue;
            }
            checked += 1;
            bad += (ml_ratio(&fam, x, m.argmax_z)? != MlRatio::Finite(BigRational::one())) as u64;
        }
    }
    Ok(ClaimResult::new("mle_oracle", checked, bad, json!({})))
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletenessReport {
    pub family: &'static str,
    pub eps: u64,
    pub t: u64,
    pub rate: Rate,
    pub threshold: f64,
}

/// Honest acceptance on the biased `k = 4` puzzle fixture.
pub fn owp_completeness_claim(trials: u64, seed: u64) -> Result<(ClaimResult, CompletenessReport)> {
    let inst = fixtures::owp_instance()?;
    let rate = owp_completeness(&inst, trials, derive_seed(seed, stream::TRIAL, 0))?;
    let rep = CompletenessReport { family: "biased4", eps: inst.params.eps, t: inst.params.t, rate, threshold: 0.99 };
    let claim = ClaimResult::new("owp_completeness", 1, (rate.rate < rep.threshold) as u64, json!(rep));
    Ok((claim, rep))
}

/// For each `z`, the maximum-likelihood fit lands within `1/(2 eps)` with
/// probability at least `1 − 2^(1−k)`.
pub fn owp_useful(seed: u64) -> Result<ClaimResult> {
    let mut checked = 0;
    let mut bad = 0;
    let mut rows = Vec::new();
    let cases: Vec<(&str, CircuitFamily, u64, u64)> = vec![
        ("biased4", fixtures::biased_family(4)?, 1, 64),
        ("identity3", fixtures::identity_family(3)?, 2, 192),
        ("sparse", fixtures::sparse_family()?, 1, 32),
    ];
    for (name, fam, eps, t) in cases {
        for z in BitString::all(fam.param_bits()) {
            let r = claim_useful(&fam, eps, t, z, Some((400, derive_seed(seed, stream::CHECK, z.value() as u64))))?;
            checked += 1;
            bad += !r.holds as u64;
            rows.push(json!({ "family": name, "z": z, "probability": r.probability, "holds": r.holds }));
        }
    }
    Ok(ClaimResult::new("owp_useful", checked, bad, json!({ "cases": rows })))
}

/// Results of running the distinguisher over every ordered pair of
/// parameters in the fixture families.
#[derive(Clone, Debug, Default)]
pub struct DistinguisherScan {
    pub pairs: u64,
    pub exact_violations: u64,
    pub in_s: u64,
    pub in_s_misses: u64,
    pub in_u: u64,
    pub in_u_misses: u64,
    pub noisy_calls: u64,
    pub noisy_failed_calls: u64,
    /// Pointwise errors of the noisy distinguisher, split by whether a
    /// failure flag fired on that call.
    pub noisy_flagged_errors: u64,
    pub noisy_unflagged_errors: u64,
    /// Largest allowed failure rate per call over the `eps` values tried.
    pub failure_rate: Vec<(u64, Rate)>,
}

pub const DISTINGUISHER_EPS: [u64; 3] = [1, 2, 4];

/// `16 eps a >= (16 eps + 1) b`.
fn dis_rule(a: &BigRational, b: &BigRational, eps: u64) -> bool {
    let c = BigInt::from(16 * eps);
    a * &c >= b * (c + 1)
}

pub fn distinguisher_scan(cfg: &SuiteConfig) -> Result<DistinguisherScan> {
    let mut s = DistinguisherScan::default();
    for (fi, (_, fam)) in fixtures::distinguisher_families()?.into_iter().enumerate() {
        let k = fam.param_bits();
        let n = 1u32 << k;
        let denom = BigInt::from(fam.denom());
        let counts: Vec<Vec<u64>> = (0..n).map(|z| fam.counts(z).to_vec()).collect();
        let exact = exact_estimator(&fam);
        for eps in DISTINGUISHER_EPS {
            let seed = derive_seed(cfg.seed, stream::ESTIMATE, (fi as u64) << 8 | eps);
            let noisy = Estimator::new(
                &fam,
                EstimatorMode::Noisy { eps_mult: DIS_PRECISION * eps, fail: DIS_PRECISION * eps, seed },
            )?;
            let (calls_before, failed_before) = (s.noisy_calls, s.noisy_failed_calls);
            let mut ctr = 0u64;
            for l in 0..n {
                for m in 0..n {
                    if l == m {
                        continue;
                    }
                    let (cl, cm) = (&counts[l as usize], &counts[m as usize]);
                    let sd2: u64 = cl.iter().zip(cm).map(|(a, b)| a.abs_diff(*b)).sum();
                    // SD >= 1/eps  ⇔  eps * sum|diff| >= 2 denom
                    if (eps as u128) * (sd2 as u128) < 2 * fam.denom() as u128 {
                        continue;
                    }
                    s.pairs += 1;
                    let (lb, mb) = (BitString::raw(l, k), BitString::raw(m, k));
                    let mut adv = BigInt::zero();
                    for x in 0..cl.len() {
                        let xb = BitString::raw(x as u32, fam.out_bits());
                        let (pl, pm) = (cl[x] as u128, cm[x] as u128);
                        let e = eps as u128;
                        let said = if cfg.broken_dis {
                            false
                        } else {
                            let a = exact.estimate(lb, xb, 0)?.value;
                            let b = exact.estimate(mb, xb, 1)?.value;
                            dis_rule(&a, &b, eps)
                        };
                        if said {
                            adv += BigInt::from(cl[x]) - BigInt::from(cm[x]);
                        }
                        let in_s = 8 * e * pl >= (8 * e + 1) * pm;
                        let in_u = pm > pl;
                        if in_s {
                            s.in_s += 1;
                            s.in_s_misses += !said as u64;
                        }
                        if in_u {
                            s.in_u += 1;
                            s.in_u_misses += said as u64;
                        }
                        let a = noisy.estimate(lb, xb, 2 * ctr)?;
                        let b = noisy.estimate(mb, xb, 2 * ctr + 1)?;
                        ctr += 1;
                        let noisy_said = !cfg.broken_dis && dis_rule(&a.value, &b.value, eps);
                        let flagged = a.failed || b.failed;
                        s.noisy_calls += 1;
                        s.noisy_failed_calls += flagged as u64;
                        if (in_s && !noisy_said) || (in_u && noisy_said) {
                            if flagged {
                                s.noisy_flagged_errors += 1;
                            } else {
                                s.noisy_unflagged_errors += 1;
                            }
                        }
                    }
                    // SD <= (1 + 1/(4 eps)) |adv| + 1/(4 eps), all over `denom`:
                    // 4 eps sd2/2 <= (4 eps + 1) |adv| + denom
                    let lhs = BigInt::from(2 * eps) * BigInt::from(sd2);
                    let rhs = BigInt::from(4 * eps + 1) * adv.abs() + &denom;
                    s.exact_violations += (lhs > rhs) as u64;
                }
            }
            let calls = s.noisy_calls - calls_before;
            if calls > 0 {
                s.failure_rate.push((eps, Rate::new(s.noisy_failed_calls - failed_before, calls)));
            }
        }
    }
    Ok(s)
}

impl DistinguisherScan {
    fn rate_ok(&self) -> bool {
        self.failure_rate.iter().all(|(eps, r)| r.wilson99_low <= 2.0 / (DIS_PRECISION * eps) as f64)
    }

    pub fn np_distinguish(&self) -> ClaimResult {
        let rate_bad = !self.rate_ok() as u64;
        let rates: Vec<Value> = self
            .failure_rate
            .iter()
            .map(|(eps, r)| json!({ "eps": eps, "failed_calls": r, "allowed": 2.0 / (DIS_PRECISION * eps) as f64 }))
            .collect();
        ClaimResult::new(
            "NP_distinguish",
            self.pairs + self.noisy_calls + self.failure_rate.len() as u64,
            self.exact_violations + self.noisy_unflagged_errors + rate_bad,
            json!({
                "eps": DISTINGUISHER_EPS,
                "pairs": self.pairs,
                "exact_violations": self.exact_violations,
                "noisy_calls": self.noisy_calls,
                "noisy_flagged_errors": self.noisy_flagged_errors,
                "noisy_unflagged_errors": self.noisy_unflagged_errors,
                "failure_rates": rates,
            }),
        )
    }

    pub fn distinguish_well(&self) -> ClaimResult {
        ClaimResult::new("Distinguish_well_in_S", self.in_s, self.in_s_misses, json!({ "points": self.in_s }))
    }

    pub fn not_fooled(&self) -> ClaimResult {
        ClaimResult::new("Not_fooled_in_U", self.in_u, self.in_u_misses, json!({ "points": self.in_u }))
    }
}

/// Largest `eps` with `2^-k <= 1/(2 k eps)`, at least 1.
pub fn behave_well_eps(k: usize) -> u64 {
    ((1u64 << k) / (2 * k as u64)).max(1)
}

/// With exact gaps, the prefix accepted at stage `I` extends to a full
/// hypothesis whose worst gap is at most `Opt + I/(2 k eps)`.
pub fn behave_well() -> Result<ClaimResult> {
    let (mut checked, mut bad) = (0u64, 0u64);
    let mut rows = Vec::new();
    let mut run = |name: &str, fam: &dyn Family, target: &Distribution| -> Result<()> {
        let k = fam.param_bits();
        let eps = behave_well_eps(k);
        let opt = agnostic_opt(fam, target)?;
        let oracle = GapOracle::exact(fam, target, eps)?;
        let trace = oracle_learn(fam, target, eps)?;
        for (i, v) in trace.stage_values.iter().enumerate() {
            let slack = BigRational::new(BigInt::from(i + 1), BigInt::from(2 * k as u64 * eps));
            checked += 1;
            bad += (*v > &opt + slack) as u64;
        }
        rows.push(json!({
            "fixture": name,
            "eps": eps,
            "h": trace.h,
            "opt": Exact(opt),
            "min_worst_gap": Exact(oracle.best_completion(BitString::EMPTY)),
            "final": Exact(trace.stage_values.last().cloned().unwrap_or_default()),
        }));
        Ok(())
    };
    for f in fixtures::agnostic_fixtures()? {
        run(f.name, &f.instance.family, f.instance.target.as_ref().unwrap())?;
    }
    for (name, fam) in fixtures::distinguisher_families()? {
        let k = fam.param_bits();
        let member = dist_vector(&fam, BitString::raw((1u32 << k) - 1, k))?;
        let target = member.mix(&Distribution::uniform(fam.out_bits())?, &rat(1, 4))?;
        run(name, &fam, &target)?;
    }
    Ok(ClaimResult::new("behave_well", checked, bad, json!({ "runs": rows })))
}

#[derive(Clone, Debug, Serialize)]
pub struct AgnosticSummary {
    pub fixture: &'static str,
    pub k: usize,
    pub eps: u64,
    pub delta: u64,
    pub t: u64,
    pub opt: Exact,
    pub bound: Exact,
    pub within: Rate,
    pub required: f64,
}

/// Seeded runs of the SD learner on one fixture; each run draws fresh
/// target samples.
pub fn agnostic_runs(f: &AgnosticFixture, runs: u64, seed: u64, mode: DisMode) -> Result<AgnosticSummary> {
    let fam = &f.instance.family;
    let target = f.instance.target.as_ref().ok_or_else(|| Error::Invalid("fixture without target".into()))?;
    let params = f.instance.params;
    let mut ok = 0;
    let mut last = None;
    for i in 0..runs {
        let s = derive_seed(seed, stream::TRIAL, i);
        let samples = SampleSet { samples: target.sample(params.t as usize, s, stream::TARGET), seed: s };
        let r = learn_sd_agnostic(fam, target, &samples, &params, mode, derive_seed(s, stream::COINS, 0))?;
        ok += r.within_bound as u64;
        last = Some(r);
    }
    let last = last.ok_or_else(|| Error::Precondition("runs must be at least 1".into()))?;
    Ok(AgnosticSummary {
        fixture: f.name,
        k: fam.param_bits(),
        eps: params.eps,
        delta: params.delta,
        t: params.t,
        opt: last.opt,
        bound: last.bound,
        within: Rate::new(ok, runs),
        required: 1.0 - 1.0 / params.delta as f64,
    })
}

/// The fraction of runs within `(3 + 1/eps) Opt + 1/eps` is at least
/// `1 − 1/delta` on every agnostic fixture.
pub fn agnostic_claim(runs: u64, seed: u64) -> Result<(ClaimResult, Vec<AgnosticSummary>)> {
    let mut rows = Vec::new();
    let mut bad = 0;
    for (i, f) in fixtures::agnostic_fixtures()?.iter().enumerate() {
        let r = agnostic_runs(f, runs, derive_seed(seed, stream::TRIAL, 1000 + i as u64), DisMode::default())?;
        bad += (r.within.rate < r.required) as u64;
        rows.push(r);
    }
    let claim = ClaimResult::new("ag_SD", rows.len() as u64, bad, json!({ "fixtures": rows }));
    Ok((claim, rows))
}

fn kl_identity_on(fam: &dyn Family, checked: &mut u64, bad: &mut u64, worst: &mut f64) -> Result<()> {
    for x in BitString::all(fam.out_bits()) {
        let point = Distribution::point_mass(x);
        let kls: Vec<f64> =
            (0..1u32 << fam.param_bits()).map(|a| kl_divergence(&point, &dist_vector(fam, BitString::raw(a, fam.param_bits()))?)).collect::<Result<_>>()?;
        let min = kls.iter().cloned().fold(f64::INFINITY, f64::min);
        for h in BitString::all(fam.param_bits()) {
            let lhs = kls[h.value() as usize] - min;
            let rhs = ml_ratio(fam, x, h)?.log2();
            let err = (lhs - rhs).abs();
            *worst = worst.max(err);
            *checked += 1;
            *bad += (err > 1e-12) as u64;
        }
    }
    Ok(())
}

/// `KL(δ_x ‖ D(h)) − min_a KL(δ_x ‖ D(a)) = log2 ml_ratio(x, h)` on fully
/// supported families, including smoothed ones.
pub fn kl_identity() -> Result<ClaimResult> {
    let (mut checked, mut bad, mut worst) = (0u64, 0u64, 0f64);
    for (_, fam) in fixtures::fully_supported_families()? {
        kl_identity_on(&fam, &mut checked, &mut bad, &mut worst)?;
    }
    for (_, fam) in fixtures::smoothing_corpus()? {
        let s = smooth_family(&fam, 1)?;
        if crate::family::is_fully_supported(&s.family) {
            kl_identity_on(&s.family, &mut checked, &mut bad, &mut worst)?;
        }
    }
    Ok(ClaimResult::new("kl_identity", checked, bad, json!({ "max_abs_error": worst, "tolerance": 1e-12, "log_base": 2 })))
}

/// `learn_kl` minimizes the KL divergence from the empirical distribution.
pub fn kl_learner(seed: u64) -> Result<ClaimResult> {
    let (mut checked, mut bad) = (0u64, 0u64);
    for (i, (_, fam)) in fixtures::fully_supported_families()?.into_iter().enumerate() {
        let k = fam.param_bits();
        for j in 0..4u64 {
            let z = BitString::raw((j as u32 * 5 + 1) % (1 << k), k);
            let s = draw_samples(&fam, z, 20, derive_seed(seed, stream::SAMPLES, 100 + ((i as u64) << 4 | j)))?;
            let h = learn_kl(&fam, &s, 1)?;
            let emp = Distribution::empirical(fam.out_bits(), &s.samples)?;
            let kl_h = kl_divergence(&emp, &dist_vector(&fam, h)?)?;
            let min = BitString::all(k)
                .map(|a| kl_divergence(&emp, &dist_vector(&fam, a)?))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            checked += 1;
            bad += ((kl_h - min).abs() > 1e-12) as u64;
        }
    }
    Ok(ClaimResult::new("kl_learner", checked, bad, json!({})))
}

/// Smoothed ratio `<= 2^(1/(2 eps))` implies original ratio `<= 2^(1/eps)`,
/// with the rounded-down mixing weight and no tolerance.
pub fn smoothing_ratio() -> Result<ClaimResult> {
    let (mut checked, mut bad) = (0u64, 0u64);
    let mut rows = Vec::new();
    for (name, fam) in fixtures::smoothing_corpus()? {
        for eps in 1..=3 {
            let s = smooth_family(&fam, eps)?;
            let c = check_smoothing_ratio(&fam, &s, eps)?;
            checked += c.pairs;
            bad += c.violations;
            rows.push(json!({
                "family": name,
                "eps": eps,
                "weight": s.weight.to_string(),
                "target_weight": s.target_weight,
                "extra_bits": s.extra_bits,
                "premise_pairs": c.premise_pairs,
                "violations": c.violations,
            }));
        }
    }
    Ok(ClaimResult::new("smoothing_ratio", checked, bad, json!({ "cases": rows })))
}

fn corpus_inputs() -> impl Iterator<Item = BitString> {
    BitString::all(fixtures::MACHINE_INPUT_BITS)
}

/// `Pr[b = 1 | b* = 1] >= 2/3` gives likelihood ratio at least 2, and
/// `<= 1/3` gives at most 1/2.
pub fn gadget_monotone(seed: u64) -> Result<ClaimResult> {
    let (mut checked, mut bad) = (0u64, 0u64);
    for m in fixtures::postselect_corpus(50, 10, seed)? {
        for x in corpus_inputs() {
            let p = m.machine.conditional_one(x)?;
            let r = gadget_ratio(&m.machine, x)?;
            if p >= rat(2, 3) {
                let ok = match &r {
                    MlRatio::Infinite => true,
                    MlRatio::Finite(v) => *v >= rat(2, 1),
                };
                checked += 1;
                bad += !ok as u64;
            } else if p <= rat(1, 3) {
                checked += 1;
                bad += !matches!(&r, MlRatio::Finite(v) if *v <= rat(1, 2)) as u64;
            }
        }
    }
    Ok(ClaimResult::new("gadget_monotone", checked, bad, json!({ "machines": 60 })))
}

/// `decide_by_mle` on the promise machines matches the verdict read off
/// the machine's thresholds, and every gap input is refused.
pub fn postselect_decision(seed: u64) -> Result<ClaimResult> {
    let (mut checked, mut bad) = (0u64, 0u64);
    let (mut promise_ok, mut gap_flagged) = (0u64, 0u64);
    let machines = fixtures::postselect_corpus(50, 10, seed)?;
    for m in &machines {
        let mut all_ok = true;
        for x in corpus_inputs() {
            let odd = x.value().count_ones() % 2 == 1;
            let ones = if odd { m.post_below - m.accept_below } else { m.accept_below };
            let got = decide_by_mle(&m.machine, x);
            checked += 1;
            let ok = if m.gap {
                matches!(got, Err(Error::Promise(_)))
            } else {
                let want = if 4 * ones >= 3 * m.post_below { Verdict::InLanguage } else { Verdict::NotInLanguage };
                got.as_ref().ok() == Some(&want)
            };
            all_ok &= ok;
            bad += !ok as u64;
        }
        if m.gap {
            gap_flagged += all_ok as u64;
        } else {
            promise_ok += all_ok as u64;
        }
    }
    Ok(ClaimResult::new(
        "postselect_decision",
        checked,
        bad,
        json!({ "promise_machines": 50, "promise_correct": promise_ok, "gap_machines": 10, "gap_flagged": gap_flagged }),
    ))
}

/// Breaker advantage on the parity generator with the likelihood learner.
pub fn prg_breaker_claim(trials: u64, reps: u64, seed: u64) -> Result<(ClaimResult, BreakerReport)> {
    let prg = fixtures::prg_fixture()?;
    let inst = prg_learning_instance(&prg, LearnParams::new(4, 10, fixtures::PRG_T)?)?;
    let learner = mle_learner(&inst.family);
    let r = breaker_advantage(&learner, &prg, &inst, fixtures::PRG_MU_STAR, trials, reps, derive_seed(seed, stream::TRIAL, 2))?;
    let claim = ClaimResult::new(
        "prg_breaker",
        1,
        (r.advantage < 0.9) as u64,
        json!({ "n": fixtures::PRG_N, "mu_star": fixtures::PRG_MU_STAR, "t": fixtures::PRG_T, "reps": reps, "report": r }),
    );
    Ok((claim, r))
}

/// Uniform convergence at the sample size from the verbatim Hoeffding formula.
pub fn hoeffding(seed: u64) -> Result<ClaimResult> {
    let and = fixtures::and_family()?;
    let biased = fixtures::biased_family(3)?;
    let cases: Vec<(&dyn Family, BitString, Vec<Vec<f64>>, f64, f64)> = vec![
        (&and, BitString::raw(1, 1), vec![vec![0.0, 1.0]], 0.05, 0.1),
        (&and, BitString::raw(1, 1), vec![vec![0.0, 0.0]], 0.05, 0.1),
        (
            &biased,
            BitString::raw(0b101, 3),
            (0..8).map(|x| (0..8).map(|y| if y == x { 1.0 } else { (y as f64) / 8.0 }).collect()).collect(),
            0.1,
            0.05,
        ),
    ];
    let mut bad = 0;
    let mut rows = Vec::new();
    for (i, (fam, z, tests, eps_acc, delta)) in cases.into_iter().enumerate() {
        let r = verify_hoeffding_empirical(fam, z, &tests, eps_acc, delta, 100, derive_seed(seed, stream::TRIAL, 3 + i as u64))?;
        bad += !r.holds as u64;
        rows.push(r);
    }
    Ok(ClaimResult::new("hoeffding", rows.len() as u64, bad, json!({ "reports": rows })))
}
