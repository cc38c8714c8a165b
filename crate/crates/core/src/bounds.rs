//! Sample-size formulas and exact or Monte Carlo checks of the
//! amplification and concentration bounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bits::BitString;
use crate::dist::{statistical_distance, tensor_sd, Distribution};
use crate::error::{Error, Result};
use crate::family::{check_param, draw_samples, Family};
use crate::limits::MAX_TUPLE_BITS;
use crate::report::Exact;
use crate::rng::{derive_seed, stream};
use crate::stats::Rate;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub claim: String,
    pub params: Value,
    pub predicted: f64,
    pub observed: Exact,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HoeffdingForm {
    /// `(M/ε)² (log2|F| + log2(1/δ))`
    #[default]
    Verbatim,
    /// Two-sided Hoeffding with a union bound: `M² ln(2|F|/δ) / (2ε²)`.
    Tight,
}

/// Samples needed so that every one of `2^log2f` tests with range `[0, m]`
/// has its empirical mean within `eps_acc` of the truth except with
/// probability `delta`. Never below 1.
pub fn hoeffding_t(m: f64, eps_acc: f64, delta: f64, log2f: f64) -> Result<u64> {
    hoeffding_t_with(HoeffdingForm::Verbatim, m, eps_acc, delta, log2f)
}

pub fn hoeffding_t_with(form: HoeffdingForm, m: f64, eps_acc: f64, delta: f64, log2f: f64) -> Result<u64> {
    if !(m > 0.0 && eps_acc > 0.0 && delta > 0.0 && log2f >= 0.0) || !(m * eps_acc * delta * log2f).is_finite() {
        return Err(Error::Precondition(format!(
            "need M, eps, delta > 0 and log2|F| >= 0 (got {m}, {eps_acc}, {delta}, {log2f})"
        )));
    }
    let t = match form {
        HoeffdingForm::Verbatim => (m * m) / (eps_acc * eps_acc) * (log2f - delta.log2()),
        HoeffdingForm::Tight => {
            (m * m) * (std::f64::consts::LN_2 * (log2f + 1.0) - delta.ln()) / (2.0 * eps_acc * eps_acc)
        }
    };
    Ok((t.ceil() as u64).max(1))
}

/// `r < 2^(a/b)` for rational `r >= 0`, `b >= 1`.
fn below_power_of_two(r: &BigRational, a: i64, b: u64) -> bool {
    if r.is_zero() {
        return true;
    }
    let lhs = num_traits::pow(r.clone(), b as usize);
    let rhs = if a >= 0 {
        BigRational::from_integer(BigInt::one() << a as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << a.unsigned_abs() as usize)
    };
    lhs < rhs
}

/// For every `t` up to `t_max` (and the tuple-width cap), exact
/// `SD(P^t, Q^t)` against `1 − 2^(1 − t/(8 eps²))`.
pub fn verify_tensor_amplification(p: &Distribution, q: &Distribution, eps: u64, t_max: usize) -> Result<Vec<BoundReport>> {
    if eps == 0 {
        return Err(Error::Precondition("eps must be at least 1".into()));
    }
    let sd = statistical_distance(p, q)?;
    if sd * BigInt::from(2 * eps) <= BigRational::one() {
        return Err(Error::Precondition(format!("SD(P, Q) must exceed 1/(2 eps) = 1/{}", 2 * eps)));
    }
    let cap = MAX_TUPLE_BITS / p.width().max(1);
    let b = 8 * eps * eps;
    let mut out = Vec::new();
    for t in 1..=t_max.min(cap) {
        let observed = tensor_sd(p, q, t)?;
        let a = b as i64 - t as i64;
        // observed > 1 − 2^(a/b)  ⇔  1 − observed < 2^(a/b)
        let holds = below_power_of_two(&(BigRational::one() - &observed), a, b);
        out.push(BoundReport {
            claim: "probabilistic_argument".into(),
            params: json!({"eps": eps, "t": t}),
            predicted: 1.0 - (a as f64 / b as f64).exp2(),
            observed: Exact(observed),
            holds,
        });
    }
    Ok(out)
}

/// `Pr_{x ← P}[P(x) > Q(x)] > alpha` whenever `SD(P, Q) > alpha`.
pub fn verify_sd_threshold(p: &Distribution, q: &Distribution, alpha: &BigRational) -> Result<BoundReport> {
    let sd = statistical_distance(p, q)?;
    if sd <= *alpha {
        return Err(Error::Precondition(format!("SD(P, Q) = {sd} does not exceed {alpha}")));
    }
    let mass: BigRational = p.iter().filter(|(x, px)| **px > q.prob(*x)).map(|(_, px)| px.clone()).sum();
    Ok(BoundReport {
        claim: "statistical_distance".into(),
        params: json!({"alpha": alpha.to_string()}),
        predicted: alpha.to_f64().unwrap_or(f64::NAN),
        holds: mass > *alpha,
        observed: Exact(mass),
    })
}

/// Monte Carlo check of uniform convergence: in each of `trials` runs,
/// `T = hoeffding_t(1, eps_acc, delta, log2 |tests|)` samples of `D(z)` must
/// put every test's empirical mean within `eps_acc` of its exact mean. Holds
/// unless the success rate's Wilson 99% upper bound falls below `1 − delta`.
/// `tests[j][x]` is test `j`'s value on outcome `x`, in `[0, 1]`.
pub fn verify_hoeffding_empirical(
    fam: &dyn Family,
    z: BitString,
    tests: &[Vec<f64>],
    eps_acc: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<BoundReport> {
    let zi = check_param(fam, z)?;
    if tests.is_empty() || trials == 0 {
        return Err(Error::Precondition("need at least one test and one trial".into()));
    }
    let n = 1usize << fam.out_bits();
    for f in tests {
        if f.len() != n || f.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Invalid(format!("each test needs {n} values in [0, 1]")));
        }
    }
    let t = hoeffding_t(1.0, eps_acc, delta, (tests.len() as f64).log2())?;
    let row = fam.counts(zi);
    let denom = fam.denom() as f64;
    let means: Vec<f64> = tests.iter().map(|f| f.iter().zip(row).map(|(v, c)| v * *c as f64).sum::<f64>() / denom).collect();
    let mut ok = 0;
    for i in 0..trials {
        let s = draw_samples(fam, z, t as usize, derive_seed(seed, stream::TRIAL, i))?;
        let mut hist = vec![0u64; n];
        for x in &s.samples {
            hist[x.value() as usize] += 1;
        }
        let within = tests.iter().zip(&means).all(|(f, mean)| {
            let emp = f.iter().zip(&hist).map(|(v, h)| v * *h as f64).sum::<f64>() / t as f64;
            (emp - mean).abs() <= eps_acc
        });
        ok += within as u64;
    }
    let rate = Rate::new(ok, trials);
    Ok(BoundReport {
        claim: "hoeffding".into(),
        params: json!({"z": z.to_string(), "eps_acc": eps_acc, "delta": delta, "t": t, "trials": trials,
                       "wilson99_low": rate.wilson99_low, "wilson99_high": rate.wilson99_high}),
        predicted: 1.0 - delta,
        observed: Exact(BigRational::new(BigInt::from(ok), BigInt::from(trials))),
        holds: rate.wilson99_high >= 1.0 - delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{rat, tensor_power};
    use crate::family::CircuitFamily;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_t(1.0, 0.1, 0.01, 10.0).unwrap(), 1665);
        assert_eq!(hoeffding_t(1.0, 1.0, 0.5, 0.0).unwrap(), 1);
        assert_eq!(hoeffding_t(1.0, 1.0, 1.0, 0.0).unwrap(), 1);
        assert_eq!(hoeffding_t(2.0, 0.5, 0.25, 2.0).unwrap(), 4 * hoeffding_t(1.0, 0.5, 0.25, 2.0).unwrap());
        assert!(hoeffding_t(0.0, 0.1, 0.1, 1.0).is_err());
        assert!(hoeffding_t(1.0, 0.1, 0.0, 1.0).is_err());
        let tight = hoeffding_t_with(HoeffdingForm::Tight, 1.0, 0.1, 0.01, 10.0).unwrap();
        // 0.5 * 100 * ln(2048 / 0.01)
        assert_eq!(tight, 612);
    }

    fn biased(a: i64, b: i64) -> Distribution {
        Distribution::new(1, vec![(bs("0"), rat(a, b)), (bs("1"), rat(b - a, b))]).unwrap()
    }

    #[test]
    fn amplification_examples() {
        let r = verify_tensor_amplification(&Distribution::point_mass(bs("0")), &Distribution::point_mass(bs("1")), 3, 2)
            .unwrap();
        assert!(r.iter().all(|b| b.holds && b.observed.0 == rat(1, 1) && b.predicted < 1.0));
        let (p, q) = (biased(3, 4), biased(1, 4));
        assert!(matches!(verify_tensor_amplification(&p, &q, 1, 2), Err(Error::Precondition(_))));
        let r = verify_tensor_amplification(&p, &q, 2, 6).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r[1].observed.0, rat(1, 2));
        assert!(r.iter().all(|b| b.holds));
        // cross-check against explicit products
        let direct = statistical_distance(&tensor_power(&p, 6).unwrap(), &tensor_power(&q, 6).unwrap()).unwrap();
        assert_eq!(r[5].observed.0, direct);
    }

    #[test]
    fn sd_threshold() {
        let (p, q) = (biased(3, 4), biased(1, 4));
        let r = verify_sd_threshold(&p, &q, &rat(1, 4)).unwrap();
        assert_eq!(r.observed.0, rat(3, 4));
        assert!(r.holds);
        assert!(verify_sd_threshold(&p, &q, &rat(1, 2)).is_err());
    }

    #[test]
    fn hoeffding_monte_carlo() {
        let and = CircuitFamily::from_json(
            r#"{"param_bits":1,"rand_bits":2,"out_bits":1,"gates":[{"op":"AND","in":[0,1,2]}],"outputs":[3]}"#,
        )
        .unwrap();
        let r = verify_hoeffding_empirical(&and, bs("1"), &[vec![0.0, 1.0]], 0.05, 0.1, 100, 7).unwrap();
        assert!(r.holds, "{r:?}");
        let r = verify_hoeffding_empirical(&and, bs("1"), &[vec![0.0, 0.0]], 0.05, 0.1, 100, 7).unwrap();
        assert_eq!(r.observed.0, rat(1, 1));
        let r = verify_hoeffding_empirical(&and, bs("0"), &[vec![0.0, 1.0]], 0.3, 1.0, 100, 7).unwrap();
        assert!(r.holds);
    }

    proptest! {
        #[test]
        fn hoeffding_monotone(e1 in 0.01f64..1.0, e2 in 0.01f64..1.0, d1 in 0.001f64..1.0, d2 in 0.001f64..1.0,
                              m in 0.1f64..4.0, f in 0.0f64..20.0) {
            let (elo, ehi) = (e1.min(e2), e1.max(e2));
            let (dlo, dhi) = (d1.min(d2), d1.max(d2));
            prop_assert!(hoeffding_t(m, ehi, d1, f).unwrap() <= hoeffding_t(m, elo, d1, f).unwrap());
            prop_assert!(hoeffding_t(m, e1, dhi, f).unwrap() <= hoeffding_t(m, e1, dlo, f).unwrap());
            prop_assert!(hoeffding_t(m, e1, d1, f).unwrap() <= hoeffding_t(m * 1.5, e1, d1, f).unwrap());
            prop_assert!(hoeffding_t(m, e1, d1, f).unwrap() <= hoeffding_t(m, e1, d1, f + 1.0).unwrap());
        }
    }
}
