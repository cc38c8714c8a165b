//! Exact distributions over fixed-width bit strings, distances between them,
//! and tensor powers.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::BitString;
use crate::error::{check_len, Error, Result};
use crate::limits::{MAX_BITSTRING, MAX_TUPLE_BITS};
use crate::rng::Coins;

/// Probability vector over `{0,1}^width`. Only nonzero entries are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    width: usize,
    probs: BTreeMap<u32, BigRational>,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Distribution {
    pub fn new(width: usize, entries: impl IntoIterator<Item = (BitString, BigRational)>) -> Result<Self> {
        if width > MAX_BITSTRING {
            return Err(Error::Limit(format!("width {width} exceeds {MAX_BITSTRING}")));
        }
        let mut probs = BTreeMap::new();
        let mut total = BigRational::zero();
        for (x, p) in entries {
            check_len(width, x.len())?;
            if p.is_negative() {
                return Err(Error::Invalid(format!("negative probability {p} at {x}")));
            }
            total += &p;
            if probs.insert(x.value(), p).is_some() {
                return Err(Error::Invalid(format!("outcome {x} listed twice")));
            }
        }
        if !total.is_one() {
            return Err(Error::Invalid(format!("probabilities sum to {total}, not 1")));
        }
        probs.retain(|_, p| !p.is_zero());
        Ok(Distribution { width, probs })
    }

    /// `counts[x] / denom`, with `counts` dense over all outcomes.
    pub fn from_counts(width: usize, counts: &[u64], denom: u64) -> Result<Self> {
        check_len(1 << width, counts.len())?;
        let d = BigInt::from(denom);
        Self::new(
            width,
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(x, &c)| (BitString::raw(x as u32, width), BigRational::new(BigInt::from(c), d.clone()))),
        )
    }

    pub fn point_mass(x: BitString) -> Self {
        Distribution { width: x.len(), probs: BTreeMap::from([(x.value(), BigRational::one())]) }
    }

    pub fn uniform(width: usize) -> Result<Self> {
        if width > MAX_TUPLE_BITS {
            return Err(Error::Limit(format!("uniform over {width} bits")));
        }
        let p = BigRational::new(BigInt::one(), BigInt::one() << width);
        Ok(Distribution { width, probs: (0..1u32 << width).map(|x| (x, p.clone())).collect() })
    }

    /// Normalizes nonnegative integer weights.
    pub fn from_weights(width: usize, weights: &[(BitString, u64)]) -> Result<Self> {
        let total: u64 = weights.iter().map(|(_, w)| w).sum();
        if total == 0 {
            return Err(Error::Invalid("all weights are zero".into()));
        }
        let t = BigInt::from(total);
        Self::new(width, weights.iter().map(|(x, w)| (*x, BigRational::new(BigInt::from(*w), t.clone()))))
    }

    /// Empirical distribution of a list of outcomes.
    pub fn empirical(width: usize, samples: &[BitString]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Invalid("empirical distribution of no samples".into()));
        }
        let mut counts: BTreeMap<BitString, u64> = BTreeMap::new();
        for s in samples {
            check_len(width, s.len())?;
            *counts.entry(*s).or_default() += 1;
        }
        Self::from_weights(width, &counts.into_iter().collect::<Vec<_>>())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn prob(&self, x: BitString) -> BigRational {
        assert_eq!(x.len(), self.width, "outcome width mismatch");
        self.prob_raw(x.value())
    }

    pub(crate) fn prob_raw(&self, x: u32) -> BigRational {
        self.probs.get(&x).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Nonzero entries in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (BitString, &BigRational)> + '_ {
        self.probs.iter().map(move |(x, p)| (BitString::raw(*x, self.width), p))
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn is_full_support(&self) -> bool {
        self.probs.len() == 1usize << self.width
    }

    /// `(1 - w) * self + w * other`
    pub fn mix(&self, other: &Distribution, w: &BigRational) -> Result<Self> {
        check_len(self.width, other.width)?;
        if w.is_negative() || *w > BigRational::one() {
            return Err(Error::Invalid(format!("mixture weight {w} outside [0,1]")));
        }
        let keep = BigRational::one() - w;
        let mut probs: BTreeMap<u32, BigRational> = BTreeMap::new();
        for (x, p) in &self.probs {
            *probs.entry(*x).or_insert_with(BigRational::zero) += p * &keep;
        }
        for (x, p) in &other.probs {
            *probs.entry(*x).or_insert_with(BigRational::zero) += p * w;
        }
        probs.retain(|_, p| !p.is_zero());
        Ok(Distribution { width: self.width, probs })
    }

    /// Least common denominator of all probabilities.
    pub fn common_denom(&self) -> BigUint {
        self.probs
            .values()
            .fold(BigUint::one(), |acc, p| acc.lcm(&p.denom().magnitude().clone()))
    }

    /// `n` independent draws by inversion over the common denominator,
    /// reading stream `(seed, stream, 0)` sequentially.
    pub fn sample(&self, n: usize, seed: u64, stream: u64) -> Vec<BitString> {
        let mut coins = Coins::new(seed, stream, 0);
        self.sample_with(n, &mut coins)
    }

    pub fn sample_with(&self, n: usize, coins: &mut Coins) -> Vec<BitString> {
        let denom = self.common_denom();
        let numers: Vec<(u32, BigUint)> = self
            .probs
            .iter()
            .map(|(x, p)| (*x, (p * BigRational::from(BigInt::from(denom.clone()))).to_integer().magnitude().clone()))
            .collect();
        if let Some(d) = denom.to_u64() {
            let mut cum = Vec::with_capacity(numers.len());
            let mut acc = 0u64;
            for (x, c) in &numers {
                acc += c.to_u64().expect("numerator below denominator");
                cum.push((acc, *x));
            }
            (0..n)
                .map(|_| {
                    let u = coins.below(d);
                    let i = cum.partition_point(|(c, _)| *c <= u);
                    BitString::raw(cum[i].1, self.width)
                })
                .collect()
        } else {
            let mut cum = Vec::with_capacity(numers.len());
            let mut acc = BigUint::zero();
            for (x, c) in &numers {
                acc += c;
                cum.push((acc.clone(), *x));
            }
            (0..n)
                .map(|_| {
                    let u = coins.below_big(&denom);
                    let i = cum.partition_point(|(c, _)| *c <= u);
                    BitString::raw(cum[i].1, self.width)
                })
                .collect()
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionDesc {
    width: usize,
    probs: BTreeMap<String, String>,
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionDesc {
            width: self.width,
            probs: self.iter().map(|(x, p)| (x.to_string(), p.to_string())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let desc = DistributionDesc::deserialize(d)?;
        let mut entries = Vec::with_capacity(desc.probs.len());
        for (x, p) in desc.probs {
            let x: BitString = x.parse().map_err(D::Error::custom)?;
            let p: BigRational = p.parse().map_err(|e| D::Error::custom(format!("probability {p:?}: {e}")))?;
            entries.push((x, p));
        }
        Distribution::new(desc.width, entries).map_err(D::Error::custom)
    }
}

/// `Σ_{P(x) > Q(x)} (P(x) - Q(x))`.
pub fn statistical_distance(p: &Distribution, q: &Distribution) -> Result<BigRational> {
    check_len(p.width, q.width).map_err(|_| Error::Invalid(format!("support mismatch: {} vs {} bits", p.width, q.width)))?;
    let mut sd = BigRational::zero();
    for (x, px) in &p.probs {
        match q.probs.get(x) {
            Some(qx) if qx >= px => {}
            Some(qx) => sd += px - qx,
            None => sd += px,
        }
    }
    Ok(sd)
}

/// Half the l1 distance; agrees with [`statistical_distance`].
pub fn half_l1(p: &Distribution, q: &Distribution) -> Result<BigRational> {
    check_len(p.width, q.width)?;
    let mut keys: Vec<u32> = p.probs.keys().chain(q.probs.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let total = keys
        .into_iter()
        .fold(BigRational::zero(), |acc, x| acc + (p.prob_raw(x) - q.prob_raw(x)).abs());
    Ok(total / BigRational::from_integer(BigInt::from(2)))
}

/// `log2` of a positive integer, accurate to a few ulps.
pub fn log2_biguint(n: &BigUint) -> f64 {
    assert!(!n.is_zero(), "log2(0)");
    let bits = n.bits();
    if bits <= 53 {
        n.to_f64().unwrap().log2()
    } else {
        let shift = bits - 53;
        (n >> shift).to_f64().unwrap().log2() + shift as f64
    }
}

/// `log2` of a positive rational.
pub fn log2_rational(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "log2 of nonpositive {r}");
    log2_biguint(r.numer().magnitude()) - log2_biguint(r.denom().magnitude())
}

/// KL divergence in bits.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_len(p.width, q.width)?;
    let mut total = 0.0;
    for (x, px) in &p.probs {
        let qx = q
            .probs
            .get(x)
            .ok_or_else(|| Error::Support(format!("Q({}) = 0 where P is positive", BitString::raw(*x, p.width))))?;
        total += px.to_f64().unwrap() * log2_rational(&(px / qx));
    }
    Ok(total)
}

/// The product distribution over `t`-tuples, tuples written left to right.
pub fn tensor_power(p: &Distribution, t: usize) -> Result<Distribution> {
    if t == 0 {
        return Err(Error::Precondition("tensor power needs t >= 1".into()));
    }
    if p.width * t > MAX_TUPLE_BITS {
        return Err(Error::Limit(format!("{} tuple bits exceed {MAX_TUPLE_BITS}", p.width * t)));
    }
    let mut cur: BTreeMap<u32, BigRational> = BTreeMap::from([(0, BigRational::one())]);
    for _ in 0..t {
        let mut next = BTreeMap::new();
        for (prefix, pp) in &cur {
            for (x, px) in &p.probs {
                next.insert((prefix << p.width) | x, pp * px);
            }
        }
        cur = next;
    }
    Ok(Distribution { width: p.width * t, probs: cur })
}

/// Calls `f` with every vector of `parts` nonnegative integers summing to `total`,
/// in lexicographic order.
pub fn for_each_composition(total: u32, parts: usize, mut f: impl FnMut(&[u32])) {
    fn rec(rest: u32, i: usize, cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if i + 1 == cur.len() {
            cur[i] = rest;
            f(cur);
            return;
        }
        for v in 0..=rest {
            cur[i] = v;
            rec(rest - v, i + 1, cur, f);
        }
    }
    if parts == 0 {
        if total == 0 {
            f(&[]);
        }
        return;
    }
    let mut cur = vec![0; parts];
    rec(total, 0, &mut cur, &mut f);
}

/// Number of compositions of `total` into `parts` parts.
pub fn composition_count(total: u64, parts: u64) -> BigUint {
    if parts == 0 {
        return if total == 0 { BigUint::one() } else { BigUint::zero() };
    }
    binomial(total + parts - 1, parts - 1)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

pub(crate) fn factorials(n: usize) -> Vec<BigUint> {
    let mut f = vec![BigUint::one()];
    for i in 1..=n {
        let next = &f[i - 1] * BigUint::from(i);
        f.push(next);
    }
    f
}

/// `SD(P^⊗t, Q^⊗t)` summed over type classes instead of tuples, so `t` is
/// not bound by the tuple cap.
pub fn tensor_sd(p: &Distribution, q: &Distribution, t: usize) -> Result<BigRational> {
    check_len(p.width, q.width)?;
    let mut keys: Vec<u32> = p.probs.keys().chain(q.probs.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let classes = composition_count(t as u64, keys.len() as u64);
    if classes > BigUint::from(crate::limits::MAX_TYPE_CLASSES) {
        return Err(Error::Limit(format!("{classes} type classes")));
    }
    // integer numerators over the common denominator L; the result is sum / L^t
    let l = p.common_denom().lcm(&q.common_denom());
    let numer = |d: &Distribution, x: u32| {
        let r = d.prob_raw(x) * BigRational::from_integer(BigInt::from(l.clone()));
        r.to_integer().magnitude().clone()
    };
    let pv: Vec<BigUint> = keys.iter().map(|x| numer(p, *x)).collect();
    let qv: Vec<BigUint> = keys.iter().map(|x| numer(q, *x)).collect();

    struct Walk<'a> {
        pv: &'a [BigUint],
        qv: &'a [BigUint],
        sum: BigUint,
    }
    // depth-first over type classes, carrying partial products and the multinomial
    fn walk(w: &mut Walk, i: usize, rest: u32, pa: BigUint, pb: BigUint, mult: BigUint) {
        if i + 1 == w.pv.len() {
            let pa = pa * w.pv[i].pow(rest);
            let pb = pb * w.qv[i].pow(rest);
            if pa > pb {
                w.sum += (pa - pb) * mult;
            }
            return;
        }
        let (mut a, mut b) = (BigUint::one(), BigUint::one());
        let mut choose = BigUint::one();
        for c in 0..=rest {
            if c > 0 {
                a *= &w.pv[i];
                b *= &w.qv[i];
                choose = choose * BigUint::from(rest - c + 1) / BigUint::from(c);
            }
            if a.is_zero() && b.is_zero() {
                break;
            }
            walk(w, i + 1, rest - c, &pa * &a, &pb * &b, &mult * &choose);
        }
    }
    let mut w = Walk { pv: &pv, qv: &qv, sum: BigUint::zero() };
    walk(&mut w, 0, t as u32, BigUint::one(), BigUint::one(), BigUint::one());
    Ok(BigRational::new(BigInt::from(w.sum), BigInt::from(l.pow(t as u32))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn bern(p1: BigRational) -> Distribution {
        Distribution::new(1, [(bs("0"), BigRational::one() - &p1), (bs("1"), p1)]).unwrap()
    }

    #[test]
    fn normalization_is_enforced() {
        assert!(Distribution::new(1, [(bs("0"), rat(1, 2)), (bs("1"), rat(1, 3))]).is_err());
        assert!(Distribution::new(1, [(bs("0"), rat(3, 2)), (bs("1"), rat(-1, 2))]).is_err());
        assert!(Distribution::new(1, [(bs("00"), rat(1, 1))]).is_err());
    }

    #[test]
    fn sd_examples() {
        let p = bern(rat(1, 4));
        let q = bern(rat(3, 4));
        assert_eq!(statistical_distance(&p, &p).unwrap(), rat(0, 1));
        assert_eq!(statistical_distance(&p, &q).unwrap(), rat(1, 2));
        assert_eq!(half_l1(&p, &q).unwrap(), rat(1, 2));
        let a = Distribution::point_mass(bs("0"));
        let b = Distribution::point_mass(bs("1"));
        assert_eq!(statistical_distance(&a, &b).unwrap(), rat(1, 1));
        assert!(statistical_distance(&a, &Distribution::point_mass(bs("00"))).is_err());
    }

    #[test]
    fn kl_examples() {
        let a = Distribution::point_mass(bs("0"));
        let u = Distribution::uniform(1).unwrap();
        assert_eq!(kl_divergence(&a, &a).unwrap(), 0.0);
        assert_eq!(kl_divergence(&a, &u).unwrap(), 1.0);
        assert!(matches!(kl_divergence(&u, &a), Err(Error::Support(_))));
    }

    #[test]
    fn tensor_examples() {
        let p = bern(rat(1, 4));
        assert_eq!(tensor_power(&p, 1).unwrap(), p);
        let t2 = tensor_power(&p, 2).unwrap();
        let expect = [("00", rat(9, 16)), ("01", rat(3, 16)), ("10", rat(3, 16)), ("11", rat(1, 16))];
        for (x, v) in expect {
            assert_eq!(t2.prob(bs(x)), v);
        }
        let pm = tensor_power(&Distribution::point_mass(bs("0")), 3).unwrap();
        assert_eq!(pm, Distribution::point_mass(bs("000")));
        assert!(tensor_power(&Distribution::uniform(5).unwrap(), 5).is_err());
    }

    #[test]
    fn compositions_enumerate_all_types() {
        let mut seen = Vec::new();
        for_each_composition(2, 3, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(composition_count(2, 3), BigUint::from(6u32));
        assert_eq!(seen[0], vec![0, 0, 2]);
        assert_eq!(seen[5], vec![2, 0, 0]);
    }

    #[test]
    fn tensor_sd_matches_materialized_power() {
        let p = Distribution::from_weights(2, &[(bs("00"), 3), (bs("01"), 1), (bs("11"), 2)]).unwrap();
        let q = Distribution::from_weights(2, &[(bs("00"), 1), (bs("10"), 2), (bs("11"), 3)]).unwrap();
        for t in 1..=5 {
            let direct =
                statistical_distance(&tensor_power(&p, t).unwrap(), &tensor_power(&q, t).unwrap()).unwrap();
            assert_eq!(tensor_sd(&p, &q, t).unwrap(), direct, "t = {t}");
        }
    }

    #[test]
    fn sampling_inverts_the_cdf() {
        let p = Distribution::from_weights(2, &[(bs("01"), 1), (bs("10"), 3)]).unwrap();
        let draws = p.sample(4000, 11, 0);
        let ones = draws.iter().filter(|x| **x == bs("10")).count() as f64 / 4000.0;
        assert!((ones - 0.75).abs() < 0.03, "{ones}");
        assert!(draws.iter().all(|x| *x == bs("01") || *x == bs("10")));
        assert_eq!(draws, p.sample(4000, 11, 0));
    }

    #[test]
    fn json_round_trip() {
        let p = bern(rat(1, 3));
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"width":1,"probs":{"0":"2/3","1":"1/3"}}"#);
        assert_eq!(serde_json::from_str::<Distribution>(&text).unwrap(), p);
        assert!(serde_json::from_str::<Distribution>(r#"{"width":1,"probs":{"0":"1/3"}}"#).is_err());
    }

    #[test]
    fn log2_of_huge_integers() {
        let n = BigUint::one() << 200u32;
        assert_eq!(log2_biguint(&n), 200.0);
        let r = BigRational::new(BigInt::from(3), BigInt::one() << 100u32);
        assert!((log2_rational(&r) - (3f64.log2() - 100.0)).abs() < 1e-12);
    }
}
