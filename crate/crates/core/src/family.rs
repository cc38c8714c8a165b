//! Parameterized distribution families `z ↦ D(z)` and sample sets.

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::bits::BitString;
use crate::circuit::Circuit;
use crate::dist::Distribution;
use crate::error::{check_len, Error, Result};
use crate::limits::{MAX_OUT_BITS, MAX_PARAM_BITS, MAX_TABLE_DENOM_BITS};
use crate::rng::{stream, Coins};

/// A family of distributions over `{0,1}^out_bits` indexed by
/// `z ∈ {0,1}^param_bits`, with every probability a multiple of `1/denom`.
///
/// Raw `u32` arguments are MSB-first encodings of bit strings of the stated
/// widths.
pub trait Family: Send + Sync {
    fn param_bits(&self) -> usize;
    fn out_bits(&self) -> usize;
    fn denom(&self) -> u64;
    /// Dense numerators: `counts(z)[x] / denom = Pr[x ← D(z)]`.
    fn counts(&self, z: u32) -> &[u64];
    /// Draws for sample indices `start .. start + count`. The randomness
    /// consumed depends on `(seed, stream, index)` only, never on `z`.
    fn sample_range(&self, z: u32, seed: u64, stream: u64, start: u64, count: usize) -> Vec<u32>;
}

/// A [`Circuit`] with lazily enumerated probability rows.
pub struct CircuitFamily {
    circuit: Circuit,
    rows: Vec<OnceLock<Vec<u64>>>,
}

impl CircuitFamily {
    pub fn new(circuit: Circuit) -> Self {
        let rows = (0..1usize << circuit.param_bits()).map(|_| OnceLock::new()).collect();
        CircuitFamily { circuit, rows }
    }

    /// Parses and validates circuit JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        Circuit::from_json(text).map(Self::new)
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn rand_bits(&self) -> usize {
        self.circuit.rand_bits()
    }
}

impl Clone for CircuitFamily {
    fn clone(&self) -> Self {
        CircuitFamily { circuit: self.circuit.clone(), rows: self.rows.clone() }
    }
}

impl fmt::Debug for CircuitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircuitFamily")
            .field("param_bits", &self.circuit.param_bits())
            .field("rand_bits", &self.circuit.rand_bits())
            .field("out_bits", &self.circuit.out_bits())
            .field("gates", &self.circuit.desc().gates.len())
            .finish()
    }
}

impl Family for CircuitFamily {
    fn param_bits(&self) -> usize {
        self.circuit.param_bits()
    }

    fn out_bits(&self) -> usize {
        self.circuit.out_bits()
    }

    fn denom(&self) -> u64 {
        1 << self.circuit.rand_bits()
    }

    fn counts(&self, z: u32) -> &[u64] {
        self.rows[z as usize].get_or_init(|| self.circuit.counts(z))
    }

    fn sample_range(&self, z: u32, seed: u64, stream: u64, start: u64, count: usize) -> Vec<u32> {
        self.circuit.sample_range(z, seed, stream, start, count)
    }
}

/// A family given by an explicit list of distributions.
#[derive(Clone, Debug)]
pub struct TableFamily {
    param_bits: usize,
    out_bits: usize,
    denom: u64,
    rows: Vec<Vec<u64>>,
}

impl TableFamily {
    /// `dists[z]` is `D(z)`; the list length must be a power of two.
    pub fn new(dists: &[Distribution]) -> Result<Self> {
        if !dists.len().is_power_of_two() {
            return Err(Error::Invalid(format!("{} distributions is not a power of two", dists.len())));
        }
        let param_bits = dists.len().trailing_zeros() as usize;
        if param_bits > MAX_PARAM_BITS {
            return Err(Error::Limit(format!("param_bits {param_bits} > {MAX_PARAM_BITS}")));
        }
        let out_bits = dists[0].width();
        if out_bits > MAX_OUT_BITS {
            return Err(Error::Limit(format!("out_bits {out_bits} > {MAX_OUT_BITS}")));
        }
        let mut lcm = BigUint::one();
        for d in dists {
            check_len(out_bits, d.width())?;
            lcm = lcm.lcm(&d.common_denom());
        }
        if lcm.bits() > MAX_TABLE_DENOM_BITS as u64 {
            return Err(Error::Limit(format!("common denominator {lcm} needs more than {MAX_TABLE_DENOM_BITS} bits")));
        }
        let denom = lcm.to_u64().unwrap();
        let scale = BigRational::from_integer(BigInt::from(denom));
        let rows = dists
            .iter()
            .map(|d| {
                let mut row = vec![0u64; 1 << out_bits];
                for (x, p) in d.iter() {
                    row[x.value() as usize] = (p * &scale).to_integer().to_u64().unwrap();
                }
                row
            })
            .collect();
        Ok(TableFamily { param_bits, out_bits, denom, rows })
    }
}

impl Family for TableFamily {
    fn param_bits(&self) -> usize {
        self.param_bits
    }

    fn out_bits(&self) -> usize {
        self.out_bits
    }

    fn denom(&self) -> u64 {
        self.denom
    }

    fn counts(&self, z: u32) -> &[u64] {
        &self.rows[z as usize]
    }

    /// Index `i` draws `u = below(denom)` from stream `(seed, stream, i)` and
    /// inverts the cumulative counts of `D(z)`.
    fn sample_range(&self, z: u32, seed: u64, stream: u64, start: u64, count: usize) -> Vec<u32> {
        let row = &self.rows[z as usize];
        let mut cum = Vec::with_capacity(row.len());
        let mut acc = 0u64;
        for c in row {
            acc += c;
            cum.push(acc);
        }
        (start..start + count as u64)
            .map(|i| {
                let u = Coins::new(seed, stream, i).below(self.denom);
                cum.partition_point(|c| *c <= u) as u32
            })
            .collect()
    }
}

pub(crate) fn check_param(fam: &(impl Family + ?Sized), z: BitString) -> Result<u32> {
    check_len(fam.param_bits(), z.len())?;
    Ok(z.value())
}

pub(crate) fn check_outcome(fam: &(impl Family + ?Sized), x: BitString) -> Result<u32> {
    check_len(fam.out_bits(), x.len())?;
    Ok(x.value())
}

pub(crate) fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Numerator of `SD(D(a), D(b))` over `denom`.
pub(crate) fn sd_numer(fam: &(impl Family + ?Sized), a: u32, b: u32) -> u64 {
    fam.counts(a).iter().zip(fam.counts(b)).map(|(x, y)| x.saturating_sub(*y)).sum()
}

/// `Pr[x ← D(z)]`, exactly.
pub fn exact_prob(fam: &(impl Family + ?Sized), z: BitString, x: BitString) -> Result<BigRational> {
    let z = check_param(fam, z)?;
    let x = check_outcome(fam, x)?;
    Ok(ratio(fam.counts(z)[x as usize], fam.denom()))
}

/// The whole vector `D(z)`.
pub fn dist_vector(fam: &(impl Family + ?Sized), z: BitString) -> Result<Distribution> {
    let z = check_param(fam, z)?;
    Distribution::from_counts(fam.out_bits(), fam.counts(z), fam.denom())
}

/// `t` i.i.d. draws from `D(z)` on stream [`stream::SAMPLES`].
pub fn draw_samples(fam: &(impl Family + ?Sized), z: BitString, t: usize, seed: u64) -> Result<SampleSet> {
    let zi = check_param(fam, z)?;
    if t == 0 {
        return Err(Error::Precondition("t must be at least 1".into()));
    }
    let m = fam.out_bits();
    let samples = fam
        .sample_range(zi, seed, stream::SAMPLES, 0, t)
        .into_iter()
        .map(|x| BitString::raw(x, m))
        .collect();
    Ok(SampleSet { samples, seed })
}

/// Smallest `m` with every positive probability of the family at least `2^-m`.
pub fn min_prob_exponent(fam: &(impl Family + ?Sized)) -> u32 {
    let denom = fam.denom() as u128;
    let min = (0..1u32 << fam.param_bits())
        .flat_map(|z| fam.counts(z).iter().copied().filter(|c| *c > 0))
        .min()
        .expect("every distribution has positive mass") as u128;
    (0..).find(|m| min << m >= denom).unwrap()
}

/// Every outcome has positive probability under every parameter.
pub fn is_fully_supported(fam: &(impl Family + ?Sized)) -> bool {
    (0..1u32 << fam.param_bits()).all(|z| fam.counts(z).iter().all(|c| *c > 0))
}

/// Drawn outcomes together with the seed that produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    pub samples: Vec<BitString>,
    pub seed: u64,
}

impl SampleSet {
    pub fn t(&self) -> usize {
        self.samples.len()
    }

    pub fn width(&self) -> Option<usize> {
        self.samples.first().map(|s| s.len())
    }

    /// Newline-delimited bit strings, optionally preceded by `# seed: N`.
    /// Blank lines and other `#` lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seed = 0;
        let mut samples: Vec<BitString> = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("seed:") {
                    seed = v.trim().parse().map_err(|e| Error::Parse(format!("line {}: seed: {e}", no + 1)))?;
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let s: BitString = line.parse().map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
            if let Some(first) = samples.first() {
                if first.len() != s.len() {
                    return Err(Error::Parse(format!(
                        "line {}: sample has {} bits, earlier samples have {}",
                        no + 1,
                        s.len(),
                        first.len()
                    )));
                }
            }
            samples.push(s);
        }
        if samples.is_empty() {
            return Err(Error::Parse("sample file holds no samples".into()));
        }
        Ok(SampleSet { samples, seed })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# seed: {}\n", self.seed);
        for s in &self.samples {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }
}
