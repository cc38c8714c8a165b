//! Built-in families, instances and corpora used by the claim suite, the
//! acceptance run and the CLI. `fixtures/v1/*.json` holds serialized copies.

use num_rational::BigRational;

use crate::bits::BitString;
use crate::circuit::CircuitBuilder;
use crate::dist::{rat, statistical_distance, Distribution};
use crate::error::Result;
use crate::family::{CircuitFamily, Family};
use crate::instance::{LearnParams, LearningInstance, Sampler};
use crate::reductions::{parity_prg, threshold_machine, PostselectMachine, PrgSpec};
use crate::rng::{derive_seed, stream, Coins};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// `out_i = z_i ⊕ (AND of `noise_bits` fresh random bits)`: each bit flips
/// with probability `2^-noise_bits`.
pub fn noisy_copy(k: usize, noise_bits: usize) -> Result<CircuitFamily> {
    let mut b = CircuitBuilder::new(k, k * noise_bits);
    let outs = (0..k)
        .map(|i| {
            let r: Vec<u32> = (0..noise_bits).map(|j| b.rand(i * noise_bits + j)).collect();
            let flip = if noise_bits == 1 { r[0] } else { b.gate(crate::circuit::Op::And, &r) };
            b.xor(b.param(i), flip)
        })
        .collect();
    Ok(CircuitFamily::new(b.finish(outs)?))
}

/// The biased family: `k` parameter bits, each copied with flip probability 1/4.
pub fn biased_family(k: usize) -> Result<CircuitFamily> {
    noisy_copy(k, 2)
}

/// `D(z)` = point mass on `z`.
pub fn identity_family(k: usize) -> Result<CircuitFamily> {
    let b = CircuitBuilder::new(k, 0);
    let outs = (0..k).map(|i| b.param(i)).collect();
    Ok(CircuitFamily::new(b.finish(outs)?))
}

/// Every `D(z)` uniform on `m` bits.
pub fn degenerate_family(k: usize, m: usize) -> Result<CircuitFamily> {
    let b = CircuitBuilder::new(k, m);
    let outs = (0..m).map(|j| b.rand(j)).collect();
    Ok(CircuitFamily::new(b.finish(outs)?))
}

/// `k - 1` copied bits whose flip probability is 1/4 or 1/8 depending on
/// the last parameter bit.
pub fn switched_family(k: usize) -> Result<CircuitFamily> {
    let n = k - 1;
    let mut b = CircuitBuilder::new(k, 3 * n);
    let sel = b.param(k - 1);
    let outs = (0..n)
        .map(|i| {
            let (r0, r1, r2) = (b.rand(3 * i), b.rand(3 * i + 1), b.rand(3 * i + 2));
            let two = b.and(r0, r1);
            let three = b.and(two, r2);
            let flip = b.mux(sel, three, two);
            b.xor(b.param(i), flip)
        })
        .collect();
    Ok(CircuitFamily::new(b.finish(outs)?))
}

/// `(z0 ∧ r0, z1 ⊕ r1 r2)`: some members miss outcomes.
pub fn sparse_family() -> Result<CircuitFamily> {
    let mut b = CircuitBuilder::new(2, 3);
    let o0 = b.and(b.param(0), b.rand(0));
    let n = b.and(b.rand(1), b.rand(2));
    let o1 = b.xor(b.param(1), n);
    Ok(CircuitFamily::new(b.finish(vec![o0, o1])?))
}

/// `z0 ∧ r0 ∧ r1`.
pub fn and_family() -> Result<CircuitFamily> {
    let mut b = CircuitBuilder::new(1, 2);
    let ins = [b.param(0), b.rand(0), b.rand(1)];
    let out = b.gate(crate::circuit::Op::And, &ins);
    Ok(CircuitFamily::new(b.finish(vec![out])?))
}

fn uniform_sampler(k: usize) -> Result<Sampler> {
    Ok(Sampler::Explicit(Distribution::uniform(k)?))
}

/// Biased `k = 4` puzzle instance with `eps = 1`, `t = 64`.
pub fn owp_instance() -> Result<LearningInstance> {
    LearningInstance::new(uniform_sampler(4)?, biased_family(4)?, LearnParams::new(1, 10, 64)?)
}

#[derive(Clone, Debug)]
pub struct AgnosticFixture {
    pub name: &'static str,
    pub member: BitString,
    pub uniform_weight: BigRational,
    /// Carries the mixture target.
    pub instance: LearningInstance,
}

fn agnostic(
    name: &'static str,
    fam: CircuitFamily,
    member: &str,
    weight: BigRational,
    eps: u64,
    t: u64,
) -> Result<AgnosticFixture> {
    let member: BitString = member.parse()?;
    let target = crate::family::dist_vector(&fam, member)?.mix(&Distribution::uniform(fam.out_bits())?, &weight)?;
    let k = fam.param_bits();
    let instance = LearningInstance::new(uniform_sampler(k)?, fam, LearnParams::new(eps, 10, t)?)?.with_target(target)?;
    Ok(AgnosticFixture { name, member, uniform_weight: weight, instance })
}

/// Five targets, each a family member mixed with at most 20% uniform noise.
pub fn agnostic_fixtures() -> Result<Vec<AgnosticFixture>> {
    Ok(vec![
        agnostic("biased4", biased_family(4)?, "1011", rat(1, 10), 4, 2048)?,
        agnostic("identity3", identity_family(3)?, "101", rat(1, 5), 2, 1024)?,
        agnostic("sparse_noise5", noisy_copy(5, 3)?, "10010", rat(3, 20), 3, 2048)?,
        agnostic("biased6", biased_family(6)?, "110100", rat(1, 10), 4, 2048)?,
        agnostic("switched5", switched_family(5)?, "01101", rat(1, 5), 3, 2048)?,
    ])
}

/// Families whose every member gives every outcome positive probability.
pub fn fully_supported_families() -> Result<Vec<(&'static str, CircuitFamily)>> {
    Ok(vec![
        ("biased3", biased_family(3)?),
        ("biased4", biased_family(4)?),
        ("switched4", switched_family(4)?),
        ("degenerate", degenerate_family(2, 3)?),
    ])
}

/// Families for the smoothing check, including ones with missing outcomes.
pub fn smoothing_corpus() -> Result<Vec<(&'static str, CircuitFamily)>> {
    Ok(vec![
        ("sparse", sparse_family()?),
        ("identity3", identity_family(3)?),
        ("biased3", biased_family(3)?),
        ("noisy_copy3", noisy_copy(3, 3)?),
        ("switched4", switched_family(4)?),
    ])
}

/// Families for the distinguisher checks, `k <= 6`.
pub fn distinguisher_families() -> Result<Vec<(&'static str, CircuitFamily)>> {
    Ok(vec![
        ("identity3", identity_family(3)?),
        ("sparse", sparse_family()?),
        ("biased4", biased_family(4)?),
        ("switched5", switched_family(5)?),
        ("noisy_copy6", noisy_copy(6, 1)?),
        ("biased6", biased_family(6)?),
    ])
}

/// A random distribution on `width` bits with support size at most
/// `max_support` and denominators dividing 2^12 * 3 * 5 * 7.
pub fn random_distribution(coins: &mut Coins, width: usize, max_support: usize) -> Result<Distribution> {
    let n = 1usize << width;
    let size = 1 + coins.below(max_support.min(n) as u64) as usize;
    let mut outcomes: Vec<u32> = (0..n as u32).collect();
    // partial Fisher-Yates
    for i in 0..size {
        let j = i + coins.below((n - i) as u64) as usize;
        outcomes.swap(i, j);
    }
    let denoms = [8u64, 12, 15, 16, 21, 64];
    let scale = denoms[coins.below(denoms.len() as u64) as usize];
    let weights: Vec<(BitString, u64)> =
        outcomes[..size].iter().map(|&x| (BitString::raw(x, width), 1 + coins.below(scale))).collect();
    Distribution::from_weights(width, &weights)
}

/// `count` random pairs over widths 1 to 4.
pub fn distribution_pairs(count: usize, seed: u64) -> Result<Vec<(Distribution, Distribution)>> {
    let mut coins = Coins::new(seed, stream::CORPUS, 0);
    (0..count)
        .map(|_| {
            let width = 1 + coins.below(4) as usize;
            let p = random_distribution(&mut coins, width, 16)?;
            let q = random_distribution(&mut coins, width, 16)?;
            Ok((p, q))
        })
        .collect()
}

/// `count` pairs with `SD > 1/(2 eps)`, each tagged with its `eps` in 1..=3.
pub fn amplification_corpus(count: usize, seed: u64) -> Result<Vec<(Distribution, Distribution, u64)>> {
    let mut coins = Coins::new(seed, stream::CORPUS, 1);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let width = 1 + coins.below(3) as usize;
        let eps = 1 + coins.below(3);
        let p = random_distribution(&mut coins, width, 8)?;
        let q = random_distribution(&mut coins, width, 8)?;
        if statistical_distance(&p, &q)? * BigRational::from_integer((2 * eps).into()) > rat(1, 1) {
            out.push((p, q, eps));
        }
    }
    Ok(out)
}

/// A threshold machine together with the numbers that determine its
/// conditional probability.
#[derive(Clone, Debug)]
pub struct CorpusMachine {
    pub machine: PostselectMachine,
    pub accept_below: u64,
    pub post_below: u64,
    /// True for machines whose ratio lies strictly between 1/3 and 3.
    pub gap: bool,
}

pub const MACHINE_INPUT_BITS: usize = 2;
pub const MACHINE_RAND_BITS: usize = 6;

/// `promise` machines with likelihood ratio at least 3 or at most 1/3 on
/// every input, and `gap` machines strictly between.
pub fn postselect_corpus(promise: usize, gap: usize, seed: u64) -> Result<Vec<CorpusMachine>> {
    let mut coins = Coins::new(seed, stream::CORPUS, 2);
    let mut out = Vec::with_capacity(promise + gap);
    let full = 1u64 << MACHINE_RAND_BITS;
    while out.len() < promise + gap {
        let want_gap = out.len() >= promise;
        let s = 4 + coins.below(full - 3);
        let b = coins.below(s + 1);
        // ratio b/(s-b) ≥ 3 ⇔ 4b ≥ 3s; ≤ 1/3 ⇔ 4b ≤ s
        let promised = 4 * b >= 3 * s || 4 * b <= s;
        if promised == want_gap {
            continue;
        }
        out.push(CorpusMachine {
            machine: threshold_machine(MACHINE_INPUT_BITS, MACHINE_RAND_BITS, b, s)?,
            accept_below: b,
            post_below: s,
            gap: want_gap,
        });
    }
    Ok(out)
}

/// Parity generator on 4 bits, biased under advice 2.
pub const PRG_N: usize = 4;
pub const PRG_MU_STAR: usize = 2;
pub const PRG_T: u64 = 16;

pub fn prg_fixture() -> Result<PrgSpec> {
    parity_prg(PRG_N, PRG_MU_STAR)
}

/// Named JSON documents written to `fixtures/v1`.
pub fn fixture_files() -> Result<Vec<(String, String)>> {
    let mut files = vec![
        ("biased4.family.json".to_string(), biased_family(4)?.circuit().to_json()),
        ("identity3.family.json".to_string(), identity_family(3)?.circuit().to_json()),
        ("degenerate.family.json".to_string(), degenerate_family(2, 3)?.circuit().to_json()),
        ("sparse.family.json".to_string(), sparse_family()?.circuit().to_json()),
        ("owp_biased4.instance.json".to_string(), owp_instance()?.to_json()),
        (
            "owp_identity3.instance.json".to_string(),
            LearningInstance::new(uniform_sampler(3)?, identity_family(3)?, LearnParams::new(2, 10, 16)?)?.to_json(),
        ),
        (
            "owp_degenerate.instance.json".to_string(),
            LearningInstance::new(uniform_sampler(2)?, degenerate_family(2, 3)?, LearnParams::new(2, 10, 4)?)?
                .to_json(),
        ),
    ];
    for f in agnostic_fixtures()? {
        files.push((format!("agnostic_{}.instance.json", f.name), f.instance.to_json()));
    }
    let prg = prg_fixture()?;
    let mut v: serde_json::Value = serde_json::from_str(&prg.gen.circuit().to_json()).unwrap();
    v["role"] = "prg".into();
    files.push(("parity_prg.json".to_string(), serde_json::to_string_pretty(&v).unwrap()));
    let m = threshold_machine(2, 3, 3, 4)?;
    let mut v: serde_json::Value = serde_json::from_str(&m.circuit().circuit().to_json()).unwrap();
    let outs = m.circuit().circuit().desc().outputs.clone();
    v["role"] = "postselect".into();
    v["b_wire"] = outs[0].into();
    v["bstar_wire"] = outs[1].into();
    files.push(("postselect_three_quarters.json".to_string(), serde_json::to_string_pretty(&v).unwrap()));
    // samples of the point mass on 101
    let s = crate::family::draw_samples(&identity_family(3)?, "101".parse()?, 32, derive_seed(DEFAULT_SEED, stream::SAMPLES, 0))?;
    files.push(("identity3_101.samples".to_string(), s.to_text()));
    Ok(files)
}
