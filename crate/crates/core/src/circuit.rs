//! Boolean circuits `D(z; r)` and their JSON form.
//!
//! Wires are numbered parameters first, randomness second, then one wire
//! per gate. Parameter wire `i` carries bit `i` of `z` (leftmost first).
//! Randomness wire `k + j` carries bit `j` of the integer `r`, least
//! significant first; `r` itself never leaves this module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{MAX_GATES, MAX_OUT_BITS, MAX_PARAM_BITS, MAX_RAND_BITS};
use crate::rng::Coins;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Op {
    And,
    Or,
    Not,
    Xor,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub op: Op,
    #[serde(rename = "in")]
    pub inputs: Vec<u32>,
}

/// Serialized form; [`Circuit::from_desc`] validates it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDesc {
    pub param_bits: usize,
    pub rand_bits: usize,
    pub out_bits: usize,
    pub gates: Vec<Gate>,
    pub outputs: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    desc: CircuitDesc,
}

// lane patterns for the six lowest randomness bits inside one 64-lane block
const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

impl Circuit {
    pub fn from_json(text: &str) -> Result<Self> {
        let desc: CircuitDesc =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("circuit JSON: {e}")))?;
        Self::from_desc(desc)
    }

    pub fn from_desc(desc: CircuitDesc) -> Result<Self> {
        if desc.param_bits > MAX_PARAM_BITS {
            return Err(Error::Limit(format!("param_bits {} > {MAX_PARAM_BITS}", desc.param_bits)));
        }
        if desc.rand_bits > MAX_RAND_BITS {
            return Err(Error::Limit(format!("rand_bits {} > {MAX_RAND_BITS}", desc.rand_bits)));
        }
        if desc.out_bits > MAX_OUT_BITS {
            return Err(Error::Limit(format!("out_bits {} > {MAX_OUT_BITS}", desc.out_bits)));
        }
        if desc.gates.len() > MAX_GATES {
            return Err(Error::Limit(format!("{} gates > {MAX_GATES}", desc.gates.len())));
        }
        if desc.outputs.len() != desc.out_bits {
            return Err(Error::Invalid(format!(
                "out_bits is {} but {} outputs are listed",
                desc.out_bits,
                desc.outputs.len()
            )));
        }
        let base = desc.param_bits + desc.rand_bits;
        for (g, gate) in desc.gates.iter().enumerate() {
            let arity_ok = match gate.op {
                Op::Not => gate.inputs.len() == 1,
                _ => !gate.inputs.is_empty(),
            };
            if !arity_ok {
                return Err(Error::Invalid(format!(
                    "gate {g} ({:?}) has {} inputs",
                    gate.op,
                    gate.inputs.len()
                )));
            }
            for &w in &gate.inputs {
                if w as usize >= base + g {
                    return Err(Error::Invalid(format!(
                        "gate {g} reads wire {w}, only wires below {} exist at that point",
                        base + g
                    )));
                }
            }
        }
        let wires = base + desc.gates.len();
        for &w in &desc.outputs {
            if w as usize >= wires {
                return Err(Error::Invalid(format!("output wire {w} out of range ({wires} wires)")));
            }
        }
        Ok(Circuit { desc })
    }

    pub fn desc(&self) -> &CircuitDesc {
        &self.desc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.desc).expect("circuit serializes")
    }

    pub fn param_bits(&self) -> usize {
        self.desc.param_bits
    }

    pub fn rand_bits(&self) -> usize {
        self.desc.rand_bits
    }

    pub fn out_bits(&self) -> usize {
        self.desc.out_bits
    }

    pub fn wire_count(&self) -> usize {
        self.desc.param_bits + self.desc.rand_bits + self.desc.gates.len()
    }

    /// Single evaluation; `z` and the result are MSB-first integers.
    pub fn eval(&self, z: u32, r: u32) -> u32 {
        let k = self.param_bits();
        let mut wires = Vec::with_capacity(self.wire_count());
        wires.extend((0..k).map(|i| (z >> (k - 1 - i)) & 1 == 1));
        wires.extend((0..self.rand_bits()).map(|j| (r >> j) & 1 == 1));
        for gate in &self.desc.gates {
            let mut it = gate.inputs.iter().map(|&w| wires[w as usize]);
            let v = match gate.op {
                Op::Not => !it.next().unwrap(),
                Op::And => it.all(|b| b),
                Op::Or => it.any(|b| b),
                Op::Xor => it.fold(false, |a, b| a ^ b),
            };
            wires.push(v);
        }
        self.desc
            .outputs
            .iter()
            .fold(0, |acc, &w| (acc << 1) | wires[w as usize] as u32)
    }

    /// 64 evaluations at once. `rand_words[j]` holds randomness bit `j` for
    /// every lane; `buf` is scratch space.
    pub(crate) fn eval_lanes(&self, z: u32, rand_words: &[u64], buf: &mut Vec<u64>, out: &mut [u32; 64]) {
        let k = self.param_bits();
        buf.clear();
        buf.extend((0..k).map(|i| if (z >> (k - 1 - i)) & 1 == 1 { u64::MAX } else { 0 }));
        buf.extend_from_slice(&rand_words[..self.rand_bits()]);
        for gate in &self.desc.gates {
            let mut it = gate.inputs.iter().map(|&w| buf[w as usize]);
            let v = match gate.op {
                Op::Not => !it.next().unwrap(),
                Op::And => it.fold(u64::MAX, |a, b| a & b),
                Op::Or => it.fold(0, |a, b| a | b),
                Op::Xor => it.fold(0, |a, b| a ^ b),
            };
            buf.push(v);
        }
        out.fill(0);
        for &w in &self.desc.outputs {
            let word = buf[w as usize];
            for (lane, x) in out.iter_mut().enumerate() {
                *x = (*x << 1) | ((word >> lane) & 1) as u32;
            }
        }
    }

    /// `counts[x] = #{r : D(z; r) = x}` over all `2^rand_bits` values of `r`.
    pub fn counts(&self, z: u32) -> Vec<u64> {
        let rho = self.rand_bits();
        let mut counts = vec![0u64; 1 << self.out_bits()];
        let (blocks, lanes) = if rho >= 6 { (1u64 << (rho - 6), 64) } else { (1, 1usize << rho) };
        let mut words = vec![0u64; rho];
        let mut buf = Vec::with_capacity(self.wire_count());
        let mut out = [0u32; 64];
        for block in 0..blocks {
            for (j, w) in words.iter_mut().enumerate() {
                *w = if j < 6 {
                    LANE_PATTERNS[j]
                } else if (block >> (j - 6)) & 1 == 1 {
                    u64::MAX
                } else {
                    0
                };
            }
            self.eval_lanes(z, &words, &mut buf, &mut out);
            for &x in &out[..lanes] {
                counts[x as usize] += 1;
            }
        }
        counts
    }

    /// Draws `count` outcomes starting at sample index `start`. Block `b`
    /// (indices `64b .. 64b+63`) takes its randomness words from stream
    /// `(seed, stream, b)`, so two parameters see identical randomness.
    pub fn sample_range(&self, z: u32, seed: u64, stream: u64, start: u64, count: usize) -> Vec<u32> {
        let mut res = Vec::with_capacity(count);
        let mut buf = Vec::with_capacity(self.wire_count());
        let mut out = [0u32; 64];
        let mut words = vec![0u64; self.rand_bits()];
        let end = start + count as u64;
        let mut idx = start;
        while idx < end {
            let block = idx / 64;
            let mut coins = Coins::new(seed, stream, block);
            for w in words.iter_mut() {
                *w = coins.next_u64();
            }
            self.eval_lanes(z, &words, &mut buf, &mut out);
            let lo = (idx % 64) as usize;
            let hi = ((end - block * 64).min(64)) as usize;
            res.extend_from_slice(&out[lo..hi]);
            idx = block * 64 + hi as u64;
        }
        res
    }
}

/// Incremental construction of circuits.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    param_bits: usize,
    rand_bits: usize,
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new(param_bits: usize, rand_bits: usize) -> Self {
        CircuitBuilder { param_bits, rand_bits, gates: Vec::new() }
    }

    pub fn param(&self, i: usize) -> u32 {
        assert!(i < self.param_bits);
        i as u32
    }

    pub fn rand(&self, j: usize) -> u32 {
        assert!(j < self.rand_bits);
        (self.param_bits + j) as u32
    }

    pub fn gate(&mut self, op: Op, inputs: &[u32]) -> u32 {
        self.gates.push(Gate { op, inputs: inputs.to_vec() });
        (self.param_bits + self.rand_bits + self.gates.len() - 1) as u32
    }

    pub fn and(&mut self, a: u32, b: u32) -> u32 {
        self.gate(Op::And, &[a, b])
    }

    pub fn or(&mut self, a: u32, b: u32) -> u32 {
        self.gate(Op::Or, &[a, b])
    }

    pub fn xor(&mut self, a: u32, b: u32) -> u32 {
        self.gate(Op::Xor, &[a, b])
    }

    pub fn not(&mut self, a: u32) -> u32 {
        self.gate(Op::Not, &[a])
    }

    /// `sel ? a : b`
    pub fn mux(&mut self, sel: u32, a: u32, b: u32) -> u32 {
        let nsel = self.not(sel);
        let x = self.and(sel, a);
        let y = self.and(nsel, b);
        self.or(x, y)
    }

    /// Constant wire; needs at least one input wire to exist.
    pub fn constant(&mut self, v: bool) -> u32 {
        assert!(self.param_bits + self.rand_bits > 0, "no input wire to derive a constant from");
        let zero = self.xor(0, 0);
        if v {
            self.not(zero)
        } else {
            zero
        }
    }

    /// 1 iff the MSB-first word on `bits` is below `k`.
    pub fn less_than(&mut self, bits: &[u32], k: u64) -> u32 {
        if bits.len() < 64 && k >= 1 << bits.len() {
            return self.constant(true);
        }
        // `eq`: prefix so far equals k's prefix (None = constant 1); `lt`: already below (None = constant 0)
        let (mut eq, mut lt): (Option<u32>, Option<u32>) = (None, None);
        for (i, &b) in bits.iter().enumerate() {
            let kb = k >> (bits.len() - 1 - i) & 1 == 1;
            let nb = self.not(b);
            if kb {
                let here = match eq {
                    None => nb,
                    Some(e) => self.and(e, nb),
                };
                lt = Some(match lt {
                    None => here,
                    Some(l) => self.or(l, here),
                });
                eq = Some(match eq {
                    None => b,
                    Some(e) => self.and(e, b),
                });
            } else {
                eq = Some(match eq {
                    None => nb,
                    Some(e) => self.and(e, nb),
                });
            }
        }
        match lt {
            Some(l) => l,
            None => self.constant(false),
        }
    }

    /// Copies `desc`'s gates with its parameter and randomness wires bound to
    /// the given wires; returns the wires carrying its outputs.
    pub fn inline(&mut self, desc: &CircuitDesc, params: &[u32], rands: &[u32]) -> Vec<u32> {
        assert_eq!(params.len(), desc.param_bits);
        assert_eq!(rands.len(), desc.rand_bits);
        let mut map: Vec<u32> = params.iter().chain(rands).copied().collect();
        for g in &desc.gates {
            let inputs: Vec<u32> = g.inputs.iter().map(|w| map[*w as usize]).collect();
            let w = self.gate(g.op, &inputs);
            map.push(w);
        }
        desc.outputs.iter().map(|w| map[*w as usize]).collect()
    }

    pub fn finish(self, outputs: Vec<u32>) -> Result<Circuit> {
        Circuit::from_desc(CircuitDesc {
            param_bits: self.param_bits,
            rand_bits: self.rand_bits,
            out_bits: outputs.len(),
            gates: self.gates,
            outputs,
        })
    }
}
