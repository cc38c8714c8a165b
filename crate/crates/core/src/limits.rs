//! Enumeration caps. Every exhaustive routine checks against these.

/// Longest bit string handled anywhere (outcomes, parameters, tuples).
pub const MAX_BITSTRING: usize = 24;
/// Parameter bits of a circuit family.
pub const MAX_PARAM_BITS: usize = 12;
/// Random bits of a circuit family.
pub const MAX_RAND_BITS: usize = 20;
/// Output bits of a circuit family.
pub const MAX_OUT_BITS: usize = 16;
/// Total bits of a materialized tensor power or sample tuple.
pub const MAX_TUPLE_BITS: usize = 24;
/// Gates per circuit.
pub const MAX_GATES: usize = 1 << 16;
/// Largest number of sample types (multisets) enumerated exactly before
/// falling back to Monte Carlo.
pub const MAX_TYPE_CLASSES: u64 = 1 << 18;
/// Largest common denominator a probability table may use.
pub const MAX_TABLE_DENOM_BITS: u32 = 62;
