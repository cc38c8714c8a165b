//! Fixed-width bit strings, most significant bit first.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::limits::MAX_BITSTRING;

/// A string of at most [`MAX_BITSTRING`] bits.
///
/// Bit 0 is the leftmost character of the textual form and the most
/// significant bit of [`BitString::value`], so numeric order on equal
/// lengths is lexicographic order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    value: u32,
    len: u8,
}

impl BitString {
    pub const EMPTY: BitString = BitString { value: 0, len: 0 };

    pub fn new(value: u32, len: usize) -> Result<Self> {
        if len > MAX_BITSTRING {
            return Err(Error::Limit(format!("bit string of length {len} exceeds {MAX_BITSTRING}")));
        }
        if len < 32 && value >> len != 0 {
            return Err(Error::Invalid(format!("value {value} does not fit in {len} bits")));
        }
        Ok(BitString { value, len: len as u8 })
    }

    /// Caller guarantees `len <= MAX_BITSTRING` and `value < 2^len`.
    pub(crate) fn raw(value: u32, len: usize) -> Self {
        debug_assert!(len <= MAX_BITSTRING && (value >> len) == 0);
        BitString { value, len: len as u8 }
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(0, len)
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn len(self) -> usize {
        self.len as usize
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    /// Bit `i`, counting from the left.
    pub fn bit(self, i: usize) -> bool {
        assert!(i < self.len(), "bit index {i} out of range for length {}", self.len);
        (self.value >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn concat(self, other: BitString) -> Result<Self> {
        let len = self.len() + other.len();
        if len > MAX_BITSTRING {
            return Err(Error::Limit(format!("concatenation of length {len} exceeds {MAX_BITSTRING}")));
        }
        Ok(BitString::raw((self.value << other.len) | other.value, len))
    }

    pub fn push(self, bit: bool) -> Result<Self> {
        self.concat(BitString::raw(bit as u32, 1))
    }

    /// The first `n` bits.
    pub fn prefix(self, n: usize) -> BitString {
        assert!(n <= self.len());
        BitString::raw(self.value >> (self.len() - n), n)
    }

    /// The last `n` bits.
    pub fn suffix(self, n: usize) -> BitString {
        assert!(n <= self.len());
        let mask = if n == 0 { 0 } else { u32::MAX >> (32 - n) };
        BitString::raw(self.value & mask, n)
    }

    /// All strings of length `len` in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len <= MAX_BITSTRING);
        (0..(1u32 << len)).map(move |v| BitString::raw(v, len))
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        // compare the common prefix, shorter wins on a tie
        let n = self.len.min(other.len) as usize;
        self.prefix(n)
            .value
            .cmp(&other.prefix(n).value)
            .then(self.len.cmp(&other.len))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() > MAX_BITSTRING {
            return Err(Error::Limit(format!("bit string of length {} exceeds {MAX_BITSTRING}", s.len())));
        }
        let mut value = 0u32;
        for c in s.chars() {
            value = (value << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::Parse(format!("invalid bit string {s:?}"))),
                };
        }
        Ok(BitString::raw(value, s.len()))
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print_round_trip() {
        for s in ["", "0", "1", "0101", "111000111000111000111000"] {
            assert_eq!(bs(s).to_string(), s);
        }
        assert!("012".parse::<BitString>().is_err());
        assert!("0".repeat(25).parse::<BitString>().is_err());
    }

    #[test]
    fn msb_first_layout() {
        let b = bs("100");
        assert_eq!(b.value(), 4);
        assert!(b.bit(0) && !b.bit(2));
        assert_eq!(bs("10").concat(bs("01")).unwrap(), bs("1001"));
        assert_eq!(bs("1101").prefix(2), bs("11"));
        assert_eq!(bs("1101").suffix(3), bs("101"));
    }

    #[test]
    fn ordering_is_lexicographic() {
        let mut v = vec![bs("10"), bs("0"), bs("01"), bs("1"), bs(""), bs("00")];
        v.sort();
        let got: Vec<String> = v.iter().map(|b| b.to_string()).collect();
        assert_eq!(got, ["", "0", "00", "01", "1", "10"]);
    }

    #[test]
    fn enumeration_order() {
        let all: Vec<String> = BitString::all(2).map(|b| b.to_string()).collect();
        assert_eq!(all, ["00", "01", "10", "11"]);
    }
}
