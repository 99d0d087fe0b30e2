//! Fixed-length packed bit array with popcount helpers.

use std::fmt;

const WORD: usize = 64;

/// Bit array packed into `u64` words, bit `i` at word `i / 64`, position `i % 64`.
/// Bits past `len` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitArray {
    len: usize,
    words: Vec<u64>,
}

impl fmt::Debug for BitArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        write!(f, "BitArray({s})")
    }
}

impl BitArray {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self {
            len,
            words: vec![u64::MAX; len.div_ceil(WORD)],
        };
        b.clear_tail();
        b
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut out = Self::zeros(0);
        for b in bits {
            if out.len.is_multiple_of(WORD) {
                out.words.push(0);
            }
            if b {
                out.words[out.len / WORD] |= 1 << (out.len % WORD);
            }
            out.len += 1;
        }
        out
    }

    /// Parses a string of `0`/`1` characters, first character = bit 0.
    /// Returns `None` on any other character.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self::from_bools)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let m = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= m;
        } else {
            self.words[i / WORD] &= !m;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn not(&self) -> Self {
        let mut out = Self {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_tail();
        out
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Byte-packed, LSB-first: bit `i` goes to byte `i / 8`, bit position `i % 8`.
    pub fn to_bytes_lsb(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        (0..n)
            .map(|k| (self.words[k / 8] >> ((k % 8) * 8)) as u8)
            .collect()
    }

    /// Inverse of [`to_bytes_lsb`](Self::to_bytes_lsb). Returns `None` if the byte
    /// count does not match `len` or padding bits in the last byte are set.
    pub fn from_bytes_lsb(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut out = Self::zeros(len);
        for (k, &byte) in bytes.iter().enumerate() {
            out.words[k / 8] |= (byte as u64) << ((k % 8) * 8);
        }
        let before = out.words.clone();
        out.clear_tail();
        (out.words == before).then_some(out)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

/// Counts `(differing, compared)` bits over positions where both masks are set.
///
/// Panics if the four arrays do not share one length.
pub fn masked_xor_count(
    a: &BitArray,
    mask_a: &BitArray,
    b: &BitArray,
    mask_b: &BitArray,
) -> (usize, usize) {
    assert!(
        a.len == b.len && a.len == mask_a.len && a.len == mask_b.len,
        "bit arrays must share one length"
    );
    let mut diff = 0usize;
    let mut compared = 0usize;
    for i in 0..a.words.len() {
        let m = mask_a.words[i] & mask_b.words[i];
        diff += ((a.words[i] ^ b.words[i]) & m).count_ones() as usize;
        compared += m.count_ones() as usize;
    }
    (diff, compared)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_and_tail() {
        let mut b = BitArray::zeros(70);
        b.set(0, true);
        b.set(69, true);
        assert!(b.get(0) && b.get(69) && !b.get(68));
        assert_eq!(b.count_ones(), 2);
        assert_eq!(b.not().count_ones(), 68);
        assert_eq!(BitArray::ones(70).count_ones(), 70);
    }

    #[test]
    fn parse_and_debug() {
        let b = BitArray::parse("10110").unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(format!("{b:?}"), "BitArray(10110)");
        assert!(BitArray::parse("10x").is_none());
    }

    #[test]
    fn lsb_bytes() {
        let b = BitArray::parse("1000000001").unwrap();
        assert_eq!(b.to_bytes_lsb(), vec![0x01, 0x02]);
        assert_eq!(BitArray::from_bytes_lsb(&[0x01, 0x02], 10).unwrap(), b);
        // padding bit set
        assert!(BitArray::from_bytes_lsb(&[0x01, 0x06], 10).is_none());
        assert!(BitArray::from_bytes_lsb(&[0x01], 10).is_none());
    }

    #[test]
    fn lsb_bytes_long() {
        let b = BitArray::from_bools((0..2048).map(|i| i % 3 == 0 || i % 7 == 1));
        assert_eq!(BitArray::from_bytes_lsb(&b.to_bytes_lsb(), 2048).unwrap(), b);
    }
}
