use std::fmt;

use rand::{Rng, RngCore};

/// Growable bit string, bit 0 first, packed little-endian into `u64` words.
///
/// Bits past `len` are always zero so that derived equality and hashing
/// are exact.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    pub fn random(len: usize, rng: &mut dyn RngCore) -> Self {
        let mut s = Self::zeros(len);
        for w in s.words.iter_mut() {
            *w = rng.random();
        }
        s.trim();
        s
    }

    /// Low `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        let mut s = Self::zeros(0);
        s.push_bits(value, len);
        s
    }

    fn trim(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i % 64);
        if b {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    /// Appends the low `nbits` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, nbits: usize) {
        for k in (0..nbits).rev() {
            let i = self.len;
            self.len += 1;
            if self.words.len() * 64 < self.len {
                self.words.push(0);
            }
            if (value >> k) & 1 == 1 {
                self.words[i / 64] |= 1u64 << (i % 64);
            }
        }
    }

    /// Reads `nbits <= 64` bits starting at `start`, first bit most significant.
    pub fn read_bits(&self, start: usize, nbits: usize) -> u64 {
        (start..start + nbits).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    /// `len` bits starting at `offset`.
    pub fn window(&self, offset: usize, len: usize) -> BitString {
        assert!(offset + len <= self.len, "window out of range");
        let mut out = Self::zeros(len);
        let (ws, bs) = (offset / 64, offset % 64);
        for k in 0..out.words.len() {
            let lo = self.words.get(ws + k).copied().unwrap_or(0);
            let v = if bs == 0 {
                lo
            } else {
                let hi = self.words.get(ws + k + 1).copied().unwrap_or(0);
                (lo >> bs) | (hi << (64 - bs))
            };
            out.words[k] = v;
        }
        out.trim();
        out
    }

    pub fn xor_assign(&mut self, other: &BitString) {
        assert_eq!(self.len, other.len, "bit string length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + b)
            })
        })
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        for i in 0..other.len {
            out.push_bits(other.get(i) as u64, 1);
        }
        out
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn push_and_read() {
        let mut s = BitString::zeros(0);
        s.push_bits(0b1011, 4);
        s.push_bits(0b01, 2);
        assert_eq!(s.len(), 6);
        assert_eq!(format!("{s:?}"), "101101");
        assert_eq!(s.read_bits(0, 4), 0b1011);
        assert_eq!(s.read_bits(2, 4), 0b1101);
    }

    #[test]
    fn window_matches_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = BitString::random(300, &mut rng);
        for (off, len) in [(0, 300), (1, 64), (63, 130), (64, 64), (200, 100), (299, 1), (5, 0)] {
            let w = s.window(off, len);
            assert_eq!(w.len(), len);
            for i in 0..len {
                assert_eq!(w.get(i), s.get(off + i));
            }
        }
    }

    #[test]
    fn random_respects_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = BitString::random(70, &mut rng);
        assert_eq!(s.words()[1] >> 6, 0);
        assert_eq!(s.ones().count(), s.count_ones());
    }
}
