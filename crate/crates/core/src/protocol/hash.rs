//! Toeplitz-matrix universal hashing.

use rand::RngCore;

use super::bits::BitString;
use crate::error::{arg, Result};

/// Linear map `{0,1}^in -> {0,1}^out` with `T[i][j] = seed[i - j + in - 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzHash {
    input_len: usize,
    output_len: usize,
    seed: BitString,
}

impl ToeplitzHash {
    pub fn new(seed: BitString, input_len: usize, output_len: usize) -> Result<Self> {
        let need = (input_len + output_len).saturating_sub(1);
        if seed.len() != need {
            return arg(format!(
                "Toeplitz seed has {} bits, expected {need} for {input_len} -> {output_len}",
                seed.len()
            ));
        }
        Ok(Self {
            input_len,
            output_len,
            seed,
        })
    }

    pub fn random(input_len: usize, output_len: usize, rng: &mut dyn RngCore) -> Self {
        let seed = BitString::random((input_len + output_len).saturating_sub(1), rng);
        Self {
            input_len,
            output_len,
            seed,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn seed(&self) -> &BitString {
        &self.seed
    }

    /// Column `j` of the matrix: `seed[in-1-j .. in-1-j+out]`.
    pub fn column(&self, j: usize) -> BitString {
        if self.output_len == 0 {
            return BitString::zeros(0);
        }
        self.seed.window(self.input_len - 1 - j, self.output_len)
    }

    pub fn apply(&self, input: &BitString) -> Result<BitString> {
        if input.len() != self.input_len {
            return arg(format!(
                "hash input has {} bits, expected {}",
                input.len(),
                self.input_len
            ));
        }
        let mut out = BitString::zeros(self.output_len);
        if self.output_len > 0 {
            for j in input.ones() {
                out.xor_assign(&self.column(j));
            }
        }
        Ok(out)
    }
}

/// Output bit `i` is the parity of `input AND` row `i` of the Toeplitz
/// matrix built from `seed_bits`.
pub fn toeplitz_hash(seed_bits: &BitString, input_bits: &BitString, out_len: usize) -> Result<BitString> {
    ToeplitzHash::new(seed_bits.clone(), input_bits.len(), out_len)?.apply(input_bits)
}

/// Privacy-amplification hash `F(x) = x[..l] ⊕ T x[l..]` with `T` a random
/// `l x (in - l)` Toeplitz matrix.
///
/// Every member of the family is surjective, and for `x != x'` the
/// collision probability is at most `2^-l`, so it is universal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivacyHash {
    input_len: usize,
    output_len: usize,
    tail: ToeplitzHash,
}

impl PrivacyHash {
    pub fn new(seed: BitString, input_len: usize, output_len: usize) -> Result<Self> {
        if output_len > input_len {
            return arg(format!(
                "cannot extract {output_len} bits from a {input_len}-bit input"
            ));
        }
        let tail = ToeplitzHash::new(seed, input_len - output_len, output_len)?;
        Ok(Self {
            input_len,
            output_len,
            tail,
        })
    }

    pub fn random(input_len: usize, output_len: usize, rng: &mut dyn RngCore) -> Result<Self> {
        if output_len > input_len {
            return arg(format!(
                "cannot extract {output_len} bits from a {input_len}-bit input"
            ));
        }
        Ok(Self {
            input_len,
            output_len,
            tail: ToeplitzHash::random(input_len - output_len, output_len, rng),
        })
    }

    pub fn seed(&self) -> &BitString {
        self.tail.seed()
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// Image of the unit vector `e_j`.
    pub fn column(&self, j: usize) -> BitString {
        if j < self.output_len {
            let mut c = BitString::zeros(self.output_len);
            c.set(j, true);
            c
        } else {
            self.tail.column(j - self.output_len)
        }
    }

    pub fn apply(&self, input: &BitString) -> Result<BitString> {
        if input.len() != self.input_len {
            return arg(format!(
                "hash input has {} bits, expected {}",
                input.len(),
                self.input_len
            ));
        }
        let l = self.output_len;
        let mut out = input.window(0, l);
        out.xor_assign(&self.tail.apply(&input.window(l, self.input_len - l))?);
        Ok(out)
    }
}
