//! Exact GF(2) linear algebra on short binary words.
//!
//! Vectors are packed into a `u32` with coordinate 1 (the leftmost entry of
//! the tuple `(y_1, ..., y_N)`) in the most significant position, so that
//! integer order on the packed word is the lexicographic order on tuples.
//!
//! The generator `G_N = F^{⊗s}` with `F = [[1,0],[1,1]]` defines a chain of
//! index-2 subgroups `X_0 ⊃ X_1 ⊃ ... ⊃ X_{N-1}` where
//! `X_t = { x in X_{t-1} : x · G_N(:,t) = 0 }`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{arg, Error, Result};

/// Longest vector a [`BitVec`] can hold.
pub const MAX_LEN: usize = 24;

/// Default cap on `s` (N = 16, 65 536 vectors).
pub const DEFAULT_MAX_S: u32 = 4;

/// Largest `s` whose block length `2^s` still fits in a [`BitVec`].
pub const HARD_MAX_S: u32 = 4;

/// Binary vector of length `len <= 24`, packed MSB-first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: u8,
    bits: u32,
}

impl BitVec {
    pub fn new(bits: u32, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_LEN {
            return arg(format!("bit length {len} outside 1..={MAX_LEN}"));
        }
        if bits >> len != 0 {
            return arg(format!("word {bits:#x} has bits above length {len}"));
        }
        Ok(Self {
            len: len as u8,
            bits,
        })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(0, len)
    }

    pub fn ones(len: usize) -> Result<Self> {
        Self::new(low_mask(len), len)
    }

    /// Builds a vector from tuple notation, e.g. `[0, 1, 0, 1]`.
    pub fn from_tuple(entries: &[u8]) -> Result<Self> {
        let mut bits = 0u32;
        for &b in entries {
            if b > 1 {
                return arg(format!("tuple entry {b} is not a bit"));
            }
            bits = (bits << 1) | b as u32;
        }
        Self::new(bits, entries.len())
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Coordinate `i` (0-based, tuple order).
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len());
        (self.bits >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn to_tuple(&self) -> Vec<u8> {
        (0..self.len()).map(|i| self.get(i) as u8).collect()
    }

    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        self.check_len(other)?;
        Ok(BitVec {
            len: self.len,
            bits: self.bits ^ other.bits,
        })
    }

    /// Dot product over GF(2).
    pub fn dot(&self, other: &BitVec) -> Result<u8> {
        self.check_len(other)?;
        Ok(parity(self.bits & other.bits))
    }

    fn check_len(&self, other: &BitVec) -> Result<()> {
        if self.len != other.len {
            return arg(format!(
                "length mismatch: {} vs {}",
                self.len, other.len
            ));
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for i in 0..self.len() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, ")")
    }
}

#[inline]
pub fn parity(word: u32) -> u8 {
    (word.count_ones() & 1) as u8
}

#[inline]
pub(crate) fn low_mask(len: usize) -> u32 {
    if len >= 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

/// `x · c` over GF(2).
pub fn syndrome(x: &BitVec, c: &BitVec) -> Result<u8> {
    x.dot(c)
}

/// The Kronecker power `F^{⊗s}` stored column by column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorMatrix {
    s: u32,
    columns: Vec<BitVec>,
}

impl GeneratorMatrix {
    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn n(&self) -> usize {
        1 << self.s
    }

    /// Column `j`, 1-based as in `G_N(:, j)`.
    pub fn column(&self, j: usize) -> &BitVec {
        &self.columns[j - 1]
    }

    pub fn columns(&self) -> &[BitVec] {
        &self.columns
    }

    /// Entry `(i, j)`, both 1-based.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.column(j).get(i - 1)
    }
}

/// Builds `G_{2^s}` under the default cap.
pub fn kronecker_generator(s: u32) -> Result<GeneratorMatrix> {
    kronecker_generator_capped(s, DEFAULT_MAX_S)
}

pub fn kronecker_generator_capped(s: u32, cap: u32) -> Result<GeneratorMatrix> {
    check_cap(s, cap)?;
    // Row-major 0/1 matrix, expanded one factor at a time: A ⊗ F.
    let f = [[1u8, 0], [1, 1]];
    let mut rows: Vec<Vec<u8>> = vec![vec![1]];
    for _ in 0..s {
        let size = rows.len();
        let mut next = vec![vec![0u8; 2 * size]; 2 * size];
        for (i, row) in rows.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                for (fi, frow) in f.iter().enumerate() {
                    for (fj, &b) in frow.iter().enumerate() {
                        next[2 * i + fi][2 * j + fj] = a & b;
                    }
                }
            }
        }
        rows = next;
    }
    let n = rows.len();
    let columns = (0..n)
        .map(|j| {
            let bits = (0..n).fold(0u32, |acc, i| (acc << 1) | rows[i][j] as u32);
            BitVec::new(bits, n)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratorMatrix { s, columns })
}

pub(crate) fn check_cap(s: u32, cap: u32) -> Result<()> {
    if cap > HARD_MAX_S {
        return Err(Error::Capacity {
            requested: cap,
            cap: HARD_MAX_S,
        });
    }
    if s > cap {
        return Err(Error::Capacity { requested: s, cap });
    }
    Ok(())
}

/// The subgroup chain `X_0 ⊃ X_1 ⊃ ... ⊃ X_{N-1}` induced by `G_N`.
///
/// Member lists are materialized in ascending (lexicographic) order.
#[derive(Debug)]
pub struct SubgroupChain {
    generator: GeneratorMatrix,
    members: Vec<Vec<u32>>,
    bases: Vec<EchelonBasis>,
}

impl SubgroupChain {
    pub fn new(s: u32) -> Result<Self> {
        let generator = kronecker_generator(s)?;
        let n = generator.n();
        let mut members: Vec<Vec<u32>> = Vec::with_capacity(n);
        members.push((0..1u32 << n).collect());
        for t in 1..n {
            let col = generator.column(t).bits();
            let next = members[t - 1]
                .iter()
                .copied()
                .filter(|&x| parity(x & col) == 0)
                .collect();
            members.push(next);
        }
        let bases = members
            .iter()
            .map(|m| EchelonBasis::from_span(m, n))
            .collect();
        Ok(Self {
            generator,
            members,
            bases,
        })
    }

    /// Process-wide cached chain for `s`.
    pub fn shared(s: u32) -> Result<Arc<SubgroupChain>> {
        static CACHE: [OnceLock<Arc<SubgroupChain>>; HARD_MAX_S as usize + 1] =
            [const { OnceLock::new() }; HARD_MAX_S as usize + 1];
        check_cap(s, DEFAULT_MAX_S)?;
        let slot = &CACHE[s as usize];
        if let Some(c) = slot.get() {
            return Ok(c.clone());
        }
        let chain = Arc::new(SubgroupChain::new(s)?);
        Ok(slot.get_or_init(|| chain).clone())
    }

    pub fn s(&self) -> u32 {
        self.generator.s()
    }

    pub fn n(&self) -> usize {
        self.generator.n()
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    /// Number of rounds, `N - 1`.
    pub fn rounds(&self) -> usize {
        self.n() - 1
    }

    fn check_t(&self, t: usize, lo: usize) -> Result<()> {
        if t < lo || t > self.rounds() {
            return arg(format!(
                "round index t = {t} outside {lo}..={}",
                self.rounds()
            ));
        }
        Ok(())
    }

    /// Packed members of `X_t`, ascending.
    pub fn member_words(&self, t: usize) -> Result<&[u32]> {
        self.check_t(t, 0)?;
        Ok(&self.members[t])
    }

    pub fn subgroup_members(&self, t: usize) -> Result<Vec<BitVec>> {
        let n = self.n();
        self.member_words(t)?
            .iter()
            .map(|&w| BitVec::new(w, n))
            .collect()
    }

    /// Membership by syndrome tests against columns `1..=t`.
    pub fn contains(&self, t: usize, word: u32) -> bool {
        (1..=t).all(|j| parity(word & self.generator.column(j).bits()) == 0)
    }

    /// Streams `X_t` in ascending order by filtering all `2^N` words with
    /// the syndrome predicate, without consulting the stored lists.
    pub fn iter_members(&self, t: usize) -> impl Iterator<Item = u32> + '_ {
        (0..1u32 << self.n()).filter(move |&w| self.contains(t, w))
    }

    /// Packed words of the erasure coset `X_{t-1} \ X_t`, ascending.
    pub fn erasure_coset_words(&self, t: usize) -> Result<Vec<u32>> {
        self.check_t(t, 1)?;
        let col = self.generator.column(t).bits();
        Ok(self.members[t - 1]
            .iter()
            .copied()
            .filter(|&w| parity(w & col) == 1)
            .collect())
    }

    /// Lexicographically smallest element of `X_{t-1} \ X_t`.
    pub fn min_coset_rep(&self, t: usize) -> Result<BitVec> {
        self.check_t(t, 1)?;
        let col = self.generator.column(t).bits();
        let w = self.members[t - 1]
            .iter()
            .copied()
            .find(|&w| parity(w & col) == 1)
            .expect("X_{t-1} \\ X_t is a non-empty coset");
        BitVec::new(w, self.n())
    }

    /// Reduced echelon basis of `X_t`.
    pub fn basis(&self, t: usize) -> Result<&EchelonBasis> {
        self.check_t(t, 0)?;
        Ok(&self.bases[t])
    }
}

/// Reduced row-echelon basis of a subspace of `{0,1}^N`.
///
/// Each basis vector owns a pivot bit that no other basis vector has, so the
/// coordinates of a member are simply its bits at the pivot positions. The
/// map member -> coordinates is a group isomorphism onto `{0,1}^dim`.
#[derive(Clone, Debug)]
pub struct EchelonBasis {
    /// (pivot bit index, vector), sorted by pivot descending.
    rows: Vec<(u32, u32)>,
}

impl EchelonBasis {
    pub fn from_span(words: &[u32], n: usize) -> Self {
        let mut rows: Vec<(u32, u32)> = Vec::new();
        for &w in words {
            let mut v = w;
            for &(p, r) in &rows {
                if (v >> p) & 1 == 1 {
                    v ^= r;
                }
            }
            if v == 0 {
                continue;
            }
            let p = 31 - v.leading_zeros();
            for row in rows.iter_mut() {
                if (row.1 >> p) & 1 == 1 {
                    row.1 ^= v;
                }
            }
            rows.push((p, v));
            rows.sort_by_key(|r| std::cmp::Reverse(r.0));
        }
        debug_assert!(rows.iter().all(|&(p, _)| (p as usize) < n));
        Self { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn vectors(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.iter().map(|&(_, v)| v)
    }

    /// Coordinates of a member; bit `dim-1-k` holds the coefficient of row `k`.
    pub fn coords(&self, word: u32) -> u64 {
        self.rows
            .iter()
            .fold(0u64, |acc, &(p, _)| (acc << 1) | ((word >> p) & 1) as u64)
    }

    pub fn from_coords(&self, coords: u64) -> u32 {
        let d = self.dim();
        self.rows
            .iter()
            .enumerate()
            .filter(|(k, _)| (coords >> (d - 1 - k)) & 1 == 1)
            .fold(0u32, |acc, (_, &(_, v))| acc ^ v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(t: &[u8]) -> BitVec {
        BitVec::from_tuple(t).unwrap()
    }

    #[test]
    fn generator_s0_is_identity() {
        let g = kronecker_generator(0).unwrap();
        assert_eq!(g.columns(), &[bv(&[1])]);
    }

    #[test]
    fn generator_s2_columns() {
        let g = kronecker_generator(2).unwrap();
        assert_eq!(g.column(1), &bv(&[1, 1, 1, 1]));
        assert_eq!(g.column(2), &bv(&[0, 1, 0, 1]));
        assert_eq!(g.column(3), &bv(&[0, 0, 1, 1]));
        assert_eq!(g.column(4), &bv(&[0, 0, 0, 1]));
    }

    #[test]
    fn generator_matches_subset_rule() {
        // Entry (i, j) of F^{⊗s}, 0-based, is 1 iff the bits of j are a
        // subset of the bits of i.
        for s in 0..=4 {
            let g = kronecker_generator(s).unwrap();
            let n = 1usize << s;
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(g.entry(i + 1, j + 1), (i & j) == j, "s={s} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn generator_s3_lower_triangular_unit_diagonal() {
        let g = kronecker_generator(3).unwrap();
        assert_eq!(g.column(1), &BitVec::ones(8).unwrap());
        for i in 1..=8 {
            assert!(g.entry(i, i));
            for j in i + 1..=8 {
                assert!(!g.entry(i, j));
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(
            kronecker_generator(5).unwrap_err(),
            Error::Capacity {
                requested: 5,
                cap: 4
            }
        );
        assert!(kronecker_generator_capped(3, 2).is_err());
        assert!(kronecker_generator_capped(2, 9).is_err());
    }

    #[test]
    fn syndrome_examples() {
        let ones = bv(&[1, 1, 1, 1]);
        assert_eq!(syndrome(&bv(&[0, 0, 0, 0]), &ones).unwrap(), 0);
        assert_eq!(syndrome(&bv(&[1, 0, 1, 0]), &ones).unwrap(), 0);
        assert_eq!(syndrome(&bv(&[1, 0, 0, 0]), &ones).unwrap(), 1);
        assert!(syndrome(&bv(&[1, 0]), &ones).is_err());
    }

    #[test]
    fn bitvec_rejects_stray_bits() {
        assert!(BitVec::new(0b100, 2).is_err());
        assert!(BitVec::new(0, 25).is_err());
        assert!(BitVec::from_tuple(&[0, 2]).is_err());
    }

    #[test]
    fn lexicographic_order_is_integer_order() {
        assert!(bv(&[0, 1, 1, 1]) < bv(&[1, 0, 0, 0]));
        assert!(bv(&[0, 0, 1, 1]) < bv(&[0, 1, 0, 1]));
    }

    #[test]
    fn members_s2() {
        let c = SubgroupChain::new(2).unwrap();
        assert_eq!(c.subgroup_members(0).unwrap().len(), 16);
        let x1 = c.subgroup_members(1).unwrap();
        let even: Vec<BitVec> = (0..16u32)
            .filter(|w| w.count_ones() % 2 == 0)
            .map(|w| BitVec::new(w, 4).unwrap())
            .collect();
        assert_eq!(x1, even);
        assert_eq!(
            c.subgroup_members(3).unwrap(),
            vec![bv(&[0, 0, 0, 0]), bv(&[1, 1, 1, 1])]
        );
        assert!(c.subgroup_members(4).is_err());
    }

    #[test]
    fn min_coset_reps_small() {
        let c1 = SubgroupChain::new(1).unwrap();
        assert_eq!(c1.min_coset_rep(1).unwrap(), bv(&[0, 1]));

        let c = SubgroupChain::new(2).unwrap();
        // Exhaustive: X_1 \ X_2 = even-weight words with x2 + x4 = 1.
        let expect2 = (0..16u32)
            .filter(|w| w.count_ones() % 2 == 0 && ((w >> 2) ^ w) & 1 == 1)
            .min()
            .unwrap();
        assert_eq!(c.min_coset_rep(2).unwrap().bits(), expect2);
        assert_eq!(c.min_coset_rep(2).unwrap(), bv(&[0, 0, 1, 1]));
        // X_2 \ X_3 = {(0,1,0,1), (1,0,1,0)}; (0,1,1,0) is not in X_2.
        assert_eq!(c.min_coset_rep(3).unwrap(), bv(&[0, 1, 0, 1]));
        assert!(c.min_coset_rep(0).is_err());
    }

    #[test]
    fn chain_invariants() {
        for s in 1..=4 {
            let c = SubgroupChain::new(s).unwrap();
            let n = c.n();
            let ones = low_mask(n);
            for t in 0..n {
                let m = c.member_words(t).unwrap();
                assert_eq!(m.len(), 1 << (n - t));
                assert!(m.windows(2).all(|w| w[0] < w[1]));
                assert!(m.binary_search(&ones).is_ok(), "all-ones in X_{t}");
                assert_eq!(c.basis(t).unwrap().dim(), n - t);
            }
            for t in 1..n {
                let prev = c.member_words(t - 1).unwrap();
                let cur = c.member_words(t).unwrap();
                let rep = c.min_coset_rep(t).unwrap().bits();
                let mut shifted: Vec<u32> = cur.iter().map(|&x| x ^ rep).collect();
                shifted.sort_unstable();
                assert_eq!(shifted, c.erasure_coset_words(t).unwrap());
                assert_eq!(prev.len(), 2 * cur.len());
            }
        }
    }

    #[test]
    fn stored_sets_match_syndrome_predicate() {
        for s in 0..=4 {
            let c = SubgroupChain::new(s).unwrap();
            for t in 0..c.n() {
                let streamed: Vec<u32> = c.iter_members(t).collect();
                assert_eq!(streamed, c.member_words(t).unwrap());
            }
        }
    }

    #[test]
    fn coords_round_trip_and_linear() {
        let c = SubgroupChain::new(3).unwrap();
        for t in 0..c.n() {
            let b = c.basis(t).unwrap();
            let m = c.member_words(t).unwrap();
            let mut seen = std::collections::HashSet::new();
            for &x in m {
                let k = b.coords(x);
                assert!(k < 1 << b.dim());
                assert_eq!(b.from_coords(k), x);
                assert!(seen.insert(k));
            }
            for &x in m.iter().take(8) {
                for &y in m.iter().rev().take(8) {
                    assert_eq!(b.coords(x ^ y), b.coords(x) ^ b.coords(y));
                }
            }
        }
    }
}
