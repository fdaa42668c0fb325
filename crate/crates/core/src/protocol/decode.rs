//! List decoding for information reconciliation.
//!
//! Candidates for the sender's block are visited in increasing total cost
//! (decreasing posterior) and the first one whose hash matches the received
//! syndrome is returned. Because the hash is linear, a candidate only needs
//! the XOR of the hash images of the symbols where it departs from the
//! per-position best guess.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use super::bits::BitString;
use super::hash::ToeplitzHash;
use crate::channels::CandidateLists;
use crate::error::{arg, Error, Result};

/// How far down the candidate list the decoder may go.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ListCap {
    /// At most this many candidates, counting the best guess as the first.
    Count(u64),
    /// Every candidate that departs from the best guess in at most this
    /// many positions.
    Weight(usize),
}

impl fmt::Display for ListCap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ListCap::Count(c) => write!(f, "{c}"),
            ListCap::Weight(w) => write!(f, "weight:{w}"),
        }
    }
}

impl FromStr for ListCap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || arg(format!("bad list cap '{s}' (expected N or weight:W)"));
        if let Some(w) = s.strip_prefix("weight:") {
            return w.parse().map(ListCap::Weight).or_else(|_| bad());
        }
        match s.parse::<u64>() {
            Ok(0) | Err(_) => bad(),
            Ok(c) => Ok(ListCap::Count(c)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DecodeOutcome {
    Decoded {
        /// Concatenated symbol encodings.
        estimate: BitString,
        /// 1-based position in the candidate order.
        rank: u64,
        /// Positions where the estimate departs from the best guess.
        deviations: usize,
    },
    Failed {
        explored: u64,
    },
}

impl DecodeOutcome {
    pub fn estimate(&self) -> Option<&BitString> {
        match self {
            DecodeOutcome::Decoded { estimate, .. } => Some(estimate),
            DecodeOutcome::Failed { .. } => None,
        }
    }
}

/// Decodes `lists` against the syndrome `target = g(x)`.
///
/// Symbols are `symbol_bits` wide and laid out most significant bit first,
/// position after position, exactly as they were hashed.
pub fn reconcile_decode(
    lists: &CandidateLists<'_>,
    symbol_bits: usize,
    g: &ToeplitzHash,
    target: &BitString,
    cap: ListCap,
) -> Result<DecodeOutcome> {
    let m = lists.len();
    if g.input_len() != m * symbol_bits {
        return arg(format!(
            "hash takes {} bits but the block has {m} symbols of {symbol_bits} bits",
            g.input_len()
        ));
    }
    if target.len() != g.output_len() {
        return arg("syndrome length does not match the hash");
    }
    if let ListCap::Count(0) = cap {
        return Ok(DecodeOutcome::Failed { explored: 0 });
    }
    let mut base = BitString::zeros(0);
    for i in 0..m {
        base.push_bits(lists.get(i, 0).0, symbol_bits);
    }
    let residual = target.xor(&g.apply(&base)?);
    let ctx = Ctx {
        lists,
        b: symbol_bits,
        columns: (0..g.input_len()).map(|j| g.column(j)).collect(),
        residual,
        base,
    };
    if is_flip_form(lists) {
        Ok(ctx.flip_search(cap))
    } else {
        Ok(ctx.best_first(cap))
    }
}

/// Every position has exactly one alternative, all at the same cost, so
/// cost order is weight order.
fn is_flip_form(lists: &CandidateLists<'_>) -> bool {
    if lists.is_empty() {
        return true;
    }
    let c0 = match lists.alternatives(0) {
        2 => lists.get(0, 1).1,
        _ => return false,
    };
    c0.is_finite()
        && (0..lists.len()).all(|i| {
            lists.alternatives(i) == 2 && (lists.get(i, 1).1 - c0).abs() <= 1e-9 * c0.abs().max(1.0)
        })
}

struct Ctx<'a, 'b> {
    lists: &'a CandidateLists<'b>,
    b: usize,
    columns: Vec<BitString>,
    residual: BitString,
    base: BitString,
}

impl Ctx<'_, '_> {
    /// Hash image of replacing the best guess at `pos` by its rank-`r` alternative.
    fn delta(&self, pos: usize, r: usize) -> BitString {
        let diff = self.lists.get(pos, r).0 ^ self.lists.get(pos, 0).0;
        let mut out = BitString::zeros(self.residual.len());
        for k in 0..self.b {
            if (diff >> k) & 1 == 1 {
                out.xor_assign(&self.columns[pos * self.b + self.b - 1 - k]);
            }
        }
        out
    }

    fn substitute(&self, items: impl Iterator<Item = (usize, usize)>) -> BitString {
        let mut est = self.base.clone();
        for (pos, r) in items {
            let diff = self.lists.get(pos, r).0 ^ self.lists.get(pos, 0).0;
            for k in 0..self.b {
                if (diff >> k) & 1 == 1 {
                    est.flip(pos * self.b + self.b - 1 - k);
                }
            }
        }
        est
    }

    fn decoded(&self, set: &[usize], rank: u64) -> DecodeOutcome {
        DecodeOutcome::Decoded {
            estimate: self.substitute(set.iter().map(|&p| (p, 1))),
            rank,
            deviations: set.len(),
        }
    }

    fn flip_search(&self, cap: ListCap) -> DecodeOutcome {
        let m = self.lists.len();
        let max_w = match cap {
            ListCap::Weight(w) => w.min(m),
            ListCap::Count(c) => {
                let mut w = 0;
                let mut before = 1u128;
                while w < m && before < c as u128 {
                    w += 1;
                    before = before.saturating_add(binom(m, w));
                }
                w
            }
        };
        let within = |rank: u128| match cap {
            ListCap::Count(c) => rank <= c as u128,
            ListCap::Weight(_) => true,
        };
        let explored = |w: usize| -> u64 {
            let all = (0..=w).fold(0u128, |a, k| a.saturating_add(binom(m, k)));
            match cap {
                ListCap::Count(c) => all.min(c as u128) as u64,
                ListCap::Weight(_) => all.min(u64::MAX as u128) as u64,
            }
        };
        if self.residual.is_zero() {
            return self.decoded(&[], 1);
        }
        let deltas: Vec<BitString> = (0..m).map(|i| self.delta(i, 1)).collect();
        let mut offset = 1u128;
        let mut pairs: Option<HashMap<BitString, Vec<(u32, u32)>>> = None;
        let mut singles: Option<HashMap<&BitString, Vec<u32>>> = None;
        for w in 1..=max_w {
            let found: Option<Vec<usize>> = match w {
                1 => (0..m).find(|&i| deltas[i] == self.residual).map(|i| vec![i]),
                2 => {
                    let map = singles.get_or_insert_with(|| {
                        let mut h: HashMap<&BitString, Vec<u32>> = HashMap::new();
                        for (i, d) in deltas.iter().enumerate() {
                            h.entry(d).or_default().push(i as u32);
                        }
                        h
                    });
                    (0..m).find_map(|i| {
                        let need = self.residual.xor(&deltas[i]);
                        let js = map.get(&need)?;
                        let k = js.partition_point(|&j| j as usize <= i);
                        js.get(k).map(|&j| vec![i, j as usize])
                    })
                }
                _ => {
                    let map = pairs.get_or_insert_with(|| pair_map(&deltas));
                    self.mitm(&deltas, map, w)
                }
            };
            if let Some(set) = found {
                let rank = offset + lex_rank(&set, m) + 1;
                if within(rank) {
                    return self.decoded(&set, rank.min(u64::MAX as u128) as u64);
                }
                return DecodeOutcome::Failed {
                    explored: explored(w),
                };
            }
            offset = offset.saturating_add(binom(m, w));
        }
        DecodeOutcome::Failed {
            explored: explored(max_w),
        }
    }

    /// Lexicographically first `w`-subset (w >= 3) whose deltas XOR to the
    /// residual: enumerate `(w-2)`-prefixes in order and finish each with a
    /// pair lookup.
    fn mitm(
        &self,
        deltas: &[BitString],
        pairs: &HashMap<BitString, Vec<(u32, u32)>>,
        w: usize,
    ) -> Option<Vec<usize>> {
        if w > deltas.len() {
            return None;
        }
        let mut prefix = Vec::with_capacity(w);
        self.mitm_rec(deltas, pairs, w - 2, 0, &self.residual, &mut prefix)
    }

    fn mitm_rec(
        &self,
        deltas: &[BitString],
        pairs: &HashMap<BitString, Vec<(u32, u32)>>,
        depth: usize,
        start: usize,
        acc: &BitString,
        prefix: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        let m = deltas.len();
        if depth == 0 {
            let list = pairs.get(acc)?;
            let lo = prefix.last().map_or(0, |&p| p + 1);
            let k = list.partition_point(|&(a, _)| (a as usize) < lo);
            let &(a, b) = list.get(k)?;
            let mut set = prefix.clone();
            set.extend([a as usize, b as usize]);
            return Some(set);
        }
        // leave room for the remaining depth-1 prefix slots and the pair
        for p in start..m.saturating_sub(depth + 1) + 1 {
            prefix.push(p);
            let next = acc.xor(&deltas[p]);
            if let Some(s) = self.mitm_rec(deltas, pairs, depth - 1, p + 1, &next, prefix) {
                return Some(s);
            }
            prefix.pop();
        }
        None
    }

    fn best_first(&self, cap: ListCap) -> DecodeOutcome {
        let lists = self.lists;
        // positions that have alternatives, cheapest first deviation first
        let mut order: Vec<usize> = (0..lists.len())
            .filter(|&i| lists.alternatives(i) > 1)
            .collect();
        order.sort_by(|&a, &b| lists.get(a, 1).1.total_cmp(&lists.get(b, 1).1).then(a.cmp(&b)));
        let cost = |k: usize, r: usize| lists.get(order[k], r).1;
        let (max_count, max_w) = match cap {
            ListCap::Count(c) => (c, usize::MAX),
            ListCap::Weight(w) => (u64::MAX, w),
        };

        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(Node {
            cost: 0.0,
            seq,
            items: Vec::new(),
        });
        let mut count = 0u64;
        while let Some(node) = heap.pop() {
            count += 1;
            let mut syn = BitString::zeros(self.residual.len());
            for &(k, r) in &node.items {
                syn.xor_assign(&self.delta(order[k], r as usize));
            }
            if syn == self.residual {
                return DecodeOutcome::Decoded {
                    estimate: self.substitute(node.items.iter().map(|&(k, r)| (order[k], r as usize))),
                    rank: count,
                    deviations: node.items.len(),
                };
            }
            if count >= max_count {
                break;
            }
            let mut push = |cost: f64, items: Vec<(usize, u32)>| {
                seq += 1;
                heap.push(Node { cost, seq, items });
            };
            match node.items.last().copied() {
                None => {
                    if !order.is_empty() && max_w >= 1 {
                        push(cost(0, 1), vec![(0, 1)]);
                    }
                }
                Some((last, r)) => {
                    let r = r as usize;
                    let head = &node.items[..node.items.len() - 1];
                    if r + 1 < lists.alternatives(order[last]) {
                        let mut it = head.to_vec();
                        it.push((last, r as u32 + 1));
                        push(node.cost - cost(last, r) + cost(last, r + 1), it);
                    }
                    if last + 1 < order.len() {
                        if r == 1 {
                            let mut it = head.to_vec();
                            it.push((last + 1, 1));
                            push(node.cost - cost(last, 1) + cost(last + 1, 1), it);
                        }
                        if node.items.len() < max_w {
                            let mut it = node.items.clone();
                            it.push((last + 1, 1));
                            push(node.cost + cost(last + 1, 1), it);
                        }
                    }
                }
            }
        }
        DecodeOutcome::Failed { explored: count }
    }
}

/// XOR of every pair of deltas, with the pairs listed in lexicographic order.
fn pair_map(deltas: &[BitString]) -> HashMap<BitString, Vec<(u32, u32)>> {
    let m = deltas.len();
    let mut pairs: HashMap<BitString, Vec<(u32, u32)>> = HashMap::new();
    for i in 0..m {
        for j in i + 1..m {
            pairs
                .entry(deltas[i].xor(&deltas[j]))
                .or_default()
                .push((i as u32, j as u32));
        }
    }
    pairs
}

struct Node {
    cost: f64,
    seq: u64,
    /// (index into the sorted position order, rank >= 1), ascending index
    items: Vec<(usize, u32)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.seq.cmp(&self.seq))
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub(crate) fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = match r.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    r
}

/// 0-based rank of the sorted subset `set` among all `|set|`-subsets of
/// `0..m` in lexicographic order.
pub(crate) fn lex_rank(set: &[usize], m: usize) -> u128 {
    let w = set.len();
    let mut rank = 0u128;
    let mut prev: isize = -1;
    for (i, &s) in set.iter().enumerate() {
        let left = w - i;
        let a = binom(m - (prev + 1) as usize, left);
        let b = binom(m - s, left);
        rank = rank.saturating_add(a.saturating_sub(b));
        prev = s as isize;
    }
    rank
}
