//! Discrete memoryless channels, GEC decompositions and the two erasure
//! emulation families (alphabet extension and polarization rounds).

mod polar;

pub use polar::{polar_round_channel, PolarRound, PolarRoundStats, PolarSpectrum};

use rand::{Rng, RngCore};

use crate::entropy::entropy;
use crate::error::{arg, Error, Result};

const ROW_TOL: f64 = 1e-12;

/// Dense transition matrix, one row per input symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Dmc {
    inputs: usize,
    outputs: usize,
    probs: Vec<f64>,
}

impl Dmc {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return arg("channel needs at least one input");
        }
        let outputs = rows[0].len();
        if outputs == 0 {
            return arg("channel needs at least one output");
        }
        let mut probs = Vec::with_capacity(inputs * outputs);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return arg(format!("row {x} has {} entries, expected {outputs}", row.len()));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return arg(format!("row {x} has an entry outside [0,1]"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return arg(format!("row {x} sums to {sum}"));
            }
            probs.extend_from_slice(row);
        }
        Ok(Self {
            inputs,
            outputs,
            probs,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.outputs..(x + 1) * self.outputs]
    }

    /// `k` independent uses; input and output tuples are indexed MSB-first.
    pub fn power(&self, k: u32) -> Result<Dmc> {
        if k == 0 {
            return arg("power must be at least 1");
        }
        let mut acc = self.clone();
        for _ in 1..k {
            let mut rows = Vec::with_capacity(acc.inputs * self.inputs);
            for xa in 0..acc.inputs {
                for xb in 0..self.inputs {
                    let mut row = Vec::with_capacity(acc.outputs * self.outputs);
                    for ya in 0..acc.outputs {
                        for yb in 0..self.outputs {
                            row.push(acc.prob(xa, ya) * self.prob(xb, yb));
                        }
                    }
                    rows.push(row);
                }
            }
            acc = Dmc::new(rows)?;
        }
        Ok(acc)
    }

    /// Keeps only the listed input rows, in the given order.
    pub fn restrict_inputs(&self, keep: &[usize]) -> Result<Dmc> {
        if let Some(&x) = keep.iter().find(|&&x| x >= self.inputs) {
            return arg(format!("input {x} out of range"));
        }
        Dmc::new(keep.iter().map(|&x| self.row(x).to_vec()).collect())
    }
}

/// Binary symmetric channel `[[1-q, q], [q, 1-q]]`.
pub fn bsc(q: f64) -> Result<Dmc> {
    if !(0.0..=1.0).contains(&q) {
        return arg(format!("crossover probability {q} outside [0,1]"));
    }
    Dmc::new(vec![vec![1.0 - q, q], vec![q, 1.0 - q]])
}

fn check_dist(dist: &[f64], len: usize) -> Result<()> {
    if dist.len() != len {
        return arg(format!("input distribution has {} entries, expected {len}", dist.len()));
    }
    if dist.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return arg("input distribution has an entry outside [0,1]");
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return arg(format!("input distribution sums to {sum}"));
    }
    Ok(())
}

/// `H(X|Y) = H(X) + H(Y|X) - H(Y)` in bits.
pub fn conditional_entropy(ch: &Dmc, input_dist: &[f64]) -> Result<f64> {
    check_dist(input_dist, ch.inputs())?;
    let hx = entropy(input_dist);
    let hyx: f64 = input_dist
        .iter()
        .enumerate()
        .map(|(x, &px)| px * entropy(ch.row(x)))
        .sum();
    let py: Vec<f64> = (0..ch.outputs())
        .map(|y| {
            input_dist
                .iter()
                .enumerate()
                .map(|(x, &px)| px * ch.prob(x, y))
                .sum()
        })
        .collect();
    Ok((hx + hyx - entropy(&py)).max(0.0))
}

/// A GEC decomposition `W = (1-p) W0 ⊕ p W1` of a dense channel.
#[derive(Clone, Debug)]
pub struct GecChannel {
    base: Dmc,
    erasure: Vec<bool>,
    p: f64,
    w0: Dmc,
    w1: Dmc,
    y0: Vec<usize>,
    y1: Vec<usize>,
    input_dist: Vec<f64>,
    channel_uses: usize,
    h_w0: f64,
    h_w1: f64,
    input_cdf: Vec<f64>,
    row_cdfs: Vec<Vec<f64>>,
    posteriors: Vec<Vec<(u64, f64)>>,
}

/// Splits the outputs of `base` into non-erasure (`partition[y] == false`)
/// and erasure (`partition[y] == true`) sets and validates the GEC shape.
pub fn gec_decompose(base: Dmc, partition: &[bool], input_dist: &[f64]) -> Result<GecChannel> {
    if partition.len() != base.outputs() {
        return arg(format!(
            "partition covers {} outputs, channel has {}",
            partition.len(),
            base.outputs()
        ));
    }
    check_dist(input_dist, base.inputs())?;
    let y1: Vec<usize> = (0..base.outputs()).filter(|&y| partition[y]).collect();
    let y0: Vec<usize> = (0..base.outputs()).filter(|&y| !partition[y]).collect();
    if y1.is_empty() {
        return arg("erasure set Y1 is empty");
    }
    if y0.is_empty() {
        return arg("non-erasure set Y0 is empty");
    }
    let masses: Vec<f64> = (0..base.inputs())
        .map(|x| y1.iter().map(|&y| base.prob(x, y)).sum())
        .collect();
    let p = masses[0];
    let spread = masses.iter().map(|m| (m - p).abs()).fold(0.0, f64::max);
    if spread > ROW_TOL {
        return Err(Error::NotAGec(spread));
    }
    if p > 0.5 {
        return Err(Error::UnsupportedErasure(p));
    }
    if p <= 0.0 {
        return Err(Error::Degenerate("erasure probability is zero".into()));
    }
    let normalize = |ys: &[usize], scale: f64| -> Result<Dmc> {
        let rows = (0..base.inputs())
            .map(|x| {
                let mut row: Vec<f64> = ys.iter().map(|&y| base.prob(x, y) / scale).collect();
                // absorb rounding so the row validates
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                row
            })
            .collect();
        Dmc::new(rows)
    };
    let w0 = normalize(&y0, 1.0 - p)?;
    let w1 = normalize(&y1, p)?;
    let h_w0 = conditional_entropy(&w0, input_dist)?;
    let h_w1 = conditional_entropy(&w1, input_dist)?;

    let input_cdf = cumulative(input_dist);
    let row_cdfs = (0..base.inputs()).map(|x| cumulative(base.row(x))).collect();
    let posteriors = (0..base.outputs())
        .map(|y| {
            let mut post: Vec<(u64, f64)> = (0..base.inputs())
                .filter_map(|x| {
                    let w = input_dist[x] * base.prob(x, y);
                    (w > 0.0).then(|| (x as u64, -w.ln()))
                })
                .collect();
            post.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            if let Some(&(_, best)) = post.first() {
                post.iter_mut().for_each(|e| e.1 -= best);
            }
            post
        })
        .collect();

    Ok(GecChannel {
        erasure: partition.to_vec(),
        p,
        w0,
        w1,
        y0,
        y1,
        input_dist: input_dist.to_vec(),
        channel_uses: 1,
        h_w0,
        h_w1,
        input_cdf,
        row_cdfs,
        posteriors,
        base,
    })
}

fn cumulative(masses: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    masses
        .iter()
        .map(|&m| {
            acc += m;
            acc
        })
        .collect()
}

fn sample_cdf(cdf: &[f64], rng: &mut dyn RngCore) -> usize {
    let total = *cdf.last().expect("non-empty cdf");
    let u: f64 = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl GecChannel {
    pub fn base(&self) -> &Dmc {
        &self.base
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn w0(&self) -> &Dmc {
        &self.w0
    }

    pub fn w1(&self) -> &Dmc {
        &self.w1
    }

    pub fn non_erasure_outputs(&self) -> &[usize] {
        &self.y0
    }

    pub fn erasure_outputs(&self) -> &[usize] {
        &self.y1
    }

    pub fn is_erasure(&self, y: usize) -> bool {
        self.erasure[y]
    }

    pub fn input_dist(&self) -> &[f64] {
        &self.input_dist
    }

    /// `H(X|Y0)`: entropy left after a non-erasure output.
    pub fn h_non_erasure(&self) -> f64 {
        self.h_w0
    }

    /// `H(X|Y1)`: entropy left after an erasure output.
    pub fn h_erasure(&self) -> f64 {
        self.h_w1
    }

    /// Number of physical channel uses one GEC symbol costs.
    pub fn with_channel_uses(mut self, uses: usize) -> Self {
        self.channel_uses = uses.max(1);
        self
    }

    /// True when every row of `W1` is identical, so an erasure output says
    /// nothing about the input.
    pub fn erasure_side_useless(&self) -> bool {
        (1..self.w1.inputs()).all(|x| {
            self.w1
                .row(x)
                .iter()
                .zip(self.w1.row(0))
                .all(|(a, b)| (a - b).abs() < 1e-12)
        })
    }
}

/// Alphabet-extension BSEC: two BSC(q) uses with inputs {00, 11}.
///
/// Outputs are indexed 00, 01, 10, 11; the erasure set is {01, 10}.
pub fn bsec_from_extension(q: f64) -> Result<GecChannel> {
    if !(0.0..=1.0).contains(&q) {
        return arg(format!("crossover probability {q} outside [0,1]"));
    }
    if q == 0.0 || q == 1.0 {
        return Err(Error::Degenerate(format!("BSC({q}) has no erasure events")));
    }
    let pair = bsc(q)?.power(2)?.restrict_inputs(&[0b00, 0b11])?;
    Ok(gec_decompose(pair, &[false, true, true, false], &[0.5, 0.5])?.with_channel_uses(2))
}

/// Ranked decoding alternatives for a block of non-erasure observations.
///
/// Costs are `-ln` posterior ratios against the best candidate at the same
/// position, ascending; the first entry of every list has cost 0. Symbols
/// are in their hash encoding.
#[derive(Clone, Debug)]
pub enum CandidateLists<'a> {
    PerPosition(Vec<&'a [(u64, f64)]>),
    /// Additive channels: candidate `r` at position `i` is
    /// `observed[i] ^ profile[r].0`.
    Additive {
        observed: Vec<u64>,
        profile: &'a [(u64, f64)],
    },
}

impl CandidateLists<'_> {
    pub fn len(&self) -> usize {
        match self {
            CandidateLists::PerPosition(v) => v.len(),
            CandidateLists::Additive { observed, .. } => observed.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn alternatives(&self, pos: usize) -> usize {
        match self {
            CandidateLists::PerPosition(v) => v[pos].len(),
            CandidateLists::Additive { profile, .. } => profile.len(),
        }
    }

    /// `(encoded symbol, cost)` of the rank-`r` candidate at `pos`.
    pub fn get(&self, pos: usize, r: usize) -> (u64, f64) {
        match self {
            CandidateLists::PerPosition(v) => v[pos][r],
            CandidateLists::Additive { observed, profile } => {
                let (d, c) = profile[r];
                (observed[pos] ^ d, c)
            }
        }
    }
}

/// A GEC as seen by the protocol simulator.
///
/// Symbols and outputs are opaque `u32` labels; `encode` maps an input
/// symbol to the bit pattern that is hashed.
pub trait GecModel {
    fn erasure_probability(&self) -> f64;
    fn h_non_erasure(&self) -> f64;
    fn h_erasure(&self) -> f64;
    fn input_count(&self) -> usize;
    fn symbol_bits(&self) -> usize;
    fn channel_uses_per_symbol(&self) -> usize;
    /// `Pr(Y in Y1 | X = x)` for the `x`-th input.
    fn erasure_mass(&self, x: usize) -> f64;
    /// Probability the sender picks the `x`-th input.
    fn input_probability(&self, _x: usize) -> f64 {
        1.0 / self.input_count() as f64
    }
    /// True when an erasure output carries no information about the input.
    fn erasure_view_useless(&self) -> bool {
        false
    }
    fn sample_input(&self, rng: &mut dyn RngCore) -> u32;
    /// Returns the output label and whether it fell in the erasure set.
    fn transmit(&self, x: u32, rng: &mut dyn RngCore) -> (u32, bool);
    fn encode(&self, x: u32) -> u64;
    fn candidates(&self, outputs: &[u32]) -> CandidateLists<'_>;
}

impl GecModel for GecChannel {
    fn erasure_probability(&self) -> f64 {
        self.p
    }

    fn h_non_erasure(&self) -> f64 {
        self.h_w0
    }

    fn h_erasure(&self) -> f64 {
        self.h_w1
    }

    fn input_count(&self) -> usize {
        self.base.inputs()
    }

    fn symbol_bits(&self) -> usize {
        let n = self.base.inputs();
        (usize::BITS - (n - 1).leading_zeros()).max(1) as usize
    }

    fn channel_uses_per_symbol(&self) -> usize {
        self.channel_uses
    }

    fn erasure_mass(&self, x: usize) -> f64 {
        self.y1.iter().map(|&y| self.base.prob(x, y)).sum()
    }

    fn input_probability(&self, x: usize) -> f64 {
        self.input_dist[x]
    }

    fn erasure_view_useless(&self) -> bool {
        self.erasure_side_useless()
    }

    fn sample_input(&self, rng: &mut dyn RngCore) -> u32 {
        sample_cdf(&self.input_cdf, rng) as u32
    }

    fn transmit(&self, x: u32, rng: &mut dyn RngCore) -> (u32, bool) {
        let y = sample_cdf(&self.row_cdfs[x as usize], rng);
        (y as u32, self.erasure[y])
    }

    fn encode(&self, x: u32) -> u64 {
        x as u64
    }

    fn candidates(&self, outputs: &[u32]) -> CandidateLists<'_> {
        CandidateLists::PerPosition(
            outputs
                .iter()
                .map(|&y| self.posteriors[y as usize].as_slice())
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::h2;

    fn bec(e: f64) -> Dmc {
        // outputs: 0, 1, erasure
        Dmc::new(vec![vec![1.0 - e, 0.0, e], vec![0.0, 1.0 - e, e]]).unwrap()
    }

    #[test]
    fn bsc_rows() {
        assert_eq!(bsc(0.0).unwrap().row(0), &[1.0, 0.0]);
        assert_eq!(bsc(0.5).unwrap().row(1), &[0.5, 0.5]);
        let c = bsc(0.1).unwrap();
        assert_eq!(c.row(0), &[0.9, 0.1]);
        assert_eq!(c.row(1), &[0.1, 0.9]);
        assert!(bsc(1.2).is_err());
        assert!(bsc(-0.1).is_err());
    }

    #[test]
    fn dmc_validation() {
        assert!(Dmc::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(Dmc::new(vec![vec![1.0], vec![0.5, 0.5]]).is_err());
        assert!(Dmc::new(vec![]).is_err());
    }

    #[test]
    fn conditional_entropy_examples() {
        let id = Dmc::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(conditional_entropy(&id, &[0.5, 0.5]).unwrap().abs() < 1e-15);
        let constant = Dmc::new(vec![vec![1.0], vec![1.0]]).unwrap();
        assert!((conditional_entropy(&constant, &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        let b = bsc(0.1).unwrap();
        let h = conditional_entropy(&b, &[0.5, 0.5]).unwrap();
        assert!((h - 0.468_995_593_589_281_2).abs() < 1e-12);
        assert!(conditional_entropy(&b, &[0.5, 0.6]).is_err());
    }

    #[test]
    fn bec_is_canonical_gec() {
        let g = gec_decompose(bec(0.3), &[false, false, true], &[0.5, 0.5]).unwrap();
        assert!((g.p() - 0.3).abs() < 1e-15);
        assert_eq!(g.w0().row(0), &[1.0, 0.0]);
        assert_eq!(g.w1().row(0), &[1.0]);
        assert!(g.h_non_erasure().abs() < 1e-15);
        assert!((g.h_erasure() - 1.0).abs() < 1e-15);
        assert!(g.erasure_side_useless());
    }

    #[test]
    fn decomposition_reconstructs_base() {
        let g = bsec_from_extension(0.23).unwrap();
        for x in 0..2 {
            for (k, &y) in g.non_erasure_outputs().iter().enumerate() {
                let v = (1.0 - g.p()) * g.w0().prob(x, k);
                assert!((v - g.base().prob(x, y)).abs() < 1e-15);
            }
            for (k, &y) in g.erasure_outputs().iter().enumerate() {
                let v = g.p() * g.w1().prob(x, k);
                assert!((v - g.base().prob(x, y)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gec_rejections() {
        // all four inputs of the 2-fold extension: erasure mass depends on x
        let pair = bsc(0.1).unwrap().power(2).unwrap();
        let e = gec_decompose(pair, &[false, true, true, false], &[0.25; 4]).unwrap_err();
        assert!(matches!(e, Error::NotAGec(_)));
        assert_eq!(
            gec_decompose(bec(0.7), &[false, false, true], &[0.5, 0.5]).unwrap_err(),
            Error::UnsupportedErasure(0.7)
        );
        assert!(gec_decompose(bec(0.3), &[false, false, false], &[0.5, 0.5]).is_err());
        assert!(gec_decompose(bec(0.3), &[false, true], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn bsec_extension_values() {
        let g = bsec_from_extension(0.1).unwrap();
        assert!((g.p() - 0.18).abs() < 1e-15);
        let q1 = 0.01 / 0.82;
        assert!((g.w0().prob(0, 1) - q1).abs() < 1e-15);
        assert!((g.w1().prob(0, 0) - 0.5).abs() < 1e-15);
        assert!((g.h_non_erasure() - h2(q1)).abs() < 1e-12);
        assert!((g.h_erasure() - 1.0).abs() < 1e-12);
        assert_eq!(GecModel::channel_uses_per_symbol(&g), 2);

        let half = bsec_from_extension(0.5).unwrap();
        assert!((half.p() - 0.5).abs() < 1e-15);
        assert!((half.w0().prob(0, 1) - 0.5).abs() < 1e-15);

        let g9 = bsec_from_extension(0.9).unwrap();
        assert!((g9.p() - 0.18).abs() < 1e-12);
        assert!((g9.w0().prob(0, 1) - 0.81 / 0.82).abs() < 1e-12);

        assert!(matches!(bsec_from_extension(0.0), Err(Error::Degenerate(_))));
        assert!(matches!(bsec_from_extension(1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn extension_pair_at_first_level() {
        let pair = bsc(0.1).unwrap().power(2).unwrap().restrict_inputs(&[0, 3]).unwrap();
        let g = gec_decompose(pair, &[false, true, true, false], &[0.5, 0.5]).unwrap();
        assert!((g.p() - 2.0 * 0.1 * 0.9).abs() < 1e-15);
    }

    #[test]
    fn posterior_lists_rank_the_map_first() {
        let g = bsec_from_extension(0.1).unwrap();
        let out = [0u32, 3];
        let c = g.candidates(&out);
        assert_eq!(c.get(0, 0), (0, 0.0));
        assert_eq!(c.get(1, 0).0, 1);
        let (_, cost) = c.get(0, 1);
        let q1: f64 = 0.01 / 0.82;
        assert!((cost - ((1.0 - q1) / q1).ln()).abs() < 1e-12);
    }
}
