//! Polarization rounds: the GEC emulated in round `t` of the subgroup
//! chain for `N = 2^s` uses of BSC(q).
//!
//! The round-`t` channel is additive: input uniform on `X_t`, output
//! `x + e` with `e` distributed as BSC noise conditioned on `e in X_{t-1}`.
//! Its erasure set is the coset `X_{t-1} \ X_t`. Because the conditioning
//! sets are single cosets, `H(X_t | Y_{t,b})` reduces to the entropy of the
//! noise restricted to that coset, which we evaluate from exact per-weight
//! counts.

use std::sync::{Arc, OnceLock};

use rand::{Rng, RngCore};

use super::{gec_decompose, sample_cdf, CandidateLists, Dmc, GecChannel, GecModel};
use crate::error::{arg, Result};
use crate::gf2::{check_cap, parity, SubgroupChain, DEFAULT_MAX_S, HARD_MAX_S};

/// Per-round erasure probability and conditional entropies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarRoundStats {
    pub t: usize,
    /// Erasure probability `p_t`.
    pub p_t: f64,
    /// `H(X_t | Y_{t,0})` in bits.
    pub h_good: f64,
    /// `H(X_t | Y_{t,1})` in bits.
    pub h_bad: f64,
    /// `prod_{j<=t} (1 - p_j) = Pr(e in X_t)`.
    pub survive_mass: f64,
}

/// Hamming-weight enumerators of every `X_t` and every erasure coset.
#[derive(Debug)]
pub struct PolarSpectrum {
    s: u32,
    n: usize,
    /// `members[t][w] = #{x in X_t : wt(x) = w}`
    members: Vec<Vec<u64>>,
    /// `cosets[t][w]` for `X_{t-1} \ X_t`; index 0 unused.
    cosets: Vec<Vec<u64>>,
}

impl PolarSpectrum {
    pub fn new(chain: &SubgroupChain) -> Self {
        let n = chain.n();
        let count = |words: &[u32]| {
            let mut c = vec![0u64; n + 1];
            for &w in words {
                c[w.count_ones() as usize] += 1;
            }
            c
        };
        let members: Vec<Vec<u64>> = (0..n)
            .map(|t| count(chain.member_words(t).expect("t in range")))
            .collect();
        let mut cosets = vec![vec![0u64; n + 1]];
        for t in 1..n {
            cosets.push(
                members[t - 1]
                    .iter()
                    .zip(&members[t])
                    .map(|(a, b)| a - b)
                    .collect(),
            );
        }
        Self {
            s: chain.s(),
            n,
            members,
            cosets,
        }
    }

    pub fn shared(s: u32) -> Result<Arc<PolarSpectrum>> {
        static CACHE: [OnceLock<Arc<PolarSpectrum>>; HARD_MAX_S as usize + 1] =
            [const { OnceLock::new() }; HARD_MAX_S as usize + 1];
        check_cap(s, DEFAULT_MAX_S)?;
        let slot = &CACHE[s as usize];
        if let Some(sp) = slot.get() {
            return Ok(sp.clone());
        }
        let sp = Arc::new(PolarSpectrum::new(&*SubgroupChain::shared(s)?));
        Ok(slot.get_or_init(|| sp).clone())
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn member_weights(&self, t: usize) -> &[u64] {
        &self.members[t]
    }

    pub fn coset_weights(&self, t: usize) -> &[u64] {
        &self.cosets[t]
    }

    /// Stats for every round `t = 1..N-1` at crossover `q` in (0,1).
    pub fn round_stats(&self, q: f64) -> Result<Vec<PolarRoundStats>> {
        if !(q > 0.0 && q < 1.0) {
            return arg(format!("crossover probability {q} outside (0,1)"));
        }
        let n = self.n;
        let lq = q.log2();
        let l1q = (1.0 - q).log2();
        // log2 of the probability of one specific word of weight w
        let logp: Vec<f64> = (0..=n).map(|w| w as f64 * lq + (n - w) as f64 * l1q).collect();
        let mass_entropy = |counts: &[u64]| -> (f64, f64) {
            let mut z = 0.0;
            let mut acc = 0.0;
            for (w, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let pw = logp[w].exp2();
                z += c as f64 * pw;
                acc += c as f64 * pw * logp[w];
            }
            if z <= 0.0 {
                return (0.0, 0.0);
            }
            (z, (z.log2() - acc / z).max(0.0))
        };
        let mut prev_mass = 1.0;
        let mut out = Vec::with_capacity(n - 1);
        for t in 1..n {
            let (good_mass, h_good) = mass_entropy(&self.members[t]);
            let (bad_mass, h_bad) = mass_entropy(&self.cosets[t]);
            out.push(PolarRoundStats {
                t,
                p_t: bad_mass / prev_mass,
                h_good,
                h_bad,
                survive_mass: good_mass,
            });
            prev_mass = good_mass;
        }
        Ok(out)
    }
}

/// The emulated GEC of round `t`.
#[derive(Debug)]
pub struct PolarRound {
    q: f64,
    t: usize,
    chain: Arc<SubgroupChain>,
    stats: PolarRoundStats,
    column: u32,
    /// Noise support `X_{t-1}` and its cumulative conditional law.
    noise_words: Vec<u32>,
    noise_cdf: Vec<f64>,
    /// Members of `X_t` in coordinates, ranked by noise likelihood.
    profile: Vec<(u64, f64)>,
    /// `Pr(e in X_{t-1} \ X_t | e in X_{t-1})` summed from the table.
    coset_mass: f64,
}

/// Builds the round-`t` channel for `N = 2^s` and its stats.
pub fn polar_round_channel(q: f64, s: u32, t: usize) -> Result<(PolarRound, PolarRoundStats)> {
    let chain = SubgroupChain::shared(s)?;
    if t < 1 || t > chain.rounds() {
        return arg(format!("round index t = {t} outside 1..={}", chain.rounds()));
    }
    let stats = PolarSpectrum::shared(s)?.round_stats(q)?[t - 1];
    let n = chain.n();
    let log_word = |w: u32| {
        let k = w.count_ones() as f64;
        k * q.ln() + (n as f64 - k) * (1.0 - q).ln()
    };
    let noise_words = chain.member_words(t - 1)?.to_vec();
    let mut acc = 0.0;
    let noise_cdf: Vec<f64> = noise_words
        .iter()
        .map(|&w| {
            acc += log_word(w).exp();
            acc
        })
        .collect();
    let basis = chain.basis(t)?;
    let mut profile: Vec<(u32, f64)> = chain
        .member_words(t)?
        .iter()
        .map(|&w| (w, -log_word(w)))
        .collect();
    profile.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let best = profile[0].1;
    let profile = profile
        .into_iter()
        .map(|(w, c)| (basis.coords(w), c - best))
        .collect();
    let column = chain.generator().column(t).bits();
    let z = acc;
    let coset_mass = noise_words
        .iter()
        .filter(|&&w| parity(w & column) == 1)
        .map(|&w| log_word(w).exp())
        .sum::<f64>()
        / z;
    let round = PolarRound {
        q,
        t,
        chain,
        stats,
        column,
        noise_words,
        noise_cdf,
        profile,
        coset_mass,
    };
    Ok((round, stats))
}

/// Largest `|X_t| * |X_{t-1}|` we are willing to materialize densely.
const DENSE_LIMIT: usize = 1 << 20;

impl PolarRound {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn stats(&self) -> &PolarRoundStats {
        &self.stats
    }

    pub fn chain(&self) -> &SubgroupChain {
        &self.chain
    }

    /// Whether an output word (a member of `X_{t-1}`) is an erasure.
    pub fn is_erasure(&self, y: u32) -> bool {
        parity(y & self.column) == 1
    }

    /// Dense GEC with inputs `X_t` and outputs `X_{t-1}`, both ascending,
    /// uniform input law.
    pub fn to_gec_channel(&self) -> Result<GecChannel> {
        let inputs = self.chain.member_words(self.t)?;
        let outputs = &self.noise_words;
        if inputs.len() * outputs.len() > DENSE_LIMIT {
            return arg(format!(
                "round {} of N = {} is too large to materialize ({} x {})",
                self.t,
                self.chain.n(),
                inputs.len(),
                outputs.len()
            ));
        }
        let n = self.chain.n() as f64;
        let z = *self.noise_cdf.last().expect("non-empty");
        let rows = inputs
            .iter()
            .map(|&x| {
                outputs
                    .iter()
                    .map(|&y| {
                        let k = (x ^ y).count_ones() as f64;
                        self.q.powf(k) * (1.0 - self.q).powf(n - k) / z
                    })
                    .collect()
            })
            .collect();
        let partition: Vec<bool> = outputs.iter().map(|&y| self.is_erasure(y)).collect();
        let uniform = vec![1.0 / inputs.len() as f64; inputs.len()];
        Ok(gec_decompose(Dmc::new(rows)?, &partition, &uniform)?
            .with_channel_uses(self.chain.n()))
    }
}

impl GecModel for PolarRound {
    fn erasure_probability(&self) -> f64 {
        self.stats.p_t
    }

    fn h_non_erasure(&self) -> f64 {
        self.stats.h_good
    }

    fn h_erasure(&self) -> f64 {
        self.stats.h_bad
    }

    fn input_count(&self) -> usize {
        self.profile.len()
    }

    fn symbol_bits(&self) -> usize {
        self.chain.n() - self.t
    }

    fn channel_uses_per_symbol(&self) -> usize {
        self.chain.n()
    }

    fn erasure_mass(&self, _x: usize) -> f64 {
        // additive: the erasure event depends on the noise only
        self.coset_mass
    }

    fn sample_input(&self, rng: &mut dyn RngCore) -> u32 {
        let basis = self.chain.basis(self.t).expect("t in range");
        let k = basis.dim();
        let coords = if k == 0 { 0 } else { rng.random::<u64>() >> (64 - k) };
        basis.from_coords(coords)
    }

    fn transmit(&self, x: u32, rng: &mut dyn RngCore) -> (u32, bool) {
        let e = self.noise_words[sample_cdf(&self.noise_cdf, rng)];
        let y = x ^ e;
        (y, self.is_erasure(y))
    }

    fn encode(&self, x: u32) -> u64 {
        self.chain.basis(self.t).expect("t in range").coords(x)
    }

    fn candidates(&self, outputs: &[u32]) -> CandidateLists<'_> {
        let basis = self.chain.basis(self.t).expect("t in range");
        CandidateLists::Additive {
            observed: outputs.iter().map(|&y| basis.coords(y)).collect(),
            profile: &self.profile,
        }
    }
}
