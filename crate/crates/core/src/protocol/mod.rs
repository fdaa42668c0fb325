//! Finite-length simulation of the standard OT protocol over a GEC.
//!
//! One run: the sender transmits `n` uniform symbols; the receiver labels
//! each index erasure (`V = 1`), kept (`V = 0`) or discarded (`V = 2`),
//! builds the two index sets and sends them; the sender replies with two
//! one-time-padded keys and the reconciliation syndromes; the receiver
//! decodes its chosen block and unpads.

pub mod audit;
pub mod bits;
pub mod decode;
pub mod hash;
mod orchestrate;

pub use bits::BitString;
pub use decode::{reconcile_decode, DecodeOutcome, ListCap};
pub use hash::{toeplitz_hash, PrivacyHash, ToeplitzHash};
pub use orchestrate::{recursive_orchestrate, OrchestrateReport, RoundReport};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channels::GecModel;
use crate::error::{arg, Error, Result};

pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_TRIALS: u64 = 1000;

/// Margins for the three length formulas; they default to one common value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Margins {
    /// In `m = floor(n (p - Δ))`.
    pub erasure: f64,
    /// In `κ = ceil(m (H(X|Y0) + Δ))`.
    pub reconcile: f64,
    /// In `l = floor(m (H(X|Y1) - Δ)) - κ`.
    pub amplify: f64,
}

impl Margins {
    pub fn uniform(delta: f64) -> Self {
        Self {
            erasure: delta,
            reconcile: delta,
            amplify: delta,
        }
    }
}

impl Default for Margins {
    fn default() -> Self {
        Self::uniform(DEFAULT_DELTA)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Lengths {
    pub m: usize,
    pub kappa: usize,
    pub l: usize,
}

/// Rounds `x` down, except that values within `1e-9` of an integer snap to
/// it (so `1000 * (0.3 - 0.05)` is 250, not 249).
fn snap_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x.floor()
    }
}

fn snap_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x.ceil()
    }
}

pub fn derive_lengths(ch: &dyn GecModel, n: usize, margins: Margins) -> Result<Lengths> {
    lengths_from(
        ch.erasure_probability(),
        ch.h_non_erasure(),
        ch.h_erasure(),
        n,
        margins,
    )
}

/// The three length formulas from `p`, `H(X|Y0)` and `H(X|Y1)`.
pub fn lengths_from(p: f64, h0: f64, h1: f64, n: usize, margins: Margins) -> Result<Lengths> {
    let Margins {
        erasure,
        reconcile,
        amplify,
    } = margins;
    if !(erasure > 0.0 && erasure < p) {
        return arg(format!("need 0 < Δ < p, got Δ = {erasure}, p = {p}"));
    }
    if !(reconcile > 0.0) || !(amplify > 0.0) {
        return arg("margins must be positive");
    }
    let m = snap_floor(n as f64 * (p - erasure)).max(0.0);
    let kappa = snap_ceil(m * (h0 + reconcile)).max(0.0);
    let l = snap_floor(m * (h1 - amplify)) - kappa;
    if m < 1.0 || l < 1.0 {
        return Err(Error::NoExtractableKey(l as i64));
    }
    Ok(Lengths {
        m: m as usize,
        kappa: kappa as usize,
        l: l as usize,
    })
}

/// The receiver's labelling rule for one index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step2Sampler {
    p: f64,
    faulty: bool,
}

impl Step2Sampler {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 0.5) {
            return arg(format!("erasure probability {p} outside (0, 1/2]"));
        }
        Ok(Self { p, faulty: false })
    }

    /// A deliberately broken sampler that applies the discard rule on the
    /// erasure side instead. For negative tests only.
    pub fn fault_injected(p: f64) -> Result<Self> {
        Ok(Self {
            faulty: true,
            ..Self::new(p)?
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn keep_prob(&self) -> f64 {
        self.p / (1.0 - self.p)
    }

    pub fn sample(&self, erasure: bool, rng: &mut dyn RngCore) -> u8 {
        let (discard_side, other_label) = if self.faulty {
            (erasure, 0)
        } else {
            (!erasure, 1)
        };
        if !discard_side {
            return other_label;
        }
        let label = if self.faulty { 1 } else { 0 };
        if rng.random::<f64>() < self.keep_prob() {
            label
        } else {
            2
        }
    }

    /// `Pr(V = v | X = x)` for an input whose erasure mass is `e`.
    pub fn law(&self, e: f64) -> [f64; 3] {
        let k = self.keep_prob();
        let d = (1.0 - 2.0 * self.p) / (1.0 - self.p);
        if self.faulty {
            [1.0 - e, e * k, e * d]
        } else {
            [(1.0 - e) * k, e, (1.0 - e) * d]
        }
    }
}

pub fn step2_discard(erasure: bool, p: f64, rng: &mut dyn RngCore) -> Result<u8> {
    Ok(Step2Sampler::new(p)?.sample(erasure, rng))
}

/// Everything both parties saw or produced in one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub x: Vec<u32>,
    pub y: Vec<u32>,
    pub v: Vec<u8>,
    pub b: bool,
    pub aborted: bool,
    pub i0: Vec<usize>,
    pub i1: Vec<usize>,
    pub g_seed: BitString,
    pub f_seed: BitString,
    /// `K_b ⊕ F(X_{I_b})`
    pub pi2: [BitString; 2],
    /// `G(X_{I_b})`
    pub c: [BitString; 2],
    pub k: [BitString; 2],
    pub k_hat: Option<BitString>,
    pub decode_rank: Option<u64>,
}

impl Transcript {
    pub fn key_correct(&self) -> bool {
        !self.aborted && self.k_hat.as_ref() == Some(&self.k[self.b as usize])
    }
}

/// A single configuration of the protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OtParams {
    pub n: usize,
    pub margins: Margins,
    pub list_cap: ListCap,
    pub seed: u64,
    pub trials: u64,
}

/// Independent stream for trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn encode_block(ch: &dyn GecModel, x: &[u32], idx: &[usize]) -> BitString {
    let b = ch.symbol_bits();
    let mut s = BitString::zeros(0);
    for &i in idx {
        s.push_bits(ch.encode(x[i]), b);
    }
    s
}

/// Steps 1 to 6 with inputs and outputs drawn from `ch`.
pub fn run_protocol(
    params: &OtParams,
    ch: &dyn GecModel,
    sampler: &Step2Sampler,
    rng: &mut dyn RngCore,
) -> Result<Transcript> {
    let lengths = derive_lengths(ch, params.n, params.margins)?;
    let b = rng.random::<bool>();
    let mut x = Vec::with_capacity(params.n);
    let mut y = Vec::with_capacity(params.n);
    let mut erased = Vec::with_capacity(params.n);
    for _ in 0..params.n {
        let xi = ch.sample_input(rng);
        let (yi, e) = ch.transmit(xi, rng);
        x.push(xi);
        y.push(yi);
        erased.push(e);
    }
    let v = erased.iter().map(|&e| sampler.sample(e, rng)).collect();
    run_after_labelling(lengths, params.list_cap, ch, b, x, y, v, rng)
}

/// Steps 3 to 6 on already transmitted and labelled blocks.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_after_labelling(
    lengths: Lengths,
    list_cap: ListCap,
    ch: &dyn GecModel,
    b: bool,
    x: Vec<u32>,
    y: Vec<u32>,
    v: Vec<u8>,
    rng: &mut dyn RngCore,
) -> Result<Transcript> {
    let Lengths { m, kappa, l } = lengths;
    let kept: Vec<usize> = (0..v.len()).filter(|&i| v[i] == 0).collect();
    let erased: Vec<usize> = (0..v.len()).filter(|&i| v[i] == 1).collect();
    let empty = || [BitString::zeros(0), BitString::zeros(0)];
    let mut t = Transcript {
        x,
        y,
        v,
        b,
        aborted: false,
        i0: Vec::new(),
        i1: Vec::new(),
        g_seed: BitString::zeros(0),
        f_seed: BitString::zeros(0),
        pi2: empty(),
        c: empty(),
        k: empty(),
        k_hat: None,
        decode_rank: None,
    };
    if kept.len() < m || erased.len() < m {
        t.aborted = true;
        return Ok(t);
    }
    let (ib, inb) = (kept[..m].to_vec(), erased[..m].to_vec());
    if b {
        (t.i0, t.i1) = (inb, ib);
    } else {
        (t.i0, t.i1) = (ib, inb);
    }

    let bits = m * ch.symbol_bits();
    let g = ToeplitzHash::random(bits, kappa, rng);
    let f = PrivacyHash::random(bits, l, rng)?;
    for (j, idx) in [&t.i0, &t.i1].into_iter().enumerate() {
        let xb = encode_block(ch, &t.x, idx);
        let key = BitString::random(l, rng);
        t.pi2[j] = key.xor(&f.apply(&xb)?);
        t.c[j] = g.apply(&xb)?;
        t.k[j] = key;
    }

    let mine = if b { &t.i1 } else { &t.i0 };
    let view: Vec<u32> = mine.iter().map(|&i| t.y[i]).collect();
    let lists = ch.candidates(&view);
    match reconcile_decode(&lists, ch.symbol_bits(), &g, &t.c[b as usize], list_cap)? {
        DecodeOutcome::Decoded { estimate, rank, .. } => {
            t.k_hat = Some(t.pi2[b as usize].xor(&f.apply(&estimate)?));
            t.decode_rank = Some(rank);
        }
        DecodeOutcome::Failed { .. } => {}
    }
    t.g_seed = g.seed().clone();
    t.f_seed = f.seed().clone();
    Ok(t)
}

/// Aggregate over many independent runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub trials: u64,
    pub aborts: u64,
    pub abort_rate: f64,
    pub key_errors: u64,
    pub decode_failures: u64,
    /// Over non-aborted runs.
    pub key_error_rate: f64,
    /// 95% Wilson interval for `key_error_rate`.
    pub key_error_ci: [f64; 2],
    pub receiver_privacy_exact: bool,
    pub receiver_privacy_chi2: f64,
    pub receiver_privacy_chi2_p: f64,
    pub sender_privacy_dvar: Option<f64>,
    pub realized_rate_bits_per_use: f64,
    pub lengths: Lengths,
}

/// 95% Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054_f64;
    let (nf, ph) = (n as f64, k as f64 / n as f64);
    let denom = 1.0 + z * z / nf;
    let centre = (ph + z * z / (2.0 * nf)) / denom;
    let half = z * (ph * (1.0 - ph) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    [lo, hi]
}

/// Running totals shared by `simulate` and the per-round orchestration.
#[derive(Clone, Debug, Default)]
pub(crate) struct Tally {
    pub runs: u64,
    pub aborts: u64,
    pub errors: u64,
    pub failures: u64,
    pub key_bits: u64,
    pub table: [[u64; 4]; 2],
}

impl Tally {
    pub fn add(&mut self, t: &Transcript, l: usize) {
        self.runs += 1;
        if t.aborted {
            self.aborts += 1;
            return;
        }
        self.key_bits += l as u64;
        if t.k_hat.is_none() {
            self.failures += 1;
        }
        if !t.key_correct() {
            self.errors += 1;
        }
        self.table[t.b as usize][audit::index_category(&t.i0, &t.i1)] += 1;
    }

    pub fn report(
        &self,
        lengths: Lengths,
        exact: bool,
        sender: Option<f64>,
        uses: f64,
    ) -> SimReport {
        let ok = self.runs - self.aborts;
        let (chi2, _, p) = audit::chi_square_independence(&self.table);
        SimReport {
            trials: self.runs,
            aborts: self.aborts,
            abort_rate: ratio(self.aborts, self.runs),
            key_errors: self.errors,
            decode_failures: self.failures,
            key_error_rate: ratio(self.errors, ok),
            key_error_ci: wilson_interval(self.errors, ok),
            receiver_privacy_exact: exact,
            receiver_privacy_chi2: chi2,
            receiver_privacy_chi2_p: p,
            sender_privacy_dvar: sender,
            realized_rate_bits_per_use: if uses > 0.0 {
                self.key_bits as f64 / uses
            } else {
                0.0
            },
            lengths,
        }
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Independent trials of `run_protocol` under the standard sampler, plus
/// the privacy audits.
pub fn simulate(params: &OtParams, ch: &dyn GecModel) -> Result<SimReport> {
    let lengths = derive_lengths(ch, params.n, params.margins)?;
    let sampler = Step2Sampler::new(ch.erasure_probability())?;
    let mut tally = Tally::default();
    for i in 0..params.trials {
        let mut rng = trial_rng(params.seed, i);
        let t = run_protocol(params, ch, &sampler, &mut rng)?;
        tally.add(&t, lengths.l);
    }
    let exact = audit::exact_sampler_check(ch, &sampler).pass;
    let sender = if lengths.m <= audit::EXACT_SENDER_CAP
        && ch.erasure_view_useless()
        && ch.symbol_bits() == 1
        && ch.input_count() == 2
    {
        let mut rng = trial_rng(params.seed, u64::MAX);
        Some(audit::sender_privacy_exact(
            lengths,
            ch.input_probability(1),
            audit::SENDER_AUDIT_SEEDS,
            &mut rng,
        )?)
    } else {
        None
    };
    let uses = (params.trials as usize * params.n * ch.channel_uses_per_symbol()) as f64;
    Ok(tally.report(lengths, exact, sender, uses))
}
