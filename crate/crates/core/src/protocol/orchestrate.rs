//! Multi-round protocol over the polarization chain.
//!
//! Round 1 sends `n` uniform words of `X_1` over `N` uses of BSC(q). After
//! each round the discarded blocks (`V = 2`) move on: the sender reveals
//! `x · G_N(:, t+1)` and, when it is 1, both sides add the smallest coset
//! representative of `X_t \ X_{t+1}` so the block becomes a uniform word of
//! `X_{t+1}` whose noise still lies in `X_t`.

use serde::Serialize;

use super::{
    audit, derive_lengths, run_after_labelling, trial_rng, Lengths, ListCap, Margins, SimReport,
    Step2Sampler, Tally,
};
use crate::bounds::polar_bound;
use crate::channels::{polar_round_channel, GecModel, PolarRound};
use crate::error::{Error, Result};
use crate::gf2::{parity, SubgroupChain};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundReport {
    pub t: usize,
    pub p_t: f64,
    /// Mean number of blocks that reached this round.
    pub blocks_in_mean: f64,
    /// `n prod_{j<t} (1 - 2 p_j)`
    pub blocks_in_expected: f64,
    /// Trials in which the length formulas left no key for this round.
    pub skipped: u64,
    /// `None` when the round never produced a key.
    pub sim: Option<SimReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrchestrateReport {
    pub q: f64,
    pub s: u32,
    pub n: usize,
    pub trials: u64,
    pub rounds: Vec<RoundReport>,
    pub realized_rate_bits_per_use: f64,
    pub polar_bound: f64,
}

struct RoundState {
    model: PolarRound,
    sampler: Step2Sampler,
    tally: Tally,
    blocks_in: u64,
    skipped: u64,
    lengths: Option<Lengths>,
}

#[allow(clippy::too_many_arguments)]
pub fn recursive_orchestrate(
    q: f64,
    s: u32,
    n: usize,
    margins: Margins,
    seed: u64,
    trials: u64,
    list_cap: ListCap,
) -> Result<OrchestrateReport> {
    let chain = SubgroupChain::shared(s)?;
    let mut rounds: Vec<RoundState> = Vec::new();
    for t in 1..=chain.rounds() {
        let (model, stats) = polar_round_channel(q, s, t)?;
        if stats.p_t > 0.5 {
            break;
        }
        let sampler = match Step2Sampler::new(stats.p_t) {
            Ok(sm) => sm,
            // p_t = 0: nothing is ever erased, so no later round is reached
            Err(_) => break,
        };
        rounds.push(RoundState {
            model,
            sampler,
            tally: Tally::default(),
            blocks_in: 0,
            skipped: 0,
            lengths: None,
        });
    }
    if rounds.is_empty() {
        return Err(Error::Degenerate(format!("no usable round at q = {q}")));
    }
    let n_uses = chain.n();

    let mut key_bits = 0u64;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let first = &rounds[0].model;
        let mut x: Vec<u32> = (0..n).map(|_| first.sample_input(&mut rng)).collect();
        let mut y: Vec<u32> = x.iter().map(|&xi| first.transmit(xi, &mut rng).0).collect();
        for ti in 0..rounds.len() {
            let st = &mut rounds[ti];
            let t = ti + 1;
            st.blocks_in += x.len() as u64;
            let b = rand::Rng::random::<bool>(&mut rng);
            let v: Vec<u8> = y
                .iter()
                .map(|&yi| st.sampler.sample(st.model.is_erasure(yi), &mut rng))
                .collect();
            let carried: Vec<usize> = (0..v.len()).filter(|&i| v[i] == 2).collect();
            match derive_lengths(&st.model, x.len(), margins) {
                Ok(lengths) => {
                    st.lengths.get_or_insert(lengths);
                    let tr = run_after_labelling(
                        lengths,
                        list_cap,
                        &st.model,
                        b,
                        x.clone(),
                        y.clone(),
                        v,
                        &mut rng,
                    )?;
                    if !tr.aborted {
                        key_bits += lengths.l as u64;
                    }
                    st.tally.add(&tr, lengths.l);
                }
                Err(Error::NoExtractableKey(_)) => st.skipped += 1,
                Err(e) => return Err(e),
            }
            if t == chain.rounds() {
                break;
            }
            let col = chain.generator().column(t + 1).bits();
            let rep = chain.min_coset_rep(t + 1)?.bits();
            let (nx, ny): (Vec<u32>, Vec<u32>) = carried
                .iter()
                .map(|&i| {
                    if parity(x[i] & col) == 1 {
                        (x[i] ^ rep, y[i] ^ rep)
                    } else {
                        (x[i], y[i])
                    }
                })
                .unzip();
            x = nx;
            y = ny;
        }
    }

    let mut weight = 1.0;
    let mut reports = Vec::with_capacity(rounds.len());
    for (ti, st) in rounds.iter().enumerate() {
        let p_t = st.model.stats().p_t;
        let sim = st.lengths.map(|lengths| {
            let exact = audit::exact_sampler_check(&st.model, &st.sampler).pass;
            let uses = (st.tally.runs as usize * n * n_uses) as f64;
            st.tally.report(lengths, exact, None, uses)
        });
        reports.push(RoundReport {
            t: ti + 1,
            p_t,
            blocks_in_mean: st.blocks_in as f64 / trials.max(1) as f64,
            blocks_in_expected: n as f64 * weight,
            skipped: st.skipped,
            sim,
        });
        weight *= 1.0 - 2.0 * p_t;
    }
    let total_uses = (trials as usize * n * n_uses) as f64;
    Ok(OrchestrateReport {
        q,
        s,
        n,
        trials,
        rounds: reports,
        realized_rate_bits_per_use: if total_uses > 0.0 {
            key_bits as f64 / total_uses
        } else {
            0.0
        },
        polar_bound: polar_bound(q, s)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carried_blocks_follow_survival() {
        let r = recursive_orchestrate(0.1, 2, 400, Margins::uniform(0.02), 5, 30, ListCap::Count(200)).unwrap();
        assert_eq!(r.rounds.len(), 3);
        for rd in &r.rounds {
            let pi = rd.blocks_in_expected / 400.0;
            let sd = (400.0 * pi * (1.0 - pi) / 30.0).sqrt();
            assert!(
                (rd.blocks_in_mean - rd.blocks_in_expected).abs() <= 4.0 * sd + 1e-9,
                "round {}: {} vs {}",
                rd.t,
                rd.blocks_in_mean,
                rd.blocks_in_expected
            );
        }
    }

    #[test]
    fn single_round_for_two_uses() {
        let r = recursive_orchestrate(0.1, 1, 500, Margins::uniform(0.03), 2, 5, ListCap::Weight(3)).unwrap();
        assert_eq!(r.rounds.len(), 1);
        let sim = r.rounds[0].sim.as_ref().unwrap();
        assert!(sim.receiver_privacy_exact);
        assert_eq!(sim.trials, 5);
    }
}
