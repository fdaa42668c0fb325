//! Privacy audits: the receiver's choice bit and the unchosen key.

use rand::RngCore;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::bits::BitString;
use super::hash::{PrivacyHash, ToeplitzHash};
use super::{run_protocol, trial_rng, Lengths, OtParams, Step2Sampler};
use crate::channels::GecModel;
use crate::error::{arg, Error, Result};

/// Largest `m` for which the sender audit enumerates `2^m` blocks.
pub const EXACT_SENDER_CAP: usize = 12;
pub const SENDER_AUDIT_SEEDS: usize = 100;
const EXACT_TOL: f64 = 1e-12;
const SIGNIFICANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerCheck {
    pub pass: bool,
    /// Largest `|Pr(V = v | x) - p|` over inputs and `v` in {0, 1}.
    pub max_deviation: f64,
}

/// Checks `Pr(V=0|x) = Pr(V=1|x) = p` for every input from the sampler's
/// defining probabilities.
pub fn exact_sampler_check(ch: &dyn GecModel, sampler: &Step2Sampler) -> SamplerCheck {
    let p = ch.erasure_probability();
    let mut dev: f64 = 0.0;
    for x in 0..ch.input_count() {
        let law = sampler.law(ch.erasure_mass(x));
        dev = dev.max((law[0] - p).abs()).max((law[1] - p).abs());
    }
    SamplerCheck {
        pass: dev <= EXACT_TOL,
        max_deviation: dev,
    }
}

/// Summary of `(I0, I1)`: which set starts first and which ends first.
pub fn index_category(i0: &[usize], i1: &[usize]) -> usize {
    let first = i0.first() < i1.first();
    let last = i0.last() < i1.last();
    2 * first as usize + last as usize
}

/// Pearson chi-square test of independence on a 2 x 4 table. Columns with
/// no observations are dropped. Returns `(statistic, dof, p-value)`.
pub fn chi_square_independence(table: &[[u64; 4]; 2]) -> (f64, usize, f64) {
    let cols: Vec<usize> = (0..4).filter(|&j| table[0][j] + table[1][j] > 0).collect();
    let rows: [u64; 2] = [table[0].iter().sum(), table[1].iter().sum()];
    let total = rows[0] + rows[1];
    if cols.len() < 2 || rows.contains(&0) {
        return (0.0, 0, 1.0);
    }
    let mut stat = 0.0;
    for r in 0..2 {
        for &j in &cols {
            let col = (table[0][j] + table[1][j]) as f64;
            let expect = rows[r] as f64 * col / total as f64;
            let d = table[r][j] as f64 - expect;
            stat += d * d / expect;
        }
    }
    let dof = cols.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    (stat, dof, 1.0 - dist.cdf(stat))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReceiverPrivacy {
    pub exact: SamplerCheck,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `p_value > 0.01`
    pub empirical_pass: bool,
    pub runs: u64,
}

/// Exact sampler identity plus a chi-square test of `B` against the index
/// set summary over `trials` independent runs.
pub fn audit_receiver_privacy(
    params: &OtParams,
    ch: &dyn GecModel,
    sampler: &Step2Sampler,
    trials: u64,
) -> Result<ReceiverPrivacy> {
    let mut table = [[0u64; 4]; 2];
    let mut runs = 0;
    for i in 0..trials {
        let t = run_protocol(params, ch, sampler, &mut trial_rng(params.seed, i))?;
        if t.aborted {
            continue;
        }
        runs += 1;
        table[t.b as usize][index_category(&t.i0, &t.i1)] += 1;
    }
    let (chi2, dof, p_value) = chi_square_independence(&table);
    Ok(ReceiverPrivacy {
        exact: exact_sampler_check(ch, sampler),
        chi2,
        dof,
        p_value,
        empirical_pass: p_value > SIGNIFICANCE,
        runs,
    })
}

fn low_bits(s: &BitString) -> usize {
    s.read_bits(0, s.len()) as usize
}

/// Variational distance of `F(X)` from uniform given `G(X)`, for i.i.d.
/// Bernoulli(`bias`) blocks of `m` bits, averaged over `seeds` random hash
/// pairs.
pub fn sender_privacy_exact(lengths: Lengths, bias: f64, seeds: usize, rng: &mut dyn RngCore) -> Result<f64> {
    let Lengths { m, kappa, l } = lengths;
    if m > EXACT_SENDER_CAP {
        return Err(Error::ExactAuditUnavailable(format!(
            "m = {m} exceeds the exact cap {EXACT_SENDER_CAP}"
        )));
    }
    if !(0.0..=1.0).contains(&bias) {
        return arg(format!("bias {bias} outside [0,1]"));
    }
    if l > m || kappa > m {
        return arg(format!("cannot hash {m} bits to {kappa} + {l}"));
    }
    if seeds == 0 {
        return arg("need at least one hash seed");
    }
    let mut total = 0.0;
    for _ in 0..seeds {
        let g = ToeplitzHash::random(m, kappa, rng);
        let f = PrivacyHash::random(m, l, rng)?;
        let mut joint = vec![0.0; (1 << kappa) * (1 << l)];
        for x in 0..1u64 << m {
            let w = x.count_ones() as i32;
            let px = bias.powi(w) * (1.0 - bias).powi(m as i32 - w);
            let xb = BitString::from_u64(x, m);
            let c = low_bits(&g.apply(&xb)?);
            let s = low_bits(&f.apply(&xb)?);
            joint[(c << l) | s] += px;
        }
        let u = 1.0 / (1u64 << l) as f64;
        let mut d = 0.0;
        for row in joint.chunks(1 << l) {
            let pc: f64 = row.iter().sum();
            d += row.iter().map(|&v| (v - pc * u).abs()).sum::<f64>();
        }
        total += d / 2.0;
    }
    Ok(total / seeds as f64)
}

/// Sender audit for binary GECs whose erasure outputs say nothing about the
/// input, so the receiver's view of the unchosen block is just its prior.
pub fn audit_sender_privacy_small_m(
    lengths: Lengths,
    ch: &dyn GecModel,
    seeds: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if !ch.erasure_view_useless() || ch.input_count() != 2 || ch.symbol_bits() != 1 {
        return Err(Error::ExactAuditUnavailable(
            "exact audit needs a binary GEC with an uninformative erasure side".into(),
        ));
    }
    sender_privacy_exact(lengths, ch.input_probability(1), seeds, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::bsec_from_extension;

    #[test]
    fn categories() {
        assert_eq!(index_category(&[1, 5], &[2, 3]), 2);
        assert_eq!(index_category(&[2, 3], &[1, 5]), 1);
        assert_eq!(index_category(&[0, 9], &[1, 5]), 2);
        assert_eq!(index_category(&[0, 4], &[1, 5]), 3);
    }

    #[test]
    fn chi_square_examples() {
        let (s, dof, p) = chi_square_independence(&[[10, 10, 0, 0], [10, 10, 0, 0]]);
        assert_eq!((s, dof), (0.0, 1));
        assert!((p - 1.0).abs() < 1e-12);
        let (s, _, p) = chi_square_independence(&[[100, 0, 0, 0], [0, 100, 0, 0]]);
        assert!((s - 200.0).abs() < 1e-9);
        assert!(p < 1e-10);
        assert_eq!(chi_square_independence(&[[5, 0, 0, 0], [5, 0, 0, 0]]).2, 1.0);
    }

    #[test]
    fn faulty_sampler_fails_exact_check() {
        let ch = bsec_from_extension(0.1).unwrap();
        let ok = exact_sampler_check(&ch, &Step2Sampler::new(ch.p()).unwrap());
        assert!(ok.pass, "{ok:?}");
        let bad = exact_sampler_check(&ch, &Step2Sampler::fault_injected(ch.p()).unwrap());
        assert!(!bad.pass);
    }

    #[test]
    fn full_entropy_is_exactly_uniform() {
        let mut rng = trial_rng(4, 0);
        let d = sender_privacy_exact(Lengths { m: 8, kappa: 0, l: 8 }, 0.5, 10, &mut rng).unwrap();
        assert!(d.abs() < 1e-12);
        let d = sender_privacy_exact(Lengths { m: 8, kappa: 3, l: 5 }, 0.5, 10, &mut rng).unwrap();
        assert!((0.0..1.0).contains(&d));
        assert!(sender_privacy_exact(Lengths { m: 13, kappa: 0, l: 1 }, 0.5, 1, &mut rng).is_err());
    }

    #[test]
    fn deterministic_input_is_far_from_uniform() {
        let mut rng = trial_rng(5, 0);
        let d = sender_privacy_exact(Lengths { m: 6, kappa: 0, l: 3 }, 0.0, 5, &mut rng).unwrap();
        assert!((d - (1.0 - 1.0 / 8.0)).abs() < 1e-12);
    }
}
