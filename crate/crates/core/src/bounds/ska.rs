//! First-round improvement for `N = 4` via interactive key agreement.
//!
//! On the non-erasure index set the receiver learns the two hash bits
//! `U1 = (x·c2, x·c3)` and answers with `U2 = [E·c2 = E·c3 = 0]`; when
//! `U2 = 1` the last bit `U3 = x·c4` becomes a key bit too. On the other
//! index set a dummy `U2'` with the same marginal is sent, so `B` stays
//! hidden. Everything below is exact enumeration over `x in X_1` (8 words)
//! and the 16 noise words.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::channels::PolarSpectrum;
use crate::error::{arg, Error, Result};
use crate::gf2::{parity, SubgroupChain};

/// Which observation the ambiguity term is conditioned on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SkaVariant {
    /// The adversary's erasure-side view.
    #[default]
    ErasureSide,
    /// The non-erasure view, as the formula is printed.
    Literal,
}

impl fmt::Display for SkaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkaVariant::ErasureSide => "erasure-side",
            SkaVariant::Literal => "literal",
        })
    }
}

impl FromStr for SkaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "erasure-side" => Ok(SkaVariant::ErasureSide),
            "literal" => Ok(SkaVariant::Literal),
            _ => arg(format!("unknown SKA variant '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkaBreakdown {
    pub p1: f64,
    /// `Pr(U2 = 1)` on the non-erasure side.
    pub pi: f64,
    /// `H(U1, U3' | V, U2')`
    pub ambiguity: f64,
    /// `H(U1 | Y0)`
    pub h_u1: f64,
    /// `H(U3 | Y0, U2)`
    pub h_u3: f64,
    /// `H(X | Y0, U1, U2 = 0)`, which should be exactly one bit.
    pub residual_u2_zero: f64,
    pub improved_t1: f64,
    /// The plain first-round polar term, for comparison.
    pub base_t1: f64,
    /// Rounds 2 and 3, unchanged.
    pub later_rounds: f64,
    pub total: f64,
}

/// Conditional entropy `H(A | C)` from a joint table keyed by `(a, c)`.
fn cond_entropy<A, C>(joint: &HashMap<(A, C), f64>) -> f64
where
    A: std::hash::Hash + Eq,
    C: std::hash::Hash + Eq + Copy,
{
    let mut marg: HashMap<C, f64> = HashMap::new();
    for ((_, c), &m) in joint {
        *marg.entry(*c).or_default() += m;
    }
    let h: f64 = joint
        .iter()
        .filter(|(_, &m)| m > 0.0)
        .map(|((_, c), &m)| -m * (m / marg[c]).log2())
        .sum();
    h.max(0.0)
}

struct Atom {
    x: u32,
    y: u32,
    e: u32,
    mass: f64,
}

pub fn interactive_ska_breakdown(q: f64, variant: SkaVariant) -> Result<SkaBreakdown> {
    if !(q > 0.0 && q < 1.0) {
        return arg(format!("crossover probability {q} outside (0,1)"));
    }
    let chain = SubgroupChain::shared(2)?;
    let g = chain.generator();
    let (c2, c3, c4) = (g.column(2).bits(), g.column(3).bits(), g.column(4).bits());
    let xs = chain.member_words(1)?;
    let dot = |a: u32, c: u32| parity(a & c);
    let weight = |e: u32| {
        let k = e.count_ones() as i32;
        q.powi(k) * (1.0 - q).powi(4 - k)
    };
    // Joint law of (x, e) given which side of the first split e lands on.
    let atoms = |odd: bool| -> Vec<Atom> {
        let es: Vec<u32> = (0..16u32).filter(|&e| (e.count_ones() & 1 == 1) == odd).collect();
        let z: f64 = es.iter().map(|&e| weight(e)).sum();
        let mut v = Vec::new();
        for &x in xs {
            for &e in &es {
                v.push(Atom {
                    x,
                    y: x ^ e,
                    e,
                    mass: weight(e) / z / xs.len() as f64,
                });
            }
        }
        v
    };
    let good = atoms(false);
    let view = match variant {
        SkaVariant::ErasureSide => atoms(true),
        SkaVariant::Literal => atoms(false),
    };
    let u1 = |a: &Atom| (dot(a.x, c2), dot(a.x, c3));
    let u2 = |a: &Atom| dot(a.e, c2) == 0 && dot(a.e, c3) == 0;

    let pi: f64 = good.iter().filter(|a| u2(a)).map(|a| a.mass).sum();

    let mut j_u1 = HashMap::new();
    let mut j_u3 = HashMap::new();
    let mut j_res = HashMap::new();
    let mut res_mass = 0.0;
    for a in &good {
        *j_u1.entry((u1(a), a.y)).or_insert(0.0) += a.mass;
        let b = u2(a);
        let u3 = b.then(|| dot(a.x, c4));
        *j_u3.entry((u3, (a.y, b))).or_insert(0.0) += a.mass;
        if !b {
            *j_res.entry((a.x, (a.y, u1(a)))).or_insert(0.0) += a.mass;
            res_mass += a.mass;
        }
    }
    let h_u1 = cond_entropy(&j_u1);
    let h_u3 = cond_entropy(&j_u3);
    let residual_u2_zero = if res_mass > 0.0 {
        cond_entropy(&j_res) / res_mass
    } else {
        0.0
    };

    // U2' is independent of everything: split the ambiguity by its value.
    let mut j_v1 = HashMap::new();
    let mut j_v13 = HashMap::new();
    for a in &view {
        *j_v1.entry((u1(a), a.y)).or_insert(0.0) += a.mass;
        *j_v13.entry(((u1(a), dot(a.x, c4)), a.y)).or_insert(0.0) += a.mass;
    }
    let ambiguity = (1.0 - pi) * cond_entropy(&j_v1) + pi * cond_entropy(&j_v13);

    let stats = PolarSpectrum::shared(2)?.round_stats(q)?;
    let p1 = stats[0].p_t;
    let improved_t1 = p1 / 4.0 * (ambiguity - h_u1 - h_u3).max(0.0);
    let base_t1 = p1 / 4.0 * (stats[0].h_bad - stats[0].h_good).max(0.0);
    let mut later_rounds = 0.0;
    let mut w = 1.0 - 2.0 * p1;
    for st in &stats[1..] {
        if st.p_t > 0.5 {
            break;
        }
        later_rounds += w * st.p_t / 4.0 * (st.h_bad - st.h_good).max(0.0);
        w *= 1.0 - 2.0 * st.p_t;
    }
    Ok(SkaBreakdown {
        p1,
        pi,
        ambiguity,
        h_u1,
        h_u3,
        residual_u2_zero,
        improved_t1,
        base_t1,
        later_rounds,
        total: improved_t1 + later_rounds,
    })
}

/// The `N = 4` bound with the interactive first round; 0 at `q` in {0, 1}.
pub fn interactive_ska_bound_n4(q: f64, variant: SkaVariant) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return arg(format!("crossover probability {q} outside [0,1]"));
    }
    if q == 0.0 || q == 1.0 {
        return Ok(0.0);
    }
    Ok(interactive_ska_breakdown(q, variant)?.total)
}
