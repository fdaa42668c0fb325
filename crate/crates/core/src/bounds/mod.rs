//! OT-capacity lower bounds for BSC(q), the matching `h(q)` upper bound,
//! and grid sweeps over `q`.
//!
//! All rates are in OT bits per BSC use.

mod ska;

pub use ska::{interactive_ska_bound_n4, interactive_ska_breakdown, SkaBreakdown, SkaVariant};

use std::fmt;
use std::str::FromStr;

use crate::channels::{GecChannel, PolarRoundStats, PolarSpectrum};
use crate::entropy::h2;
use crate::error::{arg, Result};
use crate::gf2::{check_cap, DEFAULT_MAX_S};

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return arg(format!("crossover probability {q} outside [0,1]"));
    }
    Ok(())
}

fn check_s(s: u32) -> Result<()> {
    if s == 0 {
        return arg("s must be at least 1");
    }
    check_cap(s, DEFAULT_MAX_S)
}

pub fn binary_entropy(q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(h2(q))
}

/// `p (H(X|Y1) - H(X|Y0))`, clamped at 0, per GEC symbol.
pub fn gec_rate(ch: &GecChannel) -> f64 {
    (ch.p() * (ch.h_erasure() - ch.h_non_erasure())).max(0.0)
}

/// One level of the 2-use repetition: `(p, q')` from `q`.
fn bsec_step(q: f64) -> (f64, f64) {
    let p = 2.0 * q * (1.0 - q);
    let a = q * q;
    let q1 = a / ((1.0 - q) * (1.0 - q) + a);
    (p, q1)
}

pub fn extension_bound(q: f64) -> Result<f64> {
    check_q(q)?;
    let (p, q1) = bsec_step(q);
    Ok(p / 2.0 * (1.0 - h2(q1)))
}

/// Recursive BSEC emulation over `T` levels.
pub fn recursive_bsec_bound(q: f64, levels: u32) -> Result<f64> {
    check_q(q)?;
    if levels == 0 {
        return arg("recursion depth T must be at least 1");
    }
    Ok(recursive_prefix(q, levels).0)
}

/// Returns (sum of the first `levels` terms, surviving weight, q after
/// `levels` steps).
fn recursive_prefix(q: f64, levels: u32) -> (f64, f64, f64) {
    let mut rate = 0.0;
    let mut weight = 1.0;
    let mut qt = q;
    for _ in 0..levels {
        let (p, q1) = bsec_step(qt);
        rate += weight * p / 2.0 * (1.0 - h2(q1));
        weight *= (1.0 - 2.0 * p) / 2.0;
        qt = q1;
    }
    (rate, weight, qt)
}

/// Contribution of one polarization round to the bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarTerm {
    pub stats: PolarRoundStats,
    /// `prod_{j<t} (1 - 2 p_j)`
    pub weight: f64,
    pub contribution: f64,
    pub cumulative: f64,
}

/// Per-round terms, stopping before the first round with `p_t > 1/2`.
/// Empty at `q` in {0, 1}.
pub fn polar_terms(q: f64, s: u32) -> Result<Vec<PolarTerm>> {
    check_q(q)?;
    check_s(s)?;
    if q == 0.0 || q == 1.0 {
        return Ok(Vec::new());
    }
    let n = (1u32 << s) as f64;
    let stats = PolarSpectrum::shared(s)?.round_stats(q)?;
    Ok(weigh_rounds(stats.iter().copied(), n))
}

fn weigh_rounds(stats: impl Iterator<Item = PolarRoundStats>, n: f64) -> Vec<PolarTerm> {
    let mut weight = 1.0;
    let mut cumulative = 0.0;
    let mut out = Vec::new();
    for st in stats {
        if st.p_t > 0.5 {
            break;
        }
        let contribution = weight * st.p_t / n * (st.h_bad - st.h_good).max(0.0);
        cumulative += contribution;
        out.push(PolarTerm {
            stats: st,
            weight,
            contribution,
            cumulative,
        });
        weight *= 1.0 - 2.0 * st.p_t;
    }
    out
}

pub fn polar_bound(q: f64, s: u32) -> Result<f64> {
    Ok(polar_terms(q, s)?.last().map_or(0.0, |t| t.cumulative))
}

/// Closed-form `(p_1, p_2, p_3)` for `N = 4`.
pub fn polar_n4_probabilities(q: f64) -> (f64, f64, f64) {
    let a = q * q * (1.0 - q) * (1.0 - q);
    let p1 = 4.0 * q * (1.0 - q) * ((1.0 - q) * (1.0 - q) + q * q);
    let p2 = 4.0 * a / (1.0 - p1);
    let p3 = 2.0 * a / ((1.0 - p1) * (1.0 - p2));
    (p1, p2, p3)
}

/// The `N = 4` bound with the closed-form erasure probabilities.
pub fn polar_n4(q: f64) -> Result<f64> {
    check_q(q)?;
    if q == 0.0 || q == 1.0 {
        return Ok(0.0);
    }
    let (p1, p2, p3) = polar_n4_probabilities(q);
    let stats = PolarSpectrum::shared(2)?.round_stats(q)?;
    let closed = stats
        .iter()
        .zip([p1, p2, p3])
        .map(|(st, p_t)| PolarRoundStats { p_t, ..*st });
    Ok(weigh_rounds(closed, 4.0).last().map_or(0.0, |t| t.cumulative))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop1Scalars {
    pub q: f64,
    /// `p̄_0..=p̄_s`
    pub p_bar: Vec<f64>,
    /// `q̄_1..=q̄_s`, stored at indices `0..s`
    pub q_bar: Vec<f64>,
    pub f: f64,
}

impl Prop1Scalars {
    /// `q̄_j` for `1 <= j <= s`.
    pub fn q_bar_at(&self, j: usize) -> f64 {
        self.q_bar[j - 1]
    }
}

/// Closed form of the first-round polar term.
///
/// `p̄_j = (1 - (1-2q)^{2^j}) / 2` is evaluated through `expm1`/`ln_1p` so
/// that small `q` does not cancel.
pub fn prop1_f(q: f64, s: u32) -> Result<Prop1Scalars> {
    if !(q > 0.0 && q < 1.0) {
        return arg(format!("crossover probability {q} outside (0,1)"));
    }
    if s == 0 || s > 30 {
        return arg(format!("s = {s} outside 1..=30"));
    }
    let r = q.min(1.0 - q);
    let mut p_bar = vec![q];
    for j in 1..=s {
        let v = if r == 0.5 {
            0.5
        } else {
            -((2f64.powi(j as i32)) * (-2.0 * r).ln_1p()).exp_m1() / 2.0
        };
        p_bar.push(v);
    }
    let q_bar: Vec<f64> = (1..=s as usize)
        .map(|j| p_bar[j - 1] * p_bar[j - 1] / (1.0 - p_bar[j]))
        .collect();
    let qb = |j: usize| q_bar[j - 1];
    let su = s as usize;
    let mut sum = 0.0;
    for i in 0..su {
        let prod: f64 = (1..=i).map(|j| 1.0 - 2.0 * qb(su - j + 1)).product();
        sum += prod * (1.0 - h2(qb(su - i)));
    }
    let f = p_bar[su] / (1u64 << s) as f64 * sum;
    Ok(Prop1Scalars { q, p_bar, q_bar, f })
}

/// Central difference of `f` at `q = 1e-6` with step `1e-7`.
pub fn prop1_derivative_check(s: u32) -> Result<f64> {
    check_s(s)?;
    let (q0, step) = (1e-6, 1e-7);
    let hi = prop1_f(q0 + step, s)?.f;
    let lo = prop1_f(q0 - step, s)?.f;
    Ok((hi - lo) / (2.0 * step))
}

/// Level `j` of the recursive coset-entropy structure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppendixLevel {
    pub j: usize,
    /// Noise entropy on the non-erasure side.
    pub h_good: f64,
    /// Noise entropy on the erasure side.
    pub h_bad: f64,
    /// The gap from the one-line difference recursion.
    pub gap: f64,
}

const RECURSION_TOL: f64 = 1e-9;

/// Runs the pair recursion and the difference recursion side by side and
/// fails if they drift apart by more than `1e-9`.
pub fn appendix_entropy_recursion(q: f64, s: u32) -> Result<Vec<AppendixLevel>> {
    let sc = prop1_f(q, s)?;
    let (mut h0, mut h1, mut gap) = (0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(s as usize);
    for j in 1..=s as usize {
        let qj = sc.q_bar_at(j);
        let hq = h2(qj);
        let n0 = hq + 2.0 * (1.0 - qj) * h0 + 2.0 * qj * h1;
        let n1 = 1.0 + h0 + h1;
        gap = 1.0 - hq + (1.0 - 2.0 * qj) * gap;
        (h0, h1) = (n0, n1);
        let dev = (h1 - h0 - gap).abs();
        if dev > RECURSION_TOL {
            return Err(crate::error::Error::Degenerate(format!(
                "entropy recursions disagree at level {j}: deviation {dev:.3e}"
            )));
        }
        out.push(AppendixLevel {
            j,
            h_good: h0,
            h_bad: h1,
            gap,
        });
    }
    Ok(out)
}

/// Recursive BSEC for `T` levels, then polarization with `N = 2^s` on what
/// is left.
pub fn hybrid_bound(q: f64, levels: u32, s: u32) -> Result<f64> {
    check_q(q)?;
    check_s(s)?;
    let (rate, weight, qt) = recursive_prefix(q, levels);
    Ok(rate + weight * polar_bound(qt, s)?)
}

pub fn upper_bound(q: f64) -> Result<f64> {
    binary_entropy(q)
}

/// Bound identifiers as used on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodId {
    Extension,
    RecursiveBsec(u32),
    Polar(u32),
    PolarN4,
    InteractiveSkaN4(SkaVariant),
    Hybrid(u32, u32),
    UpperH,
}

impl MethodId {
    pub fn name(&self) -> &'static str {
        match self {
            MethodId::Extension => "extension",
            MethodId::RecursiveBsec(_) => "recursive",
            MethodId::Polar(_) => "polar",
            MethodId::PolarN4 => "polar-n4",
            MethodId::InteractiveSkaN4(_) => "ska",
            MethodId::Hybrid(..) => "hybrid",
            MethodId::UpperH => "upper",
        }
    }

    /// Parameter column for CSV output; never contains a comma.
    pub fn params(&self) -> String {
        match self {
            MethodId::Extension | MethodId::PolarN4 | MethodId::UpperH => String::new(),
            MethodId::RecursiveBsec(t) => format!("T={t}"),
            MethodId::Polar(s) => format!("s={s}"),
            MethodId::InteractiveSkaN4(v) => format!("variant={v}"),
            MethodId::Hybrid(t, s) => format!("T={t};s={s}"),
        }
    }

    pub fn is_lower_bound(&self) -> bool {
        !matches!(self, MethodId::UpperH)
    }

    pub fn evaluate(&self, q: f64) -> Result<f64> {
        match *self {
            MethodId::Extension => extension_bound(q),
            MethodId::RecursiveBsec(t) => recursive_bsec_bound(q, t),
            MethodId::Polar(s) => polar_bound(q, s),
            MethodId::PolarN4 => polar_n4(q),
            MethodId::InteractiveSkaN4(v) => interactive_ska_bound_n4(q, v),
            MethodId::Hybrid(t, s) => hybrid_bound(q, t, s),
            MethodId::UpperH => upper_bound(q),
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodId::RecursiveBsec(t) => write!(f, "recursive:{t}"),
            MethodId::Polar(s) => write!(f, "polar:{s}"),
            MethodId::InteractiveSkaN4(v) => write!(f, "ska:{v}"),
            MethodId::Hybrid(t, s) => write!(f, "hybrid:{t}:{s}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for MethodId {
    type Err = crate::error::Error;

    fn from_str(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let num = |s: &str, what: &str| -> Result<u32> {
            s.parse()
                .or_else(|_| arg(format!("bad {what} '{s}' in method '{spec}'")))
        };
        let m = match parts.as_slice() {
            ["extension"] => MethodId::Extension,
            ["recursive", t] => MethodId::RecursiveBsec(num(t, "T")?),
            ["polar", s] => MethodId::Polar(num(s, "s")?),
            ["polar-n4"] => MethodId::PolarN4,
            ["ska"] => MethodId::InteractiveSkaN4(SkaVariant::ErasureSide),
            ["ska", v] => MethodId::InteractiveSkaN4(v.parse()?),
            ["hybrid", t, s] => MethodId::Hybrid(num(t, "T")?, num(s, "s")?),
            ["upper"] => MethodId::UpperH,
            _ => return arg(format!("unknown method '{spec}'")),
        };
        match m {
            MethodId::RecursiveBsec(0) => arg("recursive:T needs T >= 1"),
            MethodId::Polar(s) | MethodId::Hybrid(_, s) => check_s(s).map(|_| m),
            _ => Ok(m),
        }
    }
}

/// Evenly spaced `q` grid; the last point is clamped to `end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return arg(format!("grid step {step} must be positive"));
        }
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || start >= end {
            return arg(format!("need 0 <= q-start < q-end <= 1, got [{start}, {end}]"));
        }
        Ok(Self { start, end, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| (self.start + i as f64 * self.step).min(self.end))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCurve {
    pub method: MethodId,
    pub grid: Grid,
    pub samples: Vec<(f64, f64)>,
}

pub fn sweep(method: MethodId, grid: &Grid) -> Result<BoundCurve> {
    let samples = grid
        .points()
        .into_iter()
        .map(|q| Ok((q, method.evaluate(q)?.max(0.0))))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCurve {
        method,
        grid: *grid,
        samples,
    })
}
