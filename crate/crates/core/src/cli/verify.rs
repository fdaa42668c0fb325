//! Consistency battery behind `otcap verify`.

use crate::bounds::{
    appendix_entropy_recursion, hybrid_bound, polar_bound, polar_n4_probabilities,
    prop1_derivative_check, prop1_f, recursive_bsec_bound,
};
use crate::channels::PolarSpectrum;
use crate::error::Result;

const SLOPE_TOL: f64 = 0.05;

pub(super) struct CheckRow {
    pub name: String,
    pub max_dev: f64,
    pub tol: f64,
}

fn row(name: impl Into<String>, max_dev: f64, tol: f64) -> CheckRow {
    CheckRow {
        name: name.into(),
        max_dev,
        tol,
    }
}

fn worst(devs: impl IntoIterator<Item = f64>) -> f64 {
    // a NaN deviation counts as a failure
    devs.into_iter()
        .fold(0.0, |a: f64, d| if d.is_nan() { f64::INFINITY } else { a.max(d) })
}

pub(super) fn run_battery(s_max: u32, grid: &[f64], tol: f64) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let spectra: Vec<_> = (1..=s_max)
        .map(PolarSpectrum::shared)
        .collect::<Result<_>>()?;

    if s_max >= 2 {
        let mut devs = Vec::new();
        for &q in grid {
            let (p1, p2, p3) = polar_n4_probabilities(q);
            let st = spectra[1].round_stats(q)?;
            devs.extend([p1, p2, p3].iter().zip(&st).map(|(c, e)| (c - e.p_t).abs()));
        }
        rows.push(row("closed-form p_t, N=4", worst(devs), tol));
    }

    for (sp, s) in spectra.iter().zip(1..) {
        let mut survive = Vec::new();
        let mut first = Vec::new();
        let mut pair = Vec::new();
        let mut diff = Vec::new();
        for &q in grid {
            let st = sp.round_stats(q)?;
            let mut prod = 1.0;
            for r in &st {
                prod *= 1.0 - r.p_t;
                survive.push((prod - r.survive_mass).abs());
            }
            let n = (1u64 << s) as f64;
            let enumerated = st[0].p_t / n * (st[0].h_bad - st[0].h_good);
            first.push((prop1_f(q, s)?.f - enumerated).abs());
            match appendix_entropy_recursion(q, s) {
                Ok(levels) => {
                    let top = levels.last().expect("s >= 1");
                    pair.push((top.h_good - st[0].h_good).abs());
                    pair.push((top.h_bad - st[0].h_bad).abs());
                    diff.extend(levels.iter().map(|l| (l.h_bad - l.h_good - l.gap).abs()));
                }
                Err(_) => diff.push(f64::INFINITY),
            }
        }
        rows.push(row(format!("survival telescopes, s={s}"), worst(survive), tol));
        rows.push(row(format!("first-round closed form vs enum, s={s}"), worst(first), tol));
        rows.push(row(format!("pair recursion vs enum, s={s}"), worst(pair), tol));
        rows.push(row(format!("pair vs difference recursion, s={s}"), worst(diff), tol));
        let slope = prop1_derivative_check(s)?;
        rows.push(row(format!("slope at q=0 equals s, s={s}"), (slope - s as f64).abs(), SLOPE_TOL));
    }

    let mut sym = Vec::new();
    let mut red = Vec::new();
    for &q in grid {
        for s in 1..=s_max {
            sym.push((polar_bound(q, s)? - polar_bound(1.0 - q, s)?).abs());
            red.push((hybrid_bound(q, 0, s)? - polar_bound(q, s)?).abs());
        }
        red.push((polar_bound(q, 1)? - recursive_bsec_bound(q, 1)?).abs());
        red.push((hybrid_bound(q, 2, 1)? - recursive_bsec_bound(q, 3)?).abs());
    }
    rows.push(row("symmetry q <-> 1-q", worst(sym), tol));
    rows.push(row("reductions (hybrid, N=2)", worst(red), tol));
    Ok(rows)
}
