//! `otcap` command line.
//!
//! Exit codes: 0 success, 1 verification or feasibility failure, 2 usage
//! error.

pub mod format;
mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::bounds::{
    interactive_ska_bound_n4, polar_bound, polar_terms, sweep, BoundCurve, Grid, MethodId,
    SkaVariant,
};
use crate::channels::{bsec_from_extension, PolarSpectrum};
use crate::error::Error;
use crate::gf2::{DEFAULT_MAX_S, HARD_MAX_S};
use crate::protocol::{
    recursive_orchestrate, simulate, ListCap, Margins, OtParams, SimReport, DEFAULT_DELTA,
    DEFAULT_TRIALS,
};

use format::{curves_csv, curves_svg, fmt_g12};

pub const SEED_ENV: &str = "OT_POLAR_SEED";
pub const DEFAULT_METHODS: &str = "polar:2,polar:3,polar:4,recursive:5,ska,upper";

#[derive(Parser, Debug)]
#[command(name = "otcap", version, about = "OT-capacity lower bounds for the binary symmetric channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep bounds over a q grid and write CSV or SVG.
    Bounds(BoundsArgs),
    /// Monte Carlo runs of the OT protocol; writes a JSON report.
    Simulate(SimulateArgs),
    /// Cross-check closed forms, recursions and enumeration.
    Verify(VerifyArgs),
    /// Per-round erasure probabilities and entropies of the polar chain.
    PolarInfo(PolarInfoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Svg,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, default_value_t = 0.0)]
    q_start: f64,
    #[arg(long, default_value_t = 1.0)]
    q_end: f64,
    #[arg(long, default_value_t = 0.005)]
    q_step: f64,
    /// Comma-separated: extension, recursive:T, polar:s, polar-n4,
    /// ska[:erasure-side|:literal], hybrid:T:s, upper.
    #[arg(long, default_value = DEFAULT_METHODS)]
    methods: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Also write an SVG chart here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Bsec,
    Polar,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::Bsec)]
    scheme: SchemeArg,
    #[arg(long)]
    q: f64,
    /// Polar block length exponent, N = 2^s.
    #[arg(long, default_value_t = 2)]
    s: u32,
    /// Number of GEC blocks.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Margin in m only; defaults to --delta.
    #[arg(long)]
    delta_m: Option<f64>,
    /// Margin in the reconciliation length only.
    #[arg(long)]
    delta_kappa: Option<f64>,
    /// Margin in the key length only.
    #[arg(long)]
    delta_l: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    /// Falls back to $OT_POLAR_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// N candidates, or weight:W for every pattern of at most W deviations.
    /// Defaults to weight:4 for bsec and 20000 for polar.
    #[arg(long)]
    list_cap: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_MAX_S)]
    s_max: u32,
    /// Comma-separated crossover probabilities in (0, 1/2].
    #[arg(long, default_value = "0.01,0.05,0.1,0.2,0.3,0.4,0.49")]
    q_grid: String,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct PolarInfoArgs {
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 2)]
    s: u32,
}

/// Outcome of a subcommand that did not succeed.
enum Failure {
    Usage(String),
    Failed(String),
}

type CliResult = std::result::Result<(), Failure>;

fn usage<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::PolarInfo(a) => cmd_polar_info(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, text)
            .or_else(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .or_else(|e| usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn parse_methods(list: &str) -> std::result::Result<Vec<MethodId>, Failure> {
    let methods: Vec<MethodId> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<MethodId>())
        .collect::<crate::Result<_>>()
        .or_else(|e| usage(e.to_string()))?;
    if methods.is_empty() {
        return usage("no methods given");
    }
    Ok(methods)
}

fn cmd_bounds(a: BoundsArgs) -> CliResult {
    let grid = Grid::new(a.q_start, a.q_end, a.q_step).or_else(|e| usage(e.to_string()))?;
    let methods = parse_methods(&a.methods)?;
    let curves: Vec<BoundCurve> = methods
        .iter()
        .map(|&m| sweep(m, &grid))
        .collect::<crate::Result<_>>()
        .or_else(|e| usage(e.to_string()))?;

    // The interactive curve is expected to sit on or above polar:2.
    for c in curves
        .iter()
        .filter(|c| c.method == MethodId::InteractiveSkaN4(SkaVariant::ErasureSide))
    {
        let worst = c
            .samples
            .iter()
            .map(|&(q, r)| (q, polar_bound(q, 2).unwrap_or(0.0) - r))
            .filter(|&(_, gap)| gap > 1e-12)
            .collect::<Vec<_>>();
        if let Some(&(q, gap)) = worst.first() {
            eprintln!(
                "warning: ska below polar:2 at {} grid points (first q = {}, gap {})",
                worst.len(),
                fmt_g12(q),
                fmt_g12(gap)
            );
        }
    }

    let text = match a.format {
        OutFormat::Csv => curves_csv(&curves),
        OutFormat::Svg => curves_svg(&curves),
    };
    write_output(a.out.as_deref(), &text)?;
    if let Some(p) = a.svg.as_deref() {
        write_output(Some(p), &curves_svg(&curves))?;
    }
    Ok(())
}

fn resolve_seed(flag: Option<u64>) -> std::result::Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .or_else(|_| usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn feasibility(e: Error) -> Failure {
    match e {
        Error::Capacity { .. } => Failure::Usage(e.to_string()),
        other => Failure::Failed(other.to_string()),
    }
}

fn num(x: f64) -> Value {
    // NaN and infinities are not JSON numbers
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn report_fields(r: &SimReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("trials".into(), json!(r.trials));
    m.insert("aborts".into(), json!(r.aborts));
    m.insert("abort_rate".into(), num(r.abort_rate));
    m.insert("key_errors".into(), json!(r.key_errors));
    m.insert("decode_failures".into(), json!(r.decode_failures));
    m.insert("key_error_rate".into(), num(r.key_error_rate));
    m.insert("key_error_ci".into(), json!([num(r.key_error_ci[0]), num(r.key_error_ci[1])]));
    m.insert("receiver_privacy_exact".into(), json!(r.receiver_privacy_exact));
    m.insert("receiver_privacy_chi2".into(), num(r.receiver_privacy_chi2));
    m.insert("receiver_privacy_chi2_p".into(), num(r.receiver_privacy_chi2_p));
    m.insert(
        "sender_privacy_dvar".into(),
        r.sender_privacy_dvar.map_or(json!("not computed"), num),
    );
    m.insert("realized_rate_bits_per_use".into(), num(r.realized_rate_bits_per_use));
    m.insert(
        "lengths".into(),
        json!({"m": r.lengths.m, "kappa": r.lengths.kappa, "l": r.lengths.l}),
    );
    m
}

fn cmd_simulate(a: SimulateArgs) -> CliResult {
    if !(a.q > 0.0 && a.q < 1.0) {
        return usage(format!("--q {} must lie in (0,1)", a.q));
    }
    if a.n == 0 || a.trials == 0 {
        return usage("--n and --trials must be positive");
    }
    if a.s == 0 || a.s > DEFAULT_MAX_S {
        return usage(format!("--s {} outside 1..={DEFAULT_MAX_S}", a.s));
    }
    let seed = resolve_seed(a.seed)?;
    let margins = Margins {
        erasure: a.delta_m.unwrap_or(a.delta),
        reconcile: a.delta_kappa.unwrap_or(a.delta),
        amplify: a.delta_l.unwrap_or(a.delta),
    };
    let list_cap = match (&a.list_cap, a.scheme) {
        (Some(s), _) => s.parse::<ListCap>().or_else(|e| usage(e.to_string()))?,
        (None, SchemeArg::Bsec) => ListCap::Weight(4),
        (None, SchemeArg::Polar) => ListCap::Count(20_000),
    };
    let mut params = json!({
        "scheme": match a.scheme { SchemeArg::Bsec => "bsec", SchemeArg::Polar => "polar" },
        "q": a.q,
        "n": a.n,
        "delta": a.delta,
        "delta_m": margins.erasure,
        "delta_kappa": margins.reconcile,
        "delta_l": margins.amplify,
        "trials": a.trials,
        "seed": seed,
        "list_cap": list_cap.to_string(),
    });

    let doc = match a.scheme {
        SchemeArg::Bsec => {
            let ch = bsec_from_extension(a.q).map_err(feasibility)?;
            let p = OtParams {
                n: a.n,
                margins,
                list_cap,
                seed,
                trials: a.trials,
            };
            let r = simulate(&p, &ch).map_err(feasibility)?;
            let mut m = report_fields(&r);
            m.insert("params".into(), params);
            Value::Object(m)
        }
        SchemeArg::Polar => {
            params["s"] = json!(a.s);
            let r = recursive_orchestrate(a.q, a.s, a.n, margins, seed, a.trials, list_cap)
                .map_err(feasibility)?;
            let sims: Vec<&SimReport> = r.rounds.iter().filter_map(|rd| rd.sim.as_ref()).collect();
            if sims.is_empty() {
                return Err(Failure::Failed(format!(
                    "no extractable key in any round at n = {}, delta = {}",
                    a.n, a.delta
                )));
            }
            let runs: u64 = sims.iter().map(|s| s.trials).sum();
            let aborts: u64 = sims.iter().map(|s| s.aborts).sum();
            let errors: u64 = sims.iter().map(|s| s.key_errors).sum();
            let ok = runs - aborts;
            let rate = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            let ci = crate::protocol::wilson_interval(errors, ok);
            let min_p = sims
                .iter()
                .map(|s| s.receiver_privacy_chi2_p)
                .fold(1.0, f64::min);
            let rounds: Vec<Value> = r
                .rounds
                .iter()
                .map(|rd| {
                    let mut m = Map::new();
                    m.insert("t".into(), json!(rd.t));
                    m.insert("p_t".into(), num(rd.p_t));
                    m.insert("blocks_in_mean".into(), num(rd.blocks_in_mean));
                    m.insert("blocks_in_expected".into(), num(rd.blocks_in_expected));
                    m.insert("skipped".into(), json!(rd.skipped));
                    if let Some(s) = &rd.sim {
                        m.extend(report_fields(s));
                    }
                    Value::Object(m)
                })
                .collect();
            json!({
                "abort_rate": num(rate(aborts, runs)),
                "key_error_rate": num(rate(errors, ok)),
                "key_error_ci": [num(ci[0]), num(ci[1])],
                "receiver_privacy_exact": sims.iter().all(|s| s.receiver_privacy_exact),
                "receiver_privacy_chi2_p": num(min_p),
                "sender_privacy_dvar": "not computed",
                "realized_rate_bits_per_use": num(r.realized_rate_bits_per_use),
                "polar_bound": num(r.polar_bound),
                "rounds": rounds,
                "params": params,
            })
        }
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    write_output(a.out.as_deref(), &text)
}

fn cmd_verify(a: VerifyArgs) -> CliResult {
    if a.s_max == 0 || a.s_max > HARD_MAX_S {
        return usage(format!("--s-max {} outside 1..={HARD_MAX_S}", a.s_max));
    }
    if !(a.tolerance >= 0.0) {
        return usage("--tolerance must be non-negative");
    }
    let grid: Vec<f64> = a
        .q_grid
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .or_else(|_| usage(format!("bad --q-grid '{}'", a.q_grid)))?;
    if grid.is_empty() || grid.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return usage("--q-grid values must lie in (0,1)");
    }
    let rows = verify::run_battery(a.s_max, &grid, a.tolerance).map_err(feasibility)?;
    let mut out = String::new();
    out.push_str(&format!("{:<44} {:>14} {:>10}  result\n", "check", "max_dev", "tol"));
    let mut failed = Vec::new();
    for r in &rows {
        let pass = r.max_dev <= r.tol;
        out.push_str(&format!(
            "{:<44} {:>14.3e} {:>10.1e}  {}\n",
            r.name,
            r.max_dev,
            r.tol,
            if pass { "PASS" } else { "FAIL" }
        ));
        if !pass {
            failed.push(format!("{} (max deviation {:.3e})", r.name, r.max_dev));
        }
    }
    write_output(None, &out)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Failed(format!(
            "{} check(s) failed: {}",
            failed.len(),
            failed.join("; ")
        )))
    }
}

fn cmd_polar_info(a: PolarInfoArgs) -> CliResult {
    if !(a.q > 0.0 && a.q < 1.0) {
        return usage(format!("--q {} must lie in (0,1)", a.q));
    }
    if a.s == 0 || a.s > DEFAULT_MAX_S {
        return usage(format!("--s {} outside 1..={DEFAULT_MAX_S}", a.s));
    }
    let stats = PolarSpectrum::shared(a.s)
        .and_then(|sp| sp.round_stats(a.q))
        .map_err(feasibility)?;
    let terms = polar_terms(a.q, a.s).map_err(feasibility)?;
    let mut out = format!(
        "{:>3} {:>16} {:>16} {:>16} {:>16} {:>16}\n",
        "t", "p_t", "H_non_erasure", "H_erasure", "contribution", "cumulative"
    );
    let mut cumulative = 0.0;
    for st in &stats {
        let contribution = terms.get(st.t - 1).map_or(0.0, |t| t.contribution);
        cumulative += contribution;
        out.push_str(&format!(
            "{:>3} {:>16} {:>16} {:>16} {:>16} {:>16}\n",
            st.t,
            fmt_g12(st.p_t),
            fmt_g12(st.h_good),
            fmt_g12(st.h_bad),
            fmt_g12(contribution),
            fmt_g12(cumulative)
        ));
    }
    if a.s == 2 {
        let ska = interactive_ska_bound_n4(a.q, SkaVariant::ErasureSide).map_err(feasibility)?;
        out.push_str(&format!("interactive (N=4): {}\n", fmt_g12(ska)));
    }
    write_output(None, &out)
}
