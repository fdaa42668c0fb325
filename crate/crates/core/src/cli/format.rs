//! Text output: fixed-precision numbers, CSV and a plain SVG chart.

use std::fmt::Write;

use crate::bounds::BoundCurve;

/// `printf("%.12g")`: 12 significant digits, trailing zeros dropped.
pub fn fmt_g12(x: f64) -> String {
    const P: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn curves_csv(curves: &[BoundCurve]) -> String {
    let mut out = String::from("q,method,params,rate\n");
    for c in curves {
        let name = c.method.name();
        let params = c.method.params();
        for &(q, r) in &c.samples {
            writeln!(out, "{},{name},{params},{}", fmt_g12(q), fmt_g12(r)).unwrap();
        }
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One polyline per curve on a 1000 x 600 canvas.
pub fn curves_svg(curves: &[BoundCurve]) -> String {
    let (w, h) = (1000.0, 600.0);
    let (left, right, top, bottom) = (70.0, 180.0, 30.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let qmin = curves.iter().flat_map(|c| c.samples.first()).map(|s| s.0).fold(f64::INFINITY, f64::min);
    let qmax = curves.iter().flat_map(|c| c.samples.last()).map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let rmax = curves
        .iter()
        .flat_map(|c| c.samples.iter().map(|s| s.1))
        .fold(0.0, f64::max)
        .max(1e-12);
    let qspan = if qmax > qmin { qmax - qmin } else { 1.0 };
    let sx = |q: f64| left + (q - qmin) / qspan * pw;
    let sy = |r: f64| top + ph - r / rmax * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1000 600" width="1000" height="600">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="1000" height="600" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (q, r) = (qmin + f * qspan, f * rmax);
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            sx(q),
            top + ph + 18.0,
            fmt_g12((q * 1e6).round() / 1e6)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(r) + 4.0,
            fmt_g12((r * 1e6).round() / 1e6)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">q</text>"#,
        left + pw / 2.0,
        h - 15.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {:.2})">rate</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    )
    .unwrap();
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c
            .samples
            .iter()
            .map(|&(q, r)| format!("{:.2},{:.2}", sx(q), sy(r)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            c.method
        )
        .unwrap();
        let ly = top + 16.0 + 18.0 * i as f64;
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            left + pw + 12.0,
            left + pw + 32.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            left + pw + 38.0,
            ly + 4.0,
            c.method
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
