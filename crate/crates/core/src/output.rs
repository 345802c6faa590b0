// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! CSV and SVG writers. All numbers go through [`fmt_num`], so files are
//! byte-identical for identical inputs and independent of locale.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::algebra::Complex;
use crate::trajectory::{Comparison, ConditionalAverage};
use crate::weak::{ConditionalMap, UNCONDITIONAL_BOUND};

const SIG_DIGITS: usize = 9;

/// Nine significant digits, shortest of fixed or exponent notation,
/// trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// `t_us,nu_r_mhz,re_value,im_value,denominator`, time-major.
pub fn write_map_csv<W: Write>(w: &mut W, map: &ConditionalMap) -> io::Result<()> {
    writeln!(w, "t_us,nu_r_mhz,re_value,im_value,denominator")?;
    for (it, t) in map.times.iter().enumerate() {
        for (inu, nu) in map.rabi_freqs.iter().enumerate() {
            let v = map.values[it][inu];
            let d = map.denominators.as_ref().map(|d| d[it][inu]);
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_num(*t),
                fmt_num(*nu),
                opt(v.map(|v| v.re)),
                opt(v.map(|v| v.im)),
                opt(d)
            )?;
        }
    }
    Ok(())
}

/// One fixed-time cut of a conditioned and an unconditioned map.
#[derive(Debug, Clone, PartialEq)]
pub struct CutRow<'a> {
    pub t: f64,
    pub conditioned: &'a [Option<Complex>],
    pub unconditioned: &'a [Option<Complex>],
    pub conditioned_slope: f64,
    pub unconditioned_slope: f64,
}

/// `t_us,nu_r_mhz,conditioned_re,conditioned_im,unconditioned_re,unconditioned_im`.
pub fn write_cut_csv<W: Write>(w: &mut W, rabi_freqs: &[f64], cuts: &[CutRow<'_>]) -> io::Result<()> {
    writeln!(w, "t_us,nu_r_mhz,conditioned_re,conditioned_im,unconditioned_re,unconditioned_im")?;
    for cut in cuts {
        for (k, nu) in rabi_freqs.iter().enumerate() {
            let c = cut.conditioned[k];
            let u = cut.unconditioned[k];
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_num(cut.t),
                fmt_num(*nu),
                opt(c.map(|v| v.re)),
                opt(c.map(|v| v.im)),
                opt(u.map(|v| v.re)),
                opt(u.map(|v| v.im))
            )?;
        }
    }
    Ok(())
}

/// `t_us,conditioned_max_slope,unconditioned_max_slope,ratio`.
pub fn write_slopes_csv<W: Write>(w: &mut W, cuts: &[CutRow<'_>]) -> io::Result<()> {
    writeln!(w, "t_us,conditioned_max_slope,unconditioned_max_slope,ratio")?;
    for cut in cuts {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_num(cut.t),
            fmt_num(cut.conditioned_slope),
            fmt_num(cut.unconditioned_slope),
            fmt_num(cut.conditioned_slope / cut.unconditioned_slope)
        )?;
    }
    Ok(())
}

/// `t_us,mean_re,mean_im,stderr,n_selected`.
pub fn write_mc_csv<W: Write>(w: &mut W, avg: &ConditionalAverage) -> io::Result<()> {
    writeln!(w, "t_us,mean_re,mean_im,stderr,n_selected")?;
    for ((t, m), se) in avg.times.iter().zip(&avg.mean).zip(&avg.stderr) {
        writeln!(w, "{},{},{},{},{}", fmt_num(*t), fmt_num(m.re), fmt_num(m.im), fmt_num(*se), avg.n_selected)?;
    }
    Ok(())
}

/// `t_us,mean_re,predicted_re,stderr,z`.
pub fn write_mc_compare_csv<W: Write>(w: &mut W, avg: &ConditionalAverage, cmp: &Comparison) -> io::Result<()> {
    writeln!(w, "t_us,mean_re,predicted_re,stderr,z")?;
    for (k, t) in avg.times.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_num(*t),
            fmt_num(avg.mean[k].re),
            fmt_num(cmp.predicted[k].re),
            fmt_num(avg.stderr[k]),
            fmt_num(cmp.z[k])
        )?;
    }
    Ok(())
}

/// Diverging blue–white–red color for `v ∈ [−vmax, vmax]`.
fn color(v: f64, vmax: f64) -> String {
    let x = (v / vmax).clamp(-1.0, 1.0);
    let (r, g, b) = if x >= 0.0 {
        (1.0, 1.0 - x, 1.0 - x)
    } else {
        (1.0 + x, 1.0 + x, 1.0)
    };
    let c = |f: f64| (f * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(r), c(g), c(b))
}

/// Line segments of the `level` iso-line of `field[i][j]` sampled at
/// `(xs[i], ys[j])`. Cells touching a missing value are skipped.
pub fn marching_squares(xs: &[f64], ys: &[f64], field: &[Vec<Option<f64>>], level: f64) -> Vec<[(f64, f64); 2]> {
    let mut segs = Vec::new();
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals: Option<Vec<f64>> = corners.iter().map(|&(a, b)| field[a][b]).collect();
            let Some(vals) = vals else { continue };
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                let (va, vb) = (vals[a] - level, vals[b] - level);
                if (va > 0.0) != (vb > 0.0) {
                    let s = va / (va - vb);
                    let (pa, pb) = (corners[a], corners[b]);
                    let x = xs[pa.0] + s * (xs[pb.0] - xs[pa.0]);
                    let y = ys[pa.1] + s * (ys[pb.1] - ys[pa.1]);
                    pts.push((x, y));
                }
            }
            match pts.len() {
                2 => segs.push([pts[0], pts[1]]),
                4 => {
                    // saddle: pair edges by the sign of the cell mean
                    let centre = vals.iter().sum::<f64>() / 4.0 - level;
                    if (centre > 0.0) == (vals[0] - level > 0.0) {
                        segs.push([pts[0], pts[3]]);
                        segs.push([pts[1], pts[2]]);
                    } else {
                        segs.push([pts[0], pts[1]]);
                        segs.push([pts[2], pts[3]]);
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

/// Heatmap of `Re value` with time on x and Rabi frequency on y, and the
/// `Re = ±0.5` iso-lines drawn on top.
pub fn render_svg(map: &ConditionalMap) -> String {
    const CELL_W: f64 = 2.0;
    const CELL_H: f64 = 4.0;
    const MARGIN: f64 = 50.0;
    let n_t = map.times.len();
    let n_nu = map.rabi_freqs.len();
    let width = n_t as f64 * CELL_W;
    let height = n_nu as f64 * CELL_H;
    let vmax = map
        .values
        .iter()
        .flatten()
        .flatten()
        .fold(UNCONDITIONAL_BOUND, |m, v| m.max(v.re.abs()));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        fmt_num(width + 2.0 * MARGIN),
        fmt_num(height + 2.0 * MARGIN),
        fmt_num(width + 2.0 * MARGIN),
        fmt_num(height + 2.0 * MARGIN)
    );
    let _ = writeln!(s, r#"<title>{} Re value, |max| {}</title>"#, map.mode.name(), fmt_num(vmax));
    let _ = writeln!(s, r#"<g transform="translate({MARGIN},{MARGIN})" shape-rendering="crispEdges">"#);
    for (it, row) in map.values.iter().enumerate() {
        for (inu, v) in row.iter().enumerate() {
            let fill = v.map_or_else(|| "#808080".to_string(), |v| color(v.re, vmax));
            // higher Rabi frequency towards the top
            let y = (n_nu - 1 - inu) as f64 * CELL_H;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                fmt_num(it as f64 * CELL_W),
                fmt_num(y),
                fmt_num(CELL_W),
                fmt_num(CELL_H),
                fill
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let xs: Vec<f64> = (0..n_t).map(|it| MARGIN + (it as f64 + 0.5) * CELL_W).collect();
    let ys: Vec<f64> = (0..n_nu).map(|inu| MARGIN + (n_nu - 1 - inu) as f64 * CELL_H + 0.5 * CELL_H).collect();
    let field: Vec<Vec<Option<f64>>> = map.values.iter().map(|r| r.iter().map(|v| v.map(|v| v.re)).collect()).collect();
    for level in [UNCONDITIONAL_BOUND, -UNCONDITIONAL_BOUND] {
        let mut d = String::new();
        for [a, b] in marching_squares(&xs, &ys, &field, level) {
            let _ = write!(d, "M{} {}L{} {}", fmt_num(a.0), fmt_num(a.1), fmt_num(b.0), fmt_num(b.1));
        }
        if !d.is_empty() {
            let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="black" stroke-width="1"/>"#);
        }
    }

    let axis_y = MARGIN + height + 15.0;
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}">t = {} us</text>"#, fmt_num(MARGIN), fmt_num(axis_y), fmt_num(map.times[0]));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">t = {} us</text>"#,
        fmt_num(MARGIN + width),
        fmt_num(axis_y),
        fmt_num(*map.times.last().unwrap())
    );
    let _ = writeln!(s, r#"<text x="5" y="{}">{} MHz</text>"#, fmt_num(MARGIN + 4.0), fmt_num(*map.rabi_freqs.last().unwrap()));
    let _ = writeln!(s, r#"<text x="5" y="{}">{} MHz</text>"#, fmt_num(MARGIN + height), fmt_num(map.rabi_freqs[0]));
    s.push_str("</g>\n</svg>\n");
    s
}
