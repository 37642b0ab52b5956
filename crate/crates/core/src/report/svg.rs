use std::fmt::Write;

use crate::deviation::DeviationReport;
use crate::search::CandidateOutcome;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;

/// Colour ramp from white (0) to dark red (1).
fn ramp(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let r = 255.0 - 115.0 * v;
    let g = 255.0 - 255.0 * v;
    let b = 255.0 - 255.0 * v;
    format!(
        "#{:02x}{:02x}{:02x}",
        r.round() as u8,
        g.round() as u8,
        b.round() as u8
    )
}

/// Static summary: global average deviation per candidate (enumeration
/// order, optimum highlighted) and the optimum's deviation heatmap.
pub fn summary_svg(
    outcomes: &[CandidateOutcome],
    optimum: &str,
    optimum_report: Option<&DeviationReport>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    // bar chart
    let (x0, y0, w, h) = (60.0, 40.0, 380.0, 320.0);
    let max = outcomes
        .iter()
        .filter_map(|o| o.row.j_hat)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="13">Global average deviation [mm]</text>"#,
        x0 + w / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        y0 + h,
        x0 + w,
        y0 + h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{}" stroke="black"/>"#,
        y0 + h
    );
    for q in 0..=4 {
        let v = max * q as f64 / 4.0;
        let y = y0 + h - h * q as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            x0 - 4.0,
            y + 4.0
        );
    }
    let slot = w / outcomes.len().max(1) as f64;
    for (i, o) in outcomes.iter().enumerate() {
        let x = x0 + slot * i as f64 + slot * 0.15;
        let cx = x0 + slot * (i as f64 + 0.5);
        match o.row.j_hat {
            Some(v) => {
                let bh = h * v / max;
                let fill = if o.row.label == optimum {
                    "#b22222"
                } else {
                    "#4682b4"
                };
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{bh:.1}" fill="{fill}"/>"#,
                    y0 + h - bh,
                    slot * 0.7
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle" fill="red">FAILED</text>"#,
                    y0 + h - 6.0
                );
            }
        }
        let num = o.row.label.trim_start_matches("alpha_");
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">α{num}</text>"#,
            y0 + h + 16.0
        );
    }

    // heatmap
    let (hx, hy, hw, hh) = (520.0, 40.0, 340.0, 320.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="13">Deviation of {optimum} [mm]</text>"#,
        hx + hw / 2.0
    );
    if let Some(rep) = optimum_report {
        let peak = rep
            .delta
            .iter()
            .flatten()
            .fold(0.0f64, |a, &b| a.max(b))
            .max(1e-12);
        let (cw, ch) = (hw / rep.j as f64, hh / rep.k as f64);
        for (m, row) in rep.delta.iter().enumerate() {
            for (l, d) in row.iter().enumerate() {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    hx + cw * l as f64,
                    hy + hh - ch * (m + 1) as f64,
                    cw + 0.05,
                    ch + 0.05,
                    ramp(d / peak)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">length %</text>"#,
            hx + hw / 2.0,
            hy + hh + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">time %</text>"#,
            hx - 10.0,
            hy + hh / 2.0,
            hx - 10.0,
            hy + hh / 2.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">max {peak:.4}</text>"#,
            hx + hw,
            hy + hh + 32.0
        );
    }
    s.push_str("</svg>\n");
    s
}
