//! CSV, verdict text and SVG emitters.

use std::fmt::Write as _;

use crate::lyapunov::{DecayConstants, DecayReport, DecaySeries};

pub const CSV_HEADER: &str = "t,kinetic_energy,L_beta_integral,f_integral,theta_L1,theta_min,dissipation";

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn series_csv(s: &DecaySeries) -> String {
    let mut out = String::with_capacity(160 * (s.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..s.len() {
        let row = [
            s.t[k],
            s.kinetic_energy[k],
            s.l_beta[k],
            s.f_integral[k],
            s.theta_l1[k],
            s.theta_min[k],
            s.dissipation[k],
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn constants_text(c: &DecayConstants) -> String {
    let mut s = String::new();
    let l = &c.lemma;
    let _ = writeln!(s, "mu      = {:.12e}  (kappa_lo * delta^(p-2) * first Dirichlet eigenvalue)", c.mu);
    let _ = writeln!(s, "K       = {:.12e}  (embedding and lemma constants, data size)", c.k);
    let _ = writeln!(s, "M       = {:.12e}", c.m);
    let _ = writeln!(s, "lambda  = {:.12e}", c.lambda);
    let _ = writeln!(s, "beta    = {:.12e}", c.beta);
    let _ = writeln!(s, "alpha   = {}", c.alpha);
    let _ = writeln!(s, "R       = {:.12e}  (|v0|^2 + |theta0|_1)", c.r);
    let _ = writeln!(s, "theta   in [{}, {}]", c.theta_lo, c.theta_hi);
    let _ = writeln!(s, "C_S(2/(1-alpha)) = {:.12e}  (probe estimate)", c.sobolev);
    let _ = writeln!(s, "C_S(2/alpha)     = {:.12e}  (probe estimate)", c.sobolev_m);
    let _ = writeln!(s, "C_K     = {:.12e}", c.c_k);
    let _ = writeln!(s, "C_M     = {:.12e}", c.c_m);
    let _ = writeln!(
        s,
        "lemma constants: C1 = {:.6e}, C' = {:.6e}, C2 = {:.6e} ({} calibration points, 2x headroom)",
        l.c_lm1, l.c_prime, l.c_lm2, l.grid_points
    );
    s
}

pub fn verdict_text(r: &DecayReport) -> String {
    let mut s = String::new();
    for v in &r.verdicts {
        let _ = writeln!(
            s,
            "[{}] {}: worst ratio {:.6} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.worst_ratio,
            v.detail
        );
    }
    let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    let _ = writeln!(
        s,
        "fitted rates: kinetic {}, L_beta {}, f {} (tolerance {:.0}%)",
        show(r.rates.kinetic),
        show(r.rates.l_beta),
        show(r.rates.f_integral),
        100.0 * r.tolerance
    );
    s
}

/// Log-linear plot of `y(t)` with an optional envelope `A·e^{−rt}`.
pub fn svg_plot(title: &str, t: &[f64], y: &[f64], envelope: Option<(f64, f64)>) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let t0 = t.first().copied().unwrap_or(0.0);
    let t1 = t.last().copied().unwrap_or(1.0).max(t0 + 1e-300);
    let env: Vec<f64> = match envelope {
        Some((a, r)) => t.iter().map(|&x| a * (-r * (x - t0)).exp()).collect(),
        None => Vec::new(),
    };
    let positive = y.iter().chain(&env).copied().filter(|v| *v > 0.0 && v.is_finite());
    let (mut lo, mut hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v.log10()), b.max(v.log10()))
    });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    lo = lo.floor();
    hi = hi.ceil().max(lo + 1.0);
    let px = |x: f64| m + (w - 2.0 * m) * (x - t0) / (t1 - t0);
    let py = |v: f64| h - m - (h - 2.0 * m) * (v.log10() - lo) / (hi - lo);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{title}</text>", w / 2.0);
    let _ = writeln!(
        s,
        "<path d=\"M{m} {m} L{m} {b} L{r} {b}\" stroke=\"black\" fill=\"none\"/>",
        b = h - m,
        r = w - m
    );
    for k in 0..=4 {
        let x = t0 + (t1 - t0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{x:.3}</text>",
            px(x),
            h - m + 16.0
        );
    }
    let mut e = lo as i64;
    while e as f64 <= hi {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">1e{e}</text>",
            m - 6.0,
            py(10f64.powi(e as i32)) + 4.0
        );
        e += 1;
    }
    let line = |vals: &[f64]| -> String {
        t.iter()
            .zip(vals)
            .filter(|(_, v)| **v > 0.0 && v.is_finite())
            .map(|(&x, &v)| format!("{:.2},{:.2}", px(x), py(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(s, "<polyline points=\"{}\" stroke=\"steelblue\" fill=\"none\"/>", line(y));
    if !env.is_empty() {
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" stroke=\"firebrick\" stroke-dasharray=\"6 4\" fill=\"none\"/>",
            line(&env)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_full_precision() {
        let s = DecaySeries {
            t: vec![0.0, 0.1],
            kinetic_energy: vec![0.5, 1.0 / 3.0],
            l_beta: vec![1.0; 2],
            f_integral: vec![0.0; 2],
            theta_l1: vec![1.5; 2],
            theta_min: vec![1.0; 2],
            dissipation: vec![2.0; 2],
        };
        let csv = series_csv(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        let third: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(third, 1.0 / 3.0);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn svg_is_well_formed() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
        let s = svg_plot("kinetic", &t, &y, Some((1.0, 2.0)));
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 2);
    }
}
