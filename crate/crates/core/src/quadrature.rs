//! One-dimensional quadrature rules.
//!
//! Adaptive Simpson backs the generic Kirchhoff primitive, adaptive
//! Gauss–Kronrod (7/15) backs the entropy-weight integral, and fixed
//! Gauss–Legendre panels are used where the integrand is known to be smooth.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance `rtol`
/// (an absolute floor of `rtol * 1e-3` guards integrals that vanish).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget = Budget { err: 0.0 };
    let value = simpson_step(&f, a, b, fa, fm, fb, whole, rtol, 0, &mut budget);
    let scale = value.abs().max(rtol * 1e-3);
    if budget.err > 1e3 * rtol * scale {
        return Err(Error::OracleFailure {
            a,
            b,
            error: budget.err,
        });
    }
    Ok(value)
}

struct Budget {
    err: f64,
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    rtol: f64,
    depth: u32,
    budget: &mut Budget,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let both = left + right;
    let diff = both - whole;
    let tol = rtol * both.abs().max(1e-300);
    if depth >= 6 && (diff.abs() <= 15.0 * tol || depth >= MAX_DEPTH || (b - a).abs() < 1e-15 * a.abs().max(1.0)) {
        if depth >= MAX_DEPTH {
            budget.err += diff.abs();
        }
        return both + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, rtol, depth + 1, budget)
        + simpson_step(f, m, b, fm, frm, fb, right, rtol, depth + 1, budget)
}

// Kronrod 15-point nodes and weights; the Gauss 7-point rule uses every other node.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod 7/15 quadrature to relative tolerance `rtol`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v0, e0) = gk15(&f, a, b);
    let mut panels = vec![(a, b, v0, e0)];
    let mut total = v0;
    let mut err = e0;
    for _ in 0..2000 {
        if err <= rtol * total.abs() || err < 1e-300 {
            return Ok(total);
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty panel list");
        let (pa, pb, pv, pe) = panels.swap_remove(idx);
        let pm = 0.5 * (pa + pb);
        let (lv, le) = gk15(&f, pa, pm);
        let (rv, re) = gk15(&f, pm, pb);
        total += lv + rv - pv;
        err += le + re - pe;
        panels.push((pa, pm, lv, le));
        panels.push((pm, pb, rv, re));
    }
    // Recompute the sums to shed accumulated cancellation before judging.
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    if err <= 10.0 * rtol * total.abs() {
        Ok(total)
    } else {
        Err(Error::OracleFailure { a, b, error: err })
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl10() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(10))
}

/// Ten-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre10<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (x, w) = gl10();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

/// Composite ten-point Gauss–Legendre on `panels` equal subintervals.
pub fn composite_gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            gauss_legendre10(&f, lo, lo + h)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_log_density() {
        let v = adaptive_simpson(|z| 1.0 / (1.0 + z), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn kronrod_handles_power_singularity_in_log_variable() {
        // ∫_{1e-3}^{1} z^{-0.6} dz via z = e^w
        let v = gauss_kronrod(|w: f64| (0.4 * w).exp(), (1e-3f64).ln(), 0.0, 1e-13).unwrap();
        let exact = (1.0 - 1e-3f64.powf(0.4)) / 0.4;
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn legendre_rule_is_exact_for_degree_19() {
        let (x, w) = gauss_legendre_rule(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(adaptive_simpson(|x| x, 2.0, 2.0, 1e-10).unwrap(), 0.0);
        assert_eq!(gauss_kronrod(|x| x, 2.0, 2.0, 1e-10).unwrap(), 0.0);
    }
}
