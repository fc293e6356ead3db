//! Numerical embedding constants: the first Dirichlet eigenvalue behind the
//! velocity decay rate and a probe-based Sobolev constant.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DirichletLaplacian, Domain};
use crate::constitutive::FluidParams;
use crate::error::{invalid, Error, Result};

const EIG_TOL: f64 = 1e-8;

/// Smallest eigenvalue of the cell-centered Dirichlet `−Δ_h`, by inverse
/// power iteration with a conjugate-gradient inner solve.
pub fn dirichlet_lambda1(domain: Domain) -> Result<f64> {
    let a = DirichletLaplacian::new(domain);
    let n = domain.n_cells();
    let area = domain.cell_area();
    let mut x = vec![1.0; n];
    let mut lambda = a.energy(&x) / x.iter().map(|v| v * v).sum::<f64>() / area;
    let mut y = vec![0.0; n];
    for it in 0..500 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        y.copy_from_slice(&x);
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.solve(&x, &mut y, 1e-10 * scale)?;
        let yy: f64 = y.iter().map(|v| v * v).sum();
        // Rayleigh quotient of the new iterate
        let next = a.energy(&y) / yy / area;
        std::mem::swap(&mut x, &mut y);
        if it > 0 && (next - lambda).abs() <= EIG_TOL * next {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::ConvergenceFailure {
        solver: "inverse power iteration",
        iterations: 500,
        residual: lambda,
    })
}

/// Velocity decay rate `μ = κ̲·δ^{p−2}·λ₁` from the coercivity chain
/// `S:D ≥ κ̲δ^{p−2}|D|²` and the Korn identity `∫|∇v|² = 2∫|Dv|²`.
pub fn estimate_mu(domain: Domain, params: &FluidParams) -> Result<f64> {
    if !(params.p >= 2.0) {
        return Err(Error::UnsupportedRegime(format!(
            "the exponential rate needs p ≥ 2 (got p = {}); use the appendixb path",
            params.p
        )));
    }
    if params.delta == 0.0 && params.p > 2.0 {
        return Err(Error::UnsupportedRegime(
            "delta = 0 with p > 2 has no exponential rate; use the appendixb path".into(),
        ));
    }
    let lambda1 = dirichlet_lambda1(domain)?;
    Ok(params.kappa_lo * params.delta.powf(params.p - 2.0) * lambda1)
}

/// `‖w‖_q / ‖∇w‖₂` for a zero-trace cell field.
pub fn sobolev_ratio(domain: Domain, w: &[f64], q: f64) -> f64 {
    let a = DirichletLaplacian::new(domain);
    let lq = (w.iter().map(|v| v.abs().powf(q)).sum::<f64>() * domain.cell_area()).powf(1.0 / q);
    lq / a.energy(w).sqrt()
}

fn probe_family(domain: Domain) -> Vec<Vec<f64>> {
    let (lx, ly) = (domain.lx, domain.ly);
    let sample = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        let mut out = Vec::with_capacity(domain.n_cells());
        for j in 0..domain.ny {
            for i in 0..domain.nx {
                let (x, y) = domain.cell_center(i, j);
                out.push(f(x / lx, y / ly));
            }
        }
        out
    };
    let mut probes = Vec::new();
    for k in 1..=3 {
        for l in 1..=3 {
            let (k, l) = (k as f64, l as f64);
            probes.push(sample(&|x, y| (k * PI * x).sin() * (l * PI * y).sin()));
        }
    }
    for gamma in [1.5, 2.0, 3.0] {
        probes.push(sample(&|x, y| ((PI * x).sin() * (PI * y).sin()).powf(gamma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..16 {
        let c: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        probes.push(sample(&|x, y| {
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    s += c[3 * k + l]
                        * ((k + 1) as f64 * PI * x).sin()
                        * ((l + 1) as f64 * PI * y).sin();
                }
            }
            s
        }));
    }
    probes
}

/// Largest `‖w‖_q/‖∇w‖₂` over a fixed probe family of zero-trace fields:
/// sine products, powers of the first eigenfunction and seeded low-mode
/// combinations. A lower estimate of the best constant.
pub fn sobolev_constant_q(domain: Domain, q: f64) -> Result<f64> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(invalid(format!("embedding exponent must be at least 1 (got {q})")));
    }
    Ok(probe_family(domain)
        .iter()
        .map(|w| sobolev_ratio(domain, w, q))
        .fold(0.0, f64::max))
}

/// Embedding constant in `‖w‖_{2/(1−α)} ≤ C‖∇w‖₂` for `α ∈ (1/2, 2/3]`.
pub fn estimate_sobolev_constant(domain: Domain, alpha: f64) -> Result<f64> {
    if !(alpha > 0.5 && alpha <= 2.0 / 3.0) {
        return Err(invalid(format!("alpha must lie in (1/2, 2/3] (got {alpha})")));
    }
    sobolev_constant_q(domain, 2.0 / (1.0 - alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::Profile;

    fn exact_lambda1(d: Domain) -> f64 {
        let sx = (PI * d.hx() / (2.0 * d.lx)).sin();
        let sy = (PI * d.hy() / (2.0 * d.ly)).sin();
        4.0 * sx * sx / (d.hx() * d.hx()) + 4.0 * sy * sy / (d.hy() * d.hy())
    }

    #[test]
    fn lambda1_matches_discrete_formula() {
        for d in [Domain::unit_square(16), Domain::new(2.0, 0.5, 12, 8).unwrap()] {
            let l = dirichlet_lambda1(d).unwrap();
            assert!((l - exact_lambda1(d)).abs() < 1e-7 * l);
        }
    }

    #[test]
    fn mu_scales_with_kappa_and_domain() {
        let d = Domain::unit_square(16);
        let p1 = FluidParams::new(2.5, 1.0, 1.0, 2.0, Profile::Rational { lo: 1.0, hi: 2.0 });
        let p2 = FluidParams::new(2.5, 1.0, 2.0, 4.0, Profile::Rational { lo: 2.0, hi: 4.0 });
        let m1 = estimate_mu(d, &p1).unwrap();
        assert!((estimate_mu(d, &p2).unwrap() - 2.0 * m1).abs() < 1e-7 * m1);
        let big = Domain::new(2.0, 2.0, 16, 16).unwrap();
        assert!((estimate_mu(big, &p1).unwrap() - m1 / 4.0).abs() < 1e-7 * m1);
    }

    #[test]
    fn mu_rejects_unsupported_regimes() {
        let d = Domain::unit_square(8);
        let mut p = FluidParams::constant(2.5, 0.0, 1.0);
        assert!(matches!(estimate_mu(d, &p), Err(Error::UnsupportedRegime(_))));
        p.p = 1.5;
        p.delta = 1.0;
        assert!(matches!(estimate_mu(d, &p), Err(Error::UnsupportedRegime(_))));
    }

    #[test]
    fn eigenfunction_ratio_is_direct() {
        let d = Domain::unit_square(24);
        let q = 2.0 / (1.0 - 0.6);
        let phi: Vec<f64> = (0..d.n_cells())
            .map(|k| {
                let (x, y) = d.cell_center(k % d.nx, k / d.nx);
                (PI * x).sin() * (PI * y).sin()
            })
            .collect();
        let area = d.cell_area();
        let l2 = (phi.iter().map(|v| v * v).sum::<f64>() * area).sqrt();
        let lq = (phi.iter().map(|v| v.abs().powf(q)).sum::<f64>() * area).powf(1.0 / q);
        let expected = exact_lambda1(d).powf(-0.5) * lq / l2;
        assert!((sobolev_ratio(d, &phi, q) - expected).abs() < 1e-12 * expected);
        assert!(estimate_sobolev_constant(d, 0.6).unwrap() >= expected);
    }

    #[test]
    fn sobolev_estimate_is_stable_under_refinement() {
        let mut prev = 0.0;
        for n in [16, 32, 64] {
            let c = estimate_sobolev_constant(Domain::unit_square(n), 0.6).unwrap();
            assert!(c >= 0.99 * prev, "n={n}: {c} < {prev}");
            prev = c;
        }
        assert!(estimate_sobolev_constant(Domain::unit_square(8), 0.5).is_err());
    }
}
