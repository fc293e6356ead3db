//! The Lyapunov density `L_β`, its temperature part `f`, the comparison
//! functions `g`, `h̄`, the decay constants and the verdicts on sampled
//! trajectories.

use crate::constitutive::{h_alpha_diff, FluidParams};
use crate::error::{invalid, Result};
use crate::grid::{estimate_mu, sobolev_constant_q, Domain, ScalarField, VectorField};
use crate::inequality_lab::{calibrate, LemmaConstants};
use crate::quadrature::gauss_legendre10;
use crate::steady_state::SteadyTemperature;

fn check_pair(theta: f64, theta_hat: f64, alpha: f64) -> Result<()> {
    if !(theta.is_finite() && theta > 0.0 && theta_hat.is_finite() && theta_hat > 0.0) {
        return Err(invalid(format!(
            "temperatures must be positive (got θ = {theta}, θ̂ = {theta_hat})"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1) (got {alpha})")));
    }
    Ok(())
}

/// `1 − (G(θ̂)/G(z))^α` without cancellation near `z = θ̂`.
#[inline]
fn weight(z: f64, theta_hat: f64, g_hat: f64, alpha: f64, params: &FluidParams) -> f64 {
    let rel = params.g_diff(theta_hat, z) / g_hat;
    -(-alpha * rel.ln_1p()).exp_m1()
}

/// `f(θ, θ̂) = θ − θ̂ − (ℋ^α(θ) − ℋ^α(θ̂))G(θ̂)^α`, no argument checks.
pub fn f_value(theta: f64, theta_hat: f64, alpha: f64, params: &FluidParams) -> f64 {
    if theta == theta_hat {
        return 0.0;
    }
    let g_hat = params.g(theta_hat);
    if (theta - theta_hat).abs() <= 0.5 * theta.min(theta_hat) {
        // f is the integral of ∂f/∂θ from θ̂, which vanishes at θ̂
        let mut pts = vec![theta_hat];
        let mut inner = params.conductivity.breakpoints(theta_hat, theta);
        if theta < theta_hat {
            inner.reverse();
        }
        pts.extend(inner);
        pts.push(theta);
        let v: f64 = pts
            .windows(2)
            .map(|w| gauss_legendre10(|z| weight(z, theta_hat, g_hat, alpha, params), w[0], w[1]))
            .sum();
        return v.max(0.0);
    }
    let dh = h_alpha_diff(theta_hat, theta, alpha, params);
    (theta - theta_hat - dh * g_hat.powf(alpha)).max(0.0)
}

/// `(f, g, h̄)` at `(θ, θ̂)`.
pub fn f_g_hbar(theta: f64, theta_hat: f64, alpha: f64, params: &FluidParams) -> Result<(f64, f64, f64)> {
    check_pair(theta, theta_hat, alpha)?;
    let e = 0.5 * (1.0 - alpha);
    let root_g = (e * (theta / theta_hat).ln()).exp_m1();
    let rel = params.g_diff(theta_hat, theta) / params.g(theta_hat);
    let hbar = (e * rel.ln_1p()).exp_m1();
    Ok((f_value(theta, theta_hat, alpha, params), root_g * root_g, hbar))
}

/// `L_β = β|v|² + f(θ, θ̂)`.
pub fn l_beta_density(
    v_sq: f64,
    theta: f64,
    theta_hat: f64,
    beta: f64,
    alpha: f64,
    params: &FluidParams,
) -> Result<f64> {
    check_pair(theta, theta_hat, alpha)?;
    if !(v_sq >= 0.0 && beta >= 0.0) {
        return Err(invalid("|v|² and β must be nonnegative"));
    }
    Ok(beta * v_sq + f_value(theta, theta_hat, alpha, params))
}

/// `∫_Ω f(θ, θ̂)` by the midpoint rule.
pub fn f_integral(theta: &ScalarField, steady: &SteadyTemperature, alpha: f64, params: &FluidParams) -> f64 {
    theta
        .data
        .iter()
        .zip(&steady.theta_hat.data)
        .map(|(&t, &th)| f_value(t, th, alpha, params))
        .sum::<f64>()
        * theta.domain.cell_area()
}

/// `∫_Ω L_β(v, θ, θ̂)` with `|v|²` averaged from the faces to the centers.
pub fn integrated_l_beta(
    v: &VectorField,
    theta: &ScalarField,
    steady: &SteadyTemperature,
    constants: &DecayConstants,
    params: &FluidParams,
) -> f64 {
    constants.beta * v.speed_squared().integral() + f_integral(theta, steady, constants.alpha, params)
}

/// Size of the initial data entering `K` and `M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialNorms {
    /// `‖v₀‖₂²`
    pub v0_sq: f64,
    /// `‖θ₀‖₁`
    pub theta0_l1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayConstants {
    pub mu: f64,
    pub k: f64,
    pub m: f64,
    pub lambda: f64,
    pub beta: f64,
    pub alpha: f64,
    /// `‖v₀‖₂² + ‖θ₀‖₁`
    pub r: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    /// embedding constant of `‖w‖_{2/(1−α)} ≤ C‖∇w‖₂`
    pub sobolev: f64,
    /// embedding constant of `‖w‖_{2/α} ≤ C‖∇w‖₂`
    pub sobolev_m: f64,
    /// composite constant in front of `θ̄^{1−α}(θ̄/θ̲)^α…` in `K`
    pub c_k: f64,
    /// composite constant in front of `ακ̄^α θ̄^α…` in `M`
    pub c_m: f64,
    pub lemma: LemmaConstants,
}

/// `K` from its composite constant and the data.
pub fn k_formula(c_k: f64, alpha: f64, theta_lo: f64, theta_hi: f64, data: f64, g_theta_lo: f64) -> f64 {
    1.0 / (c_k
        * theta_hi.powf(1.0 - alpha)
        * (theta_hi / theta_lo).powf(alpha)
        * data.powf(alpha)
        * 2.0
        / (alpha * g_theta_lo))
}

/// `M` from its composite constant and the data.
#[allow(clippy::too_many_arguments)]
pub fn m_formula(
    c_m: f64,
    alpha: f64,
    kappa_lo: f64,
    kappa_hi: f64,
    theta_hi: f64,
    v0_sq: f64,
    theta0_l1: f64,
    area: f64,
) -> f64 {
    c_m * alpha * kappa_hi.powf(alpha) * theta_hi.powf(alpha) / (2.0 * kappa_lo.powf(2.0 + alpha))
        * (v0_sq + 2.0 * theta0_l1 + 4.0 * kappa_hi * area).powf(1.0 - alpha)
        + 1.0
}

/// Assembles `μ, K, M, λ, β`. The composite constants come from the
/// probe-based Sobolev estimates and the calibrated lemma constants; each is
/// reported alongside the result.
pub fn compute_constants(
    domain: Domain,
    params: &FluidParams,
    steady: &SteadyTemperature,
    initial: InitialNorms,
    alpha: f64,
    lambda_fraction: f64,
) -> Result<DecayConstants> {
    if !(alpha > 0.5 && alpha <= 2.0 / 3.0) {
        return Err(invalid(format!("alpha must lie in (1/2, 2/3] (got {alpha})")));
    }
    if !(lambda_fraction > 0.0 && lambda_fraction < 1.0) {
        return Err(invalid(format!("lambda_fraction must lie in (0, 1) (got {lambda_fraction})")));
    }
    let mu = estimate_mu(domain, params)?;
    let lemma = calibrate(params, alpha, (steady.theta_lo, steady.theta_hi))?;
    let sobolev = sobolev_constant_q(domain, 2.0 / (1.0 - alpha))?;
    let sobolev_m = sobolev_constant_q(domain, 2.0 / alpha)?;
    let c_k = 3.0 * lemma.c_lm2 * sobolev * sobolev * (1.0 - alpha).powi(2) / 4.0;
    let c_m = 2.0 * sobolev_m * sobolev_m;
    let (tl, th) = (steady.theta_lo, steady.theta_hi);
    let area = domain.area();
    let data = 2.0 * initial.theta0_l1 + initial.v0_sq + 2.0 * th * area;
    let k = k_formula(c_k, alpha, tl, th, data, params.g(tl));
    let m = m_formula(
        c_m,
        alpha,
        params.kappa_lo,
        params.kappa_hi,
        th,
        initial.v0_sq,
        initial.theta0_l1,
        area,
    );
    let lambda = lambda_fraction * mu.min(k);
    Ok(DecayConstants {
        mu,
        k,
        m,
        lambda,
        beta: 2.0 * m * mu / (mu - lambda),
        alpha,
        r: initial.v0_sq + initial.theta0_l1,
        theta_lo: tl,
        theta_hi: th,
        sobolev,
        sobolev_m,
        c_k,
        c_m,
        lemma,
    })
}

/// Sampled diagnostics along a trajectory. `kinetic_energy` is `‖v‖₂²/2`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecaySeries {
    pub t: Vec<f64>,
    pub kinetic_energy: Vec<f64>,
    pub l_beta: Vec<f64>,
    pub f_integral: Vec<f64>,
    pub theta_l1: Vec<f64>,
    pub theta_min: Vec<f64>,
    pub dissipation: Vec<f64>,
}

impl DecaySeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.t.len();
        for (name, s) in [
            ("kinetic_energy", &self.kinetic_energy),
            ("l_beta", &self.l_beta),
            ("f_integral", &self.f_integral),
            ("theta_l1", &self.theta_l1),
            ("theta_min", &self.theta_min),
            ("dissipation", &self.dissipation),
        ] {
            if s.len() != n {
                return Err(invalid(format!("series {name} has {} samples, t has {n}", s.len())));
            }
        }
        if self.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("sample times must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    /// largest `observed / allowed` over the checked pairs
    pub worst_ratio: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedRates {
    pub kinetic: Option<f64>,
    pub l_beta: Option<f64>,
    pub f_integral: Option<f64>,
}

/// Least-squares slope of `−ln y` against `t` over the last 80% of samples.
pub fn fitted_rate(t: &[f64], y: &[f64]) -> Option<f64> {
    let start = t.len() / 5;
    let pts: Vec<(f64, f64)> = t[start..]
        .iter()
        .zip(&y[start..])
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = -sxy / sxx;
    slope.is_finite().then_some(slope)
}

/// Checks `y(τ) ≤ (1 + tol)·e^{−rate(τ−σ)}·y(σ)` on every pair `σ < τ`.
pub fn envelope_verdict(name: &str, t: &[f64], y: &[f64], rate: f64, tol: f64) -> Verdict {
    let mut worst = 0.0f64;
    let mut at = (0.0, 0.0);
    for s in 0..t.len() {
        for u in s + 1..t.len() {
            let allowed = (-rate * (t[u] - t[s])).exp() * y[s];
            let ratio = if allowed > 0.0 {
                y[u] / allowed
            } else if y[u] <= 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            if ratio > worst {
                worst = ratio;
                at = (t[s], t[u]);
            }
        }
    }
    Verdict {
        name: name.to_string(),
        // a few ulps from exp and the products
        pass: worst <= (1.0 + tol) * (1.0 + 64.0 * f64::EPSILON),
        worst_ratio: worst,
        detail: format!(
            "rate {rate:.6}, tolerance {:.0}%, worst pair σ = {:.4}, τ = {:.4}",
            100.0 * tol,
            at.0,
            at.1
        ),
    }
}

/// Verdicts on a sampled trajectory:
/// the kinetic envelope at rate `μ`, the combined quantity
/// `(Mμ/2(μ−λ))‖v‖² + ∫f` at rate `λ` and `∫L_β` at rate `λ`.
pub fn fit_and_verify(series: &DecaySeries, constants: &DecayConstants, tol: f64) -> Result<(FittedRates, Vec<Verdict>)> {
    series.check()?;
    let DecayConstants { mu, lambda, m, .. } = *constants;
    let v_sq: Vec<f64> = series.kinetic_energy.iter().map(|e| 2.0 * e).collect();
    let weight = m * mu / (2.0 * (mu - lambda));
    let combined: Vec<f64> = v_sq
        .iter()
        .zip(&series.f_integral)
        .map(|(v, f)| weight * v + f)
        .collect();
    let verdicts = vec![
        envelope_verdict("kinetic_decay", &series.t, &v_sq, mu, tol),
        envelope_verdict("lyapunov_combined", &series.t, &combined, lambda, tol),
        envelope_verdict("lyapunov_l_beta", &series.t, &series.l_beta, lambda, tol),
    ];
    let rates = FittedRates {
        kinetic: fitted_rate(&series.t, &v_sq),
        l_beta: fitted_rate(&series.t, &series.l_beta),
        f_integral: fitted_rate(&series.t, &series.f_integral),
    };
    Ok((rates, verdicts))
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    pub series: DecaySeries,
    pub constants: DecayConstants,
    pub rates: FittedRates,
    pub verdicts: Vec<Verdict>,
    pub tolerance: f64,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::Profile;

    fn unit() -> FluidParams {
        FluidParams::constant(2.0, 1.0, 1.0)
    }

    fn rational() -> FluidParams {
        FluidParams::new(2.5, 1.0, 1.0, 2.0, Profile::Rational { lo: 1.0, hi: 2.0 })
    }

    #[test]
    fn coincidence_point_is_zero() {
        assert_eq!(f_g_hbar(2.0, 2.0, 0.6, &rational()).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn closed_form_example() {
        let (f, g, h) = f_g_hbar(4.0, 1.0, 0.5, &unit()).unwrap();
        let s2 = 2f64.sqrt();
        assert!((f - 1.0).abs() < 1e-14);
        assert!((g - (s2 - 1.0).powi(2)).abs() < 1e-15);
        assert!((h - (s2 - 1.0)).abs() < 1e-15);
        assert!((l_beta_density(0.0, 4.0, 1.0, 0.0, 0.5, &unit()).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(l_beta_density(2.0, 1.3, 1.3, 1.0, 0.5, &unit()).unwrap(), 2.0);
        assert_eq!(l_beta_density(0.0, 1.3, 1.3, 3.0, 0.5, &unit()).unwrap(), 0.0);
    }

    #[test]
    fn both_branches_agree_at_the_switch() {
        let p = rational();
        let th = 1.4;
        let a = f_value(th * 1.4999999, th, 0.6, &p);
        let b = f_value(th * 1.5000001, th, 0.6, &p);
        assert!((a - b).abs() < 1e-6 * a);
    }

    #[test]
    fn second_derivative_matches_formula() {
        let p = rational();
        let (alpha, th) = (0.6, 1.3);
        for theta in [0.2, 1.0, 1.31, 3.0, 40.0] {
            let h = 1e-3 * theta;
            let d2 = (f_value(theta + h, th, alpha, &p) - 2.0 * f_value(theta, th, alpha, &p)
                + f_value(theta - h, th, alpha, &p))
                / (h * h);
            let exact = alpha * p.kappa(theta) * p.g(th).powf(alpha) / p.g(theta).powf(alpha + 1.0);
            assert!((d2 - exact).abs() < 1e-5 * exact, "θ={theta}: {d2} vs {exact}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(f_g_hbar(0.0, 1.0, 0.5, &unit()).is_err());
        assert!(f_g_hbar(1.0, 1.0, 1.0, &unit()).is_err());
        assert!(l_beta_density(-1.0, 1.0, 1.0, 1.0, 0.5, &unit()).is_err());
    }

    #[test]
    fn envelope_examples() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
        let e: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let v = envelope_verdict("k", &t, &e, 2.0, 0.05);
        assert!(v.pass && (v.worst_ratio - 1.0).abs() < 1e-12);
        let slow: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        assert!(!envelope_verdict("k", &t, &slow, 2.0, 0.05).pass);
        assert!((fitted_rate(&t, &e).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn k_decreases_when_kappa_hi_doubles() {
        // the lemma constants scale with κ̄/κ̲, the rest of K is fixed
        let (alpha, c_s) = (0.6, 0.3);
        let k_of = |kappa_hi: f64| {
            let ratio = kappa_hi / 1.0;
            let c_lm1 = 1.7 * ratio;
            let c_prime = 0.9 * ratio.powf((3.0 + alpha) / 2.0);
            let c_k = 3.0 * c_lm1 * c_prime * c_prime * c_s * c_s * (1.0 - alpha).powi(2) / 4.0;
            let p = FluidParams::new(2.5, 1.0, 1.0, kappa_hi, Profile::Rational { lo: 1.0, hi: kappa_hi });
            k_formula(c_k, alpha, 1.0, 2.0, 5.0, p.g(1.0))
        };
        assert!(k_of(4.0) < k_of(2.0));
    }
}
