//! Truncations and entropy-weight integrals built on the Kirchhoff primitive.

use super::FluidParams;
use crate::error::{invalid, Result};
use crate::quadrature;

/// `T_k(z) = sign(z)·min(|z|, k)`.
#[inline]
pub fn cutoff_tk(z: f64, k: f64) -> f64 {
    debug_assert!(k > 0.0);
    z.signum() * z.abs().min(k)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1) (got {alpha})")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite (got {v})")))
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k >= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("truncation level k must be at least 1 (got {k})")))
    }
}

/// `ℋ^α(s) = ∫_1^s G(z)^{−α} dz`.
pub fn h_alpha(s: f64, alpha: f64, params: &FluidParams) -> Result<f64> {
    check_positive("s", s)?;
    check_alpha(alpha)?;
    Ok(h_alpha_diff(1.0, s, alpha, params))
}

/// `∫_a^b G(z)^{−α} dz` for positive `a`, `b`; no argument checks.
pub fn h_alpha_diff(a: f64, b: f64, alpha: f64, params: &FluidParams) -> f64 {
    if a == b {
        return 0.0;
    }
    if let super::Profile::Constant(c) = params.conductivity {
        let e = 1.0 - alpha;
        return c.powf(-alpha) * a.powf(e) * (e * (b / a).ln()).exp_m1() / e;
    }
    let mut pts = vec![a];
    let mut inner = params.conductivity.breakpoints(a, b);
    if b < a {
        inner.reverse();
    }
    pts.extend(inner);
    pts.push(b);
    pts.windows(2)
        .map(|w| h_alpha_panel(w[0], w[1], alpha, params))
        .sum()
}

fn h_alpha_panel(a: f64, b: f64, alpha: f64, params: &FluidParams) -> f64 {
    if (b - a).abs() <= 0.25 * a.min(b) {
        return quadrature::gauss_legendre10(|z| params.g(z).powf(-alpha), a, b);
    }
    // z = e^w removes the z^{-α} behaviour near zero and the scale spread
    let f = |w: f64| {
        let z = w.exp();
        params.g(z).powf(-alpha) * z
    };
    quadrature::gauss_kronrod(f, a.ln(), b.ln(), 1e-13)
        .unwrap_or_else(|_| quadrature::composite_gauss_legendre(f, a.ln(), b.ln(), 256))
}

/// `ℱ_k(s) = ∫_1^s T_k(z)/z dz`.
pub fn fk(s: f64, k: f64) -> Result<f64> {
    check_positive("s", s)?;
    check_k(k)?;
    if s <= k {
        Ok(s - 1.0)
    } else {
        Ok(k - 1.0 + k * (s / k).ln())
    }
}

/// `ℱ_k^α(s) = ∫_1^s T_k(z)/z · G(T_k(z))^{−α} dz`.
pub fn fk_alpha(s: f64, k: f64, alpha: f64, params: &FluidParams) -> Result<f64> {
    check_positive("s", s)?;
    check_k(k)?;
    check_alpha(alpha)?;
    if s <= k {
        Ok(h_alpha_diff(1.0, s, alpha, params))
    } else {
        Ok(h_alpha_diff(1.0, k, alpha, params) + k * params.g(k).powf(-alpha) * (s / k).ln())
    }
}

/// `A_k(s) = ∫_{−∞}^s T_k(e^τ)(e^τ − θ̄)_+ / e^τ dτ`, closed form.
pub fn a_k(s: f64, k: f64, theta_hi: f64) -> f64 {
    let l = theta_hi.ln();
    if s <= l {
        return 0.0;
    }
    if k <= theta_hi {
        return k * ((s - l) - 1.0 + theta_hi * (-s).exp());
    }
    let kl = k.ln();
    let m = s.min(kl);
    let mut total = m.exp() - theta_hi - theta_hi * (m - l);
    if s > kl {
        total += k * (s - kl) + k * theta_hi * (-s).exp() - theta_hi;
    }
    total
}

/// Pointwise limit of [`a_k`] as `k → ∞`.
pub fn a_k_limit(s: f64, theta_hi: f64) -> f64 {
    (s.exp() - theta_hi).max(0.0) - theta_hi * (s - theta_hi.ln()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::super::Profile;
    use super::*;

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_tk(5.0, 3.0), 3.0);
        assert_eq!(cutoff_tk(-5.0, 3.0), -3.0);
        assert_eq!(cutoff_tk(2.0, 3.0), 2.0);
    }

    #[test]
    fn h_alpha_constant_closed_form() {
        let p = FluidParams::constant(2.0, 1.0, 1.0);
        assert!((h_alpha(4.0, 0.5, &p).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(h_alpha(1.0, 0.5, &p).unwrap(), 0.0);
        assert!(h_alpha(0.0, 0.5, &p).is_err());
        assert!(h_alpha(2.0, 1.0, &p).is_err());
    }

    #[test]
    fn fk_examples() {
        assert_eq!(fk(4.0, 10.0).unwrap(), 3.0);
        let v = fk(4.0, 2.0).unwrap();
        assert!((v - (1.0 + 2.0 * std::f64::consts::LN_2)).abs() < 1e-15);
        let p = FluidParams::new(2.0, 1.0, 1.0, 2.0, Profile::Rational { lo: 1.0, hi: 2.0 });
        for k in [1.0, 3.0, 100.0] {
            assert_eq!(fk_alpha(1.0, k, 0.6, &p).unwrap(), 0.0);
        }
        assert!(fk(1.0, 0.5).is_err());
    }

    #[test]
    fn a_k_closed_form_matches_branches() {
        let th = 2.0;
        assert_eq!(a_k(0.1, 8.0, th), 0.0);
        let s = (2.0 * th).ln();
        // k above e^s: the truncation is inactive
        assert!((a_k(s, 8.0, th) - a_k_limit(s, th)).abs() < 1e-14);
        assert!(a_k(s, 3.0, th) < a_k_limit(s, th));
        assert!(a_k(s, 1.0, th) < a_k(s, 3.0, th));
    }
}
