//! Pointwise constitutive relations: the power-law stress, the conductivity
//! primitive `G` (Kirchhoff transform) and the auxiliary scalar functions
//! used by the entropy estimates.

mod auxiliary;
mod profile;

pub use auxiliary::{a_k, a_k_limit, cutoff_tk, fk, fk_alpha, h_alpha, h_alpha_diff};
pub use profile::{Profile, Table};

use crate::error::{ensure_finite, invalid, Result};

/// Symmetric 2×2 tensor stored by its three independent components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn diag(xx: f64, yy: f64) -> Self {
        Self { xx, xy: 0.0, yy }
    }

    /// Frobenius contraction `A:B`.
    pub fn ddot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(c * self.xx, c * self.xy, c * self.yy)
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

/// Constitutive configuration of the fluid.
///
/// `conductivity` and `viscosity` must stay within `[kappa_lo, kappa_hi]`; the
/// optional `capacity` profile is the derivative `e′` of the internal-energy
/// map `e(θ) = ∫_0^θ e′`, bounded the same way.
#[derive(Clone, Debug)]
pub struct FluidParams {
    pub p: f64,
    pub delta: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub conductivity: Profile,
    pub viscosity: Profile,
    pub capacity: Option<Profile>,
}

impl FluidParams {
    /// Power-law fluid with the default rational viscosity
    /// `ν(θ) = κ̲ + (κ̄ − κ̲)/(1 + θ)` and the given conductivity.
    pub fn new(p: f64, delta: f64, kappa_lo: f64, kappa_hi: f64, conductivity: Profile) -> Self {
        Self {
            p,
            delta,
            kappa_lo,
            kappa_hi,
            conductivity,
            viscosity: Profile::Rational {
                lo: kappa_lo,
                hi: kappa_hi,
            },
            capacity: None,
        }
    }

    /// Constant conductivity and viscosity `c`, Newtonian when `p = 2`.
    pub fn constant(p: f64, delta: f64, c: f64) -> Self {
        Self {
            p,
            delta,
            kappa_lo: c,
            kappa_hi: c,
            conductivity: Profile::Constant(c),
            viscosity: Profile::Constant(c),
            capacity: None,
        }
    }

    pub fn with_viscosity(mut self, viscosity: Profile) -> Self {
        self.viscosity = viscosity;
        self
    }

    pub fn with_capacity(mut self, capacity: Profile) -> Self {
        self.capacity = Some(capacity);
        self
    }

    /// Checks every range and samples the profiles against the bounds.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.p.is_finite() && self.p >= 2.0) {
            problems.push(format!("p ≥ 2 required in 2D (got {})", self.p));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            problems.push(format!("delta must lie in [0, 1] (got {})", self.delta));
        }
        if !(self.kappa_lo.is_finite() && self.kappa_lo > 0.0) {
            problems.push(format!("kappa_lo must be positive (got {})", self.kappa_lo));
        }
        if !(self.kappa_hi.is_finite() && self.kappa_hi >= self.kappa_lo) {
            problems.push(format!(
                "kappa_hi must be at least kappa_lo (got {} < {})",
                self.kappa_hi, self.kappa_lo
            ));
        }
        if problems.is_empty() {
            let slack = 1e-12 * self.kappa_hi;
            let mut check = |label: &str, prof: &Profile| {
                let (lo, hi) = prof.sampled_range();
                if lo < self.kappa_lo - slack || hi > self.kappa_hi + slack {
                    problems.push(format!(
                        "{label} profile {} leaves [{}, {}] (sampled range [{lo}, {hi}])",
                        prof.name(),
                        self.kappa_lo,
                        self.kappa_hi
                    ));
                }
            };
            check("conductivity", &self.conductivity);
            check("viscosity", &self.viscosity);
            if let Some(c) = &self.capacity {
                check("capacity", c);
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(invalid(problems.join("; ")))
        }
    }

    pub fn kappa(&self, theta: f64) -> f64 {
        self.conductivity.value(theta)
    }

    pub fn nu(&self, theta: f64) -> f64 {
        self.viscosity.value(theta)
    }

    /// Kirchhoff primitive without argument checks, for hot loops.
    #[inline]
    pub fn g(&self, s: f64) -> f64 {
        self.conductivity.primitive(s)
    }

    /// `G(b) − G(a)` without cancellation.
    #[inline]
    pub fn g_diff(&self, a: f64, b: f64) -> f64 {
        self.conductivity.primitive_diff(a, b)
    }

    #[inline]
    pub fn g_inv(&self, u: f64) -> f64 {
        self.conductivity
            .primitive_inverse(u, self.kappa_lo, self.kappa_hi)
    }

    /// Scalar factor `ν(θ)(δ + |D|)^{p−2}` of the stress.
    #[inline]
    pub fn stress_factor(&self, theta: f64, dnorm: f64) -> f64 {
        self.nu(theta) * (self.delta + dnorm).powf(self.p - 2.0)
    }
}

/// Power-law stress `S(θ, D) = ν(θ)(δ + |D|)^{p−2} D`.
pub fn stress(theta: f64, d: &SymTensor2, params: &FluidParams) -> Result<SymTensor2> {
    ensure_finite("theta", theta)?;
    if !d.is_finite() {
        return Err(invalid("shear rate must be finite"));
    }
    if theta <= 0.0 {
        return Err(invalid(format!("temperature must be positive (got {theta})")));
    }
    Ok(d.scale(params.stress_factor(theta, d.norm())))
}

/// `G(s) = ∫_0^s κ`.
pub fn kirchhoff_g(s: f64, params: &FluidParams) -> Result<f64> {
    ensure_finite("s", s)?;
    if s < 0.0 {
        return Err(invalid(format!("Kirchhoff argument must be nonnegative (got {s})")));
    }
    Ok(params.g(s))
}

/// Inverse of [`kirchhoff_g`].
pub fn kirchhoff_g_inverse(u: f64, params: &FluidParams) -> Result<f64> {
    ensure_finite("u", u)?;
    if u < 0.0 {
        return Err(invalid(format!("Kirchhoff value must be nonnegative (got {u})")));
    }
    Ok(params.g_inv(u))
}

/// Rewrites a fluid with heat capacity `e(θ)` in the rescaled temperature
/// `Θ = e(θ)`: conductivity `κ(e⁻¹(Θ))/e′(e⁻¹(Θ))`, viscosity `ν(e⁻¹(Θ))`.
pub fn rescale_capacity(params: &FluidParams) -> Result<FluidParams> {
    let capacity = params
        .capacity
        .clone()
        .ok_or_else(|| invalid("rescale_capacity needs a capacity profile"))?;
    let (lo, hi) = capacity.sampled_range();
    if !(lo > 0.0) {
        return Err(invalid("capacity map must be strictly increasing (e′ > 0)"));
    }
    if lo < params.kappa_lo * (1.0 - 1e-12) || hi > params.kappa_hi * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "capacity derivative leaves [{}, {}] (sampled [{lo}, {hi}])",
            params.kappa_lo, params.kappa_hi
        )));
    }
    let mut out = params.clone();
    out.capacity = None;
    if matches!(capacity, Profile::Constant(c) if c == 1.0) {
        return Ok(out);
    }
    out.conductivity = Profile::Rescaled {
        base: Box::new(params.conductivity.clone()),
        capacity: Box::new(capacity.clone()),
        divide: true,
        capacity_range: (lo, hi),
    };
    out.viscosity = Profile::Rescaled {
        base: Box::new(params.viscosity.clone()),
        capacity: Box::new(capacity),
        divide: false,
        capacity_range: (lo, hi),
    };
    let ratio_lo = params.kappa_lo / params.kappa_hi;
    let ratio_hi = params.kappa_hi / params.kappa_lo;
    out.kappa_lo = ratio_lo.min(params.kappa_lo);
    out.kappa_hi = ratio_hi.max(params.kappa_hi);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rational() -> FluidParams {
        FluidParams::new(2.5, 1.0, 1.0, 2.0, Profile::Rational { lo: 1.0, hi: 2.0 })
    }

    #[test]
    fn zero_shear_gives_zero_stress() {
        let s = stress(1.0, &SymTensor2::ZERO, &rational()).unwrap();
        assert_eq!(s, SymTensor2::ZERO);
    }

    #[test]
    fn newtonian_limit_returns_shear() {
        let params = FluidParams::constant(2.0, 1.0, 1.0);
        let d = SymTensor2::diag(1.0, -1.0);
        let s = stress(1.0, &d, &params).unwrap();
        assert_eq!(s, d);
        assert_eq!(s.ddot(&d), 2.0);
    }

    #[test]
    fn cubic_power_law_scales_by_norm() {
        let params = FluidParams::constant(3.0, 0.0, 1.0);
        let d = SymTensor2::diag(1.0, -1.0);
        let s = stress(1.0, &d, &params).unwrap();
        let r2 = 2f64.sqrt();
        assert!((s.xx - r2).abs() < 1e-15 && (s.yy + r2).abs() < 1e-15);
        assert!((s.ddot(&d) - 2.0 * r2).abs() < 1e-14);
    }

    #[test]
    fn stress_rejects_non_finite_and_nonpositive_temperature() {
        let p = rational();
        assert!(stress(f64::NAN, &SymTensor2::ZERO, &p).is_err());
        assert!(stress(0.0, &SymTensor2::ZERO, &p).is_err());
        assert!(stress(1.0, &SymTensor2::new(f64::INFINITY, 0.0, 0.0), &p).is_err());
    }

    #[test]
    fn kirchhoff_examples() {
        let c2 = FluidParams::constant(2.0, 1.0, 2.0);
        assert_eq!(kirchhoff_g(3.0, &c2).unwrap(), 6.0);
        assert_eq!(kirchhoff_g(0.0, &rational()).unwrap(), 0.0);
        assert_eq!(kirchhoff_g_inverse(6.0, &c2).unwrap(), 3.0);
        assert_eq!(kirchhoff_g_inverse(0.0, &rational()).unwrap(), 0.0);
        assert!(kirchhoff_g(-1.0, &c2).is_err());
        assert!(kirchhoff_g_inverse(-1.0, &c2).is_err());
    }

    #[test]
    fn validate_collects_every_problem() {
        let mut p = rational();
        p.p = 1.5;
        p.delta = 2.0;
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("p ≥ 2 required in 2D"));
        assert!(msg.contains("delta"));
    }

    #[test]
    fn validate_samples_profiles() {
        let p = FluidParams::new(2.0, 1.0, 1.0, 1.5, Profile::Rational { lo: 1.0, hi: 2.0 });
        assert!(p.validate().is_err());
        assert!(rational().validate().is_ok());
    }

    #[test]
    fn identity_capacity_leaves_params_unchanged() {
        let p = rational().with_capacity(Profile::Constant(1.0));
        let q = rescale_capacity(&p).unwrap();
        assert!(q.capacity.is_none());
        assert_eq!(q.kappa_lo, p.kappa_lo);
        assert_eq!(q.kappa_hi, p.kappa_hi);
        for t in [0.1, 1.0, 5.0] {
            assert_eq!(q.kappa(t), p.kappa(t));
            assert_eq!(q.nu(t), p.nu(t));
        }
    }

    #[test]
    fn non_monotone_capacity_is_rejected() {
        let p = FluidParams::new(2.0, 1.0, 0.5, 2.0, Profile::Constant(1.0))
            .with_capacity(Profile::custom("wiggle", |t| (t * 3.0).sin()));
        assert!(rescale_capacity(&p).is_err());
        assert!(rescale_capacity(&rational()).is_err());
    }
}
