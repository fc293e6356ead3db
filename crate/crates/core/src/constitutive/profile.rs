//! Scalar material profiles θ ↦ κ(θ) and their primitives.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::quadrature;

/// Piecewise-linear table, values clamped into `[lo, hi]` at construction and
/// extended by constants outside the knot range.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    knots: Vec<f64>,
    values: Vec<f64>,
    // ∫_0^{knots[i]} of the table
    prefix: Vec<f64>,
}

impl Table {
    pub fn new(points: &[(f64, f64)], lo: f64, hi: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("conductivity table is empty"));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(invalid(format!(
                    "table abscissae must be strictly increasing ({} after {})",
                    w[1].0, w[0].0
                )));
            }
        }
        if points[0].0 < 0.0 {
            return Err(invalid("table abscissae must be nonnegative"));
        }
        if points.iter().any(|(t, k)| !t.is_finite() || !k.is_finite()) {
            return Err(invalid("table entries must be finite"));
        }
        let knots: Vec<f64> = points.iter().map(|p| p.0).collect();
        let values: Vec<f64> = points.iter().map(|p| p.1.clamp(lo, hi)).collect();
        let mut prefix = Vec::with_capacity(knots.len());
        let mut acc = values[0] * knots[0];
        prefix.push(acc);
        for i in 1..knots.len() {
            acc += 0.5 * (values[i] + values[i - 1]) * (knots[i] - knots[i - 1]);
            prefix.push(acc);
        }
        Ok(Self {
            knots,
            values,
            prefix,
        })
    }

    /// Reads whitespace- or comma-separated `(θ, value)` rows; `#` starts a comment.
    pub fn load(path: &Path, lo: f64, hi: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut points = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(invalid(format!(
                    "{}:{}: expected two columns",
                    path.display(),
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    invalid(format!("{}:{}: cannot parse '{s}'", path.display(), lineno + 1))
                })
            };
            points.push((parse(cols[0])?, parse(cols[1])?));
        }
        Self::new(&points, lo, hi)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.iter().copied().zip(self.values.iter().copied())
    }

    fn segment(&self, x: f64) -> usize {
        // index i with knots[i] <= x < knots[i+1], clamped to the interior
        match self.knots.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(self.knots.len().saturating_sub(2)),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.knots.len().saturating_sub(2)),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if n == 1 || x <= self.knots[0] {
            return self.values[0];
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let i = self.segment(x);
        let w = (x - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    pub fn primitive(&self, s: f64) -> f64 {
        let n = self.knots.len();
        if s <= self.knots[0] {
            return self.values[0] * s;
        }
        if s >= self.knots[n - 1] {
            return self.prefix[n - 1] + self.values[n - 1] * (s - self.knots[n - 1]);
        }
        let i = self.segment(s);
        self.prefix[i] + 0.5 * (self.values[i] + self.value(s)) * (s - self.knots[i])
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.knots.iter().copied().filter(|&k| k > lo && k < hi).collect()
    }
}

/// A positive scalar function of temperature: conductivity, viscosity, or
/// the derivative `e′` of a heat-capacity map.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// `lo + (hi − lo)/(1 + θ)`
    Rational { lo: f64, hi: f64 },
    Table(Table),
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// `base(e⁻¹(Θ))`, divided by `e′(e⁻¹(Θ))` when `divide` is set, where `e`
    /// is the primitive of `capacity`.
    Rescaled {
        base: Box<Profile>,
        capacity: Box<Profile>,
        divide: bool,
        /// sampled bounds of `capacity`, bracketing `e⁻¹`
        capacity_range: (f64, f64),
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "Constant({c})"),
            Profile::Rational { lo, hi } => write!(f, "Rational {{ lo: {lo}, hi: {hi} }}"),
            Profile::Table(t) => write!(f, "Table({} knots)", t.knots.len()),
            Profile::Custom { name, .. } => write!(f, "Custom({name})"),
            Profile::Rescaled { base, divide, .. } => {
                write!(f, "Rescaled({base:?}, divide: {divide})")
            }
        }
    }
}

impl Profile {
    pub fn custom(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Custom {
            name: name.to_string(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Profile::Constant(c) => format!("constant({c})"),
            Profile::Rational { lo, hi } => format!("rational({lo},{hi})"),
            Profile::Table(t) => format!("table({} knots)", t.knots.len()),
            Profile::Custom { name, .. } => name.clone(),
            Profile::Rescaled { base, .. } => format!("rescaled({})", base.name()),
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Rational { lo, hi } => lo + (hi - lo) / (1.0 + theta),
            Profile::Table(t) => t.value(theta),
            Profile::Custom { f, .. } => f(theta),
            Profile::Rescaled {
                base,
                capacity,
                divide,
                capacity_range: (lo, hi),
            } => {
                let t = capacity.primitive_inverse(theta, *lo, *hi);
                let b = base.value(t);
                if *divide {
                    b / capacity.value(t)
                } else {
                    b
                }
            }
        }
    }

    /// `∫_0^s value`.
    pub fn primitive(&self, s: f64) -> f64 {
        match self {
            Profile::Constant(c) => c * s,
            Profile::Rational { lo, hi } => lo * s + (hi - lo) * s.ln_1p(),
            Profile::Table(t) => t.primitive(s),
            Profile::Custom { .. } => self.quadrature_primitive(0.0, s),
            Profile::Rescaled {
                base,
                capacity,
                divide: true,
                capacity_range: (lo, hi),
            } => base.primitive(capacity.primitive_inverse(s, *lo, *hi)),
            Profile::Rescaled { .. } => self.quadrature_primitive(0.0, s),
        }
    }

    /// `∫_a^b value`, accurate when `a` and `b` are close.
    pub fn primitive_diff(&self, a: f64, b: f64) -> f64 {
        match self {
            Profile::Constant(c) => c * (b - a),
            Profile::Rational { lo, hi } => lo * (b - a) + (hi - lo) * ((b - a) / (1.0 + a)).ln_1p(),
            Profile::Table(t) => {
                let mut pts = vec![a];
                let mut inner = t.breakpoints(a, b);
                if b < a {
                    inner.reverse();
                }
                pts.extend(inner);
                pts.push(b);
                pts.windows(2)
                    .map(|w| 0.5 * (t.value(w[0]) + t.value(w[1])) * (w[1] - w[0]))
                    .sum()
            }
            Profile::Custom { .. } => self.quadrature_primitive(a, b),
            Profile::Rescaled {
                base,
                capacity,
                divide: true,
                capacity_range: (lo, hi),
            } => base.primitive_diff(
                capacity.primitive_inverse(a, *lo, *hi),
                capacity.primitive_inverse(b, *lo, *hi),
            ),
            Profile::Rescaled { .. } => self.quadrature_primitive(a, b),
        }
    }

    fn quadrature_primitive(&self, a: f64, b: f64) -> f64 {
        quadrature::adaptive_simpson(|z| self.value(z), a, b, 1e-12)
            .unwrap_or_else(|_| quadrature::composite_gauss_legendre(|z| self.value(z), a, b, 64))
    }

    /// Knots in the open interval between `a` and `b` where the profile has a kink.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            Profile::Table(t) => t.breakpoints(a, b),
            _ => Vec::new(),
        }
    }

    /// Inverse of the primitive by bracketed Newton with a bisection fallback.
    /// `lo`/`hi` bound the profile, which brackets the root in `[u/hi, u/lo]`.
    pub fn primitive_inverse(&self, u: f64, lo: f64, hi: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let mut a = u / hi;
        let mut b = u / lo;
        let mut x = 0.5 * (a + b);
        let tol = 1e-15 * u.max(1.0);
        for _ in 0..200 {
            let r = self.primitive(x) - u;
            if r.abs() <= tol {
                return x;
            }
            if r > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = self.value(x);
            let newton = x - r / d;
            x = if newton > a && newton < b && d > 0.0 {
                newton
            } else {
                0.5 * (a + b)
            };
            if b - a <= 4.0 * f64::EPSILON * x {
                return x;
            }
        }
        x
    }

    /// Range over a log-spaced sample of θ ∈ [1e-3, 1e3] plus the table knots.
    pub fn sampled_range(&self) -> (f64, f64) {
        if let Profile::Constant(c) = self {
            return (*c, *c);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |t: f64| {
            let v = self.value(t);
            lo = lo.min(v);
            hi = hi.max(v);
        };
        for i in 0..=120 {
            visit(10f64.powf(-3.0 + 6.0 * i as f64 / 120.0));
        }
        visit(0.0);
        if let Profile::Table(t) = self {
            t.knots.iter().for_each(|&k| visit(k));
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_primitive_is_closed_form() {
        let p = Profile::Rational { lo: 1.0, hi: 2.0 };
        assert!((p.primitive(1.0) - (1.0 + std::f64::consts::LN_2)).abs() < 1e-15);
        let b = 1.0 + 1e-9;
        let d = b - 1.0;
        let exact = d + (d / 2.0f64).ln_1p();
        assert!((p.primitive_diff(1.0, b) - exact).abs() < 1e-15 * exact);
    }

    #[test]
    fn table_primitive_matches_trapezoid_geometry() {
        let t = Table::new(&[(0.0, 1.0), (2.0, 3.0)], 1.0, 3.0).unwrap();
        let p = Profile::Table(t);
        // κ = 1 + θ on [0, 2] gives G = s + s²/2
        for s in [0.3, 1.0, 1.7, 2.0] {
            assert!((p.primitive(s) - (s + 0.5 * s * s)).abs() < 1e-14);
        }
        assert!((p.primitive(3.0) - (4.0 + 3.0)).abs() < 1e-14);
        assert!((p.primitive_diff(1.0, 2.5) - (p.primitive(2.5) - p.primitive(1.0))).abs() < 1e-14);
        assert!((p.primitive_diff(2.5, 1.0) + (p.primitive(2.5) - p.primitive(1.0))).abs() < 1e-14);
    }

    #[test]
    fn table_clamps_and_rejects_bad_abscissae() {
        let t = Table::new(&[(0.0, 0.1), (1.0, 9.0)], 1.0, 2.0).unwrap();
        assert_eq!(t.value(0.0), 1.0);
        assert_eq!(t.value(5.0), 2.0);
        assert!(Table::new(&[(1.0, 1.0), (1.0, 2.0)], 1.0, 2.0).is_err());
    }

    #[test]
    fn custom_primitive_uses_quadrature() {
        let p = Profile::custom("1+1/(1+θ)", |t| 1.0 + 1.0 / (1.0 + t));
        assert!((p.primitive(1.0) - (1.0 + std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn inverse_recovers_argument() {
        let p = Profile::Rational { lo: 1.0, hi: 2.0 };
        for s in [1e-3, 0.5, 1.0, 7.0, 900.0] {
            let u = p.primitive(s);
            let back = p.primitive_inverse(u, 1.0, 2.0);
            assert!((back - s).abs() <= 1e-13 * s.max(1.0), "{s} -> {back}");
        }
    }
}
