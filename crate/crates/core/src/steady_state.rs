//! Stationary temperature `−div(κ(θ̂)∇θ̂) = 0` with Dirichlet data, solved
//! through the Kirchhoff variable `u = G(θ̂)`, which is discretely harmonic.

use crate::constitutive::FluidParams;
use crate::error::{invalid, Result};
use crate::grid::{DirichletLaplacian, Domain, ScalarField};

/// Temperature on the boundary faces, one value per face midpoint.
/// `south`/`north` run along x, `west`/`east` along y.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub south: Vec<f64>,
    pub north: Vec<f64>,
}

impl BoundaryTrace {
    pub fn constant(domain: Domain, c: f64) -> Self {
        Self::sides(domain, c, c, c, c)
    }

    pub fn sides(domain: Domain, west: f64, east: f64, south: f64, north: f64) -> Self {
        Self {
            west: vec![west; domain.ny],
            east: vec![east; domain.ny],
            south: vec![south; domain.nx],
            north: vec![north; domain.nx],
        }
    }

    /// Samples `f` at the boundary face midpoints.
    pub fn from_fn(domain: Domain, f: impl Fn(f64, f64) -> f64) -> Self {
        let (hx, hy) = (domain.hx(), domain.hy());
        let ys: Vec<f64> = (0..domain.ny).map(|j| (j as f64 + 0.5) * hy).collect();
        let xs: Vec<f64> = (0..domain.nx).map(|i| (i as f64 + 0.5) * hx).collect();
        Self {
            west: ys.iter().map(|&y| f(0.0, y)).collect(),
            east: ys.iter().map(|&y| f(domain.lx, y)).collect(),
            south: xs.iter().map(|&x| f(x, 0.0)).collect(),
            north: xs.iter().map(|&x| f(x, domain.ly)).collect(),
        }
    }

    /// `lo` on the west wall, `hi` on the east wall, linear in x on the others.
    pub fn linear_x(domain: Domain, lo: f64, hi: f64) -> Self {
        let lx = domain.lx;
        Self::from_fn(domain, |x, _| lo + (hi - lo) * x / lx)
    }

    /// Samples `f(s)` where `s ∈ [0, 1]` is the perimeter fraction measured
    /// counterclockwise from the origin corner.
    pub fn from_perimeter(domain: Domain, f: impl Fn(f64) -> f64) -> Self {
        let (lx, ly) = (domain.lx, domain.ly);
        let per = 2.0 * (lx + ly);
        Self::from_fn(domain, |x, y| {
            let arc = if y == 0.0 {
                x
            } else if x == lx {
                lx + y
            } else if y == ly {
                lx + ly + (lx - x)
            } else {
                2.0 * lx + ly + (ly - y)
            };
            f(arc / per)
        })
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.west
            .iter()
            .chain(&self.east)
            .chain(&self.south)
            .chain(&self.north)
            .copied()
    }

    pub fn min(&self) -> f64 {
        self.values().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let m = |v: &Vec<f64>| v.iter().map(|&x| f(x)).collect();
        Self {
            west: m(&self.west),
            east: m(&self.east),
            south: m(&self.south),
            north: m(&self.north),
        }
    }

    fn check(&self, domain: Domain) -> Result<()> {
        if self.west.len() != domain.ny
            || self.east.len() != domain.ny
            || self.south.len() != domain.nx
            || self.north.len() != domain.nx
        {
            return Err(invalid("boundary trace does not match the grid"));
        }
        if let Some(bad) = self.values().find(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid(format!("boundary temperature must be positive (got {bad})")));
        }
        Ok(())
    }
}

/// Steady temperature `θ̂` with its data and bounds `θ̲ ≤ θ̂ ≤ θ̄`.
#[derive(Clone, Debug)]
pub struct SteadyTemperature {
    pub theta_hat: ScalarField,
    pub trace: BoundaryTrace,
    pub theta_lo: f64,
    pub theta_hi: f64,
    /// `G(θ̂)` and `G(trace)`, cached for the temperature update
    pub g_hat: ScalarField,
    pub g_trace: BoundaryTrace,
    /// max-norm of the Kirchhoff residual at exit of the linear solve
    pub solver_residual: f64,
    pub iterations: usize,
}

impl SteadyTemperature {
    pub fn domain(&self) -> Domain {
        self.theta_hat.domain
    }
}

/// Flux-form residual `Σ_f c_f (u_N − u_P)` of the 5-point Laplacian, with
/// boundary faces coupling to `ub` across half a cell.
pub fn kirchhoff_residual(u: &[f64], ub: &BoundaryTrace, domain: Domain) -> Vec<f64> {
    let lap = DirichletLaplacian::new(domain);
    let mut out = vec![0.0; u.len()];
    lap.apply(u, &mut out);
    let rhs = boundary_rhs(ub, domain);
    for (o, r) in out.iter_mut().zip(rhs) {
        *o = r - *o;
    }
    out
}

fn boundary_rhs(ub: &BoundaryTrace, domain: Domain) -> Vec<f64> {
    let lap = DirichletLaplacian::new(domain);
    let mut b = vec![0.0; domain.n_cells()];
    for j in 0..domain.ny {
        for i in 0..domain.nx {
            let [w, e, s, n] = lap.coefficients(i, j);
            let p = domain.cell(i, j);
            if i == 0 {
                b[p] += w * ub.west[j];
            }
            if i + 1 == domain.nx {
                b[p] += e * ub.east[j];
            }
            if j == 0 {
                b[p] += s * ub.south[i];
            }
            if j + 1 == domain.ny {
                b[p] += n * ub.north[i];
            }
        }
    }
    b
}

/// Solves the stationary problem to `max|residual| ≤ tol·‖G(trace)‖∞`.
pub fn solve_steady(
    trace: &BoundaryTrace,
    params: &FluidParams,
    domain: Domain,
    tol: f64,
) -> Result<SteadyTemperature> {
    trace.check(domain)?;
    if !(tol > 0.0) {
        return Err(invalid(format!("solver tolerance must be positive (got {tol})")));
    }
    let (lo, hi) = (trace.min(), trace.max());
    let g_trace = trace.map(|t| params.g(t));
    if lo == hi {
        let theta_hat = ScalarField::constant(domain, lo);
        let g_hat = ScalarField::constant(domain, params.g(lo));
        return Ok(SteadyTemperature {
            theta_hat,
            trace: trace.clone(),
            theta_lo: lo,
            theta_hi: hi,
            g_hat,
            g_trace,
            solver_residual: 0.0,
            iterations: 0,
        });
    }
    let b = boundary_rhs(&g_trace, domain);
    let scale = g_trace.values().fold(0.0f64, |m, x| m.max(x.abs()));
    let mean = g_trace.values().sum::<f64>() / g_trace.values().count() as f64;
    let mut u = vec![mean; domain.n_cells()];
    let lap = DirichletLaplacian::new(domain);
    let outcome = lap.solve(&b, &mut u, tol * scale)?;
    let (glo, ghi) = (params.g(lo), params.g(hi));
    // The discrete maximum principle holds exactly; clip the solver's
    // round-off excursions so the bounds are honoured bit for bit.
    u.iter_mut().for_each(|x| *x = x.clamp(glo, ghi));
    let theta: Vec<f64> = u.iter().map(|&x| params.g_inv(x).clamp(lo, hi)).collect();
    Ok(SteadyTemperature {
        theta_hat: ScalarField {
            domain,
            data: theta,
        },
        trace: trace.clone(),
        theta_lo: lo,
        theta_hi: hi,
        g_hat: ScalarField { domain, data: u },
        g_trace,
        solver_residual: outcome.residual,
        iterations: outcome.iterations,
    })
}

/// Largest `|∫ κ(θ̂)∇θ̂·∇φ_P|` over the interior cell test functions,
/// evaluated in Kirchhoff form from `θ̂` itself.
pub fn weak_residual(steady: &SteadyTemperature, params: &FluidParams) -> f64 {
    let d = steady.domain();
    let lap = DirichletLaplacian::new(d);
    let t = &steady.theta_hat;
    let tr = &steady.trace;
    let mut worst = 0.0f64;
    for j in 0..d.ny {
        for i in 0..d.nx {
            let [w, e, s, n] = lap.coefficients(i, j);
            let tp = t.at(i, j);
            let nb = |k: usize, l: usize| t.at(k, l);
            let r = w * params.g_diff(tp, if i == 0 { tr.west[j] } else { nb(i - 1, j) })
                + e * params.g_diff(tp, if i + 1 == d.nx { tr.east[j] } else { nb(i + 1, j) })
                + s * params.g_diff(tp, if j == 0 { tr.south[i] } else { nb(i, j - 1) })
                + n * params.g_diff(tp, if j + 1 == d.ny { tr.north[i] } else { nb(i, j + 1) });
            worst = worst.max(r.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{Profile, Table};

    #[test]
    fn constant_trace_gives_constant_field() {
        let d = Domain::unit_square(8);
        let p = FluidParams::new(2.5, 1.0, 1.0, 2.0, Profile::Rational { lo: 1.0, hi: 2.0 });
        let s = solve_steady(&BoundaryTrace::constant(d, 1.7), &p, d, 1e-11).unwrap();
        assert!(s.theta_hat.data.iter().all(|&x| x == 1.7));
        assert_eq!(weak_residual(&s, &p), 0.0);
    }

    #[test]
    fn linear_trace_with_unit_conductivity() {
        let d = Domain::unit_square(16);
        let p = FluidParams::constant(2.0, 1.0, 1.0);
        let s = solve_steady(&BoundaryTrace::linear_x(d, 1.0, 2.0), &p, d, 1e-12).unwrap();
        for j in 0..d.ny {
            for i in 0..d.nx {
                let (x, _) = d.cell_center(i, j);
                assert!((s.theta_hat.at(i, j) - (1.0 + x)).abs() < 1e-10);
            }
        }
        assert!(weak_residual(&s, &p) < 1e-10);
    }

    #[test]
    fn perturbation_shows_in_weak_residual() {
        let d = Domain::unit_square(8);
        let p = FluidParams::constant(2.0, 1.0, 1.0);
        let mut s = solve_steady(&BoundaryTrace::linear_x(d, 1.0, 2.0), &p, d, 1e-12).unwrap();
        let k = d.cell(3, 4);
        s.theta_hat.data[k] += 0.1;
        // four unit-coefficient neighbours pull back with 0.1 each
        assert!((weak_residual(&s, &p) - 0.4).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_data() {
        let d = Domain::unit_square(8);
        let p = FluidParams::constant(2.0, 1.0, 1.0);
        let mut t = BoundaryTrace::constant(d, 1.0);
        t.north[2] = 0.0;
        assert!(solve_steady(&t, &p, d, 1e-11).is_err());
    }

    #[test]
    fn perimeter_parametrization_visits_sides_in_order() {
        let d = Domain::new(2.0, 1.0, 4, 4).unwrap();
        let t = BoundaryTrace::from_perimeter(d, |s| s);
        assert!(t.south.windows(2).all(|w| w[0] < w[1]));
        assert!(t.south[3] < t.east[0] && t.east[3] < t.north[3]);
        assert!(t.north[0] < t.west[3] && t.west[0] > t.west[3]);
    }

    #[test]
    fn maximum_principle_with_table_conductivity() {
        let d = Domain::unit_square(12);
        let table = Table::new(&[(0.0, 1.0), (1.5, 2.0), (3.0, 1.2)], 1.0, 2.0).unwrap();
        let p = FluidParams::new(2.0, 1.0, 1.0, 2.0, Profile::Table(table));
        let t = BoundaryTrace::from_fn(d, |x, y| 1.0 + 2.0 * x * y + (5.0 * y).sin().abs());
        let s = solve_steady(&t, &p, d, 1e-11).unwrap();
        assert!(s.theta_hat.min() >= t.min() && s.theta_hat.max() <= t.max());
        assert!(weak_residual(&s, &p) < 1e-9);
    }
}
