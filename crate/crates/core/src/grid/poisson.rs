//! Linear solvers: Jacobi-preconditioned conjugate gradients for the
//! Dirichlet Laplacian and a cosine-basis direct solve for the pure-Neumann
//! pressure problem.

use std::f64::consts::PI;

use super::{Domain, ScalarField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcgOutcome {
    pub iterations: usize,
    /// max-norm of the final residual
    pub residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from the
/// incoming `x`, until `‖b − A x‖∞ ≤ tol`.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<PcgOutcome> {
    let n = b.len();
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut res = inf(&r);
    if res <= tol {
        return Ok(PcgOutcome {
            iterations: 0,
            residual: res,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        // Refresh the residual now and then to keep the recurrence honest.
        if it % 50 == 0 {
            apply(x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
        }
        res = inf(&r);
        if res <= tol {
            return Ok(PcgOutcome {
                iterations: it,
                residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::ConvergenceFailure {
        solver: "pcg",
        iterations: max_iter,
        residual: res,
    })
}

/// Cell-centered 5-point `−Δ` with homogeneous Dirichlet walls, scaled by
/// the cell area: face coefficient `ℓ/d`, doubled on wall faces where the
/// distance to the boundary is half a cell.
#[derive(Clone, Copy, Debug)]
pub struct DirichletLaplacian {
    pub domain: Domain,
    cx: f64,
    cy: f64,
}

impl DirichletLaplacian {
    pub fn new(domain: Domain) -> Self {
        Self {
            domain,
            cx: domain.hy() / domain.hx(),
            cy: domain.hx() / domain.hy(),
        }
    }

    /// Face coefficients `(west, east, south, north)` of cell `(i, j)`.
    #[inline]
    pub fn coefficients(&self, i: usize, j: usize) -> [f64; 4] {
        let d = &self.domain;
        let w = if i == 0 { 2.0 * self.cx } else { self.cx };
        let e = if i + 1 == d.nx { 2.0 * self.cx } else { self.cx };
        let s = if j == 0 { 2.0 * self.cy } else { self.cy };
        let n = if j + 1 == d.ny { 2.0 * self.cy } else { self.cy };
        [w, e, s, n]
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = &self.domain;
        for j in 0..d.ny {
            for i in 0..d.nx {
                let [w, e, s, n] = self.coefficients(i, j);
                let p = d.cell(i, j);
                let xp = x[p];
                let mut acc = (w + e + s + n) * xp;
                if i > 0 {
                    acc -= w * x[p - 1];
                }
                if i + 1 < d.nx {
                    acc -= e * x[p + 1];
                }
                if j > 0 {
                    acc -= s * x[p - d.nx];
                }
                if j + 1 < d.ny {
                    acc -= n * x[p + d.nx];
                }
                out[p] = acc;
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let d = &self.domain;
        let mut out = Vec::with_capacity(d.n_cells());
        for j in 0..d.ny {
            for i in 0..d.nx {
                out.push(self.coefficients(i, j).iter().sum());
            }
        }
        out
    }

    /// `‖∇w‖₂²` of a zero-trace cell field, i.e. `wᵀ A w`.
    pub fn energy(&self, w: &[f64]) -> f64 {
        let mut aw = vec![0.0; w.len()];
        self.apply(w, &mut aw);
        w.iter().zip(&aw).map(|(a, b)| a * b).sum()
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64], tol: f64) -> Result<PcgOutcome> {
        let diag = self.diagonal();
        let max_iter = 20 * (self.domain.nx + self.domain.ny) + 200;
        pcg(|v, o| self.apply(v, o), &diag, b, x, tol, max_iter)
    }
}

/// Direct solver for `div ∇φ = r` with zero-flux walls (the projection
/// step), diagonalized by the cosine modes `cos(πk(i+½)/n)` of the
/// one-dimensional Neumann second difference.
#[derive(Clone, Debug)]
pub struct NeumannPoisson {
    domain: Domain,
    cos_x: Vec<f64>,
    cos_y: Vec<f64>,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

fn cosine_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            m[k * n + i] = (PI * k as f64 * (i as f64 + 0.5) / n as f64).cos();
        }
    }
    m
}

fn neumann_eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (PI * k as f64 / (2.0 * n as f64)).sin();
            -4.0 * s * s / (h * h)
        })
        .collect()
}

impl NeumannPoisson {
    pub fn new(domain: Domain) -> Self {
        Self {
            domain,
            cos_x: cosine_matrix(domain.nx),
            cos_y: cosine_matrix(domain.ny),
            eig_x: neumann_eigenvalues(domain.nx, domain.hx()),
            eig_y: neumann_eigenvalues(domain.ny, domain.hy()),
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Mean-free solution; the mean of `rhs` is discarded.
    pub fn solve(&self, rhs: &ScalarField) -> ScalarField {
        let (nx, ny) = (self.domain.nx, self.domain.ny);
        // along x: t[k + nx·j] = Σ_i C[k,i] r[i,j]
        let mut t = vec![0.0; nx * ny];
        for j in 0..ny {
            let row = &rhs.data[nx * j..nx * (j + 1)];
            for k in 0..nx {
                let c = &self.cos_x[k * nx..(k + 1) * nx];
                t[k + nx * j] = c.iter().zip(row).map(|(a, b)| a * b).sum();
            }
        }
        // along y, then divide by the eigenvalue and the mode norms
        let mut hat = vec![0.0; nx * ny];
        let mut col = vec![0.0; ny];
        for k in 0..nx {
            for j in 0..ny {
                col[j] = t[k + nx * j];
            }
            for l in 0..ny {
                if k == 0 && l == 0 {
                    continue;
                }
                let c = &self.cos_y[l * ny..(l + 1) * ny];
                let s: f64 = c.iter().zip(&col).map(|(a, b)| a * b).sum();
                let nk = if k == 0 { nx as f64 } else { 0.5 * nx as f64 };
                let nl = if l == 0 { ny as f64 } else { 0.5 * ny as f64 };
                hat[k + nx * l] = s / ((self.eig_x[k] + self.eig_y[l]) * nk * nl);
            }
        }
        // back along y
        let mut t2 = vec![0.0; nx * ny];
        for k in 0..nx {
            for l in 0..ny {
                col[l] = hat[k + nx * l];
            }
            for j in 0..ny {
                t2[k + nx * j] = col.iter().enumerate().map(|(l, c)| self.cos_y[l * ny + j] * c).sum();
            }
        }
        // back along x
        let mut out = ScalarField::zeros(self.domain);
        for j in 0..ny {
            for i in 0..nx {
                let mut s = 0.0;
                for k in 0..nx {
                    s += self.cos_x[k * nx + i] * t2[k + nx * j];
                }
                out.data[i + nx * j] = s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::{divergence, gradient, VectorField};
    use super::*;

    #[test]
    fn neumann_solve_inverts_div_grad() {
        let d = Domain::new(1.0, 0.6, 10, 7).unwrap();
        let phi = ScalarField::from_fn(d, |x, y| (3.0 * x).cos() + x * y * y);
        let mean = phi.integral() / d.area();
        let lap = divergence(&gradient(&phi));
        let solver = NeumannPoisson::new(d);
        let back = solver.solve(&lap);
        for (a, b) in back.data.iter().zip(&phi.data) {
            assert!((a - (b - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_removes_divergence() {
        let d = Domain::unit_square(12);
        let mut v = VectorField::from_fn(d, |x, y| x * x + y, |x, y| (x * y).sin());
        v.enforce_no_penetration();
        let phi = NeumannPoisson::new(d).solve(&divergence(&v));
        v.axpy(-1.0, &gradient(&phi));
        assert!(divergence(&v).max_abs() < 1e-12 * v.max_abs());
    }

    #[test]
    fn pcg_solves_dirichlet_problem() {
        let d = Domain::new(1.0, 2.0, 9, 13).unwrap();
        let a = DirichletLaplacian::new(d);
        let exact: Vec<f64> = (0..d.n_cells()).map(|k| (k as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; d.n_cells()];
        a.apply(&exact, &mut b);
        let mut x = vec![0.0; d.n_cells()];
        let out = a.solve(&b, &mut x, 1e-13).unwrap();
        assert!(out.iterations > 0 && out.residual <= 1e-13);
        for (p, q) in x.iter().zip(&exact) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn pcg_reports_non_convergence() {
        let d = Domain::unit_square(16);
        let a = DirichletLaplacian::new(d);
        let b = vec![1.0; d.n_cells()];
        let mut x = vec![0.0; d.n_cells()];
        let diag = a.diagonal();
        let err = pcg(|v, o| a.apply(v, o), &diag, &b, &mut x, 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::ConvergenceFailure { iterations: 2, .. }));
    }
}
