//! Staggered (MAC) grid on a rectangle.
//!
//! Cell `(i, j)` covers `[i·hx, (i+1)·hx] × [j·hy, (j+1)·hy]`. Scalars live at
//! cell centers (`i + nx·j`), the x-velocity on vertical faces
//! (`i + (nx+1)·j`, face `i` is the west side of cell `i`) and the
//! y-velocity on horizontal faces (`i + nx·j`, face `j` is the south side).

mod checkpoint;
mod operators;
mod poisson;
mod spectral;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use operators::{
    convection, divergence, gradient, stream_curl, sym_gradient, sym_gradient_adjoint,
    stress_divergence,
};
pub use poisson::{pcg, DirichletLaplacian, NeumannPoisson, PcgOutcome};
pub use spectral::{
    dirichlet_lambda1, estimate_mu, estimate_sobolev_constant, sobolev_constant_q, sobolev_ratio,
};

use crate::constitutive::SymTensor2;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Domain {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        let mut problems = Vec::new();
        if !(lx.is_finite() && lx > 0.0) {
            problems.push(format!("Lx must be positive (got {lx})"));
        }
        if !(ly.is_finite() && ly > 0.0) {
            problems.push(format!("Ly must be positive (got {ly})"));
        }
        if nx < 4 {
            problems.push(format!("nx must be at least 4 (got {nx})"));
        }
        if ny < 4 {
            problems.push(format!("ny must be at least 4 (got {ny})"));
        }
        if !problems.is_empty() {
            return Err(invalid(problems.join("; ")));
        }
        Ok(Self { lx, ly, nx, ny })
    }

    pub fn unit_square(n: usize) -> Self {
        Self::new(1.0, 1.0, n, n).expect("n ≥ 4")
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_u(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn n_v(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn u_index(&self, i: usize, j: usize) -> usize {
        i + (self.nx + 1) * j
    }

    #[inline]
    pub fn v_index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn u_position(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn v_position(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), j as f64 * self.hy())
    }

    /// Same geometry with `factor`× as many cells per side.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            nx: self.nx * factor,
            ny: self.ny * factor,
            ..*self
        }
    }
}

/// Cell-centered scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub domain: Domain,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(domain: Domain) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        Self {
            domain,
            data: vec![c; domain.n_cells()],
        }
    }

    pub fn from_fn(domain: Domain, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(domain.n_cells());
        for j in 0..domain.ny {
            for i in 0..domain.nx {
                let (x, y) = domain.cell_center(i, j);
                data.push(f(x, y));
            }
        }
        Self { domain, data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            domain: self.domain,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.domain.cell(i, j)]
    }

    /// Midpoint rule `∫_Ω φ`.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.domain.cell_area()
    }

    pub fn l1(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum::<f64>() * self.domain.cell_area()
    }

    pub fn l2(&self) -> f64 {
        self.l2_squared().sqrt()
    }

    pub fn l2_squared(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>() * self.domain.cell_area()
    }

    pub fn lp(&self, p: f64) -> f64 {
        (self.data.iter().map(|x| x.abs().powf(p)).sum::<f64>() * self.domain.cell_area())
            .powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Face-staggered velocity. Normal components on the walls are stored and
/// kept at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub domain: Domain,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField {
    pub fn zeros(domain: Domain) -> Self {
        Self {
            domain,
            u: vec![0.0; domain.n_u()],
            v: vec![0.0; domain.n_v()],
        }
    }

    /// Samples `(f(x, y), g(x, y))` at face midpoints, wall faces included.
    pub fn from_fn(domain: Domain, f: impl Fn(f64, f64) -> f64, g: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(domain);
        for j in 0..domain.ny {
            for i in 0..=domain.nx {
                let (x, y) = domain.u_position(i, j);
                out.u[domain.u_index(i, j)] = f(x, y);
            }
        }
        for j in 0..=domain.ny {
            for i in 0..domain.nx {
                let (x, y) = domain.v_position(i, j);
                out.v[domain.v_index(i, j)] = g(x, y);
            }
        }
        out
    }

    pub fn enforce_no_penetration(&mut self) {
        let d = self.domain;
        for j in 0..d.ny {
            self.u[d.u_index(0, j)] = 0.0;
            self.u[d.u_index(d.nx, j)] = 0.0;
        }
        for i in 0..d.nx {
            self.v[d.v_index(i, 0)] = 0.0;
            self.v[d.v_index(i, d.ny)] = 0.0;
        }
    }

    /// `⟨a, b⟩` with weight `hx·hy` per face.
    pub fn dot(&self, other: &VectorField) -> f64 {
        let s: f64 = self.u.iter().zip(&other.u).map(|(a, b)| a * b).sum::<f64>()
            + self.v.iter().zip(&other.v).map(|(a, b)| a * b).sum::<f64>();
        s * self.domain.cell_area()
    }

    pub fn l2_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn l2(&self) -> f64 {
        self.l2_squared().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Cell-centered `|v|²`: each component squared on the two faces and
    /// averaged, so that its integral equals [`VectorField::l2_squared`].
    pub fn speed_squared(&self) -> ScalarField {
        let d = self.domain;
        let mut out = ScalarField::zeros(d);
        for j in 0..d.ny {
            for i in 0..d.nx {
                let uw = self.u[d.u_index(i, j)];
                let ue = self.u[d.u_index(i + 1, j)];
                let vs = self.v[d.v_index(i, j)];
                let vn = self.v[d.v_index(i, j + 1)];
                out.data[d.cell(i, j)] = 0.5 * (uw * uw + ue * ue + vs * vs + vn * vn);
            }
        }
        out
    }

    pub fn axpy(&mut self, a: f64, x: &VectorField) {
        for (s, xv) in self.u.iter_mut().zip(&x.u) {
            *s += a * xv;
        }
        for (s, xv) in self.v.iter_mut().zip(&x.v) {
            *s += a * xv;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.u.iter_mut().chain(self.v.iter_mut()).for_each(|x| *x *= a);
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

/// Cell-centered symmetric tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    pub domain: Domain,
    pub data: Vec<SymTensor2>,
}

impl TensorField {
    pub fn zeros(domain: Domain) -> Self {
        Self {
            domain,
            data: vec![SymTensor2::ZERO; domain.n_cells()],
        }
    }

    /// Midpoint rule `∫_Ω A:B`.
    pub fn contract(&self, other: &TensorField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.ddot(b))
            .sum::<f64>()
            * self.domain.cell_area()
    }

    pub fn norms(&self) -> ScalarField {
        ScalarField {
            domain: self.domain,
            data: self.data.iter().map(|t| t.norm()).collect(),
        }
    }
}

/// Discrete norms of a scalar field, all midpoint-rule integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub lp: f64,
    pub p: f64,
}

pub fn norms(field: &ScalarField, p: f64) -> Norms {
    Norms {
        l1: field.l1(),
        l2: field.l2(),
        lp: field.lp(p),
        p,
    }
}
