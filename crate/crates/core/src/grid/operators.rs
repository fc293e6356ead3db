//! MAC difference operators.
//!
//! Tangential wall values use the no-slip ghost reflection, so a corner
//! derivative next to a wall reads `±2u/h`.

use super::{Domain, ScalarField, TensorField, VectorField};
use crate::constitutive::SymTensor2;

/// Cell-centered `div v`.
pub fn divergence(v: &VectorField) -> ScalarField {
    let d = v.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let mut out = ScalarField::zeros(d);
    for j in 0..d.ny {
        for i in 0..d.nx {
            out.data[d.cell(i, j)] = (v.u[d.u_index(i + 1, j)] - v.u[d.u_index(i, j)]) / hx
                + (v.v[d.v_index(i, j + 1)] - v.v[d.v_index(i, j)]) / hy;
        }
    }
    out
}

/// Face-normal gradient of a cell-centered scalar, zero on wall faces.
/// Minus the adjoint of [`divergence`] in the face inner product.
pub fn gradient(phi: &ScalarField) -> VectorField {
    let d = phi.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let mut out = VectorField::zeros(d);
    for j in 0..d.ny {
        for i in 1..d.nx {
            out.u[d.u_index(i, j)] = (phi.at(i, j) - phi.at(i - 1, j)) / hx;
        }
    }
    for j in 1..d.ny {
        for i in 0..d.nx {
            out.v[d.v_index(i, j)] = (phi.at(i, j) - phi.at(i, j - 1)) / hy;
        }
    }
    out
}

// ∂u/∂y at corner (i, j), i ∈ 0..=nx, j ∈ 0..=ny
#[inline]
fn du_dy(v: &VectorField, i: usize, j: usize) -> f64 {
    let d = v.domain;
    let hy = d.hy();
    if j == 0 {
        2.0 * v.u[d.u_index(i, 0)] / hy
    } else if j == d.ny {
        -2.0 * v.u[d.u_index(i, d.ny - 1)] / hy
    } else {
        (v.u[d.u_index(i, j)] - v.u[d.u_index(i, j - 1)]) / hy
    }
}

#[inline]
fn dv_dx(v: &VectorField, i: usize, j: usize) -> f64 {
    let d = v.domain;
    let hx = d.hx();
    if i == 0 {
        2.0 * v.v[d.v_index(0, j)] / hx
    } else if i == d.nx {
        -2.0 * v.v[d.v_index(d.nx - 1, j)] / hx
    } else {
        (v.v[d.v_index(i, j)] - v.v[d.v_index(i - 1, j)]) / hx
    }
}

/// Cell-centered `Dv = (∇v + ∇vᵀ)/2`. Diagonal entries are face differences;
/// the shear entry averages the four corner values.
pub fn sym_gradient(v: &VectorField) -> TensorField {
    let d = v.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let nc = d.nx + 1;
    let mut corner = vec![0.0; nc * (d.ny + 1)];
    for j in 0..=d.ny {
        for i in 0..=d.nx {
            corner[i + nc * j] = 0.5 * (du_dy(v, i, j) + dv_dx(v, i, j));
        }
    }
    let mut out = TensorField::zeros(d);
    for j in 0..d.ny {
        for i in 0..d.nx {
            let xx = (v.u[d.u_index(i + 1, j)] - v.u[d.u_index(i, j)]) / hx;
            let yy = (v.v[d.v_index(i, j + 1)] - v.v[d.v_index(i, j)]) / hy;
            let xy = 0.25
                * (corner[i + nc * j]
                    + corner[i + 1 + nc * j]
                    + corner[i + nc * (j + 1)]
                    + corner[i + 1 + nc * (j + 1)]);
            out.data[d.cell(i, j)] = SymTensor2::new(xx, xy, yy);
        }
    }
    out
}

/// Adjoint of [`sym_gradient`]: `⟨sym_gradient(w), s⟩ = ⟨w, result⟩` for
/// every `w` with zero wall-normal components, the left side in the
/// cell inner product, the right in the face inner product.
pub fn sym_gradient_adjoint(s: &TensorField) -> VectorField {
    let d = s.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let nc = d.nx + 1;
    let mut out = VectorField::zeros(d);
    // Work in raw sums first; the face weight hx·hy equals the cell area and cancels.
    let mut w = vec![0.0; nc * (d.ny + 1)];
    for j in 0..d.ny {
        for i in 0..d.nx {
            let t = s.data[d.cell(i, j)];
            out.u[d.u_index(i + 1, j)] += t.xx / hx;
            out.u[d.u_index(i, j)] -= t.xx / hx;
            out.v[d.v_index(i, j + 1)] += t.yy / hy;
            out.v[d.v_index(i, j)] -= t.yy / hy;
            // 2·xy·Dxy = Σ_corners (xy/2)·e_k
            let q = 0.5 * t.xy;
            w[i + nc * j] += q;
            w[i + 1 + nc * j] += q;
            w[i + nc * (j + 1)] += q;
            w[i + 1 + nc * (j + 1)] += q;
        }
    }
    // e_k = (∂u/∂y + ∂v/∂x)/2 at each corner
    for j in 0..=d.ny {
        for i in 0..=d.nx {
            let wk = 0.5 * w[i + nc * j];
            if wk == 0.0 {
                continue;
            }
            if j == 0 {
                out.u[d.u_index(i, 0)] += 2.0 * wk / hy;
            } else if j == d.ny {
                out.u[d.u_index(i, d.ny - 1)] -= 2.0 * wk / hy;
            } else {
                out.u[d.u_index(i, j)] += wk / hy;
                out.u[d.u_index(i, j - 1)] -= wk / hy;
            }
            if i == 0 {
                out.v[d.v_index(0, j)] += 2.0 * wk / hx;
            } else if i == d.nx {
                out.v[d.v_index(d.nx - 1, j)] -= 2.0 * wk / hx;
            } else {
                out.v[d.v_index(i, j)] += wk / hx;
                out.v[d.v_index(i - 1, j)] -= wk / hx;
            }
        }
    }
    out.enforce_no_penetration();
    out
}

/// `div S` as the negative adjoint of the symmetric gradient, so that
/// `⟨v, div S⟩ = −∫ S:Dv` holds exactly.
pub fn stress_divergence(s: &TensorField) -> VectorField {
    let mut out = sym_gradient_adjoint(s);
    out.scale(-1.0);
    out
}

/// `−div(v ⊗ v)` in centered flux form. Skew-symmetric, `⟨w, C(w)⟩ = 0`,
/// whenever `w` is discretely solenoidal.
pub fn convection(v: &VectorField) -> VectorField {
    let d = v.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let u = |i: usize, j: usize| v.u[d.u_index(i, j)];
    let w = |i: usize, j: usize| v.v[d.v_index(i, j)];
    let mut out = VectorField::zeros(d);

    for j in 0..d.ny {
        for i in 1..d.nx {
            let uc = u(i, j);
            let fe = 0.5 * (uc + u(i + 1, j));
            let fw = 0.5 * (u(i - 1, j) + uc);
            let fluxx = fe * fe - fw * fw;
            let fn_ = 0.5 * (w(i - 1, j + 1) + w(i, j + 1));
            let fs = 0.5 * (w(i - 1, j) + w(i, j));
            let un = if j + 1 < d.ny { 0.5 * (uc + u(i, j + 1)) } else { 0.0 };
            let us = if j > 0 { 0.5 * (u(i, j - 1) + uc) } else { 0.0 };
            let fluxy = fn_ * un - fs * us;
            out.u[d.u_index(i, j)] = -(fluxx / hx + fluxy / hy);
        }
    }
    for j in 1..d.ny {
        for i in 0..d.nx {
            let vc = w(i, j);
            let fn_ = 0.5 * (vc + w(i, j + 1));
            let fs = 0.5 * (w(i, j - 1) + vc);
            let fluxy = fn_ * fn_ - fs * fs;
            let fe = 0.5 * (u(i + 1, j - 1) + u(i + 1, j));
            let fw = 0.5 * (u(i, j - 1) + u(i, j));
            let ve = if i + 1 < d.nx { 0.5 * (vc + w(i + 1, j)) } else { 0.0 };
            let vw = if i > 0 { 0.5 * (w(i - 1, j) + vc) } else { 0.0 };
            let fluxx = fe * ve - fw * vw;
            out.v[d.v_index(i, j)] = -(fluxx / hx + fluxy / hy);
        }
    }
    out
}

/// Velocity `(∂ψ/∂y, −∂ψ/∂x)` from a stream function given at the
/// `(nx+1)×(ny+1)` cell corners. Vanishing `ψ` on the boundary gives zero
/// wall-normal velocity; the divergence is zero up to round-off.
pub fn stream_curl(domain: Domain, psi: impl Fn(f64, f64) -> f64) -> VectorField {
    let d = domain;
    let (hx, hy) = (d.hx(), d.hy());
    let nc = d.nx + 1;
    let mut corner = vec![0.0; nc * (d.ny + 1)];
    for j in 0..=d.ny {
        for i in 0..=d.nx {
            corner[i + nc * j] = psi(i as f64 * hx, j as f64 * hy);
        }
    }
    let mut out = VectorField::zeros(d);
    for j in 0..d.ny {
        for i in 0..=d.nx {
            out.u[d.u_index(i, j)] = (corner[i + nc * (j + 1)] - corner[i + nc * j]) / hy;
        }
    }
    for j in 0..=d.ny {
        for i in 0..d.nx {
            out.v[d.v_index(i, j)] = -(corner[i + 1 + nc * j] - corner[i + nc * j]) / hx;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_field(d: Domain, seed: u64) -> VectorField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v = VectorField::zeros(d);
        v.u.iter_mut().chain(v.v.iter_mut()).for_each(|x| *x = rng.gen_range(-1.0..1.0));
        v.enforce_no_penetration();
        v
    }

    fn random_tensor(d: Domain, seed: u64) -> TensorField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = TensorField::zeros(d);
        for x in &mut t.data {
            *x = SymTensor2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        t
    }

    #[test]
    fn divergence_examples() {
        let d = Domain::new(1.0, 1.5, 6, 5).unwrap();
        let c = VectorField::from_fn(d, |_, _| 0.7, |_, _| 0.7);
        assert!(divergence(&c).max_abs() < 1e-14);
        let hyp = VectorField::from_fn(d, |x, _| x, |_, y| -y);
        assert!(divergence(&hyp).max_abs() < 1e-13);
        let src = VectorField::from_fn(d, |x, _| x, |_, y| y);
        assert!(divergence(&src).data.iter().all(|x| (x - 2.0).abs() < 1e-13));
    }

    #[test]
    fn sym_gradient_examples() {
        let d = Domain::unit_square(8);
        let hyp = VectorField::from_fn(d, |x, _| x, |_, y| -y);
        for t in sym_gradient(&hyp).data {
            assert!((t.xx - 1.0).abs() < 1e-13 && (t.yy + 1.0).abs() < 1e-13);
        }
        // Interior shear of v = (y, 0); the wall rows see the no-slip ghost
        let shear = VectorField::from_fn(d, |_, y| y, |_, _| 0.0);
        let g = sym_gradient(&shear);
        for j in 1..d.ny - 1 {
            for i in 0..d.nx {
                assert!((g.data[d.cell(i, j)].xy - 0.5).abs() < 1e-13);
            }
        }
        assert!(sym_gradient(&VectorField::zeros(d)).data.iter().all(|t| *t == SymTensor2::ZERO));
    }

    #[test]
    fn curl_is_exactly_solenoidal() {
        let d = Domain::new(2.0, 1.0, 12, 9).unwrap();
        let v = stream_curl(d, |x, y| (x * y * (2.0 - x) * (1.0 - y)).powi(2) + (3.0 * x).sin() * y * (1.0 - y) * x * (2.0 - x));
        assert!(divergence(&v).max_abs() <= 1e-12 * v.max_abs());
        assert_eq!(v.u[d.u_index(0, 3)], 0.0);
    }

    #[test]
    fn gradient_is_minus_divergence_adjoint() {
        let d = Domain::new(1.0, 0.7, 7, 6).unwrap();
        let w = random_field(d, 3);
        let phi = ScalarField::from_fn(d, |x, y| (x - y * y).cos());
        let lhs = gradient(&phi).dot(&w);
        let div = divergence(&w);
        let rhs = -phi.data.iter().zip(&div.data).map(|(a, b)| a * b).sum::<f64>() * d.cell_area();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    proptest! {
        #[test]
        fn sym_gradient_adjoint_identity(seed in any::<u64>(), nx in 4usize..9, ny in 4usize..9) {
            let d = Domain::new(1.3, 0.8, nx, ny).unwrap();
            let w = random_field(d, seed);
            let s = random_tensor(d, seed.wrapping_add(1));
            let lhs = sym_gradient(&w).contract(&s);
            let rhs = w.dot(&sym_gradient_adjoint(&s));
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        }

        #[test]
        fn convection_is_skew_on_solenoidal_fields(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = Domain::new(1.0, 1.2, 9, 7).unwrap();
            let a: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = stream_curl(d, |x, y| {
                let b = x * (1.0 - x) * y * (1.2 - y);
                b * (a[0] + a[1] * x + a[2] * y + a[3] * (5.0 * x).sin() + a[4] * (4.0 * y).cos() + a[5] * x * y)
            });
            let c = convection(&v);
            let e = v.dot(&c);
            prop_assert!(e.abs() < 1e-12 * (1.0 + v.l2_squared() * v.max_abs()));
        }
    }

    #[test]
    fn discrete_korn_identity_on_solenoidal_fields() {
        // 2Σ|Dv|² against Σ|∇v|² for a solenoidal no-slip field
        for n in [16, 32] {
            let d = Domain::unit_square(n);
            let psi = |x: f64, y: f64| {
                let s = (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
                s * s
            };
            let v = stream_curl(d, psi);
            let dv = sym_gradient(&v);
            let two_d = 2.0 * dv.contract(&dv);
            let grad = gradient_energy(&v);
            assert!((two_d - grad).abs() < 10.0 / n as f64 * grad, "n={n}: {two_d} vs {grad}");
        }
    }

    // Σ|∇v|² on the staggered grid with the ghost reflection at walls
    fn gradient_energy(v: &VectorField) -> f64 {
        let d = v.domain;
        let (hx, hy) = (d.hx(), d.hy());
        let mut s = 0.0;
        for j in 0..d.ny {
            for i in 0..d.nx {
                let a = (v.u[d.u_index(i + 1, j)] - v.u[d.u_index(i, j)]) / hx;
                let b = (v.v[d.v_index(i, j + 1)] - v.v[d.v_index(i, j)]) / hy;
                s += (a * a + b * b) * d.cell_area();
            }
        }
        for j in 0..=d.ny {
            for i in 0..=d.nx {
                let wgt = d.cell_area()
                    * if i == 0 || i == d.nx { 0.5 } else { 1.0 }
                    * if j == 0 || j == d.ny { 0.5 } else { 1.0 };
                let a = du_dy(v, i, j);
                let b = dv_dx(v, i, j);
                s += (a * a + b * b) * wgt;
            }
        }
        s
    }
}
