//! Explicit time stepping of the coupled velocity–temperature system on the
//! MAC grid: stress and convection, pressure projection, and a conservative
//! upwind temperature update driven by the dissipation `S:Dv`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::constitutive::FluidParams;
use crate::error::{invalid, Error, Result};
use crate::grid::{
    convection, divergence, gradient, stream_curl, stress_divergence, sym_gradient, write_checkpoint, Checkpoint,
    DirichletLaplacian, Domain, NeumannPoisson, ScalarField, TensorField, VectorField,
};
use crate::lyapunov::{f_integral, DecayConstants, DecaySeries};
use crate::steady_state::SteadyTemperature;

/// Advective Courant number.
pub const CFL: f64 = 0.4;
/// Diffusive limit factor on `h²/max(κ̄, ν_eff)`.
pub const DIFFUSIVE_FACTOR: f64 = 0.2;
/// Steps shorter than this abort the run.
pub const MIN_DT: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SimState {
    pub v: VectorField,
    pub theta: ScalarField,
    pub pressure: ScalarField,
    pub t: f64,
    pub steady: Arc<SteadyTemperature>,
    pub params: Arc<FluidParams>,
}

impl SimState {
    pub fn domain(&self) -> Domain {
        self.v.domain
    }

    /// `‖v‖₂²/2`
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.v.l2_squared()
    }

    /// `∫ S:Dv`
    pub fn dissipation(&self) -> f64 {
        dissipation_density(&self.v, &self.theta, &self.params).integral()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            velocity: self.v.clone(),
            theta: self.theta.clone(),
            pressure: self.pressure.clone(),
        }
    }
}

/// Built-in initial data: a solenoidal vortex with prescribed `‖v₀‖₂` and
/// `θ₀ = θ̂ + bump·sin(πx/Lx)sin(πy/Ly)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialSpec {
    pub velocity_norm: f64,
    pub theta_bump: f64,
}

/// Taylor–Green-type vortex, the discrete curl of
/// `a·sin²(πx/Lx)·sin²(πy/Ly)`.
pub fn taylor_green(domain: Domain, amplitude: f64) -> VectorField {
    let (lx, ly) = (domain.lx, domain.ly);
    stream_curl(domain, |x, y| {
        let s = (PI * x / lx).sin() * (PI * y / ly).sin();
        amplitude * s * s
    })
}

/// Removes the gradient part of `v`; returns the potential `φ` with
/// `v ← v − ∇φ`.
pub fn project(v: &mut VectorField, poisson: &NeumannPoisson) -> ScalarField {
    let phi = poisson.solve(&divergence(v));
    v.axpy(-1.0, &gradient(&phi));
    phi
}

pub fn initialize(
    domain: Domain,
    params: Arc<FluidParams>,
    steady: Arc<SteadyTemperature>,
    spec: InitialSpec,
) -> Result<SimState> {
    if steady.domain() != domain {
        return Err(invalid("steady temperature lives on a different grid"));
    }
    if !(spec.velocity_norm.is_finite() && spec.velocity_norm >= 0.0) {
        return Err(invalid(format!("velocity_norm must be nonnegative (got {})", spec.velocity_norm)));
    }
    if !spec.theta_bump.is_finite() {
        return Err(invalid("theta_bump must be finite"));
    }
    let mut v = taylor_green(domain, 1.0);
    project(&mut v, &NeumannPoisson::new(domain));
    v.scale(spec.velocity_norm / v.l2());
    let (lx, ly) = (domain.lx, domain.ly);
    let bump = ScalarField::from_fn(domain, |x, y| (PI * x / lx).sin() * (PI * y / ly).sin());
    let theta = ScalarField {
        domain,
        data: steady
            .theta_hat
            .data
            .iter()
            .zip(&bump.data)
            .map(|(t, b)| t + spec.theta_bump * b)
            .collect(),
    };
    let min = theta.min();
    if !(min >= steady.theta_lo) {
        return Err(invalid(format!(
            "initial temperature drops to {min} below the boundary minimum {}",
            steady.theta_lo
        )));
    }
    Ok(SimState {
        v,
        theta,
        pressure: ScalarField::zeros(domain),
        t: 0.0,
        steady,
        params,
    })
}

/// State at rest in thermal equilibrium.
pub fn equilibrium(params: Arc<FluidParams>, steady: Arc<SteadyTemperature>) -> SimState {
    let d = steady.domain();
    SimState {
        v: VectorField::zeros(d),
        theta: steady.theta_hat.clone(),
        pressure: ScalarField::zeros(d),
        t: 0.0,
        steady,
        params,
    }
}

/// Stress field and cell dissipation `S:Dv`.
pub fn stress_and_dissipation(v: &VectorField, theta: &ScalarField, params: &FluidParams) -> (TensorField, ScalarField, f64) {
    let d = v.domain;
    let mut s = sym_gradient(v);
    let mut phi = ScalarField::zeros(d);
    let mut nu_eff = 0.0f64;
    for ((t, dv), out) in s.data.iter_mut().zip(&theta.data).zip(phi.data.iter_mut()) {
        let n = t.norm();
        let factor = params.stress_factor(*dv, n);
        *out = factor * n * n;
        // largest slope of |S| against |D|
        let slope = params.nu(*dv) * (params.delta + n).powf(params.p - 3.0) * (params.delta + (params.p - 1.0) * n);
        nu_eff = nu_eff.max(slope);
        *t = t.scale(factor);
    }
    (s, phi, nu_eff)
}

pub fn dissipation_density(v: &VectorField, theta: &ScalarField, params: &FluidParams) -> ScalarField {
    stress_and_dissipation(v, theta, params).1
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// `∫ S:Dv` at the start of the step
    pub dissipation: f64,
    /// outward diffusive heat flux through the walls
    pub boundary_heat_flux: f64,
    pub kinetic_before: f64,
    pub kinetic_after: f64,
    /// `½‖v^{n+1} − vⁿ‖²`, the forward-Euler excess
    pub euler_term: f64,
    /// `ΔE + dt·Φ − euler_term`, round-off of the projection and the
    /// skew-symmetric convection
    pub projection_correction: f64,
    /// `Δ∫θ − dt(Φ − Q)`
    pub internal_energy_residual: f64,
    pub internal_energy: f64,
    /// `‖div v‖∞/‖v‖∞` after the projection
    pub div_ratio: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

/// Owns the operators reused across steps.
#[derive(Clone, Debug)]
pub struct Stepper {
    poisson: NeumannPoisson,
    conductance: DirichletLaplacian,
    /// keep `θ = θ̂` and skip the temperature update
    pub freeze_temperature: bool,
}

impl Stepper {
    pub fn new(domain: Domain) -> Self {
        Self {
            poisson: NeumannPoisson::new(domain),
            conductance: DirichletLaplacian::new(domain),
            freeze_temperature: false,
        }
    }

    pub fn frozen(domain: Domain) -> Self {
        Self {
            freeze_temperature: true,
            ..Self::new(domain)
        }
    }

    /// Advances `state` by one step of length at most `dt_max`.
    pub fn step(&self, state: &mut SimState, dt_max: f64) -> Result<StepReport> {
        let d = state.domain();
        if self.poisson.domain() != d {
            return Err(invalid("stepper was built for a different grid"));
        }
        if !(dt_max > 0.0) {
            return Err(invalid(format!("dt_max must be positive (got {dt_max})")));
        }
        let params = state.params.clone();
        let (hx, hy) = (d.hx(), d.hy());

        let (s, phi_c, nu_eff) = stress_and_dissipation(&state.v, &state.theta, &params);
        let dissipation = phi_c.integral();
        let mut force = convection(&state.v);
        force.axpy(1.0, &stress_divergence(&s));

        let h = hx.min(hy);
        let mut dt = dt_max;
        let vmax = state.v.max_abs();
        if vmax > 0.0 {
            dt = dt.min(CFL * h / vmax);
        }
        dt = dt.min(DIFFUSIVE_FACTOR * h * h / params.kappa_hi.max(nu_eff));
        if !self.freeze_temperature {
            dt = dt.min(self.temperature_limit(&state.v, params.kappa_hi));
        }
        let f2 = force.l2_squared();
        if f2 > 0.0 {
            // keeps the Euler excess below half the dissipated energy
            dt = dt.min(dissipation / f2);
        }
        if !(dt >= MIN_DT) {
            return Err(Error::StiffnessFailure { t: state.t, dt });
        }

        let kinetic_before = state.kinetic_energy();
        let mut v_new = state.v.clone();
        v_new.axpy(dt, &force);
        let phi = project(&mut v_new, &self.poisson);
        let mut dv = v_new.clone();
        dv.axpy(-1.0, &state.v);
        let euler_term = 0.5 * dv.l2_squared();

        let internal_before = state.theta.integral();
        let (theta_new, flux) = if self.freeze_temperature {
            (state.theta.clone(), 0.0)
        } else {
            self.temperature_update(state, &phi_c, dt)
        };

        let pressure = phi.map(|x| x / dt);
        if !(v_new.is_finite() && theta_new.is_finite()) {
            return Err(Error::DivergenceFailure {
                t: state.t,
                last_good: None,
            });
        }
        let kinetic_after = 0.5 * v_new.l2_squared();
        let internal_energy = theta_new.integral();
        let vm = v_new.max_abs();
        let div_ratio = if vm > 0.0 { divergence(&v_new).max_abs() / vm } else { 0.0 };
        let source = if self.freeze_temperature { 0.0 } else { dt * (dissipation - flux) };
        let report = StepReport {
            dt,
            dissipation,
            boundary_heat_flux: flux,
            kinetic_before,
            kinetic_after,
            euler_term,
            projection_correction: kinetic_after - kinetic_before + dt * dissipation - euler_term,
            internal_energy_residual: internal_energy - internal_before - source,
            internal_energy,
            div_ratio,
            theta_min: theta_new.min(),
            theta_max: theta_new.max(),
        };
        state.v = v_new;
        state.theta = theta_new;
        state.pressure = pressure;
        state.t += dt;
        Ok(report)
    }

    // per cell: area/(κ̄Σc + Σ outflow)
    fn temperature_limit(&self, v: &VectorField, kappa_hi: f64) -> f64 {
        let d = v.domain;
        let (hx, hy) = (d.hx(), d.hy());
        let area = d.cell_area();
        let mut limit = f64::INFINITY;
        for j in 0..d.ny {
            for i in 0..d.nx {
                let c: f64 = self.conductance.coefficients(i, j).iter().sum();
                let uw = v.u[d.u_index(i, j)];
                let ue = v.u[d.u_index(i + 1, j)];
                let vs = v.v[d.v_index(i, j)];
                let vn = v.v[d.v_index(i, j + 1)];
                let out = hy * ((-uw).max(0.0) + ue.max(0.0)) + hx * ((-vs).max(0.0) + vn.max(0.0));
                limit = limit.min(area / (kappa_hi * c + out));
            }
        }
        limit
    }

    /// Explicit update; returns `θ^{n+1}` and the outward wall heat flux.
    fn temperature_update(&self, state: &SimState, phi_c: &ScalarField, dt: f64) -> (ScalarField, f64) {
        let d = state.domain();
        let params = &state.params;
        let tr = &state.steady.trace;
        let th = &state.theta;
        let v = &state.v;
        let (hx, hy) = (d.hx(), d.hy());
        let area = d.cell_area();
        let mut rate = vec![0.0; d.n_cells()];
        let mut flux = 0.0;
        // vertical faces
        for j in 0..d.ny {
            for i in 0..=d.nx {
                let [w, e, _, _] = if i < d.nx {
                    self.conductance.coefficients(i, j)
                } else {
                    self.conductance.coefficients(i - 1, j)
                };
                if i == 0 {
                    let q = w * params.g_diff(th.at(0, j), tr.west[j]);
                    rate[d.cell(0, j)] += q;
                    flux -= q;
                } else if i == d.nx {
                    let q = e * params.g_diff(th.at(i - 1, j), tr.east[j]);
                    rate[d.cell(i - 1, j)] += q;
                    flux -= q;
                } else {
                    let (l, r) = (d.cell(i - 1, j), d.cell(i, j));
                    let q = w * params.g_diff(th.data[l], th.data[r]);
                    let un = v.u[d.u_index(i, j)] * hy;
                    let adv = if un > 0.0 { un * th.data[l] } else { un * th.data[r] };
                    rate[l] += q - adv;
                    rate[r] += adv - q;
                }
            }
        }
        // horizontal faces
        for j in 0..=d.ny {
            for i in 0..d.nx {
                let [_, _, s, n] = if j < d.ny {
                    self.conductance.coefficients(i, j)
                } else {
                    self.conductance.coefficients(i, j - 1)
                };
                if j == 0 {
                    let q = s * params.g_diff(th.at(i, 0), tr.south[i]);
                    rate[d.cell(i, 0)] += q;
                    flux -= q;
                } else if j == d.ny {
                    let q = n * params.g_diff(th.at(i, j - 1), tr.north[i]);
                    rate[d.cell(i, j - 1)] += q;
                    flux -= q;
                } else {
                    let (b, t) = (d.cell(i, j - 1), d.cell(i, j));
                    let q = s * params.g_diff(th.data[b], th.data[t]);
                    let vn = v.v[d.v_index(i, j)] * hx;
                    let adv = if vn > 0.0 { vn * th.data[b] } else { vn * th.data[t] };
                    rate[b] += q - adv;
                    rate[t] += adv - q;
                }
            }
        }
        let data = th
            .data
            .iter()
            .zip(&rate)
            .zip(&phi_c.data)
            .map(|((t, r), p)| t + dt * (r / area + p))
            .collect();
        (ScalarField { domain: d, data }, flux)
    }
}

/// One step on a copy of `state`.
pub fn step(state: &SimState, dt_max: f64) -> Result<(SimState, StepReport)> {
    let mut next = state.clone();
    let report = Stepper::new(state.domain()).step(&mut next, dt_max)?;
    Ok((next, report))
}

/// A sampled state.
#[derive(Clone, Debug)]
pub struct Sample {
    pub t: f64,
    pub v: VectorField,
    pub theta: ScalarField,
}

/// Worst values seen over every step of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub max_div_ratio: f64,
    /// largest `|projection_correction|/E_before`
    pub max_energy_residual: f64,
    /// largest `|internal_energy_residual|/∫θ`
    pub max_budget_residual: f64,
    /// largest relative kinetic increase over one step, `0` when it never grows
    pub max_kinetic_increase: f64,
}

impl RunStats {
    fn new(theta: &ScalarField) -> Self {
        Self {
            steps: 0,
            dt_min: f64::INFINITY,
            dt_max: 0.0,
            theta_min: theta.min(),
            theta_max: theta.max(),
            max_div_ratio: 0.0,
            max_energy_residual: 0.0,
            max_budget_residual: 0.0,
            max_kinetic_increase: 0.0,
        }
    }

    fn absorb(&mut self, r: &StepReport) {
        self.steps += 1;
        self.dt_min = self.dt_min.min(r.dt);
        self.dt_max = self.dt_max.max(r.dt);
        self.theta_min = self.theta_min.min(r.theta_min);
        self.theta_max = self.theta_max.max(r.theta_max);
        self.max_div_ratio = self.max_div_ratio.max(r.div_ratio);
        if r.kinetic_before > 0.0 {
            self.max_energy_residual = self.max_energy_residual.max(r.projection_correction.abs() / r.kinetic_before);
            self.max_kinetic_increase = self
                .max_kinetic_increase
                .max((r.kinetic_after - r.kinetic_before) / r.kinetic_before);
        }
        if r.internal_energy > 0.0 {
            self.max_budget_residual = self
                .max_budget_residual
                .max(r.internal_energy_residual.abs() / r.internal_energy);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    pub sample_dt: f64,
    /// write a checkpoint every this many samples, `0` for none
    pub checkpoint_every: usize,
    pub checkpoint_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stats: RunStats,
    /// `(t, path)` of every checkpoint written
    pub checkpoints: Vec<(f64, PathBuf)>,
    pub steady: Arc<SteadyTemperature>,
    pub params: Arc<FluidParams>,
}

fn sample_of(state: &SimState) -> Sample {
    Sample {
        t: state.t,
        v: state.v.clone(),
        theta: state.theta.clone(),
    }
}

pub fn checkpoint_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("checkpoint_{index:05}.nsfd"))
}

/// Integrates to `t_end`, sampling every `sample_dt`. Sample times are hit
/// exactly by shortening the last step before each.
pub fn run(mut state: SimState, stepper: &Stepper, opts: &RunOptions) -> Result<(SimState, Trajectory)> {
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(invalid(format!("t_end must be nonnegative (got {})", opts.t_end)));
    }
    if !(opts.sample_dt > 0.0) {
        return Err(invalid(format!("sample_dt must be positive (got {})", opts.sample_dt)));
    }
    let n_samples = (opts.t_end / opts.sample_dt).round() as usize;
    let t0 = state.t;
    let mut traj = Trajectory {
        samples: vec![sample_of(&state)],
        stats: RunStats::new(&state.theta),
        checkpoints: Vec::new(),
        steady: state.steady.clone(),
        params: state.params.clone(),
    };
    let write = |state: &SimState, k: usize, traj: &mut Trajectory| -> Result<()> {
        if let (Some(dir), true) = (&opts.checkpoint_dir, opts.checkpoint_every > 0) {
            if k.is_multiple_of(opts.checkpoint_every) {
                std::fs::create_dir_all(dir)?;
                let path = checkpoint_path(dir, traj.checkpoints.len());
                write_checkpoint(&path, &state.checkpoint())?;
                traj.checkpoints.push((state.t, path));
            }
        }
        Ok(())
    };
    write(&state, 0, &mut traj)?;
    for k in 1..=n_samples {
        let target = if k == n_samples { t0 + opts.t_end } else { t0 + k as f64 * opts.sample_dt };
        while state.t < target {
            let remaining = target - state.t;
            let report = stepper.step(&mut state, remaining).map_err(|e| match e {
                Error::DivergenceFailure { t, .. } => Error::DivergenceFailure {
                    t,
                    last_good: traj.checkpoints.last().map(|c| c.1.clone()),
                },
                other => other,
            })?;
            traj.stats.absorb(&report);
            // absorb the rounding left over from the last partial step
            if (target - state.t).abs() <= 1e-12 * opts.sample_dt.max(target.abs()) {
                state.t = target;
            }
        }
        traj.samples.push(sample_of(&state));
        write(&state, k, &mut traj)?;
    }
    Ok((state, traj))
}

impl Trajectory {
    /// Trajectory rebuilt from stored checkpoints, in time order.
    pub fn from_checkpoints(
        items: Vec<(f64, Checkpoint)>,
        steady: Arc<SteadyTemperature>,
        params: Arc<FluidParams>,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(invalid("no checkpoints to rebuild a trajectory from"));
        }
        let mut stats = RunStats::new(&items[0].1.theta);
        let samples: Vec<Sample> = items
            .into_iter()
            .map(|(t, c)| {
                stats.theta_min = stats.theta_min.min(c.theta.min());
                stats.theta_max = stats.theta_max.max(c.theta.max());
                Sample {
                    t,
                    v: c.velocity,
                    theta: c.theta,
                }
            })
            .collect();
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(invalid("checkpoint times must be strictly increasing"));
        }
        Ok(Self {
            samples,
            stats,
            checkpoints: Vec::new(),
            steady,
            params,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Diagnostics at every sample; `l_beta` uses `constants.beta`.
    pub fn decay_series(&self, constants: &DecayConstants) -> DecaySeries {
        let mut out = DecaySeries::default();
        for s in &self.samples {
            let v_sq = s.v.l2_squared();
            let f = f_integral(&s.theta, &self.steady, constants.alpha, &self.params);
            out.t.push(s.t);
            out.kinetic_energy.push(0.5 * v_sq);
            out.l_beta.push(constants.beta * s.v.speed_squared().integral() + f);
            out.f_integral.push(f);
            out.theta_l1.push(s.theta.l1());
            out.theta_min.push(s.theta.min());
            out.dissipation.push(dissipation_density(&s.v, &s.theta, &self.params).integral());
        }
        out
    }
}

/// Terms of the weighted entropy inequality over `[σ, τ]`:
/// `T1 + T2 + T3 ≤ R1 + R2 + R3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rn2Audit {
    pub sigma: f64,
    pub tau: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// `e^{λτ}∫f(θ(τ))`
    pub t1: f64,
    /// `−λ∫∫f e^{λt}`
    pub t2: f64,
    /// `(α/2)∫∫|∇(G/Ĝ)|²Ĝ(G/Ĝ)^{−1−α}e^{λt}`
    pub t3: f64,
    /// `∫∫S:Dv[1 − (Ĝ/G)^α]e^{λt}`
    pub r1: f64,
    /// `(M − 1)∫∫S:Dv e^{λt}`
    pub r2: f64,
    /// `e^{λσ}∫f(θ(σ))`
    pub r3: f64,
    pub slack: f64,
    pub scale: f64,
}

impl Rn2Audit {
    pub fn lhs(&self) -> f64 {
        self.t1 + self.t2 + self.t3
    }

    pub fn rhs(&self) -> f64 {
        self.r1 + self.r2 + self.r3
    }

    pub fn pass(&self) -> bool {
        self.slack >= -1e-8 * self.scale
    }
}

// Σ_faces c_f (a_N − a_P)²·w_f with the trace value on wall faces
fn face_energy(
    d: Domain,
    a: &[f64],
    a_wall: impl Fn(usize, usize, usize) -> f64,
    weight: impl Fn(f64, f64, f64, f64) -> f64,
    b: &[f64],
    b_wall: impl Fn(usize, usize, usize) -> f64,
) -> f64 {
    let lap = DirichletLaplacian::new(d);
    let mut total = 0.0;
    for j in 0..d.ny {
        for i in 0..d.nx {
            let p = d.cell(i, j);
            let [w, e, s, n] = lap.coefficients(i, j);
            // each interior face once, from its west or south cell
            let mut add = |c: f64, an: f64, bn: f64| {
                let da = an - a[p];
                total += c * da * da * weight(a[p], an, b[p], bn);
            };
            if i == 0 {
                add(w, a_wall(0, i, j), b_wall(0, i, j));
            }
            if i + 1 == d.nx {
                add(e, a_wall(1, i, j), b_wall(1, i, j));
            } else {
                let q = d.cell(i + 1, j);
                add(e, a[q], b[q]);
            }
            if j == 0 {
                add(s, a_wall(2, i, j), b_wall(2, i, j));
            }
            if j + 1 == d.ny {
                add(n, a_wall(3, i, j), b_wall(3, i, j));
            } else {
                let q = d.cell(i, j + 1);
                add(n, a[q], b[q]);
            }
        }
    }
    total
}

fn trace_at(steady: &SteadyTemperature, side: usize, i: usize, j: usize, g: bool) -> f64 {
    let tr = if g { &steady.g_trace } else { &steady.trace };
    match side {
        0 => tr.west[j],
        1 => tr.east[j],
        2 => tr.south[i],
        _ => tr.north[i],
    }
}

/// `∫|∇(G/Ĝ)|²Ĝ(G/Ĝ)^{−1−α}` on faces; the ratio is 1 on the walls.
pub fn entropy_gradient_term(theta: &ScalarField, steady: &SteadyTemperature, alpha: f64, params: &FluidParams) -> f64 {
    let d = theta.domain;
    let ratio: Vec<f64> = theta
        .data
        .iter()
        .zip(&steady.g_hat.data)
        .map(|(&t, &gh)| params.g(t) / gh)
        .collect();
    let coef = |r: f64, gh: f64| gh * r.powf(-1.0 - alpha);
    face_energy(
        d,
        &ratio,
        |_, _, _| 1.0,
        |rp, rn, gp, gn| 0.5 * (coef(rp, gp) + coef(rn, gn)),
        &steady.g_hat.data,
        |side, i, j| trace_at(steady, side, i, j, true),
    )
}

/// `∫|∇θ|²/θ^{1+ε}` on faces.
pub fn gradient_weight_term(theta: &ScalarField, steady: &SteadyTemperature, epsilon: f64) -> f64 {
    let d = theta.domain;
    face_energy(
        d,
        &theta.data,
        |side, i, j| trace_at(steady, side, i, j, false),
        |tp, tn, _, _| (0.5 * (tp + tn)).powf(-1.0 - epsilon),
        &theta.data,
        |_, _, _| 0.0,
    )
}

fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

fn sample_index(traj: &Trajectory, t: f64) -> Result<usize> {
    let tol = 1e-9 * (1.0 + t.abs());
    traj.samples
        .iter()
        .position(|s| (s.t - t).abs() <= tol)
        .ok_or_else(|| invalid(format!("no sample at t = {t}")))
}

/// Evaluates every term by midpoint quadrature in space and the trapezoid
/// rule over the samples in `[σ, τ]`. `m` is the factor `M` of the decay
/// constants.
pub fn rn2_audit(traj: &Trajectory, sigma: f64, tau: f64, alpha: f64, lambda: f64, m: f64) -> Result<Rn2Audit> {
    if !(alpha > 0.5 && alpha <= 2.0 / 3.0) {
        return Err(invalid(format!("alpha must lie in (1/2, 2/3] (got {alpha})")));
    }
    if !(lambda >= 0.0) || !(m >= 1.0) {
        return Err(invalid("lambda must be nonnegative and M at least 1"));
    }
    if !(sigma < tau) {
        return Err(invalid(format!("need σ < τ (got {sigma}, {tau})")));
    }
    let (a, b) = (sample_index(traj, sigma)?, sample_index(traj, tau)?);
    if b <= a {
        return Err(invalid("need at least two samples in [σ, τ]"));
    }
    let params = &traj.params;
    let steady = &traj.steady;
    let area = steady.domain().cell_area();
    let mut t = Vec::new();
    let (mut fs, mut grads, mut weighted, mut diss) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for s in &traj.samples[a..=b] {
        let e = (lambda * s.t).exp();
        t.push(s.t);
        fs.push(e * f_integral(&s.theta, steady, alpha, params));
        grads.push(e * entropy_gradient_term(&s.theta, steady, alpha, params));
        let phi = dissipation_density(&s.v, &s.theta, params);
        let w: f64 = phi
            .data
            .iter()
            .zip(&s.theta.data)
            .zip(&steady.g_hat.data)
            .map(|((&p, &th), &gh)| p * -(alpha * (gh / params.g(th)).ln()).exp_m1())
            .sum::<f64>()
            * area;
        weighted.push(e * w);
        diss.push(e * phi.integral());
    }
    let t1 = *fs.last().expect("nonempty");
    let t2 = -lambda * trapezoid(&t, &fs);
    let t3 = 0.5 * alpha * trapezoid(&t, &grads);
    let r1 = trapezoid(&t, &weighted);
    let r2 = (m - 1.0) * trapezoid(&t, &diss);
    let r3 = fs[0];
    let scale = [t1, t2, t3, r1, r2, r3].iter().fold(0.0f64, |s, x| s.max(x.abs()));
    Ok(Rn2Audit {
        sigma,
        tau,
        alpha,
        lambda,
        t1,
        t2,
        t3,
        r1,
        r2,
        r3,
        slack: r1 + r2 + r3 - (t1 + t2 + t3),
        scale,
    })
}

/// `∫∫|∇θ|²/θ^{1+ε}` over the whole trajectory.
pub fn gradient_bound_audit(traj: &Trajectory, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1) (got {epsilon})")));
    }
    let t = traj.times();
    let y: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| gradient_weight_term(&s.theta, &traj.steady, epsilon))
        .collect();
    let v = trapezoid(&t, &y);
    if !v.is_finite() {
        return Err(invalid("gradient audit produced a non-finite value"));
    }
    Ok(v)
}
