//! End-to-end pipelines behind the command-line subcommands: steady solve,
//! simulation with decay verdicts, the polynomial envelope run and the
//! inequality suites.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::{ExperimentConfig, Purpose};
use crate::constitutive::{rescale_capacity, FluidParams};
use crate::error::Result;
use crate::grid::{dirichlet_lambda1, read_checkpoint, Domain};
use crate::inequality_lab::{
    verify_appendix_b, verify_bound_g_and_limits, verify_lemma1, verify_lemma2, AppendixBSeries,
    InequalityVerdict, SampleConfig,
};
use crate::lyapunov::{compute_constants, fit_and_verify, DecayConstants, DecayReport, InitialNorms};
use crate::report::{constants_text, series_csv, svg_plot, verdict_text};
use crate::solver::{initialize, run, InitialSpec, RunOptions, SimState, Stepper, Trajectory};
use crate::steady_state::{solve_steady, weak_residual, SteadyTemperature};

/// Grid, material and steady temperature shared by every pipeline.
#[derive(Clone, Debug)]
pub struct Setup {
    pub domain: Domain,
    pub params: Arc<FluidParams>,
    pub steady: Arc<SteadyTemperature>,
    pub weak_residual: f64,
}

/// With a capacity profile the run uses the rescaled temperature
/// `Θ = e(θ)`; trace and initial data are read in that variable.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Setup> {
    let domain = cfg.domain()?;
    let mut params = cfg.params()?;
    if params.capacity.is_some() {
        params = rescale_capacity(&params)?;
    }
    let trace = cfg.trace(domain)?;
    let steady = solve_steady(&trace, &params, domain, cfg.boundary.tolerance)?;
    let weak = weak_residual(&steady, &params);
    Ok(Setup {
        domain,
        params: Arc::new(params),
        steady: Arc::new(steady),
        weak_residual: weak,
    })
}

pub fn initial_state(cfg: &ExperimentConfig, setup: &Setup) -> Result<SimState> {
    initialize(
        setup.domain,
        setup.params.clone(),
        setup.steady.clone(),
        InitialSpec {
            velocity_norm: cfg.initial.velocity_norm,
            theta_bump: cfg.initial.theta_bump,
        },
    )
}

pub fn initial_norms(state: &SimState) -> InitialNorms {
    InitialNorms {
        v0_sq: state.v.l2_squared(),
        theta0_l1: state.theta.l1(),
    }
}

pub fn constants(cfg: &ExperimentConfig, setup: &Setup, state: &SimState) -> Result<DecayConstants> {
    compute_constants(
        setup.domain,
        &setup.params,
        &setup.steady,
        initial_norms(state),
        cfg.diagnostics.alpha,
        cfg.diagnostics.lambda_fraction,
    )
}

fn run_options(cfg: &ExperimentConfig, checkpoints: Option<PathBuf>) -> RunOptions {
    RunOptions {
        t_end: cfg.diagnostics.t_end,
        sample_dt: cfg.diagnostics.sample_dt,
        checkpoint_every: cfg.diagnostics.checkpoint_every,
        checkpoint_dir: checkpoints,
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub setup: Setup,
    pub initial: InitialNorms,
    pub trajectory: Trajectory,
    pub report: DecayReport,
}

/// Steady solve, run to `t_end` and the decay verdicts. Checkpoints go to
/// `checkpoint_dir` when given.
pub fn simulate(cfg: &ExperimentConfig, checkpoint_dir: Option<&Path>) -> Result<Simulation> {
    cfg.validate_for(Purpose::Decay)?;
    let setup = prepare(cfg)?;
    let state = initial_state(cfg, &setup)?;
    let initial = initial_norms(&state);
    let constants = constants(cfg, &setup, &state)?;
    let (_, trajectory) = run(
        state,
        &Stepper::new(setup.domain),
        &run_options(cfg, checkpoint_dir.map(Path::to_path_buf)),
    )?;
    let series = trajectory.decay_series(&constants);
    let (rates, verdicts) = fit_and_verify(&series, &constants, cfg.diagnostics.tolerance)?;
    Ok(Simulation {
        setup,
        initial,
        trajectory,
        report: DecayReport {
            series,
            constants,
            rates,
            verdicts,
            tolerance: cfg.diagnostics.tolerance,
        },
    })
}

/// Writes `diagnostics.csv`, `verdicts.txt`, `constants.txt`,
/// `checkpoints.csv` and, when enabled, one SVG per series.
pub fn write_simulation_outputs(cfg: &ExperimentConfig, sim: &Simulation, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let r = &sim.report;
    std::fs::write(dir.join("diagnostics.csv"), series_csv(&r.series))?;
    std::fs::write(dir.join("verdicts.txt"), verdict_text(r))?;
    std::fs::write(dir.join("constants.txt"), constants_text(&r.constants))?;
    let mut idx = String::from("index,t,path\n");
    for (k, (t, p)) in sim.trajectory.checkpoints.iter().enumerate() {
        let name = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        idx.push_str(&format!("{k},{},{name}\n", crate::report::fmt_num(*t)));
    }
    std::fs::write(dir.join("checkpoints.csv"), idx)?;
    if cfg.output.svg {
        let s = &r.series;
        let c = &r.constants;
        let v_sq: Vec<f64> = s.kinetic_energy.iter().map(|e| 2.0 * e).collect();
        let plots = [
            ("kinetic_energy", &s.kinetic_energy, Some((s.kinetic_energy[0], c.mu))),
            ("L_beta_integral", &s.l_beta, Some((s.l_beta[0], c.lambda))),
            ("f_integral", &s.f_integral, None),
            ("velocity_norm_squared", &v_sq, Some((v_sq[0], c.mu))),
            ("dissipation", &s.dissipation, None),
        ];
        for (name, y, env) in plots {
            std::fs::write(dir.join(format!("{name}.svg")), svg_plot(name, &s.t, y, env))?;
        }
    }
    Ok(())
}

/// Reads the checkpoints listed in `checkpoints.csv` under `dir`.
pub fn load_trajectory(dir: &Path, setup: &Setup) -> Result<Trajectory> {
    let index = std::fs::read_to_string(dir.join("checkpoints.csv"))?;
    let mut items = Vec::new();
    for (k, line) in index.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(crate::Error::Format(format!("checkpoints.csv line {}: expected 3 columns", k + 1)));
        }
        let t: f64 = cols[1]
            .parse()
            .map_err(|_| crate::Error::Format(format!("checkpoints.csv line {}: bad time", k + 1)))?;
        let ck = read_checkpoint(&dir.join(cols[2]))?;
        if ck.velocity.domain != setup.domain {
            return Err(crate::Error::Format(format!("{} lives on a different grid", cols[2])));
        }
        items.push((t, ck));
    }
    Trajectory::from_checkpoints(items, setup.steady.clone(), setup.params.clone())
}

#[derive(Clone, Debug)]
pub struct AppendixBRun {
    pub trajectory: Trajectory,
    pub series: AppendixBSeries,
    pub verdict: InequalityVerdict,
    pub lambda1: f64,
}

/// `δ = 0` run checked against the polynomial envelope.
pub fn appendix_b(cfg: &ExperimentConfig) -> Result<AppendixBRun> {
    cfg.validate_for(Purpose::AppendixB)?;
    let setup = prepare(cfg)?;
    let state = initial_state(cfg, &setup)?;
    let (_, trajectory) = run(state, &Stepper::new(setup.domain), &run_options(cfg, None))?;
    let alpha = cfg.diagnostics.alpha;
    let series = AppendixBSeries {
        t: trajectory.times(),
        velocity_norm: trajectory.samples.iter().map(|s| s.v.l2()).collect(),
        f_integral: trajectory
            .samples
            .iter()
            .map(|s| crate::lyapunov::f_integral(&s.theta, &setup.steady, alpha, &setup.params))
            .collect(),
    };
    let lambda1 = dirichlet_lambda1(setup.domain)?;
    let verdict = verify_appendix_b(&series, &setup.params, lambda1, setup.domain.area(), alpha)?;
    Ok(AppendixBRun {
        trajectory,
        series,
        verdict,
        lambda1,
    })
}

/// The lemma, bound and limit suites. `θ̂` is drawn from the range of the
/// steady temperature.
pub fn verify_suites(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<InequalityVerdict>> {
    cfg.validate_for(Purpose::Verify)?;
    let setup = prepare(cfg)?;
    let sc = SampleConfig::new(
        cfg.diagnostics.n_samples,
        (setup.steady.theta_lo, setup.steady.theta_hi),
        seed,
    );
    Ok(vec![
        verify_lemma1(&sc, &setup.params)?,
        verify_lemma2(&sc, &setup.params)?,
        verify_bound_g_and_limits(&sc, &setup.params)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProfileSpec;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.domain.nx = 8;
        cfg.domain.ny = 8;
        cfg.diagnostics.t_end = 0.03;
        cfg.diagnostics.checkpoint_every = 1;
        cfg
    }

    #[test]
    fn capacity_profile_is_folded_into_the_rescaled_run() {
        let mut cfg = small();
        cfg.fluid.capacity = Some(ProfileSpec::Constant(2.0));
        let setup = prepare(&cfg).unwrap();
        assert!(setup.params.capacity.is_none());
        // e(θ) = 2θ halves the conductivity seen by Θ
        let plain = prepare(&small()).unwrap();
        let (a, b) = (setup.params.kappa(3.0), plain.params.kappa(1.5));
        assert!((a - 0.5 * b).abs() < 1e-10 * b, "{a} vs {b}");
    }

    #[test]
    fn written_checkpoints_load_back() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let sim = simulate(&cfg, Some(dir.path())).unwrap();
        write_simulation_outputs(&cfg, &sim, dir.path()).unwrap();
        let back = load_trajectory(dir.path(), &sim.setup).unwrap();
        assert_eq!(back.samples.len(), sim.trajectory.samples.len());
        for (a, b) in back.samples.iter().zip(&sim.trajectory.samples) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.theta, b.theta);
            assert_eq!(a.v, b.v);
        }
    }

    #[test]
    fn checkpoints_from_another_grid_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let sim = simulate(&cfg, Some(dir.path())).unwrap();
        write_simulation_outputs(&cfg, &sim, dir.path()).unwrap();
        let mut other = small();
        other.domain.nx = 10;
        let setup = prepare(&other).unwrap();
        assert!(matches!(load_trajectory(dir.path(), &setup), Err(crate::Error::Format(_))));
    }
}
