use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsf_lab::config::{parse_config, ExperimentConfig, Purpose};
use nsf_lab::experiment::{
    appendix_b, initial_state, load_trajectory, prepare, simulate, verify_suites, write_simulation_outputs,
};
use nsf_lab::report::{constants_text, fmt_num, verdict_text};
use nsf_lab::solver::{gradient_bound_audit, rn2_audit};
use nsf_lab::Error;

#[derive(Parser)]
#[command(name = "nsf-lab", version, about = "Decay experiments for heat-conducting power-law fluids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the steady temperature and report residual and bounds
    Steady {
        config: PathBuf,
    },
    /// Run the simulation and check the decay verdicts
    Simulate {
        config: PathBuf,
        /// overrides [output] dir
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the decay constants and where each comes from
    Constants {
        config: PathBuf,
    },
    /// Run the sampled inequality suites
    Verify {
        config: PathBuf,
        /// overrides [diagnostics] seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run with delta = 0 and check the polynomial envelope
    Appendixb {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the weighted entropy inequality on the checkpoints of a previous simulate run
    Audit {
        config: PathBuf,
        /// defaults to the first checkpoint time
        #[arg(long)]
        sigma: Option<f64>,
        /// defaults to the last checkpoint time
        #[arg(long)]
        tau: Option<f64>,
        /// directory holding checkpoints.csv; defaults to [output] dir
        #[arg(long)]
        from: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERDICT: u8 = 3;
/// `verify` failures: this bit plus one bit per failing suite
const EXIT_VERIFY_BASE: u8 = 16;

enum Outcome {
    Pass,
    Fail(u8),
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::UnsupportedRegime(_) | Error::Config(_) | Error::Format(_) | Error::Io(_) => {
            EXIT_CONFIG
        }
        Error::ConvergenceFailure { .. }
        | Error::OracleFailure { .. }
        | Error::StiffnessFailure { .. }
        | Error::DivergenceFailure { .. } => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(code)) => ExitCode::from(code),
        Err(e) => {
            match &e {
                Error::Config(list) => {
                    eprintln!("error: invalid config");
                    for item in list {
                        eprintln!("  - {item}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn load(path: &Path, purpose: Purpose) -> nsf_lab::Result<ExperimentConfig> {
    let cfg = parse_config(path)?;
    cfg.validate_for(purpose)?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, over: Option<PathBuf>) -> PathBuf {
    over.unwrap_or_else(|| cfg.output_dir())
}

fn dispatch(cmd: Command) -> nsf_lab::Result<Outcome> {
    match cmd {
        Command::Steady { config } => {
            let cfg = load(&config, Purpose::Steady)?;
            let setup = prepare(&cfg)?;
            let s = &setup.steady;
            println!("grid           {} x {}", setup.domain.nx, setup.domain.ny);
            println!("iterations     {}", s.iterations);
            println!("residual       {:.6e}", s.solver_residual);
            println!("weak residual  {:.6e}", setup.weak_residual);
            println!("theta_hat min  {}", fmt_num(s.theta_hat.min()));
            println!("theta_hat max  {}", fmt_num(s.theta_hat.max()));
            println!("trace bounds   [{}, {}]", fmt_num(s.theta_lo), fmt_num(s.theta_hi));
            Ok(Outcome::Pass)
        }
        Command::Simulate { config, out } => {
            let cfg = load(&config, Purpose::Decay)?;
            let dir = out_dir(&cfg, out);
            std::fs::create_dir_all(&dir)?;
            let sim = simulate(&cfg, Some(&dir))?;
            write_simulation_outputs(&cfg, &sim, &dir)?;
            let st = &sim.trajectory.stats;
            println!(
                "{} steps, dt in [{:.3e}, {:.3e}], theta in [{:.6}, {:.6}]",
                st.steps, st.dt_min, st.dt_max, st.theta_min, st.theta_max
            );
            println!(
                "max div ratio {:.3e}, energy residual {:.3e}, budget residual {:.3e}",
                st.max_div_ratio, st.max_energy_residual, st.max_budget_residual
            );
            print!("{}", verdict_text(&sim.report));
            println!("outputs in {}", dir.display());
            Ok(if sim.report.passed() { Outcome::Pass } else { Outcome::Fail(EXIT_VERDICT) })
        }
        Command::Constants { config } => {
            let cfg = load(&config, Purpose::Decay)?;
            let setup = prepare(&cfg)?;
            let state = initial_state(&cfg, &setup)?;
            let c = nsf_lab::experiment::constants(&cfg, &setup, &state)?;
            print!("{}", constants_text(&c));
            Ok(Outcome::Pass)
        }
        Command::Verify { config, seed, out } => {
            let cfg = load(&config, Purpose::Verify)?;
            let seed = seed.unwrap_or(cfg.diagnostics.seed);
            let verdicts = verify_suites(&cfg, seed)?;
            let mut report = String::new();
            let mut summary = String::from("id,samples,margin,constant,seed\n");
            let mut bitmap = 0u8;
            for (k, v) in verdicts.iter().enumerate() {
                let _ = writeln!(report, "{v}");
                summary.push_str(&v.summary_line());
                summary.push('\n');
                if !v.pass() {
                    bitmap |= 1 << k;
                }
            }
            let dir = out_dir(&cfg, out);
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("verify_report.txt"), &report)?;
            std::fs::write(dir.join("verify_summary.csv"), &summary)?;
            print!("{report}");
            Ok(if bitmap == 0 { Outcome::Pass } else { Outcome::Fail(EXIT_VERIFY_BASE | bitmap) })
        }
        Command::Appendixb { config, out } => {
            let cfg = load(&config, Purpose::AppendixB)?;
            let res = appendix_b(&cfg)?;
            let dir = out_dir(&cfg, out);
            std::fs::create_dir_all(&dir)?;
            let mut csv = String::from("t,velocity_norm,f_integral\n");
            for k in 0..res.series.t.len() {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    fmt_num(res.series.t[k]),
                    fmt_num(res.series.velocity_norm[k]),
                    fmt_num(res.series.f_integral[k])
                );
            }
            std::fs::write(dir.join("appendixb.csv"), csv)?;
            let text = format!("{}\n", res.verdict);
            std::fs::write(dir.join("appendixb_verdict.txt"), &text)?;
            print!("{text}");
            Ok(if res.verdict.pass() { Outcome::Pass } else { Outcome::Fail(EXIT_VERDICT) })
        }
        Command::Audit { config, sigma, tau, from } => {
            let cfg = load(&config, Purpose::Audit)?;
            let setup = prepare(&cfg)?;
            let state = initial_state(&cfg, &setup)?;
            let c = nsf_lab::experiment::constants(&cfg, &setup, &state)?;
            let dir = out_dir(&cfg, from);
            let traj = load_trajectory(&dir, &setup)?;
            let times = traj.times();
            let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
                return Err(Error::InvalidInput(format!("no checkpoints listed in {}", dir.display())));
            };
            let a = rn2_audit(&traj, sigma.unwrap_or(first), tau.unwrap_or(last), c.alpha, c.lambda, c.m)?;
            let g = gradient_bound_audit(&traj, cfg.diagnostics.epsilon)?;
            println!("interval   [{}, {}] over {} checkpoints", a.sigma, a.tau, times.len());
            println!("lhs        {:.12e}  (T1 {:.6e}, T2 {:.6e}, T3 {:.6e})", a.lhs(), a.t1, a.t2, a.t3);
            println!("rhs        {:.12e}  (R1 {:.6e}, R2 {:.6e}, R3 {:.6e})", a.rhs(), a.r1, a.r2, a.r3);
            println!("slack      {:.6e} (scale {:.3e}) [{}]", a.slack, a.scale, if a.pass() { "PASS" } else { "FAIL" });
            println!("int int |grad theta|^2 / theta^(1+eps), eps = {}: {:.6e}", cfg.diagnostics.epsilon, g);
            Ok(if a.pass() { Outcome::Pass } else { Outcome::Fail(EXIT_VERDICT) })
        }
    }
}
