//! Acceptance suite. Prints one line per criterion and exits nonzero when any
//! of them fails.

use std::f64::consts::PI;
use std::time::Instant;

use nsf_lab::config::ExperimentConfig;
use nsf_lab::constitutive::{a_k, a_k_limit, fk, FluidParams, Profile};
use nsf_lab::experiment::{appendix_b, prepare, simulate, Simulation};
use nsf_lab::grid::{estimate_mu, Domain};
use nsf_lab::inequality_lab::{verify_bound_g_and_limits, verify_lemma1, verify_lemma2, SampleConfig};
use nsf_lab::report::series_csv;
use nsf_lab::solver::{equilibrium, rn2_audit, run, RunOptions, RunStats, Stepper, Trajectory};
use nsf_lab::steady_state::{solve_steady, weak_residual, BoundaryTrace};

struct Ledger {
    failed: Vec<String>,
}

impl Ledger {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.to_string());
        }
    }
}

fn default_config() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn run_default() -> (Simulation, f64) {
    let start = Instant::now();
    let sim = simulate(&default_config(), None).expect("default scenario runs");
    (sim, start.elapsed().as_secs_f64())
}

fn min_principle(stats: &RunStats, theta_lo: f64) -> bool {
    stats.theta_min >= theta_lo - 1e-12
}

fn l1_bound_holds(traj: &Trajectory, v0_sq: f64, theta0_l1: f64, theta_hi: f64, area: f64) -> (bool, f64) {
    let bound = v0_sq + 2.0 * theta0_l1 + 2.0 * theta_hi * area;
    let worst = traj.samples.iter().map(|s| s.theta.l1()).fold(0.0f64, f64::max);
    (traj.samples.iter().all(|s| s.theta.l1() <= bound), worst / bound)
}

// G for κ(θ) = 1 + 1/(1 + θ)
fn g_rational(s: f64) -> f64 {
    s + s.ln_1p()
}

fn g_rational_inv(u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, u.max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g_rational(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn steady_error(n: usize, u: impl Fn(f64, f64) -> f64 + Copy) -> (f64, f64) {
    let d = Domain::unit_square(n);
    let p = FluidParams::new(2.0, 1.0, 1.0, 2.0, Profile::Rational { lo: 1.0, hi: 2.0 });
    let trace = BoundaryTrace::from_fn(d, |x, y| g_rational_inv(u(x, y)));
    let s = solve_steady(&trace, &p, d, 1e-13).unwrap();
    let mut err = 0.0f64;
    for j in 0..d.ny {
        for i in 0..d.nx {
            let (x, y) = d.cell_center(i, j);
            err = err.max((s.theta_hat.at(i, j) - g_rational_inv(u(x, y))).abs());
        }
    }
    (err, weak_residual(&s, &p))
}

fn main() {
    let mut led = Ledger { failed: Vec::new() };
    let total = Instant::now();

    let (sim, secs) = run_default();
    let c = &sim.report.constants;
    let stats = &sim.trajectory.stats;
    let theta_lo = sim.setup.steady.theta_lo;
    let area = sim.setup.domain.area();

    let kin = &sim.report.verdicts[0];
    led.check(
        "1 kinetic decay",
        kin.pass && secs <= 30.0,
        format!("worst E(τ)/(e^(−μ(τ−σ))E(σ)) = {:.4} (≤ 1.05), μ = {:.4}, runtime {secs:.1} s", kin.worst_ratio, c.mu),
    );

    let comb = &sim.report.verdicts[1];
    led.check(
        "2 Lyapunov decay",
        comb.pass,
        format!("worst combined ratio {:.4} (≤ 1.05), λ = {:.4}", comb.worst_ratio, c.lambda),
    );

    let (sim64, traj64_ok) = {
        let mut cfg = default_config();
        cfg.domain.nx = 64;
        cfg.domain.ny = 64;
        cfg.diagnostics.t_end = 0.2;
        let s = simulate(&cfg, None).expect("64x64 run");
        let rate = s.report.rates.kinetic.unwrap_or(f64::NAN);
        let ok = rate >= 0.9 * s.report.constants.mu;
        (s, (ok, rate))
    };
    led.check(
        "1b fitted rate at 64x64",
        traj64_ok.0,
        format!("fitted {:.3} ≥ 0.9·μ = {:.3}", traj64_ok.1, 0.9 * sim64.report.constants.mu),
    );

    let b_cfg = {
        let mut cfg = default_config();
        cfg.fluid.delta = 0.0;
        cfg
    };
    let ab = appendix_b(&b_cfg).expect("appendix-B run");

    let (sim2, _) = run_default();

    let mins = [
        stats.theta_min,
        sim2.trajectory.stats.theta_min,
        sim64.trajectory.stats.theta_min,
        ab.trajectory.stats.theta_min,
    ];
    let all_stats = [stats, &sim2.trajectory.stats, &sim64.trajectory.stats, &ab.trajectory.stats];
    led.check(
        "3 minimum principle",
        all_stats.iter().all(|s| min_principle(s, theta_lo)),
        format!("min θ over runs {:?} vs θ̲ = {theta_lo}", mins.map(|m| format!("{m:.6}"))),
    );

    let (ok_a, ra) = l1_bound_holds(&sim.trajectory, sim.initial.v0_sq, sim.initial.theta0_l1, c.theta_hi, area);
    let (ok_b, rb) = l1_bound_holds(
        &sim64.trajectory,
        sim64.initial.v0_sq,
        sim64.initial.theta0_l1,
        c.theta_hi,
        area,
    );
    led.check(
        "4 L1 bound",
        ok_a && ok_b,
        format!("largest ‖θ‖₁/bound = {:.4} (32²), {:.4} (64²)", ra, rb),
    );

    let div = all_stats.iter().map(|s| s.max_div_ratio).fold(0.0f64, f64::max);
    led.check("5 incompressibility", div <= 1e-10, format!("max ‖div v‖∞/‖v‖∞ = {div:.3e} (≤ 1e-10)"));

    let energy = all_stats.iter().map(|s| s.max_energy_residual).fold(0.0f64, f64::max);
    let budget = all_stats.iter().map(|s| s.max_budget_residual).fold(0.0f64, f64::max);
    led.check(
        "6 energy bookkeeping",
        energy <= 1e-8 && budget <= 1e-8,
        format!("kinetic identity {energy:.3e}, internal energy budget {budget:.3e} (≤ 1e-8)"),
    );

    let params = &sim.setup.params;
    let sc = SampleConfig::new(100_000, (sim.setup.steady.theta_lo, sim.setup.steady.theta_hi), 42);
    let start = Instant::now();
    let lm1 = verify_lemma1(&sc, params).expect("lemma 1 suite");
    let lm2 = verify_lemma2(&sc, params).expect("lemma 2 suite");
    let lemma_secs = start.elapsed().as_secs_f64();
    led.check(
        "7 lemma suites",
        lm1.pass() && lm2.pass() && lm1.samples >= 100_000 && lm2.samples >= 100_000 && lemma_secs <= 60.0,
        format!(
            "{} + {} samples, margins {:.3e} / {:.3e}, runtime {lemma_secs:.1} s",
            lm1.samples, lm2.samples, lm1.worst_margin, lm2.worst_margin
        ),
    );

    let limits = verify_bound_g_and_limits(&sc, params).expect("limit suite");
    let mut ladder_ok = true;
    for s in [1.5, 7.0, 40.0, 1000.0] {
        let mut prev = f64::INFINITY;
        for e in 1..16 {
            let k = 2f64.powi(e);
            let err = (s - 1.0) - fk(s, k).unwrap();
            ladder_ok &= err <= prev && err >= 0.0;
            if k >= s {
                ladder_ok &= err == 0.0;
            }
            prev = err;
        }
    }
    for theta_hi in [2.0f64, 5.0] {
        for s in [(2.0 * theta_hi).ln(), (10.0 * theta_hi).ln()] {
            let mut prev = f64::INFINITY;
            for e in 1..16 {
                let k = 2f64.powi(e);
                let err = a_k_limit(s, theta_hi) - a_k(s, k, theta_hi);
                ladder_ok &= err <= prev * (1.0 + 1e-12) + 1e-14;
                prev = err;
            }
        }
    }
    led.check(
        "8 auxiliary limits",
        limits.pass() && ladder_ok,
        format!("{} samples, worst margin {:.3e}, direct ladders monotone: {ladder_ok}", limits.samples, limits.worst_margin),
    );

    {
        let d = Domain::unit_square(16);
        let cst = solve_steady(&BoundaryTrace::constant(d, 1.7), params, d, 1e-11).unwrap();
        let constant_exact = cst.theta_hat.data.iter().all(|&x| x == 1.7);
        let lin = |x: f64, _y: f64| g_rational(1.0) + (g_rational(2.0) - g_rational(1.0)) * x;
        let quad = |x: f64, y: f64| g_rational(1.5) + 0.8 * (x * x - y * y);
        let (lin_err, lin_weak) = steady_error(32, lin);
        let errs: Vec<(f64, f64)> = [16, 32, 64].iter().map(|&n| steady_error(n, quad)).collect();
        let orders: Vec<f64> = errs.windows(2).map(|w| (w[0].0 / w[1].0).log2()).collect();
        let weak = errs.iter().map(|e| e.1).fold(lin_weak, f64::max);
        led.check(
            "9 steady solver",
            constant_exact && lin_err <= 1e-10 && orders.iter().all(|&o| o >= 1.8) && weak <= 1e-10,
            format!(
                "constant exact: {constant_exact}, linear error {lin_err:.2e}, quadratic errors {:.2e}/{:.2e}/{:.2e} (orders {:.2}, {:.2}), weak residual {weak:.2e}",
                errs[0].0, errs[1].0, errs[2].0, orders[0], orders[1]
            ),
        );
    }

    {
        let d = Domain::unit_square(64);
        let p = FluidParams::new(2.5, 1.0, 1.0, 2.0, Profile::Rational { lo: 1.0, hi: 2.0 });
        let mu = estimate_mu(d, &p).unwrap();
        let exact = 2.0 * PI * PI;
        let rel = (mu - exact).abs() / exact;
        led.check("10 mu convergence", rel <= 0.02, format!("μ = {mu:.5} vs 2π² = {exact:.5}, relative {rel:.2e}"));
    }

    led.check(
        "11 polynomial envelope",
        ab.verdict.pass(),
        format!("{} samples, worst margin {:.3e}; {}", ab.verdict.samples, ab.verdict.worst_margin, ab.verdict.notes.join("; ")),
    );

    {
        let traj = &sim.trajectory;
        let t = traj.times();
        let a = rn2_audit(traj, t[0], *t.last().unwrap(), c.alpha, c.lambda, c.m).unwrap();
        let setup = prepare(&default_config()).unwrap();
        let eq = equilibrium(setup.params.clone(), setup.steady.clone());
        let opts = RunOptions {
            t_end: 0.1,
            sample_dt: 0.01,
            checkpoint_every: 0,
            checkpoint_dir: None,
        };
        let (_, eq_traj) = run(eq, &Stepper::new(setup.domain), &opts).unwrap();
        let et = eq_traj.times();
        let e = rn2_audit(&eq_traj, et[0], *et.last().unwrap(), c.alpha, c.lambda, c.m).unwrap();
        led.check(
            "12 rn2 audit",
            a.slack > 0.0 && e.slack.abs() <= 1e-12 * e.scale.max(1.0),
            format!("default slack {:.4e} (scale {:.3e}), equilibrium slack {:.1e}", a.slack, a.scale, e.slack),
        );
    }

    let csv_a = series_csv(&sim.report.series);
    let csv_b = series_csv(&sim2.report.series);
    led.check(
        "13 determinism",
        csv_a.as_bytes() == csv_b.as_bytes(),
        format!("{} bytes, two runs identical: {}", csv_a.len(), csv_a == csv_b),
    );

    println!("total {:.1} s", total.elapsed().as_secs_f64());
    if !led.failed.is_empty() {
        println!("failed: {}", led.failed.join(", "));
        std::process::exit(1);
    }
}
