use nsf_lab::config::{BoundarySpec, ExperimentConfig, ProfileSpec};
use nsf_lab::experiment::{constants, initial_state, prepare};

// unit square, κ ≡ 1, θ̂ ≡ 1, α = 0.6, small data
fn golden_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.domain.nx = 16;
    cfg.domain.ny = 16;
    cfg.fluid.p = 2.0;
    cfg.fluid.kappa_lo = 1.0;
    cfg.fluid.kappa_hi = 1.0;
    cfg.fluid.conductivity = ProfileSpec::Constant(1.0);
    cfg.fluid.viscosity = ProfileSpec::Constant(1.0);
    cfg.boundary.spec = BoundarySpec::Constant { value: 1.0 };
    cfg.initial.velocity_norm = 0.1;
    cfg.initial.theta_bump = 0.1;
    cfg.diagnostics.alpha = 0.6;
    cfg
}

#[test]
fn constants_tuple_is_frozen() {
    let cfg = golden_config();
    let setup = prepare(&cfg).unwrap();
    let state = initial_state(&cfg, &setup).unwrap();
    let c = constants(&cfg, &setup, &state).unwrap();
    let golden = [
        ("mu", c.mu, 1.96758728710431e1),
        ("K", c.k, 5.442827954728611e-1),
        ("M", c.m, 1.08527836165769e0),
        ("beta", c.beta, 2.200999235950738e0),
    ];
    for (name, got, want) in golden {
        assert!((got - want).abs() <= 1e-10 * want, "{name}: {got:e} vs frozen {want:e}");
    }
    assert_eq!(c.lambda, 0.5 * c.mu.min(c.k));
}

#[test]
fn small_lambda_fraction_sends_beta_to_twice_m() {
    let mut cfg = golden_config();
    cfg.diagnostics.lambda_fraction = 1e-9;
    let setup = prepare(&cfg).unwrap();
    let state = initial_state(&cfg, &setup).unwrap();
    let c = constants(&cfg, &setup, &state).unwrap();
    assert!((c.beta - 2.0 * c.m).abs() <= 1e-8 * c.m);
}
