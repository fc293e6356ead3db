//! Experiment configuration: a sectioned `key = value` text format.
//!
//! ```text
//! # comment
//! [domain]
//! lx = 1.0
//! nx = 32
//! ```
//!
//! Sections are `[domain]`, `[fluid]`, `[boundary]`, `[initial]`,
//! `[diagnostics]` and `[output]`. Missing keys take their defaults; unknown
//! sections or keys are errors. Every problem is reported, each with its line.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use crate::constitutive::{FluidParams, Profile, Table};
use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::steady_state::BoundaryTrace;

/// A material profile as written in the config.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSpec {
    /// `constant:<value>`
    Constant(f64),
    /// `kappa_lo + (kappa_hi − kappa_lo)/(1 + θ)`
    Rational,
    /// `table:<path>`, two columns `θ, value`
    Table(PathBuf),
}

impl ProfileSpec {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        if s == "rational" {
            return Ok(Self::Rational);
        }
        if let Some(v) = s.strip_prefix("constant:") {
            return v
                .trim()
                .parse()
                .map(Self::Constant)
                .map_err(|_| format!("cannot parse constant profile value '{v}'"));
        }
        if let Some(p) = s.strip_prefix("table:") {
            return Ok(Self::Table(PathBuf::from(p.trim())));
        }
        Err(format!("unknown profile '{s}' (expected rational, constant:<v> or table:<path>)"))
    }

    fn build(&self, lo: f64, hi: f64, base: &Path) -> Result<Profile> {
        Ok(match self {
            Self::Constant(c) => Profile::Constant(*c),
            Self::Rational => Profile::Rational { lo, hi },
            Self::Table(p) => Profile::Table(Table::load(&resolve(base, p), lo, hi)?),
        })
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "constant:{c:?}"),
            Self::Rational => write!(f, "rational"),
            Self::Table(p) => write!(f, "table:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundarySpec {
    Constant { value: f64 },
    Sides { west: f64, east: f64, south: f64, north: f64 },
    LinearX { lo: f64, hi: f64 },
    /// two columns: perimeter fraction from the origin, counterclockwise; value
    Table { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainConfig {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluidConfig {
    pub p: f64,
    pub delta: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub conductivity: ProfileSpec,
    pub viscosity: ProfileSpec,
    pub capacity: Option<ProfileSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryConfig {
    pub spec: BoundarySpec,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialConfig {
    pub velocity_norm: f64,
    pub theta_bump: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsConfig {
    pub alpha: f64,
    pub lambda_fraction: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub checkpoint_every: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub n_samples: usize,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
}

/// What a subcommand is about to do with the config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Steady,
    /// simulation with the exponential decay verdicts
    Decay,
    /// simulation with `δ = 0` and the polynomial envelope
    AppendixB,
    Verify,
    Audit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub fluid: FluidConfig,
    pub boundary: BoundaryConfig,
    pub initial: InitialConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
    /// directory relative paths are resolved against
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig {
                lx: 1.0,
                ly: 1.0,
                nx: 32,
                ny: 32,
            },
            fluid: FluidConfig {
                p: 2.5,
                delta: 1.0,
                kappa_lo: 1.0,
                kappa_hi: 2.0,
                conductivity: ProfileSpec::Rational,
                viscosity: ProfileSpec::Rational,
                capacity: None,
            },
            boundary: BoundaryConfig {
                spec: BoundarySpec::LinearX { lo: 1.0, hi: 2.0 },
                tolerance: 1e-11,
            },
            initial: InitialConfig {
                velocity_norm: 1.0,
                theta_bump: 0.5,
            },
            diagnostics: DiagnosticsConfig {
                alpha: 0.6,
                lambda_fraction: 0.5,
                t_end: 1.0,
                sample_dt: 0.01,
                checkpoint_every: 10,
                seed: 42,
                tolerance: 0.05,
                n_samples: 100_000,
                epsilon: 0.5,
            },
            output: OutputConfig {
                dir: PathBuf::from("out"),
                svg: true,
            },
            base_dir: PathBuf::from("."),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

struct Parser {
    errors: Vec<String>,
}

impl Parser {
    fn num<T: std::str::FromStr>(&mut self, line: usize, key: &str, v: &str, slot: &mut T) {
        match v.parse() {
            Ok(x) => *slot = x,
            Err(_) => self.errors.push(format!("line {line}: cannot parse {key} = '{v}'")),
        }
    }
}

/// Parses config text; relative paths are resolved against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        base_dir: base_dir.to_path_buf(),
        ..Default::default()
    };
    let mut ps = Parser { errors: Vec::new() };
    let mut section = String::new();
    let mut boundary_kind: Option<(usize, String)> = None;
    let mut bvals: Vec<(usize, String, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            match name.strip_suffix(']') {
                Some(n) => {
                    section = n.trim().to_string();
                    if !["domain", "fluid", "boundary", "initial", "diagnostics", "output"].contains(&section.as_str()) {
                        ps.errors.push(format!("line {line}: unknown section [{section}]"));
                    }
                }
                None => ps.errors.push(format!("line {line}: unterminated section header")),
            }
            continue;
        }
        let Some((key, value)) = s.split_once('=') else {
            ps.errors.push(format!("line {line}: expected key = value"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let c = &mut cfg;
        match (section.as_str(), key) {
            ("domain", "lx") => ps.num(line, key, value, &mut c.domain.lx),
            ("domain", "ly") => ps.num(line, key, value, &mut c.domain.ly),
            ("domain", "nx") => ps.num(line, key, value, &mut c.domain.nx),
            ("domain", "ny") => ps.num(line, key, value, &mut c.domain.ny),
            ("fluid", "p") => ps.num(line, key, value, &mut c.fluid.p),
            ("fluid", "delta") => ps.num(line, key, value, &mut c.fluid.delta),
            ("fluid", "kappa_lo") => ps.num(line, key, value, &mut c.fluid.kappa_lo),
            ("fluid", "kappa_hi") => ps.num(line, key, value, &mut c.fluid.kappa_hi),
            ("fluid", "conductivity" | "viscosity" | "capacity") => {
                if key == "capacity" && value == "none" {
                    c.fluid.capacity = None;
                    continue;
                }
                match ProfileSpec::parse(value) {
                    Ok(p) if key == "conductivity" => c.fluid.conductivity = p,
                    Ok(p) if key == "viscosity" => c.fluid.viscosity = p,
                    Ok(p) => c.fluid.capacity = Some(p),
                    Err(e) => ps.errors.push(format!("line {line}: {e}")),
                }
            }
            ("boundary", "kind") => boundary_kind = Some((line, value.to_string())),
            ("boundary", "tolerance") => ps.num(line, key, value, &mut c.boundary.tolerance),
            ("boundary", "value" | "west" | "east" | "south" | "north" | "lo" | "hi" | "table") => {
                bvals.push((line, key.to_string(), value.to_string()))
            }
            ("initial", "velocity_norm") => ps.num(line, key, value, &mut c.initial.velocity_norm),
            ("initial", "theta_bump") => ps.num(line, key, value, &mut c.initial.theta_bump),
            ("diagnostics", "alpha") => ps.num(line, key, value, &mut c.diagnostics.alpha),
            ("diagnostics", "lambda_fraction") => ps.num(line, key, value, &mut c.diagnostics.lambda_fraction),
            ("diagnostics", "t_end") => ps.num(line, key, value, &mut c.diagnostics.t_end),
            ("diagnostics", "sample_dt") => ps.num(line, key, value, &mut c.diagnostics.sample_dt),
            ("diagnostics", "checkpoint_every") => ps.num(line, key, value, &mut c.diagnostics.checkpoint_every),
            ("diagnostics", "seed") => ps.num(line, key, value, &mut c.diagnostics.seed),
            ("diagnostics", "tolerance") => ps.num(line, key, value, &mut c.diagnostics.tolerance),
            ("diagnostics", "n_samples") => ps.num(line, key, value, &mut c.diagnostics.n_samples),
            ("diagnostics", "epsilon") => ps.num(line, key, value, &mut c.diagnostics.epsilon),
            ("output", "dir") => c.output.dir = PathBuf::from(value),
            ("output", "svg") => ps.num(line, key, value, &mut c.output.svg),
            ("", _) => ps.errors.push(format!("line {line}: key '{key}' outside any section")),
            (sec, _) => ps.errors.push(format!("line {line}: unknown key '{key}' in [{sec}]")),
        }
    }
    cfg.boundary.spec = boundary_spec(boundary_kind, &bvals, &mut ps);
    cfg.validate_into(&mut ps.errors);
    if ps.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(ps.errors))
    }
}

fn boundary_spec(kind: Option<(usize, String)>, vals: &[(usize, String, String)], ps: &mut Parser) -> BoundarySpec {
    let (kline, kind) = kind.unwrap_or((0, "linear_x".into()));
    let allowed: &[&str] = match kind.as_str() {
        "constant" => &["value"],
        "sides" => &["west", "east", "south", "north"],
        "linear_x" => &["lo", "hi"],
        "table" => &["table"],
        other => {
            ps.errors.push(format!(
                "line {kline}: unknown boundary kind '{other}' (expected constant, sides, linear_x or table)"
            ));
            return BoundarySpec::LinearX { lo: 1.0, hi: 2.0 };
        }
    };
    let mut get = |name: &str, default: f64| -> f64 {
        let mut out = default;
        for (line, k, v) in vals {
            if k == name {
                ps.num(*line, k, v, &mut out);
            }
        }
        out
    };
    let spec = match kind.as_str() {
        "constant" => BoundarySpec::Constant { value: get("value", 1.0) },
        "sides" => BoundarySpec::Sides {
            west: get("west", 1.0),
            east: get("east", 1.0),
            south: get("south", 1.0),
            north: get("north", 1.0),
        },
        "linear_x" => BoundarySpec::LinearX {
            lo: get("lo", 1.0),
            hi: get("hi", 2.0),
        },
        _ => match vals.iter().find(|v| v.1 == "table") {
            Some(v) => BoundarySpec::Table { path: PathBuf::from(&v.2) },
            None => {
                ps.errors.push(format!("line {kline}: boundary kind table needs a 'table' path"));
                BoundarySpec::Table { path: PathBuf::new() }
            }
        },
    };
    for (line, k, _) in vals {
        if !allowed.contains(&k.as_str()) {
            ps.errors.push(format!("line {line}: key '{k}' does not apply to boundary kind {kind}"));
        }
    }
    spec
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    parse_config_str(&text, &base)
}

impl ExperimentConfig {
    fn validate_into(&self, errors: &mut Vec<String>) {
        let d = &self.domain;
        if let Err(Error::InvalidInput(m)) = Domain::new(d.lx, d.ly, d.nx, d.ny) {
            errors.push(m);
        }
        let f = &self.fluid;
        if !(f.p.is_finite() && f.p >= 2.0) {
            errors.push(format!("p ≥ 2 required in 2D (got {})", f.p));
        }
        if !(0.0..=1.0).contains(&f.delta) {
            errors.push(format!("delta must lie in [0, 1] (got {})", f.delta));
        }
        if !(f.kappa_lo > 0.0 && f.kappa_lo.is_finite()) {
            errors.push(format!("kappa_lo must be positive (got {})", f.kappa_lo));
        }
        if !(f.kappa_hi >= f.kappa_lo && f.kappa_hi.is_finite()) {
            errors.push(format!("kappa_hi must be at least kappa_lo (got {})", f.kappa_hi));
        }
        if !(self.boundary.tolerance > 0.0) {
            errors.push("boundary tolerance must be positive".into());
        }
        match &self.boundary.spec {
            BoundarySpec::Constant { value } if !(*value > 0.0) => {
                errors.push(format!("boundary temperature must be positive (got {value})"))
            }
            BoundarySpec::Sides { west, east, south, north }
                if ![west, east, south, north].iter().all(|v| **v > 0.0) =>
            {
                errors.push("boundary temperatures must be positive".into())
            }
            BoundarySpec::LinearX { lo, hi } if !(*lo > 0.0 && *hi > 0.0) => {
                errors.push("boundary temperatures must be positive".into())
            }
            _ => {}
        }
        let i = &self.initial;
        if !(i.velocity_norm >= 0.0 && i.velocity_norm.is_finite()) {
            errors.push(format!("velocity_norm must be nonnegative (got {})", i.velocity_norm));
        }
        if !i.theta_bump.is_finite() {
            errors.push("theta_bump must be finite".into());
        }
        let g = &self.diagnostics;
        if !(g.alpha > 0.5 && g.alpha <= 2.0 / 3.0) {
            errors.push(format!("alpha must lie in (1/2, 2/3] (got {})", g.alpha));
        }
        if !(g.lambda_fraction > 0.0 && g.lambda_fraction < 1.0) {
            errors.push(format!("lambda_fraction must lie in (0, 1) (got {})", g.lambda_fraction));
        }
        if !(g.t_end >= 0.0 && g.t_end.is_finite()) {
            errors.push(format!("t_end must be nonnegative (got {})", g.t_end));
        }
        if !(g.sample_dt > 0.0) {
            errors.push(format!("sample_dt must be positive (got {})", g.sample_dt));
        }
        if !(g.tolerance >= 0.0) {
            errors.push("diagnostics tolerance must be nonnegative".into());
        }
        if !(g.epsilon > 0.0 && g.epsilon < 1.0) {
            errors.push(format!("epsilon must lie in (0, 1) (got {})", g.epsilon));
        }
        if g.n_samples == 0 {
            errors.push("n_samples must be positive".into());
        }
    }

    /// Checks that the config suits `purpose`.
    pub fn validate_for(&self, purpose: Purpose) -> Result<()> {
        let mut errors = Vec::new();
        let f = &self.fluid;
        match purpose {
            Purpose::Decay if f.delta == 0.0 && f.p > 2.0 => errors.push(
                "delta = 0 has no exponential decay rate; run the appendixb subcommand for the polynomial envelope".into(),
            ),
            Purpose::AppendixB if f.delta != 0.0 => {
                errors.push(format!("appendixb needs delta = 0 (got {})", f.delta))
            }
            Purpose::AppendixB if f.p <= 2.0 => errors.push("appendixb needs p > 2".into()),
            _ => {}
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.domain.lx, self.domain.ly, self.domain.nx, self.domain.ny)
    }

    pub fn params(&self) -> Result<FluidParams> {
        let f = &self.fluid;
        let base = &self.base_dir;
        let mut p = FluidParams::new(
            f.p,
            f.delta,
            f.kappa_lo,
            f.kappa_hi,
            f.conductivity.build(f.kappa_lo, f.kappa_hi, base)?,
        )
        .with_viscosity(f.viscosity.build(f.kappa_lo, f.kappa_hi, base)?);
        if let Some(c) = &f.capacity {
            p = p.with_capacity(c.build(f.kappa_lo, f.kappa_hi, base)?);
        }
        p.validate()?;
        Ok(p)
    }

    pub fn trace(&self, domain: Domain) -> Result<BoundaryTrace> {
        Ok(match &self.boundary.spec {
            BoundarySpec::Constant { value } => BoundaryTrace::constant(domain, *value),
            BoundarySpec::Sides { west, east, south, north } => {
                BoundaryTrace::sides(domain, *west, *east, *south, *north)
            }
            BoundarySpec::LinearX { lo, hi } => BoundaryTrace::linear_x(domain, *lo, *hi),
            BoundarySpec::Table { path } => {
                let t = Table::load(&resolve(&self.base_dir, path), f64::NEG_INFINITY, f64::INFINITY)?;
                BoundaryTrace::from_perimeter(domain, |s| t.value(s))
            }
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        resolve(&self.base_dir, &self.output.dir)
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let d = &self.domain;
        let f = &self.fluid;
        let _ = writeln!(s, "[domain]\nlx = {:?}\nly = {:?}\nnx = {}\nny = {}\n", d.lx, d.ly, d.nx, d.ny);
        let _ = writeln!(
            s,
            "[fluid]\np = {:?}\ndelta = {:?}\nkappa_lo = {:?}\nkappa_hi = {:?}\nconductivity = {}\nviscosity = {}\ncapacity = {}\n",
            f.p,
            f.delta,
            f.kappa_lo,
            f.kappa_hi,
            f.conductivity,
            f.viscosity,
            f.capacity.as_ref().map_or_else(|| "none".to_string(), |c| c.to_string())
        );
        s.push_str("[boundary]\n");
        match &self.boundary.spec {
            BoundarySpec::Constant { value } => {
                let _ = writeln!(s, "kind = constant\nvalue = {value:?}");
            }
            BoundarySpec::Sides { west, east, south, north } => {
                let _ = writeln!(
                    s,
                    "kind = sides\nwest = {west:?}\neast = {east:?}\nsouth = {south:?}\nnorth = {north:?}"
                );
            }
            BoundarySpec::LinearX { lo, hi } => {
                let _ = writeln!(s, "kind = linear_x\nlo = {lo:?}\nhi = {hi:?}");
            }
            BoundarySpec::Table { path } => {
                let _ = writeln!(s, "kind = table\ntable = {}", path.display());
            }
        }
        let _ = writeln!(s, "tolerance = {:?}\n", self.boundary.tolerance);
        let i = &self.initial;
        let _ = writeln!(s, "[initial]\nvelocity_norm = {:?}\ntheta_bump = {:?}\n", i.velocity_norm, i.theta_bump);
        let g = &self.diagnostics;
        let _ = writeln!(
            s,
            "[diagnostics]\nalpha = {:?}\nlambda_fraction = {:?}\nt_end = {:?}\nsample_dt = {:?}\ncheckpoint_every = {}\nseed = {}\ntolerance = {:?}\nn_samples = {}\nepsilon = {:?}\n",
            g.alpha, g.lambda_fraction, g.t_end, g.sample_dt, g.checkpoint_every, g.seed, g.tolerance, g.n_samples, g.epsilon
        );
        let _ = writeln!(s, "[output]\ndir = {}\nsvg = {}", self.output.dir.display(), self.output.svg);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        assert_eq!(parse(&c.to_config_string()).unwrap(), c);
    }

    #[test]
    fn round_trip_with_every_variant() {
        let text = "[fluid]\nconductivity = table:k.csv\nviscosity = constant:1.5\ncapacity = rational\nkappa_hi = 3\n\
                    [boundary]\nkind = sides\nwest = 1\neast = 2.5\nsouth = 1.25\nnorth = 3\n[output]\ndir = results\nsvg = false\n";
        let c = parse(text).unwrap();
        assert_eq!(c.fluid.viscosity, ProfileSpec::Constant(1.5));
        assert_eq!(parse(&c.to_config_string()).unwrap(), c);
    }

    #[test]
    fn reports_every_problem_with_lines() {
        let text = "[domain]\nnx = abc\n[fluid]\np = 1.5\nbogus = 1\n[weird]\n[diagnostics]\nalpha = 0.9\nnoequals\n";
        let Err(Error::Config(errs)) = parse(text) else {
            panic!("expected config errors");
        };
        let all = errs.join("\n");
        assert!(all.contains("line 2"), "{all}");
        assert!(all.contains("line 5"), "{all}");
        assert!(all.contains("line 6"), "{all}");
        assert!(all.contains("line 9"), "{all}");
        assert!(all.contains("p ≥ 2 required in 2D"), "{all}");
        assert!(all.contains("alpha"), "{all}");
    }

    #[test]
    fn delta_zero_is_routed_to_appendix_b() {
        let c = parse("[fluid]\ndelta = 0\n").unwrap();
        let e = c.validate_for(Purpose::Decay).unwrap_err().to_string();
        assert!(e.contains("appendixb"));
        assert!(c.validate_for(Purpose::AppendixB).is_ok());
        assert!(ExperimentConfig::default().validate_for(Purpose::AppendixB).is_err());
    }

    #[test]
    fn boundary_keys_must_match_kind() {
        assert!(parse("[boundary]\nkind = constant\nlo = 2\n").is_err());
        assert!(parse("[boundary]\nkind = spiral\n").is_err());
        let c = parse("[boundary]\nkind = constant\nvalue = 1.5\n").unwrap();
        assert_eq!(c.boundary.spec, BoundarySpec::Constant { value: 1.5 });
    }
}
