#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod emit;
mod svg;

use afde::closed_forms::{self, IsotropicExponent, Normalization, VssCalibration};
use afde::grid::{self, TensorGrid};
use afde::similarity::{derive_similarity, validate_exponents};
use afde::solver::{self, BoundaryCondition, DriftScheme, Floor, ProfileConfig, Scheme, SolverConfig, SolverError};
use afde::verify::{self, ExperimentReport, InitialData, VerifyError};
use afde::{Field, Medium};
use clap::{Parser, Subcommand, ValueEnum};
use config::{BcName, ConfigError, DataName, DriftName, FloorKind, Format, InitialKind, RunConfig, SchemeName};
use emit::Sink;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "afde", version, about = "Anisotropic fast diffusion: exponents, closed forms, solvers and experiments")]
struct Cli {
    /// TOML run configuration (see CONFIG.md).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Exponents m_1,...,m_N when no config is given.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    m: Option<Vec<f64>>,
    /// Output directory, overriding output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed, overriding experiment.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output formats, overriding output.formats. JSON is always written.
    #[arg(long, global = true, value_enum)]
    format: Vec<Format>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the self-similarity exponents.
    Similarity {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a closed form at points, printing CSV.
    Eval {
        form: Form,
        /// Point as comma-separated coordinates; repeatable.
        #[arg(long = "point", required = true, allow_negative_numbers = true)]
        points: Vec<String>,
        /// Time for time-dependent forms.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Profile constant (barenblatt-1d, isotropic); defaults to the unit-mass value.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Solve the Cauchy problem from the configured initial datum.
    Run,
    /// Compute the steady self-similar profile.
    Profile,
    /// Run a verification experiment.
    Verify { experiment: Experiment },
    /// Re-render a saved report as text and, with --format svg, as SVG.
    Report { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    #[value(name = "barenblatt-1d")]
    Barenblatt1d,
    #[value(name = "vss-1d")]
    Vss1d,
    Isotropic,
    Partition,
    Sandwich,
    Gauge,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Benchmark,
    Smoothing,
    #[value(name = "isotropic_profile")]
    IsotropicProfile,
    Tail,
    Ghp,
    Acre,
    Rates,
    #[value(name = "local_mass")]
    LocalMass,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0} verdict(s) failed")]
    Verdict(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verdict(_) => 3,
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(_) | SolverError::Dimension { .. } | SolverError::Grid(_) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

/// Config from --config, else from --m, with command-line overrides applied.
fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (&cli.config, &cli.m) {
        (Some(path), _) => config::read_config(&path.to_string_lossy())?,
        (None, Some(m)) => {
            let cfg = RunConfig::for_exponents(m.clone());
            let errs = cfg.problems();
            if !errs.is_empty() {
                return Err(ConfigError::Invalid(errs).into());
            }
            cfg
        }
        (None, None) => return Err(CliError::Input("exponents are required: pass --m or --config".into())),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = Some(seed);
    }
    if !cli.format.is_empty() {
        cfg.output.formats = cli.format.clone();
    }
    Ok(cfg)
}

fn medium(cfg: &RunConfig) -> Result<Medium, CliError> {
    validate_exponents(cfg.exponents.n, &cfg.exponents.m).map_err(input)
}

fn sink(cfg: &RunConfig, experiment: &str) -> Sink {
    Sink { dir: PathBuf::from(&cfg.output.dir), formats: cfg.output.formats.clone(), stem: format!("{experiment}-{}", cfg.hash()) }
}

fn stamp(rep: &mut ExperimentReport, cfg: &RunConfig) {
    rep.label("config", cfg.canonical_json());
    rep.label("config_hash", cfg.hash());
    rep.label("version", env!("CARGO_PKG_VERSION"));
}

fn solver_config(cfg: &RunConfig, me: &Medium) -> SolverConfig<f64> {
    let s = &cfg.solver;
    let bc = match s.bc {
        BcName::Reflecting => BoundaryCondition::Reflecting,
        BcName::Zero => BoundaryCondition::ZeroDirichlet,
        BcName::Barrier => {
            // exterior data from the partition surrogate of the very singular solution
            let se = derive_similarity(me);
            let cal = VssCalibration::surrogate(me, Normalization::Certified);
            BoundaryCondition::BarrierDirichlet(Arc::new(move |x: &[f64], t: f64| {
                closed_forms::partition_min(x, t, &se, &cal).unwrap_or(0.0)
            }))
        }
    };
    SolverConfig {
        scheme: match s.scheme {
            SchemeName::Explicit => Scheme::Explicit,
            SchemeName::Implicit => Scheme::LinearlyImplicit,
        },
        floor: match s.floor_kind {
            FloorKind::Relative => Floor::Relative(s.floor),
            FloorKind::Absolute => Floor::Absolute(s.floor),
        },
        theta: s.theta,
        bc,
        snapshots: s.snapshots.clone(),
        steady_tol: s.steady_tol,
        max_steps: s.max_steps,
        drift: drift(s.drift),
        ..SolverConfig::default()
    }
}

fn drift(d: DriftName) -> DriftScheme {
    match d {
        DriftName::Hybrid => DriftScheme::Hybrid,
        DriftName::Upwind => DriftScheme::Upwind,
    }
}

fn profile_config(cfg: &RunConfig) -> ProfileConfig<f64> {
    ProfileConfig {
        steady_tol: cfg.solver.steady_tol,
        max_iters: cfg.solver.max_iters,
        drift: drift(cfg.solver.drift),
        ..ProfileConfig::default()
    }
}

fn grid_or(cfg: &RunConfig, half: f64, n: usize) -> Result<TensorGrid<f64>, CliError> {
    let d = cfg.exponents.n;
    let h = if cfg.grid.half.is_empty() { vec![half; d] } else { cfg.grid.half.clone() };
    let n = if cfg.grid.n.is_empty() { vec![n; d] } else { cfg.grid.n.clone() };
    TensorGrid::new(h, n).map_err(input)
}

fn initial_field(cfg: &RunConfig, g: &TensorGrid<f64>) -> Result<Field, CliError> {
    let d = g.dim();
    let w: Vec<f64> = if cfg.initial.width.is_empty() { g.half().iter().map(|l| l / 8.0).collect() } else { cfg.initial.width.clone() };
    let shape = |x: &[f64]| -> f64 {
        match cfg.initial.kind {
            InitialKind::Box => {
                if (0..d).all(|i| x[i].abs() <= w[i]) {
                    1.0
                } else {
                    0.0
                }
            }
            InitialKind::Gaussian => (-(0..d).map(|i| (x[i] / w[i]).powi(2)).sum::<f64>() / 2.0).exp(),
        }
    };
    let raw = grid::sample(shape, g, 0.0).map_err(input)?;
    let m0 = grid::mass(&raw);
    if !(m0 > 0.0) {
        return Err(CliError::Input("initial datum has no mass on this grid; widen initial.width".into()));
    }
    let k = cfg.initial.mass / m0;
    Field::new(g.clone(), raw.values().iter().map(|v| v * k).collect(), 0.0).map_err(input)
}

fn cmd_similarity(cfg: &RunConfig, json: bool) -> Result<(), CliError> {
    let me = medium(cfg)?;
    let se = derive_similarity(&me);
    if json {
        let v = serde_json::json!({
            "m": me.m(), "alpha": se.alpha, "beta": se.beta, "sigma": se.sigma, "a": se.a,
            "gamma": se.gamma, "mu": se.mu, "delta": se.delta,
        });
        println!("{}", serde_json::to_string_pretty(&v).map_err(input)?);
        return Ok(());
    }
    println!("alpha = {:.12}", se.alpha);
    println!("beta  = {:.12}", se.beta);
    println!("{:>4} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}", "axis", "m", "sigma", "a", "gamma", "mu", "delta");
    for i in 0..me.dim() {
        println!(
            "{:>4} {:>14.10} {:>14.10} {:>14.10} {:>14.10} {:>14.10} {:>14.10}",
            i + 1,
            me.m()[i],
            se.sigma[i],
            se.a[i],
            se.gamma[i],
            se.mu[i],
            se.delta[i]
        );
    }
    Ok(())
}

fn cmd_eval(cfg: &RunConfig, form: Form, points: &[String], t: f64, c: Option<f64>) -> Result<(), CliError> {
    let me = medium(cfg)?;
    let se = derive_similarity(&me);
    let d = me.dim();
    let m0 = me.m()[0];
    let one_d = || if d == 1 { Ok(()) } else { Err(CliError::Input("this form is one-dimensional; pass a single exponent".into())) };
    let cal = VssCalibration::surrogate(&me, Normalization::Certified);
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let cols = match form {
        Form::Sandwich => "lower,upper",
        _ => "value",
    };
    println!("{},{cols}", header.join(","));
    for p in points {
        let x: Vec<f64> = p.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| input(format!("point {p:?}: {e}")))?;
        if x.len() != d {
            return Err(CliError::Input(format!("point {p:?} has {} coordinates, expected {d}", x.len())));
        }
        let vals: Vec<f64> = match form {
            Form::Barenblatt1d => {
                one_d()?;
                vec![closed_forms::barenblatt_profile_1d(x[0], m0, c.unwrap_or(1.0), Normalization::Certified).map_err(input)?]
            }
            Form::Vss1d => {
                one_d()?;
                vec![closed_forms::vss_1d(x[0], t, m0, Normalization::Certified).map_err(input)?]
            }
            Form::Isotropic => {
                if !me.is_isotropic() {
                    return Err(CliError::Input("isotropic form needs equal exponents".into()));
                }
                let c = match c {
                    Some(c) => c,
                    None => closed_forms::isotropic_constant_for_mass(m0, d, 1.0).map_err(input)?,
                };
                vec![closed_forms::isotropic_profile(&x, m0, c, IsotropicExponent::Corrected).map_err(input)?]
            }
            Form::Partition => vec![closed_forms::partition_min(&x, t, &se, &cal).map_err(input)?],
            Form::Sandwich => vec![
                closed_forms::sandwich_bound(&x, &se, cal.k1).map_err(input)?,
                closed_forms::sandwich_bound(&x, &se, cal.k2).map_err(input)?,
            ],
            Form::Gauge => vec![closed_forms::anisotropic_gauge(&x, &se).map_err(input)?],
        };
        let row: Vec<String> = x.iter().chain(&vals).map(|v| format!("{v:e}")).collect();
        println!("{}", row.join(","));
    }
    Ok(())
}

fn cmd_run(cfg: &RunConfig) -> Result<ExperimentReport, CliError> {
    let me = medium(cfg)?;
    let g = grid_or(cfg, 10.0, 64)?;
    let u0 = initial_field(cfg, &g)?;
    let scfg = solver_config(cfg, &me);
    let traj = solver::solve_cauchy(&u0, cfg.solver.t_end, &me, &scfg)?;
    let mut rep = ExperimentReport::new("run", me.m());
    rep.param("t_end", cfg.solver.t_end);
    rep.param("floor", traj.floor);
    rep.param("steps", traj.steps.len() as f64);
    rep.param("mass_drift", traj.relative_mass_drift());
    rep.series("mass", &traj.times, &traj.mass);
    rep.series("sup", &traj.times, &traj.sup);
    stamp(&mut rep, cfg);
    let out = sink(cfg, "run");
    if cfg.output.formats.contains(&Format::Csv) {
        for (k, f) in traj.snapshots.iter().enumerate() {
            out.field(&format!("snapshot{k}"), f)?;
        }
    }
    Ok(rep)
}

fn cmd_profile(cfg: &RunConfig) -> Result<ExperimentReport, CliError> {
    let me = medium(cfg)?;
    let se = derive_similarity(&me);
    let g = grid_or(cfg, 20.0, 128)?;
    let mass = cfg.experiment.mass.unwrap_or(1.0);
    let prof = solver::solve_profile(mass, &me, &se, &g, &profile_config(cfg))?;
    let mut rep = ExperimentReport::new("profile", me.m());
    rep.param("mass", prof.mass);
    rep.param("iterations", prof.iterations as f64);
    rep.param("rate", prof.rate);
    rep.param("sup", grid::sup_norm(&prof.field));
    for i in 0..me.dim() {
        let (ys, vs) = axis_values(&prof.field, i);
        rep.series(&format!("axis.{}", i + 1), &ys, &vs);
    }
    stamp(&mut rep, cfg);
    if cfg.output.formats.contains(&Format::Csv) {
        sink(cfg, "profile").field("field", &prof.field)?;
    }
    Ok(rep)
}

/// Values on the positive half of axis `axis` through the cells nearest the origin.
fn axis_values(f: &Field, axis: usize) -> (Vec<f64>, Vec<f64>) {
    let g = f.grid();
    let d = g.dim();
    let mut idx: Vec<usize> = g.n().iter().map(|n| n / 2).collect();
    (g.n()[axis] / 2..g.n()[axis])
        .map(|j| {
            idx[axis] = j;
            let k = g.flat(&idx[..d]);
            (g.center(axis, j), f.values()[k])
        })
        .unzip()
}

fn relaxation(cfg: &RunConfig) -> verify::RelaxationConfig {
    let e = &cfg.experiment;
    let mut r = verify::RelaxationConfig { profile: profile_config(cfg), ..Default::default() };
    if !cfg.grid.half.is_empty() {
        r.half = cfg.grid.half.clone();
    }
    if !cfg.grid.n.is_empty() {
        r.n = cfg.grid.n.clone();
    }
    if let Some(m) = e.mass {
        r.mass = m;
    }
    if let [a, b] = e.window[..] {
        r.window = (a, b);
    }
    if let Some(s) = e.samples {
        r.samples = s;
    }
    if let Some(h) = e.delay {
        r.delay = h;
    }
    match e.data {
        DataName::Bump => {}
        DataName::Delayed => r.bump = InitialData::Delayed { h: r.delay },
        DataName::Exact => r.bump = InitialData::ExactSlice,
    }
    r
}

fn cmd_verify(cfg: &RunConfig, exp: Experiment) -> Result<ExperimentReport, CliError> {
    let me = medium(cfg)?;
    let e = &cfg.experiment;
    let mut rep = match exp {
        Experiment::Benchmark => {
            let mut b = verify::BenchmarkConfig::default();
            if me.dim() != 1 {
                return Err(CliError::Input("benchmark is one-dimensional; pass a single exponent".into()));
            }
            b.m = me.m()[0];
            if let Some(&h) = cfg.grid.half.first() {
                b.half = h;
            }
            if let Some(&n) = cfg.grid.n.first() {
                b.h = 2.0 * b.half / n as f64;
            }
            verify::exp_barenblatt_benchmark(&b)?
        }
        Experiment::Smoothing => {
            let mut s = verify::SmoothingConfig::for_exponents(&me);
            if !cfg.grid.half.is_empty() {
                s.box_half = cfg.grid.half.iter().map(|l| l / 16.0).collect();
                s.half = cfg.grid.half.clone();
            }
            if !cfg.grid.n.is_empty() {
                s.n = cfg.grid.n.clone();
            }
            if let Some(m) = e.mass {
                s.mass = m;
            }
            if let [a, b] = e.window[..] {
                s.window = (a, b);
            }
            if let Some(n) = e.samples {
                s.samples = n;
            }
            verify::exp_smoothing_and_spread(&me, &s)?
        }
        Experiment::IsotropicProfile => {
            if !me.is_isotropic() {
                return Err(CliError::Input("isotropic_profile needs equal exponents".into()));
            }
            let mut p = verify::IsotropicProfileConfig { m: me.m()[0], dim: me.dim(), profile: profile_config(cfg), ..Default::default() };
            if let Some(&h) = cfg.grid.half.first() {
                p.half = h;
            }
            if let Some(&n) = cfg.grid.n.first() {
                p.n = n;
            }
            if let Some(m) = e.mass {
                p.mass = m;
            }
            verify::exp_isotropic_profile(&p)?
        }
        Experiment::Tail => {
            let mut t = verify::TailConfig { profile: profile_config(cfg), ..Default::default() };
            if !cfg.grid.half.is_empty() {
                t.half = cfg.grid.half.clone();
            }
            if !cfg.grid.n.is_empty() {
                t.n = cfg.grid.n.clone();
            }
            if let Some(m) = e.mass {
                t.mass = m;
            }
            if !e.ladder.is_empty() {
                t.ladder = e.ladder.clone();
            }
            verify::exp_profile_and_tail(&me, &t)?
        }
        Experiment::Ghp => verify::exp_ghp(&me, &relaxation(cfg))?,
        Experiment::Acre => verify::exp_acre(&me, &relaxation(cfg))?,
        Experiment::Rates => {
            let mut sg = verify::SemigroupConfig::default();
            if let Some(s) = e.seed {
                sg.seed = s;
            }
            if let Some(p) = e.pairs {
                sg.pairs = p;
            }
            verify::exp_rates_and_semigroup(&me, &relaxation(cfg), &sg)?
        }
        Experiment::LocalMass => {
            let mut l = verify::LocalMassConfig { t_end: cfg.solver.t_end, ..Default::default() };
            if !cfg.grid.half.is_empty() {
                l.half = cfg.grid.half.clone();
            }
            if !cfg.grid.n.is_empty() {
                l.n = cfg.grid.n.clone();
            }
            if !e.ladder.is_empty() {
                l.masses = e.ladder.clone();
            }
            if let Some(n) = e.samples {
                l.samples = n;
            }
            verify::exp_local_mass(&me, &l)?
        }
    };
    stamp(&mut rep, cfg);
    Ok(rep)
}

fn finish(cfg: &RunConfig, rep: &ExperimentReport) -> Result<(), CliError> {
    print!("{}", emit::summary(rep));
    for p in sink(cfg, &rep.experiment).report(rep)? {
        println!("wrote {}", p.display());
    }
    let failed = rep.verdicts.iter().filter(|v| !v.passed).count();
    if failed > 0 {
        return Err(CliError::Verdict(failed));
    }
    Ok(())
}

fn cmd_report(cli: &Cli, path: &PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)?;
    let rep: ExperimentReport = serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    print!("{}", emit::summary(&rep));
    if cli.format.contains(&Format::Svg) {
        let dir = cli.out.clone().unwrap_or_else(|| path.parent().map(PathBuf::from).unwrap_or_default());
        std::fs::create_dir_all(&dir)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| rep.experiment.clone());
        let out = dir.join(format!("{stem}.svg"));
        std::fs::write(&out, svg::render(&rep))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Command::Report { path } = &cli.cmd {
        return cmd_report(cli, path);
    }
    let cfg = resolve(cli)?;
    match &cli.cmd {
        Command::Similarity { json } => cmd_similarity(&cfg, *json),
        Command::Eval { form, points, t, c } => cmd_eval(&cfg, *form, points, *t, *c),
        Command::Run => finish(&cfg, &cmd_run(&cfg)?),
        Command::Profile => finish(&cfg, &cmd_profile(&cfg)?),
        Command::Verify { experiment } => finish(&cfg, &cmd_verify(&cfg, *experiment)?),
        Command::Report { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = std::env::var("AFDE_THREADS").ok().and_then(|s| s.parse().ok()).unwrap_or(1);
    solver::set_threads(threads);
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
