//! Command-line front end: argument parsing, flat key=value
//! configuration, deterministic JSON reports, and exit-code handling.
//!
//! Subcommands map one-to-one onto the library modules: `soliton` dumps
//! branch members as CSV or binary fields, `functionals` prints mass,
//! energy, and action, `verify` runs the named check suite, `spectrum`
//! diagonalizes the linearized operators, `modulate` decomposes a field
//! dump into orbit coordinates plus remainder, `evolve` integrates an
//! initial datum and reports the trajectory, and `stability` runs the
//! seeded perturbation experiment.
//!
//! Conventions shared by every subcommand:
//!
//! * Exit codes: 0 on success, 1 when a check fails or a computation
//!   breaks down at runtime, 2 for usage errors (bad flags, bad config
//!   keys, parameters outside module preconditions).
//! * Reports are JSON with a top-level "schema" tag; maps are emitted
//!   with sorted keys, so a fixed invocation (including the seed)
//!   reproduces its report byte for byte on one machine and build.
//! * `--config FILE` points to a flat `key=value` file (one pair per
//!   line, `#` comments) whose entries fill in any flag not given on
//!   the command line; explicit flags always win.
//! * `KPI_LAB_THREADS` caps the worker-thread count of the global pool
//!   used by the seed sweeps; dispatch itself is single-threaded.
//! * Field dumps: `.csv` writes `x,y,value` rows (y outer), `.bin`
//!   writes little-endian `u64 nx, f64 lx, u64 ny` then row-major
//!   values; binary dumps round-trip through `modulate --input` and
//!   `functionals --input`.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::checks::{run_suite, suites};
use crate::error::{Error, Result};
use crate::evolve::{run_observed, EvolutionConfig};
use crate::field::Field;
use crate::functionals::{action, mass};
use crate::grid::{make_grid, Grid};
use crate::linop::{build_fourth_order, build_l, coercivity_constant, spectrum};
use crate::modulation::{decompose, initial_guess, seeded_bump};
use crate::solitons::{critical_speed, line_soliton, scaled_zaitsev, speed, zaitsev, SolitonParams};

#[derive(Parser)]
#[command(
    name = "kpi-lab",
    version,
    about = "Numerical laboratory for a line-soliton family on a cylinder",
    max_term_width = 100
)]
struct Cli {
    /// Flat key=value config file; command-line flags override it
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump a branch member (or a plain line soliton) as a field
    Soliton(SolitonArgs),
    /// Mass, energy, and action of a field
    Functionals(FunctionalsArgs),
    /// Run a named check suite and report pass/fail per check
    Verify(VerifyArgs),
    /// Eigenvalues and kernel diagnostics of a linearized operator
    Spectrum(SpectrumArgs),
    /// Decompose a field dump into orbit coordinates plus remainder
    Modulate(ModulateArgs),
    /// Integrate an initial datum and report the trajectory
    Evolve(EvolveArgs),
    /// Seeded perturbation experiment with a delta-halving control
    Stability(StabilityArgs),
}

/// Grid flags shared by the field-producing subcommands.
#[derive(Args)]
struct GridArgs {
    /// x grid points [default: 512]
    #[arg(long)]
    nx: Option<usize>,
    /// x box length [default: 80]
    #[arg(long)]
    lx: Option<f64>,
    /// y grid points [default: 16]
    #[arg(long)]
    ny: Option<usize>,
}

impl GridArgs {
    fn build(&self, s: &Settings, default_ny: usize) -> Result<Grid> {
        make_grid(
            s.resolve(self.nx, "nx", 512)?,
            s.resolve(self.lx, "lx", 80.0)?,
            s.resolve(self.ny, "ny", default_ny)?,
        )
    }
}

#[derive(Args)]
struct SolitonArgs {
    /// Branch parameter a in [0, 1) [default: 0]
    #[arg(long)]
    a: Option<f64>,
    /// Scale parameter of the family member [default: 1]
    #[arg(long)]
    gamma: Option<f64>,
    /// x translation [default: 0]
    #[arg(long)]
    rho: Option<f64>,
    /// Emit the plain line soliton at this speed instead of a branch member
    #[arg(long, conflicts_with_all = ["a", "gamma", "rho"])]
    speed: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    /// Output path (.csv or .bin); stdout CSV when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FunctionalsArgs {
    /// Binary field dump to analyze; a branch member is built when omitted
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Branch parameter for the built member [default: 0]
    #[arg(long)]
    a: Option<f64>,
    /// Scale parameter for the built member [default: 1]
    #[arg(long)]
    gamma: Option<f64>,
    /// Speed entering the action [default: the branch speed c(a)]
    #[arg(long)]
    speed: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    /// Report path; stdout when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name, or "all" [default: all]
    #[arg(long)]
    suite: Option<String>,
    /// List the available suites instead of running one
    #[arg(long)]
    list: bool,
    /// Report path; stdout when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConstraintSet {
    /// Unconstrained minimization
    None,
    /// Orthogonal to the translation direction dx Q_c
    Translation,
    /// Orthogonal to both Q_c and dx Q_c
    Full,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Transverse mode number n of the operator L_n [default: 0]
    #[arg(long)]
    mode: Option<u32>,
    /// Wave speed c in (0, 4) [default: the critical speed]
    #[arg(long)]
    speed: Option<f64>,
    /// Number of smallest eigenpairs to report [default: 6]
    #[arg(long)]
    count: Option<usize>,
    /// Constraint set for the reported coercivity constant
    #[arg(long, value_enum, default_value_t = ConstraintSet::None)]
    constraints: ConstraintSet,
    /// Diagonalize the fourth-order form -dx L_1 dx (requires --mode 1)
    #[arg(long)]
    fourth: bool,
    /// x grid points [default: 512]
    #[arg(long)]
    nx: Option<usize>,
    /// x box length [default: 80]
    #[arg(long)]
    lx: Option<f64>,
    /// Report path; stdout when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModulateArgs {
    /// Binary field dump to decompose
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Initial guess for the branch parameter [default: 0]
    #[arg(long)]
    l_hint: Option<f64>,
    /// Report path; stdout when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    /// Branch parameter of the initial soliton [default: 0]
    #[arg(long)]
    a: Option<f64>,
    /// Size of the seeded mass-neutral perturbation [default: 0]
    #[arg(long)]
    delta: Option<f64>,
    /// Seed of the perturbation bump [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Final time [default: 10]
    #[arg(long)]
    t_end: Option<f64>,
    /// Time step [default: 0.005]
    #[arg(long)]
    dt: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    /// Steps between observations [default: 20]
    #[arg(long)]
    observer_stride: Option<usize>,
    /// Track modulation coordinates at every observation
    #[arg(long)]
    track_modulation: bool,
    /// Dump a binary field snapshot every K observations
    #[arg(long, value_name = "K", requires = "snapshot_prefix")]
    snapshot_every: Option<usize>,
    /// Path prefix for snapshot dumps (suffix NNNNN.bin is appended)
    #[arg(long, value_name = "PREFIX")]
    snapshot_prefix: Option<PathBuf>,
    /// Dump the final field here as a binary dump
    #[arg(long, value_name = "PATH")]
    final_state: Option<PathBuf>,
    /// Report path; stdout when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    /// Branch parameter of the perturbed soliton [default: 0]
    #[arg(long)]
    a: Option<f64>,
    /// Perturbation size; the control rerun uses delta/2 [default: 1e-3]
    #[arg(long)]
    delta: Option<f64>,
    /// Final time [default: 20]
    #[arg(long)]
    t_end: Option<f64>,
    /// Seed of the perturbation bump [default: 7]
    #[arg(long)]
    seed: Option<u64>,
    /// Time step [default: 0.0025]
    #[arg(long)]
    dt: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    /// Report path; stdout when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Values from the flat key=value config file.
struct Settings(HashMap<String, String>);

impl Settings {
    fn load(path: Option<&Path>) -> Result<Settings> {
        let mut map = HashMap::new();
        let Some(path) = path else {
            return Ok(Settings(map));
        };
        let text = fs::read_to_string(path)?;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected key=value, got {raw:?}",
                    path.display(),
                    index + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Settings(map))
    }

    /// Flag value if given, else the config entry, else the default.
    fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.0.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|e| Error::Config(format!("config key {key}={raw}: {e}"))),
        }
    }
}

/// Outcome of a dispatched subcommand that ran to completion.
enum Outcome {
    Pass,
    CheckFailure,
}

/// Parse argv, execute exactly one subcommand, and return the process
/// exit code: 0 pass, 1 check failure, 2 usage error.
pub fn parse_and_dispatch<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return u8::try_from(e.exit_code()).unwrap_or(2);
        }
    };
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return 2;
    }
    match dispatch(cli) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::CheckFailure) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ParamRange { .. }
                | Error::GridSize { .. }
                | Error::BoxLength(_)
                | Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

/// Cap the global worker pool from KPI_LAB_THREADS when set.
fn init_thread_pool() -> Result<()> {
    let Some(raw) = std::env::var_os("KPI_LAB_THREADS") else {
        return Ok(());
    };
    let text = raw.to_string_lossy();
    let threads: usize = text
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("KPI_LAB_THREADS={text}: expected a positive integer")))?;
    // A second initialization (only possible when embedding the CLI in
    // one process) keeps the existing pool; the cap is best-effort then.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Soliton(args) => soliton_cmd(args, &settings),
        Command::Functionals(args) => functionals_cmd(args, &settings),
        Command::Verify(args) => verify_cmd(args, &settings),
        Command::Spectrum(args) => spectrum_cmd(args, &settings),
        Command::Modulate(args) => modulate_cmd(args, &settings),
        Command::Evolve(args) => evolve_cmd(args, &settings),
        Command::Stability(args) => stability_cmd(args, &settings),
    }
}

/// Prefix a JSON object with its schema tag.
fn with_schema(name: &str, value: Value) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), json!(format!("kpi-lab/{name}/1")));
    match value {
        Value::Object(o) => map.extend(o),
        other => {
            map.insert("report".into(), other);
        }
    }
    Value::Object(map)
}

/// Write a JSON report to the path, or stdout when none is given.
fn emit_json(report: &Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Dump a field as CSV or binary, chosen by the output extension.
fn dump_field(field: &Field, out: Option<&Path>) -> Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            field.dump_csv(&mut stdout)
        }
        Some(path) => {
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            let mut file = std::io::BufWriter::new(fs::File::create(path)?);
            match ext {
                "csv" => field.dump_csv(&mut file),
                "bin" => field.dump_binary(&mut file),
                other => Err(Error::Config(format!(
                    "output extension {other:?} not recognized; use .csv or .bin"
                ))),
            }
        }
    }
}

fn soliton_cmd(args: SolitonArgs, s: &Settings) -> Result<Outcome> {
    let grid = args.grid.build(s, 16)?;
    let field = match args.speed {
        Some(c) => line_soliton(c, grid)?,
        None => {
            let a = s.resolve(args.a, "a", 0.0)?;
            let gamma = s.resolve(args.gamma, "gamma", 1.0)?;
            let rho = s.resolve(args.rho, "rho", 0.0)?;
            scaled_zaitsev(&SolitonParams::new((a, 0.0), gamma, rho)?, grid)?
        }
    };
    dump_field(&field, args.out.as_deref())?;
    Ok(Outcome::Pass)
}

fn functionals_cmd(args: FunctionalsArgs, s: &Settings) -> Result<Outcome> {
    let (field, default_speed) = match &args.input {
        Some(path) => {
            let mut file = std::io::BufReader::new(fs::File::open(path)?);
            (Field::load_binary(&mut file)?, critical_speed())
        }
        None => {
            let grid = args.grid.build(s, 16)?;
            let a = s.resolve(args.a, "a", 0.0)?;
            let gamma = s.resolve(args.gamma, "gamma", 1.0)?;
            let member = scaled_zaitsev(&SolitonParams::new((a, 0.0), gamma, 0.0)?, grid)?;
            (member, speed(a)?)
        }
    };
    let c = s.resolve(args.speed, "speed", default_speed)?;
    let report = action(&field, c)?;
    let value = with_schema(
        "functionals",
        serde_json::to_value(report).map_err(|e| Error::Config(e.to_string()))?,
    );
    emit_json(&value, args.out.as_deref())?;
    Ok(Outcome::Pass)
}

fn verify_cmd(args: VerifyArgs, s: &Settings) -> Result<Outcome> {
    if args.list {
        let list: Vec<Value> = suites()
            .iter()
            .map(|spec| json!({"name": spec.name, "summary": spec.summary}))
            .collect();
        let value = with_schema("suites", json!({ "suites": list }));
        emit_json(&value, args.out.as_deref())?;
        return Ok(Outcome::Pass);
    }
    let suite = s.resolve(args.suite, "suite", "all".to_string())?;
    let results = run_suite(&suite)?;
    let all_pass = results.iter().all(|c| c.pass);
    let mut checks = Map::new();
    for c in &results {
        checks.insert(
            c.name.clone(),
            json!({
                "predicted": c.predicted,
                "measured": c.measured,
                "tolerance": c.tolerance,
                "pass": c.pass,
            }),
        );
    }
    let value = with_schema(
        "verify",
        json!({
            "suite": suite,
            "pass": all_pass,
            "checks": Value::Object(checks),
        }),
    );
    emit_json(&value, args.out.as_deref())?;
    Ok(if all_pass {
        Outcome::Pass
    } else {
        Outcome::CheckFailure
    })
}

fn spectrum_cmd(args: SpectrumArgs, s: &Settings) -> Result<Outcome> {
    let mode = s.resolve(args.mode, "mode", 0)?;
    let c = s.resolve(args.speed, "speed", critical_speed())?;
    let count = s.resolve(args.count, "count", 6)?;
    let nx = s.resolve(args.nx, "nx", 512)?;
    let lx = s.resolve(args.lx, "lx", 80.0)?;
    if args.fourth && mode != 1 {
        return Err(Error::Config(
            "--fourth diagonalizes -dx L_1 dx and requires --mode 1".into(),
        ));
    }
    let matrix = if args.fourth {
        build_fourth_order(c, nx, lx)?
    } else {
        build_l(mode, c, nx, lx)?
    };
    let report = spectrum(&matrix, count)?;

    let profile = crate::solitons::line_soliton_profile(c, nx, lx)?;
    let constraint_profiles = match args.constraints {
        ConstraintSet::None => vec![],
        ConstraintSet::Translation => vec![profile.deriv(1)],
        ConstraintSet::Full => vec![profile.clone(), profile.deriv(1)],
    };
    let coercivity = if constraint_profiles.is_empty() {
        Value::Null
    } else {
        json!(coercivity_constant(&matrix, &constraint_profiles)?)
    };

    let value = with_schema(
        "spectrum",
        json!({
            "mode": mode,
            "speed": c,
            "count": count,
            "operator": if args.fourth { "fourth-order" } else { "second-order" },
            "constraints": match args.constraints {
                ConstraintSet::None => "none",
                ConstraintSet::Translation => "translation",
                ConstraintSet::Full => "full",
            },
            "coercivity_constant": coercivity,
            "report": serde_json::to_value(&report).map_err(|e| Error::Config(e.to_string()))?,
        }),
    );
    emit_json(&value, args.out.as_deref())?;
    Ok(Outcome::Pass)
}

fn modulate_cmd(args: ModulateArgs, s: &Settings) -> Result<Outcome> {
    let mut file = std::io::BufReader::new(fs::File::open(&args.input)?);
    let u = Field::load_binary(&mut file)?;
    let l_hint = s.resolve(args.l_hint, "l-hint", 0.0)?;
    let guess = initial_guess(&u, l_hint)?;
    let state = decompose(&u, &guess)?;

    let mut reconstruction = state.reconstruct()?;
    reconstruction.add_scaled(-1.0, &u);
    let value = with_schema(
        "modulate",
        json!({
            "a_vec": [state.params.a_vec.0, state.params.a_vec.1],
            "a_norm": state.params.a_norm(),
            "gamma": state.params.gamma,
            "rho": state.params.rho,
            "ortho_residuals": state.ortho_residuals,
            "newton_iterations": state.newton_iterations,
            "residual_history": state.residual_history,
            "eta_l2_norm": state.eta.l2_norm_squared().sqrt(),
            "eta_z1_norm": state.eta.z1_norm_extended(),
            "reconstruction_residual": reconstruction.max_abs(),
        }),
    );
    emit_json(&value, args.out.as_deref())?;
    Ok(Outcome::Pass)
}

fn evolve_cmd(args: EvolveArgs, s: &Settings) -> Result<Outcome> {
    let grid = args.grid.build(s, 16)?;
    let a = s.resolve(args.a, "a", 0.0)?;
    let delta = s.resolve(args.delta, "delta", 0.0)?;
    let seed = s.resolve(args.seed, "seed", 0)?;
    let cfg = EvolutionConfig {
        dt: s.resolve(args.dt, "dt", 0.005)?,
        t_end: s.resolve(args.t_end, "t-end", 10.0)?,
        observer_stride: s.resolve(args.observer_stride, "observer-stride", 20)?,
        track_modulation: args.track_modulation.then_some(a),
        ..EvolutionConfig::default()
    };

    // Initial datum: branch member plus a seeded transversal bump,
    // rescaled back to the member's mass so delta stays mass-neutral.
    let z = zaitsev(a, grid)?;
    let mut u0 = z.clone();
    if delta != 0.0 {
        let bump = seeded_bump(grid, seed, 10, 3);
        u0.add_scaled(delta, &bump);
        let scale = (mass(&z) / mass(&u0)).sqrt();
        u0 = u0.scaled(scale);
    }

    let snapshot_every = args.snapshot_every;
    let snapshot_prefix = args.snapshot_prefix.clone();
    let keep_final = args.final_state.is_some();
    let mut final_field: Option<Field> = None;
    let (report, _) = run_observed(&u0, &cfg, a, |index, _t, field| {
        if let (Some(every), Some(prefix)) = (snapshot_every, snapshot_prefix.as_ref()) {
            if index % every == 0 {
                let path = snapshot_path(prefix, index);
                let mut file = std::io::BufWriter::new(fs::File::create(path)?);
                field.dump_binary(&mut file)?;
            }
        }
        if keep_final {
            // The last observation always lands on the final step, so
            // this holds the mean-restored final state after the run.
            final_field = Some(field.clone());
        }
        Ok(())
    })?;

    if let (Some(path), Some(field)) = (&args.final_state, &final_field) {
        let mut file = std::io::BufWriter::new(fs::File::create(path)?);
        field.dump_binary(&mut file)?;
    }

    let value = with_schema(
        "evolve",
        json!({
            "a": a,
            "delta": delta,
            "seed": seed,
            "report": serde_json::to_value(&report).map_err(|e| Error::Config(e.to_string()))?,
        }),
    );
    emit_json(&value, args.out.as_deref())?;
    Ok(Outcome::Pass)
}

/// `prefix` + zero-padded observation index + `.bin`.
fn snapshot_path(prefix: &Path, index: usize) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(format!("{index:05}.bin"));
    PathBuf::from(name)
}

fn stability_cmd(args: StabilityArgs, s: &Settings) -> Result<Outcome> {
    let grid = args.grid.build(s, 32)?;
    let a = s.resolve(args.a, "a", 0.0)?;
    let delta = s.resolve(args.delta, "delta", 1e-3)?;
    let t_end = s.resolve(args.t_end, "t-end", 20.0)?;
    let seed = s.resolve(args.seed, "seed", 7)?;
    let dt = s.resolve(args.dt, "dt", 0.0025)?;
    let report = crate::evolve::stability_experiment(a, delta, t_end, seed, grid, dt)?;
    let value = with_schema(
        "stability",
        serde_json::to_value(&report).map_err(|e| Error::Config(e.to_string()))?,
    );
    emit_json(&value, args.out.as_deref())?;
    Ok(Outcome::Pass)
}
