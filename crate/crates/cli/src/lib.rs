//! Command-line front end for `isoparity-core`.
//!
//! Exit codes: 0 when everything checked holds, 1 when a counterexample or
//! failed search is reported, 2 for invalid input or usage errors.

pub mod brauer_cmd;
pub mod human;
pub mod suites;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use isoparity_core::gen::{GenConfig, DEFAULT_RETRY_BUDGET};
use isoparity_core::lattice::{z, GLattice, LatticeIsogeny, PairedGLattice};
use isoparity_core::linalg::IntMatrix;
use isoparity_core::pgroup::{ChiMethod, PGroupAutInstance};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::suites::{Suite, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COUNTEREXAMPLE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "isoparity",
    version,
    about = "Exact invariants of p-group automorphisms, G-lattices and Brauer relations"
)]
pub struct Cli {
    /// print JSON instead of text
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Fast,
    Bruteforce,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Determinant character χ_M of an automorphism of a finite abelian p-group
    Chi {
        /// instance JSON: {"p", "exponents", "action"}
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_enum, default_value = "fast")]
        method: MethodArg,
    },
    /// Tate cohomology Ĥ⁰, H¹ and the Herbrand quotient of a G-lattice
    Cohomology {
        /// lattice JSON: {"n", "sigma"}
        #[arg(long)]
        file: PathBuf,
    },
    /// Discriminant group of a lattice with invariant pairing
    Discriminant {
        /// lattice JSON: {"n", "sigma", "gram"}
        #[arg(long)]
        file: PathBuf,
    },
    /// Order of the Betts group
    Betts {
        /// lattice JSON: {"n", "sigma", "gram"}
        #[arg(long)]
        file: PathBuf,
        /// also compute the index by enumerating H¹
        #[arg(long)]
        bruteforce: bool,
    },
    /// z(φ) = #coker/#ker, and z of the induced map on invariants
    Zfun {
        /// JSON: {"phi"} or {"source": {"n","sigma"}, "target": {"n","sigma"}, "phi"}
        #[arg(long)]
        file: PathBuf,
    },
    /// Run a seeded verification suite
    Verify(VerifyArgs),
    /// Brauer relations, realizations, regulator constants
    Brauer {
        #[command(subcommand)]
        command: brauer_cmd::BrauerCommand,
    },
}

#[derive(clap::Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// master seed; a random one is chosen and printed when absent
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// odd prime
    #[arg(long, default_value_t = 3)]
    pub p: u64,
    #[arg(long, default_value_t = 5)]
    pub max_rank: usize,
    /// largest order of the cyclic group
    #[arg(long, default_value_t = 6)]
    pub max_n: u64,
    #[arg(long, default_value_t = 4)]
    pub max_exponent: u32,
    #[arg(long, default_value_t = 3)]
    pub coefficient_bound: i64,
    /// generator rejections allowed per instance
    #[arg(long, default_value_t = DEFAULT_RETRY_BUDGET)]
    pub retry_budget: u32,
    /// worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// re-check the failures embedded in a saved report
    #[arg(long, conflicts_with = "seed")]
    pub replay: Option<PathBuf>,
    /// also write the JSON report to this file
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Failed(String),
}

/// A command's result in both output formats.
pub struct Response {
    pub value: Value,
    pub human: String,
    pub status: i32,
}

impl Response {
    pub fn ok(value: Value, human: String) -> Self {
        Self { value, human, status: EXIT_OK }
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

/// The given seed, or one drawn from the clock and announced on stderr.
pub fn seed_or_random(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let t = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
        let s = (t as u64) ^ ((t >> 64) as u64);
        eprintln!("seed: {s}");
        s
    })
}

#[derive(Serialize, Deserialize)]
pub struct ChiOutput {
    pub p: u64,
    pub chi: u64,
    pub components: Vec<u64>,
    pub fixed_count: String,
}

#[derive(Deserialize)]
struct ZfunInput {
    phi: IntMatrix,
    #[serde(default)]
    source: Option<GLattice>,
    #[serde(default)]
    target: Option<GLattice>,
}

fn chi(file: &Path, method: MethodArg) -> Result<Response, CliError> {
    let inst: PGroupAutInstance = read_json(file)?;
    let method = match method {
        MethodArg::Fast => ChiMethod::Fast,
        MethodArg::Bruteforce => ChiMethod::Bruteforce,
    };
    let value = inst.chi(method).map_err(input)?;
    let components = (0..inst.exponent() as usize)
        .map(|i| match method {
            ChiMethod::Fast => inst.chi_component(i),
            ChiMethod::Bruteforce => inst.chi_component_bruteforce(i),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(input)?;
    let fixed = inst.fixed_count().map_err(input)?;
    let human = format!("χ_M = {value} (mod {}), components {components:?}, #M^T = {fixed}\n", inst.p());
    let out = ChiOutput { p: inst.p(), chi: value, components, fixed_count: fixed.to_string() };
    Ok(Response::ok(json!(out), human))
}

fn cohomology(file: &Path) -> Result<Response, CliError> {
    let lat: GLattice = read_json(file)?;
    let c = lat.cohomology().map_err(input)?;
    let human = format!("Ĥ⁰ = {}\nH¹ = {}\nHerbrand quotient = {}\n", c.tate_h0, c.h1, c.herbrand);
    Ok(Response::ok(json!(c), human))
}

fn discriminant(file: &Path) -> Result<Response, CliError> {
    let lat: PairedGLattice = read_json(file)?;
    let d = lat.discriminant().map_err(input)?;
    let human = format!("Φ = {} (order {})\n#Φ^G = {}\n", d.phi_group, d.phi_group.order(), d.fixed_order);
    Ok(Response::ok(json!(d), human))
}

fn betts(file: &Path, bruteforce: bool) -> Result<Response, CliError> {
    let lat: PairedGLattice = read_json(file)?;
    let fast = lat.betts_order().map_err(input)?;
    let brute = if bruteforce { Some(lat.betts_order_bruteforce().map_err(input)?) } else { None };
    let mut human = format!("#B = {fast}\n");
    let mut status = EXIT_OK;
    if let Some(b) = &brute {
        human.push_str(&format!("enumerated #B = {b}\n"));
        if b != &fast {
            status = EXIT_COUNTEREXAMPLE;
        }
    }
    let value = json!({
        "betts_order": fast.to_string(),
        "betts_order_bruteforce": brute.map(|b| b.to_string()),
    });
    Ok(Response { value, human, status })
}

fn zfun(file: &Path) -> Result<Response, CliError> {
    let inp: ZfunInput = read_json(file)?;
    let zv = z(&inp.phi).map_err(input)?;
    let zt = z(&inp.phi.transpose()).map_err(input)?;
    let mut human = format!("z(φ) = {zv}\nz(φᵀ) = {zt}\n");
    let mut value = json!({ "z": zv.to_string(), "z_transpose": zt.to_string() });
    match (inp.source, inp.target) {
        (Some(a), Some(b)) => {
            let iso = LatticeIsogeny::new(a, b, inp.phi).map_err(input)?;
            let h0 = iso.invariant_map().map_err(input)?;
            human.push_str(&format!("z(H⁰(φ)) = {}\n", h0.z));
            value["invariant"] = json!(h0);
        }
        (None, None) => {}
        _ => return Err(CliError::Input("give both source and target, or neither".into())),
    }
    Ok(Response::ok(value, human))
}

fn verify(args: &VerifyArgs) -> Result<Response, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build().map_err(input)?;
    let report = if let Some(path) = &args.replay {
        let saved: VerifyReport = read_json(path)?;
        if saved.suite != args.suite {
            return Err(CliError::Input(format!(
                "report is for suite {}, not {}",
                saved.suite.name(),
                args.suite.name()
            )));
        }
        pool.install(|| suites::replay(&saved)).map_err(input)?
    } else {
        let cfg = GenConfig {
            seed: seed_or_random(args.seed),
            p: args.p,
            max_rank: args.max_rank,
            max_n: args.max_n,
            max_exponent: args.max_exponent,
            coefficient_bound: args.coefficient_bound,
            trials: args.trials,
            retry_budget: args.retry_budget,
        };
        pool.install(|| suites::run_suite(args.suite, &cfg)).map_err(input)?
    };
    eprintln!("{}: wall time {:.3} s", report.suite.name(), report.wall_time.as_secs_f64());
    if let Some(path) = &args.report {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(Response {
        human: verify_summary(&report),
        status: if report.all_pass() { EXIT_OK } else { EXIT_COUNTEREXAMPLE },
        value: json!(report),
    })
}

fn verify_summary(r: &VerifyReport) -> String {
    let mut s = format!(
        "{}{}: {}/{} trials pass (seed {}, p = {}, {} nontrivial)\n",
        r.suite.name(),
        if r.replay { " replay" } else { "" },
        r.passed,
        r.trials,
        r.seed,
        r.config.p,
        r.nontrivial
    );
    if !r.strategies.is_empty() {
        let parts: Vec<String> = r.strategies.iter().map(|(k, v)| format!("{k} {v}")).collect();
        s.push_str(&format!("constructions: {}; generator retries: {}\n", parts.join(", "), r.retries));
    }
    for f in &r.failures {
        s.push_str(&format!("FAIL trial {}: lhs {} vs rhs {}\n", f.trial, f.lhs, f.rhs));
    }
    s
}

fn dispatch(cli: &Cli) -> Result<Response, CliError> {
    match &cli.command {
        Command::Chi { file, method } => chi(file, *method),
        Command::Cohomology { file } => cohomology(file),
        Command::Discriminant { file } => discriminant(file),
        Command::Betts { file, bruteforce } => betts(file, *bruteforce),
        Command::Zfun { file } => zfun(file),
        Command::Verify(args) => verify(args),
        Command::Brauer { command } => brauer_cmd::run(command),
    }
}

/// Parses arguments, runs the command and writes its output. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(resp) => {
            let text = if cli.json {
                serde_json::to_string_pretty(&resp.value).expect("output serializes") + "\n"
            } else {
                human::abbreviate_numbers(&resp.human)
            };
            let _ = out.write_all(text.as_bytes());
            resp.status
        }
        Err(CliError::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
        Err(CliError::Failed(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_COUNTEREXAMPLE
        }
    }
}
