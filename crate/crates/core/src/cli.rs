//! Command-line front end: point evaluation, verification suites, orbital
//! integrals and parameter sweeps, reported as JSON or CSV.

use crate::besselc::{bessel_big, bessel_big_estimate, BranchedPoint, RepParam};
use crate::group::AdditiveCharacter;
use crate::identities::{
    verify_bessel_identity_sweep, verify_fourier_identity_with, verify_hardy, verify_spherical_fixed_point, verify_weber,
    FourierOptions, Sign,
};
use crate::kernels::{j_sl2_torus, j_torus, relative_i_nx, KernelSpec};
use crate::orbital::{orbital_an_app, orbital_nn_app, orbital_props, TestFnOnG};
use crate::quad::GaussianTestFn;
use crate::report::{fmt_complex, params, SuiteReport};
use crate::special::{bessel_j, bessel_k, gamma};
use crate::{Complex64, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

/// Version string recorded in every report.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("CBESSEL_GIT_DESCRIBE"), ")");

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "CBESSEL_WORKERS";

/// Parses `a+bi`, `a-bi`, `a`, `bi`, `i` and `-i`, with exponents allowed
/// in either part.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number {s:?}; expected a+bi");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().map_err(|_| bad())?,
    };
    let re = if re.is_empty() { 0.0 } else { re.parse::<f64>().map_err(|_| bad())? };
    Ok(Complex64::new(re, im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "cbessel", version = VERSION, about = "Complex Bessel kernels and identity verification", args_override_self = true)]
pub struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// JSON file of flags; see the README for the layout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Record wall-clock time per record (makes reports non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    /// Worker threads; overrides the environment variable.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate one kernel or special function at a point.
    Eval(EvalArgs),
    /// Run a verification suite.
    Verify {
        #[command(subcommand)]
        suite: VerifySuite,
    },
    /// Orbital integrals of compactly supported test functions.
    Orbital {
        #[command(subcommand)]
        op: OrbitalOp,
    },
    /// Cartesian parameter grid over one suite.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalFn {
    /// bold J_{mu,m}(z) on the sheet selected by --sheet.
    Besselc,
    /// Gamma(z).
    Gamma,
    /// J_nu(z).
    BesselJ,
    /// K_nu(x) for real x > 0.
    BesselK,
    /// j(t(a) w0) on GL2 at a = z.
    JGl2,
    /// j(s(a) w) on SL2 at a = z.
    JSl2,
    /// i(n(x) w0) at x = z.
    IRel,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(value_enum)]
    pub function: EvalFn,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0")]
    #[serde(serialize_with = "ser_c")]
    pub mu: Complex64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub m: i32,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "1")]
    #[serde(serialize_with = "ser_c")]
    pub z: Complex64,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0")]
    #[serde(serialize_with = "ser_c")]
    pub nu: Complex64,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "1")]
    #[serde(serialize_with = "ser_c")]
    pub lambda: Complex64,
    /// Extra turns added to arg z.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub sheet: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignSel {
    Plus,
    Minus,
    Both,
}

impl SignSel {
    fn signs(&self) -> Vec<Sign> {
        match self {
            SignSel::Plus => vec![Sign::Plus],
            SignSel::Minus => vec![Sign::Minus],
            SignSel::Both => vec![Sign::Plus, Sign::Minus],
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct HalflineArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, value_delimiter = ',', default_value = "0,0.5,1,0.3+0.2i")]
    #[serde(serialize_with = "ser_cs")]
    pub nu: Vec<Complex64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2", allow_negative_numbers = true)]
    pub y: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SignSel::Both)]
    pub sign: SignSel,
}

#[derive(Debug, Args, Serialize)]
pub struct FourierArgs {
    /// Spectral parameters, zipped with --m.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, value_delimiter = ',', default_value = "0.2i,0.4i,0.25")]
    #[serde(serialize_with = "ser_cs")]
    pub mu: Vec<Complex64>,
    #[arg(long, value_delimiter = ',', default_value = "0,2,0", allow_negative_numbers = true)]
    pub m: Vec<i32>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "1")]
    #[serde(serialize_with = "ser_c")]
    pub lambda: Complex64,
    /// Gaussian widths.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2", allow_negative_numbers = true)]
    pub s: Vec<f64>,
    /// Gaussian phase: the test function carries e(Tr(beta z)).
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0")]
    #[serde(serialize_with = "ser_c")]
    pub beta: Complex64,
    /// Quadrature refinement level.
    #[arg(long, default_value_t = 0)]
    pub level: u32,
    /// Also run one level finer and flag residual increases.
    #[arg(long)]
    pub doubling: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SphericalArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, value_delimiter = ',', default_value = "0.2i,0.25")]
    #[serde(serialize_with = "ser_cs")]
    pub mu: Vec<Complex64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2", allow_negative_numbers = true)]
    pub b_moduli: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub phases: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct IdentityArgs {
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifySuite {
    Weber(HalflineArgs),
    Hardy(HalflineArgs),
    Fourier(FourierArgs),
    Spherical(SphericalArgs),
    BesselIdentity(IdentityArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TestFnArgs {
    /// Test function as JSON; overrides the entrywise flags.
    #[arg(long)]
    pub test_fn: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.05)]
    pub det_lo: f64,
    #[arg(long, default_value_t = 2.0)]
    pub det_hi: f64,
}

impl TestFnArgs {
    fn build(&self) -> Result<TestFnOnG, String> {
        match &self.test_fn {
            Some(s) => serde_json::from_str(s).map_err(|e| format!("bad --test-fn: {e}")),
            None => TestFnOnG::entrywise(self.radius, self.det_lo, self.det_hi).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitalOp {
    /// J(a, c, f) = int int f(n(x) z(c) s(a) w0 n(y)) dx dy.
    Nn {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        #[serde(serialize_with = "ser_c")]
        a: Complex64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        #[serde(serialize_with = "ser_c")]
        c: Complex64,
        #[command(flatten)]
        f: TestFnArgs,
    },
    /// M(x, c, f) = int int f(s(a) z(c) n(x) w0 n(y)) d*a dy.
    An {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        #[serde(serialize_with = "ser_c")]
        x: Complex64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        #[serde(serialize_with = "ser_c")]
        c: Complex64,
        #[command(flatten)]
        f: TestFnArgs,
    },
    /// Structural zeros, growth slopes and the factorization check.
    Props {
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 2026)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepSuite {
    Weber,
    Hardy,
    Fourier,
    BesselIdentity,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub suite: SweepSuite,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, value_delimiter = ',', default_value = "0")]
    #[serde(serialize_with = "ser_cs")]
    pub nu: Vec<Complex64>,
    #[arg(long, value_delimiter = ',', default_value = "1", allow_negative_numbers = true)]
    pub y: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SignSel::Both)]
    pub sign: SignSel,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, value_delimiter = ',', default_value = "0.2i")]
    #[serde(serialize_with = "ser_cs")]
    pub mu: Vec<Complex64>,
    #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
    pub m: Vec<i32>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, value_delimiter = ',', default_value = "1")]
    #[serde(serialize_with = "ser_cs")]
    pub lambda: Vec<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, value_delimiter = ',', default_value = "1")]
    #[serde(serialize_with = "ser_cs")]
    pub d: Vec<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, value_delimiter = ',', default_value = "1")]
    #[serde(serialize_with = "ser_cs")]
    pub z: Vec<Complex64>,
    #[arg(long, value_delimiter = ',', default_value = "1", allow_negative_numbers = true)]
    pub s: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub level: u32,
}

fn ser_c<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_complex(*z))
}

fn ser_cs<S: serde::Serializer>(zs: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(zs.iter().map(|z| fmt_complex(*z)))
}

/// Version and the resolved invocation, attached to every record.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub version: String,
    pub config: serde_json::Value,
}

/// A point evaluation or orbital integral: a value, not a comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ValueRecord {
    pub suite: String,
    pub params: BTreeMap<String, String>,
    #[serde(with = "crate::report::complex_obj")]
    pub value: Complex64,
    pub err_estimate: Option<f64>,
    pub error: Option<String>,
    pub runtime_ms: Option<f64>,
    pub flags: Vec<String>,
}

impl ValueRecord {
    fn passed(&self) -> bool {
        self.error.is_none() && self.value.re.is_finite() && self.value.im.is_finite()
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Record {
    Suite(SuiteReport),
    Value(ValueRecord),
}

impl Record {
    pub fn passed(&self) -> bool {
        match self {
            Record::Suite(r) => r.passed(),
            Record::Value(v) => v.passed(),
        }
    }

    fn set_runtime(&mut self, ms: f64) {
        match self {
            Record::Suite(r) => r.runtime_ms = Some(ms),
            Record::Value(v) => v.runtime_ms = Some(ms),
        }
    }
}

#[derive(Serialize)]
struct WithProvenance<'a> {
    #[serde(flatten)]
    record: &'a Record,
    provenance: &'a Provenance,
}

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    AllPassed = 0,
    Failed = 1,
    ConfigError = 2,
}

/// Expands `--config FILE` into flags. The file is a JSON object: `command`
/// lists the subcommand words, every other key is a long flag name with a
/// scalar, boolean or list value. Flags given on the command line after the
/// config take precedence.
pub fn expand_config(argv: &[String]) -> Result<Vec<String>, String> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv.to_vec());
    };
    let (path, skip) = match argv[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => (argv.get(pos + 1).cloned().ok_or("--config needs a path")?, 2),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let obj: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| format!("config {path} is not a JSON object: {e}"))?;
    let mut out = vec![argv.first().cloned().unwrap_or_else(|| "cbessel".into())];
    match obj.get("command") {
        Some(serde_json::Value::Array(words)) => {
            for w in words {
                out.push(w.as_str().ok_or("config command words must be strings")?.to_string());
            }
        }
        _ => return Err("config needs a \"command\" array, e.g. [\"verify\", \"weber\"]".into()),
    }
    for (k, v) in &obj {
        if k == "command" {
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        let scalar = |v: &serde_json::Value| -> Result<String, String> {
            match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                _ => Err(format!("config key {k}: expected a string, number, boolean or list")),
            }
        };
        match v {
            serde_json::Value::Bool(true) => out.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let parts: Result<Vec<String>, String> = items.iter().map(scalar).collect();
                out.push(flag);
                out.push(parts?.join(","));
            }
            other => {
                out.push(flag);
                out.push(scalar(other)?);
            }
        }
    }
    out.extend(argv[1..pos].iter().cloned());
    out.extend(argv[pos + skip..].iter().cloned());
    Ok(out)
}

fn config_error(msg: impl std::fmt::Display) -> Outcome {
    eprintln!("error: {msg}");
    Outcome::ConfigError
}

/// Parses `argv`, runs the selected command and writes the report.
pub fn main_with(argv: Vec<String>) -> Outcome {
    let argv = match expand_config(&argv) {
        Ok(a) => a,
        Err(e) => return config_error(e),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { Outcome::AllPassed } else { Outcome::ConfigError };
        }
    };
    let workers = match cli.workers {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.parse::<usize>() {
                Ok(n) => Some(n),
                Err(_) => return config_error(format!("{WORKERS_ENV}={v} is not a thread count")),
            },
            Err(_) => None,
        },
    };
    if let Some(n) = workers {
        if n == 0 {
            return config_error("worker count must be positive");
        }
        // A second initialization in the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let provenance = Provenance {
        version: VERSION.to_string(),
        config: serde_json::to_value(&cli).unwrap_or(serde_json::Value::Null),
    };
    let records = match run(&cli) {
        Ok(r) => r,
        Err(msg) => return config_error(msg),
    };
    if let Err(e) = write_report(&cli, &records, &provenance) {
        return config_error(format!("cannot write report: {e}"));
    }
    if records.iter().all(Record::passed) {
        Outcome::AllPassed
    } else {
        Outcome::Failed
    }
}

/// Runs the command. Validation failures are returned as `Err` before any
/// computation starts; numerical failures become failed records.
pub fn run(cli: &Cli) -> Result<Vec<Record>, String> {
    let jobs = plan(&cli.command)?;
    let timing = cli.timing;
    Ok(jobs
        .into_par_iter()
        .map(|job| {
            let t = Instant::now();
            let mut recs = job();
            if timing {
                let ms = t.elapsed().as_secs_f64() * 1e3;
                for r in &mut recs {
                    r.set_runtime(ms);
                }
            }
            recs
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect())
}

type Job = Box<dyn Fn() -> Vec<Record> + Send + Sync>;

fn suite_err(suite: &str, p: BTreeMap<String, String>, tol: f64, e: Error) -> Record {
    Record::Suite(SuiteReport::failed(suite, p, tol, e.to_string()))
}

fn check_halfline(suite: SweepSuite, nu: &[Complex64], y: &[f64]) -> Result<(), String> {
    if let Some(v) = y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(format!("y = {v} must be positive"));
    }
    for n in nu {
        let ok = match suite {
            SweepSuite::Weber => n.re > -1.0,
            _ => n.re.abs() < 1.0,
        };
        if !ok {
            return Err(format!("nu = {} is outside the convergence range", fmt_complex(*n)));
        }
    }
    Ok(())
}

fn check_generic(mu: Complex64, m: i32) -> Result<(), String> {
    let p = RepParam::gl2(mu, m);
    if m.rem_euclid(2) != 0 || !p.is_unitary() || !(mu.re.abs() < 0.5) {
        return Err(format!("(mu, m) = ({}, {m}) must be unitary with m even and |Re mu| < 1/2", fmt_complex(mu)));
    }
    Ok(())
}

fn halfline_jobs(suite: SweepSuite, nu: &[Complex64], y: &[f64], sign: SignSel) -> Result<Vec<Job>, String> {
    check_halfline(suite, nu, y)?;
    let mut jobs: Vec<Job> = Vec::new();
    for &n in nu {
        for &yy in y {
            for s in sign.signs() {
                jobs.push(Box::new(move || {
                    let (name, r) = match suite {
                        SweepSuite::Weber => ("weber", verify_weber(n, yy, s)),
                        _ => ("hardy", verify_hardy(n, yy, s)),
                    };
                    let p = params([("nu", fmt_complex(n)), ("y", yy.to_string())]);
                    vec![r.map(Record::Suite).unwrap_or_else(|e| suite_err(name, p, crate::identities::TOL_HALFLINE, e))]
                }));
            }
        }
    }
    Ok(jobs)
}

fn fourier_job(mu: Complex64, m: i32, lambda: Complex64, s: f64, beta: Complex64, level: u32, doubling: bool) -> Job {
    Box::new(move || {
        let p = RepParam::gl2(mu, m);
        let chi = AdditiveCharacter { lambda };
        let f = match GaussianTestFn::new(s, beta) {
            Ok(f) => f,
            Err(e) => return vec![suite_err("fourier", params([("s", s.to_string())]), crate::identities::TOL_FOURIER, e)],
        };
        let pr = params([("mu", fmt_complex(mu)), ("m", m.to_string()), ("s", s.to_string())]);
        let at = |lv: u32| verify_fourier_identity_with(&p, &chi, &f, &FourierOptions { level: lv, ..FourierOptions::default() });
        let base = match at(level) {
            Ok(r) => r,
            Err(e) => return vec![suite_err("fourier", pr, crate::identities::TOL_FOURIER, e)],
        };
        if !doubling {
            return vec![Record::Suite(base)];
        }
        match at(level + 1) {
            Ok(mut fine) => {
                if !doubling_holds(base.rel_err, fine.rel_err) {
                    fine.flags.push("doubling_violated".into());
                    fine.flags.push("error".into());
                }
                vec![Record::Suite(base), Record::Suite(fine)]
            }
            Err(e) => vec![Record::Suite(base), suite_err("fourier", pr, crate::identities::TOL_FOURIER, e)],
        }
    })
}

/// Residual slack below which two levels count as equal.
pub const DOUBLING_SLACK: f64 = 1e-9;

/// Halving the panels must not increase the residual beyond rounding.
pub fn doubling_holds(coarse: f64, fine: f64) -> bool {
    fine <= coarse * (1.0 + 1e-6) + DOUBLING_SLACK
}

fn plan(cmd: &Command) -> Result<Vec<Job>, String> {
    match cmd {
        Command::Eval(a) => {
            let a = EvalArgs { ..*a };
            if a.function == EvalFn::BesselK && !(a.z.im == 0.0 && a.z.re > 0.0) {
                return Err("bessel-k takes a real positive --z".into());
            }
            if matches!(a.function, EvalFn::JGl2 | EvalFn::JSl2 | EvalFn::IRel) && a.lambda == Complex64::new(0.0, 0.0) {
                return Err("--lambda must be nonzero".into());
            }
            Ok(vec![Box::new(move || vec![Record::Value(eval_point(&a))])])
        }
        Command::Verify { suite } => match suite {
            VerifySuite::Weber(h) => halfline_jobs(SweepSuite::Weber, &h.nu, &h.y, h.sign),
            VerifySuite::Hardy(h) => halfline_jobs(SweepSuite::Hardy, &h.nu, &h.y, h.sign),
            VerifySuite::Fourier(fa) => {
                if fa.mu.len() != fa.m.len() {
                    return Err("--mu and --m must have the same length".into());
                }
                if fa.s.iter().any(|s| !(*s > 0.0)) {
                    return Err("Gaussian widths must be positive".into());
                }
                for (mu, m) in fa.mu.iter().zip(&fa.m) {
                    check_generic(*mu, *m)?;
                }
                let mut jobs = Vec::new();
                for (mu, m) in fa.mu.iter().zip(&fa.m) {
                    for &s in &fa.s {
                        jobs.push(fourier_job(*mu, *m, fa.lambda, s, fa.beta, fa.level, fa.doubling));
                    }
                }
                Ok(jobs)
            }
            VerifySuite::Spherical(sa) => {
                for mu in &sa.mu {
                    if !(mu.re == 0.0 || (mu.re > 0.0 && mu.re < 0.5 && mu.im == 0.0)) {
                        return Err(format!("mu = {} must be imaginary or in (0, 1/2)", fmt_complex(*mu)));
                    }
                }
                if sa.phases == 0 || sa.b_moduli.iter().any(|b| !(*b > 0.0)) {
                    return Err("need positive b moduli and at least one phase".into());
                }
                let grid: Vec<Complex64> = sa
                    .b_moduli
                    .iter()
                    .flat_map(|&r| (0..sa.phases).map(move |k| Complex64::from_polar(r, 0.3 + 2.0 * std::f64::consts::PI * k as f64 / sa.phases as f64)))
                    .collect();
                Ok(sa
                    .mu
                    .iter()
                    .map(|&mu| {
                        let grid = grid.clone();
                        Box::new(move || match verify_spherical_fixed_point(mu, &grid) {
                            Ok(o) => {
                                let mut v: Vec<Record> = o.points.into_iter().map(Record::Suite).collect();
                                v.push(Record::Suite(o.proportionality));
                                v.push(Record::Suite(o.constant));
                                v
                            }
                            Err(e) => vec![suite_err("spherical", params([("mu", fmt_complex(mu))]), crate::identities::TOL_PROPORTIONALITY, e)],
                        }) as Job
                    })
                    .collect())
            }
            VerifySuite::BesselIdentity(ia) => {
                let (n, seed) = (ia.samples, ia.seed);
                if n == 0 {
                    return Err("--samples must be positive".into());
                }
                Ok(vec![Box::new(move || verify_bessel_identity_sweep(n, seed).into_iter().map(Record::Suite).collect())])
            }
        },
        Command::Orbital { op } => match op {
            OrbitalOp::Nn { a, c, f } | OrbitalOp::An { x: a, c, f } => {
                let nn = matches!(op, OrbitalOp::Nn { .. });
                let tf = f.build()?;
                if *a == Complex64::new(0.0, 0.0) || *c == Complex64::new(0.0, 0.0) {
                    return Err("orbital arguments must be nonzero".into());
                }
                let (a, c) = (*a, *c);
                Ok(vec![Box::new(move || {
                    let (suite, key, r) = if nn {
                        ("orbital_nn", "a", orbital_nn_app(a, c, &tf))
                    } else {
                        ("orbital_an", "x", orbital_an_app(a, c, &tf))
                    };
                    let mut p = params([(key, fmt_complex(a)), ("c", fmt_complex(c))]);
                    p.insert("test_fn".into(), serde_json::to_string(&tf).unwrap_or_default());
                    let rec = match r {
                        Ok(v) => ValueRecord {
                            suite: suite.into(),
                            params: p,
                            value: v.value,
                            err_estimate: Some(v.err_estimate),
                            error: None,
                            runtime_ms: None,
                            flags: if v.structural_zero { vec!["structural_zero".into()] } else { vec![] },
                        },
                        Err(e) => ValueRecord {
                            suite: suite.into(),
                            params: p,
                            value: Complex64::new(f64::NAN, f64::NAN),
                            err_estimate: None,
                            error: Some(e.to_string()),
                            runtime_ms: None,
                            flags: vec!["error".into()],
                        },
                    };
                    vec![Record::Value(rec)]
                })])
            }
            OrbitalOp::Props { samples, seed } => {
                let (n, seed) = (*samples, *seed);
                Ok(vec![Box::new(move || match orbital_props(n, seed) {
                    Ok(v) => v.into_iter().map(Record::Suite).collect(),
                    Err(e) => vec![suite_err("orbital_props", params([("seed", seed.to_string())]), 0.0, e)],
                })])
            }
        },
        Command::Sweep(sw) => sweep_jobs(sw),
    }
}

fn sweep_jobs(sw: &SweepArgs) -> Result<Vec<Job>, String> {
    match sw.suite {
        SweepSuite::Weber | SweepSuite::Hardy => halfline_jobs(sw.suite, &sw.nu, &sw.y, sw.sign),
        SweepSuite::Fourier => {
            if sw.s.iter().any(|s| !(*s > 0.0)) {
                return Err("Gaussian widths must be positive".into());
            }
            let mut jobs = Vec::new();
            for &mu in &sw.mu {
                for &m in &sw.m {
                    check_generic(mu, m)?;
                    for &lambda in &sw.lambda {
                        if lambda == Complex64::new(0.0, 0.0) {
                            return Err("lambda must be nonzero".into());
                        }
                        for &s in &sw.s {
                            jobs.push(fourier_job(mu, m, lambda, s, Complex64::new(0.0, 0.0), sw.level, false));
                        }
                    }
                }
            }
            Ok(jobs)
        }
        SweepSuite::BesselIdentity => {
            let mut jobs: Vec<Job> = Vec::new();
            for &mu in &sw.mu {
                for &m in &sw.m {
                    if m.rem_euclid(2) != 0 || !RepParam::gl2(mu, m).is_unitary() {
                        return Err(format!("(mu, m) = ({}, {m}) must be unitary with m even", fmt_complex(mu)));
                    }
                    for &lambda in &sw.lambda {
                        for &d in &sw.d {
                            for &z in &sw.z {
                                if lambda == Complex64::new(0.0, 0.0) || d == Complex64::new(0.0, 0.0) || z == Complex64::new(0.0, 0.0) {
                                    return Err("lambda, D and z must be nonzero".into());
                                }
                                let pt = crate::identities::IdentityPoint { mu, m, lambda, d, z };
                                jobs.push(Box::new(move || vec![Record::Suite(crate::identities::verify_bessel_identity_point(&pt))]));
                            }
                        }
                    }
                }
            }
            Ok(jobs)
        }
    }
}

fn eval_point(a: &EvalArgs) -> ValueRecord {
    let name = a.function.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut p = params([("function", name), ("z", fmt_complex(a.z))]);
    let mut err_estimate = None;
    let result: crate::Result<Complex64> = (|| match a.function {
        EvalFn::Besselc => {
            p.insert("mu".into(), fmt_complex(a.mu));
            p.insert("m".into(), a.m.to_string());
            p.insert("sheet".into(), a.sheet.to_string());
            let rp = RepParam::gl2(a.mu, a.m);
            let z = BranchedPoint::from_complex(a.z).rotated(a.sheet);
            if let Ok((est, route)) = bessel_big_estimate(&rp, z) {
                err_estimate = Some(est.rel_err);
                p.insert("route".into(), format!("{route:?}").to_lowercase());
            }
            bessel_big(&rp, z)
        }
        EvalFn::Gamma => gamma(a.z),
        EvalFn::BesselJ => {
            p.insert("nu".into(), fmt_complex(a.nu));
            bessel_j(a.nu, a.z)
        }
        EvalFn::BesselK => {
            p.insert("nu".into(), fmt_complex(a.nu));
            bessel_k(a.nu, a.z.re)
        }
        EvalFn::JGl2 | EvalFn::JSl2 | EvalFn::IRel => {
            p.insert("mu".into(), fmt_complex(a.mu));
            p.insert("m".into(), a.m.to_string());
            p.insert("lambda".into(), fmt_complex(a.lambda));
            let chi = AdditiveCharacter::new(a.lambda)?;
            match a.function {
                EvalFn::JGl2 => j_torus(&KernelSpec::new(RepParam::gl2(a.mu, a.m), chi), a.z),
                EvalFn::JSl2 => j_sl2_torus(&KernelSpec::new(RepParam::sl2(a.mu, a.m), chi), a.z),
                _ => relative_i_nx(&KernelSpec::new(RepParam::gl2(a.mu, a.m), chi), a.z),
            }
        }
    })();
    let (value, error, flags) = match result {
        Ok(v) => (v, None, vec![]),
        Err(Error::AccuracyLoss { estimate, rel_err }) => {
            err_estimate = Some(rel_err);
            (estimate, None, vec!["accuracy_loss".to_string()])
        }
        Err(e) => (Complex64::new(f64::NAN, f64::NAN), Some(e.to_string()), vec!["error".to_string()]),
    };
    ValueRecord { suite: "eval".into(), params: p, value, err_estimate, error, runtime_ms: None, flags }
}

/// CSV columns; params and flags are flattened to `k=v;k=v` and `a|b`.
pub const CSV_HEADER: [&str; 14] = [
    "suite", "params", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_err", "rel_err", "tolerance", "evals", "runtime_ms", "flags", "passed",
    "version",
];

fn csv_row(r: &Record, prov: &Provenance) -> Vec<String> {
    let flat = |p: &BTreeMap<String, String>| p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
    let num = |x: f64| format!("{x:?}");
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    match r {
        Record::Suite(s) => vec![
            s.suite.clone(),
            flat(&s.params),
            num(s.lhs.re),
            num(s.lhs.im),
            num(s.rhs.re),
            num(s.rhs.im),
            num(s.abs_err),
            num(s.rel_err),
            num(s.tolerance),
            s.evals.to_string(),
            opt(s.runtime_ms),
            s.flags.join("|"),
            r.passed().to_string(),
            prov.version.clone(),
        ],
        Record::Value(v) => vec![
            v.suite.clone(),
            flat(&v.params),
            num(v.value.re),
            num(v.value.im),
            String::new(),
            String::new(),
            opt(v.err_estimate),
            String::new(),
            String::new(),
            String::new(),
            opt(v.runtime_ms),
            v.flags.join("|"),
            r.passed().to_string(),
            prov.version.clone(),
        ],
    }
}

/// Serializes records in the selected format.
pub fn render(format: Format, records: &[Record], prov: &Provenance) -> std::io::Result<Vec<u8>> {
    match format {
        Format::Json => {
            let rows: Vec<WithProvenance> = records.iter().map(|record| WithProvenance { record, provenance: prov }).collect();
            let mut out = serde_json::to_vec_pretty(&rows)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            for r in records {
                w.write_record(csv_row(r, prov))?;
            }
            w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))
        }
    }
}

fn write_report(cli: &Cli, records: &[Record], prov: &Provenance) -> std::io::Result<()> {
    let bytes = render(cli.format, records, prov)?;
    match &cli.output {
        Some(p) => std::fs::write(p, bytes),
        None => std::io::stdout().lock().write_all(&bytes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        let c = Complex64::new;
        assert_eq!(parse_complex("1+1i").unwrap(), c(1.0, 1.0));
        assert_eq!(parse_complex("0.2i").unwrap(), c(0.0, 0.2));
        assert_eq!(parse_complex("-0.5-2i").unwrap(), c(-0.5, -2.0));
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2.5e-1i").unwrap(), c(1e-3, 0.25));
        assert_eq!(parse_complex("-1e+2i").unwrap(), c(0.0, -100.0));
        assert_eq!(parse_complex(" 2 - 3i ").unwrap(), c(2.0, -3.0));
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("").is_err());
        assert!(parse_complex("abc").is_err());
        for z in [c(0.3, -0.2), c(-1.5, 2e-7), c(0.0, 0.0)] {
            assert_eq!(parse_complex(&fmt_complex(z)).unwrap(), z);
        }
    }

    #[test]
    fn config_expansion() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"command": ["verify", "weber"], "nu": ["0", "0.5"], "y": [1], "timing": false, "format": "csv"}"#).unwrap();
        let argv: Vec<String> = ["cbessel", "--config", path.to_str().unwrap(), "--format", "json"].iter().map(|s| s.to_string()).collect();
        let out = expand_config(&argv).unwrap();
        assert_eq!(out, ["cbessel", "verify", "weber", "--format", "csv", "--nu", "0,0.5", "--y", "1", "--format", "json"]);
        let cli = Cli::try_parse_from(&out).unwrap();
        assert_eq!(cli.format, Format::Json);
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"nu": 1}"#).unwrap();
        assert!(expand_config(&["cbessel".into(), "--config".into(), bad.to_str().unwrap().into()]).is_err());
    }

    #[test]
    fn validation_rejects_before_running() {
        let cli = Cli::try_parse_from(["cbessel", "verify", "fourier", "--mu", "0.2i", "--m", "1"]).unwrap();
        assert!(run(&cli).is_err());
        let cli = Cli::try_parse_from(["cbessel", "verify", "hardy", "--nu", "1.5", "--y", "1"]).unwrap();
        assert!(run(&cli).is_err());
        assert_eq!(main_with(["cbessel", "verify", "weber", "--y", "-1"].iter().map(|s| s.to_string()).collect()), Outcome::ConfigError);
        assert_eq!(main_with(["cbessel", "bogus"].iter().map(|s| s.to_string()).collect()), Outcome::ConfigError);
    }

    #[test]
    fn eval_record_for_besselc() {
        let cli = Cli::try_parse_from(["cbessel", "eval", "besselc", "--mu", "0.2i", "--m", "0", "--z", "1+1i"]).unwrap();
        let recs = run(&cli).unwrap();
        assert_eq!(recs.len(), 1);
        let Record::Value(v) = &recs[0] else { panic!() };
        assert!(v.passed() && v.err_estimate.unwrap() < 1e-8);
        let prov = Provenance { version: VERSION.into(), config: serde_json::to_value(&cli).unwrap() };
        let json: serde_json::Value = serde_json::from_slice(&render(Format::Json, &recs, &prov).unwrap()).unwrap();
        assert_eq!(json[0]["suite"], "eval");
        assert!(json[0]["runtime_ms"].is_null());
        assert_eq!(json[0]["provenance"]["config"]["command"]["eval"]["mu"], "0+0.2i");
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let cli = Cli::try_parse_from(["cbessel", "--format", "csv", "verify", "bessel-identity", "--samples", "3"]).unwrap();
        let recs = run(&cli).unwrap();
        let prov = Provenance { version: VERSION.into(), config: serde_json::Value::Null };
        let text = String::from_utf8(render(Format::Csv, &recs, &prov).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("suite,params,lhs_re"));
    }

    #[test]
    fn doubling_rule() {
        assert!(doubling_holds(1e-6, 1e-6));
        assert!(doubling_holds(1e-6, 5e-7));
        assert!(!doubling_holds(1e-6, 3e-6));
    }
}
