//! Command-line harness: runs suites, writes JSON or CSV reports.

use crate::coalescence::{coalesce_psi0, coalesce_psi1, DEFAULT_BETAS};
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams};
use crate::observables::{packet_binorm, packet_ev, Observable, PacketParams};
use crate::report::{to_json, write_atomic, Record, SuiteReport, Table, VerificationReport};
use crate::scattering::transmission;
use crate::suites::{self, Suite, SuiteOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

type C = Complex64;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const THREADS_ENV: &str = "NHLAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "nhlab", version, about = "Verification harness for non-Hermitian Jordan-cell models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Run verification suites (all by default) or the checks for one model.
    Verify {
        /// Run every suite.
        #[arg(long)]
        all: bool,
        /// Run only these suites.
        #[arg(long = "suite", value_name = "NAME")]
        suites: Vec<String>,
    },
    /// Resolution of identity for one model on the test battery.
    Identity,
    /// Coalescence of the two-level pair onto the Jordan cell.
    Coalesce,
    /// Gaussian-packet expectation values of the threshold model.
    Packet,
    /// Transmission, Green function and poles for one model.
    Scatter,
    /// Random finite-dimensional Jordan-cell round trips.
    Finite,
    /// One row per grid point.
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepKind::K)]
        kind: SweepKind,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Two-level coupling `β` approaching coalescence.
    Beta,
    /// Packet width `ε`.
    Eps,
    /// Momentum `k` for transmission.
    K,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// jordan-bound, two-level, threshold or continuum-bs.
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long = "z-re", global = true, allow_negative_numbers = true)]
    pub z_re: Option<f64>,
    #[arg(long = "z-im", global = true, allow_negative_numbers = true)]
    pub z_im: Option<f64>,
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// Tolerance of the primary check of the command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Packet width or kernel regularization.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Comma-separated sweep grid.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with the same keys as the flags (underscored).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Settings from a `--config` file; flags take precedence.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub z_re: Option<f64>,
    pub z_im: Option<f64>,
    pub n: Option<u32>,
    pub tol: Option<f64>,
    pub eps: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub suites: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parameter(format!("config: {e}")))
    }

    fn merge(mut self, a: &CommonArgs) -> Result<Self> {
        macro_rules! over {
            ($($f:ident),*) => { $(if a.$f.is_some() { self.$f = a.$f.clone(); })* };
        }
        over!(model, alpha, beta, z_re, z_im, n, tol, eps, out, format, seed);
        if let Some(g) = &a.grid {
            self.grid = Some(parse_grid(g)?);
        }
        Ok(self)
    }

    pub fn z(&self) -> C {
        C::new(self.z_re.unwrap_or(0.0), self.z_im.unwrap_or(1.0))
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        self.model.as_deref().unwrap_or("jordan-bound").parse()
    }

    pub fn params(&self) -> Result<ModelParams> {
        let kind = self.model_kind()?;
        let alpha = self.alpha.unwrap_or(1.0);
        let beta = self.beta.unwrap_or(0.3);
        ModelParams::new(kind, C::new(alpha, 0.0), beta, self.z(), self.n.unwrap_or(1))
    }

    fn tol_or(&self, default: f64) -> Result<f64> {
        match self.tol {
            None => Ok(default),
            Some(t) if t > 0.0 && t.is_finite() => Ok(t),
            Some(t) => Err(Error::Parameter(format!("tolerance must be positive (tol = {t})"))),
        }
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parameter(format!("bad grid value '{t}'"))))
        .collect()
}

/// Worker count from `NHLAB_THREADS`, defaulting to the available cores.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Parameter(format!("{THREADS_ENV} must be a positive integer (got '{v}')"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `jobs` on at most `threads` workers, returning results in job order.
pub fn run_parallel<T: Send>(jobs: Vec<Box<dyn FnOnce() -> T + Send + '_>>, threads: usize) -> Vec<T> {
    let n = jobs.len();
    let queue: Vec<Mutex<Option<Box<dyn FnOnce() -> T + Send + '_>>>> = jobs.into_iter().map(|j| Mutex::new(Some(j))).collect();
    let results: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, n.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let job = queue[i].lock().expect("job lock").take().expect("job taken once");
                let r = job();
                *results[i].lock().expect("result lock") = Some(r);
            });
        }
    });
    results.into_iter().map(|m| m.into_inner().expect("result lock").expect("job ran")).collect()
}

/// Output produced by a command before it is written.
pub struct Outcome {
    pub report: VerificationReport,
    /// Written instead of the records when the format is CSV.
    pub table: Option<Table>,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Verify { .. } => "verify",
        Command::Identity => "identity",
        Command::Coalesce => "coalesce",
        Command::Packet => "packet",
        Command::Scatter => "scatter",
        Command::Finite => "finite",
        Command::Sweep { .. } => "sweep",
    }
}

/// Executes a parsed command without writing anything.
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Outcome> {
    let start = Instant::now();
    let name = command_name(command);
    let seed = cfg.seed.unwrap_or(SuiteOptions::default().seed);
    let opts = SuiteOptions { seed, ..SuiteOptions::default() };
    let mut table = None;
    let suites_run: Vec<SuiteReport> = match command {
        Command::Verify { all, suites: names } => {
            let mut names = names.clone();
            if let Some(extra) = &cfg.suites {
                names.extend(extra.iter().cloned());
            }
            if cfg.model.is_some() && !*all && names.is_empty() {
                let p = cfg.params()?;
                vec![suites::model_suite(&p, cfg.tol_or(suites::BINORM_TOL)?)]
            } else {
                let selected: Vec<Suite> = if *all || names.is_empty() {
                    Suite::ALL.to_vec()
                } else {
                    names.iter().map(|n| n.parse()).collect::<Result<_>>()?
                };
                let jobs: Vec<Box<dyn FnOnce() -> SuiteReport + Send>> =
                    selected.into_iter().map(|s| Box::new(move || suites::run(s, &opts)) as Box<_>).collect();
                run_parallel(jobs, thread_count()?)
            }
        }
        Command::Identity => {
            let p = cfg.params()?;
            let eps = cfg.eps.unwrap_or(suites::PUNCTURED_EPS);
            vec![timed(|| Ok(suites::identity_model(&p, cfg.tol_or(suites::FULL_KERNEL_TOL)?, eps)))?]
        }
        Command::Coalesce => {
            let p = ModelParams::two_level(C::new(cfg.alpha.unwrap_or(1.0), 0.0), 0.1, cfg.z())?;
            let s = timed(|| Ok(suites::coalescence_at(p.alpha().re, p.z())))?;
            table = table_from(&s.data["sweep"]);
            vec![s]
        }
        Command::Packet => {
            let z = cfg.z();
            PacketParams::new(0.1, z)?;
            let eps = cfg.grid.clone().unwrap_or_else(|| suites::PACKET_EPS.to_vec());
            table = Some(packet_csv(&eps, z)?);
            vec![timed(|| Ok(suites::packet_at(z)))?]
        }
        Command::Scatter => {
            let p = cfg.params()?;
            let ks = cfg.grid.clone().unwrap_or_else(|| suites::MOMENTA.to_vec());
            let s = timed(|| Ok(suites::scatter_model(&p, &ks, cfg.tol_or(suites::TRANSMISSION_TOL)?)))?;
            table = table_from(&s.data["transmission"]);
            vec![s]
        }
        Command::Finite => vec![suites::run(Suite::Finite, &opts)],
        Command::Sweep { kind } => {
            let (s, t) = sweep(*kind, cfg)?;
            table = Some(t);
            vec![s]
        }
    };
    let config = serde_json::to_value(cfg).unwrap_or_default();
    let report = VerificationReport::new(name, config, suites_run, start.elapsed().as_secs_f64());
    Ok(Outcome { report, table })
}

fn timed(f: impl FnOnce() -> Result<SuiteReport>) -> Result<SuiteReport> {
    let t = Instant::now();
    let mut s = f()?;
    s.seconds = t.elapsed().as_secs_f64();
    Ok(s)
}

fn table_from(v: &serde_json::Value) -> Option<Table> {
    let columns: Vec<String> = serde_json::from_value(v["columns"].clone()).ok()?;
    let rows: Vec<Vec<f64>> = serde_json::from_value(v["rows"].clone()).ok()?;
    Some(Table { columns, rows })
}

/// Packet table with real and imaginary parts of every quantity.
pub fn packet_csv(eps: &[f64], z: C) -> Result<Table> {
    if eps.is_empty() {
        return Err(Error::Parameter("empty epsilon grid".into()));
    }
    let mut t = Table::new(&[
        "epsilon",
        "binorm",
        "ev_total",
        "ev_potential",
        "ev_kinetic",
        "binorm_im",
        "ev_total_im",
        "ev_potential_im",
        "ev_kinetic_im",
    ]);
    for &e in eps {
        let p = PacketParams::new(e, z)?;
        let b = packet_binorm(&p)?.value;
        let h = packet_ev(&p, Observable::Total)?.value;
        let v = packet_ev(&p, Observable::Potential)?.value;
        let k = h - v;
        t.push(vec![e, b.re, h.re, v.re, k.re, b.im, h.im, v.im, k.im]);
    }
    Ok(t)
}

/// One row per grid point with a `pass` column.
pub fn sweep(kind: SweepKind, cfg: &RunConfig) -> Result<(SuiteReport, Table)> {
    let t0 = Instant::now();
    let grid = match (&cfg.grid, kind) {
        (Some(g), _) => g.clone(),
        (None, SweepKind::Beta) => DEFAULT_BETAS.to_vec(),
        (None, SweepKind::Eps) => suites::PACKET_EPS.to_vec(),
        (None, SweepKind::K) => suites::MOMENTA.to_vec(),
    };
    if grid.is_empty() {
        return Err(Error::Parameter("empty sweep grid".into()));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::Parameter("sweep grid values must be finite".into()));
    }
    let z = cfg.z();
    let mut s = SuiteReport::new(&format!("sweep.{}", serde_json::to_value(kind).unwrap_or_default().as_str().unwrap_or("")));
    let table = match kind {
        SweepKind::Beta => {
            let alpha = cfg.alpha.unwrap_or(1.0);
            ModelParams::jordan_bound(alpha, z)?;
            let [m, p] = coalesce_psi0(alpha, z, &grid)?;
            let q = coalesce_psi1(alpha, z, &grid)?;
            let mut t = Table::new(&["beta", "psi0_minus", "psi0_plus", "psi1", "pass"]);
            let anchor = "coalescence of the two-level pair into the Jordan cell";
            for i in 0..grid.len() {
                let errs = [m.errors[i], p.errors[i], q.errors[i]];
                let ok = errs.iter().all(|e| e.is_finite()) && (i == 0 || (0..3).all(|j| errs[j] <= [&m, &p, &q][j].errors[i - 1]));
                s.push(Record::flag(&format!("sweep.beta.{i}"), anchor, ok).with_note(&format!("beta = {}, errors decrease", grid[i])));
                t.push(vec![grid[i], errs[0], errs[1], errs[2], f64::from(u8::from(ok))]);
            }
            t
        }
        SweepKind::Eps => {
            let p = packet_csv(&grid, z)?;
            let mut t = Table::new(&["epsilon", "binorm", "ev_total", "ev_potential", "ev_kinetic", "pass"]);
            let anchor = "wave-packet regularization of the self-orthogonal threshold state";
            let tol = cfg.tol_or(1e-6)?;
            for (i, r) in p.rows.iter().enumerate() {
                let exact = (std::f64::consts::PI / 8.0).sqrt() * r[0].sqrt();
                let rec = Record::rel(&format!("sweep.eps.{i}"), anchor, r[1], exact, tol).with_note(&format!("epsilon = {}", r[0]));
                t.push(vec![r[0], r[1], r[2], r[3], r[4], f64::from(u8::from(rec.pass))]);
                s.push(rec);
            }
            t
        }
        SweepKind::K => {
            let p = cfg.params()?;
            let tol = cfg.tol_or(suites::TRANSMISSION_TOL)?;
            let anchor = "transmission coefficients of the transparent potentials";
            let mut t = Table::new(&["k", "t_re", "t_im", "abs_t", "abs_r", "pass"]);
            for (i, &k) in grid.iter().enumerate() {
                match transmission(&p, k) {
                    Ok(tr) => {
                        let unit = (tr.t.norm() - 1.0).abs();
                        let ok = unit <= tol && (tr.t - tr.printed).norm() <= tol && tr.r.norm() <= suites::REFLECTION_TOL;
                        s.push(Record::flag(&format!("sweep.k.{i}"), anchor, ok).with_note(&format!("k = {k}, ||T| - 1| = {unit:e}, |R| = {:e}", tr.r.norm())));
                        t.push(vec![k, tr.t.re, tr.t.im, tr.t.norm(), tr.r.norm(), f64::from(u8::from(ok))]);
                    }
                    Err(e) => {
                        s.push(Record::failed(&format!("sweep.k.{i}"), anchor, &e).with_note(&format!("k = {k}")));
                        t.push(vec![k, f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0.0]);
                    }
                }
            }
            t
        }
    };
    s.data = json!({ "sweep": table });
    s.seconds = t0.elapsed().as_secs_f64();
    Ok((s, table))
}

fn default_out(command: &str, format: Format) -> PathBuf {
    PathBuf::from(format!("nhlab-{command}.{}", if format == Format::Csv { "csv" } else { "json" }))
}

fn infer_format(out: Option<&Path>) -> Format {
    match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Json,
    }
}

/// Serialized bytes of an outcome in the requested format.
pub fn render(outcome: &Outcome, format: Format) -> Result<Vec<u8>> {
    match (format, &outcome.table) {
        (Format::Json, _) => to_json(&outcome.report),
        (Format::Csv, Some(t)) => t.to_csv(),
        (Format::Csv, None) => outcome.report.records_csv(),
    }
}

/// Parses `argv`, runs the command, writes the report and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e @ (Error::Parameter(_) | Error::Domain { .. })) => {
            eprintln!("nhlab: invalid configuration: {e}");
            EXIT_INVALID
        }
        Err(e) => {
            eprintln!("nhlab: computation failed: {e}");
            EXIT_FAIL
        }
    }
}

fn run_cli(cli: &Cli) -> Result<i32> {
    let base = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Parameter(format!("config {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    let cfg = base.merge(&cli.common)?;
    thread_count()?;
    let outcome = execute(&cli.command, &cfg)?;
    let name = command_name(&cli.command);
    let format = cfg.format.unwrap_or_else(|| infer_format(cfg.out.as_deref()));
    let out = cfg.out.clone().unwrap_or_else(|| default_out(name, format));
    let bytes = render(&outcome, format)?;
    write_atomic(&out, &bytes).map_err(|e| Error::Parameter(format!("cannot write {}: {e}", out.display())))?;
    println!("{} -> {}", outcome.report.summary(), out.display());
    for s in &outcome.report.suites {
        for r in s.failures() {
            eprintln!("FAIL {} computed={} target={}", r.id, r.computed, r.target);
        }
    }
    Ok(if outcome.report.pass { EXIT_PASS } else { EXIT_FAIL })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(RunConfig::from_json(r#"{"alpha": 1.0, "z_im": 2.0}"#).is_ok());
        assert!(RunConfig::from_json(r#"{"alhpa": 1.0}"#).is_err());
    }

    #[test]
    fn flags_override_config() {
        let cfg = RunConfig { alpha: Some(2.0), z_im: Some(3.0), ..Default::default() };
        let args = CommonArgs { alpha: Some(0.5), grid: Some("1, 2,3".into()), ..Default::default() };
        let m = cfg.merge(&args).unwrap();
        assert_eq!(m.alpha, Some(0.5));
        assert_eq!(m.z_im, Some(3.0));
        assert_eq!(m.grid, Some(vec![1.0, 2.0, 3.0]));
        assert!(parse_grid("1,x").is_err());
    }

    #[test]
    fn zero_imaginary_shift_is_invalid() {
        let cfg = RunConfig { z_im: Some(0.0), ..Default::default() };
        assert!(cfg.params().is_err());
        assert!(execute(&Command::Scatter, &cfg).is_err());
    }

    #[test]
    fn empty_sweep_is_invalid() {
        let cfg = RunConfig { grid: Some(vec![]), ..Default::default() };
        assert!(matches!(sweep(SweepKind::K, &cfg), Err(Error::Parameter(_))));
    }

    #[test]
    fn parallel_runner_keeps_order() {
        let jobs: Vec<Box<dyn FnOnce() -> usize + Send>> = (0..10usize).map(|i| Box::new(move || i * i) as Box<_>).collect();
        assert_eq!(run_parallel(jobs, 3), (0..10usize).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn format_inference() {
        assert_eq!(infer_format(Some(Path::new("p.CSV"))), Format::Csv);
        assert_eq!(infer_format(Some(Path::new("p.json"))), Format::Json);
        assert_eq!(infer_format(None), Format::Json);
    }
}
