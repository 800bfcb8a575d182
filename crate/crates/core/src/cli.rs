//! Command-line front end.
//!
//! `detect` exits with 0 when no change is detected, 1 when a change is
//! detected and 2 on any error. Other subcommands exit with 0 or 2.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::autocov::TimeSeries;
use crate::critval::{BridgeConfig, CriticalTable, CriticalValueCache};
use crate::cusum::{cssm_test_with_path, CusumPath, TestResult};
use crate::error::{Error, Result};
use crate::longrun::{EstimatorConfig, DEFAULT_BETA, DEFAULT_EPS_FLOOR};
use crate::mc::{self, TableId};
use crate::models::{self, ChangeSpec, Family, ModelSpec};

pub const EXIT_NO_CHANGE: i32 = 0;
pub const EXIT_CHANGE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

pub const DEFAULT_SEED: u64 = 20_100_101;
pub const DEFAULT_CACHE: &str = ".cssm-critval-cache";

#[derive(Debug, Parser)]
#[command(name = "cssm", version, about = "CUSUM test for changes in the autocovariance structure of a time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a model series, one value per line.
    Simulate(SimulateArgs),
    /// Test a series for a change in its autocovariance structure.
    Detect(DetectArgs),
    /// Write the CUSUM path of a series as CSV (k, value, critical_value).
    Path(PathArgs),
    /// Critical value of sup_t Σ_j W⁰_j(t)².
    Critval(CritvalArgs),
    /// Run a power study reproducing one of the published tables.
    Power(PowerArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// arma11, ma2, product2dep or garch11.
    #[arg(long)]
    pub family: Family,
    /// Comma-separated parameters (arma11: phi,theta; ma2: theta1,theta2;
    /// product2dep: mu,sigma; garch11: omega,alpha,beta).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub params: Vec<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = models::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Innovation standard deviation of the linear families.
    #[arg(long, default_value_t = 1.0)]
    pub noise_sigma: f64,
    /// Last observation generated with --params.
    #[arg(long, requires = "params_after")]
    pub change_at: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires = "change_at")]
    pub params_after: Option<Vec<f64>>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// One value per line; lines starting with '#' are ignored.
    pub input: PathBuf,
    #[arg(long = "L", default_value_t = 1)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_EPS_FLOOR)]
    pub eps_floor: f64,
    /// Subtract the sample mean before testing.
    #[arg(long)]
    pub center: bool,
    #[command(flatten)]
    pub bridge: BridgeArgs,
}

#[derive(Debug, Args)]
pub struct BridgeArgs {
    /// Grid steps for simulated critical values.
    #[arg(long, default_value_t = 2000)]
    pub grid: usize,
    /// Replications for simulated critical values.
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Critical value cache file.
    #[arg(long, default_value = DEFAULT_CACHE)]
    pub cache: PathBuf,
    #[arg(long)]
    pub no_cache: bool,
}

impl BridgeArgs {
    fn config(&self) -> BridgeConfig {
        BridgeConfig {
            grid_points: self.grid,
            replications: self.reps,
            seed: self.seed,
        }
    }

    fn resolve(&self, max_lag: usize, alpha: f64, force_simulation: bool) -> Result<f64> {
        let cfg = self.config();
        cfg.validate()?;
        if !force_simulation {
            if let Some(c) = CriticalTable::builtin().get(max_lag, alpha) {
                return Ok(c);
            }
        }
        if self.no_cache {
            crate::critval::simulated_critical_value(max_lag, alpha, &cfg)
        } else {
            CriticalValueCache::new(&self.cache).simulate_cached(max_lag, alpha, &cfg)
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub test: TestArgs,
    /// Also write the report as CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub test: TestArgs,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CritvalArgs {
    #[arg(long = "L", default_value_t = 1)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Simulate even when a built-in value exists.
    #[arg(long)]
    pub simulate: bool,
    #[command(flatten)]
    pub bridge: BridgeArgs,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// T1, T2a, T2b or T3.
    #[arg(long)]
    pub table: TableId,
    #[arg(long, default_value_t = mc::DEFAULT_REPLICATIONS)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Simulate(a) => simulate_command(&a).map(|_| 0),
        Command::Detect(a) => detect_command(&a),
        Command::Path(a) => emit_path(&a).map(|_| 0),
        Command::Critval(a) => critval_command(&a).map(|_| 0),
        Command::Power(a) => power_command(&a).map(|_| 0),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Reads one value per line, skipping blank lines and `#` comments.
pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let v: f64 = t
            .parse()
            .map_err(|_| parse_err(format!("not a number: '{t}'")))?;
        if !v.is_finite() {
            return Err(parse_err(format!("non-finite value: '{t}'")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::domain(format!("{}: no observations", path.display())));
    }
    TimeSeries::new(values)
}

pub fn simulate_command(a: &SimulateArgs) -> Result<()> {
    let before = ModelSpec::from_params(a.family, &a.params, a.noise_sigma)?;
    let x = match (a.change_at, &a.params_after) {
        (Some(k), Some(p)) => {
            let after = ModelSpec::from_params(a.family, p, a.noise_sigma)?;
            models::simulate_with_change_burn_in(&ChangeSpec::new(k, before, after), a.n, a.seed, a.burn_in)?
        }
        _ => models::simulate(&before, a.n, a.seed, a.burn_in)?,
    };
    let mut w = output(a.out.as_deref())?;
    for v in x.values() {
        // shortest representation that round-trips exactly
        writeln!(w, "{v:?}")?;
    }
    w.flush()?;
    Ok(())
}

fn run_test(a: &TestArgs) -> Result<(TestResult, CusumPath)> {
    let cfg = EstimatorConfig::new(a.beta, a.eps_floor)?;
    let mut x = read_series(&a.input)?;
    if a.center {
        x = x.centered();
    }
    let critical_value = a.bridge.resolve(a.max_lag, a.alpha, false)?;
    cssm_test_with_path(&x, a.max_lag, &cfg, critical_value)
}

pub fn format_report(r: &TestResult, alpha: f64) -> String {
    format!(
        "n: {}\nL: {}\nh_n: {}\nstatistic: {:?}\ncritical_value: {:?}\nalpha: {}\ndecision: {}\nchange_index: {}\n",
        r.n,
        r.max_lag,
        r.truncation_lag,
        r.statistic,
        r.critical_value,
        alpha,
        if r.reject { "change detected" } else { "no change detected" },
        r.change_index
    )
}

pub fn detect_command(a: &DetectArgs) -> Result<i32> {
    let (r, _) = run_test(&a.test)?;
    print!("{}", format_report(&r, a.test.alpha));
    if let Some(p) = &a.report {
        let mut w = output(Some(p))?;
        writeln!(w, "n,L,h_n,statistic,critical_value,alpha,reject,change_index")?;
        writeln!(
            w,
            "{},{},{},{:?},{:?},{},{},{}",
            r.n, r.max_lag, r.truncation_lag, r.statistic, r.critical_value, a.test.alpha, r.reject, r.change_index
        )?;
        w.flush()?;
    }
    Ok(if r.reject { EXIT_CHANGE } else { EXIT_NO_CHANGE })
}

pub fn emit_path(a: &PathArgs) -> Result<()> {
    let (r, path) = run_test(&a.test)?;
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "k,value,critical_value")?;
    for (k, v) in path.iter() {
        writeln!(w, "{k},{v:?},{:?}", r.critical_value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn critval_command(a: &CritvalArgs) -> Result<()> {
    let c = a.bridge.resolve(a.max_lag, a.alpha, a.simulate)?;
    println!("{c:?}");
    Ok(())
}

pub fn power_command(a: &PowerArgs) -> Result<()> {
    let reports = mc::run_table(a.table, a.reps, a.seed)?;
    let mut w = output(a.out.as_deref())?;
    if matches!(a.table, TableId::T2a | TableId::T2b) {
        writeln!(
            w,
            "# table 2 sample size is not published; using n={} with the change after observation {}",
            mc::TABLE2_N,
            mc::TABLE2_N / 2
        )?;
    }
    writeln!(
        w,
        "table,scenario,n,change_at,params_before,params_after,power,mean_change_index,rejections,replications,failed,wall_time_ms"
    )?;
    for r in &reports {
        let s = &r.scenario;
        let join = |spec: &ModelSpec| {
            spec.params()
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            a.table,
            s.id,
            s.n,
            s.change.change_index,
            join(&s.change.before),
            join(&s.change.after),
            r.power,
            r.mean_change_index.map_or(String::new(), |m| m.to_string()),
            r.rejections,
            r.replications,
            r.failed,
            r.wall_time.as_millis()
        )?;
    }
    w.flush()?;
    if a.out.is_some() {
        for r in &reports {
            println!("{:<32} power {:.3}", r.scenario.id, r.power);
        }
    }
    Ok(())
}
