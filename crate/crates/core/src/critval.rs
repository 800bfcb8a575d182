//! Critical values of `sup_{0≤t≤1} Σ_{j=0}^{L} W⁰_j(t)²`.
//!
//! Only the value `c_{0.05}(1) = 2.408` is built in. Everything else is
//! simulated from discretized Brownian bridges and can be cached in an
//! append-only text file with one record per line:
//!
//! ```text
//! L alpha grid replications seed c_value
//! ```

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

pub const MIN_GRID_POINTS: usize = 100;
pub const MIN_REPLICATIONS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BridgeConfig {
    /// Number of steps `m` of the grid `t_i = i/m`.
    pub grid_points: usize,
    pub replications: usize,
    pub seed: u64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            grid_points: 2000,
            replications: 100_000,
            seed: 20_100_101,
        }
    }
}

impl BridgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < MIN_GRID_POINTS {
            return Err(Error::config(format!(
                "grid_points must be ≥ {MIN_GRID_POINTS}, got {}",
                self.grid_points
            )));
        }
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::config(format!(
                "replications must be ≥ {MIN_REPLICATIONS}, got {}",
                self.replications
            )));
        }
        Ok(())
    }
}

/// One Brownian bridge on `t_i = i/m`, `i = 0..=m`, written into `out`.
///
/// Built as `W(t_i) − t_i W(1)` from a Gaussian random walk with step
/// variance `1/m`; `out[m]` is exactly zero.
pub fn simulate_bridge<R: Rng + ?Sized>(rng: &mut R, grid_points: usize, out: &mut Vec<f64>) {
    let m = grid_points;
    let step_sd = (1.0 / m as f64).sqrt();
    out.clear();
    out.reserve(m + 1);
    out.push(0.0);
    let mut w = 0.0;
    for _ in 0..m {
        let z: f64 = rng.sample(StandardNormal);
        w += step_sd * z;
        out.push(w);
    }
    let w1 = out[m];
    for (i, b) in out.iter_mut().enumerate() {
        let t = i as f64 / m as f64;
        *b -= t * w1;
    }
}

/// `max_i Σ_{j=0}^{L} B_j(t_i)²` for each replication, in replication order.
///
/// Replication `r` draws from its own stream, so the output does not depend
/// on the rayon thread count.
pub fn simulate_bridge_sup(max_lag: usize, cfg: &BridgeConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let m = cfg.grid_points;
    let sups = (0..cfg.replications as u64)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(m + 1), vec![0.0; m + 1]),
            |(bridge, acc), r| {
                let mut rng = rng::stream(cfg.seed, r);
                acc.iter_mut().for_each(|a| *a = 0.0);
                for _ in 0..=max_lag {
                    simulate_bridge(&mut rng, m, bridge);
                    for (a, b) in acc.iter_mut().zip(bridge.iter()) {
                        *a += b * b;
                    }
                }
                acc.iter().copied().fold(0.0, f64::max)
            },
        )
        .collect();
    Ok(sups)
}

/// Order statistic at 1-based index `⌈(1−α)R⌉` of the sorted sample.
pub fn empirical_quantile(samples: &[f64], alpha: f64) -> Result<f64> {
    validate_alpha(alpha)?;
    if samples.is_empty() {
        return Err(Error::domain("cannot take a quantile of an empty sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted.len();
    // guard against (1−α)R landing a hair above an integer
    let idx = (((1.0 - alpha) * r as f64) - 1e-9).ceil() as usize;
    Ok(sorted[idx.clamp(1, r) - 1])
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn same_alpha(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// Map `(L, α) → c_α(L)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CriticalTable {
    entries: Vec<(usize, f64, f64)>,
}

impl CriticalTable {
    /// The built-in values.
    pub fn builtin() -> Self {
        Self {
            entries: vec![(1, 0.05, 2.408)],
        }
    }

    pub fn get(&self, max_lag: usize, alpha: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|(l, a, _)| *l == max_lag && same_alpha(*a, alpha))
            .map(|e| e.2)
    }

    pub fn insert(&mut self, max_lag: usize, alpha: f64, value: f64) {
        match self
            .entries
            .iter_mut()
            .find(|(l, a, _)| *l == max_lag && same_alpha(*a, alpha))
        {
            Some(e) => e.2 = value,
            None => self.entries.push((max_lag, alpha, value)),
        }
    }

    pub fn entries(&self) -> &[(usize, f64, f64)] {
        &self.entries
    }

    /// Simulates every `(L, α)` pair; one bridge simulation per `L`.
    pub fn simulate(lags: &[usize], alphas: &[f64], cfg: &BridgeConfig) -> Result<Self> {
        let mut table = Self::default();
        for &l in lags {
            let sups = simulate_bridge_sup(l, cfg)?;
            for &a in alphas {
                table.insert(l, a, empirical_quantile(&sups, a)?);
            }
        }
        Ok(table)
    }

    /// Checks `c(L, α₁) > c(L, α₂)` for `α₁ < α₂` and `c` increasing in `L`.
    pub fn is_monotone(&self) -> bool {
        self.entries.iter().all(|&(l1, a1, c1)| {
            self.entries.iter().all(|&(l2, a2, c2)| {
                let by_alpha = !(l1 == l2 && a1 < a2) || c1 > c2;
                let by_lag = !(same_alpha(a1, a2) && l1 < l2) || c1 < c2;
                by_alpha && by_lag
            })
        })
    }
}

/// `c_α(L)` from the built-in table, or simulated with `cfg`.
pub fn critical_value(max_lag: usize, alpha: f64, cfg: Option<&BridgeConfig>) -> Result<f64> {
    validate_alpha(alpha)?;
    if let Some(c) = CriticalTable::builtin().get(max_lag, alpha) {
        return Ok(c);
    }
    match cfg {
        Some(cfg) => simulated_critical_value(max_lag, alpha, cfg),
        None => Err(Error::config(format!(
            "no built-in critical value for L = {max_lag}, alpha = {alpha}; a simulation config is required"
        ))),
    }
}

/// Always simulates, ignoring the built-in table.
pub fn simulated_critical_value(max_lag: usize, alpha: f64, cfg: &BridgeConfig) -> Result<f64> {
    validate_alpha(alpha)?;
    empirical_quantile(&simulate_bridge_sup(max_lag, cfg)?, alpha)
}

static CACHE_WRITE: Mutex<()> = Mutex::new(());

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CacheRecord {
    pub max_lag: usize,
    pub alpha: f64,
    pub grid_points: usize,
    pub replications: usize,
    pub seed: u64,
    pub value: f64,
}

impl CacheRecord {
    fn parse(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return None;
        }
        Some(Self {
            max_lag: f[0].parse().ok()?,
            alpha: f[1].parse().ok()?,
            grid_points: f[2].parse().ok()?,
            replications: f[3].parse().ok()?,
            seed: f[4].parse().ok()?,
            value: f[5].parse().ok()?,
        })
    }

    fn matches(&self, max_lag: usize, alpha: f64, cfg: &BridgeConfig) -> bool {
        self.max_lag == max_lag
            && same_alpha(self.alpha, alpha)
            && self.grid_points == cfg.grid_points
            && self.replications == cfg.replications
            && self.seed == cfg.seed
    }
}

impl std::fmt::Display for CacheRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {}",
            self.max_lag, self.alpha, self.grid_points, self.replications, self.seed, self.value
        )
    }
}

/// Append-only file of simulated critical values.
#[derive(Clone, Debug)]
pub struct CriticalValueCache {
    path: PathBuf,
}

impl CriticalValueCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Well-formed records; other lines are skipped.
    pub fn records(&self) -> Result<Vec<CacheRecord>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            if let Some(r) = CacheRecord::parse(&line?) {
                out.push(r);
            }
        }
        Ok(out)
    }

    pub fn lookup(&self, max_lag: usize, alpha: f64, cfg: &BridgeConfig) -> Result<Option<f64>> {
        Ok(self
            .records()?
            .into_iter()
            .rev()
            .find(|r| r.matches(max_lag, alpha, cfg))
            .map(|r| r.value))
    }

    pub fn append(&self, record: &CacheRecord) -> Result<()> {
        let _guard = CACHE_WRITE.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(format!("{record}\n").as_bytes())?;
        Ok(())
    }

    /// Simulated value for `(L, α, cfg)`, read from the cache or computed and
    /// appended to it.
    pub fn simulate_cached(&self, max_lag: usize, alpha: f64, cfg: &BridgeConfig) -> Result<f64> {
        if let Some(c) = self.lookup(max_lag, alpha, cfg)? {
            return Ok(c);
        }
        let value = simulated_critical_value(max_lag, alpha, cfg)?;
        self.append(&CacheRecord {
            max_lag,
            alpha,
            grid_points: cfg.grid_points,
            replications: cfg.replications,
            seed: cfg.seed,
            value,
        })?;
        Ok(value)
    }

    /// Built-in table first, then the cache, then simulation.
    pub fn resolve(&self, max_lag: usize, alpha: f64, cfg: &BridgeConfig) -> Result<f64> {
        validate_alpha(alpha)?;
        if let Some(c) = CriticalTable::builtin().get(max_lag, alpha) {
            return Ok(c);
        }
        self.simulate_cached(max_lag, alpha, cfg)
    }
}
