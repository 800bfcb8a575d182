//! Replicated power and size studies.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::critval::{self, BridgeConfig};
use crate::cusum::cssm_test;
use crate::error::{Error, Result};
use crate::longrun::EstimatorConfig;
use crate::models::{simulate_with_change, ChangeSpec, ModelSpec};
use crate::rng::stream_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub change: ChangeSpec,
    pub n: usize,
    pub max_lag: usize,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    pub cfg: EstimatorConfig,
    /// Needed only when `(L, α)` has no built-in critical value.
    pub bridge: Option<BridgeConfig>,
}

impl Scenario {
    /// `L = 1`, `α = 0.05`, default estimator.
    pub fn new(id: impl Into<String>, change: ChangeSpec, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            id: id.into(),
            change,
            n,
            max_lag: 1,
            alpha: 0.05,
            replications,
            seed,
            cfg: EstimatorConfig::default(),
            bridge: None,
        }
    }
}

/// Outcome of one replication.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Replication {
    pub statistic: f64,
    pub change_index: usize,
    pub reject: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerReport {
    pub scenario: Scenario,
    pub rejections: usize,
    /// Replications that completed.
    pub replications: usize,
    /// Replications that failed numerically and were excluded.
    pub failed: usize,
    pub power: f64,
    /// Mean estimated change location over rejecting replications.
    pub mean_change_index: Option<f64>,
    pub wall_time: Duration,
    pub outcomes: Vec<Replication>,
}

impl PowerReport {
    /// Median of `|change_index − k*|` over all completed replications.
    pub fn median_location_error(&self) -> Option<f64> {
        let k = self.scenario.change.change_index as f64;
        let mut d: Vec<f64> = self
            .outcomes
            .iter()
            .map(|o| (o.change_index as f64 - k).abs())
            .collect();
        if d.is_empty() {
            return None;
        }
        d.sort_by(f64::total_cmp);
        let m = d.len();
        Some(if m % 2 == 1 {
            d[m / 2]
        } else {
            0.5 * (d[m / 2 - 1] + d[m / 2])
        })
    }
}

/// Seed of replication `r` under base seed `base`.
pub fn replication_seed(base: u64, r: usize) -> u64 {
    stream_seed(base, r as u64)
}

pub fn run_replication(s: &Scenario, critical_value: f64, r: usize) -> Result<Replication> {
    let x = simulate_with_change(&s.change, s.n, replication_seed(s.seed, r))?;
    let t = cssm_test(&x, s.max_lag, &s.cfg, critical_value)?;
    Ok(Replication {
        statistic: t.statistic,
        change_index: t.change_index,
        reject: t.reject,
    })
}

/// Runs every replication (in parallel) and tallies rejections.
pub fn run_scenario(s: &Scenario) -> Result<PowerReport> {
    if s.replications == 0 {
        return Err(Error::config("a scenario needs at least one replication"));
    }
    s.change.validate(s.n)?;
    s.cfg.validate()?;
    let critical_value = critval::critical_value(s.max_lag, s.alpha, s.bridge.as_ref())?;

    let start = Instant::now();
    let results: Vec<Result<Replication>> = (0..s.replications)
        .into_par_iter()
        .map(|r| run_replication(s, critical_value, r))
        .collect();
    let wall_time = start.elapsed();

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            // configuration problems are the same for every replication
            Err(e @ (Error::Config(_) | Error::InsufficientData { .. })) => return Err(e),
            Err(_) => failed += 1,
        }
    }
    let rejections = outcomes.iter().filter(|o| o.reject).count();
    let located: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.reject)
        .map(|o| o.change_index as f64)
        .collect();
    let mean_change_index = (!located.is_empty()).then(|| located.iter().sum::<f64>() / located.len() as f64);
    let replications = outcomes.len();
    Ok(PowerReport {
        scenario: s.clone(),
        rejections,
        replications,
        failed,
        power: if replications == 0 {
            0.0
        } else {
            rejections as f64 / replications as f64
        },
        mean_change_index,
        wall_time,
        outcomes,
    })
}

/// The four published tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableId {
    /// ARMA(1,1), `(θ, φ) = (0.1, 0.2)` → grid of `(θ₁, φ₁)`.
    T1,
    /// Product model, `σ_Z: 1 → σ`.
    T2a,
    /// Product model, `μ_Z: 0 → μ`.
    T2b,
    /// GARCH(1,1), `(0.5, 0.1, 0.2)` → alternatives, several `n`.
    T3,
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T1" => Ok(TableId::T1),
            "T2A" => Ok(TableId::T2a),
            "T2B" => Ok(TableId::T2b),
            "T3" => Ok(TableId::T3),
            _ => Err(Error::config(format!("unknown table '{s}' (expected T1, T2a, T2b, T3)"))),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableId::T1 => "T1",
            TableId::T2a => "T2a",
            TableId::T2b => "T2b",
            TableId::T3 => "T3",
        })
    }
}

pub const DEFAULT_REPLICATIONS: usize = 1000;
/// Series length for table 1 (`250` observations before and after).
pub const TABLE_N: usize = 500;
/// Series length for table 2, which is not published; `1000` with the change
/// at `500` reproduces the reported size and powers.
pub const TABLE2_N: usize = 1000;
pub const T1_THETAS: [f64; 4] = [0.1, 0.3, 0.5, 0.7];
pub const T1_PHIS: [f64; 4] = [0.2, 0.4, 0.5, 0.6];
pub const T2A_SIGMAS: [f64; 4] = [0.8, 0.6, 0.4, 0.2];
pub const T2B_MUS: [f64; 4] = [0.0, 0.5, 1.0, 1.5];
pub const T3_NS: [usize; 3] = [500, 800, 1000];
pub const T3_ALTERNATIVES: [(f64, f64, f64); 3] = [(0.8, 0.1, 0.2), (0.8, 0.1, 0.5), (0.8, 0.4, 0.2)];

/// Table 1 cell with post-change `(θ₁, φ₁)`.
pub fn t1_change(theta1: f64, phi1: f64) -> ChangeSpec {
    ChangeSpec::new(TABLE_N / 2, ModelSpec::arma11(0.2, 0.1), ModelSpec::arma11(phi1, theta1))
}

pub fn t2a_change(sigma1: f64) -> ChangeSpec {
    ChangeSpec::new(TABLE2_N / 2, ModelSpec::product2dep(0.0, 1.0), ModelSpec::product2dep(0.0, sigma1))
}

pub fn t2b_change(mu1: f64) -> ChangeSpec {
    ChangeSpec::new(TABLE2_N / 2, ModelSpec::product2dep(0.0, 1.0), ModelSpec::product2dep(mu1, 1.0))
}

/// Table 3 cell; `None` for the no-change row.
pub fn t3_change(after: Option<(f64, f64, f64)>, n: usize) -> ChangeSpec {
    let before = ModelSpec::garch11(0.5, 0.1, 0.2);
    let after = after.map_or(before, |(o, a, b)| ModelSpec::garch11(o, a, b));
    ChangeSpec::new(n / 2, before, after)
}

/// Scenarios of a table in display order, each with its own base seed.
pub fn table_scenarios(table: TableId, replications: usize, seed: u64) -> Vec<Scenario> {
    let mut out = Vec::new();
    let mut push = |id: String, change: ChangeSpec, n: usize| {
        let idx = out.len() as u64;
        out.push(Scenario::new(id, change, n, replications, stream_seed(seed, idx)));
    };
    match table {
        TableId::T1 => {
            for &theta in &T1_THETAS {
                for &phi in &T1_PHIS {
                    push(format!("theta1={theta} phi1={phi}"), t1_change(theta, phi), TABLE_N);
                }
            }
        }
        TableId::T2a => {
            for &s in &T2A_SIGMAS {
                push(format!("sigma={s}"), t2a_change(s), TABLE2_N);
            }
        }
        TableId::T2b => {
            for &m in &T2B_MUS {
                push(format!("mu={m}"), t2b_change(m), TABLE2_N);
            }
        }
        TableId::T3 => {
            let rows = std::iter::once(None).chain(T3_ALTERNATIVES.iter().copied().map(Some));
            for after in rows {
                for &n in &T3_NS {
                    let label = match after {
                        None => "no change".to_string(),
                        Some((o, a, b)) => format!("omega={o} alpha={a} beta={b}"),
                    };
                    push(format!("{label} n={n}"), t3_change(after, n), n);
                }
            }
        }
    }
    out
}

pub fn run_table(table: TableId, replications: usize, seed: u64) -> Result<Vec<PowerReport>> {
    table_scenarios(table, replications, seed)
        .iter()
        .map(run_scenario)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layouts() {
        assert_eq!(table_scenarios(TableId::T1, 10, 0).len(), 16);
        assert_eq!(table_scenarios(TableId::T2a, 10, 0).len(), 4);
        assert_eq!(table_scenarios(TableId::T2b, 10, 0).len(), 4);
        let t3 = table_scenarios(TableId::T3, 10, 0);
        assert_eq!(t3.len(), 12);
        assert!(!t3[0].change.is_change());
        assert_eq!(t3[2].n, 1000);
        assert_eq!(t3[2].change.change_index, 500);
        let t1 = table_scenarios(TableId::T1, 10, 0);
        assert!(!t1[0].change.is_change());
        assert_eq!(t1[0].change.change_index, 250);
        let t2b = table_scenarios(TableId::T2b, 10, 0);
        assert!(!t2b[0].change.is_change());
        assert_eq!((t2b[0].n, t2b[0].change.change_index), (1000, 500));
        assert!(t3.iter().all(|s| !s.id.contains(',')));
    }

    #[test]
    fn table_id_parsing() {
        assert_eq!("t2a".parse::<TableId>().unwrap(), TableId::T2a);
        assert!("T4".parse::<TableId>().is_err());
    }

    #[test]
    fn report_counts() {
        let s = Scenario::new("x", t1_change(0.7, 0.6), 500, 40, 11);
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.replications, 40);
        assert_eq!(r.failed, 0);
        assert_eq!(r.outcomes.len(), 40);
        assert_eq!(r.rejections, r.outcomes.iter().filter(|o| o.reject).count());
        assert!((0.0..=1.0).contains(&r.power));
        assert_eq!(run_scenario(&s).unwrap().outcomes, r.outcomes);
    }

    #[test]
    fn missing_critical_value_is_config_error() {
        let mut s = Scenario::new("x", t1_change(0.1, 0.2), 500, 5, 1);
        s.max_lag = 2;
        assert!(matches!(run_scenario(&s), Err(Error::Config(_))));
        s.replications = 0;
        assert!(run_scenario(&s).is_err());
    }

    #[test]
    fn median_location_error() {
        let s = Scenario::new("x", t1_change(0.1, 0.2), 500, 5, 1);
        let mk = |k| Replication { statistic: 0.0, change_index: k, reject: false };
        let r = PowerReport {
            scenario: s,
            rejections: 0,
            replications: 4,
            failed: 0,
            power: 0.0,
            mean_change_index: None,
            wall_time: Duration::ZERO,
            outcomes: vec![mk(240), mk(250), mk(280), mk(100)],
        };
        assert_eq!(r.median_location_error(), Some(20.0));
    }
}
