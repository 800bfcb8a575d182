//! Simulators for the four model families used in the power studies.
//!
//! All innovations are Gaussian. A change is simulated as one continuing
//! recursion whose parameters switch after observation `k*`: lagged values
//! (`X`, `Z`, `h²`) carry over the break.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::autocov::TimeSeries;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Arma11,
    Ma2,
    Product2Dep,
    Garch11,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Arma11 => "arma11",
            Family::Ma2 => "ma2",
            Family::Product2Dep => "product2dep",
            Family::Garch11 => "garch11",
        }
    }

    /// Number of parameters accepted by [`ModelSpec::from_params`].
    pub fn param_count(self) -> usize {
        match self {
            Family::Garch11 => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', '(', ')', ','], "").as_str() {
            "arma11" => Ok(Family::Arma11),
            "ma2" => Ok(Family::Ma2),
            "product2dep" | "2dependent" | "product" => Ok(Family::Product2Dep),
            "garch11" => Ok(Family::Garch11),
            _ => Err(Error::config(format!(
                "unknown model family '{s}' (expected arma11, ma2, product2dep or garch11)"
            ))),
        }
    }
}

/// A model with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    /// `X_t − φ X_{t−1} = Z_t + θ Z_{t−1}`, `Z ~ N(0, σ²)`.
    Arma11 { phi: f64, theta: f64, sigma: f64 },
    /// `X_t = Z_t + θ₁ Z_{t−1} + θ₂ Z_{t−2}`, `Z ~ N(0, σ²)`.
    Ma2 { theta1: f64, theta2: f64, sigma: f64 },
    /// `X_t = Z_t Z_{t−1} Z_{t−2}`, `Z ~ N(μ_Z, σ_Z²)`.
    Product2Dep { mu: f64, sigma: f64 },
    /// `X_t = h_t Z_t`, `h_t² = ω + α X²_{t−1} + β h²_{t−1}`, `Z ~ N(0, 1)`.
    Garch11 { omega: f64, alpha: f64, beta: f64 },
}

impl ModelSpec {
    pub fn arma11(phi: f64, theta: f64) -> Self {
        ModelSpec::Arma11 { phi, theta, sigma: 1.0 }
    }

    pub fn ma2(theta1: f64, theta2: f64) -> Self {
        ModelSpec::Ma2 { theta1, theta2, sigma: 1.0 }
    }

    pub fn product2dep(mu: f64, sigma: f64) -> Self {
        ModelSpec::Product2Dep { mu, sigma }
    }

    pub fn garch11(omega: f64, alpha: f64, beta: f64) -> Self {
        ModelSpec::Garch11 { omega, alpha, beta }
    }

    /// Builds a spec from a parameter list in family order
    /// (ARMA11: φ, θ; MA2: θ₁, θ₂; PRODUCT2DEP: μ_Z, σ_Z; GARCH11: ω, α, β).
    /// `noise_sigma` applies to the linear families.
    pub fn from_params(family: Family, params: &[f64], noise_sigma: f64) -> Result<Self> {
        if params.len() != family.param_count() {
            return Err(Error::config(format!(
                "{family} takes {} parameters, got {}",
                family.param_count(),
                params.len()
            )));
        }
        let spec = match family {
            Family::Arma11 => ModelSpec::Arma11 { phi: params[0], theta: params[1], sigma: noise_sigma },
            Family::Ma2 => ModelSpec::Ma2 { theta1: params[0], theta2: params[1], sigma: noise_sigma },
            Family::Product2Dep => ModelSpec::product2dep(params[0], params[1]),
            Family::Garch11 => ModelSpec::garch11(params[0], params[1], params[2]),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Arma11 { .. } => Family::Arma11,
            ModelSpec::Ma2 { .. } => Family::Ma2,
            ModelSpec::Product2Dep { .. } => Family::Product2Dep,
            ModelSpec::Garch11 { .. } => Family::Garch11,
        }
    }

    /// Parameters in family order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            ModelSpec::Arma11 { phi, theta, .. } => vec![phi, theta],
            ModelSpec::Ma2 { theta1, theta2, .. } => vec![theta1, theta2],
            ModelSpec::Product2Dep { mu, sigma } => vec![mu, sigma],
            ModelSpec::Garch11 { omega, alpha, beta } => vec![omega, alpha, beta],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.params().iter().all(|p| p.is_finite());
        if !finite {
            return Err(Error::config(format!("{self}: parameters must be finite")));
        }
        match *self {
            ModelSpec::Arma11 { phi, sigma, .. } => {
                if phi.abs() >= 1.0 {
                    return Err(Error::config(format!("ARMA(1,1) needs |phi| < 1, got {phi}")));
                }
                positive_sigma(sigma)
            }
            ModelSpec::Ma2 { sigma, .. } => positive_sigma(sigma),
            ModelSpec::Product2Dep { sigma, .. } => positive_sigma(sigma),
            ModelSpec::Garch11 { omega, alpha, beta } => {
                if !(omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
                    return Err(Error::config(format!(
                        "GARCH(1,1) needs omega > 0, alpha, beta ≥ 0, alpha + beta < 1; got ({omega}, {alpha}, {beta})"
                    )));
                }
                Ok(())
            }
        }
    }
}

fn positive_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::config(format!("noise sigma must be positive, got {sigma}")));
    }
    Ok(())
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.params().iter().map(|v| v.to_string()).collect();
        write!(f, "{}({})", self.family(), p.join(","))
    }
}

/// Observations `1..=k*` follow `before`, `k*+1..=n` follow `after`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChangeSpec {
    pub change_index: usize,
    pub before: ModelSpec,
    pub after: ModelSpec,
}

impl ChangeSpec {
    pub fn new(change_index: usize, before: ModelSpec, after: ModelSpec) -> Self {
        Self { change_index, before, after }
    }

    /// No change: `after = before`, break point irrelevant.
    pub fn none(spec: ModelSpec, n: usize) -> Self {
        Self::new(n / 2, spec, spec)
    }

    pub fn is_change(&self) -> bool {
        self.before != self.after
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.before.validate()?;
        self.after.validate()?;
        if self.before.family() != self.after.family() {
            return Err(Error::config(format!(
                "pre- and post-change families differ: {} vs {}",
                self.before.family(),
                self.after.family()
            )));
        }
        if !(self.change_index >= 1 && self.change_index < n) {
            return Err(Error::config(format!(
                "change index must satisfy 1 ≤ k* < n = {n}, got {}",
                self.change_index
            )));
        }
        Ok(())
    }
}

/// Lagged values carried between steps.
#[derive(Clone, Debug, Default)]
struct State {
    x1: f64,
    z1: f64,
    z2: f64,
    /// `(X_{t−1}², h²_{t−1})` once a GARCH step has run.
    garch: Option<(f64, f64)>,
    primed: bool,
}

impl State {
    /// Pre-sample values: zeros for the linear families, two innovations for
    /// the product model, nothing for GARCH (its first step uses the
    /// stationary variance).
    fn prime(&mut self, spec: &ModelSpec, rng: &mut StreamRng) {
        if self.primed {
            return;
        }
        if let ModelSpec::Product2Dep { mu, sigma } = *spec {
            self.z2 = mu + sigma * rng.sample::<f64, _>(StandardNormal);
            self.z1 = mu + sigma * rng.sample::<f64, _>(StandardNormal);
        }
        self.primed = true;
    }

    fn step(&mut self, spec: &ModelSpec, rng: &mut StreamRng) -> f64 {
        let e: f64 = rng.sample(StandardNormal);
        match *spec {
            ModelSpec::Arma11 { phi, theta, sigma } => {
                let z = sigma * e;
                let x = phi * self.x1 + z + theta * self.z1;
                self.x1 = x;
                self.z1 = z;
                x
            }
            ModelSpec::Ma2 { theta1, theta2, sigma } => {
                let z = sigma * e;
                let x = z + theta1 * self.z1 + theta2 * self.z2;
                self.z2 = self.z1;
                self.z1 = z;
                x
            }
            ModelSpec::Product2Dep { mu, sigma } => {
                let z = mu + sigma * e;
                let x = z * self.z1 * self.z2;
                self.z2 = self.z1;
                self.z1 = z;
                x
            }
            ModelSpec::Garch11 { omega, alpha, beta } => {
                let h2 = match self.garch {
                    None => omega / (1.0 - alpha - beta),
                    Some((x2, h2)) => omega + alpha * x2 + beta * h2,
                };
                let x = h2.sqrt() * e;
                self.garch = Some((x * x, h2));
                x
            }
        }
    }
}

fn run(segments: &[(ModelSpec, usize)], burn_in: usize, seed: u64) -> Result<TimeSeries> {
    let mut rng = rng::seeded(seed);
    let mut state = State::default();
    let total: usize = segments.iter().map(|s| s.1).sum();
    let mut out = Vec::with_capacity(total);
    let first = segments[0].0;
    state.prime(&first, &mut rng);
    for _ in 0..burn_in {
        state.step(&first, &mut rng);
    }
    for (spec, len) in segments {
        for _ in 0..*len {
            out.push(state.step(spec, &mut rng));
        }
    }
    TimeSeries::new(out).map_err(|e| Error::Numeric(format!("simulation diverged: {e}")))
}

/// `n` observations after discarding `burn_in`.
pub fn simulate(spec: &ModelSpec, n: usize, seed: u64, burn_in: usize) -> Result<TimeSeries> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::config("series length must be at least 1"));
    }
    run(&[(*spec, n)], burn_in, seed)
}

/// Series with a parameter change after `cs.change_index`, burn-in
/// [`DEFAULT_BURN_IN`] under the pre-change parameters.
pub fn simulate_with_change(cs: &ChangeSpec, n: usize, seed: u64) -> Result<TimeSeries> {
    simulate_with_change_burn_in(cs, n, seed, DEFAULT_BURN_IN)
}

pub fn simulate_with_change_burn_in(cs: &ChangeSpec, n: usize, seed: u64, burn_in: usize) -> Result<TimeSeries> {
    cs.validate(n)?;
    run(
        &[(cs.before, cs.change_index), (cs.after, n - cs.change_index)],
        burn_in,
        seed,
    )
}
