//! Sample autocovariances with divisor `n` and their prefix sequences.
//!
//! Series are taken as mean-zero: no centering is applied here. Callers with
//! real data can subtract the sample mean first ([`TimeSeries::centered`]).

use crate::error::{Error, Result};

/// Finite real-valued observations `x_1..x_n`, `n ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("time series must contain at least one value"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "time series value at index {} is not finite ({})",
                i + 1,
                values[i]
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// The series with its sample mean subtracted.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        Self {
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    /// Multiplies every observation by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Autocovariances at lags `0..=L` of the prefix `x_1..x_{n_used}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocovVector {
    gamma: Vec<f64>,
    n_used: usize,
}

impl AutocovVector {
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn n_used(&self) -> usize {
        self.n_used
    }

    pub fn max_lag(&self) -> usize {
        self.gamma.len() - 1
    }
}

fn check_lag(n: usize, h: usize) -> Result<()> {
    if h >= n {
        return Err(Error::domain(format!(
            "lag {h} out of range [0, {}] for a series of length {n}",
            n - 1
        )));
    }
    Ok(())
}

/// `γ̂_n(h) = (1/n) Σ_{i=1}^{n-h} x_i x_{i+h}`.
pub fn sample_autocov(x: &TimeSeries, h: usize) -> Result<f64> {
    let v = x.values();
    let n = v.len();
    check_lag(n, h)?;
    let s: f64 = v[..n - h].iter().zip(&v[h..]).map(|(a, b)| a * b).sum();
    Ok(s / n as f64)
}

/// `γ̃_n(h)`, the autocovariance used inside the long-run estimator.
///
/// Products that would need `x_{n+1}..x_{n+h}` are dropped while the divisor
/// stays `n`, so this coincides with [`sample_autocov`].
pub fn circular_autocov(x: &TimeSeries, h: usize) -> Result<f64> {
    sample_autocov(x, h)
}

/// Autocovariance vectors of every prefix `x_1..x_k`, `k = L+1..=n`.
///
/// Uses running lag-product sums, `O(n·L)` in total.
pub fn prefix_autocovs(x: &TimeSeries, max_lag: usize) -> Result<Vec<AutocovVector>> {
    let n = x.len();
    if max_lag >= n {
        return Err(Error::domain(format!(
            "max lag L = {max_lag} requires n ≥ {}, got n = {n}",
            max_lag + 1
        )));
    }
    let mut out = Vec::with_capacity(n - max_lag);
    let mut iter = PrefixAutocovs::new(x.values(), max_lag);
    while let Some((k, sums)) = iter.advance() {
        if k > max_lag {
            out.push(AutocovVector {
                gamma: sums.iter().map(|s| s / k as f64).collect(),
                n_used: k,
            });
        }
    }
    Ok(out)
}

/// Streaming form of [`prefix_autocovs`]: yields `(k, S)` where
/// `S[h] = Σ_{i=1}^{k-h} x_i x_{i+h}` (undivided sums), for `k = 1..=n`.
pub(crate) struct PrefixAutocovs<'a> {
    values: &'a [f64],
    sums: Vec<f64>,
    k: usize,
}

impl<'a> PrefixAutocovs<'a> {
    pub(crate) fn new(values: &'a [f64], max_lag: usize) -> Self {
        Self {
            values,
            sums: vec![0.0; max_lag + 1],
            k: 0,
        }
    }

    pub(crate) fn advance(&mut self) -> Option<(usize, &[f64])> {
        if self.k == self.values.len() {
            return None;
        }
        let idx = self.k;
        let xk = self.values[idx];
        for (h, s) in self.sums.iter_mut().enumerate() {
            if h > idx {
                break;
            }
            *s += self.values[idx - h] * xk;
        }
        self.k += 1;
        Some((self.k, &self.sums))
    }
}
