//! Long-run covariance of the sample autocovariances.
//!
//! `C = [c_{hk}]`, `c_{hk} = lim n·Cov(γ̂_n(h), γ̂_n(k))`, rows and columns
//! indexed by lag `0..=L`. Two routes are provided:
//!
//! - [`estimate_longrun_cov`]: model-free estimator. Each entry is
//!   `θ̄_n(h,k) = (1/n) Σ_{l=0}^{h_n} σ̄_{h,k}(l)` with `h_n = ⌊n^β⌋` and
//!
//!   ```text
//!   σ̄_{h,k}(0) = n     · ( mean_i[Y1_i(0)]           −  γ̃(h)γ̃(k) )
//!   σ̄_{h,k}(l) = (n−l) · ( mean_i[Y1_i(l) + Y2_i(l)] − 2γ̃(h)γ̃(k) ),  l ≥ 1
//!   Y1_i(l) = x_i x_{i+h} x_{i+l} x_{i+l+k}
//!   Y2_i(l) = x_{i+l} x_{i+l+h} x_i x_{i+k}
//!   ```
//!
//!   The means run over the `n − l − max(h,k)` indices for which all four
//!   factors exist. The raw matrix is then floored in its eigenvalues so it
//!   can be inverted.
//! - [`bartlett_linear`]: Bartlett's closed form for linear processes with
//!   known autocovariances and fourth-moment ratio `η`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::autocov::{sample_autocov, TimeSeries};
use crate::error::{Error, Result};

/// Relative part of the eigenvalue floor: `1e-8 · trace / (L+1)`.
pub const RELATIVE_EIGEN_FLOOR: f64 = 1e-8;
pub const DEFAULT_BETA: f64 = 0.3;
pub const DEFAULT_EPS_FLOOR: f64 = 1e-12;

/// Symmetric `(L+1)×(L+1)` matrix indexed by lags `0..=L`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
}

impl CovMatrix {
    /// Validates shape and symmetry; the lower triangle is replaced by the
    /// upper one so the stored matrix is exactly symmetric.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return Err(Error::domain(format!(
                "covariance matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("covariance matrix has non-finite entries".into()));
        }
        let scale = entries.amax().max(f64::MIN_POSITIVE);
        let d = entries.nrows();
        for h in 0..d {
            for k in h + 1..d {
                if (entries[(h, k)] - entries[(k, h)]).abs() > 1e-12 * scale {
                    return Err(Error::domain(format!(
                        "covariance matrix is not symmetric at ({h}, {k})"
                    )));
                }
            }
        }
        Ok(Self {
            entries: mirror_upper(entries),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::domain("covariance rows must form a square matrix"));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(max_lag: usize) -> Self {
        Self {
            entries: DMatrix::identity(max_lag + 1, max_lag + 1),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn max_lag(&self) -> usize {
        self.dim() - 1
    }

    pub fn get(&self, h: usize, k: usize) -> f64 {
        self.entries[(h, k)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Row-major copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|h| (0..self.dim()).map(|k| self.get(h, k)).collect())
            .collect()
    }
}

fn mirror_upper(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    for h in 0..d {
        for k in h + 1..d {
            m[(k, h)] = m[(h, k)];
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    /// Truncation exponent, `h_n = ⌊n^β⌋`, `0 < β < 1/2`.
    pub beta: f64,
    /// Absolute eigenvalue floor. The floor applied is
    /// `max(eps_floor, 1e-8 · trace / (L+1))`.
    pub eps_floor: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            eps_floor: DEFAULT_EPS_FLOOR,
        }
    }
}

impl EstimatorConfig {
    pub fn new(beta: f64, eps_floor: f64) -> Result<Self> {
        let cfg = Self { beta, eps_floor };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        validate_beta(self.beta)?;
        if !(self.eps_floor > 0.0 && self.eps_floor.is_finite()) {
            return Err(Error::config(format!(
                "eps_floor must be a positive finite number, got {}",
                self.eps_floor
            )));
        }
        Ok(())
    }
}

fn validate_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::config(format!("beta must lie in (0, 0.5), got {beta}")));
    }
    Ok(())
}

/// `h_n = ⌊n^β⌋` clamped to `[1, n−1]`.
pub fn truncation_lag(n: usize, beta: f64) -> Result<usize> {
    validate_beta(beta)?;
    if n < 2 {
        return Err(Error::domain(format!("truncation lag needs n ≥ 2, got {n}")));
    }
    let raw = (n as f64).powf(beta).floor() as usize;
    Ok(raw.clamp(1, n - 1))
}

/// Smallest `n` for which the estimator is defined at max lag `L`,
/// i.e. `h_n + L < n`.
pub fn min_sample_size(max_lag: usize, beta: f64) -> Result<usize> {
    validate_beta(beta)?;
    let mut n = (max_lag + 2).max(2);
    while truncation_lag(n, beta)? + max_lag >= n {
        n += 1;
    }
    Ok(n)
}

/// Lag products `p_h[i] = x_i x_{i+h}` for `h = 0..=L`, with the
/// autocovariances `γ̃(h) = Σ_i p_h[i] / n`.
struct LagProducts {
    n: usize,
    products: Vec<Vec<f64>>,
    gamma: Vec<f64>,
}

impl LagProducts {
    fn new(x: &TimeSeries, max_lag: usize) -> Result<Self> {
        let v = x.values();
        let n = v.len();
        let mut products = Vec::with_capacity(max_lag + 1);
        let mut gamma = Vec::with_capacity(max_lag + 1);
        for h in 0..=max_lag {
            products.push(v[..n - h].iter().zip(&v[h..]).map(|(a, b)| a * b).collect());
            gamma.push(sample_autocov(x, h)?);
        }
        Ok(Self { n, products, gamma })
    }

    fn sigma_bar(&self, h: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        let m = n - l - h.max(k);
        let ph = &self.products[h];
        let pk = &self.products[k];
        let gg = self.gamma[h] * self.gamma[k];
        if l == 0 {
            let s: f64 = ph[..m].iter().zip(&pk[..m]).map(|(a, b)| a * b).sum();
            n as f64 * (s / m as f64 - gg)
        } else {
            let mut s = 0.0;
            for i in 0..m {
                s += ph[i] * pk[i + l] + ph[i + l] * pk[i];
            }
            (n - l) as f64 * (s / m as f64 - 2.0 * gg)
        }
    }

    fn theta_bar(&self, h: usize, k: usize, h_n: usize) -> f64 {
        let total: f64 = (0..=h_n).map(|l| self.sigma_bar(h, k, l)).sum();
        total / self.n as f64
    }
}

fn check_sigma_indices(n: usize, h: usize, k: usize, l: usize) -> Result<()> {
    let top = h.max(k);
    if top >= n || l >= n || l + top >= n {
        return Err(Error::domain(format!(
            "σ̄ needs l + max(h,k) < n, got h = {h}, k = {k}, l = {l}, n = {n}"
        )));
    }
    Ok(())
}

/// `σ̄_{h,k}(l)`. Symmetric in `(h, k)`.
pub fn sigma_bar(x: &TimeSeries, h: usize, k: usize, l: usize) -> Result<f64> {
    check_sigma_indices(x.len(), h, k, l)?;
    Ok(LagProducts::new(x, h.max(k))?.sigma_bar(h, k, l))
}

/// `θ̄_n(h,k) = (1/n) Σ_{l=0}^{h_n} σ̄_{h,k}(l)`.
pub fn theta_bar(x: &TimeSeries, h: usize, k: usize, cfg: &EstimatorConfig) -> Result<f64> {
    cfg.validate()?;
    let n = x.len();
    let top = h.max(k);
    let h_n = checked_truncation(n, top, cfg.beta)?;
    Ok(LagProducts::new(x, top)?.theta_bar(h, k, h_n))
}

fn checked_truncation(n: usize, max_lag: usize, beta: f64) -> Result<usize> {
    let min_n = min_sample_size(max_lag, beta)?;
    if n < min_n {
        return Err(Error::InsufficientData {
            n,
            min_n,
            max_lag,
            beta,
        });
    }
    truncation_lag(n, beta)
}

/// Eigenvalue floor applied by [`estimate_longrun_cov`] to a raw matrix.
pub fn effective_floor(raw: &DMatrix<f64>, cfg: &EstimatorConfig) -> f64 {
    let rel = RELATIVE_EIGEN_FLOOR * raw.trace() / raw.nrows() as f64;
    if rel.is_finite() {
        cfg.eps_floor.max(rel)
    } else {
        cfg.eps_floor
    }
}

/// `Ĉ = [θ̄_n(h,k)]_{h,k=0..L}`, regularized to be positive definite.
pub fn estimate_longrun_cov(x: &TimeSeries, max_lag: usize, cfg: &EstimatorConfig) -> Result<CovMatrix> {
    cfg.validate()?;
    let n = x.len();
    let h_n = checked_truncation(n, max_lag, cfg.beta)?;
    let lp = LagProducts::new(x, max_lag)?;
    let d = max_lag + 1;
    let mut raw = DMatrix::zeros(d, d);
    for h in 0..d {
        for k in h..d {
            raw[(h, k)] = lp.theta_bar(h, k, h_n);
        }
    }
    let raw = mirror_upper(raw);
    let floor = effective_floor(&raw, cfg);
    Ok(CovMatrix {
        entries: floor_eigenvalues(raw, floor)?,
    })
}

/// Raises every eigenvalue below `floor` to `floor`. A matrix already above
/// the floor is returned unchanged.
pub fn floor_eigenvalues(m: DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().all(|&ev| ev >= floor) {
        return Ok(m);
    }
    let floored = eig.eigenvalues.map(|ev| ev.max(floor));
    let q = &eig.eigenvectors;
    let rebuilt = q * DMatrix::from_diagonal(&floored) * q.transpose();
    Ok(mirror_upper(rebuilt))
}

/// Bartlett's formula for a linear process with autocovariances
/// `γ(0..=M)` (zero beyond `M`) and `E Z⁴ = η σ⁴`:
///
/// ```text
/// c_{ij} = Σ_l { γ(l)γ(l−i+j) + γ(l+j)γ(l−i) } + (η−3) γ(i)γ(j)
/// ```
///
/// The sum over `l` is exact when truncated at `|l| ≤ M + L`.
pub fn bartlett_linear(gamma: &[f64], eta: f64, max_lag: usize) -> Result<CovMatrix> {
    if gamma.is_empty() {
        return Err(Error::domain("autocovariance sequence must be non-empty"));
    }
    if gamma.iter().any(|g| !g.is_finite()) || !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::domain("autocovariances must be finite and eta positive"));
    }
    let m = gamma.len() as i64 - 1;
    let g = |lag: i64| -> f64 {
        let a = lag.unsigned_abs() as i64;
        if a > m {
            0.0
        } else {
            gamma[a as usize]
        }
    };
    let bound = m + max_lag as i64;
    let d = max_lag + 1;
    let mut c = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let (ii, jj) = (i as i64, j as i64);
            let mut s = 0.0;
            for l in -bound..=bound {
                s += g(l) * g(l - ii + jj) + g(l + jj) * g(l - ii);
            }
            c[(i, j)] = s + (eta - 3.0) * g(ii) * g(jj);
        }
    }
    Ok(CovMatrix {
        entries: mirror_upper(c),
    })
}
