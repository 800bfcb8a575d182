//! CUSUM path of autocovariance differences and the CSSM statistic.
//!
//! For `k = L+1..=n−1`,
//!
//! ```text
//! d_k = (γ̂_k(0) − γ̂_n(0), …, γ̂_k(L) − γ̂_n(L))
//! v_k = (k / √n) · C^{−1/2} d_k
//! T̂_n = max_k v_kᵀ v_k
//! ```
//!
//! Under no change, `T̂_n` converges to `sup_t Σ_{j=0}^{L} W⁰_j(t)²`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::autocov::{PrefixAutocovs, TimeSeries};
use crate::critval::{self, BridgeConfig};
use crate::error::{Error, Result};
use crate::longrun::{estimate_longrun_cov, truncation_lag, CovMatrix, EstimatorConfig};

/// Symmetric `C^{−1/2}` via eigendecomposition.
pub fn inv_sqrt(c: &CovMatrix) -> Result<DMatrix<f64>> {
    let m = c.matrix();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("covariance matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::new(m.clone());
    if let Some(bad) = eig.eigenvalues.iter().find(|&&ev| !(ev > 0.0)) {
        return Err(Error::Numeric(format!(
            "covariance matrix is not positive definite (eigenvalue {bad})"
        )));
    }
    let scaled = eig.eigenvalues.map(|ev| ev.sqrt().recip());
    let q = &eig.eigenvectors;
    let mut s = q * DMatrix::from_diagonal(&scaled) * q.transpose();
    let d = s.nrows();
    for i in 0..d {
        for j in i + 1..d {
            s[(j, i)] = s[(i, j)];
        }
    }
    Ok(s)
}

/// Squared norms `v_kᵀ v_k` for `k ∈ [k_min, k_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CusumPath {
    values: Vec<f64>,
    k_min: usize,
}

impl CusumPath {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn k_min(&self) -> usize {
        self.k_min
    }

    pub fn k_max(&self) -> usize {
        self.k_min + self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(k, value)` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (self.k_min + i, v))
    }

    /// Maximum and its smallest arg max.
    pub fn max(&self) -> (f64, usize) {
        let mut best = (self.values[0], self.k_min);
        for (k, v) in self.iter().skip(1) {
            if v > best.0 {
                best = (v, k);
            }
        }
        best
    }
}

pub fn cusum_path(x: &TimeSeries, c: &CovMatrix, max_lag: usize) -> Result<CusumPath> {
    let s = inv_sqrt(c)?;
    cusum_path_with(x, &s, max_lag)
}

pub(crate) fn cusum_path_with(x: &TimeSeries, inv_sqrt_c: &DMatrix<f64>, max_lag: usize) -> Result<CusumPath> {
    let d = max_lag + 1;
    if inv_sqrt_c.nrows() != d || inv_sqrt_c.ncols() != d {
        return Err(Error::domain(format!(
            "covariance matrix is {}x{}, expected {d}x{d} for L = {max_lag}",
            inv_sqrt_c.nrows(),
            inv_sqrt_c.ncols()
        )));
    }
    let n = x.len();
    if n < max_lag + 2 {
        return Err(Error::domain(format!(
            "CUSUM path needs n ≥ L + 2 = {}, got n = {n}",
            max_lag + 2
        )));
    }
    let v = x.values();
    let full: Vec<f64> = {
        let mut it = PrefixAutocovs::new(v, max_lag);
        let mut last = Vec::new();
        while let Some((_, sums)) = it.advance() {
            last = sums.to_vec();
        }
        last.iter().map(|s| s / n as f64).collect()
    };
    let sqrt_n = (n as f64).sqrt();
    let mut values = Vec::with_capacity(n - 1 - max_lag);
    let mut diff = DVector::zeros(d);
    let mut it = PrefixAutocovs::new(v, max_lag);
    while let Some((k, sums)) = it.advance() {
        if k >= n {
            break;
        }
        if k <= max_lag {
            continue;
        }
        let scale = k as f64 / sqrt_n;
        for h in 0..d {
            diff[h] = scale * (sums[h] / k as f64 - full[h]);
        }
        let w = inv_sqrt_c * &diff;
        values.push(w.norm_squared());
    }
    Ok(CusumPath {
        values,
        k_min: max_lag + 1,
    })
}

/// Outcome of a CSSM test on one series.
#[derive(Clone, Debug, PartialEq)]
pub struct TestResult {
    /// `T̂_n`.
    pub statistic: f64,
    /// Smallest `k` attaining the maximum of the path (reported with or
    /// without rejection).
    pub change_index: usize,
    pub critical_value: f64,
    pub reject: bool,
    pub max_lag: usize,
    pub n: usize,
    /// Truncation lag `h_n` used for `Ĉ`.
    pub truncation_lag: usize,
}

/// Full test with a given critical value: `Ĉ` from the whole series, then
/// the CUSUM path maximum.
pub fn cssm_test(
    x: &TimeSeries,
    max_lag: usize,
    cfg: &EstimatorConfig,
    critical_value: f64,
) -> Result<TestResult> {
    cssm_test_with_path(x, max_lag, cfg, critical_value).map(|(r, _)| r)
}

/// As [`cssm_test`], also returning the path.
pub fn cssm_test_with_path(
    x: &TimeSeries,
    max_lag: usize,
    cfg: &EstimatorConfig,
    critical_value: f64,
) -> Result<(TestResult, CusumPath)> {
    if !(critical_value.is_finite() && critical_value > 0.0) {
        return Err(Error::config(format!(
            "critical value must be positive, got {critical_value}"
        )));
    }
    let c_hat = estimate_longrun_cov(x, max_lag, cfg)?;
    let path = cusum_path(x, &c_hat, max_lag)?;
    let (statistic, change_index) = path.max();
    let result = TestResult {
        statistic,
        change_index,
        critical_value,
        reject: statistic >= critical_value,
        max_lag,
        n: x.len(),
        truncation_lag: truncation_lag(x.len(), cfg.beta)?,
    };
    Ok((result, path))
}

/// Resolves `c_α(L)` through [`critval::critical_value`] and runs the test.
pub fn cssm_test_at_level(
    x: &TimeSeries,
    max_lag: usize,
    cfg: &EstimatorConfig,
    alpha: f64,
    bridge: Option<&BridgeConfig>,
) -> Result<TestResult> {
    let c = critval::critical_value(max_lag, alpha, bridge)?;
    cssm_test(x, max_lag, cfg, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn inv_sqrt_examples() {
        let s = inv_sqrt(&CovMatrix::identity(2)).unwrap();
        assert_close(&s, &DMatrix::identity(3, 3), 1e-14);

        let c = CovMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 9.0]]).unwrap();
        let s = inv_sqrt(&c).unwrap();
        assert_close(&s, &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0 / 3.0]), 1e-14);

        let c = CovMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = inv_sqrt(&c).unwrap();
        assert_close(&(&s * c.matrix() * &s), &DMatrix::identity(2, 2), 1e-10);

        let c = CovMatrix::from_rows(&[vec![4.125, 2.5], vec![2.5, 2.3125]]).unwrap();
        let s = inv_sqrt(&c).unwrap();
        assert_close(&(&s * c.matrix() * &s), &DMatrix::identity(2, 2), 1e-10);
        assert_eq!(s[(0, 1)], s[(1, 0)]);
    }

    #[test]
    fn inv_sqrt_rejects_indefinite() {
        let c = CovMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(inv_sqrt(&c), Err(Error::Numeric(_))));
    }

    #[test]
    fn path_examples() {
        let c = CovMatrix::identity(0);
        let p = cusum_path(&ts(&[2.0, 0.0]), &c, 0).unwrap();
        assert_eq!(p.k_min(), 1);
        assert_eq!(p.k_max(), 1);
        assert!((p.values()[0] - 2.0).abs() < 1e-14);

        let p = cusum_path(&ts(&[1.0, -1.0]), &c, 0).unwrap();
        assert_eq!(p.values(), &[0.0]);
    }

    #[test]
    fn path_dimension_mismatch() {
        let x = ts(&[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(cusum_path(&x, &CovMatrix::identity(1), 0), Err(Error::Domain(_))));
        assert!(matches!(cusum_path(&ts(&[1.0, 2.0]), &CovMatrix::identity(1), 1), Err(Error::Domain(_))));
    }

    /// Classic CUSUM of squares, written directly from the prefix sums.
    fn cusum_of_squares(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let total: f64 = v.iter().map(|a| a * a).sum::<f64>() / n as f64;
        let mut out = Vec::new();
        for k in 1..n {
            let gk: f64 = v[..k].iter().map(|a| a * a).sum::<f64>() / k as f64;
            let t = k as f64 / (n as f64).sqrt() * (gk - total);
            out.push(t * t);
        }
        out
    }

    #[test]
    fn identity_weight_reduces_to_cusum_of_squares() {
        let v: Vec<f64> = (0..200).map(|i| ((i * 7919 % 97) as f64 - 48.0) / 20.0).collect();
        let p = cusum_path(&ts(&v), &CovMatrix::identity(0), 0).unwrap();
        let direct = cusum_of_squares(&v);
        assert_eq!(p.len(), direct.len());
        for (a, b) in p.values().iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn zero_series_does_not_reject() {
        let x = ts(&[0.0; 1000]);
        let r = cssm_test(&x, 1, &EstimatorConfig::default(), 2.408).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        assert_eq!(r.change_index, 2);
    }

    #[test]
    fn argmax_ties_pick_smallest() {
        let p = CusumPath { values: vec![1.0, 3.0, 3.0, 2.0], k_min: 5 };
        assert_eq!(p.max(), (3.0, 6));
    }

    proptest! {
        #[test]
        fn path_nonnegative(v in prop::collection::vec(-5.0f64..5.0, 40..150), lag in 0usize..3) {
            let x = ts(&v);
            let c = estimate_longrun_cov(&x, lag, &EstimatorConfig::default()).unwrap();
            let p = cusum_path(&x, &c, lag).unwrap();
            prop_assert_eq!(p.len(), x.len() - 1 - lag);
            prop_assert!(p.values().iter().all(|&a| a >= 0.0));
        }
    }
}
