//! Granger causality F-test.
//!
//! For lag order `L`, with `n_eff = n - L` usable observations:
//!
//! ```text
//! restricted:   y_t = a + sum_{i=1..L} g_i y_{t-i} + e_t
//! unrestricted: y_t = a + sum_{i=1..L} g_i y_{t-i} + sum_{i=1..L} d_i x_{t-i} + u_t
//! F = ((RSS_r - RSS_u) / L) / (RSS_u / (n_eff - 2L - 1))
//! ```
//!
//! `F` is referred to an F distribution with `(L, n_eff - 2L - 1)` degrees
//! of freedom. Regressions use an SVD least-squares solve, so a constant
//! `x` (collinear with the intercept) adds nothing and gives `F = 0`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::EconError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrangerResult {
    pub lags: usize,
    pub f_stat: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub df_num: usize,
    pub df_den: usize,
}

impl GrangerResult {
    pub fn summary(&self) -> String {
        format!(
            "Granger causality, {} lag(s): F({}, {}) = {:.4}, p = {:.4}, n_eff = {}\n",
            self.lags, self.df_num, self.df_den, self.f_stat, self.p_value, self.n_effective
        )
    }
}

fn rss(x: DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let svd = x.clone().svd(true, true);
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = max * x.nrows().max(x.ncols()) as f64 * f64::EPSILON;
    let beta = svd.solve(y, eps).expect("U and V were computed");
    (y - x * beta).norm_squared()
}

/// Does `x` help predict `y` beyond `y`'s own lags?
pub fn granger_test(x: &[f64], y: &[f64], lags: usize) -> Result<GrangerResult, EconError> {
    if x.len() != y.len() {
        return Err(EconError::Input(format!("series lengths differ ({} vs {})", x.len(), y.len())));
    }
    if lags == 0 {
        return Err(EconError::Input("lags must be at least 1".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(EconError::Input("series must be finite".into()));
    }
    let n = x.len();
    let n_eff = n.saturating_sub(lags);
    if n_eff <= 2 * lags + 1 {
        return Err(EconError::InsufficientData(format!(
            "{n} observations leave {n_eff} after {lags} lag(s); need more than {}",
            2 * lags + 1
        )));
    }
    let df_den = n_eff - 2 * lags - 1;
    let target = DVector::from_fn(n_eff, |t, _| y[t + lags]);
    let restricted = DMatrix::from_fn(n_eff, lags + 1, |t, j| if j == 0 { 1.0 } else { y[t + lags - j] });
    let unrestricted = DMatrix::from_fn(n_eff, 2 * lags + 1, |t, j| match j {
        0 => 1.0,
        j if j <= lags => y[t + lags - j],
        j => x[t + lags - (j - lags)],
    });
    let rss_r = rss(restricted, &target);
    let rss_u = rss(unrestricted, &target);
    let (f_stat, p_value) = if rss_u <= f64::EPSILON * rss_r.max(f64::MIN_POSITIVE) {
        if rss_r - rss_u <= f64::EPSILON * rss_r {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = (((rss_r - rss_u) / lags as f64) / (rss_u / df_den as f64)).max(0.0);
        let dist = FisherSnedecor::new(lags as f64, df_den as f64).expect("positive degrees of freedom");
        (f, dist.sf(f).clamp(0.0, 1.0))
    };
    Ok(GrangerResult { lags, f_stat, p_value, n_effective: n_eff, df_num: lags, df_den })
}
