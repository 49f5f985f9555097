//! Least squares with heteroskedasticity-robust (HC1) standard errors.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{coef_rows, matrix_rank, normal_p_value, CoefRow, DesignMatrix, EconError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OlsOptions {
    /// Prepend a `const` column.
    pub intercept: bool,
}

impl Default for OlsOptions {
    fn default() -> Self {
        OlsOptions { intercept: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OlsFit {
    pub coefficients: IndexMap<String, f64>,
    /// HC1 robust standard errors.
    pub std_errors: IndexMap<String, f64>,
    /// Classical standard errors, `s^2 (X'X)^-1`.
    pub classical_std_errors: IndexMap<String, f64>,
    /// From the normal approximation on the robust errors.
    pub p_values: IndexMap<String, f64>,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    /// Gaussian log-likelihood at the ML variance `RSS / n`.
    pub log_likelihood: f64,
    /// `2k - 2 log_likelihood`, with `k` the number of coefficients.
    pub aic: f64,
    pub n: usize,
}

impl OlsFit {
    pub fn summary_table(&self) -> String {
        let rows: Vec<CoefRow> = self
            .coefficients
            .iter()
            .map(|(k, &coef)| CoefRow { name: k.clone(), coef, se: self.std_errors[k], p: self.p_values[k] })
            .collect();
        format!(
            "OLS, HC1 standard errors\n{}\nn = {}  R^2 = {:.4}  log-likelihood = {:.4}  AIC = {:.4}\n",
            coef_rows(&rows, None),
            self.n,
            self.r_squared,
            self.log_likelihood,
            self.aic
        )
    }
}

pub fn fit_ols_hc1(x: &DesignMatrix, y: &[f64], opts: OlsOptions) -> Result<OlsFit, EconError> {
    let design = if opts.intercept { x.with_intercept() } else { x.clone() };
    let xm = design.data();
    let (n, k) = (xm.nrows(), xm.ncols());
    if y.len() != n {
        return Err(EconError::Input(format!("{} outcomes for {n} rows", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(EconError::Input("outcomes must be finite".into()));
    }
    if k == 0 {
        return Err(EconError::Design("no regressors".into()));
    }
    if n <= k {
        return Err(EconError::InsufficientData(format!("{n} rows for {k} coefficients")));
    }
    let rank = matrix_rank(xm);
    if rank < k {
        return Err(EconError::RankDeficient { rank, columns: k });
    }
    let yv = DVector::from_column_slice(y);
    let xtx = xm.transpose() * xm;
    let xtx_inv = xtx.cholesky().ok_or(EconError::RankDeficient { rank, columns: k })?.inverse();
    let beta = &xtx_inv * (xm.transpose() * &yv);
    let resid = &yv - xm * &beta;
    let rss = resid.norm_squared();

    // X' diag(e^2) X
    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let row = xm.row(i);
        let e2 = resid[i] * resid[i];
        for a in 0..k {
            for b in 0..k {
                meat[(a, b)] += row[a] * row[b] * e2;
            }
        }
    }
    let hc1 = (&xtx_inv * meat * &xtx_inv) * (n as f64 / (n - k) as f64);
    let s2 = rss / (n - k) as f64;

    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let nf = n as f64;
    let log_likelihood =
        if rss > 0.0 { -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + (rss / nf).ln() + 1.0) } else { f64::INFINITY };

    let mut coefficients = IndexMap::new();
    let mut std_errors = IndexMap::new();
    let mut classical_std_errors = IndexMap::new();
    let mut p_values = IndexMap::new();
    for (j, name) in design.names().iter().enumerate() {
        let se = hc1[(j, j)].max(0.0).sqrt();
        coefficients.insert(name.clone(), beta[j]);
        std_errors.insert(name.clone(), se);
        classical_std_errors.insert(name.clone(), (s2 * xtx_inv[(j, j)]).max(0.0).sqrt());
        p_values.insert(name.clone(), if se > 0.0 { normal_p_value(beta[j] / se) } else { f64::NAN });
    }
    Ok(OlsFit {
        coefficients,
        std_errors,
        classical_std_errors,
        p_values,
        residuals: resid.iter().copied().collect(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { f64::NAN },
        log_likelihood,
        aic: 2.0 * k as f64 - 2.0 * log_likelihood,
        n,
    })
}
