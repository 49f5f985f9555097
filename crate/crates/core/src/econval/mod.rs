//! Econometric validation of stance scores: a policy reaction function
//! (ordered logit), market-expectation regressions (OLS with HC1 errors)
//! and Granger causality.

mod design;
mod granger;
mod ols;
mod ordinal;

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

pub use design::{build_design, parse_policy_outcome, AlignedDesign, OutcomeRow, OutcomeTable};
pub use granger::{granger_test, GrangerResult};
pub use ols::{fit_ols_hc1, OlsFit, OlsOptions};
pub use ordinal::{fit_ordered_logit, OrderedLogitModel, OrdinalFit, GRADIENT_TOLERANCE, MAX_ITERATIONS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EconError {
    #[error("design matrix: {0}")]
    Design(String),
    #[error("need more observations: {0}")]
    InsufficientData(String),
    #[error("outcome levels: {0}")]
    Outcome(String),
    #[error("regressors are rank deficient (rank {rank} of {columns})")]
    RankDeficient { rank: usize, columns: usize },
    #[error("did not converge after {iterations} iterations (gradient max-norm {gradient:.3e})")]
    NoConvergence { iterations: usize, gradient: f64 },
    #[error("separation detected: {0}; the likelihood has no finite maximum")]
    Separation(String),
    #[error("information matrix is singular at the optimum")]
    Singular,
    #[error("{0}")]
    Input(String),
}

/// Named regressors, one row per observation. No intercept column; the
/// estimators add their own.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    data: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, EconError> {
        let k = names.len();
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(EconError::Design(format!("duplicate column {dup:?}")));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != k) {
            return Err(EconError::Design(format!("row {i} has {} values for {k} columns", rows[i].len())));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(EconError::Design("values must be finite".into()));
        }
        let data = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
        Ok(DesignMatrix { names, data })
    }

    pub fn from_matrix(names: Vec<String>, data: DMatrix<f64>) -> Result<Self, EconError> {
        if names.len() != data.ncols() {
            return Err(EconError::Design(format!("{} names for {} columns", names.len(), data.ncols())));
        }
        let rows: Vec<Vec<f64>> = data.row_iter().map(|r| r.iter().copied().collect()).collect();
        let mut m = Self::new(names, &rows)?;
        m.data = data;
        Ok(m)
    }

    /// `n` rows and no columns.
    pub fn empty(n: usize) -> Self {
        DesignMatrix { names: Vec::new(), data: DMatrix::zeros(n, 0) }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// Prepend a column of ones named `const`.
    pub fn with_intercept(&self) -> DesignMatrix {
        let mut names = vec!["const".to_string()];
        names.extend(self.names.iter().cloned());
        let data = self.data.clone().insert_column(0, 1.0);
        DesignMatrix { names, data }
    }
}

/// Two-sided p-value of a z statistic.
pub(crate) fn normal_p_value(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let n = Normal::standard();
    (2.0 * n.sf(z.abs())).clamp(0.0, 1.0)
}

pub(crate) fn matrix_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let tol = max * m.nrows().max(m.ncols()) as f64 * f64::EPSILON;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Fixed-width text table: a header row and one row per entry.
pub(crate) fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    let total = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in rows {
        line(&mut out, r);
    }
    out
}

/// Coefficient table row formatting shared by the estimators.
#[derive(Debug, Clone, Serialize)]
pub(crate) struct CoefRow {
    pub name: String,
    pub coef: f64,
    pub se: f64,
    pub p: f64,
}

/// Extra table column: header and a transform of the coefficient.
pub(crate) type ExtraColumn<'a> = (&'a str, fn(f64) -> f64);

pub(crate) fn coef_rows(rows: &[CoefRow], extra: Option<ExtraColumn<'_>>) -> String {
    let mut header = vec!["", "coef", "std err", "z", "P>|z|"];
    if let Some((name, _)) = extra {
        header.push(name);
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.name.clone(),
                format!("{:.4}", r.coef),
                format!("{:.4}", r.se),
                format!("{:.3}", r.coef / r.se),
                format!("{:.4}", r.p),
            ];
            if let Some((_, f)) = extra {
                v.push(format!("{:.4}", f(r.coef)));
            }
            v
        })
        .collect();
    text_table(&header, &body)
}
