//! Proportional-odds (ordered logit) regression.
//!
//! With outcome levels `1..=K`, linear predictor `eta = x'b` and cutpoints
//! `c_1 < ... < c_{K-1}`:
//!
//! ```text
//! P(y <= k | x) = logistic(c_k - eta)
//! ```
//!
//! so a positive coefficient shifts mass toward higher levels. The
//! optimizer works on `(b, c_1, ln(c_2 - c_1), ...)`, which keeps the
//! cutpoints ordered; standard errors come from the observed information
//! in the natural `(b, c)` parameters.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{coef_rows, matrix_rank, normal_p_value, text_table, CoefRow, DesignMatrix, EconError};

pub const MAX_ITERATIONS: usize = 200;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
const MAX_HALVINGS: usize = 60;
/// Standardized effect above which a coefficient is taken as diverging.
const SEPARATION_EFFECT: f64 = 25.0;

#[derive(Debug, Clone, Serialize)]
pub struct OrdinalFit {
    pub coefficients: IndexMap<String, f64>,
    pub std_errors: IndexMap<String, f64>,
    pub odds_ratios: IndexMap<String, f64>,
    pub p_values: IndexMap<String, f64>,
    pub cutpoints: Vec<f64>,
    pub cutpoint_std_errors: Vec<f64>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub n: usize,
    pub levels: usize,
    pub iterations: usize,
    /// Share of observations whose most probable level is the observed one.
    pub accuracy: f64,
    /// Share of the most common level.
    pub baseline_accuracy: f64,
    /// Log-likelihood at the start and after each accepted step.
    pub log_likelihood_path: Vec<f64>,
}

impl OrdinalFit {
    /// `#params = #coefficients + #cutpoints`.
    pub fn n_params(&self) -> usize {
        self.coefficients.len() + self.cutpoints.len()
    }

    pub fn summary_table(&self) -> String {
        let rows: Vec<CoefRow> = self
            .coefficients
            .iter()
            .map(|(k, &coef)| CoefRow { name: k.clone(), coef, se: self.std_errors[k], p: self.p_values[k] })
            .collect();
        let mut out = String::from("Ordered logit\n");
        out.push_str(&coef_rows(&rows, Some(("odds ratio", f64::exp))));
        let cuts: Vec<Vec<String>> = self
            .cutpoints
            .iter()
            .zip(&self.cutpoint_std_errors)
            .enumerate()
            .map(|(i, (c, se))| vec![format!("cut {}|{}", i + 1, i + 2), format!("{c:.4}"), format!("{se:.4}")])
            .collect();
        out.push('\n');
        out.push_str(&text_table(&["", "value", "std err"], &cuts));
        out.push_str(&format!(
            "\nn = {}  levels = {}  log-likelihood = {:.4}  AIC = {:.4}\naccuracy = {:.4} (baseline {:.4})  iterations = {}\n",
            self.n, self.levels, self.log_likelihood, self.aic, self.accuracy, self.baseline_accuracy, self.iterations
        ));
        out
    }
}

/// Likelihood of the proportional-odds model on fixed data. Parameter
/// vectors are `[b_1..b_p, c_1..c_{K-1}]`.
#[derive(Debug, Clone)]
pub struct OrderedLogitModel<'a> {
    x: &'a DMatrix<f64>,
    /// Zero-based levels.
    y: Vec<usize>,
    levels: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic density.
fn density(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    let e = (-z.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

fn density_slope(z: f64) -> f64 {
    density(z) * (1.0 - 2.0 * sigmoid(z))
}

struct Accumulated {
    ll: f64,
    grad: DVector<f64>,
    hess: Option<DMatrix<f64>>,
}

impl<'a> OrderedLogitModel<'a> {
    /// `y` holds levels `1..=K`; every level must occur.
    pub fn new(x: &'a DMatrix<f64>, y: &[usize]) -> Result<Self, EconError> {
        if y.len() != x.nrows() {
            return Err(EconError::Input(format!("{} outcomes for {} rows", y.len(), x.nrows())));
        }
        let levels = y.iter().copied().max().unwrap_or(0);
        if levels < 2 {
            return Err(EconError::Outcome("need at least two levels".into()));
        }
        if y.contains(&0) {
            return Err(EconError::Outcome("levels are numbered from 1".into()));
        }
        if let Some(missing) = (1..=levels).find(|l| !y.contains(l)) {
            return Err(EconError::Outcome(format!("level {missing} of 1..={levels} never occurs")));
        }
        Ok(OrderedLogitModel { x, y: y.iter().map(|l| l - 1).collect(), levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols() + self.levels - 1
    }

    fn split<'p>(&self, params: &'p [f64]) -> (&'p [f64], &'p [f64]) {
        assert_eq!(params.len(), self.n_params(), "parameter vector length");
        params.split_at(self.x.ncols())
    }

    fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        self.x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum()
    }

    /// `(a, b)` bounds of observation `i`'s level on the latent scale.
    fn bounds(&self, i: usize, cuts: &[f64], eta: f64) -> (f64, f64) {
        let k = self.y[i];
        let a = if k < self.levels - 1 { cuts[k] - eta } else { f64::INFINITY };
        let b = if k > 0 { cuts[k - 1] - eta } else { f64::NEG_INFINITY };
        (a, b)
    }

    fn ln_prob(a: f64, b: f64) -> f64 {
        if a == f64::INFINITY {
            -softplus(b)
        } else if b == f64::NEG_INFINITY {
            -softplus(-a)
        } else {
            let p = if b > 0.0 { sigmoid(-b) - sigmoid(-a) } else { sigmoid(a) - sigmoid(b) };
            if p > 0.0 {
                p.ln()
            } else {
                f64::NEG_INFINITY
            }
        }
    }

    pub fn log_likelihood(&self, params: &[f64]) -> f64 {
        let (beta, cuts) = self.split(params);
        (0..self.y.len())
            .map(|i| {
                let (a, b) = self.bounds(i, cuts, self.eta(i, beta));
                Self::ln_prob(a, b)
            })
            .sum()
    }

    pub fn gradient(&self, params: &[f64]) -> DVector<f64> {
        self.accumulate(params, false).grad
    }

    pub fn hessian(&self, params: &[f64]) -> DMatrix<f64> {
        self.accumulate(params, true).hess.expect("requested")
    }

    fn accumulate(&self, params: &[f64], want_hess: bool) -> Accumulated {
        let (beta, cuts) = self.split(params);
        let p = beta.len();
        let m = self.n_params();
        let mut ll = 0.0;
        let mut grad = DVector::zeros(m);
        let mut hess = want_hess.then(|| DMatrix::zeros(m, m));
        for i in 0..self.y.len() {
            let k = self.y[i];
            let (a, b) = self.bounds(i, cuts, self.eta(i, beta));
            let lp = Self::ln_prob(a, b);
            ll += lp;
            let prob = lp.exp();
            let (fa, fb) = (density(a), density(b));
            let la = fa / prob;
            let lb = -fb / prob;
            let xi = self.x.row(i);
            for j in 0..p {
                grad[j] -= xi[j] * (la + lb);
            }
            let upper = (k < self.levels - 1).then_some(p + k);
            let lower = (k > 0).then(|| p + k - 1);
            if let Some(u) = upper {
                grad[u] += la;
            }
            if let Some(l) = lower {
                grad[l] += lb;
            }
            let Some(h) = hess.as_mut() else { continue };
            let laa = density_slope(a) / prob - la * la;
            let lbb = -density_slope(b) / prob - lb * lb;
            let lab = fa * fb / (prob * prob);
            let bb = laa + lbb + 2.0 * lab;
            for r in 0..p {
                for c in 0..p {
                    h[(r, c)] += xi[r] * xi[c] * bb;
                }
            }
            if let Some(u) = upper {
                h[(u, u)] += laa;
                for r in 0..p {
                    let v = -xi[r] * (laa + lab);
                    h[(r, u)] += v;
                    h[(u, r)] += v;
                }
            }
            if let Some(l) = lower {
                h[(l, l)] += lbb;
                for r in 0..p {
                    let v = -xi[r] * (lbb + lab);
                    h[(r, l)] += v;
                    h[(l, r)] += v;
                }
            }
            if let (Some(u), Some(l)) = (upper, lower) {
                h[(u, l)] += lab;
                h[(l, u)] += lab;
            }
        }
        Accumulated { ll, grad, hess }
    }

    /// Level probabilities for row `i`, lowest level first.
    pub fn probabilities(&self, params: &[f64], i: usize) -> Vec<f64> {
        let (beta, cuts) = self.split(params);
        let eta = self.eta(i, beta);
        let mut cum: Vec<f64> = cuts.iter().map(|c| sigmoid(c - eta)).collect();
        cum.push(1.0);
        let mut prev = 0.0;
        cum.iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    fn to_natural(&self, theta: &[f64]) -> Vec<f64> {
        let p = self.x.ncols();
        let mut out = theta.to_vec();
        for j in p + 1..theta.len() {
            out[j] = out[j - 1] + theta[j].exp();
        }
        out
    }

    fn to_working(&self, natural: &[f64]) -> Vec<f64> {
        let p = self.x.ncols();
        let mut out = natural.to_vec();
        for j in p + 1..natural.len() {
            out[j] = (natural[j] - natural[j - 1]).ln();
        }
        out
    }

    /// Log-likelihood, gradient and Hessian in working parameters.
    fn working_derivatives(&self, theta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let p = self.x.ncols();
        let m = theta.len();
        let nat = self.to_natural(theta);
        let acc = self.accumulate(&nat, true);
        let h_nat = acc.hess.expect("requested");
        let mut jac = DMatrix::<f64>::identity(m, m);
        for k in p..m {
            for j in p + 1..=k {
                jac[(k, j)] = theta[j].exp();
            }
            if k > p {
                jac[(k, p)] = 1.0;
                jac[(k, k)] = theta[k].exp();
            }
        }
        let grad = jac.transpose() * &acc.grad;
        let mut hess = jac.transpose() * h_nat * &jac;
        for j in p + 1..m {
            let tail: f64 = (j..m).map(|k| acc.grad[k]).sum();
            hess[(j, j)] += theta[j].exp() * tail;
        }
        (acc.ll, grad, hess)
    }
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton direction for maximizing: solves `(-H + lambda I) d = g`, adding
/// a ridge when `-H` is not positive definite.
fn ascent_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> DVector<f64> {
    let neg = -h;
    let scale = neg.diagonal().iter().fold(1.0f64, |m, d| m.max(d.abs()));
    let mut lambda = 0.0;
    loop {
        let a = &neg + DMatrix::identity(h.nrows(), h.ncols()) * lambda;
        if let Some(ch) = a.cholesky() {
            return ch.solve(g);
        }
        lambda = if lambda == 0.0 { 1e-8 * scale } else { lambda * 10.0 };
        if !lambda.is_finite() || lambda > 1e12 * scale {
            return g.clone() / scale;
        }
    }
}

pub fn fit_ordered_logit(x: &DesignMatrix, y: &[usize]) -> Result<OrdinalFit, EconError> {
    let data = x.data();
    let model = OrderedLogitModel::new(data, y)?;
    let (n, p, k) = (data.nrows(), data.ncols(), model.levels());
    if n <= model.n_params() {
        return Err(EconError::InsufficientData(format!("{n} rows for {} parameters", model.n_params())));
    }
    let with_const = x.with_intercept();
    let rank = matrix_rank(with_const.data());
    if rank < p + 1 {
        return Err(EconError::RankDeficient { rank, columns: p + 1 });
    }

    let counts: Vec<usize> = (1..=k).map(|l| y.iter().filter(|&&v| v == l).count()).collect();
    let mut natural = vec![0.0; p];
    let mut cum = 0usize;
    for &c in &counts[..k - 1] {
        cum += c;
        let q = cum as f64 / n as f64;
        natural.push((q / (1.0 - q)).ln());
    }
    let mut theta = model.to_working(&natural);

    let sds: Vec<f64> = (0..p)
        .map(|j| {
            let col = data.column(j);
            let mean = col.mean();
            (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
        })
        .collect();
    let diverging =
        |theta: &[f64]| (0..p).find(|&j| theta[j].abs() * sds[j] > SEPARATION_EFFECT).map(|j| x.names()[j].clone());

    let mut path = Vec::new();
    let mut iterations = 0;
    let (mut ll, mut g, mut h) = model.working_derivatives(&theta);
    path.push(ll);
    loop {
        if max_abs(&g) < GRADIENT_TOLERANCE {
            break;
        }
        if let Some(col) = diverging(&theta) {
            return Err(EconError::Separation(format!("coefficient on {col} is diverging")));
        }
        if ll > -1e-9 {
            return Err(EconError::Separation("fitted probabilities of the observed levels reach 1".into()));
        }
        if iterations == MAX_ITERATIONS {
            return Err(EconError::NoConvergence { iterations, gradient: max_abs(&g) });
        }
        iterations += 1;
        let d = ascent_direction(&g, &h);
        let mut step = 1.0;
        // near the optimum the gain falls below the resolution of `ll`
        let slack = 64.0 * f64::EPSILON * ll.abs().max(1.0);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = theta.iter().zip(d.iter()).map(|(t, di)| t + step * di).collect();
            let cand_ll = model.log_likelihood(&model.to_natural(&cand));
            if cand_ll.is_finite() && cand_ll >= ll - slack {
                accepted = Some(cand);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            // No representable improvement: we are at the optimum to
            // machine precision, unless the gradient says otherwise.
            if max_abs(&g) < 1e-5 {
                break;
            }
            return Err(EconError::NoConvergence { iterations, gradient: max_abs(&g) });
        };
        theta = next;
        (ll, g, h) = model.working_derivatives(&theta);
        path.push(ll);
    }
    if let Some(col) = diverging(&theta) {
        return Err(EconError::Separation(format!("coefficient on {col} is diverging")));
    }

    let natural = model.to_natural(&theta);
    let info = -model.hessian(&natural);
    let cov = info.clone().cholesky().map(|c| c.inverse()).or_else(|| info.try_inverse()).ok_or(EconError::Singular)?;
    let se: Vec<f64> = (0..natural.len()).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();

    let mut coefficients = IndexMap::new();
    let mut std_errors = IndexMap::new();
    let mut odds_ratios = IndexMap::new();
    let mut p_values = IndexMap::new();
    for (j, name) in x.names().iter().enumerate() {
        coefficients.insert(name.clone(), natural[j]);
        std_errors.insert(name.clone(), se[j]);
        odds_ratios.insert(name.clone(), natural[j].exp());
        p_values.insert(name.clone(), normal_p_value(natural[j] / se[j]));
    }

    let hits = (0..n)
        .filter(|&i| {
            let probs = model.probabilities(&natural, i);
            let mut best = 0;
            for (l, &pr) in probs.iter().enumerate() {
                if pr > probs[best] {
                    best = l;
                }
            }
            best + 1 == y[i]
        })
        .count();
    let modal = counts.iter().copied().max().unwrap_or(0);
    let n_params = natural.len();
    Ok(OrdinalFit {
        coefficients,
        std_errors,
        odds_ratios,
        p_values,
        cutpoints: natural[p..].to_vec(),
        cutpoint_std_errors: se[p..].to_vec(),
        log_likelihood: ll,
        aic: 2.0 * n_params as f64 - 2.0 * ll,
        n,
        levels: k,
        iterations,
        accuracy: hits as f64 / n as f64,
        baseline_accuracy: modal as f64 / n as f64,
        log_likelihood_path: path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logit(q: f64) -> f64 {
        (q / (1.0 - q)).ln()
    }

    #[test]
    fn intercept_only_matches_cumulative_shares() {
        let y = [1, 1, 2, 2, 2, 3, 3, 3, 3, 3];
        let fit = fit_ordered_logit(&DesignMatrix::empty(10), &y).unwrap();
        assert!((fit.cutpoints[0] - logit(0.2)).abs() < 1e-9);
        assert!((fit.cutpoints[1] - logit(0.5)).abs() < 1e-9);
        assert_eq!(fit.accuracy, 0.5);
        assert_eq!(fit.baseline_accuracy, 0.5);
        let ll = 2.0 * 0.2f64.ln() + 3.0 * 0.3f64.ln() + 5.0 * 0.5f64.ln();
        assert!((fit.log_likelihood - ll).abs() < 1e-9);
        assert!((fit.aic - (4.0 - 2.0 * ll)).abs() < 1e-9);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let x = DMatrix::from_row_slice(6, 2, &[0.5, 1.0, -1.0, 0.2, 0.3, -0.7, 1.5, 0.1, -0.2, -1.1, 0.9, 0.4]);
        let y = [1, 2, 3, 3, 1, 2];
        let m = OrderedLogitModel::new(&x, &y).unwrap();
        let params = [0.4, -0.3, -0.5, 0.8];
        let g = m.gradient(&params);
        let h = m.hessian(&params);
        let step = 1e-5;
        for j in 0..4 {
            let mut up = params;
            let mut dn = params;
            up[j] += step;
            dn[j] -= step;
            let fd = (m.log_likelihood(&up) - m.log_likelihood(&dn)) / (2.0 * step);
            assert!((fd - g[j]).abs() < 1e-6 * (1.0 + g[j].abs()), "grad {j}");
            let gd = (m.gradient(&up) - m.gradient(&dn)) / (2.0 * step);
            for i in 0..4 {
                assert!((gd[i] - h[(i, j)]).abs() < 1e-5 * (1.0 + h[(i, j)].abs()), "hess {i},{j}");
            }
        }
    }

    #[test]
    fn odds_ratios_are_exact_exponentials() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin()]).collect();
        let y: Vec<usize> = (0..40).map(|i| 1 + (i * 7 % 3)).collect();
        let x = DesignMatrix::new(vec!["s".into()], &rows).unwrap();
        let fit = fit_ordered_logit(&x, &y).unwrap();
        assert_eq!(fit.odds_ratios["s"], fit.coefficients["s"].exp());
        assert!(fit.cutpoints.windows(2).all(|w| w[0] < w[1]));
        assert!(fit.log_likelihood_path.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
        assert!(fit.summary_table().contains("odds ratio"));
    }

    #[test]
    fn separation_is_reported() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..20).map(|i| if i < 10 { 1 } else { 2 }).collect();
        let x = DesignMatrix::new(vec!["x".into()], &rows).unwrap();
        assert!(matches!(fit_ordered_logit(&x, &y), Err(EconError::Separation(_))));
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(fit_ordered_logit(&DesignMatrix::empty(3), &[1, 1, 1]), Err(EconError::Outcome(_))));
        assert!(matches!(fit_ordered_logit(&DesignMatrix::empty(3), &[1, 3, 3]), Err(EconError::Outcome(_))));
        let rows = vec![vec![1.0]; 6];
        let x = DesignMatrix::new(vec!["c".into()], &rows).unwrap();
        assert!(matches!(fit_ordered_logit(&x, &[1, 2, 1, 2, 1, 2]), Err(EconError::RankDeficient { .. })));
    }
}
