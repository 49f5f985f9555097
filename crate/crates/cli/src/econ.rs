use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand};
use log::info;

use hawkdove::econval::{
    build_design, fit_ols_hc1, fit_ordered_logit, granger_test, AlignedDesign, OlsOptions, OutcomeTable,
};
use hawkdove::scoring::{moving_average, normalize_series, ScoreSeries};

#[derive(Debug, Subcommand)]
pub enum EconCommand {
    /// Ordered logit of policy outcomes (loosening < no change < tightening)
    /// on lagged scores and any extra columns of the outcomes CSV.
    Ologit {
        #[command(flatten)]
        design: DesignArgs,
    },
    /// OLS with HC1 errors of a numeric outcome on lagged scores.
    Ols {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        no_intercept: bool,
    },
    /// Granger causality test between two numeric columns of a CSV.
    Granger {
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Candidate cause.
        #[arg(long)]
        x: String,
        /// Series to predict.
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 1)]
        lags: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// CSV with `date,outcome` then any numeric regressors.
    #[arg(long, value_name = "PATH")]
    outcomes: PathBuf,
    /// Score series as NAME=PATH; gives columns NAME_lag1 and NAME_lag2.
    #[arg(long = "series", value_name = "NAME=PATH", required = true)]
    series: Vec<String>,
    /// Trailing moving-average window applied to every series.
    #[arg(long, default_value_t = 1)]
    window: usize,
    /// Z-score every series first.
    #[arg(long)]
    normalize: bool,
    /// Print the fit as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

fn load_series(spec: &str, window: usize, normalize: bool) -> Result<(String, ScoreSeries)> {
    let (name, path) = spec.split_once('=').ok_or_else(|| anyhow!("--series expects NAME=PATH, got {spec:?}"))?;
    if name.is_empty() {
        bail!("--series {spec:?}: empty name");
    }
    let f = File::open(path).with_context(|| format!("cannot open series {path}"))?;
    let mut s = ScoreSeries::read_csv(f).with_context(|| format!("series {path}"))?;
    if normalize {
        s = normalize_series(&s).with_context(|| format!("series {path}"))?;
    }
    Ok((name.to_string(), moving_average(&s, window)?))
}

fn design(args: &DesignArgs) -> Result<AlignedDesign> {
    if args.window == 0 {
        bail!("--window must be at least 1");
    }
    let f = File::open(&args.outcomes).with_context(|| format!("cannot open outcomes {}", args.outcomes.display()))?;
    let table = OutcomeTable::read_csv(f)?;
    let loaded = args.series.iter().map(|s| load_series(s, args.window, args.normalize)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<(&str, &ScoreSeries)> = loaded.iter().map(|(n, s)| (n.as_str(), s)).collect();
    let aligned = build_design(&refs, &table)?;
    info!("{} decision(s) aligned, {} dropped for missing lags", aligned.dates.len(), aligned.dropped);
    Ok(aligned)
}

fn print(json: bool, value: &impl serde::Serialize, table: String) -> Result<ExitCode> {
    if json {
        outln!("{}", serde_json::to_string_pretty(value)?);
    } else {
        out!("{table}");
    }
    Ok(ExitCode::SUCCESS)
}

pub fn run(cmd: EconCommand) -> Result<ExitCode> {
    match cmd {
        EconCommand::Ologit { design: args } => {
            let d = design(&args)?;
            let fit = fit_ordered_logit(&d.matrix, &d.policy_levels()?)?;
            let table = format!("{}dropped = {}\n", fit.summary_table(), d.dropped);
            print(args.json, &fit, table)
        }
        EconCommand::Ols { design: args, no_intercept } => {
            let d = design(&args)?;
            let fit = fit_ols_hc1(&d.matrix, &d.numeric_outcomes()?, OlsOptions { intercept: !no_intercept })?;
            let table = format!("{}dropped = {}\n", fit.summary_table(), d.dropped);
            print(args.json, &fit, table)
        }
        EconCommand::Granger { data, x, y, lags, json } => {
            let xs = numeric_column(&data, &x)?;
            let ys = numeric_column(&data, &y)?;
            let r = granger_test(&xs, &ys, lags)?;
            print(json, &r, format!("{x} -> {y}: {}", r.summary()))
        }
    }
}

fn numeric_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let idx =
        r.headers()?.iter().position(|h| h == name).ok_or_else(|| anyhow!("{}: no column {name:?}", path.display()))?;
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let v = rec.get(idx).unwrap_or("").trim();
            v.parse::<f64>().map_err(|_| anyhow!("{}: line {}: {name} = {v:?} is not a number", path.display(), i + 2))
        })
        .collect()
}
