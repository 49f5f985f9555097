//! Aligning document score series with policy decisions.
//!
//! For a decision on date `d`, the lag-1 value of a series is the score
//! of the latest document published strictly before `d`, and lag 2 the
//! one before that. Decisions lacking either lag of any series are
//! dropped and counted.

use std::io::Read;

use chrono::NaiveDate;

use super::{DesignMatrix, EconError};
use crate::scoring::ScoreSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRow {
    pub date: NaiveDate,
    pub outcome: String,
    /// Values of [`OutcomeTable::extra_names`], in order.
    pub extras: Vec<f64>,
}

/// Decision events: CSV with columns `date,outcome`, then any numeric
/// regressors such as forecasts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeTable {
    pub extra_names: Vec<String>,
    pub rows: Vec<OutcomeRow>,
}

impl OutcomeTable {
    pub fn read_csv(input: impl Read) -> Result<Self, EconError> {
        let bad = |m: String| EconError::Input(format!("outcomes CSV: {m}"));
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.get(0) != Some("date") || header.get(1) != Some("outcome") {
            return Err(bad("header must start with date,outcome".into()));
        }
        let extra_names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let date =
                rec[0].trim().parse::<NaiveDate>().map_err(|e| bad(format!("line {line}: date {:?}: {e}", &rec[0])))?;
            let extras = rec
                .iter()
                .skip(2)
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad(format!("line {line}: {v:?} is not a number"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(OutcomeRow { date, outcome: rec[1].trim().to_string(), extras });
        }
        Ok(OutcomeTable { extra_names, rows })
    }
}

/// Policy outcome to an ordered level: loosening 1, no change 2,
/// tightening 3. Accepts those words (and `easing`, `unchanged`, `hold`)
/// or the signed codes `-1`, `0`, `1`.
pub fn parse_policy_outcome(s: &str) -> Result<usize, EconError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "loosening" | "easing" | "-1" => Ok(1),
        "no change" | "unchanged" | "hold" | "0" => Ok(2),
        "tightening" | "1" => Ok(3),
        other => Err(EconError::Outcome(format!("unrecognised policy outcome {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDesign {
    pub dates: Vec<NaiveDate>,
    pub matrix: DesignMatrix,
    pub outcomes: Vec<String>,
    /// Decisions dropped for a missing lag.
    pub dropped: usize,
}

impl AlignedDesign {
    pub fn policy_levels(&self) -> Result<Vec<usize>, EconError> {
        self.outcomes.iter().map(|o| parse_policy_outcome(o)).collect()
    }

    pub fn numeric_outcomes(&self) -> Result<Vec<f64>, EconError> {
        self.outcomes
            .iter()
            .map(|o| o.parse::<f64>().map_err(|_| EconError::Input(format!("outcome {o:?} is not a number"))))
            .collect()
    }
}

/// Columns are the outcome table's extras, then `<name>_lag1`,
/// `<name>_lag2` for each series in order.
pub fn build_design(series: &[(&str, &ScoreSeries)], outcomes: &OutcomeTable) -> Result<AlignedDesign, EconError> {
    let mut names = outcomes.extra_names.clone();
    for (name, _) in series {
        names.push(format!("{name}_lag1"));
        names.push(format!("{name}_lag2"));
    }
    let mut rows = Vec::new();
    let mut dates = Vec::new();
    let mut outs = Vec::new();
    let mut dropped = 0;
    'decisions: for row in &outcomes.rows {
        let mut values = row.extras.clone();
        for (_, s) in series {
            let pts = s.points();
            let prior = pts.partition_point(|p| p.date < row.date);
            if prior < 2 {
                dropped += 1;
                continue 'decisions;
            }
            values.push(pts[prior - 1].score);
            values.push(pts[prior - 2].score);
        }
        rows.push(values);
        dates.push(row.date);
        outs.push(row.outcome.clone());
    }
    Ok(AlignedDesign { dates, matrix: DesignMatrix::new(names, &rows)?, outcomes: outs, dropped })
}
