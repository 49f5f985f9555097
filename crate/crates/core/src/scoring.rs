//! Points, document scores, score series and validation metrics.
//!
//! | class           | five-class | three-class |
//! |-----------------|-----------:|------------:|
//! | dovish          | 1          | -1          |
//! | leaning dovish  | 2          | -1          |
//! | neutral         | 3          | 0           |
//! | leaning hawkish | 4          | 1           |
//! | hawkish         | 5          | 1           |
//!
//! Under the three-class scheme the leaning classes are first collapsed
//! onto their side.

use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::reasoner::DocumentResult;
use crate::stance::StanceClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreScheme {
    ThreeClass,
    FiveClass,
}

impl ScoreScheme {
    pub fn points(self, c: StanceClass) -> f64 {
        match self {
            ScoreScheme::FiveClass => f64::from(c.ordinal()),
            ScoreScheme::ThreeClass => match collapse_to_three(c) {
                StanceClass::Dovish => -1.0,
                StanceClass::Hawkish => 1.0,
                _ => 0.0,
            },
        }
    }

    /// The class as this scheme sees it.
    pub fn project(self, c: StanceClass) -> StanceClass {
        match self {
            ScoreScheme::FiveClass => c,
            ScoreScheme::ThreeClass => collapse_to_three(c),
        }
    }

    /// `(min, max)` points.
    pub fn range(self) -> (f64, f64) {
        (self.points(StanceClass::Dovish), self.points(StanceClass::Hawkish))
    }
}

impl FromStr for ScoreScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "three" | "three_class" => Ok(ScoreScheme::ThreeClass),
            "five" | "five_class" => Ok(ScoreScheme::FiveClass),
            other => Err(format!("unknown scheme {other:?} (expected three or five)")),
        }
    }
}

pub fn collapse_to_three(c: StanceClass) -> StanceClass {
    match c {
        StanceClass::LeaningDovish => StanceClass::Dovish,
        StanceClass::LeaningHawkish => StanceClass::Hawkish,
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("document has no sentences; its score is undefined")]
    EmptyDocument,
    #[error("series needs at least two points with non-zero variance")]
    DegenerateSeries,
    #[error("series dates must be non-decreasing (at position {0})")]
    UnorderedDates(usize),
    #[error("prediction and gold lists differ in length ({pred} vs {gold}) or are empty")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("moving-average window must be at least 1")]
    ZeroWindow,
    #[error("series CSV: {0}")]
    Csv(String),
}

/// Mean points of a list of sentence classes.
pub fn mean_points(classes: &[StanceClass], s: ScoreScheme) -> Result<f64, ScoringError> {
    if classes.is_empty() {
        return Err(ScoringError::EmptyDocument);
    }
    Ok(classes.iter().map(|&c| s.points(c)).sum::<f64>() / classes.len() as f64)
}

/// Hawk-dove score of a document: the mean of its sentence points.
pub fn document_score(r: &DocumentResult, s: ScoreScheme) -> Result<f64, ScoringError> {
    let classes: Vec<StanceClass> =
        r.paragraphs.iter().flat_map(|p| p.sentence_classes.iter().map(|sc| sc.stance)).collect();
    mean_points(&classes, s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePoint {
    pub date: NaiveDate,
    pub doc_id: String,
    pub doc_type: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSeries {
    points: Vec<ScorePoint>,
}

impl ScoreSeries {
    pub fn new(points: Vec<ScorePoint>) -> Result<Self, ScoringError> {
        if let Some(i) = points.windows(2).position(|w| w[1].date < w[0].date) {
            return Err(ScoringError::UnorderedDates(i + 1));
        }
        Ok(ScoreSeries { points })
    }

    /// Stable-sort by date.
    pub fn from_unsorted(mut points: Vec<ScorePoint>) -> Self {
        points.sort_by_key(|p| p.date);
        ScoreSeries { points }
    }

    pub fn points(&self) -> &[ScorePoint] {
        &self.points
    }

    pub fn scores(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.score).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn filter_doc_type(&self, doc_type: &str) -> ScoreSeries {
        ScoreSeries { points: self.points.iter().filter(|p| p.doc_type == doc_type).cloned().collect() }
    }

    fn with_scores(&self, scores: impl IntoIterator<Item = f64>) -> ScoreSeries {
        let points = self.points.iter().zip(scores).map(|(p, score)| ScorePoint { score, ..p.clone() }).collect();
        ScoreSeries { points }
    }

    /// CSV with header `date,doc_id,doc_type,score`.
    pub fn write_csv(&self, out: impl Write) -> Result<(), ScoringError> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p).map_err(|e| ScoringError::Csv(e.to_string()))?;
        }
        if self.points.is_empty() {
            w.write_record(["date", "doc_id", "doc_type", "score"]).map_err(|e| ScoringError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| ScoringError::Csv(e.to_string()))
    }

    pub fn read_csv(input: impl Read) -> Result<Self, ScoringError> {
        let mut r = csv::Reader::from_reader(input);
        let points =
            r.deserialize().collect::<Result<Vec<ScorePoint>, _>>().map_err(|e| ScoringError::Csv(e.to_string()))?;
        ScoreSeries::new(points)
    }
}

/// Z-scores using the population standard deviation of the whole series.
pub fn normalize_series(s: &ScoreSeries) -> Result<ScoreSeries, ScoringError> {
    let xs = s.scores();
    if xs.len() < 2 {
        return Err(ScoringError::DegenerateSeries);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 1e-12 * (1.0 + mean.abs())) {
        return Err(ScoringError::DegenerateSeries);
    }
    Ok(s.with_scores(xs.iter().map(|x| (x - mean) / sd)))
}

/// Trailing mean over the last `window` points; the first `window - 1`
/// entries average everything seen so far.
pub fn moving_average(s: &ScoreSeries, window: usize) -> Result<ScoreSeries, ScoringError> {
    if window == 0 {
        return Err(ScoringError::ZeroWindow);
    }
    let xs = s.scores();
    let out = (0..xs.len()).map(|i| {
        let lo = (i + 1).saturating_sub(window);
        let slice = &xs[lo..=i];
        slice.iter().sum::<f64>() / slice.len() as f64
    });
    Ok(s.with_scores(out.collect::<Vec<_>>()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationMetrics {
    /// Share of exact matches, after projecting both sides onto the scheme.
    pub accuracy: f64,
    /// Mean of `points(pred) - points(gold)`; positive means predictions
    /// lean hawkish.
    pub mean_error: f64,
    /// Accuracy of always predicting the most common gold class.
    pub baseline_accuracy: f64,
}

pub fn classification_metrics(
    pred: &[StanceClass],
    gold: &[StanceClass],
    s: ScoreScheme,
) -> Result<ClassificationMetrics, ScoringError> {
    if pred.len() != gold.len() || pred.is_empty() {
        return Err(ScoringError::LengthMismatch { pred: pred.len(), gold: gold.len() });
    }
    let n = pred.len() as f64;
    let hits = pred.iter().zip(gold).filter(|(p, g)| s.project(**p) == s.project(**g)).count();
    let err: f64 = pred.iter().zip(gold).map(|(&p, &g)| s.points(p) - s.points(g)).sum();
    let modal =
        StanceClass::ALL.iter().map(|&c| gold.iter().filter(|&&g| s.project(g) == c).count()).max().unwrap_or(0);
    Ok(ClassificationMetrics { accuracy: hits as f64 / n, mean_error: err / n, baseline_accuracy: modal as f64 / n })
}
