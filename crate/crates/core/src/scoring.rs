//! Challenge scoring: quality-weighted sensitivity/specificity over
//! recording-level predictions.
//!
//! A prediction is a ∈ {abnormal}, n ∈ {normal}, or q ∈ {unsure}. Counts
//! are split by true class (A/N) and curated signal quality (subscript 1 =
//! good, 2 = poor). An unsure call on a poor-quality recording counts as
//! correct; on a good-quality recording it counts against the classifier:
//!
//!   Se = wa1·Aa1/(Aa1+Aq1+An1) + wa2·(Aa2+Aq2)/(Aa2+Aq2+An2)
//!   Sp = wn1·Nn1/(Nn1+Nq1+Na1) + wn2·(Nn2+Nq2)/(Nn2+Nq2+Na2)
//!
//! with the weights taken from the true label/quality marginals. The
//! overall score is (Se+Sp)/2.

use crate::pcg_io::{Label, Quality};

#[derive(Debug, thiserror::Error)]
pub enum TallyError {
    #[error("item {index} has no true label; scoring needs labeled data")]
    UnknownLabel { index: usize },
    #[error("item {index} has unknown quality; scoring needs quality flags")]
    UnknownQuality { index: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("{term} denominator is zero but its weight is nonzero")]
    ZeroDenominator { term: &'static str },
    #[error("predictions file: {0}")]
    Format(String),
    #[error("duplicate prediction for record {0}")]
    DuplicateRecord(String),
    #[error("no prediction for record {0}")]
    MissingPrediction(String),
    #[error("prediction for unknown record {0}")]
    UnknownRecord(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Classifier output classes of the challenge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictedClass {
    Abnormal,
    Normal,
    Unsure,
}

impl PredictedClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictedClass::Abnormal => "a",
            PredictedClass::Normal => "n",
            PredictedClass::Unsure => "q",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "a" => Some(PredictedClass::Abnormal),
            "n" => Some(PredictedClass::Normal),
            "q" => Some(PredictedClass::Unsure),
            _ => None,
        }
    }

    /// The network's binary decision as a challenge class (never unsure).
    pub fn from_label(label: Label) -> Option<Self> {
        match label {
            Label::Normal => Some(PredictedClass::Normal),
            Label::Abnormal => Some(PredictedClass::Abnormal),
            Label::Unknown => None,
        }
    }
}

/// The twelve cells of the challenge confusion table: true class (A/N) ×
/// prediction (a/q/n) × quality (1 good, 2 poor).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChallengeCounts {
    pub aa1: u64,
    pub aq1: u64,
    pub an1: u64,
    pub aa2: u64,
    pub aq2: u64,
    pub an2: u64,
    pub na1: u64,
    pub nq1: u64,
    pub nn1: u64,
    pub na2: u64,
    pub nq2: u64,
    pub nn2: u64,
}

impl ChallengeCounts {
    pub fn abnormal_total(&self) -> u64 {
        self.aa1 + self.aq1 + self.an1 + self.aa2 + self.aq2 + self.an2
    }

    pub fn normal_total(&self) -> u64 {
        self.na1 + self.nq1 + self.nn1 + self.na2 + self.nq2 + self.nn2
    }
}

/// Per-class quality proportions. When a class is present its two weights
/// sum to 1; an absent class gets zeros (and its score terms vanish).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityWeights {
    pub wa1: f64,
    pub wa2: f64,
    pub wn1: f64,
    pub wn2: f64,
}

/// Accumulates counts and derives the weights from the true marginals.
pub fn tally(
    items: &[(Label, Quality, PredictedClass)],
) -> Result<(ChallengeCounts, QualityWeights), TallyError> {
    let mut c = ChallengeCounts::default();
    for (index, &(label, quality, predicted)) in items.iter().enumerate() {
        let abnormal = match label {
            Label::Abnormal => true,
            Label::Normal => false,
            Label::Unknown => return Err(TallyError::UnknownLabel { index }),
        };
        let good = match quality {
            Quality::Good => true,
            Quality::Poor => false,
            Quality::Unknown => return Err(TallyError::UnknownQuality { index }),
        };
        let cell = match (abnormal, predicted, good) {
            (true, PredictedClass::Abnormal, true) => &mut c.aa1,
            (true, PredictedClass::Unsure, true) => &mut c.aq1,
            (true, PredictedClass::Normal, true) => &mut c.an1,
            (true, PredictedClass::Abnormal, false) => &mut c.aa2,
            (true, PredictedClass::Unsure, false) => &mut c.aq2,
            (true, PredictedClass::Normal, false) => &mut c.an2,
            (false, PredictedClass::Abnormal, true) => &mut c.na1,
            (false, PredictedClass::Unsure, true) => &mut c.nq1,
            (false, PredictedClass::Normal, true) => &mut c.nn1,
            (false, PredictedClass::Abnormal, false) => &mut c.na2,
            (false, PredictedClass::Unsure, false) => &mut c.nq2,
            (false, PredictedClass::Normal, false) => &mut c.nn2,
        };
        *cell += 1;
    }

    let ratio = |good: u64, total: u64| if total == 0 { 0.0 } else { good as f64 / total as f64 };
    let a_total = c.abnormal_total();
    let n_total = c.normal_total();
    let wa1 = ratio(c.aa1 + c.aq1 + c.an1, a_total);
    let wn1 = ratio(c.na1 + c.nq1 + c.nn1, n_total);
    let weights = QualityWeights {
        wa1,
        wa2: if a_total == 0 { 0.0 } else { 1.0 - wa1 },
        wn1,
        wn2: if n_total == 0 { 0.0 } else { 1.0 - wn1 },
    };
    Ok((c, weights))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreReport {
    pub se: f64,
    pub sp: f64,
    /// (se + sp) / 2.
    pub overall: f64,
}

impl ScoreReport {
    pub fn from_se_sp(se: f64, sp: f64) -> Self {
        ScoreReport { se, sp, overall: (se + sp) / 2.0 }
    }
}

fn score_term(
    name: &'static str,
    weight: f64,
    numerator: u64,
    denominator: u64,
) -> Result<f64, ScoreError> {
    if weight == 0.0 {
        return Ok(0.0);
    }
    if denominator == 0 {
        return Err(ScoreError::ZeroDenominator { term: name });
    }
    Ok(weight * numerator as f64 / denominator as f64)
}

pub fn challenge_score(
    counts: &ChallengeCounts,
    weights: &QualityWeights,
) -> Result<ScoreReport, ScoreError> {
    let c = counts;
    let se = score_term("Se good-quality", weights.wa1, c.aa1, c.aa1 + c.aq1 + c.an1)?
        + score_term("Se poor-quality", weights.wa2, c.aa2 + c.aq2, c.aa2 + c.aq2 + c.an2)?;
    let sp = score_term("Sp good-quality", weights.wn1, c.nn1, c.nn1 + c.nq1 + c.na1)?
        + score_term("Sp poor-quality", weights.wn2, c.nn2 + c.nq2, c.nn2 + c.nq2 + c.na2)?;
    Ok(ScoreReport::from_se_sp(se, sp))
}

/// Truncates toward zero at 4 decimals, e.g. 0.83995 → "0.8399". The value
/// is first snapped at 9 decimals so binary representation fuzz (0.70569…99
/// for 0.7057) cannot leak into the truncation.
pub fn format_score(x: f64) -> String {
    let snapped = (x * 1e9).round() / 1e9;
    let truncated = (snapped * 1e4).trunc() / 1e4;
    format!("{truncated:.4}")
}

pub fn format_report(report: &ScoreReport) -> String {
    format!(
        "Se {} Sp {} Overall {}",
        format_score(report.se),
        format_score(report.sp),
        format_score(report.overall)
    )
}

pub const PREDICTIONS_HEADER: [&str; 2] = ["record_id", "predicted"];

/// Parses a predictions CSV (`record_id,predicted` with predicted one of
/// a/n/q). Strict: exact header, no empty ids, no duplicates.
pub fn parse_predictions(bytes: &[u8]) -> Result<Vec<(String, PredictedClass)>, ScoreError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| ScoreError::Format(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != PREDICTIONS_HEADER {
        return Err(ScoreError::Format(format!(
            "header must be {:?}, got {:?}",
            PREDICTIONS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ScoreError::Format(e.to_string()))?;
        let id = record.get(0).unwrap_or("").trim();
        let class = record.get(1).unwrap_or("").trim();
        if id.is_empty() {
            return Err(ScoreError::Format(format!("row {}: empty record_id", line + 2)));
        }
        let predicted = PredictedClass::parse(class).ok_or_else(|| {
            ScoreError::Format(format!(
                "row {}: predicted class must be a, n, or q, got {class:?}",
                line + 2
            ))
        })?;
        if !seen.insert(id.to_string()) {
            return Err(ScoreError::DuplicateRecord(id.to_string()));
        }
        out.push((id.to_string(), predicted));
    }
    Ok(out)
}

/// Joins truth rows `(record_id, label, quality)` with predictions. Every
/// truth record needs exactly one prediction and every prediction must
/// match a truth record; output order follows the truth list.
pub fn join_predictions(
    truth: &[(String, Label, Quality)],
    predictions: &[(String, PredictedClass)],
) -> Result<Vec<(Label, Quality, PredictedClass)>, ScoreError> {
    let mut by_id: std::collections::HashMap<&str, PredictedClass> = Default::default();
    for (id, p) in predictions {
        if by_id.insert(id.as_str(), *p).is_some() {
            return Err(ScoreError::DuplicateRecord(id.clone()));
        }
    }
    let known: std::collections::HashSet<&str> =
        truth.iter().map(|(id, _, _)| id.as_str()).collect();
    if let Some((id, _)) = predictions.iter().find(|(id, _)| !known.contains(id.as_str())) {
        return Err(ScoreError::UnknownRecord(id.clone()));
    }
    truth
        .iter()
        .map(|(id, label, quality)| {
            by_id
                .get(id.as_str())
                .map(|p| (*label, *quality, *p))
                .ok_or_else(|| ScoreError::MissingPrediction(id.clone()))
        })
        .collect()
}
