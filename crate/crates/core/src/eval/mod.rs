//! Classification metrics, bootstrap intervals, calibration error and ranking.

mod bootstrap;
mod calibration;
mod ranking;
mod report;

use serde::{Deserialize, Serialize};

pub use bootstrap::{bootstrap_ci, ConfidenceInterval, MIN_RESAMPLES};
pub use calibration::ece;
pub use ranking::{rank_top_k, RankedPair};
pub use report::{build_report, Estimate, MetricReport, ReportSettings};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {scores} scores vs {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("no samples")]
    Empty,
    #[error("AUC undefined: {positives} positives, {negatives} negatives")]
    AucUndefined { positives: usize, negatives: usize },
    #[error("average precision undefined without positives")]
    NoPositives,
    #[error("scores must not be NaN")]
    NanScore,
    #[error("bootstrap needs at least {MIN_RESAMPLES} resamples, got {0}")]
    TooFewResamples(usize),
    #[error("metric undefined on {undefined} of {draws} bootstrap draws")]
    BootstrapUndefined { undefined: usize, draws: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("calibration needs at least 2 bins, got {0}")]
    InvalidBins(usize),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::NanScore);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    /// No predicted positives; precision reported as 0.
    pub precision_undefined: bool,
    /// No actual positives; recall reported as 0.
    pub recall_undefined: bool,
    /// Precision + recall is 0; F1 reported as 0.
    pub f1_undefined: bool,
}

/// Accuracy, precision, recall and F1 with `score >= threshold` predicted positive.
pub fn confusion_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ConfusionMetrics> {
    check_lengths(scores, labels)?;
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1_den = precision + recall;
    Ok(ConfusionMetrics {
        accuracy: ratio(tp + tn, scores.len()),
        precision,
        recall,
        f1: if f1_den == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / f1_den
        },
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        precision_undefined: tp + fp == 0,
        recall_undefined: tp + fn_ == 0,
        f1_undefined: f1_den == 0.0,
    })
}

/// Indices sorted by ascending score, grouped into runs of equal scores.
fn tie_groups(scores: &[f64], descending: bool) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| {
        let c = scores[i].total_cmp(&scores[j]);
        if descending {
            c.reverse()
        } else {
            c
        }
    });
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Probability that a random positive outscores a random negative, ties
/// counted one half, via the Mann–Whitney rank sum.
///
/// Ranks are accumulated doubled in integers so the result is the exact
/// ratio `(2U) / (2 * n_pos * n_neg)` rounded once.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&y| y).count() as u128;
    let negatives = labels.len() as u128 - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::AucUndefined {
            positives: positives as usize,
            negatives: negatives as usize,
        });
    }
    let mut doubled_rank_sum: u128 = 0;
    let mut start: u128 = 0;
    for group in tie_groups(scores, false) {
        let end = start + group.len() as u128;
        // Midrank of 1-based ranks start+1..=end, doubled.
        let doubled_midrank = start + 1 + end;
        let pos_in_group = group.iter().filter(|&&i| labels[i]).count() as u128;
        doubled_rank_sum += doubled_midrank * pos_in_group;
        start = end;
    }
    let doubled_u = doubled_rank_sum - positives * (positives + 1);
    Ok(doubled_u as f64 / (2 * positives * negatives) as f64)
}

/// Average precision: sum over descending thresholds of
/// `(recall_k - recall_{k-1}) * precision_k`, with tied scores entering as one step.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for group in tie_groups(scores, true) {
        tp += group.iter().filter(|&&i| labels[i]).count();
        seen += group.len();
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// One point of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

/// ROC points `(threshold, fpr, tpr)` from the highest threshold down.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<CurvePoint>> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&y| y).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::AucUndefined {
            positives,
            negatives,
        });
    }
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        x: 0.0,
        y: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    for group in tie_groups(scores, true) {
        let pos = group.iter().filter(|&&i| labels[i]).count();
        tp += pos;
        fp += group.len() - pos;
        points.push(CurvePoint {
            threshold: scores[group[0]],
            x: fp as f64 / negatives as f64,
            y: tp as f64 / positives as f64,
        });
    }
    Ok(points)
}

/// Precision–recall points `(threshold, recall, precision)` from the highest threshold down.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<CurvePoint>> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut points = Vec::new();
    for group in tie_groups(scores, true) {
        tp += group.iter().filter(|&&i| labels[i]).count();
        seen += group.len();
        points.push(CurvePoint {
            threshold: scores[group[0]],
            x: tp as f64 / positives as f64,
            y: tp as f64 / seen as f64,
        });
    }
    Ok(points)
}

/// `threshold,x,y` CSV for external plotting.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("threshold,x,y\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.x, p.y));
    }
    out
}
