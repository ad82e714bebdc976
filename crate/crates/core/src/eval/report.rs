use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, confusion_metrics, ece, pr_auc, roc_auc, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub threshold: f64,
    pub resamples: usize,
    pub seed: u64,
    pub ece_bins: usize,
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings {
            threshold: 0.5,
            resamples: 1000,
            seed: 13,
            ece_bins: 10,
        }
    }
}

/// Point estimate with its 95% bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    fn new(value: f64, low: f64, high: f64) -> Estimate {
        // Percentile bounds can miss the point estimate on skewed resampling
        // distributions; widen so the reported interval always contains it.
        Estimate {
            value,
            ci_low: low.min(value),
            ci_high: high.max(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_samples: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub settings: ReportSettings,
    pub accuracy: Estimate,
    pub precision: Estimate,
    pub recall: Estimate,
    pub f1: Estimate,
    pub roc_auc: Estimate,
    pub pr_auc: Estimate,
    pub ece: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    /// Metrics that hit a zero denominator and were reported as 0.
    pub undefined: Vec<String>,
}

/// Every metric with bootstrap intervals for one prediction set.
pub fn build_report(scores: &[f64], labels: &[bool], settings: ReportSettings) -> Result<MetricReport> {
    let thr = settings.threshold;
    let cm = confusion_metrics(scores, labels, thr)?;
    let auc = roc_auc(scores, labels)?;
    let ap = pr_auc(scores, labels)?;
    let ci = |metric: &(dyn Fn(&[f64], &[bool]) -> Result<f64> + Sync), value: f64| -> Result<Estimate> {
        let ci = bootstrap_ci(scores, labels, metric, settings.resamples, settings.seed)?;
        Ok(Estimate::new(value, ci.low, ci.high))
    };
    let mut undefined = Vec::new();
    if cm.precision_undefined {
        undefined.push("precision".to_string());
    }
    if cm.recall_undefined {
        undefined.push("recall".to_string());
    }
    if cm.f1_undefined {
        undefined.push("f1".to_string());
    }
    let n_positive = labels.iter().filter(|&&y| y).count();
    Ok(MetricReport {
        n_samples: scores.len(),
        n_positive,
        n_negative: scores.len() - n_positive,
        settings,
        accuracy: ci(&|s, y| Ok(confusion_metrics(s, y, thr)?.accuracy), cm.accuracy)?,
        precision: ci(&|s, y| Ok(confusion_metrics(s, y, thr)?.precision), cm.precision)?,
        recall: ci(&|s, y| Ok(confusion_metrics(s, y, thr)?.recall), cm.recall)?,
        f1: ci(&|s, y| Ok(confusion_metrics(s, y, thr)?.f1), cm.f1)?,
        roc_auc: ci(&roc_auc, auc)?,
        pr_auc: ci(&pr_auc, ap)?,
        ece: ece(scores, labels, settings.ece_bins)?,
        true_positives: cm.true_positives,
        false_positives: cm.false_positives,
        true_negatives: cm.true_negatives,
        false_negatives: cm.false_negatives,
        undefined,
    })
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table, one row per metric.
    pub fn to_text(&self) -> String {
        let rows = [
            ("Acc", self.accuracy),
            ("Precision", self.precision),
            ("Recall", self.recall),
            ("F1", self.f1),
            ("ROC-AUC", self.roc_auc),
            ("PR-AUC", self.pr_auc),
        ];
        let mut out = format!(
            "{:<10} {:>8} {:>8} {:>8}\n",
            "metric", "value", "ci_low", "ci_high"
        );
        for (name, e) in rows {
            out.push_str(&format!(
                "{:<10} {:>8.4} {:>8.4} {:>8.4}\n",
                name, e.value, e.ci_low, e.ci_high
            ));
        }
        out.push_str(&format!("{:<10} {:>8.4}\n", "ECE", self.ece));
        out.push_str(&format!(
            "n={} positives={} negatives={} threshold={} resamples={}\n",
            self.n_samples, self.n_positive, self.n_negative, self.settings.threshold, self.settings.resamples
        ));
        if !self.undefined.is_empty() {
            out.push_str(&format!("undefined (reported as 0): {}\n", self.undefined.join(", ")));
        }
        out
    }
}
