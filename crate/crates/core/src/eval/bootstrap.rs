use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_lengths, EvalError, Result};

pub const MIN_RESAMPLES: usize = 100;

/// Redraws allowed per resample when the metric is undefined on a draw.
const MAX_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// 95% percentile bootstrap interval of `metric` over pairs resampled with
/// replacement.
///
/// Resample `i` draws from a generator seeded with `seed + i`, so the result
/// does not depend on how resamples are scheduled across threads. A draw on
/// which the metric is undefined is redrawn, up to ten attempts per resample.
pub fn bootstrap_ci<F>(
    scores: &[f64],
    labels: &[bool],
    metric: F,
    n_resamples: usize,
    seed: u64,
) -> Result<ConfidenceInterval>
where
    F: Fn(&[f64], &[bool]) -> Result<f64> + Sync,
{
    check_lengths(scores, labels)?;
    if n_resamples < MIN_RESAMPLES {
        return Err(EvalError::TooFewResamples(n_resamples));
    }
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = scores.len();
    let outcomes: Vec<(Option<f64>, usize)> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut s = vec![0.0; n];
            let mut y = vec![false; n];
            for attempt in 1..=MAX_ATTEMPTS {
                for k in 0..n {
                    let j = rng.random_range(0..n);
                    s[k] = scores[j];
                    y[k] = labels[j];
                }
                if let Ok(value) = metric(&s, &y) {
                    return (Some(value), attempt);
                }
            }
            (None, MAX_ATTEMPTS)
        })
        .collect();

    let draws: usize = outcomes.iter().map(|(_, d)| d).sum();
    let mut values: Vec<f64> = outcomes.iter().filter_map(|(v, _)| *v).collect();
    let undefined = draws - values.len();
    if undefined * 10 > draws * 9 || values.is_empty() {
        return Err(EvalError::BootstrapUndefined { undefined, draws });
    }
    values.sort_by(f64::total_cmp);
    Ok(ConfidenceInterval {
        low: percentile(&values, 0.025),
        high: percentile(&values, 0.975),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{confusion_metrics, roc_auc};

    fn accuracy(s: &[f64], y: &[bool]) -> Result<f64> {
        Ok(confusion_metrics(s, y, 0.5)?.accuracy)
    }

    #[test]
    fn constant_metric_gives_zero_width() {
        let s = [0.9, 0.1, 0.8, 0.2, 0.7];
        let y = [true, false, true, false, true];
        let ci = bootstrap_ci(&s, &y, accuracy, 200, 3).unwrap();
        assert_eq!((ci.low, ci.high), (1.0, 1.0));
    }

    #[test]
    fn same_seed_same_interval() {
        let s: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let y: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
        let a = bootstrap_ci(&s, &y, roc_auc, 300, 11).unwrap();
        let b = bootstrap_ci(&s, &y, roc_auc, 300, 11).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_ci(&s, &y, roc_auc, 300, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            bootstrap_ci(&[0.1], &[true], accuracy, 10, 0),
            Err(EvalError::TooFewResamples(10))
        ));
        // A single positive can never yield a two-class resample.
        assert!(matches!(
            bootstrap_ci(&[0.1], &[true], roc_auc, 100, 0),
            Err(EvalError::BootstrapUndefined { .. })
        ));
    }

    #[test]
    fn percentile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.0);
        assert_eq!(percentile(&v, 0.125), 0.5);
        assert_eq!(percentile(&v, 1.0), 4.0);
    }
}
