use super::{check_lengths, EvalError, Result};

/// Expected calibration error over `n_bins` equal-width bins on `[0, 1]`:
/// the size-weighted mean of `|mean confidence - positive rate|` per bin.
/// A score of exactly 1 falls in the last bin. Empty input gives 0.
pub fn ece(scores: &[f64], labels: &[bool], n_bins: usize) -> Result<f64> {
    check_lengths(scores, labels)?;
    if n_bins < 2 {
        return Err(EvalError::InvalidBins(n_bins));
    }
    if scores.is_empty() {
        log::warn!("ECE of an empty prediction set is 0 by convention");
        return Ok(0.0);
    }
    let mut count = vec![0usize; n_bins];
    let mut conf = vec![0.0; n_bins];
    let mut pos = vec![0usize; n_bins];
    for (&s, &y) in scores.iter().zip(labels) {
        let s = s.clamp(0.0, 1.0);
        let b = ((s * n_bins as f64).floor() as usize).min(n_bins - 1);
        count[b] += 1;
        conf[b] += s;
        pos[b] += usize::from(y);
    }
    let n = scores.len() as f64;
    Ok((0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let c = count[b] as f64;
            (c / n) * (conf[b] / c - pos[b] as f64 / c).abs()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ece_examples() {
        let e = ece(&[0.9; 4], &[true, false, true, false], 10).unwrap();
        assert!((e - 0.4).abs() < 1e-12, "{e}");
        assert_eq!(ece(&[0.0, 1.0, 1.0], &[false, true, true], 10).unwrap(), 0.0);
        assert_eq!(ece(&[], &[], 10).unwrap(), 0.0);
        assert!(matches!(ece(&[0.5], &[true], 1), Err(EvalError::InvalidBins(1))));
    }

    #[test]
    fn ece_is_bounded() {
        let e = ece(&[0.99, 0.01], &[false, true], 10).unwrap();
        assert!((0.0..=1.0).contains(&e));
        assert!((e - 0.99).abs() < 1e-12);
    }
}
