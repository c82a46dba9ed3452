//! Core equal-error-rate computation.

use crate::error::{Error, Result};

/// One operating point of the threshold sweep: predicting positive for
/// `score >= threshold` yields these rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub fnr: f64,
}

/// Operating points for thresholds descending over the distinct scores,
/// starting from the all-negative point (fpr 0, fnr 1). Ties share one
/// threshold.
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::Data(format!(
            "scores/labels length mismatch: {} vs {}",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "EER needs both classes; got {n_pos} positives and {n_neg} negatives"
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::numeric("compute_eer", "non-finite score"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Descending by score; ties keep index order (irrelevant: tied scores
    // are consumed as one threshold group below).
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![RocPoint { fpr: 0.0, fnr: 1.0 }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            fnr: (n_pos - tp) as f64 / n_pos as f64,
        });
    }
    Ok(points)
}

/// Find the crossing `fnr = fpr` along the operating-point polyline. The
/// difference `fnr - fpr` starts at +1, ends at -1 and is non-increasing,
/// so a crossing always exists; between two adjacent points it is found by
/// linear interpolation.
pub fn eer_from_points(points: &[RocPoint]) -> f64 {
    for k in 1..points.len() {
        let d_prev = points[k - 1].fnr - points[k - 1].fpr;
        let d = points[k].fnr - points[k].fpr;
        if d == 0.0 {
            return points[k].fpr;
        }
        if d < 0.0 {
            let t = d_prev / (d_prev - d);
            return points[k - 1].fpr + t * (points[k].fpr - points[k - 1].fpr);
        }
    }
    // Unreachable for valid two-class input: the final point is (1, 0).
    points.last().map(|p| p.fpr).unwrap_or(0.0)
}

/// Equal error rate of a score list against binary labels.
///
/// Errors on single-class input (the metric is undefined, never NaN).
pub fn compute_eer(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let points = roc_points(scores, labels)?;
    Ok(eer_from_points(&points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    /// Independent brute-force oracle: for every candidate threshold run a
    /// full O(n) scan, then apply the same crossing rule. Quadratic and
    /// deliberately naive.
    pub fn eer_brute_force(scores: &[f64], labels: &[bool]) -> f64 {
        let n_pos = labels.iter().filter(|&&l| l).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();

        let mut points: Vec<(f64, f64)> = vec![(0.0, 1.0)];
        for &th in &thresholds {
            let mut fp = 0.0;
            let mut fnr_count = 0.0;
            for (s, &l) in scores.iter().zip(labels) {
                if *s >= th && !l {
                    fp += 1.0;
                }
                if *s < th && l {
                    fnr_count += 1.0;
                }
            }
            points.push((fp / n_neg, fnr_count / n_pos));
        }
        for k in 1..points.len() {
            let d_prev = points[k - 1].1 - points[k - 1].0;
            let d = points[k].1 - points[k].0;
            if d == 0.0 {
                return points[k].0;
            }
            if d < 0.0 {
                let t = d_prev / (d_prev - d);
                return points[k - 1].0 + t * (points[k].0 - points[k - 1].0);
            }
        }
        unreachable!("two-class input always crosses");
    }

    #[test]
    fn perfect_separation_gives_zero() {
        let scores = [0.9, 0.8, 0.1, 0.2];
        let labels = [true, true, false, false];
        assert_eq!(compute_eer(&scores, &labels).unwrap(), 0.0);
    }

    #[test]
    fn interleaved_example_matches_oracle() {
        // Positives {0.35, 0.8}, negatives {0.1, 0.4}: the sweep hits an
        // exact crossing at threshold 0.4 with fpr = fnr = 0.5, which the
        // brute-force oracle confirms.
        let scores = [0.35, 0.8, 0.1, 0.4];
        let labels = [true, true, false, false];
        let eer = compute_eer(&scores, &labels).unwrap();
        assert_eq!(eer, eer_brute_force(&scores, &labels));
        assert_eq!(eer, 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        let err = compute_eer(&[0.5, 0.6], &[true, true]).unwrap_err();
        assert!(matches!(err, Error::UndefinedMetric(_)));
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = Rng::new(101);
        for _ in 0..1000 {
            let n = 2 + rng.below(48);
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                // Coarse grid so score ties actually happen.
                scores.push((rng.below(20) as f64) / 20.0);
                labels.push(rng.chance(0.5));
            }
            // Force both classes.
            labels[0] = true;
            labels[1] = false;
            let fast = compute_eer(&scores, &labels).unwrap();
            let slow = eer_brute_force(&scores, &labels);
            assert_eq!(fast, slow, "scores {scores:?} labels {labels:?}");
        }
    }

    #[test]
    fn invariant_under_monotone_transforms() {
        let mut rng = Rng::new(102);
        for _ in 0..100 {
            let n = 4 + rng.below(30);
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                scores.push(rng.uniform());
                labels.push(rng.chance(0.5));
            }
            labels[0] = true;
            labels[1] = false;
            let base = compute_eer(&scores, &labels).unwrap();
            let squashed: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-5.0 * s).exp())).collect();
            let scaled: Vec<f64> = scores.iter().map(|s| 0.2 + 0.6 * s).collect();
            assert!((compute_eer(&squashed, &labels).unwrap() - base).abs() < 1e-12);
            assert!((compute_eer(&scaled, &labels).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_under_label_flip_and_score_reflection() {
        let mut rng = Rng::new(103);
        for _ in 0..200 {
            let n = 4 + rng.below(30);
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                scores.push((rng.below(50) as f64) / 50.0);
                labels.push(rng.chance(0.5));
            }
            labels[0] = true;
            labels[1] = false;
            let base = compute_eer(&scores, &labels).unwrap();
            let flipped: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
            let inverted: Vec<bool> = labels.iter().map(|l| !l).collect();
            let mirrored = compute_eer(&flipped, &inverted).unwrap();
            assert!(
                (base - mirrored).abs() < 1e-12,
                "asymmetry: {base} vs {mirrored}"
            );
        }
    }

    #[test]
    fn eer_is_zero_iff_perfectly_separated() {
        let mut rng = Rng::new(104);
        for _ in 0..200 {
            let n = 4 + rng.below(20);
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                scores.push(rng.uniform());
                labels.push(rng.chance(0.5));
            }
            labels[0] = true;
            labels[1] = false;
            let eer = compute_eer(&scores, &labels).unwrap();
            assert!((0.0..=1.0).contains(&eer));
            let min_pos = scores
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l)
                .map(|(s, _)| *s)
                .fold(f64::INFINITY, f64::min);
            let max_neg = scores
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| !l)
                .map(|(s, _)| *s)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(eer == 0.0, min_pos > max_neg);
        }
    }
}
