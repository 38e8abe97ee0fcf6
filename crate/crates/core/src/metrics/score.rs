use crate::error::{Error, Result};

use super::ahp::AhpWeights;
use super::MetricVector;

/// Per-component min–max scaling over the collection; components that are
/// constant across the collection map to 0.5.
pub fn normalize_metrics(raws: &[MetricVector]) -> Vec<[f64; 5]> {
    let arrays: Vec<[f64; 5]> = raws.iter().map(MetricVector::to_array).collect();
    let mut lo = [f64::INFINITY; 5];
    let mut hi = [f64::NEG_INFINITY; 5];
    for a in &arrays {
        for k in 0..5 {
            lo[k] = lo[k].min(a[k]);
            hi[k] = hi[k].max(a[k]);
        }
    }
    arrays
        .iter()
        .map(|a| {
            let mut out = [0.0; 5];
            for k in 0..5 {
                out[k] = if hi[k] > lo[k] {
                    (a[k] - lo[k]) / (hi[k] - lo[k])
                } else {
                    0.5
                };
            }
            out
        })
        .collect()
}

/// Weighted sum `R = r · W`, clamped to [0, 1] against rounding.
pub fn resilience_score(normalized: &[f64; 5], weights: &AhpWeights) -> f64 {
    normalized
        .iter()
        .zip(&weights.weights)
        .map(|(x, w)| x * w)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `R_C = R_max + (1 − R_max)·Σ w_a R_a` with equal weights over the
/// non-maximal configurations.
pub fn composite_score(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::domain(
            "composite score needs at least one configuration",
        ));
    }
    let others = scores.len() - 1;
    let weights = vec![if others > 0 { 1.0 / others as f64 } else { 0.0 }; others];
    composite_score_weighted(scores, &weights)
}

/// As [`composite_score`] with explicit weights for the scores left after
/// removing the maximum (in their original order).
pub fn composite_score_weighted(scores: &[f64], weights: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::domain(
            "composite score needs at least one configuration",
        ));
    }
    let (imax, &rmax) =
        scores.iter().enumerate().fold(
            (0, &scores[0]),
            |best, (i, s)| if *s > *best.1 { (i, s) } else { best },
        );
    let rest: Vec<f64> = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != imax)
        .map(|(_, s)| *s)
        .collect();
    if weights.len() != rest.len() {
        return Err(Error::domain(format!(
            "expected {} configuration weights, got {}",
            rest.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| w < 0.0) || weights.iter().sum::<f64>() > 1.0 + 1e-12 {
        return Err(Error::domain(
            "configuration weights must be non-negative and sum to at most 1",
        ));
    }
    let tail: f64 = rest.iter().zip(weights).map(|(r, w)| r * w).sum();
    Ok(rmax + (1.0 - rmax) * tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(x: f64) -> MetricVector {
        MetricVector {
            pv_cl: x,
            n_cls: x,
            a_ros: x,
            p_m: x,
            n_hc: x,
        }
    }

    #[test]
    fn normalization_cases() {
        assert_eq!(normalize_metrics(&[mv(0.3)]), vec![[0.5; 5]]);
        let two = normalize_metrics(&[mv(0.1), mv(0.9)]);
        assert_eq!(two, vec![[0.0; 5], [1.0; 5]]);
        let three = normalize_metrics(&[mv(1.0), mv(2.0), mv(3.0)]);
        assert_eq!(three[1], [0.5; 5]);
        assert_eq!(three[2], [1.0; 5]);
    }

    #[test]
    fn score_cases() {
        let w = AhpWeights::default();
        assert!((resilience_score(&[1.0; 5], &w) - 1.0).abs() < 1e-12);
        assert_eq!(resilience_score(&[0.0; 5], &w), 0.0);
        assert!((resilience_score(&[1.0, 0.0, 0.0, 0.0, 0.0], &w) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn composite_cases() {
        assert_eq!(composite_score(&[0.7]).unwrap(), 0.7);
        assert!((composite_score(&[0.6, 0.8]).unwrap() - 0.92).abs() < 1e-12);
        assert_eq!(composite_score(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!(composite_score(&[]).is_err());
        assert!(composite_score_weighted(&[0.5, 0.4], &[0.6, 0.6]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn scores_stay_in_range(
            v in proptest::collection::vec(0.0f64..=1.0, 5),
            raw in proptest::collection::vec(0.01f64..1.0, 5),
            configs in proptest::collection::vec(0.0f64..=1.0, 1..8),
        ) {
            let sum: f64 = raw.iter().sum();
            let w = AhpWeights::fixed(&raw.iter().map(|x| x / sum).collect::<Vec<_>>()).unwrap();
            let arr = [v[0], v[1], v[2], v[3], v[4]];
            let r = resilience_score(&arr, &w);
            proptest::prop_assert!((0.0..=1.0).contains(&r));
            let c = composite_score(&configs).unwrap();
            let max = configs.iter().cloned().fold(f64::MIN, f64::max);
            proptest::prop_assert!(c >= max && c <= 1.0 + 1e-12);
        }
    }
}
