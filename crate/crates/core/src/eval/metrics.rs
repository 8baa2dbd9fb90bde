use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ratings::{ItemId, RatingScale};

/// Mean absolute error over `(predicted, actual)` pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::UndefinedMetric("MAE of an empty prediction set"));
    }
    let total: f64 = pairs.iter().map(|(p, a)| (p - a).abs()).sum();
    Ok(total / pairs.len() as f64)
}

/// `(precision, recall)` of one recommendation list, or `None` when either
/// set is empty and the user should be left out of the average.
pub fn precision_recall(
    recommended: &BTreeSet<ItemId>,
    relevant: &BTreeSet<ItemId>,
) -> Option<(f64, f64)> {
    if recommended.is_empty() || relevant.is_empty() {
        return None;
    }
    let hits = recommended.intersection(relevant).count() as f64;
    Some((
        hits / recommended.len() as f64,
        hits / relevant.len() as f64,
    ))
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1(precision: f64, recall: f64) -> f64 {
    let sum = precision + recall;
    if sum == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / sum
    }
}

/// `1 - mae / max_rating`.
pub fn imae(mae: f64, scale: RatingScale) -> f64 {
    1.0 - mae / scale.max()
}
