use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 11 binarization thresholds `0.0, 0.1, ..., 1.0`.
pub fn default_thresholds() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn check(scores: &[f64], mask: &[bool]) -> Result<()> {
    if scores.len() != mask.len() {
        return Err(Error::LengthMismatch {
            what: "mask",
            expected: scores.len(),
            actual: mask.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    if !mask.contains(&true) || !mask.contains(&false) {
        return Err(Error::DegenerateMask);
    }
    Ok(())
}

/// Step-wise area under the precision-recall curve. Tied scores enter the
/// curve together as one block.
pub fn auprc(scores: &[f64], mask: &[bool]) -> Result<f64> {
    check(scores, mask)?;
    let positives = mask.iter().filter(|&&m| m).count() as f64;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut area = 0.0;
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let block_tp = order[start..end].iter().filter(|&&i| mask[i]).count();
        tp += block_tp;
        seen += end - start;
        if block_tp > 0 {
            area += (tp as f64 / seen as f64) * (block_tp as f64 / positives);
        }
        start = end;
    }
    Ok(area)
}

/// 2x2 confusion counts of a binarized map against a mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    /// Predicts positive where `score >= threshold`.
    pub fn at_threshold(scores: &[f64], mask: &[bool], threshold: f64) -> Self {
        let mut c = Confusion::default();
        for (&s, &m) in scores.iter().zip(mask) {
            match (s >= threshold, m) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        let predicted = self.tp + self.fp;
        if predicted == 0 {
            0.0
        } else {
            self.tp as f64 / predicted as f64
        }
    }

    pub fn mcc(&self) -> f64 {
        let (tp, fp, tn, fn_) = (self.tp as f64, self.fp as f64, self.tn as f64, self.fn_ as f64);
        let marginals = [tp + fp, tp + fn_, tn + fp, tn + fn_];
        if marginals.contains(&0.0) {
            return 0.0;
        }
        (tp * tn - fp * fn_) / marginals.iter().product::<f64>().sqrt()
    }

    pub fn dice(&self) -> f64 {
        let denominator = 2 * self.tp + self.fp + self.fn_;
        if denominator == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denominator as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub precision: f64,
    pub mcc: f64,
    pub dice: f64,
}

pub fn threshold_metrics(scores: &[f64], mask: &[bool], threshold: f64) -> Result<ThresholdMetrics> {
    check(scores, mask)?;
    let c = Confusion::at_threshold(scores, mask, threshold);
    Ok(ThresholdMetrics {
        precision: c.precision(),
        mcc: c.mcc(),
        dice: c.dice(),
    })
}

/// Mean precision of the binarized map over `thresholds`.
pub fn ap_at_thresholds(scores: &[f64], mask: &[bool], thresholds: &[f64]) -> Result<f64> {
    check(scores, mask)?;
    if thresholds.is_empty() {
        return Err(Error::Empty("no thresholds".into()));
    }
    let total: f64 = thresholds
        .iter()
        .map(|&t| Confusion::at_threshold(scores, mask, t).precision())
        .sum();
    Ok(total / thresholds.len() as f64)
}

/// Highest precision, MCC and Dice attained over `thresholds`, each
/// maximized independently.
pub fn best_threshold_metrics(scores: &[f64], mask: &[bool], thresholds: &[f64]) -> Result<ThresholdMetrics> {
    check(scores, mask)?;
    if thresholds.is_empty() {
        return Err(Error::Empty("no thresholds".into()));
    }
    let mut best = ThresholdMetrics {
        precision: f64::NEG_INFINITY,
        mcc: f64::NEG_INFINITY,
        dice: f64::NEG_INFINITY,
    };
    for &t in thresholds {
        let c = Confusion::at_threshold(scores, mask, t);
        best.precision = best.precision.max(c.precision());
        best.mcc = best.mcc.max(c.mcc());
        best.dice = best.dice.max(c.dice());
    }
    Ok(best)
}
