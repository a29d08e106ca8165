use rayon::prelude::*;

use super::{check_training_set, Alpha, Kernel, KernelHyper, Scaler, SpriteEmbedding, Variant, Vocabulary};
use crate::error::{Error, Result};
use crate::stats::{mann_whitney_u, DEFAULT_EXACT_THRESHOLD};

/// Added inside both logarithms so that zero class means stay finite.
pub const DEFAULT_PSEUDOCOUNT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoldChangeParams {
    /// Minimum absolute log2 fold change; smaller weights are zeroed.
    pub tau: f64,
    pub alpha: Alpha,
    pub pseudocount: f64,
    pub exact_threshold: usize,
}

impl FoldChangeParams {
    pub fn new(tau: f64, alpha: Alpha) -> Self {
        Self {
            tau,
            alpha,
            pseudocount: DEFAULT_PSEUDOCOUNT,
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
        }
    }
}

fn class_means(scaled: &[SpriteEmbedding], labels: &[u8], len: usize) -> [Vec<f64>; 2] {
    let mut sums = [vec![0.0f64; len], vec![0.0f64; len]];
    let mut counts = [0usize; 2];
    for (z, &y) in scaled.iter().zip(labels) {
        counts[y as usize] += 1;
        for (acc, &v) in sums[y as usize].iter_mut().zip(&z.values) {
            *acc += v;
        }
    }
    for (sum, &n) in sums.iter_mut().zip(&counts) {
        for v in sum.iter_mut() {
            *v /= n as f64;
        }
    }
    sums
}

/// Unmasked `log2(mean1 + eps) - log2(mean0 + eps)` per vocabulary entry.
pub fn raw_fold_changes(scaled: &[SpriteEmbedding], labels: &[u8], pseudocount: f64) -> Result<Vec<f64>> {
    let len = check_training_set(scaled, labels)?;
    let [mean0, mean1] = class_means(scaled, labels, len);
    Ok(mean1
        .iter()
        .zip(&mean0)
        .map(|(&a, &b)| (a + pseudocount).log2() - (b + pseudocount).log2())
        .collect())
}

/// Parameter-free kernel: class-mean fold changes, masked by a minimum
/// magnitude and, when `alpha < 1`, by a Bonferroni-corrected per-entry
/// Mann-Whitney test.
pub fn fit_fold_change(
    scaled: &[SpriteEmbedding],
    labels: &[u8],
    vocabulary: &Vocabulary,
    scaler: &Scaler,
    params: &FoldChangeParams,
    fitted_on: &str,
) -> Result<Kernel> {
    if !(params.tau >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fold-change threshold must be non-negative, got {}",
            params.tau
        )));
    }
    if !(params.pseudocount > 0.0) {
        return Err(Error::InvalidParameter("pseudocount must be positive".into()));
    }
    let len = check_training_set(scaled, labels)?;
    if len != vocabulary.len() {
        return Err(Error::LengthMismatch {
            what: "sprite embedding",
            expected: vocabulary.len(),
            actual: len,
        });
    }
    let mut weights = raw_fold_changes(scaled, labels, params.pseudocount)?;
    for w in weights.iter_mut() {
        if w.abs() < params.tau {
            *w = 0.0;
        }
    }

    if params.alpha.is_enabled() {
        let corrected = params.alpha.0 / len as f64;
        let significant: Vec<bool> = (0..len)
            .into_par_iter()
            .map(|t| {
                let mut groups: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
                for (z, &y) in scaled.iter().zip(labels) {
                    groups[y as usize].push(z.values[t]);
                }
                let first = groups[0][0];
                if groups.iter().flatten().all(|&v| v == first) {
                    return Ok(false);
                }
                mann_whitney_u(&groups[0], &groups[1], params.exact_threshold).map(|p| p <= corrected)
            })
            .collect::<Result<_>>()?;
        for (w, keep) in weights.iter_mut().zip(significant) {
            if !keep {
                *w = 0.0;
            }
        }
    }

    Kernel::new(
        vocabulary.clone(),
        weights,
        scaler.clone(),
        Variant::FoldChange,
        KernelHyper {
            tau: params.tau,
            alpha: params.alpha,
            lambda: 0.0,
        },
        fitted_on,
    )
}
