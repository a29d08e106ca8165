//! Two-sided Mann-Whitney U test.
//!
//! Small samples use the exact permutation distribution of the rank sum,
//! computed by dynamic programming over doubled midranks so that ties stay
//! in integer arithmetic. Larger samples use the normal approximation with
//! tie and continuity corrections.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const DEFAULT_EXACT_THRESHOLD: usize = 10;

/// An exact p-value as `numerator / denominator`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactPValue {
    pub numerator: u128,
    pub denominator: u128,
}

impl ExactPValue {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn validate(sample0: &[f64], sample1: &[f64]) -> Result<()> {
    if sample0.is_empty() || sample1.is_empty() {
        return Err(Error::Empty("Mann-Whitney U needs two non-empty samples".into()));
    }
    if sample0.iter().chain(sample1).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Mann-Whitney U samples".into()));
    }
    Ok(())
}

/// Doubled midranks of the pooled samples (sample0 first). Also returns the
/// tie-group sizes.
fn doubled_ranks(sample0: &[f64], sample1: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let pooled: Vec<f64> = sample0.iter().chain(sample1).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && pooled[order[end + 1]] == pooled[order[start]] {
            end += 1;
        }
        // 1-based positions start+1 ..= end+1; doubled midrank is their sum of ends.
        let doubled = (start + 1 + end + 1) as u64;
        for &idx in &order[start..=end] {
            ranks[idx] = doubled;
        }
        ties.push(end - start + 1);
        start = end + 1;
    }
    (ranks, ties)
}

/// Exact two-sided p-value: the share of all `C(n0+n1, n0)` group
/// assignments whose rank sum deviates from its mean at least as much as the
/// observed one.
pub fn mann_whitney_exact(sample0: &[f64], sample1: &[f64]) -> Result<ExactPValue> {
    validate(sample0, sample1)?;
    let n0 = sample0.len();
    let n = n0 + sample1.len();
    let (ranks, _) = doubled_ranks(sample0, sample1);
    let max_sum: usize = ranks.iter().map(|&r| r as usize).sum();

    // ways[k][s]: subsets of size k with doubled rank sum s.
    let mut ways = vec![vec![0u128; max_sum + 1]; n0 + 1];
    ways[0][0] = 1;
    for &r in &ranks {
        let r = r as usize;
        for k in (1..=n0).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }

    let center = (n0 * (n + 1)) as i64;
    let observed: i64 = ranks[..n0].iter().map(|&r| r as i64).sum();
    let deviation = (observed - center).abs();
    let mut numerator = 0u128;
    let mut denominator = 0u128;
    for (s, &count) in ways[n0].iter().enumerate() {
        if count == 0 {
            continue;
        }
        denominator += count;
        if (s as i64 - center).abs() >= deviation {
            numerator += count;
        }
    }
    Ok(ExactPValue {
        numerator,
        denominator,
    })
}

/// Normal approximation with tie correction and a 0.5 continuity correction.
pub fn mann_whitney_normal(sample0: &[f64], sample1: &[f64]) -> Result<f64> {
    validate(sample0, sample1)?;
    let n0 = sample0.len() as f64;
    let n1 = sample1.len() as f64;
    let n = n0 + n1;
    let (ranks, ties) = doubled_ranks(sample0, sample1);
    let rank_sum0: f64 = ranks[..sample0.len()].iter().map(|&r| r as f64 / 2.0).sum();
    let u0 = rank_sum0 - n0 * (n0 + 1.0) / 2.0;
    let mean = n0 * n1 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let variance = n0 * n1 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(variance > 0.0) {
        return Ok(1.0);
    }
    let z = ((u0 - mean).abs() - 0.5) / variance.sqrt();
    if z <= 0.0 {
        return Ok(1.0);
    }
    Ok(erfc(z / std::f64::consts::SQRT_2).min(1.0))
}

/// Two-sided p-value; exact when both samples have at most
/// `exact_threshold` values.
pub fn mann_whitney_u(sample0: &[f64], sample1: &[f64], exact_threshold: usize) -> Result<f64> {
    if sample0.len() <= exact_threshold && sample1.len() <= exact_threshold {
        mann_whitney_exact(sample0, sample1).map(|p| p.value())
    } else {
        mann_whitney_normal(sample0, sample1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_examples() {
        let p = mann_whitney_exact(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(p.numerator * 3, p.denominator);
        assert_eq!(p.denominator, 6);
        assert_eq!(mann_whitney_u(&[5.0, 5.0, 5.0], &[5.0, 5.0], 10).unwrap(), 1.0);
        assert_eq!(mann_whitney_u(&[1.0], &[2.0], 10).unwrap(), 1.0);
    }

    #[test]
    fn normal_identical_samples() {
        assert_eq!(mann_whitney_normal(&[2.0; 12], &[2.0; 15]).unwrap(), 1.0);
    }

    #[test]
    fn normal_separated_samples() {
        // U=0, mean=12.5, sd=sqrt(25*11/12), z=(12.5-0.5)/sd.
        let x: Vec<f64> = (1..=5).map(f64::from).collect();
        let y: Vec<f64> = (6..=10).map(f64::from).collect();
        let sd = (25.0f64 * 11.0 / 12.0).sqrt();
        let expected = erfc(12.0 / sd / std::f64::consts::SQRT_2);
        assert!((mann_whitney_normal(&x, &y).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.0122).abs() < 1e-3);
    }

    #[test]
    fn errors() {
        assert!(mann_whitney_u(&[], &[1.0], 10).is_err());
        assert!(mann_whitney_u(&[f64::NAN], &[1.0], 10).is_err());
    }
}
