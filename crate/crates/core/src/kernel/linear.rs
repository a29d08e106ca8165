use super::{check_training_set, Alpha, Kernel, KernelHyper, Scaler, SpriteEmbedding, Variant, Vocabulary};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearParams {
    /// Elastic-net mixing: 1 is pure L1, 0 is pure L2.
    pub lambda: f64,
    /// Overall penalty strength (the inverse of sklearn's `C`).
    pub strength: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl LinearParams {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            strength: 1.0,
            max_iters: 3000,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Largest eigenvalue of `[X 1]^T [X 1]` by power iteration.
fn gram_spectral_norm(rows: &[&[f64]], width: usize) -> f64 {
    let mut v = vec![1.0f64; width + 1];
    let mut estimate = 0.0;
    for _ in 0..200 {
        let xv: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[width])
            .collect();
        let mut next = vec![0.0f64; width + 1];
        for (r, &s) in rows.iter().zip(&xv) {
            for (n, &a) in next.iter_mut().zip(r.iter()) {
                *n += a * s;
            }
            next[width] += s;
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - estimate).abs() <= 1e-10 * norm;
        estimate = norm;
        for (a, b) in v.iter_mut().zip(&next) {
            *a = b / norm;
        }
        if converged {
            break;
        }
    }
    estimate
}

/// Minimizes `sum_i logloss(y_i, w.x_i + b) + s * (l * |w|_1 + (1 - l) / 2 * |w|^2)`
/// by proximal gradient descent. The intercept is not penalized.
pub fn elastic_net_logistic(rows: &[&[f64]], labels: &[u8], params: &LinearParams) -> Result<LogisticFit> {
    if !(0.0..=1.0).contains(&params.lambda) {
        return Err(Error::InvalidParameter(format!(
            "elastic-net mixing must lie in [0, 1], got {}",
            params.lambda
        )));
    }
    if !(params.strength >= 0.0) || !params.strength.is_finite() {
        return Err(Error::InvalidParameter("penalty strength must be finite and >= 0".into()));
    }
    let width = rows.first().map_or(0, |r| r.len());
    if rows.iter().flat_map(|r| r.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logistic regression features".into()));
    }
    let l1 = params.strength * params.lambda;
    let l2 = params.strength * (1.0 - params.lambda);
    let lipschitz = 0.25 * gram_spectral_norm(rows, width) * 1.01 + l2;
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };

    let mut w = vec![0.0f64; width];
    let mut b = 0.0f64;
    let mut grad = vec![0.0f64; width];
    let mut fit = LogisticFit {
        coefficients: Vec::new(),
        intercept: 0.0,
        iterations: 0,
        converged: false,
    };
    for _ in 0..params.max_iters {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (r, &y) in rows.iter().zip(labels) {
            let z = r.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
            let residual = sigmoid(z) - y as f64;
            for (g, &a) in grad.iter_mut().zip(r.iter()) {
                *g += a * residual;
            }
            grad_b += residual;
        }
        let mut change = 0.0f64;
        for (wj, &g) in w.iter_mut().zip(&grad) {
            let next = soft_threshold(*wj - step * (g + l2 * *wj), step * l1);
            change = change.max((next - *wj).abs());
            *wj = next;
        }
        let next_b = b - step * grad_b;
        change = change.max((next_b - b).abs());
        b = next_b;
        fit.iterations += 1;
        if change < params.tol {
            fit.converged = true;
            break;
        }
    }
    fit.coefficients = w;
    fit.intercept = b;
    Ok(fit)
}

/// Kernel whose weights are elastic-net logistic regression coefficients.
pub fn fit_linear(
    scaled: &[SpriteEmbedding],
    labels: &[u8],
    vocabulary: &Vocabulary,
    scaler: &Scaler,
    params: &LinearParams,
    fitted_on: &str,
) -> Result<Kernel> {
    let len = check_training_set(scaled, labels)?;
    if len != vocabulary.len() {
        return Err(Error::LengthMismatch {
            what: "sprite embedding",
            expected: vocabulary.len(),
            actual: len,
        });
    }
    let rows: Vec<&[f64]> = scaled.iter().map(|z| z.values.as_slice()).collect();
    let fit = elastic_net_logistic(&rows, labels, params)?;
    Kernel::new(
        vocabulary.clone(),
        fit.coefficients,
        scaler.clone(),
        Variant::Linear,
        KernelHyper {
            tau: 0.0,
            alpha: Alpha::DISABLED,
            lambda: params.lambda,
        },
        fitted_on,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_feature_gets_positive_weight() {
        let data: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 2) as f64]).collect();
        let labels: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
        let rows: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let fit = elastic_net_logistic(&rows, &labels, &LinearParams::new(0.5)).unwrap();
        assert!(fit.coefficients[0] > 0.0);
    }

    #[test]
    fn constant_feature_is_zeroed_by_l1() {
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![(i % 2) as f64 * 2.0, 0.7]).collect();
        let labels: Vec<u8> = (0..10).map(|i| ((i % 2) ^ (i == 3) as usize) as u8).collect();
        let rows: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let fit = elastic_net_logistic(&rows, &labels, &LinearParams::new(1.0)).unwrap();
        assert_eq!(fit.coefficients[1], 0.0);
        assert!(fit.coefficients[0] > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = [vec![f64::NAN]];
        let rows: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        assert!(elastic_net_logistic(&rows, &[1], &LinearParams::new(0.5)).is_err());
        let data = [vec![1.0]];
        let rows: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        assert!(elastic_net_logistic(&rows, &[1], &LinearParams::new(1.5)).is_err());
    }
}
