//! Empirical convergence orders from error ladders.

use crate::{Error, Result};

/// Order between successive rungs: `ln(e_i / e_{i+1}) / ln(h_i / h_{i+1})`.
///
/// Entry `i` compares rung `i` with rung `i + 1`; the result has one fewer
/// element than the inputs.
pub fn pairwise_orders(steps: &[f64], errors: &[f64]) -> Vec<f64> {
    steps
        .windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn fitted_order(steps: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(steps.len(), errors.len());
    assert!(steps.len() >= 2, "need at least two rungs");
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Number of whole 6ε blocks in `t_final`; errors unless `t_final / 6ε` is a
/// positive integer.
pub(crate) fn block_count(t_final: f64, eps: f64) -> Result<usize> {
    let ratio = t_final / (6.0 * eps);
    let q = ratio.round();
    if q < 1.0 || (ratio - q).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::domain(format!(
            "t_final / (6 eps) must be a positive integer; eps = {eps} gives {ratio}"
        )));
    }
    Ok(q as usize)
}
