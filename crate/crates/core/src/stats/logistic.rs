//! Logistic regression via iteratively reweighted least squares, with
//! per-subject instance weights.

use indexmap::IndexMap;
use nalgebra::DVector;

use crate::error::{Error, Result};

use super::linear::weighted_lstsq;
use super::{DesignMatrix, ModelFit};

/// Floor for the working variance p(1-p); keeps the inner solve alive when
/// probabilities saturate (e.g. under perfect separation).
const WORK_VAR_FLOOR: f64 = 1e-10;
const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct LogisticOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-8 }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Weighted log-likelihood sum w_i [y_i ln p_i + (1-y_i) ln(1-p_i)].
fn log_likelihood(y: &DVector<f64>, p: &DVector<f64>, w: &DVector<f64>) -> f64 {
    y.iter()
        .zip(p.iter())
        .zip(w.iter())
        .map(|((&y, &p), &w)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            w * (y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum()
}

/// Maximizes the weighted log-likelihood by IRLS.
///
/// Convergence is declared when `max |delta beta| < tol`. Non-convergence
/// (typically perfect separation) returns the last iterate with
/// `converged == false` instead of an error.
pub fn fit_logistic(design: &DesignMatrix, opts: &LogisticOptions) -> Result<ModelFit> {
    for (i, y) in design.y().iter().enumerate() {
        if *y != 0.0 && *y != 1.0 {
            return Err(Error::InvalidDesign(format!("response must be 0/1, row {i} has {y}")));
        }
    }
    let x = design.x();
    let y = design.y();
    let w = design.weights();
    let n = design.n_rows();
    let p_cols = design.n_cols();

    let mut beta = DVector::<f64>::zeros(p_cols);
    let mut converged = false;
    let mut iterations = 0;
    let mut condition_number = f64::NAN;

    for iter in 1..=opts.max_iter {
        iterations = iter;
        let eta = x * &beta;
        let probs = eta.map(sigmoid);
        let work_w = DVector::from_fn(n, |i, _| {
            let pq = (probs[i] * (1.0 - probs[i])).max(WORK_VAR_FLOOR);
            w[i] * pq
        });
        let z = DVector::from_fn(n, |i, _| {
            let pq = (probs[i] * (1.0 - probs[i])).max(WORK_VAR_FLOOR);
            eta[i] + (y[i] - probs[i]) / pq
        });
        let sol = match weighted_lstsq(x, &z, &work_w) {
            Ok(sol) => sol,
            Err(e) => {
                if iter == 1 {
                    return Err(e);
                }
                // solver lost rank mid-march (separation); keep the last iterate
                break;
            }
        };
        condition_number = sol.condition_number;
        let delta = (&sol.beta - &beta).amax();
        beta = sol.beta;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }

    let probs = (x * &beta).map(sigmoid);
    let ll = log_likelihood(y, &probs, w);
    let coefficients: IndexMap<String, f64> =
        design.names().iter().cloned().zip(beta.iter().copied()).collect();
    Ok(ModelFit {
        model_kind: None,
        columns: design.names().to_vec(),
        coefficients,
        weights: w.iter().copied().collect(),
        converged,
        iterations,
        log_likelihood_or_rss: ll,
        condition_number,
    })
}

/// Predicted probabilities `sigmoid(x' beta)` for a fitted model on a design
/// with matching columns.
pub fn predict_proba(fit: &ModelFit, design: &DesignMatrix) -> Result<Vec<f64>> {
    if let Some(kind) = fit.model_kind {
        if !kind.is_classification() {
            return Err(Error::InvalidDesign(format!("{kind:?} is not a classification fit")));
        }
    }
    if fit.columns != design.names() {
        return Err(Error::ColumnMismatch {
            fit: fit.columns.clone(),
            design: design.names().to_vec(),
        });
    }
    let beta = DVector::from_vec(fit.coef_values());
    Ok((design.x() * beta).iter().map(|&eta| sigmoid(eta)).collect())
}

/// Classification accuracy at the 0.5 threshold.
pub fn accuracy(probs: &[f64], y: &[f64]) -> f64 {
    let correct = probs
        .iter()
        .zip(y)
        .filter(|(&p, &y)| (p > 0.5) == (y == 1.0))
        .count();
    correct as f64 / y.len() as f64
}
