//! Ordinary and weighted least squares.
//!
//! Solves via singular value decomposition of the (square-root-) weighted
//! design, which is rank-revealing; near-singular systems are rejected
//! rather than silently solved through normal equations.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::{DesignMatrix, ModelFit};

/// Relative singular-value cutoff for rank decisions.
const RANK_REL_EPS: f64 = 1e-12;

pub(super) struct LstsqSolution {
    pub beta: DVector<f64>,
    pub condition_number: f64,
}

/// Minimizes sum w_i (y_i - x_i' beta)^2 for nonnegative weights.
///
/// Fitting needs at least p+1 rows with positive weight; assembling a
/// smaller design is legal, solving it is not.
pub(super) fn weighted_lstsq(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>) -> Result<LstsqSolution> {
    let n = x.nrows();
    let p = x.ncols();
    let support = w.iter().filter(|v| **v > 0.0).count();
    if support < p + 1 {
        return Err(Error::InvalidDesign(format!(
            "need at least {} rows with positive weight to fit {p} columns, got {support}",
            p + 1
        )));
    }
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * sqrt_w[i]);
    let yw = DVector::from_fn(n, |i, _| y[i] * sqrt_w[i]);

    let svd = xw.svd(true, true);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if s_max == 0.0 {
        return Err(Error::SingularDesign { rank: 0, cols: p });
    }
    let cutoff = s_max * RANK_REL_EPS;
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    if rank < p {
        return Err(Error::SingularDesign { rank, cols: p });
    }
    let s_min = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let beta = svd
        .solve(&yw, cutoff)
        .map_err(|e| Error::InvalidDesign(format!("svd solve failed: {e}")))?;
    Ok(LstsqSolution { beta: beta.column(0).into_owned(), condition_number: s_max / s_min })
}

fn linear_fit(design: &DesignMatrix) -> Result<ModelFit> {
    let sol = weighted_lstsq(design.x(), design.y(), design.weights())?;
    let fitted = design.x() * &sol.beta;
    let rss: f64 = design
        .y()
        .iter()
        .zip(fitted.iter())
        .zip(design.weights().iter())
        .map(|((y, f), w)| w * (y - f) * (y - f))
        .sum();
    let coefficients: IndexMap<String, f64> = design
        .names()
        .iter()
        .cloned()
        .zip(sol.beta.iter().copied())
        .collect();
    Ok(ModelFit {
        model_kind: None,
        columns: design.names().to_vec(),
        coefficients,
        weights: design.weights().iter().copied().collect(),
        converged: true,
        iterations: 1,
        log_likelihood_or_rss: rss,
        condition_number: sol.condition_number,
    })
}

/// Ordinary least squares. Requires unit weights; use [`fit_wls`] otherwise.
pub fn fit_ols(design: &DesignMatrix) -> Result<ModelFit> {
    if design.weights().iter().any(|&w| w != 1.0) {
        return Err(Error::InvalidDesign("fit_ols requires unit weights".into()));
    }
    linear_fit(design)
}

/// Weighted least squares with the design's per-row weights.
pub fn fit_wls(design: &DesignMatrix) -> Result<ModelFit> {
    linear_fit(design)
}
