//! Statistical models: ordinary/weighted least squares for group analysis
//! and logistic regression with variable/interaction/instance-weight
//! variants for disease classification.

mod design;
mod linear;
mod logistic;

pub use design::{
    build_design, ClfModelSpec, ClfVariant, DesignMatrix, GroupModelSpec, GroupVariant, ModelSpec,
    COL_AGE, COL_BMI, COL_CONFIDENCE, COL_DIABETES, COL_INTERCEPT, COL_SEX, COL_VOLUME, COL_V_TIMES_C,
};
pub use linear::{fit_ols, fit_wls};
pub use logistic::{accuracy, fit_logistic, predict_proba, LogisticOptions};

use indexmap::IndexMap;
use serde::Serialize;

use crate::cohort::Cohort;
use crate::error::Result;

/// Which spec-level model a fit belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    GroupBase,
    GroupVariable,
    GroupInstance,
    ClfBase,
    ClfVariable,
    ClfInteraction,
    ClfInstance,
}

impl ModelKind {
    pub fn is_classification(&self) -> bool {
        matches!(
            self,
            ModelKind::ClfBase | ModelKind::ClfVariable | ModelKind::ClfInteraction | ModelKind::ClfInstance
        )
    }
}

/// Estimated coefficients plus convergence metadata for one model.
///
/// `columns` keeps the design column names in fit order; `coefficients` maps
/// display names to values in the same order (canonical `beta_*` names for
/// spec-level models, raw column names for direct solver calls).
#[derive(Debug, Clone, Serialize)]
pub struct ModelFit {
    pub model_kind: Option<ModelKind>,
    pub columns: Vec<String>,
    pub coefficients: IndexMap<String, f64>,
    pub weights: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Weighted residual sum of squares for linear fits, weighted
    /// log-likelihood for logistic fits.
    pub log_likelihood_or_rss: f64,
    /// Ratio of largest to smallest singular value of the weighted design;
    /// values above 1e8 indicate a near-singular system.
    pub condition_number: f64,
}

impl ModelFit {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.coefficients.get(name).copied()
    }

    /// Coefficient values in design-column order.
    pub fn coef_values(&self) -> Vec<f64> {
        self.coefficients.values().copied().collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("fit serializes")
    }

    /// Renames coefficients to the canonical `beta_i` scheme (the interaction
    /// column becomes `beta_vc`) and stamps the model kind.
    fn into_spec_fit(mut self, kind: ModelKind) -> ModelFit {
        let renamed: IndexMap<String, f64> = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, (name, &v))| {
                let beta = if name == COL_V_TIMES_C {
                    "beta_vc".to_string()
                } else {
                    format!("beta_{i}")
                };
                (beta, v)
            })
            .collect();
        self.coefficients = renamed;
        self.model_kind = Some(kind);
        self
    }
}

/// Fits one group-analysis model (Eq.-4-style linear regression) on a cohort.
pub fn fit_group_model(cohort: &Cohort, spec: &GroupModelSpec) -> Result<ModelFit> {
    let design = build_design(cohort, &ModelSpec::Group(spec.clone()))?;
    let kind = match spec.variant {
        GroupVariant::Base => ModelKind::GroupBase,
        GroupVariant::Variable => ModelKind::GroupVariable,
        GroupVariant::Instance => ModelKind::GroupInstance,
    };
    let fit = match spec.variant {
        GroupVariant::Instance => fit_wls(&design)?,
        _ => fit_ols(&design)?,
    };
    Ok(fit.into_spec_fit(kind))
}

/// Fits one disease-classification model (weighted logistic regression).
pub fn fit_clf_model(cohort: &Cohort, spec: &ClfModelSpec, opts: &LogisticOptions) -> Result<ModelFit> {
    let design = build_design(cohort, &ModelSpec::Clf(spec.clone()))?;
    let kind = match spec.variant {
        ClfVariant::Base => ModelKind::ClfBase,
        ClfVariant::Variable => ModelKind::ClfVariable,
        ClfVariant::Interaction => ModelKind::ClfInteraction,
        ClfVariant::Instance => ModelKind::ClfInstance,
    };
    let fit = fit_logistic(&design, opts)?;
    Ok(fit.into_spec_fit(kind))
}
