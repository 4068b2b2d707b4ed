//! Design matrices and their assembly from cohorts.

use nalgebra::{DMatrix, DVector};

use crate::cohort::{Cohort, ConfidenceKind};
use crate::error::{Error, Result};

pub const COL_INTERCEPT: &str = "intercept";
pub const COL_AGE: &str = "age";
pub const COL_SEX: &str = "sex";
pub const COL_BMI: &str = "bmi";
pub const COL_DIABETES: &str = "diabetes";
pub const COL_VOLUME: &str = "volume";
pub const COL_CONFIDENCE: &str = "confidence";
pub const COL_V_TIMES_C: &str = "v_times_c";

/// Named predictors, response, and per-row weights for one model fit.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    names: Vec<String>,
    x: DMatrix<f64>,
    y: DVector<f64>,
    weights: DVector<f64>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, x: DMatrix<f64>, y: DVector<f64>, weights: DVector<f64>) -> Result<Self> {
        if names.len() != x.ncols() {
            return Err(Error::InvalidDesign(format!(
                "{} names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        for (i, a) in names.iter().enumerate() {
            if names[i + 1..].contains(a) {
                return Err(Error::InvalidDesign(format!("duplicate column name {a:?}")));
            }
        }
        if y.len() != x.nrows() || weights.len() != x.nrows() {
            return Err(Error::InvalidDesign(format!(
                "row mismatch: x {} rows, y {}, weights {}",
                x.nrows(),
                y.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDesign("weights must be finite and nonnegative".into()));
        }
        if let Some(j) = names.iter().position(|n| n == COL_INTERCEPT) {
            if (0..x.nrows()).any(|i| x[(i, j)] != 1.0) {
                return Err(Error::InvalidDesign("intercept column must be all ones".into()));
            }
        }
        Ok(Self { names, x, y, weights })
    }

    pub fn with_unit_weights(names: Vec<String>, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let n = x.nrows();
        Self::new(names, x, y, DVector::from_element(n, 1.0))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    /// Row-subset view used by repeated-split studies.
    pub fn subset(&self, rows: &[usize]) -> Result<DesignMatrix> {
        let x = DMatrix::from_fn(rows.len(), self.x.ncols(), |i, j| self.x[(rows[i], j)]);
        let y = DVector::from_fn(rows.len(), |i, _| self.y[rows[i]]);
        let w = DVector::from_fn(rows.len(), |i, _| self.weights[rows[i]]);
        DesignMatrix::new(self.names.clone(), x, y, w)
    }

    /// Same design with replaced weights.
    pub fn with_weights(&self, weights: DVector<f64>) -> Result<DesignMatrix> {
        DesignMatrix::new(self.names.clone(), self.x.clone(), self.y.clone(), weights)
    }
}

/// Group-analysis variants: base covariates, confidence as extra variable,
/// or confidence as instance weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GroupVariant {
    Base,
    Variable,
    Instance,
}

impl GroupVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupVariant::Base => "base",
            GroupVariant::Variable => "variable",
            GroupVariant::Instance => "instance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "base" => Some(GroupVariant::Base),
            "variable" => Some(GroupVariant::Variable),
            "instance" => Some(GroupVariant::Instance),
            _ => None,
        }
    }

    pub fn all() -> [GroupVariant; 3] {
        [GroupVariant::Base, GroupVariant::Variable, GroupVariant::Instance]
    }

    pub fn uses_confidence(&self) -> bool {
        !matches!(self, GroupVariant::Base)
    }
}

/// Classification variants; Interaction adds both C and V*C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ClfVariant {
    Base,
    Variable,
    Interaction,
    Instance,
}

impl ClfVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClfVariant::Base => "base",
            ClfVariant::Variable => "variable",
            ClfVariant::Interaction => "interaction",
            ClfVariant::Instance => "instance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "base" => Some(ClfVariant::Base),
            "variable" => Some(ClfVariant::Variable),
            "interaction" => Some(ClfVariant::Interaction),
            "instance" => Some(ClfVariant::Instance),
            _ => None,
        }
    }

    pub fn all() -> [ClfVariant; 4] {
        [ClfVariant::Base, ClfVariant::Variable, ClfVariant::Interaction, ClfVariant::Instance]
    }

    pub fn uses_confidence(&self) -> bool {
        !matches!(self, ClfVariant::Base)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupModelSpec {
    pub variant: GroupVariant,
    pub confidence_kind: ConfidenceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClfModelSpec {
    pub variant: ClfVariant,
    pub confidence_kind: ConfidenceKind,
    /// Include age/sex/BMI next to volume. On by default; turn off for the
    /// volume-only design.
    pub include_covariates: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Group(GroupModelSpec),
    Clf(ClfModelSpec),
}

fn confidence_column(cohort: &Cohort) -> Result<Vec<f64>> {
    cohort
        .records()
        .iter()
        .map(|r| {
            if r.confidence.is_finite() {
                Ok(r.confidence)
            } else {
                Err(Error::MissingConfidence(r.subject_id.clone()))
            }
        })
        .collect()
}

/// Assembles the design matrix for one model spec.
///
/// Group models regress volume on intercept + age + sex + BMI + diabetes
/// (+ confidence for Variable); classification models move diabetes to the
/// response and volume into the predictors (+ confidence and V*C per
/// variant). Instance variants set the weights to the confidence values.
pub fn build_design(cohort: &Cohort, spec: &ModelSpec) -> Result<DesignMatrix> {
    let n = cohort.len();
    let records = cohort.records();
    let mut names: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();

    let push = |name: &str, values: Vec<f64>, names: &mut Vec<String>, cols: &mut Vec<Vec<f64>>| {
        names.push(name.to_string());
        cols.push(values);
    };

    push(COL_INTERCEPT, vec![1.0; n], &mut names, &mut cols);

    let (y, weights) = match spec {
        ModelSpec::Group(g) => {
            push(COL_AGE, records.iter().map(|r| r.age_years).collect(), &mut names, &mut cols);
            push(COL_SEX, records.iter().map(|r| r.sex as f64).collect(), &mut names, &mut cols);
            push(COL_BMI, records.iter().map(|r| r.bmi).collect(), &mut names, &mut cols);
            push(COL_DIABETES, records.iter().map(|r| r.diabetes as f64).collect(), &mut names, &mut cols);
            if g.variant == GroupVariant::Variable {
                push(COL_CONFIDENCE, confidence_column(cohort)?, &mut names, &mut cols);
            }
            let y = DVector::from_iterator(n, records.iter().map(|r| r.volume_mm3));
            let w = if g.variant == GroupVariant::Instance {
                DVector::from_vec(confidence_column(cohort)?)
            } else {
                DVector::from_element(n, 1.0)
            };
            (y, w)
        }
        ModelSpec::Clf(c) => {
            if c.include_covariates {
                push(COL_AGE, records.iter().map(|r| r.age_years).collect(), &mut names, &mut cols);
                push(COL_SEX, records.iter().map(|r| r.sex as f64).collect(), &mut names, &mut cols);
                push(COL_BMI, records.iter().map(|r| r.bmi).collect(), &mut names, &mut cols);
            }
            push(COL_VOLUME, records.iter().map(|r| r.volume_mm3).collect(), &mut names, &mut cols);
            if matches!(c.variant, ClfVariant::Variable | ClfVariant::Interaction) {
                push(COL_CONFIDENCE, confidence_column(cohort)?, &mut names, &mut cols);
            }
            if c.variant == ClfVariant::Interaction {
                let conf = confidence_column(cohort)?;
                let vc: Vec<f64> = records.iter().zip(&conf).map(|(r, c)| r.volume_mm3 * c).collect();
                push(COL_V_TIMES_C, vc, &mut names, &mut cols);
            }
            let y = DVector::from_iterator(n, records.iter().map(|r| r.diabetes as f64));
            let w = if c.variant == ClfVariant::Instance {
                DVector::from_vec(confidence_column(cohort)?)
            } else {
                DVector::from_element(n, 1.0)
            };
            (y, w)
        }
    };

    let p = cols.len();
    let x = DMatrix::from_fn(n, p, |i, j| cols[j][i]);
    DesignMatrix::new(names, x, y, weights)
}
