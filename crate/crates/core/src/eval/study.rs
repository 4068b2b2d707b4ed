//! The three study protocols: Dice scoring, coefficient comparison, and
//! repeated-random-split classification.

use std::collections::HashMap;

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::cohort::{
    apply_standardization, cohort_for_kind, standardize, AugmentedRecord, Cohort, Column,
    ColumnStats, ConfidenceKind,
};
use crate::confidence::{consensus_mask, dice};
use crate::error::{Error, Result};
use crate::stats::{
    accuracy, build_design, fit_group_model, predict_proba, ClfModelSpec,
    ClfVariant, DesignMatrix, GroupModelSpec, GroupVariant, LogisticOptions, ModelSpec,
};
use crate::volume::{LabelVolume, SampleStack};

use super::report::{Cell, ReportRow, StudyReport};
use super::split::{split_for_repeat, SplitSpec};

/// Per-method Dice summary: consensus mask of each stack against its truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DiceStudy {
    pub per_subject: Vec<(String, f64)>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

pub fn dice_study(stacks: &[SampleStack], truths: &[(String, LabelVolume)]) -> Result<DiceStudy> {
    let by_id: HashMap<&str, &LabelVolume> = truths.iter().map(|(id, v)| (id.as_str(), v)).collect();
    if by_id.len() != truths.len() {
        return Err(Error::SubjectIdMismatch("duplicate truth subject ids".into()));
    }
    if stacks.len() != truths.len() {
        return Err(Error::SubjectIdMismatch(format!(
            "{} stacks vs {} truths",
            stacks.len(),
            truths.len()
        )));
    }
    let mut per_subject = Vec::with_capacity(stacks.len());
    for stack in stacks {
        let truth = by_id
            .get(stack.subject_id())
            .ok_or_else(|| Error::SubjectIdMismatch(format!("no truth for {:?}", stack.subject_id())))?;
        let consensus = consensus_mask(stack);
        per_subject.push((stack.subject_id().to_string(), dice(&consensus, truth, stack.organ_label())?));
    }
    let n = per_subject.len() as f64;
    let mean = per_subject.iter().map(|(_, d)| d).sum::<f64>() / n;
    let var = per_subject.iter().map(|(_, d)| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok(DiceStudy { per_subject, mean, std: var.sqrt() })
}

/// Options for the coefficient-comparison study.
#[derive(Debug, Clone)]
pub struct GroupStudyOptions {
    pub variants: Vec<GroupVariant>,
    pub kinds: Vec<ConfidenceKind>,
    /// Z-score age, BMI, and volume before fitting (frozen stats shared by
    /// every cell, including the manual reference).
    pub standardize: bool,
    /// Planted diabetes coefficient in mm^3; converted to the fitted scale.
    pub reference_beta4_mm3: f64,
    /// Ground-truth volumes for the manual reference column.
    pub manual_volumes: Option<IndexMap<String, f64>>,
}

impl Default for GroupStudyOptions {
    fn default() -> Self {
        Self {
            variants: GroupVariant::all().to_vec(),
            kinds: vec![ConfidenceKind::Iou, ConfidenceKind::InvCv],
            standardize: true,
            reference_beta4_mm3: 0.0,
            manual_volumes: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroupStudy {
    pub report: StudyReport,
    /// Reference beta_4 in the same scale as the fitted cells.
    pub reference_beta4: f64,
    /// Worst conditioning seen across the fitted cells; above 1e8 the
    /// design is close to singular and the coefficients are suspect.
    pub max_condition_number: f64,
}

fn column_name(variant: &str, kind: Option<ConfidenceKind>) -> String {
    match kind {
        Some(k) => format!("{variant}_{}", k.label()),
        None => variant.to_string(),
    }
}

fn standardized_cohort(cohort: Cohort, on: bool) -> Result<Cohort> {
    if on {
        standardize(&cohort, &Column::default_set())
    } else {
        Ok(cohort)
    }
}

fn manual_cohort(
    records: &[AugmentedRecord],
    manual_volumes: &IndexMap<String, f64>,
    stats: &IndexMap<Column, ColumnStats>,
    standardize_on: bool,
) -> Result<Cohort> {
    let subjects: Result<Vec<_>> = records
        .iter()
        .map(|r| {
            let v = manual_volumes
                .get(&r.subject.subject_id)
                .ok_or_else(|| Error::SubjectIdMismatch(format!("no manual volume for {:?}", r.subject.subject_id)))?;
            Ok(crate::cohort::SubjectRecord { volume_mm3: *v, ..r.subject.clone() })
        })
        .collect();
    let cohort = Cohort::new(subjects?)?;
    if standardize_on {
        apply_standardization(&cohort, stats)
    } else {
        Ok(cohort)
    }
}

/// Fits every requested variant x confidence-kind cell plus the manual
/// reference and reports beta_4 per cell; the best cell is the one closest
/// to the reference.
pub fn group_study(records: &[AugmentedRecord], method_label: &str, opts: &GroupStudyOptions) -> Result<GroupStudy> {
    if records.is_empty() {
        return Err(Error::Report("empty cohort".into()));
    }
    if opts.kinds.is_empty() {
        return Err(Error::Report("at least one confidence kind required".into()));
    }
    let mut cohorts: IndexMap<ConfidenceKind, Cohort> = IndexMap::new();
    for &kind in &opts.kinds {
        let cohort = standardized_cohort(cohort_for_kind(records, kind, None)?, opts.standardize)?;
        cohorts.insert(kind, cohort);
    }
    let first = &cohorts[0];
    let stats = first.standardization().clone();
    let volume_std = stats.get(&Column::VolumeMm3).map(|s| s.std).unwrap_or(1.0);
    let reference_beta4 = opts.reference_beta4_mm3 / volume_std;

    let mut columns = Vec::new();
    let mut cells = Vec::new();
    let mut max_condition: f64 = 0.0;
    for &variant in &opts.variants {
        let kinds: Vec<Option<ConfidenceKind>> = if variant.uses_confidence() {
            opts.kinds.iter().map(|&k| Some(k)).collect()
        } else {
            vec![None]
        };
        for kind in kinds {
            columns.push(column_name(variant.as_str(), kind));
            let cohort = &cohorts[&kind.unwrap_or(opts.kinds[0])];
            let spec = GroupModelSpec { variant, confidence_kind: kind.unwrap_or(opts.kinds[0]) };
            let cell = match fit_group_model(cohort, &spec) {
                Ok(fit) => {
                    max_condition = max_condition.max(fit.condition_number);
                    match fit.coef("beta_4") {
                        Some(b4) => Cell::Value(b4),
                        None => Cell::Failed("fit lacks beta_4".into()),
                    }
                }
                Err(e) => Cell::Failed(e.to_string()),
            };
            cells.push(cell);
        }
    }
    let comparable = cells.len();
    if let Some(manual) = &opts.manual_volumes {
        columns.push("manual".to_string());
        let cell = manual_cohort(records, manual, &stats, opts.standardize).and_then(|cohort| {
            let spec = GroupModelSpec { variant: GroupVariant::Base, confidence_kind: opts.kinds[0] };
            fit_group_model(&cohort, &spec)
        });
        cells.push(match cell {
            Ok(fit) => {
                max_condition = max_condition.max(fit.condition_number);
                fit.coef("beta_4").map(Cell::Value).unwrap_or(Cell::Failed("fit lacks beta_4".into()))
            }
            Err(e) => Cell::Failed(e.to_string()),
        });
    }

    let best = cells[..comparable]
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.value().map(|v| (i, (v - reference_beta4).abs())))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(i, _)| i);

    let mut report = StudyReport::new("group analysis: beta_4 per model", "method", columns);
    report.push_row(ReportRow { label: method_label.to_string(), cells, best })?;
    Ok(GroupStudy { report, reference_beta4, max_condition_number: max_condition })
}

/// Options for the repeated-random-split classification study.
#[derive(Debug, Clone)]
pub struct ClassificationStudyOptions {
    pub variants: Vec<ClfVariant>,
    pub kinds: Vec<ConfidenceKind>,
    pub split: SplitSpec,
    pub include_covariates: bool,
    pub standardize: bool,
    pub manual_volumes: Option<IndexMap<String, f64>>,
    pub logistic: LogisticOptions,
}

impl Default for ClassificationStudyOptions {
    fn default() -> Self {
        Self {
            variants: ClfVariant::all().to_vec(),
            kinds: vec![ConfidenceKind::Iou, ConfidenceKind::InvCv],
            split: SplitSpec::default(),
            include_covariates: true,
            standardize: true,
            manual_volumes: None,
            logistic: LogisticOptions::default(),
        }
    }
}

struct CellDesign {
    column: String,
    design: DesignMatrix,
}

/// For each repeat: stratified split, fit on train, accuracy on test at
/// threshold 0.5; reports the mean accuracy per cell across repeats.
pub fn classification_study(
    records: &[AugmentedRecord],
    method_label: &str,
    opts: &ClassificationStudyOptions,
) -> Result<StudyReport> {
    if records.is_empty() {
        return Err(Error::Report("empty cohort".into()));
    }
    if opts.kinds.is_empty() {
        return Err(Error::Report("at least one confidence kind required".into()));
    }
    opts.split.validate()?;

    let mut cohorts: IndexMap<ConfidenceKind, Cohort> = IndexMap::new();
    for &kind in &opts.kinds {
        let cohort = standardized_cohort(cohort_for_kind(records, kind, None)?, opts.standardize)?;
        cohorts.insert(kind, cohort);
    }
    let stats = cohorts[0].standardization().clone();

    let mut cell_designs: Vec<CellDesign> = Vec::new();
    for &variant in &opts.variants {
        let kinds: Vec<Option<ConfidenceKind>> = if variant.uses_confidence() {
            opts.kinds.iter().map(|&k| Some(k)).collect()
        } else {
            vec![None]
        };
        for kind in kinds {
            let cohort = &cohorts[&kind.unwrap_or(opts.kinds[0])];
            let spec = ModelSpec::Clf(ClfModelSpec {
                variant,
                confidence_kind: kind.unwrap_or(opts.kinds[0]),
                include_covariates: opts.include_covariates,
            });
            cell_designs.push(CellDesign {
                column: column_name(variant.as_str(), kind),
                design: build_design(cohort, &spec)?,
            });
        }
    }
    let comparable = cell_designs.len();
    if let Some(manual) = &opts.manual_volumes {
        let cohort = manual_cohort(records, manual, &stats, opts.standardize)?;
        let spec = ModelSpec::Clf(ClfModelSpec {
            variant: ClfVariant::Base,
            confidence_kind: opts.kinds[0],
            include_covariates: opts.include_covariates,
        });
        cell_designs.push(CellDesign {
            column: "manual".to_string(),
            design: build_design(&cohort, &spec)?,
        });
    }

    let labels: Vec<u8> = records.iter().map(|r| r.subject.diabetes).collect();
    let per_repeat: Vec<Result<Vec<f64>>> = (0..opts.split.n_repeats)
        .into_par_iter()
        .map(|repeat| {
            let split = split_for_repeat(&opts.split, &labels, repeat)?;
            let mut accuracies = Vec::with_capacity(cell_designs.len());
            for cell in &cell_designs {
                let train = cell.design.subset(&split.train)?;
                let test = cell.design.subset(&split.test)?;
                let fit = crate::stats::fit_logistic(&train, &opts.logistic)?;
                let probs = predict_proba(&fit, &test)?;
                let y: Vec<f64> = split.test.iter().map(|&i| labels[i] as f64).collect();
                accuracies.push(accuracy(&probs, &y));
            }
            Ok(accuracies)
        })
        .collect();

    let n_cells = cell_designs.len();
    let mut sums = vec![0.0f64; n_cells];
    let mut failure: Option<String> = None;
    let mut completed = 0usize;
    for (repeat, row) in per_repeat.into_iter().enumerate() {
        match row {
            Ok(accs) => {
                for (s, a) in sums.iter_mut().zip(&accs) {
                    *s += a;
                }
                completed += 1;
            }
            Err(e) => {
                failure.get_or_insert(format!("repeat {repeat}: {e}"));
            }
        }
    }

    let cells: Vec<Cell> = if let Some(reason) = failure {
        vec![Cell::Failed(reason); n_cells]
    } else {
        sums.iter().map(|s| Cell::Value(s / completed as f64)).collect()
    };

    let best = cells[..comparable]
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.value().map(|v| (i, v)))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(i, _)| i);

    let columns: Vec<String> = cell_designs.iter().map(|c| c.column.clone()).collect();
    let mut report = StudyReport::new("diabetes classification: mean accuracy", "method", columns);
    report.push_row(ReportRow { label: method_label.to_string(), cells, best })?;
    Ok(report)
}

/// Wraps a [`DiceStudy`] into a two-column report (mean, std).
pub fn dice_report(studies: &[(String, DiceStudy)]) -> Result<StudyReport> {
    let mut report = StudyReport::new(
        "segmentation quality: consensus dice vs truth",
        "method",
        vec!["mean_dice".into(), "std_dice".into()],
    );
    for (label, study) in studies {
        let best = None;
        report.push_row(ReportRow {
            label: label.clone(),
            cells: vec![Cell::Value(study.mean), Cell::Value(study.std)],
            best,
        })?;
    }
    Ok(report)
}
