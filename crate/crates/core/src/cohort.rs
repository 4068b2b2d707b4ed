//! Subject records, cohort CSV ingestion, and column standardization.
//!
//! The base cohort CSV carries one confidence column of a declared kind:
//! `subject_id,age,sex,bmi,diabetes,volume_mm3,confidence,confidence_kind`.
//! The augmented CSV produced by the confidence step appends
//! `iou,cv,inv_cv,mean_volume_mm3` so both confidence kinds stay available
//! to the study harness.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which confidence measure a value represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConfidenceKind {
    #[serde(rename = "iou")]
    Iou,
    #[serde(rename = "invcv")]
    InvCv,
}

impl ConfidenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConfidenceKind::Iou => "iou",
            ConfidenceKind::InvCv => "invcv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "iou" => Some(ConfidenceKind::Iou),
            "invcv" => Some(ConfidenceKind::InvCv),
            _ => None,
        }
    }

    /// Display name used in report column headers.
    pub fn label(&self) -> &'static str {
        match self {
            ConfidenceKind::Iou => "iou",
            ConfidenceKind::InvCv => "invcv",
        }
    }
}

impl fmt::Display for ConfidenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One subject: covariates plus derived biomarker volume and confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub age_years: f64,
    pub sex: u8,
    pub bmi: f64,
    pub diabetes: u8,
    pub volume_mm3: f64,
    pub confidence: f64,
    pub confidence_kind: ConfidenceKind,
}

/// Standardizable cohort columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Column {
    #[serde(rename = "age")]
    Age,
    #[serde(rename = "bmi")]
    Bmi,
    #[serde(rename = "volume_mm3")]
    VolumeMm3,
    #[serde(rename = "confidence")]
    Confidence,
}

impl Column {
    pub fn name(&self) -> &'static str {
        match self {
            Column::Age => "age",
            Column::Bmi => "bmi",
            Column::VolumeMm3 => "volume_mm3",
            Column::Confidence => "confidence",
        }
    }

    /// Default standardization set: age, BMI, and volume.
    pub fn default_set() -> Vec<Column> {
        vec![Column::Age, Column::Bmi, Column::VolumeMm3]
    }
}

/// Frozen per-column mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
}

/// A list of subjects plus frozen standardization stats.
#[derive(Debug, Clone, Default)]
pub struct Cohort {
    records: Vec<SubjectRecord>,
    standardization: IndexMap<Column, ColumnStats>,
}

impl Cohort {
    pub fn new(records: Vec<SubjectRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.subject_id.clone()) {
                return Err(Error::DuplicateSubjectId(r.subject_id.clone()));
            }
        }
        Ok(Self { records, standardization: IndexMap::new() })
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_standardized(&self) -> bool {
        !self.standardization.is_empty()
    }

    /// Frozen stats, empty until [`standardize`] has run.
    pub fn standardization(&self) -> &IndexMap<Column, ColumnStats> {
        &self.standardization
    }

    fn column_values(&self, column: Column) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| match column {
                Column::Age => r.age_years,
                Column::Bmi => r.bmi,
                Column::VolumeMm3 => r.volume_mm3,
                Column::Confidence => r.confidence,
            })
            .collect()
    }

    fn set_column(&mut self, column: Column, values: &[f64]) {
        for (r, &v) in self.records.iter_mut().zip(values) {
            match column {
                Column::Age => r.age_years = v,
                Column::Bmi => r.bmi = v,
                Column::VolumeMm3 => r.volume_mm3 = v,
                Column::Confidence => r.confidence = v,
            }
        }
    }
}

/// Population mean and standard deviation (divide by n).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Z-scores the named columns in place and freezes the stats used.
///
/// Uses the population standard deviation. A cohort can be standardized at
/// most once; the frozen stats can then be transferred to sibling cohorts
/// with [`apply_standardization`].
pub fn standardize(cohort: &Cohort, columns: &[Column]) -> Result<Cohort> {
    if cohort.is_standardized() {
        return Err(Error::AlreadyStandardized);
    }
    let mut out = cohort.clone();
    for &col in columns {
        let values = out.column_values(col);
        let (mean, std) = mean_std(&values);
        if std <= 0.0 || !std.is_finite() {
            return Err(Error::ZeroVariance(col.name().to_string()));
        }
        let scaled: Vec<f64> = values.iter().map(|v| (v - mean) / std).collect();
        out.set_column(col, &scaled);
        out.standardization.insert(col, ColumnStats { mean, std });
    }
    Ok(out)
}

/// Applies previously frozen stats to another cohort (same transformation,
/// no re-estimation).
pub fn apply_standardization(cohort: &Cohort, stats: &IndexMap<Column, ColumnStats>) -> Result<Cohort> {
    if cohort.is_standardized() {
        return Err(Error::AlreadyStandardized);
    }
    let mut out = cohort.clone();
    for (&col, s) in stats {
        if s.std <= 0.0 || !s.std.is_finite() {
            return Err(Error::ZeroVariance(col.name().to_string()));
        }
        let values = out.column_values(col);
        let scaled: Vec<f64> = values.iter().map(|v| (v - s.mean) / s.std).collect();
        out.set_column(col, &scaled);
        out.standardization.insert(col, *s);
    }
    Ok(out)
}

const BASE_COLUMNS: [&str; 8] = [
    "subject_id",
    "age",
    "sex",
    "bmi",
    "diabetes",
    "volume_mm3",
    "confidence",
    "confidence_kind",
];

const AUGMENTED_COLUMNS: [&str; 4] = ["iou", "cv", "inv_cv", "mean_volume_mm3"];

struct HeaderIndex {
    index: IndexMap<String, usize>,
}

impl HeaderIndex {
    fn new(headers: &csv::StringRecord, required: &[&str]) -> Result<Self> {
        let index: IndexMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        for col in required {
            if !index.contains_key(*col) {
                return Err(Error::MissingColumn((*col).to_string()));
            }
        }
        Ok(Self { index })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, column: &str) -> &'r str {
        record.get(self.index[column]).unwrap_or("").trim()
    }
}

fn parse_f64(row: usize, column: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| Error::NonNumericCell {
        row,
        column: column.to_string(),
        value: value.to_string(),
    })
}

fn parse_binary(row: usize, column: &str, value: &str) -> Result<u8> {
    match value {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(Error::NonBinaryCell {
            row,
            column: column.to_string(),
            value: value.to_string(),
        }),
    }
}

fn parse_base_record(header: &HeaderIndex, row: usize, record: &csv::StringRecord) -> Result<SubjectRecord> {
    let subject_id = header.get(record, "subject_id").to_string();
    if subject_id.is_empty() {
        return Err(Error::InvalidRecord { row, reason: "empty subject_id".into() });
    }
    let kind_raw = header.get(record, "confidence_kind");
    let confidence_kind = ConfidenceKind::parse(kind_raw).ok_or_else(|| Error::InvalidRecord {
        row,
        reason: format!("confidence_kind must be iou or invcv, got {kind_raw:?}"),
    })?;
    let volume_mm3 = parse_f64(row, "volume_mm3", header.get(record, "volume_mm3"))?;
    if volume_mm3 < 0.0 {
        return Err(Error::InvalidRecord { row, reason: format!("volume_mm3 must be nonnegative, got {volume_mm3}") });
    }
    let confidence = parse_f64(row, "confidence", header.get(record, "confidence"))?;
    if confidence < 0.0 || confidence.is_nan() {
        return Err(Error::InvalidRecord { row, reason: format!("confidence must be nonnegative, got {confidence}") });
    }
    if confidence_kind == ConfidenceKind::Iou && confidence > 1.0 {
        return Err(Error::InvalidRecord { row, reason: format!("iou confidence must be in [0,1], got {confidence}") });
    }
    Ok(SubjectRecord {
        subject_id,
        age_years: parse_f64(row, "age", header.get(record, "age"))?,
        sex: parse_binary(row, "sex", header.get(record, "sex"))?,
        bmi: parse_f64(row, "bmi", header.get(record, "bmi"))?,
        diabetes: parse_binary(row, "diabetes", header.get(record, "diabetes"))?,
        volume_mm3,
        confidence,
        confidence_kind,
    })
}

/// Reads a base cohort CSV. Extra columns are ignored.
pub fn read_cohort_csv(path: impl AsRef<Path>) -> Result<Cohort> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = HeaderIndex::new(reader.headers()?, &BASE_COLUMNS)?;
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        records.push(parse_base_record(&header, i + 2, &row)?);
    }
    Cohort::new(records)
}

/// Writes a base cohort CSV at full precision.
pub fn write_cohort_csv(cohort: &Cohort, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(BASE_COLUMNS)?;
    for r in cohort.records() {
        writer.write_record(base_fields(r))?;
    }
    writer.flush()?;
    Ok(())
}

fn base_fields(r: &SubjectRecord) -> Vec<String> {
    vec![
        r.subject_id.clone(),
        r.age_years.to_string(),
        r.sex.to_string(),
        r.bmi.to_string(),
        r.diabetes.to_string(),
        r.volume_mm3.to_string(),
        r.confidence.to_string(),
        r.confidence_kind.to_string(),
    ]
}

/// A subject with both confidence kinds attached, as produced by the
/// confidence step.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedRecord {
    pub subject: SubjectRecord,
    pub iou: f64,
    pub cv: f64,
    /// May be `f64::INFINITY` when all sample volumes agree exactly.
    pub inv_cv: f64,
    pub mean_volume_mm3: f64,
}

/// Reads an augmented cohort CSV (base columns plus `iou,cv,inv_cv,mean_volume_mm3`).
pub fn read_augmented_cohort_csv(path: impl AsRef<Path>) -> Result<Vec<AugmentedRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let required: Vec<&str> = BASE_COLUMNS.iter().chain(AUGMENTED_COLUMNS.iter()).copied().collect();
    let header = HeaderIndex::new(reader.headers()?, &required)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let n = i + 2;
        let subject = parse_base_record(&header, n, &row)?;
        if !seen.insert(subject.subject_id.clone()) {
            return Err(Error::DuplicateSubjectId(subject.subject_id));
        }
        out.push(AugmentedRecord {
            iou: parse_f64(n, "iou", header.get(&row, "iou"))?,
            cv: parse_f64(n, "cv", header.get(&row, "cv"))?,
            inv_cv: parse_f64(n, "inv_cv", header.get(&row, "inv_cv"))?,
            mean_volume_mm3: parse_f64(n, "mean_volume_mm3", header.get(&row, "mean_volume_mm3"))?,
            subject,
        });
    }
    Ok(out)
}

/// Writes an augmented cohort CSV at full precision. `inf` marks an
/// infinite CV^-1 (perfect volume agreement).
pub fn write_augmented_cohort_csv(records: &[AugmentedRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let header: Vec<&str> = BASE_COLUMNS.iter().chain(AUGMENTED_COLUMNS.iter()).copied().collect();
    writer.write_record(&header)?;
    for r in records {
        let mut fields = base_fields(&r.subject);
        fields.push(r.iou.to_string());
        fields.push(r.cv.to_string());
        fields.push(r.inv_cv.to_string());
        fields.push(r.mean_volume_mm3.to_string());
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

/// Clipping cap for infinite CV^-1 values: the 99th percentile of the
/// cohort's finite values (nearest-rank), or 1.0 when none are finite.
pub fn invcv_cap(inv_cvs: &[f64]) -> f64 {
    let mut finite: Vec<f64> = inv_cvs.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return 1.0;
    }
    finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((0.99 * finite.len() as f64).ceil() as usize).clamp(1, finite.len());
    finite[rank - 1]
}

/// Materializes a single-kind cohort from augmented records. Infinite CV^-1
/// values are clipped to `cap` (or the cohort's default cap when `None`).
pub fn cohort_for_kind(records: &[AugmentedRecord], kind: ConfidenceKind, cap: Option<f64>) -> Result<Cohort> {
    let cap = match kind {
        ConfidenceKind::Iou => f64::INFINITY,
        ConfidenceKind::InvCv => cap.unwrap_or_else(|| {
            let values: Vec<f64> = records.iter().map(|r| r.inv_cv).collect();
            invcv_cap(&values)
        }),
    };
    let subjects = records
        .iter()
        .map(|r| {
            let confidence = match kind {
                ConfidenceKind::Iou => r.iou,
                ConfidenceKind::InvCv => r.inv_cv.min(cap),
            };
            SubjectRecord {
                confidence,
                confidence_kind: kind,
                ..r.subject.clone()
            }
        })
        .collect();
    Cohort::new(subjects)
}
