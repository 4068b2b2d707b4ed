//! Volume-level synthetic cohort scenarios.
//!
//! These generators plant a known coefficient vector and corrupt the
//! measured volumes without going through voxel grids, so replicated
//! directional studies run in milliseconds. The corruption is
//! confidence-linked: subjects with lower IoU get a larger systematic volume
//! error and noisier measurements, and diabetic subjects segment worse on
//! average, which is the regime where confidence-aware models help.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::cohort::{AugmentedRecord, ConfidenceKind, SubjectRecord};
use crate::seeding::rng_from;

/// A generated cohort plus the planted ground truth needed to score it.
#[derive(Debug, Clone)]
pub struct ScenarioCohort {
    pub records: Vec<AugmentedRecord>,
    pub true_volumes_mm3: IndexMap<String, f64>,
    pub planted_beta4_mm3: f64,
}

/// Group-analysis scenario: planted linear model plus confidence-correlated
/// heteroscedastic volume corruption.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupScenario {
    pub n_subjects: usize,
    pub diabetic_fraction: f64,
    pub beta0_mm3: f64,
    pub beta_age: f64,
    pub beta_sex: f64,
    pub beta_bmi: f64,
    pub beta_diabetes: f64,
    pub noise_std_mm3: f64,
    pub age_mean: f64,
    pub age_std: f64,
    pub bmi_mean: f64,
    pub bmi_std: f64,
    /// Mean IoU for non-diabetic subjects; diabetics sit lower by
    /// `iou_diabetic_shift`.
    pub iou_mean_healthy: f64,
    pub iou_diabetic_shift: f64,
    pub iou_std: f64,
    /// Fraction of non-diabetic subjects with a catastrophically poor
    /// segmentation.
    pub low_tail_fraction: f64,
    /// Same for diabetic subjects; poor segmentations concentrate in the
    /// patient group.
    pub low_tail_fraction_diabetic: f64,
    pub low_tail_drop: f64,
    /// Systematic volume error per unit of (1 - IoU); usually negative
    /// (uncertain segmentations under-segment).
    pub bias_mm3_per_unit: f64,
    /// Measurement noise std per unit of (1 - IoU).
    pub noise_mm3_per_unit: f64,
}

impl Default for GroupScenario {
    fn default() -> Self {
        Self {
            n_subjects: 308,
            diabetic_fraction: 109.0 / 308.0,
            beta0_mm3: 1_400_000.0,
            beta_age: -25_000.0,
            beta_sex: 25_000.0,
            beta_bmi: 40_000.0,
            beta_diabetes: 120_000.0,
            noise_std_mm3: 50_000.0,
            age_mean: 56.0,
            age_std: 8.0,
            bmi_mean: 28.0,
            bmi_std: 4.0,
            iou_mean_healthy: 0.92,
            iou_diabetic_shift: 0.04,
            iou_std: 0.03,
            low_tail_fraction: 0.08,
            low_tail_fraction_diabetic: 0.30,
            low_tail_drop: 0.5,
            bias_mm3_per_unit: -500_000.0,
            noise_mm3_per_unit: 250_000.0,
        }
    }
}

const STREAM_SCENARIO: u64 = 0x5C;

fn diabetes_flags(n: usize, fraction: f64, rng: &mut impl Rng) -> Vec<bool> {
    let k = (n as f64 * fraction).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut out = vec![false; n];
    for &i in idx.iter().take(k) {
        out[i] = true;
    }
    out
}

fn cv_from_iou(iou: f64, jitter: f64) -> f64 {
    (0.02 + 0.35 * (1.0 - iou) + 0.03 * jitter.abs()).max(0.005)
}

/// Generates one group-scenario cohort; measured volumes carry the
/// confidence-linked corruption, true volumes are recorded alongside.
pub fn heteroscedastic_group_cohort(sc: &GroupScenario, seed: u64) -> ScenarioCohort {
    let mut rng = rng_from(seed, &[STREAM_SCENARIO, 1]);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let diabetic = diabetes_flags(sc.n_subjects, sc.diabetic_fraction, &mut rng);

    let mut records = Vec::with_capacity(sc.n_subjects);
    let mut true_volumes = IndexMap::new();
    for (i, &d) in diabetic.iter().enumerate() {
        let age = sc.age_mean + sc.age_std * unit.sample(&mut rng);
        let sex = u8::from(rng.random::<f64>() < 0.5);
        let bmi = sc.bmi_mean + sc.bmi_std * unit.sample(&mut rng);
        let age_z = (age - sc.age_mean) / sc.age_std;
        let bmi_z = (bmi - sc.bmi_mean) / sc.bmi_std;
        let v_true = sc.beta0_mm3
            + sc.beta_age * age_z
            + sc.beta_sex * sex as f64
            + sc.beta_bmi * bmi_z
            + sc.beta_diabetes * if d { 1.0 } else { 0.0 }
            + sc.noise_std_mm3 * unit.sample(&mut rng);

        let mut iou = sc.iou_mean_healthy - if d { sc.iou_diabetic_shift } else { 0.0 }
            + sc.iou_std * unit.sample(&mut rng);
        let tail_fraction = if d { sc.low_tail_fraction_diabetic } else { sc.low_tail_fraction };
        if rng.random::<f64>() < tail_fraction {
            iou -= sc.low_tail_drop * (0.5 + 0.5 * rng.random::<f64>());
        }
        iou = iou.clamp(0.05, 0.98);

        let uncertainty = 1.0 - iou;
        let v_meas = (v_true
            + sc.bias_mm3_per_unit * uncertainty
            + sc.noise_mm3_per_unit * uncertainty * unit.sample(&mut rng))
        .max(1_000.0);

        let cv = cv_from_iou(iou, unit.sample(&mut rng));
        let id = format!("s{i:04}");
        true_volumes.insert(id.clone(), v_true);
        records.push(AugmentedRecord {
            subject: SubjectRecord {
                subject_id: id,
                age_years: age,
                sex,
                bmi,
                diabetes: u8::from(d),
                volume_mm3: v_meas,
                confidence: iou,
                confidence_kind: ConfidenceKind::Iou,
            },
            iou,
            cv,
            inv_cv: 1.0 / cv,
            mean_volume_mm3: v_meas,
        });
    }
    ScenarioCohort { records, true_volumes_mm3: true_volumes, planted_beta4_mm3: sc.beta_diabetes }
}

/// Classification scenario: a weak volume signal and (optionally)
/// group-dependent confidence, the regime where adding the confidence
/// measure to the classifier helps.
#[derive(Debug, Clone, PartialEq)]
pub struct ClfScenario {
    pub n_subjects: usize,
    pub diabetic_fraction: f64,
    pub volume_mean_mm3: f64,
    pub volume_std_mm3: f64,
    /// Added to diabetic volumes; 0 makes volume uninformative.
    pub volume_diabetic_shift_mm3: f64,
    pub iou_mean_healthy: f64,
    /// Subtracted from diabetic IoU; 0 makes confidence uninformative.
    pub iou_diabetic_shift: f64,
    pub iou_std: f64,
}

impl ClfScenario {
    /// Confidence varies between diagnostic groups.
    pub fn confidence_informative() -> Self {
        Self {
            n_subjects: 308,
            diabetic_fraction: 109.0 / 308.0,
            volume_mean_mm3: 1_500_000.0,
            volume_std_mm3: 100_000.0,
            volume_diabetic_shift_mm3: 35_000.0,
            iou_mean_healthy: 0.90,
            iou_diabetic_shift: 0.08,
            iou_std: 0.05,
        }
    }

    /// Neither volume nor confidence carries class information; classes are
    /// balanced so chance accuracy sits at one half.
    pub fn chance_level() -> Self {
        Self {
            diabetic_fraction: 0.5,
            volume_diabetic_shift_mm3: 0.0,
            iou_diabetic_shift: 0.0,
            ..Self::confidence_informative()
        }
    }
}

pub fn classification_scenario_cohort(sc: &ClfScenario, seed: u64) -> ScenarioCohort {
    let mut rng = rng_from(seed, &[STREAM_SCENARIO, 2]);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let diabetic = diabetes_flags(sc.n_subjects, sc.diabetic_fraction, &mut rng);

    let mut records = Vec::with_capacity(sc.n_subjects);
    let mut true_volumes = IndexMap::new();
    for (i, &d) in diabetic.iter().enumerate() {
        let age = 56.0 + 8.0 * unit.sample(&mut rng);
        let sex = u8::from(rng.random::<f64>() < 0.5);
        let bmi = 28.0 + 4.0 * unit.sample(&mut rng);
        let volume = sc.volume_mean_mm3
            + if d { sc.volume_diabetic_shift_mm3 } else { 0.0 }
            + sc.volume_std_mm3 * unit.sample(&mut rng);
        let iou = (sc.iou_mean_healthy - if d { sc.iou_diabetic_shift } else { 0.0 }
            + sc.iou_std * unit.sample(&mut rng))
        .clamp(0.05, 0.98);
        let cv = cv_from_iou(iou, unit.sample(&mut rng));
        let id = format!("s{i:04}");
        true_volumes.insert(id.clone(), volume);
        records.push(AugmentedRecord {
            subject: SubjectRecord {
                subject_id: id,
                age_years: age,
                sex,
                bmi,
                diabetes: u8::from(d),
                volume_mm3: volume.max(1_000.0),
                confidence: iou,
                confidence_kind: ConfidenceKind::Iou,
            },
            iou,
            cv,
            inv_cv: 1.0 / cv,
            mean_volume_mm3: volume.max(1_000.0),
        });
    }
    ScenarioCohort { records, true_volumes_mm3: true_volumes, planted_beta4_mm3: 0.0 }
}
