//! Cohort simulation with planted regression coefficients.
//!
//! Covariates are drawn from configured distributions, each subject's true
//! organ volume follows the linear group-analysis model with a planted
//! coefficient vector, and a phantom of that volume is rasterized and
//! sampled. The planted truth is recorded alongside so studies can score
//! estimates against it.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, ConfidenceKind, SubjectRecord};
use crate::confidence::volume_of;
use crate::error::{Error, Result};
use crate::phantom::{make_phantom, Phantom};
use crate::sampler::{sample_stack, SamplerConfig};
use crate::seeding::{derive_seed, rng_from};
use crate::volume::SampleStack;

/// Grid geometry, covariate distributions, and the planted coefficient
/// vector for cohort simulation. Volumes are in mm^3; the age and BMI
/// coefficients apply to z-scores under the stated population parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectSpec {
    pub dims: (usize, usize, usize),
    pub spacing_mm: (f64, f64, f64),
    pub organ_label: u8,
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
    pub male_fraction: f64,
}

impl Default for EffectSpec {
    fn default() -> Self {
        Self {
            dims: (53, 256, 144),
            spacing_mm: (3.0, 2.0, 2.0),
            organ_label: 1,
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
            male_fraction: 0.5,
        }
    }
}

impl EffectSpec {
    /// Small-grid variant for fast tests and desk-scale runs.
    pub fn desk_scale() -> Self {
        Self {
            dims: (20, 28, 28),
            spacing_mm: (3.0, 2.0, 2.0),
            beta0_mm3: 45_000.0,
            beta_age: -1_500.0,
            beta_sex: 1_500.0,
            beta_bmi: 2_500.0,
            beta_diabetes: 5_000.0,
            noise_std_mm3: 3_000.0,
            ..Self::default()
        }
    }

    pub fn planted_beta(&self) -> IndexMap<String, f64> {
        IndexMap::from_iter([
            ("beta_0".to_string(), self.beta0_mm3),
            ("beta_1".to_string(), self.beta_age),
            ("beta_2".to_string(), self.beta_sex),
            ("beta_3".to_string(), self.beta_bmi),
            ("beta_4".to_string(), self.beta_diabetes),
        ])
    }
}

/// The planted ground truth for a simulated cohort.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub beta: IndexMap<String, f64>,
    pub noise_std_mm3: f64,
    pub seed: u64,
    pub n_subjects: usize,
    pub diabetic_fraction: f64,
    /// Rasterized ground-truth volume per subject.
    pub true_volumes_mm3: IndexMap<String, f64>,
}

pub struct SimulatedCohort {
    pub phantoms: Vec<Phantom>,
    pub stacks: Vec<SampleStack>,
    pub cohort: Cohort,
    pub truth: PlantedTruth,
}

const STREAM_COVARIATES: u64 = 0xC0;
const STREAM_DIABETES: u64 = 0xD1;
const STREAM_STACK: u64 = 0x57;

struct SubjectDraw {
    record: SubjectRecord,
    phantom: Phantom,
}

fn subject_id(i: usize) -> String {
    format!("s{i:04}")
}

fn draw_subject(
    i: usize,
    diabetic: bool,
    effect: &EffectSpec,
    seed: u64,
) -> Result<SubjectDraw> {
    let mut rng = rng_from(seed, &[STREAM_COVARIATES, i as u64]);
    let age = Normal::new(effect.age_mean, effect.age_std).expect("positive std").sample(&mut rng);
    let sex = u8::from(rng.random::<f64>() < effect.male_fraction);
    let bmi = Normal::new(effect.bmi_mean, effect.bmi_std).expect("positive std").sample(&mut rng);
    let noise: f64 = if effect.noise_std_mm3 > 0.0 {
        Normal::new(0.0, effect.noise_std_mm3).expect("positive std").sample(&mut rng)
    } else {
        0.0
    };

    let age_z = (age - effect.age_mean) / effect.age_std;
    let bmi_z = (bmi - effect.bmi_mean) / effect.bmi_std;
    let target = effect.beta0_mm3
        + effect.beta_age * age_z
        + effect.beta_sex * sex as f64
        + effect.beta_bmi * bmi_z
        + effect.beta_diabetes * if diabetic { 1.0 } else { 0.0 }
        + noise;
    if !(target > 0.0) {
        return Err(Error::InfeasibleEffect(format!(
            "subject {i}: target volume {target:.1} mm^3 is not positive"
        )));
    }

    // sphere in physical space with the target analytic volume
    let r_mm = (3.0 * target / (4.0 * std::f64::consts::PI)).cbrt();
    let (sz, sy, sx) = effect.spacing_mm;
    let radii_vox = (r_mm / sz, r_mm / sy, r_mm / sx);
    let (nz, ny, nx) = effect.dims;
    let mid = ((nz as f64 - 1.0) / 2.0, (ny as f64 - 1.0) / 2.0, (nx as f64 - 1.0) / 2.0);

    // jitter the center within the room the radii leave on each axis
    let mut center = [mid.0, mid.1, mid.2];
    let radii = [radii_vox.0, radii_vox.1, radii_vox.2];
    let mids = [mid.0, mid.1, mid.2];
    for axis in 0..3 {
        let headroom = mids[axis] + 0.5 - radii[axis];
        if headroom < 0.0 {
            return Err(Error::InfeasibleEffect(format!(
                "subject {i}: radius {:.2} vox exceeds grid axis {axis}",
                radii[axis]
            )));
        }
        let amp = (0.5 * headroom).min(0.05 * mids[axis].max(1.0));
        center[axis] = mids[axis] + (rng.random::<f64>() * 2.0 - 1.0) * amp;
    }

    let phantom = make_phantom(
        effect.dims,
        effect.spacing_mm,
        (center[0], center[1], center[2]),
        radii_vox,
        effect.organ_label,
    )?;
    let true_volume = volume_of(phantom.truth(), effect.organ_label);
    let record = SubjectRecord {
        subject_id: subject_id(i),
        age_years: age,
        sex,
        bmi,
        diabetes: u8::from(diabetic),
        volume_mm3: true_volume,
        confidence: 1.0,
        confidence_kind: ConfidenceKind::Iou,
    };
    Ok(SubjectDraw { record, phantom })
}

fn diabetes_assignment(n: usize, fraction: f64, seed: u64) -> Vec<bool> {
    let k = (n as f64 * fraction).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(seed, &[STREAM_DIABETES]));
    let mut out = vec![false; n];
    for &i in idx.iter().take(k) {
        out[i] = true;
    }
    out
}

fn validate_args(n_subjects: usize, diabetic_fraction: f64) -> Result<()> {
    if n_subjects < 10 {
        return Err(Error::InvalidConfig(format!("need at least 10 subjects, got {n_subjects}")));
    }
    if !(diabetic_fraction > 0.0 && diabetic_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "diabetic_fraction must be in (0,1), got {diabetic_fraction}"
        )));
    }
    Ok(())
}

/// Draws covariates and rasterizes ground-truth phantoms, without sampling.
pub fn simulate_truth_cohort(
    n_subjects: usize,
    diabetic_fraction: f64,
    effect: &EffectSpec,
    seed: u64,
) -> Result<(Vec<Phantom>, Cohort, PlantedTruth)> {
    validate_args(n_subjects, diabetic_fraction)?;
    let diabetic = diabetes_assignment(n_subjects, diabetic_fraction, seed);
    let draws: Result<Vec<SubjectDraw>> = (0..n_subjects)
        .into_par_iter()
        .map(|i| draw_subject(i, diabetic[i], effect, seed))
        .collect();
    let draws = draws?;
    let mut phantoms = Vec::with_capacity(n_subjects);
    let mut records = Vec::with_capacity(n_subjects);
    let mut true_volumes = IndexMap::new();
    for d in draws {
        true_volumes.insert(d.record.subject_id.clone(), d.record.volume_mm3);
        records.push(d.record);
        phantoms.push(d.phantom);
    }
    let truth = PlantedTruth {
        beta: effect.planted_beta(),
        noise_std_mm3: effect.noise_std_mm3,
        seed,
        n_subjects,
        diabetic_fraction,
        true_volumes_mm3: true_volumes,
    };
    Ok((phantoms, Cohort::new(records)?, truth))
}

/// Full simulation: truth cohort plus one sample stack per subject.
///
/// Each subject's sampler stream derives from `(seed, subject_index)`; the
/// seed inside `cfg` is ignored here so one cohort seed controls everything.
pub fn simulate_cohort(
    n_subjects: usize,
    diabetic_fraction: f64,
    effect: &EffectSpec,
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<SimulatedCohort> {
    cfg.validate()?;
    let (phantoms, cohort, truth) = simulate_truth_cohort(n_subjects, diabetic_fraction, effect, seed)?;
    let stacks: Result<Vec<SampleStack>> = phantoms
        .par_iter()
        .enumerate()
        .map(|(i, phantom)| {
            let cfg_i = SamplerConfig {
                seed: derive_seed(seed, &[STREAM_STACK, i as u64]),
                ..cfg.clone()
            };
            sample_stack(&subject_id(i), phantom, &cfg_i)
        })
        .collect();
    Ok(SimulatedCohort { phantoms, stacks: stacks?, cohort, truth })
}
