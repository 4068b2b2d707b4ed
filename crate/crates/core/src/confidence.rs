//! Per-organ confidence measures, uncertainty maps, and overlap metrics.
//!
//! IoU over the N samples and the coefficient of variation of the N sample
//! volumes are the two confidence measures; CV uses the population form
//! (divide by N, no Bessel correction) and its inverse serves as the
//! confidence value. The voxel-wise uncertainty map is the binary entropy of
//! the foreground frequency, normalized to [0,1].

use crate::error::{Error, Result};
use crate::volume::{FloatVolume, LabelVolume, SampleStack};

/// Stack IoU plus a degeneracy flag for the empty-union case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackIou {
    pub value: f64,
    /// True when no sample contains the organ at all; IoU is defined as 0.
    pub empty_union: bool,
}

/// Intersection over union across all samples of a stack.
pub fn stack_iou(stack: &SampleStack) -> StackIou {
    let organ = stack.organ_label();
    let n_vox = stack.samples()[0].len();
    let mut intersection = 0usize;
    let mut union = 0usize;
    for idx in 0..n_vox {
        let mut all = true;
        let mut any = false;
        for s in stack.samples() {
            if s.labels()[idx] == organ {
                any = true;
            } else {
                all = false;
            }
        }
        if any {
            union += 1;
            if all {
                intersection += 1;
            }
        }
    }
    if union == 0 {
        StackIou { value: 0.0, empty_union: true }
    } else {
        StackIou { value: intersection as f64 / union as f64, empty_union: false }
    }
}

/// Organ volume in mm^3: voxel count times voxel volume.
pub fn volume_of(vol: &LabelVolume, organ_label: u8) -> f64 {
    vol.count_label(organ_label) as f64 * vol.voxel_volume_mm3()
}

/// Coefficient of variation of the sample volumes and its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackCv {
    pub cv: f64,
    /// `f64::INFINITY` when all sample volumes agree exactly.
    pub inv_cv: f64,
}

/// CV over the N sample volumes: sqrt(sum((V_i - mu)^2) / (N mu^2)).
///
/// Errors with [`Error::UndefinedCv`] when the mean volume is zero (no organ
/// voxels in any sample).
pub fn stack_cv(stack: &SampleStack) -> Result<StackCv> {
    let volumes = sample_volumes(stack);
    cv_of_volumes(&volumes)
}

/// CV of an explicit volume list; exposed for the confidence report and tests.
pub fn cv_of_volumes(volumes: &[f64]) -> Result<StackCv> {
    let n = volumes.len() as f64;
    let mean = volumes.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::UndefinedCv);
    }
    // all-equal short-circuit keeps the "cv == 0 iff all volumes equal"
    // invariant exact in floating point
    if volumes.iter().all(|&v| v == volumes[0]) {
        return Ok(StackCv { cv: 0.0, inv_cv: f64::INFINITY });
    }
    let ss: f64 = volumes.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let cv = (ss / (n * mean * mean)).sqrt();
    let inv_cv = if cv > 0.0 { 1.0 / cv } else { f64::INFINITY };
    Ok(StackCv { cv, inv_cv })
}

/// Volumes V_1..V_N of the individual samples.
pub fn sample_volumes(stack: &SampleStack) -> Vec<f64> {
    stack
        .samples()
        .iter()
        .map(|s| volume_of(s, stack.organ_label()))
        .collect()
}

/// Dice overlap 2|P & T| / (|P| + |T|); 1.0 when both masks are empty.
pub fn dice(pred: &LabelVolume, truth: &LabelVolume, organ_label: u8) -> Result<f64> {
    if pred.dims() != truth.dims() {
        return Err(Error::DimsMismatch(pred.dims(), truth.dims()));
    }
    let mut inter = 0usize;
    let mut p_count = 0usize;
    let mut t_count = 0usize;
    for (p, t) in pred.labels().iter().zip(truth.labels()) {
        let p_fg = *p == organ_label;
        let t_fg = *t == organ_label;
        if p_fg {
            p_count += 1;
        }
        if t_fg {
            t_count += 1;
        }
        if p_fg && t_fg {
            inter += 1;
        }
    }
    if p_count + t_count == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (p_count + t_count) as f64)
}

/// Voxel-wise uncertainty: binary entropy (in bits) of the foreground
/// frequency, 0 on unanimously labeled voxels and 1 at a 50/50 split.
pub fn uncertainty_map(stack: &SampleStack) -> FloatVolume {
    let organ = stack.organ_label();
    let n = stack.n_samples() as f64;
    let n_vox = stack.samples()[0].len();
    let mut values = Vec::with_capacity(n_vox);
    for idx in 0..n_vox {
        let count = stack.samples().iter().filter(|s| s.labels()[idx] == organ).count();
        let p = count as f64 / n;
        values.push(binary_entropy(p) as f32);
    }
    FloatVolume::new(stack.dims(), stack.spacing_mm(), values).expect("stack grid is valid")
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Majority vote per voxel; ties (possible only for even N) go to foreground.
pub fn consensus_mask(stack: &SampleStack) -> LabelVolume {
    let organ = stack.organ_label();
    let n = stack.n_samples();
    let n_vox = stack.samples()[0].len();
    let mut labels = vec![0u8; n_vox];
    for (idx, label) in labels.iter_mut().enumerate() {
        let count = stack.samples().iter().filter(|s| s.labels()[idx] == organ).count();
        if 2 * count >= n {
            *label = organ;
        }
    }
    LabelVolume::new(stack.dims(), stack.spacing_mm(), labels).expect("stack grid is valid")
}

/// All per-stack confidence quantities for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceReport {
    pub subject_id: String,
    pub iou: f64,
    pub empty_union: bool,
    pub cv: f64,
    pub inv_cv: f64,
    pub volumes_mm3: Vec<f64>,
    pub mean_volume_mm3: f64,
    /// Volume of the majority-vote mask; the default biomarker value.
    pub consensus_volume_mm3: f64,
}

pub fn confidence_report(stack: &SampleStack) -> Result<ConfidenceReport> {
    let iou = stack_iou(stack);
    let volumes = sample_volumes(stack);
    let cv = cv_of_volumes(&volumes)?;
    let mean = volumes.iter().sum::<f64>() / volumes.len() as f64;
    let consensus = volume_of(&consensus_mask(stack), stack.organ_label());
    Ok(ConfidenceReport {
        subject_id: stack.subject_id().to_string(),
        iou: iou.value,
        empty_union: iou.empty_union,
        cv: cv.cv,
        inv_cv: cv.inv_cv,
        volumes_mm3: volumes,
        mean_volume_mm3: mean,
        consensus_volume_mm3: consensus,
    })
}
