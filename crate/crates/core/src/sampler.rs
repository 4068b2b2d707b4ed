//! Stochastic segmentation samplers.
//!
//! Four forward models stand in for the four Bayesian segmentation networks;
//! each turns one phantom into N plausible segmentation samples:
//!
//! - `McDropout`: flips voxels near the surface independently per sample.
//! - `FullyBayesian`: draws `g = mu + eps * sigma` per voxel (the
//!   reparameterization trick) and thresholds at zero.
//! - `Probabilistic`: one latent vector per sample induces a global affine
//!   perturbation (shift + scale) of the ellipsoid.
//! - `Hierarchical`: composes perturbations at decreasing spatial scales:
//!   global affine, regional bulges, local boundary jitter.
//!
//! Every sample derives its own RNG stream from `(seed, sample_index)`, so
//! parallel and serial generation are bit-identical.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phantom::{band_mm, distance_field_mm, phantom_logits, LogitField, Phantom};
use crate::seeding::{derive_seed, rng_from};
use crate::volume::{LabelVolume, SampleStack};

/// Which sampling mechanism to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SamplerKind {
    #[serde(rename = "mc-dropout")]
    McDropout,
    #[serde(rename = "fully-bayesian")]
    FullyBayesian,
    #[serde(rename = "probabilistic")]
    Probabilistic,
    #[serde(rename = "hierarchical")]
    Hierarchical,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::McDropout => "mc-dropout",
            SamplerKind::FullyBayesian => "fully-bayesian",
            SamplerKind::Probabilistic => "probabilistic",
            SamplerKind::Hierarchical => "hierarchical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mc-dropout" => Some(SamplerKind::McDropout),
            "fully-bayesian" => Some(SamplerKind::FullyBayesian),
            "probabilistic" => Some(SamplerKind::Probabilistic),
            "hierarchical" => Some(SamplerKind::Hierarchical),
            _ => None,
        }
    }

    pub fn all() -> [SamplerKind; 4] {
        [
            SamplerKind::McDropout,
            SamplerKind::FullyBayesian,
            SamplerKind::Probabilistic,
            SamplerKind::Hierarchical,
        ]
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sampler configuration. Defaults follow the reference setup: N = 10,
/// dropout rate 0.2, reparameterization noise std 0.1, latent dimension 12,
/// 3 scales, boundary band 2 voxels.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub n_samples: usize,
    pub seed: u64,
    pub dropout_rate: f64,
    pub noise_std: f64,
    pub latent_dim: usize,
    /// Scale of the latent draw; 0 makes Probabilistic/Hierarchical samples
    /// degenerate (all identical).
    pub latent_std: f64,
    pub n_scales: usize,
    pub boundary_band_vox: f64,
    /// Logit slope per mm used by the FullyBayesian field.
    pub sharpness: f64,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind) -> Self {
        Self {
            kind,
            n_samples: 10,
            seed: 0,
            dropout_rate: 0.2,
            noise_std: 0.1,
            latent_dim: 12,
            latent_std: 1.0,
            n_scales: 3,
            boundary_band_vox: 2.0,
            sharpness: 0.4,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_samples must be at least 2, got {}",
                self.n_samples
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout_rate must be in [0,1), got {}",
                self.dropout_rate
            )));
        }
        if !(self.noise_std > 0.0) {
            return Err(Error::InvalidConfig(format!("noise_std must be positive, got {}", self.noise_std)));
        }
        if self.latent_dim < 1 {
            return Err(Error::InvalidConfig("latent_dim must be at least 1".into()));
        }
        if self.n_scales < 1 {
            return Err(Error::InvalidConfig("n_scales must be at least 1".into()));
        }
        if !(self.latent_std >= 0.0) {
            return Err(Error::InvalidConfig(format!("latent_std must be nonnegative, got {}", self.latent_std)));
        }
        if !(self.boundary_band_vox > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "boundary_band_vox must be positive, got {}",
                self.boundary_band_vox
            )));
        }
        if !(self.sharpness > 0.0) {
            return Err(Error::InvalidConfig(format!("sharpness must be positive, got {}", self.sharpness)));
        }
        Ok(())
    }
}

/// Stream tag separating per-sample RNG streams from other derived streams.
const STREAM_SAMPLE: u64 = 0x5A4D;

/// Draws one realization `g = mu + eps * sigma` with `eps ~ N(0, noise_std)`
/// i.i.d. per voxel.
pub fn reparam_draw(field: &LogitField, noise_std: f64, seed: u64) -> Result<Vec<f64>> {
    if !(noise_std > 0.0) {
        return Err(Error::InvalidConfig(format!("noise_std must be positive, got {noise_std}")));
    }
    let normal = Normal::new(0.0, noise_std).expect("positive std");
    let mut rng = rng_from(seed, &[]);
    Ok(field
        .mu()
        .iter()
        .zip(field.sigma())
        .map(|(&mu, &sigma)| mu + normal.sample(&mut rng) * sigma)
        .collect())
}

/// Thresholds one reparameterized draw into a label volume: a voxel is
/// labeled organ iff `g > 0`.
pub fn sample_reparam(field: &LogitField, noise_std: f64, seed: u64) -> Result<LabelVolume> {
    let g = reparam_draw(field, noise_std, seed)?;
    let organ = field.organ_label();
    let labels: Vec<u8> = g.iter().map(|&v| if v > 0.0 { organ } else { 0 }).collect();
    LabelVolume::new(field.dims(), field.spacing_mm(), labels)
}

fn mc_dropout_sample(phantom: &Phantom, dist_mm: &[f64], band: f64, rate: f64, seed: u64) -> LabelVolume {
    let truth = phantom.truth();
    let organ = phantom.organ_label();
    let mut labels = truth.labels().to_vec();
    let mut rng = rng_from(seed, &[]);
    for (idx, &d) in dist_mm.iter().enumerate() {
        if d.abs() <= band && rng.random::<f64>() < rate {
            labels[idx] = if labels[idx] == organ { 0 } else { organ };
        }
    }
    LabelVolume::new(truth.dims(), truth.spacing_mm(), labels).expect("same grid")
}

/// Fixed latent-to-shape map: the first 12 latent dimensions have a concrete
/// geometric meaning (3 shift, 3 log-scale, 6 bulge amplitudes in normalized
/// ellipsoid coordinates); further dimensions are inert.
const SHIFT_GAIN: f64 = 0.03;
const SCALE_GAIN: f64 = 0.03;
const BULGE_GAIN: f64 = 0.04;
const JITTER_GAIN: f64 = 0.015;
const BULGE_WIDTH: f64 = 0.45;

/// Six fixed bulge directions: the positive and negative coordinate axes.
const BULGE_DIRS: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
];

struct ShapePerturbation {
    shift: [f64; 3],
    inv_scale: [f64; 3],
    bulge_amps: [f64; 6],
    use_bulges: bool,
    jitter_amp: f64,
}

impl ShapePerturbation {
    fn from_latent(z: &[f64], n_scales: usize, latent_std: f64) -> Self {
        let comp = |i: usize| z.get(i).copied().unwrap_or(0.0);
        let shift = [SHIFT_GAIN * comp(0), SHIFT_GAIN * comp(1), SHIFT_GAIN * comp(2)];
        let inv_scale = [
            (-SCALE_GAIN * comp(3)).exp(),
            (-SCALE_GAIN * comp(4)).exp(),
            (-SCALE_GAIN * comp(5)).exp(),
        ];
        let use_bulges = n_scales >= 2;
        let mut bulge_amps = [0.0; 6];
        if use_bulges {
            for (j, amp) in bulge_amps.iter_mut().enumerate() {
                *amp = BULGE_GAIN * comp(6 + j);
            }
        }
        let jitter_amp = if n_scales >= 3 { JITTER_GAIN * latent_std } else { 0.0 };
        Self { shift, inv_scale, bulge_amps, use_bulges, jitter_amp }
    }

    /// Surface radius multiplier for a unit direction in normalized coords.
    fn rho(&self, dir: [f64; 3]) -> f64 {
        if !self.use_bulges {
            return 1.0;
        }
        let mut rho = 1.0;
        for (u, amp) in BULGE_DIRS.iter().zip(&self.bulge_amps) {
            if *amp == 0.0 {
                continue;
            }
            let d2 = (dir[0] - u[0]).powi(2) + (dir[1] - u[1]).powi(2) + (dir[2] - u[2]).powi(2);
            rho += amp * (-d2 / (2.0 * BULGE_WIDTH * BULGE_WIDTH)).exp();
        }
        rho
    }
}

fn latent_shape_sample(phantom: &Phantom, cfg: &SamplerConfig, n_scales: usize, seed: u64) -> LabelVolume {
    let mut rng = rng_from(seed, &[]);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let z: Vec<f64> = (0..cfg.latent_dim)
        .map(|_| cfg.latent_std * unit.sample(&mut rng))
        .collect();
    let pert = ShapePerturbation::from_latent(&z, n_scales, cfg.latent_std);

    let truth = phantom.truth();
    let (nz, ny, nx) = truth.dims();
    let (cz, cy, cx) = phantom.center_vox();
    let (rz, ry, rx) = phantom.radii_vox();
    let organ = phantom.organ_label();
    // jitter is local: it only applies within this band around the perturbed surface
    let jitter_band = 3.0 * pert.jitter_amp;
    let max_bulge: f64 = pert.bulge_amps.iter().fold(0.0, |m, a| m.max(a.abs()));

    let mut labels = vec![0u8; nz * ny * nx];
    let mut idx = 0;
    for z_i in 0..nz {
        let vz = ((z_i as f64 - cz) / rz - pert.shift[0]) * pert.inv_scale[0];
        for y_i in 0..ny {
            let vy = ((y_i as f64 - cy) / ry - pert.shift[1]) * pert.inv_scale[1];
            for x_i in 0..nx {
                let vx = ((x_i as f64 - cx) / rx - pert.shift[2]) * pert.inv_scale[2];
                let norm = (vz * vz + vy * vy + vx * vx).sqrt();
                let fg = if norm <= (1.0 - max_bulge - jitter_band).max(0.0) {
                    true
                } else if norm >= 1.0 + max_bulge + jitter_band {
                    false
                } else {
                    let dir = [vz / norm, vy / norm, vx / norm];
                    let mut threshold = pert.rho(dir);
                    if pert.jitter_amp > 0.0 && (norm - threshold).abs() <= jitter_band {
                        threshold += pert.jitter_amp * unit.sample(&mut rng);
                    }
                    norm <= threshold
                };
                if fg {
                    labels[idx] = organ;
                }
                idx += 1;
            }
        }
    }
    LabelVolume::new(truth.dims(), truth.spacing_mm(), labels).expect("same grid")
}

/// Generates the N Monte-Carlo segmentation samples for one subject.
pub fn sample_stack(subject_id: &str, phantom: &Phantom, cfg: &SamplerConfig) -> Result<SampleStack> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.n_samples)
        .map(|i| derive_seed(cfg.seed, &[STREAM_SAMPLE, i as u64]))
        .collect();

    let samples: Vec<LabelVolume> = match cfg.kind {
        SamplerKind::McDropout => {
            let dist = distance_field_mm(phantom);
            let band = band_mm(phantom.spacing_mm(), cfg.boundary_band_vox);
            seeds
                .par_iter()
                .map(|&s| mc_dropout_sample(phantom, &dist, band, cfg.dropout_rate, s))
                .collect()
        }
        SamplerKind::FullyBayesian => {
            let field = phantom_logits(phantom, cfg.sharpness, cfg.boundary_band_vox)?;
            let drawn: Result<Vec<LabelVolume>> = seeds
                .par_iter()
                .map(|&s| sample_reparam(&field, cfg.noise_std, s))
                .collect();
            drawn?
        }
        SamplerKind::Probabilistic => seeds
            .par_iter()
            .map(|&s| latent_shape_sample(phantom, cfg, 1, s))
            .collect(),
        SamplerKind::Hierarchical => seeds
            .par_iter()
            .map(|&s| latent_shape_sample(phantom, cfg, cfg.n_scales.min(3), s))
            .collect(),
    };
    SampleStack::new(subject_id, phantom.organ_label(), samples)
}
