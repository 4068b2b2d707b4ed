//! `biouncert simulate`: write a synthetic cohort to disk.

use std::path::PathBuf;

use anyhow::Context;
use serde::Deserialize;

use biouncert::manifest::write_dataset;
use biouncert::sampler::{SamplerConfig, SamplerKind};
use biouncert::simulate::{simulate_cohort, EffectSpec};

use super::{load_config, pick, resolve_seed, usage, with_jobs, CmdError, CmdOutcome, CmdResult};

#[derive(clap::Args)]
pub struct Args {
    /// Output directory (created if absent)
    #[arg(long)]
    out: PathBuf,
    /// Number of subjects [default: 20]
    #[arg(long)]
    subjects: Option<usize>,
    /// Fraction of diabetic subjects [default: 0.3539 = 109/308]
    #[arg(long)]
    diabetic_fraction: Option<f64>,
    /// Sampler: mc-dropout, fully-bayesian, probabilistic, hierarchical
    #[arg(long)]
    sampler: Option<String>,
    /// Samples per subject (N) [default: 10]
    #[arg(long)]
    samples: Option<usize>,
    /// Base seed [default: BIOUNCERT_SEED or 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Effect preset: paper (53x256x144 grid) or desk (20x28x28 grid)
    /// [default: paper]
    #[arg(long)]
    effect: Option<String>,
    /// JSON file with a full effect spec (overrides --effect)
    #[arg(long)]
    effect_json: Option<PathBuf>,
    /// Grid dims as nz,ny,nx (overrides the effect spec)
    #[arg(long)]
    dims: Option<String>,
    /// Voxel spacing in mm as sz,sy,sx (overrides the effect spec)
    #[arg(long)]
    spacing: Option<String>,
    /// Dropout rate for mc-dropout [default: 0.2]
    #[arg(long)]
    dropout_rate: Option<f64>,
    /// Reparameterization noise std [default: 0.1]
    #[arg(long)]
    noise_std: Option<f64>,
    /// Latent dimension [default: 12]
    #[arg(long)]
    latent_dim: Option<usize>,
    /// Latent scale; 0 collapses latent samplers [default: 1.0]
    #[arg(long)]
    latent_std: Option<f64>,
    /// Scales composed by the hierarchical sampler [default: 3]
    #[arg(long)]
    n_scales: Option<usize>,
    /// Boundary band in voxels [default: 2.0]
    #[arg(long)]
    boundary_band: Option<f64>,
    /// Logit slope per mm for the fully-bayesian field [default: 0.4]
    #[arg(long)]
    sharpness: Option<f64>,
    /// Worker threads; 0 = all cores [default: 0]
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    subjects: Option<usize>,
    diabetic_fraction: Option<f64>,
    sampler: Option<String>,
    samples: Option<usize>,
    seed: Option<u64>,
    effect: Option<String>,
    effect_spec: Option<EffectSpec>,
    dims: Option<[usize; 3]>,
    spacing: Option<[f64; 3]>,
    dropout_rate: Option<f64>,
    noise_std: Option<f64>,
    latent_dim: Option<usize>,
    latent_std: Option<f64>,
    n_scales: Option<usize>,
    boundary_band: Option<f64>,
    sharpness: Option<f64>,
    jobs: Option<usize>,
}

fn parse_triple<T: std::str::FromStr + Copy>(text: &str, what: &str) -> Result<[T; 3], CmdError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(usage(format!("{what} needs three comma-separated values, got {text:?}")));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| usage(format!("cannot parse {p:?} in {what}")))?,
        );
    }
    Ok([out[0], out[1], out[2]])
}

pub fn run(args: Args) -> CmdResult {
    let file: FileConfig = load_config(&args.config)?;

    let subjects = pick(args.subjects, file.subjects, 20);
    let diabetic_fraction = pick(args.diabetic_fraction, file.diabetic_fraction, 109.0 / 308.0);
    let seed = resolve_seed(args.seed, file.seed)?;
    let jobs = pick(args.jobs, file.jobs, 0);

    let sampler_name = pick(args.sampler, file.sampler, "mc-dropout".to_string());
    let kind = SamplerKind::parse(&sampler_name)
        .ok_or_else(|| usage(format!("unknown sampler {sampler_name:?}")))?;

    let mut effect = if let Some(path) = &args.effect_json {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid effect spec: {e}")))?
    } else if let Some(spec) = file.effect_spec {
        spec
    } else {
        match pick(args.effect, file.effect, "paper".to_string()).as_str() {
            "paper" => EffectSpec::default(),
            "desk" => EffectSpec::desk_scale(),
            other => return Err(usage(format!("unknown effect preset {other:?}; use paper or desk"))),
        }
    };
    if let Some(dims) = &args.dims {
        let [nz, ny, nx] = parse_triple::<usize>(dims, "--dims")?;
        effect.dims = (nz, ny, nx);
    } else if let Some([nz, ny, nx]) = file.dims {
        effect.dims = (nz, ny, nx);
    }
    if let Some(spacing) = &args.spacing {
        let [sz, sy, sx] = parse_triple::<f64>(spacing, "--spacing")?;
        effect.spacing_mm = (sz, sy, sx);
    } else if let Some([sz, sy, sx]) = file.spacing {
        effect.spacing_mm = (sz, sy, sx);
    }

    let cfg = SamplerConfig {
        kind,
        n_samples: pick(args.samples, file.samples, 10),
        seed,
        dropout_rate: pick(args.dropout_rate, file.dropout_rate, 0.2),
        noise_std: pick(args.noise_std, file.noise_std, 0.1),
        latent_dim: pick(args.latent_dim, file.latent_dim, 12),
        latent_std: pick(args.latent_std, file.latent_std, 1.0),
        n_scales: pick(args.n_scales, file.n_scales, 3),
        boundary_band_vox: pick(args.boundary_band, file.boundary_band, 2.0),
        sharpness: pick(args.sharpness, file.sharpness, 0.4),
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let sim = with_jobs(jobs, || simulate_cohort(subjects, diabetic_fraction, &effect, &cfg, seed))?
        .map_err(|e| match e {
            biouncert::Error::InvalidConfig(msg) => usage(msg),
            other => CmdError::Run(other.into()),
        })?;
    write_dataset(&args.out, &sim, &cfg, seed)
        .with_context(|| format!("cannot write dataset to {}", args.out.display()))?;
    println!(
        "wrote {} subjects x {} samples ({}) to {}",
        subjects,
        cfg.n_samples,
        kind,
        args.out.display()
    );
    Ok(CmdOutcome::Success)
}
