//! `biouncert classify`: repeated-random-split diabetes classification.

use std::path::PathBuf;

use anyhow::Context;
use serde::Deserialize;

use biouncert::cohort::read_augmented_cohort_csv;
use biouncert::eval::{classification_study, ClassificationStudyOptions, SplitSpec};
use biouncert::stats::ClfVariant;

use super::{
    emit_report, load_config, parse_format, parse_kinds, pick, resolve_seed, usage, with_jobs,
    CmdResult,
};

#[derive(clap::Args)]
pub struct Args {
    /// Augmented cohort CSV (the output of `confidence`)
    #[arg(long)]
    cohort: PathBuf,
    /// Comma-separated variants [default: base,variable,interaction,instance]
    #[arg(long)]
    variants: Option<String>,
    /// Comma-separated confidence kinds [default: iou,invcv]
    #[arg(long)]
    kinds: Option<String>,
    /// Number of random splits [default: 1000]
    #[arg(long)]
    repeats: Option<usize>,
    /// Training fraction per split [default: 0.5]
    #[arg(long)]
    train_frac: Option<f64>,
    /// Balance the diabetic fraction across train and test (the default)
    #[arg(long)]
    stratified: bool,
    /// Draw splits without balancing the diabetic fraction
    #[arg(long, conflicts_with = "stratified")]
    no_stratified: bool,
    /// Split seed [default: BIOUNCERT_SEED or 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Drop age/sex/BMI and classify from volume (and confidence) alone
    #[arg(long)]
    volume_only: bool,
    /// Fit on raw columns instead of z-scored age/BMI/volume
    #[arg(long)]
    no_standardize: bool,
    /// Planted-truth JSON; adds a manual column fit on true volumes
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Row label in the report [default: cohort]
    #[arg(long)]
    method: Option<String>,
    /// Output format: csv, json, or md [default: md]
    #[arg(long)]
    format: Option<String>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
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
    variants: Option<String>,
    kinds: Option<String>,
    repeats: Option<usize>,
    train_frac: Option<f64>,
    no_stratified: Option<bool>,
    seed: Option<u64>,
    volume_only: Option<bool>,
    no_standardize: Option<bool>,
    truth: Option<PathBuf>,
    method: Option<String>,
    format: Option<String>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
}

fn parse_clf_variants(text: &str) -> Result<Vec<ClfVariant>, super::CmdError> {
    let variants: Result<Vec<_>, _> = text
        .split(',')
        .map(|v| {
            ClfVariant::parse(v.trim()).ok_or_else(|| {
                usage(format!(
                    "unknown classification variant {v:?}; use base, variable, interaction, or instance"
                ))
            })
        })
        .collect();
    let variants = variants?;
    if variants.is_empty() {
        return Err(usage("at least one variant required"));
    }
    Ok(variants)
}

pub fn run(args: Args) -> CmdResult {
    let file: FileConfig = load_config(&args.config)?;

    let variants = parse_clf_variants(&pick(
        args.variants,
        file.variants,
        "base,variable,interaction,instance".to_string(),
    ))?;
    let kinds = parse_kinds(&pick(args.kinds, file.kinds, "iou,invcv".to_string()))?;
    let format = parse_format(&pick(args.format, file.format, "md".to_string()))?;
    let method = pick(args.method, file.method, "cohort".to_string());
    let seed = resolve_seed(args.seed, file.seed)?;
    let jobs = pick(args.jobs, file.jobs, 0);
    let out = args.out.or(file.out);

    let split = SplitSpec {
        n_repeats: pick(args.repeats, file.repeats, 1000),
        train_fraction: pick(args.train_frac, file.train_frac, 0.5),
        stratified: !(args.no_stratified || file.no_stratified.unwrap_or(false)),
        seed,
    };
    split.validate().map_err(|e| usage(e.to_string()))?;

    let records = read_augmented_cohort_csv(&args.cohort)
        .with_context(|| format!("cannot read cohort {}", args.cohort.display()))?;

    let manual_volumes = match args.truth.or(file.truth) {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("cannot read truth {}", path.display()))?;
            let truth: biouncert::simulate::PlantedTruth =
                serde_json::from_str(&text).context("invalid truth json")?;
            Some(truth.true_volumes_mm3)
        }
    };

    let opts = ClassificationStudyOptions {
        variants,
        kinds,
        split,
        include_covariates: !(args.volume_only || file.volume_only.unwrap_or(false)),
        standardize: !(args.no_standardize || file.no_standardize.unwrap_or(false)),
        manual_volumes,
        logistic: Default::default(),
    };
    let report = with_jobs(jobs, || classification_study(&records, &method, &opts))??;
    emit_report(&report, format, &out)
}
