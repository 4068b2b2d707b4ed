//! `biouncert group-analysis`: beta_4 per model variant against a reference.

use std::path::PathBuf;

use anyhow::Context;
use serde::Deserialize;

use biouncert::cohort::read_augmented_cohort_csv;
use biouncert::eval::group_study;
use biouncert::eval::GroupStudyOptions;
use biouncert::stats::GroupVariant;

use super::{emit_report, load_config, parse_format, parse_kinds, pick, usage, CmdResult};

#[derive(clap::Args)]
pub struct Args {
    /// Augmented cohort CSV (the output of `confidence`)
    #[arg(long)]
    cohort: PathBuf,
    /// Planted-truth JSON from `simulate`; supplies the reference beta_4
    /// and the manual column
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Explicit reference beta_4 in mm^3 (overrides --truth)
    #[arg(long)]
    reference_beta4: Option<f64>,
    /// Comma-separated variants [default: base,variable,instance]
    #[arg(long)]
    variants: Option<String>,
    /// Comma-separated confidence kinds [default: iou,invcv]
    #[arg(long)]
    kinds: Option<String>,
    /// Fit on raw columns instead of z-scored age/BMI/volume
    #[arg(long)]
    no_standardize: bool,
    /// Row label in the report [default: cohort]
    #[arg(long)]
    method: Option<String>,
    /// Output format: csv, json, or md [default: md]
    #[arg(long)]
    format: Option<String>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    truth: Option<PathBuf>,
    reference_beta4: Option<f64>,
    variants: Option<String>,
    kinds: Option<String>,
    no_standardize: Option<bool>,
    method: Option<String>,
    format: Option<String>,
    out: Option<PathBuf>,
}

fn parse_group_variants(text: &str) -> Result<Vec<GroupVariant>, super::CmdError> {
    let variants: Result<Vec<_>, _> = text
        .split(',')
        .map(|v| {
            GroupVariant::parse(v.trim())
                .ok_or_else(|| usage(format!("unknown group variant {v:?}; use base, variable, or instance")))
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

    let variants = parse_group_variants(&pick(
        args.variants,
        file.variants,
        "base,variable,instance".to_string(),
    ))?;
    let kinds = parse_kinds(&pick(args.kinds, file.kinds, "iou,invcv".to_string()))?;
    let format = parse_format(&pick(args.format, file.format, "md".to_string()))?;
    let method = pick(args.method, file.method, "cohort".to_string());
    let standardize = !(args.no_standardize || file.no_standardize.unwrap_or(false));
    let out = args.out.or(file.out);

    let records = read_augmented_cohort_csv(&args.cohort)
        .with_context(|| format!("cannot read cohort {}", args.cohort.display()))?;

    let truth_path = args.truth.or(file.truth);
    let reference_flag = args.reference_beta4.or(file.reference_beta4);
    let (reference_beta4, manual_volumes) = match (reference_flag, &truth_path) {
        (Some(explicit), _) => (explicit, None),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read truth {}", path.display()))?;
            let truth: biouncert::simulate::PlantedTruth =
                serde_json::from_str(&text).context("invalid truth json")?;
            let beta4 = truth
                .beta
                .get("beta_4")
                .copied()
                .ok_or_else(|| usage("truth json lacks beta_4"))?;
            (beta4, Some(truth.true_volumes_mm3))
        }
        (None, None) => {
            return Err(usage("need --truth or --reference-beta4 to score the coefficients against"))
        }
    };

    let opts = GroupStudyOptions {
        variants,
        kinds,
        standardize,
        reference_beta4_mm3: reference_beta4,
        manual_volumes,
    };
    let study = group_study(&records, &method, &opts)?;
    if study.max_condition_number > 1e8 {
        eprintln!(
            "warning: design condition number {:.3e} exceeds 1e8; coefficients may be unstable",
            study.max_condition_number
        );
    }
    emit_report(&study.report, format, &out)
}
