//! `biouncert confidence`: reduce sample stacks to per-subject confidence
//! measures and augment the cohort CSV.

use std::path::PathBuf;

use anyhow::Context;
use rayon::prelude::*;
use serde::Deserialize;

use biouncert::cohort::{
    read_cohort_csv, write_augmented_cohort_csv, AugmentedRecord, ConfidenceKind,
};
use biouncert::confidence::{confidence_report, uncertainty_map};
use biouncert::manifest::{load_stack, read_manifest};
use biouncert::volume::write_float_volume;

use super::{check_dir_exists, load_config, pick, usage, with_jobs, CmdOutcome, CmdResult};

#[derive(clap::Args)]
pub struct Args {
    /// Dataset directory holding manifest.json and cohort.csv
    #[arg(long)]
    dir: PathBuf,
    /// Cohort CSV to augment [default: <dir>/cohort.csv]
    #[arg(long)]
    cohort: Option<PathBuf>,
    /// Output CSV [default: overwrite the input cohort]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Which measure fills the confidence column: iou or invcv
    /// [default: iou]
    #[arg(long)]
    kind: Option<String>,
    /// Also write one bfv1 uncertainty map per subject under
    /// <dir>/uncertainty/
    #[arg(long)]
    emit_uncertainty: bool,
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
    cohort: Option<PathBuf>,
    out: Option<PathBuf>,
    kind: Option<String>,
    emit_uncertainty: Option<bool>,
    jobs: Option<usize>,
}

pub fn run(args: Args) -> CmdResult {
    let file: FileConfig = load_config(&args.config)?;
    check_dir_exists(&args.dir)?;

    let kind_name = pick(args.kind, file.kind, "iou".to_string());
    let kind = ConfidenceKind::parse(&kind_name)
        .ok_or_else(|| usage(format!("unknown confidence kind {kind_name:?}")))?;
    let emit_maps = args.emit_uncertainty || file.emit_uncertainty.unwrap_or(false);
    let jobs = pick(args.jobs, file.jobs, 0);

    let cohort_path = args
        .cohort
        .or(file.cohort)
        .unwrap_or_else(|| args.dir.join(biouncert::manifest::COHORT_FILE));
    let out_path = args.out.or(file.out).unwrap_or_else(|| cohort_path.clone());

    let manifest = read_manifest(&args.dir)?;
    let cohort = read_cohort_csv(&cohort_path)
        .with_context(|| format!("cannot read cohort {}", cohort_path.display()))?;
    if cohort.len() != manifest.subjects.len() {
        return Err(super::CmdError::Run(anyhow::anyhow!(
            "cohort has {} rows but manifest lists {} subjects",
            cohort.len(),
            manifest.subjects.len()
        )));
    }

    let map_dir = args.dir.join("uncertainty");
    if emit_maps {
        std::fs::create_dir_all(&map_dir).context("cannot create uncertainty dir")?;
    }

    let dir = args.dir.clone();
    let augmented: Result<Vec<AugmentedRecord>, biouncert::Error> = with_jobs(jobs, || {
        cohort
            .records()
            .par_iter()
            .map(|record| {
                let entry = manifest
                    .subjects
                    .iter()
                    .find(|s| s.id == record.subject_id)
                    .ok_or_else(|| {
                        biouncert::Error::SubjectIdMismatch(format!(
                            "cohort row {:?} missing from manifest",
                            record.subject_id
                        ))
                    })?;
                let stack = load_stack(&dir, &manifest, entry)?;
                let report = confidence_report(&stack)?;
                if emit_maps {
                    let map = uncertainty_map(&stack);
                    write_float_volume(&map, map_dir.join(format!("{}.bfv", entry.id)))?;
                }
                let confidence = match kind {
                    ConfidenceKind::Iou => report.iou,
                    ConfidenceKind::InvCv => report.inv_cv,
                };
                let mut subject = record.clone();
                subject.volume_mm3 = report.consensus_volume_mm3;
                subject.confidence = confidence;
                subject.confidence_kind = kind;
                Ok(AugmentedRecord {
                    subject,
                    iou: report.iou,
                    cv: report.cv,
                    inv_cv: report.inv_cv,
                    mean_volume_mm3: report.mean_volume_mm3,
                })
            })
            .collect()
    })?;
    let augmented = augmented?;

    write_augmented_cohort_csv(&augmented, &out_path)
        .with_context(|| format!("cannot write {}", out_path.display()))?;
    println!(
        "augmented {} subjects with iou/cv/inv_cv -> {}",
        augmented.len(),
        out_path.display()
    );
    Ok(CmdOutcome::Success)
}
