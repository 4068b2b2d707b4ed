//! `biouncert evaluate`: run the full study battery on a simulated dataset.

use std::path::PathBuf;

use anyhow::Context;
use rayon::prelude::*;
use serde::Deserialize;

use biouncert::cohort::{read_cohort_csv, AugmentedRecord, ConfidenceKind};
use biouncert::confidence::confidence_report;
use biouncert::eval::{
    classification_study, dice_report, dice_study, group_study, render_report,
    ClassificationStudyOptions, GroupStudyOptions, ReportFormat, SplitSpec,
};
use biouncert::manifest::{load_stack, load_truth_mask, read_manifest, read_planted_truth};
use biouncert::volume::{LabelVolume, SampleStack};

use super::{
    check_dir_exists, emit, load_config, parse_format, parse_kinds, pick, resolve_seed, with_jobs,
    CmdOutcome, CmdResult,
};

#[derive(clap::Args)]
pub struct Args {
    /// Dataset directory written by `simulate`
    #[arg(long)]
    dir: PathBuf,
    /// Number of classification splits [default: 1000]
    #[arg(long)]
    repeats: Option<usize>,
    /// Split seed [default: BIOUNCERT_SEED or 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated confidence kinds [default: iou,invcv]
    #[arg(long)]
    kinds: Option<String>,
    /// Output format: csv, json, or md [default: md]
    #[arg(long)]
    format: Option<String>,
    /// Write the combined report here instead of stdout
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
    repeats: Option<usize>,
    seed: Option<u64>,
    kinds: Option<String>,
    format: Option<String>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
}

pub fn run(args: Args) -> CmdResult {
    let file: FileConfig = load_config(&args.config)?;
    check_dir_exists(&args.dir)?;

    let kinds = parse_kinds(&pick(args.kinds, file.kinds, "iou,invcv".to_string()))?;
    let format = parse_format(&pick(args.format, file.format, "md".to_string()))?;
    let seed = resolve_seed(args.seed, file.seed)?;
    let repeats = pick(args.repeats, file.repeats, 1000);
    let jobs = pick(args.jobs, file.jobs, 0);
    let out = args.out.or(file.out);

    let manifest = read_manifest(&args.dir)?;
    let truth = read_planted_truth(&args.dir)?;
    let cohort = read_cohort_csv(args.dir.join(biouncert::manifest::COHORT_FILE))
        .context("cannot read cohort csv")?;
    let method = manifest.sampler.to_string();

    let dir = args.dir.clone();
    let (sections, failed) = with_jobs(jobs, || -> Result<_, anyhow::Error> {
        // load stacks and truth masks, compute confidence in memory
        let loaded: Result<Vec<(SampleStack, LabelVolume)>, biouncert::Error> = manifest
            .subjects
            .par_iter()
            .map(|entry| Ok((load_stack(&dir, &manifest, entry)?, load_truth_mask(&dir, entry)?)))
            .collect();
        let loaded = loaded?;
        let stacks: Vec<&SampleStack> = loaded.iter().map(|(s, _)| s).collect();
        let truths: Vec<(String, LabelVolume)> = loaded
            .iter()
            .map(|(s, t)| (s.subject_id().to_string(), t.clone()))
            .collect();

        let augmented: Result<Vec<AugmentedRecord>, biouncert::Error> = cohort
            .records()
            .par_iter()
            .map(|record| {
                let stack = stacks
                    .iter()
                    .find(|s| s.subject_id() == record.subject_id)
                    .ok_or_else(|| {
                        biouncert::Error::SubjectIdMismatch(format!(
                            "cohort row {:?} missing from manifest",
                            record.subject_id
                        ))
                    })?;
                let report = confidence_report(stack)?;
                let mut subject = record.clone();
                subject.volume_mm3 = report.consensus_volume_mm3;
                subject.confidence = report.iou;
                subject.confidence_kind = ConfidenceKind::Iou;
                Ok(AugmentedRecord {
                    subject,
                    iou: report.iou,
                    cv: report.cv,
                    inv_cv: report.inv_cv,
                    mean_volume_mm3: report.mean_volume_mm3,
                })
            })
            .collect();
        let augmented = augmented?;

        let owned_stacks: Vec<SampleStack> = loaded.iter().map(|(s, _)| s.clone()).collect();
        let dice = dice_study(&owned_stacks, &truths)?;
        let dice_section = dice_report(&[(method.clone(), dice)])?;

        let beta4 = truth
            .beta
            .get("beta_4")
            .copied()
            .ok_or_else(|| anyhow::anyhow!("truth json lacks beta_4"))?;
        let group_opts = GroupStudyOptions {
            kinds: kinds.clone(),
            reference_beta4_mm3: beta4,
            manual_volumes: Some(truth.true_volumes_mm3.clone()),
            ..Default::default()
        };
        let group_section = group_study(&augmented, &method, &group_opts)?;

        let clf_opts = ClassificationStudyOptions {
            kinds: kinds.clone(),
            split: SplitSpec { n_repeats: repeats, seed, ..Default::default() },
            manual_volumes: Some(truth.true_volumes_mm3.clone()),
            ..Default::default()
        };
        let clf_section = classification_study(&augmented, &method, &clf_opts)?;

        let failed = dice_section.has_failures()
            || group_section.report.has_failures()
            || clf_section.has_failures();
        Ok((vec![dice_section, group_section.report, clf_section], failed))
    })??;

    let text = match format {
        ReportFormat::Json => {
            let labels = ["dice", "group", "classification"];
            let map: serde_json::Map<String, serde_json::Value> = labels
                .iter()
                .zip(&sections)
                .map(|(label, report)| {
                    (label.to_string(), serde_json::to_value(report).expect("report serializes"))
                })
                .collect();
            serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("sections serialize")
                + "\n"
        }
        _ => {
            let mut combined = String::new();
            for section in &sections {
                combined.push_str(&render_report(section, format));
                combined.push('\n');
            }
            combined
        }
    };
    emit(&text, &out)?;
    if failed {
        Ok(CmdOutcome::CellsFailed)
    } else {
        Ok(CmdOutcome::Success)
    }
}
