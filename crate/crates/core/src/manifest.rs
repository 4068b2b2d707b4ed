//! On-disk layout of a simulated dataset: one `blv1` file per sample plus a
//! JSON manifest, the planted-truth JSON, and the cohort CSV skeleton.
//!
//! ```text
//! out/
//!   manifest.json
//!   cohort.csv
//!   truth.json
//!   stacks/<subject>/truth.blv
//!   stacks/<subject>/sample_000.blv ...
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort::write_cohort_csv;
use crate::error::{Error, Result};
use crate::sampler::{SamplerConfig, SamplerKind};
use crate::simulate::{PlantedTruth, SimulatedCohort};
use crate::volume::{read_label_volume, write_label_volume, LabelVolume, SampleStack};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const COHORT_FILE: &str = "cohort.csv";
pub const TRUTH_FILE: &str = "truth.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectEntry {
    pub id: String,
    pub truth: String,
    pub samples: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StackManifest {
    pub sampler: SamplerKind,
    pub n_samples: usize,
    pub seed: u64,
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub organ_label: u8,
    pub subjects: Vec<SubjectEntry>,
}

fn subject_dir(id: &str) -> String {
    format!("stacks/{id}")
}

/// Writes stacks, truth masks, manifest, planted-truth JSON, and the cohort
/// CSV skeleton under `dir`.
pub fn write_dataset(dir: impl AsRef<Path>, sim: &SimulatedCohort, cfg: &SamplerConfig, seed: u64) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut subjects = Vec::with_capacity(sim.stacks.len());
    for (stack, phantom) in sim.stacks.iter().zip(&sim.phantoms) {
        let id = stack.subject_id();
        let rel = subject_dir(id);
        fs::create_dir_all(dir.join(&rel))?;
        let truth_rel = format!("{rel}/truth.blv");
        write_label_volume(phantom.truth(), dir.join(&truth_rel))?;
        let mut samples = Vec::with_capacity(stack.n_samples());
        for (i, sample) in stack.samples().iter().enumerate() {
            let sample_rel = format!("{rel}/sample_{i:03}.blv");
            write_label_volume(sample, dir.join(&sample_rel))?;
            samples.push(sample_rel);
        }
        subjects.push(SubjectEntry { id: id.to_string(), truth: truth_rel, samples });
    }
    let (nz, ny, nx) = sim.stacks[0].dims();
    let (sz, sy, sx) = sim.stacks[0].spacing_mm();
    let manifest = StackManifest {
        sampler: cfg.kind,
        n_samples: cfg.n_samples,
        seed,
        dims: [nz, ny, nx],
        spacing_mm: [sz, sy, sx],
        organ_label: sim.stacks[0].organ_label(),
        subjects,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    fs::write(dir.join(TRUTH_FILE), serde_json::to_string_pretty(&sim.truth)? + "\n")?;
    write_cohort_csv(&sim.cohort, dir.join(COHORT_FILE))?;
    Ok(())
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<StackManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
    let manifest: StackManifest = serde_json::from_str(&text)?;
    if manifest.subjects.is_empty() {
        return Err(Error::Manifest("manifest lists no subjects".into()));
    }
    if manifest.n_samples < 2 {
        return Err(Error::Manifest(format!(
            "manifest declares {} samples per subject; need at least 2",
            manifest.n_samples
        )));
    }
    Ok(manifest)
}

pub fn read_planted_truth(dir: impl AsRef<Path>) -> Result<PlantedTruth> {
    let path = dir.as_ref().join(TRUTH_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loads one subject's sample stack from its manifest entry.
pub fn load_stack(dir: impl AsRef<Path>, manifest: &StackManifest, entry: &SubjectEntry) -> Result<SampleStack> {
    if entry.samples.len() != manifest.n_samples {
        return Err(Error::Manifest(format!(
            "subject {:?} lists {} samples, manifest declares {}",
            entry.id,
            entry.samples.len(),
            manifest.n_samples
        )));
    }
    let samples: Result<Vec<LabelVolume>> = entry
        .samples
        .iter()
        .map(|rel| {
            let path: PathBuf = dir.as_ref().join(rel);
            read_label_volume(&path)
                .map_err(|e| Error::Manifest(format!("sample {}: {e}", path.display())))
        })
        .collect();
    SampleStack::new(entry.id.clone(), manifest.organ_label, samples?)
}

pub fn load_truth_mask(dir: impl AsRef<Path>, entry: &SubjectEntry) -> Result<LabelVolume> {
    let path = dir.as_ref().join(&entry.truth);
    read_label_volume(&path).map_err(|e| Error::Manifest(format!("truth {}: {e}", path.display())))
}
