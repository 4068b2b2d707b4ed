//! Repeated random train/test splits, stratified by class.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seeding::rng_from;

/// Split protocol: defaults follow the reference study (1000 repeats,
/// 50/50 split, stratified).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub n_repeats: usize,
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { n_repeats: 1000, train_fraction: 0.5, stratified: true, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train_fraction must be in (0,1), got {}",
                self.train_fraction
            )));
        }
        if self.n_repeats < 1 {
            return Err(Error::InvalidConfig("n_repeats must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

const STREAM_SPLIT: u64 = 0x5B;
const MAX_RESAMPLES: usize = 10;

/// Per-class train count: ceil of the fraction, capped so the test side
/// keeps at least one subject of the class.
fn train_count(n_class: usize, fraction: f64) -> usize {
    ((n_class as f64 * fraction).ceil() as usize).clamp(1, n_class.saturating_sub(1).max(1))
}

fn stratified(labels: &[u8], fraction: f64, rng: &mut impl rand::Rng) -> Split {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        members.shuffle(rng);
        let k = train_count(members.len(), fraction);
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Split { train, test }
}

fn unstratified(labels: &[u8], fraction: f64, rng: &mut impl rand::Rng) -> Split {
    let n = labels.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let k = train_count(n, fraction);
    let mut train = idx[..k].to_vec();
    let mut test = idx[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Split { train, test }
}

fn two_classes(labels: &[u8], idx: &[usize]) -> bool {
    let mut saw = [false, false];
    for &i in idx {
        saw[labels[i] as usize] = true;
    }
    saw[0] && saw[1]
}

/// Deterministic split for one repeat. Degenerate draws (a single-class
/// training or test set) are resampled from follow-on streams, up to 10
/// times.
pub fn split_for_repeat(spec: &SplitSpec, labels: &[u8], repeat: usize) -> Result<Split> {
    spec.validate()?;
    for attempt in 0..=MAX_RESAMPLES {
        let mut rng = rng_from(spec.seed, &[STREAM_SPLIT, repeat as u64, attempt as u64]);
        let split = if spec.stratified {
            stratified(labels, spec.train_fraction, &mut rng)
        } else {
            unstratified(labels, spec.train_fraction, &mut rng)
        };
        if two_classes(labels, &split.train) && !split.test.is_empty() {
            return Ok(split);
        }
    }
    Err(Error::DegenerateSplit(MAX_RESAMPLES))
}
