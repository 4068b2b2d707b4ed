//! Property tests for the metric and format invariants.

use proptest::prelude::*;

use biouncert::cohort::{standardize, Cohort, Column, ConfidenceKind, SubjectRecord};
use biouncert::confidence::{consensus_mask, dice, stack_cv, stack_iou, uncertainty_map, volume_of};
use biouncert::volume::{read_label_volume, write_label_volume, LabelVolume, SampleStack};

fn mask_strategy(n: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(prop_oneof![Just(0u8), Just(1u8)], n)
}

fn stack_strategy() -> impl Strategy<Value = SampleStack> {
    (2usize..5, 1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(n_samples, nz, ny, nx)| {
        let n = nz * ny * nx;
        proptest::collection::vec(mask_strategy(n), n_samples).prop_map(move |masks| {
            let samples = masks
                .into_iter()
                .map(|labels| LabelVolume::new((nz, ny, nx), (3.0, 2.0, 2.0), labels).unwrap())
                .collect();
            SampleStack::new("p", 1, samples).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn volume_roundtrip_is_bit_exact(
        (nz, ny, nx) in (1usize..6, 1usize..6, 1usize..6),
        seed_byte in 0u8..255,
    ) {
        let n = nz * ny * nx;
        let labels: Vec<u8> = (0..n).map(|i| ((i as u8).wrapping_mul(31).wrapping_add(seed_byte)) % 3).collect();
        let vol = LabelVolume::new((nz, ny, nx), (3.0, 2.0, 2.0), labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.blv");
        write_label_volume(&vol, &path).unwrap();
        let back = read_label_volume(&path).unwrap();
        prop_assert_eq!(back, vol);
    }

    #[test]
    fn dice_jaccard_identity_on_random_pairs(stack in stack_strategy()) {
        let a = &stack.samples()[0];
        let b = &stack.samples()[1];
        let pair = SampleStack::new("pair", 1, vec![a.clone(), b.clone()]).unwrap();
        let iou = stack_iou(&pair);
        // the identity is about nonempty unions; the empty-union value is a
        // pipeline convention, not the mathematical IoU
        prop_assume!(!iou.empty_union);
        let d = dice(a, b, 1).unwrap();
        prop_assert!((d - 2.0 * iou.value / (1.0 + iou.value)).abs() < 1e-12);
        prop_assert!(iou.value <= d + 1e-15);
    }

    #[test]
    fn adding_disjoint_voxels_cannot_increase_iou(stack in stack_strategy(), k_raw in 0usize..8, extra in 0usize..64) {
        let before = stack_iou(&stack).value;
        let organ = stack.organ_label();
        let n = stack.samples()[0].len();
        // a voxel outside the union of all samples
        let free: Vec<usize> = (0..n)
            .filter(|&i| stack.samples().iter().all(|s| s.labels()[i] != organ))
            .collect();
        prop_assume!(!free.is_empty());
        let target = free[extra % free.len()];
        let k = k_raw % stack.n_samples();
        let mut samples: Vec<LabelVolume> = stack.samples().to_vec();
        let mut labels = samples[k].labels().to_vec();
        labels[target] = organ;
        samples[k] = LabelVolume::new(samples[k].dims(), samples[k].spacing_mm(), labels).unwrap();
        let after = stack_iou(&SampleStack::new("p", organ, samples).unwrap()).value;
        prop_assert!(after <= before + 1e-15, "iou rose from {before} to {after}");
    }

    #[test]
    fn cv_is_invariant_under_uniform_spacing_scaling(stack in stack_strategy(), factor in 1.0f64..5.0) {
        let cv_before = match stack_cv(&stack) {
            Ok(cv) => cv.cv,
            Err(_) => return Ok(()), // no organ found: nothing to compare
        };
        let (sz, sy, sx) = stack.samples()[0].spacing_mm();
        let scaled: Vec<LabelVolume> = stack
            .samples()
            .iter()
            .map(|s| {
                LabelVolume::new(s.dims(), (sz * factor, sy * factor, sx * factor), s.labels().to_vec()).unwrap()
            })
            .collect();
        let scaled_stack = SampleStack::new("p", stack.organ_label(), scaled).unwrap();
        let cv_after = stack_cv(&scaled_stack).unwrap().cv;
        prop_assert!((cv_before - cv_after).abs() < 1e-12);
    }

    #[test]
    fn unanimous_stack_consensus_equals_mean_volume(mask in mask_strategy(27), n_samples in 2usize..6) {
        let vol = LabelVolume::new((3, 3, 3), (3.0, 2.0, 2.0), mask).unwrap();
        let stack = SampleStack::new("p", 1, vec![vol; n_samples]).unwrap();
        let consensus = volume_of(&consensus_mask(&stack), 1);
        let volumes: Vec<f64> = stack.samples().iter().map(|s| volume_of(s, 1)).collect();
        let mean = volumes.iter().sum::<f64>() / volumes.len() as f64;
        prop_assert_eq!(consensus, mean);
    }

    #[test]
    fn uncertainty_zero_exactly_on_unanimous_voxels(stack in stack_strategy()) {
        let map = uncertainty_map(&stack);
        let organ = stack.organ_label();
        for (i, &value) in map.values().iter().enumerate() {
            let count = stack.samples().iter().filter(|s| s.labels()[i] == organ).count();
            let unanimous = count == 0 || count == stack.n_samples();
            prop_assert_eq!(value == 0.0, unanimous);
        }
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std(
        ages in proptest::collection::vec(20.0f64..90.0, 5..40),
    ) {
        let spread = ages.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - ages.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-6);
        let records: Vec<SubjectRecord> = ages
            .iter()
            .enumerate()
            .map(|(i, &age)| SubjectRecord {
                subject_id: format!("s{i}"),
                age_years: age,
                sex: 0,
                bmi: 25.0,
                diabetes: 0,
                volume_mm3: 1.0,
                confidence: 1.0,
                confidence_kind: ConfidenceKind::Iou,
            })
            .collect();
        let cohort = Cohort::new(records).unwrap();
        let standardized = standardize(&cohort, &[Column::Age]).unwrap();
        let values: Vec<f64> = standardized.records().iter().map(|r| r.age_years).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        prop_assert!(mean.abs() < 1e-10, "mean {mean}");
        prop_assert!((std - 1.0).abs() < 1e-10, "std {std}");
    }
}
