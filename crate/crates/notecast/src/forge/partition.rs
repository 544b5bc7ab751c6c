//! Patient-grouped train/test partitioning and dataset summaries.
//!
//! The split is performed over whole patient groups, which subsumes
//! admission-level grouping: no patient id, and therefore no admission id,
//! ever appears on both sides.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::derive_rng;

use super::{ForgeError, PredictionExample, QuestionCategory};

#[derive(Debug, Clone)]
pub struct DatasetPartition {
    pub train: Vec<PredictionExample>,
    pub test: Vec<PredictionExample>,
}

/// Partition examples into train/test by whole patient groups.
///
/// Patient groups are consumed in seeded-shuffle order until the test side
/// holds at least `round(test_fraction * n)` examples; everything else is
/// train. Deterministic per seed.
pub fn partition_dataset(
    examples: Vec<PredictionExample>,
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetPartition, ForgeError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ForgeError::Partition(format!(
            "test_fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }

    let mut by_patient: BTreeMap<String, Vec<PredictionExample>> = BTreeMap::new();
    for example in examples {
        by_patient
            .entry(example.patient_id.clone())
            .or_default()
            .push(example);
    }
    if by_patient.len() < 2 {
        return Err(ForgeError::Partition(format!(
            "need at least 2 patient groups to partition, got {}",
            by_patient.len()
        )));
    }

    let n_total: usize = by_patient.values().map(|v| v.len()).sum();
    let target = ((test_fraction * n_total as f64).round() as usize).max(1);

    let mut patient_ids: Vec<String> = by_patient.keys().cloned().collect();
    let mut rng = derive_rng(seed, &["partition"]);
    patient_ids.shuffle(&mut rng);

    let mut test = Vec::new();
    let mut train = Vec::new();
    for patient_id in patient_ids {
        let group = by_patient.remove(&patient_id).unwrap();
        if test.len() < target {
            test.extend(group);
        } else {
            train.extend(group);
        }
    }
    if train.is_empty() {
        return Err(ForgeError::Partition(
            "test_fraction leaves no patient groups for training".into(),
        ));
    }

    debug_assert!(partition_is_disjoint(&train, &test));
    Ok(DatasetPartition { train, test })
}

fn partition_is_disjoint(train: &[PredictionExample], test: &[PredictionExample]) -> bool {
    use std::collections::HashSet;
    let train_patients: HashSet<&str> = train.iter().map(|e| e.patient_id.as_str()).collect();
    let train_admissions: HashSet<&str> = train.iter().map(|e| e.admission_id.as_str()).collect();
    test.iter().all(|e| {
        !train_patients.contains(e.patient_id.as_str())
            && !train_admissions.contains(e.admission_id.as_str())
    })
}

/// Exact arithmetic summary of an example set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_examples: usize,
    pub n_trajectories: usize,
    pub n_patients: usize,
    pub mean_questions_per_trajectory: f64,
    pub positive_rate: f64,
    pub category_counts: BTreeMap<QuestionCategory, usize>,
}

pub fn dataset_stats(examples: &[PredictionExample]) -> DatasetStats {
    let mut admissions: Vec<&str> = examples.iter().map(|e| e.admission_id.as_str()).collect();
    admissions.sort_unstable();
    admissions.dedup();
    let mut patients: Vec<&str> = examples.iter().map(|e| e.patient_id.as_str()).collect();
    patients.sort_unstable();
    patients.dedup();

    let n_examples = examples.len();
    let n_trajectories = admissions.len();
    let positives = examples.iter().filter(|e| e.label == 1).count();

    let mut category_counts = BTreeMap::new();
    for example in examples {
        *category_counts.entry(example.category).or_insert(0) += 1;
    }

    DatasetStats {
        n_examples,
        n_trajectories,
        n_patients: patients.len(),
        mean_questions_per_trajectory: if n_trajectories == 0 {
            0.0
        } else {
            n_examples as f64 / n_trajectories as f64
        },
        positive_rate: if n_examples == 0 {
            0.0
        } else {
            positives as f64 / n_examples as f64
        },
        category_counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn example(id: usize, admission: &str, patient: &str, label: u8) -> PredictionExample {
        PredictionExample {
            example_id: format!("e{id:05}"),
            admission_id: admission.to_string(),
            patient_id: patient.to_string(),
            split_time: Utc.with_ymd_and_hms(2026, 1, 1, 12, 0, 0).unwrap(),
            question: "q".into(),
            category: QuestionCategory::Other,
            label,
            context_text: "ctx".into(),
        }
    }

    /// A realistic cohort shape: 702 admissions across fewer patients,
    /// just under ten questions each.
    fn realistic_cohort_examples() -> Vec<PredictionExample> {
        let mut examples = Vec::new();
        let mut id = 0;
        for adm in 0..702usize {
            let patient = format!("p{:04}", adm % 600);
            let admission = format!("a{adm:04}");
            // 582 admissions with 10 questions + 120 with 9 = 6,900.
            let n_q = if adm < 582 { 10 } else { 9 };
            for _ in 0..n_q {
                examples.push(example(id, &admission, &patient, (id % 4 == 0) as u8));
                id += 1;
            }
        }
        examples
    }

    #[test]
    fn whole_patient_groups_until_target() {
        let examples = realistic_cohort_examples();
        let n = examples.len();
        let fraction = 500.0 / n as f64;
        let partition = partition_dataset(examples, fraction, 11).unwrap();
        assert!(partition.test.len() >= 500);
        // Overshoot bounded by one patient group (≤ 2 admissions × 10).
        assert!(partition.test.len() < 500 + 40);
        assert_eq!(partition.test.len() + partition.train.len(), n);

        let test_patients: HashSet<&str> = partition
            .test
            .iter()
            .map(|e| e.patient_id.as_str())
            .collect();
        let train_patients: HashSet<&str> = partition
            .train
            .iter()
            .map(|e| e.patient_id.as_str())
            .collect();
        assert!(test_patients.is_disjoint(&train_patients));
        let test_adm: HashSet<&str> = partition
            .test
            .iter()
            .map(|e| e.admission_id.as_str())
            .collect();
        let train_adm: HashSet<&str> = partition
            .train
            .iter()
            .map(|e| e.admission_id.as_str())
            .collect();
        assert!(test_adm.is_disjoint(&train_adm));
    }

    #[test]
    fn single_patient_is_an_error() {
        let examples = vec![example(0, "a1", "p1", 0), example(1, "a2", "p1", 1)];
        assert!(partition_dataset(examples, 0.5, 1).is_err());
    }

    #[test]
    fn bad_fraction_is_an_error() {
        let examples = vec![example(0, "a1", "p1", 0), example(1, "a2", "p2", 1)];
        assert!(partition_dataset(examples.clone(), 0.0, 1).is_err());
        assert!(partition_dataset(examples, 1.0, 1).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = partition_dataset(realistic_cohort_examples(), 0.1, 3).unwrap();
        let b = partition_dataset(realistic_cohort_examples(), 0.1, 3).unwrap();
        assert_eq!(a.test.len(), b.test.len());
        let ids_a: Vec<&str> = a.test.iter().map(|e| e.example_id.as_str()).collect();
        let ids_b: Vec<&str> = b.test.iter().map(|e| e.example_id.as_str()).collect();
        assert_eq!(ids_a, ids_b);
    }

    #[test]
    fn stats_match_realistic_cohort_shape() {
        let examples = realistic_cohort_examples();
        let stats = dataset_stats(&examples);
        assert_eq!(stats.n_trajectories, 702);
        assert_eq!(stats.n_examples, 6_900);
        // 6,900 / 702 reported as 9.8 at one decimal.
        assert!((stats.mean_questions_per_trajectory * 10.0).round() / 10.0 == 9.8);
    }

    #[test]
    fn all_negative_stats() {
        let examples = vec![example(0, "a1", "p1", 0), example(1, "a2", "p2", 0)];
        let stats = dataset_stats(&examples);
        assert_eq!(stats.positive_rate, 0.0);
    }

    proptest! {
        // Defining property: no id overlap, nothing lost.
        #[test]
        fn partition_never_overlaps(
            assignments in proptest::collection::vec((0usize..12, 0usize..20), 8..120),
            seed in 0u64..32,
        ) {
            let examples: Vec<PredictionExample> = assignments
                .iter()
                .enumerate()
                .map(|(i, (pat, adm))| {
                    // Admissions nest inside patients so ids stay consistent.
                    example(i, &format!("p{pat}-a{adm}"), &format!("p{pat}"), 0)
                })
                .collect();
            let n_patients = examples
                .iter()
                .map(|e| e.patient_id.clone())
                .collect::<HashSet<_>>()
                .len();
            prop_assume!(n_patients >= 2);

            match partition_dataset(examples.clone(), 0.3, seed) {
                Ok(partition) => {
                    prop_assert_eq!(
                        partition.train.len() + partition.test.len(),
                        examples.len()
                    );
                    let test_patients: HashSet<String> =
                        partition.test.iter().map(|e| e.patient_id.clone()).collect();
                    for e in &partition.train {
                        prop_assert!(!test_patients.contains(&e.patient_id));
                    }
                    let test_adm: HashSet<String> =
                        partition.test.iter().map(|e| e.admission_id.clone()).collect();
                    for e in &partition.train {
                        prop_assert!(!test_adm.contains(&e.admission_id));
                    }
                }
                Err(ForgeError::Partition(_)) => {
                    // Acceptable only when every group would land in test.
                }
                Err(other) => return Err(TestCaseError::fail(format!("{other}"))),
            }
        }
    }
}
