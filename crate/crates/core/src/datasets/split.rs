//! Subject-grouped split generation and leakage auditing.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

use super::{
    DatasetDescriptor, DatasetError, ImageRecord, Partition, SplitPlan, SplitPolicy,
    SubjectAssignment,
};
use crate::seeding::stream_rng;

/// Train/val/test proportions, applied per dataset at subject granularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

pub const DEFAULT_RATIOS: SplitRatios = SplitRatios {
    train: 0.70,
    val: 0.15,
    test: 0.15,
};

impl SplitRatios {
    fn validate(&self) -> Result<(), DatasetError> {
        let sum = self.train + self.val + self.test;
        if self.train > 0.0 && self.val > 0.0 && self.test > 0.0 && (sum - 1.0).abs() < 1e-9 {
            Ok(())
        } else {
            Err(DatasetError::InvalidRatios {
                train: self.train,
                val: self.val,
                test: self.test,
            })
        }
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        DEFAULT_RATIOS
    }
}

/// Assigns every subject to a partition for each repetition.
///
/// Subjects are collected per dataset (records grouped by `source`), sorted,
/// shuffled with an rng derived from `(seed, dataset, repetition)`, and cut
/// into partitions by largest-remainder apportionment of the ratios, with at
/// least one subject per partition the dataset's policy allows. The plan
/// therefore depends only on the subject ids, descriptors, ratios, and seed,
/// never on record order.
pub fn make_splits(
    records: &[ImageRecord],
    descriptors: &[DatasetDescriptor],
    repetitions: u32,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitPlan, DatasetError> {
    ratios.validate()?;
    let by_name: BTreeMap<&str, &DatasetDescriptor> =
        descriptors.iter().map(|d| (d.name.as_str(), d)).collect();

    let mut subjects_by_dataset: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for record in records {
        if !by_name.contains_key(record.source.as_str()) {
            return Err(DatasetError::MissingDescriptor {
                name: record.source.clone(),
            });
        }
        subjects_by_dataset
            .entry(record.source.as_str())
            .or_default()
            .insert(record.subject_id.as_str());
    }

    let mut assignments = Vec::new();
    for rep in 0..repetitions {
        for (dataset, subjects) in &subjects_by_dataset {
            let descriptor = by_name[dataset];
            let mut shuffled: Vec<&str> = subjects.iter().copied().collect();
            let mut rng = stream_rng(seed, &format!("split:{dataset}"), &[rep as u64]);
            shuffled.shuffle(&mut rng);

            let counts = partition_counts(descriptor, shuffled.len(), &ratios)?;
            let mut cursor = 0;
            for (partition, count) in counts {
                for subject in &shuffled[cursor..cursor + count] {
                    assignments.push(SubjectAssignment {
                        repetition: rep,
                        subject_id: subject.to_string(),
                        partition,
                    });
                }
                cursor += count;
            }
        }
    }
    Ok(SplitPlan::from_assignments(assignments))
}

/// Subject counts per partition for one dataset, in train/val/test order
/// restricted to the partitions the policy allows.
fn partition_counts(
    descriptor: &DatasetDescriptor,
    n: usize,
    ratios: &SplitRatios,
) -> Result<Vec<(Partition, usize)>, DatasetError> {
    let infeasible = |required: usize| DatasetError::InfeasiblePolicy {
        name: descriptor.name.clone(),
        subjects: n,
        required,
    };
    match descriptor.split_policy {
        SplitPolicy::Full => {
            if n < 3 {
                return Err(infeasible(3));
            }
            let counts = largest_remainder(n, &[ratios.train, ratios.val, ratios.test]);
            Ok(vec![
                (Partition::Train, counts[0]),
                (Partition::Val, counts[1]),
                (Partition::Test, counts[2]),
            ])
        }
        SplitPolicy::TrainValOnly => {
            if n < 2 {
                return Err(infeasible(2));
            }
            let total = ratios.train + ratios.val;
            let counts = largest_remainder(n, &[ratios.train / total, ratios.val / total]);
            Ok(vec![
                (Partition::Train, counts[0]),
                (Partition::Val, counts[1]),
            ])
        }
        SplitPolicy::TestOnly => {
            if n < 1 {
                return Err(infeasible(1));
            }
            Ok(vec![(Partition::Test, n)])
        }
    }
}

/// Apportions `n` into parts proportional to `ratios` (floor the quotas, then
/// hand out the remainder by descending fractional part), then shifts from the
/// largest part until every part is non-empty. Requires `n >= ratios.len()`.
fn largest_remainder(n: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();

    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = quotas[i] - quotas[i].floor();
        let fj = quotas[j] - quotas[j].floor();
        fj.partial_cmp(&fi).expect("finite").then(i.cmp(&j))
    });
    for k in 0..(n - assigned) {
        counts[order[k % order.len()]] += 1;
    }

    loop {
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            break;
        };
        let largest = (0..counts.len())
            .max_by_key(|&i| counts[i])
            .expect("non-empty");
        counts[largest] -= 1;
        counts[empty] += 1;
    }
    counts
}

/// One audit finding. Violations are data, not errors: an audit of a bad plan
/// succeeds and reports what is wrong with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeakageViolation {
    /// The same image id appears in more than one record.
    DuplicateImageId { id: String },
    /// A subject is assigned to more than one partition within a repetition.
    MultiplePartitions {
        repetition: u32,
        subject_id: String,
        partitions: Vec<Partition>,
    },
    /// A subject with records has no assignment in a repetition.
    UnassignedSubject { repetition: u32, subject_id: String },
    /// A subject landed in a partition its dataset's policy forbids.
    PolicyBreach {
        repetition: u32,
        subject_id: String,
        dataset: String,
        partition: Partition,
    },
}

impl std::fmt::Display for LeakageViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LeakageViolation::DuplicateImageId { id } => {
                write!(f, "duplicate image id {id:?}")
            }
            LeakageViolation::MultiplePartitions {
                repetition,
                subject_id,
                partitions,
            } => write!(
                f,
                "repetition {repetition}: subject {subject_id:?} in several partitions {partitions:?}"
            ),
            LeakageViolation::UnassignedSubject {
                repetition,
                subject_id,
            } => write!(
                f,
                "repetition {repetition}: subject {subject_id:?} has no assignment"
            ),
            LeakageViolation::PolicyBreach {
                repetition,
                subject_id,
                dataset,
                partition,
            } => write!(
                f,
                "repetition {repetition}: subject {subject_id:?} of {dataset} may not be in {partition}"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LeakageReport {
    pub violations: Vec<LeakageViolation>,
}

impl LeakageReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for LeakageReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_clean() {
            return write!(f, "no leakage found");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Audits a split plan against the records it should cover.
///
/// Flags duplicate image ids, subjects assigned to several partitions within
/// a repetition, subjects missing from a repetition, and assignments that
/// break a dataset's split policy. An empty report means the plan is safe to
/// train on.
pub fn verify_no_leakage(
    plan: &SplitPlan,
    records: &[ImageRecord],
    descriptors: &[DatasetDescriptor],
) -> LeakageReport {
    let mut violations = Vec::new();

    let mut seen_ids: BTreeSet<&str> = BTreeSet::new();
    for record in records {
        if !seen_ids.insert(record.id.as_str()) {
            violations.push(LeakageViolation::DuplicateImageId {
                id: record.id.clone(),
            });
        }
    }

    let policy_by_dataset: BTreeMap<&str, SplitPolicy> = descriptors
        .iter()
        .map(|d| (d.name.as_str(), d.split_policy))
        .collect();
    let mut dataset_of_subject: BTreeMap<&str, &str> = BTreeMap::new();
    for record in records {
        dataset_of_subject
            .entry(record.subject_id.as_str())
            .or_insert(record.source.as_str());
    }

    for rep in 0..plan.repetitions() {
        let mut partitions_of: BTreeMap<&str, BTreeSet<Partition>> = BTreeMap::new();
        for a in plan.assignments() {
            if a.repetition == rep {
                partitions_of
                    .entry(a.subject_id.as_str())
                    .or_default()
                    .insert(a.partition);
            }
        }

        for (subject, partitions) in &partitions_of {
            if partitions.len() > 1 {
                violations.push(LeakageViolation::MultiplePartitions {
                    repetition: rep,
                    subject_id: subject.to_string(),
                    partitions: partitions.iter().copied().collect(),
                });
            }
            let Some(dataset) = dataset_of_subject.get(subject) else {
                continue;
            };
            let Some(policy) = policy_by_dataset.get(dataset) else {
                continue;
            };
            for partition in partitions {
                let allowed = match policy {
                    SplitPolicy::Full => true,
                    SplitPolicy::TrainValOnly => *partition != Partition::Test,
                    SplitPolicy::TestOnly => *partition == Partition::Test,
                };
                if !allowed {
                    violations.push(LeakageViolation::PolicyBreach {
                        repetition: rep,
                        subject_id: subject.to_string(),
                        dataset: dataset.to_string(),
                        partition: *partition,
                    });
                }
            }
        }

        for subject in dataset_of_subject.keys() {
            if !partitions_of.contains_key(subject) {
                violations.push(LeakageViolation::UnassignedSubject {
                    repetition: rep,
                    subject_id: subject.to_string(),
                });
            }
        }
    }
    LeakageReport { violations }
}
