use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Assignment of every sequence to one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    /// Dataset positions held out in each fold, in dataset order.
    pub fn positions(&self, dataset: &Dataset) -> Result<Vec<Vec<usize>>> {
        let mut folds = vec![Vec::new(); self.k];
        for (pos, row) in dataset.rows().iter().enumerate() {
            let fold = *self.assignments.get(row.sequence_id()).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "sequence `{}` has no fold assignment",
                    row.sequence_id()
                ))
            })?;
            folds[fold].push(pos);
        }
        Ok(folds)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignments.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Splits `dataset` into `k` folds.
///
/// Sequences are grouped by source; group order and membership order are
/// shuffled with `seed`, the groups are concatenated and position `i` goes to
/// fold `i mod k`. Same-source sequences therefore land on consecutive folds
/// and sizes differ by at most one.
pub fn make_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if k > dataset.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds dataset size {}",
            dataset.len()
        )));
    }
    let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for row in dataset.rows() {
        groups
            .entry(row.subjective.source_id.as_str())
            .or_default()
            .push(row.sequence_id());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: Vec<Vec<&str>> = groups.into_values().collect();
    for g in &mut groups {
        g.sort_unstable();
        g.shuffle(&mut rng);
    }
    groups.shuffle(&mut rng);

    let assignments = groups
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(i, id)| (id.to_string(), i % k))
        .collect();
    Ok(FoldPlan {
        k,
        seed,
        assignments,
    })
}
