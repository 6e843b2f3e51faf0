use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

/// Assignment of dataset positions to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// `assignment[i]` is the fold of the `i`-th dataset item.
    pub assignment: Vec<usize>,
}

/// Shuffles positions with a seeded generator, then deals them round-robin
/// into `k` folds, so fold sizes differ by at most one.
pub fn kfold_split(n_items: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    if k > n_items {
        return Err(Error::InvalidArgument(format!("{k} folds requested for {n_items} items")));
    }
    let mut order: Vec<usize> = (0..n_items).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n_items];
    for (pos, item) in order.into_iter().enumerate() {
        assignment[item] = pos % k;
    }
    Ok(FoldPlan { k, seed, assignment })
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Dataset positions held out for `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    /// Dataset positions available for training when `fold` is held out,
    /// in the fold's seeded training order. Every learning-curve point takes
    /// a prefix of this list, so smaller training sets nest in larger ones.
    pub fn training_order(&self, fold: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..self.len()).filter(|&i| self.assignment[i] != fold).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(fold as u64 + 1);
        pool.shuffle(&mut rng);
        pool
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Smallest training pool over all folds.
    pub fn min_training_size(&self) -> usize {
        self.len() - self.fold_sizes().into_iter().max().unwrap_or(0)
    }
}
