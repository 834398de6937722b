//! Greedy tree growth: repeatedly expand the frontier leaf whose best split
//! has the smallest p-value until the tree has `k_target` leaves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{apply_split, Dataset, Ensemble, Tree};
use crate::split::{optimal_split, SearchOutcome, DEFAULT_MIN_SIDE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Requested number of leaves (clusters).
    pub k_target: usize,
    /// Minimum number of samples in each child of a split.
    pub min_side: usize,
}

impl BuildConfig {
    pub fn new(k_target: usize) -> Self {
        BuildConfig {
            k_target,
            min_side: DEFAULT_MIN_SIDE,
        }
    }

    /// `k_target` from an explicit value, falling back to the number of
    /// ground-truth classes.
    pub fn for_dataset(ds: &Dataset, k_target: Option<usize>) -> Result<Self> {
        match k_target.or_else(|| ds.labels().map(|l| l.class_count())) {
            Some(k) => Ok(BuildConfig::new(k)),
            None => Err(Error::input(
                "k_target is required when the dataset has no label column",
            )),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k_target == 0 {
            return Err(Error::input("k_target must be >= 1"));
        }
        if self.min_side == 0 {
            return Err(Error::input("min_side must be >= 1"));
        }
        Ok(())
    }
}

/// Grows a tree over all samples of `ds`.
///
/// Each frontier leaf is searched once; its outcome is cached on the node.
/// Leaves with no admissible split leave the frontier for good. Running out
/// of frontier before `k_target` leaves is not an error: the tree is
/// returned with [`Tree::early_stopped`] set.
pub fn build_tree(ds: &Dataset, ensemble: &Ensemble, config: &BuildConfig) -> Result<Tree> {
    config.validate()?;
    if ds.n() == 0 {
        return Err(Error::input("empty dataset"));
    }
    ensemble.check_aligned(ds)?;

    let mut tree = Tree::with_root(ds.full_subset(), ds.n(), config.k_target);
    let mut frontier = vec![tree.root()];
    let mut leaves = 1;

    while leaves < config.k_target {
        let pending: Vec<usize> = frontier
            .iter()
            .copied()
            .filter(|&id| tree.node(id).search.is_none())
            .collect();
        let outcomes: Vec<SearchOutcome> = pending
            .par_iter()
            .map(|&id| optimal_split(ds, ensemble, &tree.node(id).subset, config.min_side))
            .collect();
        for (id, outcome) in pending.into_iter().zip(outcomes) {
            tree.node_mut(id).search = Some(outcome);
        }
        frontier.retain(|&id| tree.node(id).search.and_then(|s| s.best).is_some());

        // frontier is kept in creation order, so strict `<` keeps the lower id on ties
        let mut pick: Option<(usize, f64)> = None;
        for (pos, &id) in frontier.iter().enumerate() {
            let log_p = tree
                .node(id)
                .search
                .and_then(|s| s.best)
                .map(|b| b.log_p)
                .unwrap();
            if pick.is_none_or(|(_, best)| log_p < best) {
                pick = Some((pos, log_p));
            }
        }
        let Some((pos, _)) = pick else {
            tree.set_early_stop();
            break;
        };

        let id = frontier.remove(pos);
        let split = tree.node(id).search.and_then(|s| s.best).unwrap();
        let (left, right) = apply_split(ds, &tree.node(id).subset, split.feature, split.threshold);
        if left.len() < config.min_side || right.len() < config.min_side {
            return Err(Error::contract(format!(
                "node {id}: split produced sides {} / {}",
                left.len(),
                right.len()
            )));
        }
        let (l, r) = tree.expand(id, split, left, right);
        frontier.push(l);
        frontier.push(r);
        leaves += 1;
    }

    tree.finalize();
    Ok(tree)
}
