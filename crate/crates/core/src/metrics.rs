//! External clustering quality (purity, pairwise F1, NMI) and tree shape.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Tree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub purity: f64,
    pub f1: f64,
    pub nmi: f64,
    pub max_depth: usize,
    pub avg_depth: f64,
    pub n: usize,
    pub leaves: usize,
}

impl MetricsReport {
    /// Scores a finalized tree's clusters against ground truth.
    pub fn for_tree<P: Copy + Eq + std::hash::Hash>(tree: &Tree, truth: &[P]) -> Result<Self> {
        let pred = tree.assign_clusters()?;
        let (max_depth, avg_depth) = depth_metrics(tree);
        Ok(MetricsReport {
            purity: purity(&pred, truth)?,
            f1: pairwise_f1(&pred, truth)?,
            nmi: nmi(&pred, truth)?,
            max_depth,
            avg_depth,
            n: pred.len(),
            leaves: tree.leaf_count(),
        })
    }
}

/// Joint counts of two labelings keyed by dense ids.
struct Contingency {
    cells: HashMap<(usize, usize), u64>,
    pred_sizes: Vec<u64>,
    true_sizes: Vec<u64>,
    n: u64,
}

fn densify<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> (Vec<usize>, usize) {
    let mut ids = HashMap::new();
    let dense = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect();
    (dense, ids.len())
}

fn contingency<A, B>(pred: &[A], truth: &[B], min_len: usize) -> Result<Contingency>
where
    A: Copy + Eq + std::hash::Hash,
    B: Copy + Eq + std::hash::Hash,
{
    if pred.len() != truth.len() {
        return Err(Error::input(format!(
            "label length mismatch: {} predicted vs {} true",
            pred.len(),
            truth.len()
        )));
    }
    if pred.len() < min_len {
        return Err(Error::input(format!("need at least {min_len} labels")));
    }
    let (p, np) = densify(pred);
    let (t, nt) = densify(truth);
    let mut cells = HashMap::new();
    let mut pred_sizes = vec![0; np];
    let mut true_sizes = vec![0; nt];
    for (&a, &b) in p.iter().zip(&t) {
        *cells.entry((a, b)).or_insert(0) += 1;
        pred_sizes[a] += 1;
        true_sizes[b] += 1;
    }
    Ok(Contingency {
        cells,
        pred_sizes,
        true_sizes,
        n: pred.len() as u64,
    })
}

/// Fraction of samples belonging to the majority true class of their cluster.
pub fn purity<A, B>(pred: &[A], truth: &[B]) -> Result<f64>
where
    A: Copy + Eq + std::hash::Hash,
    B: Copy + Eq + std::hash::Hash,
{
    let ct = contingency(pred, truth, 1)?;
    let mut best = vec![0u64; ct.pred_sizes.len()];
    for (&(a, _), &count) in &ct.cells {
        best[a] = best[a].max(count);
    }
    Ok(best.iter().sum::<u64>() as f64 / ct.n as f64)
}

fn pairs(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

/// F1 over sample pairs, a pair being positive when co-clustered.
///
/// Both labelings all-singleton gives 1; otherwise zero precision and
/// recall gives 0.
pub fn pairwise_f1<A, B>(pred: &[A], truth: &[B]) -> Result<f64>
where
    A: Copy + Eq + std::hash::Hash,
    B: Copy + Eq + std::hash::Hash,
{
    let ct = contingency(pred, truth, 2)?;
    let tp: u64 = ct.cells.values().map(|&c| pairs(c)).sum();
    let pred_pos: u64 = ct.pred_sizes.iter().map(|&c| pairs(c)).sum();
    let true_pos: u64 = ct.true_sizes.iter().map(|&c| pairs(c)).sum();
    Ok(f1_from_pair_counts(tp, pred_pos, true_pos))
}

pub(crate) fn f1_from_pair_counts(tp: u64, pred_pos: u64, true_pos: u64) -> f64 {
    if pred_pos == 0 && true_pos == 0 {
        return 1.0;
    }
    let precision = if pred_pos == 0 {
        0.0
    } else {
        tp as f64 / pred_pos as f64
    };
    let recall = if true_pos == 0 {
        0.0
    } else {
        tp as f64 / true_pos as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mutual information normalized by the arithmetic mean of both entropies
/// (natural logs).
pub fn nmi<A, B>(pred: &[A], truth: &[B]) -> Result<f64>
where
    A: Copy + Eq + std::hash::Hash,
    B: Copy + Eq + std::hash::Hash,
{
    let ct = contingency(pred, truth, 1)?;
    let n = ct.n as f64;
    let entropy = |sizes: &[u64]| -> f64 {
        sizes
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let hp = entropy(&ct.pred_sizes);
    let ht = entropy(&ct.true_sizes);
    if hp == 0.0 && ht == 0.0 {
        return Ok(1.0);
    }
    if hp == 0.0 || ht == 0.0 {
        return Ok(0.0);
    }
    // sum in a fixed order so the result does not depend on hash iteration
    let mut cells: Vec<_> = ct.cells.iter().collect();
    cells.sort_unstable_by_key(|(k, _)| **k);
    let mi: f64 = cells
        .into_iter()
        .map(|(&(a, b), &c)| {
            let c = c as f64;
            let outer = ct.pred_sizes[a] as f64 * ct.true_sizes[b] as f64;
            c / n * (c * n / outer).ln()
        })
        .sum();
    Ok((mi / ((hp + ht) / 2.0)).clamp(0.0, 1.0))
}

/// Maximum and mean leaf depth, counting edges from the root.
pub fn depth_metrics(tree: &Tree) -> (usize, f64) {
    let depths = tree.leaf_depths();
    let max = depths.iter().copied().max().unwrap_or(0);
    let avg = depths.iter().sum::<usize>() as f64 / depths.len().max(1) as f64;
    (max, avg)
}
