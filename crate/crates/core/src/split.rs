//! Exhaustive best-split search for one node.
//!
//! Each feature is scanned once in ascending value order. The table set
//! starts with every sample on the right; each distinct value's group is
//! shifted left before the predicate `feature <= value` is scored, so a
//! candidate is never scored between two equal values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{CandidateSplit, Dataset, Ensemble, NodeSubset};
use crate::stats::{chi_sq_log_sf, ContingencyTableSet, Side};

/// Default minimum number of samples on each side of a split.
pub const DEFAULT_MIN_SIDE: usize = 5;

/// Below this many (sample, feature) pairs the scan stays on one thread.
const PARALLEL_WORK: usize = 20_000;

/// Result of searching one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: Option<CandidateSplit>,
    /// Number of admissible candidates that were scored.
    pub evaluated: u64,
}

impl SearchOutcome {
    pub fn none() -> Self {
        SearchOutcome {
            best: None,
            evaluated: 0,
        }
    }
}

struct FeatureBest {
    statistic: f64,
    threshold: f64,
    evaluated: u64,
}

/// Best `feature <= threshold` split of `subset` with both sides holding at
/// least `min_side` samples.
///
/// Candidates are ranked by the aggregated statistic (degrees of freedom
/// are fixed within a node); ties go to the lower feature index, then the
/// lower threshold.
pub fn optimal_split(
    ds: &Dataset,
    ensemble: &Ensemble,
    subset: &NodeSubset,
    min_side: usize,
) -> SearchOutcome {
    let n = subset.len();
    let min_side = min_side.max(1);
    if n < 2 * min_side {
        return SearchOutcome::none();
    }
    let base = ContingencyTableSet::build(ensemble, subset, &vec![Side::Right; n]);
    let c = ensemble.c();
    let cols: Vec<u32> = subset
        .indices()
        .iter()
        .flat_map(|&i| base.local_columns(ensemble, i))
        .collect();
    let dof = base.dof();

    let scan = |feature: usize| scan_feature(ds, subset, feature, &base, &cols, c, min_side);
    let per_feature: Vec<Option<FeatureBest>> = if n * ds.m() >= PARALLEL_WORK {
        (0..ds.m()).into_par_iter().map(scan).collect()
    } else {
        (0..ds.m()).map(scan).collect()
    };

    let mut evaluated = 0;
    let mut best: Option<(usize, FeatureBest)> = None;
    for (feature, fb) in per_feature.into_iter().enumerate() {
        let Some(fb) = fb else { continue };
        evaluated += fb.evaluated;
        if best
            .as_ref()
            .is_none_or(|(_, b)| fb.statistic > b.statistic)
        {
            best = Some((feature, fb));
        }
    }

    let best = best.map(|(feature, fb)| CandidateSplit {
        feature,
        threshold: fb.threshold,
        statistic: fb.statistic,
        dof,
        log_p: if dof == 0 {
            0.0
        } else {
            chi_sq_log_sf(fb.statistic, dof).expect("finite non-negative statistic")
        },
    });
    SearchOutcome { best, evaluated }
}

fn scan_feature(
    ds: &Dataset,
    subset: &NodeSubset,
    feature: usize,
    base: &ContingencyTableSet,
    cols: &[u32],
    c: usize,
    min_side: usize,
) -> Option<FeatureBest> {
    let n = subset.len();
    let column = ds.column(feature);
    let values: Vec<f64> = subset.indices().iter().map(|&i| column[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut tables = base.clone();
    let mut best: Option<FeatureBest> = None;
    let mut evaluated = 0;
    let mut left = 0;
    let mut k = 0;
    while k < n {
        let v = values[order[k]];
        while k < n && values[order[k]] == v {
            let pos = order[k];
            tables.shift_left_unchecked(&cols[pos * c..(pos + 1) * c]);
            left += 1;
            k += 1;
        }
        if n - left < min_side {
            break;
        }
        if left < min_side {
            continue;
        }
        evaluated += 1;
        let statistic = tables.statistic();
        if best.as_ref().is_none_or(|b| statistic > b.statistic) {
            best = Some(FeatureBest {
                statistic,
                threshold: v,
                evaluated: 0,
            });
        }
    }
    best.map(|mut b| {
        b.evaluated = evaluated;
        b
    })
}
