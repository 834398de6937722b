//! Base partitions: z-score standardization and seeded k-means runs with a
//! randomly drawn cluster count per ensemble member.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Ensemble};

pub const KMEANS_MAX_ITER: usize = 100;
/// Convergence threshold on the summed squared centroid movement.
pub const KMEANS_TOL: f64 = 1e-4;

/// Mixes a stream index into a seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(stream))
}

/// Per-feature `(x - mean) / std` with the population standard deviation.
/// Constant features become all zeros.
pub fn standardize(ds: &Dataset) -> Dataset {
    let n = ds.n() as f64;
    let columns = ds
        .columns()
        .iter()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if std == 0.0 || col.iter().all(|&v| v == col[0]) {
                vec![0.0; col.len()]
            } else {
                col.iter().map(|v| (v - mean) / std).collect()
            }
        })
        .collect();
    let mut out = Dataset::from_columns(columns, ds.feature_names().to_vec(), None)
        .expect("standardized values stay finite");
    if let Some(labels) = ds.labels() {
        out = out.with_labels(labels.clone()).expect("same sample count");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    /// Dense labels in `[0, centroids.len())`.
    pub labels: Vec<u32>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment step.
    pub inertia_history: Vec<f64>,
    /// True when empty clusters were dropped and labels renumbered.
    pub renumbered: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm from distance-weighted seeding.
///
/// Stops when assignments no longer change, when the summed squared
/// centroid movement drops below [`KMEANS_TOL`], or after
/// [`KMEANS_MAX_ITER`] updates. An emptied cluster is re-seeded at the
/// point farthest from its current centroid.
pub fn kmeans(ds: &Dataset, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = ds.n();
    if k == 0 || k > n {
        return Err(Error::input(format!(
            "k-means needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let points: Vec<Vec<f64>> = (0..n).map(|i| ds.row(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(&points, k, &mut rng);

    let mut labels = vec![u32::MAX; n];
    let mut dists = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut settle = false;
    loop {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, d) = nearest(p, &centroids);
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
            dists[i] = d;
            inertia += d;
        }
        if let Some(&prev) = history.last() {
            debug_assert!(
                inertia <= prev * (1.0 + 1e-12) + 1e-12,
                "inertia increased from {prev} to {inertia}"
            );
        }
        history.push(inertia);
        if !changed || settle || iterations == KMEANS_MAX_ITER {
            break;
        }

        let dim = ds.m();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l as usize] += 1;
            for (s, v) in sums[l as usize].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut movement = 0.0;
        for c in 0..k {
            let next = if counts[c] > 0 {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("n >= 1");
                dists[far] = 0.0;
                points[far].clone()
            };
            movement += sq_dist(&next, &centroids[c]);
            centroids[c] = next;
        }
        iterations += 1;
        settle = movement < KMEANS_TOL;
    }

    // drop clusters left empty (coincident centroids) and renumber densely
    let mut used = vec![false; k];
    for &l in &labels {
        used[l as usize] = true;
    }
    let renumbered = used.iter().any(|u| !u);
    if renumbered {
        let mut remap = vec![u32::MAX; k];
        let mut next = 0;
        for c in 0..k {
            if used[c] {
                remap[c] = next;
                next += 1;
            }
        }
        for l in &mut labels {
            *l = remap[*l as usize];
        }
        centroids = centroids
            .into_iter()
            .zip(&used)
            .filter(|(_, &u)| u)
            .map(|(c, _)| c)
            .collect();
    }

    Ok(KMeansResult {
        labels,
        centroids,
        inertia: *history.last().unwrap(),
        iterations,
        inertia_history: history,
        renumbered,
    })
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c as u32, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, the rest with probability
/// proportional to squared distance from the closest chosen centre.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just above the final sum
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            rng.gen_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// How to draw an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Number of base partitions.
    pub c: usize,
    /// Inclusive range for each member's cluster count.
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    /// `c = 30` members with cluster counts drawn from `[k, 3k]`.
    pub fn for_k(k: usize, seed: u64) -> Self {
        EnsembleSpec {
            c: 30,
            k_min: k,
            k_max: 3 * k,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c == 0 {
            return Err(Error::input("ensemble size must be >= 1"));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::input(format!(
                "invalid cluster-count range [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        Ok(())
    }
}

/// Per-member provenance of a generated ensemble.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberInfo {
    /// Drawn cluster count.
    pub k_drawn: usize,
    /// Label count after dropping empty clusters.
    pub k_realized: usize,
    pub kmeans_seed: u64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedEnsemble {
    pub ensemble: Ensemble,
    pub spec: EnsembleSpec,
    pub members: Vec<MemberInfo>,
}

/// Runs `spec.c` k-means partitions on the standardized features of `ds`.
pub fn generate_ensemble(ds: &Dataset, spec: &EnsembleSpec) -> Result<GeneratedEnsemble> {
    spec.validate()?;
    if ds.n() == 0 {
        return Err(Error::input("empty dataset"));
    }
    let z = standardize(ds);
    let runs: Vec<Result<(Vec<u32>, MemberInfo)>> = (0..spec.c)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, t as u64));
            let k_drawn = rng.gen_range(spec.k_min..=spec.k_max);
            let kmeans_seed = rng.gen::<u64>();
            let res = kmeans(&z, k_drawn, kmeans_seed)?;
            let info = MemberInfo {
                k_drawn,
                k_realized: res.centroids.len(),
                kmeans_seed,
                iterations: res.iterations,
            };
            Ok((res.labels, info))
        })
        .collect();
    let mut partitions = Vec::with_capacity(spec.c);
    let mut members = Vec::with_capacity(spec.c);
    for run in runs {
        let (labels, info) = run?;
        partitions.push(labels);
        members.push(info);
    }
    Ok(GeneratedEnsemble {
        ensemble: Ensemble::new(partitions)?,
        spec: *spec,
        members,
    })
}
