//! Interpretable clustering ensembles.
//!
//! A set of base partitions (here k-means runs with random cluster counts)
//! is consolidated into one binary decision tree over the original
//! features. Every split `feature <= threshold` is the one most associated
//! with the base partitions, measured by the summed Pearson chi-squared
//! statistic of its `2 x p` contingency tables. The tree grows by expanding
//! the leaf whose best split has the smallest chi-squared p-value, until it
//! has `k` leaves; each leaf is one cluster.
//!
//! ```
//! use ice::{build_tree, BuildConfig, Dataset, Ensemble};
//!
//! let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
//! let ds = Dataset::from_rows(&rows).unwrap();
//! let halves = (0..20).map(|i| (i >= 10) as u32).collect();
//! let ensemble = Ensemble::new(vec![halves]).unwrap();
//!
//! let tree = build_tree(&ds, &ensemble, &BuildConfig::new(2)).unwrap();
//! assert_eq!(tree.node(0).split.unwrap().threshold, 9.0);
//! assert_eq!(tree.assign_clusters().unwrap()[15], 1);
//! ```

pub mod bases;
pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod split;
pub mod stats;
pub mod tree;

pub use bases::{
    generate_ensemble, kmeans, standardize, EnsembleSpec, GeneratedEnsemble, KMeansResult,
};
pub use error::{Error, Result};
pub use io::{export_tree, load_dataset, DataFileSpec, ExportFormat, TreeDocument};
pub use metrics::{depth_metrics, nmi, pairwise_f1, purity, MetricsReport};
pub use model::{
    apply_split, distinct_values, CandidateSplit, Dataset, Ensemble, Expansion, Labels, NodeSubset,
    Tree, TreeNode,
};
pub use split::{optimal_split, SearchOutcome, DEFAULT_MIN_SIDE};
pub use stats::{
    aggregate_score, chi_sq_log_sf, chi_squared_stat, ContingencyTable, ContingencyTableSet, Side,
    SplitScore,
};
pub use tree::{build_tree, BuildConfig};
