//! Dataset, ensemble, split and tree representations.
//!
//! Everything here is immutable once constructed. Node subsets are plain
//! index lists into the owning [`Dataset`]; children of a node partition
//! its indices exactly, preserving relative order.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::split::SearchOutcome;

/// Categorical ground truth attached to a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    /// Dense class codes in `[0, names.len())`.
    pub codes: Vec<u32>,
    /// Class names in first-appearance order.
    pub names: Vec<String>,
}

impl Labels {
    /// Encodes raw class strings by first-appearance order.
    pub fn from_strings<S: AsRef<str>>(raw: &[S]) -> Self {
        let mut names: Vec<String> = Vec::new();
        let codes = raw
            .iter()
            .map(|s| {
                let s = s.as_ref();
                match names.iter().position(|n| n == s) {
                    Some(p) => p as u32,
                    None => {
                        names.push(s.to_string());
                        (names.len() - 1) as u32
                    }
                }
            })
            .collect();
        Labels { codes, names }
    }

    pub fn class_count(&self) -> usize {
        self.names.len()
    }
}

/// An `n x m` matrix of finite reals with named columns.
///
/// Values are stored column-major since every consumer scans one feature at
/// a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    feature_names: Vec<String>,
    labels: Option<Labels>,
    n: usize,
}

impl Dataset {
    pub fn from_columns(
        columns: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        labels: Option<Labels>,
    ) -> Result<Self> {
        if columns.len() != feature_names.len() {
            return Err(Error::input(format!(
                "{} feature columns but {} feature names",
                columns.len(),
                feature_names.len()
            )));
        }
        if columns.is_empty() {
            return Err(Error::input("dataset has no features"));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::input("empty dataset"));
        }
        let mut seen = HashSet::new();
        for (name, col) in feature_names.iter().zip(&columns) {
            if !seen.insert(name.as_str()) {
                return Err(Error::input(format!("duplicate feature name `{name}`")));
            }
            if col.len() != n {
                return Err(Error::input(format!(
                    "feature `{name}` has {} values, expected {n}",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::input(format!(
                    "feature `{name}` has a non-finite value at row {i}"
                )));
            }
        }
        if let Some(l) = &labels {
            if l.codes.len() != n {
                return Err(Error::input(format!(
                    "{} labels for {n} samples",
                    l.codes.len()
                )));
            }
        }
        Ok(Dataset {
            columns,
            feature_names,
            labels,
            n,
        })
    }

    /// Builds a dataset from row-major data with generated names `f0, f1, ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); m];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::input(format!(
                    "row {i} has {} values, expected {m}",
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        let names = (0..m).map(|j| format!("f{j}")).collect();
        Dataset::from_columns(columns, names, None)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.codes.len() != self.n {
            return Err(Error::input(format!(
                "{} labels for {} samples",
                labels.codes.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn value(&self, sample: usize, feature: usize) -> f64 {
        self.columns[feature][sample]
    }

    #[inline]
    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, sample: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[sample]).collect()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    /// Root subset covering every sample.
    pub fn full_subset(&self) -> NodeSubset {
        NodeSubset::new((0..self.n).collect())
    }
}

/// `c` base partitions over the same `n` samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ensemble {
    partitions: Vec<Vec<u32>>,
    alphabet_sizes: Vec<u32>,
}

impl Ensemble {
    /// Validates the partitions and derives each alphabet size as
    /// `1 + max label`.
    pub fn new(partitions: Vec<Vec<u32>>) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::input("ensemble has no partitions"));
        }
        let n = partitions[0].len();
        if n == 0 {
            return Err(Error::input("ensemble partitions are empty"));
        }
        let mut alphabet_sizes = Vec::with_capacity(partitions.len());
        for (t, p) in partitions.iter().enumerate() {
            if p.len() != n {
                return Err(Error::input(format!(
                    "partition {t} has {} labels, expected {n}",
                    p.len()
                )));
            }
            let max = p.iter().copied().max().unwrap_or(0);
            alphabet_sizes.push(max + 1);
        }
        Ok(Ensemble {
            partitions,
            alphabet_sizes,
        })
    }

    /// Number of partitions `c`.
    #[inline]
    pub fn c(&self) -> usize {
        self.partitions.len()
    }

    /// Number of samples each partition labels.
    #[inline]
    pub fn n(&self) -> usize {
        self.partitions[0].len()
    }

    #[inline]
    pub fn partition(&self, t: usize) -> &[u32] {
        &self.partitions[t]
    }

    pub fn partitions(&self) -> &[Vec<u32>] {
        &self.partitions
    }

    pub fn alphabet_sizes(&self) -> &[u32] {
        &self.alphabet_sizes
    }

    /// Base labels of one sample across all partitions.
    pub fn labels_of(&self, sample: usize) -> Vec<u32> {
        self.partitions.iter().map(|p| p[sample]).collect()
    }

    pub fn check_aligned(&self, ds: &Dataset) -> Result<()> {
        if self.n() != ds.n() {
            return Err(Error::input(format!(
                "ensemble labels {} samples but dataset has {}",
                self.n(),
                ds.n()
            )));
        }
        Ok(())
    }
}

/// Sample positions belonging to one tree node.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NodeSubset {
    indices: Vec<usize>,
}

impl NodeSubset {
    pub fn new(indices: Vec<usize>) -> Self {
        NodeSubset { indices }
    }

    #[inline]
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// A scored predicate `feature <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateSplit {
    pub feature: usize,
    /// An observed value of `feature` inside the node.
    pub threshold: f64,
    pub statistic: f64,
    pub dof: u64,
    /// Natural log of the upper-tail probability.
    pub log_p: f64,
}

/// Strictly increasing distinct values of `feature` over `subset`.
pub fn distinct_values(ds: &Dataset, subset: &NodeSubset, feature: usize) -> Vec<f64> {
    assert!(!subset.is_empty(), "distinct_values on an empty subset");
    assert!(feature < ds.m(), "feature {feature} out of range");
    let col = ds.column(feature);
    let mut values: Vec<f64> = subset.indices().iter().map(|&i| col[i]).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

/// Partitions `subset` into `feature <= threshold` and its complement.
pub fn apply_split(
    ds: &Dataset,
    subset: &NodeSubset,
    feature: usize,
    threshold: f64,
) -> (NodeSubset, NodeSubset) {
    assert!(feature < ds.m(), "feature {feature} out of range");
    let col = ds.column(feature);
    let (left, right): (Vec<usize>, Vec<usize>) =
        subset.indices().iter().partition(|&&i| col[i] <= threshold);
    (NodeSubset::new(left), NodeSubset::new(right))
}

/// One node of the tree arena.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// Creation-order id, equal to the node's arena position.
    pub id: usize,
    pub subset: NodeSubset,
    /// Present iff the node is internal.
    pub split: Option<CandidateSplit>,
    pub children: Option<(usize, usize)>,
    /// Present iff the node is a leaf of a finalized tree.
    pub leaf_cluster: Option<usize>,
    pub depth: usize,
    /// Cached best-split search, computed at most once.
    pub search: Option<SearchOutcome>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// One frontier expansion, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub node: usize,
    pub feature: usize,
    pub threshold: f64,
    pub statistic: f64,
    pub dof: u64,
    pub log_p: f64,
}

/// Binary decision tree whose leaves are the consensus clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    k_target: usize,
    n_samples: usize,
    expansions: Vec<Expansion>,
    early_stop: bool,
    finalized: bool,
}

/// A node's split and children, as stored in a serialized tree.
pub(crate) type NodeShape = (Option<CandidateSplit>, Option<(usize, usize)>);

impl Tree {
    /// A fresh tree whose root holds `root`.
    pub fn with_root(root: NodeSubset, n_samples: usize, k_target: usize) -> Self {
        Tree {
            nodes: vec![TreeNode {
                id: 0,
                subset: root,
                split: None,
                children: None,
                leaf_cluster: None,
                depth: 0,
                search: None,
            }],
            k_target,
            n_samples,
            expansions: Vec::new(),
            early_stop: false,
            finalized: false,
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub(crate) fn node_mut(&mut self, id: usize) -> &mut TreeNode {
        &mut self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn k_target(&self) -> usize {
        self.k_target
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    /// True when the frontier ran dry before `k_target` leaves existed.
    pub fn early_stopped(&self) -> bool {
        self.early_stop
    }

    pub(crate) fn set_early_stop(&mut self) {
        self.early_stop = true;
    }

    /// Leaf ids in creation order.
    pub fn leaves(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.id)
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Recorded expansions, one per internal node, in execution order.
    pub fn expansion_trace(&self) -> &[Expansion] {
        &self.expansions
    }

    /// Splits leaf `id` with `split`, creating the left then the right child.
    pub(crate) fn expand(
        &mut self,
        id: usize,
        split: CandidateSplit,
        left: NodeSubset,
        right: NodeSubset,
    ) -> (usize, usize) {
        debug_assert!(self.nodes[id].is_leaf());
        let depth = self.nodes[id].depth + 1;
        let left_id = self.nodes.len();
        let right_id = left_id + 1;
        for (nid, subset) in [(left_id, left), (right_id, right)] {
            self.nodes.push(TreeNode {
                id: nid,
                subset,
                split: None,
                children: None,
                leaf_cluster: None,
                depth,
                search: None,
            });
        }
        let node = &mut self.nodes[id];
        node.split = Some(split);
        node.children = Some((left_id, right_id));
        self.expansions.push(Expansion {
            node: id,
            feature: split.feature,
            threshold: split.threshold,
            statistic: split.statistic,
            dof: split.dof,
            log_p: split.log_p,
        });
        (left_id, right_id)
    }

    /// Assigns leaf cluster ids in leaf-creation order and freezes the tree.
    pub(crate) fn finalize(&mut self) {
        let mut next = 0;
        for node in &mut self.nodes {
            if node.is_leaf() {
                node.leaf_cluster = Some(next);
                next += 1;
            } else {
                node.leaf_cluster = None;
            }
        }
        self.finalized = true;
    }

    /// Cluster id of every sample, taken from the unique leaf holding it.
    pub fn assign_clusters(&self) -> Result<Vec<usize>> {
        if !self.finalized {
            return Err(Error::contract("assign_clusters on an unfinalized tree"));
        }
        let mut out = vec![usize::MAX; self.n_samples];
        for node in self.nodes.iter().filter(|n| n.is_leaf()) {
            let cluster = node
                .leaf_cluster
                .ok_or_else(|| Error::contract(format!("leaf {} has no cluster id", node.id)))?;
            for &i in node.subset.indices() {
                if out[i] != usize::MAX {
                    return Err(Error::contract(format!("sample {i} lies in two leaves")));
                }
                out[i] = cluster;
            }
        }
        if let Some(i) = out.iter().position(|&c| c == usize::MAX) {
            return Err(Error::contract(format!("sample {i} lies in no leaf")));
        }
        Ok(out)
    }

    /// Leaf depths in creation order.
    pub fn leaf_depths(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.depth)
            .collect()
    }

    /// Routes a feature row to its leaf and returns that leaf's cluster id.
    pub fn route(&self, row: &[f64]) -> Option<usize> {
        let mut id = self.root();
        loop {
            let node = &self.nodes[id];
            match (node.split, node.children) {
                (Some(s), Some((l, r))) => {
                    id = if row[s.feature] <= s.threshold { l } else { r };
                }
                _ => return node.leaf_cluster,
            }
        }
    }

    /// Rebuilds a finalized tree from an explicit node description,
    /// routing every dataset sample from the root. Nodes must be listed in
    /// creation order with the root first.
    pub(crate) fn from_structure(
        ds: &Dataset,
        k_target: usize,
        structure: &[NodeShape],
        expansions: Vec<Expansion>,
        early_stop: bool,
    ) -> Result<Self> {
        if structure.is_empty() {
            return Err(Error::input("tree has no nodes"));
        }
        let mut tree = Tree::with_root(ds.full_subset(), ds.n(), k_target);
        // children are always created after their parent, so a forward pass
        // visits every parent first
        let mut subsets: Vec<Option<NodeSubset>> = vec![None; structure.len()];
        let mut depths = vec![0usize; structure.len()];
        subsets[0] = Some(ds.full_subset());
        let mut nodes = Vec::with_capacity(structure.len());
        for (id, (split, children)) in structure.iter().enumerate() {
            let subset = subsets[id]
                .take()
                .ok_or_else(|| Error::input(format!("node {id} is unreachable from the root")))?;
            match (split, children) {
                (Some(s), Some((l, r))) => {
                    if *l <= id
                        || *r <= id
                        || *l >= structure.len()
                        || *r >= structure.len()
                        || l == r
                    {
                        return Err(Error::input(format!("node {id} has invalid children")));
                    }
                    if s.feature >= ds.m() {
                        return Err(Error::input(format!(
                            "node {id} splits on feature {} but dataset has {}",
                            s.feature,
                            ds.m()
                        )));
                    }
                    let (left, right) = apply_split(ds, &subset, s.feature, s.threshold);
                    for (c, sub) in [(*l, left), (*r, right)] {
                        if subsets[c].is_some() {
                            return Err(Error::input(format!("node {c} has two parents")));
                        }
                        subsets[c] = Some(sub);
                        depths[c] = depths[id] + 1;
                    }
                }
                (None, None) => {}
                _ => {
                    return Err(Error::input(format!(
                        "node {id} must have both a split and children, or neither"
                    )))
                }
            }
            nodes.push(TreeNode {
                id,
                subset,
                split: *split,
                children: *children,
                leaf_cluster: None,
                depth: depths[id],
                search: None,
            });
        }
        tree.nodes = nodes;
        tree.expansions = expansions;
        tree.early_stop = early_stop;
        tree.finalize();
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_feature(values: &[f64]) -> Dataset {
        Dataset::from_columns(vec![values.to_vec()], vec!["x".into()], None).unwrap()
    }

    #[test]
    fn distinct_values_dedups_and_sorts() {
        let ds = one_feature(&[5.1, 3.0, 5.1, 4.2]);
        assert_eq!(
            distinct_values(&ds, &ds.full_subset(), 0),
            vec![3.0, 4.2, 5.1]
        );
        let ds = one_feature(&[2.0, 2.0, 2.0]);
        assert_eq!(distinct_values(&ds, &ds.full_subset(), 0), vec![2.0]);
        let ds = one_feature(&[1.0, 7.5]);
        assert_eq!(
            distinct_values(&ds, &NodeSubset::new(vec![1]), 0),
            vec![7.5]
        );
    }

    #[test]
    fn apply_split_boundaries() {
        let ds = one_feature(&[1.0, 2.0, 3.0, 4.0]);
        let all = ds.full_subset();
        let (l, r) = apply_split(&ds, &all, 0, 2.0);
        assert_eq!(l.indices(), &[0, 1]);
        assert_eq!(r.indices(), &[2, 3]);
        let (l, r) = apply_split(&ds, &all, 0, 4.0);
        assert_eq!(l.len(), 4);
        assert!(r.is_empty());
        let (l, r) = apply_split(&ds, &all, 0, 0.5);
        assert!(l.is_empty());
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn apply_split_preserves_order() {
        let ds = one_feature(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        let sub = NodeSubset::new(vec![4, 2, 0, 1, 3]);
        let (l, r) = apply_split(&ds, &sub, 0, 3.0);
        assert_eq!(l.indices(), &[2, 1, 3]);
        assert_eq!(r.indices(), &[4, 0]);
    }

    #[test]
    fn dataset_rejects_bad_input() {
        assert!(Dataset::from_columns(vec![vec![f64::NAN]], vec!["a".into()], None).is_err());
        assert!(Dataset::from_columns(
            vec![vec![1.0], vec![2.0]],
            vec!["a".into(), "a".into()],
            None
        )
        .is_err());
        assert!(Dataset::from_columns(vec![vec![]], vec!["a".into()], None).is_err());
        let labels = Labels::from_strings(&["x", "y"]);
        assert!(one_feature(&[1.0]).with_labels(labels).is_err());
    }

    #[test]
    fn ensemble_alphabet_is_one_plus_max() {
        let e = Ensemble::new(vec![vec![0, 2, 1], vec![0, 0, 0]]).unwrap();
        assert_eq!(e.alphabet_sizes(), &[3, 1]);
        assert_eq!(e.labels_of(1), vec![2, 0]);
        assert!(Ensemble::new(vec![vec![0, 1], vec![0]]).is_err());
    }

    #[test]
    fn single_leaf_assigns_zero() {
        let ds = one_feature(&[1.0, 2.0, 3.0]);
        let mut tree = Tree::with_root(ds.full_subset(), 3, 1);
        assert!(tree.assign_clusters().unwrap_err().is_contract());
        tree.finalize();
        assert_eq!(tree.assign_clusters().unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn two_leaf_labels_match_apply_split() {
        let ds = one_feature(&[3.0, 1.0, 4.0, 1.5, 9.0, 2.6]);
        let root = ds.full_subset();
        let mut tree = Tree::with_root(root.clone(), ds.n(), 2);
        let (l, r) = apply_split(&ds, &root, 0, 2.6);
        let split = CandidateSplit {
            feature: 0,
            threshold: 2.6,
            statistic: 0.0,
            dof: 0,
            log_p: 0.0,
        };
        tree.expand(0, split, l.clone(), r.clone());
        tree.finalize();
        let labels = tree.assign_clusters().unwrap();
        for &i in l.indices() {
            assert_eq!(labels[i], 0);
        }
        for &i in r.indices() {
            assert_eq!(labels[i], 1);
        }
        for (i, &label) in labels.iter().enumerate() {
            assert_eq!(tree.route(&ds.row(i)), Some(label));
        }
        assert_eq!(tree.leaf_depths(), vec![1, 1]);
    }
}
