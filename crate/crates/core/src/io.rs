//! Delimited data and ensemble files, the JSON tree document, and dot/text
//! renderings of a tree.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bases::EnsembleSpec;
use crate::error::{Error, Result};
use crate::model::{CandidateSplit, Dataset, Ensemble, Expansion, Labels, NodeShape, Tree};

/// Where and how to read a delimited data file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataFileSpec {
    pub path: PathBuf,
    /// Column holding ground-truth classes, excluded from the features.
    pub label_column: Option<String>,
    pub delimiter: u8,
    /// Cell values (after trimming) that mark a missing entry.
    pub missing_markers: Vec<String>,
}

impl DataFileSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        DataFileSpec {
            path: path.into(),
            label_column: None,
            delimiter: b',',
            missing_markers: vec![String::new(), "?".into(), "NA".into()],
        }
    }

    pub fn with_label_column(mut self, name: impl Into<String>) -> Self {
        self.label_column = Some(name.into());
        self
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }

    pub fn with_missing_markers<S: Into<String>>(
        mut self,
        markers: impl IntoIterator<Item = S>,
    ) -> Self {
        self.missing_markers = markers.into_iter().map(Into::into).collect();
        self
    }
}

/// Reads a headed delimited file, dropping every row with a missing marker.
/// Returns the dataset and the number of dropped rows.
pub fn load_dataset(spec: &DataFileSpec) -> Result<(Dataset, usize)> {
    let file = fs::File::open(&spec.path).map_err(|e| Error::io(&spec.path, e))?;
    read_dataset(file, spec)
}

fn read_dataset<R: std::io::Read>(reader: R, spec: &DataFileSpec) -> Result<(Dataset, usize)> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    for (k, h) in headers.iter().enumerate() {
        if headers[..k].contains(h) {
            return Err(Error::input(format!(
                "{}: duplicate column name `{h}`",
                spec.path.display()
            )));
        }
    }
    let label_idx = match &spec.label_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::input(format!(
                "{}: label column `{name}` not found",
                spec.path.display()
            ))
        })?),
        None => None,
    };
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&k| Some(k) != label_idx)
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::input(format!(
            "{}: no feature columns",
            spec.path.display()
        )));
    }

    let mut columns = vec![Vec::new(); feature_idx.len()];
    let mut raw_labels = Vec::new();
    let mut dropped = 0;
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::Parse {
                path: spec.path.clone(),
                line,
                column: String::new(),
                message: format!("{} fields, expected {}", record.len(), headers.len()),
            });
        }
        if record
            .iter()
            .any(|cell| spec.missing_markers.iter().any(|m| m == cell))
        {
            dropped += 1;
            continue;
        }
        for (col, &k) in columns.iter_mut().zip(&feature_idx) {
            let cell = &record[k];
            let value: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    path: spec.path.clone(),
                    line,
                    column: headers[k].clone(),
                    message: format!("`{cell}` is not a finite number"),
                })?;
            col.push(value);
        }
        if let Some(k) = label_idx {
            raw_labels.push(record[k].to_string());
        }
    }
    if columns[0].is_empty() {
        return Err(Error::input(format!(
            "{}: empty dataset",
            spec.path.display()
        )));
    }
    let names = feature_idx.iter().map(|&k| headers[k].clone()).collect();
    let labels = label_idx.map(|_| Labels::from_strings(&raw_labels));
    Ok((Dataset::from_columns(columns, names, labels)?, dropped))
}

/// Writes a dataset with a header row; labels, if any, go last under
/// `label_column`. Values use the shortest decimal that reads back exactly.
pub fn save_dataset(ds: &Dataset, path: &Path, label_column: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    if ds.labels().is_some() {
        header.push(label_column);
    }
    wtr.write_record(&header)?;
    for i in 0..ds.n() {
        let mut row: Vec<String> = (0..ds.m()).map(|j| format!("{}", ds.value(i, j))).collect();
        if let Some(l) = ds.labels() {
            row.push(l.names[l.codes[i] as usize].clone());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Metadata carried on the first line of an ensemble file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnsembleHeader {
    pub c: usize,
    pub n: usize,
    pub spec: Option<EnsembleSpec>,
}

const ENSEMBLE_MAGIC: &str = "# ice-ensemble";

/// Ensemble files hold one header line followed by `n` rows of `c`
/// comma-separated integer labels.
pub fn write_ensemble(ensemble: &Ensemble, spec: Option<&EnsembleSpec>) -> String {
    let mut out = format!("{ENSEMBLE_MAGIC} c={} n={}", ensemble.c(), ensemble.n());
    if let Some(s) = spec {
        let _ = write!(out, " seed={} k_min={} k_max={}", s.seed, s.k_min, s.k_max);
    }
    out.push('\n');
    for i in 0..ensemble.n() {
        let row: Vec<String> = ensemble
            .partitions()
            .iter()
            .map(|p| p[i].to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn save_ensemble(path: &Path, ensemble: &Ensemble, spec: Option<&EnsembleSpec>) -> Result<()> {
    fs::write(path, write_ensemble(ensemble, spec)).map_err(|e| Error::io(path, e))
}

pub fn parse_ensemble(text: &str, path: &Path) -> Result<(Ensemble, EnsembleHeader)> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::input(format!("{}: empty ensemble file", path.display())))?;
    let rest = first.strip_prefix(ENSEMBLE_MAGIC).ok_or_else(|| {
        Error::input(format!(
            "{}: missing `{ENSEMBLE_MAGIC}` header",
            path.display()
        ))
    })?;
    let bad_header = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        column: String::new(),
        message: msg,
    };
    let mut header = EnsembleHeader::default();
    let (mut seed, mut k_min, mut k_max) = (None, None, None);
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad_header(format!("malformed header field `{field}`")))?;
        let num: u64 = value
            .parse()
            .map_err(|_| bad_header(format!("`{field}` is not an integer")))?;
        match key {
            "c" => header.c = num as usize,
            "n" => header.n = num as usize,
            "seed" => seed = Some(num),
            "k_min" => k_min = Some(num as usize),
            "k_max" => k_max = Some(num as usize),
            _ => {}
        }
    }
    if let (Some(seed), Some(k_min), Some(k_max)) = (seed, k_min, k_max) {
        header.spec = Some(EnsembleSpec {
            c: header.c,
            k_min,
            k_max,
            seed,
        });
    }
    if header.c == 0 {
        return Err(bad_header("header must declare c >= 1".into()));
    }

    let mut partitions = vec![Vec::new(); header.c];
    for (k, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.c {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: k as u64 + 1,
                column: String::new(),
                message: format!("{} labels, expected {}", cells.len(), header.c),
            });
        }
        for (t, cell) in cells.iter().enumerate() {
            let label: u32 = cell.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: k as u64 + 1,
                column: format!("p{t}"),
                message: format!("`{cell}` is not a non-negative integer"),
            })?;
            partitions[t].push(label);
        }
    }
    let rows = partitions[0].len();
    if header.n != 0 && rows != header.n {
        return Err(Error::input(format!(
            "{}: header declares n={} but file has {rows} rows",
            path.display(),
            header.n
        )));
    }
    header.n = rows;
    Ok((Ensemble::new(partitions)?, header))
}

pub fn load_ensemble(path: &Path) -> Result<(Ensemble, EnsembleHeader)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ensemble(&text, path)
}

/// Loads an ensemble and checks it labels exactly the samples of `ds`.
pub fn load_ensemble_for(path: &Path, ds: &Dataset) -> Result<(Ensemble, EnsembleHeader)> {
    let (ens, header) = load_ensemble(path)?;
    ens.check_aligned(ds)?;
    Ok((ens, header))
}

/// Identity of the dataset a tree was built on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub n: usize,
    pub m: usize,
    pub feature_names: Vec<String>,
    /// SHA-256 over the feature values (little-endian bits, column-major).
    pub content_hash: String,
}

impl DatasetFingerprint {
    pub fn of(ds: &Dataset) -> Self {
        let mut h = Sha256::new();
        h.update((ds.n() as u64).to_le_bytes());
        h.update((ds.m() as u64).to_le_bytes());
        for name in ds.feature_names() {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
        }
        for col in ds.columns() {
            for v in col {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        DatasetFingerprint {
            n: ds.n(),
            m: ds.m(),
            feature_names: ds.feature_names().to_vec(),
            content_hash: hex::encode(h.finalize()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildMetadata {
    pub k_target: usize,
    pub min_side: usize,
    pub early_stop: bool,
    /// Whether features were standardized before building.
    pub standardized_features: bool,
    pub ensemble: Option<EnsembleSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Internal,
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub kind: NodeKind,
    pub depth: usize,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feature: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feature_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dof: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub children: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub leaf_cluster: Option<usize>,
}

pub const TREE_FORMAT_VERSION: u32 = 1;

/// Versioned, self-describing serialization of a finalized tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub format_version: u32,
    pub dataset: DatasetFingerprint,
    pub build: BuildMetadata,
    pub nodes: Vec<NodeRecord>,
    pub trace: Vec<Expansion>,
}

impl TreeDocument {
    pub fn from_tree(
        tree: &Tree,
        ds: &Dataset,
        ensemble: Option<EnsembleSpec>,
        min_side: usize,
        standardized_features: bool,
    ) -> Self {
        let nodes = tree
            .nodes()
            .iter()
            .map(|node| {
                let split = node.split;
                NodeRecord {
                    id: node.id,
                    kind: if node.is_leaf() {
                        NodeKind::Leaf
                    } else {
                        NodeKind::Internal
                    },
                    depth: node.depth,
                    samples: node.subset.len(),
                    feature: split.map(|s| ds.feature_names()[s.feature].clone()),
                    feature_index: split.map(|s| s.feature),
                    threshold: split.map(|s| s.threshold),
                    statistic: split.map(|s| s.statistic),
                    dof: split.map(|s| s.dof),
                    log_p: split.map(|s| s.log_p),
                    children: node.children.map(|(l, r)| [l, r]),
                    leaf_cluster: node.leaf_cluster,
                }
            })
            .collect();
        TreeDocument {
            format_version: TREE_FORMAT_VERSION,
            dataset: DatasetFingerprint::of(ds),
            build: BuildMetadata {
                k_target: tree.k_target(),
                min_side,
                early_stop: tree.early_stopped(),
                standardized_features,
                ensemble,
            },
            nodes,
            trace: tree.expansion_trace().to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument = serde_json::from_str(text)?;
        if doc.format_version != TREE_FORMAT_VERSION {
            return Err(Error::input(format!(
                "unsupported tree format version {}",
                doc.format_version
            )));
        }
        doc.check_structure()?;
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Single rooted binary tree with consistent sample counts.
    fn check_structure(&self) -> Result<()> {
        let mut parents = vec![0usize; self.nodes.len()];
        for (k, node) in self.nodes.iter().enumerate() {
            if node.id != k {
                return Err(Error::input(format!(
                    "node at position {k} has id {}",
                    node.id
                )));
            }
            match (node.kind, node.children) {
                (NodeKind::Internal, Some([l, r])) => {
                    for c in [l, r] {
                        let child = self.nodes.get(c).ok_or_else(|| {
                            Error::input(format!("node {k} has missing child {c}"))
                        })?;
                        parents[c] += 1;
                        if child.depth != node.depth + 1 {
                            return Err(Error::input(format!("node {c} has inconsistent depth")));
                        }
                    }
                    if self.nodes[l].samples + self.nodes[r].samples != node.samples {
                        return Err(Error::input(format!(
                            "node {k}: children sample counts do not add up"
                        )));
                    }
                }
                (NodeKind::Leaf, None) => {}
                _ => {
                    return Err(Error::input(format!(
                        "node {k}: kind and children disagree"
                    )))
                }
            }
        }
        if parents.first().copied().unwrap_or(1) != 0 || parents.iter().skip(1).any(|&p| p != 1) {
            return Err(Error::input("nodes do not form a single rooted tree"));
        }
        Ok(())
    }

    /// Re-creates the tree over `ds`, which must match the fingerprint.
    pub fn to_tree(&self, ds: &Dataset) -> Result<Tree> {
        let fp = DatasetFingerprint::of(ds);
        if fp != self.dataset {
            return Err(Error::input(format!(
                "dataset fingerprint mismatch: tree built on n={} m={} hash {}, got n={} m={} hash {}",
                self.dataset.n, self.dataset.m, self.dataset.content_hash, fp.n, fp.m, fp.content_hash
            )));
        }
        let structure: Vec<NodeShape> = self
            .nodes
            .iter()
            .map(|node| match node.kind {
                NodeKind::Internal => {
                    let split = CandidateSplit {
                        feature: node.feature_index.unwrap_or(usize::MAX),
                        threshold: node.threshold.unwrap_or(f64::NAN),
                        statistic: node.statistic.unwrap_or(0.0),
                        dof: node.dof.unwrap_or(0),
                        log_p: node.log_p.unwrap_or(0.0),
                    };
                    (Some(split), node.children.map(|[l, r]| (l, r)))
                }
                NodeKind::Leaf => (None, None),
            })
            .collect();
        let tree = Tree::from_structure(
            ds,
            self.build.k_target,
            &structure,
            self.trace.clone(),
            self.build.early_stop,
        )?;
        for (node, rec) in tree.nodes().iter().zip(&self.nodes) {
            if node.subset.len() != rec.samples {
                return Err(Error::input(format!(
                    "node {}: {} samples routed, document records {}",
                    node.id,
                    node.subset.len(),
                    rec.samples
                )));
            }
        }
        Ok(tree)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Structured,
    Dot,
    Text,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" | "structured" => Ok(ExportFormat::Structured),
            "dot" => Ok(ExportFormat::Dot),
            "text" | "txt" => Ok(ExportFormat::Text),
            other => Err(Error::input(format!("unknown export format `{other}`"))),
        }
    }
}

pub fn export_tree(doc: &TreeDocument, format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Structured => doc.to_json(),
        ExportFormat::Dot => Ok(render_dot(doc)),
        ExportFormat::Text => Ok(render_text(doc)),
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn render_dot(doc: &TreeDocument) -> String {
    let mut out = String::from("digraph ice {\n    node [shape=box, fontname=\"Helvetica\"];\n");
    for node in &doc.nodes {
        match node.kind {
            NodeKind::Internal => {
                let name = node.feature.as_deref().unwrap_or("?");
                let _ = writeln!(
                    out,
                    "    n{} [label=\"{} ≤ {}\"];",
                    node.id,
                    dot_escape(name),
                    node.threshold.unwrap_or(f64::NAN)
                );
            }
            NodeKind::Leaf => {
                let _ = writeln!(
                    out,
                    "    n{} [label=\"cluster {}\\n{} samples\", shape=ellipse];",
                    node.id,
                    node.leaf_cluster.unwrap_or(0),
                    node.samples
                );
            }
        }
    }
    for node in &doc.nodes {
        if let Some([l, r]) = node.children {
            let _ = writeln!(out, "    n{} -> n{} [label=\"yes\"];", node.id, l);
            let _ = writeln!(out, "    n{} -> n{} [label=\"no\"];", node.id, r);
        }
    }
    out.push_str("}\n");
    out
}

fn render_text(doc: &TreeDocument) -> String {
    let mut out = String::new();
    if doc.nodes.is_empty() {
        return out;
    }
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        let node = &doc.nodes[id];
        let indent = "  ".repeat(node.depth);
        match node.kind {
            NodeKind::Internal => {
                let _ = writeln!(
                    out,
                    "{indent}{} <= {}  [n={}, chi2={:.4}, dof={}, log_p={:.4}]",
                    node.feature.as_deref().unwrap_or("?"),
                    node.threshold.unwrap_or(f64::NAN),
                    node.samples,
                    node.statistic.unwrap_or(0.0),
                    node.dof.unwrap_or(0),
                    node.log_p.unwrap_or(0.0),
                );
                if let Some([l, r]) = node.children {
                    stack.push(r);
                    stack.push(l);
                }
            }
            NodeKind::Leaf => {
                let _ = writeln!(
                    out,
                    "{indent}cluster {}  [n={}]",
                    node.leaf_cluster.unwrap_or(0),
                    node.samples
                );
            }
        }
    }
    out
}
