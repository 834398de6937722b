//! Command implementations behind the `ice` binary.
//!
//! Each command is an ordinary function returning its printable report so
//! that tests can drive it without spawning a process.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::{derive_seed, generate_ensemble, standardize, EnsembleSpec, MemberInfo};
use crate::error::{Error, Result};
use crate::io::{
    export_tree, load_dataset, load_ensemble_for, save_ensemble, DataFileSpec, ExportFormat,
    TreeDocument,
};
use crate::metrics::MetricsReport;
use crate::model::Dataset;
use crate::tree::{build_tree, BuildConfig};

#[derive(Debug, Parser)]
#[command(name = "ice", version, about = "Interpretable clustering ensembles")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate k-means base partitions for a dataset.
    GenBases {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        ensemble: EnsembleArgs,
        /// Output ensemble file; metadata goes to `<out>.meta.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a tree from a dataset and an ensemble file.
    Build {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        bases: PathBuf,
        /// Leaf count; defaults to the number of classes in the label column.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = crate::split::DEFAULT_MIN_SIDE)]
        min_side: usize,
        /// Standardize features before building (thresholds become z-scores).
        #[arg(long)]
        standardize_tree: bool,
        /// Output tree document (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a built tree against the dataset's label column.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        tree: PathBuf,
    },
    /// Render a tree document as json, dot or text.
    Render {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Repeated generate/build/evaluate runs with summary statistics.
    Experiment {
        #[command(flatten)]
        data: DataArgs,
        /// Ensemble size.
        #[arg(long, default_value_t = 30)]
        c: usize,
        /// Override the base cluster-count range as `MIN..MAX` (inclusive).
        #[arg(long)]
        k_range: Option<String>,
        /// Leaf count; defaults to the number of classes.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        standardize_tree: bool,
        /// Directory for runs.csv, summary.json and summary.txt.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Also write each run's tree in this format (json, dot, text).
        #[arg(long)]
        export: Option<String>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Delimited data file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the ground-truth column.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    /// Comma-separated cell values treated as missing (default: empty, ?, NA).
    #[arg(long)]
    pub missing: Option<String>,
}

impl DataArgs {
    pub fn to_spec(&self) -> Result<DataFileSpec> {
        let delimiter = match self.delimiter.as_str() {
            "\\t" | "tab" => b'\t',
            d if d.len() == 1 => d.as_bytes()[0],
            d => {
                return Err(Error::input(format!(
                    "delimiter must be one byte, got `{d}`"
                )))
            }
        };
        let mut spec = DataFileSpec::new(&self.data).with_delimiter(delimiter);
        if let Some(label) = &self.label {
            spec = spec.with_label_column(label.clone());
        }
        if let Some(m) = &self.missing {
            spec = spec.with_missing_markers(m.split(',').map(str::to_string));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[arg(long, default_value_t = 30)]
    pub c: usize,
    /// Draw base cluster counts from `[k, 3k]`; defaults to the class count.
    #[arg(long)]
    pub k: Option<usize>,
    /// Explicit range `MIN..MAX` (inclusive), overriding `--k`.
    #[arg(long)]
    pub k_range: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::input(format!("range must look like MIN..MAX, got `{s}`")))?;
    let a = a
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("bad range start in `{s}`")))?;
    let b = b
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| Error::input(format!("bad range end in `{s}`")))?;
    Ok((a, b))
}

fn class_count(ds: &Dataset) -> Option<usize> {
    ds.labels().map(|l| l.class_count())
}

/// Resolves the base cluster-count range: explicit range, else `[k, 3k]`.
fn resolve_k_range(ds: &Dataset, k: Option<usize>, range: Option<&str>) -> Result<(usize, usize)> {
    if let Some(r) = range {
        return parse_range(r);
    }
    let k = k.or_else(|| class_count(ds)).ok_or_else(|| {
        Error::input("need --k or --k-range when the dataset has no label column")
    })?;
    Ok((k, 3 * k))
}

fn load(data: &DataArgs) -> Result<(Dataset, usize)> {
    load_dataset(&data.to_spec()?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BasesSidecar {
    pub spec: EnsembleSpec,
    pub n: usize,
    pub dropped_rows: usize,
    pub members: Vec<MemberInfo>,
}

pub fn cmd_gen_bases(data: &DataArgs, ens: &EnsembleArgs, out: &Path) -> Result<String> {
    let (ds, dropped) = load(data)?;
    let (k_min, k_max) = resolve_k_range(&ds, ens.k, ens.k_range.as_deref())?;
    let spec = EnsembleSpec {
        c: ens.c,
        k_min,
        k_max,
        seed: ens.seed,
    };
    let gen = generate_ensemble(&ds, &spec)?;
    save_ensemble(out, &gen.ensemble, Some(&spec))?;
    let sidecar = BasesSidecar {
        spec,
        n: ds.n(),
        dropped_rows: dropped,
        members: gen.members.clone(),
    };
    let meta_path = sidecar_path(out);
    fs::write(&meta_path, serde_json::to_string_pretty(&sidecar)? + "\n")
        .map_err(|e| Error::io(&meta_path, e))?;
    let ks: Vec<String> = gen
        .members
        .iter()
        .map(|m| m.k_realized.to_string())
        .collect();
    Ok(format!(
        "wrote {} partitions over {} samples ({} rows dropped) to {}\nrealized cluster counts: {}\n",
        gen.ensemble.c(),
        ds.n(),
        dropped,
        out.display(),
        ks.join(" ")
    ))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Outcome of `build`: the report and whether the tree stopped early.
pub struct BuildReport {
    pub text: String,
    pub early_stop: bool,
    pub document: TreeDocument,
}

pub fn cmd_build(
    data: &DataArgs,
    bases: &Path,
    k: Option<usize>,
    min_side: usize,
    standardize_tree: bool,
    out: &Path,
) -> Result<BuildReport> {
    let (raw, _) = load(data)?;
    let ds = if standardize_tree {
        standardize(&raw)
    } else {
        raw
    };
    let (ens, header) = load_ensemble_for(bases, &ds)?;
    let mut config = BuildConfig::for_dataset(&ds, k)?;
    config.min_side = min_side;
    let tree = build_tree(&ds, &ens, &config)?;
    let doc = TreeDocument::from_tree(&tree, &ds, header.spec, min_side, standardize_tree);
    doc.save(out)?;
    let (max_depth, avg_depth) = crate::metrics::depth_metrics(&tree);
    let mut text = format!(
        "leaves: {}\nmax_depth: {}\navg_depth: {:.2}\n",
        tree.leaf_count(),
        max_depth,
        avg_depth
    );
    if tree.early_stopped() {
        let _ = writeln!(
            text,
            "warning: early stop, only {} of {} leaves admit the minimum side size",
            tree.leaf_count(),
            config.k_target
        );
    }
    Ok(BuildReport {
        text,
        early_stop: tree.early_stopped(),
        document: doc,
    })
}

pub fn cmd_eval(data: &DataArgs, tree_path: &Path) -> Result<(MetricsReport, String)> {
    let (raw, _) = load(data)?;
    let doc = TreeDocument::load(tree_path)?;
    let ds = if doc.build.standardized_features {
        standardize(&raw)
    } else {
        raw
    };
    let labels = ds
        .labels()
        .ok_or_else(|| Error::input("evaluation needs a label column (--label)"))?;
    let tree = doc.to_tree(&ds)?;
    let report = MetricsReport::for_tree(&tree, &labels.codes)?;
    let text = format!(
        "{}\n{}",
        serde_json::to_string(&report)?,
        metrics_table(&report)
    );
    Ok((report, text))
}

pub fn metrics_table(r: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:>8}", "metric", "value");
    let _ = writeln!(out, "{:<10} {:>8.4}", "purity", r.purity);
    let _ = writeln!(out, "{:<10} {:>8.4}", "f1", r.f1);
    let _ = writeln!(out, "{:<10} {:>8.4}", "nmi", r.nmi);
    let _ = writeln!(out, "{:<10} {:>8}", "maxDepth", r.max_depth);
    let _ = writeln!(out, "{:<10} {:>8.2}", "avgDepth", r.avg_depth);
    let _ = writeln!(out, "{:<10} {:>8}", "leaves", r.leaves);
    out
}

pub fn cmd_render(tree_path: &Path, format: &str) -> Result<String> {
    let doc = TreeDocument::load(tree_path)?;
    export_tree(&doc, format.parse()?)
}

/// Settings for a repeated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub c: usize,
    /// Explicit inclusive base cluster-count range; default `[k, 3k]`.
    pub k_range: Option<(usize, usize)>,
    /// Leaf count; default is the class count.
    pub k_target: Option<usize>,
    pub repeats: usize,
    pub master_seed: u64,
    pub standardize_tree: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            c: 30,
            k_range: None,
            k_target: None,
            repeats: 10,
            master_seed: 0,
            standardize_tree: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run: usize,
    pub seed: u64,
    pub metrics: MetricsReport,
    pub early_stop: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub k_target: usize,
    pub k_range: (usize, usize),
    pub runs: Vec<RunRow>,
    pub purity: MeanStd,
    pub f1: MeanStd,
    pub nmi: MeanStd,
    pub max_depth: MeanStd,
    pub avg_depth: MeanStd,
}

/// Experiment output plus anything produced before a failing run.
pub struct ExperimentOutcome {
    pub summary: Option<ExperimentSummary>,
    /// Successful runs in run order, up to the first failure.
    pub completed: Vec<RunRow>,
    pub error: Option<Error>,
    pub trees: Vec<TreeDocument>,
}

/// Generates, builds and evaluates `config.repeats` times; run `r` uses
/// seed `derive_seed(master_seed, r)`.
pub fn run_experiment(ds: &Dataset, config: &ExperimentConfig) -> ExperimentOutcome {
    let fail = |e: Error| ExperimentOutcome {
        summary: None,
        completed: Vec::new(),
        error: Some(e),
        trees: Vec::new(),
    };
    if config.repeats == 0 {
        return fail(Error::input("repeats must be >= 1"));
    }
    let Some(labels) = ds.labels() else {
        return fail(Error::input("experiments need a label column"));
    };
    let k_true = labels.class_count();
    let k_target = config.k_target.unwrap_or(k_true);
    let k_range = config.k_range.unwrap_or((k_true, 3 * k_true));
    let tree_ds = if config.standardize_tree {
        standardize(ds)
    } else {
        ds.clone()
    };

    let results: Vec<Result<(RunRow, TreeDocument)>> = (0..config.repeats)
        .into_par_iter()
        .map(|run| {
            let seed = derive_seed(config.master_seed, run as u64);
            let spec = EnsembleSpec {
                c: config.c,
                k_min: k_range.0,
                k_max: k_range.1,
                seed,
            };
            let gen = generate_ensemble(ds, &spec)?;
            let build = BuildConfig::new(k_target);
            let tree = build_tree(&tree_ds, &gen.ensemble, &build)?;
            let metrics = MetricsReport::for_tree(&tree, &labels.codes)?;
            let doc = TreeDocument::from_tree(
                &tree,
                &tree_ds,
                Some(spec),
                build.min_side,
                config.standardize_tree,
            );
            Ok((
                RunRow {
                    run,
                    seed,
                    metrics,
                    early_stop: tree.early_stopped(),
                },
                doc,
            ))
        })
        .collect();

    let mut completed = Vec::new();
    let mut trees = Vec::new();
    for r in results {
        match r {
            Ok((row, doc)) => {
                completed.push(row);
                trees.push(doc);
            }
            Err(e) => {
                return ExperimentOutcome {
                    summary: None,
                    completed,
                    error: Some(e),
                    trees,
                }
            }
        }
    }
    let rows = &completed;
    let summary = ExperimentSummary {
        config: config.clone(),
        k_target,
        k_range,
        purity: MeanStd::of(rows.iter().map(|r| r.metrics.purity)),
        f1: MeanStd::of(rows.iter().map(|r| r.metrics.f1)),
        nmi: MeanStd::of(rows.iter().map(|r| r.metrics.nmi)),
        max_depth: MeanStd::of(rows.iter().map(|r| r.metrics.max_depth as f64)),
        avg_depth: MeanStd::of(rows.iter().map(|r| r.metrics.avg_depth)),
        runs: completed.clone(),
    };
    ExperimentOutcome {
        summary: Some(summary),
        completed,
        error: None,
        trees,
    }
}

pub const RUNS_CSV_HEADER: &str = "run,seed,purity,f1,nmi,max_depth,avg_depth,leaves,early_stop";

fn run_csv_line(r: &RunRow) -> String {
    format!(
        "{},{},{:.4},{:.4},{:.4},{},{:.2},{},{}",
        r.run,
        r.seed,
        r.metrics.purity,
        r.metrics.f1,
        r.metrics.nmi,
        r.metrics.max_depth,
        r.metrics.avg_depth,
        r.metrics.leaves,
        r.early_stop
    )
}

/// Per-run rows followed by one `mean±std` summary row.
pub fn render_summary(s: &ExperimentSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5} {:>20} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "run", "seed", "purity", "f1", "nmi", "maxDep", "avgDep"
    );
    for r in &s.runs {
        let _ = writeln!(
            out,
            "{:>5} {:>20} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>8.2}{}",
            r.run,
            r.seed,
            r.metrics.purity,
            r.metrics.f1,
            r.metrics.nmi,
            r.metrics.max_depth,
            r.metrics.avg_depth,
            if r.early_stop { "  (early stop)" } else { "" }
        );
    }
    let ms = |m: MeanStd, p: usize| format!("{:.p$}±{:.p$}", m.mean, m.std);
    let _ = writeln!(
        out,
        "{:>5} {:>20} {} {} {} {} {}",
        "mean",
        "",
        ms(s.purity, 4),
        ms(s.f1, 4),
        ms(s.nmi, 4),
        ms(s.max_depth, 2),
        ms(s.avg_depth, 2)
    );
    out
}

/// Writes runs.csv, summary.json, summary.txt and optional tree exports.
/// Completed runs are written even when a later run failed.
pub fn write_experiment(
    dir: &Path,
    outcome: &ExperimentOutcome,
    export: Option<ExportFormat>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut csv = String::from(RUNS_CSV_HEADER);
    csv.push('\n');
    for r in &outcome.completed {
        csv.push_str(&run_csv_line(r));
        csv.push('\n');
    }
    let p = dir.join("runs.csv");
    fs::write(&p, csv).map_err(|e| Error::io(&p, e))?;
    if let Some(s) = &outcome.summary {
        let p = dir.join("summary.json");
        fs::write(&p, serde_json::to_string_pretty(s)? + "\n").map_err(|e| Error::io(&p, e))?;
        let p = dir.join("summary.txt");
        fs::write(&p, render_summary(s)).map_err(|e| Error::io(&p, e))?;
    }
    if let Some(fmt) = export {
        let ext = match fmt {
            ExportFormat::Structured => "json",
            ExportFormat::Dot => "dot",
            ExportFormat::Text => "txt",
        };
        for (r, doc) in outcome.completed.iter().zip(&outcome.trees) {
            let p = dir.join(format!("tree_run{:02}.{ext}", r.run));
            fs::write(&p, export_tree(doc, fmt)?).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_experiment(
    data: &DataArgs,
    c: usize,
    k_range: Option<&str>,
    k: Option<usize>,
    repeats: usize,
    seed: u64,
    standardize_tree: bool,
    out_dir: Option<&Path>,
    export: Option<&str>,
) -> Result<String> {
    let (ds, _) = load(data)?;
    let config = ExperimentConfig {
        c,
        k_range: k_range.map(parse_range).transpose()?,
        k_target: k,
        repeats,
        master_seed: seed,
        standardize_tree,
    };
    let export = export.map(str::parse::<ExportFormat>).transpose()?;
    let outcome = run_experiment(&ds, &config);
    if let Some(dir) = out_dir {
        write_experiment(dir, &outcome, export)?;
    }
    match (outcome.summary, outcome.error) {
        (Some(s), None) => Ok(render_summary(&s)),
        (_, Some(e)) => Err(e),
        (None, None) => Err(Error::contract(
            "experiment produced neither summary nor error",
        )),
    }
}

/// Runs `cli`, returning text for stdout and text for stderr.
pub fn run(cli: Cli) -> Result<(String, String)> {
    let exec = || -> Result<(String, String)> {
        match &cli.command {
            Command::GenBases {
                data,
                ensemble,
                out,
            } => Ok((cmd_gen_bases(data, ensemble, out)?, String::new())),
            Command::Build {
                data,
                bases,
                k,
                min_side,
                standardize_tree,
                out,
            } => {
                let report = cmd_build(data, bases, *k, *min_side, *standardize_tree, out)?;
                let warn = if report.early_stop {
                    "status: early_stop\n".to_string()
                } else {
                    String::new()
                };
                Ok((report.text, warn))
            }
            Command::Eval { data, tree } => Ok((cmd_eval(data, tree)?.1, String::new())),
            Command::Render { tree, format } => Ok((cmd_render(tree, format)?, String::new())),
            Command::Experiment {
                data,
                c,
                k_range,
                k,
                repeats,
                seed,
                standardize_tree,
                out_dir,
                export,
            } => Ok((
                cmd_experiment(
                    data,
                    *c,
                    k_range.as_deref(),
                    *k,
                    *repeats,
                    *seed,
                    *standardize_tree,
                    out_dir.as_deref(),
                    export.as_deref(),
                )?,
                String::new(),
            )),
        }
    };
    match cli.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::input(format!("cannot start {t} threads: {e}")))?;
            pool.install(exec)
        }
        None => exec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_range("3..9").unwrap(), (3, 9));
        assert_eq!(parse_range("3..=9").unwrap(), (3, 9));
        assert!(parse_range("3-9").is_err());
    }

    #[test]
    fn mean_std_of_one_is_zero() {
        let m = MeanStd::of([0.75].into_iter());
        assert_eq!((m.mean, m.std), (0.75, 0.0));
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(
            sidecar_path(Path::new("a/b.csv")),
            PathBuf::from("a/b.csv.meta.json")
        );
    }
}
