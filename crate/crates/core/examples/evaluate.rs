// Scoring clusters against ground truth, for a tree and for raw labelings.

use std::path::Path;

use ice::{
    build_tree, generate_ensemble, load_dataset, nmi, pairwise_f1, purity, BuildConfig,
    DataFileSpec, EnsembleSpec, MetricsReport,
};

pub fn run_example() -> ice::Result<()> {
    let iris = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv");
    let (ds, _) = load_dataset(&DataFileSpec::new(iris).with_label_column("species"))?;
    let truth = ds.labels().expect("label column").codes.clone();

    let generated = generate_ensemble(&ds, &EnsembleSpec::for_k(3, 5))?;
    let tree = build_tree(
        &ds,
        &generated.ensemble,
        &BuildConfig::for_dataset(&ds, None)?,
    )?;
    let r = MetricsReport::for_tree(&tree, &truth)?;
    println!(
        "tree: purity {:.4}  F1 {:.4}  NMI {:.4}  depth max {} avg {:.2}",
        r.purity, r.f1, r.nmi, r.max_depth, r.avg_depth
    );

    // the metrics accept any hashable labels
    let pred = ["a", "a", "b", "b", "b"];
    let gold = [1, 1, 1, 2, 2];
    println!(
        "toy: purity {:.3}  F1 {:.3}  NMI {:.3}",
        purity(&pred, &gold)?,
        pairwise_f1(&pred, &gold)?,
        nmi(&pred, &gold)?
    );
    Ok(())
}

fn main() -> ice::Result<()> {
    run_example()
}
