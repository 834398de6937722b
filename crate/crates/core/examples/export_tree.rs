// Serializing a tree and rendering it as text and Graphviz DOT.

use std::path::Path;

use ice::{
    build_tree, export_tree, generate_ensemble, load_dataset, BuildConfig, DataFileSpec,
    EnsembleSpec, ExportFormat, TreeDocument, DEFAULT_MIN_SIDE,
};

pub fn run_example() -> ice::Result<()> {
    let iris = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv");
    let (ds, _) = load_dataset(&DataFileSpec::new(iris).with_label_column("species"))?;
    let spec = EnsembleSpec::for_k(3, 1);
    let generated = generate_ensemble(&ds, &spec)?;
    let tree = build_tree(&ds, &generated.ensemble, &BuildConfig::new(3))?;

    let doc = TreeDocument::from_tree(&tree, &ds, Some(spec), DEFAULT_MIN_SIDE, false);
    println!("{}", export_tree(&doc, ExportFormat::Text)?);
    println!("{}", export_tree(&doc, ExportFormat::Dot)?);

    // the JSON document reproduces the tree against the same data
    let json = doc.to_json()?;
    let restored = TreeDocument::from_json(&json)?.to_tree(&ds)?;
    assert_eq!(restored.assign_clusters()?, tree.assign_clusters()?);
    println!("json document: {} bytes", json.len());
    Ok(())
}

fn main() -> ice::Result<()> {
    run_example()
}
