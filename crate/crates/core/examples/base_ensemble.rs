// Generating k-means base partitions and round-tripping them through the
// ensemble file format.

use std::path::Path;

use ice::io::{load_ensemble_for, save_ensemble};
use ice::{generate_ensemble, kmeans, load_dataset, standardize, DataFileSpec, EnsembleSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let iris = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv");
    let (ds, _) = load_dataset(&DataFileSpec::new(iris).with_label_column("species"))?;

    // a single clustering on standardized features
    let km = kmeans(&standardize(&ds), 3, 7)?;
    println!(
        "k-means k=3: {} iterations, inertia {:.3}",
        km.iterations, km.inertia
    );

    // 30 members, cluster counts drawn from [3, 9]
    let generated = generate_ensemble(&ds, &EnsembleSpec::for_k(3, 42))?;
    let drawn: Vec<usize> = generated.members.iter().map(|m| m.k_drawn).collect();
    println!(
        "{} partitions, drawn cluster counts {drawn:?}",
        generated.ensemble.c()
    );

    let dir = std::env::temp_dir().join(format!("ice-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("iris.bases");
    save_ensemble(&path, &generated.ensemble, Some(&generated.spec))?;
    let (loaded, header) = load_ensemble_for(&path, &ds)?;
    assert_eq!(loaded, generated.ensemble);
    println!(
        "reloaded {} partitions over {} samples (seed {:?})",
        header.c,
        header.n,
        header.spec.map(|s| s.seed)
    );
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
