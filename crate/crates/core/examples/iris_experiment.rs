// The repeated-run protocol on Iris: ten seeded ensembles, one tree each,
// mean and standard deviation of every metric.

use std::path::Path;

use ice::cli::{render_summary, run_experiment, ExperimentConfig};
use ice::{load_dataset, DataFileSpec};

pub fn run_example() -> ice::Result<()> {
    let iris = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv");
    let (ds, _) = load_dataset(&DataFileSpec::new(iris).with_label_column("species"))?;

    let config = ExperimentConfig {
        master_seed: 2024,
        ..ExperimentConfig::default()
    };
    let outcome = run_experiment(&ds, &config);
    if let Some(e) = outcome.error {
        return Err(e);
    }
    let summary = outcome.summary.expect("summary on success");
    print!("{}", render_summary(&summary));
    assert_eq!(summary.runs.len(), 10);
    Ok(())
}

fn main() -> ice::Result<()> {
    run_example()
}
