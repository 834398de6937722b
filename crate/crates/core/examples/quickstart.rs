// Smallest end-to-end use: a hand-written dataset and two base partitions
// consolidated into a two-cluster tree.

use ice::{build_tree, BuildConfig, Dataset, Ensemble};

pub fn run_example() -> ice::Result<()> {
    // two well-separated groups along x, noise along y
    let rows: Vec<Vec<f64>> = (0..24)
        .map(|i| {
            let x = if i < 12 {
                i as f64 * 0.1
            } else {
                5.0 + i as f64 * 0.1
            };
            vec![x, (i * 7 % 5) as f64]
        })
        .collect();
    let ds = Dataset::from_rows(&rows)?;

    // base partitions disagree a little, as real clusterings do
    let a: Vec<u32> = (0..24).map(|i| (i >= 12) as u32).collect();
    let b: Vec<u32> = (0..24)
        .map(|i| {
            if i < 10 {
                0
            } else if i < 18 {
                1
            } else {
                2
            }
        })
        .collect();
    let ensemble = Ensemble::new(vec![a, b])?;

    let tree = build_tree(&ds, &ensemble, &BuildConfig::new(2))?;
    let root = tree.node(tree.root()).split.expect("root is split");
    println!(
        "root split: x{} <= {} (chi2 = {:.2}, dof = {}, ln p = {:.2})",
        root.feature, root.threshold, root.statistic, root.dof, root.log_p
    );
    let clusters = tree.assign_clusters()?;
    println!("clusters: {clusters:?}");
    assert_eq!(clusters[0], 0);
    assert_eq!(clusters[23], 1);

    // new points are routed through the same predicates
    println!("route([6.0, 1.0]) -> cluster {:?}", tree.route(&[6.0, 1.0]));
    Ok(())
}

fn main() -> ice::Result<()> {
    run_example()
}
