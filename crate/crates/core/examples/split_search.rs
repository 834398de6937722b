// Searching a node for its best threshold split.

use ice::{apply_split, optimal_split, Dataset, Ensemble, NodeSubset, DEFAULT_MIN_SIDE};

pub fn run_example() -> ice::Result<()> {
    let xs = [
        1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0,
    ];
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, (x * 3.0) % 4.0]).collect();
    let ds = Dataset::from_rows(&rows)?;
    let labels: Vec<u32> = (0..12).map(|i| (i >= 6) as u32).collect();
    let ensemble = Ensemble::new(vec![labels])?;

    let outcome = optimal_split(&ds, &ensemble, &ds.full_subset(), DEFAULT_MIN_SIDE);
    let best = outcome.best.expect("an admissible split exists");
    println!(
        "evaluated {} thresholds; best x{} <= {} with chi2 {} (dof {})",
        outcome.evaluated, best.feature, best.threshold, best.statistic, best.dof
    );
    let (left, right) = apply_split(&ds, &ds.full_subset(), best.feature, best.threshold);
    println!("left {:?}\nright {:?}", left.indices(), right.indices());

    // fewer than 2 * min_side samples can never be split
    let small = NodeSubset::new((0..9).collect());
    assert!(optimal_split(&ds, &ensemble, &small, DEFAULT_MIN_SIDE)
        .best
        .is_none());
    println!("a 9-sample node has no admissible split");
    Ok(())
}

fn main() -> ice::Result<()> {
    run_example()
}
