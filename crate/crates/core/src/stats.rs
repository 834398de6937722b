//! Contingency tables between a binary split and the base partitions, the
//! chi-squared association statistic, and its upper-tail probability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Ensemble, NodeSubset};

/// Which child a sample falls into under a candidate split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `feature <= threshold`
    Left = 0,
    Right = 1,
}

impl Side {
    #[inline]
    fn row(self) -> usize {
        self as usize
    }
}

/// A single `2 x p` table of (side, base label) counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    /// `rows[0]` is the left side, `rows[1]` the right side.
    pub rows: [Vec<u64>; 2],
}

impl ContingencyTable {
    pub fn new(left: Vec<u64>, right: Vec<u64>) -> Self {
        assert_eq!(left.len(), right.len(), "ragged contingency table");
        ContingencyTable {
            rows: [left, right],
        }
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row_totals(&self) -> (u64, u64) {
        (self.rows[0].iter().sum(), self.rows[1].iter().sum())
    }

    pub fn col_totals(&self) -> Vec<u64> {
        self.rows[0]
            .iter()
            .zip(&self.rows[1])
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Pearson statistic over one table given its marginals.
///
/// Expected counts are `row_total * col_total / total`; zero-expectation
/// cells contribute nothing.
#[inline]
fn pearson(rows: [&[u64]; 2], row_totals: [u64; 2], col_totals: &[u64]) -> f64 {
    let total = row_totals[0] + row_totals[1];
    if row_totals[0] == 0 || row_totals[1] == 0 {
        return 0.0;
    }
    let n = total as f64;
    let r = [row_totals[0] as f64, row_totals[1] as f64];
    let mut acc = 0.0;
    for (l, &col) in col_totals.iter().enumerate() {
        if col == 0 {
            continue;
        }
        let col = col as f64;
        for s in 0..2 {
            let expected = r[s] * col / n;
            let diff = rows[s][l] as f64 - expected;
            acc += diff * diff / expected;
        }
    }
    acc
}

/// Chi-squared statistic of a single `2 x p` table.
pub fn chi_squared_stat(table: &ContingencyTable) -> f64 {
    let (r0, r1) = table.row_totals();
    pearson(
        [&table.rows[0], &table.rows[1]],
        [r0, r1],
        &table.col_totals(),
    )
}

/// Aggregated association between a split and every base partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub statistic: f64,
    pub dof: u64,
    pub log_p: f64,
}

/// One contingency table per base partition, restricted to one node.
///
/// Columns exist only for base labels that occur in the node, so every
/// column total is at least one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTableSet {
    tables: Vec<ContingencyTable>,
    /// Per partition: global label -> local column, `u32::MAX` if absent.
    label_maps: Vec<Vec<u32>>,
    row_totals: Vec<[u64; 2]>,
    col_totals: Vec<Vec<u64>>,
    total: u64,
}

const ABSENT: u32 = u32::MAX;

impl ContingencyTableSet {
    /// Label maps for the base labels present in `subset`. Local columns are
    /// numbered in increasing global-label order.
    fn label_maps(ensemble: &Ensemble, subset: &NodeSubset) -> Vec<Vec<u32>> {
        (0..ensemble.c())
            .map(|t| {
                let part = ensemble.partition(t);
                let mut map = vec![ABSENT; ensemble.alphabet_sizes()[t] as usize];
                for &i in subset.indices() {
                    map[part[i] as usize] = 0;
                }
                for (next, slot) in map.iter_mut().filter(|s| **s != ABSENT).enumerate() {
                    *slot = next as u32;
                }
                map
            })
            .collect()
    }

    /// Counts (side, base label) pairs over `subset`; `sides[k]` is the side
    /// of `subset.indices()[k]`.
    pub fn build(ensemble: &Ensemble, subset: &NodeSubset, sides: &[Side]) -> Self {
        assert_eq!(sides.len(), subset.len(), "one side per subset sample");
        let label_maps = Self::label_maps(ensemble, subset);
        let mut tables = Vec::with_capacity(ensemble.c());
        let mut row_totals = Vec::with_capacity(ensemble.c());
        let mut col_totals = Vec::with_capacity(ensemble.c());
        for (t, map) in label_maps.iter().enumerate() {
            let width = map.iter().filter(|&&c| c != ABSENT).count();
            let mut rows = [vec![0u64; width], vec![0u64; width]];
            let part = ensemble.partition(t);
            for (&i, side) in subset.indices().iter().zip(sides) {
                rows[side.row()][map[part[i] as usize] as usize] += 1;
            }
            let table = ContingencyTable { rows };
            let (a, b) = table.row_totals();
            row_totals.push([a, b]);
            col_totals.push(table.col_totals());
            tables.push(table);
        }
        ContingencyTableSet {
            tables,
            label_maps,
            row_totals,
            col_totals,
            total: subset.len() as u64,
        }
    }

    /// Local column of `sample` in every table.
    pub fn local_columns(&self, ensemble: &Ensemble, sample: usize) -> Vec<u32> {
        self.label_maps
            .iter()
            .enumerate()
            .map(|(t, map)| map[ensemble.partition(t)[sample] as usize])
            .collect()
    }

    /// Moves one sample between rows in every table.
    ///
    /// `columns[t]` is the sample's local column in table `t`, as returned
    /// by [`local_columns`](Self::local_columns).
    pub fn shift_sample(&mut self, columns: &[u32], from: Side, to: Side) -> Result<()> {
        if columns.len() != self.tables.len() {
            return Err(Error::contract(format!(
                "shift with {} labels on {} tables",
                columns.len(),
                self.tables.len()
            )));
        }
        if from == to {
            return Ok(());
        }
        for (t, &col) in columns.iter().enumerate() {
            let col = col as usize;
            let table = &mut self.tables[t];
            if col >= table.width() || table.rows[from.row()][col] == 0 {
                return Err(Error::contract(format!(
                    "table {t}: no sample in row {:?}, column {col} to move",
                    from
                )));
            }
        }
        for (t, &col) in columns.iter().enumerate() {
            let col = col as usize;
            let table = &mut self.tables[t];
            table.rows[from.row()][col] -= 1;
            table.rows[to.row()][col] += 1;
            self.row_totals[t][from.row()] -= 1;
            self.row_totals[t][to.row()] += 1;
        }
        Ok(())
    }

    /// Moves one sample right -> left without validation; the split scan
    /// guarantees every count it decrements is positive.
    #[inline]
    pub(crate) fn shift_left_unchecked(&mut self, columns: &[u32]) {
        for ((table, rt), &col) in self
            .tables
            .iter_mut()
            .zip(&mut self.row_totals)
            .zip(columns)
        {
            let col = col as usize;
            debug_assert!(table.rows[1][col] > 0);
            table.rows[1][col] -= 1;
            table.rows[0][col] += 1;
            rt[1] -= 1;
            rt[0] += 1;
        }
    }

    pub fn tables(&self) -> &[ContingencyTable] {
        &self.tables
    }

    pub fn row_totals(&self) -> &[[u64; 2]] {
        &self.row_totals
    }

    pub fn col_totals(&self) -> &[Vec<u64>] {
        &self.col_totals
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Left-side count (identical across tables).
    pub fn left_count(&self) -> u64 {
        self.row_totals.first().map_or(0, |r| r[0])
    }

    /// `sum_t (p_t - 1)` over node-local alphabets.
    pub fn dof(&self) -> u64 {
        self.tables.iter().map(|t| t.width() as u64 - 1).sum()
    }

    /// Sum of the per-table statistics.
    pub fn statistic(&self) -> f64 {
        self.tables
            .iter()
            .zip(&self.row_totals)
            .zip(&self.col_totals)
            .map(|((t, rt), ct)| pearson([&t.rows[0], &t.rows[1]], *rt, ct))
            .sum()
    }

    /// Checks every marginal against a recount of the cells.
    pub fn check_consistency(&self) -> Result<()> {
        for (t, table) in self.tables.iter().enumerate() {
            let (a, b) = table.row_totals();
            if [a, b] != self.row_totals[t] {
                return Err(Error::contract(format!("table {t}: stale row totals")));
            }
            if table.col_totals() != self.col_totals[t] {
                return Err(Error::contract(format!("table {t}: stale column totals")));
            }
            if a + b != self.total {
                return Err(Error::contract(format!(
                    "table {t}: cells do not sum to total"
                )));
            }
            if self.col_totals[t].contains(&0) {
                return Err(Error::contract(format!("table {t}: zero-support column")));
            }
        }
        Ok(())
    }
}

/// Statistic, degrees of freedom and log p-value of a table set.
pub fn aggregate_score(tables: &ContingencyTableSet) -> SplitScore {
    let dof = tables.dof();
    if dof == 0 {
        return SplitScore {
            statistic: 0.0,
            dof: 0,
            log_p: 0.0,
        };
    }
    let statistic = tables.statistic();
    let log_p = chi_sq_log_sf(statistic, dof).expect("statistic is finite and non-negative");
    SplitScore {
        statistic,
        dof,
        log_p,
    }
}

const SF_MAX_ITER: usize = 10_000;
const SF_EPS: f64 = 1e-16;

/// Natural log of `P(X > x)` for `X ~ chi-squared(dof)`.
///
/// Evaluated as the regularized upper incomplete gamma `Q(dof/2, x/2)`
/// entirely in log space, so tails far below `f64::MIN_POSITIVE` still
/// rank correctly.
pub fn chi_sq_log_sf(x: f64, dof: u64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::input(format!(
            "chi-squared argument must be finite and >= 0, got {x}"
        )));
    }
    if dof == 0 {
        return Err(Error::input("chi-squared degrees of freedom must be >= 1"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(ln_gamma_q(dof as f64 / 2.0, x / 2.0))
}

/// `ln Q(a, z)` for `a > 0`, `z > 0`.
fn ln_gamma_q(a: f64, z: f64) -> f64 {
    let log_prefactor = -z + a * z.ln() - ln_gamma(a);
    if z < a + 1.0 {
        // series for P, then Q = 1 - P; Q is not small here
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut denom = a;
        for _ in 0..SF_MAX_ITER {
            denom += 1.0;
            term *= z / denom;
            sum += term;
            if term.abs() < sum.abs() * SF_EPS {
                break;
            }
        }
        let p = (log_prefactor + sum.ln()).exp();
        (-p).ln_1p()
    } else {
        // modified Lentz continued fraction for Q
        let tiny = 1e-300;
        let mut b = z + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=SF_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < SF_EPS {
                break;
            }
        }
        log_prefactor + h.ln()
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x >= 0.5` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x >= 0.5);
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
