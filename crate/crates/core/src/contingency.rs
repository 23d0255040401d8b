//! Heat-bath chain on contingency tables with fixed margins, and the
//! canonical odd walks of length 3 and 5 that certify its smallest
//! eigenvalue.
//!
//! A step picks one of the `C(m,2) C(n,2)` row-pair/column-pair subsquares
//! uniformly and refills it uniformly among the nonnegative 2x2 integer
//! matrices with the same row and column sums.
//!
//! Walk construction. A table is *row-good* when some `(i1,i2,i3,j1,j2)`
//! (distinct rows, distinct columns) has `x[i1,j1], x[i2,j1], x[i3,j2] > 0`;
//! it then gets a three-step walk on that 3x2 subtable. *Column-good* is the
//! transpose. Remaining tables are *bad*: one positive entry per row and
//! column, so `m = n`; they get a five-step walk on a 3x3 subtable anchored
//! at an entry `>= 2`. Tuples are the lexicographically least qualifying
//! ones, 1-based.

use std::collections::{BTreeMap, HashSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, AnalysisOptions};
use crate::chain::{self, Chain, ChainDescriptor, Family, StateSpace, StationaryDistribution};
use crate::error::{Error, Result};
use crate::oracle;
use crate::rational::{self, Rational};
use crate::report::{AnalysisReport, ClassCounts, ContingencyDetails, Verdict};
use crate::walks::{self, EdgeIndex, OddWalk, WalkSet};

pub const LAMBDA1_LITERATURE: &str = "(1 - lambda_1)^-1 <= n^f(m), f(m)>= 68m4";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Margins {
    rows: Vec<u32>,
    cols: Vec<u32>,
}

impl Margins {
    pub fn new(rows: Vec<u32>, cols: Vec<u32>) -> Result<Self> {
        if rows.len() < 2 || cols.len() < 2 {
            return Err(Error::Infeasible(format!(
                "need at least two rows and two columns, got {}x{}",
                rows.len(),
                cols.len()
            )));
        }
        if rows.iter().chain(&cols).any(|&v| v == 0) {
            return Err(Error::Infeasible("margins must be positive integers".into()));
        }
        let rs: u64 = rows.iter().map(|&v| v as u64).sum();
        let cs: u64 = cols.iter().map(|&v| v as u64).sum();
        if rs != cs {
            return Err(Error::Infeasible(format!("row sum {rs} differs from column sum {cs}")));
        }
        Ok(Self { rows, cols })
    }

    /// Comma-separated positive integers.
    pub fn parse(rows: &str, cols: &str) -> Result<Self> {
        fn list(text: &str) -> Result<Vec<u32>> {
            text.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Parse(format!("not a nonnegative integer: {t:?}")))
                })
                .collect()
        }
        Self::new(list(rows)?, list(cols)?)
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.cols.len()
    }

    /// Hypotheses of the walk construction: largest row and column margins at
    /// least 2, and at least three rows or three columns. Sorting is not
    /// needed since only the maxima matter.
    pub fn check_walk_hypotheses(&self) -> Result<()> {
        let r1 = *self.rows.iter().max().expect("non-empty");
        let c1 = *self.cols.iter().max().expect("non-empty");
        if r1.min(c1) < 2 {
            return Err(Error::Precondition(format!(
                "min{{r1, c1}} >= 2 fails: largest row margin {r1}, largest column margin {c1}"
            )));
        }
        if self.m().max(self.n()) < 3 {
            return Err(Error::Precondition(format!(
                "max{{m, n}} >= 3 fails for a {}x{} table",
                self.m(),
                self.n()
            )));
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }
}

/// Row-major `m x n` nonnegative integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Table {
    m: usize,
    n: usize,
    cells: Vec<u32>,
}

impl Table {
    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidState("table must be a non-empty rectangle".into()));
        }
        Ok(Self {
            m,
            n,
            cells: rows.concat(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.cells[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, value: u32) {
        self.cells[i * self.n + j] = value;
    }

    pub fn row_sums(&self) -> Vec<u32> {
        (0..self.m).map(|i| (0..self.n).map(|j| self.get(i, j)).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u32> {
        (0..self.n).map(|j| (0..self.m).map(|i| self.get(i, j)).sum()).collect()
    }

    pub fn has_margins(&self, margins: &Margins) -> bool {
        self.m == margins.m() && self.n == margins.n() && self.row_sums() == margins.rows && self.col_sums() == margins.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self {
            m: self.n,
            n: self.m,
            cells: vec![0; self.cells.len()],
        };
        for i in 0..self.m {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Big-endian `u32` per cell, row-major; byte order matches numeric
    /// lexicographic order of the cells.
    pub fn encode(&self) -> Vec<u8> {
        self.cells.iter().flat_map(|v| v.to_be_bytes()).collect()
    }

    pub fn decode(m: usize, n: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != 4 * m * n {
            return Err(Error::InvalidState("wrong encoding length".into()));
        }
        let cells = bytes
            .chunks_exact(4)
            .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self { m, n, cells })
    }

    /// Greedy north-west-corner table.
    pub fn north_west_corner(margins: &Margins) -> Self {
        let mut rows = margins.rows.clone();
        let mut cols = margins.cols.clone();
        let mut t = Self {
            m: margins.m(),
            n: margins.n(),
            cells: vec![0; margins.m() * margins.n()],
        };
        for (i, r) in rows.iter_mut().enumerate() {
            for (j, c) in cols.iter_mut().enumerate() {
                let v = (*r).min(*c);
                t.set(i, j, v);
                *r -= v;
                *c -= v;
            }
        }
        t
    }

    /// Adds `delta` at `(r1,c1)` and `(r2,c2)`, subtracts it at `(r1,c2)` and
    /// `(r2,c1)`. Margins are preserved. Panics on underflow.
    fn shifted(&self, (r1, r2): (usize, usize), (c1, c2): (usize, usize), delta: i64) -> Self {
        let mut t = self.clone();
        for (i, j, sign) in [(r1, c1, 1), (r1, c2, -1), (r2, c1, -1), (r2, c2, 1)] {
            let v = t.get(i, j) as i64 + sign * delta;
            assert!(v >= 0, "walk step left the table nonnegative orthant");
            t.set(i, j, v as u32);
        }
        t
    }
}

impl std::fmt::Display for Table {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<String> = (0..self.m)
            .map(|i| {
                let cells: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

/// All tables with the given margins, row by row. Within a row, an entry never
/// exceeds the column's remaining capacity, and the row's remaining mass must
/// fit into the remaining columns.
pub fn enumerate_tables(margins: &Margins, max_states: usize) -> Result<StateSpace> {
    let m = margins.m();
    let n = margins.n();
    let mut cells = vec![0u32; m * n];
    let mut col_left = margins.cols.clone();
    let mut found = Vec::new();
    fill_row(margins, 0, 0, margins.rows[0], &mut col_left, &mut cells, &mut found, max_states)?;
    StateSpace::new(found)
}

#[allow(clippy::too_many_arguments)]
fn fill_row(
    margins: &Margins,
    i: usize,
    j: usize,
    row_left: u32,
    col_left: &mut [u32],
    cells: &mut [u32],
    found: &mut Vec<Vec<u8>>,
    max_states: usize,
) -> Result<()> {
    let m = margins.m();
    let n = margins.n();
    if i == m - 1 {
        // last row is forced
        for jj in 0..n {
            cells[i * n + jj] = col_left[jj];
        }
        if found.len() >= max_states {
            return Err(Error::CapExceeded { cap: max_states });
        }
        found.push(Table { m, n, cells: cells.to_vec() }.encode());
        return Ok(());
    }
    if j == n {
        if row_left == 0 {
            return fill_row(margins, i + 1, 0, margins.rows[i + 1], col_left, cells, found, max_states);
        }
        return Ok(());
    }
    let capacity_after: u32 = col_left[j + 1..].iter().sum();
    let lo = row_left.saturating_sub(capacity_after);
    let hi = row_left.min(col_left[j]);
    for v in lo..=hi {
        cells[i * n + j] = v;
        col_left[j] -= v;
        fill_row(margins, i, j + 1, row_left - v, col_left, cells, found, max_states)?;
        col_left[j] += v;
    }
    cells[i * n + j] = 0;
    Ok(())
}

/// Number of nonnegative 2x2 fillings with row sums `(s1, s2)` and column
/// sums `(t1, t2)`.
pub fn subsquare_fill_count(s1: u32, s2: u32, t1: u32, t2: u32) -> Result<u32> {
    if s1 as u64 + s2 as u64 != t1 as u64 + t2 as u64 {
        return Err(Error::Precondition(format!(
            "subsquare sums differ: {s1} + {s2} vs {t1} + {t2}"
        )));
    }
    Ok(s1.min(s2).min(t1).min(t2) + 1)
}

fn subsquare_count(m: usize, n: usize) -> i64 {
    (m * (m - 1) / 2 * (n * (n - 1) / 2)) as i64
}

/// Outgoing transitions of `x`, including the holding probability.
pub fn heatbath_kernel_row(x: &Table, margins: &Margins) -> Result<Vec<(Table, Rational)>> {
    if !x.has_margins(margins) {
        return Err(Error::InvalidState(format!("{x} does not have the requested margins")));
    }
    let (m, n) = (x.m, x.n);
    let subsquares = subsquare_count(m, n);
    let mut targets: BTreeMap<Table, Rational> = BTreeMap::new();
    for i1 in 0..m {
        for i2 in (i1 + 1)..m {
            for j1 in 0..n {
                for j2 in (j1 + 1)..n {
                    let (a, b) = (x.get(i1, j1), x.get(i1, j2));
                    let (c, d) = (x.get(i2, j1), x.get(i2, j2));
                    let (s1, s2, t1) = (a + b, c + d, a + c);
                    let k = subsquare_fill_count(s1, s2, t1, b + d)?;
                    let p = rational::ratio(1, subsquares * k as i64);
                    let lo = t1.saturating_sub(s2);
                    for top_left in lo..=s1.min(t1) {
                        let mut y = x.clone();
                        y.set(i1, j1, top_left);
                        y.set(i1, j2, s1 - top_left);
                        y.set(i2, j1, t1 - top_left);
                        y.set(i2, j2, s2 - (t1 - top_left));
                        *targets.entry(y).or_insert_with(Rational::zero) += &p;
                    }
                }
            }
        }
    }
    Ok(targets.into_iter().collect())
}

/// Enumerates the tables, builds the kernel, and checks that breadth-first
/// closure from the north-west-corner table reaches every table.
pub fn build(margins: &Margins, max_states: usize) -> Result<Chain> {
    let space = enumerate_tables(margins, max_states)?;
    let (m, n) = (margins.m(), margins.n());
    let row = |bytes: &[u8]| -> Result<Vec<(Vec<u8>, Rational)>> {
        let x = Table::decode(m, n, bytes)?;
        Ok(heatbath_kernel_row(&x, margins)?
            .into_iter()
            .map(|(t, p)| (t.encode(), p))
            .collect())
    };
    let closure = bfs_closure_count(margins, max_states)?;
    if closure != space.len() {
        return Err(Error::NotIrreducible);
    }
    let (space, kernel) = chain::kernel_over(space, row)?;
    let pi = StationaryDistribution::uniform(space.len())?;
    let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
    let descriptor = ChainDescriptor {
        family: Family::Contingency,
        params: BTreeMap::from([
            ("rows".to_string(), join(&margins.rows)),
            ("cols".to_string(), join(&margins.cols)),
        ]),
        states: space.len(),
    };
    Ok(Chain {
        space,
        kernel,
        pi,
        descriptor,
    })
}

/// Number of tables reachable from the north-west-corner table.
pub fn bfs_closure_count(margins: &Margins, max_states: usize) -> Result<usize> {
    let seed = Table::north_west_corner(margins);
    let mut seen: HashSet<Table> = HashSet::from([seed.clone()]);
    let mut frontier = vec![seed];
    while let Some(x) = frontier.pop() {
        for (y, _) in heatbath_kernel_row(&x, margins)? {
            if !seen.contains(&y) {
                if seen.len() >= max_states {
                    return Err(Error::CapExceeded { cap: max_states });
                }
                seen.insert(y.clone());
                frontier.push(y);
            }
        }
    }
    Ok(seen.len())
}

/// Row-good, column-good or bad, with 1-based, lexicographically least tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableClass {
    RowGood(usize, usize, usize, usize, usize),
    ColumnGood(usize, usize, usize, usize, usize),
    Bad(usize, usize, usize, usize, usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    RowGood,
    ColumnGood,
    Bad,
}

impl TableClass {
    pub fn kind(&self) -> ClassKind {
        match self {
            TableClass::RowGood(..) => ClassKind::RowGood,
            TableClass::ColumnGood(..) => ClassKind::ColumnGood,
            TableClass::Bad(..) => ClassKind::Bad,
        }
    }
}

/// Least `(i1,i2,i3,j1,j2)`, 0-based, with `x[i1,j1], x[i2,j1], x[i3,j2] > 0`.
fn row_good_tuple(x: &Table) -> Option<(usize, usize, usize, usize, usize)> {
    let (m, n) = (x.m, x.n);
    for i1 in 0..m {
        for i2 in 0..m {
            for i3 in 0..m {
                if i1 == i2 || i1 == i3 || i2 == i3 {
                    continue;
                }
                for j1 in 0..n {
                    if x.get(i1, j1) == 0 || x.get(i2, j1) == 0 {
                        continue;
                    }
                    for j2 in 0..n {
                        if j2 != j1 && x.get(i3, j2) > 0 {
                            return Some((i1, i2, i3, j1, j2));
                        }
                    }
                }
            }
        }
    }
    None
}

/// Least `(i1,i2,j1,j2,j3)`, 0-based, with `x[i1,j1], x[i1,j2], x[i2,j3] > 0`.
fn column_good_tuple(x: &Table) -> Option<(usize, usize, usize, usize, usize)> {
    let (m, n) = (x.m, x.n);
    for i1 in 0..m {
        for i2 in 0..m {
            if i1 == i2 {
                continue;
            }
            for j1 in 0..n {
                for j2 in 0..n {
                    for j3 in 0..n {
                        if j1 == j2 || j1 == j3 || j2 == j3 {
                            continue;
                        }
                        if x.get(i1, j1) > 0 && x.get(i1, j2) > 0 && x.get(i2, j3) > 0 {
                            return Some((i1, i2, j1, j2, j3));
                        }
                    }
                }
            }
        }
    }
    None
}

/// Least `(i1,i2,i3,j1,j2,j3)`, 0-based, with `x[i1,j1] >= 2` and
/// `x[i2,j2], x[i3,j3] > 0`.
fn bad_tuple(x: &Table) -> Option<(usize, usize, usize, usize, usize, usize)> {
    let (m, n) = (x.m, x.n);
    for i1 in 0..m {
        for i2 in 0..m {
            for i3 in 0..m {
                if i1 == i2 || i1 == i3 || i2 == i3 {
                    continue;
                }
                for j1 in 0..n {
                    if x.get(i1, j1) < 2 {
                        continue;
                    }
                    for j2 in 0..n {
                        for j3 in 0..n {
                            if j1 == j2 || j1 == j3 || j2 == j3 {
                                continue;
                            }
                            if x.get(i2, j2) > 0 && x.get(i3, j3) > 0 {
                                return Some((i1, i2, i3, j1, j2, j3));
                            }
                        }
                    }
                }
            }
        }
    }
    None
}

pub fn classify_table(x: &Table) -> Result<TableClass> {
    if let Some((a, b, c, p, q)) = row_good_tuple(x) {
        return Ok(TableClass::RowGood(a + 1, b + 1, c + 1, p + 1, q + 1));
    }
    if let Some((a, b, p, q, s)) = column_good_tuple(x) {
        return Ok(TableClass::ColumnGood(a + 1, b + 1, p + 1, q + 1, s + 1));
    }
    if let Some((a, b, c, p, q, s)) = bad_tuple(x) {
        return Ok(TableClass::Bad(a + 1, b + 1, c + 1, p + 1, q + 1, s + 1));
    }
    let max_entry = x.cells.iter().copied().max().unwrap_or(0);
    let reason = if max_entry < 2 {
        "table is neither row-good nor column-good and has no entry >= 2; \
         the hypothesis min{r1, c1} >= 2 does not hold"
    } else {
        "table is neither row-good nor column-good and has no 3x3 anchor; \
         the hypothesis max{m, n} >= 3 does not hold"
    };
    Err(Error::Precondition(reason.into()))
}

/// Three steps on the 3x2 subtable (rows `i1,i2,i3`, columns `j1,j2`, 0-based),
/// altering row pairs `(i1,i3)`, `(i1,i2)`, `(i2,i3)` in turn.
fn row_good_sequence(x: &Table, (i1, i2, i3, j1, j2): (usize, usize, usize, usize, usize)) -> Vec<Table> {
    let x1 = x.shifted((i1, i3), (j1, j2), -1);
    let x2 = x1.shifted((i1, i2), (j1, j2), 1);
    let x3 = x2.shifted((i2, i3), (j1, j2), 1);
    vec![x.clone(), x1, x2, x3]
}

/// Five steps on the 3x3 subtable anchored at `x[i1,j1] >= 2`.
fn bad_sequence(
    x: &Table,
    (i1, i2, i3, j1, j2, j3): (usize, usize, usize, usize, usize, usize),
) -> Vec<Table> {
    let x1 = x.shifted((i1, i2), (j1, j2), -1);
    let x2 = x1.shifted((i2, i3), (j1, j3), -1);
    let x3 = x2.shifted((i1, i2), (j1, j3), -1);
    let x4 = x3.shifted((i1, i2), (j1, j2), 1);
    let x5 = x4.shifted((i1, i3), (j1, j3), 1);
    vec![x.clone(), x1, x2, x3, x4, x5]
}

/// The table sequence `X = X0, X1, ..., Xl = X` of the canonical walk.
pub fn canonical_walk_tables(x: &Table) -> Result<Vec<Table>> {
    Ok(match classify_table(x)? {
        TableClass::RowGood(a, b, c, p, q) => row_good_sequence(x, (a - 1, b - 1, c - 1, p - 1, q - 1)),
        TableClass::ColumnGood(a, b, p, q, s) => {
            row_good_sequence(&x.transpose(), (p - 1, q - 1, s - 1, a - 1, b - 1))
                .iter()
                .map(Table::transpose)
                .collect()
        }
        TableClass::Bad(a, b, c, p, q, s) => bad_sequence(x, (a - 1, b - 1, c - 1, p - 1, q - 1, s - 1)),
    })
}

/// Canonical walk of state `x` as state indices of `chain`.
pub fn canonical_odd_walk(chain: &Chain, x: usize) -> Result<OddWalk> {
    let (m, n) = table_shape(chain)?;
    let table = Table::decode(m, n, chain.space.state(x))?;
    let vertices = canonical_walk_tables(&table)?
        .iter()
        .map(|t| {
            chain
                .space
                .index_of(&t.encode())
                .ok_or_else(|| Error::InvalidWalk {
                    state: x,
                    reason: format!("intermediate table {t} is not a state"),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OddWalk::new(vertices))
}

fn table_shape(chain: &Chain) -> Result<(usize, usize)> {
    let count = |key: &str| {
        chain
            .descriptor
            .params
            .get(key)
            .map(|v| v.split(',').count())
            .ok_or_else(|| Error::Precondition("not a contingency chain".into()))
    };
    Ok((count("rows")?, count("cols")?))
}

/// Walks and classes for every state.
pub fn canonical_walkset(chain: &Chain) -> Result<(WalkSet, Vec<TableClass>)> {
    let (m, n) = table_shape(chain)?;
    let mut walks = Vec::with_capacity(chain.space.len());
    let mut classes = Vec::with_capacity(chain.space.len());
    for x in 0..chain.space.len() {
        let table = Table::decode(m, n, chain.space.state(x))?;
        classes.push(classify_table(&table)?);
        walks.push(canonical_odd_walk(chain, x)?);
    }
    Ok((WalkSet::new(walks)?, classes))
}

/// States whose walk traverses `edge`, split by class.
pub fn count_walks_through_edge(index: &EdgeIndex, classes: &[TableClass], edge: (usize, usize)) -> ClassCounts {
    let mut counts = ClassCounts::default();
    for &(x, _) in index.users(edge) {
        match classes[x].kind() {
            ClassKind::RowGood => counts.row_good += 1,
            ClassKind::ColumnGood => counts.column_good += 1,
            ClassKind::Bad => counts.bad += 1,
        }
    }
    counts
}

/// Upper bounds on the per-edge class counts: `12(m-2)`, `12(n-2)`,
/// `72(m-2)(n-2)`.
pub fn class_count_bounds(m: usize, n: usize) -> ClassCounts {
    ClassCounts {
        row_good: 12 * (m - 2) as u64,
        column_good: 12 * (n - 2) as u64,
        bad: 72 * ((m - 2) * (n - 2)) as u64,
    }
}

/// `90 m^3 n^3`, the displayed bound on the congestion.
pub fn eta_proof_bound(m: usize, n: usize) -> u64 {
    90 * (m as u64).pow(3) * (n as u64).pow(3)
}

/// `45 m^3 n^3`, the bound on `(1 + lambda_min)^-1`.
pub fn inverse_gap_bound(m: usize, n: usize) -> u64 {
    45 * (m as u64).pow(3) * (n as u64).pow(3)
}

/// Slack on `1 / (1 + lambda_min) <= 45 m^3 n^3`, applied to `1 + lambda_min`.
pub const INVERSE_GAP_SLACK: f64 = 1e-8;

pub fn contingency_analysis(margins: &Margins, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    margins.check_walk_hypotheses()?;
    let chain = build(margins, opts.max_states)?;
    let (walkset, classes) = canonical_walkset(&chain)?;
    let (m, n) = (margins.m(), margins.n());

    let mut walk_failures = Vec::new();
    for (x, w) in walkset.walks().iter().enumerate() {
        let report = walks::validate_walk(&chain.kernel, w);
        if !report.ok {
            walk_failures.push(format!("state {x}: {:?}", report.failures));
        } else if w.len() != 3 && w.len() != 5 {
            walk_failures.push(format!("state {x}: length {}", w.len()));
        } else if w.edge_counts().values().any(|&r| r > 1) {
            walk_failures.push(format!("state {x}: repeats an edge"));
        }
    }

    let mut report = analysis::analyze(&chain, &walkset, opts)?;
    report.checks.insert(
        "canonical_walks_valid".into(),
        Verdict::check(walk_failures.is_empty(), || walk_failures.join("; ")),
    );

    let index = EdgeIndex::build(&walkset);
    let mut max_counts = ClassCounts::default();
    for (edge, _) in index.edges() {
        let c = count_walks_through_edge(&index, &classes, *edge);
        max_counts.row_good = max_counts.row_good.max(c.row_good);
        max_counts.column_good = max_counts.column_good.max(c.column_good);
        max_counts.bad = max_counts.bad.max(c.bad);
    }
    let bounds = class_count_bounds(m, n);
    report.checks.insert(
        "class_counts_within_bounds".into(),
        Verdict::check(max_counts.within(&bounds), || {
            format!("max per-edge counts {max_counts:?} exceed {bounds:?}")
        }),
    );

    let mut class_totals = ClassCounts::default();
    let mut bad_shape_ok = true;
    for (x, class) in classes.iter().enumerate() {
        match class.kind() {
            ClassKind::RowGood => class_totals.row_good += 1,
            ClassKind::ColumnGood => class_totals.column_good += 1,
            ClassKind::Bad => {
                class_totals.bad += 1;
                let t = Table::decode(m, n, chain.space.state(x))?;
                let one_per_row = (0..m).all(|i| (0..n).filter(|&j| t.get(i, j) > 0).count() == 1);
                let one_per_col = (0..n).all(|j| (0..m).filter(|&i| t.get(i, j) > 0).count() == 1);
                bad_shape_ok &= one_per_row && one_per_col && m == n;
            }
        }
    }
    report.checks.insert(
        "bad_tables_are_permutation_shaped".into(),
        Verdict::check(bad_shape_ok, || "a bad table has a row or column with two positive entries".into()),
    );

    let eta = rational::parse(&report.walks.eta).expect("report eta is a rational");
    let proof_bound = eta_proof_bound(m, n);
    let gap_bound = inverse_gap_bound(m, n);
    let lambda_min = report.spectrum.lambda_min;
    let one_plus = 1.0 + lambda_min;
    report.checks.insert(
        "inverse_gap_within_45m3n3".into(),
        Verdict::check(one_plus >= 1.0 / gap_bound as f64 - INVERSE_GAP_SLACK, || {
            format!("1/(1 + lambda_min) = {} > {gap_bound}", 1.0 / one_plus)
        }),
    );
    report.checks.insert(
        "no_negative_eigenvalues".into(),
        Verdict::check(lambda_min >= -crate::spectral::LAMBDA_MIN_SLACK, || {
            format!("lambda_min = {lambda_min}")
        }),
    );
    report.contingency = Some(ContingencyDetails {
        m,
        n,
        class_totals,
        max_edge_counts: max_counts,
        count_bounds: bounds,
        eta_proof_bound: proof_bound,
        eta_within_proof_bound: eta <= rational::int(proof_bound as i64),
        inverse_gap_bound: gap_bound,
    });

    match oracle::count_tables(margins) {
        Ok(count) => {
            report.oracle.direct_count = Some(count);
            report.checks.insert(
                "direct_count_match".into(),
                Verdict::check(count == chain.space.len() as u64, || {
                    format!("enumerated {} tables, direct count is {count}", chain.space.len())
                }),
            );
        }
        Err(e) => {
            report
                .checks
                .insert("direct_count_match".into(), Verdict::skipped(e.to_string()));
        }
    }
    report.bounds.literature.push(LAMBDA1_LITERATURE.into());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn table(rows: &[&[u32]]) -> Table {
        Table::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn margins(r: &[u32], c: &[u32]) -> Margins {
        Margins::new(r.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn margin_validation() {
        assert!(Margins::new(vec![1], vec![1]).is_err());
        assert!(Margins::new(vec![1, 0], vec![1, 0]).is_err());
        assert!(Margins::new(vec![1, 2], vec![1, 1]).is_err());
        assert_eq!(Margins::parse("2, 2,2", "2,2,2").unwrap(), margins(&[2, 2, 2], &[2, 2, 2]));
        assert!(matches!(Margins::parse("2,a", "2,2"), Err(Error::Parse(_))));
    }

    #[test]
    fn walk_hypotheses() {
        assert!(margins(&[2, 2, 2], &[2, 2, 2]).check_walk_hypotheses().is_ok());
        assert!(margins(&[3, 2], &[2, 2, 1]).check_walk_hypotheses().is_ok());
        assert!(margins(&[1, 1, 1], &[1, 1, 1]).check_walk_hypotheses().is_err());
        assert!(margins(&[2, 2], &[2, 2]).check_walk_hypotheses().is_err());
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(enumerate_tables(&margins(&[1, 1, 1], &[1, 1, 1]), 100).unwrap().len(), 6);
        assert_eq!(enumerate_tables(&margins(&[2, 2], &[2, 2]), 100).unwrap().len(), 3);
        assert!(matches!(
            enumerate_tables(&margins(&[2, 2, 2], &[2, 2, 2]), 5),
            Err(Error::CapExceeded { cap: 5 })
        ));
    }

    #[test]
    fn fill_counts() {
        assert_eq!(subsquare_fill_count(1, 1, 1, 1).unwrap(), 2);
        assert_eq!(subsquare_fill_count(0, 5, 0, 5).unwrap(), 1);
        assert_eq!(subsquare_fill_count(2, 2, 2, 2).unwrap(), 3);
        assert!(subsquare_fill_count(1, 1, 1, 2).is_err());
    }

    #[test]
    fn fill_count_matches_enumeration() {
        for s1 in 0..5u32 {
            for s2 in 0..5u32 {
                for t1 in 0..=(s1 + s2) {
                    let t2 = s1 + s2 - t1;
                    let mut brute = 0;
                    for a in 0..=s1 {
                        for c in 0..=s2 {
                            let b = s1 - a;
                            let d = s2 - c;
                            if a + c == t1 && b + d == t2 {
                                brute += 1;
                            }
                        }
                    }
                    assert_eq!(subsquare_fill_count(s1, s2, t1, t2).unwrap(), brute);
                }
            }
        }
    }

    #[test]
    fn two_by_two_kernels() {
        let mg = margins(&[1, 1], &[1, 1]);
        let row = heatbath_kernel_row(&table(&[&[1, 0], &[0, 1]]), &mg).unwrap();
        assert_eq!(row.len(), 2);
        assert!(row.iter().all(|(_, p)| *p == ratio(1, 2)));
        let mg = margins(&[2, 2], &[2, 2]);
        let chain = build(&mg, 100).unwrap();
        for x in 0..3 {
            assert_eq!(chain.kernel.row(x).len(), 3);
            assert!(chain.kernel.row(x).iter().all(|(_, p)| *p == ratio(1, 3)));
        }
    }

    #[test]
    fn kernel_row_rejects_wrong_margins() {
        let mg = margins(&[1, 1], &[1, 1]);
        assert!(heatbath_kernel_row(&table(&[&[2, 0], &[0, 0]]), &mg).is_err());
    }

    #[test]
    fn north_west_corner_has_margins() {
        let mg = margins(&[3, 2], &[2, 2, 1]);
        let t = Table::north_west_corner(&mg);
        assert!(t.has_margins(&mg));
        assert_eq!(t, table(&[&[2, 1, 0], &[0, 1, 1]]));
    }

    #[test]
    fn classify_examples() {
        let x = table(&[&[1, 1], &[1, 0], &[0, 1]]);
        assert_eq!(classify_table(&x).unwrap(), TableClass::RowGood(1, 2, 3, 1, 2));
        let x = table(&[&[2, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(classify_table(&x).unwrap(), TableClass::Bad(1, 2, 3, 1, 2, 3));
        let x = table(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert!(matches!(classify_table(&x), Err(Error::Precondition(msg)) if msg.contains(">= 2")));
        // transposed row-good example is column-good
        let x = table(&[&[1, 1, 0], &[1, 0, 1]]);
        assert_eq!(classify_table(&x).unwrap(), TableClass::ColumnGood(1, 2, 1, 2, 3));
    }

    #[test]
    fn row_good_walk_first_step() {
        let x = table(&[&[1, 1], &[1, 0], &[0, 1]]);
        let seq = canonical_walk_tables(&x).unwrap();
        assert_eq!(seq.len(), 4);
        assert_eq!(seq[1], table(&[&[0, 2], &[1, 0], &[1, 0]]));
        assert_eq!(seq[3], x);
    }

    #[test]
    fn bad_walk_visits_five_tables() {
        let x = table(&[&[2, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        let seq = canonical_walk_tables(&x).unwrap();
        let expected = [
            table(&[&[2, 0, 0], &[0, 1, 0], &[0, 0, 1]]),
            table(&[&[1, 1, 0], &[1, 0, 0], &[0, 0, 1]]),
            table(&[&[1, 1, 0], &[0, 0, 1], &[1, 0, 0]]),
            table(&[&[0, 1, 1], &[1, 0, 0], &[1, 0, 0]]),
            table(&[&[1, 0, 1], &[0, 1, 0], &[1, 0, 0]]),
            table(&[&[2, 0, 0], &[0, 1, 0], &[0, 0, 1]]),
        ];
        assert_eq!(seq, expected);
    }

    #[test]
    fn column_good_walk_is_transposed_row_walk() {
        let x = table(&[&[1, 1, 0], &[1, 0, 1]]);
        let seq = canonical_walk_tables(&x).unwrap();
        let row_seq = canonical_walk_tables(&x.transpose()).unwrap();
        let transposed: Vec<Table> = row_seq.iter().map(Table::transpose).collect();
        assert_eq!(seq, transposed);
    }

    #[test]
    fn walks_are_valid_on_small_instance() {
        let mg = margins(&[2, 2, 2], &[2, 2, 2]);
        let chain = build(&mg, 1000).unwrap();
        let (walkset, _) = canonical_walkset(&chain).unwrap();
        for w in walkset.walks() {
            let report = walks::validate_walk(&chain.kernel, w);
            assert!(report.ok, "{report:?}");
            assert!(w.len() == 3 || w.len() == 5);
            assert!(w.edge_counts().values().all(|&r| r == 1));
        }
    }

    #[test]
    fn encoding_roundtrip_and_order() {
        let a = table(&[&[0, 2], &[2, 0]]);
        let b = table(&[&[1, 1], &[1, 1]]);
        assert_eq!(Table::decode(2, 2, &a.encode()).unwrap(), a);
        assert!(a.encode() < b.encode());
    }

    #[test]
    fn bounds_formulas() {
        assert_eq!(eta_proof_bound(3, 3), 65_610);
        assert_eq!(inverse_gap_bound(3, 3), 32_805);
        assert_eq!(
            class_count_bounds(3, 3),
            ClassCounts {
                row_good: 12,
                column_good: 12,
                bad: 72
            }
        );
    }
}
