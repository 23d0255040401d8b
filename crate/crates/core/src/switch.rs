//! The switch chain on labelled d-regular graphs.
//!
//! From `G`, pick an unordered pair of vertex-disjoint edges uniformly, then
//! one of the three perfect matchings of their four endpoints uniformly. The
//! move is taken when the result has no repeated edge, otherwise the chain
//! stays at `G`. Holding probability is therefore at least 1/3 (the identity
//! matching).

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::analysis::{self, AnalysisOptions};
use crate::chain::{self, Chain, ChainDescriptor, Family, StationaryDistribution};
use crate::error::{Error, Result};
use crate::oracle;
use crate::rational::{self, Rational};
use crate::report::{AnalysisReport, Verdict};
use crate::walks;

/// Best-known bound on the relaxation time of the lazy switch chain, quoted
/// as metadata.
pub const LAMBDA1_LITERATURE: &str = "(1 - lambda_1)^-1 = O(d23 n8)";

/// Simple graph on `[n]` stored as a bitset over the `n(n-1)/2` vertex pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegularGraph {
    n: usize,
    d: usize,
    adjacent: Vec<bool>,
}

/// Index of the unordered pair `{u, v}`, `u != v`, in row order of the upper
/// triangle.
pub fn pair_index(n: usize, u: usize, v: usize) -> usize {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

pub fn check_feasible(n: usize, d: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::Infeasible("degree must be at least 1".into()));
    }
    if n < d + 1 {
        return Err(Error::Infeasible(format!("n = {n} must be at least d + 1 = {}", d + 1)));
    }
    if !(n * d).is_multiple_of(2) {
        return Err(Error::Infeasible(format!("n * d = {} must be even", n * d)));
    }
    Ok(())
}

impl RegularGraph {
    /// Validates simplicity and d-regularity.
    pub fn from_edges(n: usize, d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        check_feasible(n, d)?;
        let mut adjacent = vec![false; n * (n - 1) / 2];
        for &(u, v) in edges {
            if u == v || u >= n || v >= n {
                return Err(Error::InvalidState(format!("bad edge ({u},{v})")));
            }
            let k = pair_index(n, u, v);
            if adjacent[k] {
                return Err(Error::InvalidState(format!("repeated edge ({u},{v})")));
            }
            adjacent[k] = true;
        }
        let g = Self { n, d, adjacent };
        for v in 0..n {
            let deg = g.degree(v);
            if deg != d {
                return Err(Error::InvalidState(format!("vertex {v} has degree {deg}, expected {d}")));
            }
        }
        Ok(g)
    }

    /// Circulant seed: `i ~ i +- k` for `k <= d/2`, plus `i ~ i + n/2` when
    /// `d` is odd.
    pub fn circulant(n: usize, d: usize) -> Result<Self> {
        check_feasible(n, d)?;
        let mut edges = Vec::new();
        for i in 0..n {
            for k in 1..=d / 2 {
                let j = (i + k) % n;
                edges.push((i.min(j), i.max(j)));
            }
            if d % 2 == 1 && i < n / 2 {
                edges.push((i, i + n / 2));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Self::from_edges(n, d, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.adjacent[pair_index(self.n, u, v)]
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| self.has_edge(u, v)).count()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.adjacent[pair_index(self.n, u, v)] {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Bitset, most significant bit first.
    pub fn encode(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.adjacent.len().div_ceil(8)];
        for (k, &bit) in self.adjacent.iter().enumerate() {
            if bit {
                bytes[k / 8] |= 0x80 >> (k % 8);
            }
        }
        bytes
    }

    pub fn decode(n: usize, d: usize, bytes: &[u8]) -> Result<Self> {
        let pairs = n * (n - 1) / 2;
        if bytes.len() != pairs.div_ceil(8) {
            return Err(Error::InvalidState("wrong encoding length".into()));
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let k = pair_index(n, u, v);
                if bytes[k / 8] & (0x80 >> (k % 8)) != 0 {
                    edges.push((u, v));
                }
            }
        }
        Self::from_edges(n, d, &edges)
    }

    fn toggled(&self, remove: [(usize, usize); 2], add: [(usize, usize); 2]) -> Self {
        let mut g = self.clone();
        for (u, v) in remove {
            g.adjacent[pair_index(self.n, u, v)] = false;
        }
        for (u, v) in add {
            g.adjacent[pair_index(self.n, u, v)] = true;
        }
        g
    }
}

/// Unordered pairs of vertex-disjoint edges.
pub fn disjoint_edge_pairs(g: &RegularGraph) -> Vec<((usize, usize), (usize, usize))> {
    let edges = g.edges();
    let mut pairs = Vec::new();
    for (i, &(a, b)) in edges.iter().enumerate() {
        for &(c, e) in &edges[i + 1..] {
            if a != c && a != e && b != c && b != e {
                pairs.push(((a, b), (c, e)));
            }
        }
    }
    pairs
}

/// `C(nd/2, 2) - n C(d, 2)`: edge pairs minus pairs sharing a vertex.
pub fn expected_pair_count(n: usize, d: usize) -> usize {
    let m = n * d / 2;
    m * m.saturating_sub(1) / 2 - n * d * d.saturating_sub(1) / 2
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchRow {
    /// Targets in graph order, including `G` itself.
    pub transitions: Vec<(RegularGraph, Rational)>,
    /// Number of disjoint edge pairs at `G`.
    pub pair_count: usize,
}

pub fn switch_kernel_row(g: &RegularGraph) -> Result<SwitchRow> {
    let pairs = disjoint_edge_pairs(g);
    let m = pairs.len();
    if m == 0 {
        return Err(Error::Degenerate(
            "no pair of non-incident edges; the chain cannot move".into(),
        ));
    }
    let step = rational::ratio(1, 3 * m as i64);
    let mut targets: BTreeMap<RegularGraph, Rational> = BTreeMap::new();
    let mut stay = Rational::zero();
    for ((a, b), (c, e)) in pairs {
        // identity matching {ab, ce}
        stay += &step;
        for [(p, q), (r, s)] in [[(a, c), (b, e)], [(a, e), (b, c)]] {
            if g.has_edge(p, q) || g.has_edge(r, s) {
                stay += &step;
            } else {
                let h = g.toggled([(a, b), (c, e)], [(p, q), (r, s)]);
                *targets.entry(h).or_insert_with(Rational::zero) += &step;
            }
        }
    }
    targets.insert(g.clone(), stay);
    Ok(SwitchRow {
        transitions: targets.into_iter().collect(),
        pair_count: m,
    })
}

/// Explores from the circulant seed. Uniform stationary distribution.
pub fn build(n: usize, d: usize, max_states: usize) -> Result<Chain> {
    let seed = RegularGraph::circulant(n, d)?;
    let (space, kernel) = chain::explore(seed.encode(), max_states, |bytes| {
        let g = RegularGraph::decode(n, d, bytes)?;
        Ok(switch_kernel_row(&g)?
            .transitions
            .into_iter()
            .map(|(h, p)| (h.encode(), p))
            .collect())
    })?;
    let pi = StationaryDistribution::uniform(space.len())?;
    let descriptor = ChainDescriptor {
        family: Family::Switch,
        params: BTreeMap::from([("n".to_string(), n.to_string()), ("d".to_string(), d.to_string())]),
        states: space.len(),
    };
    Ok(Chain {
        space,
        kernel,
        pi,
        descriptor,
    })
}

/// Enumerate the state space only.
pub fn enumerate_regular(n: usize, d: usize, max_states: usize) -> Result<chain::StateSpace> {
    Ok(build(n, d, max_states)?.space)
}

/// Builds the chain, attaches self-loop walks and checks the 3/2 bound.
pub fn switch_analysis(n: usize, d: usize, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let chain = build(n, d, opts.max_states)?;
    let walks = walks::self_loop_walkset(&chain.kernel)?;
    let mut report = analysis::analyze(&chain, &walks, opts)?;

    let mut counts = Vec::with_capacity(chain.space.len());
    for state in chain.space.states() {
        let g = RegularGraph::decode(n, d, state)?;
        counts.push(disjoint_edge_pairs(&g).len());
    }
    let expected = expected_pair_count(n, d);
    let constant = counts.iter().all(|&c| c == expected);
    report.checks.insert(
        "pair_count_constant".into(),
        Verdict::check(constant, || {
            format!("pair counts {counts:?} differ from C(nd/2,2) - n C(d,2) = {expected}")
        }),
    );
    report.facts.insert("pair_count".into(), expected.to_string());

    let min_hold = chain.kernel.min_self_loop();
    let third = rational::ratio(1, 3);
    report.facts.insert("min_holding_probability".into(), rational::format(&min_hold));
    report.checks.insert(
        "holding_at_least_one_third".into(),
        Verdict::check(min_hold >= third, || {
            format!("min p(G,G) = {}", rational::format(&min_hold))
        }),
    );

    let eta = rational::parse(&report.walks.eta).expect("report eta is a rational");
    report.checks.insert(
        "eta_at_most_3".into(),
        Verdict::check(eta <= rational::int(3), || format!("eta = {}", report.walks.eta)),
    );
    let lambda_min = report.spectrum.lambda_min;
    report.checks.insert(
        "lambda_min_at_least_minus_one_third".into(),
        Verdict::check(lambda_min >= -1.0 / 3.0 - crate::spectral::LAMBDA_MIN_SLACK, || {
            format!("lambda_min = {lambda_min}")
        }),
    );

    match oracle::count_regular_graphs(n, d) {
        Ok(count) => {
            report.oracle.direct_count = Some(count);
            report.checks.insert(
                "direct_count_match".into(),
                Verdict::check(count == chain.space.len() as u64, || {
                    format!("BFS found {} states, direct count is {count}", chain.space.len())
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
