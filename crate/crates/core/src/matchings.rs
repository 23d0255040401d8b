//! Chain on the perfect and near-perfect matchings of a host graph.
//!
//! Each step picks an edge `e` of the host uniformly:
//!
//! - perfect `M`, `e in M`: move to `M - e`;
//! - near-perfect `M`, both ends of `e` uncovered: move to `M + e`;
//! - near-perfect `M`, one end uncovered, the other covered by `e'`: move to
//!   `M - e' + e`;
//! - anything else (including near-perfect `M` with `e in M`): stay.
//!
//! Near-perfect means exactly two uncovered vertices.

use std::collections::{BTreeMap, VecDeque};

use num_traits::Zero;

use crate::analysis::{self, AnalysisOptions};
use crate::chain::{self, check_ergodicity, Chain, ChainDescriptor, Family, StateSpace, StationaryDistribution};
use crate::error::{Error, Result};
use crate::oracle;
use crate::rational::{self, Rational};
use crate::report::{AnalysisReport, Verdict};
use crate::walks;

pub const LAMBDA1_LITERATURE: &str = "(1 - lambda_1)^-1 = O(n|E|q(n))";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl HostGraph {
    /// Vertices `0..n`; edge order fixes edge indices.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n < 4 {
            return Err(Error::Infeasible(format!("host graph needs at least 4 vertices, got {n}")));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::Infeasible(format!("host graph needs an even vertex count, got {n}")));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(Error::Infeasible(format!("edge ({}, {}) has a vertex outside 1..={n}", u + 1, v + 1)));
            }
            if u == v {
                return Err(Error::Infeasible(format!("loop at vertex {}", u + 1)));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::Infeasible(format!("repeated edge ({}, {})", u + 1, v + 1)));
            }
        }
        let g = Self { n, edges };
        if g.is_perfect_matching() {
            return Err(Error::Precondition(
                "the host graph is itself a perfect matching, so perfect-matching states have no \
                 holding probability and the self-loop walk set does not exist"
                    .into(),
            ));
        }
        if !g.is_connected() {
            return Err(Error::Infeasible("host graph is not connected".into()));
        }
        Ok(g)
    }

    /// Parses `n m` followed by `m` lines `u v` (1-based). Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let parse_pair = |lineno: usize, line: &str| -> Result<(usize, usize)> {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected two integers, got {line:?}", lineno + 1)));
            }
            let a = fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad integer {:?}", lineno + 1, fields[0])))?;
            let b = fields[1]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad integer {:?}", lineno + 1, fields[1])))?;
            Ok((a, b))
        };
        let (lineno, header) = lines.next().ok_or_else(|| Error::Parse("empty graph file".into()))?;
        let (n, m) = parse_pair(lineno, header)?;
        let mut edges = Vec::with_capacity(m);
        for (lineno, line) in lines {
            let (u, v) = parse_pair(lineno, line)?;
            if u == 0 || v == 0 {
                return Err(Error::Parse(format!("line {}: vertex labels are 1-based", lineno + 1)));
            }
            edges.push((u - 1, v - 1));
        }
        if edges.len() != m {
            return Err(Error::Parse(format!("header promises {m} edges, found {}", edges.len())));
        }
        Self::new(n, edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect())
    }

    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
    }

    /// `rows x cols` grid, vertices numbered row-major.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Self::new(rows * cols, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn is_perfect_matching(&self) -> bool {
        let mut degree = vec![0; self.n];
        for &(u, v) in &self.edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        degree.iter().all(|&d| d == 1)
    }

    fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Set of host-edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    edges: Vec<bool>,
}

impl Matching {
    /// Validates disjointness and size `n/2` or `n/2 - 1`.
    pub fn new(host: &HostGraph, edge_indices: &[usize]) -> Result<Self> {
        let mut edges = vec![false; host.edge_count()];
        let mut covered = vec![false; host.n];
        for &k in edge_indices {
            let (u, v) = *host
                .edges
                .get(k)
                .ok_or_else(|| Error::InvalidState(format!("edge index {k} out of range")))?;
            if edges[k] || covered[u] || covered[v] {
                return Err(Error::InvalidState("edges of a matching must be disjoint".into()));
            }
            edges[k] = true;
            covered[u] = true;
            covered[v] = true;
        }
        let size = edge_indices.len();
        if size != host.n / 2 && size + 1 != host.n / 2 {
            return Err(Error::InvalidState(format!(
                "matching of size {size} is neither perfect nor near-perfect"
            )));
        }
        Ok(Self { edges })
    }

    pub fn size(&self) -> usize {
        self.edges.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.edges[k]
    }

    pub fn edge_indices(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&k| self.edges[k]).collect()
    }

    pub fn is_perfect(&self, host: &HostGraph) -> bool {
        self.size() == host.n / 2
    }

    /// Edge index covering each vertex.
    fn cover(&self, host: &HostGraph) -> Vec<Option<usize>> {
        let mut cover = vec![None; host.n];
        for k in self.edge_indices() {
            let (u, v) = host.edges[k];
            cover[u] = Some(k);
            cover[v] = Some(k);
        }
        cover
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.edges.len().div_ceil(8)];
        for (k, &bit) in self.edges.iter().enumerate() {
            if bit {
                bytes[k / 8] |= 0x80 >> (k % 8);
            }
        }
        bytes
    }

    pub fn decode(host: &HostGraph, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != host.edge_count().div_ceil(8) {
            return Err(Error::InvalidState("wrong encoding length".into()));
        }
        let indices: Vec<usize> = (0..host.edge_count())
            .filter(|&k| bytes[k / 8] & (0x80 >> (k % 8)) != 0)
            .collect();
        Self::new(host, &indices)
    }

    fn with(&self, remove: Option<usize>, add: Option<usize>) -> Self {
        let mut m = self.clone();
        if let Some(k) = remove {
            m.edges[k] = false;
        }
        if let Some(k) = add {
            m.edges[k] = true;
        }
        m
    }
}

/// All perfect and near-perfect matchings, by backtracking over vertices in
/// order: each uncovered vertex is either left uncovered (at most two such)
/// or matched to a later neighbour.
pub fn matchings_states(host: &HostGraph, max_states: usize) -> Result<StateSpace> {
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); host.n];
    for (k, &(u, v)) in host.edges.iter().enumerate() {
        incident[u].push((v, k));
        incident[v].push((u, k));
    }
    let mut found = Vec::new();
    let mut covered = vec![false; host.n];
    let mut chosen = Vec::new();
    let mut has_perfect = false;
    backtrack(
        host, &incident, 0, 0, &mut covered, &mut chosen, &mut found, &mut has_perfect, max_states,
    )?;
    if !has_perfect {
        return Err(Error::Infeasible("host graph has no perfect matching".into()));
    }
    StateSpace::new(found)
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    host: &HostGraph,
    incident: &[Vec<(usize, usize)>],
    vertex: usize,
    uncovered: usize,
    covered: &mut [bool],
    chosen: &mut Vec<usize>,
    found: &mut Vec<Vec<u8>>,
    has_perfect: &mut bool,
    max_states: usize,
) -> Result<()> {
    if vertex == host.n {
        if uncovered == 0 || uncovered == 2 {
            if found.len() >= max_states {
                return Err(Error::CapExceeded { cap: max_states });
            }
            *has_perfect |= uncovered == 0;
            found.push(Matching::new(host, chosen)?.encode());
        }
        return Ok(());
    }
    if covered[vertex] {
        return backtrack(host, incident, vertex + 1, uncovered, covered, chosen, found, has_perfect, max_states);
    }
    if uncovered < 2 {
        backtrack(host, incident, vertex + 1, uncovered + 1, covered, chosen, found, has_perfect, max_states)?;
    }
    for &(other, k) in &incident[vertex] {
        if other > vertex && !covered[other] {
            covered[vertex] = true;
            covered[other] = true;
            chosen.push(k);
            backtrack(host, incident, vertex + 1, uncovered, covered, chosen, found, has_perfect, max_states)?;
            chosen.pop();
            covered[vertex] = false;
            covered[other] = false;
        }
    }
    Ok(())
}

pub fn matchings_kernel_row(m: &Matching, host: &HostGraph) -> Vec<(Matching, Rational)> {
    let step = rational::ratio(1, host.edge_count() as i64);
    let perfect = m.is_perfect(host);
    let cover = m.cover(host);
    let mut targets: BTreeMap<Matching, Rational> = BTreeMap::new();
    let mut stay = Rational::zero();
    for (k, &(u, v)) in host.edges.iter().enumerate() {
        let next = if perfect {
            m.contains(k).then(|| m.with(Some(k), None))
        } else if m.contains(k) {
            None
        } else {
            match (cover[u], cover[v]) {
                (None, None) => Some(m.with(None, Some(k))),
                (None, Some(other)) | (Some(other), None) => Some(m.with(Some(other), Some(k))),
                (Some(_), Some(_)) => None,
            }
        };
        match next {
            Some(target) => *targets.entry(target).or_insert_with(Rational::zero) += &step,
            None => stay += &step,
        }
    }
    if !stay.is_zero() {
        *targets.entry(m.clone()).or_insert_with(Rational::zero) += stay;
    }
    targets.into_iter().collect()
}

/// Enumerates, builds the kernel and insists on irreducibility.
pub fn build(host: &HostGraph, max_states: usize) -> Result<Chain> {
    let space = matchings_states(host, max_states)?;
    let (space, kernel) = chain::kernel_over(space, |bytes| {
        let m = Matching::decode(host, bytes)?;
        Ok(matchings_kernel_row(&m, host)
            .into_iter()
            .map(|(t, p)| (t.encode(), p))
            .collect())
    })?;
    if !check_ergodicity(&kernel).irreducible {
        return Err(Error::NotIrreducible);
    }
    let pi = StationaryDistribution::uniform(space.len())?;
    let edge_list = host
        .edges
        .iter()
        .map(|(u, v)| format!("{}-{}", u + 1, v + 1))
        .collect::<Vec<_>>()
        .join(",");
    let descriptor = ChainDescriptor {
        family: Family::Matchings,
        params: BTreeMap::from([
            ("n".to_string(), host.n.to_string()),
            ("edges".to_string(), edge_list),
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

pub fn matchings_analysis(host: &HostGraph, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let chain = build(host, opts.max_states)?;
    let walks = walks::self_loop_walkset(&chain.kernel)?;
    let mut report = analysis::analyze(&chain, &walks, opts)?;
    let edges = host.edge_count() as i64;

    let min_hold = chain.kernel.min_self_loop();
    report.facts.insert("edges".into(), edges.to_string());
    report.facts.insert("min_holding_probability".into(), rational::format(&min_hold));
    report.checks.insert(
        "holding_at_least_one_over_edges".into(),
        Verdict::check(min_hold >= rational::ratio(1, edges), || {
            format!("min p(M,M) = {}", rational::format(&min_hold))
        }),
    );
    let eta = rational::parse(&report.walks.eta).expect("report eta is a rational");
    report.checks.insert(
        "eta_at_most_edges".into(),
        Verdict::check(eta <= rational::int(edges), || format!("eta = {}", report.walks.eta)),
    );
    let floor = -1.0 + 2.0 / edges as f64;
    let lambda_min = report.spectrum.lambda_min;
    report.checks.insert(
        "lambda_min_at_least_two_over_edges_minus_one".into(),
        Verdict::check(lambda_min >= floor - crate::spectral::LAMBDA_MIN_SLACK, || {
            format!("lambda_min = {lambda_min} < {floor}")
        }),
    );
    match oracle::count_matchings(host) {
        Ok(count) => {
            report.oracle.direct_count = Some(count);
            report.checks.insert(
                "direct_count_match".into(),
                Verdict::check(count == chain.space.len() as u64, || {
                    format!("enumerated {} states, direct count is {count}", chain.space.len())
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

    fn p4() -> HostGraph {
        HostGraph::path(4).unwrap()
    }

    fn m(host: &HostGraph, idx: &[usize]) -> Matching {
        Matching::new(host, idx).unwrap()
    }

    #[test]
    fn p4_has_four_states() {
        let host = p4();
        let space = matchings_states(&host, 100).unwrap();
        assert_eq!(space.len(), 4);
        for expected in [vec![0, 2], vec![0], vec![1], vec![2]] {
            assert!(space.index_of(&m(&host, &expected).encode()).is_some());
        }
    }

    #[test]
    fn p4_perfect_row() {
        let host = p4();
        let mut row = matchings_kernel_row(&m(&host, &[0, 2]), &host);
        row.sort();
        let mut expected = vec![
            (m(&host, &[0]), ratio(1, 3)),
            (m(&host, &[0, 2]), ratio(1, 3)),
            (m(&host, &[2]), ratio(1, 3)),
        ];
        expected.sort();
        assert_eq!(row, expected);
    }

    #[test]
    fn p4_middle_edge_row() {
        let host = p4();
        // M = {23}: e = 12 slides to {12}, e = 34 slides to {34}, e = 23 stays
        let row = matchings_kernel_row(&m(&host, &[1]), &host);
        let lookup: BTreeMap<_, _> = row.into_iter().collect();
        assert_eq!(lookup[&m(&host, &[0])], ratio(1, 3));
        assert_eq!(lookup[&m(&host, &[2])], ratio(1, 3));
        assert_eq!(lookup[&m(&host, &[1])], ratio(1, 3));
    }

    #[test]
    fn p4_kernel_is_symmetric() {
        let chain = build(&p4(), 100).unwrap();
        for (x, y, p) in chain.kernel.transitions() {
            assert_eq!(chain.kernel.prob(y, x), Some(p));
        }
        assert_eq!(chain.kernel.min_self_loop(), ratio(1, 3));
    }

    #[test]
    fn rejects_bad_hosts() {
        assert!(HostGraph::new(2, vec![(0, 1)]).is_err());
        assert!(matches!(
            HostGraph::new(4, vec![(0, 1), (2, 3)]),
            Err(Error::Precondition(_))
        ));
        assert!(HostGraph::new(5, vec![(0, 1)]).is_err());
        assert!(HostGraph::new(4, vec![(0, 1), (1, 0), (1, 2), (2, 3)]).is_err());
        assert!(HostGraph::new(4, vec![(0, 1), (1, 1), (2, 3)]).is_err());
        // star K_{1,3}: connected, no perfect matching
        let star = HostGraph::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(matches!(matchings_states(&star, 100), Err(Error::Infeasible(_))));
    }

    #[test]
    fn parse_graph_file() {
        let text = "# path\n4 3\n1 2\n\n2 3 # middle\n3 4\n";
        assert_eq!(HostGraph::parse(text).unwrap(), p4());
        assert!(matches!(HostGraph::parse("4 3\n1 2\n2 3\n"), Err(Error::Parse(_))));
        assert!(matches!(HostGraph::parse("4 1\n0 1\n"), Err(Error::Parse(_))));
        assert!(matches!(HostGraph::parse("4 x\n"), Err(Error::Parse(_))));
        assert!(matches!(HostGraph::parse(""), Err(Error::Parse(_))));
    }

    #[test]
    fn matching_validation() {
        let host = p4();
        assert!(Matching::new(&host, &[0, 1]).is_err());
        assert!(Matching::new(&host, &[]).is_err());
        assert!(Matching::new(&host, &[5]).is_err());
    }

    #[test]
    fn moves_preserve_or_shift_size_by_one() {
        let host = HostGraph::grid(3, 2).unwrap();
        let space = matchings_states(&host, 1000).unwrap();
        for bytes in space.states() {
            let from = Matching::decode(&host, bytes).unwrap();
            for (to, _) in matchings_kernel_row(&from, &host) {
                let delta = to.size() as i64 - from.size() as i64;
                assert!(delta.abs() <= 1);
                if from.is_perfect(&host) {
                    assert!(delta <= 0);
                }
            }
        }
    }
}
