//! Canonical closed odd walks and their congestion.
//!
//! A walk set assigns every state `x` a closed walk of odd length through the
//! transition graph. Its congestion
//!
//! ```text
//! eta(W) = max_e Q(e)^-1 sum_{x : e in w_x} r(e, w_x) pi(x) |w_x|
//! ```
//!
//! bounds the smallest eigenvalue: `(1 + lambda_min)^-1 <= eta / 2`.
//! Edges are directed; `|w_x|` counts edges, so a self-loop walk has length 1.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::chain::{self, StationaryDistribution, TransitionKernel};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Largest multiplicity of a non-loop edge within one walk.
pub const MAX_EDGE_MULTIPLICITY: usize = 2;
/// Largest multiplicity of a self-loop within one walk.
pub const MAX_LOOP_MULTIPLICITY: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OddWalk {
    pub vertices: Vec<usize>,
}

impl OddWalk {
    pub fn new(vertices: Vec<usize>) -> Self {
        Self { vertices }
    }

    pub fn self_loop(x: usize) -> Self {
        Self {
            vertices: vec![x, x],
        }
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> Option<usize> {
        self.vertices.first().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Directed edge multiplicities `r(e, w)`.
    pub fn edge_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for e in self.edges() {
            *counts.entry(e).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkSet {
    walks: Vec<OddWalk>,
}

impl WalkSet {
    /// `walks[x]` must start at `x`.
    pub fn new(walks: Vec<OddWalk>) -> Result<Self> {
        for (x, w) in walks.iter().enumerate() {
            if w.start() != Some(x) {
                return Err(Error::InvalidWalk {
                    state: x,
                    reason: "walk does not start at its state".into(),
                });
            }
        }
        Ok(Self { walks })
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn walk(&self, x: usize) -> &OddWalk {
        &self.walks[x]
    }

    pub fn walks(&self) -> &[OddWalk] {
        &self.walks
    }

    /// Walk length -> number of states.
    pub fn length_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for w in &self.walks {
            *hist.entry(w.len()).or_insert(0) += 1;
        }
        hist
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkFailure {
    Empty,
    VertexOutOfRange { position: usize, vertex: usize },
    NotClosed,
    EvenLength(usize),
    NotATransition { from: usize, to: usize },
    EdgeOverused { from: usize, to: usize, count: usize },
}

impl std::fmt::Display for WalkFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WalkFailure::Empty => write!(f, "walk has no edges"),
            WalkFailure::VertexOutOfRange { position, vertex } => {
                write!(f, "vertex {vertex} at position {position} is out of range")
            }
            WalkFailure::NotClosed => write!(f, "walk is not closed"),
            WalkFailure::EvenLength(len) => write!(f, "walk has even length {len}"),
            WalkFailure::NotATransition { from, to } => write!(f, "({from},{to}) is not a transition"),
            WalkFailure::EdgeOverused { from, to, count } => {
                write!(f, "edge ({from},{to}) used {count} times")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WalkReport {
    pub ok: bool,
    pub failures: Vec<WalkFailure>,
}

pub fn validate_walk(kernel: &TransitionKernel, walk: &OddWalk) -> WalkReport {
    let mut failures = Vec::new();
    let n = kernel.len();
    if walk.is_empty() {
        failures.push(WalkFailure::Empty);
    }
    for (position, &vertex) in walk.vertices.iter().enumerate() {
        if vertex >= n {
            failures.push(WalkFailure::VertexOutOfRange { position, vertex });
        }
    }
    if !failures.iter().any(|f| matches!(f, WalkFailure::VertexOutOfRange { .. })) {
        if walk.vertices.first() != walk.vertices.last() {
            failures.push(WalkFailure::NotClosed);
        }
        if !walk.is_empty() && walk.len().is_multiple_of(2) {
            failures.push(WalkFailure::EvenLength(walk.len()));
        }
        for (from, to) in walk.edges() {
            if kernel.prob(from, to).is_none() {
                failures.push(WalkFailure::NotATransition { from, to });
            }
        }
        for ((from, to), count) in walk.edge_counts() {
            let cap = if from == to {
                MAX_LOOP_MULTIPLICITY
            } else {
                MAX_EDGE_MULTIPLICITY
            };
            if count > cap {
                failures.push(WalkFailure::EdgeOverused { from, to, count });
            }
        }
    }
    WalkReport {
        ok: failures.is_empty(),
        failures,
    }
}

/// Inverted index: directed edge -> `(state, r(e, w_state))`, states ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeIndex {
    by_edge: BTreeMap<(usize, usize), Vec<(usize, usize)>>,
}

impl EdgeIndex {
    pub fn build(walks: &WalkSet) -> Self {
        let mut by_edge: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (x, w) in walks.walks().iter().enumerate() {
            for (e, r) in w.edge_counts() {
                by_edge.entry(e).or_default().push((x, r));
            }
        }
        Self { by_edge }
    }

    pub fn users(&self, edge: (usize, usize)) -> &[(usize, usize)] {
        self.by_edge.get(&edge).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<(usize, usize)>)> {
        self.by_edge.iter()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.by_edge
            .values()
            .flat_map(|users| users.iter().map(|(_, r)| *r))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Congestion {
    pub eta: Rational,
    /// Lexicographically first directed edge attaining the maximum.
    pub argmax: (usize, usize),
}

fn check_walkset(kernel: &TransitionKernel, walks: &WalkSet) -> Result<()> {
    if walks.len() != kernel.len() {
        return Err(Error::DimensionMismatch {
            kernel: kernel.len(),
            other: walks.len(),
        });
    }
    for (x, w) in walks.walks().iter().enumerate() {
        let report = validate_walk(kernel, w);
        if let Some(first) = report.failures.first() {
            return Err(match first {
                WalkFailure::NotATransition { from, to } => Error::NotATransition {
                    from: *from,
                    to: *to,
                },
                other => Error::InvalidWalk {
                    state: x,
                    reason: other.to_string(),
                },
            });
        }
    }
    Ok(())
}

/// Congestion for an arbitrary stationary distribution, exact.
pub fn congestion(
    kernel: &TransitionKernel,
    pi: &StationaryDistribution,
    walks: &WalkSet,
) -> Result<Congestion> {
    chain::check_dims(kernel, pi)?;
    check_walkset(kernel, walks)?;
    let index = EdgeIndex::build(walks);
    maximise(&index, |&(x, y), users| {
        let q = pi.get(x) * kernel.prob(x, y).expect("validated transition");
        let load: Rational = users
            .iter()
            .map(|&(s, r)| pi.get(s) * rational::int((r * walks.walk(s).len()) as i64))
            .sum();
        load / q
    })
}

/// Congestion when `pi` is uniform and no walk repeats an edge:
/// `max_e P(e)^-1 sum_{x : e in w_x} |w_x|`.
pub fn congestion_uniform(
    kernel: &TransitionKernel,
    pi: &StationaryDistribution,
    walks: &WalkSet,
) -> Result<Congestion> {
    chain::check_dims(kernel, pi)?;
    if !pi.is_uniform() {
        return Err(Error::Precondition(
            "simplified congestion needs a uniform stationary distribution".into(),
        ));
    }
    check_walkset(kernel, walks)?;
    let index = EdgeIndex::build(walks);
    if index.max_multiplicity() > 1 {
        return Err(Error::Precondition(
            "simplified congestion needs every walk to use each edge at most once".into(),
        ));
    }
    maximise(&index, |&(x, y), users| {
        let p = kernel.prob(x, y).expect("validated transition");
        let load: i64 = users.iter().map(|&(s, _)| walks.walk(s).len() as i64).sum();
        rational::int(load) / p
    })
}

fn maximise<F>(index: &EdgeIndex, mut load: F) -> Result<Congestion>
where
    F: FnMut(&(usize, usize), &[(usize, usize)]) -> Rational,
{
    let mut best: Option<Congestion> = None;
    for (edge, users) in index.edges() {
        let value = load(edge, users);
        if best.as_ref().is_none_or(|b| value > b.eta) {
            best = Some(Congestion {
                eta: value,
                argmax: *edge,
            });
        }
    }
    best.ok_or(Error::EmptyStateSpace)
}

/// Congestion contributed to one directed edge, for inspecting symmetry of
/// the maximum.
pub fn edge_load(
    kernel: &TransitionKernel,
    pi: &StationaryDistribution,
    walks: &WalkSet,
    index: &EdgeIndex,
    edge: (usize, usize),
) -> Result<Rational> {
    let q = chain::edge_flow(kernel, pi, edge.0, edge.1)?;
    let load: Rational = index
        .users(edge)
        .iter()
        .map(|&(s, r)| pi.get(s) * rational::int((r * walks.walk(s).len()) as i64))
        .sum();
    Ok(load / q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OddWalkBound {
    /// Upper bound `eta / 2` on `(1 + lambda_min)^-1`.
    pub bound_on_inverse: Rational,
    /// Equivalent lower bound `2 / eta - 1` on `lambda_min`.
    pub lambda_min_lower: f64,
}

pub fn odd_walk_bound(eta: &Rational) -> Result<OddWalkBound> {
    if !eta.is_positive() {
        return Err(Error::Precondition(format!(
            "congestion must be positive, got {}",
            rational::format(eta)
        )));
    }
    let lower = rational::int(2) / eta - Rational::one();
    Ok(OddWalkBound {
        bound_on_inverse: eta / rational::int(2),
        lambda_min_lower: rational::to_f64(&lower),
    })
}

/// `w_x = [x, x]` for every state.
pub fn self_loop_walkset(kernel: &TransitionKernel) -> Result<WalkSet> {
    let walks = (0..kernel.len())
        .map(|x| match kernel.self_loop(x) {
            Some(_) => Ok(OddWalk::self_loop(x)),
            None => Err(Error::MissingSelfLoop { state: x }),
        })
        .collect::<Result<Vec<_>>>()?;
    WalkSet::new(walks)
}

/// `max_x p(x,x)^-1`, the closed form of the self-loop walk set's congestion.
pub fn max_inverse_holding(kernel: &TransitionKernel) -> Result<Rational> {
    (0..kernel.len())
        .map(|x| {
            kernel
                .self_loop(x)
                .map(|p| p.recip())
                .ok_or(Error::MissingSelfLoop { state: x })
        })
        .try_fold(Rational::zero(), |acc, v| v.map(|v| acc.max(v)))
}
