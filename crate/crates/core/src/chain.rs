//! Finite reversible Markov chains over enumerated state spaces.
//!
//! States are opaque canonical byte encodings sorted lexicographically, so
//! a state's dense index does not depend on discovery order. Transition
//! probabilities and the stationary distribution are exact rationals.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Default cap on the number of enumerated states.
pub const DEFAULT_MAX_STATES: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl StateSpace {
    /// Sorts and deduplicates `states`.
    pub fn new(mut states: Vec<Vec<u8>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyStateSpace);
        }
        states.sort();
        states.dedup();
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self { states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, index: usize) -> &[u8] {
        &self.states[index]
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn index_of(&self, encoding: &[u8]) -> Option<usize> {
        self.index.get(encoding).copied()
    }
}

/// Sparse row-stochastic matrix; each row is sorted by target index and
/// stores only positive entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionKernel {
    rows: Vec<Vec<(usize, Rational)>>,
}

impl TransitionKernel {
    /// Validates ranges, positivity, exact row sums and support symmetry.
    /// Duplicate targets within a row are merged.
    pub fn new(rows: Vec<Vec<(usize, Rational)>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyStateSpace);
        }
        let mut merged = Vec::with_capacity(n);
        for (x, row) in rows.into_iter().enumerate() {
            let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
            for (y, p) in row {
                if y >= n {
                    return Err(Error::InvalidState(format!(
                        "row {x} targets {y}, outside 0..{n}"
                    )));
                }
                *acc.entry(y).or_insert_with(Rational::zero) += p;
            }
            let mut total = Rational::zero();
            let mut out = Vec::with_capacity(acc.len());
            for (y, p) in acc {
                if p.is_zero() {
                    continue;
                }
                if p.is_negative() || p > Rational::one() {
                    return Err(Error::InvalidState(format!(
                        "p({x},{y}) = {} is not a probability",
                        rational::format(&p)
                    )));
                }
                total += &p;
                out.push((y, p));
            }
            if !total.is_one() {
                return Err(Error::InvalidState(format!(
                    "row {x} sums to {}",
                    rational::format(&total)
                )));
            }
            merged.push(out);
        }
        let kernel = Self { rows: merged };
        for x in 0..n {
            for (y, _) in kernel.row(x) {
                if kernel.prob(*y, x).is_none() {
                    return Err(Error::InvalidState(format!(
                        "support is not symmetric: ({x},{y}) present, ({y},{x}) absent"
                    )));
                }
            }
        }
        Ok(kernel)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, x: usize) -> &[(usize, Rational)] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<(usize, Rational)>] {
        &self.rows
    }

    /// `Some(p)` when `p(x,y) > 0`.
    pub fn prob(&self, x: usize, y: usize) -> Option<&Rational> {
        let row = self.rows.get(x)?;
        row.binary_search_by_key(&y, |(t, _)| *t)
            .ok()
            .map(|i| &row[i].1)
    }

    pub fn self_loop(&self, x: usize) -> Option<&Rational> {
        self.prob(x, x)
    }

    /// Number of stored (directed) transitions, self-loops included.
    pub fn transition_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, &Rational)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |(y, p)| (x, *y, p)))
    }

    /// Smallest holding probability over all states; zero when some state has
    /// no self-loop.
    pub fn min_self_loop(&self) -> Rational {
        (0..self.len())
            .map(|x| self.self_loop(x).cloned().unwrap_or_else(Rational::zero))
            .min()
            .unwrap_or_else(Rational::zero)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationaryDistribution {
    pi: Vec<Rational>,
}

impl StationaryDistribution {
    pub fn new(pi: Vec<Rational>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::EmptyStateSpace);
        }
        if let Some(x) = pi.iter().position(|p| !p.is_positive()) {
            return Err(Error::InvalidState(format!("pi({x}) is not positive")));
        }
        let total: Rational = pi.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidState(format!(
                "pi sums to {}",
                rational::format(&total)
            )));
        }
        Ok(Self { pi })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyStateSpace);
        }
        Ok(Self {
            pi: vec![rational::ratio(1, n as i64); n],
        })
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn get(&self, x: usize) -> &Rational {
        &self.pi[x]
    }

    pub fn values(&self) -> &[Rational] {
        &self.pi
    }

    pub fn min(&self) -> &Rational {
        self.pi.iter().min().expect("non-empty")
    }

    pub fn is_uniform(&self) -> bool {
        self.pi.iter().all(|p| *p == self.pi[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Switch,
    Matchings,
    Contingency,
    Custom,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Switch => "switch",
            Family::Matchings => "matchings",
            Family::Contingency => "contingency",
            Family::Custom => "custom",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDescriptor {
    pub family: Family,
    pub params: BTreeMap<String, String>,
    pub states: usize,
}

impl ChainDescriptor {
    /// `key=value` pairs joined by `;`, in key order.
    pub fn params_string(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// A fully built chain instance.
#[derive(Debug, Clone)]
pub struct Chain {
    pub space: StateSpace,
    pub kernel: TransitionKernel,
    pub pi: StationaryDistribution,
    pub descriptor: ChainDescriptor,
}

/// Parameters for the three chain families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyInstance {
    Switch { n: usize, d: usize },
    Matchings(crate::matchings::HostGraph),
    Contingency(crate::contingency::Margins),
}

/// Builds a chain of one of the three families; `pi` is uniform for each.
pub fn build_chain(instance: &FamilyInstance, max_states: usize) -> Result<Chain> {
    match instance {
        FamilyInstance::Switch { n, d } => crate::switch::build(*n, *d, max_states),
        FamilyInstance::Matchings(host) => crate::matchings::build(host, max_states),
        FamilyInstance::Contingency(margins) => crate::contingency::build(margins, max_states),
    }
}

/// Discovers every state reachable from `seed` under `row`, which returns the
/// outgoing transitions of an encoded state. Returns the sorted state space
/// and the kernel indexed accordingly.
pub fn explore<F>(seed: Vec<u8>, max_states: usize, mut row: F) -> Result<(StateSpace, TransitionKernel)>
where
    F: FnMut(&[u8]) -> Result<Vec<(Vec<u8>, Rational)>>,
{
    let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut order: Vec<Vec<u8>> = Vec::new();
    let mut raw_rows: Vec<Vec<(Vec<u8>, Rational)>> = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(seed.clone(), 0);
    order.push(seed.clone());
    queue.push_back(seed);
    while let Some(state) = queue.pop_front() {
        let out = row(&state)?;
        for (target, _) in &out {
            if !seen.contains_key(target) {
                if order.len() >= max_states {
                    return Err(Error::CapExceeded { cap: max_states });
                }
                seen.insert(target.clone(), order.len());
                order.push(target.clone());
                queue.push_back(target.clone());
            }
        }
        raw_rows.push(out);
    }
    let space = StateSpace::new(order.clone())?;
    index_rows(space, order, raw_rows)
}

/// Builds the kernel over an already enumerated state space; every transition
/// must land inside the space.
pub fn kernel_over<F>(space: StateSpace, mut row: F) -> Result<(StateSpace, TransitionKernel)>
where
    F: FnMut(&[u8]) -> Result<Vec<(Vec<u8>, Rational)>>,
{
    let order = space.states().to_vec();
    let raw_rows = order.iter().map(|s| row(s)).collect::<Result<Vec<_>>>()?;
    index_rows(space, order, raw_rows)
}

fn index_rows(
    space: StateSpace,
    order: Vec<Vec<u8>>,
    raw_rows: Vec<Vec<(Vec<u8>, Rational)>>,
) -> Result<(StateSpace, TransitionKernel)> {
    let mut rows = vec![Vec::new(); space.len()];
    for (state, raw) in order.iter().zip(raw_rows) {
        let x = space.index_of(state).expect("state in space");
        rows[x] = raw
            .into_iter()
            .map(|(t, p)| {
                space
                    .index_of(&t)
                    .map(|y| (y, p))
                    .ok_or_else(|| Error::InvalidState("transition leaves the state space".into()))
            })
            .collect::<Result<Vec<_>>>()?;
    }
    let kernel = TransitionKernel::new(rows)?;
    Ok((space, kernel))
}

/// Stationary edge flow `Q(x,y) = pi(x) p(x,y)`.
pub fn edge_flow(
    kernel: &TransitionKernel,
    pi: &StationaryDistribution,
    x: usize,
    y: usize,
) -> Result<Rational> {
    check_dims(kernel, pi)?;
    let p = kernel
        .prob(x, y)
        .ok_or(Error::NotATransition { from: x, to: y })?;
    Ok(pi.get(x) * p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub ok: bool,
    pub worst_violation: Option<(usize, usize)>,
}

/// Exact detailed-balance check. The reported violation is the pair with the
/// largest `|Q(x,y) - Q(y,x)|`, ties broken by first occurrence.
pub fn check_detailed_balance(kernel: &TransitionKernel, pi: &StationaryDistribution) -> BalanceReport {
    if kernel.len() != pi.len() {
        return BalanceReport {
            ok: false,
            worst_violation: None,
        };
    }
    let mut worst: Option<((usize, usize), Rational)> = None;
    for (x, y, p) in kernel.transitions() {
        let back = kernel.prob(y, x).cloned().unwrap_or_else(Rational::zero);
        let gap = (pi.get(x) * p - pi.get(y) * back).abs();
        if gap.is_zero() {
            continue;
        }
        if worst.as_ref().is_none_or(|(_, g)| gap > *g) {
            worst = Some(((x, y), gap));
        }
    }
    BalanceReport {
        ok: worst.is_none(),
        worst_violation: worst.map(|(pair, _)| pair),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub irreducible: bool,
    pub aperiodic: bool,
}

/// Irreducible iff the (undirected) support graph is connected; aperiodic iff
/// a self-loop exists or the loopless support graph has an odd cycle.
pub fn check_ergodicity(kernel: &TransitionKernel) -> ErgodicityReport {
    let n = kernel.len();
    let mut colour: Vec<Option<bool>> = vec![None; n];
    let mut components = 0;
    let mut odd_cycle = false;
    for start in 0..n {
        if colour[start].is_some() {
            continue;
        }
        components += 1;
        colour[start] = Some(false);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            let cx = colour[x].expect("coloured");
            for (y, _) in kernel.row(x) {
                if *y == x {
                    continue;
                }
                match colour[*y] {
                    None => {
                        colour[*y] = Some(!cx);
                        queue.push_back(*y);
                    }
                    Some(cy) if cy == cx => odd_cycle = true,
                    Some(_) => {}
                }
            }
        }
    }
    let has_loop = (0..n).any(|x| kernel.self_loop(x).is_some());
    ErgodicityReport {
        irreducible: components == 1,
        aperiodic: has_loop || odd_cycle,
    }
}

pub(crate) fn check_dims(kernel: &TransitionKernel, pi: &StationaryDistribution) -> Result<()> {
    if kernel.len() != pi.len() {
        return Err(Error::DimensionMismatch {
            kernel: kernel.len(),
            other: pi.len(),
        });
    }
    Ok(())
}
