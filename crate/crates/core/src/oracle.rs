//! Independent baselines for cross-checking the chain builders and the
//! eigensolver. Nothing here reuses the chain modules' enumeration code.
//!
//! Randomness is SplitMix64 (`state += 0x9E3779B97F4A7C15`, then the usual
//! xor-shift-multiply finaliser), seeded with the raw 64-bit seed. Bounded
//! draws are `next_u64() % bound`, shuffles are Fisher-Yates from the back
//! (`j = below(i + 1)` for `i = len-1, ..., 1`). Every draw sequence below is
//! spelled out so the generated chains can be reproduced elsewhere.

use std::collections::{BTreeMap, VecDeque};

use num_traits::Zero;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::chain::{StationaryDistribution, TransitionKernel};
use crate::contingency::Margins;
use crate::error::{Error, Result};
use crate::matchings::HostGraph;
use crate::rational::{self, Rational};
use crate::walks::{OddWalk, WalkSet, MAX_EDGE_MULTIPLICITY};

pub const DEFAULT_MIXING_MAX_STATES: usize = 5_000;
pub const DEFAULT_MIXING_MAX_ITERATIONS: u64 = 1_000_000;
pub const DEFAULT_POWER_ITERATIONS: usize = 1_000_000;
/// Largest brute-force search the direct counters will attempt.
pub const DIRECT_COUNT_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone)]
pub struct Rng(SplitMix64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// Uniform in `[-1, 1)`, from the top 53 bits.
    pub fn symmetric_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Labelled d-regular graphs on `n` vertices, by filtering all `2^C(n,2)`
/// edge subsets.
pub fn count_regular_graphs(n: usize, d: usize) -> Result<u64> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
    if pairs.len() >= 64 || (1u64 << pairs.len()) > DIRECT_COUNT_LIMIT {
        return Err(Error::Precondition(format!(
            "2^{} graphs is too many for the direct regular-graph count",
            pairs.len()
        )));
    }
    let mut count = 0;
    for mask in 0u64..(1u64 << pairs.len()) {
        if mask.count_ones() as usize * 2 != n * d {
            continue;
        }
        let mut degree = vec![0usize; n];
        for (k, &(u, v)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                degree[u] += 1;
                degree[v] += 1;
            }
        }
        if degree.iter().all(|&g| g == d) {
            count += 1;
        }
    }
    Ok(count)
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(u64::MAX as u128) as u64
}

/// Perfect and near-perfect matchings, by testing every edge subset of size
/// `n/2` and `n/2 - 1` for disjointness.
pub fn count_matchings(host: &HostGraph) -> Result<u64> {
    let edges = host.edges();
    let half = host.n() / 2;
    let total = binomial(edges.len() as u64, half as u64) + binomial(edges.len() as u64, half as u64 - 1);
    if total > DIRECT_COUNT_LIMIT {
        return Err(Error::Precondition(format!(
            "{total} edge subsets is too many for the direct matching count"
        )));
    }
    let mut count = 0;
    for size in [half - 1, half] {
        let mut chosen: Vec<usize> = (0..size).collect();
        loop {
            let mut covered = vec![false; host.n()];
            let disjoint = chosen.iter().all(|&k| {
                let (u, v) = edges[k];
                let fresh = !covered[u] && !covered[v];
                covered[u] = true;
                covered[v] = true;
                fresh
            });
            if disjoint {
                count += 1;
            }
            if !next_combination(&mut chosen, edges.len()) {
                break;
            }
        }
    }
    Ok(count)
}

/// Advances `c` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Contingency tables, by assigning every cell independently in
/// `0..=min(r_i, c_j)` and checking both margins at the end.
pub fn count_tables(margins: &Margins) -> Result<u64> {
    let (m, n) = (margins.m(), margins.n());
    let bounds: Vec<u32> = (0..m * n)
        .map(|k| margins.rows()[k / n].min(margins.cols()[k % n]))
        .collect();
    let space: u128 = bounds.iter().map(|&b| b as u128 + 1).product();
    if space > DIRECT_COUNT_LIMIT as u128 {
        return Err(Error::Precondition(format!(
            "{space} cell assignments is too many for the direct table count"
        )));
    }
    let mut cells = vec![0u32; m * n];
    let mut count = 0;
    loop {
        let rows_ok = (0..m).all(|i| (0..n).map(|j| cells[i * n + j]).sum::<u32>() == margins.rows()[i]);
        let cols_ok = (0..n).all(|j| (0..m).map(|i| cells[i * n + j]).sum::<u32>() == margins.cols()[j]);
        if rows_ok && cols_ok {
            count += 1;
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == cells.len() {
                return Ok(count);
            }
            if cells[k] < bounds[k] {
                cells[k] += 1;
                break;
            }
            cells[k] = 0;
            k += 1;
        }
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn float_rows(kernel: &TransitionKernel) -> Vec<Vec<(usize, f64)>> {
    kernel
        .rows()
        .iter()
        .map(|row| row.iter().map(|(y, p)| (*y, rational::to_f64(p))).collect())
        .collect()
}

/// Smallest `t >= 0` with `max_x TV(P^t(x, .), pi) <= epsilon`.
pub fn tv_mixing_time(
    kernel: &TransitionKernel,
    pi: &StationaryDistribution,
    epsilon: f64,
    max_states: usize,
    max_iterations: u64,
) -> Result<u64> {
    let n = kernel.len();
    if n != pi.len() {
        return Err(Error::DimensionMismatch { kernel: n, other: pi.len() });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Precondition(format!("epsilon {epsilon} not in (0,1)")));
    }
    if n > max_states {
        return Err(Error::CapExceeded { cap: max_states });
    }
    let rows = float_rows(kernel);
    let target: Vec<f64> = pi.values().iter().map(rational::to_f64).collect();
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut d = vec![0.0; n];
            d[x] = 1.0;
            d
        })
        .collect();
    let worst_tv = |dist: &[Vec<f64>]| {
        dist.iter()
            .map(|d| {
                let mut acc = Compensated::default();
                for (a, b) in d.iter().zip(&target) {
                    acc.add((a - b).abs());
                }
                0.5 * acc.value()
            })
            .fold(0.0, f64::max)
    };
    let mut t = 0;
    while worst_tv(&dist) > epsilon {
        if t == max_iterations {
            return Err(Error::Numerical(format!(
                "distribution not within {epsilon} of stationarity after {max_iterations} steps"
            )));
        }
        for d in dist.iter_mut() {
            let mut next = vec![Compensated::default(); n];
            for (y, &mass) in d.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for &(z, p) in &rows[y] {
                    next[z].add(mass * p);
                }
            }
            *d = next.iter().map(Compensated::value).collect();
        }
        t += 1;
    }
    Ok(t)
}

/// Second-largest eigenvalue by power iteration on `S + I` restricted to the
/// complement of `sqrt(pi)`. The shift makes the operator positive
/// semidefinite, so the dominant eigenvalue is `1 + lambda_1` even when
/// `|lambda_min| > lambda_1`.
pub fn power_iteration_lambda1(
    kernel: &TransitionKernel,
    pi: &StationaryDistribution,
    iterations: usize,
) -> Result<f64> {
    let n = kernel.len();
    if n != pi.len() {
        return Err(Error::DimensionMismatch { kernel: n, other: pi.len() });
    }
    if n < 2 {
        return Err(Error::Precondition("power iteration needs at least two states".into()));
    }
    let rows = float_rows(kernel);
    let sqrt_pi: Vec<f64> = pi.values().iter().map(|p| rational::to_f64(p).sqrt()).collect();
    let deflate = |v: &mut [f64]| {
        let dot: f64 = v.iter().zip(&sqrt_pi).map(|(a, b)| a * b).sum();
        for (vi, ui) in v.iter_mut().zip(&sqrt_pi) {
            *vi -= dot * ui;
        }
    };
    let normalise = |v: &mut [f64]| {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        norm
    };
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|x| {
                let sv: f64 = rows[x].iter().map(|&(y, p)| sqrt_pi[x] / sqrt_pi[y] * p * v[y]).sum();
                sv + v[x]
            })
            .collect()
    };
    let mut rng = Rng::new(0x5EED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.symmetric_unit()).collect();
    deflate(&mut v);
    normalise(&mut v);
    for _ in 0..iterations {
        let mut w = apply(&v);
        deflate(&mut w);
        let rho: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - rho * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= 1e-10 {
            return Ok(rho - 1.0);
        }
        if normalise(&mut w) == 0.0 {
            return Ok(-1.0);
        }
        v = w;
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge in {iterations} iterations"
    )))
}

/// Parameters of a random reversible ergodic chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomChainSpec {
    pub states: usize,
    pub seed: u64,
    /// Probability that any given state receives a self-loop.
    pub loop_mass: Rational,
}

impl RandomChainSpec {
    pub fn new(states: usize, seed: u64) -> Self {
        Self {
            states,
            seed,
            loop_mass: rational::ratio(1, 3),
        }
    }
}

/// Random connected weighted graph turned into a chain: `P(x,y) = w(x,y)/W(x)`
/// and `pi(x) = W(x) / sum W`, so detailed balance holds exactly.
///
/// Draw order: spanning tree (`parent(v) = below(v)`, weight `1 + below(9)`
/// for `v = 1..N`); each remaining pair `u < v` in order becomes an edge when
/// `below(4) == 0`, weight `1 + below(9)`; each state gets a loop when
/// `below(q) < p` for `loop_mass = p/q`, weight `1 + below(9)`; if no state
/// got a loop, state `below(N)` gets one with weight `1 + below(9)`.
pub fn random_reversible_chain(spec: &RandomChainSpec) -> Result<(TransitionKernel, StationaryDistribution)> {
    let n = spec.states;
    if n < 2 {
        return Err(Error::Precondition("random chains need at least two states".into()));
    }
    if spec.loop_mass <= Rational::zero() || spec.loop_mass >= rational::one() {
        return Err(Error::Precondition("loop mass must lie in (0,1)".into()));
    }
    let p = u64::try_from(spec.loop_mass.numer()).map_err(|_| Error::Precondition("loop mass too large".into()))?;
    let q = u64::try_from(spec.loop_mass.denom()).map_err(|_| Error::Precondition("loop mass too large".into()))?;
    let mut rng = Rng::new(spec.seed);
    let mut weight: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for v in 1..n {
        let u = rng.below(v as u64) as usize;
        weight.insert((u, v), 1 + rng.below(9));
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if !weight.contains_key(&(u, v)) && rng.below(4) == 0 {
                weight.insert((u, v), 1 + rng.below(9));
            }
        }
    }
    let mut any_loop = false;
    for x in 0..n {
        if rng.below(q) < p {
            weight.insert((x, x), 1 + rng.below(9));
            any_loop = true;
        }
    }
    if !any_loop {
        let x = rng.below(n as u64) as usize;
        weight.insert((x, x), 1 + rng.below(9));
    }
    let mut rows: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for (&(u, v), &w) in &weight {
        rows[u].push((v, w));
        if u != v {
            rows[v].push((u, w));
        }
    }
    let totals: Vec<u64> = rows.iter().map(|r| r.iter().map(|(_, w)| w).sum()).collect();
    let grand: u64 = totals.iter().sum();
    let kernel = TransitionKernel::new(
        rows.iter()
            .zip(&totals)
            .map(|(row, &t)| row.iter().map(|&(y, w)| (y, rational::ratio(w as i64, t as i64))).collect())
            .collect(),
    )?;
    let pi = StationaryDistribution::new(totals.iter().map(|&t| rational::ratio(t as i64, grand as i64)).collect())?;
    Ok((kernel, pi))
}

/// One closed odd walk per state: a shortest one found by breadth-first
/// search over `(state, parity)` pairs with shuffled neighbour order. With
/// probability 1/2 a back-and-forth detour along an edge the walk already
/// uses is spliced in, which pushes that edge's multiplicity to 2.
pub fn random_odd_walkset(kernel: &TransitionKernel, seed: u64) -> Result<WalkSet> {
    let n = kernel.len();
    let mut rng = Rng::new(seed);
    let walks = (0..n)
        .map(|x| {
            let mut walk = shortest_odd_walk(kernel, x, &mut rng)?;
            if rng.below(2) == 0 {
                add_detour(&mut walk, &mut rng);
            }
            Ok(walk)
        })
        .collect::<Result<Vec<_>>>()?;
    WalkSet::new(walks)
}

fn shortest_odd_walk(kernel: &TransitionKernel, start: usize, rng: &mut Rng) -> Result<OddWalk> {
    let n = kernel.len();
    let mut parent: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; n];
    let mut seen = vec![[false; 2]; n];
    seen[start][0] = true;
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((x, parity)) = queue.pop_front() {
        let mut next: Vec<usize> = kernel.row(x).iter().map(|(y, _)| *y).collect();
        rng.shuffle(&mut next);
        for y in next {
            let np = parity ^ 1;
            if !seen[y][np] {
                seen[y][np] = true;
                parent[y][np] = Some((x, parity));
                if (y, np) == (start, 1) {
                    let mut vertices = vec![start];
                    let mut cur = (start, 1);
                    while let Some(prev) = parent[cur.0][cur.1] {
                        vertices.push(prev.0);
                        cur = prev;
                    }
                    vertices.reverse();
                    return Ok(OddWalk::new(vertices));
                }
                queue.push_back((y, np));
            }
        }
    }
    Err(Error::Precondition(format!(
        "no closed odd walk through state {start}; the chain is periodic or reducible"
    )))
}

fn add_detour(walk: &mut OddWalk, rng: &mut Rng) {
    let positions: Vec<usize> = (0..walk.len())
        .filter(|&i| walk.vertices[i] != walk.vertices[i + 1])
        .collect();
    if positions.is_empty() {
        return;
    }
    let i = positions[rng.below(positions.len() as u64) as usize];
    let (a, b) = (walk.vertices[i], walk.vertices[i + 1]);
    let counts = walk.edge_counts();
    let used = |e| counts.get(&e).copied().unwrap_or(0);
    if used((a, b)) < MAX_EDGE_MULTIPLICITY && used((b, a)) < MAX_EDGE_MULTIPLICITY {
        // ... a -> b -> a -> b ...
        walk.vertices.splice(i + 2..i + 2, [a, b]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{check_detailed_balance, check_ergodicity};
    use crate::walks::validate_walk;

    #[test]
    fn splitmix_reference_value() {
        // first output of SplitMix64 seeded with 0
        assert_eq!(Rng::new(0).next_u64(), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn regular_graph_counts() {
        assert_eq!(count_regular_graphs(4, 1).unwrap(), 3);
        assert_eq!(count_regular_graphs(5, 2).unwrap(), 12);
        assert_eq!(count_regular_graphs(4, 3).unwrap(), 1);
        assert!(count_regular_graphs(9, 2).is_err());
    }

    #[test]
    fn matching_counts() {
        assert_eq!(count_matchings(&HostGraph::path(4).unwrap()).unwrap(), 4);
        // C6: 2 perfect, 6 * ... near-perfect: choose 2 disjoint edges of C6 = 9
        assert_eq!(count_matchings(&HostGraph::cycle(6).unwrap()).unwrap(), 11);
    }

    #[test]
    fn table_counts() {
        assert_eq!(count_tables(&Margins::new(vec![1, 1, 1], vec![1, 1, 1]).unwrap()).unwrap(), 6);
        assert_eq!(count_tables(&Margins::new(vec![2, 2], vec![2, 2]).unwrap()).unwrap(), 3);
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen.last().unwrap(), &vec![2, 3]);
    }

    fn two_state(p01: Rational, p10: Rational) -> TransitionKernel {
        let one = rational::one();
        let mut rows = vec![vec![(1, p01.clone())], vec![(0, p10.clone())]];
        if p01 < one {
            rows[0].push((0, &one - &p01));
        }
        if p10 < one {
            rows[1].push((1, &one - &p10));
        }
        TransitionKernel::new(rows).unwrap()
    }

    #[test]
    fn mixing_time_examples() {
        let half = rational::ratio(1, 2);
        let k = two_state(half.clone(), half);
        let pi = StationaryDistribution::uniform(2).unwrap();
        assert_eq!(tv_mixing_time(&k, &pi, 0.25, 100, 100).unwrap(), 1);
        // all rows equal pi
        let pi3 = StationaryDistribution::new(vec![
            rational::ratio(1, 2),
            rational::ratio(1, 3),
            rational::ratio(1, 6),
        ])
        .unwrap();
        let rows = (0..3)
            .map(|_| pi3.values().iter().cloned().enumerate().collect())
            .collect();
        let k = TransitionKernel::new(rows).unwrap();
        assert_eq!(tv_mixing_time(&k, &pi3, 0.01, 100, 100).unwrap(), 1);
        let flip = two_state(rational::one(), rational::one());
        assert!(matches!(tv_mixing_time(&flip, &pi, 0.25, 100, 50), Err(Error::Numerical(_))));
        assert!(matches!(tv_mixing_time(&flip, &pi, 0.25, 1, 50), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn power_iteration_examples() {
        let third = rational::ratio(1, 3);
        let rank_one = TransitionKernel::new(
            (0..3).map(|_| (0..3).map(|y| (y, third.clone())).collect()).collect(),
        )
        .unwrap();
        let pi = StationaryDistribution::uniform(3).unwrap();
        assert!(power_iteration_lambda1(&rank_one, &pi, 1000).unwrap().abs() < 1e-9);
        let half = rational::ratio(1, 2);
        let triangle = TransitionKernel::new(vec![
            vec![(1, half.clone()), (2, half.clone())],
            vec![(0, half.clone()), (2, half.clone())],
            vec![(0, half.clone()), (1, half)],
        ])
        .unwrap();
        let l1 = power_iteration_lambda1(&triangle, &pi, 1000).unwrap();
        assert!((l1 + 0.5).abs() < 1e-9);
    }

    #[test]
    fn random_chains_are_deterministic_and_valid() {
        let spec = RandomChainSpec::new(12, 42);
        let (k1, p1) = random_reversible_chain(&spec).unwrap();
        let (k2, p2) = random_reversible_chain(&spec).unwrap();
        assert_eq!(k1, k2);
        assert_eq!(p1, p2);
        let (k, pi) = random_reversible_chain(&RandomChainSpec::new(2, 7)).unwrap();
        assert_eq!(k.len(), 2);
        assert!((0..2).any(|x| k.self_loop(x).is_some()));
        assert!(check_detailed_balance(&k, &pi).ok);
        assert!(random_reversible_chain(&RandomChainSpec::new(1, 7)).is_err());
    }

    #[test]
    fn hundred_random_chains_are_ergodic_and_reversible() {
        for seed in 0..100 {
            let (k, pi) = random_reversible_chain(&RandomChainSpec::new(2 + (seed as usize % 29), seed)).unwrap();
            assert!(check_detailed_balance(&k, &pi).ok, "seed {seed}");
            let e = check_ergodicity(&k);
            assert!(e.irreducible && e.aperiodic, "seed {seed}");
        }
    }

    #[test]
    fn random_walksets_are_valid() {
        let mut saw_double = false;
        for seed in 0..50 {
            let (k, _) = random_reversible_chain(&RandomChainSpec::new(3 + seed as usize % 20, seed)).unwrap();
            let w = random_odd_walkset(&k, seed).unwrap();
            for walk in w.walks() {
                assert!(validate_walk(&k, walk).ok, "seed {seed}: {walk:?}");
                saw_double |= walk.edge_counts().values().any(|&r| r == 2);
            }
        }
        assert!(saw_double, "detours should exercise multiplicity 2");
    }

    #[test]
    fn bipartite_with_one_loop_routes_through_loop() {
        // path 0-1-2-3 with a loop at 3 only
        let half = rational::ratio(1, 2);
        let k = TransitionKernel::new(vec![
            vec![(1, rational::one())],
            vec![(0, half.clone()), (2, half.clone())],
            vec![(1, half.clone()), (3, half.clone())],
            vec![(2, half.clone()), (3, half)],
        ])
        .unwrap();
        let w = random_odd_walkset(&k, 3).unwrap();
        for (x, walk) in w.walks().iter().enumerate() {
            assert!(walk.edges().any(|e| e == (3, 3)), "walk for {x} avoids the loop");
            assert!(validate_walk(&k, walk).ok);
        }
    }
}
