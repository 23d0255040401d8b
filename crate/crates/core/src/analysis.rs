//! The shared analysis pipeline: structure checks, spectrum, congestion,
//! the odd-walk bound, spectral mixing bounds and oracle cross-checks.

use std::collections::BTreeMap;
use std::time::Instant;

use num_traits::One;

use crate::chain::{self, Chain, ChainDescriptor, Family, StateSpace};
use crate::error::{Error, Result};
use crate::oracle::{self, RandomChainSpec, Rng};
use crate::rational::{self, Rational};
use crate::report::{
    AnalysisReport, Bounds, ExactMixing, MixingBound, OracleResults, RandomSweepReport, SpectrumReport,
    Verdict, WalkSummary,
};
use crate::spectral::{self, Spectrum};
use crate::walks::{self, EdgeIndex, WalkSet};

/// Slack on the odd-walk bound `lambda_min >= 2/eta - 1`.
pub const ODD_WALK_SLACK: f64 = 1e-8;
/// Largest allowed `|lambda_i(lazy) - (1 + lambda_i)/2|`.
pub const LAZY_MAP_TOL: f64 = 1e-8;
/// Largest allowed disagreement between power iteration and the dense solver.
pub const POWER_ITERATION_TOL: f64 = 1e-6;
/// Default cap on dense eigensolves; the matrix is `N^2` doubles.
pub const DEFAULT_MAX_DENSE_STATES: usize = 4_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub epsilons: Vec<f64>,
    pub exact_mixing: bool,
    pub lazy: bool,
    pub max_states: usize,
    pub max_dense_states: usize,
    pub mixing_max_states: usize,
    pub mixing_max_iterations: u64,
    pub power_iterations: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            epsilons: vec![0.25, 0.01],
            exact_mixing: false,
            lazy: false,
            max_states: chain::DEFAULT_MAX_STATES,
            max_dense_states: DEFAULT_MAX_DENSE_STATES,
            mixing_max_states: oracle::DEFAULT_MIXING_MAX_STATES,
            mixing_max_iterations: oracle::DEFAULT_MIXING_MAX_ITERATIONS,
            power_iterations: oracle::DEFAULT_POWER_ITERATIONS,
        }
    }
}

struct Stopwatch {
    timings: BTreeMap<String, f64>,
    last: Instant,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            timings: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings
            .insert(stage.to_string(), (now - self.last).as_secs_f64() * 1e3);
        self.last = now;
    }
}

fn spectrum_report(spectrum: &Spectrum) -> Result<SpectrumReport> {
    let s = spectral::summarize(spectrum)?;
    Ok(SpectrumReport {
        lambda_1: s.lambda_1,
        lambda_min: s.lambda_min,
        lambda_star: s.lambda_star,
        relaxation_time_star: s.relaxation_time_star,
        gap_upper_inverse: s.gap_upper_inverse,
        max_residual: spectrum.max_residual,
    })
}

/// Runs every generic check on `chain` with walk set `walks`.
pub fn analyze(chain: &Chain, walks: &WalkSet, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let mut clock = Stopwatch::new();
    let kernel = &chain.kernel;
    let pi = &chain.pi;
    let mut checks = BTreeMap::new();

    let rows_ok = kernel
        .rows()
        .iter()
        .all(|row| row.iter().map(|(_, p)| p).sum::<Rational>().is_one());
    checks.insert(
        "rows_stochastic".to_string(),
        Verdict::check(rows_ok, || "a kernel row does not sum to 1".into()),
    );
    let balance = chain::check_detailed_balance(kernel, pi);
    checks.insert(
        "detailed_balance".to_string(),
        Verdict::check(balance.ok, || format!("violated at {:?}", balance.worst_violation)),
    );
    let ergodic = chain::check_ergodicity(kernel);
    if !ergodic.irreducible {
        return Err(Error::NotIrreducible);
    }
    if !ergodic.aperiodic {
        return Err(Error::Precondition("chain is periodic; no closed odd walks exist".into()));
    }
    checks.insert("ergodic".to_string(), Verdict::Pass);
    clock.lap("structure");

    if kernel.len() > opts.max_dense_states {
        return Err(Error::CapExceeded {
            cap: opts.max_dense_states,
        });
    }
    let spectrum = spectral::eigenvalues(kernel, pi, opts.max_dense_states)?;
    let summary = spectral::summarize(&spectrum)?;
    let spectrum_summary = spectrum_report(&spectrum)?;
    clock.lap("spectrum");

    let congestion = walks::congestion(kernel, pi, walks)?;
    let index = EdgeIndex::build(walks);
    let max_multiplicity = index.max_multiplicity();
    if pi.is_uniform() && max_multiplicity <= 1 {
        let simple = walks::congestion_uniform(kernel, pi, walks)?;
        checks.insert(
            "congestion_formulas_agree".to_string(),
            Verdict::check(simple.eta == congestion.eta, || {
                format!(
                    "general {} vs uniform {}",
                    rational::format(&congestion.eta),
                    rational::format(&simple.eta)
                )
            }),
        );
    } else {
        checks.insert(
            "congestion_formulas_agree".to_string(),
            Verdict::skipped("stationary distribution is not uniform or a walk repeats an edge"),
        );
    }
    let walk_bound = walks::odd_walk_bound(&congestion.eta)?;
    checks.insert(
        "lemma1".to_string(),
        Verdict::check(summary.lambda_min >= walk_bound.lambda_min_lower - ODD_WALK_SLACK, || {
            format!(
                "lambda_min = {} below 2/eta - 1 = {}",
                summary.lambda_min, walk_bound.lambda_min_lower
            )
        }),
    );
    clock.lap("congestion");

    let mut mixing = Vec::new();
    for &epsilon in &opts.epsilons {
        match spectral::mixing_time_bound(&summary, pi, epsilon) {
            Ok(bound) => mixing.push(MixingBound { epsilon, bound }),
            Err(e) => {
                checks.insert("mixing_bound".to_string(), Verdict::skipped(e.to_string()));
            }
        }
    }

    let mut oracle_results = OracleResults::default();
    if opts.exact_mixing {
        let mut exceeded = Vec::new();
        let mut skipped = None;
        for b in &mixing {
            match oracle::tv_mixing_time(kernel, pi, b.epsilon, opts.mixing_max_states, opts.mixing_max_iterations) {
                Ok(steps) => {
                    if steps as f64 > b.bound {
                        exceeded.push(format!("eps {}: tau {} > bound {}", b.epsilon, steps, b.bound));
                    }
                    oracle_results.exact_mixing.push(ExactMixing {
                        epsilon: b.epsilon,
                        steps,
                    });
                }
                Err(e) => skipped = Some(e.to_string()),
            }
        }
        let verdict = match skipped {
            Some(reason) if exceeded.is_empty() => Verdict::skipped(reason),
            _ => Verdict::check(exceeded.is_empty(), || exceeded.join("; ")),
        };
        checks.insert("mixing_time_within_bound".to_string(), verdict);
        clock.lap("exact_mixing");
    }

    let mut lazy_summary = None;
    if opts.lazy {
        let lazy_kernel = spectral::lazy_transform(kernel);
        let lazy = spectral::eigenvalues(&lazy_kernel, pi, opts.max_dense_states)?;
        let worst = lazy
            .eigenvalues
            .iter()
            .zip(&spectrum.eigenvalues)
            .map(|(l, b)| (l - (1.0 + b) / 2.0).abs())
            .fold(0.0, f64::max);
        checks.insert(
            "lazy_spectral_map".to_string(),
            Verdict::check(worst <= LAZY_MAP_TOL, || format!("max deviation {worst:e}")),
        );
        let lazy_min = lazy.lambda_min();
        checks.insert(
            "lazy_nonnegative".to_string(),
            Verdict::check(lazy_min >= -spectral::LAMBDA_MIN_SLACK, || {
                format!("lazy lambda_min = {lazy_min}")
            }),
        );
        lazy_summary = Some(spectrum_report(&lazy)?);
        clock.lap("lazy");
    }

    match oracle::power_iteration_lambda1(kernel, pi, opts.power_iterations) {
        Ok(l1) => {
            oracle_results.power_iteration_lambda1 = Some(l1);
            checks.insert(
                "power_iteration_agrees".to_string(),
                Verdict::check((l1 - summary.lambda_1).abs() <= POWER_ITERATION_TOL, || {
                    format!("power iteration {l1} vs dense {}", summary.lambda_1)
                }),
            );
        }
        Err(e) => {
            checks.insert("power_iteration_agrees".to_string(), Verdict::skipped(e.to_string()));
        }
    }
    clock.lap("power_iteration");

    Ok(AnalysisReport {
        descriptor: chain.descriptor.clone(),
        spectrum: spectrum_summary,
        lazy_spectrum: lazy_summary,
        walks: WalkSummary {
            length_histogram: walks.length_histogram(),
            eta: rational::format(&congestion.eta),
            eta_value: rational::to_f64(&congestion.eta),
            argmax_edge: congestion.argmax,
            max_edge_multiplicity: max_multiplicity,
        },
        bounds: Bounds {
            eta_half: rational::format(&walk_bound.bound_on_inverse),
            lambda_min_lower: walk_bound.lambda_min_lower,
            mixing,
            literature: Vec::new(),
        },
        checks,
        oracle: oracle_results,
        facts: BTreeMap::new(),
        contingency: None,
        timings_ms: clock.timings,
    })
}

/// Wraps a bare kernel as a `custom` chain; states are encoded as big-endian
/// indices.
pub fn custom_chain(
    kernel: chain::TransitionKernel,
    pi: chain::StationaryDistribution,
    params: BTreeMap<String, String>,
) -> Result<Chain> {
    let n = kernel.len();
    let space = StateSpace::new((0..n as u32).map(|i| i.to_be_bytes().to_vec()).collect())?;
    Ok(Chain {
        space,
        kernel,
        pi,
        descriptor: ChainDescriptor {
            family: Family::Custom,
            params,
            states: n,
        },
    })
}

/// Per-trial chain size and seeds: trial `k` draws `states = 2 + below(max - 1)`,
/// then a chain seed, then a walk seed, all from one generator seeded with `seed`.
pub fn random_trial_plan(max_states: usize, trials: usize, seed: u64) -> Vec<(usize, u64, u64)> {
    let mut rng = Rng::new(seed);
    (0..trials)
        .map(|_| {
            let states = 2 + rng.below(max_states as u64 - 1) as usize;
            let chain_seed = rng.next_u64();
            let walk_seed = rng.next_u64();
            (states, chain_seed, walk_seed)
        })
        .collect()
}

/// Odd-walk bound on random reversible chains with random odd walk sets.
pub fn random_sweep(max_states: usize, trials: usize, seed: u64, opts: &AnalysisOptions) -> Result<RandomSweepReport> {
    if max_states < 2 {
        return Err(Error::Precondition("random chains need at least two states".into()));
    }
    let mut clock = Stopwatch::new();
    let mut reports = Vec::with_capacity(trials);
    for (trial, (states, chain_seed, walk_seed)) in random_trial_plan(max_states, trials, seed).into_iter().enumerate() {
        let (kernel, pi) = oracle::random_reversible_chain(&RandomChainSpec::new(states, chain_seed))?;
        let walks = oracle::random_odd_walkset(&kernel, walk_seed)?;
        let params = BTreeMap::from([
            ("trial".to_string(), trial.to_string()),
            ("states".to_string(), states.to_string()),
            ("chain_seed".to_string(), chain_seed.to_string()),
            ("walk_seed".to_string(), walk_seed.to_string()),
        ]);
        let chain = custom_chain(kernel, pi, params)?;
        reports.push(analyze(&chain, &walks, opts)?);
    }
    clock.lap("trials");
    let passed = reports
        .iter()
        .filter(|r| r.checks.get("lemma1").is_some_and(Verdict::is_pass))
        .count();
    let checks = BTreeMap::from([(
        "lemma1_all_trials".to_string(),
        Verdict::check(passed == trials, || format!("{passed}/{trials} trials satisfy the bound")),
    )]);
    Ok(RandomSweepReport {
        max_states,
        trials,
        seed,
        reports,
        checks,
        timings_ms: clock.timings,
    })
}
