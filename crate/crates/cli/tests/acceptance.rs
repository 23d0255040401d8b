//! Acceptance criteria, one PASS/FAIL line each.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_traits::One;
use oddwalk::chain::Chain;
use oddwalk::contingency::{self, Margins};
use oddwalk::matchings::{self, HostGraph};
use oddwalk::rational::{self, ratio, Rational};
use oddwalk::walks::{self, EdgeIndex, WalkSet};
use oddwalk::{analysis, oracle, spectral, switch, AnalysisOptions};
use serde_json::Value;

const CAP: usize = 10_000;
const SLACK: f64 = 1e-9;

type Outcome = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const SWITCH: [(usize, usize); 3] = [(4, 1), (5, 2), (6, 3)];
const MARGINS: [(&str, &str); 3] = [("2,2,2", "2,2,2"), ("2,1,1", "2,1,1"), ("3,2", "2,2,1")];

fn host_files(dir: &Path) -> Vec<(PathBuf, HostGraph)> {
    let specs = [
        ("p4.txt", "4 3\n1 2\n2 3\n3 4\n"),
        ("c6.txt", "6 6\n1 2\n2 3\n3 4\n4 5\n5 6\n6 1\n"),
        ("grid.txt", "# 3x2 grid\n6 7\n1 2\n3 4\n5 6\n1 3\n3 5\n2 4\n4 6\n"),
    ];
    specs
        .iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            std::fs::write(&path, text).unwrap();
            (path, HostGraph::parse(text).unwrap())
        })
        .collect()
}

fn margins(rows: &str, cols: &str) -> Margins {
    Margins::parse(rows, cols).unwrap()
}

/// Every instance of criteria 1-3 with its walk set.
fn example_instances(dir: &Path) -> Vec<(Chain, WalkSet)> {
    let mut out = Vec::new();
    for (n, d) in SWITCH {
        let chain = switch::build(n, d, CAP).unwrap();
        let w = walks::self_loop_walkset(&chain.kernel).unwrap();
        out.push((chain, w));
    }
    for (_, host) in host_files(dir) {
        let chain = matchings::build(&host, CAP).unwrap();
        let w = walks::self_loop_walkset(&chain.kernel).unwrap();
        out.push((chain, w));
    }
    for (r, c) in MARGINS {
        let chain = contingency::build(&margins(r, c), CAP).unwrap();
        let (w, _) = contingency::canonical_walkset(&chain).unwrap();
        out.push((chain, w));
    }
    out
}

fn lambda_min(chain: &Chain) -> f64 {
    spectral::eigenvalues(&chain.kernel, &chain.pi, CAP).unwrap().lambda_min()
}

fn criterion1() -> Outcome {
    for (n, d) in SWITCH {
        let chain = switch::build(n, d, CAP).map_err(|e| e.to_string())?;
        let direct = oracle::count_regular_graphs(n, d).map_err(|e| e.to_string())?;
        ensure(chain.kernel.len() as u64 == direct, || {
            format!("n={n} d={d}: enumerated {} vs direct {direct}", chain.kernel.len())
        })?;
        let min_hold = chain.kernel.min_self_loop();
        ensure(min_hold >= ratio(1, 3), || {
            format!("n={n} d={d}: min holding {}", rational::format(&min_hold))
        })?;
        let w = walks::self_loop_walkset(&chain.kernel).map_err(|e| e.to_string())?;
        let eta = walks::congestion(&chain.kernel, &chain.pi, &w).unwrap().eta;
        ensure(eta <= rational::int(3), || format!("n={n} d={d}: eta {}", rational::format(&eta)))?;
        let lm = lambda_min(&chain);
        ensure(lm >= -1.0 / 3.0 - SLACK, || format!("n={n} d={d}: lambda_min {lm}"))?;
    }
    Ok(())
}

fn criterion2(dir: &Path) -> Outcome {
    for (path, host) in host_files(dir) {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let chain = matchings::build(&host, CAP).map_err(|e| e.to_string())?;
        for (x, row) in chain.kernel.rows().iter().enumerate() {
            let sum: Rational = row.iter().map(|(_, p)| p).sum();
            ensure(sum.is_one(), || format!("{name}: row {x} sums to {}", rational::format(&sum)))?;
        }
        let e = host.edge_count();
        let min_hold = chain.kernel.min_self_loop();
        ensure(min_hold >= ratio(1, e as i64), || {
            format!("{name}: min holding {}", rational::format(&min_hold))
        })?;
        let lm = lambda_min(&chain);
        ensure(lm >= -1.0 + 2.0 / e as f64 - SLACK, || format!("{name}: lambda_min {lm}"))?;
    }
    Ok(())
}

fn criterion3() -> Outcome {
    for (r, c) in MARGINS {
        let m = margins(r, c);
        let tag = format!("rows {r} cols {c}");
        let chain = contingency::build(&m, CAP).map_err(|e| e.to_string())?;
        let (w, classes) = contingency::canonical_walkset(&chain).map_err(|e| e.to_string())?;
        for walk in w.walks() {
            ensure(walk.len() == 3 || walk.len() == 5, || format!("{tag}: walk length {}", walk.len()))?;
            let report = walks::validate_walk(&chain.kernel, walk);
            ensure(report.ok, || format!("{tag}: invalid walk {:?}", report.failures))?;
        }
        let index = EdgeIndex::build(&w);
        ensure(index.max_multiplicity() <= 1, || format!("{tag}: an edge repeats within a walk"))?;
        let bounds = contingency::class_count_bounds(m.m(), m.n());
        for (edge, _) in index.edges() {
            let counts = contingency::count_walks_through_edge(&index, &classes, *edge);
            ensure(counts.within(&bounds), || format!("{tag}: edge {edge:?} counts {counts:?} exceed {bounds:?}"))?;
        }
        let eta = walks::congestion(&chain.kernel, &chain.pi, &w).unwrap().eta;
        let proof = contingency::eta_proof_bound(m.m(), m.n());
        ensure(eta <= rational::int(proof as i64), || {
            format!("{tag}: eta {} above {proof}", rational::format(&eta))
        })?;
        let lm = lambda_min(&chain);
        let gap = contingency::inverse_gap_bound(m.m(), m.n()) as f64;
        ensure(1.0 / (1.0 + lm) <= gap + 1e-8, || format!("{tag}: 1/(1+lambda_min) above {gap}"))?;
        ensure(lm >= -SLACK, || format!("{tag}: negative eigenvalue {lm}"))?;
    }
    Ok(())
}

fn criterion4() -> Outcome {
    let sweep = analysis::random_sweep(30, 100, 0x0DD_3A1C, &AnalysisOptions::default()).map_err(|e| e.to_string())?;
    ensure(sweep.reports.len() == 100, || "wrong trial count".into())?;
    let passed = sweep
        .reports
        .iter()
        .filter(|r| r.descriptor.states <= 30 && r.checks["lemma1"].is_pass())
        .count();
    ensure(passed == 100, || format!("{passed}/100 chains satisfy the bound"))
}

fn criterion5(dir: &Path) -> Outcome {
    for (chain, _) in example_instances(dir) {
        let s = spectral::eigenvalues(&chain.kernel, &chain.pi, CAP).unwrap();
        let summary = spectral::summarize(&s).unwrap();
        for eps in [0.25, 0.01] {
            let bound = spectral::mixing_time_bound(&summary, &chain.pi, eps).map_err(|e| e.to_string())?;
            let tau = oracle::tv_mixing_time(&chain.kernel, &chain.pi, eps, CAP, 1_000_000).map_err(|e| e.to_string())?;
            ensure(tau as f64 <= bound, || {
                format!("{} [{}] eps {eps}: tau {tau} > {bound}", chain.descriptor.family.name(), chain.descriptor.params_string())
            })?;
        }
    }
    Ok(())
}

fn criterion6() -> Outcome {
    let opts = AnalysisOptions {
        lazy: true,
        ..AnalysisOptions::default()
    };
    let sweep = analysis::random_sweep(30, 20, 0x1A2F, &opts).map_err(|e| e.to_string())?;
    for r in &sweep.reports {
        for check in ["lazy_spectral_map", "lazy_nonnegative"] {
            ensure(r.checks[check].is_pass(), || format!("{check}: {:?}", r.checks[check]))?;
        }
    }
    ensure(sweep.reports.len() == 20, || "wrong trial count".into())
}

fn criterion7(dir: &Path) -> Outcome {
    for (chain, w) in example_instances(dir) {
        let general = walks::congestion(&chain.kernel, &chain.pi, &w).map_err(|e| e.to_string())?;
        let simple = walks::congestion_uniform(&chain.kernel, &chain.pi, &w).map_err(|e| e.to_string())?;
        ensure(general.eta == simple.eta, || {
            format!(
                "{} [{}]: {} vs {}",
                chain.descriptor.family.name(),
                chain.descriptor.params_string(),
                rational::format(&general.eta),
                rational::format(&simple.eta)
            )
        })?;
    }
    Ok(())
}

fn invocations(dir: &Path) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for (n, d) in SWITCH {
        out.push(vec!["switch".into(), "--n".into(), n.to_string(), "--d".into(), d.to_string()]);
    }
    for (path, _) in host_files(dir) {
        out.push(vec!["matchings".into(), "--graph".into(), path.display().to_string()]);
    }
    for (r, c) in MARGINS {
        out.push(vec!["contingency".into(), "--rows".into(), r.into(), "--cols".into(), c.into()]);
    }
    out
}

fn run_cli(args: &[String], report: &Path) -> Result<String, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_oddwalk"))
        .args(args)
        .args(["--exact-mixing", "--lazy", "--report"])
        .arg(report)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{args:?} exited with {:?}", status.status.code()));
    }
    std::fs::read_to_string(report).map_err(|e| e.to_string())
}

fn without_timings(text: &str) -> Result<String, String> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    v.as_object_mut().ok_or("report is not an object")?.remove("timings_ms");
    serde_json::to_string(&v).map_err(|e| e.to_string())
}

fn criterion8(dir: &Path) -> Outcome {
    for (k, args) in invocations(dir).iter().enumerate() {
        let a = run_cli(args, &dir.join(format!("a{k}.json")))?;
        let b = run_cli(args, &dir.join(format!("b{k}.json")))?;
        ensure(without_timings(&a)? == without_timings(&b)?, || format!("{args:?}: reports differ"))?;
    }
    Ok(())
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    type Criterion<'a> = (u32, &'a str, Duration, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (1, "switch chain", Duration::from_secs(120), Box::new(criterion1)),
        (2, "matchings chain", Duration::from_secs(60), Box::new(|| criterion2(d))),
        (3, "contingency chain", Duration::from_secs(300), Box::new(criterion3)),
        (4, "odd-walk bound on 100 random chains", Duration::from_secs(60), Box::new(criterion4)),
        (5, "exact mixing within spectral bound", Duration::from_secs(300), Box::new(|| criterion5(d))),
        (6, "lazy transform", Duration::MAX, Box::new(criterion6)),
        (7, "congestion formula equivalence", Duration::MAX, Box::new(|| criterion7(d))),
        (8, "deterministic reports", Duration::MAX, Box::new(|| criterion8(d))),
    ];
    let mut failures = Vec::new();
    for (num, name, limit, run) in &criteria {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if outcome.is_ok() && elapsed > *limit {
            outcome = Err(format!("took {elapsed:?}, limit {limit:?}"));
        }
        match &outcome {
            Ok(()) => println!("criterion {num} ({name}): PASS [{:.2}s]", elapsed.as_secs_f64()),
            Err(msg) => {
                println!("criterion {num} ({name}): FAIL [{:.2}s] {msg}", elapsed.as_secs_f64());
                failures.push(*num);
            }
        }
    }
    if failures.is_empty() {
        println!("all {} criteria pass", criteria.len());
    } else {
        println!("failed criteria: {failures:?}");
        std::process::exit(1);
    }
}

