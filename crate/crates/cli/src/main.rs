use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oddwalk::contingency::{self, Margins};
use oddwalk::matchings::{self, HostGraph};
use oddwalk::report::{AnalysisReport, Verdict};
use oddwalk::{analysis, switch, AnalysisOptions, Error};

mod table;

/// Smallest-eigenvalue bounds for reversible Markov chains via odd-walk congestion.
#[derive(Parser, Debug)]
#[command(name = "oddwalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Switch chain on labelled d-regular graphs with n vertices.
    Switch {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Jerrum-Sinclair chain on perfect and near-perfect matchings of a host graph.
    Matchings {
        /// Graph file: `n m` header, then `m` lines `u v` (1-based).
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Heat-bath chain on contingency tables with fixed margins.
    Contingency {
        /// Row sums, comma separated.
        #[arg(long)]
        rows: String,
        /// Column sums, comma separated.
        #[arg(long)]
        cols: String,
        #[command(flatten)]
        common: Common,
    },
    /// Odd-walk bound on seeded random reversible chains.
    Random {
        /// Largest chain size; each trial draws its size from 2..=states.
        #[arg(long)]
        states: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Total-variation targets for the mixing-time bound.
    #[arg(long, default_value = "0.25,0.01", value_parser = parse_eps)]
    eps: EpsList,
    /// Compute exact mixing times by iterating the kernel.
    #[arg(long)]
    exact_mixing: bool,
    /// Also analyse the lazy chain (I + P)/2.
    #[arg(long)]
    lazy: bool,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write one CSV row per instance here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Cap on enumerated states (and on the dense eigensolve when given).
    #[arg(long)]
    max_states: Option<usize>,
}

#[derive(Debug, Clone)]
struct EpsList(Vec<f64>);

fn parse_eps(text: &str) -> Result<EpsList, String> {
    let values = text
        .split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| format!("not a number: {t:?}"))?;
            if v > 0.0 && v < 1.0 {
                Ok(v)
            } else {
                Err(format!("epsilon must lie in (0, 1), got {v}"))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EpsList(values))
}

impl Common {
    fn options(&self) -> AnalysisOptions {
        let mut opts = AnalysisOptions {
            epsilons: self.eps.0.clone(),
            exact_mixing: self.exact_mixing,
            lazy: self.lazy,
            ..AnalysisOptions::default()
        };
        if let Some(cap) = self.max_states {
            opts.max_states = cap;
            opts.max_dense_states = cap;
        }
        opts
    }
}

enum Failure {
    Input(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Residual { .. } | Error::Numerical(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, text: serde_json::Result<String>) -> Result<(), Failure> {
    let mut text = text.map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn print_summary(report: &AnalysisReport) {
    let d = &report.descriptor;
    println!("{} [{}] N={}", d.family.name(), d.params_string(), d.states);
    println!(
        "  lambda_1={:.12} lambda_min={:.12} eta={} 2/eta-1={:.12}",
        report.spectrum.lambda_1, report.spectrum.lambda_min, report.walks.eta, report.bounds.lambda_min_lower
    );
    for (name, verdict) in &report.checks {
        match verdict {
            Verdict::Pass => println!("  {name}: pass"),
            Verdict::Fail { reason } => println!("  {name}: FAIL ({reason})"),
            Verdict::Skipped { reason } => println!("  {name}: skipped ({reason})"),
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let (reports, common, sweep) = match &cli.command {
        Command::Switch { n, d, common } => (vec![switch::switch_analysis(*n, *d, &common.options())?], common, None),
        Command::Matchings { graph, common } => {
            let text = fs::read_to_string(graph).map_err(|e| io_error(graph, e))?;
            let host = HostGraph::parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", graph.display())))?;
            (vec![matchings::matchings_analysis(&host, &common.options())?], common, None)
        }
        Command::Contingency { rows, cols, common } => {
            let margins = Margins::parse(rows, cols)?;
            (vec![contingency::contingency_analysis(&margins, &common.options())?], common, None)
        }
        Command::Random {
            states,
            trials,
            seed,
            common,
        } => {
            let sweep = analysis::random_sweep(*states, *trials, *seed, &common.options())?;
            (sweep.reports.clone(), common, Some(sweep))
        }
    };

    for r in &reports {
        print_summary(r);
    }
    let failed = match &sweep {
        Some(s) => {
            for (name, verdict) in &s.checks {
                println!("{name}: {}", if verdict.is_fail() { "FAIL" } else { "pass" });
            }
            s.failed()
        }
        None => reports.iter().any(AnalysisReport::failed),
    };

    if let Some(path) = &common.report {
        match &sweep {
            Some(s) => write_json(path, serde_json::to_string_pretty(s))?,
            None => write_json(path, serde_json::to_string_pretty(&reports[0]))?,
        }
    }
    if let Some(path) = &common.csv {
        table::write_csv(path, &common.eps.0, &reports).map_err(|e| io_error(path, e))?;
    }
    Ok(!failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
