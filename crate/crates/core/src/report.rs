//! Machine-readable analysis reports.
//!
//! Exact rationals are written as `"p/q"` strings. Reals are plain JSON
//! numbers except non-finite values, which are written as the strings
//! `"inf"`, `"-inf"` and `"nan"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::ChainDescriptor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail { reason: String },
    Skipped { reason: String },
}

impl Verdict {
    pub fn check(ok: bool, reason: impl FnOnce() -> String) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail { reason: reason() }
        }
    }

    pub fn skipped(reason: impl Into<String>) -> Self {
        Verdict::Skipped { reason: reason.into() }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub lambda_1: f64,
    pub lambda_min: f64,
    pub lambda_star: f64,
    pub relaxation_time_star: f64,
    #[serde(with = "extended_f64")]
    pub gap_upper_inverse: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub length_histogram: BTreeMap<usize, usize>,
    /// Exact congestion, `p/q`.
    pub eta: String,
    pub eta_value: f64,
    pub argmax_edge: (usize, usize),
    pub max_edge_multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingBound {
    pub epsilon: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// `eta / 2`, exact.
    pub eta_half: String,
    /// `2 / eta - 1`.
    pub lambda_min_lower: f64,
    pub mixing: Vec<MixingBound>,
    /// Published second-eigenvalue bounds, for context only.
    pub literature: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMixing {
    pub epsilon: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OracleResults {
    pub direct_count: Option<u64>,
    pub power_iteration_lambda1: Option<f64>,
    pub exact_mixing: Vec<ExactMixing>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub row_good: u64,
    pub column_good: u64,
    pub bad: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.row_good + self.column_good + self.bad
    }

    pub fn within(&self, bounds: &ClassCounts) -> bool {
        self.row_good <= bounds.row_good && self.column_good <= bounds.column_good && self.bad <= bounds.bad
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyDetails {
    pub m: usize,
    pub n: usize,
    /// Number of states in each class.
    pub class_totals: ClassCounts,
    /// Per-class maxima over edges of the number of walks through the edge.
    pub max_edge_counts: ClassCounts,
    pub count_bounds: ClassCounts,
    /// `90 m^3 n^3`. Compared, not enforced: the heat-bath fill count makes
    /// `P(e)^-1` larger than `C(m,2) C(n,2)`.
    pub eta_proof_bound: u64,
    pub eta_within_proof_bound: bool,
    /// `45 m^3 n^3`.
    pub inverse_gap_bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub descriptor: ChainDescriptor,
    pub spectrum: SpectrumReport,
    pub lazy_spectrum: Option<SpectrumReport>,
    pub walks: WalkSummary,
    pub bounds: Bounds,
    pub checks: BTreeMap<String, Verdict>,
    pub oracle: OracleResults,
    /// Family-specific scalar facts (holding probabilities, pair counts, ...).
    pub facts: BTreeMap<String, String>,
    pub contingency: Option<ContingencyDetails>,
    /// Wall-clock milliseconds per stage; excluded from determinism checks.
    pub timings_ms: BTreeMap<String, f64>,
}

impl AnalysisReport {
    pub fn failed(&self) -> bool {
        self.checks.values().any(Verdict::is_fail)
    }
}

/// Odd-walk bound sweep over random reversible chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSweepReport {
    pub max_states: usize,
    pub trials: usize,
    pub seed: u64,
    pub reports: Vec<AnalysisReport>,
    pub checks: BTreeMap<String, Verdict>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RandomSweepReport {
    pub fn failed(&self) -> bool {
        self.checks.values().any(Verdict::is_fail) || self.reports.iter().any(AnalysisReport::failed)
    }
}

/// Serde adapter writing non-finite reals as strings.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            Repr::Number(*value).serialize(s)
        } else if value.is_nan() {
            Repr::Text("nan".into()).serialize(s)
        } else if *value > 0.0 {
            Repr::Text("inf".into()).serialize(s)
        } else {
            Repr::Text("-inf".into()).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a real: {other:?}"))),
            },
        }
    }
}
