//! JSON shapes printed by `--json`. Every report deserializes back into the
//! same type.

use ellsberg_core::classification::{ClassifiedRule, DominanceCertificate};
use ellsberg_core::model::DecisionRule;
use ellsberg_core::savage::{ExchangeScope, SavagePreference};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub dominated: usize,
    pub bayesian: usize,
    pub undominated_non_bayesian: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub rules: Vec<ClassifiedRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<ClassCounts>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Ordered pairs `(i, j)` with rule `i` dominating rule `j`.
    pub dominance_pairs: usize,
    pub certificates: Vec<DominanceCertificate>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxminRow {
    pub rule: DecisionRule,
    /// Exact worst-case winning probability, `a + b*sqrt(d)` in text form.
    pub value: String,
    pub value_approx: f64,
    pub argmin: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxminReport {
    pub lo: String,
    pub hi: String,
    pub rows: Vec<MaxminRow>,
    pub optimum: Vec<DecisionRule>,
    pub value: String,
    pub value_approx: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub k: u64,
    pub n: u64,
    pub confidence: f64,
    pub lo: f64,
    pub hi: f64,
    pub display: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub from: DecisionRule,
    pub to: DecisionRule,
    pub verdict: SavagePreference,
    /// Steps of the shortest derivation, when one exists.
    #[serde(default)]
    pub path: Vec<String>,
    /// Relabelling used by the one-improvement, one-relabelling construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingVerdict {
    pub first: String,
    pub second: String,
    pub verdict: SavagePreference,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SavageReport {
    pub scope: ExchangeScope,
    pub improvements: Vec<PairVerdict>,
    pub embedding: Vec<EmbeddingVerdict>,
    pub checks: Vec<Check>,
}
