//! Frequency tables of observed decision rules and the dominated-share
//! inference built on them.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::binomial::{clopper_pearson, ConfidenceInterval};
use super::dataset::ChoiceDataset;
use crate::classification::{Classifier, RuleClass};
use crate::error::{CoreError, Result};
use crate::model::{Bet, DecisionRule, DrawOutcome};

/// `count / total` as a percentage rounded half-up to one decimal, with a
/// trailing `.0` dropped: `48.1%`, `63%`.
pub fn format_share(count: usize, total: usize) -> String {
    assert!(total > 0, "share of an empty total");
    let tenths = (count as u128 * 1000 + total as u128 / 2) / total as u128;
    let (whole, frac) = (tenths / 10, tenths % 10);
    if frac == 0 {
        format!("{whole}%")
    } else {
        format!("{whole}.{frac}%")
    }
}

/// `13(48.1%)`, or a bare `0` for an empty cell.
pub fn format_observation(count: usize, total: usize) -> String {
    if count == 0 {
        "0".to_string()
    } else {
        format!("{count}({})", format_share(count, total))
    }
}

/// White after both mixed draws: `(a W W d)`.
pub fn is_white_on_mixed(rule: &DecisionRule) -> bool {
    rule.bet(DrawOutcome::GY) == Bet::White && rule.bet(DrawOutcome::YG) == Bet::White
}

/// Green and Yellow after the mixed draws, in either order: `(a G Y d)` or
/// `(a Y G d)`.
pub fn is_color_on_mixed(rule: &DecisionRule) -> bool {
    matches!(
        (rule.bet(DrawOutcome::GY), rule.bet(DrawOutcome::YG)),
        (Bet::Green, Bet::Yellow) | (Bet::Yellow, Bet::Green)
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFrequency {
    pub rule: DecisionRule,
    pub category: RuleClass,
    pub count: usize,
    pub share: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub count: usize,
    pub share: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub total: usize,
    /// Distinct rules by descending count; ties keep first-seen order.
    pub rows: Vec<RuleFrequency>,
    /// D, aWWd, S, aGYd(aYGd), N\S.
    pub summary: Vec<SummaryRow>,
}

impl FrequencyTable {
    pub fn count_of(&self, rule: &DecisionRule) -> usize {
        self.rows.iter().find(|r| r.rule == *rule).map_or(0, |r| r.count)
    }

    pub fn summary_count(&self, label: &str) -> Option<usize> {
        self.summary.iter().find(|s| s.label == label).map(|s| s.count)
    }
}

impl fmt::Display for FrequencyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = ["Decision Rule", "Category", "Observation (percentage)"];
        let mut lines: Vec<[String; 3]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.rule.code(),
                    r.category.label().to_string(),
                    format_observation(r.count, self.total),
                ]
            })
            .collect();
        let split = lines.len();
        lines.extend(self.summary.iter().enumerate().map(|(i, s)| {
            [
                if i == 0 { "Summary".into() } else { String::new() },
                s.label.clone(),
                format_observation(s.count, self.total),
            ]
        }));
        let width = |col: usize| {
            lines
                .iter()
                .map(|l| l[col].len())
                .chain([header[col].len()])
                .max()
                .unwrap_or(0)
        };
        let (w0, w1) = (width(0), width(1));
        writeln!(f, "{:<w0$}  {:<w1$}  {}", header[0], header[1], header[2])?;
        for (i, l) in lines.iter().enumerate() {
            if i == 0 || i == split {
                writeln!(f, "{}", "-".repeat(w0 + w1 + 4 + width(2)))?;
            }
            writeln!(f, "{:<w0$}  {:<w1$}  {}", l[0], l[1], l[2])?;
        }
        Ok(())
    }
}

/// Counts per distinct rule plus category and pattern totals.
pub fn aggregate(dataset: &ChoiceDataset, classifier: &Classifier) -> Result<FrequencyTable> {
    if dataset.is_empty() {
        return Err(CoreError::Dataset("cannot aggregate an empty dataset".into()));
    }
    let total = dataset.len();
    let mut order: Vec<DecisionRule> = Vec::new();
    let mut counts: HashMap<DecisionRule, usize> = HashMap::new();
    for rule in dataset.rules() {
        let c = counts.entry(rule).or_insert(0);
        if *c == 0 {
            order.push(rule);
        }
        *c += 1;
    }
    // stable: ties stay in first-seen order
    order.sort_by(|a, b| counts[b].cmp(&counts[a]));
    let rows: Vec<RuleFrequency> = order
        .iter()
        .map(|r| RuleFrequency {
            rule: *r,
            category: classifier.classify(r),
            count: counts[r],
            share: format_share(counts[r], total),
        })
        .collect();
    let count_where = |pred: &dyn Fn(&RuleFrequency) -> bool| rows.iter().filter(|r| pred(r)).map(|r| r.count).sum();
    let summary = [
        ("D", count_where(&|r| r.category == RuleClass::Dominated)),
        ("aWWd", count_where(&|r| is_white_on_mixed(&r.rule))),
        ("S", count_where(&|r| r.category == RuleClass::Bayesian)),
        ("aGYd(aYGd)", count_where(&|r| is_color_on_mixed(&r.rule))),
        ("N\\S", count_where(&|r| r.category == RuleClass::UndominatedNonBayesian)),
    ]
    .into_iter()
    .map(|(label, count)| SummaryRow {
        label: label.to_string(),
        count,
        share: format_share(count, total),
    })
    .collect();
    Ok(FrequencyTable { total, rows, summary })
}

/// Share of dominated choices with its exact interval and a test against a
/// population share of zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominatedShareReport {
    pub dominated: usize,
    pub total: usize,
    pub proportion: f64,
    pub share: String,
    pub interval: ConfidenceInterval,
    /// Exact `P(X >= dominated)` under a zero share: 0 whenever any dominated
    /// choice was observed, 1 otherwise.
    pub p_value: f64,
    pub p_value_note: String,
}

impl fmt::Display for DominatedShareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "dominated choices: {}/{} = {}",
            self.dominated, self.total, self.share
        )?;
        writeln!(
            f,
            "{}% Clopper-Pearson interval: {}",
            (self.interval.confidence * 100.0).round(),
            self.interval.display()
        )?;
        write!(f, "p-value against a zero share: {} ({})", self.p_value, self.p_value_note)
    }
}

pub fn dominated_share(dataset: &ChoiceDataset, classifier: &Classifier, confidence: f64) -> Result<DominatedShareReport> {
    if dataset.is_empty() {
        return Err(CoreError::Dataset("no choices to test".into()));
    }
    let total = dataset.len();
    let dominated = dataset.rules().filter(|r| classifier.is_dominated(r)).count();
    let interval = clopper_pearson(dominated as u64, total as u64, confidence)?;
    let (p_value, note) = if dominated > 0 {
        (0.0, "degenerate: any dominated choice is impossible under a zero share")
    } else {
        (1.0, "no dominated choices observed")
    };
    Ok(DominatedShareReport {
        dominated,
        total,
        proportion: dominated as f64 / total as f64,
        share: format_share(dominated, total),
        interval,
        p_value,
        p_value_note: note.to_string(),
    })
}
