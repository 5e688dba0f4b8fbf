use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use ellsberg_core::classification::{
    bayesian_set, case_dominator, prior_certificate, Classifier, RuleClass,
};
use ellsberg_core::engine::{simulate_spec, PopulationSpec};
use ellsberg_core::model::{enumerate_rules, Bet, DecisionRule, ExperimentConfig};
use ellsberg_core::preference::{maxmin_value, optimal_rules, MaxminEu, PreferenceModel};
use ellsberg_core::rational::format_rational;
use ellsberg_core::savage::{
    derive_preference_with, ellsberg_embedding_acts, follow_on_mixed, rule_to_savage_act, strict_derivation,
    two_step_construction, white_on_mixed, ExchangeScope, SavagePreference,
};
use ellsberg_core::stats::{aggregate, clopper_pearson, dominated_share, ChoiceDataset};
use serde::Serialize;

use crate::report::*;

/// What a subcommand produced: text for people, JSON for programs, and
/// whether the requested verification held.
pub struct Output {
    pub text: String,
    pub json: String,
    pub passed: bool,
}

impl Output {
    fn new<T: Serialize>(report: &T, text: String, passed: bool) -> Result<Output> {
        Ok(Output {
            text,
            json: serde_json::to_string_pretty(report)?,
            passed,
        })
    }
}

/// Bad input that should be reported like a malformed flag.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn check_lines(out: &mut String, checks: &[Check]) {
    for c in checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        if c.detail.is_empty() {
            let _ = writeln!(out, "{mark} {}", c.name);
        } else {
            let _ = writeln!(out, "{mark} {}: {}", c.name, c.detail);
        }
    }
}

fn rule_list<'a>(rules: impl IntoIterator<Item = &'a DecisionRule>) -> String {
    let names: Vec<String> = rules.into_iter().map(ToString::to_string).collect();
    format!("{{{}}}", names.join(", "))
}

fn two_or_more_white() -> BTreeSet<DecisionRule> {
    enumerate_rules().into_iter().filter(|r| r.white_count() >= 2).collect()
}

const EXPECTED_BAYESIAN: [&str; 6] = ["GGGG", "GGGY", "GGYY", "GYGY", "GYYY", "YYYY"];

pub fn classify(rule: Option<DecisionRule>) -> Result<Output> {
    let cfg = ExperimentConfig::default();
    let classifier = Classifier::new(&cfg);
    let Some(rule) = rule else {
        return classify_all(&classifier, &cfg);
    };
    let entry = classifier.classify_entry(&rule);
    let text = format!("{entry}\n");
    let report = ClassifyReport {
        rules: vec![entry],
        counts: None,
        checks: Vec::new(),
    };
    Output::new(&report, text, true)
}

fn classify_all(classifier: &Classifier, cfg: &ExperimentConfig) -> Result<Output> {
    let rules = classifier.report();
    let mut counts = ClassCounts::default();
    for r in &rules {
        match r.class {
            RuleClass::Dominated => counts.dominated += 1,
            RuleClass::Bayesian => counts.bayesian += 1,
            RuleClass::UndominatedNonBayesian => counts.undominated_non_bayesian += 1,
        }
    }

    let expected: BTreeSet<DecisionRule> = EXPECTED_BAYESIAN.iter().map(|c| c.parse().expect("literal rule")).collect();
    let bayesian = bayesian_set();
    let certificates: Vec<_> = bayesian.iter().map(|r| (r, prior_certificate(r, cfg))).collect();
    let uncertified: Vec<String> = certificates
        .iter()
        .filter(|(_, c)| c.is_none())
        .map(|(r, _)| r.to_string())
        .collect();
    // GY and YG lead to the same posterior, so rules betting differently on
    // them can only tie for the optimum.
    let tied: Vec<String> = certificates
        .iter()
        .filter(|(_, c)| c.as_ref().is_some_and(|c| !c.unique))
        .map(|(r, _)| r.to_string())
        .collect();
    let dominated = classifier.dominated_set();
    let checks = vec![
        Check::new("Bayesian set", bayesian == expected, rule_list(&bayesian)),
        Check::new(
            "every Bayesian rule is optimal under some prior",
            uncertified.is_empty(),
            if uncertified.is_empty() {
                format!("tied optimum only: {}", tied.join(", "))
            } else {
                uncertified.join(", ")
            },
        ),
        Check::new(
            "dominated set is exactly the rules with two or more W",
            dominated == two_or_more_white(),
            format!("{} dominated", dominated.len()),
        ),
    ];

    let mut text = String::new();
    for r in &rules {
        let _ = writeln!(text, "{r}");
    }
    let _ = writeln!(
        text,
        "D {}  S {}  N\\S {}",
        counts.dominated, counts.bayesian, counts.undominated_non_bayesian
    );
    check_lines(&mut text, &checks);
    let passed = all_passed(&checks);
    let report = ClassifyReport {
        rules,
        counts: Some(counts),
        checks,
    };
    Output::new(&report, text, passed)
}

pub fn dominance_audit() -> Result<Output> {
    let cfg = ExperimentConfig::default();
    let classifier = Classifier::new(&cfg);
    let rules = enumerate_rules();
    let dominance_pairs = rules
        .iter()
        .flat_map(|a| rules.iter().map(move |b| (a, b)))
        .filter(|(a, b)| classifier.dominates(a, b))
        .count();

    let mut certificates = Vec::new();
    let mut missing = Vec::new();
    let mut off_construction = Vec::new();
    for rule in classifier.dominated_set() {
        match classifier.certificate(&rule) {
            Some(cert) => {
                let expected = case_dominator(&rule).map(|(r, _)| r);
                if rule.white_count() >= 2 && (Some(cert.dominating_rule) != expected || cert.construction.case_number().is_none()) {
                    off_construction.push(rule.to_string());
                }
                certificates.push(cert);
            }
            None => missing.push(rule.to_string()),
        }
    }
    let rechecked = certificates
        .iter()
        .all(|c| classifier.dominates(&c.dominating_rule, &c.dominated_rule));
    let checks = vec![
        Check::new("every dominated rule has a certificate", missing.is_empty(), missing.join(", ")),
        Check::new(
            "rules with two or more W use the four-case construction",
            off_construction.is_empty(),
            off_construction.join(", "),
        ),
        Check::new("certificates recheck exactly", rechecked, ""),
        Check::new(
            "dominated set is exactly the rules with two or more W",
            classifier.dominated_set() == two_or_more_white(),
            "",
        ),
    ];

    let mut text = String::new();
    for c in &certificates {
        let case = c
            .construction
            .case_number()
            .map_or("scan".to_string(), |n| format!("case {n}"));
        let _ = writeln!(
            text,
            "{} dominated-by {}  {case}  delta {}  sign {}",
            c.dominated_rule,
            c.dominating_rule,
            c.difference_polynomial,
            c.root_analysis.pattern()
        );
    }
    let _ = writeln!(text, "{dominance_pairs} dominance pairs among {} rules", rules.len());
    check_lines(&mut text, &checks);
    let passed = all_passed(&checks);
    let report = AuditReport {
        dominance_pairs,
        certificates,
        checks,
    };
    Output::new(&report, text, passed)
}

pub fn maxmin(interval: MaxminEu) -> Result<Output> {
    let cfg = ExperimentConfig::default();
    let rows: Vec<MaxminRow> = enumerate_rules()
        .iter()
        .map(|rule| {
            let v = maxmin_value(&interval, rule, &cfg);
            MaxminRow {
                rule: *rule,
                value: v.value.to_string(),
                value_approx: v.value.to_f64(),
                argmin: v.argmin.to_string(),
            }
        })
        .collect();
    let optimum: Vec<DecisionRule> = optimal_rules(&PreferenceModel::Maxmin(interval.clone()), &cfg)
        .into_iter()
        .collect();
    let best = &rows[optimum[0].index()];

    let mut text = String::new();
    for row in &rows {
        let _ = writeln!(
            text,
            "{}  {:.6}  {}  argmin {}",
            row.rule, row.value_approx, row.value, row.argmin
        );
    }
    let _ = writeln!(
        text,
        "optimum {} value {}",
        rule_list(&optimum),
        best.value_approx
    );
    let report = MaxminReport {
        lo: format_rational(&interval.lo),
        hi: format_rational(&interval.hi),
        value: best.value.clone(),
        value_approx: best.value_approx,
        rows,
        optimum,
    };
    Output::new(&report, text, true)
}

pub fn ci(k: u64, n: u64, confidence: f64) -> Result<Output> {
    let interval = clopper_pearson(k, n, confidence).map_err(|e| UsageError(e.to_string()))?;
    let display = interval.display();
    let report = IntervalReport {
        k,
        n,
        confidence,
        lo: interval.lo,
        hi: interval.hi,
        display: display.clone(),
    };
    Output::new(&report, format!("{display}\n"), true)
}

fn load_dataset(path: Option<&Path>) -> Result<ChoiceDataset> {
    match path {
        Some(p) => ChoiceDataset::from_csv_path(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(ChoiceDataset::bundled()),
    }
}

pub fn table(data: Option<&Path>) -> Result<Output> {
    let ds = load_dataset(data)?;
    let classifier = Classifier::new(&ExperimentConfig::default());
    let table = aggregate(&ds, &classifier)?;
    Output::new(&table, format!("{table}\n"), true)
}

pub fn result1(data: Option<&Path>, confidence: f64) -> Result<Output> {
    let ds = load_dataset(data)?;
    let classifier = Classifier::new(&ExperimentConfig::default());
    let report = dominated_share(&ds, &classifier, confidence).map_err(|e| UsageError(e.to_string()))?;
    Output::new(&report, format!("{report}\n"), true)
}

fn verdict_label(v: SavagePreference) -> &'static str {
    match v {
        SavagePreference::StrictlyBetter => "strictly better",
        SavagePreference::StrictlyWorse => "strictly worse",
        SavagePreference::Indifferent => "indifferent",
        SavagePreference::Incomparable => "incomparable",
    }
}

pub fn savage_verify(scope: ExchangeScope, budget: usize) -> Result<Output> {
    let mut improvements = Vec::new();
    for a in Bet::ALL {
        for d in Bet::ALL {
            let from = white_on_mixed(a, d);
            let to = follow_on_mixed(a, d);
            let (f, g) = (rule_to_savage_act(&from), rule_to_savage_act(&to));
            let verdict = derive_preference_with(&f, &g, scope, budget)?;
            let path = match verdict {
                SavagePreference::StrictlyBetter => strict_derivation(&f, &g, scope, budget)?
                    .unwrap_or_default()
                    .iter()
                    .map(ToString::to_string)
                    .collect(),
                _ => Vec::new(),
            };
            improvements.push(PairVerdict {
                from,
                to,
                verdict,
                path,
                construction: two_step_construction(a, d, scope).map(|p| p.to_string()),
            });
        }
    }

    let acts = ellsberg_embedding_acts();
    let mut embedding = Vec::new();
    for i in 0..acts.len() {
        for j in i + 1..acts.len() {
            embedding.push(EmbeddingVerdict {
                first: acts[i].0.to_string(),
                second: acts[j].0.to_string(),
                verdict: derive_preference_with(&acts[i].1, &acts[j].1, scope, budget)?,
            });
        }
    }

    let failing: Vec<String> = improvements
        .iter()
        .filter(|p| p.verdict != SavagePreference::StrictlyBetter)
        .map(|p| p.from.to_string())
        .collect();
    let no_construction: Vec<String> = improvements
        .iter()
        .filter(|p| p.construction.is_none())
        .map(|p| p.from.to_string())
        .collect();
    let comparable: Vec<String> = embedding
        .iter()
        .filter(|e| e.verdict != SavagePreference::Incomparable)
        .map(|e| format!("{}/{}", e.first, e.second))
        .collect();
    let checks = vec![
        Check::new("aGYd strictly better than aWWd for all 9 pairs", failing.is_empty(), failing.join(", ")),
        Check::new(
            "one improvement then one relabelling reaches aGYd",
            no_construction.is_empty(),
            no_construction.join(", "),
        ),
        Check::new("embedded Ellsberg acts are pairwise incomparable", comparable.is_empty(), comparable.join(", ")),
    ];

    let scope_name = match scope {
        ExchangeScope::Joint => "joint",
        ExchangeScope::PerRiskyColor => "per-risky-color",
    };
    let mut text = format!("relabelling scope: {scope_name}\n");
    for p in &improvements {
        let _ = write!(text, "{} -> {}  {}", p.from, p.to, verdict_label(p.verdict));
        if !p.path.is_empty() {
            let _ = write!(text, "  [{}]", p.path.join(", "));
        }
        if let Some(c) = &p.construction {
            let _ = write!(text, "  construction {c}");
        }
        text.push('\n');
    }
    for e in &embedding {
        let _ = writeln!(text, "{} vs {}  {}", e.first, e.second, verdict_label(e.verdict));
    }
    check_lines(&mut text, &checks);
    let passed = all_passed(&checks);
    let report = SavageReport {
        scope,
        improvements,
        embedding,
        checks,
    };
    Output::new(&report, text, passed)
}

pub fn simulate(spec_path: &Path, seed: u64, out: Option<&Path>) -> Result<Output> {
    let raw = std::fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let spec: PopulationSpec =
        serde_json::from_str(&raw).map_err(|e| UsageError(format!("{}: {e}", spec_path.display())))?;
    let result = simulate_spec(&spec, Some(seed))?;
    if let Some(path) = out {
        std::fs::write(path, result.dataset.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
    }
    let classifier = Classifier::new(&spec.config);
    let table = aggregate(&result.dataset, &classifier)?;

    let s = &result.summary;
    let mut text = format!(
        "subjects {}  wins {}  win rate {:.4}  paid {:.2}\n",
        s.subjects,
        s.wins,
        s.win_rate,
        s.total_payment_cents as f64 / 100.0
    );
    for r in &s.per_rule {
        let _ = writeln!(
            text,
            "{}  subjects {}  win rate {:.4}  expected {:.4}",
            r.rule, r.subjects, r.win_rate, r.expected_win_rate
        );
    }
    let _ = writeln!(text, "\n{table}");
    Output::new(&result, text, true)
}
