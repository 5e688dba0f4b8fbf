//! Monte Carlo populations of simulated subjects.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::session::{resolve_bet, BettingDraws, UrnSampler};
use crate::error::{CoreError, Result};
use crate::model::{enumerate_rules, evaluate_act, induced_act, Bet, DecisionRule, DrawOutcome, ExperimentConfig, State};
use crate::preference::{first_optimal_rule, MaxminEu, PreferenceModel};
use crate::prior::Prior;
use crate::rational::to_f64;
use crate::stats::ChoiceDataset;

/// How a simulated subject picks a rule. Optimizing agents break ties by
/// taking the first optimal rule in enumeration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentPolicy {
    Seu { prior: Prior },
    Maxmin { interval: MaxminEu },
    /// Always `(a W W d)`.
    EllsbergType { a: Bet, d: Bet },
    /// Always the given rule.
    Fixed { rule: DecisionRule },
    /// A rule drawn uniformly from all 81, from a stream seeded by `seed`.
    UniformRandom { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyGroup {
    pub policy: AgentPolicy,
    pub count: usize,
}

/// Everything needed to run [`simulate_population`], as read from a spec
/// file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub groups: Vec<PolicyGroup>,
    pub true_omega: State,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub rule: DecisionRule,
    pub subjects: usize,
    pub wins: usize,
    pub win_rate: f64,
    /// Exact winning probability at the true state.
    pub expected_win_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub subjects: usize,
    pub wins: usize,
    pub win_rate: f64,
    pub total_payment_cents: u64,
    pub per_rule: Vec<RuleOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub dataset: ChoiceDataset,
    pub summary: OutcomeSummary,
}

fn policy_rules(policy: &AgentPolicy, count: usize, cfg: &ExperimentConfig) -> Vec<DecisionRule> {
    match policy {
        AgentPolicy::Seu { prior } => {
            let rule = first_optimal_rule(&PreferenceModel::Seu { prior: prior.clone() }, cfg);
            vec![rule; count]
        }
        AgentPolicy::Maxmin { interval } => {
            let rule = first_optimal_rule(&PreferenceModel::Maxmin(interval.clone()), cfg);
            vec![rule; count]
        }
        AgentPolicy::EllsbergType { a, d } => vec![DecisionRule::new(*a, Bet::White, Bet::White, *d); count],
        AgentPolicy::Fixed { rule } => vec![*rule; count],
        AgentPolicy::UniformRandom { seed } => {
            let all = enumerate_rules();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..count).map(|_| all[rng.random_range(0..all.len())]).collect()
        }
    }
}

/// Assigns rules by policy, then plays each subject's own informational and
/// betting draws at `true_omega`. Draws come from one ChaCha8 stream seeded
/// with `seed`, four draws per subject in group order.
pub fn simulate_population(
    groups: &[PolicyGroup],
    true_omega: &State,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<SimulationResult> {
    cfg.validate()?;
    let rules: Vec<DecisionRule> = groups
        .iter()
        .flat_map(|g| policy_rules(&g.policy, g.count, cfg))
        .collect();
    let mut urns = UrnSampler::new(true_omega, cfg, seed);
    let mut tally: BTreeMap<DecisionRule, (usize, usize)> = BTreeMap::new();
    let mut wins = 0;
    let mut total_payment_cents = 0;
    for rule in &rules {
        let first = urns.ambiguous();
        let second = urns.ambiguous();
        let info = DrawOutcome::from_draws(first, second);
        let betting = BettingDraws {
            ambiguous: urns.ambiguous(),
            risky: urns.risky(),
        };
        let outcome = resolve_bet(rule, info, betting, cfg);
        let entry = tally.entry(*rule).or_insert((0, 0));
        entry.0 += 1;
        if outcome.won {
            entry.1 += 1;
            wins += 1;
        }
        total_payment_cents += outcome.payment.cents();
    }
    let per_rule = tally
        .into_iter()
        .map(|(rule, (n, w))| RuleOutcome {
            rule,
            subjects: n,
            wins: w,
            win_rate: w as f64 / n as f64,
            expected_win_rate: to_f64(&evaluate_act(&induced_act(&rule, cfg), true_omega)),
        })
        .collect();
    let subjects = rules.len();
    Ok(SimulationResult {
        dataset: ChoiceDataset::from_rules(rules),
        summary: OutcomeSummary {
            subjects,
            wins,
            win_rate: if subjects == 0 { 0.0 } else { wins as f64 / subjects as f64 },
            total_payment_cents,
            per_rule,
        },
    })
}

/// Runs a spec; `seed` overrides the one in the file, and one of the two must
/// be present.
pub fn simulate_spec(spec: &PopulationSpec, seed: Option<u64>) -> Result<SimulationResult> {
    let seed = seed
        .or(spec.seed)
        .ok_or_else(|| CoreError::InvalidConfig("simulation needs an explicit seed".into()))?;
    simulate_population(&spec.groups, &spec.true_omega, seed, &spec.config)
}
