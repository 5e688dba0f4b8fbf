//! What each participant is allowed to see of a session.

use ellsberg_core::engine::{advance, BettingDraws, DrawMode, Phase, Role, SessionEvent, SessionRecord};
use ellsberg_core::model::{Bet, DecisionRule, DrawOutcome, ExperimentConfig, Money};
use ellsberg_core::stats::HypotheticalAnswer;
use serde::{Deserialize, Serialize};

/// Who is asking for a snapshot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Viewer {
    /// No token: phase, roster status and draws only.
    Public,
    Participant(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Manual,
    Seeded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RosterEntry {
    pub participant_id: String,
    pub role: Role,
    pub submitted: bool,
    pub answered: bool,
    /// Only filled in once the session is closed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<DecisionRule>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OwnView {
    pub participant_id: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<DecisionRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub executed_bet: Option<Bet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub executed_bet_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub won: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payment: Option<Money>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothetical_answer: Option<HypotheticalAnswer>,
}

/// Phase controls, present only in the monitor's view.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Controls {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_phase: Option<Phase>,
    pub can_advance: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocked_reason: Option<String>,
    pub awaiting_info_draws: bool,
    pub awaiting_betting_draws: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub session_id: String,
    pub version: u64,
    pub phase: Phase,
    pub mode: ModeKind,
    pub config: ExperimentConfig,
    pub roster: Vec<RosterEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info_draws: Option<DrawOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betting_draws: Option<BettingDraws>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub you: Option<OwnView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<Controls>,
}

pub fn snapshot(record: &SessionRecord, viewer: &Viewer) -> Snapshot {
    let closed = record.phase == Phase::Closed;
    let roster = record
        .participants
        .iter()
        .map(|p| RosterEntry {
            participant_id: p.id.clone(),
            role: p.role,
            submitted: p.rule.is_some(),
            answered: p.hypothetical_answer.is_some(),
            rule: if closed { p.rule } else { None },
        })
        .collect();

    let me = match viewer {
        Viewer::Public => None,
        Viewer::Participant(id) => record.participant(id),
    };
    let you = me.map(|p| {
        let executed = p.rule.zip(record.info_draws).map(|(rule, info)| rule.bet(info));
        let outcome = record.outcome_for(&p.id);
        OwnView {
            participant_id: p.id.clone(),
            role: p.role,
            rule: p.rule,
            executed_bet: executed,
            executed_bet_label: executed.map(|b| b.name().to_string()),
            won: outcome.map(|o| o.won),
            payment: outcome.map(|o| o.payment),
            hypothetical_answer: p.hypothetical_answer,
        }
    });
    let controls = me.filter(|p| p.role == Role::Monitor).map(|p| controls(record, &p.id));

    Snapshot {
        session_id: record.session_id.clone(),
        version: record.version(),
        phase: record.phase,
        mode: match record.mode {
            DrawMode::Manual => ModeKind::Manual,
            DrawMode::Seeded { .. } => ModeKind::Seeded,
        },
        config: record.config.clone(),
        roster,
        info_draws: record.info_draws,
        betting_draws: record.betting_draws,
        you,
        controls,
    }
}

fn controls(record: &SessionRecord, monitor_id: &str) -> Controls {
    let next_phase = record.phase.next();
    let blocked_reason = match next_phase {
        None => Some("session is closed".to_string()),
        Some(to) => {
            let trial = SessionEvent::PhaseAdvanced {
                by: monitor_id.to_string(),
                from: record.phase,
                to,
            };
            advance(record, trial, 0).err().map(|e| e.to_string())
        }
    };
    Controls {
        next_phase,
        can_advance: blocked_reason.is_none(),
        blocked_reason,
        awaiting_info_draws: record.phase == Phase::InformationalDraws && record.info_draws.is_none(),
        awaiting_betting_draws: record.phase == Phase::BetResolution && record.betting_draws.is_none(),
    }
}
