//! Event-sourced session state machine.
//!
//! Every change to a session is a [`SessionEvent`] appended to its log, and
//! the record is a pure fold of that log, so [`replay`] of a record's log
//! reproduces the record.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Bet, Color, DecisionRule, DrawOutcome, ExperimentConfig, Money, RiskyColor, State};
use crate::stats::{ChoiceDataset, ChoiceRecord, HypotheticalAnswer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Setup,
    Elicitation,
    InformationalDraws,
    BetResolution,
    Payout,
    Questionnaire,
    Closed,
}

impl Phase {
    pub fn next(self) -> Option<Phase> {
        use Phase::*;
        match self {
            Setup => Some(Elicitation),
            Elicitation => Some(InformationalDraws),
            InformationalDraws => Some(BetResolution),
            BetResolution => Some(Payout),
            Payout => Some(Questionnaire),
            Questionnaire => Some(Closed),
            Closed => None,
        }
    }

    pub fn name(self) -> &'static str {
        use Phase::*;
        match self {
            Setup => "setup",
            Elicitation => "elicitation",
            InformationalDraws => "informational_draws",
            BetResolution => "bet_resolution",
            Payout => "payout",
            Questionnaire => "questionnaire",
            Closed => "closed",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Subject,
    Monitor,
}

/// How draws enter the session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DrawMode {
    /// The monitor draws physical balls and types in the colors.
    Manual,
    /// Draws come from a ChaCha8 stream seeded with `seed`, with the
    /// ambiguous urn's green share fixed at `green_share`.
    Seeded { seed: u64, green_share: State },
}

/// The ball from each urn that settles the executed bet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BettingDraws {
    pub ambiguous: Color,
    pub risky: RiskyColor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetOutcome {
    pub executed: Bet,
    pub won: bool,
    pub payment: Money,
}

/// Places the bet the rule assigns to the realized informational draws and
/// settles it against the betting draws.
pub fn resolve_bet(rule: &DecisionRule, info: DrawOutcome, betting: BettingDraws, cfg: &ExperimentConfig) -> BetOutcome {
    let executed = rule.bet(info);
    let won = match executed {
        Bet::White => betting.risky == RiskyColor::White,
        Bet::Green => betting.ambiguous == Color::Green,
        Bet::Yellow => betting.ambiguous == Color::Yellow,
    };
    let payment = if won { cfg.show_up_fee + cfg.prize } else { cfg.show_up_fee };
    BetOutcome { executed, won, payment }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub role: Role,
    pub rule: Option<DecisionRule>,
    pub hypothetical_answer: Option<HypotheticalAnswer>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        session_id: String,
        config: ExperimentConfig,
        mode: DrawMode,
    },
    Joined {
        participant_id: String,
        role: Role,
    },
    RuleSubmitted {
        participant_id: String,
        rule: DecisionRule,
    },
    PhaseAdvanced {
        by: String,
        from: Phase,
        to: Phase,
    },
    InfoDrawsRecorded {
        by: String,
        outcome: DrawOutcome,
    },
    BettingDrawsRecorded {
        by: String,
        draws: BettingDraws,
    },
    QuestionnaireAnswered {
        participant_id: String,
        answer: HypotheticalAnswer,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub seq: u64,
    /// Milliseconds since the Unix epoch, supplied by the caller.
    pub at_ms: u64,
    pub event: SessionEvent,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("{action} is not allowed in phase {phase}")]
    WrongPhase { action: &'static str, phase: Phase },
    #[error("only the monitor may {0}")]
    NotMonitor(&'static str),
    #[error("only subjects may {0}")]
    NotSubject(&'static str),
    #[error("unknown participant {0:?}")]
    UnknownParticipant(String),
    #[error("participant {0:?} already joined")]
    DuplicateParticipant(String),
    #[error("the session already has a monitor")]
    DuplicateMonitor,
    #[error("participant {0:?} already submitted a rule")]
    DuplicateRule(String),
    #[error("participant {0:?} already answered the questionnaire")]
    DuplicateAnswer(String),
    #[error("{0} already recorded")]
    AlreadyRecorded(&'static str),
    #[error("cannot leave {phase}: {reason}")]
    NotReady { phase: Phase, reason: String },
    #[error("draws {got} do not match the seeded generator ({expected})")]
    SeedMismatch { expected: String, got: String },
    #[error("invalid event log: {0}")]
    InvalidLog(String),
    #[error("invalid session: {0}")]
    InvalidSession(String),
}

pub type EngineResult<T> = std::result::Result<T, EngineError>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub config: ExperimentConfig,
    pub mode: DrawMode,
    pub phase: Phase,
    pub participants: Vec<Participant>,
    pub info_draws: Option<DrawOutcome>,
    pub betting_draws: Option<BettingDraws>,
    pub log: Vec<LoggedEvent>,
}

impl SessionRecord {
    pub fn create(session_id: &str, config: ExperimentConfig, mode: DrawMode, at_ms: u64) -> EngineResult<SessionRecord> {
        config
            .validate()
            .map_err(|e| EngineError::InvalidSession(e.to_string()))?;
        if session_id.trim().is_empty() {
            return Err(EngineError::InvalidSession("empty session id".into()));
        }
        let event = SessionEvent::Created {
            session_id: session_id.to_string(),
            config: config.clone(),
            mode: mode.clone(),
        };
        Ok(SessionRecord {
            session_id: session_id.to_string(),
            config,
            mode,
            phase: Phase::Setup,
            participants: Vec::new(),
            info_draws: None,
            betting_draws: None,
            log: vec![LoggedEvent { seq: 0, at_ms, event }],
        })
    }

    /// Number of logged events; strictly increases with every change.
    pub fn version(&self) -> u64 {
        self.log.len() as u64
    }

    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.participants.iter().find(|p| p.id == id)
    }

    pub fn monitor(&self) -> Option<&Participant> {
        self.participants.iter().find(|p| p.role == Role::Monitor)
    }

    pub fn subjects(&self) -> impl Iterator<Item = &Participant> {
        self.participants.iter().filter(|p| p.role == Role::Subject)
    }

    /// Validates `event` against the current state and appends it. On error
    /// the record is unchanged.
    pub fn apply(&mut self, event: SessionEvent, at_ms: u64) -> EngineResult<()> {
        self.check(&event)?;
        self.fold(&event);
        let seq = self.log.len() as u64;
        self.log.push(LoggedEvent { seq, at_ms, event });
        Ok(())
    }

    fn require_phase(&self, phase: Phase, action: &'static str) -> EngineResult<()> {
        if self.phase == phase {
            Ok(())
        } else {
            Err(EngineError::WrongPhase {
                action,
                phase: self.phase,
            })
        }
    }

    fn require_role(&self, id: &str, role: Role, action: &'static str) -> EngineResult<&Participant> {
        let p = self
            .participant(id)
            .ok_or_else(|| EngineError::UnknownParticipant(id.to_string()))?;
        match (p.role, role) {
            (a, b) if a == b => Ok(p),
            (_, Role::Monitor) => Err(EngineError::NotMonitor(action)),
            (_, Role::Subject) => Err(EngineError::NotSubject(action)),
        }
    }

    fn check(&self, event: &SessionEvent) -> EngineResult<()> {
        match event {
            SessionEvent::Created { .. } => Err(EngineError::InvalidLog("session already created".into())),
            SessionEvent::Joined { participant_id, role } => {
                self.require_phase(Phase::Setup, "joining")?;
                if participant_id.trim().is_empty() {
                    return Err(EngineError::InvalidSession("empty participant id".into()));
                }
                if self.participant(participant_id).is_some() {
                    return Err(EngineError::DuplicateParticipant(participant_id.clone()));
                }
                if *role == Role::Monitor && self.monitor().is_some() {
                    return Err(EngineError::DuplicateMonitor);
                }
                Ok(())
            }
            SessionEvent::RuleSubmitted { participant_id, .. } => {
                let p = self.require_role(participant_id, Role::Subject, "submit a rule")?;
                self.require_phase(Phase::Elicitation, "rule submission")?;
                if p.rule.is_some() {
                    return Err(EngineError::DuplicateRule(participant_id.clone()));
                }
                Ok(())
            }
            SessionEvent::PhaseAdvanced { by, from, to } => {
                self.require_role(by, Role::Monitor, "advance the phase")?;
                if *from != self.phase || self.phase.next() != Some(*to) {
                    return Err(EngineError::WrongPhase {
                        action: "advancing",
                        phase: self.phase,
                    });
                }
                self.ready_to_leave()
            }
            SessionEvent::InfoDrawsRecorded { by, outcome } => {
                self.require_role(by, Role::Monitor, "enter draws")?;
                self.require_phase(Phase::InformationalDraws, "entering informational draws")?;
                if self.info_draws.is_some() {
                    return Err(EngineError::AlreadyRecorded("informational draws"));
                }
                if let Some((expected, _)) = self.seeded_draws() {
                    if expected != *outcome {
                        return Err(EngineError::SeedMismatch {
                            expected: expected.to_string(),
                            got: outcome.to_string(),
                        });
                    }
                }
                Ok(())
            }
            SessionEvent::BettingDrawsRecorded { by, draws } => {
                self.require_role(by, Role::Monitor, "enter draws")?;
                self.require_phase(Phase::BetResolution, "entering betting draws")?;
                if self.betting_draws.is_some() {
                    return Err(EngineError::AlreadyRecorded("betting draws"));
                }
                if let Some((_, expected)) = self.seeded_draws() {
                    if expected != *draws {
                        return Err(EngineError::SeedMismatch {
                            expected: betting_code(&expected),
                            got: betting_code(draws),
                        });
                    }
                }
                Ok(())
            }
            SessionEvent::QuestionnaireAnswered { participant_id, .. } => {
                let p = self.require_role(participant_id, Role::Subject, "answer the questionnaire")?;
                self.require_phase(Phase::Questionnaire, "answering the questionnaire")?;
                if p.hypothetical_answer.is_some() {
                    return Err(EngineError::DuplicateAnswer(participant_id.clone()));
                }
                Ok(())
            }
        }
    }

    fn ready_to_leave(&self) -> EngineResult<()> {
        let not_ready = |reason: String| {
            Err(EngineError::NotReady {
                phase: self.phase,
                reason,
            })
        };
        match self.phase {
            Phase::Setup if self.subjects().next().is_none() => not_ready("no subjects have joined".into()),
            Phase::Elicitation => {
                let missing: Vec<&str> = self
                    .subjects()
                    .filter(|p| p.rule.is_none())
                    .map(|p| p.id.as_str())
                    .collect();
                if missing.is_empty() {
                    Ok(())
                } else {
                    not_ready(format!("waiting for rules from {}", missing.join(", ")))
                }
            }
            Phase::InformationalDraws if self.info_draws.is_none() => {
                not_ready("informational draws not recorded".into())
            }
            Phase::BetResolution if self.betting_draws.is_none() => not_ready("betting draws not recorded".into()),
            Phase::Closed => Err(EngineError::WrongPhase {
                action: "advancing",
                phase: Phase::Closed,
            }),
            _ => Ok(()),
        }
    }

    fn fold(&mut self, event: &SessionEvent) {
        match event {
            SessionEvent::Created { .. } => {}
            SessionEvent::Joined { participant_id, role } => self.participants.push(Participant {
                id: participant_id.clone(),
                role: *role,
                rule: None,
                hypothetical_answer: None,
            }),
            SessionEvent::RuleSubmitted { participant_id, rule } => {
                if let Some(p) = self.participants.iter_mut().find(|p| p.id == *participant_id) {
                    p.rule = Some(*rule);
                }
            }
            SessionEvent::PhaseAdvanced { to, .. } => self.phase = *to,
            SessionEvent::InfoDrawsRecorded { outcome, .. } => self.info_draws = Some(*outcome),
            SessionEvent::BettingDrawsRecorded { draws, .. } => self.betting_draws = Some(*draws),
            SessionEvent::QuestionnaireAnswered { participant_id, answer } => {
                if let Some(p) = self.participants.iter_mut().find(|p| p.id == *participant_id) {
                    p.hypothetical_answer = Some(*answer);
                }
            }
        }
    }

    /// The draws a seeded session must record, or `None` in manual mode.
    pub fn seeded_draws(&self) -> Option<(DrawOutcome, BettingDraws)> {
        match &self.mode {
            DrawMode::Manual => None,
            DrawMode::Seeded { seed, green_share } => {
                let mut urns = UrnSampler::new(green_share, &self.config, *seed);
                let first = urns.ambiguous();
                let second = urns.ambiguous();
                let betting = BettingDraws {
                    ambiguous: urns.ambiguous(),
                    risky: urns.risky(),
                };
                Some((DrawOutcome::from_draws(first, second), betting))
            }
        }
    }

    /// The settled bet of a subject, once both sets of draws are in.
    pub fn outcome_for(&self, participant_id: &str) -> Option<BetOutcome> {
        let rule = self.participant(participant_id)?.rule?;
        Some(resolve_bet(&rule, self.info_draws?, self.betting_draws?, &self.config))
    }

    /// Subjects' choices in the stats CSV layout.
    pub fn to_dataset(&self) -> ChoiceDataset {
        let records = self
            .subjects()
            .filter_map(|p| {
                Some(ChoiceRecord {
                    subject_id: p.id.clone(),
                    rule: p.rule?,
                    hypothetical_answer: p.hypothetical_answer,
                })
            })
            .collect();
        ChoiceDataset::new(records).expect("participant ids are unique")
    }
}

/// Returns a copy of `session` with `event` applied, leaving the input as is.
pub fn advance(session: &SessionRecord, event: SessionEvent, at_ms: u64) -> EngineResult<SessionRecord> {
    let mut next = session.clone();
    next.apply(event, at_ms)?;
    Ok(next)
}

/// Rebuilds a session from its log. The first event must be `Created`.
pub fn replay(log: &[LoggedEvent]) -> EngineResult<SessionRecord> {
    let (first, rest) = log
        .split_first()
        .ok_or_else(|| EngineError::InvalidLog("empty log".into()))?;
    let SessionEvent::Created {
        session_id,
        config,
        mode,
    } = &first.event
    else {
        return Err(EngineError::InvalidLog("log must start with a created event".into()));
    };
    let mut record = SessionRecord::create(session_id, config.clone(), mode.clone(), first.at_ms)?;
    record.log[0].seq = first.seq;
    for entry in rest {
        if entry.seq != record.log.len() as u64 {
            return Err(EngineError::InvalidLog(format!(
                "expected sequence number {}, found {}",
                record.log.len(),
                entry.seq
            )));
        }
        record.apply(entry.event.clone(), entry.at_ms)?;
    }
    Ok(record)
}

/// Writes one JSON object per line.
pub fn write_log(log: &[LoggedEvent], mut out: impl Write) -> std::io::Result<()> {
    for entry in log {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads newline-delimited JSON events, skipping blank lines.
pub fn read_log(input: impl BufRead) -> EngineResult<Vec<LoggedEvent>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, line)| line.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(i, line)| {
            let line = line.map_err(|e| EngineError::InvalidLog(e.to_string()))?;
            serde_json::from_str(&line).map_err(|e| EngineError::InvalidLog(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

fn betting_code(d: &BettingDraws) -> String {
    format!("{}{}", d.ambiguous.letter(), d.risky.letter())
}

/// Exact draws from both urns: the ambiguous ball is Green when a uniform
/// integer below the share's denominator falls below its numerator.
pub struct UrnSampler {
    rng: ChaCha8Rng,
    green: (u64, u64),
    white: (u64, u64),
}

impl UrnSampler {
    pub fn new(green_share: &State, cfg: &ExperimentConfig, seed: u64) -> UrnSampler {
        UrnSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            green: small_fraction(green_share),
            white: (u64::from(cfg.risky_white_count), u64::from(cfg.risky_total)),
        }
    }

    pub fn ambiguous(&mut self) -> Color {
        if self.rng.random_range(0..self.green.1) < self.green.0 {
            Color::Green
        } else {
            Color::Yellow
        }
    }

    pub fn risky(&mut self) -> RiskyColor {
        if self.rng.random_range(0..self.white.1) < self.white.0 {
            RiskyColor::White
        } else {
            RiskyColor::Red
        }
    }
}

/// `omega` as `(numerator, denominator)` in `u64`, rounded to a 2^-53 grid
/// when the exact fraction does not fit.
fn small_fraction(omega: &State) -> (u64, u64) {
    use num_traits::ToPrimitive;
    let r = omega.omega();
    match (r.numer().to_u64(), r.denom().to_u64()) {
        (Some(n), Some(d)) => (n, d),
        _ => {
            let scale = 1u64 << 53;
            ((omega.to_f64() * scale as f64).round() as u64, scale)
        }
    }
}
