//! Live session protocol and simulated populations.

pub mod session;
pub mod simulate;

pub use session::{
    advance, read_log, replay, resolve_bet, write_log, BetOutcome, BettingDraws, DrawMode, EngineError, EngineResult,
    LoggedEvent, Participant, Phase, Role, SessionEvent, SessionRecord,
};
pub use simulate::{simulate_population, simulate_spec, AgentPolicy, PolicyGroup, PopulationSpec, SimulationResult};
