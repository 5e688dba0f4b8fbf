use ellsberg_core::engine::session::{BettingDraws, UrnSampler};
use ellsberg_core::engine::{
    read_log, replay, resolve_bet, simulate_population, write_log, AgentPolicy, DrawMode, PolicyGroup, Role,
    SessionEvent, SessionRecord,
};
use ellsberg_core::model::{Color, RiskyColor};
use ellsberg_core::preference::MaxminEu;
use ellsberg_core::rational::to_f64;
use ellsberg_core::stats::aggregate;
use ellsberg_core::classification::Classifier;
use ellsberg_core::{evaluate_act, induced_act, DecisionRule, DrawOutcome, ExperimentConfig, Money, State};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn classifier() -> &'static Classifier {
    static C: std::sync::OnceLock<Classifier> = std::sync::OnceLock::new();
    C.get_or_init(|| Classifier::new(&ExperimentConfig::default()))
}

/// Raw command choices, turned into events against whatever state the
/// session is in; illegal ones are simply rejected by the engine.
#[derive(Clone, Debug)]
enum Command {
    Join(u8, bool),
    Submit(u8, usize),
    Advance(u8),
    Info(u8, usize),
    Betting(u8, bool, bool),
}

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        (0u8..5, any::<bool>()).prop_map(|(p, m)| Command::Join(p, m)),
        (0u8..5, 0usize..81).prop_map(|(p, r)| Command::Submit(p, r)),
        (0u8..5).prop_map(Command::Advance),
        (0u8..5, 0usize..4).prop_map(|(p, o)| Command::Info(p, o)),
        (0u8..5, any::<bool>(), any::<bool>()).prop_map(|(p, a, r)| Command::Betting(p, a, r)),
    ]
}

fn to_event(cmd: &Command, s: &SessionRecord) -> SessionEvent {
    let id = |p: &u8| format!("p{p}");
    match cmd {
        Command::Join(p, monitor) => SessionEvent::Joined {
            participant_id: id(p),
            role: if *monitor { Role::Monitor } else { Role::Subject },
        },
        Command::Submit(p, r) => SessionEvent::RuleSubmitted {
            participant_id: id(p),
            rule: DecisionRule::from_index(*r),
        },
        Command::Advance(p) => SessionEvent::PhaseAdvanced {
            by: id(p),
            from: s.phase,
            to: s.phase.next().unwrap_or(s.phase),
        },
        Command::Info(p, o) => SessionEvent::InfoDrawsRecorded {
            by: id(p),
            outcome: DrawOutcome::ALL[*o],
        },
        Command::Betting(p, a, r) => SessionEvent::BettingDrawsRecorded {
            by: id(p),
            draws: BettingDraws {
                ambiguous: if *a { Color::Green } else { Color::Yellow },
                risky: if *r { RiskyColor::White } else { RiskyColor::Red },
            },
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn replay_reproduces_every_session(cmds in prop::collection::vec(command(), 0..80)) {
        let mut s = SessionRecord::create("prop", ExperimentConfig::default(), DrawMode::Manual, 0).unwrap();
        for (t, cmd) in cmds.iter().enumerate() {
            let before = s.clone();
            let event = to_event(cmd, &s);
            if s.apply(event, t as u64).is_err() {
                prop_assert_eq!(&s, &before);
            } else {
                prop_assert_eq!(s.version(), before.version() + 1);
            }
            prop_assert!(s.participants.iter().filter(|p| p.role == Role::Monitor).count() <= 1);
        }
        prop_assert_eq!(replay(&s.log).unwrap(), s.clone());
        let mut buf = Vec::new();
        write_log(&s.log, &mut buf).unwrap();
        prop_assert_eq!(replay(&read_log(&buf[..]).unwrap()).unwrap(), s);
    }

    #[test]
    fn payments_are_fee_or_fee_plus_prize(r in 0usize..81, o in 0usize..4, a: bool, w: bool) {
        let cfg = ExperimentConfig::default();
        let betting = BettingDraws {
            ambiguous: if a { Color::Green } else { Color::Yellow },
            risky: if w { RiskyColor::White } else { RiskyColor::Red },
        };
        let out = resolve_bet(&DecisionRule::from_index(r), DrawOutcome::ALL[o], betting, &cfg);
        prop_assert!(out.payment == Money::units(5) || out.payment == Money::units(15));
        prop_assert_eq!(out.won, out.payment == Money::units(15));
    }

    #[test]
    fn simulated_tables_account_for_everyone(seed: u64, n in 1usize..40, m in 0usize..40) {
        let groups = [
            PolicyGroup { policy: AgentPolicy::UniformRandom { seed }, count: n },
            PolicyGroup { policy: AgentPolicy::Maxmin { interval: MaxminEu::full() }, count: m },
        ];
        let cfg = ExperimentConfig::default();
        let res = simulate_population(&groups, &State::ratio(1, 3).unwrap(), seed, &cfg).unwrap();
        let table = aggregate(&res.dataset, classifier()).unwrap();
        prop_assert_eq!(table.total, n + m);
        prop_assert_eq!(res.summary.subjects, n + m);
    }
}

#[test]
fn maxmin_population_only_uses_maxmin_rules() {
    let groups = [PolicyGroup {
        policy: AgentPolicy::Maxmin { interval: MaxminEu::full() },
        count: 30,
    }];
    let res = simulate_population(&groups, &State::ratio(1, 2).unwrap(), 11, &ExperimentConfig::default()).unwrap();
    assert!(res.dataset.rules().all(|r| ["GGYY", "GYGY"].contains(&r.code().as_str())));
}

fn within_four_se(rule: DecisionRule, omega: State, seed: u64) {
    const N: usize = 100_000;
    let cfg = ExperimentConfig::default();
    let groups = [PolicyGroup {
        policy: AgentPolicy::Fixed { rule },
        count: N,
    }];
    let res = simulate_population(&groups, &omega, seed, &cfg).unwrap();
    let p = to_f64(&evaluate_act(&induced_act(&rule, &cfg), &omega));
    let se = (p * (1.0 - p) / N as f64).sqrt();
    let freq = res.summary.win_rate;
    assert!((freq - p).abs() <= 4.0 * se + 1e-12, "{rule} at {omega}: {freq} vs {p} (se {se})");
}

#[test]
fn monte_carlo_matches_gggy_at_one_third() {
    within_four_se("GGGY".parse().unwrap(), State::ratio(1, 3).unwrap(), 2024);
}

#[test]
fn monte_carlo_matches_exact_values_for_sampled_pairs() {
    let mut pick = ChaCha8Rng::seed_from_u64(7);
    for i in 0..10 {
        let rule = DecisionRule::from_index(pick.random_range(0..81));
        let omega = State::ratio(pick.random_range(0..=100), 100).unwrap();
        within_four_se(rule, omega, 1000 + i);
    }
}

#[test]
fn urn_sampler_is_exact_at_the_extremes() {
    let cfg = ExperimentConfig::default();
    let mut all_green = UrnSampler::new(&State::ratio(1, 1).unwrap(), &cfg, 1);
    let mut all_yellow = UrnSampler::new(&State::ratio(0, 1).unwrap(), &cfg, 1);
    for _ in 0..1000 {
        assert_eq!(all_green.ambiguous(), Color::Green);
        assert_eq!(all_yellow.ambiguous(), Color::Yellow);
    }
}
