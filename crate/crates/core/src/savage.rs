//! Savage-style representation: a state fixes the colors of three balls from
//! the ambiguous urn and one from the risky urn, and an act pays the prize or
//! nothing in each of the 16 states.
//!
//! Preferences are only constrained by two axioms. Moving the prize from a
//! White-risky state to the matching Red-risky state is a strict improvement,
//! and acts that differ by relabelling the three ambiguous draws are
//! indifferent. [`derive_preference`] closes these under transitivity.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{Bet, Color, DecisionRule, DrawOutcome, ExperimentConfig, RiskyColor, State};
use crate::rational::Rational;

/// Default cap on visited acts during [`derive_preference`].
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// `(s1, s2, s3, s0)`: three ambiguous draws and one risky draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SavageState {
    pub ambiguous: [Color; 3],
    pub risky: RiskyColor,
}

impl SavageState {
    pub const COUNT: usize = 16;

    /// Bit `3 - i` of the index is ball `i + 1` being Yellow; bit 0 is the
    /// risky ball being White.
    pub fn index(&self) -> usize {
        let amb = self
            .ambiguous
            .iter()
            .fold(0, |acc, c| (acc << 1) | usize::from(*c == Color::Yellow));
        (amb << 1) | usize::from(self.risky == RiskyColor::White)
    }

    pub fn from_index(index: usize) -> SavageState {
        assert!(index < Self::COUNT, "savage state index out of range");
        let color = |bit: usize| {
            if index >> bit & 1 == 1 {
                Color::Yellow
            } else {
                Color::Green
            }
        };
        SavageState {
            ambiguous: [color(3), color(2), color(1)],
            risky: if index & 1 == 1 {
                RiskyColor::White
            } else {
                RiskyColor::Red
            },
        }
    }

    pub fn all() -> impl Iterator<Item = SavageState> {
        (0..Self::COUNT).map(SavageState::from_index)
    }

    /// The same ambiguous draws with the given risky color.
    pub fn with_risky(&self, risky: RiskyColor) -> SavageState {
        SavageState { risky, ..*self }
    }
}

impl fmt::Display for SavageState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.ambiguous {
            write!(f, "{}", c.letter())?;
        }
        write!(f, "{}", self.risky.letter())
    }
}

impl FromStr for SavageState {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<SavageState> {
        let bad = || CoreError::InvalidModel(format!("invalid savage state {s:?}"));
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 4 {
            return Err(bad());
        }
        let color = |c: char| Color::from_letter(c).ok_or_else(bad);
        Ok(SavageState {
            ambiguous: [color(chars[0])?, color(chars[1])?, color(chars[2])?],
            risky: RiskyColor::from_letter(chars[3]).ok_or_else(bad)?,
        })
    }
}

/// A bijection on the three ambiguous draw positions, stored zero-based as
/// `[pi(1), pi(2), pi(3)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation3([u8; 3]);

impl Permutation3 {
    pub const ALL: [Permutation3; 6] = [
        Permutation3([0, 1, 2]),
        Permutation3([0, 2, 1]),
        Permutation3([1, 0, 2]),
        Permutation3([1, 2, 0]),
        Permutation3([2, 0, 1]),
        Permutation3([2, 1, 0]),
    ];

    pub const IDENTITY: Permutation3 = Permutation3([0, 1, 2]);

    /// From one-based images, e.g. `[2, 1, 3]` for the transposition (1 2).
    pub fn new(images: [u8; 3]) -> Result<Permutation3> {
        let zero_based = images.map(|i| i.wrapping_sub(1));
        let mut seen = [false; 3];
        for &i in &zero_based {
            if i > 2 || std::mem::replace(&mut seen[i as usize], true) {
                return Err(CoreError::InvalidModel(format!("{images:?} is not a permutation of 1..3")));
            }
        }
        Ok(Permutation3(zero_based))
    }

    /// `s^pi = (s_pi(1), s_pi(2), s_pi(3), s0)`.
    pub fn apply(&self, s: &SavageState) -> SavageState {
        SavageState {
            ambiguous: self.0.map(|i| s.ambiguous[i as usize]),
            risky: s.risky,
        }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation3) -> Permutation3 {
        Permutation3(other.0.map(|i| self.0[i as usize]))
    }

    pub fn inverse(&self) -> Permutation3 {
        let mut inv = [0u8; 3];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p as usize] = i as u8;
        }
        Permutation3(inv)
    }
}

impl fmt::Display for Permutation3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0.map(|i| i + 1);
        write!(f, "({a} {b} {c})")
    }
}

/// Prize indicator over the 16 states, bit `s.index()` set when the act pays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SavageAct(u16);

impl SavageAct {
    pub fn from_bits(bits: u16) -> SavageAct {
        SavageAct(bits)
    }

    pub fn bits(&self) -> u16 {
        self.0
    }

    pub fn from_fn(pays: impl Fn(&SavageState) -> bool) -> SavageAct {
        SavageAct(
            SavageState::all()
                .filter(|s| pays(s))
                .fold(0, |acc, s| acc | 1 << s.index()),
        )
    }

    /// The act paying exactly in the listed states.
    pub fn paying_in(states: &[&str]) -> Result<SavageAct> {
        let parsed = states
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<SavageState>>>()?;
        Ok(SavageAct::from_fn(|s| parsed.contains(s)))
    }

    pub fn pays(&self, s: &SavageState) -> bool {
        self.0 >> s.index() & 1 == 1
    }

    pub fn prize_states(&self) -> Vec<SavageState> {
        SavageState::all().filter(|s| self.pays(s)).collect()
    }

    fn count_on(&self, risky: RiskyColor) -> u32 {
        SavageState::all()
            .filter(|s| s.risky == risky && self.pays(s))
            .count() as u32
    }

    fn toggle(&self, s: &SavageState) -> SavageAct {
        SavageAct(self.0 ^ 1 << s.index())
    }

    /// Ambiguous triples where the prize can move from White to Red.
    fn improvable_triples(&self) -> impl Iterator<Item = SavageState> + '_ {
        SavageState::all()
            .filter(|s| s.risky == RiskyColor::White)
            .filter(|s| self.pays(s) && !self.pays(&s.with_risky(RiskyColor::Red)))
    }

    fn improve_at(&self, white_state: &SavageState) -> SavageAct {
        self.toggle(white_state)
            .toggle(&white_state.with_risky(RiskyColor::Red))
    }
}

impl fmt::Display for SavageAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let states: Vec<String> = self.prize_states().iter().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", states.join(", "))
    }
}

impl Serialize for SavageAct {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let states: Vec<String> = self.prize_states().iter().map(|s| s.to_string()).collect();
        states.serialize(s)
    }
}

fn bet_wins(bet: Bet, s: &SavageState) -> bool {
    match bet {
        Bet::White => s.risky == RiskyColor::White,
        Bet::Green => s.ambiguous[2] == Color::Green,
        Bet::Yellow => s.ambiguous[2] == Color::Yellow,
    }
}

/// The act paying when the bet chosen after the first two ambiguous draws
/// wins on the third ambiguous ball and the risky ball.
pub fn rule_to_savage_act(rule: &DecisionRule) -> SavageAct {
    SavageAct::from_fn(|s| {
        let outcome = DrawOutcome::from_draws(s.ambiguous[0], s.ambiguous[1]);
        bet_wins(rule.bet(outcome), s)
    })
}

/// `g(s) = act(s^pi)`.
pub fn permute_act(act: &SavageAct, pi: &Permutation3) -> SavageAct {
    SavageAct::from_fn(|s| act.pays(&pi.apply(s)))
}

/// Whether `g` arises from `f` by one or more disjoint White-to-Red prize
/// moves, each at an ambiguous triple where `f` pays on White only.
pub fn risky_improvement_step(f: &SavageAct, g: &SavageAct) -> bool {
    if f == g {
        return false;
    }
    SavageState::all()
        .filter(|s| s.risky == RiskyColor::White)
        .all(|w| {
            let r = w.with_risky(RiskyColor::Red);
            let unchanged = f.pays(&w) == g.pays(&w) && f.pays(&r) == g.pays(&r);
            let moved = f.pays(&w) && !f.pays(&r) && g.pays(&r) && !g.pays(&w);
            unchanged || moved
        })
}

/// Which relabellings of the ambiguous draws count as indifference steps.
///
/// `Joint` applies one permutation to every state, as in the definition of
/// exchangeable acts. `PerRiskyColor` lets the states with a Red risky ball
/// and those with a White one be relabelled independently; this is the step
/// the `(aWWd)` to `(aGYd)` construction actually takes, since it swaps
/// `GYYR`/`YGYR` and `YGGR`/`GYGR` while leaving the White states alone.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeScope {
    Joint,
    #[default]
    PerRiskyColor,
}

/// A relabelling applied to the Red-risky and White-risky states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LayeredPermutation {
    pub red: Permutation3,
    pub white: Permutation3,
}

impl LayeredPermutation {
    pub fn joint(pi: Permutation3) -> LayeredPermutation {
        LayeredPermutation { red: pi, white: pi }
    }

    pub fn is_identity(&self) -> bool {
        self.red == Permutation3::IDENTITY && self.white == Permutation3::IDENTITY
    }

    /// `map[i]` is the index of the state whose payoff lands on state `i`.
    fn index_map(&self) -> [u8; 16] {
        std::array::from_fn(|i| {
            let s = SavageState::from_index(i);
            let pi = match s.risky {
                RiskyColor::Red => &self.red,
                RiskyColor::White => &self.white,
            };
            pi.apply(&s).index() as u8
        })
    }

    pub fn apply_to(&self, act: &SavageAct) -> SavageAct {
        SavageAct::from_fn(|s| {
            let pi = match s.risky {
                RiskyColor::Red => &self.red,
                RiskyColor::White => &self.white,
            };
            act.pays(&pi.apply(s))
        })
    }
}

impl fmt::Display for LayeredPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.red == self.white {
            write!(f, "{}", self.red)
        } else {
            write!(f, "R{} W{}", self.red, self.white)
        }
    }
}

impl ExchangeScope {
    /// Every relabelling the scope allows, identity first.
    pub fn permutations(self) -> Vec<LayeredPermutation> {
        match self {
            ExchangeScope::Joint => Permutation3::ALL.into_iter().map(LayeredPermutation::joint).collect(),
            ExchangeScope::PerRiskyColor => Permutation3::ALL
                .into_iter()
                .flat_map(|red| Permutation3::ALL.into_iter().map(move |white| LayeredPermutation { red, white }))
                .collect(),
        }
    }
}

/// Whether some relabelling of the ambiguous draws within `scope` carries
/// `f` to `g`.
pub fn exchangeable(f: &SavageAct, g: &SavageAct, scope: ExchangeScope) -> bool {
    scope.permutations().iter().any(|pi| pi.apply_to(f) == *g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SavagePreference {
    /// The second act is strictly preferred to the first.
    StrictlyBetter,
    /// The first act is strictly preferred to the second.
    StrictlyWorse,
    Indifferent,
    Incomparable,
}

/// One edge of a preference derivation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivationStep {
    /// Prize moved from `(triple, W)` to `(triple, R)`.
    Improvement { triple: String, act: SavageAct },
    /// Draw positions relabelled.
    Permutation { pi: String, act: SavageAct },
}

impl DerivationStep {
    pub fn act(&self) -> &SavageAct {
        match self {
            DerivationStep::Improvement { act, .. } | DerivationStep::Permutation { act, .. } => act,
        }
    }

    pub fn is_strict(&self) -> bool {
        matches!(self, DerivationStep::Improvement { .. })
    }
}

impl fmt::Display for DerivationStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivationStep::Improvement { triple, .. } => write!(f, "improve {triple}"),
            DerivationStep::Permutation { pi, .. } => write!(f, "relabel {pi}"),
        }
    }
}

/// Shortest chain of steps from `from` to `to` that uses at least one strict
/// improvement, or `None` when the axioms do not imply `to` over `from`.
///
/// Breadth-first search over `(act, used a strict step)` pairs, so at most
/// 2^17 nodes; `budget` caps the number visited.
pub fn strict_derivation(
    from: &SavageAct,
    to: &SavageAct,
    scope: ExchangeScope,
    budget: usize,
) -> Result<Option<Vec<DerivationStep>>> {
    const UNSEEN: u32 = u32::MAX;
    let relabellings: Vec<LayeredPermutation> =
        scope.permutations().into_iter().filter(|p| !p.is_identity()).collect();
    let maps: Vec<[u8; 16]> = relabellings.iter().map(LayeredPermutation::index_map).collect();
    let node = |act: u16, strict: bool| (usize::from(act) << 1) | usize::from(strict);
    // parent node and the step taken from it: relabelling index, or 64 + the
    // White-state index for an improvement
    let mut parent = vec![UNSEEN; 1 << 17];
    let mut via = vec![0u8; 1 << 17];
    let start = node(from.0, false);
    parent[start] = start as u32;
    let mut visited = 1usize;
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        let (bits, strict) = ((cur >> 1) as u16, cur & 1 == 1);
        if strict && bits == to.0 {
            return Ok(Some(rebuild_path(cur, start, &parent, &via, &relabellings)));
        }
        let act = SavageAct(bits);
        let permuted = maps
            .iter()
            .enumerate()
            .map(|(i, m)| (node(remap(bits, m), strict), i as u8));
        let improved = act
            .improvable_triples()
            .map(|w| (node(act.improve_at(&w).0, true), 64 + w.index() as u8));
        for (next, step) in permuted.chain(improved).collect::<Vec<_>>() {
            if parent[next] != UNSEEN {
                continue;
            }
            if visited >= budget {
                return Err(CoreError::BudgetExceeded(budget));
            }
            visited += 1;
            parent[next] = cur as u32;
            via[next] = step;
            queue.push_back(next);
        }
    }
    Ok(None)
}

fn remap(bits: u16, map: &[u8; 16]) -> u16 {
    map.iter()
        .enumerate()
        .filter(|(_, &src)| bits >> src & 1 == 1)
        .fold(0, |acc, (dst, _)| acc | 1 << dst)
}

fn rebuild_path(
    end: usize,
    start: usize,
    parent: &[u32],
    via: &[u8],
    relabellings: &[LayeredPermutation],
) -> Vec<DerivationStep> {
    let mut path = Vec::new();
    let mut cur = end;
    while cur != start {
        let act = SavageAct((cur >> 1) as u16);
        let step = via[cur];
        path.push(if step >= 64 {
            let triple: String = SavageState::from_index(usize::from(step - 64))
                .to_string()
                .chars()
                .take(3)
                .collect();
            DerivationStep::Improvement { triple, act }
        } else {
            DerivationStep::Permutation {
                pi: relabellings[usize::from(step)].to_string(),
                act,
            }
        });
        cur = parent[cur] as usize;
    }
    path.reverse();
    path
}

/// What the two axioms plus transitivity imply about `g` relative to `f`,
/// with the default [`ExchangeScope`].
pub fn derive_preference(f: &SavageAct, g: &SavageAct, budget: usize) -> Result<SavagePreference> {
    derive_preference_with(f, g, ExchangeScope::default(), budget)
}

pub fn derive_preference_with(
    f: &SavageAct,
    g: &SavageAct,
    scope: ExchangeScope,
    budget: usize,
) -> Result<SavagePreference> {
    if exchangeable(f, g, scope) {
        return Ok(SavagePreference::Indifferent);
    }
    if strict_derivation(f, g, scope, budget)?.is_some() {
        return Ok(SavagePreference::StrictlyBetter);
    }
    if strict_derivation(g, f, scope, budget)?.is_some() {
        return Ok(SavagePreference::StrictlyWorse);
    }
    Ok(SavagePreference::Incomparable)
}

/// The two-step construction from `(aWWd)` to `(aGYd)`: one improvement
/// step to [`intermediate_act`], then a relabelling within `scope`.
/// Returns the relabelling when both steps are valid.
pub fn two_step_construction(a: Bet, d: Bet, scope: ExchangeScope) -> Option<LayeredPermutation> {
    let start = rule_to_savage_act(&white_on_mixed(a, d));
    let middle = intermediate_act(a, d);
    let target = rule_to_savage_act(&follow_on_mixed(a, d));
    if !risky_improvement_step(&start, &middle) {
        return None;
    }
    scope.permutations().into_iter().find(|pi| pi.apply_to(&middle) == target)
}

/// Number of states paying on Red and on White; improvement steps raise the
/// first and lower the second.
pub fn prize_balance(act: &SavageAct) -> (u32, u32) {
    (act.count_on(RiskyColor::Red), act.count_on(RiskyColor::White))
}

/// Probability of the prize when the ambiguous draws are independent with
/// green share `omega` and the risky ball is White with the configured odds.
pub fn savage_consistency(rule: &DecisionRule, omega: &State, cfg: &ExperimentConfig) -> Rational {
    let green = omega.omega();
    let yellow = Rational::one() - green;
    let white = cfg.white_prob();
    let red = Rational::one() - &white;
    let act = rule_to_savage_act(rule);
    SavageState::all()
        .filter(|s| act.pays(s))
        .map(|s| {
            let amb = s.ambiguous.iter().fold(Rational::one(), |p, c| match c {
                Color::Green => p * green,
                Color::Yellow => p * &yellow,
            });
            match s.risky {
                RiskyColor::White => amb * &white,
                RiskyColor::Red => amb * &red,
            }
        })
        .fold(Rational::zero(), |acc, p| acc + p)
}

/// The rule `(a W W d)`.
pub fn white_on_mixed(a: Bet, d: Bet) -> DecisionRule {
    DecisionRule::new(a, Bet::White, Bet::White, d)
}

/// The rule `(a G Y d)`.
pub fn follow_on_mixed(a: Bet, d: Bet) -> DecisionRule {
    DecisionRule::new(a, Bet::Green, Bet::Yellow, d)
}

/// The intermediate act between `(aWWd)` and `(aGYd)`: the prize moved from
/// White to Red at triples GYY and YGG.
pub fn intermediate_act(a: Bet, d: Bet) -> SavageAct {
    let base = rule_to_savage_act(&white_on_mixed(a, d));
    ["GYYW", "YGGW"]
        .iter()
        .map(|s| s.parse::<SavageState>().expect("literal state"))
        .fold(base, |act, w| act.improve_at(&w))
}

/// The three acts embedding a one-shot Ellsberg choice: bet White, Green or
/// Yellow after seeing Y then G, nothing otherwise.
pub fn ellsberg_embedding_acts() -> [(&'static str, SavageAct); 3] {
    let act = |states: &[&str]| SavageAct::paying_in(states).expect("literal states");
    [
        ("W", act(&["YGGW", "YGYW"])),
        ("G", act(&["YGGW", "YGGR"])),
        ("Y", act(&["YGYW", "YGYR"])),
    ]
}
