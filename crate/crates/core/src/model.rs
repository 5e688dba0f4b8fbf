//! Urns, bets, informational draws, decision rules, and the acts they induce.
//!
//! A state `omega` is the share of green balls in the ambiguous urn. Two
//! informational draws are taken with replacement from that urn; a decision
//! rule maps each of the four ordered draw outcomes to a bet. The induced act
//! is the rule's winning probability as a polynomial of degree at most three
//! in `omega`, held with exact rational coefficients.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, Result};
use crate::poly::Polynomial;
use crate::rational::{format_rational, parse_rational, rat, to_f64, Rational};

/// The three bets. Declaration order is the enumeration order `G < Y < W`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bet {
    Green,
    Yellow,
    White,
}

impl Bet {
    pub const ALL: [Bet; 3] = [Bet::Green, Bet::Yellow, Bet::White];

    pub fn letter(self) -> char {
        match self {
            Bet::Green => 'G',
            Bet::Yellow => 'Y',
            Bet::White => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Bet> {
        match c {
            'G' => Some(Bet::Green),
            'Y' => Some(Bet::Yellow),
            'W' => Some(Bet::White),
            _ => None,
        }
    }

    /// Exchanges Green and Yellow; White is fixed.
    pub fn swap_colors(self) -> Bet {
        match self {
            Bet::Green => Bet::Yellow,
            Bet::Yellow => Bet::Green,
            Bet::White => Bet::White,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Bet::Green => "Green",
            Bet::Yellow => "Yellow",
            Bet::White => "White",
        }
    }
}

impl fmt::Display for Bet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Bet {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Bet> {
        let mut chars = s.trim().chars();
        match (chars.next().and_then(Bet::from_letter), chars.next()) {
            (Some(b), None) => Ok(b),
            _ => Err(CoreError::InvalidBet(s.to_string())),
        }
    }
}

/// Color of a ball from the ambiguous urn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Green,
    Yellow,
}

impl Color {
    pub fn letter(self) -> char {
        match self {
            Color::Green => 'G',
            Color::Yellow => 'Y',
        }
    }

    pub fn from_letter(c: char) -> Option<Color> {
        match c {
            'G' => Some(Color::Green),
            'Y' => Some(Color::Yellow),
            _ => None,
        }
    }

    pub fn swap(self) -> Color {
        match self {
            Color::Green => Color::Yellow,
            Color::Yellow => Color::Green,
        }
    }
}

/// Color of a ball from the risky urn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RiskyColor {
    Red,
    White,
}

impl RiskyColor {
    pub fn letter(self) -> char {
        match self {
            RiskyColor::Red => 'R',
            RiskyColor::White => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<RiskyColor> {
        match c {
            'R' => Some(RiskyColor::Red),
            'W' => Some(RiskyColor::White),
            _ => None,
        }
    }
}

macro_rules! letter_serde {
    ($ty:ty, $expect:literal) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut buf = [0u8; 4];
                s.serialize_str(self.letter().encode_utf8(&mut buf))
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                let mut chars = s.chars();
                match (chars.next().and_then(<$ty>::from_letter), chars.next()) {
                    (Some(v), None) => Ok(v),
                    _ => Err(serde::de::Error::custom(format!(
                        "invalid {} {:?}",
                        $expect, s
                    ))),
                }
            }
        }
    };
}

letter_serde!(Bet, "bet");
letter_serde!(Color, "ambiguous-urn color");
letter_serde!(RiskyColor, "risky-urn color");

/// Ordered outcome of the two informational draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DrawOutcome {
    GG,
    GY,
    YG,
    YY,
}

impl DrawOutcome {
    pub const ALL: [DrawOutcome; 4] = [
        DrawOutcome::GG,
        DrawOutcome::GY,
        DrawOutcome::YG,
        DrawOutcome::YY,
    ];

    pub fn from_draws(first: Color, second: Color) -> DrawOutcome {
        match (first, second) {
            (Color::Green, Color::Green) => DrawOutcome::GG,
            (Color::Green, Color::Yellow) => DrawOutcome::GY,
            (Color::Yellow, Color::Green) => DrawOutcome::YG,
            (Color::Yellow, Color::Yellow) => DrawOutcome::YY,
        }
    }

    pub fn draws(self) -> (Color, Color) {
        match self {
            DrawOutcome::GG => (Color::Green, Color::Green),
            DrawOutcome::GY => (Color::Green, Color::Yellow),
            DrawOutcome::YG => (Color::Yellow, Color::Green),
            DrawOutcome::YY => (Color::Yellow, Color::Yellow),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn yellow_count(self) -> usize {
        let (a, b) = self.draws();
        usize::from(a == Color::Yellow) + usize::from(b == Color::Yellow)
    }

    /// Outcome with both draw colors exchanged (GG↔YY, GY↔YG).
    pub fn swap_colors(self) -> DrawOutcome {
        let (a, b) = self.draws();
        DrawOutcome::from_draws(a.swap(), b.swap())
    }

    pub fn code(self) -> &'static str {
        match self {
            DrawOutcome::GG => "GG",
            DrawOutcome::GY => "GY",
            DrawOutcome::YG => "YG",
            DrawOutcome::YY => "YY",
        }
    }

    /// Probability of this outcome in state `omega`, as a polynomial.
    pub fn weight(self) -> Polynomial {
        let (a, b) = self.draws();
        &color_poly(a) * &color_poly(b)
    }
}

impl fmt::Display for DrawOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for DrawOutcome {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<DrawOutcome> {
        let t = s.trim();
        let mut chars = t.chars();
        match (
            chars.next().and_then(Color::from_letter),
            chars.next().and_then(Color::from_letter),
            chars.next(),
        ) {
            (Some(a), Some(b), None) => Ok(DrawOutcome::from_draws(a, b)),
            _ => Err(CoreError::InvalidDrawOutcome(s.to_string())),
        }
    }
}

impl Serialize for DrawOutcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for DrawOutcome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn color_poly(c: Color) -> Polynomial {
    match c {
        Color::Green => Polynomial::x(),
        Color::Yellow => Polynomial::one_minus_x(),
    }
}

/// A bet for each informational-draw outcome, written `(GG, GY, YG, YY)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecisionRule([Bet; 4]);

impl DecisionRule {
    pub fn new(gg: Bet, gy: Bet, yg: Bet, yy: Bet) -> Self {
        DecisionRule([gg, gy, yg, yy])
    }

    pub fn from_bets(bets: [Bet; 4]) -> Self {
        DecisionRule(bets)
    }

    pub fn bets(&self) -> [Bet; 4] {
        self.0
    }

    pub fn bet(&self, outcome: DrawOutcome) -> Bet {
        self.0[outcome.index()]
    }

    /// Copy of this rule with one entry replaced.
    pub fn with(&self, outcome: DrawOutcome, bet: Bet) -> Self {
        let mut bets = self.0;
        bets[outcome.index()] = bet;
        DecisionRule(bets)
    }

    pub fn code(&self) -> String {
        self.0.iter().map(|b| b.letter()).collect()
    }

    pub fn white_count(&self) -> usize {
        self.0.iter().filter(|&&b| b == Bet::White).count()
    }

    /// Position in [`enumerate_rules`].
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| acc * 3 + b as usize)
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < 81, "rule index {index} out of range");
        let mut bets = [Bet::Green; 4];
        let mut rest = index;
        for slot in bets.iter_mut().rev() {
            *slot = Bet::ALL[rest % 3];
            rest /= 3;
        }
        DecisionRule(bets)
    }

    /// The color-swapped rule: bets G↔Y and outcomes GG↔YY, GY↔YG.
    pub fn swap_colors(&self) -> Self {
        let mut bets = [Bet::Green; 4];
        for o in DrawOutcome::ALL {
            bets[o.index()] = self.bet(o.swap_colors()).swap_colors();
        }
        DecisionRule(bets)
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for DecisionRule {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bets: Vec<Bet> = t.chars().filter_map(Bet::from_letter).collect();
        if bets.len() != 4 || t.chars().count() != 4 {
            return Err(CoreError::InvalidRuleCode(s.to_string()));
        }
        Ok(DecisionRule([bets[0], bets[1], bets[2], bets[3]]))
    }
}

impl Serialize for DecisionRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for DecisionRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All 81 rules in lexicographic order (G < Y < W, positions GG, GY, YG, YY).
pub fn enumerate_rules() -> Vec<DecisionRule> {
    (0..81).map(DecisionRule::from_index).collect()
}

/// A money amount in minor units (cents).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Money(pub u64);

impl Money {
    pub fn units(units: u64) -> Money {
        Money(units * 100)
    }

    pub fn cents(self) -> u64 {
        self.0
    }
}

impl std::ops::Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Money {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Money> {
        let r = parse_rational(s)
            .map_err(|_| CoreError::InvalidConfig(format!("invalid money amount {s:?}")))?;
        let cents = r * rat(100, 1);
        if !cents.is_integer() || cents < Rational::zero() {
            return Err(CoreError::InvalidConfig(format!("invalid money amount {s:?}")));
        }
        cents
            .to_integer()
            .try_into()
            .map(Money)
            .map_err(|_| CoreError::InvalidConfig(format!("invalid money amount {s:?}")))
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Whole(u64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Whole(n) => Ok(Money::units(n)),
        }
    }
}

/// Urn composition and payoffs. The defaults reproduce the laboratory design.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub risky_white_count: u32,
    pub risky_total: u32,
    pub prize: Money,
    pub show_up_fee: Money,
    pub info_draw_count: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            risky_white_count: 49,
            risky_total: 100,
            prize: Money::units(10),
            show_up_fee: Money::units(5),
            info_draw_count: 2,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.risky_white_count == 0 || self.risky_white_count >= self.risky_total {
            return Err(CoreError::InvalidConfig(format!(
                "risky urn needs 0 < white ({}) < total ({})",
                self.risky_white_count, self.risky_total
            )));
        }
        if self.prize.0 == 0 {
            return Err(CoreError::InvalidConfig("prize must be positive".into()));
        }
        if self.info_draw_count != 2 {
            return Err(CoreError::InvalidConfig(format!(
                "only two informational draws are supported, got {}",
                self.info_draw_count
            )));
        }
        Ok(())
    }

    /// Probability that the risky-urn ball is white.
    pub fn white_prob(&self) -> Rational {
        rat(self.risky_white_count.into(), self.risky_total.into())
    }
}

/// Share of green balls in the ambiguous urn, in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Rational);

impl State {
    pub fn new(omega: Rational) -> Result<State> {
        if omega < Rational::zero() || omega > Rational::one() {
            return Err(CoreError::OmegaOutOfRange(format_rational(&omega)));
        }
        Ok(State(omega))
    }

    pub fn ratio(num: i64, den: i64) -> Result<State> {
        State::new(rat(num, den))
    }

    /// Exact conversion of a finite `f64` (binary fractions are rational).
    pub fn from_f64(omega: f64) -> Result<State> {
        let r = Rational::from_float(omega)
            .ok_or_else(|| CoreError::OmegaOutOfRange(omega.to_string()))?;
        State::new(r)
    }

    pub fn omega(&self) -> &Rational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.0)
    }
}

impl FromStr for State {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<State> {
        State::new(parse_rational(s)?)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Number(x) => State::from_f64(x).map_err(serde::de::Error::custom),
        }
    }
}

/// Winning probability of a single bet in state `omega`.
pub fn bet_win_prob(bet: Bet, omega: &State, cfg: &ExperimentConfig) -> Rational {
    match bet {
        Bet::White => cfg.white_prob(),
        Bet::Green => omega.0.clone(),
        Bet::Yellow => Rational::one() - &omega.0,
    }
}

fn bet_poly(bet: Bet, cfg: &ExperimentConfig) -> Polynomial {
    match bet {
        Bet::White => Polynomial::constant(cfg.white_prob()),
        Bet::Green => Polynomial::x(),
        Bet::Yellow => Polynomial::one_minus_x(),
    }
}

/// `c0 + c1 w + c2 w^2 + c3 w^3` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActPolynomial([Rational; 4]);

impl ActPolynomial {
    pub fn new(coeffs: [Rational; 4]) -> Self {
        ActPolynomial(coeffs)
    }

    pub fn from_polynomial(p: &Polynomial) -> Result<Self> {
        match p.degree() {
            Some(d) if d > 3 => Err(CoreError::DegreeTooHigh(d)),
            _ => Ok(ActPolynomial([p.coeff(0), p.coeff(1), p.coeff(2), p.coeff(3)])),
        }
    }

    pub fn coeffs(&self) -> &[Rational; 4] {
        &self.0
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial::new(self.0.to_vec())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn eval(&self, omega: &Rational) -> Rational {
        self.0
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * omega + c)
    }

    pub fn eval_f64(&self, omega: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * omega + to_f64(c))
    }

    pub fn sub(&self, other: &ActPolynomial) -> ActPolynomial {
        ActPolynomial(std::array::from_fn(|k| &self.0[k] - &other.0[k]))
    }
}

impl fmt::Display for ActPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_polynomial())
    }
}

impl Serialize for ActPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = self.0.iter().map(format_rational).collect();
        strs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ActPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let strs = <[String; 4]>::deserialize(d)?;
        let mut out: [Rational; 4] = Default::default();
        for (slot, s) in out.iter_mut().zip(strs.iter()) {
            *slot = parse_rational(s).map_err(serde::de::Error::custom)?;
        }
        Ok(ActPolynomial(out))
    }
}

/// Winning probability of `rule` as a polynomial in `omega`.
pub fn induced_act(rule: &DecisionRule, cfg: &ExperimentConfig) -> ActPolynomial {
    let p = DrawOutcome::ALL
        .iter()
        .map(|&o| &o.weight() * &bet_poly(rule.bet(o), cfg))
        .fold(Polynomial::zero(), |acc, term| &acc + &term);
    ActPolynomial::from_polynomial(&p).expect("induced acts have degree at most 3")
}

pub fn evaluate_act(act: &ActPolynomial, omega: &State) -> Rational {
    act.eval(&omega.0)
}
