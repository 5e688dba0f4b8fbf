//! Finitely supported beliefs over the urn composition.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, Result};
use crate::model::{Bet, DecisionRule, DrawOutcome, ExperimentConfig, State};
use crate::model::{bet_win_prob, ActPolynomial};
use crate::rational::{format_rational, parse_rational, rat, Rational};

/// A nondegenerate prior with finite support.
///
/// Weights are positive and sum to one; point masses at `omega = 0` or
/// `omega = 1` are rejected.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prior {
    support: Vec<(State, Rational)>,
}

impl Prior {
    pub fn new(points: Vec<(State, Rational)>) -> Result<Prior> {
        if points.is_empty() {
            return Err(CoreError::InvalidPrior("empty support".into()));
        }
        let mut merged: BTreeMap<State, Rational> = BTreeMap::new();
        for (omega, w) in points {
            if w <= Rational::zero() {
                return Err(CoreError::InvalidPrior(format!(
                    "weight {} at omega {} is not positive",
                    format_rational(&w),
                    omega
                )));
            }
            *merged.entry(omega).or_insert_with(Rational::zero) += w;
        }
        let total: Rational = merged.values().sum();
        if !total.is_one() {
            return Err(CoreError::InvalidPrior(format!(
                "weights sum to {}, not 1",
                format_rational(&total)
            )));
        }
        if merged.len() == 1 {
            let omega = merged.keys().next().expect("one point").omega();
            if omega.is_zero() || omega.is_one() {
                return Err(CoreError::InvalidPrior(format!(
                    "point mass at omega = {omega} is degenerate"
                )));
            }
        }
        Ok(Prior {
            support: merged.into_iter().collect(),
        })
    }

    pub fn point_mass(omega: State) -> Result<Prior> {
        Prior::new(vec![(omega, Rational::one())])
    }

    /// `weight` on `a`, the rest on `b`.
    pub fn two_point(a: State, b: State, weight: Rational) -> Result<Prior> {
        if weight.is_one() {
            return Prior::point_mass(a);
        }
        let rest = Rational::one() - &weight;
        Prior::new(vec![(a, weight), (b, rest)])
    }

    /// Equal weights on the given states.
    pub fn uniform(states: Vec<State>) -> Result<Prior> {
        let w = rat(1, states.len().max(1) as i64);
        Prior::new(states.into_iter().map(|s| (s, w.clone())).collect())
    }

    pub fn support(&self) -> &[(State, Rational)] {
        &self.support
    }

    /// `E_mu[act(omega)]`, exact.
    pub fn expectation(&self, act: &ActPolynomial) -> Rational {
        self.support
            .iter()
            .map(|(s, w)| act.eval(s.omega()) * w)
            .sum()
    }

    /// Joint probability of seeing `outcome` and then winning with `bet`.
    pub fn outcome_bet_value(&self, outcome: DrawOutcome, bet: Bet, cfg: &ExperimentConfig) -> Rational {
        let weight = outcome.weight();
        self.support
            .iter()
            .map(|(s, w)| w * weight.eval(s.omega()) * bet_win_prob(bet, s, cfg))
            .sum()
    }

    /// Posterior mean of `omega` after `outcome`, if the outcome has positive
    /// probability.
    pub fn posterior_mean(&self, outcome: DrawOutcome) -> Option<Rational> {
        let weight = outcome.weight();
        let (num, den) = self.support.iter().fold(
            (Rational::zero(), Rational::zero()),
            |(num, den), (s, w)| {
                let l = weight.eval(s.omega()) * w;
                (num + &l * s.omega(), den + l)
            },
        );
        (!den.is_zero()).then(|| num / den)
    }

    /// Joint probability of each draw outcome and a win with each bet,
    /// indexed `[outcome][bet]`.
    pub fn outcome_bet_table(&self, cfg: &ExperimentConfig) -> [[Rational; 3]; 4] {
        let white = cfg.white_prob();
        let mut table: [[Rational; 3]; 4] = Default::default();
        for (s, w) in &self.support {
            let g = s.omega();
            let y = Rational::one() - g;
            let probs = [g * g, g * &y, &y * g, &y * &y];
            for (row, p) in table.iter_mut().zip(probs) {
                let base = p * w;
                row[0] += &base * g;
                row[1] += &base * &y;
                row[2] += &base * &white;
            }
        }
        table
    }

    /// Whether every draw outcome has positive probability.
    pub fn reaches_all_outcomes(&self) -> bool {
        self.support
            .iter()
            .any(|(s, _)| !s.omega().is_zero() && !s.omega().is_one())
    }

    /// For each outcome, the bets that maximize the conditional winning
    /// probability. The product of these sets is the set of optimal rules.
    pub fn optimal_bets(&self, cfg: &ExperimentConfig) -> [Vec<Bet>; 4] {
        let table = self.outcome_bet_table(cfg);
        std::array::from_fn(|o| {
            let best = table[o].iter().max().expect("three bets");
            Bet::ALL
                .iter()
                .zip(&table[o])
                .filter(|(_, v)| *v == best)
                .map(|(&b, _)| b)
                .collect()
        })
    }

    /// Whether `rule` weakly maximizes expected winning probability.
    pub fn is_optimal(&self, rule: &DecisionRule, cfg: &ExperimentConfig) -> bool {
        let best = self.optimal_bets(cfg);
        DrawOutcome::ALL
            .iter()
            .all(|&o| best[o.index()].contains(&rule.bet(o)))
    }

    /// Mirror image under `omega -> 1 - omega`.
    pub fn reflect(&self) -> Prior {
        let points = self
            .support
            .iter()
            .map(|(s, w)| {
                let mirrored = State::new(Rational::one() - s.omega()).expect("stays in [0,1]");
                (mirrored, w.clone())
            })
            .collect();
        Prior::new(points).expect("reflection preserves validity")
    }
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    omega: String,
    weight: String,
}

impl Serialize for Prior {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<RawPoint> = self
            .support
            .iter()
            .map(|(o, w)| RawPoint {
                omega: format_rational(o.omega()),
                weight: format_rational(w),
            })
            .collect();
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Prior {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = Vec::<RawPoint>::deserialize(d)?;
        let points = raw
            .into_iter()
            .map(|p| {
                let omega: State = p.omega.parse().map_err(D::Error::custom)?;
                let w = parse_rational(&p.weight).map_err(D::Error::custom)?;
                Ok((omega, w))
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        Prior::new(points).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(n: i64, d: i64) -> State {
        State::ratio(n, d).unwrap()
    }

    #[test]
    fn rejects_degenerate_and_malformed() {
        assert!(Prior::point_mass(st(0, 1)).is_err());
        assert!(Prior::point_mass(st(1, 1)).is_err());
        assert!(Prior::point_mass(st(1, 2)).is_ok());
        assert!(Prior::new(vec![(st(1, 4), rat(1, 2))]).is_err());
        assert!(Prior::new(vec![(st(1, 4), rat(3, 2)), (st(3, 4), rat(-1, 2))]).is_err());
        assert!(Prior::new(vec![]).is_err());
        // mass split between 0 and 1 is allowed
        assert!(Prior::uniform(vec![st(0, 1), st(1, 1)]).is_ok());
    }

    #[test]
    fn duplicate_points_merge() {
        let p = Prior::new(vec![(st(1, 2), rat(1, 2)), (st(1, 2), rat(1, 2))]).unwrap();
        assert_eq!(p.support().len(), 1);
    }

    #[test]
    fn posterior_means_move_with_evidence() {
        let p = Prior::uniform(vec![st(1, 4), st(3, 4)]).unwrap();
        let gg = p.posterior_mean(DrawOutcome::GG).unwrap();
        let gy = p.posterior_mean(DrawOutcome::GY).unwrap();
        let yy = p.posterior_mean(DrawOutcome::YY).unwrap();
        assert!(gg > gy && gy > yy);
        assert_eq!(gy, rat(1, 2));
    }

    #[test]
    fn json_round_trip() {
        let p = Prior::two_point(st(1, 10), st(9, 10), rat(1, 2)).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: Prior = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
        assert!(serde_json::from_str::<Prior>(r#"[{"omega":"0","weight":"1"}]"#).is_err());
    }
}
