//! Dominance between decision rules and the Bayesian / undominated /
//! dominated partition of the 81 rules.
//!
//! Rule `better` dominates `worse` when the difference of their acts is
//! nonnegative on `[0, 1]` and strictly positive on `(0, 1)`. The difference
//! is a rational polynomial of degree at most three, so the decision is made
//! exactly: the difference must be nonzero, positive at `1/2`, and have no
//! real root strictly inside the unit interval (Sturm count).

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{enumerate_rules, induced_act, ActPolynomial, Bet, DecisionRule, DrawOutcome, ExperimentConfig, State};
use crate::poly::{Polynomial, Sign, SignAnalysis};
use crate::prior::Prior;
use crate::rational::{rat, Rational};

/// Class of a rule: `S`, `N\S`, or `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleClass {
    Bayesian,
    UndominatedNonBayesian,
    Dominated,
}

impl RuleClass {
    pub fn label(self) -> &'static str {
        match self {
            RuleClass::Bayesian => "S",
            RuleClass::UndominatedNonBayesian => "N\\S",
            RuleClass::Dominated => "D",
        }
    }
}

impl fmt::Display for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How a dominating rule was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `GG -> G` together with a mixed outcome (`GY` or `YG`) `-> Y`,
    /// replacing two White bets.
    GreenPureWithMixed { mixed: DrawOutcome },
    /// `YY -> Y` together with a mixed outcome `-> G`.
    YellowPureWithMixed { mixed: DrawOutcome },
    /// `GY -> G`, `YG -> Y`.
    BothMixed,
    /// `GG -> G`, `YY -> Y`.
    BothPure,
    /// First dominating rule found by exhaustive scan.
    Scan,
}

impl Construction {
    /// Case number of the four-case argument, `None` for a scan result.
    pub fn case_number(self) -> Option<u8> {
        match self {
            Construction::GreenPureWithMixed { .. } => Some(1),
            Construction::YellowPureWithMixed { .. } => Some(2),
            Construction::BothMixed => Some(3),
            Construction::BothPure => Some(4),
            Construction::Scan => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceCertificate {
    pub dominating_rule: DecisionRule,
    pub dominated_rule: DecisionRule,
    pub construction: Construction,
    pub difference_polynomial: ActPolynomial,
    pub root_analysis: SignAnalysis,
}

/// `act(better) - act(worse)`, coefficient-wise.
pub fn improvement_delta(better: &DecisionRule, worse: &DecisionRule, cfg: &ExperimentConfig) -> ActPolynomial {
    induced_act(better, cfg).sub(&induced_act(worse, cfg))
}

/// Exact dominance test on a precomputed difference polynomial.
pub fn difference_dominates(delta: &Polynomial) -> bool {
    if delta.is_zero() {
        return false;
    }
    let zero = Rational::zero();
    let one = Rational::one();
    // Cheap necessary conditions before the Sturm count.
    for probe in [rat(1, 2), rat(1, 4), rat(3, 4)] {
        if delta.sign_at(&probe) != Sign::Positive {
            return false;
        }
    }
    let closed = delta.count_distinct_roots(&zero, &one);
    let at_ends = usize::from(delta.eval(&zero).is_zero()) + usize::from(delta.eval(&one).is_zero());
    closed == at_ends
}

pub fn dominates(better: &DecisionRule, worse: &DecisionRule, cfg: &ExperimentConfig) -> bool {
    difference_dominates(&improvement_delta(better, worse, cfg).to_polynomial())
}

/// Dominance test that also returns the certificate on success.
pub fn dominance_certificate(
    better: &DecisionRule,
    worse: &DecisionRule,
    cfg: &ExperimentConfig,
) -> Option<DominanceCertificate> {
    let delta = improvement_delta(better, worse, cfg);
    let p = delta.to_polynomial();
    difference_dominates(&p).then(|| DominanceCertificate {
        dominating_rule: *better,
        dominated_rule: *worse,
        construction: Construction::Scan,
        root_analysis: p.sign_analysis(&Rational::zero(), &Rational::one()),
        difference_polynomial: delta,
    })
}

/// Dominating rule given by the four-case argument for rules with at least
/// two White bets. `None` when the rule has fewer than two.
pub fn case_dominator(rule: &DecisionRule) -> Option<(DecisionRule, Construction)> {
    use DrawOutcome::{GG, GY, YG, YY};
    let white = |o: DrawOutcome| rule.bet(o) == Bet::White;
    let replace = |a: (DrawOutcome, Bet), b: (DrawOutcome, Bet)| rule.with(a.0, a.1).with(b.0, b.1);
    if white(GY) && white(YG) {
        return Some((replace((GY, Bet::Green), (YG, Bet::Yellow)), Construction::BothMixed));
    }
    for mixed in [GY, YG] {
        if white(GG) && white(mixed) {
            return Some((
                replace((GG, Bet::Green), (mixed, Bet::Yellow)),
                Construction::GreenPureWithMixed { mixed },
            ));
        }
    }
    for mixed in [YG, GY] {
        if white(YY) && white(mixed) {
            return Some((
                replace((YY, Bet::Yellow), (mixed, Bet::Green)),
                Construction::YellowPureWithMixed { mixed },
            ));
        }
    }
    if white(GG) && white(YY) {
        return Some((replace((GG, Bet::Green), (YY, Bet::Yellow)), Construction::BothPure));
    }
    None
}

/// Structural test for membership in the Bayesian set: no White bet, and the
/// bet moves weakly from Green to Yellow as the number of yellow draws rises
/// (`GG <= GY <= YY` and `GG <= YG <= YY` with `G < Y`).
pub fn is_bayesian(rule: &DecisionRule) -> bool {
    use DrawOutcome::{GG, GY, YG, YY};
    if rule.white_count() > 0 {
        return false;
    }
    let b = |o| rule.bet(o);
    b(GG) <= b(GY) && b(GG) <= b(YG) && b(GY) <= b(YY) && b(YG) <= b(YY)
}

/// A prior under which a rule maximizes expected winning probability.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorCertificate {
    pub prior: Prior,
    /// The rule is the only maximizer (not just one of several).
    pub unique: bool,
}

/// Grid resolution of the certificate search: support points and weights are
/// multiples of `1/CERTIFICATE_GRID`.
pub const CERTIFICATE_GRID: i64 = 20;

/// Searches point masses and two-point priors on a `1/20` grid, in a fixed
/// order, for a prior under which `rule` is optimal. Priors under which some
/// draw outcome has probability zero are skipped: every bet ties there. A
/// prior making the rule the unique optimum is preferred over one where it
/// merely ties.
pub fn prior_certificate(rule: &DecisionRule, cfg: &ExperimentConfig) -> Option<PriorCertificate> {
    let mut weak: Option<GridPrior> = None;
    for spec in grid_priors() {
        if spec.iter().all(|&(k, _)| k == 0 || k == CERTIFICATE_GRID) {
            continue;
        }
        let best = grid_optimal_bets(&spec, cfg);
        let optimal = DrawOutcome::ALL
            .iter()
            .all(|&o| best[o.index()].contains(&rule.bet(o)));
        if !optimal {
            continue;
        }
        if best.iter().all(|b| b.len() == 1) {
            return Some(PriorCertificate {
                prior: grid_prior(&spec),
                unique: true,
            });
        }
        weak.get_or_insert(spec);
    }
    weak.map(|spec| PriorCertificate {
        prior: grid_prior(&spec),
        unique: false,
    })
}

/// Support as `(k, weight)` pairs meaning `omega = k/20` with mass `weight/20`.
type GridPrior = Vec<(i64, i64)>;

fn grid_priors() -> impl Iterator<Item = GridPrior> {
    let n = CERTIFICATE_GRID;
    let point_masses = (1..n).map(move |k| vec![(k, n)]);
    let two_point = (0..=n).flat_map(move |a| {
        (a + 1..=n).flat_map(move |b| (1..n).map(move |w| vec![(a, w), (b, n - w)]))
    });
    point_masses.chain(two_point)
}

fn grid_prior(spec: &GridPrior) -> Prior {
    let n = CERTIFICATE_GRID;
    Prior::new(
        spec.iter()
            .map(|&(k, w)| (State::ratio(k, n).expect("grid point"), rat(w, n)))
            .collect(),
    )
    .expect("grid priors are valid")
}

/// Same result as [`Prior::optimal_bets`], in scaled integer arithmetic.
fn grid_optimal_bets(spec: &GridPrior, cfg: &ExperimentConfig) -> [Vec<Bet>; 4] {
    let n = i128::from(CERTIFICATE_GRID);
    let total = i128::from(cfg.risky_total);
    let white = i128::from(cfg.risky_white_count);
    let mut table = [[0i128; 3]; 4];
    for &(k, w) in spec {
        let (g, y, w) = (i128::from(k), n - i128::from(k), i128::from(w));
        for (row, p) in table.iter_mut().zip([g * g, g * y, y * g, y * y]) {
            row[0] += w * p * g * total;
            row[1] += w * p * y * total;
            row[2] += w * p * n * white;
        }
    }
    table.map(|row| {
        let best = *row.iter().max().expect("three bets");
        Bet::ALL
            .iter()
            .zip(row)
            .filter(|(_, v)| *v == best)
            .map(|(&b, _)| b)
            .collect()
    })
}

/// The declared certificate family, in search order.
pub fn certificate_priors() -> impl Iterator<Item = Prior> {
    grid_priors().map(|spec| grid_prior(&spec))
}

/// Rules that tie for optimality under the point mass at `omega = 1/2`.
/// Every rule without a White bet is in this set.
pub fn knife_edge_tie_set(cfg: &ExperimentConfig) -> BTreeSet<DecisionRule> {
    let prior = Prior::point_mass(State::ratio(1, 2).expect("1/2")).expect("interior");
    enumerate_rules()
        .into_iter()
        .filter(|r| prior.is_optimal(r, cfg))
        .collect()
}

pub fn bayesian_set() -> BTreeSet<DecisionRule> {
    enumerate_rules().into_iter().filter(is_bayesian).collect()
}

/// One line of a classification report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifiedRule {
    pub rule: DecisionRule,
    pub class: RuleClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominated_by: Option<DecisionRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub construction: Option<Construction>,
}

impl fmt::Display for ClassifiedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.rule, self.class)?;
        if let Some(by) = self.dominated_by {
            write!(f, " dominated-by {by}")?;
        }
        Ok(())
    }
}

/// Dominance relation over all 81 rules for one configuration.
#[derive(Clone, Debug)]
pub struct Classifier {
    cfg: ExperimentConfig,
    acts: Vec<ActPolynomial>,
    /// `matrix[i][j]`: rule `i` dominates rule `j`.
    matrix: Vec<Vec<bool>>,
}

impl Classifier {
    /// Runs the full 81×80 scan.
    pub fn new(cfg: &ExperimentConfig) -> Classifier {
        let rules = enumerate_rules();
        let acts: Vec<ActPolynomial> = rules.iter().map(|r| induced_act(r, cfg)).collect();
        let polys: Vec<Polynomial> = acts.iter().map(ActPolynomial::to_polynomial).collect();
        let matrix = (0..rules.len())
            .map(|i| {
                (0..rules.len())
                    .map(|j| i != j && difference_dominates(&(&polys[i] - &polys[j])))
                    .collect()
            })
            .collect();
        Classifier {
            cfg: cfg.clone(),
            acts,
            matrix,
        }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn act(&self, rule: &DecisionRule) -> &ActPolynomial {
        &self.acts[rule.index()]
    }

    pub fn dominates(&self, better: &DecisionRule, worse: &DecisionRule) -> bool {
        self.matrix[better.index()][worse.index()]
    }

    /// Rules dominating `rule`, in enumeration order.
    pub fn dominators(&self, rule: &DecisionRule) -> Vec<DecisionRule> {
        let j = rule.index();
        (0..self.matrix.len())
            .filter(|&i| self.matrix[i][j])
            .map(DecisionRule::from_index)
            .collect()
    }

    pub fn is_dominated(&self, rule: &DecisionRule) -> bool {
        let j = rule.index();
        self.matrix.iter().any(|row| row[j])
    }

    pub fn dominated_set(&self) -> BTreeSet<DecisionRule> {
        enumerate_rules().into_iter().filter(|r| self.is_dominated(r)).collect()
    }

    pub fn undominated_set(&self) -> BTreeSet<DecisionRule> {
        enumerate_rules().into_iter().filter(|r| !self.is_dominated(r)).collect()
    }

    pub fn classify(&self, rule: &DecisionRule) -> RuleClass {
        if self.is_dominated(rule) {
            RuleClass::Dominated
        } else if is_bayesian(rule) {
            RuleClass::Bayesian
        } else {
            RuleClass::UndominatedNonBayesian
        }
    }

    /// Certificate for a dominated rule: the four-case construction when the
    /// rule has two or more White bets, otherwise the first dominator found.
    pub fn certificate(&self, rule: &DecisionRule) -> Option<DominanceCertificate> {
        if let Some((better, construction)) = case_dominator(rule) {
            if let Some(mut cert) = dominance_certificate(&better, rule, &self.cfg) {
                cert.construction = construction;
                return Some(cert);
            }
        }
        let better = self.dominators(rule).into_iter().next()?;
        dominance_certificate(&better, rule, &self.cfg)
    }

    pub fn classify_entry(&self, rule: &DecisionRule) -> ClassifiedRule {
        let class = self.classify(rule);
        let cert = (class == RuleClass::Dominated).then(|| self.certificate(rule)).flatten();
        ClassifiedRule {
            rule: *rule,
            class,
            dominated_by: cert.as_ref().map(|c| c.dominating_rule),
            construction: cert.map(|c| c.construction),
        }
    }

    pub fn report(&self) -> Vec<ClassifiedRule> {
        enumerate_rules().iter().map(|r| self.classify_entry(r)).collect()
    }
}
