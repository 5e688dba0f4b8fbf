//! Subjective expected utility, maxmin expected utility over an interval of
//! states, and smooth ambiguity with negative-exponential curvature, plus an
//! audit that a model never picks a dominated rule.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::classification::{dominance_certificate, Classifier, DominanceCertificate};
use crate::error::{CoreError, Result};
use crate::model::{enumerate_rules, induced_act, DecisionRule, ExperimentConfig, State};
use crate::prior::Prior;
use crate::rational::{format_rational, to_f64, Rational};
use crate::surd::{low_degree_real_roots, QuadraticSurd};

/// Tolerance for comparing values that are not both exact.
pub const TIE_EPSILON: f64 = 1e-9;

/// Worst case over every prior supported on `[lo, hi]`. Expectation is
/// linear in the prior, so the worst case is attained at a point mass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxminEu {
    #[serde(with = "crate::rational::serde_str")]
    pub lo: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub hi: Rational,
}

impl MaxminEu {
    pub fn new(lo: Rational, hi: Rational) -> Result<MaxminEu> {
        if lo < Rational::zero() || hi > Rational::one() || lo > hi {
            return Err(CoreError::InvalidModel(format!(
                "maxmin interval [{}, {}] must satisfy 0 <= lo <= hi <= 1",
                format_rational(&lo),
                format_rational(&hi)
            )));
        }
        Ok(MaxminEu { lo, hi })
    }

    /// All priors over `[0, 1]`.
    pub fn full() -> MaxminEu {
        MaxminEu {
            lo: Rational::zero(),
            hi: Rational::one(),
        }
    }

    pub fn contains(&self, omega: &Rational) -> bool {
        &self.lo <= omega && omega <= &self.hi
    }
}

/// One first-order prior inside a second-order belief.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedPrior {
    pub prior: Prior,
    #[serde(with = "crate::rational::serde_str")]
    pub weight: Rational,
}

/// `phi^-1( sum_i nu_i phi(E_{mu_i}[pi]) )` with `phi(x) = -exp(-x / theta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothAmbiguity {
    pub components: Vec<WeightedPrior>,
    pub theta: f64,
}

impl SmoothAmbiguity {
    pub fn new(components: Vec<(Prior, Rational)>, theta: f64) -> Result<SmoothAmbiguity> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(CoreError::InvalidModel(format!("curvature theta = {theta} must be positive")));
        }
        if components.is_empty() {
            return Err(CoreError::InvalidModel("second-order prior has empty support".into()));
        }
        if components.iter().any(|(_, w)| *w <= Rational::zero()) {
            return Err(CoreError::InvalidModel("second-order weights must be positive".into()));
        }
        let total: Rational = components.iter().map(|(_, w)| w).sum();
        if !total.is_one() {
            return Err(CoreError::InvalidModel(format!(
                "second-order weights sum to {}, not 1",
                format_rational(&total)
            )));
        }
        Ok(SmoothAmbiguity {
            components: components
                .into_iter()
                .map(|(prior, weight)| WeightedPrior { prior, weight })
                .collect(),
            theta,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PreferenceModel {
    Seu { prior: Prior },
    Maxmin(MaxminEu),
    Smooth(SmoothAmbiguity),
}

impl PreferenceModel {
    /// Value of `rule` under this model.
    pub fn value(&self, rule: &DecisionRule, cfg: &ExperimentConfig) -> ModelValue {
        match self {
            PreferenceModel::Seu { prior } => ModelValue::Exact(seu_value(prior, rule, cfg)),
            PreferenceModel::Maxmin(m) => ModelValue::Surd(maxmin_value(m, rule, cfg).value),
            PreferenceModel::Smooth(s) => ModelValue::Approx(smooth_value(s, rule, cfg)),
        }
    }

    /// Whether the model's aggregation puts positive weight strictly inside
    /// `(0, 1)` for every act (so dominance must show up strictly).
    pub fn weights_interior(&self) -> bool {
        let interior = |p: &Prior| {
            p.support()
                .iter()
                .any(|(s, _)| !s.omega().is_zero() && !s.omega().is_one())
        };
        match self {
            PreferenceModel::Seu { prior } => interior(prior),
            PreferenceModel::Maxmin(m) => m.lo > Rational::zero() && m.hi < Rational::one(),
            PreferenceModel::Smooth(s) => s.components.iter().any(|c| interior(&c.prior)),
        }
    }

    /// Image under the color swap `omega -> 1 - omega`.
    pub fn reflect(&self) -> PreferenceModel {
        match self {
            PreferenceModel::Seu { prior } => PreferenceModel::Seu { prior: prior.reflect() },
            PreferenceModel::Maxmin(m) => PreferenceModel::Maxmin(MaxminEu {
                lo: Rational::one() - &m.hi,
                hi: Rational::one() - &m.lo,
            }),
            PreferenceModel::Smooth(s) => PreferenceModel::Smooth(SmoothAmbiguity {
                components: s
                    .components
                    .iter()
                    .map(|c| WeightedPrior {
                        prior: c.prior.reflect(),
                        weight: c.weight.clone(),
                    })
                    .collect(),
                theta: s.theta,
            }),
        }
    }
}

impl fmt::Display for PreferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreferenceModel::Seu { prior } => {
                write!(f, "SEU{{")?;
                for (i, (s, w)) in prior.support().iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{s}: {w}")?;
                }
                write!(f, "}}")
            }
            PreferenceModel::Maxmin(m) => write!(f, "MaxminEU[{}, {}]", m.lo, m.hi),
            PreferenceModel::Smooth(s) => {
                write!(f, "Smooth(theta={}, {} components)", s.theta, s.components.len())
            }
        }
    }
}

/// A model value: exact rational, exact quadratic surd, or floating point.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelValue {
    Exact(Rational),
    Surd(QuadraticSurd),
    Approx(f64),
}

impl ModelValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ModelValue::Exact(r) => to_f64(r),
            ModelValue::Surd(s) => s.to_f64(),
            ModelValue::Approx(x) => *x,
        }
    }

    fn as_surd(&self) -> Option<QuadraticSurd> {
        match self {
            ModelValue::Exact(r) => Some(QuadraticSurd::rational(r.clone())),
            ModelValue::Surd(s) => Some(s.clone()),
            ModelValue::Approx(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, ModelValue::Approx(_))
    }

    /// Exact when both sides are exact and share a radicand, otherwise
    /// within [`TIE_EPSILON`].
    pub fn compare(&self, other: &ModelValue) -> Ordering {
        if let (Some(a), Some(b)) = (self.as_surd(), other.as_surd()) {
            if let Some(ord) = a.exact_cmp(&b) {
                return ord;
            }
        }
        let (a, b) = (self.to_f64(), other.to_f64());
        if (a - b).abs() <= TIE_EPSILON {
            Ordering::Equal
        } else if a < b {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl fmt::Display for ModelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelValue::Exact(r) => write!(f, "{r}"),
            ModelValue::Surd(s) => write!(f, "{s}"),
            ModelValue::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// `E_mu[pi(rule | omega)]`, exact.
pub fn seu_value(prior: &Prior, rule: &DecisionRule, cfg: &ExperimentConfig) -> Rational {
    prior.expectation(&induced_act(rule, cfg))
}

/// Worst-case winning probability and the smallest state attaining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxminValue {
    pub value: QuadraticSurd,
    pub argmin: QuadraticSurd,
}

/// Minimum of the act over `[lo, hi]`: the smaller of the endpoint values and
/// the values at real critical points inside the interval.
pub fn maxmin_value(model: &MaxminEu, rule: &DecisionRule, cfg: &ExperimentConfig) -> MaxminValue {
    let act = induced_act(rule, cfg).to_polynomial();
    let lo = QuadraticSurd::rational(model.lo.clone());
    let hi = QuadraticSurd::rational(model.hi.clone());
    let inside = |x: &QuadraticSurd| {
        x.exact_cmp(&lo) != Some(Ordering::Less) && x.exact_cmp(&hi) != Some(Ordering::Greater)
    };
    let mut candidates = vec![lo.clone()];
    candidates.extend(
        low_degree_real_roots(&act.derivative())
            .into_iter()
            .filter(|x| inside(x)),
    );
    candidates.push(hi.clone());
    let mut best: Option<MaxminValue> = None;
    for x in candidates {
        let v = QuadraticSurd::eval(&act, &x);
        let better = match &best {
            None => true,
            Some(b) => v.exact_cmp(&b.value).expect("one radicand per act") == Ordering::Less,
        };
        if better {
            best = Some(MaxminValue { value: v, argmin: x });
        }
    }
    best.expect("interval has endpoints")
}

/// Smooth-ambiguity certainty equivalent.
pub fn smooth_value(model: &SmoothAmbiguity, rule: &DecisionRule, cfg: &ExperimentConfig) -> f64 {
    let act = induced_act(rule, cfg);
    let parts: Vec<(f64, f64)> = model
        .components
        .iter()
        .map(|c| (to_f64(&c.prior.expectation(&act)), to_f64(&c.weight)))
        .collect();
    let floor = parts.iter().map(|(x, _)| *x).fold(f64::INFINITY, f64::min);
    // phi^-1(sum nu phi(x)) = m - theta ln(sum nu exp(-(x - m)/theta)), with
    // expm1/ln_1p keeping precision for large theta.
    let s: f64 = parts
        .iter()
        .map(|(x, w)| w * (-(x - floor) / model.theta).exp_m1())
        .sum();
    floor - model.theta * s.ln_1p()
}

/// All rules attaining the model's maximum value, ties included.
pub fn optimal_rules(model: &PreferenceModel, cfg: &ExperimentConfig) -> BTreeSet<DecisionRule> {
    let scored: Vec<(DecisionRule, ModelValue)> = enumerate_rules()
        .into_iter()
        .map(|r| {
            let v = model.value(&r, cfg);
            (r, v)
        })
        .collect();
    let best = scored
        .iter()
        .map(|(_, v)| v)
        .reduce(|a, b| if b.compare(a) == Ordering::Greater { b } else { a })
        .expect("81 rules");
    scored
        .iter()
        .filter(|(_, v)| v.compare(best) == Ordering::Equal)
        .map(|(r, _)| *r)
        .collect()
}

/// First rule of [`optimal_rules`] in enumeration order.
pub fn first_optimal_rule(model: &PreferenceModel, cfg: &ExperimentConfig) -> DecisionRule {
    *optimal_rules(model, cfg).iter().next().expect("nonempty optimum")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditViolation {
    pub rule: DecisionRule,
    pub certificate: Option<DominanceCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub model: String,
    pub optimal: Vec<DecisionRule>,
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that no optimal rule of `model` is dominated.
pub fn monotonicity_audit(model: &PreferenceModel, classifier: &Classifier) -> AuditReport {
    let cfg = classifier.config();
    let optimal = optimal_rules(model, cfg);
    let violations = optimal
        .iter()
        .filter(|r| classifier.is_dominated(r))
        .map(|r| AuditViolation {
            rule: *r,
            certificate: classifier
                .dominators(r)
                .first()
                .and_then(|better| dominance_certificate(better, r, cfg)),
        })
        .collect();
    AuditReport {
        model: model.to_string(),
        optimal: optimal.into_iter().collect(),
        violations,
    }
}

/// Point mass convenience used throughout the tests and CLI.
pub fn seu_point_mass(omega: State) -> Result<PreferenceModel> {
    Ok(PreferenceModel::Seu {
        prior: Prior::point_mass(omega)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn rule(code: &str) -> DecisionRule {
        code.parse().unwrap()
    }

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::default()
    }

    fn st(n: i64, d: i64) -> State {
        State::ratio(n, d).unwrap()
    }

    fn codes(set: &BTreeSet<DecisionRule>) -> Vec<String> {
        set.iter().map(|r| r.code()).collect()
    }

    #[test]
    fn seu_examples() {
        let prior = Prior::uniform(vec![st(1, 4), st(3, 4)]).unwrap();
        assert_eq!(seu_value(&prior, &rule("GGYY"), &cfg()), rat(5, 8));
        assert_eq!(seu_value(&prior, &rule("WWWW"), &cfg()), rat(49, 100));
        let third = Prior::point_mass(st(1, 3)).unwrap();
        assert_eq!(seu_value(&third, &rule("GGGY"), &cfg()), rat(13, 27));
    }

    #[test]
    fn maxmin_examples() {
        let full = MaxminEu::full();
        let ggyy = maxmin_value(&full, &rule("GGYY"), &cfg());
        assert_eq!(ggyy.value.as_rational(), Some(&rat(1, 2)));
        assert_eq!(ggyy.argmin.as_rational(), Some(&rat(1, 2)));
        let wwww = maxmin_value(&full, &rule("WWWW"), &cfg());
        assert_eq!(wwww.value.as_rational(), Some(&rat(49, 100)));
        let gggg = maxmin_value(&full, &rule("GGGG"), &cfg());
        assert_eq!(gggg.value.as_rational(), Some(&rat(0, 1)));
        assert_eq!(gggg.argmin.as_rational(), Some(&rat(0, 1)));
    }

    #[test]
    fn maxmin_gggy_irrational_minimum() {
        let v = maxmin_value(&MaxminEu::full(), &rule("GGGY"), &cfg());
        assert!(!v.value.is_rational());
        let argmin = (5.0 - 7f64.sqrt()) / 6.0;
        assert!((v.argmin.to_f64() - argmin).abs() < 1e-15);
        // independent grid oracle on 10^6 points
        let f = |w: f64| w.powi(3) + 2.0 * w * w * (1.0 - w) + (1.0 - w).powi(3);
        let grid_min = (0..=1_000_000)
            .map(|i| f(i as f64 / 1e6))
            .fold(f64::INFINITY, f64::min);
        assert!((v.value.to_f64() - grid_min).abs() < 1e-9);
        assert!((v.value.to_f64() - 0.4718).abs() < 5e-5);
    }

    #[test]
    fn maxmin_optimum_and_interval_validation() {
        let opt = optimal_rules(&PreferenceModel::Maxmin(MaxminEu::full()), &cfg());
        assert_eq!(codes(&opt), ["GGYY", "GYGY"]);
        assert!(MaxminEu::new(rat(1, 2), rat(1, 4)).is_err());
        assert!(MaxminEu::new(rat(-1, 2), rat(1, 4)).is_err());
    }

    #[test]
    fn seu_optima() {
        let near_one = seu_point_mass("0.9".parse().unwrap()).unwrap();
        assert_eq!(codes(&optimal_rules(&near_one, &cfg())), ["GGGG"]);
        let symmetric = PreferenceModel::Seu {
            prior: Prior::uniform(vec!["0.1".parse().unwrap(), "0.9".parse().unwrap()]).unwrap(),
        };
        let opt = optimal_rules(&symmetric, &cfg());
        assert!(opt.contains(&rule("GGYY")) && opt.contains(&rule("GYGY")));
    }

    #[test]
    fn smooth_collapses_to_seu_under_certainty() {
        let prior = Prior::uniform(vec![st(1, 4), st(3, 4)]).unwrap();
        let model = SmoothAmbiguity::new(vec![(prior.clone(), rat(1, 1))], 0.7).unwrap();
        for code in ["GGYY", "GGGY", "WWWW", "GWWY"] {
            let expected = to_f64(&seu_value(&prior, &rule(code), &cfg()));
            assert!((smooth_value(&model, &rule(code), &cfg()) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_large_theta_tends_to_mean() {
        let comps = vec![
            (Prior::point_mass(st(1, 4)).unwrap(), rat(1, 3)),
            (Prior::point_mass(st(1, 2)).unwrap(), rat(1, 3)),
            (Prior::point_mass(st(9, 10)).unwrap(), rat(1, 3)),
        ];
        let model = SmoothAmbiguity::new(comps.clone(), 1e6).unwrap();
        let r = rule("GGYY");
        let mean: f64 = comps
            .iter()
            .map(|(p, w)| to_f64(&seu_value(p, &r, &cfg())) * to_f64(w))
            .sum();
        // series: value = mean - var / (2 theta) + O(theta^-2)
        assert!((smooth_value(&model, &r, &cfg()) - mean).abs() < 1e-6);
        let wwww = smooth_value(&model, &rule("WWWW"), &cfg());
        assert!((wwww - 0.49).abs() < 1e-12);
    }

    #[test]
    fn smooth_rejects_bad_parameters() {
        let p = Prior::point_mass(st(1, 2)).unwrap();
        assert!(SmoothAmbiguity::new(vec![(p.clone(), rat(1, 1))], 0.0).is_err());
        assert!(SmoothAmbiguity::new(vec![(p.clone(), rat(1, 2))], 1.0).is_err());
        assert!(SmoothAmbiguity::new(vec![], 1.0).is_err());
    }

    #[test]
    fn audits_pass_for_classical_models() {
        let c = Classifier::new(&cfg());
        assert!(monotonicity_audit(&PreferenceModel::Maxmin(MaxminEu::full()), &c).passed());
        let seu = seu_point_mass(st(1, 2)).unwrap();
        let report = monotonicity_audit(&seu, &c);
        assert!(report.passed());
        assert_eq!(report.optimal.len(), 16);
    }

    #[test]
    fn model_json_round_trip() {
        let m = PreferenceModel::Maxmin(MaxminEu::new(rat(1, 4), rat(3, 4)).unwrap());
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"model":"maxmin","lo":"1/4","hi":"3/4"}"#);
        assert_eq!(serde_json::from_str::<PreferenceModel>(&json).unwrap(), m);
    }
}
