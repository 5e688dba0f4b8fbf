use ellsberg_core::classification::{bayesian_set, Classifier, RuleClass};
use ellsberg_core::preference::{optimal_rules, seu_value, smooth_value, MaxminEu, PreferenceModel, SmoothAmbiguity};
use ellsberg_core::prior::Prior;
use ellsberg_core::rational::rat;
use ellsberg_core::{enumerate_rules, induced_act, DecisionRule, ExperimentConfig, State};
use proptest::prelude::*;
use std::sync::OnceLock;

fn classifier() -> &'static Classifier {
    static C: OnceLock<Classifier> = OnceLock::new();
    C.get_or_init(|| Classifier::new(&ExperimentConfig::default()))
}

#[test]
fn dominance_is_a_strict_partial_order() {
    let c = classifier();
    let rules = enumerate_rules();
    for a in &rules {
        assert!(!c.dominates(a, a), "{a} dominates itself");
        for b in &rules {
            if c.dominates(a, b) {
                assert!(!c.dominates(b, a), "{a} and {b} dominate each other");
                for d in &rules {
                    if c.dominates(b, d) {
                        assert!(c.dominates(a, d), "{a} > {b} > {d} but not {a} > {d}");
                    }
                }
            }
        }
    }
}

#[test]
fn dominance_commutes_with_color_swap() {
    let c = classifier();
    for a in enumerate_rules() {
        for b in enumerate_rules() {
            assert_eq!(c.dominates(&a, &b), c.dominates(&a.swap_colors(), &b.swap_colors()));
        }
        assert_eq!(c.classify(&a), c.classify(&a.swap_colors()));
    }
}

/// Floating-point sampling on 10^4 + 1 grid points agrees with the exact
/// Sturm-based decision for every ordered pair.
#[test]
fn grid_sampling_oracle_agrees_with_exact_dominance() {
    let cfg = ExperimentConfig::default();
    let c = classifier();
    let rules = enumerate_rules();
    let coeffs: Vec<[f64; 4]> = rules
        .iter()
        .map(|r| induced_act(r, &cfg).coeffs().clone().map(|q| ellsberg_core::rational::to_f64(&q)))
        .collect();
    const N: usize = 10_000;
    const TOL: f64 = 1e-12;
    for (i, a) in rules.iter().enumerate() {
        for (j, b) in rules.iter().enumerate() {
            if i == j {
                continue;
            }
            let d: Vec<f64> = (0..4).map(|k| coeffs[i][k] - coeffs[j][k]).collect();
            let delta = |w: f64| d[0] + w * (d[1] + w * (d[2] + w * d[3]));
            let ends_ok = delta(0.0) >= -TOL && delta(1.0) >= -TOL;
            let interior_ok = (1..N).all(|k| delta(k as f64 / N as f64) > TOL);
            assert_eq!(ends_ok && interior_ok, c.dominates(a, b), "{a} vs {b}");
        }
    }
}

#[test]
fn partition_sizes() {
    let c = classifier();
    let count = |class| enumerate_rules().iter().filter(|r| c.classify(r) == class).count();
    assert_eq!(count(RuleClass::Dominated), 33);
    assert_eq!(count(RuleClass::Bayesian), 6);
    assert_eq!(count(RuleClass::UndominatedNonBayesian), 42);
    for r in enumerate_rules() {
        assert_eq!(c.is_dominated(&r), r.white_count() >= 2, "{r}");
    }
    assert!(bayesian_set().iter().all(|r| !c.is_dominated(r)));
}

fn interior_prior() -> impl Strategy<Value = Prior> {
    prop::collection::vec((1i64..100, 1i64..20), 1..4).prop_map(|pts| {
        let total: i64 = pts.iter().map(|(_, w)| w).sum();
        Prior::new(
            pts.into_iter()
                .map(|(k, w)| (State::ratio(k, 100).unwrap(), rat(w, total)))
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seu_never_picks_a_dominated_rule(prior in interior_prior()) {
        let cfg = ExperimentConfig::default();
        let c = classifier();
        for r in optimal_rules(&PreferenceModel::Seu { prior: prior.clone() }, &cfg) {
            prop_assert!(!c.is_dominated(&r), "{} optimal under {:?}", r, prior);
        }
        for a in enumerate_rules() {
            for b in c.dominators(&a) {
                prop_assert!(seu_value(&prior, &b, &cfg) > seu_value(&prior, &a, &cfg));
            }
        }
    }

    #[test]
    fn maxmin_is_weakly_monotone_and_below_seu(lo in 0i64..=50, width in 0i64..=50, prior in interior_prior()) {
        let cfg = ExperimentConfig::default();
        let interval = MaxminEu::new(rat(lo, 100), rat(lo + width, 100)).unwrap();
        let model = PreferenceModel::Maxmin(interval.clone());
        let c = classifier();
        for a in enumerate_rules() {
            let va = model.value(&a, &cfg);
            for b in c.dominators(&a) {
                prop_assert!(model.value(&b, &cfg).compare(&va).is_ge());
            }
        }
        // a prior inside the interval can only raise the value
        if prior.support().iter().all(|(s, _)| interval.contains(s.omega())) {
            for r in enumerate_rules() {
                let mm = model.value(&r, &cfg).to_f64();
                prop_assert!(mm <= ellsberg_core::rational::to_f64(&seu_value(&prior, &r, &cfg)) + 1e-12);
            }
        }
    }

    #[test]
    fn smooth_is_monotone(p in interior_prior(), q in interior_prior(), theta in 0.05f64..5.0) {
        let cfg = ExperimentConfig::default();
        let model = SmoothAmbiguity::new(vec![(p, rat(1, 3)), (q, rat(2, 3))], theta).unwrap();
        let c = classifier();
        for a in enumerate_rules() {
            for b in c.dominators(&a) {
                prop_assert!(smooth_value(&model, &b, &cfg) > smooth_value(&model, &a, &cfg));
            }
        }
    }
}

#[test]
fn rule_parse_rejects_garbage() {
    for bad in ["", "GGG", "GGGGG", "GXGY", "ggyy"] {
        assert!(bad.parse::<DecisionRule>().is_err(), "{bad}");
    }
}
