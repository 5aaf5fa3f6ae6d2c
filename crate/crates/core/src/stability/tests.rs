use super::*;
use crate::formula::{parse_term, Registry};
use crate::solver::decide;

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn scalar(label: &str, var: &str, rhs: &str) -> Arc<OdeSystem> {
    Arc::new(
        OdeSystem::builder(label)
            .state(var, -2.0, 2.0)
            .rhs(var, parse_term(rhs, &Registry::new()).unwrap())
            .build()
            .unwrap(),
    )
}

fn decay() -> Arc<OdeSystem> {
    scalar("decay", "x", "-x")
}

#[test]
fn prefixes_match_the_complexity_classes() {
    let pr = StabilityParams::new(q(1, 100));
    let s = decay();
    assert_eq!(
        classify(&encode_lyapunov(&s, &pr).unwrap()).class,
        Alternation::Pi(3)
    );
    assert_eq!(
        classify(&encode_asymptotic(&s, &pr).unwrap()).class,
        Alternation::Sigma(4)
    );
    assert_eq!(
        classify(&encode_asymptotic_in_large(&s, &pr).unwrap()).class,
        Alternation::Pi(3)
    );
    let c = LyapunovCandidate {
        template: parse_term("p * x^2", &Registry::new()).unwrap(),
        gradient: None,
        params: vec![(name("p"), q(1, 2), q(2, 1))],
        region: None,
        exclusion: q(1, 10),
        strict: false,
    };
    assert_eq!(
        classify(&encode_lyapunov_candidate(&s, &c).unwrap()).class,
        Alternation::Sigma(2)
    );
    // the negation has the dual prefix
    assert_eq!(
        classify(&encode_lyapunov(&s, &pr).unwrap().negate()).class,
        Alternation::Sigma(3)
    );
}

#[test]
fn asymptotic_extends_the_lyapunov_sentence() {
    let pr = StabilityParams::new(q(1, 100));
    let s = decay();
    let l = encode_lyapunov(&s, &pr).unwrap();
    match encode_asymptotic(&s, &pr).unwrap() {
        Formula::And(parts) => {
            assert_eq!(parts.len(), 2);
            assert_eq!(parts[0], l);
        }
        other => panic!("expected a conjunction, got {}", other),
    }
}

#[test]
fn sentences_are_closed() {
    let pr = StabilityParams::new(q(1, 100));
    let osc = Arc::new(
        OdeSystem::builder("osc")
            .state("x", -2.0, 2.0)
            .state("v", -2.0, 2.0)
            .rhs("x", parse_term("v", &Registry::new()).unwrap())
            .rhs("v", parse_term("-x", &Registry::new()).unwrap())
            .build()
            .unwrap(),
    );
    for kind in [
        StabilityKind::Lyapunov,
        StabilityKind::Asymptotic,
        StabilityKind::AsymptoticInLarge,
    ] {
        let f = encode(&osc, kind, &pr).unwrap();
        assert!(f.free_vars().is_empty(), "{:?}", kind);
    }
}

#[test]
fn parameter_checks() {
    let s = decay();
    let base = StabilityParams::new(q(1, 100));
    let bad = [
        StabilityParams {
            eps_min: q(1, 100),
            ..base.clone()
        },
        StabilityParams {
            delta_floor: q(0, 1),
            ..base.clone()
        },
        StabilityParams {
            delta_floor: q(1, 10),
            ..base.clone()
        },
        StabilityParams {
            time_bound: q(0, 1),
            ..base.clone()
        },
        StabilityParams {
            eps_max: q(1, 50),
            ..base.clone()
        },
        StabilityParams {
            region: Some(vec![(q(-3, 1), q(1, 1))]),
            ..base.clone()
        },
        StabilityParams {
            region: Some(vec![]),
            ..base.clone()
        },
    ];
    for pr in &bad {
        assert!(encode_lyapunov(&s, pr).is_err(), "{:?}", pr);
    }
    let conv_bad = [
        StabilityParams {
            conv_floor: q(2, 1),
            ..base.clone()
        },
        StabilityParams {
            conv_eps_min: q(1, 100),
            ..base.clone()
        },
        StabilityParams {
            conv_window: q(6, 1),
            ..base.clone()
        },
        StabilityParams {
            conv_time: Some(q(0, 1)),
            ..base.clone()
        },
    ];
    for pr in &conv_bad {
        assert!(encode_lyapunov(&s, pr).is_ok());
        assert!(encode_asymptotic(&s, pr).is_err(), "{:?}", pr);
    }
    let sub = StabilityParams {
        region: Some(vec![(q(-1, 1), q(1, 2))]),
        ..base
    };
    assert!(encode_lyapunov(&s, &sub).is_ok());
}

#[test]
fn reserved_state_names_are_rejected() {
    let pr = StabilityParams::new(q(1, 100));
    assert!(encode_lyapunov(&scalar("e", "eps", "-eps"), &pr).is_err());
    assert!(encode_lyapunov(&scalar("t", "t", "-t"), &pr).is_err());
    let two = Arc::new(
        OdeSystem::builder("clash")
            .state("x", -2.0, 2.0)
            .state("x0", -2.0, 2.0)
            .rhs("x", parse_term("-x", &Registry::new()).unwrap())
            .rhs("x0", parse_term("-x0", &Registry::new()).unwrap())
            .build()
            .unwrap(),
    );
    assert!(encode_lyapunov(&two, &pr).is_err());
}

fn limit(f: &str, target: LimitTarget, c: Rational) -> Answer {
    let f = parse_term(f, &Registry::new()).unwrap();
    let s = encode_limit(
        &f,
        "x",
        &target,
        &c,
        (&q(1, 10), &q(1, 1)),
        (&q(1, 1000), &q(1, 2)),
    );
    decide(&s, &SolverConfig::new(q(1, 100))).unwrap().answer
}

#[test]
fn limit_at_a_point() {
    assert_eq!(
        limit("x", LimitTarget::Point(q(1, 1)), q(1, 1)),
        Answer::DeltaTrue
    );
    assert_eq!(
        limit("x", LimitTarget::Point(q(1, 1)), q(2, 1)),
        Answer::ExactFalse
    );
    assert_eq!(
        limit("x^2", LimitTarget::LeftOf(q(1, 1)), q(1, 1)),
        Answer::DeltaTrue
    );
    assert_eq!(
        limit("x^2", LimitTarget::LeftOf(q(1, 1)), q(0, 1)),
        Answer::ExactFalse
    );
}

#[test]
fn limit_toward_the_horizon_uses_the_tail_variable() {
    let f = parse_term("exp(-x)", &Registry::new()).unwrap();
    let s = encode_limit(
        &f,
        "x",
        &LimitTarget::Horizon(q(20, 1)),
        &q(0, 1),
        (&q(1, 10), &q(1, 1)),
        (&q(0, 1), &q(10, 1)),
    );
    // the function is applied to x', not to the outer x
    let mut seen = false;
    s.for_each_atom(&mut |t, _| seen |= t.mentions("x'") && !t.mentions("x"));
    assert!(seen, "{}", s);
    let cfg = SolverConfig::new(q(1, 100));
    assert_eq!(decide(&s, &cfg).unwrap().answer, Answer::DeltaTrue);
    let wrong = encode_limit(
        &f,
        "x",
        &LimitTarget::Horizon(q(20, 1)),
        &q(1, 1),
        (&q(1, 10), &q(1, 1)),
        (&q(0, 1), &q(10, 1)),
    );
    assert_eq!(decide(&wrong, &cfg).unwrap().answer, Answer::ExactFalse);
}

#[test]
fn supplied_gradients_are_checked() {
    let s = scalar("cubic", "x", "-x^3");
    let reg = Registry::new();
    let mut c = LyapunovCandidate {
        template: parse_term("p * x^2", &reg).unwrap(),
        gradient: Some(vec![parse_term("2 * p * x", &reg).unwrap()]),
        params: vec![(name("p"), q(1, 2), q(2, 1))],
        region: Some(vec![(q(-1, 1), q(1, 1))]),
        exclusion: q(1, 10),
        strict: true,
    };
    assert!(encode_lyapunov_candidate(&s, &c).is_ok());
    c.gradient = Some(vec![parse_term("3 * p * x", &reg).unwrap()]);
    assert!(encode_lyapunov_candidate(&s, &c).is_err());
    c.gradient = None;
    c.template = parse_term("q * x^2", &reg).unwrap();
    assert!(matches!(
        encode_lyapunov_candidate(&s, &c),
        Err(Error::UnboundVariable(_))
    ));
}

#[test]
fn deepening_rejects_bad_schedules() {
    let s = decay();
    let pr = StabilityParams::new(q(1, 100));
    let cfg = SolverConfig::new(q(1, 100));
    for sched in [vec![q(2, 1), q(1, 1)], vec![q(0, 1), q(1, 1)]] {
        assert!(deepen_lyapunov(&s, &pr, &sched, &cfg, &Sequential, &mut |_| true).is_err());
    }
    let (d, steps) = deepen_lyapunov(&s, &pr, &[], &cfg, &Sequential, &mut |_| true).unwrap();
    assert_eq!(d, Deepening::Exhausted);
    assert!(steps.is_empty());
}

#[test]
fn budget_stops_a_run_early() {
    let s = decay();
    let pr = StabilityParams::new(q(1, 100));
    let cfg = SolverConfig::new(q(1, 100));
    let sched = [q(1, 1), q(2, 1), q(3, 1)];
    let (d, steps) =
        deepen_lyapunov(&s, &pr, &sched, &cfg, &Sequential, &mut step_budget(1)).unwrap();
    assert_eq!(d, Deepening::Exhausted);
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].verdict, Stability::Stable);
}
