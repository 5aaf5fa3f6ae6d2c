//! The ten acceptance criteria. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{check_decision, holds, qf_formula, sentence, Point, VARS};
use dstab::cli::run;
use dstab::dsl::parse_document;
use dstab::exec::Threads;
use dstab::report::field;
use dstab_core::formula::{classify, name, Alternation, Rel};
use dstab_core::hybrid::{
    bouncing_ball, bouncing_ball_default, check_hybrid_stability_with, enforce, enforce_step,
    mode_paths, weaken_automaton, HybridAutomaton, HybridCheck, Jump, Mode, Selector,
};
use dstab_core::interval::eval_term_in;
use dstab_core::ode::{flow_enclosure, FlowCache};
use dstab_core::solver::{Answer, SolverConfig};
use dstab_core::stability::{
    check_stability_with, deepen_lyapunov, encode_asymptotic, encode_asymptotic_in_large,
    encode_lyapunov, encode_lyapunov_candidate, Deepening, LyapunovCandidate, StabilityKind,
    StabilityParams,
};
use dstab_core::{Formula, Interval, IntervalBox, Name, OdeSystem, Rational, Term};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

type Outcome = Result<String, String>;

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn fixture(f: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(f)
        .display()
        .to_string()
}

fn system(f: &str) -> Arc<OdeSystem> {
    let src = std::fs::read_to_string(fixture(f)).unwrap();
    parse_document(&src).unwrap().system(None).unwrap()
}

fn draw<S: Strategy>(runner: &mut TestRunner, s: &S) -> S::Value {
    s.new_tree(runner).unwrap().current()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 -------------------------------------------------------------------------

/// Lattice of pitch 1e-3 on [-1, 1]: index i is the coordinate (i - 1000)/1000.
fn lattice(i: i64) -> f64 {
    (i - 1000) as f64 / 1000.0
}

fn weakening_soundness() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let deltas = [r(0, 1), r(1, 100), r(1, 10)];
    let (mut points, mut true_points) = (0u64, 0u64);
    for i in 0..500 {
        let k = 1 + i % 3;
        let f = draw(&mut runner, &qf_formula(k, true));
        let weak: Vec<Formula> = deltas.iter().map(|d| f.delta_weaken(d).unwrap()).collect();
        // every lattice point in one variable; a full lattice window of
        // about 10^4 points in two or three
        let side: i64 = match k {
            1 => 2001,
            2 => 101,
            _ => 22,
        };
        let offs: Vec<i64> = (0..k)
            .map(|_| draw(&mut runner, &(0..=2001 - side)))
            .collect();
        let total = side.pow(k as u32);
        let mut p: Point = VARS[..k].iter().map(|v| (v.to_string(), 0.0)).collect();
        for idx in 0..total {
            let mut rest = idx;
            for (axis, off) in offs.iter().enumerate() {
                *p.get_mut(VARS[axis]).unwrap() = lattice(off + rest % side);
                rest /= side;
            }
            points += 1;
            if holds(&f, &p) != Some(true) {
                continue;
            }
            true_points += 1;
            for (w, d) in weak.iter().zip(&deltas) {
                if holds(w, &p) != Some(true) {
                    return Err(format!(
                        "{} holds at {:?} but its {}-weakening fails",
                        f, p, d
                    ));
                }
            }
        }
    }
    Ok(format!(
        "500 formulas, {} lattice points, {} where the formula holds, 0 violations",
        points, true_points
    ))
}

// 2 -------------------------------------------------------------------------

fn solver_soundness() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let (mut t, mut f, mut open) = (0, 0, 0);
    for i in 0..200 {
        let s = draw(&mut runner, &sentence());
        let d = if i % 2 == 0 { r(1, 10) } else { r(1, 20) };
        match check_decision(&s, &d)? {
            Some(Answer::DeltaTrue) => t += 1,
            Some(Answer::ExactFalse) => f += 1,
            None => open += 1,
        }
    }
    Ok(format!(
        "200 sentences: {} delta-true, {} false, {} without an oracle verdict, 0 contradictions",
        t, f, open
    ))
}

// 3 -------------------------------------------------------------------------

fn enclosures() -> Outcome {
    let decay = system("decay.dst");
    let x0 = IntervalBox::from_pairs([("x", Interval::point(1.0))]);
    let at1 = flow_enclosure(&decay, &x0, Interval::point(1.0), 1e-4).map_err(|e| e.to_string())?;
    let x = at1.get("x").unwrap();
    let e_inv = (-1.0f64).exp();
    ensure(x.contains(e_inv) && x.width() <= 2e-3, || {
        format!("decay at t=1: {} (width {:e})", x, x.width())
    })?;

    let osc = system("oscillator.dst");
    let x0 = IntervalBox::from_pairs([("x", Interval::point(1.0)), ("v", Interval::point(0.0))]);
    // FRAC_PI_2 is within one ulp of π/2
    let t = Interval::new(FRAC_PI_2.next_down(), FRAC_PI_2.next_up());
    let at = flow_enclosure(&osc, &x0, t, 1e-4).map_err(|e| e.to_string())?;
    let (px, pv) = (at.get("x").unwrap(), at.get("v").unwrap());
    ensure(
        px.contains(0.0) && pv.contains(-1.0) && px.width() <= 1e-2 && pv.width() <= 1e-2,
        || format!("oscillator at π/2: x {} v {}", px, pv),
    )?;
    Ok(format!(
        "e^-1 in {} (width {:.1e}); (0, -1) in {} x {} (widths {:.1e}, {:.1e})",
        x,
        x.width(),
        px,
        pv,
        px.width(),
        pv.width()
    ))
}

// 4, 5, 10 ------------------------------------------------------------------

struct Run {
    label: String,
    stdout: String,
    elapsed: Duration,
}

fn cli(label: &str, args: &[&str], workers: usize) -> Run {
    let w = workers.to_string();
    let mut all = vec!["dstab"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--deterministic", "--workers", &w]);
    let start = Instant::now();
    let out = run(all);
    Run {
        label: label.to_string(),
        stdout: if out.code <= 1 {
            out.stdout
        } else {
            out.stderr
        },
        elapsed: start.elapsed(),
    }
}

const STABILITY_FLAGS: [&str; 10] = [
    "--delta",
    "1/100",
    "--eps-min",
    "1/20",
    "--eps-max",
    "1",
    "--delta-floor",
    "1/50",
    "--time-bound",
    "5",
];

fn criterion4_runs(workers: usize) -> Vec<(Run, &'static str)> {
    let cases = [
        ("decay lyapunov", "decay.dst", "lyapunov", "stable"),
        (
            "growth lyapunov",
            "growth.dst",
            "lyapunov",
            "delta-unstable",
        ),
        ("zero lyapunov", "still.dst", "lyapunov", "stable"),
        (
            "zero asymptotic",
            "still.dst",
            "asymptotic",
            "delta-unstable",
        ),
        (
            "oscillator lyapunov",
            "oscillator.dst",
            "lyapunov",
            "stable",
        ),
    ];
    cases
        .iter()
        .map(|(label, file, kind, want)| {
            let f = fixture(file);
            let mut args = vec!["check-stability", f.as_str(), "--kind", kind];
            args.extend_from_slice(&STABILITY_FLAGS);
            (cli(label, &args, workers), *want)
        })
        .collect()
}

fn criterion5_runs(workers: usize) -> Vec<(Run, &'static str)> {
    let cases = [
        ("cubic template", "cubic.dst", "success"),
        ("growth template", "growth_small.dst", "delta-fail"),
    ];
    cases
        .iter()
        .map(|(label, file, want)| {
            let f = fixture(file);
            let args = [
                "lyap",
                f.as_str(),
                "--template",
                "p*x^2",
                "--param",
                "p=[0.5,2]",
                "--exclusion",
                "1/10",
                "--delta",
                "1/100",
            ];
            (cli(label, &args, workers), *want)
        })
        .collect()
}

fn judge_runs(runs: &[(Run, &str)], limit: Duration) -> Result<Vec<String>, String> {
    let mut notes = Vec::new();
    for (run, want) in runs {
        let got = field(&run.stdout, "verdict");
        ensure(got == Some(want), || {
            format!(
                "{}: expected {}, got {:?}\n{}",
                run.label, want, got, run.stdout
            )
        })?;
        ensure(run.elapsed < limit, || {
            format!("{} took {:.1?}", run.label, run.elapsed)
        })?;
        notes.push(format!("{} {} ({:.1?})", run.label, want, run.elapsed));
    }
    Ok(notes)
}

fn stability_verdicts(runs: &[(Run, &str)]) -> Outcome {
    let notes = judge_runs(runs, Duration::from_secs(120))?;
    let growth = &runs[1].0.stdout;
    ensure(
        field(growth, "witness").is_some_and(|w| w != "none"),
        || String::from("growth verdict carries no witness"),
    )?;
    Ok(notes.join("; "))
}

fn lyapunov_test(runs: &[(Run, &str)]) -> Outcome {
    let notes = judge_runs(runs, Duration::from_secs(120))?;
    let report = &runs[0].0.stdout;
    let w = field(report, "witness").unwrap_or("none");
    // {p: [lo, hi]}
    let inner = w
        .strip_prefix("{p: [")
        .and_then(|s| s.strip_suffix("]}"))
        .ok_or_else(|| format!("no parameter witness: {}", w))?;
    let (lo, hi) = inner.split_once(", ").unwrap();
    let (lo, hi): (f64, f64) = (lo.parse().unwrap(), hi.parse().unwrap());
    ensure(
        (0.5..=2.0).contains(&lo) && (0.5..=2.0).contains(&hi) && lo <= hi,
        || format!("witness {} outside the parameter box", w),
    )?;
    // the certified value must make V = p x^2 a Lyapunov function of -x^3
    // on a grid of |x| in [0.1, 1]
    let p = (lo + hi) / 2.0;
    for i in 0..=900 {
        for x in [0.1 + i as f64 / 1000.0, -0.1 - i as f64 / 1000.0] {
            let v = p * x * x;
            let dv = 2.0 * p * x * (-x * x * x);
            ensure(v > 0.0 && dv <= 0.0, || {
                format!("p = {} fails at x = {}", p, x)
            })?;
        }
    }
    Ok(format!("{}; witness p in {}", notes.join("; "), w))
}

fn determinism() -> Outcome {
    let block = |s: &str| -> String {
        s.lines()
            .skip_while(|l| *l != "[verdict]")
            .take_while(|l| *l != "[stats]")
            .collect::<Vec<_>>()
            .join("\n")
    };
    let without_wall = |s: &str| -> String {
        s.lines()
            .filter(|l| !l.starts_with("wall_time_ms") && !l.starts_with("workers"))
            .collect()
    };
    let one: Vec<Run> = criterion4_runs(1)
        .into_iter()
        .chain(criterion5_runs(1))
        .map(|(r, _)| r)
        .collect();
    let four: Vec<Run> = criterion4_runs(4)
        .into_iter()
        .chain(criterion5_runs(4))
        .map(|(r, _)| r)
        .collect();
    for (a, b) in one.iter().zip(&four) {
        ensure(!block(&a.stdout).is_empty(), || {
            format!("{}: no verdict block", a.label)
        })?;
        ensure(block(&a.stdout) == block(&b.stdout), || {
            format!(
                "{}: verdict blocks differ\n{}\n---\n{}",
                a.label, a.stdout, b.stdout
            )
        })?;
        ensure(without_wall(&a.stdout) == without_wall(&b.stdout), || {
            format!("{}: statistics differ between worker counts", a.label)
        })?;
    }
    Ok(format!(
        "{} runs, identical verdict blocks and box counts with 1 and 4 workers",
        one.len()
    ))
}

// 6 -------------------------------------------------------------------------

fn classes() -> Outcome {
    let decay = system("decay.dst");
    let pr = StabilityParams::new(r(1, 100));
    let cand = LyapunovCandidate {
        template: Term::mul(Term::var("p"), Term::pow(Term::var("x"), 2)),
        gradient: None,
        params: vec![(name("p"), r(1, 2), r(2, 1))],
        region: None,
        exclusion: r(1, 10),
        strict: false,
    };
    let got = [
        (
            "lyapunov",
            classify(&encode_lyapunov(&decay, &pr).unwrap()).class,
            Alternation::Pi(3),
        ),
        (
            "asymptotic",
            classify(&encode_asymptotic(&decay, &pr).unwrap()).class,
            Alternation::Sigma(4),
        ),
        (
            "in-the-large",
            classify(&encode_asymptotic_in_large(&decay, &pr).unwrap()).class,
            Alternation::Pi(3),
        ),
        (
            "candidate",
            classify(&encode_lyapunov_candidate(&decay, &cand).unwrap()).class,
            Alternation::Sigma(2),
        ),
    ];
    for (label, class, want) in &got {
        ensure(class == want, || {
            format!("{}: {} instead of {}", label, class, want)
        })?;
    }
    Ok(got
        .iter()
        .map(|(l, c, _)| format!("{} {}", l, c))
        .collect::<Vec<_>>()
        .join(", "))
}

// 7 -------------------------------------------------------------------------

/// True only if every atom is certainly satisfied on the (point) box.
fn certain(f: &Formula, env: &IntervalBox, flows: &mut FlowCache) -> bool {
    match f {
        Formula::Atom(t, rel) => match eval_term_in(t, env, flows) {
            Ok(i) => match rel {
                Rel::Gt => i.lo() > 0.0,
                Rel::Ge => i.lo() >= 0.0,
            },
            Err(_) => false,
        },
        Formula::And(ps) => ps.iter().all(|p| certain(p, env, flows)),
        Formula::Or(ps) => ps.iter().any(|p| certain(p, env, flows)),
        _ => false,
    }
}

const G: f64 = -9.8;
const BETA: f64 = 0.01;
const ALPHA: f64 = -0.9;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Phase {
    Falling,
    Rising,
}

fn field_at(phase: Phase, s: [f64; 2]) -> [f64; 2] {
    let drag = BETA * s[1] * s[1];
    match phase {
        Phase::Falling => [s[1], G * (1.0 - drag)],
        Phase::Rising => [s[1], G * (1.0 + drag)],
    }
}

fn rk4(phase: Phase, s: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], k: f64| [a[0] + k * b[0], a[1] + k * b[1]];
    let k1 = field_at(phase, s);
    let k2 = field_at(phase, add(s, k1, h / 2.0));
    let k3 = field_at(phase, add(s, k2, h / 2.0));
    let k4 = field_at(phase, add(s, k3, h));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Event function of a phase: height while falling, velocity while rising.
fn event(phase: Phase, s: [f64; 2]) -> f64 {
    match phase {
        Phase::Falling => s[0],
        Phase::Rising => s[1],
    }
}

struct Sample {
    phase: Phase,
    start: [f64; 2],
    elapsed: f64,
    state: [f64; 2],
}

struct Event {
    phase: Phase,
    pre: [f64; 2],
    post: [f64; 2],
}

/// RK4 with step 1e-3, landing exactly on the sample times and locating
/// events by bisection on the step length.
fn simulate(samples: usize, horizon: f64) -> (Vec<Sample>, Vec<Event>) {
    let h: f64 = 1e-3;
    let mut phase = Phase::Falling;
    let mut s = [10.0, 0.0];
    let (mut t, mut seg_t, mut seg_s) = (0.0f64, 0.0f64, s);
    let mut out = Vec::new();
    let mut events = Vec::new();
    for k in 0..samples {
        let target = horizon * k as f64 / samples as f64;
        while target - t > 1e-12 {
            let step = h.min(target - t);
            let next = rk4(phase, s, step);
            if event(phase, next) < 0.0 && event(phase, s) >= 0.0 {
                let (mut lo, mut hi) = (0.0, step);
                for _ in 0..60 {
                    let mid = (lo + hi) / 2.0;
                    if event(phase, rk4(phase, s, mid)) >= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let pre = rk4(phase, s, lo);
                let post = match phase {
                    Phase::Falling => [pre[0], ALPHA * pre[1]],
                    Phase::Rising => pre,
                };
                events.push(Event { phase, pre, post });
                phase = match phase {
                    Phase::Falling => Phase::Rising,
                    Phase::Rising => Phase::Falling,
                };
                t += lo;
                s = post;
                seg_t = t;
                seg_s = s;
                continue;
            }
            s = next;
            t += step;
        }
        out.push(Sample {
            phase,
            start: seg_s,
            elapsed: t - seg_t,
            state: s,
        });
    }
    (out, events)
}

fn mode_of(p: Phase) -> &'static str {
    // falling segments follow q_u's flow and invariant, rising ones q_d's
    match p {
        Phase::Falling => "q_u",
        Phase::Rising => "q_d",
    }
}

fn vars(ns: &[&str]) -> Vec<Term> {
    ns.iter().map(|n| Term::var(n)).collect()
}

fn point_box(pairs: &[(&str, f64)]) -> IntervalBox {
    IntervalBox::from_pairs(pairs.iter().map(|(n, v)| (*n, Interval::point(*v))))
}

fn hybrid_fidelity() -> Outcome {
    // printed weakening of the bounce jump: |x| <= d, |v' - αv| <= d, |x' - x| <= d
    let d = r(1, 20);
    let weak = weaken_automaton(&bouncing_ball_default(), &d).map_err(|e| e.to_string())?;
    let rel = &weak.jump("q_d", "q_u").unwrap().relation;
    let (x, v, xp, vp) = (
        Term::var("x"),
        Term::var("v"),
        Term::var("x'"),
        Term::var("v'"),
    );
    let alpha = Term::Const(r(9, 10));
    let want: Vec<Formula> = [
        Term::sub(x.clone(), Term::zero()),
        Term::sub(vp, Term::mul(alpha, v)),
        Term::sub(xp, x),
    ]
    .into_iter()
    .flat_map(|t| {
        [
            Formula::ge(Term::add(t.clone(), Term::Const(d))),
            Formula::ge(Term::add(Term::neg(t), Term::Const(d))),
        ]
    })
    .collect();
    ensure(*rel == Formula::and(want), || {
        format!("weakened bounce jump is {}", rel)
    })?;

    // simulated trajectory against the δ-weakened physical ball
    let tol = 1e-3;
    let delta = 2.0 * tol;
    let ball = weaken_automaton(&bouncing_ball(r(-49, 5), r(1, 100), r(-9, 10)), &r(1, 500))
        .map_err(|e| e.to_string())?;
    let (samples, events) = simulate(1000, 6.0);
    let mut flows = FlowCache::new(1e-6);
    let init = ball.init_at("q_d", &vars(&["a", "b"])).unwrap();
    ensure(
        certain(&init, &point_box(&[("a", 10.0), ("b", 0.0)]), &mut flows),
        || String::from("start state violates the weakened init"),
    )?;
    for s in &samples {
        let q = mode_of(s.phase);
        let rel = Formula::and(vec![
            ball.flow_relation(q, &vars(&["a", "b"]), &vars(&["c", "e"]), Term::var("s"))
                .unwrap(),
            ball.inv_at(q, &vars(&["c", "e"])).unwrap(),
        ]);
        let env = point_box(&[
            ("a", s.start[0]),
            ("b", s.start[1]),
            ("c", s.state[0]),
            ("e", s.state[1]),
            ("s", s.elapsed),
        ]);
        ensure(certain(&rel, &env, &mut flows), || {
            format!(
                "sample in {} from {:?} after {} at {:?} violates the weakened flow or invariant",
                q, s.start, s.elapsed, s.state
            )
        })?;
    }
    let (mut bounces, mut apexes) = (0, 0);
    for e in &events {
        // a bounce matches the x = 0 jump; an apex matches the v = 0 one
        let (from, to) = match e.phase {
            Phase::Falling => ("q_d", "q_u"),
            Phase::Rising => ("q_u", "q_d"),
        };
        match e.phase {
            Phase::Falling => bounces += 1,
            Phase::Rising => apexes += 1,
        }
        let rel = ball
            .jump_at(from, to, &vars(&["a", "b"]), &vars(&["c", "e"]))
            .unwrap();
        let env = point_box(&[
            ("a", e.pre[0]),
            ("b", e.pre[1]),
            ("c", e.post[0]),
            ("e", e.post[1]),
        ]);
        ensure(certain(&rel, &env, &mut flows), || {
            format!(
                "event {:?} -> {:?} violates jump {} -> {}",
                e.pre, e.post, from, to
            )
        })?;
    }
    ensure(bounces >= 2 && apexes >= 1, || {
        format!("only {} bounces, {} apexes", bounces, apexes)
    })?;

    // one-mode automata against the continuous checks
    let pr = StabilityParams::new(r(1, 100));
    let base = SolverConfig::new(r(1, 100));
    let exec = Threads::new(1);
    let mut same = 0;
    for (file, kind) in [
        ("decay.dst", StabilityKind::Lyapunov),
        ("growth.dst", StabilityKind::Lyapunov),
        ("still.dst", StabilityKind::Lyapunov),
        ("still.dst", StabilityKind::Asymptotic),
        ("oscillator.dst", StabilityKind::Lyapunov),
    ] {
        let s = system(file);
        let cont = check_stability_with(&s, kind, &pr, &base, &exec).map_err(|e| e.to_string())?;
        let h = HybridAutomaton::from_system(&s);
        let hyb = check_hybrid_stability_with(&h, &HybridCheck::new(kind, 0), &pr, &base, &exec)
            .map_err(|e| e.to_string())?;
        ensure(cont.verdict == hyb.verdict, || {
            format!(
                "{} {}: continuous {}, hybrid {}",
                file, kind, cont.verdict, hyb.verdict
            )
        })?;
        same += 1;
    }
    Ok(format!(
        "printed jump weakening reproduced; {} samples, {} bounces, {} apexes within δ = {}; {} one-mode verdicts match",
        samples.len(),
        bounces,
        apexes,
        delta,
        same
    ))
}

// 8 -------------------------------------------------------------------------

fn random_graph(n: usize, edges: &[bool]) -> HybridAutomaton {
    let flow = Arc::new(
        OdeSystem::builder("rest")
            .state("x", -1.0, 1.0)
            .rhs("x", Term::zero())
            .build()
            .unwrap(),
    );
    let modes: Vec<Mode> = (0..n)
        .map(|i| Mode {
            name: name(&format!("m{}", i)),
            flow: flow.clone(),
            inv: Formula::tt(),
            init: Formula::tt(),
        })
        .collect();
    let mut jumps = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if edges[a * n + b] {
                jumps.push(Jump {
                    from: modes[a].name.clone(),
                    to: modes[b].name.clone(),
                    relation: Formula::tt(),
                });
            }
        }
    }
    HybridAutomaton::new(
        "g",
        vec![name("x")],
        vec![Interval::new(-1.0, 1.0)],
        modes,
        jumps,
    )
    .unwrap()
}

/// Mode sequences whose selector assignments satisfy
/// `(∨_q enforce(q, 0)) ∧ ∧_{i<k} ∨_{(q,q') jump} enforce(q, q', i)`,
/// found by trying every assignment of the `b^i_q`.
fn selector_paths(h: &HybridAutomaton, k: usize) -> BTreeSet<Vec<Name>> {
    let qs: Vec<Name> = h.modes().iter().map(|m| m.name.clone()).collect();
    let n = qs.len();
    let bit = |s: &Selector| s.step * n + qs.iter().position(|q| *q == s.mode).unwrap();
    let sat = |lits: &[Selector], bits: u32| {
        lits.iter()
            .all(|l| ((bits >> bit(l)) & 1 == 1) == l.positive)
    };
    let mut found = BTreeSet::new();
    for bits in 0u32..(1 << (n * (k + 1))) {
        let first = qs.iter().any(|q| sat(&enforce(&qs, q, 0).unwrap(), bits));
        let steps = (0..k).all(|i| {
            h.jumps()
                .iter()
                .any(|j| sat(&enforce_step(&qs, &j.from, &j.to, i).unwrap(), bits))
        });
        if first && steps {
            let path: Vec<Name> = (0..=k)
                .map(|i| {
                    let on: Vec<&Name> = qs
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| (bits >> (i * n + j)) & 1 == 1)
                        .map(|(_, q)| q)
                        .collect();
                    assert_eq!(on.len(), 1, "enforce admitted {} active modes", on.len());
                    on[0].clone()
                })
                .collect();
            found.insert(path);
        }
    }
    found
}

fn enforce_paths() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let graph = (1usize..=3, 0usize..=2).prop_flat_map(|(n, k)| {
        (
            proptest::strategy::Just(n),
            proptest::strategy::Just(k),
            proptest::collection::vec(proptest::bool::ANY, n * n),
        )
    });
    let mut total = 0;
    for _ in 0..50 {
        let (n, k, edges) = draw(&mut runner, &graph);
        let h = random_graph(n, &edges);
        let by_bits = selector_paths(&h, k);
        let by_paths: BTreeSet<Vec<Name>> = mode_paths(&h, k, 1 << 12)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|p| p.modes().to_vec())
            .collect();
        ensure(by_bits == by_paths, || {
            format!(
                "{} modes, k = {}, edges {:?}: {:?} vs {:?}",
                n, k, edges, by_bits, by_paths
            )
        })?;
        total += by_paths.len();
    }
    Ok(format!(
        "50 graphs, {} paths, selector and path enumerations agree",
        total
    ))
}

// 9 -------------------------------------------------------------------------

fn deepening() -> Outcome {
    let pr = StabilityParams::new(r(1, 100));
    let base = SolverConfig::new(r(1, 100));
    let schedule = [r(1, 1), r(2, 1), r(4, 1), r(8, 1)];
    let exec = Threads::new(1);
    let mut all = |_: &[_]| true;
    let (g, _) = deepen_lyapunov(
        &system("growth.dst"),
        &pr,
        &schedule,
        &base,
        &exec,
        &mut all,
    )
    .map_err(|e| e.to_string())?;
    let at = match g {
        Deepening::DeltaUnstableAt { time, .. } if time <= r(8, 1) => time,
        other => return Err(format!("growth: {:?}", other)),
    };
    let (d, steps) = deepen_lyapunov(&system("decay.dst"), &pr, &schedule, &base, &exec, &mut all)
        .map_err(|e| e.to_string())?;
    ensure(d == Deepening::Exhausted && steps.len() == 4, || {
        format!("decay: {:?} after {} checks", d, steps.len())
    })?;
    Ok(format!(
        "growth delta-unstable at T = {}; decay exhausted after 4 horizons",
        at
    ))
}

fn main() {
    type Criterion = Box<dyn FnOnce() -> Outcome>;
    let started = Instant::now();
    let four = criterion4_runs(1);
    let five = criterion5_runs(1);
    let four_time = started.elapsed();
    let criteria: Vec<(&str, Duration, Criterion)> = vec![
        (
            "weakening soundness",
            Duration::from_secs(60),
            Box::new(weakening_soundness),
        ),
        (
            "solver soundness",
            Duration::from_secs(600),
            Box::new(solver_soundness),
        ),
        (
            "ODE enclosures",
            Duration::from_secs(10),
            Box::new(enclosures),
        ),
        (
            "stability verdicts",
            Duration::MAX,
            Box::new(move || stability_verdicts(&four)),
        ),
        (
            "Lyapunov test",
            Duration::MAX,
            Box::new(move || lyapunov_test(&five)),
        ),
        (
            "complexity classes",
            Duration::from_secs(5),
            Box::new(classes),
        ),
        (
            "hybrid fidelity",
            Duration::from_secs(300),
            Box::new(hybrid_fidelity),
        ),
        (
            "enforce/path equivalence",
            Duration::from_secs(60),
            Box::new(enforce_paths),
        ),
        (
            "semi-decision loops",
            Duration::from_secs(300),
            Box::new(deepening),
        ),
        ("determinism", Duration::MAX, Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (label, limit, check)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let mut res = check();
        let mut took = t.elapsed();
        if i == 3 || i == 4 {
            // those runs happened up front; their own times are checked inside
            took += four_time;
        }
        if res.is_ok() && took > limit {
            res = Err(format!("took {:.1?}, limit {:.0?}", took, limit));
        }
        match res {
            Ok(note) => println!(
                "criterion {:>2} PASS  {} ({:.1?}): {}",
                i + 1,
                label,
                took,
                note
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "criterion {:>2} FAIL  {} ({:.1?}): {}",
                    i + 1,
                    label,
                    took,
                    why
                );
            }
        }
    }
    if failed > 0 {
        eprintln!("{} acceptance criteria failed", failed);
        std::process::exit(1);
    }
}
