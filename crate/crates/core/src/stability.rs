//! Stability sentences for continuous systems and their δ-verdicts.
//!
//! Every check decides the negation of the encoded property: an exactly false
//! negation means the property holds, a δ-true negation means it fails under
//! some perturbation of size δ.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{
    classify, gradient, name, rational_from_f64, Alternation, Formula, Name, Rational, Term,
};
use crate::interval::{eval_term, Interval, IntervalBox};
use crate::ode::OdeSystem;
use crate::solver::{decide_with, Answer, Executor, Sequential, SolverConfig, SolverStats};
use crate::Error;

/// Numeric parameters of the bounded stability sentences. None of them is
/// fixed by the theory; defaults are conventions.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityParams {
    pub delta: Rational,
    /// Lower end of the ε range.
    pub eps_min: Rational,
    /// Upper end `e` of the ε range.
    pub eps_max: Rational,
    /// Lower end of the inner radius δ_L.
    pub delta_floor: Rational,
    pub time_bound: Rational,
    /// State region; the system's declared box when `None`.
    pub region: Option<Vec<(Rational, Rational)>>,
    /// Horizon `T'` of the convergence conjunct; `time_bound` when `None`.
    pub conv_time: Option<Rational>,
    /// Upper end `d` of the convergence radius δ'.
    pub conv_radius: Rational,
    /// Lower end of δ'.
    pub conv_floor: Rational,
    pub conv_eps_min: Rational,
    pub conv_eps_max: Rational,
    /// Largest left window `δ''` before `T'`.
    pub conv_window: Rational,
}

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

impl StabilityParams {
    pub fn new(delta: Rational) -> StabilityParams {
        StabilityParams {
            delta,
            eps_min: r(1, 20),
            eps_max: r(1, 1),
            delta_floor: r(1, 50),
            time_bound: r(5, 1),
            region: None,
            conv_time: None,
            conv_radius: r(1, 1),
            conv_floor: r(1, 10),
            conv_eps_min: r(1, 20),
            conv_eps_max: r(1, 1),
            conv_window: r(1, 10),
        }
    }

    pub fn conv_horizon(&self) -> Rational {
        self.conv_time.unwrap_or_else(|| self.time_bound)
    }

    fn validate_lyapunov(&self) -> Result<(), Error> {
        let zero = Rational::from_integer(0);
        let bad = |m: &str| Err(Error::InvalidParams(String::from(m)));
        if self.delta <= zero {
            return bad("delta must be positive");
        }
        if self.eps_min <= self.delta {
            return bad("eps-min must exceed delta");
        }
        if self.eps_max < self.eps_min {
            return bad("eps-max must be at least eps-min");
        }
        if self.delta_floor <= zero || self.delta_floor >= self.eps_min {
            return bad("delta-floor must lie strictly between 0 and eps-min");
        }
        if self.time_bound <= zero {
            return bad("time bound must be positive");
        }
        Ok(())
    }

    fn validate_convergence(&self) -> Result<(), Error> {
        let zero = Rational::from_integer(0);
        let bad = |m: &str| Err(Error::InvalidParams(String::from(m)));
        let horizon = self.conv_horizon();
        if horizon <= zero {
            return bad("convergence time must be positive");
        }
        if self.conv_floor <= zero || self.conv_radius < self.conv_floor {
            return bad("convergence radius range must be positive and nonempty");
        }
        if self.conv_eps_min <= self.delta || self.conv_eps_max < self.conv_eps_min {
            return bad("convergence eps range must start above delta");
        }
        if self.conv_window < zero || self.conv_window > horizon {
            return bad("convergence window must lie in [0, convergence time]");
        }
        Ok(())
    }

    pub(crate) fn region_of(
        &self,
        declared: &[Interval],
    ) -> Result<Vec<(Rational, Rational)>, Error> {
        match &self.region {
            None => declared
                .iter()
                .map(
                    |b| match (rational_from_f64(b.lo()), rational_from_f64(b.hi())) {
                        (Some(lo), Some(hi)) => Ok((lo, hi)),
                        _ => Err(Error::InvalidParams(String::from(
                            "state bounds must be finite",
                        ))),
                    },
                )
                .collect(),
            Some(x) => {
                if x.len() != declared.len() {
                    return Err(Error::InvalidParams(format!(
                        "region has {} components, system has {}",
                        x.len(),
                        declared.len()
                    )));
                }
                for ((lo, hi), b) in x.iter().zip(declared) {
                    let i = Interval::from_rational(lo).hull(&Interval::from_rational(hi));
                    if lo > hi || !i.is_subset(b) {
                        return Err(Error::InvalidParams(String::from(
                            "region must be a nonempty sub-box of the state bounds",
                        )));
                    }
                }
                Ok(x.clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StabilityKind {
    Lyapunov,
    Asymptotic,
    AsymptoticInLarge,
}

impl fmt::Display for StabilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabilityKind::Lyapunov => "lyapunov",
            StabilityKind::Asymptotic => "asymptotic",
            StabilityKind::AsymptoticInLarge => "asymptotic-in-large",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    DeltaUnstable,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::DeltaUnstable => "delta-unstable",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub verdict: Stability,
    /// Counterexample boxes when δ-unstable.
    pub witness: Option<IntervalBox>,
    /// Alternation class of the encoded (positive) sentence.
    pub class: Alternation,
    pub stats: SolverStats,
}

/// Names of the initial and current copies of the state variables.
pub(crate) fn copies(vars: &[Name]) -> Result<(Vec<Name>, Vec<Name>), Error> {
    let x0: Vec<Name> = vars.iter().map(|v| name(&format!("{}0", v))).collect();
    let xt: Vec<Name> = vars.iter().map(|v| name(&format!("{}t", v))).collect();
    let copies_clash = x0.iter().chain(&xt).find(|n| vars.contains(n));
    let reserved = x0
        .iter()
        .chain(&xt)
        .chain(vars)
        .find(|n| RESERVED.contains(&&***n));
    if let Some(n) = copies_clash.or(reserved) {
        return Err(Error::InvalidParams(format!(
            "state variable naming collides with `{}`",
            n
        )));
    }
    Ok((x0, xt))
}

pub(crate) const RESERVED: [&str; 7] = ["eps", "dl", "t", "dc", "ec", "dw", "tc"];

pub(crate) fn konst(q: &Rational) -> Term {
    Term::Const(*q)
}

pub(crate) fn vars_of(ns: &[Name]) -> Vec<Term> {
    ns.iter().map(|n| Term::Var(n.clone())).collect()
}

/// `||xt - Φ(x0, t)||`, zero exactly on the trajectory.
pub fn deviation_term(s: &Arc<OdeSystem>, x0: &[Name], xt: &[Name], t: Term) -> Term {
    let init = vars_of(x0);
    let diffs = xt
        .iter()
        .enumerate()
        .map(|(i, v)| {
            Term::sub(
                Term::Var(v.clone()),
                Term::flow(s.clone(), init.clone(), t.clone(), i),
            )
        })
        .collect();
    Term::norm(diffs)
}

/// A reachability relation between named initial and current states at the
/// time variable `t`, which never exceeds the given horizon: universal
/// binders wrapped around the escape implication (outermost first) and the
/// relation itself.
pub(crate) type Relation<'a> = &'a dyn Fn(&[Name], &[Name], &str, &Rational) -> Related;

/// Binders `(name, lower, upper)` and the relation body.
pub(crate) type Related = Result<(Vec<(Name, Term, Term)>, Formula), Error>;

/// `xt = Φ(x0, t)` written as `dev ≤ 0`.
fn trajectory(s: &Arc<OdeSystem>) -> impl Fn(&[Name], &[Name], &str, &Rational) -> Related + '_ {
    move |x0, xt, t, _| {
        Ok((
            Vec::new(),
            Formula::less_eq(deviation_term(s, x0, xt, Term::var(t)), Term::zero()),
        ))
    }
}

/// `∀binders ∀xt∈region. (||x0|| < r0 ∧ reach) → ||xt|| < bound`
fn escape_body(
    reach: Relation<'_>,
    x0: &[Name],
    xt: &[Name],
    region: &[(Rational, Rational)],
    t: (&str, &Rational),
    r0: &str,
    bound: &str,
) -> Result<Formula, Error> {
    let (binders, rel) = reach(x0, xt, t.0, t.1)?;
    let body = Formula::implies(
        Formula::and(vec![
            Formula::less(Term::norm(vars_of(x0)), Term::var(r0)),
            rel,
        ]),
        Formula::less(Term::norm(vars_of(xt)), Term::var(bound)),
    );
    let body = forall_box(xt, region, body);
    Ok(binders
        .into_iter()
        .rev()
        .fold(body, |acc, (v, lo, hi)| Formula::forall(&v, lo, hi, acc)))
}

pub(crate) fn forall_box(
    names: &[Name],
    region: &[(Rational, Rational)],
    body: Formula,
) -> Formula {
    names
        .iter()
        .zip(region)
        .rev()
        .fold(body, |acc, (n, (lo, hi))| {
            Formula::forall(n, konst(lo), konst(hi), acc)
        })
}

/// Bounded Lyapunov stability:
/// `∀ε ∃δ_L∈[δ_floor, ε] ∀t∈[0,T] ∀x0∈X ∀xt∈X. (||x0|| < δ_L ∧ xt = Φ(x0,t)) → ||xt|| < ε`.
pub fn encode_lyapunov(s: &Arc<OdeSystem>, pr: &StabilityParams) -> Result<Formula, Error> {
    lyapunov_over(s.vars(), s.bounds(), &trajectory(s), pr)
}

pub(crate) fn lyapunov_over(
    vars: &[Name],
    declared: &[Interval],
    reach: Relation<'_>,
    pr: &StabilityParams,
) -> Result<Formula, Error> {
    pr.validate_lyapunov()?;
    let region = pr.region_of(declared)?;
    let (x0, xt) = copies(vars)?;
    let body = escape_body(reach, &x0, &xt, &region, ("t", &pr.time_bound), "dl", "eps")?;
    let inner = forall_box(&x0, &region, body);
    Ok(Formula::forall(
        "eps",
        konst(&pr.eps_min),
        konst(&pr.eps_max),
        Formula::exists(
            "dl",
            konst(&pr.delta_floor),
            Term::var("eps"),
            Formula::forall("t", Term::zero(), konst(&pr.time_bound), inner),
        ),
    ))
}

/// Where a limit is taken.
#[derive(Clone, Debug, PartialEq)]
pub enum LimitTarget {
    /// Two-sided window `[a - δ'', a + δ'']`.
    Point(Rational),
    /// Left window `[a - δ'', a]`.
    LeftOf(Rational),
    /// Tail `[x, horizon]` for some `x` in the δ'' range.
    Horizon(Rational),
}

/// Bounded `lim f = c`: `∀ε ∃δ'' ∀x∈window(δ''). |f(x) - c| < ε`.
pub fn encode_limit(
    f: &Term,
    var: &str,
    target: &LimitTarget,
    c: &Rational,
    eps: (&Rational, &Rational),
    window: (&Rational, &Rational),
) -> Formula {
    let close = |v: &str| {
        let mut m = alloc::collections::BTreeMap::new();
        m.insert(name(var), Term::var(v));
        Formula::less(
            Term::apply(
                crate::formula::Func::Abs,
                vec![Term::sub(f.substitute(&m), konst(c))],
            ),
            Term::var("eps"),
        )
    };
    let inner = match target {
        LimitTarget::Point(a) => Formula::exists(
            "dw",
            konst(window.0),
            konst(window.1),
            Formula::forall(
                var,
                Term::sub(konst(a), Term::var("dw")),
                Term::add(konst(a), Term::var("dw")),
                close(var),
            ),
        ),
        LimitTarget::LeftOf(a) => Formula::exists(
            "dw",
            konst(window.0),
            konst(window.1),
            Formula::forall(
                var,
                Term::sub(konst(a), Term::var("dw")),
                konst(a),
                close(var),
            ),
        ),
        LimitTarget::Horizon(h) => {
            let tail = format!("{}'", var);
            Formula::exists(
                var,
                konst(window.0),
                konst(window.1),
                Formula::forall(&tail, Term::var(var), konst(h), close(&tail)),
            )
        }
    };
    Formula::forall("eps", konst(eps.0), konst(eps.1), inner)
}

/// Bounded convergence: trajectories from the δ'-ball end within every ε'
/// on a left window of `T'`.
pub(crate) fn convergence(
    vars: &[Name],
    declared: &[Interval],
    reach: Relation<'_>,
    pr: &StabilityParams,
    universal_radius: bool,
) -> Result<Formula, Error> {
    pr.validate_convergence()?;
    let region = pr.region_of(declared)?;
    let (x0, xt) = copies(vars)?;
    let horizon = pr.conv_horizon();
    let body = escape_body(reach, &x0, &xt, &region, ("tc", &horizon), "dc", "ec")?;
    let tail = Formula::forall(
        "tc",
        Term::sub(konst(&horizon), Term::var("dw")),
        konst(&horizon),
        body,
    );
    let inner = Formula::forall(
        "ec",
        konst(&pr.conv_eps_min),
        konst(&pr.conv_eps_max),
        Formula::exists("dw", Term::zero(), konst(&pr.conv_window), tail),
    );
    let inner = forall_box(&x0, &region, inner);
    let (lo, hi) = (konst(&pr.conv_floor), konst(&pr.conv_radius));
    Ok(if universal_radius {
        Formula::forall("dc", lo, hi, inner)
    } else {
        Formula::exists("dc", lo, hi, inner)
    })
}

/// Lyapunov stability together with bounded convergence from some δ'-ball.
pub fn encode_asymptotic(s: &Arc<OdeSystem>, pr: &StabilityParams) -> Result<Formula, Error> {
    let conv = convergence(s.vars(), s.bounds(), &trajectory(s), pr, false)?;
    Ok(Formula::and(vec![encode_lyapunov(s, pr)?, conv]))
}

/// As [`encode_asymptotic`] with convergence required from every radius in
/// the δ' range.
pub fn encode_asymptotic_in_large(
    s: &Arc<OdeSystem>,
    pr: &StabilityParams,
) -> Result<Formula, Error> {
    let conv = convergence(s.vars(), s.bounds(), &trajectory(s), pr, true)?;
    Ok(Formula::and(vec![encode_lyapunov(s, pr)?, conv]))
}

pub fn encode(
    s: &Arc<OdeSystem>,
    kind: StabilityKind,
    pr: &StabilityParams,
) -> Result<Formula, Error> {
    match kind {
        StabilityKind::Lyapunov => encode_lyapunov(s, pr),
        StabilityKind::Asymptotic => encode_asymptotic(s, pr),
        StabilityKind::AsymptoticInLarge => encode_asymptotic_in_large(s, pr),
    }
}

pub fn check_stability(
    s: &Arc<OdeSystem>,
    kind: StabilityKind,
    pr: &StabilityParams,
) -> Result<StabilityVerdict, Error> {
    check_stability_with(s, kind, pr, &SolverConfig::new(pr.delta), &Sequential)
}

/// Decides the negated sentence; `base` supplies everything but δ.
pub fn check_stability_with<E: Executor>(
    s: &Arc<OdeSystem>,
    kind: StabilityKind,
    pr: &StabilityParams,
    base: &SolverConfig,
    exec: &E,
) -> Result<StabilityVerdict, Error> {
    let sentence = encode(s, kind, pr)?;
    decide_sentence(&sentence, pr, base, exec)
}

/// Negate-then-decide for an already encoded stability sentence.
pub fn decide_sentence<E: Executor>(
    sentence: &Formula,
    pr: &StabilityParams,
    base: &SolverConfig,
    exec: &E,
) -> Result<StabilityVerdict, Error> {
    let cfg = SolverConfig {
        delta: pr.delta,
        ..base.clone()
    };
    let v = decide_with(&sentence.negate(), &cfg, exec, None)?;
    Ok(StabilityVerdict {
        verdict: match v.answer {
            Answer::ExactFalse => Stability::Stable,
            Answer::DeltaTrue => Stability::DeltaUnstable,
        },
        witness: match v.answer {
            Answer::DeltaTrue => v.witness,
            Answer::ExactFalse => None,
        },
        class: classify(sentence).class,
        stats: v.stats,
    })
}

/// A parametric Lyapunov function template `V(p, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovCandidate {
    pub template: Term,
    /// `∂V/∂x`; derived symbolically when `None`.
    pub gradient: Option<Vec<Term>>,
    pub params: Vec<(Name, Rational, Rational)>,
    /// State region; the system's declared box when `None`.
    pub region: Option<Vec<(Rational, Rational)>>,
    /// Conditions are imposed only on `||x|| >= exclusion`.
    pub exclusion: Rational,
    /// Require strict decrease.
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lyapunov {
    Success,
    DeltaFail,
}

impl fmt::Display for Lyapunov {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lyapunov::Success => "success",
            Lyapunov::DeltaFail => "delta-fail",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovVerdict {
    pub verdict: Lyapunov,
    /// Parameter box certified at δ/2 on success.
    pub witness: Option<IntervalBox>,
    pub class: Alternation,
    pub stats: SolverStats,
}

fn max_radius(region: &[(Rational, Rational)]) -> Interval {
    let parts: Vec<Interval> = region
        .iter()
        .map(|(lo, hi)| {
            let m = Interval::from_rational(lo)
                .mag()
                .max(Interval::from_rational(hi).mag());
            Interval::point(m)
        })
        .collect();
    Interval::norm(&parts).unwrap_or(Interval::point(0.0))
}

fn checked_gradient(
    s: &OdeSystem,
    c: &LyapunovCandidate,
    region: &[(Rational, Rational)],
) -> Result<Vec<Term>, Error> {
    let derived = gradient(&c.template, s.vars())?;
    let Some(given) = &c.gradient else {
        return Ok(derived);
    };
    if given.len() != s.dim() {
        return Err(Error::InvalidParams(String::from(
            "gradient length differs from the state dimension",
        )));
    }
    // compare at the region's corners and centre with parameters at midpoints
    let mut base = IntervalBox::new();
    for (p, lo, hi) in &c.params {
        let m = Interval::from_rational(lo)
            .hull(&Interval::from_rational(hi))
            .mid();
        base.insert(p.clone(), Interval::point(m));
    }
    let n = s.dim().min(6);
    for mask in 0..=(1u32 << n) {
        let mut b = base.clone();
        for (i, (v, (lo, hi))) in s.vars().iter().zip(region).enumerate() {
            let (lo, hi) = (
                Interval::from_rational(lo).lo(),
                Interval::from_rational(hi).hi(),
            );
            let x = if mask == 1 << n || i >= n {
                (lo + hi) / 2.0
            } else if mask & (1 << i) != 0 {
                hi
            } else {
                lo
            };
            b.insert(v.clone(), Interval::point(x));
        }
        for (g, d) in given.iter().zip(&derived) {
            if let (Ok(a), Ok(e)) = (eval_term(g, &b), eval_term(d, &b)) {
                if a.intersect(&e).is_none() {
                    return Err(Error::InvalidParams(format!(
                        "supplied gradient disagrees with the template at {}",
                        b
                    )));
                }
            }
        }
    }
    Ok(given.clone())
}

/// `∃p∈D ∀x∈X. V(p,0) = 0 ∧ (||x|| ≥ r → V > 0) ∧ (||x|| ≥ r → ∇V·f ≤ 0)`,
/// with `< 0` in the last conjunct when strict.
pub fn encode_lyapunov_candidate(
    s: &Arc<OdeSystem>,
    c: &LyapunovCandidate,
) -> Result<Formula, Error> {
    let zero = Rational::from_integer(0);
    if c.exclusion <= zero {
        return Err(Error::InvalidParams(String::from(
            "exclusion radius must be positive",
        )));
    }
    let region = match &c.region {
        Some(x) => x.clone(),
        None => StabilityParams::new(Rational::from_integer(1)).region_of(s.bounds())?,
    };
    if region.len() != s.dim() || region.iter().any(|(lo, hi)| lo > hi) {
        return Err(Error::InvalidParams(String::from(
            "region does not match the state",
        )));
    }
    if Interval::from_rational(&c.exclusion).lo() >= max_radius(&region).hi() {
        return Err(Error::InvalidParams(String::from(
            "exclusion radius leaves no part of the region",
        )));
    }
    for v in c.template.free_vars() {
        let known = s.vars().contains(&v) || c.params.iter().any(|(p, _, _)| *p == v);
        if !known {
            return Err(Error::UnboundVariable(v));
        }
    }
    let grad = checked_gradient(s, c, &region)?;
    let x: Vec<Term> = vars_of(s.vars());
    let decrease = grad
        .iter()
        .zip(s.rhs())
        .map(|(g, f)| Term::mul(g.clone(), f.clone()))
        .reduce(Term::add)
        .unwrap_or_else(Term::zero);
    let at_origin = {
        let m = s.vars().iter().map(|v| (v.clone(), Term::zero())).collect();
        c.template.substitute(&m)
    };
    let near = Formula::less(Term::norm(x), konst(&c.exclusion));
    let decreasing = if c.strict {
        Formula::less(decrease, Term::zero())
    } else {
        Formula::less_eq(decrease, Term::zero())
    };
    let body = Formula::and(vec![
        Formula::equal(at_origin, Term::zero()),
        Formula::or(vec![
            near.clone(),
            Formula::greater(c.template.clone(), Term::zero()),
        ]),
        Formula::or(vec![near, decreasing]),
    ]);
    let inner = forall_box(s.vars(), &region, body);
    Ok(c.params.iter().rev().fold(inner, |acc, (p, lo, hi)| {
        Formula::exists(p, konst(lo), konst(hi), acc)
    }))
}

pub fn lyapunov_test(
    s: &Arc<OdeSystem>,
    c: &LyapunovCandidate,
    delta: &Rational,
) -> Result<LyapunovVerdict, Error> {
    lyapunov_test_with(s, c, &SolverConfig::new(*delta), &Sequential)
}

/// Decides the negated candidate sentence at `cfg.delta`; on success the
/// positive form is re-solved at δ/2 for a parameter box.
pub fn lyapunov_test_with<E: Executor>(
    s: &Arc<OdeSystem>,
    c: &LyapunovCandidate,
    cfg: &SolverConfig,
    exec: &E,
) -> Result<LyapunovVerdict, Error> {
    let sentence = encode_lyapunov_candidate(s, c)?;
    let class = classify(&sentence).class;
    let v = decide_with(&sentence.negate(), cfg, exec, None)?;
    let mut stats = v.stats;
    if v.answer == Answer::DeltaTrue {
        return Ok(LyapunovVerdict {
            verdict: Lyapunov::DeltaFail,
            witness: None,
            class,
            stats,
        });
    }
    let half = SolverConfig {
        delta: cfg.delta / Rational::from_integer(2),
        ..cfg.clone()
    };
    let witness = match decide_with(&sentence, &half, exec, None) {
        Ok(p) => {
            stats.merge(&p.stats);
            p.witness.map(|w| {
                let mut out = IntervalBox::new();
                for (n, _, _) in &c.params {
                    if let Some(i) = w.get(n) {
                        out.insert(n.clone(), i);
                    }
                }
                out
            })
        }
        Err(Error::ResolutionFloor) => None,
        Err(e) => return Err(e),
    };
    Ok(LyapunovVerdict {
        verdict: Lyapunov::Success,
        witness,
        class,
        stats,
    })
}

/// Result of an iterative-deepening run. Exhaustion never asserts stability.
#[derive(Clone, Debug, PartialEq)]
pub enum Deepening {
    DeltaUnstableAt {
        radius: Option<Rational>,
        time: Rational,
        verdict: StabilityVerdict,
    },
    Exhausted,
}

/// One completed check of a deepening run.
#[derive(Clone, Debug, PartialEq)]
pub struct DeepenStep {
    pub radius: Option<Rational>,
    pub time: Rational,
    pub verdict: Stability,
    pub stats: SolverStats,
}

fn increasing(schedule: &[Rational]) -> Result<(), Error> {
    let zero = Rational::from_integer(0);
    if schedule.iter().any(|t| *t <= zero) || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(String::from(
            "schedule must be positive and strictly increasing",
        )));
    }
    Ok(())
}

/// Bounded Lyapunov checks for growing horizons, stopping at the first
/// δ-unstable one. `proceed` is consulted before every check and may end the
/// run early.
pub fn deepen_lyapunov<E: Executor>(
    s: &Arc<OdeSystem>,
    pr: &StabilityParams,
    schedule: &[Rational],
    base: &SolverConfig,
    exec: &E,
    proceed: &mut dyn FnMut(&[DeepenStep]) -> bool,
) -> Result<(Deepening, Vec<DeepenStep>), Error> {
    increasing(schedule)?;
    let mut steps = Vec::new();
    for t in schedule {
        if !proceed(&steps) {
            break;
        }
        let p = StabilityParams {
            time_bound: *t,
            ..pr.clone()
        };
        let v = check_stability_with(s, StabilityKind::Lyapunov, &p, base, exec)?;
        steps.push(DeepenStep {
            radius: None,
            time: *t,
            verdict: v.verdict,
            stats: v.stats.clone(),
        });
        if v.verdict == Stability::DeltaUnstable {
            return Ok((
                Deepening::DeltaUnstableAt {
                    radius: None,
                    time: *t,
                    verdict: v,
                },
                steps,
            ));
        }
    }
    Ok((Deepening::Exhausted, steps))
}

/// Two-level search over convergence radii δ' and horizons, stopping at the
/// first pair whose asymptotic check is δ-unstable.
pub fn deepen_asymptotic<E: Executor>(
    s: &Arc<OdeSystem>,
    pr: &StabilityParams,
    radii: &[Rational],
    times: &[Rational],
    base: &SolverConfig,
    exec: &E,
    proceed: &mut dyn FnMut(&[DeepenStep]) -> bool,
) -> Result<(Deepening, Vec<DeepenStep>), Error> {
    increasing(radii)?;
    increasing(times)?;
    let mut steps = Vec::new();
    for d in radii {
        for t in times {
            if !proceed(&steps) {
                return Ok((Deepening::Exhausted, steps));
            }
            let floor = if pr.conv_floor < *d {
                pr.conv_floor
            } else {
                *d
            };
            let p = StabilityParams {
                time_bound: *t,
                conv_time: Some(*t),
                conv_radius: *d,
                conv_floor: floor,
                ..pr.clone()
            };
            let v = check_stability_with(s, StabilityKind::Asymptotic, &p, base, exec)?;
            steps.push(DeepenStep {
                radius: Some(*d),
                time: *t,
                verdict: v.verdict,
                stats: v.stats.clone(),
            });
            if v.verdict == Stability::DeltaUnstable {
                return Ok((
                    Deepening::DeltaUnstableAt {
                        radius: Some(*d),
                        time: *t,
                        verdict: v,
                    },
                    steps,
                ));
            }
        }
    }
    Ok((Deepening::Exhausted, steps))
}

/// Budget that allows at most `n` checks.
pub fn step_budget(n: usize) -> impl FnMut(&[DeepenStep]) -> bool {
    move |done: &[DeepenStep]| done.len() < n
}

#[cfg(test)]
mod tests;
