//! Reference semantics in plain `f64` and random formula generators, shared
//! by the property tests and the acceptance suite.
//!
//! The evaluator is written against the AST only; it does not call the
//! library's interval code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use dstab_core::formula::{Bounded, Func, Rel};
use dstab_core::solver::{decide, Answer, SolverConfig};
use dstab_core::{Error, Formula, Rational, Term};
use proptest::prelude::*;

pub type Point = BTreeMap<String, f64>;

pub fn q(v: &Rational) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

/// Value of a flow-free term, or `None` where it is undefined.
pub fn eval(t: &Term, at: &Point) -> Option<f64> {
    let v = match t {
        Term::Var(n) => *at.get(&**n)?,
        Term::Const(c) => q(c),
        Term::Flow(_) => return None,
        Term::Apply(f, args) => {
            let a: Vec<f64> = args.iter().map(|x| eval(x, at)).collect::<Option<_>>()?;
            match f {
                Func::Add => a[0] + a[1],
                Func::Sub => a[0] - a[1],
                Func::Mul => a[0] * a[1],
                Func::Div if a[1] == 0.0 => return None,
                Func::Div => a[0] / a[1],
                Func::Neg => -a[0],
                Func::Pow(n) => a[0].powi(*n),
                Func::Abs => a[0].abs(),
                Func::Min => a[0].min(a[1]),
                Func::Max => a[0].max(a[1]),
                Func::Exp => a[0].exp(),
                Func::Sin => a[0].sin(),
                Func::Cos => a[0].cos(),
                Func::Sqrt if a[0] < 0.0 => return None,
                Func::Sqrt => a[0].sqrt(),
                Func::Norm => a.iter().map(|x| x * x).sum::<f64>().sqrt(),
            }
        }
    };
    (!v.is_nan()).then_some(v)
}

/// Truth of a quantifier-free formula at a point.
pub fn holds(f: &Formula, at: &Point) -> Option<bool> {
    Some(match f {
        Formula::Atom(t, Rel::Gt) => eval(t, at)? > 0.0,
        Formula::Atom(t, Rel::Ge) => eval(t, at)? >= 0.0,
        Formula::And(ps) => {
            let mut all = true;
            for p in ps {
                all &= holds(p, at)?;
            }
            all
        }
        Formula::Or(ps) => {
            let mut any = false;
            for p in ps {
                any |= holds(p, at)?;
            }
            any
        }
        Formula::Exists(_) | Formula::Forall(_) => return None,
    })
}

/// Smallest atom magnitude at a point; near zero the float verdict of an atom
/// is not trustworthy.
pub fn margin(f: &Formula, at: &Point) -> Option<f64> {
    let mut m = f64::INFINITY;
    let mut ok = true;
    f.for_each_atom(&mut |t, _| match eval(t, at) {
        Some(v) => m = m.min(v.abs()),
        None => ok = false,
    });
    ok.then_some(m)
}

/// Grid approximation of a sentence's robustness: atoms give their value,
/// `∧`/`∀` take minima and `∨`/`∃` maxima over `n + 1` points per bound.
/// Also returns the largest change between neighbouring grid points, which
/// bounds how far the grid can be from the continuum value.
pub struct Robust {
    pub value: f64,
    pub jump: f64,
}

pub fn robustness(f: &Formula, n: usize) -> Option<Robust> {
    let mut jump = 0.0f64;
    let value = rob(f, &mut Point::new(), n, &mut jump)?;
    Some(Robust { value, jump })
}

fn rob(f: &Formula, at: &mut Point, n: usize, jump: &mut f64) -> Option<f64> {
    match f {
        Formula::Atom(t, _) => eval(t, at),
        Formula::And(ps) => ps
            .iter()
            .try_fold(f64::INFINITY, |m, p| Some(m.min(rob(p, at, n, jump)?))),
        Formula::Or(ps) => ps
            .iter()
            .try_fold(f64::NEG_INFINITY, |m, p| Some(m.max(rob(p, at, n, jump)?))),
        Formula::Exists(b) | Formula::Forall(b) => {
            let exists = matches!(f, Formula::Exists(_));
            let (lo, hi) = bounds(b, at)?;
            let mut best = if exists {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
            let mut prev: Option<f64> = None;
            let key = b.var.to_string();
            let saved = at.get(&key).copied();
            for i in 0..=n {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                at.insert(key.clone(), x);
                let v = rob(&b.body, at, n, jump)?;
                if let Some(p) = prev {
                    *jump = jump.max((v - p).abs());
                }
                prev = Some(v);
                best = if exists { best.max(v) } else { best.min(v) };
            }
            match saved {
                Some(s) => at.insert(key, s),
                None => at.remove(&key),
            };
            Some(best)
        }
    }
}

fn bounds(b: &Bounded, at: &Point) -> Option<(f64, f64)> {
    let lo = eval(&b.lower, at)?;
    let hi = eval(&b.upper, at)?;
    (lo <= hi).then_some((lo, hi))
}

pub const VARS: [&str; 3] = ["x", "y", "z"];

fn leaf(vars: usize) -> BoxedStrategy<Term> {
    let konst = (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Term::ratio(n, d));
    if vars == 0 {
        return konst.boxed();
    }
    prop_oneof![
        (0..vars).prop_map(|i| Term::var(VARS[i])),
        (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Term::ratio(n, d)),
    ]
    .boxed()
}

/// Random terms over the first `vars` variables. `wild` adds `exp`, `sqrt`
/// and division, whose slopes can be steep.
pub fn term(vars: usize, wild: bool) -> BoxedStrategy<Term> {
    leaf(vars)
        .prop_recursive(3, 12, 2, move |inner| {
            let mut ops: Vec<BoxedStrategy<Term>> = vec![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Term::add(a, b))
                    .boxed(),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Term::sub(a, b))
                    .boxed(),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Term::mul(a, b))
                    .boxed(),
                inner.clone().prop_map(Term::neg).boxed(),
                (inner.clone(), 2i32..=3)
                    .prop_map(|(a, k)| Term::pow(a, k))
                    .boxed(),
                inner
                    .clone()
                    .prop_map(|a| Term::apply(Func::Abs, vec![a]))
                    .boxed(),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Term::apply(Func::Min, vec![a, b]))
                    .boxed(),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Term::apply(Func::Max, vec![a, b]))
                    .boxed(),
                inner
                    .clone()
                    .prop_map(|a| Term::apply(Func::Sin, vec![a]))
                    .boxed(),
                inner
                    .clone()
                    .prop_map(|a| Term::apply(Func::Cos, vec![a]))
                    .boxed(),
            ];
            if wild {
                ops.push(
                    inner
                        .clone()
                        .prop_map(|a| Term::apply(Func::Exp, vec![a]))
                        .boxed(),
                );
                ops.push(
                    inner
                        .clone()
                        .prop_map(|a| {
                            Term::apply(Func::Sqrt, vec![Term::apply(Func::Abs, vec![a])])
                        })
                        .boxed(),
                );
                ops.push(
                    (inner.clone(), inner)
                        .prop_map(|(a, b)| Term::div(a, b))
                        .boxed(),
                );
            }
            proptest::strategy::Union::new(ops)
        })
        .boxed()
}

fn atom(vars: usize, wild: bool) -> BoxedStrategy<Formula> {
    (term(vars, wild), 0..4u8)
        .prop_map(|(t, r)| match r {
            0 => Formula::gt(t),
            1 => Formula::ge(t),
            2 => Formula::less(t, Term::ratio(1, 2)),
            _ => Formula::less_eq(Term::zero(), t),
        })
        .boxed()
}

/// Quantifier-free formulas over the first `vars` variables.
pub fn qf_formula(vars: usize, wild: bool) -> BoxedStrategy<Formula> {
    atom(vars, wild)
        .prop_recursive(2, 8, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::and),
                prop::collection::vec(inner, 2..=3).prop_map(Formula::or),
            ]
        })
        .boxed()
}

/// Sentences with up to two bounded quantifiers over `[-1, 1]`-sized ranges;
/// the second range may depend on the first variable.
pub fn sentence() -> BoxedStrategy<Formula> {
    (
        0usize..=2,
        any::<bool>(),
        any::<bool>(),
        0..3u8,
        -2i64..=1,
        -2i64..=1,
    )
        .prop_flat_map(|(n, q1, q2, dep, a, b)| {
            qf_formula(n, false).prop_map(move |body| {
                let quant = |ex: bool, v: &str, lo: Term, hi: Term, body: Formula| {
                    if ex {
                        Formula::exists(v, lo, hi, body)
                    } else {
                        Formula::forall(v, lo, hi, body)
                    }
                };
                let range = |k: i64| (Term::ratio(k, 2), Term::ratio(k + 2, 2));
                let mut f = body;
                if n == 2 {
                    let (lo, hi) = match dep {
                        0 => (Term::sub(Term::var("x"), Term::one()), Term::var("x")),
                        _ => range(b),
                    };
                    f = quant(q2, "y", lo, hi, f);
                }
                if n >= 1 {
                    let (lo, hi) = range(a);
                    f = quant(q1, "x", lo, hi, f);
                }
                f
            })
        })
        .boxed()
}

/// Uniform points of `[-1, 1]^k` named after [`VARS`].
pub fn point(k: usize) -> BoxedStrategy<Point> {
    prop::collection::vec(-1.0f64..=1.0, k)
        .prop_map(|xs| {
            xs.into_iter()
                .enumerate()
                .map(|(i, v)| (VARS[i].to_string(), v))
                .collect()
        })
        .boxed()
}

/// Checks one decision against the grid oracle. Returns the answer, `None`
/// when either side is undecided, or a message on a contradiction.
pub fn check_decision(f: &Formula, delta: &Rational) -> Result<Option<Answer>, String> {
    let cfg = SolverConfig {
        max_effort_level: 10,
        ..SolverConfig::new(*delta)
    };
    let answer = match decide(f, &cfg) {
        Ok(v) => v.answer,
        Err(Error::ResolutionFloor) | Err(Error::Domain(_)) => return Ok(None),
        Err(e) => return Err(format!("{}: {}", f, e)),
    };
    let Some(r) = robustness(f, 200) else {
        return Ok(None);
    };
    let d = q(delta);
    let slack = r.jump + 1e-9;
    match answer {
        Answer::ExactFalse if r.value > slack => Err(format!(
            "false, but the grid finds {} > {}: {}",
            r.value, slack, f
        )),
        Answer::DeltaTrue if r.value < -d - slack => Err(format!(
            "delta-true, but the grid finds {} < -{} - {}: {}",
            r.value, d, slack, f
        )),
        _ => Ok(Some(answer)),
    }
}
