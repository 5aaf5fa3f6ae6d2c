//! Forward-backward interval contraction (HC4-revise) of atom constraints.
//!
//! Contraction only removes points where the exact constraint fails, so a
//! leaf that contracts to the empty box is exactly false.

use alloc::vec::Vec;

use crate::formula::{Formula, Func, Name, Term};
use crate::interval::{apply_func, eval_term_in, FlowEval, Interval, IntervalBox};

/// Marker for an infeasible constraint.
pub(crate) struct Empty;

struct Node {
    value: Interval,
    end: usize,
}

fn forward(
    t: &Term,
    b: &IntervalBox,
    flows: &mut dyn FlowEval,
    out: &mut Vec<Node>,
) -> Option<Interval> {
    let at = out.len();
    out.push(Node {
        value: Interval::point(0.0),
        end: 0,
    });
    let v = match t {
        Term::Var(v) => b.get(v)?,
        Term::Const(c) => Interval::from_rational(c),
        Term::Apply(f, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(forward(a, b, flows, out)?);
            }
            apply_func(*f, &vals).ok()?
        }
        Term::Flow(_) => eval_term_in(t, b, flows).ok()?,
    };
    out[at] = Node {
        value: v,
        end: out.len(),
    };
    Some(v)
}

fn meet(a: Interval, b: Interval) -> Result<Interval, Empty> {
    a.intersect(&b).ok_or(Empty)
}

fn nonneg(r: Interval) -> Result<Interval, Empty> {
    meet(r, Interval::new(0.0, f64::INFINITY))
}

fn widen_rel(x: f64, up: bool) -> f64 {
    let m = 1e-12 * x.abs() + 1e-300;
    if up {
        x + m
    } else {
        (x - m).max(0.0)
    }
}

/// Enclosure of the nonnegative `n`-th roots of `r ⊆ [0, ∞)`.
fn root(r: Interval, n: i32) -> Interval {
    let e = 1.0 / n as f64;
    let lo = if r.lo() <= 0.0 {
        0.0
    } else {
        widen_rel(libm::pow(r.lo(), e), false)
    };
    let hi = if r.hi() == f64::INFINITY {
        f64::INFINITY
    } else {
        widen_rel(libm::pow(r.hi(), e), true)
    };
    Interval::new(lo, hi.max(lo))
}

/// `{x ∈ cur : |x| ∈ m}` hulled, for `m ⊆ [0, ∞)`.
fn symmetric(m: Interval, cur: Interval) -> Result<Interval, Empty> {
    let pos = m.intersect(&cur);
    let neg = m.neg().intersect(&cur);
    match (pos, neg) {
        (Some(p), Some(n)) => Ok(p.hull(&n)),
        (Some(p), None) => Ok(p),
        (None, Some(n)) => Ok(n),
        (None, None) => Err(Empty),
    }
}

struct Backward<'a> {
    nodes: &'a [Node],
    vars: &'a [Name],
    b: &'a mut IntervalBox,
}

impl Backward<'_> {
    fn run(&mut self, t: &Term, at: usize, target: Interval) -> Result<(), Empty> {
        let r = meet(self.nodes[at].value, target)?;
        match t {
            Term::Var(v) => {
                if self.vars.iter().any(|w| w == v) {
                    // a variable may occur several times; keep every narrowing
                    let cur = self.b.get(v).ok_or(Empty)?;
                    self.b.insert(v.clone(), meet(cur, r)?);
                }
                Ok(())
            }
            Term::Const(_) | Term::Flow(_) => Ok(()),
            Term::Apply(f, args) => {
                let ia = at + 1;
                let va = self.nodes[ia].value;
                let (ib, vb) = if args.len() > 1 {
                    let ib = self.nodes[ia].end;
                    (ib, self.nodes[ib].value)
                } else {
                    (0, va)
                };
                match f {
                    Func::Add => {
                        self.run(&args[0], ia, r.sub(vb))?;
                        self.run(&args[1], ib, r.sub(va))
                    }
                    Func::Sub => {
                        self.run(&args[0], ia, r.add(vb))?;
                        self.run(&args[1], ib, va.sub(r))
                    }
                    Func::Mul => {
                        if let Ok(q) = r.div(vb) {
                            self.run(&args[0], ia, q)?;
                        }
                        if let Ok(q) = r.div(va) {
                            self.run(&args[1], ib, q)?;
                        }
                        Ok(())
                    }
                    Func::Div => {
                        self.run(&args[0], ia, r.mul(vb))?;
                        if let Ok(q) = va.div(r) {
                            self.run(&args[1], ib, q)?;
                        }
                        Ok(())
                    }
                    Func::Neg => self.run(&args[0], ia, r.neg()),
                    Func::Pow(n) if *n > 0 => {
                        let n = *n;
                        if n % 2 == 0 {
                            let m = root(nonneg(r)?, n);
                            self.run(&args[0], ia, symmetric(m, va)?)
                        } else {
                            let pos = r.intersect(&Interval::new(0.0, f64::INFINITY));
                            let neg = r.intersect(&Interval::new(f64::NEG_INFINITY, 0.0));
                            let mut acc: Option<Interval> = None;
                            if let Some(p) = pos {
                                acc = Some(root(p, n));
                            }
                            if let Some(q) = neg {
                                let m = root(q.neg(), n).neg();
                                acc = Some(acc.map_or(m, |a| a.hull(&m)));
                            }
                            self.run(&args[0], ia, acc.ok_or(Empty)?)
                        }
                    }
                    Func::Abs => {
                        let m = nonneg(r)?;
                        self.run(&args[0], ia, symmetric(m, va)?)
                    }
                    Func::Sqrt => {
                        let m = nonneg(r)?;
                        self.run(&args[0], ia, m.sqr())
                    }
                    Func::Exp => {
                        if r.hi() <= 0.0 {
                            return Err(Empty);
                        }
                        let lo = if r.lo() <= 0.0 {
                            f64::NEG_INFINITY
                        } else {
                            libm::log(r.lo()).next_down().next_down()
                        };
                        let hi = libm::log(r.hi()).next_up().next_up();
                        self.run(&args[0], ia, Interval::new(lo, hi))
                    }
                    Func::Norm => {
                        if args.len() == 1 {
                            let m = nonneg(r)?;
                            return self.run(&args[0], ia, symmetric(m, va)?);
                        }
                        let cap = nonneg(r)?.hi();
                        let cap2 = Interval::point(cap).sqr().hi();
                        let mut idx = Vec::with_capacity(args.len());
                        let mut i = ia;
                        for _ in args {
                            idx.push(i);
                            i = self.nodes[i].end;
                        }
                        let squares: Vec<f64> = idx
                            .iter()
                            .map(|&i| Interval::point(self.nodes[i].value.mig()).sqr().lo())
                            .collect();
                        for (k, a) in args.iter().enumerate() {
                            let others = squares
                                .iter()
                                .enumerate()
                                .filter(|(j, _)| *j != k)
                                .fold(Interval::point(0.0), |acc, (_, q)| {
                                    acc.add(Interval::point(*q))
                                })
                                .lo();
                            let room = Interval::point(cap2).sub(Interval::point(others)).hi();
                            if room < 0.0 {
                                return Err(Empty);
                            }
                            let s = Interval::point(room).sqrt().map_err(|_| Empty)?.hi();
                            self.run(a, idx[k], Interval::new(-s, s))?;
                        }
                        Ok(())
                    }
                    _ => Ok(()),
                }
            }
        }
    }
}

/// Contracts the `vars` axes of `b` against `t rel 0`.
fn revise(
    t: &Term,
    b: &mut IntervalBox,
    vars: &[Name],
    flows: &mut dyn FlowEval,
) -> Result<(), Empty> {
    let mut nodes = Vec::new();
    if forward(t, b, flows, &mut nodes).is_none() {
        return Ok(());
    }
    let target = Interval::new(0.0, f64::INFINITY);
    Backward {
        nodes: &nodes,
        vars,
        b,
    }
    .run(t, 0, target)
}

/// Contracts `b` against the constraints of `f` that only involve variables
/// of `b`, looking through quantifiers whose bodies they must satisfy.
pub(crate) fn contract(
    f: &Formula,
    b: &mut IntervalBox,
    vars: &[Name],
    flows: &mut dyn FlowEval,
) -> Result<(), Empty> {
    match f {
        // t > 0 is contracted as t >= 0
        Formula::Atom(t, _) => revise(t, b, vars, flows),
        Formula::And(ps) => {
            for p in ps {
                contract(p, b, vars, flows)?;
            }
            Ok(())
        }
        Formula::Or(ps) => {
            let mut acc: Option<IntervalBox> = None;
            for p in ps {
                let mut c = b.clone();
                if contract(p, &mut c, vars, flows).is_ok() {
                    acc = Some(match acc {
                        None => c,
                        Some(a) => hull_boxes(&a, &c, vars),
                    });
                }
            }
            match acc {
                Some(a) => {
                    *b = a;
                    Ok(())
                }
                None => Err(Empty),
            }
        }
        Formula::Exists(q) | Formula::Forall(q) => {
            if b.get(&q.var).is_some() {
                return Ok(());
            }
            // a universal over a possibly empty range is vacuously true, so
            // it only implies its body's constraints when the range is not
            if matches!(f, Formula::Forall(_)) {
                let lo = eval_term_in(&q.lower, b, flows);
                let hi = eval_term_in(&q.upper, b, flows);
                match (lo, hi) {
                    (Ok(u), Ok(v)) if u.hi() <= v.lo() => {}
                    _ => return Ok(()),
                }
            }
            // atoms mentioning the bound variable cannot be evaluated here and
            // are skipped by `revise`
            contract(&q.body, b, vars, flows)
        }
    }
}

fn hull_boxes(a: &IntervalBox, c: &IntervalBox, vars: &[Name]) -> IntervalBox {
    let mut out = a.clone();
    for v in vars {
        if let (Some(x), Some(y)) = (a.get(v), c.get(v)) {
            out.insert(v.clone(), x.hull(&y));
        }
    }
    out
}
