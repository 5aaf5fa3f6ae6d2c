//! Outward-rounded interval arithmetic and enclosure evaluation of terms.
//!
//! Endpoints are `f64`. Basic operations compute the round-to-nearest result
//! and use an exact error term (two-sum, fused multiply-add) to decide which
//! endpoint needs a one-ulp step, so exact results stay exact. Library
//! transcendentals are inflated by two ulps on each side.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, ToPrimitive};

use crate::formula::{Func, Name, Rational, Term};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

fn down(x: f64) -> f64 {
    if x == f64::INFINITY {
        f64::MAX
    } else {
        x.next_down()
    }
}

fn up(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        f64::MIN
    } else {
        x.next_up()
    }
}

/// Sign of `true - computed` for `a + b`.
fn add_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s == f64::INFINITY && a.is_finite() && b.is_finite() {
            f64::MAX
        } else {
            s
        };
    }
    if add_err(a, b, s) < 0.0 {
        down(s)
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    -add_down(-a, -b)
}

fn mul_dir(a: f64, b: f64, upward: bool) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        if a.is_finite() && b.is_finite() {
            // overflow
            return if p > 0.0 {
                if upward {
                    p
                } else {
                    f64::MAX
                }
            } else if upward {
                f64::MIN
            } else {
                p
            };
        }
        return p;
    }
    if p == 0.0 || p.is_subnormal() {
        return if upward { up(p) } else { down(p) };
    }
    // err = computed - true
    let err = libm::fma(a, b, -p);
    if upward {
        if err < 0.0 {
            up(p)
        } else {
            p
        }
    } else if err > 0.0 {
        down(p)
    } else {
        p
    }
}

fn mul_down(a: f64, b: f64) -> f64 {
    mul_dir(a, b, false)
}

fn mul_up(a: f64, b: f64) -> f64 {
    mul_dir(a, b, true)
}

fn div_dir(a: f64, b: f64, upward: bool) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() || q == 0.0 || q.is_subnormal() || !b.is_finite() {
        return if upward { up(q) } else { down(q) };
    }
    // q - true = (q*b - a) / b
    let r = libm::fma(q, b, -a);
    let q_above = (r > 0.0) == (b > 0.0) && r != 0.0;
    let q_below = (r < 0.0) == (b > 0.0) && r != 0.0;
    if upward && q_below {
        up(q)
    } else if !upward && q_above {
        down(q)
    } else {
        q
    }
}

fn sqrt_dir(a: f64, upward: bool) -> f64 {
    let r = libm::sqrt(a);
    if r == 0.0 || !r.is_finite() {
        return r;
    }
    let err = libm::fma(r, r, -a);
    if upward && err < 0.0 {
        up(r)
    } else if !upward && err > 0.0 {
        down(r).max(0.0)
    } else {
        r
    }
}

fn inflate2_down(x: f64) -> f64 {
    down(down(x))
}

fn inflate2_up(x: f64) -> f64 {
    up(up(x))
}

fn pow_nonneg(x: f64, n: u32, upward: bool) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc = mul_dir(acc, x, upward);
    }
    acc
}

// the nearest double to 2π lies below it
const TAU_LO: f64 = core::f64::consts::TAU;

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(
            lo <= hi,
            "interval endpoints out of order: [{}, {}]",
            lo,
            hi
        );
        Interval { lo, hi }
    }

    pub fn try_new(lo: f64, hi: f64) -> Option<Interval> {
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    pub fn entire() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// Tightest enclosure of an exact rational.
    pub fn from_rational(r: &Rational) -> Interval {
        let (n, d) = (*r.numer(), *r.denom());
        const EXACT: i128 = 1 << 53;
        let nf = n
            .to_f64()
            .unwrap_or(if n > 0 { f64::MAX } else { f64::MIN });
        let df = d.to_f64().unwrap_or(f64::MAX);
        if n.abs() <= EXACT && d <= EXACT {
            return Interval {
                lo: div_dir(nf, df, false),
                hi: div_dir(nf, df, true),
            };
        }
        let q = nf / df;
        let mut lo = q;
        let mut hi = q;
        for _ in 0..4 {
            lo = down(lo);
            hi = up(hi);
        }
        if r.is_positive() {
            lo = lo.max(0.0);
        }
        Interval { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_infinite() || self.hi.is_infinite() {
            if self.lo.is_infinite() && self.hi.is_infinite() {
                return 0.0;
            }
            return if self.lo.is_infinite() {
                self.hi.min(0.0) - 1.0
            } else {
                self.lo.max(0.0) + 1.0
            };
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::try_new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Bisection at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (
            Interval { lo: self.lo, hi: m },
            Interval { lo: m, hi: self.hi },
        )
    }

    /// Symmetric widening by `r >= 0`.
    pub fn inflate(&self, r: f64) -> Interval {
        Interval {
            lo: add_down(self.lo, -r),
            hi: add_up(self.hi, r),
        }
    }

    pub fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, o.lo),
            hi: add_up(self.hi, o.hi),
        }
    }

    pub fn sub(self, o: Interval) -> Interval {
        self.add(o.neg())
    }

    pub fn mul(self, o: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let lo = mul_down(a, c)
            .min(mul_down(a, d))
            .min(mul_down(b, c))
            .min(mul_down(b, d));
        let hi = mul_up(a, c)
            .max(mul_up(a, d))
            .max(mul_up(b, c))
            .max(mul_up(b, d));
        Interval { lo, hi }
    }

    pub fn scale(self, k: f64) -> Interval {
        self.mul(Interval::point(k))
    }

    pub fn div(self, o: Interval) -> Result<Interval, Error> {
        if o.contains(0.0) {
            return Err(Error::Domain("division by an interval containing zero"));
        }
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let lo = div_dir(a, c, false)
            .min(div_dir(a, d, false))
            .min(div_dir(b, c, false))
            .min(div_dir(b, d, false));
        let hi = div_dir(a, c, true)
            .max(div_dir(a, d, true))
            .max(div_dir(b, c, true))
            .max(div_dir(b, d, true));
        Ok(Interval { lo, hi })
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval {
                lo: 0.0,
                hi: self.mag(),
            }
        }
    }

    pub fn min(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    pub fn max(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.max(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    pub fn sqr(self) -> Interval {
        self.powi(2).expect("square is total")
    }

    pub fn powi(self, n: i32) -> Result<Interval, Error> {
        if n == 0 {
            return Ok(Interval::point(1.0));
        }
        if n < 0 {
            return Interval::point(1.0).div(self.powi(-n)?);
        }
        let k = n as u32;
        let (a, b) = (self.lo, self.hi);
        Ok(if k.is_multiple_of(2) {
            if a >= 0.0 {
                Interval {
                    lo: pow_nonneg(a, k, false),
                    hi: pow_nonneg(b, k, true),
                }
            } else if b <= 0.0 {
                Interval {
                    lo: pow_nonneg(-b, k, false),
                    hi: pow_nonneg(-a, k, true),
                }
            } else {
                Interval {
                    lo: 0.0,
                    hi: pow_nonneg(self.mag(), k, true),
                }
            }
        } else {
            let odd = |x: f64, upward: bool| {
                if x >= 0.0 {
                    pow_nonneg(x, k, upward)
                } else {
                    -pow_nonneg(-x, k, !upward)
                }
            };
            Interval {
                lo: odd(a, false),
                hi: odd(b, true),
            }
        })
    }

    pub fn sqrt(self) -> Result<Interval, Error> {
        if self.lo < 0.0 {
            return Err(Error::Domain("square root of a possibly negative radicand"));
        }
        Ok(Interval {
            lo: sqrt_dir(self.lo, false),
            hi: sqrt_dir(self.hi, true),
        })
    }

    pub fn exp(self) -> Interval {
        let lo = if self.lo == f64::NEG_INFINITY {
            0.0
        } else {
            inflate2_down(libm::exp(self.lo)).max(0.0)
        };
        let hi = if self.hi == f64::INFINITY {
            f64::INFINITY
        } else {
            inflate2_up(libm::exp(self.hi))
        };
        Interval { lo, hi }
    }

    pub fn sin(self) -> Interval {
        // sin x = cos(x - π/2); shift handled by the shared kernel
        self.trig(core::f64::consts::FRAC_PI_2, libm::sin)
    }

    pub fn cos(self) -> Interval {
        self.trig(0.0, libm::cos)
    }

    /// `f` has maxima at `peak + 2kπ` and minima at `peak + π + 2kπ`.
    fn trig(self, peak: f64, f: fn(f64) -> f64) -> Interval {
        let full = Interval { lo: -1.0, hi: 1.0 };
        if !self.is_finite() || self.width() >= TAU_LO || self.mag() > 1e15 {
            return full;
        }
        let fa = f(self.lo);
        let fb = f(self.hi);
        let mut lo = inflate2_down(fa.min(fb)).max(-1.0);
        let mut hi = inflate2_up(fa.max(fb)).min(1.0);
        let slack = 1e-9 * (1.0 + self.mag());
        let contains_crit = |c0: f64| {
            // critical points c0 + 2kπ
            let k_lo = libm::floor((self.lo - slack - c0) / TAU_LO);
            let k_hi = libm::ceil((self.hi + slack - c0) / TAU_LO);
            let mut k = k_lo;
            while k <= k_hi {
                let c = c0 + k * TAU_LO;
                if c >= self.lo - slack && c <= self.hi + slack {
                    return true;
                }
                k += 1.0;
            }
            false
        };
        if contains_crit(peak) {
            hi = 1.0;
        }
        if contains_crit(peak + core::f64::consts::PI) {
            lo = -1.0;
        }
        Interval { lo, hi }
    }

    pub fn norm(parts: &[Interval]) -> Result<Interval, Error> {
        if parts.len() == 1 {
            return Ok(parts[0].abs());
        }
        let mut acc = Interval::point(0.0);
        for p in parts {
            acc = acc.add(p.sqr());
        }
        acc.lo = acc.lo.max(0.0);
        acc.sqrt()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Applies a library function to argument enclosures.
pub fn apply_func(func: Func, args: &[Interval]) -> Result<Interval, Error> {
    Ok(match func {
        Func::Add => args[0].add(args[1]),
        Func::Sub => args[0].sub(args[1]),
        Func::Mul => args[0].mul(args[1]),
        Func::Div => args[0].div(args[1])?,
        Func::Neg => args[0].neg(),
        Func::Pow(n) => args[0].powi(n)?,
        Func::Abs => args[0].abs(),
        Func::Min => args[0].min(args[1]),
        Func::Max => args[0].max(args[1]),
        Func::Exp => args[0].exp(),
        Func::Sin => args[0].sin(),
        Func::Cos => args[0].cos(),
        Func::Sqrt => args[0].sqrt()?,
        Func::Norm => Interval::norm(args)?,
    })
}

/// Named-variable box.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalBox {
    vars: BTreeMap<Name, Interval>,
}

impl IntervalBox {
    pub fn new() -> IntervalBox {
        IntervalBox::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> IntervalBox
    where
        I: IntoIterator<Item = (S, Interval)>,
        S: AsRef<str>,
    {
        let mut b = IntervalBox::new();
        for (k, v) in pairs {
            b.insert(crate::formula::name(k.as_ref()), v);
        }
        b
    }

    pub fn insert(&mut self, v: Name, i: Interval) {
        self.vars.insert(v, i);
    }

    pub fn remove(&mut self, v: &str) -> Option<Interval> {
        self.vars.remove(v)
    }

    pub fn with(mut self, v: Name, i: Interval) -> IntervalBox {
        self.insert(v, i);
        self
    }

    pub fn get(&self, v: &str) -> Option<Interval> {
        self.vars.get(v).copied()
    }

    pub fn contains_var(&self, v: &str) -> bool {
        self.vars.contains_key(v)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Interval)> {
        self.vars.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.vars.keys()
    }

    /// Maximum width over all variables (0 for the empty box).
    pub fn width(&self) -> f64 {
        self.vars.values().map(Interval::width).fold(0.0, f64::max)
    }

    /// Widest variable; ties go to the lexicographically first name.
    pub fn widest(&self) -> Option<&Name> {
        let mut best: Option<(&Name, f64)> = None;
        for (k, v) in &self.vars {
            let w = v.width();
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((k, w));
            }
        }
        best.map(|(k, _)| k)
    }

    pub fn is_subset(&self, other: &IntervalBox) -> bool {
        self.vars
            .iter()
            .all(|(k, v)| other.get(k).is_some_and(|o| v.is_subset(&o)))
    }

    pub fn contains_point(&self, p: &BTreeMap<Name, f64>) -> bool {
        self.vars
            .iter()
            .all(|(k, v)| p.get(k).is_some_and(|x| v.contains(*x)))
    }

    pub fn midpoint(&self) -> IntervalBox {
        IntervalBox {
            vars: self
                .vars
                .iter()
                .map(|(k, v)| (k.clone(), Interval::point(v.mid())))
                .collect(),
        }
    }

    pub fn merge(&mut self, other: &IntervalBox) {
        for (k, v) in &other.vars {
            self.vars.insert(k.clone(), *v);
        }
    }

    /// Bisects `axis` at its midpoint.
    pub fn split(&self, axis: &str) -> Result<(IntervalBox, IntervalBox), Error> {
        let iv = self
            .get(axis)
            .ok_or_else(|| Error::UnboundVariable(crate::formula::name(axis)))?;
        if iv.width() <= 0.0 || iv.mid() <= iv.lo() || iv.mid() >= iv.hi() {
            return Err(Error::ZeroWidth(crate::formula::name(axis)));
        }
        let (l, r) = iv.bisect();
        let key = self.vars.get_key_value(axis).unwrap().0.clone();
        let mut a = self.clone();
        let mut b = self.clone();
        a.vars.insert(key.clone(), l);
        b.vars.insert(key, r);
        Ok((a, b))
    }

    /// Splits the widest variable.
    pub fn split_widest(&self) -> Result<(IntervalBox, IntervalBox), Error> {
        let axis = self
            .widest()
            .ok_or(Error::ZeroWidth(crate::formula::name("")))?;
        self.split(&axis.clone())
    }
}

impl fmt::Display for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.vars.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}", k, v)?;
        }
        write!(f, "}}")
    }
}

/// Variable lookup used by term evaluation.
pub trait Env {
    fn lookup(&self, v: &str) -> Option<Interval>;
}

impl Env for IntervalBox {
    fn lookup(&self, v: &str) -> Option<Interval> {
        self.get(v)
    }
}

/// Positional environment over a small list of names.
pub struct SlotEnv<'a> {
    pub names: &'a [Name],
    pub values: &'a [Interval],
}

impl Env for SlotEnv<'_> {
    fn lookup(&self, v: &str) -> Option<Interval> {
        self.names
            .iter()
            .position(|n| &**n == v)
            .map(|i| self.values[i])
    }
}

/// Flow-term backend; terms without `flow(...)` never call it.
pub trait FlowEval {
    fn flow(
        &mut self,
        system: &crate::ode::OdeSystem,
        init: &[Interval],
        time: Interval,
    ) -> Result<Vec<Interval>, Error>;
}

/// Rejects flow terms.
pub struct NoFlow;

impl FlowEval for NoFlow {
    fn flow(
        &mut self,
        _: &crate::ode::OdeSystem,
        _: &[Interval],
        _: Interval,
    ) -> Result<Vec<Interval>, Error> {
        Err(Error::Unsupported("flow term in a flow-free context"))
    }
}

/// Enclosure of `{ t(p) : p in env }`.
pub fn eval_term_in(t: &Term, env: &dyn Env, flows: &mut dyn FlowEval) -> Result<Interval, Error> {
    match t {
        Term::Var(v) => env
            .lookup(v)
            .ok_or_else(|| Error::UnboundVariable(v.clone())),
        Term::Const(c) => Ok(Interval::from_rational(c)),
        Term::Apply(f, args) => {
            let mut vals: [Interval; 2] = [Interval::point(0.0); 2];
            if args.len() <= 2 {
                for (slot, a) in vals.iter_mut().zip(args) {
                    *slot = eval_term_in(a, env, flows)?;
                }
                apply_func(*f, &vals[..args.len()])
            } else {
                let vs = args
                    .iter()
                    .map(|a| eval_term_in(a, env, flows))
                    .collect::<Result<Vec<_>, _>>()?;
                apply_func(*f, &vs)
            }
        }
        Term::Flow(ft) => {
            let init = ft
                .init
                .iter()
                .map(|a| eval_term_in(a, env, flows))
                .collect::<Result<Vec<_>, _>>()?;
            let time = eval_term_in(&ft.time, env, flows)?;
            let out = flows.flow(&ft.system, &init, time)?;
            Ok(out[ft.component])
        }
    }
}

/// Enclosure of a term over a box. Flow terms are integrated with the default
/// tolerance of [`crate::ode::FlowCache`].
pub fn eval_term(t: &Term, b: &IntervalBox) -> Result<Interval, Error> {
    let mut flows = crate::ode::FlowCache::new(crate::ode::DEFAULT_TOL);
    eval_term_in(t, b, &mut flows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_term, Registry};

    fn t(s: &str) -> Term {
        parse_term(s, &Registry::new()).unwrap()
    }

    fn bx(pairs: &[(&str, f64, f64)]) -> IntervalBox {
        IntervalBox::from_pairs(pairs.iter().map(|(n, a, b)| (*n, Interval::new(*a, *b))))
    }

    #[test]
    fn exact_operations_stay_exact() {
        let a = Interval::point(0.5).add(Interval::point(0.25));
        assert_eq!(a, Interval::point(0.75));
        let m = Interval::point(3.0).mul(Interval::point(0.0));
        assert_eq!(m, Interval::point(0.0));
        let s = Interval::point(4.0).sqrt().unwrap();
        assert_eq!(s, Interval::point(2.0));
    }

    #[test]
    fn inexact_operations_bracket_the_truth() {
        let third = Interval::point(1.0).div(Interval::point(3.0)).unwrap();
        assert!(third.lo() < third.hi());
        assert!(third.lo() <= 1.0 / 3.0 && 1.0 / 3.0 <= third.hi());
        let tenth = Interval::from_rational(&Rational::new(1, 10));
        assert!(tenth.lo() < 0.1 || tenth.hi() > 0.1);
        assert!(tenth.contains(0.1));
        let r = Interval::point(2.0).sqrt().unwrap();
        assert!(r.contains(core::f64::consts::SQRT_2));
        assert!(r.lo() < r.hi());
    }

    #[test]
    fn square_on_unit_interval() {
        let v = eval_term(&t("x^2"), &bx(&[("x", 0.0, 1.0)])).unwrap();
        assert_eq!(v, Interval::new(0.0, 1.0));
        let w = eval_term(&t("x^2"), &bx(&[("x", -2.0, 1.0)])).unwrap();
        assert_eq!(w, Interval::new(0.0, 4.0));
        let c = eval_term(&t("x^3"), &bx(&[("x", -2.0, 1.0)])).unwrap();
        assert_eq!(c, Interval::new(-8.0, 1.0));
    }

    #[test]
    fn exp_at_one_is_tight() {
        let v = eval_term(&t("exp(x)"), &bx(&[("x", 1.0, 1.0)])).unwrap();
        // series oracle for e
        let mut e = 0.0f64;
        let mut term = 1.0f64;
        for k in 0..30 {
            e += term;
            term /= (k + 1) as f64;
        }
        assert!(v.contains(e));
        assert!(v.width() <= 2f64.powi(-20));
    }

    #[test]
    fn sin_over_half_period() {
        // just past π, where sin dips to about -0.0584
        let v = eval_term(&t("sin(x)"), &bx(&[("x", 0.0, 3.2)])).unwrap();
        assert!(v.lo() <= 3.2f64.sin() && v.hi() >= 1.0);
        assert!(v.lo() >= -0.06);
    }

    #[test]
    fn trig_critical_points() {
        let c = Interval::new(-0.1, 0.1).cos();
        assert_eq!(c.hi(), 1.0);
        assert!(c.lo() > 0.99);
        let s = Interval::new(4.0, 5.0).sin();
        assert_eq!(s.lo(), -1.0);
        assert!(s.hi() < -0.75);
        assert_eq!(Interval::new(0.0, 7.0).sin(), Interval::new(-1.0, 1.0));
    }

    #[test]
    fn domain_errors() {
        assert!(eval_term(&t("1 / x"), &bx(&[("x", -1.0, 1.0)])).is_err());
        assert!(eval_term(&t("sqrt(x)"), &bx(&[("x", -1.0, 1.0)])).is_err());
        assert!(eval_term(&t("sqrt(x)"), &bx(&[("x", 0.0, 4.0)])).is_ok());
        assert!(matches!(
            eval_term(&t("y"), &bx(&[("x", 0.0, 1.0)])),
            Err(Error::UnboundVariable(_))
        ));
    }

    #[test]
    fn norm_is_euclidean() {
        let v = eval_term(&t("norm(x, y)"), &bx(&[("x", 3.0, 3.0), ("y", 4.0, 4.0)])).unwrap();
        assert_eq!(v, Interval::point(5.0));
        let w = eval_term(&t("norm(x)"), &bx(&[("x", -2.0, 1.0)])).unwrap();
        assert_eq!(w, Interval::new(0.0, 2.0));
    }

    #[test]
    fn split_halves() {
        let b = bx(&[("x", 0.0, 2.0)]);
        let (l, r) = b.split("x").unwrap();
        assert_eq!(l.get("x"), Some(Interval::new(0.0, 1.0)));
        assert_eq!(r.get("x"), Some(Interval::new(1.0, 2.0)));
        assert!(matches!(
            bx(&[("x", 1.0, 1.0)]).split("x"),
            Err(Error::ZeroWidth(_))
        ));
    }

    #[test]
    fn widest_first_splitting_shrinks_geometrically() {
        let mut b = bx(&[("x", 0.0, 1.0), ("y", 0.0, 1.0), ("z", 0.0, 1.0)]);
        for _ in 0..3 * 4 {
            b = b.split_widest().unwrap().0;
        }
        assert_eq!(b.width(), 1.0 / 16.0);
    }
}
