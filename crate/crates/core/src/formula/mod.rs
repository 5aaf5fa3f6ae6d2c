//! Terms and negation-free formulas over the reals with bounded quantifiers.
//!
//! Formulas are kept in normal form: atoms are `t > 0` or `t >= 0`, connectives are
//! conjunction and disjunction, and negation is the syntactic [`Formula::negate`]
//! transform. Bounded quantifiers are primitive nodes.

mod diff;
mod parse;
mod prenex;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::ode::OdeSystem;

pub use diff::{gradient, jacobian};
pub use parse::{parse_formula, parse_term, ParseError, Parser, Registry, Token};
pub use prenex::{classify, prenex, Alternation, ComplexityReport, QuantKind};

/// Exact rational constant.
pub type Rational = num_rational::Ratio<i128>;

/// Variable name. Cheap to clone.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Function symbols of the term library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Add,
    Sub,
    Mul,
    /// Guarded: the divisor enclosure must exclude zero.
    Div,
    Neg,
    /// Integer power.
    Pow(i32),
    Abs,
    Min,
    Max,
    Exp,
    Sin,
    Cos,
    /// Guarded: the radicand enclosure must be nonnegative.
    Sqrt,
    /// Euclidean norm of the arguments.
    Norm,
}

impl Func {
    /// Required arity, `None` for variadic (`norm`).
    pub fn arity(self) -> Option<usize> {
        match self {
            Func::Add | Func::Sub | Func::Mul | Func::Div | Func::Min | Func::Max => Some(2),
            Func::Neg
            | Func::Pow(_)
            | Func::Abs
            | Func::Exp
            | Func::Sin
            | Func::Cos
            | Func::Sqrt => Some(1),
            Func::Norm => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Func::Add => "+",
            Func::Sub => "-",
            Func::Mul => "*",
            Func::Div => "/",
            Func::Neg => "-",
            Func::Pow(_) => "^",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Norm => "norm",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "norm" => Func::Norm,
            _ => return None,
        })
    }
}

/// The value of an ODE solution component: `Φ(init, time)[component]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowTerm {
    pub system: Arc<OdeSystem>,
    pub init: Vec<Term>,
    pub time: Term,
    pub component: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(Name),
    Const(Rational),
    Apply(Func, Vec<Term>),
    Flow(Box<FlowTerm>),
}

impl Term {
    pub fn var(s: &str) -> Term {
        Term::Var(name(s))
    }

    pub fn int(v: i64) -> Term {
        Term::Const(Rational::from_integer(v as i128))
    }

    pub fn ratio(n: i64, d: i64) -> Term {
        Term::Const(Rational::new(n as i128, d as i128))
    }

    pub fn zero() -> Term {
        Term::Const(Rational::zero())
    }

    pub fn one() -> Term {
        Term::Const(Rational::one())
    }

    /// Exact dyadic constant equal to a finite `f64`.
    pub fn from_f64(v: f64) -> Term {
        Term::Const(rational_from_f64(v).expect("finite constant"))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    fn is_const(&self, v: i128) -> bool {
        matches!(self, Term::Const(c) if *c == Rational::from_integer(v))
    }

    pub fn add(a: Term, b: Term) -> Term {
        match (&a, &b) {
            (Term::Const(x), Term::Const(y)) => {
                if let Some(s) = checked_add(x, y) {
                    return Term::Const(s);
                }
            }
            _ if a.is_const(0) => return b,
            _ if b.is_const(0) => return a,
            _ => {}
        }
        Term::Apply(Func::Add, vec![a, b])
    }

    pub fn sub(a: Term, b: Term) -> Term {
        match (&a, &b) {
            (Term::Const(x), Term::Const(y)) => {
                if let Some(s) = checked_add(x, &-*y) {
                    return Term::Const(s);
                }
            }
            _ if b.is_const(0) => return a,
            _ if a.is_const(0) => return Term::neg(b),
            _ => {}
        }
        Term::Apply(Func::Sub, vec![a, b])
    }

    pub fn mul(a: Term, b: Term) -> Term {
        match (&a, &b) {
            (Term::Const(x), Term::Const(y)) => {
                if let Some(p) = checked_mul(x, y) {
                    return Term::Const(p);
                }
            }
            _ if a.is_const(0) || b.is_const(0) => return Term::zero(),
            _ if a.is_const(1) => return b,
            _ if b.is_const(1) => return a,
            _ if a.is_const(-1) => return Term::neg(b),
            _ if b.is_const(-1) => return Term::neg(a),
            _ => {}
        }
        Term::Apply(Func::Mul, vec![a, b])
    }

    pub fn div(a: Term, b: Term) -> Term {
        if b.is_const(1) {
            return a;
        }
        if let (Term::Const(x), Term::Const(y)) = (&a, &b) {
            if !y.is_zero() {
                if let Some(q) = checked_mul(x, &y.recip()) {
                    return Term::Const(q);
                }
            }
        }
        Term::Apply(Func::Div, vec![a, b])
    }

    /// Negation with constant folding; `neg(neg(t)) == t` structurally.
    pub fn neg(a: Term) -> Term {
        match a {
            Term::Const(c) => Term::Const(-c),
            Term::Apply(Func::Neg, mut args) => args.pop().expect("unary"),
            other => Term::Apply(Func::Neg, vec![other]),
        }
    }

    pub fn pow(a: Term, n: i32) -> Term {
        match n {
            0 => Term::one(),
            1 => a,
            _ => Term::Apply(Func::Pow(n), vec![a]),
        }
    }

    pub fn apply(f: Func, args: Vec<Term>) -> Term {
        Term::Apply(f, args)
    }

    pub fn norm(args: Vec<Term>) -> Term {
        Term::Apply(Func::Norm, args)
    }

    pub fn flow(system: Arc<OdeSystem>, init: Vec<Term>, time: Term, component: usize) -> Term {
        Term::Flow(Box::new(FlowTerm {
            system,
            init,
            time,
            component,
        }))
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::Apply(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Term::Flow(f) => {
                f.init.iter().for_each(|a| a.collect_vars(out));
                f.time.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        match self {
            Term::Var(x) => &**x == v,
            Term::Const(_) => false,
            Term::Apply(_, args) => args.iter().any(|a| a.mentions(v)),
            Term::Flow(f) => f.init.iter().any(|a| a.mentions(v)) || f.time.mentions(v),
        }
    }

    pub fn contains_flow(&self) -> bool {
        match self {
            Term::Var(_) | Term::Const(_) => false,
            Term::Apply(_, args) => args.iter().any(Term::contains_flow),
            Term::Flow(_) => true,
        }
    }

    /// Simultaneous substitution of variables by terms.
    pub fn substitute(&self, map: &BTreeMap<Name, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::Apply(f, args) => {
                Term::Apply(*f, args.iter().map(|a| a.substitute(map)).collect())
            }
            Term::Flow(ft) => Term::Flow(Box::new(FlowTerm {
                system: ft.system.clone(),
                init: ft.init.iter().map(|a| a.substitute(map)).collect(),
                time: ft.time.substitute(map),
                component: ft.component,
            })),
        }
    }

    /// Checks that function arities are respected.
    pub fn check_arity(&self) -> Result<(), Func> {
        match self {
            Term::Apply(f, args) => {
                let ok = match f.arity() {
                    Some(n) => args.len() == n,
                    None => !args.is_empty(),
                };
                if !ok {
                    return Err(*f);
                }
                args.iter().try_for_each(Term::check_arity)
            }
            Term::Flow(ft) => {
                ft.init.iter().try_for_each(Term::check_arity)?;
                ft.time.check_arity()
            }
            _ => Ok(()),
        }
    }

    /// S-expression rendering used by golden tests.
    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        self.write_sexpr(&mut s);
        s
    }

    fn write_sexpr(&self, out: &mut String) {
        use core::fmt::Write;
        match self {
            Term::Var(v) => out.push_str(v),
            Term::Const(c) => {
                let _ = write!(out, "{}", RationalDisplay(c));
            }
            Term::Apply(f, args) => {
                out.push('(');
                match f {
                    Func::Neg => out.push_str("neg"),
                    Func::Pow(n) => {
                        let _ = write!(out, "^{}", n);
                    }
                    _ => out.push_str(f.symbol()),
                }
                for a in args {
                    out.push(' ');
                    a.write_sexpr(out);
                }
                out.push(')');
            }
            Term::Flow(ft) => {
                let _ = write!(out, "(flow {} {} ", ft.system.name, ft.component);
                ft.time.write_sexpr(out);
                for a in &ft.init {
                    out.push(' ');
                    a.write_sexpr(out);
                }
                out.push(')');
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Apply(Func::Add | Func::Sub, _) => 1,
            Term::Apply(Func::Mul | Func::Div, _) => 2,
            Term::Apply(Func::Neg, _) => 3,
            Term::Const(c) if c.is_negative() || !c.is_integer() => 3,
            Term::Apply(Func::Pow(_), _) => 4,
            _ => 5,
        }
    }
}

fn checked_add(a: &Rational, b: &Rational) -> Option<Rational> {
    use num_traits::CheckedAdd;
    a.checked_add(b)
}

fn checked_mul(a: &Rational, b: &Rational) -> Option<Rational> {
    use num_traits::CheckedMul;
    a.checked_mul(b)
}

/// Exact rational value of a finite `f64`.
pub fn rational_from_f64(v: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    if v == 0.0 {
        return Some(Rational::zero());
    }
    let bits = v.to_bits();
    let sign: i128 = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    let (mut mant, mut e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1i128 << 52), exp - 1075)
    };
    while mant & 1 == 0 && e < 0 {
        mant >>= 1;
        e += 1;
    }
    if e >= 0 {
        if e > 70 {
            return None;
        }
        Some(Rational::from_integer(sign * (mant << e)))
    } else {
        if -e > 120 {
            return None;
        }
        Some(Rational::new(sign * mant, 1i128 << (-e)))
    }
}

struct RationalDisplay<'a>(&'a Rational);

impl fmt::Display for RationalDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Infix rendering in the DSL grammar; re-parses to an equal term.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, t: &Term, min: u8) -> fmt::Result {
            if t.precedence() < min {
                write!(f, "({})", t)
            } else {
                write!(f, "{}", t)
            }
        }
        match self {
            Term::Var(v) => write!(f, "{}", v),
            Term::Const(c) => {
                if c.is_integer() && !c.is_negative() {
                    write!(f, "{}", c.numer())
                } else {
                    write!(f, "({})", RationalDisplay(c))
                }
            }
            Term::Apply(func, args) => match func {
                Func::Add | Func::Sub | Func::Mul | Func::Div => {
                    let p = self.precedence();
                    child(f, &args[0], p)?;
                    write!(f, " {} ", func.symbol())?;
                    // left-associative: right operand needs strictly higher precedence
                    child(f, &args[1], p + 1)
                }
                Func::Neg => {
                    write!(f, "-")?;
                    child(f, &args[0], 4)
                }
                Func::Pow(n) => {
                    child(f, &args[0], 5)?;
                    if *n < 0 {
                        write!(f, "^({})", n)
                    } else {
                        write!(f, "^{}", n)
                    }
                }
                _ => {
                    write!(f, "{}(", func.symbol())?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{}", a)?;
                    }
                    write!(f, ")")
                }
            },
            Term::Flow(ft) => {
                write!(f, "flow({}, {}, {}", ft.system.name, ft.component, ft.time)?;
                for a in &ft.init {
                    write!(f, ", {}", a)?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Atom relation against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    /// `t > 0`
    Gt,
    /// `t >= 0`
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bounded {
    pub var: Name,
    pub lower: Term,
    pub upper: Term,
    pub body: Box<Formula>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Atom(Term, Rel),
    /// Empty conjunction is `true`.
    And(Vec<Formula>),
    /// Empty disjunction is `false`.
    Or(Vec<Formula>),
    Exists(Bounded),
    Forall(Bounded),
}

impl Formula {
    pub fn tt() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn ff() -> Formula {
        Formula::Or(Vec::new())
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::And(v) if v.is_empty())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::Or(v) if v.is_empty())
    }

    pub fn gt(t: Term) -> Formula {
        Formula::Atom(t, Rel::Gt)
    }

    pub fn ge(t: Term) -> Formula {
        Formula::Atom(t, Rel::Ge)
    }

    /// `a > b`
    pub fn greater(a: Term, b: Term) -> Formula {
        Formula::gt(Term::sub(a, b))
    }

    /// `a >= b`
    pub fn greater_eq(a: Term, b: Term) -> Formula {
        Formula::ge(Term::sub(a, b))
    }

    /// `a < b`
    pub fn less(a: Term, b: Term) -> Formula {
        Formula::gt(Term::sub(b, a))
    }

    /// `a <= b`
    pub fn less_eq(a: Term, b: Term) -> Formula {
        Formula::ge(Term::sub(b, a))
    }

    /// `a = b`, derived as `d >= 0 /\ -d >= 0` with `d = a - b`.
    pub fn equal(a: Term, b: Term) -> Formula {
        let d = Term::sub(a, b);
        Formula::And(vec![Formula::ge(d.clone()), Formula::ge(Term::neg(d))])
    }

    /// Conjunction that flattens nested conjunctions and folds constants.
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Formula::And(inner) => out.extend(inner),
                p if p.is_false() => return Formula::ff(),
                p => out.push(p),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Formula::And(out)
        }
    }

    /// Disjunction that flattens nested disjunctions and folds constants.
    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Formula::Or(inner) => out.extend(inner),
                p if p.is_true() => return Formula::tt(),
                p => out.push(p),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Formula::Or(out)
        }
    }

    /// `a -> b` as `negate(a) \/ b`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(vec![a.negate(), b])
    }

    pub fn exists(var: &str, lower: Term, upper: Term, body: Formula) -> Formula {
        Formula::Exists(Bounded {
            var: name(var),
            lower,
            upper,
            body: Box::new(body),
        })
    }

    pub fn forall(var: &str, lower: Term, upper: Term, body: Formula) -> Formula {
        Formula::Forall(Bounded {
            var: name(var),
            lower,
            upper,
            body: Box::new(body),
        })
    }

    /// Syntactic negation: atoms `t > 0 ↦ -t >= 0`, `t >= 0 ↦ -t > 0`, with the
    /// connectives and bounded quantifiers dualized. An involution.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Atom(t, Rel::Gt) => Formula::Atom(Term::neg(t.clone()), Rel::Ge),
            Formula::Atom(t, Rel::Ge) => Formula::Atom(Term::neg(t.clone()), Rel::Gt),
            Formula::And(ps) => Formula::Or(ps.iter().map(Formula::negate).collect()),
            Formula::Or(ps) => Formula::And(ps.iter().map(Formula::negate).collect()),
            Formula::Exists(b) => Formula::Forall(b.map_body(|f| f.negate())),
            Formula::Forall(b) => Formula::Exists(b.map_body(|f| f.negate())),
        }
    }

    /// δ-weakening: `t > 0 ↦ t + δ > 0`, `t >= 0 ↦ t + δ >= 0`. Quantifier
    /// structure and bounds are untouched.
    pub fn delta_weaken(&self, delta: &Rational) -> Result<Formula, crate::Error> {
        if delta.is_negative() {
            return Err(crate::Error::NegativeDelta);
        }
        Ok(self.weaken_unchecked(delta))
    }

    fn weaken_unchecked(&self, delta: &Rational) -> Formula {
        if delta.is_zero() {
            return self.clone();
        }
        match self {
            Formula::Atom(t, r) => Formula::Atom(Term::add(t.clone(), Term::Const(*delta)), *r),
            Formula::And(ps) => {
                Formula::And(ps.iter().map(|p| p.weaken_unchecked(delta)).collect())
            }
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.weaken_unchecked(delta)).collect()),
            Formula::Exists(b) => Formula::Exists(b.map_body(|f| f.weaken_unchecked(delta))),
            Formula::Forall(b) => Formula::Forall(b.map_body(|f| f.weaken_unchecked(delta))),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        match self {
            Formula::Atom(t, _) => t.free_vars(),
            Formula::And(ps) | Formula::Or(ps) => {
                let mut out = BTreeSet::new();
                for p in ps {
                    out.extend(p.free_vars());
                }
                out
            }
            Formula::Exists(b) | Formula::Forall(b) => {
                let mut out = b.body.free_vars();
                out.remove(&b.var);
                b.lower.collect_vars(&mut out);
                b.upper.collect_vars(&mut out);
                out
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atom(..) => true,
            Formula::And(ps) | Formula::Or(ps) => ps.iter().all(Formula::is_quantifier_free),
            _ => false,
        }
    }

    /// Checks the bounded-quantifier scoping rule: a quantifier's bounds may not
    /// mention the variable it binds.
    pub fn check_bounds_scoping(&self) -> Result<(), Name> {
        match self {
            Formula::Atom(..) => Ok(()),
            Formula::And(ps) | Formula::Or(ps) => {
                ps.iter().try_for_each(Formula::check_bounds_scoping)
            }
            Formula::Exists(b) | Formula::Forall(b) => {
                if b.lower.mentions(&b.var) || b.upper.mentions(&b.var) {
                    return Err(b.var.clone());
                }
                b.body.check_bounds_scoping()
            }
        }
    }

    /// Capture-avoiding for the bound variable itself: occurrences bound by an
    /// inner quantifier are not replaced. Replacement terms must not mention
    /// variables bound inside `self`.
    pub fn substitute(&self, map: &BTreeMap<Name, Term>) -> Formula {
        match self {
            Formula::Atom(t, r) => Formula::Atom(t.substitute(map), *r),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| p.substitute(map)).collect()),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.substitute(map)).collect()),
            Formula::Exists(b) => Formula::Exists(b.substitute(map)),
            Formula::Forall(b) => Formula::Forall(b.substitute(map)),
        }
    }

    /// Visits every atom term.
    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a Term, Rel)) {
        match self {
            Formula::Atom(t, r) => f(t, *r),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.for_each_atom(f)),
            Formula::Exists(b) | Formula::Forall(b) => b.body.for_each_atom(f),
        }
    }

    pub fn atom_count(&self) -> usize {
        let mut n = 0;
        self.for_each_atom(&mut |_, _| n += 1);
        n
    }

    /// Number of quantifier nodes.
    pub fn quantifier_count(&self) -> usize {
        match self {
            Formula::Atom(..) => 0,
            Formula::And(ps) | Formula::Or(ps) => ps.iter().map(Formula::quantifier_count).sum(),
            Formula::Exists(b) | Formula::Forall(b) => 1 + b.body.quantifier_count(),
        }
    }

    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        self.write_sexpr(&mut s);
        s
    }

    fn write_sexpr(&self, out: &mut String) {
        match self {
            Formula::Atom(t, r) => {
                out.push_str(match r {
                    Rel::Gt => "(> ",
                    Rel::Ge => "(>= ",
                });
                t.write_sexpr(out);
                out.push(')');
            }
            Formula::And(ps) | Formula::Or(ps) => {
                out.push_str(if matches!(self, Formula::And(_)) {
                    "(and"
                } else {
                    "(or"
                });
                for p in ps {
                    out.push(' ');
                    p.write_sexpr(out);
                }
                out.push(')');
            }
            Formula::Exists(b) | Formula::Forall(b) => {
                out.push_str(if matches!(self, Formula::Exists(_)) {
                    "(exists ("
                } else {
                    "(forall ("
                });
                out.push_str(&b.var);
                out.push(' ');
                b.lower.write_sexpr(out);
                out.push(' ');
                b.upper.write_sexpr(out);
                out.push_str(") ");
                b.body.write_sexpr(out);
                out.push(')');
            }
        }
    }
}

impl Bounded {
    fn map_body(&self, f: impl FnOnce(&Formula) -> Formula) -> Bounded {
        Bounded {
            var: self.var.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            body: Box::new(f(&self.body)),
        }
    }

    fn substitute(&self, map: &BTreeMap<Name, Term>) -> Bounded {
        let lower = self.lower.substitute(map);
        let upper = self.upper.substitute(map);
        let body = if map.contains_key(&self.var) {
            let mut inner = map.clone();
            inner.remove(&self.var);
            self.body.substitute(&inner)
        } else {
            self.body.substitute(map)
        };
        Bounded {
            var: self.var.clone(),
            lower,
            upper,
            body: Box::new(body),
        }
    }
}

/// Infix rendering in the DSL grammar; re-parses to an equal formula.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(t, r) => write!(
                f,
                "{} {} 0",
                t,
                match r {
                    Rel::Gt => ">",
                    Rel::Ge => ">=",
                }
            ),
            Formula::And(ps) if ps.is_empty() => write!(f, "true"),
            Formula::Or(ps) if ps.is_empty() => write!(f, "false"),
            Formula::And(ps) | Formula::Or(ps) => {
                let sep = if matches!(self, Formula::And(_)) {
                    " /\\ "
                } else {
                    " \\/ "
                };
                write!(f, "(")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{}", sep)?;
                    }
                    write!(f, "{}", p)?;
                }
                write!(f, ")")
            }
            Formula::Exists(b) | Formula::Forall(b) => write!(
                f,
                "({} {} in [{}, {}]. {})",
                if matches!(self, Formula::Exists(_)) {
                    "exists"
                } else {
                    "forall"
                },
                b.var,
                b.lower,
                b.upper,
                b.body
            ),
        }
    }
}
