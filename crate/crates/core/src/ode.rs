//! Validated enclosures for autonomous ODEs.
//!
//! The integrator is a Taylor method in mean-value (Lohner) form. A set of
//! states is kept as `c + A·r0 + e`, with a point center `c`, a point matrix
//! `A`, the centered initial box `r0` and an error box `e`. Each step first
//! finds an a-priori box `B` that contains every trajectory over the step
//! (a Picard–Lindelöf check `x + [0,h]·f(B) ⊆ B`), then advances the set with
//! the Taylor polynomial built from symbolic Lie derivatives plus a remainder
//! bounded over `B`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::formula::{jacobian, name, Name, Term};
use crate::interval::{Env, Interval, IntervalBox, SlotEnv};
use crate::Error;

/// Default flow tolerance for [`flow_enclosure`] and [`flow_deviation`].
pub const DEFAULT_TOL: f64 = 1e-4;
/// Taylor order used when the right-hand side is differentiable.
pub const TAYLOR_ORDER: usize = 4;

const PICARD_TRIES: usize = 6;
const INFLATE: f64 = 1.5;
const MAX_STEP: f64 = 0.5;
const MIN_STEP: f64 = 1e-9;
const BLOWUP: f64 = 1e12;

struct Taylor {
    /// `lie[k]` is the (k+1)-th Lie derivative of the identity, so `lie[0] = f`.
    lie: Vec<Vec<Term>>,
    /// `jac[k]` is the Jacobian of `lie[k]`.
    jac: Vec<Vec<Vec<Term>>>,
}

/// Autonomous system `x' = f(x)` with a state box and a Lipschitz bound.
pub struct OdeSystem {
    pub name: Name,
    vars: Vec<Name>,
    rhs: Vec<Term>,
    bounds: Vec<Interval>,
    lipschitz: f64,
    lipschitz_declared: bool,
    taylor: Option<Taylor>,
}

impl core::fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("OdeSystem")
            .field("name", &self.name)
            .field("vars", &self.vars)
            .field("rhs", &self.rhs)
            .field("bounds", &self.bounds)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl PartialEq for OdeSystem {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.vars == other.vars
            && self.rhs == other.rhs
            && self.bounds == other.bounds
    }
}

pub struct OdeBuilder {
    name: Name,
    vars: Vec<Name>,
    bounds: Vec<Interval>,
    rhs: Vec<(Name, Term)>,
    lipschitz: Option<f64>,
    order: usize,
}

impl OdeBuilder {
    pub fn state(self, v: &str, lo: f64, hi: f64) -> OdeBuilder {
        self.state_interval(v, Interval::new(lo, hi))
    }

    pub fn state_interval(mut self, v: &str, range: Interval) -> OdeBuilder {
        self.vars.push(name(v));
        self.bounds.push(range);
        self
    }

    pub fn rhs(mut self, v: &str, t: Term) -> OdeBuilder {
        self.rhs.push((name(v), t));
        self
    }

    pub fn lipschitz(mut self, l: f64) -> OdeBuilder {
        self.lipschitz = Some(l);
        self
    }

    /// Taylor order of the integrator; 0 selects first-order box stepping.
    pub fn order(mut self, p: usize) -> OdeBuilder {
        self.order = p;
        self
    }

    pub fn build(self) -> Result<OdeSystem, Error> {
        let invalid = |m: String| Err(Error::InvalidSystem(m));
        if self.vars.is_empty() {
            return invalid(format!("system `{}` has no state variables", self.name));
        }
        for (i, v) in self.vars.iter().enumerate() {
            if self.vars[..i].contains(v) {
                return invalid(format!("state variable `{}` declared twice", v));
            }
        }
        let mut rhs = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            let mut found = self.rhs.iter().filter(|(w, _)| w == v);
            match (found.next(), found.next()) {
                (Some((_, t)), None) => rhs.push(t.clone()),
                (None, _) => return invalid(format!("no dynamics given for `{}`", v)),
                (Some(_), Some(_)) => return invalid(format!("dynamics for `{}` given twice", v)),
            }
        }
        for (w, _) in &self.rhs {
            if !self.vars.contains(w) {
                return invalid(format!("dynamics for undeclared variable `{}`", w));
            }
        }
        for t in &rhs {
            if t.contains_flow() {
                return invalid(String::from("flow terms are not allowed in dynamics"));
            }
            if let Some(v) = t.free_vars().into_iter().find(|v| !self.vars.contains(v)) {
                return invalid(format!("dynamics mention `{}`, which is not a state", v));
            }
        }
        let env = SlotEnv {
            names: &self.vars,
            values: &self.bounds,
        };
        for t in &rhs {
            if let Err(e) = crate::interval::eval_term_in(t, &env, &mut crate::interval::NoFlow) {
                return invalid(format!(
                    "dynamics `{}` not evaluable over the state box: {}",
                    t, e
                ));
            }
        }

        let jac1 = jacobian(&rhs, &self.vars).ok();
        let derived = jac1.as_ref().and_then(|j| jacobian_bound(j, &env).ok());
        let lipschitz = match (self.lipschitz, derived) {
            (Some(l), _) if !(l >= 0.0 && l.is_finite()) => {
                return invalid(format!(
                    "lipschitz constant {} is not a nonnegative number",
                    l
                ))
            }
            (Some(l), _) => {
                // a point Jacobian above L refutes the declared constant
                if let Some(j) = &jac1 {
                    let mid: Vec<Interval> = self
                        .bounds
                        .iter()
                        .map(|b| Interval::point(b.mid()))
                        .collect();
                    let menv = SlotEnv {
                        names: &self.vars,
                        values: &mid,
                    };
                    if let Ok(at_mid) = jacobian_bound_lower(j, &menv) {
                        if at_mid > l * (1.0 + 1e-9) {
                            return invalid(format!(
                                "declared lipschitz constant {} is below the Jacobian norm {} at the box center",
                                l, at_mid
                            ));
                        }
                    }
                }
                l
            }
            (None, Some(l)) => l,
            (None, None) => {
                return invalid(String::from(
                    "cannot bound the Jacobian over the state box; declare a lipschitz constant",
                ))
            }
        };

        let taylor = if self.order == 0 {
            None
        } else {
            lie_series(&rhs, &self.vars, self.order).ok()
        };
        Ok(OdeSystem {
            name: self.name,
            vars: self.vars,
            rhs,
            bounds: self.bounds,
            lipschitz,
            lipschitz_declared: self.lipschitz.is_some(),
            taylor,
        })
    }
}

fn lie_series(rhs: &[Term], vars: &[Name], order: usize) -> Result<Taylor, Error> {
    let mut lie = vec![rhs.to_vec()];
    for _ in 0..order {
        let prev = lie.last().unwrap();
        let mut next = Vec::with_capacity(rhs.len());
        for fk in prev {
            let mut acc = Term::zero();
            for (v, fj) in vars.iter().zip(rhs) {
                acc = Term::add(acc, Term::mul(fk.diff(v)?, fj.clone()));
            }
            next.push(acc);
        }
        lie.push(next);
    }
    let jac = lie[..order]
        .iter()
        .map(|fk| jacobian(fk, vars))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Taylor { lie, jac })
}

/// Upper bound of the Frobenius norm of an interval Jacobian.
fn jacobian_bound(j: &[Vec<Term>], env: &dyn Env) -> Result<f64, Error> {
    let mut acc = Interval::point(0.0);
    for row in j {
        for t in row {
            let v = crate::interval::eval_term_in(t, env, &mut crate::interval::NoFlow)?;
            acc = acc.add(v.sqr());
        }
    }
    Ok(acc.sqrt()?.hi())
}

/// Lower bound of the largest row norm at a point; a lower bound of the
/// spectral norm there.
fn jacobian_bound_lower(j: &[Vec<Term>], env: &dyn Env) -> Result<f64, Error> {
    let mut best: f64 = 0.0;
    for row in j {
        let mut acc = Interval::point(0.0);
        for t in row {
            let v = crate::interval::eval_term_in(t, env, &mut crate::interval::NoFlow)?;
            acc = acc.add(v.sqr());
        }
        best = best.max(acc.sqrt()?.lo());
    }
    Ok(best)
}

/// Integration options.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub tol: f64,
    /// Report an error as soon as an enclosure leaves the state box.
    pub strict: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            tol: DEFAULT_TOL,
            strict: false,
        }
    }
}

#[derive(Clone, Debug)]
struct StateSet {
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    r0: Vec<Interval>,
    e: Vec<Interval>,
}

impl StateSet {
    fn new(x0: &[Interval]) -> StateSet {
        let n = x0.len();
        let c: Vec<f64> = x0.iter().map(Interval::mid).collect();
        let r0 = x0
            .iter()
            .zip(&c)
            .map(|(x, m)| x.sub(Interval::point(*m)))
            .collect();
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        StateSet {
            c,
            a,
            r0,
            e: vec![Interval::point(0.0); n],
        }
    }

    fn from_box(b: &[Interval]) -> StateSet {
        let n = b.len();
        let c: Vec<f64> = b.iter().map(Interval::mid).collect();
        let e = b
            .iter()
            .zip(&c)
            .map(|(x, m)| x.sub(Interval::point(*m)))
            .collect();
        StateSet {
            c,
            a: vec![vec![0.0; n]; n],
            r0: vec![Interval::point(0.0); n],
            e,
        }
    }

    fn hull(&self) -> Vec<Interval> {
        let n = self.c.len();
        (0..n)
            .map(|i| {
                let mut acc = Interval::point(self.c[i]).add(self.e[i]);
                for j in 0..n {
                    if self.a[i][j] != 0.0 {
                        acc = acc.add(self.r0[j].scale(self.a[i][j]));
                    }
                }
                acc
            })
            .collect()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

fn coefficient(s: Interval, k: usize) -> Interval {
    s.powi(k as i32)
        .expect("positive power")
        .div(Interval::point(factorial(k)))
        .expect("nonzero factorial")
}

fn max_width(v: &[Interval]) -> f64 {
    v.iter().map(Interval::width).fold(0.0, f64::max)
}

fn subset(a: &[Interval], b: &[Interval]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.is_subset(y))
}

impl OdeSystem {
    pub fn builder(name_: &str) -> OdeBuilder {
        OdeBuilder {
            name: name(name_),
            vars: Vec::new(),
            bounds: Vec::new(),
            rhs: Vec::new(),
            lipschitz: None,
            order: TAYLOR_ORDER,
        }
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[Name] {
        &self.vars
    }

    pub fn rhs(&self) -> &[Term] {
        &self.rhs
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn state_box(&self) -> IntervalBox {
        IntervalBox::from_pairs(self.vars.iter().zip(&self.bounds).map(|(v, b)| (&**v, *b)))
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn lipschitz_declared(&self) -> bool {
        self.lipschitz_declared
    }

    pub fn order(&self) -> usize {
        self.taylor.as_ref().map_or(0, |t| t.jac.len())
    }

    fn eval_vec(&self, terms: &[Term], x: &[Interval]) -> Result<Vec<Interval>, Error> {
        let env = SlotEnv {
            names: &self.vars,
            values: x,
        };
        terms
            .iter()
            .map(|t| crate::interval::eval_term_in(t, &env, &mut crate::interval::NoFlow))
            .collect()
    }

    pub fn eval_rhs(&self, x: &[Interval]) -> Result<Vec<Interval>, Error> {
        self.eval_vec(&self.rhs, x)
    }

    fn initial_step(&self) -> f64 {
        if self.lipschitz > 0.0 {
            (1.0 / (4.0 * self.lipschitz)).min(0.1)
        } else {
            0.1
        }
    }

    /// Box containing every trajectory from `x` over `[0, h]`, if one is found.
    fn apriori(&self, x: &[Interval], h: f64) -> Option<Vec<Interval>> {
        let hs = Interval::new(0.0, h);
        let fx = self.eval_rhs(x).ok()?;
        let first: Vec<Interval> = x
            .iter()
            .zip(&fx)
            .map(|(xi, fi)| xi.add(hs.mul(*fi)))
            .collect();
        let mut guess: Vec<Interval> = first.iter().map(|b| widen(b, INFLATE)).collect();
        for _ in 0..PICARD_TRIES {
            let fb = self.eval_rhs(&guess).ok()?;
            let next: Vec<Interval> = x
                .iter()
                .zip(&fb)
                .map(|(xi, fi)| xi.add(hs.mul(*fi)))
                .collect();
            if subset(&next, &guess) {
                return Some(next);
            }
            guess = next
                .iter()
                .zip(&guess)
                .map(|(n, g)| widen(&n.hull(g), INFLATE))
                .collect();
        }
        None
    }

    /// One step with (possibly interval) step `s ⊆ [0, h]`, where `b` is an
    /// a-priori box for `[0, h]`. Returns the new set and the remainder width.
    fn step(&self, set: &StateSet, s: Interval, b: &[Interval]) -> Result<(StateSet, f64), Error> {
        let n = self.dim();
        let xh = set.hull();
        let taylor = match &self.taylor {
            Some(t) => t,
            None => return self.box_step(&xh, s, b),
        };
        let p = taylor.jac.len();
        let lie_b = match self.eval_vec(&taylor.lie[p], b) {
            Ok(v) => v,
            Err(Error::Domain(_)) => return self.box_step(&xh, s, b),
            Err(e) => return Err(e),
        };
        let rc = coefficient(s, p + 1);
        let rem: Vec<Interval> = lie_b.iter().map(|v| rc.mul(*v)).collect();

        let cpt: Vec<Interval> = set.c.iter().map(|x| Interval::point(*x)).collect();
        let mut z = cpt.clone();
        let mut jm: Vec<Vec<Interval>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Interval::point(if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        for k in 1..=p {
            let ck = coefficient(s, k);
            let fk = match self.eval_vec(&taylor.lie[k - 1], &cpt) {
                Ok(v) => v,
                Err(Error::Domain(_)) => return self.box_step(&xh, s, b),
                Err(e) => return Err(e),
            };
            for i in 0..n {
                z[i] = z[i].add(ck.mul(fk[i]));
            }
            let env = SlotEnv {
                names: &self.vars,
                values: &xh,
            };
            for i in 0..n {
                for j in 0..n {
                    let d = match crate::interval::eval_term_in(
                        &taylor.jac[k - 1][i][j],
                        &env,
                        &mut crate::interval::NoFlow,
                    ) {
                        Ok(v) => v,
                        Err(Error::Domain(_)) => return self.box_step(&xh, s, b),
                        Err(e) => return Err(e),
                    };
                    jm[i][j] = jm[i][j].add(ck.mul(d));
                }
            }
        }
        for i in 0..n {
            z[i] = z[i].add(rem[i]);
        }

        let mut ja = vec![vec![Interval::point(0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Interval::point(0.0);
                for l in 0..n {
                    if set.a[l][j] != 0.0 {
                        acc = acc.add(jm[i][l].scale(set.a[l][j]));
                    }
                }
                ja[i][j] = acc;
            }
        }
        let a2: Vec<Vec<f64>> = ja
            .iter()
            .map(|row| row.iter().map(Interval::mid).collect())
            .collect();
        let c2: Vec<f64> = z.iter().map(Interval::mid).collect();
        let mut e2 = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = z[i].sub(Interval::point(c2[i]));
            for j in 0..n {
                let d = ja[i][j].sub(Interval::point(a2[i][j]));
                acc = acc.add(d.mul(set.r0[j]));
                acc = acc.add(jm[i][j].mul(set.e[j]));
            }
            e2.push(acc);
        }
        Ok((
            StateSet {
                c: c2,
                a: a2,
                r0: set.r0.clone(),
                e: e2,
            },
            max_width(&rem),
        ))
    }

    /// First-order fallback: `x(s) ∈ X + s·f(B)`.
    fn box_step(
        &self,
        xh: &[Interval],
        s: Interval,
        b: &[Interval],
    ) -> Result<(StateSet, f64), Error> {
        let fb = self.eval_rhs(b)?;
        let out: Vec<Interval> = xh.iter().zip(&fb).map(|(x, f)| x.add(s.mul(*f))).collect();
        let w = s.hi() * max_width(&fb);
        Ok((StateSet::from_box(&out), w))
    }

    fn check(&self, hull: &[Interval], at: Interval, strict: bool) -> Result<(), Error> {
        if hull.iter().any(|h| !h.is_finite() || h.mag() > BLOWUP) {
            return Err(Error::NonConvergence { time: at.lo() });
        }
        if strict && !subset(hull, &self.bounds) {
            return Err(Error::BoundsEscape {
                lo: at.lo(),
                hi: at.hi(),
            });
        }
        Ok(())
    }

    /// Enclosure of `{ Φ(x0, t) : x0 ∈ init, t ∈ time }`.
    pub fn enclose(
        &self,
        init: &[Interval],
        time: Interval,
        opts: IntegrateOptions,
    ) -> Result<Vec<Interval>, Error> {
        if init.len() != self.dim() {
            return Err(Error::InvalidSystem(format!(
                "expected {} initial values, got {}",
                self.dim(),
                init.len()
            )));
        }
        if time.lo() < 0.0 || !time.is_finite() {
            return Err(Error::Domain(
                "flow time must be a finite nonnegative interval",
            ));
        }
        if !(opts.tol > 0.0) {
            return Err(Error::InvalidParams(String::from(
                "tolerance must be positive",
            )));
        }
        let horizon = time.hi().max(1e-9);
        let mut set = StateSet::new(init);
        let mut ctl = StepControl {
            h: self.initial_step(),
            h_max: MAX_STEP.max(self.initial_step()),
            budget: opts.tol / horizon,
        };
        let mut elapsed = Interval::point(0.0);
        self.check(init, elapsed, opts.strict)?;

        // advance to time.lo
        while elapsed.hi() < time.lo() {
            let remaining = Interval::point(time.lo()).sub(elapsed);
            let last = ctl.h >= remaining.lo();
            let s = if last {
                Interval::new(remaining.lo().max(0.0), remaining.hi())
            } else {
                Interval::point(ctl.h)
            };
            let Some((next, b)) = self.try_step(&set, s, &mut ctl, elapsed)? else {
                continue;
            };
            self.check(&b, elapsed.add(Interval::new(0.0, s.hi())), opts.strict)?;
            set = next;
            if last {
                elapsed = Interval::point(time.lo());
                break;
            }
            elapsed = elapsed.add(s);
        }
        let mut acc = set.hull();
        self.check(&acc, elapsed, opts.strict)?;
        if time.is_point() {
            return Ok(acc);
        }

        // sweep [time.lo, time.hi]
        loop {
            let remaining = Interval::point(time.hi()).sub(elapsed);
            if remaining.hi() <= 0.0 {
                break;
            }
            let last = ctl.h >= remaining.lo();
            let h = if last { remaining.hi() } else { ctl.h };
            let Some((swept, b)) = self.try_step(&set, Interval::new(0.0, h), &mut ctl, elapsed)?
            else {
                continue;
            };
            let sh = swept.hull();
            self.check(&b, elapsed.add(Interval::new(0.0, h)), opts.strict)?;
            for (a, x) in acc.iter_mut().zip(&sh) {
                *a = a.hull(x);
            }
            if last {
                break;
            }
            let (next, _) = self.step(&set, Interval::point(h), &b)?;
            set = next;
            elapsed = elapsed.add(Interval::point(h));
        }
        Ok(acc)
    }

    /// Attempts one step of length `s`. On failure `ctl.h` shrinks and `None`
    /// is returned so the caller can recompute its step.
    fn try_step(
        &self,
        set: &StateSet,
        s: Interval,
        ctl: &mut StepControl,
        elapsed: Interval,
    ) -> Result<Option<(StateSet, Vec<Interval>)>, Error> {
        let h = s.hi();
        if h <= 0.0 {
            return Ok(Some((set.clone(), set.hull())));
        }
        if let Some(b) = self.apriori(&set.hull(), h) {
            let (next, rw) = self.step(set, s, &b)?;
            if rw <= ctl.budget * h || h <= MIN_STEP {
                if rw < ctl.budget * h / 32.0 && h >= ctl.h {
                    ctl.h = (ctl.h * 1.5).min(ctl.h_max);
                }
                return Ok(Some((next, b)));
            }
        }
        ctl.h = ctl.h.min(h) / 2.0;
        if ctl.h < MIN_STEP {
            return Err(Error::NonConvergence { time: elapsed.lo() });
        }
        Ok(None)
    }
}

struct StepControl {
    h: f64,
    h_max: f64,
    /// Remainder width allowed per unit time.
    budget: f64,
}

fn widen(b: &Interval, factor: f64) -> Interval {
    let r = 0.5 * b.width() * factor + 1e-12 * (1.0 + b.mag());
    let m = b.mid();
    Interval::new(m, m).inflate(r).hull(b)
}

fn box_values(s: &OdeSystem, b: &IntervalBox) -> Result<Vec<Interval>, Error> {
    s.vars
        .iter()
        .map(|v| b.get(v).ok_or_else(|| Error::UnboundVariable(v.clone())))
        .collect()
}

/// Enclosure of every solution from `x0` at every time in `t`.
///
/// Fails with [`Error::BoundsEscape`] when an enclosure leaves the state box.
pub fn flow_enclosure(
    s: &OdeSystem,
    x0: &IntervalBox,
    t: Interval,
    tol: f64,
) -> Result<IntervalBox, Error> {
    let init = box_values(s, x0)?;
    let out = s.enclose(&init, t, IntegrateOptions { tol, strict: true })?;
    Ok(IntervalBox::from_pairs(
        s.vars.iter().zip(out).map(|(v, i)| (&**v, i)),
    ))
}

/// Enclosure of `‖xt − Φ(x0, t)‖` at the default tolerance.
pub fn flow_deviation(
    s: &OdeSystem,
    x0: &IntervalBox,
    xt: &IntervalBox,
    t: Interval,
) -> Result<Interval, Error> {
    let init = box_values(s, x0)?;
    let target = box_values(s, xt)?;
    let phi = s.enclose(
        &init,
        t,
        IntegrateOptions {
            tol: DEFAULT_TOL,
            strict: true,
        },
    )?;
    let diffs: Vec<Interval> = target.iter().zip(&phi).map(|(a, b)| a.sub(*b)).collect();
    Interval::norm(&diffs)
}

struct CacheEntry {
    system: usize,
    init: Vec<Interval>,
    time: Interval,
    value: Vec<Interval>,
}

/// Flow backend for term evaluation with a small memo of recent results.
pub struct FlowCache {
    tol: f64,
    entries: Vec<CacheEntry>,
    next: usize,
    pub integrations: u64,
}

const CACHE_SLOTS: usize = 16;

impl FlowCache {
    pub fn new(tol: f64) -> FlowCache {
        FlowCache {
            tol,
            entries: Vec::new(),
            next: 0,
            integrations: 0,
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

impl crate::interval::FlowEval for FlowCache {
    fn flow(
        &mut self,
        system: &OdeSystem,
        init: &[Interval],
        time: Interval,
    ) -> Result<Vec<Interval>, Error> {
        let key = system as *const OdeSystem as usize;
        if let Some(e) = self
            .entries
            .iter()
            .find(|e| e.system == key && e.time == time && e.init == init)
        {
            return Ok(e.value.clone());
        }
        self.integrations += 1;
        let value = system.enclose(
            init,
            time,
            IntegrateOptions {
                tol: self.tol,
                strict: false,
            },
        )?;
        let entry = CacheEntry {
            system: key,
            init: init.to_vec(),
            time,
            value: value.clone(),
        };
        if self.entries.len() < CACHE_SLOTS {
            self.entries.push(entry);
        } else {
            self.entries[self.next] = entry;
            self.next = (self.next + 1) % CACHE_SLOTS;
        }
        Ok(value)
    }
}
