//! Hybrid automata as collections of formulas, their δ-weakening, bounded
//! reachability encodings and stability checks.
//!
//! Mode selection is done by enumerating mode paths rather than by Boolean
//! selector variables; [`enforce`] and [`enforce_step`] expose the selector
//! literals so the two views can be compared.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{name, Formula, Name, Rational, Term};
use crate::interval::Interval;
use crate::ode::OdeSystem;
use crate::solver::{decide_with, Answer, Executor, Sequential, SolverConfig};
use crate::stability::{
    convergence, copies, decide_sentence, forall_box, konst, lyapunov_over, Related, StabilityKind,
    StabilityParams, StabilityVerdict, RESERVED,
};
use crate::Error;

/// Default bound on the number of enumerated mode paths.
pub const DEFAULT_PATH_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub name: Name,
    pub flow: Arc<OdeSystem>,
    /// Over the automaton's variables.
    pub inv: Formula,
    pub init: Formula,
}

/// `jump_{from→to}(x, x')`: unprimed names are the state before the jump,
/// primed ones (`x'`) the state after.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub from: Name,
    pub to: Name,
    pub relation: Formula,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridAutomaton {
    pub name: Name,
    vars: Vec<Name>,
    bounds: Vec<Interval>,
    modes: Vec<Mode>,
    jumps: Vec<Jump>,
    /// Each flow relation holds up to this deviation per component; zero for
    /// an unweakened automaton.
    flow_slack: Rational,
}

pub fn primed(v: &str) -> Name {
    name(&format!("{}'", v))
}

fn rename(f: &Formula, from: &[Name], to: &[Term]) -> Formula {
    let map: BTreeMap<Name, Term> = from.iter().cloned().zip(to.iter().cloned()).collect();
    f.substitute(&map)
}

fn names_as_terms(ns: &[Name]) -> Vec<Term> {
    ns.iter().map(|n| Term::Var(n.clone())).collect()
}

impl HybridAutomaton {
    /// Checks that modes are distinct and nonempty, flows range over exactly
    /// the automaton's variables, formulas mention only declared variables and
    /// every jump joins declared modes, at most one per ordered pair.
    pub fn new(
        label: &str,
        vars: Vec<Name>,
        bounds: Vec<Interval>,
        modes: Vec<Mode>,
        jumps: Vec<Jump>,
    ) -> Result<HybridAutomaton, Error> {
        let bad = |m: String| Err(Error::InvalidSystem(m));
        if vars.is_empty() || vars.len() != bounds.len() {
            return bad(String::from(
                "variables and bounds must match and be nonempty",
            ));
        }
        if bounds.iter().any(|b| !b.is_finite()) {
            return bad(String::from("state bounds must be finite"));
        }
        if modes.is_empty() {
            return bad(String::from("an automaton needs at least one mode"));
        }
        let declared: BTreeSet<Name> = vars.iter().cloned().collect();
        if declared.len() != vars.len() {
            return bad(String::from("duplicate state variable"));
        }
        let with_primes: BTreeSet<Name> =
            vars.iter().flat_map(|v| [v.clone(), primed(v)]).collect();
        let mut seen = BTreeSet::new();
        for m in &modes {
            if !seen.insert(m.name.clone()) {
                return bad(format!("duplicate mode `{}`", m.name));
            }
            if m.flow.vars() != &vars[..] {
                return bad(format!(
                    "flow of mode `{}` must range over the state variables",
                    m.name
                ));
            }
            for (what, f) in [("invariant", &m.inv), ("init", &m.init)] {
                if !f.is_quantifier_free() {
                    return bad(format!("{} of `{}` must be quantifier-free", what, m.name));
                }
                if let Some(v) = f.free_vars().difference(&declared).next() {
                    return bad(format!(
                        "{} of `{}` mentions undeclared `{}`",
                        what, m.name, v
                    ));
                }
            }
        }
        let mut pairs = BTreeSet::new();
        for j in &jumps {
            for end in [&j.from, &j.to] {
                if !seen.contains(end) {
                    return Err(Error::UnknownMode(end.clone()));
                }
            }
            if !pairs.insert((j.from.clone(), j.to.clone())) {
                return bad(format!("two jumps from `{}` to `{}`", j.from, j.to));
            }
            if !j.relation.is_quantifier_free() {
                return bad(String::from("jump relations must be quantifier-free"));
            }
            if let Some(v) = j.relation.free_vars().difference(&with_primes).next() {
                return bad(format!(
                    "jump `{}`->`{}` mentions undeclared `{}`",
                    j.from, j.to, v
                ));
            }
        }
        Ok(HybridAutomaton {
            name: name(label),
            vars,
            bounds,
            modes,
            jumps,
            flow_slack: Rational::from_integer(0),
        })
    }

    /// One mode with trivial init and invariant and no jumps; its reachability
    /// relation is the flow of `s`.
    pub fn from_system(s: &Arc<OdeSystem>) -> HybridAutomaton {
        HybridAutomaton::new(
            &s.name,
            s.vars().to_vec(),
            s.bounds().to_vec(),
            vec![Mode {
                name: s.name.clone(),
                flow: s.clone(),
                inv: Formula::tt(),
                init: Formula::tt(),
            }],
            Vec::new(),
        )
        .expect("a validated system is a valid one-mode automaton")
    }

    pub fn vars(&self) -> &[Name] {
        &self.vars
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn flow_slack(&self) -> &Rational {
        &self.flow_slack
    }

    pub fn mode(&self, q: &str) -> Result<&Mode, Error> {
        self.modes
            .iter()
            .find(|m| &*m.name == q)
            .ok_or_else(|| Error::UnknownMode(name(q)))
    }

    fn index(&self, q: &str) -> Result<usize, Error> {
        self.modes
            .iter()
            .position(|m| &*m.name == q)
            .ok_or_else(|| Error::UnknownMode(name(q)))
    }

    pub fn jump(&self, from: &str, to: &str) -> Option<&Jump> {
        self.jumps.iter().find(|j| &*j.from == from && &*j.to == to)
    }

    /// `flow_q(x0, xt, t)`: componentwise `xt_i = Φ_i(x0, t)`, weakened by the
    /// flow slack.
    pub fn flow_relation(
        &self,
        q: &str,
        x0: &[Term],
        xt: &[Term],
        t: Term,
    ) -> Result<Formula, Error> {
        let m = self.mode(q)?;
        let eqs = xt
            .iter()
            .enumerate()
            .map(|(i, x)| {
                Formula::equal(
                    x.clone(),
                    Term::flow(m.flow.clone(), x0.to_vec(), t.clone(), i),
                )
            })
            .collect();
        Formula::and(eqs).delta_weaken(&self.flow_slack)
    }

    pub fn inv_at(&self, q: &str, x: &[Term]) -> Result<Formula, Error> {
        Ok(rename(&self.mode(q)?.inv, &self.vars, x))
    }

    pub fn init_at(&self, q: &str, x: &[Term]) -> Result<Formula, Error> {
        Ok(rename(&self.mode(q)?.init, &self.vars, x))
    }

    pub fn jump_at(
        &self,
        from: &str,
        to: &str,
        pre: &[Term],
        post: &[Term],
    ) -> Result<Formula, Error> {
        self.index(from)?;
        self.index(to)?;
        let j = self
            .jump(from, to)
            .ok_or_else(|| Error::UndeclaredJump(name(from), name(to)))?;
        let mut names = self.vars.clone();
        names.extend(self.vars.iter().map(|v| primed(v)));
        let mut terms = pre.to_vec();
        terms.extend_from_slice(post);
        Ok(rename(&j.relation, &names, &terms))
    }

    /// Whether some mode's init is satisfiable inside X, decided at δ.
    /// `false` means every init is exactly false on X.
    pub fn init_satisfiable(&self, delta: &Rational) -> Result<bool, Error> {
        let mut cfg = SolverConfig::new(*delta);
        cfg.validate()?;
        cfg.max_effort_level = cfg.max_effort_level.min(8);
        for m in &self.modes {
            let mut f = m.init.clone();
            for (v, b) in self.vars.iter().zip(&self.bounds).rev() {
                let lo = crate::formula::rational_from_f64(b.lo()).expect("finite bounds");
                let hi = crate::formula::rational_from_f64(b.hi()).expect("finite bounds");
                f = Formula::exists(v, konst(&lo), konst(&hi), f);
            }
            match decide_with(&f, &cfg, &Sequential, None) {
                Ok(v) if v.answer == Answer::DeltaTrue => return Ok(true),
                Ok(_) => {}
                Err(Error::ResolutionFloor) => return Ok(true),
                Err(e) => return Err(e),
            }
        }
        Ok(false)
    }
}

/// δ-weakening of every component: invariants, inits and jump relations are
/// weakened as formulas, flows by admitting a deviation of δ per component.
pub fn weaken_automaton(h: &HybridAutomaton, delta: &Rational) -> Result<HybridAutomaton, Error> {
    if *delta < Rational::from_integer(0) {
        return Err(Error::NegativeDelta);
    }
    let modes = h
        .modes
        .iter()
        .map(|m| {
            Ok(Mode {
                name: m.name.clone(),
                flow: m.flow.clone(),
                inv: m.inv.delta_weaken(delta)?,
                init: m.init.delta_weaken(delta)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let jumps = h
        .jumps
        .iter()
        .map(|j| {
            Ok(Jump {
                from: j.from.clone(),
                to: j.to.clone(),
                relation: j.relation.delta_weaken(delta)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(HybridAutomaton {
        name: h.name.clone(),
        vars: h.vars.clone(),
        bounds: h.bounds.clone(),
        modes,
        jumps,
        flow_slack: h.flow_slack + delta,
    })
}

/// A literal `b^step_mode` or its negation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Selector {
    pub mode: Name,
    pub step: usize,
    pub positive: bool,
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bang = if self.positive { "" } else { "!" };
        write!(f, "{}b[{}]_{}", bang, self.step, self.mode)
    }
}

fn selectors(modes: &[Name], q: &str, step: usize) -> Result<Vec<Selector>, Error> {
    if !modes.iter().any(|m| &**m == q) {
        return Err(Error::UnknownMode(name(q)));
    }
    let mut out = vec![Selector {
        mode: name(q),
        step,
        positive: true,
    }];
    out.extend(modes.iter().filter(|p| &***p != q).map(|p| Selector {
        mode: p.clone(),
        step,
        positive: false,
    }));
    Ok(out)
}

/// `enforce_Q(q, i)` as a conjunction of literals: `q` is selected at step
/// `i` and no other mode is.
pub fn enforce(modes: &[Name], q: &str, i: usize) -> Result<Vec<Selector>, Error> {
    selectors(modes, q, i)
}

/// `enforce_Q(q, q', i)`: `q` alone at step `i`, `q'` alone at step `i + 1`.
pub fn enforce_step(modes: &[Name], q: &str, q2: &str, i: usize) -> Result<Vec<Selector>, Error> {
    let mut out = selectors(modes, q, i)?;
    out.extend(selectors(modes, q2, i + 1)?);
    Ok(out)
}

/// A sequence of modes joined by declared jumps.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModePath(Vec<Name>);

impl ModePath {
    pub fn new(h: &HybridAutomaton, modes: &[&str]) -> Result<ModePath, Error> {
        if modes.is_empty() {
            return Err(Error::InvalidParams(String::from(
                "a mode path needs at least one mode",
            )));
        }
        for q in modes {
            h.index(q)?;
        }
        for w in modes.windows(2) {
            if h.jump(w[0], w[1]).is_none() {
                return Err(Error::UndeclaredJump(name(w[0]), name(w[1])));
            }
        }
        Ok(ModePath(modes.iter().map(|q| name(q)).collect()))
    }

    pub fn modes(&self) -> &[Name] {
        &self.0
    }

    /// Number of jumps.
    pub fn steps(&self) -> usize {
        self.0.len() - 1
    }

    /// The selector literals this path makes true: the enforce conjuncts of
    /// every step.
    pub fn selectors(&self, all: &[Name]) -> Vec<Selector> {
        let mut out = Vec::new();
        for (i, q) in self.0.iter().enumerate() {
            out.extend(selectors(all, q, i).expect("path modes are declared"));
        }
        out
    }
}

impl fmt::Display for ModePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            f.write_str(q)?;
        }
        Ok(())
    }
}

/// All mode paths with `k` jumps, in lexicographic order of mode declaration.
/// Fails with `PathCap` when there are more than `cap`.
pub fn mode_paths(h: &HybridAutomaton, k: usize, cap: usize) -> Result<Vec<ModePath>, Error> {
    let n = h.modes.len();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| h.jump(&h.modes[a].name, &h.modes[b].name).is_some())
                .collect()
        })
        .collect();
    // paths of each length ending anywhere, counted from each start mode
    let mut count = vec![1usize; n];
    for _ in 0..k {
        count = (0..n)
            .map(|a| {
                succ[a]
                    .iter()
                    .fold(0usize, |s, &b| s.saturating_add(count[b]))
            })
            .collect();
    }
    let total = count.iter().fold(0usize, |s, &c| s.saturating_add(c));
    if total > cap {
        return Err(Error::PathCap { paths: total, cap });
    }
    let mut out = Vec::with_capacity(total);
    let mut stack: Vec<usize> = Vec::new();
    fn walk(
        h: &HybridAutomaton,
        succ: &[Vec<usize>],
        k: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<ModePath>,
    ) {
        if stack.len() == k + 1 {
            out.push(ModePath(
                stack.iter().map(|&i| h.modes[i].name.clone()).collect(),
            ));
            return;
        }
        let next: Vec<usize> = match stack.last() {
            None => (0..h.modes.len()).collect(),
            Some(&a) => succ[a].clone(),
        };
        for b in next {
            stack.push(b);
            walk(h, succ, k, stack, out);
            stack.pop();
        }
    }
    walk(h, &succ, k, &mut stack, &mut out);
    Ok(out)
}

/// Which mode sequences a reachability encoding covers.
#[derive(Clone, Debug, PartialEq)]
pub enum PathChoice {
    One(ModePath),
    /// Every path with the given number of jumps, up to the cap.
    All {
        cap: usize,
    },
}

/// Variable names used by one reachability encoding.
struct Layout {
    /// Entry state of each step; `states[0]` is the initial state.
    states: Vec<Vec<Name>>,
    /// Exit state of each step.
    ends: Vec<Vec<Name>>,
    dwell: Vec<Term>,
    /// Bound names of the invariant conjunct of each step.
    probe_time: Vec<Name>,
    probe_state: Vec<Vec<Name>>,
}

impl Layout {
    fn names(&self) -> impl Iterator<Item = &Name> {
        self.states
            .iter()
            .chain(&self.ends)
            .flatten()
            .chain(&self.probe_time)
            .chain(self.probe_state.iter().flatten())
    }
}

fn distinct<'a>(names: impl Iterator<Item = &'a Name>, taken: &[Name]) -> Result<(), Error> {
    let mut seen: BTreeSet<&Name> = BTreeSet::new();
    for n in names {
        if taken.contains(n) || !seen.insert(n) {
            return Err(Error::InvalidParams(format!(
                "generated variable `{}` collides with another name",
                n
            )));
        }
    }
    Ok(())
}

fn probes(h: &HybridAutomaton, k: usize, tag: &str) -> (Vec<Name>, Vec<Vec<Name>>) {
    let time = (0..=k).map(|i| name(&format!("{}s{}", tag, i))).collect();
    let state = (0..=k)
        .map(|i| {
            h.vars
                .iter()
                .map(|v| name(&format!("{}{}y{}", v, tag, i)))
                .collect()
        })
        .collect();
    (time, state)
}

/// `∀s∈[0,dwell] ∀y∈X. flow_q(x, y, s) → inv_q(y)`, or `true` for a trivial
/// invariant.
fn stays_inside(h: &HybridAutomaton, q: &str, lay: &Layout, i: usize) -> Result<Formula, Error> {
    let m = h.mode(q)?;
    if m.inv.is_true() {
        return Ok(Formula::tt());
    }
    let y = names_as_terms(&lay.probe_state[i]);
    let body = Formula::implies(
        h.flow_relation(
            q,
            &names_as_terms(&lay.states[i]),
            &y,
            Term::Var(lay.probe_time[i].clone()),
        )?,
        h.inv_at(q, &y)?,
    );
    let region = rational_bounds(h)?;
    let body = forall_box(&lay.probe_state[i], &region, body);
    Ok(Formula::forall(
        &lay.probe_time[i],
        Term::zero(),
        lay.dwell[i].clone(),
        body,
    ))
}

fn rational_bounds(h: &HybridAutomaton) -> Result<Vec<(Rational, Rational)>, Error> {
    h.bounds
        .iter()
        .map(|b| {
            match (
                crate::formula::rational_from_f64(b.lo()),
                crate::formula::rational_from_f64(b.hi()),
            ) {
                (Some(lo), Some(hi)) => Ok((lo, hi)),
                _ => Err(Error::InvalidParams(String::from(
                    "state bounds must be finite",
                ))),
            }
        })
        .collect()
}

fn path_formula(h: &HybridAutomaton, path: &ModePath, lay: &Layout) -> Result<Formula, Error> {
    let qs = path.modes();
    let mut parts = vec![h.init_at(&qs[0], &names_as_terms(&lay.states[0]))?];
    for (i, q) in qs.iter().enumerate() {
        if i > 0 {
            parts.push(h.jump_at(
                &qs[i - 1],
                q,
                &names_as_terms(&lay.ends[i - 1]),
                &names_as_terms(&lay.states[i]),
            )?);
        }
        parts.push(h.flow_relation(
            q,
            &names_as_terms(&lay.states[i]),
            &names_as_terms(&lay.ends[i]),
            lay.dwell[i].clone(),
        )?);
        parts.push(stays_inside(h, q, lay, i)?);
    }
    Ok(Formula::and(parts))
}

fn paths_for(h: &HybridAutomaton, k: usize, choice: &PathChoice) -> Result<Vec<ModePath>, Error> {
    match choice {
        PathChoice::One(p) => {
            if p.steps() != k {
                return Err(Error::InvalidParams(format!(
                    "path has {} jumps, expected {}",
                    p.steps(),
                    k
                )));
            }
            let qs: Vec<&str> = p.modes().iter().map(|q| &**q).collect();
            ModePath::new(h, &qs)
        }
        .map(|p| vec![p]),
        PathChoice::All { cap } => mode_paths(h, k, *cap),
    }
}

fn reach_over(
    h: &HybridAutomaton,
    k: usize,
    choice: &PathChoice,
    lay: &Layout,
) -> Result<Formula, Error> {
    let parts = paths_for(h, k, choice)?
        .iter()
        .map(|p| path_formula(h, p, lay))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Formula::or(parts))
}

/// A k-step reachability formula and the names of its free variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Reach {
    pub formula: Formula,
    /// `x_i`, the state on entering step `i`.
    pub states: Vec<Vec<Name>>,
    /// `x_i^t`, the state on leaving step `i`.
    pub ends: Vec<Vec<Name>>,
    /// `t_i`, the dwell time of step `i`.
    pub dwell: Vec<Name>,
}

/// `Reach(k)` with free states `{v}{i}`, exits `{v}{i}t` and dwell times
/// `t{i}`. Dwell times are unconstrained apart from the flows.
pub fn reach_encoding(h: &HybridAutomaton, k: usize, choice: &PathChoice) -> Result<Reach, Error> {
    let states: Vec<Vec<Name>> = (0..=k)
        .map(|i| {
            h.vars
                .iter()
                .map(|v| name(&format!("{}{}", v, i)))
                .collect()
        })
        .collect();
    let ends: Vec<Vec<Name>> = (0..=k)
        .map(|i| {
            h.vars
                .iter()
                .map(|v| name(&format!("{}{}t", v, i)))
                .collect()
        })
        .collect();
    let dwell: Vec<Name> = (0..=k).map(|i| name(&format!("t{}", i))).collect();
    let (probe_time, probe_state) = probes(h, k, "t");
    let lay = Layout {
        states,
        ends,
        dwell: names_as_terms(&dwell),
        probe_time,
        probe_state,
    };
    distinct(lay.names().chain(&dwell), &h.vars)?;
    let formula = reach_over(h, k, choice, &lay)?;
    Ok(Reach {
        formula,
        states: lay.states,
        ends: lay.ends,
        dwell,
    })
}

/// Reachability from `x0` to `xt` in total time `t` with `k` jumps. The
/// intermediate states and all dwell times but the last are universal
/// binders. Each dwell time ranges over the whole horizon, a guard keeps their
/// sum below `t`, and the last dwell time is what remains.
fn reach_relation<'a>(
    h: &'a HybridAutomaton,
    k: usize,
    choice: &'a PathChoice,
) -> impl Fn(&[Name], &[Name], &str, &Rational) -> Related + 'a {
    move |x0, xt, t, horizon| {
        let mid = |i: usize, suffix: &str| -> Vec<Name> {
            h.vars
                .iter()
                .map(|v| name(&format!("{}{}{}{}", v, t, i, suffix)))
                .collect()
        };
        let mut states = vec![x0.to_vec()];
        states.extend((1..=k).map(|i| mid(i, "")));
        let mut ends: Vec<Vec<Name>> = (0..k).map(|i| mid(i, "e")).collect();
        ends.push(xt.to_vec());
        let steps: Vec<Name> = (0..k).map(|i| name(&format!("{}{}", t, i))).collect();
        let mut dwell = Vec::new();
        let mut left = Term::var(t);
        for s in &steps {
            dwell.push(Term::Var(s.clone()));
            left = Term::sub(left, Term::Var(s.clone()));
        }
        let mut binders = Vec::new();
        let region = rational_bounds(h)?;
        for s in &steps {
            binders.push((s.clone(), Term::zero(), konst(horizon)));
        }
        for i in 0..k {
            for (v, (lo, hi)) in ends[i]
                .iter()
                .chain(&states[i + 1])
                .zip(region.iter().cycle())
            {
                binders.push((v.clone(), konst(lo), konst(hi)));
            }
        }
        let guard = if k > 0 {
            Formula::greater_eq(left.clone(), Term::zero())
        } else {
            Formula::tt()
        };
        if k > 0 {
            left = Term::apply(crate::formula::Func::Max, vec![Term::zero(), left]);
        }
        dwell.push(left);
        let (probe_time, probe_state) = probes(h, k, t);
        let lay = Layout {
            states,
            ends,
            dwell,
            probe_time,
            probe_state,
        };
        let fresh: Vec<&Name> = lay
            .states
            .iter()
            .skip(1)
            .chain(&lay.ends[..k])
            .flatten()
            .chain(&lay.probe_time)
            .chain(lay.probe_state.iter().flatten())
            .chain(&steps)
            .collect();
        let mut taken: Vec<Name> = h.vars.clone();
        taken.extend(x0.iter().cloned());
        taken.extend(xt.iter().cloned());
        taken.extend(RESERVED.iter().map(|r| name(r)));
        distinct(fresh.into_iter(), &taken)?;
        Ok((
            binders,
            Formula::and(vec![guard, reach_over(h, k, choice, &lay)?]),
        ))
    }
}

/// Options of a hybrid stability check.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridCheck {
    pub kind: StabilityKind,
    /// Number of jumps along each run.
    pub k: usize,
    pub path_cap: usize,
}

impl HybridCheck {
    pub fn new(kind: StabilityKind, k: usize) -> HybridCheck {
        HybridCheck {
            kind,
            k,
            path_cap: DEFAULT_PATH_CAP,
        }
    }
}

/// The continuous stability sentence with the flow atom replaced by k-step
/// reachability over all mode paths.
pub fn encode_hybrid(
    h: &HybridAutomaton,
    chk: &HybridCheck,
    pr: &StabilityParams,
) -> Result<Formula, Error> {
    copies(&h.vars)?;
    let choice = PathChoice::All { cap: chk.path_cap };
    let reach = reach_relation(h, chk.k, &choice);
    let lyap = lyapunov_over(&h.vars, &h.bounds, &reach, pr)?;
    Ok(match chk.kind {
        StabilityKind::Lyapunov => lyap,
        StabilityKind::Asymptotic => Formula::and(vec![
            lyap,
            convergence(&h.vars, &h.bounds, &reach, pr, false)?,
        ]),
        StabilityKind::AsymptoticInLarge => Formula::and(vec![
            lyap,
            convergence(&h.vars, &h.bounds, &reach, pr, true)?,
        ]),
    })
}

pub fn check_hybrid_stability(
    h: &HybridAutomaton,
    chk: &HybridCheck,
    pr: &StabilityParams,
) -> Result<StabilityVerdict, Error> {
    check_hybrid_stability_with(h, chk, pr, &SolverConfig::new(pr.delta), &Sequential)
}

/// Negate-then-decide, as for continuous systems. The reported class follows
/// the quantifier prefix, which grows past the continuous one when an
/// invariant conjunct is present.
pub fn check_hybrid_stability_with<E: Executor>(
    h: &HybridAutomaton,
    chk: &HybridCheck,
    pr: &StabilityParams,
    base: &SolverConfig,
    exec: &E,
) -> Result<StabilityVerdict, Error> {
    let sentence = encode_hybrid(h, chk, pr)?;
    decide_sentence(&sentence, pr, base, exec)
}

/// The nonlinear bouncing ball with air drag, with formulas as printed in the
/// usual presentation: `q_d` is entered at `x = 10, v = 0`, the flows are
/// `ẋ = v, v̇ = g(1 ∓ βv²)`, the jumps reset `v' = αv` at `x = 0` and keep the
/// state at `v = 0`.
///
/// The invariants pair `q_d` with `v ≥ 0` although its flow, for `g < 0`,
/// drives `v` negative from the initial state. So with the default
/// constants the `q_u` flow and invariant describe the downward motion and
/// the `q_d` ones the upward motion. The reset carries no sign change, so a
/// physical reflection needs a negative `alpha`. X, unbounded in principle,
/// is `x ∈ [-1, 11], v ∈ [-15, 15]`.
pub fn bouncing_ball(g: Rational, beta: Rational, alpha: Rational) -> HybridAutomaton {
    let vars = vec![name("x"), name("v")];
    let bounds = vec![Interval::new(-1.0, 11.0), Interval::new(-15.0, 15.0)];
    let (x, v) = (Term::var("x"), Term::var("v"));
    let (xp, vp) = (Term::var("x'"), Term::var("v'"));
    let flow = |label: &str, sign: i128| {
        let drag = Term::mul(konst(&beta), Term::pow(v.clone(), 2));
        let factor = Term::add(
            Term::one(),
            Term::mul(konst(&Rational::from_integer(sign)), drag),
        );
        Arc::new(
            OdeSystem::builder(label)
                .state_interval("x", bounds[0])
                .state_interval("v", bounds[1])
                .rhs("x", v.clone())
                .rhs("v", Term::mul(konst(&g), factor))
                .build()
                .expect("bouncing ball flow"),
        )
    };
    let nonneg = |t: &Term| Formula::greater_eq(t.clone(), Term::zero());
    let modes = vec![
        Mode {
            name: name("q_u"),
            flow: flow("q_u", -1),
            inv: Formula::and(vec![nonneg(&x), Formula::less_eq(v.clone(), Term::zero())]),
            init: Formula::ff(),
        },
        Mode {
            name: name("q_d"),
            flow: flow("q_d", 1),
            inv: Formula::and(vec![nonneg(&x), nonneg(&v)]),
            init: Formula::and(vec![
                Formula::equal(x.clone(), konst(&Rational::from_integer(10))),
                Formula::equal(v.clone(), Term::zero()),
            ]),
        },
    ];
    let jumps = vec![
        Jump {
            from: name("q_u"),
            to: name("q_d"),
            relation: Formula::and(vec![
                Formula::equal(v.clone(), Term::zero()),
                Formula::equal(xp.clone(), x.clone()),
                Formula::equal(vp.clone(), v.clone()),
            ]),
        },
        Jump {
            from: name("q_d"),
            to: name("q_u"),
            relation: Formula::and(vec![
                Formula::equal(x.clone(), Term::zero()),
                Formula::equal(vp, Term::mul(konst(&alpha), v)),
                Formula::equal(xp, x),
            ]),
        },
    ];
    HybridAutomaton::new("bouncing_ball", vars, bounds, modes, jumps).expect("bouncing ball")
}

/// `bouncing_ball` with `g = -9.8, β = 0.01, α = 0.9`.
pub fn bouncing_ball_default() -> HybridAutomaton {
    bouncing_ball(
        Rational::new(-49, 5),
        Rational::new(1, 100),
        Rational::new(9, 10),
    )
}
