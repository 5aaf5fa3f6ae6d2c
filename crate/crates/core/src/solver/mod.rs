//! δ-decision procedure for bounded sentences by interval branch-and-prune.
//!
//! Consecutive quantifiers of one kind form a block whose variables are
//! searched together. Each block keeps an explicit stack of boxes explored
//! depth-first, left half first, always bisecting the axis that is widest
//! relative to its quantifier range. A leaf is settled by the body's
//! three-valued value over the box; inner blocks are decided recursively per
//! outer leaf.
//!
//! Only the outermost blocks run in parallel. The next boxes on the stack are
//! evaluated speculatively and consumed in sequential order, so answers,
//! witnesses and counters do not depend on the worker count.

mod contract;

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{Bounded, Formula, Name, QuantKind, Rational, Rel};
use crate::interval::{eval_term_in, Interval, IntervalBox};
use crate::ode::FlowCache;
use crate::Error;

/// Three-valued leaf answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Truth {
    /// The δ-weakened formula holds everywhere on the box.
    DeltaTrue,
    /// The exact formula fails everywhere on the box.
    ExactFalse,
    Unknown,
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::DeltaTrue => "delta-true",
            Truth::ExactFalse => "false",
            Truth::Unknown => "unknown",
        })
    }
}

/// Judges `t rel 0` from an enclosure of `t`.
///
/// Inside the band where the atom is exactly false but its weakening holds,
/// either answer would be sound; the exact one is reported.
pub fn judge(enc: Interval, rel: Rel, delta: f64) -> Truth {
    let (exact_false, weak_true) = match rel {
        Rel::Gt => (enc.hi() <= 0.0, enc.lo() > -delta),
        Rel::Ge => (enc.hi() < 0.0, enc.lo() >= -delta),
    };
    if exact_false {
        Truth::ExactFalse
    } else if weak_true {
        Truth::DeltaTrue
    } else {
        Truth::Unknown
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub delta: Rational,
    /// Split floor at quantifier depth `k` is `δ / base^(k+2)`.
    pub precision_base: u32,
    /// Maximum bisection depth inside one quantifier block.
    pub max_depth: usize,
    /// Node cap per block search at the first effort level. An inner block
    /// evaluated over a box of relative width `w` gets at most `effort_base / w`.
    pub effort_base: u64,
    /// Effort levels double the cap; the last one is tried before giving up.
    pub max_effort_level: u32,
    /// Flow tolerance; defaults to `δ/16`.
    pub flow_tol: Option<f64>,
    pub workers: usize,
    pub deterministic: bool,
}

impl SolverConfig {
    pub fn new(delta: Rational) -> SolverConfig {
        SolverConfig {
            delta,
            precision_base: 2,
            max_depth: 60,
            effort_base: 64,
            max_effort_level: 20,
            flow_tol: None,
            workers: 1,
            deterministic: true,
        }
    }

    pub fn with_workers(mut self, n: usize) -> SolverConfig {
        self.workers = n;
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::InvalidParams(String::from(m)));
        if self.delta <= Rational::from_integer(0) {
            return bad("delta must be positive");
        }
        if self.precision_base < 2 {
            return bad("precision base must be at least 2");
        }
        if self.workers == 0 {
            return bad("worker count must be positive");
        }
        if let Some(t) = self.flow_tol {
            if !(t > 0.0) {
                return bad("flow tolerance must be positive");
            }
        }
        Ok(())
    }

    /// Lower bound of δ as a float; sound for δ-truth claims.
    pub fn delta_f64(&self) -> f64 {
        Interval::from_rational(&self.delta).lo()
    }

    pub fn resolution(&self, depth: usize) -> f64 {
        let base = self.precision_base as f64;
        self.delta_f64() / libm::pow(base, (depth + 2) as f64)
    }

    pub fn flow_tolerance(&self) -> f64 {
        self.flow_tol.unwrap_or(self.delta_f64() / 16.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    /// Boxes evaluated, including point samples.
    pub boxes: u64,
    /// Deepest bisection level reached in any block.
    pub max_depth: usize,
    /// Validated flow integrations performed.
    pub integrations: u64,
}

impl SolverStats {
    pub fn merge(&mut self, o: &SolverStats) {
        self.boxes += o.boxes;
        self.max_depth = self.max_depth.max(o.max_depth);
        self.integrations += o.integrations;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Answer {
    DeltaTrue,
    ExactFalse,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::DeltaTrue => "delta-true",
            Answer::ExactFalse => "false",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverVerdict {
    pub answer: Answer,
    /// Boxes of the existential variables that certified a δ-true answer, or
    /// of the universal variables that certified a false one.
    pub witness: Option<IntervalBox>,
    pub stats: SolverStats,
}

/// Runs independent jobs, returning results in index order.
pub trait Executor: Sync {
    fn workers(&self) -> usize;
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T>;
}

pub struct Sequential;

impl Executor for Sequential {
    fn workers(&self) -> usize {
        1
    }

    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        (0..n).map(f).collect()
    }
}

/// What happened to one box of an outermost block.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub seq: u64,
    pub kind: QuantKind,
    pub depth: usize,
    pub region: IntervalBox,
    pub event: &'static str,
    /// Atom enclosures over the box when the block body is quantifier-free.
    pub atoms: Vec<Interval>,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = match self.kind {
            QuantKind::Exists => "exists",
            QuantKind::Forall => "forall",
        };
        write!(
            f,
            "seq={} block={} depth={} event={} box={}",
            self.seq, q, self.depth, self.event, self.region
        )?;
        if !self.atoms.is_empty() {
            write!(f, " atoms=[")?;
            for (i, a) in self.atoms.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", a)?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

pub type TraceSink<'a> = &'a mut dyn FnMut(&TraceRecord);

/// δ-decides a bounded sentence.
pub fn decide(f: &Formula, cfg: &SolverConfig) -> Result<SolverVerdict, Error> {
    decide_with(f, cfg, &Sequential, None)
}

pub fn decide_with<E: Executor>(
    f: &Formula,
    cfg: &SolverConfig,
    exec: &E,
    trace: Option<TraceSink<'_>>,
) -> Result<SolverVerdict, Error> {
    cfg.validate()?;
    let free = f.free_vars();
    if !free.is_empty() {
        let names: Vec<String> = free.iter().map(|n| format!("{}", n)).collect();
        return Err(Error::InvalidParams(format!(
            "not a sentence; free variables: {}",
            names.join(", ")
        )));
    }
    let delta = cfg.delta_f64();
    let tol = cfg.flow_tolerance();
    let mut stats = SolverStats::default();
    let mut top = Top {
        exec,
        width: cfg.workers.min(exec.workers()).max(1),
        trace,
        seq: 0,
    };
    // effort level L caps every block search at effort_base * 2^L nodes; the
    // next level runs only if some search hit its cap
    for level in 0..=cfg.max_effort_level {
        let grow = libm::pow(2.0, level as f64);
        let search = Search {
            cfg,
            delta,
            tol,
            cap: cfg.effort_base as f64 * grow,
        };
        let mut loc = Local::new(tol);
        let o = search.eval(
            f,
            &IntervalBox::new(),
            0,
            search.cap,
            &mut loc,
            Some(&mut top),
        )?;
        loc.settle();
        stats.merge(&loc.stats);
        let answer = match o.truth {
            Truth::DeltaTrue => Answer::DeltaTrue,
            Truth::ExactFalse => Answer::ExactFalse,
            Truth::Unknown if loc.capped => continue,
            Truth::Unknown => break,
        };
        return Ok(SolverVerdict {
            answer,
            witness: (!o.witness.is_empty()).then_some(o.witness),
            stats,
        });
    }
    Err(Error::ResolutionFloor)
}

/// Three-valued evaluation of a quantifier-free formula over a box.
///
/// `resolution` must not exceed δ; atoms whose enclosures are narrower than
/// it are always decided.
pub fn decide_atoms_on_box(
    f: &Formula,
    b: &IntervalBox,
    delta: &Rational,
    resolution: &Rational,
) -> Result<Truth, Error> {
    if *delta < Rational::from_integer(0) {
        return Err(Error::NegativeDelta);
    }
    if *resolution <= Rational::from_integer(0) || resolution > delta {
        return Err(Error::InvalidParams(String::from(
            "resolution must be positive and at most delta",
        )));
    }
    if !f.is_quantifier_free() {
        return Err(Error::Unsupported(
            "quantifier in a quantifier-free context",
        ));
    }
    let d = Interval::from_rational(delta).lo();
    let tol = Interval::from_rational(resolution).lo() / 4.0;
    let search = Search {
        cfg: &SolverConfig::new(*delta),
        delta: d,
        tol,
        cap: f64::INFINITY,
    };
    let mut loc = Local::new(tol);
    Ok(search
        .eval::<Sequential>(f, b, 0, f64::INFINITY, &mut loc, None)?
        .truth)
}

#[derive(Clone, Debug)]
struct Outcome {
    truth: Truth,
    witness: IntervalBox,
}

impl Outcome {
    fn bare(truth: Truth) -> Outcome {
        Outcome {
            truth,
            witness: IntervalBox::new(),
        }
    }
}

struct Local {
    flows: FlowCache,
    stats: SolverStats,
    /// Some search gave up on its node cap rather than the resolution floor.
    capped: bool,
}

impl Local {
    fn new(tol: f64) -> Local {
        Local {
            flows: FlowCache::new(tol),
            stats: SolverStats::default(),
            capped: false,
        }
    }

    fn settle(&mut self) {
        self.stats.integrations += self.flows.integrations;
        self.flows.integrations = 0;
    }
}

struct Top<'e, 't, E> {
    exec: &'e E,
    width: usize,
    trace: Option<TraceSink<'t>>,
    seq: u64,
}

struct Block<'f> {
    kind: QuantKind,
    vars: Vec<Name>,
    body: &'f Formula,
    refw: Vec<f64>,
    certain: Vec<Option<Interval>>,
}

#[derive(Clone, Debug)]
struct Node {
    id: u64,
    region: IntervalBox,
    depth: usize,
}

enum Step {
    Certified(Outcome),
    /// Leaf settled in the block's neutral direction, with its witness.
    Settled(IntervalBox),
    Split(IntervalBox, IntervalBox),
    Stuck,
}

impl Step {
    fn label(&self) -> &'static str {
        match self {
            Step::Certified(o) if o.truth == Truth::DeltaTrue => "certified-true",
            Step::Certified(_) => "certified-false",
            Step::Settled(_) => "settled",
            Step::Split(..) => "split",
            Step::Stuck => "unresolved",
        }
    }
}

struct Search<'c> {
    cfg: &'c SolverConfig,
    delta: f64,
    tol: f64,
    /// Node cap of the current effort level.
    cap: f64,
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::Domain(_) | Error::NonConvergence { .. } | Error::BoundsEscape { .. }
    )
}

fn joined(env: &IntervalBox, region: &IntervalBox) -> IntervalBox {
    let mut b = env.clone();
    b.merge(region);
    b
}

/// Running state of one block search: nodes meeting the certain region are
/// served first, since only they can certify.
struct Frontier {
    hot: VecDeque<Node>,
    cold: VecDeque<Node>,
    stuck: bool,
    first: Option<IntervalBox>,
}

impl Frontier {
    fn new(root: IntervalBox) -> Frontier {
        Frontier {
            hot: VecDeque::from([Node {
                id: 0,
                region: root,
                depth: 0,
            }]),
            cold: VecDeque::new(),
            stuck: false,
            first: None,
        }
    }
}

impl Search<'_> {
    #[allow(clippy::too_many_arguments)]
    fn eval<E: Executor>(
        &self,
        f: &Formula,
        env: &IntervalBox,
        k: usize,
        cap: f64,
        loc: &mut Local,
        mut top: Option<&mut Top<'_, '_, E>>,
    ) -> Result<Outcome, Error> {
        match f {
            Formula::Atom(t, rel) => match eval_term_in(t, env, &mut loc.flows) {
                Ok(enc) => Ok(Outcome::bare(judge(enc, *rel, self.delta))),
                Err(e) if recoverable(&e) => Ok(Outcome::bare(Truth::Unknown)),
                Err(e) => Err(e),
            },
            Formula::And(ps) => {
                let mut acc = Truth::DeltaTrue;
                let mut wit = IntervalBox::new();
                for p in ps {
                    let o = self.eval(p, env, k, cap, loc, top.as_deref_mut())?;
                    match o.truth {
                        Truth::ExactFalse => return Ok(o),
                        Truth::Unknown => acc = Truth::Unknown,
                        Truth::DeltaTrue => wit.merge(&o.witness),
                    }
                }
                Ok(match acc {
                    Truth::DeltaTrue => Outcome {
                        truth: acc,
                        witness: wit,
                    },
                    _ => Outcome::bare(acc),
                })
            }
            Formula::Or(ps) => {
                let mut acc = Truth::ExactFalse;
                let mut wit = IntervalBox::new();
                for p in ps {
                    let o = self.eval(p, env, k, cap, loc, top.as_deref_mut())?;
                    match o.truth {
                        Truth::DeltaTrue => return Ok(o),
                        Truth::Unknown => acc = Truth::Unknown,
                        Truth::ExactFalse => wit.merge(&o.witness),
                    }
                }
                Ok(match acc {
                    Truth::ExactFalse => Outcome {
                        truth: acc,
                        witness: wit,
                    },
                    _ => Outcome::bare(acc),
                })
            }
            Formula::Exists(_) | Formula::Forall(_) => {
                let Some(blk) = self.open_block(f, env, loc)? else {
                    return Ok(Outcome::bare(Truth::Unknown));
                };
                match blk {
                    Opened::Vacuous(t) => Ok(Outcome::bare(t)),
                    Opened::Block(blk, root) => match top {
                        Some(tc) => self.search_top(&blk, root, env, k, cap, loc, tc),
                        None => self.search(&blk, root, env, k, cap, loc),
                    },
                }
            }
        }
    }

    fn open_block<'f>(
        &self,
        f: &'f Formula,
        env: &IntervalBox,
        loc: &mut Local,
    ) -> Result<Option<Opened<'f>>, Error> {
        let (kind, first) = match f {
            Formula::Exists(b) => (QuantKind::Exists, b),
            Formula::Forall(b) => (QuantKind::Forall, b),
            _ => unreachable!("open_block on a non-quantifier"),
        };
        let mut binders: Vec<&Bounded> = vec![first];
        let mut cur: &Formula = &first.body;
        loop {
            let next = match (kind, cur) {
                (QuantKind::Exists, Formula::Exists(b))
                | (QuantKind::Forall, Formula::Forall(b)) => b,
                _ => break,
            };
            let depends = binders
                .iter()
                .any(|p| next.lower.mentions(&p.var) || next.upper.mentions(&p.var));
            if depends || binders.iter().any(|p| p.var == next.var) {
                break;
            }
            binders.push(next);
            cur = &next.body;
        }

        let mut region = IntervalBox::new();
        let mut vars = Vec::with_capacity(binders.len());
        let mut refw = Vec::with_capacity(binders.len());
        let mut certain = Vec::with_capacity(binders.len());
        for b in &binders {
            let lo = eval_term_in(&b.lower, env, &mut loc.flows);
            let hi = eval_term_in(&b.upper, env, &mut loc.flows);
            let (u, v) = match (lo, hi) {
                (Ok(u), Ok(v)) => (u, v),
                (Err(e), _) | (_, Err(e)) => {
                    if recoverable(&e) {
                        return Ok(None);
                    }
                    return Err(e);
                }
            };
            if !u.is_finite() || !v.is_finite() {
                return Err(Error::Unsupported(
                    "quantifier bound without a finite enclosure",
                ));
            }
            let Some(dom) = Interval::try_new(u.lo(), v.hi()) else {
                return Ok(Some(Opened::Vacuous(match kind {
                    QuantKind::Forall => Truth::DeltaTrue,
                    QuantKind::Exists => Truth::ExactFalse,
                })));
            };
            vars.push(b.var.clone());
            refw.push(dom.width());
            certain.push(Interval::try_new(u.hi(), v.lo()));
            region.insert(b.var.clone(), dom);
        }
        if kind == QuantKind::Exists {
            // widths are judged against the contracted root, so an axis that
            // the constraints already pin down is still split in proportion
            let mut full = joined(env, &region);
            if contract::contract(cur, &mut full, &vars, &mut loc.flows).is_err() {
                return Ok(Some(Opened::Vacuous(Truth::ExactFalse)));
            }
            for (v, w) in vars.iter().zip(refw.iter_mut()) {
                let c = full.get(v).unwrap().width();
                if c > 0.0 {
                    *w = c;
                }
            }
        }
        Ok(Some(Opened::Block(
            Block {
                kind,
                vars,
                body: cur,
                refw,
                certain,
            },
            region,
        )))
    }

    fn rel_width(&self, blk: &Block, region: &IntervalBox) -> f64 {
        blk.vars
            .iter()
            .zip(&blk.refw)
            .map(|(v, w)| {
                if *w > 0.0 {
                    region.get(v).map_or(0.0, |i| i.width() / w)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    fn inside(&self, blk: &Block, region: &IntervalBox) -> bool {
        blk.vars
            .iter()
            .zip(&blk.certain)
            .all(|(v, c)| match (c, region.get(v)) {
                (Some(c), Some(i)) => i.is_subset(c),
                _ => false,
            })
    }

    fn meets(&self, blk: &Block, region: &IntervalBox) -> bool {
        blk.vars
            .iter()
            .zip(&blk.certain)
            .all(|(v, c)| match (c, region.get(v)) {
                (Some(c), Some(i)) => i.intersect(c).is_some(),
                _ => false,
            })
    }

    fn split_axis(
        &self,
        blk: &Block,
        region: &IntervalBox,
        depth: usize,
        k: usize,
    ) -> Option<Name> {
        if depth >= self.cfg.max_depth {
            return None;
        }
        let floor = self.cfg.resolution(k);
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in blk.vars.iter().enumerate() {
            let iv = region.get(v)?;
            let m = iv.mid();
            if iv.width() <= floor || !(iv.lo() < m && m < iv.hi()) || blk.refw[i] <= 0.0 {
                continue;
            }
            let nw = iv.width() / blk.refw[i];
            if best.is_none_or(|(_, bw)| nw > bw) {
                best = Some((i, nw));
            }
        }
        best.map(|(i, _)| blk.vars[i].clone())
    }

    /// Evaluates the body at one point of the certain region, contracting
    /// the remaining existential axes after each coordinate is fixed.
    fn sample(
        &self,
        blk: &Block,
        region: &IntervalBox,
        env: &IntervalBox,
        k: usize,
        loc: &mut Local,
    ) -> Result<Sample, Error> {
        let mut pt = joined(env, region);
        for (i, v) in blk.vars.iter().enumerate() {
            let Some(c) = blk.certain[i] else {
                return Ok(Sample::Miss);
            };
            let Some(iv) = pt.get(v).and_then(|x| x.intersect(&c)) else {
                return Ok(Sample::Miss);
            };
            pt.insert(v.clone(), Interval::point(iv.mid()));
            if blk.kind == QuantKind::Exists
                && i + 1 < blk.vars.len()
                && contract::contract(blk.body, &mut pt, &blk.vars[i + 1..], &mut loc.flows)
                    .is_err()
            {
                return Ok(Sample::Miss);
            }
        }
        loc.stats.boxes += 1;
        let capped = core::mem::replace(&mut loc.capped, false);
        let r = self.eval::<Sequential>(blk.body, &pt, k + 1, self.cap, loc, None)?;
        let starved = loc.capped;
        loc.capped |= capped;
        let hit = match (blk.kind, r.truth) {
            (_, Truth::Unknown) if !starved => return Ok(Sample::Undecided),
            (QuantKind::Forall, t) => t == Truth::ExactFalse,
            (QuantKind::Exists, t) => t == Truth::DeltaTrue,
        };
        if !hit {
            return Ok(Sample::Miss);
        }
        let mut witness = IntervalBox::new();
        for v in &blk.vars {
            witness.insert(v.clone(), pt.get(v).unwrap());
        }
        witness.merge(&r.witness);
        Ok(Sample::Hit(Outcome {
            truth: r.truth,
            witness,
        }))
    }

    /// Node cap for inner blocks evaluated over a box of relative width `w`:
    /// wide boxes get little effort, points get the full level.
    fn inner_cap(&self, w: f64) -> f64 {
        if w > 0.0 {
            self.cap.min(libm::ceil(self.cfg.effort_base as f64 / w))
        } else {
            self.cap
        }
    }

    fn process(
        &self,
        blk: &Block,
        node: &Node,
        env: &IntervalBox,
        k: usize,
        loc: &mut Local,
    ) -> Result<Step, Error> {
        loc.stats.boxes += 1;
        loc.stats.max_depth = loc.stats.max_depth.max(node.depth);
        let mut full = joined(env, &node.region);
        if blk.kind == QuantKind::Exists
            && contract::contract(blk.body, &mut full, &blk.vars, &mut loc.flows).is_err()
        {
            return Ok(Step::Settled(IntervalBox::new()));
        }
        let mut region = IntervalBox::new();
        for v in &blk.vars {
            region.insert(v.clone(), full.get(v).unwrap());
        }
        match self.sample(blk, &region, env, k, loc)? {
            Sample::Hit(o) => return Ok(Step::Certified(o)),
            // undecided even with this block pinned to a point: the enclosing
            // box is too wide, and splitting here would not help
            Sample::Undecided => return Ok(Step::Stuck),
            Sample::Miss => {}
        }
        let cap = self.inner_cap(self.rel_width(blk, &region));
        let r = self.eval::<Sequential>(blk.body, &full, k + 1, cap, loc, None)?;
        let inside = self.inside(blk, &region);
        match (blk.kind, r.truth) {
            (QuantKind::Forall, Truth::DeltaTrue) => {
                let mut wit = region;
                wit.merge(&r.witness);
                return Ok(Step::Settled(wit));
            }
            (QuantKind::Exists, Truth::ExactFalse) => return Ok(Step::Settled(IntervalBox::new())),
            (QuantKind::Forall, Truth::ExactFalse) | (QuantKind::Exists, Truth::DeltaTrue)
                if inside =>
            {
                let mut wit = region;
                wit.merge(&r.witness);
                return Ok(Step::Certified(Outcome {
                    truth: r.truth,
                    witness: wit,
                }));
            }
            _ => {}
        }
        Ok(match self.split_axis(blk, &region, node.depth, k) {
            Some(axis) => {
                let (l, r) = region.split(&axis)?;
                Step::Split(l, r)
            }
            None => Step::Stuck,
        })
    }

    fn finish(blk: &Block, fr: Frontier) -> Outcome {
        if fr.stuck {
            return Outcome::bare(Truth::Unknown);
        }
        match blk.kind {
            QuantKind::Forall => Outcome {
                truth: Truth::DeltaTrue,
                witness: fr.first.unwrap_or_default(),
            },
            QuantKind::Exists => Outcome::bare(Truth::ExactFalse),
        }
    }

    /// Files a processed node's result; returns a certified outcome if any.
    fn absorb(
        &self,
        blk: &Block,
        fr: &mut Frontier,
        node: &Node,
        step: Step,
        next_id: &mut u64,
    ) -> Option<Outcome> {
        match step {
            Step::Certified(o) => return Some(o),
            Step::Settled(w) => {
                if fr.first.is_none() && blk.kind == QuantKind::Forall {
                    fr.first = Some(w);
                }
            }
            Step::Split(l, r) => {
                for region in [l, r] {
                    let child = Node {
                        id: *next_id,
                        region,
                        depth: node.depth + 1,
                    };
                    *next_id += 1;
                    if self.meets(blk, &child.region) {
                        fr.hot.push_back(child);
                    } else {
                        fr.cold.push_back(child);
                    }
                }
            }
            Step::Stuck => fr.stuck = true,
        }
        None
    }

    fn search(
        &self,
        blk: &Block,
        root: IntervalBox,
        env: &IntervalBox,
        k: usize,
        cap: f64,
        loc: &mut Local,
    ) -> Result<Outcome, Error> {
        let mut fr = Frontier::new(root);
        let mut next_id = 1;
        let mut spent = 0.0;
        while let Some(node) = fr.hot.pop_front().or_else(|| fr.cold.pop_front()) {
            if spent >= cap {
                loc.capped = true;
                return Ok(Outcome::bare(Truth::Unknown));
            }
            spent += 1.0;
            let step = self.process(blk, &node, env, k, loc)?;
            if let Some(o) = self.absorb(blk, &mut fr, &node, step, &mut next_id) {
                return Ok(o);
            }
        }
        Ok(Self::finish(blk, fr))
    }

    /// Outermost-block search. The next nodes in serving order are evaluated
    /// speculatively in parallel and consumed strictly in that order.
    #[allow(clippy::too_many_arguments)]
    fn search_top<E: Executor>(
        &self,
        blk: &Block,
        root: IntervalBox,
        env: &IntervalBox,
        k: usize,
        cap: f64,
        loc: &mut Local,
        top: &mut Top<'_, '_, E>,
    ) -> Result<Outcome, Error> {
        type Done = Result<(Step, SolverStats, bool), Error>;
        let mut fr = Frontier::new(root);
        let mut next_id = 1;
        let mut memo: BTreeMap<u64, Done> = BTreeMap::new();
        let mut spent = 0.0;
        loop {
            let Some(head) = fr.hot.front().or_else(|| fr.cold.front()) else {
                break;
            };
            if spent >= cap {
                loc.capped = true;
                return Ok(Outcome::bare(Truth::Unknown));
            }
            spent += 1.0;
            if !memo.contains_key(&head.id) {
                let batch: Vec<&Node> = fr
                    .hot
                    .iter()
                    .chain(fr.cold.iter())
                    .filter(|n| !memo.contains_key(&n.id))
                    .take(top.width)
                    .collect();
                let results = top.exec.map(batch.len(), |i| {
                    let mut l = Local::new(self.tol);
                    let r = self.process(blk, batch[i], env, k, &mut l);
                    l.settle();
                    r.map(|s| (s, l.stats, l.capped))
                });
                let ids: Vec<u64> = batch.iter().map(|n| n.id).collect();
                memo.extend(ids.into_iter().zip(results));
            }
            let node = fr.hot.pop_front().or_else(|| fr.cold.pop_front()).unwrap();
            let (step, stats, capped) = memo.remove(&node.id).unwrap()?;
            loc.stats.merge(&stats);
            loc.capped |= capped;
            if let Some(sink) = top.trace.as_mut() {
                let atoms = if blk.body.is_quantifier_free() {
                    let mut fl = FlowCache::new(self.tol);
                    let full = joined(env, &node.region);
                    let mut out = Vec::new();
                    blk.body.for_each_atom(&mut |t, _| {
                        if let Ok(i) = eval_term_in(t, &full, &mut fl) {
                            out.push(i);
                        }
                    });
                    out
                } else {
                    Vec::new()
                };
                sink(&TraceRecord {
                    seq: top.seq,
                    kind: blk.kind,
                    depth: node.depth,
                    region: node.region.clone(),
                    event: step.label(),
                    atoms,
                });
                top.seq += 1;
            }
            if let Some(o) = self.absorb(blk, &mut fr, &node, step, &mut next_id) {
                return Ok(o);
            }
        }
        Ok(Self::finish(blk, fr))
    }
}

enum Sample {
    Hit(Outcome),
    Miss,
    /// Unknown at the point without any search running out of effort.
    Undecided,
}

enum Opened<'f> {
    Vacuous(Truth),
    Block(Block<'f>, IntervalBox),
}
