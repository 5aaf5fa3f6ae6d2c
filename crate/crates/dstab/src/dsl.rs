//! Description files: ODE systems, hybrid automata and raw sentences.
//!
//! ```text
//! # comments run to the end of the line
//! system decay { vars x in [-2, 2]; dyn x' = -x; lipschitz 1; }
//! automaton sw {
//!   vars x in [-2, 2];
//!   mode a { dyn x' = -x; init x = 1; }
//!   mode b { dyn x' = -2*x; inv x >= 0; }
//!   jump a -> b { guard x <= 1/2; reset x' := x / 2; }
//! }
//! bouncingball;                      # or bouncingball(g, beta, alpha);
//! sentence { forall x in [0, 1]. 1 - x^2 >= 0 }
//! ```
//!
//! A jump relation is its guard, then its resets `x' = e` in order, then
//! `x' = x` for every variable it does not reset. Sentences may mention
//! `flow(system, component, time, init...)` for systems declared above them.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use dstab_core::formula::{name, ParseError, Parser, Registry, Token};
use dstab_core::hybrid::{bouncing_ball, primed, HybridAutomaton, Jump, Mode};
use dstab_core::{Formula, Interval, Name, OdeSystem, Rational, Term};

#[derive(Debug, thiserror::Error)]
pub enum DslError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Build(#[from] dstab_core::Error),
}

/// `v in [lo, hi]`
#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub name: Name,
    pub lo: Rational,
    pub hi: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemDecl {
    pub name: Name,
    pub vars: Vec<VarDecl>,
    /// `x' = e`, in declaration order.
    pub dynamics: Vec<(Name, Term)>,
    pub lipschitz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeDecl {
    pub name: Name,
    pub dynamics: Vec<(Name, Term)>,
    pub lipschitz: Option<f64>,
    pub inv: Option<Formula>,
    pub init: Option<Formula>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpDecl {
    pub from: Name,
    pub to: Name,
    pub guard: Option<Formula>,
    /// `x' := e`, in declaration order.
    pub resets: Vec<(Name, Term)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutomatonDecl {
    pub name: Name,
    pub vars: Vec<VarDecl>,
    pub modes: Vec<ModeDecl>,
    pub jumps: Vec<JumpDecl>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    System(SystemDecl),
    Automaton(AutomatonDecl),
    /// The built-in bouncing ball with constants `(g, β, α)`, or the defaults.
    BouncingBall(Option<[Rational; 3]>),
    Sentence(Formula),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub items: Vec<Item>,
}

fn state_box(vars: &[VarDecl]) -> Vec<Interval> {
    vars.iter()
        .map(|v| {
            Interval::new(
                Interval::from_rational(&v.lo).lo(),
                Interval::from_rational(&v.hi).hi(),
            )
        })
        .collect()
}

fn build_flow(
    label: &str,
    vars: &[VarDecl],
    dynamics: &[(Name, Term)],
    lipschitz: Option<f64>,
) -> Result<Arc<OdeSystem>, dstab_core::Error> {
    let mut b = OdeSystem::builder(label);
    for (v, range) in vars.iter().zip(state_box(vars)) {
        b = b.state_interval(&v.name, range);
    }
    for (v, t) in dynamics {
        b = b.rhs(v, t.clone());
    }
    if let Some(l) = lipschitz {
        b = b.lipschitz(l);
    }
    Ok(Arc::new(b.build()?))
}

impl SystemDecl {
    pub fn build(&self) -> Result<Arc<OdeSystem>, dstab_core::Error> {
        build_flow(&self.name, &self.vars, &self.dynamics, self.lipschitz)
    }
}

impl JumpDecl {
    /// Guard, resets, then identities for the variables left alone.
    pub fn relation(&self, vars: &[Name]) -> Formula {
        let mut parts: Vec<Formula> = self.guard.iter().cloned().collect();
        for (v, e) in &self.resets {
            parts.push(Formula::equal(Term::Var(primed(v)), e.clone()));
        }
        for v in vars {
            if !self.resets.iter().any(|(w, _)| w == v) {
                parts.push(Formula::equal(Term::Var(primed(v)), Term::Var(v.clone())));
            }
        }
        Formula::and(parts)
    }
}

impl AutomatonDecl {
    pub fn build(&self) -> Result<HybridAutomaton, dstab_core::Error> {
        let vars: Vec<Name> = self.vars.iter().map(|v| v.name.clone()).collect();
        let modes = self
            .modes
            .iter()
            .map(|m| {
                Ok(Mode {
                    name: m.name.clone(),
                    flow: build_flow(&m.name, &self.vars, &m.dynamics, m.lipschitz)?,
                    inv: m.inv.clone().unwrap_or_else(Formula::tt),
                    init: m.init.clone().unwrap_or_else(Formula::tt),
                })
            })
            .collect::<Result<Vec<_>, dstab_core::Error>>()?;
        let jumps = self
            .jumps
            .iter()
            .map(|j| Jump {
                from: j.from.clone(),
                to: j.to.clone(),
                relation: j.relation(&vars),
            })
            .collect();
        HybridAutomaton::new(&self.name, vars, state_box(&self.vars), modes, jumps)
    }
}

impl Item {
    pub fn label(&self) -> Option<&str> {
        match self {
            Item::System(s) => Some(&s.name),
            Item::Automaton(a) => Some(&a.name),
            Item::BouncingBall(_) => Some("bouncingball"),
            Item::Sentence(_) => None,
        }
    }
}

impl Document {
    pub fn systems(&self) -> impl Iterator<Item = &SystemDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::System(s) => Some(s),
            _ => None,
        })
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Formula> {
        self.items.iter().filter_map(|i| match i {
            Item::Sentence(f) => Some(f),
            _ => None,
        })
    }

    /// The system called `label`, or the only one when `label` is `None`.
    pub fn system(&self, label: Option<&str>) -> Result<Arc<OdeSystem>, String> {
        let found: Vec<&SystemDecl> = self
            .systems()
            .filter(|s| label.is_none_or(|l| &*s.name == l))
            .collect();
        match (found.as_slice(), label) {
            ([s], _) => s.build().map_err(|e| e.to_string()),
            ([], Some(l)) => Err(format!("no system named `{}`", l)),
            ([], None) => Err(String::from("the file declares no system")),
            (_, _) => Err(String::from(
                "several systems declared; pick one with --system",
            )),
        }
    }

    /// The automaton called `label`, or the only one. A lone system counts as
    /// a one-mode automaton.
    pub fn automaton(&self, label: Option<&str>) -> Result<HybridAutomaton, String> {
        let found: Vec<&Item> = self
            .items
            .iter()
            .filter(|i| matches!(i, Item::Automaton(_) | Item::BouncingBall(_)))
            .filter(|i| label.is_none_or(|l| i.label() == Some(l)))
            .collect();
        match found.as_slice() {
            [Item::Automaton(a)] => a.build().map_err(|e| e.to_string()),
            [Item::BouncingBall(None)] => Ok(dstab_core::hybrid::bouncing_ball_default()),
            [Item::BouncingBall(Some([g, b, a]))] => Ok(bouncing_ball(*g, *b, *a)),
            [] => self
                .system(label)
                .map(|s| HybridAutomaton::from_system(&s))
                .map_err(|_| String::from("the file declares no automaton")),
            _ => Err(String::from(
                "several automata declared; pick one with --automaton",
            )),
        }
    }
}

struct P<'r> {
    p: Parser<'r>,
}

impl<'r> P<'r> {
    fn var_decls(&mut self) -> Result<Vec<VarDecl>, ParseError> {
        let mut out: Vec<VarDecl> = Vec::new();
        loop {
            let v = self.p.expect_ident()?;
            if out.iter().any(|d| *d.name == *v) {
                return Err(self.p.error(format!("variable `{}` declared twice", v)));
            }
            self.p.expect_keyword("in")?;
            self.p.expect_punct("[")?;
            let lo = self.constant()?;
            self.p.expect_punct(",")?;
            let hi = self.constant()?;
            self.p.expect_punct("]")?;
            if lo > hi {
                return Err(self.p.error(format!("empty range for `{}`", v)));
            }
            out.push(VarDecl {
                name: name(&v),
                lo,
                hi,
            });
            if !self.p.eat_punct(",") {
                break;
            }
        }
        self.p.expect_punct(";")?;
        Ok(out)
    }

    fn constant(&mut self) -> Result<Rational, ParseError> {
        match self.p.parse_term()? {
            Term::Const(c) => Ok(c),
            _ => Err(self.p.error("expected a rational constant")),
        }
    }

    /// `x' = e, v' = f;` or, for resets, `x' := e;`
    fn assignments(&mut self, op: &str) -> Result<Vec<(Name, Term)>, ParseError> {
        let mut out = Vec::new();
        loop {
            let lhs = self.p.expect_ident()?;
            let Some(v) = lhs.strip_suffix('\'') else {
                return Err(self
                    .p
                    .error(format!("expected a primed variable, found `{}`", lhs)));
            };
            let v = name(v);
            self.p.expect_punct(op)?;
            out.push((v, self.p.parse_term()?));
            if !self.p.eat_punct(",") {
                break;
            }
        }
        self.p.expect_punct(";")?;
        Ok(out)
    }

    fn formula_stmt(&mut self) -> Result<Formula, ParseError> {
        let f = self.p.parse_formula()?;
        self.p.expect_punct(";")?;
        Ok(f)
    }

    fn lipschitz(&mut self) -> Result<f64, ParseError> {
        let q = self.p.expect_number()?;
        let l = Interval::from_rational(&q).hi();
        if !(l > 0.0) {
            return Err(self.p.error("Lipschitz constant must be positive"));
        }
        self.p.expect_punct(";")?;
        Ok(l)
    }

    fn system(&mut self) -> Result<SystemDecl, ParseError> {
        let label = self.p.expect_ident()?;
        self.p.expect_punct("{")?;
        let mut s = SystemDecl {
            name: name(&label),
            vars: Vec::new(),
            dynamics: Vec::new(),
            lipschitz: None,
        };
        while !self.p.eat_punct("}") {
            if self.p.eat_keyword("vars") {
                s.vars.extend(self.var_decls()?);
            } else if self.p.eat_keyword("dyn") {
                s.dynamics.extend(self.assignments("=")?);
            } else if self.p.eat_keyword("lipschitz") {
                s.lipschitz = Some(self.lipschitz()?);
            } else {
                return Err(self.p.error("expected `vars`, `dyn`, `lipschitz` or `}`"));
            }
        }
        Ok(s)
    }

    fn mode(&mut self) -> Result<ModeDecl, ParseError> {
        let label = self.p.expect_ident()?;
        self.p.expect_punct("{")?;
        let mut m = ModeDecl {
            name: name(&label),
            dynamics: Vec::new(),
            lipschitz: None,
            inv: None,
            init: None,
        };
        while !self.p.eat_punct("}") {
            if self.p.eat_keyword("dyn") {
                m.dynamics.extend(self.assignments("=")?);
            } else if self.p.eat_keyword("lipschitz") {
                m.lipschitz = Some(self.lipschitz()?);
            } else if self.p.eat_keyword("inv") {
                m.inv = Some(self.formula_stmt()?);
            } else if self.p.eat_keyword("init") {
                m.init = Some(self.formula_stmt()?);
            } else {
                return Err(self
                    .p
                    .error("expected `dyn`, `inv`, `init`, `lipschitz` or `}`"));
            }
        }
        Ok(m)
    }

    fn jump(&mut self) -> Result<JumpDecl, ParseError> {
        let from = name(&self.p.expect_ident()?);
        self.p.expect_punct("->")?;
        let to = name(&self.p.expect_ident()?);
        self.p.expect_punct("{")?;
        let mut j = JumpDecl {
            from,
            to,
            guard: None,
            resets: Vec::new(),
        };
        while !self.p.eat_punct("}") {
            if self.p.eat_keyword("guard") {
                j.guard = Some(self.formula_stmt()?);
            } else if self.p.eat_keyword("reset") {
                j.resets.extend(self.assignments(":=")?);
            } else {
                return Err(self.p.error("expected `guard`, `reset` or `}`"));
            }
        }
        Ok(j)
    }

    fn automaton(&mut self) -> Result<AutomatonDecl, ParseError> {
        let label = self.p.expect_ident()?;
        self.p.expect_punct("{")?;
        let mut a = AutomatonDecl {
            name: name(&label),
            vars: Vec::new(),
            modes: Vec::new(),
            jumps: Vec::new(),
        };
        while !self.p.eat_punct("}") {
            if self.p.eat_keyword("vars") {
                a.vars.extend(self.var_decls()?);
            } else if self.p.eat_keyword("mode") {
                a.modes.push(self.mode()?);
            } else if self.p.eat_keyword("jump") {
                a.jumps.push(self.jump()?);
            } else {
                return Err(self.p.error("expected `vars`, `mode`, `jump` or `}`"));
            }
        }
        Ok(a)
    }

    fn bouncing_ball(&mut self) -> Result<Option<[Rational; 3]>, ParseError> {
        if !self.p.eat_punct("(") {
            self.p.eat_punct(";");
            return Ok(None);
        }
        let g = self.constant()?;
        self.p.expect_punct(",")?;
        let b = self.constant()?;
        self.p.expect_punct(",")?;
        let a = self.constant()?;
        self.p.expect_punct(")")?;
        self.p.eat_punct(";");
        Ok(Some([g, b, a]))
    }
}

/// Parses a description file. Systems are registered as they are read, so a
/// sentence may refer to any system declared before it.
pub fn parse_document(src: &str) -> Result<Document, DslError> {
    let mut reg = Registry::new();
    let mut doc = Document::default();
    let mut labels: BTreeSet<String> = BTreeSet::new();
    let mut pos = 0;
    loop {
        // a fresh parser per item sees every system declared so far
        let known = reg.clone();
        let mut p = P {
            p: Parser::new(src, &known)?,
        };
        p.p.seek(pos);
        if p.p.at_end() {
            break;
        }
        let item = if p.p.eat_keyword("system") {
            let s = p.system()?;
            let sys = s.build().map_err(|e| p.p.error(e.to_string()))?;
            reg.insert(s.name.clone(), sys);
            Item::System(s)
        } else if p.p.eat_keyword("automaton") {
            let a = p.automaton()?;
            a.build().map_err(|e| p.p.error(e.to_string()))?;
            Item::Automaton(a)
        } else if p.p.eat_keyword("bouncingball") {
            Item::BouncingBall(p.bouncing_ball()?)
        } else if p.p.eat_keyword("sentence") {
            p.p.expect_punct("{")?;
            let f = p.p.parse_formula()?;
            p.p.expect_punct("}")?;
            if !f.is_sentence() {
                let free: Vec<String> = f.free_vars().iter().map(|v| v.to_string()).collect();
                return Err(p
                    .p
                    .error(format!("free variables: {}", free.join(", ")))
                    .into());
            }
            Item::Sentence(f)
        } else {
            return Err(p
                .p
                .error(match p.p.peek() {
                    Some(Token::Ident(s)) => format!("unknown item `{}`", s),
                    _ => {
                        String::from("expected `system`, `automaton`, `bouncingball` or `sentence`")
                    }
                })
                .into());
        };
        if let Some(l) = item.label() {
            if !labels.insert(l.to_string()) {
                return Err(p.p.error(format!("`{}` declared twice", l)).into());
            }
        }
        doc.items.push(item);
        pos = p.p.position();
    }
    Ok(doc)
}

struct Q<'a>(&'a Rational);

impl fmt::Display for Q<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

fn write_vars(f: &mut fmt::Formatter<'_>, vars: &[VarDecl]) -> fmt::Result {
    let parts: Vec<String> = vars
        .iter()
        .map(|v| format!("{} in [{}, {}]", v.name, Q(&v.lo), Q(&v.hi)))
        .collect();
    writeln!(f, "  vars {};", parts.join(", "))
}

fn write_assign(
    f: &mut fmt::Formatter<'_>,
    indent: &str,
    kw: &str,
    op: &str,
    xs: &[(Name, Term)],
) -> fmt::Result {
    if xs.is_empty() {
        return Ok(());
    }
    let parts: Vec<String> = xs
        .iter()
        .map(|(v, t)| format!("{}' {} {}", v, op, t))
        .collect();
    writeln!(f, "{}{} {};", indent, kw, parts.join(", "))
}

/// Canonical text: one statement per line, two-space indentation, numbers as
/// exact rationals. Parsing it gives back an equal document.
impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match item {
                Item::System(s) => {
                    writeln!(f, "system {} {{", s.name)?;
                    write_vars(f, &s.vars)?;
                    write_assign(f, "  ", "dyn", "=", &s.dynamics)?;
                    if let Some(l) = s.lipschitz {
                        writeln!(f, "  lipschitz {};", lipschitz_text(l))?;
                    }
                    writeln!(f, "}}")?;
                }
                Item::Automaton(a) => {
                    writeln!(f, "automaton {} {{", a.name)?;
                    write_vars(f, &a.vars)?;
                    for m in &a.modes {
                        writeln!(f, "  mode {} {{", m.name)?;
                        write_assign(f, "    ", "dyn", "=", &m.dynamics)?;
                        if let Some(l) = m.lipschitz {
                            writeln!(f, "    lipschitz {};", lipschitz_text(l))?;
                        }
                        if let Some(inv) = &m.inv {
                            writeln!(f, "    inv {};", inv)?;
                        }
                        if let Some(init) = &m.init {
                            writeln!(f, "    init {};", init)?;
                        }
                        writeln!(f, "  }}")?;
                    }
                    for j in &a.jumps {
                        writeln!(f, "  jump {} -> {} {{", j.from, j.to)?;
                        if let Some(g) = &j.guard {
                            writeln!(f, "    guard {};", g)?;
                        }
                        write_assign(f, "    ", "reset", ":=", &j.resets)?;
                        writeln!(f, "  }}")?;
                    }
                    writeln!(f, "}}")?;
                }
                Item::BouncingBall(None) => writeln!(f, "bouncingball;")?,
                Item::BouncingBall(Some([g, b, a])) => {
                    writeln!(f, "bouncingball({}, {}, {});", Q(g), Q(b), Q(a))?
                }
                Item::Sentence(s) => writeln!(f, "sentence {{ {} }}", s)?,
            }
        }
        Ok(())
    }
}

/// Decimal digits of a float, which the lexer reads back exactly.
fn lipschitz_text(l: f64) -> String {
    let s = format!("{:?}", l);
    if s.contains('e') {
        // the lexer has no exponent notation
        dstab_core::formula::rational_from_f64(l)
            .map_or(s, |q| Q(&q).to_string())
            .to_string()
    } else {
        s
    }
}

const ITEM_KEYWORDS: [&str; 4] = ["system", "automaton", "bouncingball", "sentence"];

/// The single sentence of a file for `decide`: either a document holding
/// exactly one `sentence { ... }`, or a bare formula.
pub fn parse_sentence_file(src: &str) -> Result<Formula, DslError> {
    let empty = Registry::new();
    let mut p = Parser::new(src, &empty)?;
    let bare = match p.peek() {
        Some(Token::Ident(s)) => !ITEM_KEYWORDS.contains(&s.as_str()),
        Some(_) => true,
        None => false,
    };
    if bare {
        let f = p.parse_formula()?;
        if !p.at_end() {
            return Err(p.error("unexpected input after the formula").into());
        }
        if !f.is_sentence() {
            let free: Vec<String> = f.free_vars().iter().map(|v| v.to_string()).collect();
            return Err(p
                .error(format!("free variables: {}", free.join(", ")))
                .into());
        }
        return Ok(f);
    }
    let doc = parse_document(src)?;
    let mut all = doc.sentences();
    match (all.next(), all.next()) {
        (Some(f), None) => Ok(f.clone()),
        (None, _) => Err(p.error("the file holds no sentence").into()),
        (Some(_), Some(_)) => Err(p.error("the file holds more than one sentence").into()),
    }
}
