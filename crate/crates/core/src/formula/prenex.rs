//! Prenex normal form and quantifier-alternation classification.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{name, Bounded, Formula, Name, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuantKind {
    Exists,
    Forall,
}

#[derive(Clone, Debug)]
struct Binder {
    kind: QuantKind,
    var: Name,
    lower: Term,
    upper: Term,
}

/// Alternation class of a prenex sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alternation {
    Sigma(usize),
    Pi(usize),
}

impl Alternation {
    pub fn level(self) -> usize {
        match self {
            Alternation::Sigma(n) | Alternation::Pi(n) => n,
        }
    }

    pub fn dual(self) -> Alternation {
        match self {
            Alternation::Sigma(n) => Alternation::Pi(n),
            Alternation::Pi(n) => Alternation::Sigma(n),
        }
    }
}

impl fmt::Display for Alternation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alternation::Sigma(n) => write!(f, "Sigma{}", n),
            Alternation::Pi(n) => write!(f, "Pi{}", n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityReport {
    pub class: Alternation,
    /// Number of quantifier-type changes in the prefix.
    pub alternations: usize,
    /// Sizes of the maximal same-type quantifier blocks, outermost first.
    pub block_sizes: Vec<usize>,
    /// The δ-decision problem is in `(Σ_n^P)^C` / `(Π_n^P)^C` for the oracle class `C`
    /// of the terms.
    pub oracle: String,
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, n) = match self.class {
            Alternation::Sigma(n) => ("Sigma", n),
            Alternation::Pi(n) => ("Pi", n),
        };
        write!(f, "({}^P_{})^{}", kind, n, self.oracle)
    }
}

struct Fresh {
    used: BTreeSet<Name>,
}

impl Fresh {
    fn rename(&mut self, v: &Name) -> Name {
        if self.used.insert(v.clone()) {
            return v.clone();
        }
        let mut i = 1;
        loop {
            let candidate = name(&format!("{}_{}", v, i));
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
            i += 1;
        }
    }
}

/// Converts a formula into an equivalent prenex formula.
///
/// Bound variables are renamed apart first. Conjunctions and disjunctions merge
/// the prefixes of their operands so that same-type leading blocks are pulled out
/// together, which keeps the number of alternations minimal.
pub fn prenex(f: &Formula) -> Formula {
    let mut fresh = Fresh {
        used: f.free_vars(),
    };
    let renamed = rename_apart(f, &mut fresh);
    let (prefix, matrix) = pull(renamed);
    let mut out = matrix;
    for b in prefix.into_iter().rev() {
        let q = Bounded {
            var: b.var,
            lower: b.lower,
            upper: b.upper,
            body: Box::new(out),
        };
        out = match b.kind {
            QuantKind::Exists => Formula::Exists(q),
            QuantKind::Forall => Formula::Forall(q),
        };
    }
    out
}

fn rename_apart(f: &Formula, fresh: &mut Fresh) -> Formula {
    match f {
        Formula::Atom(..) => f.clone(),
        Formula::And(ps) => Formula::And(ps.iter().map(|p| rename_apart(p, fresh)).collect()),
        Formula::Or(ps) => Formula::Or(ps.iter().map(|p| rename_apart(p, fresh)).collect()),
        Formula::Exists(b) | Formula::Forall(b) => {
            let new_var = fresh.rename(&b.var);
            let body = if new_var != b.var {
                let mut m = BTreeMap::new();
                m.insert(b.var.clone(), Term::Var(new_var.clone()));
                b.body.substitute(&m)
            } else {
                (*b.body).clone()
            };
            let nb = Bounded {
                var: new_var,
                lower: b.lower.clone(),
                upper: b.upper.clone(),
                body: Box::new(rename_apart(&body, fresh)),
            };
            if matches!(f, Formula::Exists(_)) {
                Formula::Exists(nb)
            } else {
                Formula::Forall(nb)
            }
        }
    }
}

fn pull(f: Formula) -> (Vec<Binder>, Formula) {
    match f {
        Formula::Exists(b) => pull_quantifier(QuantKind::Exists, b),
        Formula::Forall(b) => pull_quantifier(QuantKind::Forall, b),
        Formula::And(ps) => {
            let (prefix, parts) = merge_all(ps);
            (prefix, Formula::And(parts))
        }
        Formula::Or(ps) => {
            let (prefix, parts) = merge_all(ps);
            (prefix, Formula::Or(parts))
        }
        atom => (Vec::new(), atom),
    }
}

fn merge_all(ps: Vec<Formula>) -> (Vec<Binder>, Vec<Formula>) {
    let mut prefixes: Vec<Vec<Vec<Binder>>> = Vec::new();
    let mut parts = Vec::new();
    for p in ps {
        let (prefix, m) = pull(p);
        prefixes.push(blocks(prefix));
        parts.push(m);
    }
    let merged = prefixes
        .into_iter()
        .fold(Vec::new(), |acc, b| merge_blocks(&acc, &b));
    (merged.into_iter().flatten().collect(), parts)
}

fn pull_quantifier(kind: QuantKind, b: Bounded) -> (Vec<Binder>, Formula) {
    let (mut rest, matrix) = pull(*b.body);
    let mut prefix = Vec::with_capacity(rest.len() + 1);
    prefix.push(Binder {
        kind,
        var: b.var,
        lower: b.lower,
        upper: b.upper,
    });
    prefix.append(&mut rest);
    (prefix, matrix)
}

fn blocks(prefix: Vec<Binder>) -> Vec<Vec<Binder>> {
    let mut out: Vec<Vec<Binder>> = Vec::new();
    for b in prefix {
        match out.last_mut() {
            Some(last) if last[0].kind == b.kind => last.push(b),
            _ => out.push(alloc::vec![b]),
        }
    }
    out
}

fn merge_blocks(a: &[Vec<Binder>], b: &[Vec<Binder>]) -> Vec<Vec<Binder>> {
    if a.is_empty() {
        return b.to_vec();
    }
    if b.is_empty() {
        return a.to_vec();
    }
    let mut out = Vec::new();
    if a[0][0].kind == b[0][0].kind {
        let mut head = a[0].clone();
        head.extend(b[0].iter().cloned());
        out.push(head);
        out.extend(merge_blocks(&a[1..], &b[1..]));
    } else if a.len() >= b.len() {
        out.push(a[0].clone());
        out.extend(merge_blocks(&a[1..], b));
    } else {
        out.push(b[0].clone());
        out.extend(merge_blocks(a, &b[1..]));
    }
    // adjacent blocks of equal kind can appear after a pull; coalesce
    let mut coalesced: Vec<Vec<Binder>> = Vec::new();
    for blk in out {
        match coalesced.last_mut() {
            Some(last) if last[0].kind == blk[0].kind => last.extend(blk),
            _ => coalesced.push(blk),
        }
    }
    coalesced
}

/// Classifies a sentence by the quantifier prefix of its prenex form.
pub fn classify(f: &Formula) -> ComplexityReport {
    let p = prenex(f);
    let mut kinds = Vec::new();
    let mut cur = &p;
    loop {
        match cur {
            Formula::Exists(b) => {
                kinds.push(QuantKind::Exists);
                cur = &b.body;
            }
            Formula::Forall(b) => {
                kinds.push(QuantKind::Forall);
                cur = &b.body;
            }
            _ => break,
        }
    }
    let mut block_sizes: Vec<usize> = Vec::new();
    let mut last = None;
    for k in &kinds {
        if Some(*k) == last {
            *block_sizes.last_mut().unwrap() += 1;
        } else {
            block_sizes.push(1);
            last = Some(*k);
        }
    }
    let n = block_sizes.len();
    let class = match kinds.first() {
        Some(QuantKind::Forall) => Alternation::Pi(n),
        _ => Alternation::Sigma(n),
    };
    ComplexityReport {
        class,
        alternations: n.saturating_sub(1),
        block_sizes,
        oracle: String::from("C"),
    }
}
