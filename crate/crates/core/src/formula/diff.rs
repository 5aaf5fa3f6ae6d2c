//! Symbolic differentiation over the term library.

use alloc::vec;
use alloc::vec::Vec;

use super::{Func, Name, Term};
use crate::Error;

impl Term {
    /// Partial derivative with respect to `v`.
    ///
    /// `abs`, `min`, `max` and `norm` differentiate through quotients that are
    /// undefined where the function has a kink; interval evaluation reports
    /// those points as domain errors instead of returning an unsound value.
    pub fn diff(&self, v: &str) -> Result<Term, Error> {
        Ok(match self {
            Term::Var(x) => {
                if &**x == v {
                    Term::one()
                } else {
                    Term::zero()
                }
            }
            Term::Const(_) => Term::zero(),
            Term::Flow(_) => return Err(Error::NotDifferentiable),
            Term::Apply(f, args) => {
                if !self.mentions(v) {
                    return Ok(Term::zero());
                }
                let a = &args[0];
                let da = a.diff(v)?;
                match f {
                    Func::Add => Term::add(da, args[1].diff(v)?),
                    Func::Sub => Term::sub(da, args[1].diff(v)?),
                    Func::Mul => {
                        let b = &args[1];
                        let db = b.diff(v)?;
                        Term::add(Term::mul(da, b.clone()), Term::mul(a.clone(), db))
                    }
                    Func::Div => {
                        let b = &args[1];
                        let db = b.diff(v)?;
                        let num = Term::sub(Term::mul(da, b.clone()), Term::mul(a.clone(), db));
                        Term::div(num, Term::pow(b.clone(), 2))
                    }
                    Func::Neg => Term::neg(da),
                    Func::Pow(n) => Term::mul(
                        Term::mul(Term::int(*n as i64), Term::pow(a.clone(), n - 1)),
                        da,
                    ),
                    Func::Abs => Term::mul(
                        Term::div(a.clone(), Term::apply(Func::Abs, vec![a.clone()])),
                        da,
                    ),
                    Func::Min | Func::Max => {
                        // min/max(a, b) = (a + b ∓ |a - b|) / 2
                        let b = &args[1];
                        let d = Term::sub(a.clone(), b.clone());
                        let abs_d = Term::apply(Func::Abs, vec![d]);
                        let sum = Term::add(a.clone(), b.clone());
                        let rewritten = if *f == Func::Min {
                            Term::sub(sum, abs_d)
                        } else {
                            Term::add(sum, abs_d)
                        };
                        Term::div(rewritten, Term::int(2)).diff(v)?
                    }
                    Func::Exp => Term::mul(self.clone(), da),
                    Func::Sin => Term::mul(Term::apply(Func::Cos, vec![a.clone()]), da),
                    Func::Cos => Term::neg(Term::mul(Term::apply(Func::Sin, vec![a.clone()]), da)),
                    Func::Sqrt => Term::div(da, Term::mul(Term::int(2), self.clone())),
                    Func::Norm => {
                        let mut num = Term::zero();
                        for arg in args {
                            num = Term::add(num, Term::mul(arg.clone(), arg.diff(v)?));
                        }
                        Term::div(num, self.clone())
                    }
                }
            }
        })
    }
}

pub fn gradient(t: &Term, vars: &[Name]) -> Result<Vec<Term>, Error> {
    vars.iter().map(|v| t.diff(v)).collect()
}

/// Row `i` holds the gradient of `terms[i]`.
pub fn jacobian(terms: &[Term], vars: &[Name]) -> Result<Vec<Vec<Term>>, Error> {
    terms.iter().map(|t| gradient(t, vars)).collect()
}
