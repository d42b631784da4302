//! Mechanism expression AST and evaluator.
//!
//! Expressions are parsed once into an AST with variable references resolved
//! to indices, then evaluated generically over any [`Scalar`] backend.

use crate::error::{Error, Result};
use crate::numeric::Scalar;
use num::rational::BigRational;

/// Comparison operator inside an indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

/// A mechanism expression. Variable references are index-resolved:
/// `Endo(i)` is the i-th endogenous variable, `Exo(i)` the i-th declared
/// exogenous variable.
#[derive(Debug, Clone)]
pub enum Expr {
    Const(BigRational),
    Endo(usize),
    Exo(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Expit(Box<Expr>),
    Logit(Box<Expr>),
    /// `ind(a <op> b)`: 1 if the comparison holds, else 0.
    Ind(Box<Expr>, CmpOp, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
}

impl Expr {
    /// Evaluates against the given endogenous and exogenous value slices.
    pub fn eval<S: Scalar>(&self, endo: &[Option<S>], exo: &[S]) -> Result<S> {
        match self {
            Expr::Const(q) => Ok(S::from_rational(q)),
            Expr::Endo(i) => endo[*i]
                .clone()
                .ok_or_else(|| Error::Eval(format!("endogenous variable #{i} not yet solved"))),
            Expr::Exo(i) => Ok(exo[*i].clone()),
            Expr::Add(a, b) => Ok(a.eval(endo, exo)?.add(&b.eval(endo, exo)?)),
            Expr::Sub(a, b) => Ok(a.eval(endo, exo)?.sub(&b.eval(endo, exo)?)),
            Expr::Mul(a, b) => Ok(a.eval(endo, exo)?.mul(&b.eval(endo, exo)?)),
            Expr::Div(a, b) => a.eval(endo, exo)?.div(&b.eval(endo, exo)?),
            Expr::Neg(a) => Ok(a.eval(endo, exo)?.neg()),
            Expr::Pow(a, k) => a.eval(endo, exo)?.powi(*k),
            Expr::Exp(a) => a.eval(endo, exo)?.exp(),
            Expr::Ln(a) => a.eval(endo, exo)?.ln(),
            Expr::Expit(a) => a.eval(endo, exo)?.expit(),
            Expr::Logit(a) => a.eval(endo, exo)?.logit(),
            Expr::Ind(a, op, b) => {
                let va = a.eval(endo, exo)?;
                let vb = b.eval(endo, exo)?;
                let holds = match op {
                    CmpOp::Lt => va < vb,
                    CmpOp::Le => va <= vb,
                    CmpOp::Gt => va > vb,
                    CmpOp::Ge => va >= vb,
                    CmpOp::Eq => va == vb,
                    CmpOp::Ne => va != vb,
                };
                Ok(if holds { S::one() } else { S::zero() })
            }
            Expr::Min(a, b) => {
                let va = a.eval(endo, exo)?;
                let vb = b.eval(endo, exo)?;
                Ok(if va <= vb { va } else { vb })
            }
            Expr::Max(a, b) => {
                let va = a.eval(endo, exo)?;
                let vb = b.eval(endo, exo)?;
                Ok(if va >= vb { va } else { vb })
            }
            Expr::Abs(a) => {
                let v = a.eval(endo, exo)?;
                Ok(if v < S::zero() { v.neg() } else { v })
            }
        }
    }

    /// True if the expression uses an operation with no exact rational form.
    pub fn has_transcendental(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Endo(_) | Expr::Exo(_) => false,
            Expr::Exp(_) | Expr::Ln(_) | Expr::Expit(_) | Expr::Logit(_) => true,
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => a.has_transcendental() || b.has_transcendental(),
            Expr::Ind(a, _, b) => a.has_transcendental() || b.has_transcendental(),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Abs(a) => a.has_transcendental(),
        }
    }

    /// Collects referenced endogenous indices into `out`.
    pub fn endo_refs(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Const(_) | Expr::Exo(_) => {}
            Expr::Endo(i) => out.push(*i),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => {
                a.endo_refs(out);
                b.endo_refs(out);
            }
            Expr::Ind(a, _, b) => {
                a.endo_refs(out);
                b.endo_refs(out);
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Ln(a) | Expr::Expit(a)
            | Expr::Logit(a) | Expr::Abs(a) => a.endo_refs(out),
        }
    }

    /// Collects referenced exogenous indices into `out`.
    pub fn exo_refs(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Const(_) | Expr::Endo(_) => {}
            Expr::Exo(i) => out.push(*i),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => {
                a.exo_refs(out);
                b.exo_refs(out);
            }
            Expr::Ind(a, _, b) => {
                a.exo_refs(out);
                b.exo_refs(out);
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Ln(a) | Expr::Expit(a)
            | Expr::Logit(a) | Expr::Abs(a) => a.exo_refs(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational_from_str;

    fn c(s: &str) -> Expr {
        Expr::Const(rational_from_str(s).unwrap())
    }

    #[test]
    fn evaluates_arithmetic_on_both_backends() {
        // 0.5 + 0.1 * x with x = endo[0]
        let e = Expr::Add(
            Box::new(c("0.5")),
            Box::new(Expr::Mul(Box::new(c("0.1")), Box::new(Expr::Endo(0)))),
        );
        let f: f64 = e.eval(&[Some(1.0_f64)], &[]).unwrap();
        assert!((f - 0.6).abs() < 1e-15);
        let q: BigRational = e
            .eval(&[Some(BigRational::from_integer(1.into()))], &[])
            .unwrap();
        assert_eq!(q, rational_from_str("0.6").unwrap());
    }

    #[test]
    fn rational_backend_rejects_exp() {
        let e = Expr::Exp(Box::new(c("1")));
        assert!(e.eval::<BigRational>(&[], &[]).is_err());
        assert!((e.eval::<f64>(&[], &[]).unwrap() - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn indicator_compares() {
        let e = Expr::Ind(Box::new(Expr::Endo(0)), CmpOp::Ge, Box::new(c("2")));
        assert_eq!(e.eval(&[Some(3.0_f64)], &[]).unwrap(), 1.0);
        assert_eq!(e.eval(&[Some(1.0_f64)], &[]).unwrap(), 0.0);
    }
}
