//! Evaluable scalar functions of `t` with exact derivative access.
//!
//! Coefficients of equations and of symmetry generators are either symbolic
//! expressions or numeric pullbacks through a time map. `TimeFn` unifies the
//! two: everything downstream asks for a jet (value plus three derivatives)
//! and does not care which representation backs it.
//!
//! Jets of `Dyn` functions are trusted through the second derivative; the
//! top coefficient may be truncated by pullback construction.

use std::fmt;
use std::rc::Rc;

use crate::expr::{EvalError, Expr};
use crate::series::Series;

/// Jet order used throughout: value + three derivatives.
pub type Jet = Series<4>;

type DynFn = Rc<dyn Fn(f64) -> Result<Jet, EvalError>>;

#[derive(Clone)]
pub enum TimeFn {
    Expr(Expr),
    Dyn { f: DynFn, label: String },
}

impl TimeFn {
    pub fn zero() -> Self {
        TimeFn::Expr(Expr::Num(0.0))
    }

    pub fn constant(v: f64) -> Self {
        TimeFn::Expr(Expr::Num(v))
    }

    pub fn from_expr(e: Expr) -> Self {
        TimeFn::Expr(e)
    }

    pub fn parse(text: &str) -> Result<Self, crate::expr::ParseError> {
        Ok(TimeFn::Expr(Expr::parse(text)?))
    }

    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64) -> Result<Jet, EvalError> + 'static) -> Self {
        TimeFn::Dyn {
            f: Rc::new(f),
            label: label.into(),
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            TimeFn::Expr(e) => Some(e),
            TimeFn::Dyn { .. } => None,
        }
    }

    pub fn is_zero_expr(&self) -> bool {
        matches!(self, TimeFn::Expr(e) if e.is_zero())
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            TimeFn::Expr(e) => e.as_num(),
            TimeFn::Dyn { .. } => None,
        }
    }

    pub fn jet(&self, t: f64) -> Result<Jet, EvalError> {
        match self {
            TimeFn::Expr(e) => e.eval_series::<4>(t),
            TimeFn::Dyn { f, .. } => f(t),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        match self {
            TimeFn::Expr(e) => e.eval(t),
            TimeFn::Dyn { f, .. } => Ok(f(t)?.value()),
        }
    }

    pub fn d1(&self, t: f64) -> Result<f64, EvalError> {
        Ok(self.jet(t)?.deriv(1))
    }

    pub fn d2(&self, t: f64) -> Result<f64, EvalError> {
        Ok(self.jet(t)?.deriv(2))
    }

    // -- arithmetic: stays symbolic when both operands are symbolic --

    pub fn add(&self, o: &TimeFn) -> TimeFn {
        match (self, o) {
            (TimeFn::Expr(a), TimeFn::Expr(b)) => TimeFn::Expr(Expr::add(a.clone(), b.clone())),
            _ => {
                let (a, b) = (self.clone(), o.clone());
                TimeFn::from_fn(format!("({self}+{o})"), move |t| Ok(a.jet(t)?.add(&b.jet(t)?)))
            }
        }
    }

    pub fn sub(&self, o: &TimeFn) -> TimeFn {
        match (self, o) {
            (TimeFn::Expr(a), TimeFn::Expr(b)) => TimeFn::Expr(Expr::sub(a.clone(), b.clone())),
            _ => {
                let (a, b) = (self.clone(), o.clone());
                TimeFn::from_fn(format!("({self}-{o})"), move |t| Ok(a.jet(t)?.sub(&b.jet(t)?)))
            }
        }
    }

    pub fn mul(&self, o: &TimeFn) -> TimeFn {
        match (self, o) {
            (TimeFn::Expr(a), TimeFn::Expr(b)) => TimeFn::Expr(Expr::mul(a.clone(), b.clone())),
            _ => {
                let (a, b) = (self.clone(), o.clone());
                TimeFn::from_fn(format!("({self}*{o})"), move |t| Ok(a.jet(t)?.mul(&b.jet(t)?)))
            }
        }
    }

    pub fn scale(&self, s: f64) -> TimeFn {
        match self {
            TimeFn::Expr(a) => TimeFn::Expr(Expr::mul(Expr::Num(s), a.clone())),
            _ => {
                let a = self.clone();
                TimeFn::from_fn(format!("({s}*{self})"), move |t| Ok(a.jet(t)?.scale(s)))
            }
        }
    }

    /// Derivative as a function. Symbolic for expressions; for dynamic
    /// functions the result's top jet coefficient is truncated.
    pub fn derivative(&self) -> TimeFn {
        match self {
            TimeFn::Expr(e) => TimeFn::Expr(e.differentiate()),
            TimeFn::Dyn { .. } => {
                let a = self.clone();
                TimeFn::from_fn(format!("d/dt {self}"), move |t| Ok(a.jet(t)?.differentiate()))
            }
        }
    }
}

impl fmt::Display for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFn::Expr(e) => write!(f, "{e}"),
            TimeFn::Dyn { label, .. } => write!(f, "{label}"),
        }
    }
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeFn({self})")
    }
}
