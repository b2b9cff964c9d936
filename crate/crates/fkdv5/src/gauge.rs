//! Equivalence transformations of the fifth-order KdV class
//! `u_t + u^n u_x + α(t) u + β(t) u_xxxxx = 0`.
//!
//! A transformation is `t̃ = T(t)`, `x̃ = δ₁x + δ₂`, `ũ = (δ₁/T_t)^{1/n} u`
//! with `δ₁ T_t > 0`, acting on the coefficients as
//! `α̃ = α/T_t + T_tt/(n T_t²)` and `β̃ = δ₁⁵ β / T_t`.
//! This module implements the group operations, the gauge that removes α,
//! the reducibility criterion `n (α/β)_t = (1/β)_tt`, and the constructive
//! transform to constant coefficients.

use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::expr::{BinOp, EvalError, Expr, UnOp};
use crate::quad::{CumulativeIntegral, QuadError};
use crate::series::Series;
use crate::timefn::TimeFn;

#[derive(Debug, Error)]
pub enum GaugeError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("invalid equation: {0}")]
    InvalidSpec(String),
    #[error("transform invariant violated: {0}")]
    InvariantViolation(String),
    #[error("reducibility criterion fails: residual {residual:.3e} > tol {tol:.3e}")]
    CriterionFails { residual: f64, tol: f64 },
}

fn quad_to_eval(e: QuadError, at: f64) -> EvalError {
    EvalError::numeric(format!("quadrature failure: {e}"), at)
}

// ---------------------------------------------------------------------------
// Equation specification
// ---------------------------------------------------------------------------

/// One member of the class: exponent `n`, coefficients `α(t)`, `β(t)`,
/// and the working `t` window.
#[derive(Clone, Debug)]
pub struct EquationSpec {
    pub n: f64,
    pub alpha: TimeFn,
    pub beta: TimeFn,
    pub interval: (f64, f64),
}

impl EquationSpec {
    pub fn new(
        n: f64,
        alpha: TimeFn,
        beta: TimeFn,
        interval: (f64, f64),
    ) -> Result<Self, GaugeError> {
        let spec = EquationSpec {
            n,
            alpha,
            beta,
            interval,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GaugeError> {
        if self.n == 0.0 || self.n == 1.0 {
            return Err(GaugeError::InvalidSpec(format!(
                "n must not be 0 (linear) or 1 (separate classification); got {}",
                self.n
            )));
        }
        if !(self.interval.0 < self.interval.1) {
            return Err(GaugeError::InvalidSpec(format!(
                "empty working interval [{}, {}]",
                self.interval.0, self.interval.1
            )));
        }
        let mut sign = 0.0;
        for t in sample_points(self.interval, 33) {
            let b = self.beta.eval(t)?;
            if b == 0.0 {
                return Err(GaugeError::InvalidSpec(format!(
                    "beta vanishes at t = {t}"
                )));
            }
            if sign == 0.0 {
                sign = b.signum();
            } else if b.signum() != sign {
                return Err(GaugeError::InvalidSpec(format!(
                    "beta changes sign on the interval (at t = {t})"
                )));
            }
        }
        Ok(())
    }

    /// Sign of β on the window.
    pub fn epsilon(&self) -> Result<f64, GaugeError> {
        let mid = 0.5 * (self.interval.0 + self.interval.1);
        Ok(self.beta.eval(mid)?.signum())
    }

    pub fn alpha_is_zero(&self) -> bool {
        self.alpha.is_zero_expr()
    }
}

pub fn sample_points(interval: (f64, f64), count: usize) -> Vec<f64> {
    let (a, b) = interval;
    // stay slightly inside the endpoints; coefficients may be singular there
    let pad = 1e-9 * (b - a);
    let (a, b) = (a + pad, b - pad);
    (0..count)
        .map(|i| a + (b - a) * i as f64 / (count - 1).max(1) as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Time maps
// ---------------------------------------------------------------------------

/// Jet of a time map: value plus four derivatives.
pub type MapJet = Series<5>;

/// `T(t) = ∫_{t0}^t T'(s) ds` with a jet-capable integrand.
pub struct QuadMap {
    pub tprime: TimeFn,
    pub t0: f64,
    cum: CumulativeIntegral,
    label: String,
}

impl QuadMap {
    pub fn new(tprime: TimeFn, t0: f64, tol: f64, label: impl Into<String>) -> Self {
        let tp = tprime.clone();
        let cum = CumulativeIntegral::new(Rc::new(move |s| tp.eval(s)), t0, tol);
        QuadMap {
            tprime,
            t0,
            cum,
            label: label.into(),
        }
    }
}

#[derive(Clone)]
pub enum TimeMap {
    /// T = a t + b
    Affine { a: f64, b: f64 },
    /// Symbolic map, with a symbolic inverse when the catalog recognizes it.
    Sym { expr: Expr, inv: Option<Expr> },
    /// Quadrature-backed map T = ∫ T'.
    Quad(Rc<QuadMap>),
    Compose(Box<TimeMap>, Box<TimeMap>), // outer ∘ inner
    Inverse {
        inner: Box<TimeMap>,
        inner_domain: (f64, f64),
    },
}

impl TimeMap {
    pub fn identity() -> Self {
        TimeMap::Affine { a: 1.0, b: 0.0 }
    }

    pub fn affine(a: f64, b: f64) -> Self {
        TimeMap::Affine { a, b }
    }

    /// Symbolic map; attempts the inversion catalog (affine, exponential,
    /// power, logarithm). Falls back to monotone bracketing when unknown.
    pub fn symbolic(expr: Expr) -> Self {
        let inv = try_symbolic_inverse(&expr);
        TimeMap::Sym { expr, inv }
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        match self {
            TimeMap::Affine { a, b } => Ok(a * t + b),
            TimeMap::Sym { expr, .. } => expr.eval(t),
            TimeMap::Quad(q) => q.cum.eval(t).map_err(|e| quad_to_eval(e, t)),
            TimeMap::Compose(outer, inner) => outer.eval(inner.eval(t)?),
            TimeMap::Inverse {
                inner,
                inner_domain,
            } => inner.invert_value(t, *inner_domain),
        }
    }

    /// Value and four derivatives at `t`.
    pub fn jet(&self, t: f64) -> Result<MapJet, EvalError> {
        match self {
            TimeMap::Affine { a, b } => {
                let mut c = [0.0; 5];
                c[0] = a * t + b;
                c[1] = *a;
                Ok(Series { c })
            }
            TimeMap::Sym { expr, .. } => expr.eval_series::<5>(t),
            TimeMap::Quad(q) => {
                let value = q.cum.eval(t).map_err(|e| quad_to_eval(e, t))?;
                let tp = q.tprime.jet(t)?;
                let mut c = [0.0; 5];
                c[0] = value;
                for k in 1..5 {
                    c[k] = tp.c[k - 1] / k as f64;
                }
                Ok(Series { c })
            }
            TimeMap::Compose(outer, inner) => {
                let ij = inner.jet(t)?;
                let oj = outer.jet(ij.value())?;
                Ok(oj.compose(&ij))
            }
            TimeMap::Inverse {
                inner,
                inner_domain,
            } => {
                let s = inner.invert_value(t, *inner_domain)?;
                Ok(inner.jet(s)?.revert(s))
            }
        }
    }

    /// Solve T(t) = y for t within `domain` (T monotone there).
    pub fn invert_value(&self, y: f64, domain: (f64, f64)) -> Result<f64, EvalError> {
        match self {
            TimeMap::Affine { a, b } => Ok((y - b) / a),
            TimeMap::Sym { inv: Some(inv), .. } => inv.eval(y),
            TimeMap::Compose(outer, inner) => {
                let ia = inner.eval(domain.0)?;
                let ib = inner.eval(domain.1)?;
                let image = (ia.min(ib), ia.max(ib));
                let mid = outer.invert_value(y, image)?;
                inner.invert_value(mid, domain)
            }
            TimeMap::Inverse { inner, .. } => inner.eval(y),
            _ => self.bracket_invert(y, domain),
        }
    }

    fn bracket_invert(&self, y: f64, domain: (f64, f64)) -> Result<f64, EvalError> {
        let (mut lo, mut hi) = domain;
        let mut flo = self.eval(lo)? - y;
        let fhi = self.eval(hi)? - y;
        if flo == 0.0 {
            return Ok(lo);
        }
        if fhi == 0.0 {
            return Ok(hi);
        }
        if flo.signum() == fhi.signum() {
            // allow a hair of roundoff slack at the edges
            let span = (self.eval(hi)? - self.eval(lo)?).abs();
            let slack = 1e-9 * (1.0 + span);
            if (flo.abs()).min(fhi.abs()) <= slack {
                return Ok(if flo.abs() < fhi.abs() { lo } else { hi });
            }
            return Err(EvalError::numeric(
                format!("target {y} is outside the image of [{lo}, {hi}]"),
                y,
            ));
        }
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let fm = self.eval(mid)? - y;
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * (1.0 + mid.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl fmt::Display for TimeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeMap::Affine { a, b } => {
                if *a == 1.0 && *b == 0.0 {
                    write!(f, "t")
                } else {
                    write!(f, "{a}*t{}{}", if *b < 0.0 { "" } else { "+" }, b)
                }
            }
            TimeMap::Sym { expr, .. } => write!(f, "{expr}"),
            TimeMap::Quad(q) => write!(f, "{}", q.label),
            TimeMap::Compose(o, i) => write!(f, "({o}) ∘ ({i})"),
            TimeMap::Inverse { inner, .. } => write!(f, "inverse of ({inner})"),
        }
    }
}

impl fmt::Debug for TimeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeMap({self})")
    }
}

// ---------------------------------------------------------------------------
// Symbolic inversion catalog
// ---------------------------------------------------------------------------

fn contains_var(e: &Expr) -> bool {
    match e {
        Expr::Num(_) => false,
        Expr::Var => true,
        Expr::Unary(_, a) => contains_var(a),
        Expr::Binary(_, a, b) => contains_var(a) || contains_var(b),
    }
}

/// Value of a variable-free subexpression.
fn const_value(e: &Expr) -> Option<f64> {
    if contains_var(e) {
        return None;
    }
    e.eval(0.0).ok()
}

/// Flatten into `constant + Σ coef·core` where cores are non-constant factors.
fn flatten_terms(e: &Expr, scale: f64, constant: &mut f64, terms: &mut Vec<(f64, Expr)>) {
    if let Some(v) = const_value(e) {
        *constant += scale * v;
        return;
    }
    match e {
        Expr::Binary(BinOp::Add, a, b) => {
            flatten_terms(a, scale, constant, terms);
            flatten_terms(b, scale, constant, terms);
        }
        Expr::Binary(BinOp::Sub, a, b) => {
            flatten_terms(a, scale, constant, terms);
            flatten_terms(b, -scale, constant, terms);
        }
        Expr::Unary(UnOp::Neg, a) => flatten_terms(a, -scale, constant, terms),
        Expr::Binary(BinOp::Mul, a, b) => {
            if let Some(v) = const_value(a) {
                flatten_terms(b, scale * v, constant, terms);
            } else if let Some(v) = const_value(b) {
                flatten_terms(a, scale * v, constant, terms);
            } else {
                terms.push((scale, e.clone()));
            }
        }
        Expr::Binary(BinOp::Div, a, b) => {
            if let Some(v) = const_value(b) {
                flatten_terms(a, scale / v, constant, terms);
            } else {
                terms.push((scale, e.clone()));
            }
        }
        _ => terms.push((scale, e.clone())),
    }
}

/// Recognize `a·t + b`.
fn as_linear(e: &Expr) -> Option<(f64, f64)> {
    let mut constant = 0.0;
    let mut terms = Vec::new();
    flatten_terms(e, 1.0, &mut constant, &mut terms);
    let mut a = 0.0;
    for (coef, core) in terms {
        match core {
            Expr::Var => a += coef,
            _ => return None,
        }
    }
    Some((a, constant))
}

/// Inversion catalog: affine, `k·exp(a t + b) + c`, `k·(a t + b)^p + c`,
/// `k·ln(a t + b) + c`. Returns the inverse as an expression in `t`.
fn try_symbolic_inverse(e: &Expr) -> Option<Expr> {
    if let Some((a, b)) = as_linear(e) {
        if a == 0.0 {
            return None;
        }
        // t = (y - b)/a
        return Some(Expr::div(
            Expr::sub(Expr::Var, Expr::Num(b)),
            Expr::Num(a),
        ));
    }
    let mut constant = 0.0;
    let mut terms = Vec::new();
    flatten_terms(e, 1.0, &mut constant, &mut terms);
    if terms.len() != 1 {
        return None;
    }
    let (k, core) = &terms[0];
    let k = *k;
    if k == 0.0 {
        return None;
    }
    // (y - constant)/k
    let arg = Expr::div(
        Expr::sub(Expr::Var, Expr::Num(constant)),
        Expr::Num(k),
    );
    match core {
        Expr::Unary(UnOp::Exp, inner) => {
            let (a, b) = as_linear(inner)?;
            if a == 0.0 {
                return None;
            }
            // t = (ln((y-c)/k) - b)/a
            Some(Expr::div(
                Expr::sub(Expr::unary(UnOp::Ln, arg), Expr::Num(b)),
                Expr::Num(a),
            ))
        }
        Expr::Unary(UnOp::Ln, inner) => {
            let (a, b) = as_linear(inner)?;
            if a == 0.0 {
                return None;
            }
            // t = (exp((y-c)/k) - b)/a
            Some(Expr::div(
                Expr::sub(Expr::unary(UnOp::Exp, arg), Expr::Num(b)),
                Expr::Num(a),
            ))
        }
        Expr::Binary(BinOp::Pow, base, exponent) => {
            let p = const_value(exponent)?;
            if p == 0.0 {
                return None;
            }
            let (a, b) = as_linear(base)?;
            if a == 0.0 {
                return None;
            }
            // t = (((y-c)/k)^{1/p} - b)/a
            Some(Expr::div(
                Expr::sub(Expr::pow(arg, Expr::Num(1.0 / p)), Expr::Num(b)),
                Expr::Num(a),
            ))
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Equivalence transformations
// ---------------------------------------------------------------------------

/// Element of the equivalence group: time map `T`, spatial scale `δ₁`
/// and shift `δ₂`; the `u` factor `(δ₁/T_t)^{1/n}` is implied.
#[derive(Clone, Debug)]
pub struct EquivTransform {
    pub map: TimeMap,
    pub delta1: f64,
    pub delta2: f64,
}

impl EquivTransform {
    pub fn identity() -> Self {
        EquivTransform {
            map: TimeMap::identity(),
            delta1: 1.0,
            delta2: 0.0,
        }
    }

    pub fn scaling(delta3: f64, delta4: f64, delta1: f64, delta2: f64) -> Self {
        EquivTransform {
            map: TimeMap::affine(delta3, delta4),
            delta1,
            delta2,
        }
    }

    /// Two-sided group inverse; `domain` is the t-window the transform acts on.
    pub fn invert(&self, domain: (f64, f64)) -> Self {
        let map = match &self.map {
            TimeMap::Affine { a, b } => TimeMap::Affine {
                a: 1.0 / a,
                b: -b / a,
            },
            TimeMap::Sym {
                expr,
                inv: Some(inv),
            } => TimeMap::Sym {
                expr: inv.clone(),
                inv: Some(expr.clone()),
            },
            TimeMap::Inverse { inner, .. } => (**inner).clone(),
            other => TimeMap::Inverse {
                inner: Box::new(other.clone()),
                inner_domain: domain,
            },
        };
        EquivTransform {
            map,
            delta1: 1.0 / self.delta1,
            delta2: -self.delta2 / self.delta1,
        }
    }

    /// Image of an interval under the time map, sorted.
    pub fn image_interval(&self, interval: (f64, f64)) -> Result<(f64, f64), EvalError> {
        let a = self.map.eval(interval.0)?;
        let b = self.map.eval(interval.1)?;
        Ok((a.min(b), a.max(b)))
    }

    /// Factor multiplying `u`: `(δ₁/T_t)^{1/n}` at base-side time `t`.
    pub fn u_factor(&self, t: f64, n: f64) -> Result<f64, EvalError> {
        let tp = self.map.jet(t)?.deriv(1);
        let ratio = self.delta1 / tp;
        if ratio <= 0.0 {
            return Err(EvalError::numeric(
                format!("delta1/T_t = {ratio} is not positive"),
                t,
            ));
        }
        Ok(ratio.powf(1.0 / n))
    }
}

/// `g₂ ∘ g₁`: apply `g1` first, then `g2`.
pub fn compose(g2: &EquivTransform, g1: &EquivTransform) -> EquivTransform {
    let map = match (&g2.map, &g1.map) {
        (TimeMap::Affine { a: a2, b: b2 }, TimeMap::Affine { a: a1, b: b1 }) => TimeMap::Affine {
            a: a2 * a1,
            b: a2 * b1 + b2,
        },
        (outer, inner) => TimeMap::Compose(Box::new(outer.clone()), Box::new(inner.clone())),
    };
    EquivTransform {
        map,
        delta1: g2.delta1 * g1.delta1,
        delta2: g2.delta1 * g1.delta2 + g2.delta2,
    }
}

fn deriv_series<const M: usize, const N: usize>(s: &Series<M>, m: usize) -> Series<N> {
    fn fact(k: usize) -> f64 {
        (1..=k).map(|i| i as f64).product()
    }
    let mut c = [0.0; N];
    for (k, ck) in c.iter_mut().enumerate() {
        if k + m < M {
            *ck = s.c[k + m] * fact(k + m) / fact(k);
        }
    }
    Series { c }
}

fn trunc4(s: &MapJet) -> Series<4> {
    Series {
        c: [s.c[0], s.c[1], s.c[2], s.c[3]],
    }
}

/// Transformed α as a function of the new time:
/// `α̃(t̃) = [α/T_t + T_tt/(n T_t²)] ∘ T⁻¹(t̃)`.
fn alpha_pullback(alpha: TimeFn, map: TimeMap, n: f64, domain: (f64, f64)) -> TimeFn {
    let label = format!("pullback of alpha through {map}");
    TimeFn::from_fn(label, move |ttilde| {
        let t = map.invert_value(ttilde, domain)?;
        let tj = map.jet(t)?;
        let tp: Series<4> = deriv_series(&tj, 1); // T', T'', T''', T''''
        let tpp: Series<4> = deriv_series(&tj, 2); // T'', T''', T'''', 0
        let aj = alpha.jet(t)?;
        let g = aj
            .div(&tp)
            .add(&tpp.div(&tp.mul(&tp)).scale(1.0 / n));
        let s = trunc4(&tj).revert(t);
        Ok(g.compose(&s))
    })
}

/// Transformed β as a function of the new time: `β̃(t̃) = δ₁⁵ β/T_t ∘ T⁻¹(t̃)`.
fn beta_pullback(beta: TimeFn, map: TimeMap, delta1: f64, domain: (f64, f64)) -> TimeFn {
    let label = format!("pullback of beta through {map}");
    let scale = delta1.powi(5);
    TimeFn::from_fn(label, move |ttilde| {
        let t = map.invert_value(ttilde, domain)?;
        let tj = map.jet(t)?;
        let tp: Series<4> = deriv_series(&tj, 1);
        let bj = beta.jet(t)?;
        let g = bj.scale(scale).div(&tp);
        let s = trunc4(&tj).revert(t);
        Ok(g.compose(&s))
    })
}

/// Apply the transformation to an equation (Theorem-1 action on coefficients).
pub fn apply_equiv(g: &EquivTransform, e: &EquationSpec) -> Result<EquationSpec, GaugeError> {
    // invariant: δ₁ T_t > 0 on the window
    for t in sample_points(e.interval, 17) {
        let tp = g.map.jet(t)?.deriv(1);
        if g.delta1 * tp <= 0.0 {
            return Err(GaugeError::InvariantViolation(format!(
                "delta1 * T_t = {} at t = {t}",
                g.delta1 * tp
            )));
        }
    }
    let interval = g.image_interval(e.interval)?;

    // fast symbolic path: affine map with symbolic coefficients
    if let (TimeMap::Affine { a, b }, Some(alpha_e), Some(beta_e)) =
        (&g.map, e.alpha.as_expr(), e.beta.as_expr())
    {
        // s(t̃) = (t̃ - b)/a; α̃ = α(s)/a, β̃ = δ₁⁵ β(s)/a
        let s = Expr::div(Expr::sub(Expr::Var, Expr::Num(*b)), Expr::Num(*a));
        let alpha = Expr::div(subst(alpha_e, &s), Expr::Num(*a));
        let beta = Expr::mul(
            Expr::Num(g.delta1.powi(5) / a),
            subst(beta_e, &s),
        );
        return Ok(EquationSpec {
            n: e.n,
            alpha: TimeFn::Expr(alpha),
            beta: TimeFn::Expr(beta),
            interval,
        });
    }

    let alpha = alpha_pullback(e.alpha.clone(), g.map.clone(), e.n, e.interval);
    let beta = beta_pullback(e.beta.clone(), g.map.clone(), g.delta1, e.interval);
    Ok(EquationSpec {
        n: e.n,
        alpha,
        beta,
        interval,
    })
}

/// Substitute `sub` for the variable in `e`.
pub fn subst(e: &Expr, sub: &Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::Num(*v),
        Expr::Var => sub.clone(),
        Expr::Unary(op, a) => Expr::unary(*op, subst(a, sub)),
        Expr::Binary(op, a, b) => {
            let (a, b) = (subst(a, sub), subst(b, sub));
            match op {
                BinOp::Add => Expr::add(a, b),
                BinOp::Sub => Expr::sub(a, b),
                BinOp::Mul => Expr::mul(a, b),
                BinOp::Div => Expr::div(a, b),
                BinOp::Pow => Expr::pow(a, b),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Gauge to α = 0
// ---------------------------------------------------------------------------

/// The gauge removing α: `t̃ = ∫ e^{-n∫α}`, `x̃ = x`, `ũ = e^{∫α} u`,
/// giving `β̃ = e^{n∫α} β`. Both antiderivatives are pinned at `t_min`.
pub fn gauge_to_zero_alpha(
    e: &EquationSpec,
) -> Result<(EquivTransform, EquationSpec), GaugeError> {
    if e.alpha_is_zero() {
        return Ok((EquivTransform::identity(), e.clone()));
    }
    let t0 = e.interval.0;
    let tol = 1e-13;
    let alpha = e.alpha.clone();
    let alpha_for_cum = alpha.clone();
    let cum_a = CumulativeIntegral::new(Rc::new(move |s| alpha_for_cum.eval(s)), t0, tol);

    let n = e.n;
    let alpha_for_tp = alpha.clone();
    let cum_for_tp = cum_a.clone();
    let tprime = TimeFn::from_fn(format!("exp(-{n}∫α)"), move |t| {
        let aj = alpha_for_tp.jet(t)?;
        let a_val = cum_for_tp.eval(t).map_err(|err| quad_to_eval(err, t))?;
        Ok(aj.integrate(a_val).scale(-n).exp())
    });
    let map = TimeMap::Quad(Rc::new(QuadMap::new(
        tprime,
        t0,
        tol,
        format!("∫exp(-{n}∫α)"),
    )));
    let g = EquivTransform {
        map,
        delta1: 1.0,
        delta2: 0.0,
    };
    let interval = g.image_interval(e.interval)?;
    // α̃ vanishes identically by construction; β̃ is the numeric pullback.
    let beta = beta_pullback(e.beta.clone(), g.map.clone(), 1.0, e.interval);
    let gauged = EquationSpec {
        n: e.n,
        alpha: TimeFn::zero(),
        beta,
        interval,
    };
    Ok((g, gauged))
}

// ---------------------------------------------------------------------------
// Reducibility criterion and constantization
// ---------------------------------------------------------------------------

/// Max over sample points of `|n (α/β)_t - (1/β)_tt| / (1 + |(1/β)_tt|)`.
/// Zero (to tolerance) exactly when the equation is point-equivalent to a
/// constant-coefficient one.
pub fn reducibility_residual(e: &EquationSpec, samples: usize) -> Result<f64, GaugeError> {
    let mut worst: f64 = 0.0;
    for t in sample_points(e.interval, samples.max(2)) {
        let aj = e.alpha.jet(t)?;
        let bj = e.beta.jet(t)?;
        if bj.value() == 0.0 {
            return Err(GaugeError::InvalidSpec(format!("beta vanishes at t = {t}")));
        }
        let lhs = e.n * aj.div(&bj).deriv(1);
        let rhs = bj.recip().deriv(2);
        let r = (lhs - rhs).abs() / (1.0 + rhs.abs());
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Construct the transform taking a reducible equation to constant
/// coefficients: `T_t = β/B` with `B = ε`, `δ₁ = 1`. Returns `(g, A, B)`
/// where the transformed equation is `u_t + u^n u_x + A u + B u_xxxxx = 0`.
pub fn constantize(
    e: &EquationSpec,
    tol: f64,
) -> Result<(EquivTransform, f64, f64), GaugeError> {
    let residual = reducibility_residual(e, 64)?;
    if residual > tol {
        return Err(GaugeError::CriterionFails { residual, tol });
    }
    let eps = e.epsilon()?;
    let b_const = eps;
    let tprime = e.beta.scale(eps); // β/B = εβ > 0
    let t0 = e.interval.0;
    let map = TimeMap::Quad(Rc::new(QuadMap::new(
        tprime,
        t0,
        1e-13,
        format!("∫(β/{b_const})"),
    )));
    let g = EquivTransform {
        map,
        delta1: 1.0,
        delta2: 0.0,
    };
    // A = α/T_t + T_tt/(n T_t²) evaluated anywhere on the window
    let mid = 0.5 * (e.interval.0 + e.interval.1);
    let tj = g.map.jet(mid)?;
    let (tp, tpp) = (tj.deriv(1), tj.deriv(2));
    let a_const = e.alpha.eval(mid)? / tp + tpp / (e.n * tp * tp);
    Ok((g, a_const, b_const))
}
