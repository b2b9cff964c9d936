//! Adaptive quadrature and cached cumulative antiderivatives.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use thiserror::Error;

use crate::expr::{EvalError, Expr};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_DEPTH: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("integrand is singular inside the interval: {0}")]
    Singular(EvalError),
    #[error("quadrature did not converge after {max_depth} refinements on [{a}, {b}]")]
    NoConvergence { a: f64, b: f64, max_depth: u32 },
}

pub type Integrand = Rc<dyn Fn(f64) -> Result<f64, EvalError>>;

/// ∫_a^b f with absolute error at most `tol` (adaptive Simpson).
pub fn integrate<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError>
where
    F: Fn(f64) -> Result<f64, EvalError> + ?Sized,
{
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let flo = f(lo).map_err(QuadError::Singular)?;
    let fhi = f(hi).map_err(QuadError::Singular)?;
    let m = 0.5 * (lo + hi);
    let fm = f(m).map_err(QuadError::Singular)?;
    let whole = simpson(lo, hi, flo, fm, fhi);
    let v = adaptive(f, lo, hi, flo, fm, fhi, whole, tol, MAX_DEPTH)?;
    Ok(sign * v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadError>
where
    F: Fn(f64) -> Result<f64, EvalError> + ?Sized,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm).map_err(QuadError::Singular)?;
    let frm = f(rm).map_err(QuadError::Singular)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(QuadError::NoConvergence {
            a,
            b,
            max_depth: MAX_DEPTH,
        });
    }
    let l = adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// ∫_{t0}^{t} e(s) ds; the fixed antiderivative of `e` pinned at base point `t0`.
pub fn antiderivative(e: &Expr, t0: f64, t: f64, tol: f64) -> Result<f64, QuadError> {
    integrate(&|s| e.eval(s), t0, t, tol)
}

/// Key wrapper for f64 in ordered maps (total order; no NaN keys are inserted).
#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Cached cumulative integral `F(t) = ∫_{t0}^{t} f`.
///
/// Each query integrates only from the nearest previously computed node, so
/// repeated monotone sweeps (classification sampling, time-map evaluation)
/// cost one short panel each. No interpolation is involved: every cached
/// value is the sum of adaptive-quadrature panels.
#[derive(Clone)]
pub struct CumulativeIntegral {
    f: Integrand,
    t0: f64,
    tol: f64,
    cache: Rc<RefCell<BTreeMap<Key, f64>>>,
}

impl CumulativeIntegral {
    pub fn new(f: Integrand, t0: f64, tol: f64) -> Self {
        let mut map = BTreeMap::new();
        map.insert(Key(t0), 0.0);
        CumulativeIntegral {
            f,
            t0,
            tol,
            cache: Rc::new(RefCell::new(map)),
        }
    }

    pub fn from_expr(e: &Expr, t0: f64, tol: f64) -> Self {
        let e = e.clone();
        Self::new(Rc::new(move |s| e.eval(s)), t0, tol)
    }

    pub fn base(&self) -> f64 {
        self.t0
    }

    pub fn eval(&self, t: f64) -> Result<f64, QuadError> {
        let (anchor_t, anchor_v) = {
            let cache = self.cache.borrow();
            let below = cache.range(..=Key(t)).next_back().map(|(k, v)| (k.0, *v));
            let above = cache.range(Key(t)..).next().map(|(k, v)| (k.0, *v));
            match (below, above) {
                (Some(b), Some(a)) => {
                    if (t - b.0).abs() <= (a.0 - t).abs() {
                        b
                    } else {
                        a
                    }
                }
                (Some(b), None) => b,
                (None, Some(a)) => a,
                (None, None) => (self.t0, 0.0),
            }
        };
        if anchor_t == t {
            return Ok(anchor_v);
        }
        let panel = integrate(self.f.as_ref(), anchor_t, t, self.tol)?;
        let value = anchor_v + panel;
        self.cache.borrow_mut().insert(Key(t), value);
        Ok(value)
    }
}
