//! Similarity reductions to fifth-order ODEs, numerical integration of the
//! reduced equations with dense output, lifting of profiles back to PDE
//! solutions, and the catalog of closed-form solutions.
//!
//! Every reduction of a canonical equation has the shape
//!
//! ```text
//! ε φ⁽⁵⁾ + (φⁿ + c_ω·ω + c_c) φ′ + c_φ·φ = 0,
//! ```
//!
//! with the invariant variable `ω = w(t)x + v(t)` and solution ansatz
//! `u = μ(t) φ(ω)`.

use std::rc::Rc;

use thiserror::Error;

use crate::classify::{Case, ClassificationResult};
use crate::expr::EvalError;
use crate::gauge::EquivTransform;
use crate::series::Series;
use crate::timefn::TimeFn;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("subalgebra {0} has no similarity reduction in case {1}")]
    NoReduction(String, Case),
    #[error("step size underflow at ω = {0}")]
    StepUnderflow(f64),
    #[error("integration exceeded the step budget at ω = {0}")]
    StepBudget(f64),
    #[error("right-hand side is not finite at ω = {0}")]
    NonFiniteRhs(f64),
    #[error("empty integration span")]
    EmptySpan,
}

// ---------------------------------------------------------------------------
// Reduced ODE
// ---------------------------------------------------------------------------

/// `ε φ⁽⁵⁾ + (φⁿ + c_ω ω + c_const) φ′ + c_φ φ = 0`.
#[derive(Clone, Copy, Debug)]
pub struct ReducedOde {
    pub epsilon: f64,
    pub n: f64,
    pub c_omega: f64,
    pub c_const: f64,
    pub c_phi: f64,
}

/// `x^p` for the real branch used throughout: plain `powf` for `x > 0`,
/// integer powers everywhere, NaN otherwise.
pub fn real_pow(x: f64, p: f64) -> f64 {
    if p == p.trunc() && p.abs() < 64.0 {
        x.powi(p as i32)
    } else if x > 0.0 {
        x.powf(p)
    } else if x == 0.0 && p > 0.0 {
        0.0
    } else {
        f64::NAN
    }
}

impl ReducedOde {
    /// Solve for the highest derivative (1/ε = ε since ε = ±1).
    pub fn phi5(&self, omega: f64, y: &[f64; 5]) -> f64 {
        let nonlinear = real_pow(y[0], self.n);
        -self.epsilon
            * ((nonlinear + self.c_omega * omega + self.c_const) * y[1] + self.c_phi * y[0])
    }

    fn rhs(&self, omega: f64, y: &[f64; 5]) -> [f64; 5] {
        [y[1], y[2], y[3], y[4], self.phi5(omega, y)]
    }
}

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4) with dense output
// ---------------------------------------------------------------------------

const OVERFLOW_LIMIT: f64 = 1e8;
const MAX_STEPS: usize = 200_000;

struct DenseStep {
    t: f64,
    h: f64,
    rcont: [[f64; 5]; 5],
}

impl DenseStep {
    fn eval(&self, omega: f64) -> [f64; 5] {
        let theta = (omega - self.t) / self.h;
        let th1 = 1.0 - theta;
        let mut y = [0.0; 5];
        for i in 0..5 {
            let r = &self.rcont;
            y[i] = r[0][i]
                + theta * (r[1][i] + th1 * (r[2][i] + theta * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// Dense-output trajectory of a reduced ODE over an ω-span.
pub struct Trajectory {
    pub ode: ReducedOde,
    pub span: (f64, f64),
    /// ω actually reached (differs from `span.1` when truncated)
    pub reached: f64,
    /// true when the solution left the overflow guard before the span end
    pub truncated: bool,
    steps: Vec<DenseStep>,
}

impl Trajectory {
    /// State `[φ, φ′, φ″, φ‴, φ⁗]` at ω via the step interpolants.
    pub fn eval(&self, omega: f64) -> Result<[f64; 5], EvalError> {
        let dir = (self.reached - self.span.0).signum();
        let lo = self.span.0.min(self.reached);
        let hi = self.span.0.max(self.reached);
        let slack = 1e-9 * (1.0 + hi.abs());
        if omega < lo - slack || omega > hi + slack {
            return Err(EvalError::numeric(
                format!("ω outside integrated span [{lo}, {hi}]"),
                omega,
            ));
        }
        let omega = omega.clamp(lo, hi);
        // binary search over monotone step starts
        let pos = self
            .steps
            .partition_point(|s| dir * s.t <= dir * omega)
            .saturating_sub(1);
        Ok(self.steps[pos].eval(omega))
    }

    pub fn phi5_at(&self, omega: f64) -> Result<f64, EvalError> {
        let y = self.eval(omega)?;
        Ok(self.ode.phi5(omega, &y))
    }
}

/// Integrate the reduced ODE from `span.0` (where `ic` is given) to `span.1`.
pub fn integrate_ode(
    ode: &ReducedOde,
    ic: [f64; 5],
    span: (f64, f64),
    tol: f64,
) -> Result<Trajectory, ReduceError> {
    let rhs = |w: f64, y: &[f64; 5]| ode.rhs(w, y);
    let raw = dopri5(&rhs, ic, span, tol, tol)?;
    Ok(Trajectory {
        ode: *ode,
        span,
        reached: raw.reached,
        truncated: raw.truncated,
        steps: raw.steps,
    })
}

struct RawTrajectory {
    steps: Vec<DenseStep>,
    reached: f64,
    truncated: bool,
}

#[rustfmt::skip]
fn dopri5(
    rhs: &dyn Fn(f64, &[f64; 5]) -> [f64; 5],
    y0: [f64; 5],
    span: (f64, f64),
    rtol: f64,
    atol: f64,
) -> Result<RawTrajectory, ReduceError> {
    let (a, b) = span;
    if a == b {
        return Err(ReduceError::EmptySpan);
    }
    let dir = (b - a).signum();

    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;        const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;       const A42: f64 = -56.0 / 15.0;      const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;  const A52: f64 = -25360.0 / 2187.0; const A53: f64 = 64448.0 / 6561.0;  const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;   const A62: f64 = -355.0 / 33.0;     const A63: f64 = 46732.0 / 5247.0;  const A64: f64 = 49.0 / 176.0;   const A65: f64 = -5103.0 / 18656.0;
    const A71: f64 = 35.0 / 384.0;      const A73: f64 = 500.0 / 1113.0;    const A74: f64 = 125.0 / 192.0;     const A75: f64 = -2187.0 / 6784.0; const A76: f64 = 11.0 / 84.0;
    const C2: f64 = 1.0 / 5.0; const C3: f64 = 3.0 / 10.0; const C4: f64 = 4.0 / 5.0; const C5: f64 = 8.0 / 9.0;
    const E1: f64 = 71.0 / 57600.0;     const E3: f64 = -71.0 / 16695.0;    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0; const E6: f64 = 22.0 / 525.0;      const E7: f64 = -1.0 / 40.0;
    const D1: f64 = -12715105075.0 / 11282082432.0;
    const D3: f64 = 87487479700.0 / 32700410799.0;
    const D4: f64 = -10690763975.0 / 1880347072.0;
    const D5: f64 = 701980252875.0 / 199316789632.0;
    const D6: f64 = -1453857185.0 / 822651844.0;
    const D7: f64 = 69997945.0 / 29380423.0;

    let comb = |y: &[f64; 5], terms: &[(f64, &[f64; 5])], h: f64| {
        let mut out = *y;
        for (i, o) in out.iter_mut().enumerate() {
            for (c, k) in terms {
                *o += h * c * k[i];
            }
        }
        out
    };

    let mut t = a;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = dir * 0.01 * (b - a).abs();
    let hmin = 1e-12 * (1.0 + (b - a).abs());
    let mut steps = Vec::new();
    let mut truncated = false;

    for _ in 0..MAX_STEPS {
        if dir * (t - b) >= 0.0 || truncated {
            break;
        }
        if dir * (t + h - b) > 0.0 {
            h = b - t;
        }
        if h.abs() < hmin {
            return Err(ReduceError::StepUnderflow(t));
        }

        let k2 = rhs(t + C2 * h, &comb(&y, &[(A21, &k1)], h));
        let k3 = rhs(t + C3 * h, &comb(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = rhs(t + C4 * h, &comb(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = rhs(t + C5 * h, &comb(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = rhs(t + h, &comb(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
        let ynew = comb(&y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
        let k7 = rhs(t + h, &ynew);

        let mut err: f64 = 0.0;
        let mut finite = true;
        for i in 0..5 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
            if !e.is_finite() || !ynew[i].is_finite() {
                finite = false;
                break;
            }
            err += (e / sc) * (e / sc);
        }
        let err = if finite { (err / 5.0).sqrt() } else { f64::INFINITY };

        if err <= 1.0 {
            // accept: record dense coefficients for [t, t+h]
            let mut rcont = [[0.0; 5]; 5];
            for i in 0..5 {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            steps.push(DenseStep { t, h, rcont });
            t += h;
            y = ynew;
            k1 = k7;
            if y.iter().any(|v| v.abs() > OVERFLOW_LIMIT) {
                truncated = true;
            }
        }

        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= fac;
        if !h.is_finite() {
            return Err(ReduceError::NonFiniteRhs(t));
        }
    }

    if steps.is_empty() {
        return Err(ReduceError::StepBudget(a));
    }
    if dir * (t - b) < 0.0 && !truncated {
        return Err(ReduceError::StepBudget(t));
    }
    Ok(RawTrajectory {
        steps,
        reached: t,
        truncated,
    })
}

// ---------------------------------------------------------------------------
// Reductions (Table 3)
// ---------------------------------------------------------------------------

/// A similarity reduction in canonical variables: `ω = w(t)x + v(t)`,
/// `u = μ(t)φ(ω)` with `φ` solving `ode`.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub name: String,
    pub ode: ReducedOde,
    pub w: TimeFn,
    pub v: TimeFn,
    pub mu: TimeFn,
    /// canonical time window on which the ansatz is valid
    pub t_domain: (f64, f64),
}

/// Build the reduction induced by a named optimal-system subalgebra.
pub fn reduction_for(
    c: &ClassificationResult,
    name: &str,
    param: Option<f64>,
) -> Result<Reduction, ReduceError> {
    let n = c.n;
    let eps = c.epsilon;
    let t_domain = c.canonical_interval;
    let no = |name: &str| ReduceError::NoReduction(name.to_string(), c.case);
    let parse = |s: String| TimeFn::parse(&s).expect("generated ansatz expression parses");

    let red = match name {
        "g2.1" => {
            if c.case != Case::Power {
                return Err(no(name));
            }
            let rho = c.rho.unwrap_or(0.0);
            Reduction {
                name: name.into(),
                ode: ReducedOde {
                    epsilon: eps,
                    n,
                    c_omega: -(rho + 1.0) / 5.0,
                    c_const: 0.0,
                    c_phi: (rho - 4.0) / (5.0 * n),
                },
                w: parse(format!("t^({})", -(rho + 1.0) / 5.0)),
                v: TimeFn::zero(),
                mu: parse(format!("t^({})", (rho - 4.0) / (5.0 * n))),
                t_domain,
            }
        }
        "g2.2" => {
            if c.case != Case::Power || (c.rho.unwrap_or(0.0) + 1.0).abs() > 1e-9 {
                return Err(no(name));
            }
            let a = param.unwrap_or(0.0);
            Reduction {
                name: format!("g2.2:{a}"),
                ode: ReducedOde {
                    epsilon: eps,
                    n,
                    c_omega: 0.0,
                    c_const: -a / n,
                    c_phi: -1.0 / n,
                },
                w: TimeFn::constant(1.0),
                v: parse(format!("{}*ln(t)", -a / n)),
                mu: parse(format!("t^({})", -1.0 / n)),
                t_domain,
            }
        }
        "g3" => {
            if c.case != Case::Exponential {
                return Err(no(name));
            }
            Reduction {
                name: name.into(),
                ode: ReducedOde {
                    epsilon: eps,
                    n,
                    c_omega: -1.0 / 5.0,
                    c_const: 0.0,
                    c_phi: 1.0 / (5.0 * n),
                },
                w: parse("exp(-t/5)".into()),
                v: TimeFn::zero(),
                mu: parse(format!("exp(t/{})", 5.0 * n)),
                t_domain,
            }
        }
        "g4.1" => {
            if c.case != Case::Constant {
                return Err(no(name));
            }
            let sigma = param.unwrap_or(0.0);
            Reduction {
                name: format!("g4.1:{sigma}"),
                ode: ReducedOde {
                    epsilon: eps,
                    n,
                    c_omega: 0.0,
                    c_const: -sigma,
                    c_phi: 0.0,
                },
                w: TimeFn::constant(1.0),
                v: parse(format!("{}*t", -sigma)),
                mu: TimeFn::constant(1.0),
                t_domain,
            }
        }
        "g4.2" => {
            if c.case != Case::Constant {
                return Err(no(name));
            }
            Reduction {
                name: name.into(),
                ode: ReducedOde {
                    epsilon: eps,
                    n,
                    c_omega: -1.0 / 5.0,
                    c_const: 0.0,
                    c_phi: -4.0 / (5.0 * n),
                },
                w: parse("t^(-1/5)".into()),
                v: TimeFn::zero(),
                mu: parse(format!("t^({})", -4.0 / (5.0 * n))),
                t_domain,
            }
        }
        other => return Err(no(other)),
    };
    Ok(red)
}

// ---------------------------------------------------------------------------
// Solution fields
// ---------------------------------------------------------------------------

/// Pointwise solution data: value, time derivative, and the first five
/// x-derivatives (`u_x[k]` is ∂^{k+1}u/∂x^{k+1}).
#[derive(Clone, Copy, Debug)]
pub struct FieldDerivs {
    pub u: f64,
    pub u_t: f64,
    pub u_x: [f64; 5],
}

type FieldEval = Rc<dyn Fn(f64, f64) -> Result<FieldDerivs, EvalError>>;

/// An evaluable candidate solution `u(t, x)` with enough derivatives for
/// residual checks.
#[derive(Clone)]
pub struct SolutionField {
    pub label: String,
    pub n: f64,
    pub t_domain: (f64, f64),
    pub x_domain: (f64, f64),
    eval: FieldEval,
}

impl SolutionField {
    pub fn new(
        label: impl Into<String>,
        n: f64,
        t_domain: (f64, f64),
        x_domain: (f64, f64),
        eval: impl Fn(f64, f64) -> Result<FieldDerivs, EvalError> + 'static,
    ) -> Self {
        SolutionField {
            label: label.into(),
            n,
            t_domain,
            x_domain,
            eval: Rc::new(eval),
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<FieldDerivs, EvalError> {
        (self.eval)(t, x)
    }
}

impl std::fmt::Debug for SolutionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SolutionField({})", self.label)
    }
}

/// Lift an integrated profile back to a solution of the canonical equation.
///
/// The x-domain is the largest rectangle on which `ω = w(t)x + v(t)` stays
/// inside the integrated span for every sampled `t` in the reduction window.
pub fn lift(red: &Reduction, traj: Rc<Trajectory>) -> Result<SolutionField, ReduceError> {
    let (w_lo, w_hi) = {
        let lo = traj.span.0.min(traj.reached);
        let hi = traj.span.0.max(traj.reached);
        (lo, hi)
    };
    // intersect the valid x-interval across the time window
    let mut x_lo = f64::NEG_INFINITY;
    let mut x_hi = f64::INFINITY;
    for &t in &crate::gauge::sample_points(red.t_domain, 33) {
        let w = red.w.eval(t)?;
        let v = red.v.eval(t)?;
        let (a, b) = ((w_lo - v) / w, (w_hi - v) / w);
        x_lo = x_lo.max(a.min(b));
        x_hi = x_hi.min(a.max(b));
    }

    let (wf, vf, mf) = (red.w.clone(), red.v.clone(), red.mu.clone());
    let ode = red.ode;
    let label = format!("lift[{}]", red.name);
    Ok(SolutionField::new(
        label,
        red.ode.n,
        red.t_domain,
        (x_lo, x_hi),
        move |t, x| {
            let wj = wf.jet(t)?;
            let vj = vf.jet(t)?;
            let mj = mf.jet(t)?;
            let (w, v, mu) = (wj.value(), vj.value(), mj.value());
            let omega = w * x + v;
            let y = traj.eval(omega)?;
            let phi5 = ode.phi5(omega, &y);
            let u = mu * y[0];
            let mut u_x = [0.0; 5];
            let mut wk = 1.0;
            for k in 0..5 {
                wk *= w;
                let dk = if k < 4 { y[k + 1] } else { phi5 };
                u_x[k] = mu * wk * dk;
            }
            let u_t = mj.deriv(1) * y[0] + mu * (wj.deriv(1) * x + vj.deriv(1)) * y[1];
            Ok(FieldDerivs { u, u_t, u_x })
        },
    ))
}

/// Map a solution of the transformed equation back to the base equation:
/// `u(t, x) = (T_t/δ₁)^{1/n} ũ(T(t), δ₁x + δ₂)`.
pub fn pull_back_field(
    g: &EquivTransform,
    t_domain: (f64, f64),
    field: &SolutionField,
) -> SolutionField {
    let n = field.n;
    let d1 = g.delta1;
    let d2 = g.delta2;
    // map endpoints without reordering so an empty domain stays empty
    let (a, b) = (
        (field.x_domain.0 - d2) / d1,
        (field.x_domain.1 - d2) / d1,
    );
    let x_dom = if d1 > 0.0 { (a, b) } else { (b, a) };
    let map = g.map.clone();
    let inner = field.clone();
    SolutionField::new(
        format!("pullback[{}]", field.label),
        n,
        t_domain,
        x_dom,
        move |t, x| {
            let mj = map.jet(t)?;
            let big_t = mj.value();
            let tp = mj.deriv(1);
            let tpp = mj.deriv(2);
            let fd = inner.eval(big_t, d1 * x + d2)?;
            let ratio = tp / d1;
            if ratio <= 0.0 {
                return Err(EvalError::numeric(
                    format!("T_t/δ₁ = {ratio} not positive"),
                    t,
                ));
            }
            let factor = real_pow(ratio, 1.0 / n);
            let u = factor * fd.u;
            let u_t = factor * (tpp / (n * tp)) * fd.u + factor * tp * fd.u_t;
            let mut u_x = [0.0; 5];
            let mut dk = 1.0;
            for k in 0..5 {
                dk *= d1;
                u_x[k] = factor * dk * fd.u_x[k];
            }
            Ok(FieldDerivs { u, u_t, u_x })
        },
    )
}

// ---------------------------------------------------------------------------
// Closed-form catalog
// ---------------------------------------------------------------------------

/// Real n-th root of `k`, when one exists on the principal/odd branch.
fn real_root(k: f64, n: f64) -> Option<f64> {
    if k > 0.0 {
        Some(k.powf(1.0 / n))
    } else if k < 0.0 && n == n.trunc() && (n as i64) % 2 != 0 {
        Some(-(-k).powf(1.0 / n))
    } else {
        None
    }
}

/// Closed-form solutions of the canonical constant-coefficient equation
/// `u_t + uⁿu_x + ε u_xxxxx = 0`.
pub fn canonical_exact(n: f64, epsilon: f64, t_domain: (f64, f64)) -> Vec<SolutionField> {
    let mut out = Vec::new();

    // algebraically decaying steady state u = K^{1/n} (n x)^{-4/n}, x > 0
    let k = -8.0 * epsilon * (n + 1.0) * (n + 2.0) * (n + 4.0) * (3.0 * n + 4.0);
    if n > 0.0 {
        if let Some(root) = real_root(k, n) {
            let amp = root * n.powf(-4.0 / n);
            let p = -4.0 / n;
            out.push(SolutionField::new(
                "stationary-algebraic",
                n,
                t_domain,
                (0.0, f64::INFINITY),
                move |_t, x| {
                    if x <= 0.0 {
                        return Err(EvalError::numeric("x must be positive", x));
                    }
                    let u = amp * x.powf(p);
                    let mut u_x = [0.0; 5];
                    let mut coef = amp;
                    let mut q = p;
                    for item in &mut u_x {
                        coef *= q;
                        q -= 1.0;
                        *item = coef * x.powf(q);
                    }
                    Ok(FieldDerivs { u, u_t: 0.0, u_x })
                },
            ));
        }
    }

    // travelling tanh² pair, n = 2, ε = -1 only
    if (n - 2.0).abs() < 1e-12 && epsilon == -1.0 {
        for sign in [1.0, -1.0] {
            let amp = sign * 2.0 * 10.0f64.sqrt();
            out.push(SolutionField::new(
                if sign > 0.0 {
                    "tanh-travelling:+"
                } else {
                    "tanh-travelling:-"
                },
                n,
                t_domain,
                (f64::NEG_INFINITY, f64::INFINITY),
                move |t, x| {
                    let theta = x - 24.0 * t;
                    let th = Series::<6>::variable(theta).tanh();
                    let uj = th.mul(&th).scale(3.0).sub(&Series::constant(2.0)).scale(amp);
                    let mut u_x = [0.0; 5];
                    for (k, item) in u_x.iter_mut().enumerate() {
                        *item = uj.deriv(k + 1);
                    }
                    Ok(FieldDerivs {
                        u: uj.value(),
                        u_t: -24.0 * uj.deriv(1),
                        u_x,
                    })
                },
            ));
        }
    }
    out
}

/// Closed-form solutions of the classified equation, obtained by pulling the
/// canonical catalog back through the normalizer. Empty unless the equation
/// reduces to constant coefficients.
pub fn exact_catalog(
    e: &crate::gauge::EquationSpec,
    c: &ClassificationResult,
) -> Vec<SolutionField> {
    if c.case != Case::Constant {
        return Vec::new();
    }
    canonical_exact(c.n, c.epsilon, c.canonical_interval)
        .into_iter()
        .map(|f| pull_back_field(&c.normalizer, e.interval, &f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify;
    use crate::gauge::EquationSpec;

    fn tanh_profile(omega: f64) -> Series<6> {
        let th = Series::<6>::variable(omega).tanh();
        th.mul(&th)
            .scale(3.0)
            .sub(&Series::constant(2.0))
            .scale(2.0 * 10.0f64.sqrt())
    }

    #[test]
    fn dopri5_reproduces_exponential() {
        // y⁽⁵⁾ = y with y = eʷ: all derivatives equal eʷ
        let rhs = |_w: f64, y: &[f64; 5]| [y[1], y[2], y[3], y[4], y[0]];
        let raw = dopri5(&rhs, [1.0; 5], (0.0, 2.0), 1e-11, 1e-11).unwrap();
        assert!(!raw.truncated);
        let traj = Trajectory {
            ode: ReducedOde {
                epsilon: 1.0,
                n: 2.0,
                c_omega: 0.0,
                c_const: 0.0,
                c_phi: 0.0,
            },
            span: (0.0, 2.0),
            reached: raw.reached,
            truncated: false,
            steps: raw.steps,
        };
        for i in 0..=20 {
            let w = 0.1 * i as f64;
            let y = traj.eval(w).unwrap();
            assert!((y[0] - w.exp()).abs() < 1e-9, "at {w}: {} vs {}", y[0], w.exp());
        }
    }

    #[test]
    fn tanh_profile_solves_travelling_reduction() {
        // σ = 24 travelling frame: -φ⁽⁵⁾ + (φ² - 24)φ′ = 0
        let ode = ReducedOde {
            epsilon: -1.0,
            n: 2.0,
            c_omega: 0.0,
            c_const: -24.0,
            c_phi: 0.0,
        };
        let p = tanh_profile(-4.0);
        let ic = [
            p.value(),
            p.deriv(1),
            p.deriv(2),
            p.deriv(3),
            p.deriv(4),
        ];
        let traj = integrate_ode(&ode, ic, (-4.0, 4.0), 1e-11).unwrap();
        assert!(!traj.truncated);
        for i in 0..=40 {
            let w = -4.0 + 0.2 * i as f64;
            let y = traj.eval(w).unwrap();
            let exact = tanh_profile(w).value();
            assert!((y[0] - exact).abs() < 1e-6, "at {w}: {} vs {exact}", y[0]);
        }
    }

    #[test]
    fn self_convergence_row5() {
        let ode = ReducedOde {
            epsilon: 1.0,
            n: 2.0,
            c_omega: -0.2,
            c_const: 0.0,
            c_phi: -0.4,
        };
        let ic = [0.5, 0.1, -0.05, 0.02, 0.0];
        let coarse = integrate_ode(&ode, ic, (0.0, 3.0), 1e-6).unwrap();
        let fine = integrate_ode(&ode, ic, (0.0, 3.0), 1e-12).unwrap();
        for i in 0..=30 {
            let w = 0.1 * i as f64;
            let yc = coarse.eval(w).unwrap()[0];
            let yf = fine.eval(w).unwrap()[0];
            assert!((yc - yf).abs() < 1e-4, "at {w}: {yc} vs {yf}");
        }
    }

    #[test]
    fn overflow_guard_truncates() {
        // strongly unstable linear problem blows past the guard
        let rhs = |_w: f64, y: &[f64; 5]| {
            [y[1], y[2], y[3], y[4], 1e4 * y[0]]
        };
        let raw = dopri5(&rhs, [1.0, 1.0, 1.0, 1.0, 1.0], (0.0, 50.0), 1e-8, 1e-8).unwrap();
        assert!(raw.truncated);
        assert!(raw.reached < 50.0);
    }

    #[test]
    fn reduction_rows_match_expected_coefficients() {
        let spec = |beta: &str, iv| {
            EquationSpec::new(
                2.0,
                TimeFn::zero(),
                TimeFn::parse(beta).unwrap(),
                iv,
            )
            .unwrap()
        };

        let c = classify(&spec("t^3", (1.0, 2.0)), 1e-7).unwrap();
        let r = reduction_for(&c, "g2.1", None).unwrap();
        assert!((r.ode.c_omega + 0.8).abs() < 1e-9);
        assert!((r.ode.c_phi + 0.1).abs() < 1e-9);

        let c = classify(&spec("1/t", (1.0, 2.0)), 1e-7).unwrap();
        let r = reduction_for(&c, "g2.2", Some(1.0)).unwrap();
        assert!((r.ode.c_const + 0.5).abs() < 1e-9);
        assert!((r.ode.c_phi + 0.5).abs() < 1e-9);

        let c = classify(&spec("exp(t)", (0.0, 1.0)), 1e-7).unwrap();
        let r = reduction_for(&c, "g3", None).unwrap();
        assert!((r.ode.c_omega + 0.2).abs() < 1e-9);
        assert!((r.ode.c_phi - 0.1).abs() < 1e-9);

        let c = classify(&spec("-1", (0.0, 1.0)), 1e-7).unwrap();
        let r = reduction_for(&c, "g4.2", None).unwrap();
        assert!((r.ode.c_omega + 0.2).abs() < 1e-9);
        assert!((r.ode.c_phi + 0.4).abs() < 1e-9);
        assert_eq!(r.ode.epsilon, -1.0);

        // wrong case rejected
        assert!(reduction_for(&c, "g3", None).is_err());
    }

    #[test]
    fn lift_travelling_wave_matches_closed_form() {
        let e = EquationSpec::new(
            2.0,
            TimeFn::zero(),
            TimeFn::constant(-1.0),
            (0.0, 0.05),
        )
        .unwrap();
        let c = classify(&e, 1e-7).unwrap();
        let red = reduction_for(&c, "g4.1", Some(24.0)).unwrap();
        let p = tanh_profile(-4.0);
        let ic = [p.value(), p.deriv(1), p.deriv(2), p.deriv(3), p.deriv(4)];
        let traj = integrate_ode(&red.ode, ic, (-4.0, 4.0), 1e-11).unwrap();
        let field = lift(&red, Rc::new(traj)).unwrap();
        // u(t, x) = φ(x - 24t)
        let fd = field.eval(0.02, 1.0).unwrap();
        let exact = tanh_profile(1.0 - 24.0 * 0.02);
        assert!((fd.u - exact.value()).abs() < 1e-6);
        assert!((fd.u_x[0] - exact.deriv(1)).abs() < 1e-6);
        assert!((fd.u_t + 24.0 * exact.deriv(1)).abs() < 1e-4);
    }

    #[test]
    fn stationary_amplitude_n2() {
        // n = 2, ε = -1: u = 6√10 x⁻²
        let fields = canonical_exact(2.0, -1.0, (0.0, 1.0));
        let f = fields
            .iter()
            .find(|f| f.label == "stationary-algebraic")
            .unwrap();
        let fd = f.eval(0.5, 1.0).unwrap();
        assert!((fd.u - 6.0 * 10.0f64.sqrt()).abs() < 1e-12);
        assert!((fd.u_x[0] + 12.0 * 10.0f64.sqrt()).abs() < 1e-11);
        assert_eq!(fd.u_t, 0.0);
        // ε = +1, n = 2: K < 0 with even n, no real branch
        let fields = canonical_exact(2.0, 1.0, (0.0, 1.0));
        assert!(fields.iter().all(|f| f.label != "stationary-algebraic"));
        // ε = +1, n = 3: odd root exists
        let fields = canonical_exact(3.0, 1.0, (0.0, 1.0));
        assert!(fields.iter().any(|f| f.label == "stationary-algebraic"));
    }

    #[test]
    fn pull_back_identity_is_noop() {
        let fields = canonical_exact(2.0, -1.0, (0.0, 1.0));
        let f = &fields[0];
        let g = EquivTransform::identity();
        let pb = pull_back_field(&g, (0.0, 1.0), f);
        let a = f.eval(0.3, 2.0).unwrap();
        let b = pb.eval(0.3, 2.0).unwrap();
        assert!((a.u - b.u).abs() < 1e-14);
        assert!((a.u_t - b.u_t).abs() < 1e-14);
        assert!((a.u_x[4] - b.u_x[4]).abs() < 1e-12);
    }
}
