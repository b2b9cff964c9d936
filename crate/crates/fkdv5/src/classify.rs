//! Group classification of gauged equations `u_t + u^n u_x + β(t) u_xxxxx = 0`.
//!
//! The classifying equation `(pt + q) β_t = r β` admits three inequivalent
//! nonzero coefficient triples, giving canonical coefficients
//! `β ∈ {ε t^ρ, ε e^t, ε}`. Classification fits `g(t) = β/β_t` to an affine
//! function of `t` and reads the case off the fitted slope and intercept,
//! then constructs the normalizing transform into the canonical form.

use std::fmt;

use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::gauge::{
    apply_equiv, gauge_to_zero_alpha, sample_points, EquationSpec, EquivTransform, GaugeError,
};
use crate::timefn::TimeFn;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error("window too short: only {0} usable samples")]
    WindowTooShort(usize),
    #[error("beta vanishes inside the window at t = {0}")]
    BetaVanishes(f64),
}

/// Fitted coefficients of the classifying equation `(pt + q) β_t = r β`,
/// normalized so `max(|p|, |q|, |r|) = 1`.
#[derive(Clone, Copy, Debug)]
pub struct ClassifyingFit {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    /// Relative fit error over the sample window.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    /// Case 1: kernel symmetry ⟨∂ₓ⟩ only.
    Generic,
    /// Case 2: β ~ ε t^ρ (after normalization), ρ ≠ 0.
    Power,
    /// Case 3: β ~ ε e^t.
    Exponential,
    /// Case 4: β ~ ε.
    Constant,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::Generic => "GENERIC",
            Case::Power => "POWER",
            Case::Exponential => "EXPONENTIAL",
            Case::Constant => "CONSTANT",
        };
        write!(f, "{s}")
    }
}

/// Outcome of classification. The recovered parameters describe the gauged
/// coefficient as `β̃(t̃) = λ (t̃ + κ)^ρ` (POWER), `λ e^{m t̃}` (EXPONENTIAL)
/// or the constant `λ` (CONSTANT); `normalizer` maps the *original* input
/// to the canonical coefficient `ε t^ρ`, `ε e^t` or `ε`.
#[derive(Clone, Debug)]
pub struct ClassificationResult {
    pub case: Case,
    pub epsilon: f64,
    pub rho: Option<f64>,
    pub m: Option<f64>,
    pub kappa: f64,
    pub lambda: f64,
    pub fit: ClassifyingFit,
    /// Gauge that removed α (identity when α ≡ 0).
    pub gauge: EquivTransform,
    /// Interval of the gauged equation.
    pub gauged_interval: (f64, f64),
    /// Full transform from the input equation to the canonical one.
    pub normalizer: EquivTransform,
    pub n: f64,
    /// Image of the input interval under `normalizer`.
    pub canonical_interval: (f64, f64),
}

impl ClassificationResult {
    /// Canonical-variable β as a function of canonical time.
    pub fn canonical_beta(&self) -> TimeFn {
        match self.case {
            Case::Constant => TimeFn::constant(self.epsilon),
            Case::Exponential => TimeFn::parse(&format!("{}*exp(t)", self.epsilon)).unwrap(),
            Case::Power => {
                TimeFn::parse(&format!("{}*t^({})", self.epsilon, self.rho.unwrap_or(0.0)))
                    .unwrap()
            }
            Case::Generic => TimeFn::constant(f64::NAN),
        }
    }
}

/// Classify an equation; gauges α away first when it is not identically zero.
pub fn classify(e: &EquationSpec, tol: f64) -> Result<ClassificationResult, ClassifyError> {
    let (gauge, gauged) = gauge_to_zero_alpha(e)?;
    let fit_data = fit_classifying_ode(&gauged, tol)?;
    let (a, b) = gauged.interval;
    let mid = 0.5 * (a + b);
    let epsilon = gauged.beta.eval(mid)?.signum();

    let mut result = ClassificationResult {
        case: Case::Generic,
        epsilon,
        rho: None,
        m: None,
        kappa: 0.0,
        lambda: gauged.beta.eval(mid)?,
        fit: fit_data.fit,
        gauge: gauge.clone(),
        gauged_interval: gauged.interval,
        normalizer: gauge.clone(),
        n: e.n,
        canonical_interval: gauged.interval,
    };

    match fit_data.decision {
        Decision::Constant => {
            result.case = Case::Constant;
            // normalize amplitude: T = δ₃ t with δ₃ = |λ|, δ₁ = 1
            let lambda = average_beta(&gauged)?;
            result.lambda = lambda;
            let norm = EquivTransform::scaling(lambda.abs(), 0.0, 1.0, 0.0);
            result.normalizer = crate::gauge::compose(&norm, &gauge);
        }
        Decision::Exponential { m } => {
            result.case = Case::Exponential;
            result.m = Some(m);
            // β̃ = λ e^{m t̃}; δ₃ = m, δ₁ = sign(m)(|m|/|λ|)^{1/5} gives ε e^{t}
            let lambda = gauged.beta.eval(mid)? / (m * mid).exp();
            result.lambda = lambda;
            let delta1 = m.signum() * (m.abs() / lambda.abs()).powf(0.2);
            let norm = EquivTransform::scaling(m, 0.0, delta1, 0.0);
            result.normalizer = crate::gauge::compose(&norm, &gauge);
        }
        Decision::Power { rho, kappa } => {
            result.case = Case::Power;
            result.rho = Some(rho);
            result.kappa = kappa;
            // translate so the window sits in t̃ > 0 and rescale amplitude:
            // T = δ₃ (t + κ) with δ₃ = ±1 matching the sign of t + κ
            let delta3 = (mid + kappa).signum();
            let tt_mid = delta3 * (mid + kappa);
            let lambda = gauged.beta.eval(mid)? / signed_pow(delta3 * tt_mid, rho);
            result.lambda = lambda;
            // solve δ₁⁵ β(t)/δ₃ = ε t̃^ρ at the midpoint
            let d1_pow5 = epsilon * tt_mid.powf(rho) * delta3 / gauged.beta.eval(mid)?;
            let delta1 = d1_pow5.signum() * d1_pow5.abs().powf(0.2);
            let norm = EquivTransform::scaling(delta3, delta3 * kappa, delta1, 0.0);
            result.normalizer = crate::gauge::compose(&norm, &gauge);
        }
        Decision::Generic => {}
    }
    result.canonical_interval = result.normalizer.image_interval(e.interval)?;
    Ok(result)
}

fn signed_pow(base: f64, p: f64) -> f64 {
    // base is the gauged-side (t + κ); callers guarantee one sign on the window
    if base > 0.0 {
        base.powf(p)
    } else if p == p.trunc() {
        base.powi(p as i32)
    } else {
        f64::NAN
    }
}

fn average_beta(e: &EquationSpec) -> Result<f64, ClassifyError> {
    let pts = sample_points(e.interval, 17);
    let mut acc = 0.0;
    for &t in &pts {
        acc += e.beta.eval(t)?;
    }
    Ok(acc / pts.len() as f64)
}

enum Decision {
    Generic,
    Constant,
    Exponential { m: f64 },
    Power { rho: f64, kappa: f64 },
}

struct FitOutcome {
    fit: ClassifyingFit,
    decision: Decision,
}

/// Least-squares fit of `g(t) = β/β_t` to `s·t + c` over ≥ 50 samples,
/// rejecting points where `β_t` is too small to divide by.
fn fit_classifying_ode(e: &EquationSpec, tol: f64) -> Result<FitOutcome, ClassifyError> {
    let pts = sample_points(e.interval, 201);
    let window = e.interval.1 - e.interval.0;
    let mut beta_max: f64 = 0.0;
    let mut dbeta_max: f64 = 0.0;
    let mut samples = Vec::with_capacity(pts.len());
    for &t in &pts {
        let bj = e.beta.jet(t)?;
        if bj.value() == 0.0 {
            return Err(ClassifyError::BetaVanishes(t));
        }
        beta_max = beta_max.max(bj.value().abs());
        dbeta_max = dbeta_max.max(bj.deriv(1).abs());
        samples.push((t, bj.value(), bj.deriv(1)));
    }

    // (i) constant coefficient: β_t negligible against β across the window
    if dbeta_max * window <= tol * beta_max {
        return Ok(FitOutcome {
            fit: ClassifyingFit {
                p: 0.0,
                q: 1.0,
                r: 0.0,
                residual: dbeta_max * window / beta_max,
            },
            decision: Decision::Constant,
        });
    }

    // usable points: |β_t| not drowned by roundoff
    let cutoff = 1e-9 * dbeta_max;
    let usable: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, _, db)| db.abs() > cutoff)
        .map(|(t, b, db)| (*t, b / db))
        .collect();
    if usable.len() < 10 {
        return Err(ClassifyError::WindowTooShort(usable.len()));
    }

    // least squares g ≈ s t + c
    let n = usable.len() as f64;
    let (mut st, mut sg, mut stt, mut stg) = (0.0, 0.0, 0.0, 0.0);
    for &(t, g) in &usable {
        st += t;
        sg += g;
        stt += t * t;
        stg += t * g;
    }
    let det = n * stt - st * st;
    let slope = (n * stg - st * sg) / det;
    let intercept = (sg * stt - st * stg) / det;

    let mut residual: f64 = 0.0;
    let mut gscale: f64 = 0.0;
    for &(t, g) in &usable {
        residual = residual.max((g - (slope * t + intercept)).abs());
        gscale = gscale.max(g.abs());
    }
    let rel_residual = residual / (1.0 + gscale);

    // classifying triple (p, q, r) ∝ (s, c, 1), normalized to max-abs 1
    let norm = slope.abs().max(intercept.abs()).max(1.0);
    let fit = ClassifyingFit {
        p: slope / norm,
        q: intercept / norm,
        r: 1.0 / norm,
        residual: rel_residual,
    };

    if rel_residual > tol {
        return Ok(FitOutcome {
            fit,
            decision: Decision::Generic,
        });
    }
    if slope.abs() <= tol {
        if intercept == 0.0 {
            return Ok(FitOutcome {
                fit,
                decision: Decision::Generic,
            });
        }
        return Ok(FitOutcome {
            fit,
            decision: Decision::Exponential { m: 1.0 / intercept },
        });
    }
    let rho = 1.0 / slope;
    if rho.abs() < tol {
        return Ok(FitOutcome {
            fit,
            decision: Decision::Constant,
        });
    }
    let kappa = intercept / slope;
    Ok(FitOutcome {
        fit,
        decision: Decision::Power { rho, kappa },
    })
}

// ---------------------------------------------------------------------------
// Symmetry generators
// ---------------------------------------------------------------------------

/// Vector field `τ(t)∂_t + (ξ¹(t)x + ξ⁰(t))∂_x + η¹(t)u∂_u`.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub tau: TimeFn,
    pub xi_x: TimeFn,
    pub xi_0: TimeFn,
    pub eta_u: TimeFn,
    /// Constant-coefficient data when the field is affine
    /// (`τ = a t + b`, `ξ = c x + d`, `η = k u`); enables exact flows.
    pub affine: Option<AffineGenerator>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineGenerator {
    pub t_lin: f64,
    pub t_const: f64,
    pub x_lin: f64,
    pub x_const: f64,
    pub u_lin: f64,
}

impl VectorField {
    pub fn affine(t_lin: f64, t_const: f64, x_lin: f64, x_const: f64, u_lin: f64) -> Self {
        VectorField {
            tau: TimeFn::Expr(Expr::add(
                Expr::mul(Expr::Num(t_lin), Expr::Var),
                Expr::Num(t_const),
            )),
            xi_x: TimeFn::constant(x_lin),
            xi_0: TimeFn::constant(x_const),
            eta_u: TimeFn::constant(u_lin),
            affine: Some(AffineGenerator {
                t_lin,
                t_const,
                x_lin,
                x_const,
                u_lin,
            }),
        }
    }

    pub fn d_x() -> Self {
        VectorField::affine(0.0, 0.0, 0.0, 1.0, 0.0)
    }

    pub fn d_t() -> Self {
        VectorField::affine(0.0, 1.0, 0.0, 0.0, 0.0)
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.tau.is_zero_expr() {
            parts.push(format!("({})∂t", self.tau));
        }
        let xi_zero = self.xi_x.is_zero_expr() && self.xi_0.is_zero_expr();
        if !xi_zero {
            if self.xi_x.is_zero_expr() {
                parts.push(format!("({})∂x", self.xi_0));
            } else if self.xi_0.is_zero_expr() {
                parts.push(format!("({})x∂x", self.xi_x));
            } else {
                parts.push(format!("(({})x+({}))∂x", self.xi_x, self.xi_0));
            }
        }
        if !self.eta_u.is_zero_expr() {
            parts.push(format!("({})u∂u", self.eta_u));
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Maximal Lie invariance algebra bases in canonical variables (Table 1).
pub fn symmetry_basis(c: &ClassificationResult, n: f64) -> Vec<VectorField> {
    match c.case {
        Case::Generic => vec![VectorField::d_x()],
        Case::Power => {
            let rho = c.rho.unwrap_or(0.0);
            vec![
                VectorField::d_x(),
                VectorField::affine(5.0 * n, 0.0, (rho + 1.0) * n, 0.0, rho - 4.0),
            ]
        }
        Case::Exponential => vec![
            VectorField::d_x(),
            VectorField::affine(0.0, 5.0 * n, n, 0.0, 1.0),
        ],
        Case::Constant => vec![
            VectorField::d_x(),
            VectorField::d_t(),
            VectorField::affine(5.0 * n, 0.0, n, 0.0, -4.0),
        ],
    }
}

/// Lie symmetries of the original (α ≠ 0) equation, expressed in the
/// original variables through the gauge time map `T` (Table 2).
pub fn symmetry_basis_original(
    e: &EquationSpec,
    c: &ClassificationResult,
) -> Result<Vec<VectorField>, ClassifyError> {
    if e.alpha_is_zero() {
        // gauge is the identity; but the window may carry a shift κ
        return Ok(symmetry_basis_gauged_shifted(c, e.n));
    }
    let map = c.gauge.map.clone();
    let n = e.n;
    let alpha = e.alpha.clone();

    // helpers built from the gauge map
    let t_over_tp = |kappa: f64| {
        let map = map.clone();
        TimeFn::from_fn(format!("(T+{kappa})/T_t"), move |t| {
            let tj = map.jet(t)?;
            let big_t: crate::series::Series<4> = crate::series::Series {
                c: [tj.c[0] + kappa, tj.c[1], tj.c[2], tj.c[3]],
            };
            let tp = crate::series::Series {
                c: [
                    tj.deriv(1),
                    tj.deriv(2),
                    tj.deriv(3) / 2.0,
                    tj.deriv(4) / 6.0,
                ],
            };
            Ok(big_t.div(&tp))
        })
    };
    let inv_tp = {
        let map = map.clone();
        TimeFn::from_fn("1/T_t", move |t| {
            let tj = map.jet(t)?;
            let tp = crate::series::Series {
                c: [
                    tj.deriv(1),
                    tj.deriv(2),
                    tj.deriv(3) / 2.0,
                    tj.deriv(4) / 6.0,
                ],
            };
            Ok(tp.recip())
        })
    };

    let fields = match c.case {
        Case::Generic => vec![VectorField::d_x()],
        Case::Power => {
            let rho = c.rho.unwrap_or(0.0);
            let kappa = c.kappa;
            let w = t_over_tp(kappa); // (T+κ)/T_t
            let tau = w.scale(5.0 * n);
            let eta = TimeFn::constant(rho - 4.0).sub(&alpha.mul(&w).scale(5.0 * n));
            vec![
                VectorField::d_x(),
                VectorField {
                    tau,
                    xi_x: TimeFn::constant(n * (rho + 1.0)),
                    xi_0: TimeFn::zero(),
                    eta_u: eta,
                    affine: None,
                },
            ]
        }
        Case::Exponential => {
            let m = c.m.unwrap_or(1.0);
            let tau = inv_tp.scale(5.0 * n);
            let eta = TimeFn::constant(m).sub(&alpha.mul(&inv_tp).scale(5.0 * n));
            vec![
                VectorField::d_x(),
                VectorField {
                    tau,
                    xi_x: TimeFn::constant(m * n),
                    xi_0: TimeFn::zero(),
                    eta_u: eta,
                    affine: None,
                },
            ]
        }
        Case::Constant => {
            let w = t_over_tp(0.0); // T/T_t
            let second = VectorField {
                tau: inv_tp.clone(),
                xi_x: TimeFn::zero(),
                xi_0: TimeFn::zero(),
                eta_u: alpha.mul(&inv_tp).scale(-1.0),
                affine: None,
            };
            let third = VectorField {
                tau: w.scale(5.0 * n),
                xi_x: TimeFn::constant(n),
                xi_0: TimeFn::zero(),
                eta_u: TimeFn::constant(-4.0).sub(&alpha.mul(&w).scale(5.0 * n)),
                affine: None,
            };
            vec![VectorField::d_x(), second, third]
        }
    };
    Ok(fields)
}

/// Table 2 with T = t (α already zero): only the κ shift remains.
fn symmetry_basis_gauged_shifted(c: &ClassificationResult, n: f64) -> Vec<VectorField> {
    match c.case {
        Case::Power => {
            let rho = c.rho.unwrap_or(0.0);
            vec![
                VectorField::d_x(),
                VectorField::affine(
                    5.0 * n,
                    5.0 * n * c.kappa,
                    (rho + 1.0) * n,
                    0.0,
                    rho - 4.0,
                ),
            ]
        }
        Case::Exponential => {
            let m = c.m.unwrap_or(1.0);
            vec![
                VectorField::d_x(),
                VectorField::affine(0.0, 5.0 * n, m * n, 0.0, m),
            ]
        }
        _ => symmetry_basis(c, n),
    }
}

/// Verify pointwise that the normalizer really produces the canonical β.
pub fn check_normalized(
    e: &EquationSpec,
    c: &ClassificationResult,
) -> Result<f64, ClassifyError> {
    let canon = apply_equiv(&c.normalizer, e)?;
    let mut worst: f64 = 0.0;
    for t in sample_points(canon.interval, 11) {
        let b = canon.beta.eval(t)?;
        let expected = match c.case {
            Case::Constant => c.epsilon,
            Case::Exponential => c.epsilon * t.exp(),
            Case::Power => c.epsilon * t.powf(c.rho.unwrap_or(0.0)),
            Case::Generic => b,
        };
        worst = worst.max((b - expected).abs() / (1.0 + expected.abs()));
        let a = canon.alpha.eval(t)?;
        worst = worst.max(a.abs());
    }
    Ok(worst)
}
