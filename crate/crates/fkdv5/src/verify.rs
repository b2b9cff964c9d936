//! Residual verification of candidate solutions and symmetry checks.
//!
//! Nothing is trusted: every solution produced elsewhere in the crate is
//! accepted only after its PDE residual is evaluated on a grid. The relative
//! residual at a point divides by `1 + max |term|` so that it is meaningful
//! both for small and large solution values.

use thiserror::Error;

use crate::classify::AffineGenerator;
use crate::expr::EvalError;
use crate::gauge::EquationSpec;
use crate::reduce::{real_pow, FieldDerivs, SolutionField};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("grid must have at least 2x2 points, got {0}x{1}")]
    DegenerateGrid(usize, usize),
    #[error("finite-difference grid too small: need ≥ 7 x-nodes and ≥ 3 t-nodes")]
    StencilTooSmall,
    #[error("non-uniform grid spacing at index {0}")]
    NonUniformGrid(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
    pub nt: usize,
    pub nx: usize,
}

impl GridSpec {
    pub fn new(t_range: (f64, f64), x_range: (f64, f64), nt: usize, nx: usize) -> Self {
        GridSpec {
            t_range,
            x_range,
            nt,
            nx,
        }
    }
}

/// Grid residual summary; `points` holds `(t, x, u, relative residual)` rows.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub max_rel: f64,
    pub mean_rel: f64,
    pub worst: (f64, f64),
    pub nt: usize,
    pub nx: usize,
    pub points: Vec<(f64, f64, f64, f64)>,
}

fn relative_residual(e: &EquationSpec, t: f64, fd: &FieldDerivs) -> Result<f64, EvalError> {
    let alpha = e.alpha.eval(t)?;
    let beta = e.beta.eval(t)?;
    let terms = [
        fd.u_t,
        real_pow(fd.u, e.n) * fd.u_x[0],
        alpha * fd.u,
        beta * fd.u_x[4],
    ];
    let residual: f64 = terms.iter().sum();
    let denom = 1.0 + terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(residual.abs() / denom)
}

/// Evaluate the PDE residual of `field` against `e` on the grid.
pub fn pde_residual(
    e: &EquationSpec,
    field: &SolutionField,
    grid: &GridSpec,
) -> Result<ResidualReport, VerifyError> {
    if grid.nt < 2 || grid.nx < 2 {
        return Err(VerifyError::DegenerateGrid(grid.nt, grid.nx));
    }
    let mut points = Vec::with_capacity(grid.nt * grid.nx);
    let mut max_rel: f64 = 0.0;
    let mut sum = 0.0;
    let mut worst = (grid.t_range.0, grid.x_range.0);
    for i in 0..grid.nt {
        let t = grid.t_range.0
            + (grid.t_range.1 - grid.t_range.0) * i as f64 / (grid.nt - 1) as f64;
        for j in 0..grid.nx {
            let x = grid.x_range.0
                + (grid.x_range.1 - grid.x_range.0) * j as f64 / (grid.nx - 1) as f64;
            let fd = field.eval(t, x)?;
            let rel = relative_residual(e, t, &fd)?;
            if rel > max_rel {
                max_rel = rel;
                worst = (t, x);
            }
            sum += rel;
            points.push((t, x, fd.u, rel));
        }
    }
    Ok(ResidualReport {
        max_rel,
        mean_rel: sum / points.len() as f64,
        worst,
        nt: grid.nt,
        nx: grid.nx,
        points,
    })
}

/// Residual of tabulated data `u[i][j] = u(ts[i], xs[j])` via central
/// differences (7-point stencil for the fifth derivative). Only interior
/// points enter the report; both axes must be uniformly spaced.
pub fn fd_residual(
    e: &EquationSpec,
    ts: &[f64],
    xs: &[f64],
    u: &[Vec<f64>],
) -> Result<ResidualReport, VerifyError> {
    let (nt, nx) = (ts.len(), xs.len());
    if nx < 7 || nt < 3 {
        return Err(VerifyError::StencilTooSmall);
    }
    let ht = ts[1] - ts[0];
    let hx = xs[1] - xs[0];
    for i in 1..nt {
        if ((ts[i] - ts[i - 1]) - ht).abs() > 1e-9 * (1.0 + ht.abs()) {
            return Err(VerifyError::NonUniformGrid(i));
        }
    }
    for j in 1..nx {
        if ((xs[j] - xs[j - 1]) - hx).abs() > 1e-9 * (1.0 + hx.abs()) {
            return Err(VerifyError::NonUniformGrid(j));
        }
    }

    let mut points = Vec::new();
    let mut max_rel: f64 = 0.0;
    let mut sum = 0.0;
    let mut worst = (ts[0], xs[0]);
    for i in 1..nt - 1 {
        for j in 3..nx - 3 {
            let u_t = (u[i + 1][j] - u[i - 1][j]) / (2.0 * ht);
            let u_x = (u[i][j + 1] - u[i][j - 1]) / (2.0 * hx);
            let u5 = (-0.5 * u[i][j - 3] + 2.0 * u[i][j - 2] - 2.5 * u[i][j - 1]
                + 2.5 * u[i][j + 1]
                - 2.0 * u[i][j + 2]
                + 0.5 * u[i][j + 3])
                / hx.powi(5);
            let fd = FieldDerivs {
                u: u[i][j],
                u_t,
                u_x: [u_x, 0.0, 0.0, 0.0, u5],
            };
            let rel = relative_residual(e, ts[i], &fd)?;
            if rel > max_rel {
                max_rel = rel;
                worst = (ts[i], xs[j]);
            }
            sum += rel;
            points.push((ts[i], xs[j], u[i][j], rel));
        }
    }
    if points.is_empty() {
        return Err(VerifyError::StencilTooSmall);
    }
    Ok(ResidualReport {
        max_rel,
        mean_rel: sum / points.len() as f64,
        worst,
        nt: nt - 2,
        nx: nx - 6,
        points,
    })
}

// ---------------------------------------------------------------------------
// Symmetry flows
// ---------------------------------------------------------------------------

/// One coordinate of the flow of `(a z + b)∂_z` after parameter `s`.
fn flow1d(a: f64, b: f64, s: f64, z: f64) -> f64 {
    if a == 0.0 {
        z + b * s
    } else {
        let e = (a * s).exp();
        e * z + b * (e - 1.0) / a
    }
}

/// Push a solution along the one-parameter group of an affine generator:
/// if `u` solves the equation and the generator is a symmetry, so does the
/// returned field.
pub fn flow_transform(field: &SolutionField, gen: &AffineGenerator, s: f64) -> SolutionField {
    let g = *gen;
    let inner = field.clone();
    // forward images of the domain corners
    let t_dom = {
        let a = flow1d(g.t_lin, g.t_const, s, field.t_domain.0);
        let b = flow1d(g.t_lin, g.t_const, s, field.t_domain.1);
        (a.min(b), a.max(b))
    };
    let x_dom = {
        let a = flow1d(g.x_lin, g.x_const, s, field.x_domain.0);
        let b = flow1d(g.x_lin, g.x_const, s, field.x_domain.1);
        (a.min(b), a.max(b))
    };
    let eu = (g.u_lin * s).exp();
    let et = (-g.t_lin * s).exp();
    let ex = (-g.x_lin * s).exp();
    SolutionField::new(
        format!("flow[s={s}]({})", field.label),
        field.n,
        t_dom,
        x_dom,
        move |t, x| {
            // pull the point back along the flow
            let t0 = flow1d(g.t_lin, g.t_const, -s, t);
            let x0 = flow1d(g.x_lin, g.x_const, -s, x);
            let fd = inner.eval(t0, x0)?;
            let mut u_x = [0.0; 5];
            let mut scale = eu;
            for k in 0..5 {
                scale *= ex;
                u_x[k] = scale * fd.u_x[k];
            }
            Ok(FieldDerivs {
                u: eu * fd.u,
                u_t: eu * et * fd.u_t,
                u_x,
            })
        },
    )
}

/// Flow a solution by `s` along `gen` and measure the residual of the result
/// against `e` on the image of `grid` under the same flow.
pub fn symmetry_check(
    e: &EquationSpec,
    field: &SolutionField,
    gen: &AffineGenerator,
    s: f64,
    grid: &GridSpec,
) -> Result<ResidualReport, VerifyError> {
    let moved = flow_transform(field, gen, s);
    let map = |r: (f64, f64), a: f64, b: f64| {
        let lo = flow1d(a, b, s, r.0);
        let hi = flow1d(a, b, s, r.1);
        (lo.min(hi), lo.max(hi))
    };
    let moved_grid = GridSpec {
        t_range: map(grid.t_range, gen.t_lin, gen.t_const),
        x_range: map(grid.x_range, gen.x_lin, gen.x_const),
        nt: grid.nt,
        nx: grid.nx,
    };
    pde_residual(e, &moved, &moved_grid)
}
