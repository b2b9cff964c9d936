//! Lie brackets, structure constants, and abstract algebra identification
//! for the symmetry algebras produced by classification.
//!
//! All generators in this class have the ansatz shape
//! `τ(t)∂_t + (ξ¹(t)x + ξ⁰(t))∂_x + η¹(t)u∂_u`, which is closed under the
//! commutator; the bracket works coefficient-wise on the four scalar fields.

use thiserror::Error;

use crate::classify::{Case, ClassificationResult, VectorField};
use crate::expr::EvalError;
use crate::gauge::sample_points;
use crate::timefn::TimeFn;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("singular system while expanding a bracket in the basis")]
    SingularExpansion,
    #[error("bracket does not close on the basis (residual {0:.3e})")]
    NotClosed(f64),
    #[error("unknown subalgebra name {0:?}")]
    UnknownSubalgebra(String),
    #[error("subalgebra {0} requires parameter {1}")]
    MissingParameter(String, &'static str),
    #[error("subalgebra {name} is not admitted in case {case}")]
    WrongCase { name: String, case: Case },
}

/// Commutator `[v, w]` of two fields of the ansatz shape.
pub fn bracket(v: &VectorField, w: &VectorField) -> VectorField {
    if let (Some(a), Some(b)) = (v.affine, w.affine) {
        // exact for affine data: τ linear in t, ξ¹/ξ⁰/η constant
        return VectorField::affine(
            0.0,
            a.t_const * b.t_lin - b.t_const * a.t_lin,
            0.0,
            a.x_const * b.x_lin - b.x_const * a.x_lin,
            0.0,
        );
    }
    let d = |f: &TimeFn| f.derivative();
    let tau = v.tau.mul(&d(&w.tau)).sub(&w.tau.mul(&d(&v.tau)));
    let xi_x = v.tau.mul(&d(&w.xi_x)).sub(&w.tau.mul(&d(&v.xi_x)));
    let xi_0 = v
        .tau
        .mul(&d(&w.xi_0))
        .add(&v.xi_0.mul(&w.xi_x))
        .sub(&w.tau.mul(&d(&v.xi_0)))
        .sub(&w.xi_0.mul(&v.xi_x));
    let eta_u = v.tau.mul(&d(&w.eta_u)).sub(&w.tau.mul(&d(&v.eta_u)));
    VectorField {
        tau,
        xi_x,
        xi_0,
        eta_u,
        affine: None,
    }
}

/// Component samples of a field at time nodes: `(τ, ξ¹, ξ⁰, η¹)` per node.
fn component_rows(v: &VectorField, nodes: &[f64]) -> Result<Vec<f64>, AlgebraError> {
    let mut rows = Vec::with_capacity(4 * nodes.len());
    for &t in nodes {
        rows.push(v.tau.eval(t)?);
        rows.push(v.xi_x.eval(t)?);
        rows.push(v.xi_0.eval(t)?);
        rows.push(v.eta_u.eval(t)?);
    }
    Ok(rows)
}

/// Expand `target` in the span of `basis` by least squares over time samples.
/// Returns the coefficients and the max-abs residual of the expansion.
pub fn expand_in_basis(
    target: &VectorField,
    basis: &[VectorField],
    interval: (f64, f64),
) -> Result<(Vec<f64>, f64), AlgebraError> {
    let nodes = sample_points(interval, 7);
    let k = basis.len();
    let cols: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| component_rows(b, &nodes))
        .collect::<Result<_, _>>()?;
    let rhs = component_rows(target, &nodes)?;
    let m = rhs.len();

    // normal equations (k ≤ 3 in practice)
    let mut ata = vec![vec![0.0; k]; k];
    let mut atb = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            ata[i][j] = (0..m).map(|r| cols[i][r] * cols[j][r]).sum();
        }
        atb[i] = (0..m).map(|r| cols[i][r] * rhs[r]).sum();
    }
    let coeffs = solve_dense(&mut ata, &mut atb).ok_or(AlgebraError::SingularExpansion)?;

    let mut residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for r in 0..m {
        let fit: f64 = (0..k).map(|i| coeffs[i] * cols[i][r]).sum();
        residual = residual.max((rhs[r] - fit).abs());
        scale = scale.max(rhs[r].abs());
    }
    Ok((coeffs, residual / (1.0 + scale)))
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in (row + 1)..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Structure constants `c[i][j][k]` with `[e_i, e_j] = Σ_k c[i][j][k] e_k`.
#[derive(Clone, Debug)]
pub struct StructureConstants {
    pub c: Vec<Vec<Vec<f64>>>,
    /// worst expansion residual over all brackets
    pub closure_residual: f64,
}

pub fn structure_constants(
    basis: &[VectorField],
    interval: (f64, f64),
) -> Result<StructureConstants, AlgebraError> {
    let k = basis.len();
    let mut c = vec![vec![vec![0.0; k]; k]; k];
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let br = bracket(&basis[i], &basis[j]);
            let (coeffs, res) = expand_in_basis(&br, basis, interval)?;
            worst = worst.max(res);
            c[i][j] = coeffs;
        }
    }
    if worst > 1e-6 {
        return Err(AlgebraError::NotClosed(worst));
    }
    Ok(StructureConstants {
        c,
        closure_residual: worst,
    })
}

impl StructureConstants {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// max |c_{ij}^k + c_{ji}^k|
    pub fn antisymmetry_defect(&self) -> f64 {
        let k = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    worst = worst.max((self.c[i][j][l] + self.c[j][i][l]).abs());
                }
            }
        }
        worst
    }

    /// max over (i,j,l,m) of |Σ_k (c_{ij}^k c_{kl}^m + c_{jl}^k c_{ki}^m + c_{li}^k c_{kj}^m)|
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        let mut s = 0.0;
                        for k in 0..n {
                            s += self.c[i][j][k] * self.c[k][l][m]
                                + self.c[j][l][k] * self.c[k][i][m]
                                + self.c[l][i][k] * self.c[k][j][m];
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Abstract isomorphism type of the low-dimensional algebras arising here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlgebraType {
    /// one-dimensional
    A1,
    /// two-dimensional abelian
    TwoA1,
    /// two-dimensional non-abelian
    A2,
    /// solvable `A_{3.5}^a`: `[e₁,e₂]=0, [e₁,e₃]=a e₁, [e₂,e₃]=e₂`, 0<|a|<1
    A35 { a: f64 },
}

impl std::fmt::Display for AlgebraType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlgebraType::A1 => write!(f, "A1"),
            AlgebraType::TwoA1 => write!(f, "2A1"),
            AlgebraType::A2 => write!(f, "A2"),
            AlgebraType::A35 { a } => write!(f, "A3.5^{a}"),
        }
    }
}

pub fn identify_algebra(
    basis: &[VectorField],
    interval: (f64, f64),
) -> Result<AlgebraType, AlgebraError> {
    let sc = structure_constants(basis, interval)?;
    match basis.len() {
        1 => Ok(AlgebraType::A1),
        2 => {
            let norm: f64 = sc.c[0][1].iter().map(|v| v.abs()).fold(0.0, f64::max);
            if norm < 1e-9 {
                Ok(AlgebraType::TwoA1)
            } else {
                Ok(AlgebraType::A2)
            }
        }
        3 => {
            // expected pattern (basis order e₁=∂x, e₂=∂t, e₃=scaling):
            // [e₁,e₂]=0, [e₁,e₃]=λ₁e₁, [e₂,e₃]=λ₂e₂; rescaling e₃ by 1/λ₂
            // puts it in A_{3.5} form with a = λ₁/λ₂
            let l1 = sc.c[0][2][0];
            let l2 = sc.c[1][2][1];
            if l2.abs() < 1e-9 {
                return Err(AlgebraError::NotClosed(l2.abs()));
            }
            Ok(AlgebraType::A35 { a: l1 / l2 })
        }
        d => Err(AlgebraError::NotClosed(d as f64)),
    }
}

// ---------------------------------------------------------------------------
// Optimal systems of subalgebras (canonical variables)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Subalgebra {
    pub name: String,
    pub generators: Vec<VectorField>,
    /// description of the free parameter, when the family has one
    pub parameter: Option<&'static str>,
}

/// Names of the one-dimensional optimal-system representatives admitted by
/// the classified case (parameters left symbolic in the names).
pub fn optimal_system(c: &ClassificationResult) -> Vec<String> {
    let mut names = vec!["g0".to_string()];
    match c.case {
        Case::Generic => {}
        Case::Power => {
            let rho = c.rho.unwrap_or(0.0);
            if (rho + 1.0).abs() < 1e-9 {
                names.push("g2.2:a".to_string());
            } else {
                names.push("g2.1".to_string());
            }
        }
        Case::Exponential => names.push("g3".to_string()),
        Case::Constant => {
            for s in ["g4.1:-1", "g4.1:0", "g4.1:1"] {
                names.push(s.to_string());
            }
            names.push("g4.2".to_string());
        }
    }
    names
}

/// Construct a named subalgebra in canonical variables.
///
/// Names: `g0` = ⟨∂ₓ⟩ (any case); `g2.1` = scaling of the power case,
/// `g2.2` (param `a`) = ⟨nt∂_t + a∂ₓ − u∂ᵤ⟩ for ρ = −1; `g3` = the
/// exponential-case generator; `g4.1` (param σ ∈ {−1,0,1}) = ⟨∂_t + σ∂ₓ⟩,
/// `g4.2` = the constant-case scaling, `g4.12` = the two-dimensional
/// ⟨∂_t, 5nt∂_t + nx∂ₓ − 4u∂ᵤ⟩.
pub fn subalgebra(
    c: &ClassificationResult,
    name: &str,
    param: Option<f64>,
) -> Result<Subalgebra, AlgebraError> {
    let n = c.n;
    let wrong = |name: &str| AlgebraError::WrongCase {
        name: name.to_string(),
        case: c.case,
    };
    let sub = match name {
        "g0" => Subalgebra {
            name: "g0".into(),
            generators: vec![VectorField::d_x()],
            parameter: None,
        },
        "g2.1" => {
            if c.case != Case::Power {
                return Err(wrong(name));
            }
            let rho = c.rho.unwrap_or(0.0);
            Subalgebra {
                name: "g2.1".into(),
                generators: vec![VectorField::affine(
                    5.0 * n,
                    0.0,
                    (rho + 1.0) * n,
                    0.0,
                    rho - 4.0,
                )],
                parameter: None,
            }
        }
        "g2.2" => {
            if c.case != Case::Power || (c.rho.unwrap_or(0.0) + 1.0).abs() > 1e-9 {
                return Err(wrong(name));
            }
            let a = param.ok_or(AlgebraError::MissingParameter("g2.2".into(), "a"))?;
            Subalgebra {
                name: format!("g2.2:{a}"),
                generators: vec![VectorField::affine(n, 0.0, 0.0, a, -1.0)],
                parameter: Some("a"),
            }
        }
        "g3" => {
            if c.case != Case::Exponential {
                return Err(wrong(name));
            }
            Subalgebra {
                name: "g3".into(),
                generators: vec![VectorField::affine(0.0, 5.0 * n, n, 0.0, 1.0)],
                parameter: None,
            }
        }
        "g4.1" => {
            if c.case != Case::Constant {
                return Err(wrong(name));
            }
            let sigma = param.ok_or(AlgebraError::MissingParameter("g4.1".into(), "sigma"))?;
            Subalgebra {
                name: format!("g4.1:{sigma}"),
                generators: vec![VectorField::affine(0.0, 1.0, 0.0, sigma, 0.0)],
                parameter: Some("sigma"),
            }
        }
        "g4.2" => {
            if c.case != Case::Constant {
                return Err(wrong(name));
            }
            Subalgebra {
                name: "g4.2".into(),
                generators: vec![VectorField::affine(5.0 * n, 0.0, n, 0.0, -4.0)],
                parameter: None,
            }
        }
        "g4.12" => {
            if c.case != Case::Constant {
                return Err(wrong(name));
            }
            Subalgebra {
                name: "g4.12".into(),
                generators: vec![
                    VectorField::d_t(),
                    VectorField::affine(5.0 * n, 0.0, n, 0.0, -4.0),
                ],
                parameter: None,
            }
        }
        other => return Err(AlgebraError::UnknownSubalgebra(other.to_string())),
    };
    Ok(sub)
}
