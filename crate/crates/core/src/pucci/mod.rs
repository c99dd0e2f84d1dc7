//! Generalized Pucci extremal operators and discrete strong residuals.

mod eigen;

use std::fmt;

pub use eigen::{sym_eigenvalues, SymMatrix};

use crate::ellipticity::{sample_ellipticity, EllipticityPair};
use crate::grid::{central_hessian, HessianField, ScalarField};
use crate::{Error, Result};

/// Which one-sided inequality a strong residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    /// `M⁺(D²u) ≥ f` (subsolution).
    PlusGeq,
    /// `M⁻(D²u) ≤ f` (supersolution).
    MinusLeq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::PlusGeq => "plus_geq",
            Sense::MinusLeq => "minus_leq",
        })
    }
}

/// `w_pos·Σ_{e≥0} e + w_neg·Σ_{e<0} e`. A weight only enters when it
/// multiplies a nonzero eigenvalue; `None` if such a weight is not finite.
fn split_sum(eig: &[f64], w_pos: f64, w_neg: f64) -> Option<f64> {
    let mut acc = 0.0;
    for &e in eig {
        if e == 0.0 {
            continue;
        }
        let w = if e > 0.0 { w_pos } else { w_neg };
        if !w.is_finite() {
            return None;
        }
        acc += w * e;
    }
    Some(acc)
}

/// `M⁺(M) = Λ Σ_{e≥0} e + λ Σ_{e<0} e` for finite `λ ≤ Λ`.
pub fn m_plus(m: &SymMatrix, lambda: f64, big_lambda: f64) -> f64 {
    m_plus_eig(&m.eigenvalues()[..m.dim()], lambda, big_lambda)
}

/// `M⁻(M) = λ Σ_{e≥0} e + Λ Σ_{e<0} e` for finite `λ ≤ Λ`.
pub fn m_minus(m: &SymMatrix, lambda: f64, big_lambda: f64) -> f64 {
    m_minus_eig(&m.eigenvalues()[..m.dim()], lambda, big_lambda)
}

pub fn m_plus_eig(eig: &[f64], lambda: f64, big_lambda: f64) -> f64 {
    split_sum(eig, big_lambda, lambda).unwrap_or(f64::NAN)
}

pub fn m_minus_eig(eig: &[f64], lambda: f64, big_lambda: f64) -> f64 {
    split_sum(eig, lambda, big_lambda).unwrap_or(f64::NAN)
}

fn pucci_field(pair: &EllipticityPair, h: &HessianField, plus: bool) -> Result<ScalarField> {
    let grid = h.grid().clone();
    let samples = sample_ellipticity(pair, &grid)?;
    let mut out = vec![0.0; grid.len()];
    for (node, entry) in h.entries().iter().enumerate() {
        let Some(entry) = entry else { continue };
        let lam = samples.lambda.value(node);
        let big = samples.big_lambda.value(node);
        let v = if plus {
            split_sum(entry.eigen(), big, lam)
        } else {
            split_sum(entry.eigen(), lam, big)
        };
        out[node] = v.ok_or(Error::NonFiniteEllipticity { node })?;
    }
    ScalarField::new(grid, out)
}

/// `M⁺(D²u)` at interior nodes; boundary nodes carry 0.
pub fn pucci_plus(pair: &EllipticityPair, h: &HessianField) -> Result<ScalarField> {
    pucci_field(pair, h, true)
}

/// `M⁻(D²u)` at interior nodes; boundary nodes carry 0.
pub fn pucci_minus(pair: &EllipticityPair, h: &HessianField) -> Result<ScalarField> {
    pucci_field(pair, h, false)
}

/// Discrete check of a one-sided Pucci inequality almost everywhere.
#[derive(Debug, Clone)]
pub struct PucciResidual {
    pub sense: Sense,
    /// `M⁺(D²u) − f` or `f − M⁻(D²u)`; nonnegative means satisfied.
    /// Boundary nodes carry 0; interior nodes where the ellipticity is not
    /// finite carry `-∞` and count as violating.
    pub residual: ScalarField,
    /// Interior nodes whose residual is below minus the node tolerance.
    pub violating: Vec<bool>,
    /// Violating fraction of interior nodes.
    pub violation_fraction: f64,
    pub violating_volume: f64,
    /// `4h·|∂Ω|`: the largest violating volume still read as "a.e.".
    pub allowed_volume: f64,
    /// Largest amount by which a node undershoots zero (0 if none).
    pub max_violation: f64,
    pub satisfied: bool,
}

/// Per-node tolerance `10h²(1 + |f| + Λ‖D²u‖)`.
pub fn node_tolerance(h: f64, f: f64, big_lambda: f64, hess_norm: f64) -> f64 {
    10.0 * h * h * (1.0 + f.abs() + big_lambda * hess_norm)
}

pub fn strong_residual(
    u: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
    sense: Sense,
) -> Result<PucciResidual> {
    u.check_same_grid(f)?;
    let hess = central_hessian(u)?;
    strong_residual_from_hessian(&hess, pair, f, sense)
}

pub fn strong_residual_from_hessian(
    hess: &HessianField,
    pair: &EllipticityPair,
    f: &ScalarField,
    sense: Sense,
) -> Result<PucciResidual> {
    let grid = hess.grid().clone();
    if !grid.same_as(f.grid()) {
        return Err(Error::GridMismatch("Hessian and right-hand side".into()));
    }
    let samples = sample_ellipticity(pair, &grid)?;
    let h = grid.spacing();
    let mut residual = vec![0.0; grid.len()];
    let mut violating = vec![false; grid.len()];
    let mut max_violation: f64 = 0.0;
    for (node, entry) in hess.entries().iter().enumerate() {
        let Some(entry) = entry else { continue };
        let lam = samples.lambda.value(node);
        let big = samples.big_lambda.value(node);
        let fv = f.value(node);
        let value = match sense {
            Sense::PlusGeq => split_sum(entry.eigen(), big, lam).map(|m| m - fv),
            Sense::MinusLeq => split_sum(entry.eigen(), lam, big).map(|m| fv - m),
        };
        match value {
            Some(r) => {
                residual[node] = r;
                let tol =
                    node_tolerance(h, fv, if big.is_finite() { big } else { 0.0 }, entry.norm());
                if r < -tol {
                    violating[node] = true;
                    max_violation = max_violation.max(-r);
                }
            }
            None => {
                residual[node] = f64::NEG_INFINITY;
                violating[node] = true;
                max_violation = f64::INFINITY;
            }
        }
    }
    let count = violating.iter().filter(|v| **v).count();
    let interior = grid.interior_count().max(1);
    let violating_volume = count as f64 * grid.cell_volume();
    let allowed_volume = 4.0 * h * grid.surface_area();
    Ok(PucciResidual {
        sense,
        residual: ScalarField::extended(grid, residual)?,
        violating,
        violation_fraction: count as f64 / interior as f64,
        violating_volume,
        allowed_volume,
        max_violation,
        satisfied: violating_volume <= allowed_volume,
    })
}
