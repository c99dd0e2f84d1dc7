//! Diagonal non-divergence Dirichlet solver, manufactured right-hand sides,
//! and the comparison check for Pucci sub/supersolutions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::closed_form::ClosedForm;
use crate::ellipticity::EllipticityPair;
use crate::grid::{central_hessian, Grid, ScalarField, Shape};
use crate::pucci::{m_minus, m_plus, pucci_plus, strong_residual, Sense};
use crate::{Error, Result};

/// Coefficient catalog for `Σ aᵢ(x) ∂ᵢᵢ u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Const(f64),
    /// `scale·|x_axis|^exponent`.
    AbsPow {
        axis: usize,
        exponent: f64,
        scale: f64,
    },
}

impl Coefficient {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Coefficient::Const(c) => c,
            Coefficient::AbsPow {
                axis,
                exponent,
                scale,
            } => scale * x[axis].abs().powf(exponent),
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Const(c) => write!(f, "{c}"),
            Coefficient::AbsPow {
                axis,
                exponent,
                scale,
            } => write!(f, "{scale}*|x{axis}|^{exponent}"),
        }
    }
}

impl FromStr for Coefficient {
    type Err = Error;

    /// `<number>` or `<scale>*|x<axis>|^<exponent>`; the scale may be
    /// omitted.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(c) = s.parse::<f64>() {
            return Ok(Coefficient::Const(c));
        }
        let bad = || Error::Parse(format!("bad coefficient `{s}`"));
        let (scale, rest) = match s.split_once('*') {
            Some((a, b)) => (a.trim().parse::<f64>().map_err(|_| bad())?, b.trim()),
            None => (1.0, s),
        };
        let rest = rest.strip_prefix("|x").ok_or_else(bad)?;
        let (axis, rest) = rest.split_once('|').ok_or_else(bad)?;
        let axis: usize = axis.parse().map_err(|_| bad())?;
        let exponent = match rest.strip_prefix('^') {
            Some(e) => e.parse::<f64>().map_err(|_| bad())?,
            None if rest.is_empty() => 1.0,
            None => return Err(bad()),
        };
        Ok(Coefficient::AbsPow {
            axis,
            exponent,
            scale,
        })
    }
}

/// `Σ aᵢ δ²ᵢ u = f` in the interior, `u = g` on boundary nodes.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub grid: Arc<Grid>,
    pub coefficients: Vec<ScalarField>,
    pub rhs: ScalarField,
    pub boundary: ScalarField,
}

impl LinearProblem {
    pub fn new(
        grid: Arc<Grid>,
        coefficients: Vec<ScalarField>,
        rhs: ScalarField,
        boundary: ScalarField,
    ) -> Result<Self> {
        if coefficients.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: coefficients.len(),
            });
        }
        for c in coefficients.iter().chain([&rhs, &boundary]) {
            if !grid.same_as(c.grid()) {
                return Err(Error::GridMismatch(
                    "problem fields live on different grids".into(),
                ));
            }
        }
        if let Some(bad) = coefficients
            .iter()
            .flat_map(|c| c.values())
            .find(|v| !(**v >= 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "coefficients must be nonnegative, found {bad}"
            )));
        }
        Ok(LinearProblem {
            grid,
            coefficients,
            rhs,
            boundary,
        })
    }

    /// Builds the problem from catalog coefficients and closed forms.
    pub fn from_catalog(
        grid: &Arc<Grid>,
        coefficients: &[Coefficient],
        rhs: &ScalarField,
        boundary: ClosedForm,
    ) -> Result<Self> {
        let fields = coefficients
            .iter()
            .map(|c| {
                let c = *c;
                ScalarField::from_fn(grid.clone(), move |x| c.value(x))
            })
            .collect();
        LinearProblem::new(grid.clone(), fields, rhs.clone(), boundary.sample(grid))
    }

    /// `Σ aᵢ δ²ᵢ u − f` at interior nodes, 0 on the boundary.
    pub fn residual(&self, u: &ScalarField) -> Result<ScalarField> {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        for node in 0..g.len() {
            if g.is_interior(node) {
                out[node] = self.apply(u.values(), node)? - self.rhs.value(node);
            }
        }
        ScalarField::new(g.clone(), out)
    }

    fn neighbors(&self, node: usize, axis: usize) -> Result<(usize, usize)> {
        let mut off = [0i64; 3];
        off[axis] = 1;
        let plus = self
            .grid
            .neighbor(node, &off)
            .ok_or(Error::MissingNeighbor {
                node,
                offset: off.to_vec(),
            })?;
        off[axis] = -1;
        let minus = self
            .grid
            .neighbor(node, &off)
            .ok_or(Error::MissingNeighbor {
                node,
                offset: off.to_vec(),
            })?;
        Ok((plus, minus))
    }

    fn apply(&self, u: &[f64], node: usize) -> Result<f64> {
        let h2 = self.grid.spacing().powi(2);
        let mut acc = 0.0;
        for axis in 0..self.grid.dim() {
            let a = self.coefficients[axis].value(node);
            if a != 0.0 {
                let (p, m) = self.neighbors(node, axis)?;
                acc += a * (u[p] - 2.0 * u[node] + u[m]) / h2;
            }
        }
        Ok(acc)
    }
}

/// Solver statistics alongside the solution.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub u: ScalarField,
    pub sweeps: usize,
    pub residual: f64,
    pub omega: f64,
}

fn diameter(grid: &Grid) -> f64 {
    match grid.shape() {
        Shape::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).fold(0.0, f64::max),
        Shape::Ball { radius } => 2.0 * radius,
    }
}

/// Successive over-relaxation with lexicographic sweeps. Converged when the
/// interior residual is at most `tol·(1 + ‖f‖∞)`, or at most the rounding
/// floor `16 ε · max diag · (1 + ‖u‖∞) / h²` of the stencil when that is
/// larger.
pub fn solve_linear_dirichlet(
    prob: &LinearProblem,
    tol: f64,
    max_sweeps: usize,
) -> Result<LinearSolution> {
    let g = &prob.grid;
    let n = g.dim();
    let h = g.spacing();
    let h2 = h * h;
    let fscale = 1.0 + prob.rhs.sup_norm();
    let target = tol * fscale;

    struct Row {
        node: usize,
        nbrs: [(usize, usize); 3],
        weights: [f64; 3],
        diag: f64,
        rhs: f64,
    }
    let mut rows = Vec::new();
    for node in (0..g.len()).filter(|&k| g.is_interior(k)) {
        let mut nbrs = [(0, 0); 3];
        let mut weights = [0.0; 3];
        let mut diag = 0.0;
        for axis in 0..n {
            nbrs[axis] = prob.neighbors(node, axis)?;
            weights[axis] = prob.coefficients[axis].value(node);
            diag += 2.0 * weights[axis];
        }
        let f = prob.rhs.value(node);
        if diag == 0.0 && f.abs() > 1e-14 * fscale {
            return Err(Error::InfeasibleNode { node, rhs: f });
        }
        rows.push(Row {
            node,
            nbrs,
            weights,
            diag,
            rhs: f,
        });
    }

    let mut u: Vec<f64> = (0..g.len())
        .map(|k| {
            if g.is_interior(k) {
                0.0
            } else {
                prob.boundary.value(k)
            }
        })
        .collect();
    let omega_opt = 2.0 / (1.0 + (std::f64::consts::PI * h / diameter(g)).sin());
    let mut omega = omega_opt;
    let residual_of = |u: &[f64]| -> f64 {
        rows.iter()
            .filter(|r| r.diag > 0.0)
            .map(|r| {
                let mut acc = -r.diag * u[r.node];
                for axis in 0..n {
                    let (p, m) = r.nbrs[axis];
                    acc += r.weights[axis] * (u[p] + u[m]);
                }
                (acc / h2 - r.rhs).abs()
            })
            .fold(0.0, f64::max)
    };
    let max_diag = rows.iter().map(|r| r.diag).fold(0.0, f64::max);
    let target_for = |u: &[f64]| -> f64 {
        let unorm = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        target.max(16.0 * f64::EPSILON * max_diag * (1.0 + unorm) / h2)
    };
    let mut best = f64::INFINITY;
    let mut residual = residual_of(&u);
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        if residual <= target_for(&u) {
            break;
        }
        for r in &rows {
            let gs = if r.diag > 0.0 {
                let mut acc = -h2 * r.rhs;
                for axis in 0..n {
                    let (p, m) = r.nbrs[axis];
                    acc += r.weights[axis] * (u[p] + u[m]);
                }
                acc / r.diag
            } else {
                // Degenerate node: the equation reads 0 = f; keep the system
                // nonsingular with the neighbour average.
                let mut acc = 0.0;
                for axis in 0..n {
                    let (p, m) = r.nbrs[axis];
                    acc += u[p] + u[m];
                }
                acc / (2 * n) as f64
            };
            u[r.node] += omega * (gs - u[r.node]);
        }
        sweeps += 1;
        if sweeps % 10 == 0 || sweeps == max_sweeps {
            residual = residual_of(&u);
            if !residual.is_finite() || residual > 1e3 * best {
                // Over-relaxation is not guaranteed for nonsymmetric
                // operators; fall back to plain Gauss–Seidel.
                if omega == 1.0 {
                    break;
                }
                omega = 1.0;
            }
            best = best.min(residual);
        }
    }
    residual = residual_of(&u);
    if !(residual <= target_for(&u)) {
        return Err(Error::NoConvergence { sweeps, residual });
    }
    Ok(LinearSolution {
        u: ScalarField::new(g.clone(), u)?,
        sweeps,
        residual,
        omega,
    })
}

/// `f = Σ aᵢ ∂ᵢᵢ u` from the analytic Hessian.
pub fn manufactured_rhs_linear(
    u: ClosedForm,
    coefficients: &[Coefficient],
    grid: &Arc<Grid>,
) -> Result<ScalarField> {
    let n = grid.dim();
    if coefficients.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: coefficients.len(),
        });
    }
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let x = &grid.coords(k)[..n];
        let hess = u.hessian_or_err(x)?;
        out.push(
            (0..n)
                .map(|i| coefficients[i].value(x) * hess.get(i, i))
                .sum(),
        );
    }
    ScalarField::new(grid.clone(), out)
}

/// `f = M⁺(D²u)` (`Sense::PlusGeq`) or `M⁻(D²u)` (`Sense::MinusLeq`) from
/// the analytic Hessian.
pub fn manufactured_rhs_pucci(
    u: ClosedForm,
    pair: &EllipticityPair,
    sense: Sense,
    grid: &Arc<Grid>,
) -> Result<ScalarField> {
    let n = grid.dim();
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let x = &grid.coords(k)[..n];
        let hess = u.hessian_or_err(x)?;
        let (l, b) = (pair.lambda(x), pair.big_lambda(x));
        let v = match sense {
            Sense::PlusGeq => m_plus(&hess, l, b),
            Sense::MinusLeq => m_minus(&hess, l, b),
        };
        if !v.is_finite() {
            return Err(Error::NonFiniteEllipticity { node: k });
        }
        out.push(v);
    }
    ScalarField::new(grid.clone(), out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonVerdict {
    Holds,
    /// `u > v + tol` at some interior node although the hypotheses hold.
    ConclusionFailure,
    HypothesisFailure(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOutcome {
    pub verdict: ComparisonVerdict,
    /// Node maximizing `u − v`, and that maximum.
    pub worst_node: usize,
    pub worst_gap: f64,
    pub tol: f64,
}

/// Comparison for `F = M⁺`: `u` must satisfy `M⁺(D²u) ≥ f`, `v` must satisfy
/// `M⁺(D²v) ≤ f`, and `u ≤ v + tol` on the boundary; the conclusion is
/// `u ≤ v + 10h²(1 + ‖f‖∞)` everywhere.
pub fn comparison_check(
    u: &ScalarField,
    v: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
) -> Result<ComparisonOutcome> {
    u.check_same_grid(v)?;
    u.check_same_grid(f)?;
    let grid = u.grid().clone();
    let h = grid.spacing();
    let tol = 10.0 * h * h * (1.0 + f.sup_norm());
    let gap = v.zip_with(u, |b, a| a - b)?;
    let (worst_node, worst_gap) =
        gap.values()
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, d)| {
                if *d > acc.1 {
                    (k, *d)
                } else {
                    acc
                }
            });
    let outcome = |verdict| ComparisonOutcome {
        verdict,
        worst_node,
        worst_gap,
        tol,
    };

    let sub = strong_residual(u, pair, f, Sense::PlusGeq)?;
    if !sub.satisfied {
        return Ok(outcome(ComparisonVerdict::HypothesisFailure(format!(
            "u is not a subsolution: violating volume {:e}",
            sub.violating_volume
        ))));
    }
    let hv = central_hessian(v)?;
    let mv = pucci_plus(pair, &hv)?;
    let minus_f = f.map(|x| -x);
    let sup = strong_residual_of(&mv, &minus_f, &hv, pair, h)?;
    if !sup {
        return Ok(outcome(ComparisonVerdict::HypothesisFailure(
            "v is not a supersolution".into(),
        )));
    }
    let boundary = grid.boundary_mask();
    if let Some(b) = gap.masked_max(&boundary) {
        if b > tol {
            return Ok(outcome(ComparisonVerdict::HypothesisFailure(format!(
                "u exceeds v on the boundary by {b:e}"
            ))));
        }
    }
    Ok(outcome(if worst_gap <= tol {
        ComparisonVerdict::Holds
    } else {
        ComparisonVerdict::ConclusionFailure
    }))
}

/// a.e. check of `f − M⁺(D²v) ≥ 0`, written with `minus_f = −f`.
fn strong_residual_of(
    mv: &ScalarField,
    minus_f: &ScalarField,
    hv: &crate::grid::HessianField,
    pair: &EllipticityPair,
    h: f64,
) -> Result<bool> {
    let grid = mv.grid();
    let mut bad = 0usize;
    for k in 0..grid.len() {
        let Some(entry) = hv.entry(k) else { continue };
        let x = &grid.coords(k)[..grid.dim()];
        let big = pair.big_lambda(x);
        let big = if big.is_finite() { big } else { 0.0 };
        let r = -minus_f.value(k) - mv.value(k);
        if r < -crate::pucci::node_tolerance(h, minus_f.value(k), big, entry.norm()) {
            bad += 1;
        }
    }
    Ok(bad as f64 * grid.cell_volume() <= 4.0 * h * grid.surface_area())
}
