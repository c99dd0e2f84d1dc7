use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid, ScalarField};
use crate::pucci::SymMatrix;
use crate::{Error, Result};

/// `η(x) = (1 − |x|²)^β` on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub beta: f64,
    pub dim: usize,
}

fn sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl CutoffSpec {
    pub fn new(beta: f64, dim: usize) -> Result<Self> {
        if !(beta >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be at least 2, got {beta}"
            )));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "dimension {dim} outside 1..=3"
            )));
        }
        Ok(CutoffSpec { beta, dim })
    }

    fn base(&self, x: &[f64]) -> f64 {
        (1.0 - sq(x)).max(0.0)
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        self.base(x).powf(self.beta)
    }

    /// `Dη = −2βx(1 − |x|²)^{β−1}`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let c = -2.0 * self.beta * self.base(x).powf(self.beta - 1.0);
        x.iter().map(|v| c * v).collect()
    }

    /// `D²η = −2β(1 − |x|²)^{β−1} I + 4β(β−1)(1 − |x|²)^{β−2} x⊗x`.
    pub fn hessian(&self, x: &[f64]) -> SymMatrix {
        let b = self.base(x);
        let beta = self.beta;
        let diag = -2.0 * beta * b.powf(beta - 1.0);
        let cross = 4.0 * beta * (beta - 1.0) * b.powf(beta - 2.0);
        SymMatrix::identity(self.dim)
            .scale(diag)
            .add(&SymMatrix::outer(x).scale(cross))
    }

    /// Eigenvalue with eigenvector `x/|x|` (multiplicity 1).
    pub fn radial_eigenvalue(&self, r: f64) -> f64 {
        let b = (1.0 - r * r).max(0.0);
        let beta = self.beta;
        4.0 * beta * (beta - 1.0) * b.powf(beta - 2.0) * r * r - 2.0 * beta * b.powf(beta - 1.0)
    }

    /// Eigenvalue on `x^⊥` (multiplicity `n − 1`).
    pub fn tangential_eigenvalue(&self, r: f64) -> f64 {
        -2.0 * self.beta * (1.0 - r * r).max(0.0).powf(self.beta - 1.0)
    }

    /// Closed-form spectrum of `D²η(x)`, ascending.
    pub fn eigenvalues(&self, x: &[f64]) -> Vec<f64> {
        let r = sq(x).sqrt();
        let mut e = vec![self.tangential_eigenvalue(r); self.dim - 1];
        e.push(self.radial_eigenvalue(r));
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<CutoffFields> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: grid.dim(),
            });
        }
        let spec = *self;
        let n = self.dim;
        let mut gradient = Vec::with_capacity(grid.len());
        let mut hessian = Vec::with_capacity(grid.len());
        let mut eigen = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let x = &grid.coords(k)[..n];
            gradient.push(spec.gradient(x));
            hessian.push(spec.hessian(x));
            eigen.push(spec.eigenvalues(x));
        }
        Ok(CutoffFields {
            eta: ScalarField::from_fn(grid.clone(), move |x| spec.eta(x)),
            gradient,
            hessian,
            eigenvalues: eigen,
        })
    }
}

/// Sampled cutoff data on a grid.
#[derive(Debug, Clone)]
pub struct CutoffFields {
    pub eta: ScalarField,
    pub gradient: Vec<Vec<f64>>,
    pub hessian: Vec<SymMatrix>,
    pub eigenvalues: Vec<Vec<f64>>,
}

pub fn cutoff_eta(beta: f64, grid: &Arc<Grid>) -> Result<CutoffFields> {
    CutoffSpec::new(beta, grid.dim())?.sample(grid)
}

/// Radius beyond which the radial eigenvalue is nonnegative:
/// `1/√(2β − 1)`.
pub fn sign_flip_radius(beta: f64) -> f64 {
    1.0 / (2.0 * beta - 1.0).sqrt()
}

/// Smallest `β` with `1 + 1/(2α²)`, `α = 1/(3n)`.
pub fn threshold_beta(n: usize) -> f64 {
    let alpha = 1.0 / (3.0 * n as f64);
    1.0 + 1.0 / (2.0 * alpha * alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchySchwarzOutcome {
    pub holds: bool,
    /// Smallest `rhs − |lhs|` over the sampled directions.
    pub worst_slack: f64,
    pub failure_direction: Option<Vec<f64>>,
}

/// Samples `±(b⊗c + c⊗b) ≤ η⁻¹ c⊗c + η b⊗b` as quadratic forms in
/// `directions` seeded random directions plus a fixed set built from the
/// axes, `b` and `c`.
pub fn matrix_cauchy_schwarz_check(
    b: &[f64],
    c: &[f64],
    eta: f64,
    directions: usize,
    seed: u64,
) -> Result<CauchySchwarzOutcome> {
    if !(eta > 0.0) || b.len() != c.len() {
        return Err(Error::InvalidParameter(
            "need eta > 0 and vectors of equal length".into(),
        ));
    }
    let n = b.len();
    let lhs = SymMatrix::outer_sym(b, c);
    let rhs = SymMatrix::outer(c)
        .scale(1.0 / eta)
        .add(&SymMatrix::outer(b).scale(eta));
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        dirs.push(e);
    }
    let unit = |v: &[f64]| {
        let m = sq(v).sqrt();
        if m > 0.0 {
            Some(v.iter().map(|x| x / m).collect::<Vec<f64>>())
        } else {
            None
        }
    };
    let (ub, uc) = (unit(b), unit(c));
    if let Some(ub) = &ub {
        dirs.push(ub.clone());
    }
    if let Some(uc) = &uc {
        dirs.push(uc.clone());
    }
    if let (Some(ub), Some(uc)) = (&ub, &uc) {
        dirs.push(ub.iter().zip(uc).map(|(x, y)| x + y).collect());
        dirs.push(ub.iter().zip(uc).map(|(x, y)| x - y).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..directions {
        dirs.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let mut worst = f64::INFINITY;
    let mut failure = None;
    for a in dirs {
        let l = lhs.quad_form(&a);
        let r = rhs.quad_form(&a);
        let slack = r - l.abs();
        let scale = 1e-12 * (1.0 + r.abs() + l.abs());
        if slack < worst {
            worst = slack;
        }
        if slack < -scale && failure.is_none() {
            failure = Some(a);
        }
    }
    Ok(CauchySchwarzOutcome {
        holds: failure.is_none(),
        worst_slack: worst,
        failure_direction: failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_values() {
        let s = CutoffSpec::new(2.0, 2).unwrap();
        assert_eq!(s.eta(&[0.0, 0.0]), 1.0);
        assert_eq!(s.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        let h = s.hessian(&[0.0, 0.0]);
        assert_eq!((h.get(0, 0), h.get(1, 1), h.get(0, 1)), (-4.0, -4.0, 0.0));
        assert_eq!(s.eta(&[1.0, 0.0]), 0.0);
        assert!(CutoffSpec::new(1.5, 2).is_err());
    }

    #[test]
    fn closed_form_spectrum_matches_solver() {
        let s = CutoffSpec::new(3.5, 3).unwrap();
        let x = [0.2, -0.3, 0.4];
        let e = s.eigenvalues(&x);
        let m = s.hessian(&x).eigenvalues();
        for k in 0..3 {
            assert!((e[k] - m[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn sign_flip_below_alpha_at_threshold() {
        for n in 1..=3 {
            let beta = threshold_beta(n);
            let alpha = 1.0 / (3.0 * n as f64);
            assert!(sign_flip_radius(beta) <= alpha);
            let s = CutoffSpec::new(beta, n).unwrap();
            assert!(s.radial_eigenvalue(alpha) >= 0.0);
        }
    }

    #[test]
    fn cauchy_schwarz_cases() {
        let b = [1.0, 2.0];
        assert!(
            matrix_cauchy_schwarz_check(&b, &b, 0.7, 16, 1)
                .unwrap()
                .holds
        );
        let c = [-2.0, 1.0];
        assert!(
            matrix_cauchy_schwarz_check(&b, &c, 0.3, 16, 2)
                .unwrap()
                .holds
        );
        assert!(matrix_cauchy_schwarz_check(&b, &c, 0.0, 16, 2).is_err());
    }
}
