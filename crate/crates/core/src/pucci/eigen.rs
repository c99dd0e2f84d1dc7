//! Spectra of symmetric matrices of size at most 3.
//!
//! Sizes 1 and 2 use closed forms; size 3 uses the trigonometric form of
//! Cardano's solution of the characteristic cubic, falling back to cyclic
//! Jacobi rotations when the cubic is close to having a repeated root.

use crate::{Error, Result};

/// Below this value of `1 - r²` (with `r` the normalized cubic invariant) the
/// `acos` step loses digits and Jacobi takes over.
const NEAR_REPEATED: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric `n×n` matrix, `n ≤ 3`, stored densely in a 3×3 block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    a: [[f64; 3]; 3],
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "dimension {dim} outside 1..=3");
        SymMatrix {
            dim,
            a: [[0.0; 3]; 3],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&[1.0; 3][..dim])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.a[i][i] = *v;
        }
        m
    }

    /// Trusts the caller that `a` is symmetric on its leading block; entries
    /// outside the block are cleared.
    pub fn from_symmetric(dim: usize, a: [[f64; 3]; 3]) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.a[i][j] = a[i][j];
            }
        }
        m
    }

    /// Validates symmetry to `1e-12` relative and symmetrizes.
    pub fn try_from_rows(dim: usize, a: [[f64; 3]; 3]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: dim,
            });
        }
        let scale = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .fold(0.0f64, |s, (i, j)| s.max(a[i][j].abs()));
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let gap = (a[i][j] - a[j][i]).abs();
                if gap > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::Asymmetric(gap));
                }
                m.a[i][j] = 0.5 * (a[i][j] + a[j][i]);
            }
        }
        Ok(m)
    }

    /// `b ⊗ b`.
    pub fn outer(b: &[f64]) -> Self {
        Self::outer_sym(b, b).scale(0.5)
    }

    /// `b ⊗ c + c ⊗ b`.
    pub fn outer_sym(b: &[f64], c: &[f64]) -> Self {
        let dim = b.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.a[i][j] = b[i] * c[j] + c[i] * b[j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    pub fn raw(&self) -> &[[f64; 3]; 3] {
        &self.a
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.a[i][i]).sum()
    }

    pub fn det(&self) -> f64 {
        let a = &self.a;
        match self.dim {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |x, y| x - y)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] = f(self.a[i][j]);
            }
        }
        m
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimensions differ");
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] = f(self.a[i][j], other.a[i][j]);
            }
        }
        m
    }

    /// `⟨M a, a⟩`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.a[i][j] * v[i] * v[j];
            }
        }
        s
    }

    /// `Qᵀ M Q` for a square `Q` given by rows.
    pub fn congruence(&self, q: &[[f64; 3]; 3]) -> Self {
        let n = self.dim;
        let mut out = [[0.0; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        s += q[k][i] * self.a[k][l] * q[l][j];
                    }
                }
                out[i][j] = s;
            }
        }
        // symmetrize rounding
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (out[i][j] + out[j][i]);
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        Self::from_symmetric(n, out)
    }

    /// Ascending eigenvalues; entries past `dim` are zero.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let a = &self.a;
        let mut e = [0.0; 3];
        match self.dim {
            1 => e[0] = a[0][0],
            2 => {
                let mean = 0.5 * (a[0][0] + a[1][1]);
                let rad = (0.5 * (a[0][0] - a[1][1])).hypot(a[0][1]);
                e[0] = mean - rad;
                e[1] = mean + rad;
            }
            _ => e = eigenvalues3(a),
        }
        e
    }
}

/// Validating entry point: checks symmetry of the leading `dim×dim` block and
/// returns its ascending eigenvalues.
pub fn sym_eigenvalues(dim: usize, a: [[f64; 3]; 3]) -> Result<Vec<f64>> {
    let m = SymMatrix::try_from_rows(dim, a)?;
    Ok(m.eigenvalues()[..dim].to_vec())
}

fn eigenvalues3(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if off == 0.0 {
        let mut e = [a[0][0], a[1][1], a[2][2]];
        e.sort_by(f64::total_cmp);
        return e;
    }
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let d0 = a[0][0] - q;
    let d1 = a[1][1] - q;
    let d2 = a[2][2] - q;
    let p = ((d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * off) / 6.0).sqrt();
    // B = (A - qI)/p, r = det(B)/2
    let b = [
        [d0 / p, a[0][1] / p, a[0][2] / p],
        [a[1][0] / p, d1 / p, a[1][2] / p],
        [a[2][0] / p, a[2][1] / p, d2 / p],
    ];
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (0.5 * det_b).clamp(-1.0, 1.0);
    if 1.0 - r * r < NEAR_REPEATED {
        return jacobi3(a);
    }
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * q - hi - lo;
    let mut e = [lo, mid, hi];
    e.sort_by(f64::total_cmp);
    e
}

/// Cyclic Jacobi rotations on a 3×3 symmetric matrix.
pub(crate) fn jacobi3(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut m = *a;
    for _sweep in 0..64 {
        let off = m[0][1].abs() + m[0][2].abs() + m[1][2].abs();
        let diag = m[0][0].abs() + m[1][1].abs() + m[2][2].abs();
        if off <= f64::EPSILON * 1e-3 * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
        }
    }
    let mut e = [m[0][0], m[1][1], m[2][2]];
    e.sort_by(f64::total_cmp);
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(
            sym_eigenvalues(3, [[1., 0., 0.], [0., 1., 0.], [0., 0., 1.]]).unwrap(),
            vec![1.0; 3]
        );
        assert_eq!(
            sym_eigenvalues(2, [[3., 0., 0.], [0., -1., 0.], [0.; 3]]).unwrap(),
            vec![-1.0, 3.0]
        );
    }

    #[test]
    fn asymmetric_rejected() {
        let r = sym_eigenvalues(2, [[1., 2., 0.], [0., 1., 0.], [0.; 3]]);
        assert!(matches!(r, Err(Error::Asymmetric(_))));
    }

    #[test]
    fn repeated_roots_use_jacobi() {
        // eigenvalues (2, 2, 5): Q diag Q^T with a fixed rotation
        let m = SymMatrix::diag(&[2.0, 2.0, 5.0]);
        let (c, s) = (0.6f64, 0.8f64);
        let q = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let q2 = [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]];
        let r = m.congruence(&q).congruence(&q2);
        let e = r.eigenvalues();
        for (x, y) in e.iter().zip([2.0, 2.0, 5.0]) {
            assert!((x - y).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn jacobi_agrees_with_trig_form() {
        let a = [[2.0, -1.0, 0.5], [-1.0, 0.0, 0.25], [0.5, 0.25, -3.0]];
        let j = jacobi3(&a);
        let t = SymMatrix::from_symmetric(3, a).eigenvalues();
        for k in 0..3 {
            assert!((j[k] - t[k]).abs() < 1e-12);
        }
    }
}
