use std::sync::Arc;

use super::{Grid, ScalarField};
use crate::pucci::SymMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianEntry {
    pub matrix: SymMatrix,
    /// Ascending; only the first `dim` entries are meaningful.
    pub eigenvalues: [f64; 3],
}

impl HessianEntry {
    pub fn new(matrix: SymMatrix) -> Self {
        HessianEntry {
            eigenvalues: matrix.eigenvalues(),
            matrix,
        }
    }

    pub fn eigen(&self) -> &[f64] {
        &self.eigenvalues[..self.matrix.dim()]
    }

    /// Spectral norm `max |e_i|`.
    pub fn norm(&self) -> f64 {
        self.eigen().iter().fold(0.0, |a, e| a.max(e.abs()))
    }
}

/// Discrete Hessian on interior nodes; boundary nodes carry `None`.
#[derive(Debug, Clone)]
pub struct HessianField {
    grid: Arc<Grid>,
    entries: Vec<Option<HessianEntry>>,
}

impl HessianField {
    pub fn from_entries(grid: Arc<Grid>, entries: Vec<Option<HessianEntry>>) -> Result<Self> {
        if entries.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} Hessian entries for {} nodes",
                entries.len(),
                grid.len()
            )));
        }
        Ok(HessianField { grid, entries })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn entry(&self, node: usize) -> Option<&HessianEntry> {
        self.entries[node].as_ref()
    }

    pub fn entries(&self) -> &[Option<HessianEntry>] {
        &self.entries
    }

    /// Max over interior nodes of the spectral norm.
    pub fn max_norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .fold(0.0, |a, e| a.max(e.norm()))
    }
}

/// Central second differences: 3-point on the diagonal, 4-point cross
/// differences off the diagonal. Exact on polynomials of degree ≤ 2.
pub fn central_hessian(u: &ScalarField) -> Result<HessianField> {
    let grid = u.grid().clone();
    let dim = grid.dim();
    let h2 = grid.spacing() * grid.spacing();
    let vals = u.values();
    let mut entries = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        if !grid.is_interior(node) {
            entries.push(None);
            continue;
        }
        let at = |off: [i64; 3]| -> Result<f64> {
            grid.neighbor(node, &off)
                .map(|n| vals[n])
                .ok_or_else(|| Error::MissingNeighbor {
                    node,
                    offset: off[..dim].to_vec(),
                })
        };
        let center = vals[node];
        let mut m = [[0.0; 3]; 3];
        for i in 0..dim {
            let mut e = [0i64; 3];
            e[i] = 1;
            let plus = at(e)?;
            let minus = at([-e[0], -e[1], -e[2]])?;
            m[i][i] = (plus - 2.0 * center + minus) / h2;
            for j in (i + 1)..dim {
                let mut pp = [0i64; 3];
                pp[i] = 1;
                pp[j] = 1;
                let mut pm = [0i64; 3];
                pm[i] = 1;
                pm[j] = -1;
                let neg = |o: [i64; 3]| [-o[0], -o[1], -o[2]];
                let v = (at(pp)? - at(pm)? - at(neg(pm))? + at(neg(pp))?) / (4.0 * h2);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        entries.push(Some(HessianEntry::new(SymMatrix::from_symmetric(dim, m))));
    }
    Ok(HessianField { grid, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_second_difference_is_exact() {
        let g = Grid::cube(1, -1.0, 1.0, 0.125).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0] * x[0]);
        let h = central_hessian(&u).unwrap();
        for e in h.entries().iter().flatten() {
            assert!((e.matrix.get(0, 0) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bilinear_mixed_entry() {
        let g = Grid::cube(2, -1.0, 1.0, 0.25).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0] * x[1]);
        let h = central_hessian(&u).unwrap();
        for e in h.entries().iter().flatten() {
            assert!((e.matrix.get(0, 1) - 1.0).abs() < 1e-12);
            assert!(e.matrix.get(0, 0).abs() < 1e-12);
            assert!(e.matrix.get(1, 1).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_has_zero_hessian() {
        let g = Grid::ball(3, 1.0, 0.25).unwrap();
        let u = ScalarField::constant(g, 3.5);
        let h = central_hessian(&u).unwrap();
        assert!(h.entries().iter().flatten().count() > 0);
        assert_eq!(h.max_norm(), 0.0);
    }

    #[test]
    fn eigenvalues_sum_to_trace() {
        let g = Grid::ball(3, 1.0, 0.25).unwrap();
        let u = ScalarField::from_fn(g, |x| (x[0] * x[1]).sin() + x[2].exp() * x[0]);
        let h = central_hessian(&u).unwrap();
        for e in h.entries().iter().flatten() {
            let s: f64 = e.eigen().iter().sum();
            let tr = e.matrix.trace();
            assert!((s - tr).abs() <= 1e-10 * (1.0 + tr.abs()));
            assert!(e.eigen().windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
