use std::sync::Arc;

use super::Grid;
use crate::{Error, Result};

/// One real value per grid node.
///
/// Values are finite unless the field is flagged as extended-real, which is
/// how `1/λ` carries `+∞` at zeros of `λ`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    extended: bool,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(n) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value {} at node {n} in a finite field",
                values[n]
            )));
        }
        Ok(ScalarField {
            grid,
            values,
            extended: false,
        })
    }

    /// Field allowed to hold `±∞` (never NaN).
    pub fn extended(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(n) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Domain(format!("NaN at node {n}")));
        }
        let extended = values.iter().any(|v| v.is_infinite());
        Ok(ScalarField {
            grid,
            values,
            extended,
        })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![c; n],
            extended: !c.is_finite(),
        }
    }

    /// Samples `f` at every node. Non-finite samples make the field extended.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values: Vec<f64> = (0..grid.len())
            .map(|n| {
                let x = grid.coords(n);
                f(&x[..dim])
            })
            .collect();
        let extended = values.iter().any(|v| !v.is_finite());
        ScalarField {
            grid,
            values,
            extended,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn is_extended(&self) -> bool {
        self.extended
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|v| f(*v)).collect();
        let extended = values.iter().any(|v| !v.is_finite());
        ScalarField {
            grid: self.grid.clone(),
            values,
            extended,
        }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        let extended = values.iter().any(|v| !v.is_finite());
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
            extended,
        })
    }

    /// `max(u, 0)`.
    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    /// `max(-u, 0)`.
    pub fn negative_part(&self) -> Self {
        self.map(|v| (-v).max(0.0))
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }

    /// Max over masked nodes; `None` for an empty mask.
    pub fn masked_max(&self, mask: &[bool]) -> Option<f64> {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    pub fn masked_min(&self, mask: &[bool]) -> Option<f64> {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}
