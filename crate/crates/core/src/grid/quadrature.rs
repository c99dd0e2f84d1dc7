use super::ScalarField;
use crate::{Error, Result};

/// `(Σ_mask |g·w|^p · hⁿ)^{1/p}`, or the masked sup for `p = ∞`.
///
/// Singular-cell rule: a node where `g = 0` contributes nothing whatever the
/// weight (so `0 · ∞ = 0`); any other non-finite product is an error for
/// finite `p`. Pass `weight = None` for the unweighted norm.
pub fn weighted_lp_norm(
    g: &ScalarField,
    weight: Option<&ScalarField>,
    p: f64,
    mask: &[bool],
) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if let Some(w) = weight {
        g.check_same_grid(w)?;
    }
    if mask.len() != g.len() {
        return Err(Error::GridMismatch(format!(
            "mask of length {} for {} nodes",
            mask.len(),
            g.len()
        )));
    }
    let cell = g.grid().cell_volume();
    let mut acc = 0.0;
    let mut sup = 0.0f64;
    for node in (0..g.len()).filter(|n| mask[*n]) {
        let gv = g.value(node);
        let wv = weight.map_or(1.0, |w| w.value(node));
        let prod = if gv == 0.0 { 0.0 } else { (gv * wv).abs() };
        if !prod.is_finite() {
            if p.is_infinite() && prod == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            return Err(Error::SingularCell {
                node,
                integrand: gv,
                weight: wv,
            });
        }
        if p.is_infinite() {
            sup = sup.max(prod);
        } else {
            acc += prod.powf(p) * cell;
        }
    }
    Ok(if p.is_infinite() {
        sup
    } else {
        acc.powf(1.0 / p)
    })
}

/// Open axis-parallel cube `K_r(z)`: center `z`, side length `2r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSpec {
    pub center: Vec<f64>,
    pub half_side: f64,
}

impl CubeSpec {
    pub fn centered(dim: usize, half_side: f64) -> Self {
        CubeSpec {
            center: vec![0.0; dim],
            half_side,
        }
    }

    /// `K_{1/(3n)}(0)`.
    pub fn default_for(dim: usize) -> Self {
        Self::centered(dim, 1.0 / (3.0 * dim as f64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub threshold: f64,
    /// Discrete `μ_t = #{x ∈ K₀ : u(x) > t} · hⁿ`.
    pub measure: f64,
    pub cube: CubeSpec,
    pub cell_volume: f64,
    /// Discrete `|K₀|`, the node count of the cube times `hⁿ`.
    pub cube_measure: f64,
}

pub fn distribution_function(u: &ScalarField, cube: &CubeSpec, t: f64) -> Result<MeasureReport> {
    let grid = u.grid();
    if !grid.contains_cube(cube) {
        return Err(Error::Domain(format!(
            "cube centered at {:?} with half side {} escapes the grid domain",
            cube.center, cube.half_side
        )));
    }
    let mask = grid.cube_mask(cube);
    let cell = grid.cell_volume();
    let inside = mask.iter().filter(|m| **m).count();
    let above = u
        .values()
        .iter()
        .zip(&mask)
        .filter(|(v, m)| **m && **v > t)
        .count();
    Ok(MeasureReport {
        threshold: t,
        measure: above as f64 * cell,
        cube: cube.clone(),
        cell_volume: cell,
        cube_measure: inside as f64 * cell,
    })
}
