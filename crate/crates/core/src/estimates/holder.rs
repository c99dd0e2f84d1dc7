use super::kappa::least_squares;
use crate::grid::ScalarField;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HolderFit {
    /// Fitted exponent capped at 1; `None` when the data has no oscillation.
    pub alpha: Option<f64>,
    /// Uncapped least-squares slope.
    pub raw_slope: f64,
    pub oscillations: Vec<(f64, f64)>,
    /// `max |u(x) − u(y)| / |x − y|^α` over pairs in the closed half ball.
    pub seminorm: f64,
}

impl HolderFit {
    pub fn is_flat(&self) -> bool {
        self.alpha.is_none()
    }
}

pub fn holder_fit(u: &ScalarField, center: &[f64], radii: &[f64]) -> Result<HolderFit> {
    if radii.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 radii, got {}",
            radii.len()
        )));
    }
    let grid = u.grid();
    let mut oscillations = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {r}"
            )));
        }
        let mask = grid.ball_mask(center, r);
        let osc = match (u.masked_max(&mask), u.masked_min(&mask)) {
            (Some(a), Some(b)) => a - b,
            _ => 0.0,
        };
        oscillations.push((r, osc));
    }
    let scale = 1.0 + u.sup_norm();
    let pts: Vec<(f64, f64)> = oscillations
        .iter()
        .filter(|(_, o)| *o > 1e-13 * scale)
        .map(|(r, o)| (r.ln(), o.ln()))
        .collect();
    let fit = if pts.len() == oscillations.len() {
        least_squares(&pts)
    } else {
        None
    };
    let (alpha, raw_slope) = match fit {
        Some((slope, _, _)) => (Some(slope.min(1.0)), slope),
        None => (None, 0.0),
    };
    let seminorm = match alpha {
        Some(a) => two_point_seminorm(u, a),
        None => 0.0,
    };
    Ok(HolderFit {
        alpha,
        raw_slope,
        oscillations,
        seminorm,
    })
}

fn two_point_seminorm(u: &ScalarField, alpha: f64) -> f64 {
    let grid = u.grid();
    let origin = vec![0.0; grid.dim()];
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&k| grid.distance(k, &origin) <= 0.5 + 0.5 * grid.spacing())
        .collect();
    let mut best = 0.0f64;
    for (i, &a) in nodes.iter().enumerate() {
        let xa = grid.coords(a);
        for &b in &nodes[i + 1..] {
            let xb = grid.coords(b);
            let d: f64 = (0..grid.dim())
                .map(|k| (xa[k] - xb[k]).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.max((u.value(a) - u.value(b)).abs() / d.powf(alpha));
        }
    }
    best
}
