use super::{filtered_norm, FilteredNorm};
use crate::ellipticity::{sample_ellipticity, EllipticityPair};
use crate::grid::{distribution_function, CubeSpec, ScalarField};
use crate::{Error, Result};

/// Threshold levels for the distribution function of `ū`.
#[derive(Debug, Clone, PartialEq)]
pub enum Thresholds {
    Absolute(Vec<f64>),
    /// Multiples of `inf_{K₀} ū`.
    RelativeToInf(Vec<f64>),
    /// `m` levels evenly spaced strictly between `inf_{K₀} ū` and `sup_{K₀} ū`.
    Spread(usize),
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::Spread(8)
    }
}

/// Fit of `μ_t ≈ C (inf ū / t)^κ` on `K₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaFit {
    pub eps: f64,
    pub inf_ubar: f64,
    pub thresholds: Vec<f64>,
    pub measures: Vec<f64>,
    pub kappa: f64,
    pub constant: f64,
    /// `1 − R²` of the log-log least-squares fit.
    pub residual: f64,
    pub degenerate: bool,
}

/// `‖f/λ‖_{Lⁿ}` over interior nodes with the a.e. pre-filter.
pub(crate) fn forcing_norm(pair: &EllipticityPair, f: &ScalarField) -> Result<f64> {
    let grid = f.grid().clone();
    let s = sample_ellipticity(pair, &grid)?;
    let absf = f.map(f64::abs);
    match filtered_norm(
        &absf,
        Some(&s.inv_lambda),
        grid.dim() as f64,
        &grid.interior_mask(),
    )? {
        FilteredNorm::Value { norm, .. } => Ok(norm),
        FilteredNorm::Singular { volume, .. } => Err(Error::Hypothesis(format!(
            "f/lambda is infinite on volume {volume:e}"
        ))),
    }
}

pub fn default_eps(u: &ScalarField) -> f64 {
    1e-6 * (1.0 + u.max())
}

pub fn kappa_fit(
    u: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
    cube: &CubeSpec,
    thresholds: &Thresholds,
    eps: f64,
) -> Result<KappaFit> {
    u.check_same_grid(f)?;
    let grid = u.grid().clone();
    let mask = grid.cube_mask(cube);
    if let Some(m) = u.masked_min(&mask) {
        if m < -1e-12 {
            return Err(Error::Domain(format!(
                "u is negative on the cube (min {m:e})"
            )));
        }
    }
    let shift = eps + forcing_norm(pair, f)?;
    let ubar = u.map(|v| v + shift);
    let inf = ubar
        .masked_min(&mask)
        .ok_or_else(|| Error::Domain("cube contains no nodes".into()))?;
    let sup = ubar.masked_max(&mask).unwrap_or(inf);
    let levels: Vec<f64> = match thresholds {
        Thresholds::Absolute(t) => t.clone(),
        Thresholds::RelativeToInf(m) => m.iter().map(|k| k * inf).collect(),
        Thresholds::Spread(m) => {
            let (lo, hi) = if sup - inf > 1e-12 * sup.abs() {
                (inf, sup)
            } else {
                (0.5 * inf, 1.5 * inf)
            };
            (1..=*m)
                .map(|k| lo + (hi - lo) * k as f64 / (*m as f64 + 1.0))
                .collect()
        }
    };
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("thresholds must increase".into()));
    }
    let mut measures = Vec::with_capacity(levels.len());
    for &t in &levels {
        measures.push(distribution_function(&ubar, cube, t)?.measure);
    }
    if measures.iter().all(|m| *m == 0.0) {
        return Err(Error::Domain(
            "every threshold exceeds the data on the cube".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .zip(&measures)
        .filter(|(t, m)| **t > inf && **m > 0.0)
        .map(|(t, m)| ((inf / t).ln(), m.ln()))
        .collect();
    let (kappa, log_c, residual, degenerate) = match least_squares(&pts) {
        Some((slope, intercept, r)) => (slope, intercept, r, false),
        None => (f64::NAN, f64::NAN, f64::NAN, true),
    };
    Ok(KappaFit {
        eps,
        inf_ubar: inf,
        thresholds: levels,
        measures,
        kappa,
        constant: log_c.exp(),
        residual,
        degenerate,
    })
}

/// Least squares `y = a x + b`; returns `(a, b, 1 − R²)`, or `None` with
/// fewer than two distinct abscissae or a constant response.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 1e-300 || syy <= 1e-300 {
        return None;
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum();
    Some((a, b, sse / syy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaSweep {
    pub fits: Vec<KappaFit>,
    /// Set when `κ` collapses towards 0 or `C` grows by more than a factor
    /// of 10 per decade of `ε` as `ε` decreases.
    pub diverging: bool,
}

/// Repeats [`kappa_fit`] for `ε ∈ {10⁻³, 10⁻⁶, 10⁻⁹}·(1 + sup u)`.
pub fn kappa_epsilon_sweep(
    u: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
    cube: &CubeSpec,
    thresholds: &Thresholds,
) -> Result<KappaSweep> {
    let scale = 1.0 + u.max();
    let mut fits = Vec::new();
    for e in [1e-3, 1e-6, 1e-9] {
        fits.push(kappa_fit(u, pair, f, cube, thresholds, e * scale)?);
    }
    let mut diverging = false;
    for w in fits.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.degenerate || b.degenerate {
            continue;
        }
        let decades = (a.eps / b.eps).log10();
        if b.constant > a.constant * 10f64.powf(decades) || b.kappa.abs() < 0.1 * a.kappa.abs() {
            diverging = true;
        }
    }
    Ok(KappaSweep { fits, diverging })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn constant_is_degenerate() {
        let g = Grid::ball(2, 1.0, 1.0 / 16.0).unwrap();
        let pair = EllipticityPair::uniform(1.0, 1.0, 2).unwrap();
        let u = ScalarField::constant(g.clone(), 1.0);
        let f = ScalarField::constant(g, 0.0);
        let fit = kappa_fit(
            &u,
            &pair,
            &f,
            &CubeSpec::default_for(2),
            &Thresholds::default(),
            0.0,
        )
        .unwrap();
        assert!(fit.degenerate);
    }

    /// Area of `{x : |x|² < r2}` inside the square `(-a, a)²` by midpoint
    /// sampling, independent of the lattice used by the estimator.
    fn disk_in_square(r2: f64, a: f64) -> f64 {
        let m = 800;
        let step = 2.0 * a / m as f64;
        let mut hits = 0usize;
        for i in 0..m {
            for j in 0..m {
                let x = -a + (i as f64 + 0.5) * step;
                let y = -a + (j as f64 + 0.5) * step;
                if x * x + y * y < r2 {
                    hits += 1;
                }
            }
        }
        hits as f64 * step * step
    }

    #[test]
    fn smooth_cap_matches_superlevel_oracle() {
        let h = 1.0 / 128.0;
        let g = Grid::ball(2, 1.0, h).unwrap();
        let pair = EllipticityPair::uniform(1.0, 1.0, 2).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| 2.0 - x[0] * x[0] - x[1] * x[1]);
        let f = ScalarField::constant(g, 0.0);
        let cube = CubeSpec::default_for(2);
        let fit = kappa_fit(&u, &pair, &f, &cube, &Thresholds::default(), 0.0).unwrap();
        assert!(!fit.degenerate);
        assert!(fit.kappa.is_finite() && fit.kappa > 0.0);
        assert!((0.0..1.0).contains(&fit.residual));
        // Lattice counting misplaces at most a layer of cells along the
        // boundary of the superlevel set inside the cube.
        let a = cube.half_side;
        let perimeter = 8.0 * a + 2.0 * std::f64::consts::PI * a;
        for (t, m) in fit.thresholds.iter().zip(&fit.measures) {
            let exact = disk_in_square(2.0 - t, a);
            assert!(
                (m - exact).abs() <= perimeter * h,
                "t={t} grid={m} exact={exact}"
            );
        }
    }

    #[test]
    fn least_squares_line() {
        let (a, b, r) = least_squares(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12 && r < 1e-20);
        assert!(least_squares(&[(1.0, 1.0)]).is_none());
    }
}
