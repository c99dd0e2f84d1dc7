use super::kappa::{default_eps, forcing_norm, kappa_fit, KappaFit, Thresholds};
use super::{
    filtered_norm, fmt_param, lt_quasi_norm, pair_params, EstimateReport, FilteredNorm, Verdict,
};
use crate::ellipticity::{check_admissible, sample_ellipticity, CheckMode, EllipticityPair};
use crate::grid::{CubeSpec, ScalarField};
use crate::pucci::{strong_residual, Sense};
use crate::{Error, Result};

const NEG_TOL: f64 = -1e-12;

/// Primary and secondary local boundedness reports.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBoundedness {
    pub primary: EstimateReport,
    /// Right side `‖u⁺‖_{L^{θt/n}} + ‖f⁻/λ‖_{Lⁿ}`.
    pub secondary: EstimateReport,
}

pub fn local_boundedness_report(
    u: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
    t: f64,
) -> Result<LocalBoundedness> {
    u.check_same_grid(f)?;
    let grid = u.grid().clone();
    let n = grid.dim() as f64;
    if !(t > 0.0 && t <= n) {
        return Err(Error::InvalidParameter(format!(
            "t must lie in (0, {n}], got {t}"
        )));
    }
    let h = grid.spacing();
    let interior = grid.interior_mask();
    let half = grid.half_ball_mask();
    let lhs = u.masked_max(&half).unwrap_or(f64::NEG_INFINITY);
    let params = format!("{};t={}", pair_params(pair), t);

    let s = sample_ellipticity(pair, &grid)?;
    let ratio = s.big_lambda.zip_with(
        &s.lambda,
        |b, l| if l == 0.0 { f64::INFINITY } else { b / l },
    )?;
    let up = u.positive_part();
    let powered = up.map(|v| v.powf(t / n));
    let fminus = f.negative_part();

    let forcing = match filtered_norm(&fminus, Some(&s.inv_lambda), n, &interior)? {
        FilteredNorm::Value { norm, .. } => norm,
        FilteredNorm::Singular { volume, .. } => {
            let reason = format!("f-/lambda infinite on volume {volume:e}");
            return Ok(LocalBoundedness {
                primary: EstimateReport::hypothesis_failure(
                    "local_boundedness",
                    lhs,
                    h,
                    pair,
                    params.clone(),
                    reason.clone(),
                ),
                secondary: EstimateReport::hypothesis_failure(
                    "local_boundedness_secondary",
                    lhs,
                    h,
                    pair,
                    params,
                    reason,
                ),
            });
        }
    };

    let primary = match filtered_norm(&powered, Some(&ratio), n, &interior)? {
        FilteredNorm::Value { norm, .. } => EstimateReport::classify(
            "local_boundedness",
            lhs,
            norm.powf(n / t) + forcing,
            h,
            pair,
            params.clone(),
        ),
        FilteredNorm::Singular { volume, .. } => EstimateReport::hypothesis_failure(
            "local_boundedness",
            lhs,
            h,
            pair,
            params.clone(),
            format!("Lambda/lambda infinite where u+ > 0 on volume {volume:e}"),
        ),
    };

    let exps = pair.exponents();
    let secondary = match exps.theta {
        Some(theta) => {
            let exponent = theta * t / n;
            EstimateReport::classify(
                "local_boundedness_secondary",
                lhs,
                lt_quasi_norm(&up, exponent, &interior) + forcing,
                h,
                pair,
                format!("{params};exponent={}", fmt_param(exponent)),
            )
        }
        None => EstimateReport::hypothesis_failure(
            "local_boundedness_secondary",
            lhs,
            h,
            pair,
            params,
            "1/p + 1/q exceeds 1/n, theta undefined".into(),
        ),
    };
    Ok(LocalBoundedness { primary, secondary })
}

/// Shifted data of the weak Harnack argument.
#[derive(Debug, Clone)]
pub struct HarnackDiagnostics {
    pub eps: f64,
    pub forcing_norm: f64,
    /// `ū = u + ε + ‖f/λ‖_{Lⁿ}`.
    pub ubar: ScalarField,
    /// `w = −log ū`.
    pub w: ScalarField,
    pub quotients: Vec<(f64, f64)>,
    pub kappa: Option<KappaFit>,
}

#[derive(Debug, Clone)]
pub struct WeakHarnackOutcome {
    /// One report per requested `t`.
    pub reports: Vec<EstimateReport>,
    pub diagnostics: HarnackDiagnostics,
}

impl WeakHarnackOutcome {
    /// Report with the worst verdict: a violation if any `t` is violated.
    pub fn summary(&self) -> &EstimateReport {
        self.reports
            .iter()
            .find(|r| r.verdict == Verdict::Violated)
            .or_else(|| {
                self.reports
                    .iter()
                    .find(|r| r.verdict == Verdict::HypothesisFailure)
            })
            .unwrap_or(&self.reports[0])
    }
}

pub fn weak_harnack_report(
    u: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
    t_grid: &[f64],
) -> Result<WeakHarnackOutcome> {
    u.check_same_grid(f)?;
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter(
            "t values must be positive and nonempty".into(),
        ));
    }
    let grid = u.grid().clone();
    let min = u.min();
    if min < NEG_TOL {
        return Err(Error::Domain(format!(
            "u must be nonnegative, found {min:e}"
        )));
    }
    let h = grid.spacing();
    let half = grid.half_ball_mask();
    let inf_half = u.masked_min(&half).unwrap_or(0.0).max(0.0);
    let forcing = forcing_norm(pair, f)?;
    let rhs = inf_half + forcing;
    let admissible = check_admissible(pair, CheckMode::WeakHarnack);
    let mut reports = Vec::new();
    let mut quotients = Vec::new();
    for &t in t_grid {
        let lhs = lt_quasi_norm(u, t, &half);
        let r = EstimateReport::classify(
            "weak_harnack",
            lhs,
            rhs,
            h,
            pair,
            format!("{};t={}", pair_params(pair), t),
        )
        .with_note(format!(
            "weak-Harnack admissible: {}",
            admissible.admissible
        ));
        quotients.push((t, r.empirical_constant));
        reports.push(r);
    }
    let eps = default_eps(u);
    let ubar = u.map(|v| v + eps + forcing);
    let w = ubar.map(|v| -v.ln());
    let kappa = kappa_fit(
        u,
        pair,
        f,
        &CubeSpec::default_for(grid.dim()),
        &Thresholds::default(),
        eps,
    )
    .ok();
    Ok(WeakHarnackOutcome {
        reports,
        diagnostics: HarnackDiagnostics {
            eps,
            forcing_norm: forcing,
            ubar,
            w,
            quotients,
            kappa,
        },
    })
}

/// Largest `t` whose quotient is finite and at most `cap` on both grids.
pub fn largest_stable_t(
    coarse: &WeakHarnackOutcome,
    fine: &WeakHarnackOutcome,
    cap: f64,
) -> Option<f64> {
    coarse
        .diagnostics
        .quotients
        .iter()
        .zip(&fine.diagnostics.quotients)
        .filter(|((tc, qc), (tf, qf))| {
            tc == tf && qc.is_finite() && qf.is_finite() && *qc <= cap && *qf <= cap
        })
        .map(|((t, _), _)| *t)
        .fold(None, |acc: Option<f64>, t| {
            Some(acc.map_or(t, |a| a.max(t)))
        })
}

/// `sup_{B_{1/2}} u` against `inf_{B_{1/2}} u + ‖f/λ‖_{Lⁿ}` for `u` in the
/// extended Pucci class.
pub fn harnack_report(
    u: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
) -> Result<EstimateReport> {
    u.check_same_grid(f)?;
    let grid = u.grid().clone();
    let h = grid.spacing();
    let min = u.min();
    if min < NEG_TOL {
        return Err(Error::Domain(format!(
            "u must be nonnegative, found {min:e}"
        )));
    }
    let half = grid.half_ball_mask();
    let lhs = u.masked_max(&half).unwrap_or(0.0);
    let params = pair_params(pair);
    let absf = f.map(f64::abs);
    let sub = strong_residual(u, pair, &absf.map(|v| -v), Sense::PlusGeq)?;
    let sup = strong_residual(u, pair, &absf, Sense::MinusLeq)?;
    if !sub.satisfied || !sup.satisfied {
        return Ok(EstimateReport::hypothesis_failure(
            "harnack",
            lhs,
            h,
            pair,
            params,
            format!(
                "not in the Pucci class: violating volumes {:e} (plus) and {:e} (minus)",
                sub.violating_volume, sup.violating_volume
            ),
        ));
    }
    let inf_half = u.masked_min(&half).unwrap_or(0.0).max(0.0);
    let forcing = forcing_norm(pair, f)?;
    Ok(EstimateReport::classify(
        "harnack",
        lhs,
        inf_half + forcing,
        h,
        pair,
        params,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{unit_ball_volume, Grid};

    #[test]
    fn constants() {
        let g = Grid::ball(2, 1.0, 1.0 / 16.0).unwrap();
        let pair = EllipticityPair::uniform(1.0, 1.0, 2).unwrap();
        let zero = ScalarField::constant(g.clone(), 0.0);
        let one = ScalarField::constant(g.clone(), 1.0);
        let lb = local_boundedness_report(&one, &pair, &zero, 2.0).unwrap();
        let vol = g.interior_count() as f64 * g.cell_volume();
        assert!((lb.primary.rhs_core - vol.sqrt()).abs() < 1e-12);
        assert!((vol - unit_ball_volume(2)).abs() < 0.4);

        let hr = harnack_report(&one.map(|_| 3.0), &pair, &zero).unwrap();
        assert_eq!(hr.empirical_constant, 1.0);

        let wh = weak_harnack_report(&one.map(|_| 5.0), &pair, &zero, &[0.5, 1.0]).unwrap();
        let half_vol = g.half_ball_mask().iter().filter(|m| **m).count() as f64 * g.cell_volume();
        for (t, q) in &wh.diagnostics.quotients {
            assert!((q - half_vol.powf(1.0 / t)).abs() < 1e-12);
        }
    }

    #[test]
    fn t_out_of_range() {
        let g = Grid::ball(2, 1.0, 0.25).unwrap();
        let pair = EllipticityPair::uniform(1.0, 1.0, 2).unwrap();
        let z = ScalarField::constant(g, 0.0);
        assert!(local_boundedness_report(&z, &pair, &z, 3.0).is_err());
        assert!(local_boundedness_report(&z, &pair, &z, 0.0).is_err());
    }

    #[test]
    fn negative_input_rejected() {
        let g = Grid::ball(2, 1.0, 0.25).unwrap();
        let pair = EllipticityPair::uniform(1.0, 1.0, 2).unwrap();
        let u = ScalarField::constant(g.clone(), -1.0);
        let z = ScalarField::constant(g, 0.0);
        assert!(weak_harnack_report(&u, &pair, &z, &[1.0]).is_err());
    }
}
