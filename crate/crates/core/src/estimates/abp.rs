use super::{filtered_norm, pair_params, EstimateReport, FilteredNorm};
use crate::contact::{default_tolerance, upper_contact_set};
use crate::ellipticity::{sample_ellipticity, EllipticityPair};
use crate::grid::ScalarField;
use crate::{Error, Result};

/// `sup u − sup_{∂} u⁺` against `‖f⁻/λ‖_{Lⁿ(Γ⁺(u⁺))}`.
pub fn abp_report(
    u: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
) -> Result<EstimateReport> {
    abp_core("abp", u, &f.negative_part(), pair)
        .map(|r| r.with_note("contact set of u+ over interior nodes"))
}

/// The negative-part form: `sup u⁻ − sup_{∂} u⁻` against
/// `‖f⁺/λ‖_{Lⁿ(Γ⁺(u⁻))}`, with the contact set taken over the whole ball.
pub fn abp_min_report(
    u: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
) -> Result<EstimateReport> {
    let w = u.map(|v| -v);
    abp_core("abp_min", &w, &f.positive_part(), pair)
        .map(|r| r.with_note("contact set of u- taken over the whole ball"))
}

/// Shared computation with `w` in the role of `u` and `g ≥ 0` in the role of
/// `f⁻`.
fn abp_core(
    id: &str,
    w: &ScalarField,
    g: &ScalarField,
    pair: &EllipticityPair,
) -> Result<EstimateReport> {
    w.check_same_grid(g)?;
    let grid = w.grid().clone();
    if grid.dim() != pair.dim {
        return Err(Error::DimensionMismatch {
            expected: pair.dim,
            got: grid.dim(),
        });
    }
    let h = grid.spacing();
    let n = grid.dim() as f64;
    let boundary = grid.boundary_mask();
    let sup_all = w.max();
    let sup_bdry = w.positive_part().masked_max(&boundary).unwrap_or(0.0);
    let lhs = sup_all - sup_bdry;
    let params = pair_params(pair);
    let note_bdry = format!("boundary-layer sup of the positive part = {sup_bdry:e}");

    let wp = w.positive_part();
    let contact = upper_contact_set(&wp, default_tolerance(&wp))?;
    let samples = sample_ellipticity(pair, &grid)?;
    match filtered_norm(g, Some(&samples.inv_lambda), n, contact.members())? {
        FilteredNorm::Value {
            norm,
            excluded_volume,
        } => {
            let mut r = EstimateReport::classify(id, lhs, norm, h, pair, params)
                .with_note(note_bdry)
                .with_note(format!("contact set measure {:e}", contact.measure()));
            if excluded_volume > 0.0 {
                r = r.with_note(format!(
                    "excluded null set where lambda = 0, volume {excluded_volume:e}"
                ));
            }
            Ok(r)
        }
        FilteredNorm::Singular { volume, allowance } => Ok(EstimateReport::hypothesis_failure(
            id,
            lhs,
            h,
            pair,
            params,
            format!("forcing meets lambda = 0 on volume {volume:e} > allowance {allowance:e}"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellipticity::Profile;
    use crate::estimates::Verdict;
    use crate::grid::Grid;

    fn bowl(g: &std::sync::Arc<Grid>) -> ScalarField {
        let n = g.dim() as f64;
        ScalarField::from_fn(g.clone(), move |x| {
            (1.0 - x.iter().map(|v| v * v).sum::<f64>()) / (2.0 * n)
        })
    }

    #[test]
    fn bowl_constant_approaches_closed_form() {
        let g = Grid::ball(2, 1.0, 1.0 / 32.0).unwrap();
        let pair = EllipticityPair::uniform(1.0, 1.0, 2).unwrap();
        let f = ScalarField::constant(g.clone(), -1.0);
        let r = abp_report(&bowl(&g), &pair, &f).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        let target = 1.0 / (4.0 * std::f64::consts::PI.sqrt());
        assert!((r.empirical_constant / target - 1.0).abs() < 0.06, "{r:?}");
    }

    #[test]
    fn nonpositive_is_vacuous() {
        let g = Grid::ball(2, 1.0, 0.125).unwrap();
        let pair = EllipticityPair::uniform(1.0, 1.0, 2).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| -1.0 - x[0] * x[0]);
        let f = ScalarField::constant(g, 0.0);
        assert_eq!(abp_report(&u, &pair, &f).unwrap().verdict, Verdict::Vacuous);
    }

    #[test]
    fn kink_violates_min_form() {
        let g = Grid::cube(1, -1.0, 1.0, 1.0 / 16.0).unwrap();
        let pair = EllipticityPair::new(Profile::AbsGamma { gamma: 1.0 }, 1).unwrap();
        let v = ScalarField::from_fn(g.clone(), |x| x[0].abs() - 1.0);
        let f = ScalarField::constant(g, 0.0);
        let r = abp_min_report(&v, &pair, &f).unwrap();
        assert_eq!(
            (r.lhs, r.rhs_core, r.verdict),
            (1.0, 0.0, Verdict::Violated)
        );
    }

    #[test]
    fn min_form_mirrors_abp() {
        let g = Grid::ball(2, 1.0, 1.0 / 16.0).unwrap();
        let pair = EllipticityPair::uniform(1.0, 1.0, 2).unwrap();
        let u = bowl(&g);
        let a = abp_report(&u, &pair, &ScalarField::constant(g.clone(), -1.0)).unwrap();
        let b = abp_min_report(&u.map(|v| -v), &pair, &ScalarField::constant(g, 1.0)).unwrap();
        assert_eq!(a.lhs, b.lhs);
        assert!((a.rhs_core - b.rhs_core).abs() < 1e-12);
    }
}
