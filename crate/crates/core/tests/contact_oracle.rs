mod support;

use std::sync::Arc;

use abplab::contact::default_tolerance;
use abplab::{
    central_hessian, concave_envelope, slope_restricted_contact, upper_contact_set, Grid,
    ScalarField,
};
use proptest::prelude::*;
use rand::Rng;
use support::{brute_contact, contact_values as random_values, rng};

const TOL: f64 = 1e-9;

/// Returns member counts of Γ⁺ and Γ⁺_r.
fn assert_equivalent(u: &ScalarField, r: f64, label: &str) -> (usize, usize) {
    let hull = upper_contact_set(u, TOL).unwrap();
    let brute = brute_contact(u, None, TOL);
    let diff: Vec<usize> = (0..u.len())
        .filter(|&k| hull.is_member(k) != brute[k])
        .collect();
    assert!(diff.is_empty(), "{label}: Γ⁺ differs at nodes {diff:?}");
    let hull_r = slope_restricted_contact(u, r, TOL).unwrap();
    let brute_r = brute_contact(u, Some(r), TOL);
    let diff: Vec<usize> = (0..u.len())
        .filter(|&k| hull_r.is_member(k) != brute_r[k])
        .collect();
    assert!(
        diff.is_empty(),
        "{label}: Γ⁺_r (r = {r}) differs at nodes {diff:?}"
    );
    assert!(hull.witness_excess(u) <= TOL * 10.0, "{label}: witness");
    (hull.count(), hull_r.count())
}

fn assert_mixed(counts: &[(usize, usize)], interior: usize) {
    let members: usize = counts.iter().map(|c| c.0).sum();
    let restricted: usize = counts.iter().map(|c| c.1).sum();
    assert!(
        members > 0 && members < interior,
        "members {members} of {interior}"
    );
    assert!(
        restricted > 0 && restricted < members,
        "restricted {restricted} of {members}"
    );
}

#[test]
fn one_dimensional_grids_match_brute_force() {
    let mut r = rng(11);
    let mut counts = Vec::new();
    let mut interior = 0;
    for case in 0..50 {
        let nodes = r.gen_range(5..=200usize);
        let g = Grid::cube(1, -1.0, 1.0, 2.0 / (nodes - 1) as f64).unwrap();
        assert!(g.len() <= 200);
        let u = random_values(&mut r, &g, case);
        let radius = r.gen_range(0.05..4.0);
        counts.push(assert_equivalent(&u, radius, &format!("1D case {case}")));
        interior += g.interior_count();
    }
    assert_mixed(&counts, interior);
}

#[test]
fn two_dimensional_grids_match_brute_force() {
    let mut r = rng(12);
    let mut counts = Vec::new();
    let mut interior = 0;
    for case in 0..20 {
        let g = if case % 4 == 3 {
            Grid::ball(2, 1.0, 1.0 / r.gen_range(4..=16) as f64).unwrap()
        } else {
            let m = r.gen_range(5..=33usize);
            Grid::cube(2, -1.0, 1.0, 2.0 / (m - 1) as f64).unwrap()
        };
        assert!(g.len() <= 33 * 33);
        let u = random_values(&mut r, &g, case);
        let radius = r.gen_range(0.05..4.0);
        counts.push(assert_equivalent(&u, radius, &format!("2D case {case}")));
        interior += g.interior_count();
    }
    assert_mixed(&counts, interior);
}

#[test]
fn canonical_cases() {
    for g in [
        Grid::cube(1, -1.0, 1.0, 1.0 / 32.0).unwrap(),
        Grid::ball(2, 1.0, 1.0 / 16.0).unwrap(),
        Grid::cube(2, -1.0, 1.0, 1.0 / 8.0).unwrap(),
        Grid::ball(3, 1.0, 1.0 / 4.0).unwrap(),
    ] {
        let interior = g.interior_count();
        let concave =
            ScalarField::from_fn(g.clone(), |x| 2.0 - x.iter().map(|t| t * t).sum::<f64>());
        let convex = ScalarField::from_fn(g.clone(), |x| x.iter().map(|t| t * t).sum::<f64>());
        let cone = ScalarField::from_fn(g.clone(), |x| x.iter().map(|t| t * t).sum::<f64>().sqrt());
        assert_eq!(
            upper_contact_set(&concave, default_tolerance(&concave))
                .unwrap()
                .count(),
            interior
        );
        assert_eq!(
            upper_contact_set(&convex, default_tolerance(&convex))
                .unwrap()
                .count(),
            0
        );
        assert_eq!(
            upper_contact_set(&cone, default_tolerance(&cone))
                .unwrap()
                .count(),
            0
        );
    }
}

fn smooth(g: &Arc<Grid>, a: f64, b: f64, c: f64, d: f64) -> ScalarField {
    ScalarField::from_fn(g.clone(), |x| {
        let y = if x.len() > 1 { x[1] } else { 0.0 };
        a * (b * x[0] + c).sin() + d * (y * b).cos() - x.iter().map(|t| t * t).sum::<f64>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn envelope_is_idempotent_and_monotone(
        vals in prop::collection::vec(-1.0f64..1.0, 17 * 17),
        bump in prop::collection::vec(0.0f64..0.5, 17 * 17),
    ) {
        let g = Grid::cube(2, -1.0, 1.0, 0.125).unwrap();
        let u = ScalarField::new(g.clone(), vals).unwrap();
        let v = u.zip_with(&ScalarField::new(g.clone(), bump).unwrap(), |a, b| a + b).unwrap();
        let e = concave_envelope(&u).unwrap();
        let ee = concave_envelope(&e).unwrap();
        let ev = concave_envelope(&v).unwrap();
        for k in 0..g.len() {
            prop_assert!((e.value(k) - ee.value(k)).abs() <= 1e-12 * (1.0 + e.value(k).abs()));
            prop_assert!(e.value(k) >= u.value(k));
            prop_assert!(ev.value(k) >= e.value(k) - 1e-12);
        }
    }

    #[test]
    fn contact_nodes_touch_and_curve_down(a in -1.0f64..1.0, b in 0.5f64..3.0, c in -1.0f64..1.0, d in -1.0f64..1.0) {
        let h = 1.0 / 16.0;
        let g = Grid::ball(2, 1.0, h).unwrap();
        let u = smooth(&g, a, b, c, d);
        let tol = default_tolerance(&u);
        let gamma = upper_contact_set(&u, tol).unwrap();
        let env = concave_envelope(&u).unwrap();
        let hess = central_hessian(&u).unwrap();
        for k in (0..g.len()).filter(|&k| gamma.is_member(k)) {
            prop_assert!(env.value(k) - u.value(k) <= tol);
            let e = hess.entry(k).unwrap();
            prop_assert!(e.eigenvalues[1] <= 10.0 * h, "eigenvalue {} at node {}", e.eigenvalues[1], k);
        }
        prop_assert!(gamma.witness_excess(&u) <= tol);
        let restricted = slope_restricted_contact(&u, 0.5, tol).unwrap();
        prop_assert!(restricted.is_subset_of(&gamma));
    }
}
