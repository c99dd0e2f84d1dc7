mod support;

use std::sync::Arc;

use abplab::solver::{
    comparison_check, manufactured_rhs_linear, solve_linear_dirichlet, Coefficient,
    ComparisonVerdict, LinearProblem,
};
use abplab::{ClosedForm, Grid};
use support::{comparison_pair, corrupted, random_boundary_problem, rng};

const TOL: f64 = 1e-10;
const SWEEPS: usize = 1_000_000;

fn grushin(alpha: f64) -> Vec<Coefficient> {
    vec![
        Coefficient::Const(1.0),
        Coefficient::AbsPow {
            axis: 0,
            exponent: alpha,
            scale: 1.0,
        },
    ]
}

fn y2cosx_coefficients() -> Vec<Coefficient> {
    vec![
        Coefficient::Const(2.0),
        Coefficient::AbsPow {
            axis: 1,
            exponent: 2.0,
            scale: 1.0,
        },
    ]
}

fn solve_error(g: &Arc<Grid>, truth: ClosedForm, coeffs: &[Coefficient]) -> (f64, f64) {
    let f = manufactured_rhs_linear(truth, coeffs, g).unwrap();
    let prob = LinearProblem::from_catalog(g, coeffs, &f, truth).unwrap();
    let sol = solve_linear_dirichlet(&prob, TOL, SWEEPS).unwrap();
    let exact = truth.sample(g);
    let err = sol.u.zip_with(&exact, |a, b| (a - b).abs()).unwrap().max();
    (err, sol.residual)
}

fn observed_orders(truth: ClosedForm, coeffs: &[Coefficient]) -> Vec<f64> {
    let errs: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|h| solve_error(&Grid::cube(2, -1.0, 1.0, *h).unwrap(), truth, coeffs).0)
        .collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn quadratics_are_solved_exactly() {
    let g = Grid::ball(2, 1.0, 1.0 / 16.0).unwrap();
    for truth in [
        ClosedForm::SquaredNorm,
        ClosedForm::Bilinear,
        ClosedForm::Bowl,
        ClosedForm::TwoMinusSquaredNorm,
    ] {
        for coeffs in [
            vec![Coefficient::Const(1.0); 2],
            y2cosx_coefficients(),
            grushin(0.25),
        ] {
            let (err, residual) = solve_error(&g, truth, &coeffs);
            assert!(
                residual <= TOL * (1.0 + 4.0),
                "{truth}: residual {residual:e}"
            );
            assert!(err <= 1e-9, "{truth}: error {err:e}");
        }
    }
    let g3 = Grid::cube(3, -1.0, 1.0, 1.0 / 8.0).unwrap();
    let (err, _) = solve_error(&g3, ClosedForm::SquaredNorm, &[Coefficient::Const(1.0); 3]);
    assert!(err <= 1e-9);
}

#[test]
fn manufactured_orders() {
    let y2 = observed_orders(ClosedForm::Y2CosX, &y2cosx_coefficients());
    assert!(y2.iter().all(|o| *o >= 1.8), "y2cosx orders {y2:?}");
    let uniform = observed_orders(ClosedForm::SinXCoshY, &grushin(0.0));
    assert!(
        uniform.iter().all(|o| *o >= 1.8),
        "alpha = 0 orders {uniform:?}"
    );
    let degenerate = observed_orders(ClosedForm::SinXCoshY, &grushin(0.25));
    assert!(
        degenerate.iter().all(|o| *o >= 1.0),
        "alpha = 0.25 orders {degenerate:?}"
    );
}

#[test]
fn discrete_maximum_principle() {
    for seed in 0..20u64 {
        let g = if seed % 2 == 0 {
            Grid::ball(2, 1.0, 1.0 / 16.0).unwrap()
        } else {
            Grid::cube(2, -1.0, 1.0, 1.0 / 8.0).unwrap()
        };
        let prob = random_boundary_problem(seed, &g, 0.0);
        let sol = solve_linear_dirichlet(&prob, TOL, SWEEPS).unwrap();
        let bdry = g.boundary_mask();
        let (lo, hi) = (
            sol.u.masked_min(&bdry).unwrap(),
            sol.u.masked_max(&bdry).unwrap(),
        );
        let slack = 1e-8;
        assert!(
            sol.u.max() <= hi + slack && sol.u.min() >= lo - slack,
            "seed {seed}"
        );
    }
}

#[test]
fn solution_is_linear_in_the_data() {
    let g = Grid::cube(2, -1.0, 1.0, 1.0 / 16.0).unwrap();
    let p1 = random_boundary_problem(100, &g, 1.0);
    let mut p2 = random_boundary_problem(101, &g, -0.5);
    p2.coefficients = p1.coefficients.clone();
    let mut sum = p1.clone();
    sum.rhs = p1.rhs.zip_with(&p2.rhs, |a, b| a + b).unwrap();
    sum.boundary = p1.boundary.zip_with(&p2.boundary, |a, b| a + b).unwrap();
    let s1 = solve_linear_dirichlet(&p1, TOL, SWEEPS).unwrap().u;
    let s2 = solve_linear_dirichlet(&p2, TOL, SWEEPS).unwrap().u;
    let s = solve_linear_dirichlet(&sum, TOL, SWEEPS).unwrap().u;
    for k in 0..g.len() {
        assert!((s.value(k) - s1.value(k) - s2.value(k)).abs() <= 1e-8);
    }
}

#[test]
fn comparison_pairs_and_corruptions() {
    let mut r = rng(33);
    let mut flagged = 0;
    for k in 0..20 {
        let g = match k % 4 {
            0 | 2 => Grid::ball(2, 1.0, 1.0 / 32.0).unwrap(),
            1 => Grid::cube(2, -1.0, 1.0, 1.0 / 32.0).unwrap(),
            _ => Grid::cube(3, -1.0, 1.0, 1.0 / 24.0).unwrap(),
        };
        let p = comparison_pair(&mut r, &g);
        let out = comparison_check(&p.u, &p.v, &p.pair, &p.f).unwrap();
        assert_eq!(out.verdict, ComparisonVerdict::Holds, "pair {k}: {out:?}");
        if k >= 15 {
            let bad = comparison_check(&corrupted(&p), &p.v, &p.pair, &p.f).unwrap();
            if matches!(bad.verdict, ComparisonVerdict::HypothesisFailure(_)) {
                flagged += 1;
            }
        }
    }
    assert_eq!(flagged, 5);
}
