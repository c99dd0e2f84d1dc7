use abplab::ellipticity::{
    check_admissible, exponents_admissible, sample_ellipticity, sampled_norms,
};
use abplab::{derive_exponents, CheckMode, EllipticityPair, Grid, Profile};
use proptest::prelude::*;

#[test]
fn sampled_lambda_never_exceeds_big_lambda() {
    let cases = [
        (
            Profile::Constant {
                lambda: 0.5,
                big_lambda: 2.0,
            },
            3,
        ),
        (Profile::AbsGamma { gamma: 1.5 }, 1),
        (Profile::YSquared, 2),
        (Profile::GrushinAlpha { alpha: 0.3 }, 2),
        (Profile::FractionalS { s: 0.3 }, 2),
        (Profile::FractionalS { s: 0.8 }, 3),
    ];
    for (profile, n) in cases {
        let pair = EllipticityPair::new(profile, n).unwrap();
        let g = Grid::ball(n, 1.0, 1.0 / 8.0).unwrap();
        let s = sample_ellipticity(&pair, &g).unwrap();
        for k in 0..g.len() {
            assert!(
                s.lambda.value(k) <= s.big_lambda.value(k),
                "{profile} at node {k}"
            );
        }
    }
}

fn grushin_norms(alpha: f64, p: f64) -> Vec<f64> {
    let pair = EllipticityPair::new(Profile::GrushinAlpha { alpha }, 2)
        .unwrap()
        .with_declared(p, f64::INFINITY);
    [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|h| {
            sampled_norms(&pair, &Grid::ball(2, 1.0, *h).unwrap())
                .unwrap()
                .0
        })
        .collect()
}

#[test]
fn grushin_inverse_lambda_norm_refinement() {
    let bounded = grushin_norms(0.25, 2.0);
    for w in bounded.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() <= 0.25, "{bounded:?}");
    }
    let growing = grushin_norms(0.75, 8.0);
    for w in growing.windows(2) {
        assert!(w[1] / w[0] >= 1.25, "{growing:?}");
    }
}

#[test]
fn published_windows_over_parameter_scans() {
    for n in 1..=3usize {
        let nf = n as f64;
        for k in 0..100 {
            let p = 0.5 + 10.0 * k as f64 / 99.0;
            let q = if k % 3 == 0 {
                f64::INFINITY
            } else {
                2.0 + k as f64
            };
            assert_eq!(
                exponents_admissible(p, q, n, CheckMode::Abp),
                1.0 / p + 1.0 / q <= 1.0 / nf
            );
            assert_eq!(
                exponents_admissible(p, q, n, CheckMode::WeakHarnack),
                1.0 / p + 1.0 / q < 0.5 / nf
            );
        }
        assert!(exponents_admissible(nf, f64::INFINITY, n, CheckMode::Abp));
        assert!(!exponents_admissible(
            2.0 * nf,
            f64::INFINITY,
            n,
            CheckMode::WeakHarnack
        ));
    }
    for k in 0..100 {
        let alpha = 0.005 + 0.99 * k as f64 / 100.0;
        let pair = EllipticityPair::new(Profile::GrushinAlpha { alpha }, 2).unwrap();
        assert_eq!(
            check_admissible(&pair, CheckMode::Abp).admissible,
            alpha < 0.5,
            "alpha = {alpha}"
        );
    }
    for nx in 1..=2usize {
        let m = nx as f64;
        for k in 0..100 {
            let s = 0.005 + 0.99 * k as f64 / 100.0;
            let pair = EllipticityPair::new(Profile::FractionalS { s }, nx + 1).unwrap();
            let window = (m + 1.0) / (2.0 * m + 3.0) < s && s < (m + 1.0) / (2.0 * m + 1.0);
            assert_eq!(
                check_admissible(&pair, CheckMode::Abp).admissible,
                window,
                "s = {s}, n = {nx}"
            );
        }
    }
}

#[test]
fn near_window_edge_the_default_is_conservative() {
    let pair = EllipticityPair::new(Profile::GrushinAlpha { alpha: 0.48 }, 2).unwrap();
    let v = check_admissible(&pair, CheckMode::Abp);
    assert!(v.admissible && !v.declared_admissible && v.conservative);
}

fn pair(p: f64, q: f64, n: usize) -> (Option<f64>, Option<f64>, f64) {
    let e = derive_exponents(p, q, n);
    (e.theta, e.tau, e.slack)
}

/// `θ` and `τ` are defined through their reciprocals, which grow with `p`
/// and `q`; the exponents themselves therefore shrink toward `n`, and a
/// defined exponent stays defined.
fn ordered(small: Option<f64>, large: Option<f64>) -> bool {
    match (small, large) {
        (Some(a), Some(b)) => b <= a,
        (None, _) => true,
        (Some(_), None) => false,
    }
}

proptest! {
    #[test]
    fn derive_exponents_is_monotone(p in 1.0f64..50.0, q in 1.0f64..50.0, dp in 0.0f64..20.0, dq in 0.0f64..20.0, n in 1usize..=3) {
        let base = pair(p, q, n);
        for grown in [pair(p + dp, q, n), pair(p, q + dq, n)] {
            prop_assert!(grown.2 >= base.2);
            prop_assert!(ordered(base.0, grown.0));
            prop_assert!(ordered(base.1, grown.1));
        }
        if let Some(t) = pair(p, q, n).0 {
            prop_assert!(t >= n as f64);
        }
    }
}
