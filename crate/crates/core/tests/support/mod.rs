//! Independent oracles and generators shared by the integration tests and
//! the acceptance suite.

#![allow(dead_code)]

use std::sync::Arc;

use abplab::solver::{Coefficient, LinearProblem};
use abplab::{EllipticityPair, Grid, ScalarField, SymMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric matrix with entries of magnitude up to `scale`.
pub fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> [[f64; 3]; 3] {
    let mut a = [[0.0; 3]; 3];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-scale..scale);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    a
}

/// Random `0 < λ ≤ Λ`.
pub fn random_ellipticity(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let l = rng.gen_range(0.05..3.0);
    (l, l * rng.gen_range(1.0..5.0))
}

pub fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Roots of `x³ + a x² + b x + c` by Cardano's formula in complex arithmetic,
/// polished by Newton steps on the cubic; real parts, ascending.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [f64; 3] {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = Complex64::new(q * q / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let mut big_c = (Complex64::new(-q / 2.0, 0.0) + disc).powf(1.0 / 3.0);
    if big_c.norm() < 1e-300 {
        big_c = (Complex64::new(-q / 2.0, 0.0) - disc).powf(1.0 / 3.0);
    }
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [0.0; 3];
    let mut w = Complex64::new(1.0, 0.0);
    for r in roots.iter_mut() {
        let ck = big_c * w;
        let t = if ck.norm() < 1e-300 {
            Complex64::new(0.0, 0.0)
        } else {
            ck - p / (3.0 * ck)
        };
        *r = t.re - a / 3.0;
        w *= omega;
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((*r + a) * *r + b) * *r + c;
            let df = (3.0 * *r + 2.0 * a) * *r + b;
            if df.abs() > 1e-300 {
                let step = f / df;
                if step.is_finite() && step.abs() < 1e-3 * (1.0 + r.abs()) {
                    *r -= step;
                }
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// Eigenvalues of a symmetric 3×3 matrix from its characteristic polynomial.
pub fn cardano_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    cubic_roots(-tr, minors, -det3(m))
}

pub fn sym(n: usize, a: [[f64; 3]; 3]) -> SymMatrix {
    SymMatrix::from_symmetric(n, a)
}

/// Feasible slopes of one node in 1D: `[lo, hi]`, possibly empty.
fn slope_interval(x: &[f64], u: &[f64], i: usize, tol: f64) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for j in 0..x.len() {
        if j == i {
            continue;
        }
        let dx = x[j] - x[i];
        let bound = (u[j] - u[i] - tol) / dx;
        if dx > 0.0 {
            lo = lo.max(bound);
        } else {
            hi = hi.min(bound);
        }
    }
    (lo, hi)
}

type Poly = Vec<[f64; 2]>;

/// Keeps the part of a convex polygon with `a·p ≥ b`.
fn clip(poly: &Poly, a: [f64; 2], b: f64) -> Poly {
    let side = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] - b;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let (sp, sq) = (side(&p), side(&q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn dist_to_polygon(poly: &Poly) -> f64 {
    let inside = (0..poly.len()).all(|k| {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        (q[0] - p[0]) * (-p[1]) - (q[1] - p[1]) * (-p[0]) >= 0.0
    });
    if inside && poly.len() >= 3 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let d = [q[0] - p[0], q[1] - p[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 {
            (-(p[0] * d[0] + p[1] * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = [p[0] + t * d[0], p[1] + t * d[1]];
        best = best.min((c[0] * c[0] + c[1] * c[1]).sqrt());
    }
    best
}

/// Per-node linear feasibility: `x` is a member when some slope `p` (with
/// `|p| ≤ r` if given) satisfies `u(y) − u(x) ≤ p·(y − x) + tol` for every
/// node `y` of the closed domain. Only interior nodes are tested.
pub fn brute_contact(u: &ScalarField, r: Option<f64>, tol: f64) -> Vec<bool> {
    let g = u.grid();
    let n = g.dim();
    let dom: Vec<usize> = (0..g.len()).filter(|&k| g.in_closed_domain(k)).collect();
    let mut out = vec![false; g.len()];
    match n {
        1 => {
            let x: Vec<f64> = dom.iter().map(|&k| g.coords(k)[0]).collect();
            let v: Vec<f64> = dom.iter().map(|&k| u.value(k)).collect();
            for (i, &k) in dom.iter().enumerate() {
                if !g.is_interior(k) {
                    continue;
                }
                let (mut lo, mut hi) = slope_interval(&x, &v, i, tol);
                if let Some(r) = r {
                    lo = lo.max(-r);
                    hi = hi.min(r);
                }
                out[k] = lo <= hi;
            }
        }
        2 => {
            let h = g.spacing();
            let osc = u.max() - u.min();
            let diam = 4.0;
            let big = 4.0 * diam * (osc + 1.0) / (h * h) + 1.0;
            for &k in &dom {
                if !g.is_interior(k) {
                    continue;
                }
                let xk = g.coords(k);
                let mut poly: Poly = vec![[-big, -big], [big, -big], [big, big], [-big, big]];
                for &j in &dom {
                    if j == k || poly.is_empty() {
                        continue;
                    }
                    let xj = g.coords(j);
                    let a = [xj[0] - xk[0], xj[1] - xk[1]];
                    poly = clip(&poly, a, u.value(j) - u.value(k) - tol);
                }
                out[k] = match r {
                    _ if poly.is_empty() => false,
                    None => true,
                    Some(r) => dist_to_polygon(&poly) <= r,
                };
            }
        }
        _ => panic!("brute force only for n ≤ 2"),
    }
    out
}

/// A matched comparison pair: quadratics `u = ½xᵀAx + b·x + c` and `v`
/// with `A = B + P`, `P ⪰ 0`, `f = M⁺(B)`, and `u ≤ v` on the boundary.
pub struct ComparisonPair {
    pub pair: EllipticityPair,
    pub u: ScalarField,
    pub v: ScalarField,
    pub f: ScalarField,
}

fn quad(a: &[[f64; 3]; 3], b: &[f64; 3], c: f64, x: &[f64]) -> f64 {
    let mut s = c;
    for i in 0..x.len() {
        s += b[i] * x[i];
        for j in 0..x.len() {
            s += 0.5 * a[i][j] * x[i] * x[j];
        }
    }
    s
}

/// Ellipticity and curvature are kept in ranges where the 0.1 corruption,
/// which lowers `M⁺` by at least `0.2nλ`, exceeds the per-node residual
/// tolerance on grids with `h ≤ 1/24`.
pub fn comparison_pair(rng: &mut ChaCha8Rng, grid: &Arc<Grid>) -> ComparisonPair {
    let n = grid.dim();
    let l = rng.gen_range(0.5..1.5);
    let big = l * rng.gen_range(1.0..2.0);
    let pair = EllipticityPair::uniform(l, big, n).unwrap();
    let bm = random_sym(rng, n, 0.5);
    let mut root = [[0.0; 3]; 3];
    for row in root.iter_mut().take(n) {
        for v in row.iter_mut().take(n) {
            *v = rng.gen_range(-0.5..0.5);
        }
    }
    let mut am = bm;
    for i in 0..n {
        for j in 0..n {
            am[i][j] += (0..n).map(|k| root[i][k] * root[j][k]).sum::<f64>();
        }
    }
    let bv = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ];
    let bu = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ];
    let cv = rng.gen_range(-1.0..1.0);
    let diff = |x: &[f64]| quad(&am, &bu, 0.0, x) - quad(&bm, &bv, cv, x);
    let boundary_max = (0..grid.len())
        .filter(|&k| !grid.is_interior(k))
        .map(|k| diff(&grid.coords(k)[..n]))
        .fold(f64::NEG_INFINITY, f64::max);
    let cu = -boundary_max - rng.gen_range(0.0..0.1);
    let u = ScalarField::from_fn(grid.clone(), |x| quad(&am, &bu, cu, x));
    let v = ScalarField::from_fn(grid.clone(), |x| quad(&bm, &bv, cv, x));
    let f0 = abplab::pucci::m_plus(&sym(n, bm), l, big);
    let f = ScalarField::constant(grid.clone(), f0);
    ComparisonPair { pair, u, v, f }
}

/// The corrupted partner `v + 0.1(1 − |x|²)` of a matched pair, with the
/// same `f`.
pub fn corrupted(p: &ComparisonPair) -> ScalarField {
    let g = p.v.grid().clone();
    let n = g.dim();
    ScalarField::new(
        g.clone(),
        (0..g.len())
            .map(|k| {
                let x = g.coords(k);
                p.v.value(k) + 0.1 * (1.0 - x[..n].iter().map(|t| t * t).sum::<f64>())
            })
            .collect(),
    )
    .unwrap()
}

/// Random nodal values of one of five kinds: noise, concave plus noise,
/// small integers, a minimum of planes, or a sine minus a quadratic.
pub fn contact_values(r: &mut ChaCha8Rng, g: &Arc<Grid>, kind: usize) -> ScalarField {
    let n = g.dim();
    let (a, b, c) = (
        r.gen_range(-1.0..1.0),
        r.gen_range(-1.0..1.0),
        r.gen_range(0.2..3.0),
    );
    let noise: Vec<f64> = (0..g.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
    let planes: Vec<[f64; 4]> = (0..4)
        .map(|_| {
            [
                r.gen_range(-2.0..2.0),
                r.gen_range(-2.0..2.0),
                r.gen_range(-2.0..2.0),
                r.gen_range(-1.0..1.0),
            ]
        })
        .collect();
    let ints: Vec<f64> = (0..g.len()).map(|_| r.gen_range(0..4) as f64).collect();
    let vals = (0..g.len())
        .map(|k| {
            let x = &g.coords(k)[..n];
            let q: f64 = x.iter().map(|t| t * t).sum();
            match kind % 5 {
                0 => noise[k],
                1 => -c * q + a * x[0] + 1e-3 * noise[k],
                2 => ints[k],
                3 => planes
                    .iter()
                    .map(|p| p[3] + (0..n).map(|i| p[i] * x[i]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min),
                _ => (3.0 * x[0] + b).sin() - c * q + 0.05 * noise[k],
            }
        })
        .collect();
    ScalarField::new(g.clone(), vals).unwrap()
}

/// Diagonal problem with random admissible coefficients, constant forcing
/// `f` and random boundary data.
pub fn random_boundary_problem(seed: u64, g: &Arc<Grid>, f: f64) -> LinearProblem {
    let mut r = rng(seed);
    let n = g.dim();
    let coeffs: Vec<ScalarField> = (0..n)
        .map(|axis| {
            let c = match r.gen_range(0..3) {
                0 => Coefficient::Const(r.gen_range(0.1..3.0)),
                1 => Coefficient::AbsPow {
                    axis: r.gen_range(0..n),
                    exponent: r.gen_range(0.1..2.0),
                    scale: r.gen_range(0.5..2.0),
                },
                _ => Coefficient::Const(if axis == 0 { 1.0 } else { 0.5 }),
            };
            ScalarField::from_fn(g.clone(), move |x| c.value(x))
        })
        .collect();
    let data: Vec<f64> = (0..g.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
    LinearProblem::new(
        g.clone(),
        coeffs,
        ScalarField::constant(g.clone(), f),
        ScalarField::new(g.clone(), data).unwrap(),
    )
    .unwrap()
}
