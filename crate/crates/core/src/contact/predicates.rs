//! Orientation predicates on lifted lattice points `(i, u_i)` with a
//! floating-point filter and an exact big-integer fallback.
//!
//! Spatial coordinates are lattice indices (exact integers). Values are
//! converted to exact integers by scaling every value by the same power of
//! two, which changes determinants only by a positive factor.

use num_bigint::BigInt;
use num_traits::{Float, Signed, Zero};

const EPS: f64 = f64::EPSILON;

/// Lifted point set in `ℝ^{n+1}`.
pub(crate) struct Lifted {
    pub n: usize,
    pub idx: Vec<[i64; 3]>,
    pub val: Vec<f64>,
    exact: Vec<BigInt>,
}

/// The last row of an orientation determinant.
#[derive(Clone, Copy)]
pub(crate) enum Query<'a> {
    Point(usize),
    /// The centroid of the given points, scaled by their count.
    Centroid(&'a [usize]),
}

impl Lifted {
    pub fn new(n: usize, idx: Vec<[i64; 3]>, val: Vec<f64>) -> Self {
        let decoded: Vec<(u64, i16, i8)> = val.iter().map(|v| v.integer_decode()).collect();
        let emin = decoded
            .iter()
            .filter(|(m, _, _)| *m != 0)
            .map(|(_, e, _)| *e as i64)
            .min()
            .unwrap_or(0);
        let exact = decoded
            .iter()
            .map(|&(m, e, s)| {
                let mut b = BigInt::from(m) << ((e as i64 - emin) as usize);
                if s < 0 {
                    b = -b;
                }
                b
            })
            .collect();
        Lifted { n, idx, val, exact }
    }

    pub fn len(&self) -> usize {
        self.val.len()
    }

    pub fn d(&self) -> usize {
        self.n + 1
    }

    /// Sign of `det[p_1 − p_0, …, p_{d−1} − p_0, q − p_0]` where `simplex`
    /// holds the `d` points `p_i`.
    pub fn orient(&self, simplex: &[usize], q: Query<'_>) -> i8 {
        let (det, bound) = self.orient_float(simplex, q);
        if det > bound {
            1
        } else if det < -bound {
            -1
        } else {
            self.orient_exact(simplex, q)
        }
    }

    /// Float orientation value; proportional to the signed distance of `q`
    /// from the facet hyperplane for a fixed facet.
    pub fn orient_value(&self, simplex: &[usize], q: Query<'_>) -> f64 {
        self.orient_float(simplex, q).0
    }

    fn orient_float(&self, simplex: &[usize], q: Query<'_>) -> (f64, f64) {
        let d = self.d();
        let n = self.n;
        let p0 = simplex[0];
        let mut a = [[0.0f64; 4]; 4];
        let mut e = [[0.0f64; 4]; 4];
        for r in 0..d - 1 {
            let p = simplex[r + 1];
            for k in 0..n {
                a[r][k] = (self.idx[p][k] - self.idx[p0][k]) as f64;
            }
            a[r][n] = self.val[p] - self.val[p0];
            e[r][n] = EPS * (self.val[p].abs() + self.val[p0].abs());
        }
        match q {
            Query::Point(p) => {
                for k in 0..n {
                    a[d - 1][k] = (self.idx[p][k] - self.idx[p0][k]) as f64;
                }
                a[d - 1][n] = self.val[p] - self.val[p0];
                e[d - 1][n] = EPS * (self.val[p].abs() + self.val[p0].abs());
            }
            Query::Centroid(pts) => {
                let m = pts.len() as i64;
                let mut mag = m as f64 * self.val[p0].abs();
                let mut s = 0.0;
                for k in 0..n {
                    let sum: i64 = pts.iter().map(|&p| self.idx[p][k]).sum();
                    a[d - 1][k] = (sum - m * self.idx[p0][k]) as f64;
                }
                for &p in pts {
                    s += self.val[p];
                    mag += self.val[p].abs();
                }
                a[d - 1][n] = s - m as f64 * self.val[p0];
                e[d - 1][n] = 4.0 * (pts.len() as f64 + 2.0) * EPS * mag;
            }
        }
        let mut abs_plus = [[0.0f64; 4]; 4];
        let mut abs = [[0.0f64; 4]; 4];
        for r in 0..d {
            for c in 0..d {
                abs[r][c] = a[r][c].abs();
                abs_plus[r][c] = abs[r][c] + e[r][c];
            }
        }
        let det = det_f(&a, d);
        let p_hi = perm_f(&abs_plus, d);
        let p_lo = perm_f(&abs, d);
        let bound = (p_hi - p_lo) + 32.0 * EPS * p_hi;
        (det, bound)
    }

    fn orient_exact(&self, simplex: &[usize], q: Query<'_>) -> i8 {
        let d = self.d();
        let n = self.n;
        let p0 = simplex[0];
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(d);
        for r in 0..d - 1 {
            let p = simplex[r + 1];
            let mut row: Vec<BigInt> = (0..n)
                .map(|k| BigInt::from(self.idx[p][k] - self.idx[p0][k]))
                .collect();
            row.push(&self.exact[p] - &self.exact[p0]);
            rows.push(row);
        }
        let last = match q {
            Query::Point(p) => {
                let mut row: Vec<BigInt> = (0..n)
                    .map(|k| BigInt::from(self.idx[p][k] - self.idx[p0][k]))
                    .collect();
                row.push(&self.exact[p] - &self.exact[p0]);
                row
            }
            Query::Centroid(pts) => {
                let m = pts.len() as i64;
                let mut row: Vec<BigInt> = (0..n)
                    .map(|k| {
                        let sum: i64 = pts.iter().map(|&p| self.idx[p][k]).sum();
                        BigInt::from(sum - m * self.idx[p0][k])
                    })
                    .collect();
                let mut s = BigInt::zero();
                for &p in pts {
                    s += &self.exact[p];
                }
                row.push(s - BigInt::from(m) * &self.exact[p0]);
                row
            }
        };
        rows.push(last);
        let det = det_big(&rows);
        if det.is_positive() {
            1
        } else if det.is_negative() {
            -1
        } else {
            0
        }
    }
}

fn det_f(a: &[[f64; 4]; 4], d: usize) -> f64 {
    laplace_f(a, d, 0, (1u8 << d) - 1, false)
}

fn perm_f(a: &[[f64; 4]; 4], d: usize) -> f64 {
    laplace_f(a, d, 0, (1u8 << d) - 1, true)
}

/// Laplace expansion along rows `row..d` over the columns in `cols`.
fn laplace_f(a: &[[f64; 4]; 4], d: usize, row: usize, cols: u8, perm: bool) -> f64 {
    if row == d - 1 {
        let c = cols.trailing_zeros() as usize;
        return a[row][c];
    }
    let mut acc = 0.0;
    let mut sign = 1.0;
    for c in 0..d {
        if cols & (1 << c) == 0 {
            continue;
        }
        let sub = laplace_f(a, d, row + 1, cols & !(1 << c), perm);
        acc += if perm {
            a[row][c] * sub
        } else {
            sign * a[row][c] * sub
        };
        sign = -sign;
    }
    acc
}

fn det_big(rows: &[Vec<BigInt>]) -> BigInt {
    fn rec(rows: &[Vec<BigInt>], row: usize, cols: &mut Vec<usize>) -> BigInt {
        if row == rows.len() - 1 {
            return rows[row][cols[0]].clone();
        }
        let mut acc = BigInt::zero();
        for i in 0..cols.len() {
            let c = cols.remove(i);
            if !rows[row][c].is_zero() {
                let sub = rec(rows, row + 1, cols);
                let term = &rows[row][c] * sub;
                if i % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            cols.insert(i, c);
        }
        acc
    }
    let mut cols: Vec<usize> = (0..rows.len()).collect();
    rec(rows, 0, &mut cols)
}

/// Exact integer determinant of a `k×k` matrix, `k ≤ 3`.
pub(crate) fn det_int(m: &[[i128; 3]; 3], k: usize) -> i128 {
    match k {
        0 => 1,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

/// `det[a_1 − a_0, …, a_n − a_0]` for `n+1` lattice points in `ℤ^n`.
pub(crate) fn spatial_det(pts: &[[i64; 3]], n: usize) -> i128 {
    let mut m = [[0i128; 3]; 3];
    for r in 0..n {
        for c in 0..n {
            m[r][c] = (pts[r + 1][c] - pts[0][c]) as i128;
        }
    }
    det_int(&m, n)
}
