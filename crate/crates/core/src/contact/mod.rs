//! Concave envelopes and upper contact sets `Γ⁺(u)`, `Γ⁺_r(u)`.
//!
//! The envelope is read off the upper facets of the convex hull of the lifted
//! points `(x, u(x))`. A node belongs to `Γ⁺` when `u` touches the envelope
//! there; the gradient of a containing upper facet is a supporting slope.

mod hull;
mod predicates;

use std::sync::Arc;

use hull::{upper_hull, UpperHull};
use predicates::{spatial_det, Lifted};

use crate::grid::{Grid, ScalarField};
use crate::{Error, Result};

const HULL_SEED: u64 = 0x00ab_91ab;

/// Default membership tolerance `10⁻⁸(1 + osc u)`.
pub fn default_tolerance(u: &ScalarField) -> f64 {
    1e-8 * (1.0 + (u.max() - u.min()))
}

struct Envelope {
    grid: Arc<Grid>,
    values: Vec<f64>,
    /// Upper facets whose projection contains each node.
    facets_at: Vec<Vec<u32>>,
    /// Facet gradients in physical units.
    gradients: Vec<[f64; 3]>,
}

fn build_envelope(u: &ScalarField) -> Result<Envelope> {
    let grid = u.grid().clone();
    let n = grid.dim();
    if grid.len() < n + 1 {
        return Err(Error::DegeneratePoints(format!(
            "{} nodes cannot span {} dimensions",
            grid.len(),
            n
        )));
    }
    if u.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(
            "concave envelope needs a finite field".into(),
        ));
    }
    let domain: Vec<usize> = (0..grid.len())
        .filter(|&k| grid.in_closed_domain(k))
        .collect();
    let mut slot = vec![u32::MAX; grid.len()];
    for (i, &k) in domain.iter().enumerate() {
        slot[k] = i as u32;
    }
    let idx: Vec<[i64; 3]> = domain.iter().map(|&k| grid.lattice_index(k)).collect();
    let val: Vec<f64> = domain.iter().map(|&k| u.value(k)).collect();
    let lifted = Lifted::new(n, idx, val);
    let h = grid.spacing();

    // Nodes outside the closed domain keep their own values and take no part
    // in the hull.
    let mut env = Envelope {
        grid: grid.clone(),
        values: u.values().to_vec(),
        facets_at: vec![Vec::new(); grid.len()],
        gradients: Vec::new(),
    };

    match upper_hull(&lifted, HULL_SEED)? {
        UpperHull::Flat(base) => {
            env.gradients.push(facet_gradient(&lifted, &base[..=n], h));
            for &k in &domain {
                env.facets_at[k].push(0);
            }
        }
        UpperHull::Facets(facets) => {
            for (fid, verts) in facets.iter().enumerate() {
                env.gradients.push(facet_gradient(&lifted, &verts[..=n], h));
                rasterize(&lifted, &grid, &slot, &verts[..=n], fid as u32, &mut env);
            }
        }
    }
    if let Some(node) = domain
        .iter()
        .copied()
        .find(|&k| env.facets_at[k].is_empty())
    {
        return Err(Error::DegeneratePoints(format!(
            "node {node} is not covered by any upper facet"
        )));
    }
    Ok(env)
}

/// Gradient of the affine function through the lifted facet vertices.
fn facet_gradient(l: &Lifted, verts: &[usize], h: f64) -> [f64; 3] {
    let n = l.n;
    let p0 = verts[0];
    let mut m = [[0.0f64; 3]; 3];
    let mut du = [0.0f64; 3];
    for r in 0..n {
        for c in 0..n {
            m[r][c] = (l.idx[verts[r + 1]][c] - l.idx[p0][c]) as f64;
        }
        du[r] = l.val[verts[r + 1]] - l.val[p0];
    }
    let det = det3(&m, n);
    let mut g = [0.0; 3];
    for k in 0..n {
        let mut mk = m;
        for r in 0..n {
            mk[r][k] = du[r];
        }
        g[k] = det3(&mk, n) / det / h;
    }
    g
}

fn det3(m: &[[f64; 3]; 3], n: usize) -> f64 {
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

/// Records the facet at every lattice node inside its projected simplex and
/// sets the envelope value by exact barycentric weights.
fn rasterize(l: &Lifted, grid: &Grid, slot: &[u32], verts: &[usize], fid: u32, env: &mut Envelope) {
    let n = l.n;
    let pts: Vec<[i64; 3]> = verts.iter().map(|&v| l.idx[v]).collect();
    let total = spatial_det(&pts, n);
    debug_assert!(total > 0);
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for k in 0..n {
        lo[k] = pts.iter().map(|p| p[k]).min().unwrap();
        hi[k] = pts.iter().map(|p| p[k]).max().unwrap();
    }
    let mut y = lo;
    loop {
        if let Some(node) = grid.node_at(&y).filter(|&k| slot[k] != u32::MAX) {
            let mut weights = [0i128; 4];
            let mut inside = true;
            for i in 0..=n {
                let mut q = pts.clone();
                q[i] = y;
                let w = spatial_det(&q, n);
                if w < 0 {
                    inside = false;
                    break;
                }
                weights[i] = w;
            }
            if inside {
                if env.facets_at[node].is_empty() {
                    let mut v = 0.0;
                    for i in 0..=n {
                        v += weights[i] as f64 / total as f64 * l.val[verts[i]];
                    }
                    env.values[node] = v;
                }
                env.facets_at[node].push(fid);
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            y[k] += 1;
            if y[k] <= hi[k] {
                break;
            }
            y[k] = lo[k];
            k += 1;
        }
    }
}

/// Least concave majorant of `u` over the nodes of the closed domain. Ball
/// boundary-layer nodes outside the sphere keep the value of `u`.
pub fn concave_envelope(u: &ScalarField) -> Result<ScalarField> {
    let env = build_envelope(u)?;
    // Rounding in the barycentric combination must not push the envelope
    // below the data at hull vertices.
    let values = env
        .values
        .iter()
        .zip(u.values())
        .map(|(e, v)| e.max(*v))
        .collect();
    ScalarField::new(env.grid, values)
}

/// An upper contact set with per-member supporting slopes.
#[derive(Debug, Clone)]
pub struct ContactMask {
    grid: Arc<Grid>,
    member: Vec<bool>,
    slopes: Vec<Option<[f64; 3]>>,
    tol: f64,
    radius: Option<f64>,
}

impl ContactMask {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn members(&self) -> &[bool] {
        &self.member
    }

    pub fn is_member(&self, node: usize) -> bool {
        self.member[node]
    }

    /// Supporting slope of a member node.
    pub fn witness(&self, node: usize) -> Option<&[f64]> {
        self.slopes[node].as_ref().map(|s| &s[..self.grid.dim()])
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|m| **m).count()
    }

    /// Member count times the cell volume.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    /// Whether every member of `self` is a member of `other`.
    pub fn is_subset_of(&self, other: &ContactMask) -> bool {
        self.member
            .iter()
            .zip(&other.member)
            .all(|(a, b)| !*a || *b)
    }

    /// 0/1 field for snapshots.
    pub fn to_field(&self) -> ScalarField {
        let v = self
            .member
            .iter()
            .map(|m| if *m { 1.0 } else { 0.0 })
            .collect();
        ScalarField::new(self.grid.clone(), v).expect("finite indicator")
    }

    /// Largest value of `u(y) − u(x) − p·(y − x)` over members `x` and all
    /// nodes `y` of the closed domain. The witness property holds when this is at most `tol`.
    pub fn witness_excess(&self, u: &ScalarField) -> f64 {
        let g = &self.grid;
        let n = g.dim();
        let mut worst = f64::NEG_INFINITY;
        for x in 0..g.len() {
            let Some(p) = self.witness(x) else { continue };
            let cx = g.coords(x);
            for y in (0..g.len()).filter(|&y| g.in_closed_domain(y)) {
                let cy = g.coords(y);
                let lin: f64 = (0..n).map(|k| p[k] * (cy[k] - cx[k])).sum();
                worst = worst.max(u.value(y) - u.value(x) - lin);
            }
        }
        worst
    }
}

/// `Γ⁺(u)` restricted to interior nodes: members satisfy
/// `u(x) ≥ envelope(x) − tol`.
pub fn upper_contact_set(u: &ScalarField, tol: f64) -> Result<ContactMask> {
    contact_impl(u, tol, None)
}

/// `Γ⁺_r(u)`: members of `Γ⁺(u)` admitting a supporting slope with `|p| ≤ r`.
pub fn slope_restricted_contact(u: &ScalarField, r: f64, tol: f64) -> Result<ContactMask> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slope radius must be positive, got {r}"
        )));
    }
    contact_impl(u, tol, Some(r))
}

fn contact_impl(u: &ScalarField, tol: f64, radius: Option<f64>) -> Result<ContactMask> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let env = build_envelope(u)?;
    let grid = env.grid.clone();
    let n = grid.dim();
    let mut member = vec![false; grid.len()];
    let mut slopes = vec![None; grid.len()];
    for node in 0..grid.len() {
        if !grid.is_interior(node) || u.value(node) < env.values[node] - tol {
            continue;
        }
        let facets = &env.facets_at[node];
        match radius {
            None => {
                member[node] = true;
                slopes[node] = Some(env.gradients[facets[0] as usize]);
            }
            Some(r) => {
                let grads: Vec<[f64; 3]> =
                    facets.iter().map(|&f| env.gradients[f as usize]).collect();
                let p = min_norm_in_hull(&grads, n);
                let norm = p[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm <= r + 1e-12 * r.max(1.0) {
                    member[node] = true;
                    slopes[node] = Some(p);
                }
            }
        }
    }
    Ok(ContactMask {
        grid,
        member,
        slopes,
        tol,
        radius,
    })
}

/// Minimum-norm point of the convex hull of `pts` in `ℝ^n`, by enumerating
/// affinely independent subsets of at most `n+1` points.
pub(crate) fn min_norm_in_hull(pts: &[[f64; 3]], n: usize) -> [f64; 3] {
    let mut uniq: Vec<[f64; 3]> = Vec::new();
    for p in pts {
        let scale = 1.0 + p[..n].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !uniq
            .iter()
            .any(|q| (0..n).all(|k| (p[k] - q[k]).abs() <= 1e-13 * scale))
        {
            uniq.push(*p);
        }
    }
    let norm2 = |p: &[f64; 3]| (0..n).map(|k| p[k] * p[k]).sum::<f64>();
    let mut best = uniq[0];
    for p in &uniq {
        if norm2(p) < norm2(&best) {
            best = *p;
        }
    }
    let m = uniq.len();
    let mut subset = Vec::new();
    for mask in 1u32..(1u32 << m.min(16)) {
        let k = mask.count_ones() as usize;
        if k < 2 || k > n + 1 {
            continue;
        }
        subset.clear();
        subset.extend((0..m).filter(|i| mask & (1 << i) != 0).map(|i| uniq[i]));
        if let Some(p) = affine_projection(&subset, n) {
            if norm2(&p) < norm2(&best) {
                best = p;
            }
        }
    }
    best
}

/// Projection of the origin onto the affine hull of `pts`, returned only when
/// its barycentric coordinates are nonnegative.
fn affine_projection(pts: &[[f64; 3]], n: usize) -> Option<[f64; 3]> {
    let k = pts.len() - 1;
    let g0 = pts[0];
    let v: Vec<[f64; 3]> = pts[1..]
        .iter()
        .map(|p| {
            let mut d = [0.0; 3];
            for c in 0..n {
                d[c] = p[c] - g0[c];
            }
            d
        })
        .collect();
    let dot = |a: &[f64; 3], b: &[f64; 3]| (0..n).map(|c| a[c] * b[c]).sum::<f64>();
    let mut gram = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = dot(&v[i], &v[j]);
        }
        rhs[i] = -dot(&v[i], &g0);
    }
    let det = det3(&gram, k);
    let scale: f64 = (0..k).map(|i| gram[i][i]).product();
    if det.abs() <= 1e-12 * scale || det == 0.0 {
        return None;
    }
    let mut mu = [0.0f64; 3];
    for c in 0..k {
        let mut mc = gram;
        for r in 0..k {
            mc[r][c] = rhs[r];
        }
        mu[c] = det3(&mc, k) / det;
    }
    let lam0 = 1.0 - mu[..k].iter().sum::<f64>();
    if lam0 < -1e-12 || mu[..k].iter().any(|m| *m < -1e-12) {
        return None;
    }
    let mut p = g0;
    for i in 0..k {
        for c in 0..n {
            p[c] += mu[i] * v[i][c];
        }
    }
    Some(p)
}

/// One row of a stability probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEntry {
    pub sup_delta: f64,
    pub perturbed_count: usize,
    pub dilated_count: usize,
    /// Members of `Γ⁺(u + δ)` outside the dilation of `Γ⁺(u)`.
    pub escaped: Vec<usize>,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub base_count: usize,
    pub entries: Vec<ProbeEntry>,
}

impl StabilityReport {
    pub fn all_contained(&self) -> bool {
        self.entries.iter().all(|e| e.contained)
    }
}

/// Checks `Γ⁺(u + δ_j) ⊆ Γ⁺(u; tol + 2‖δ_j‖∞)` for each perturbation, where
/// the right side is the contact set with the widened tolerance.
pub fn contact_stability_probe(
    u: &ScalarField,
    perturbations: &[ScalarField],
    tol: f64,
) -> Result<StabilityReport> {
    let base = upper_contact_set(u, tol)?;
    let mut entries = Vec::with_capacity(perturbations.len());
    for delta in perturbations {
        let sup = delta.sup_norm();
        let perturbed = upper_contact_set(&u.zip_with(delta, |a, b| a + b)?, tol)?;
        let dilated = upper_contact_set(u, tol + 2.0 * sup)?;
        let escaped: Vec<usize> = (0..u.len())
            .filter(|&k| perturbed.is_member(k) && !dilated.is_member(k))
            .collect();
        entries.push(ProbeEntry {
            sup_delta: sup,
            perturbed_count: perturbed.count(),
            dilated_count: dilated.count(),
            contained: escaped.is_empty(),
            escaped,
        });
    }
    Ok(StabilityReport {
        base_count: base.count(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interior_all(mask: &ContactMask) -> bool {
        let g = mask.grid();
        (0..g.len()).all(|k| mask.is_member(k) == g.is_interior(k))
    }

    #[test]
    fn concave_is_own_envelope() {
        for n in 1..=3 {
            let h = if n == 3 { 0.25 } else { 0.125 };
            let g = Grid::cube(n, -1.0, 1.0, h).unwrap();
            let u = ScalarField::from_fn(g, |x| 1.0 - x.iter().map(|v| v * v).sum::<f64>());
            let e = concave_envelope(&u).unwrap();
            for k in 0..u.len() {
                assert!((e.value(k) - u.value(k)).abs() < 1e-12);
            }
            let m = upper_contact_set(&u, default_tolerance(&u)).unwrap();
            assert!(interior_all(&m));
            assert!(m.witness_excess(&u) <= m.tol());
        }
    }

    #[test]
    fn convex_parabola_has_chord_envelope() {
        let g = Grid::cube(1, -1.0, 1.0, 1.0 / 16.0).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0] * x[0]);
        let e = concave_envelope(&u).unwrap();
        assert!(e.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(upper_contact_set(&u, 1e-9).unwrap().count(), 0);
        let a = ScalarField::from_fn(u.grid().clone(), |x| x[0].abs());
        assert_eq!(upper_contact_set(&a, 1e-9).unwrap().count(), 0);
    }

    #[test]
    fn constant_and_affine_are_flat() {
        let g = Grid::cube(2, 0.0, 1.0, 0.25).unwrap();
        let c = ScalarField::constant(g.clone(), 3.0);
        let e = concave_envelope(&c).unwrap();
        assert!(e.values().iter().all(|v| *v == 3.0));
        let a = ScalarField::from_fn(g, |x| 2.0 * x[0] - x[1]);
        let m = upper_contact_set(&a, 1e-9).unwrap();
        assert!(interior_all(&m));
        let node = (0..a.len()).find(|k| m.is_member(*k)).unwrap();
        let w = m.witness(node).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-12 && (w[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_restriction_on_paraboloid() {
        let g = Grid::cube(1, -1.0, 1.0, 1.0 / 16.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| 1.0 - x[0] * x[0]);
        let tol = default_tolerance(&u);
        assert!(interior_all(
            &slope_restricted_contact(&u, 3.0, tol).unwrap()
        ));
        let half = slope_restricted_contact(&u, 0.5, tol).unwrap();
        for k in 0..g.len() {
            let x = g.coords(k)[0];
            if g.is_interior(k) {
                assert_eq!(half.is_member(k), 2.0 * x.abs() <= 0.5 + g.spacing());
            }
        }
        let tiny = slope_restricted_contact(&u, 1e-6, tol).unwrap();
        assert_eq!(tiny.count(), 1);
        assert!(slope_restricted_contact(&u, 0.0, tol).is_err());
    }

    #[test]
    fn min_norm_point() {
        let p = min_norm_in_hull(&[[1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]], 2);
        assert!((p[0]).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let q = min_norm_in_hull(&[[1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [-2.0, 0.5, 0.0]], 2);
        assert!(q[0].hypot(q[1]) < 1e-12);
    }

    #[test]
    fn probe_identity_and_sine() {
        let g = Grid::cube(1, -1.0, 1.0, 1.0 / 32.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| 1.0 - x[0] * x[0]);
        let zero = ScalarField::constant(g.clone(), 0.0);
        let r = contact_stability_probe(&u, &[zero], 1e-9).unwrap();
        assert!(r.all_contained());
        let deltas: Vec<ScalarField> = (3..8)
            .map(|j| {
                let eps = 0.5f64.powi(j);
                ScalarField::from_fn(g.clone(), move |x| eps * (5.0 * x[0]).sin())
            })
            .collect();
        assert!(contact_stability_probe(&u, &deltas, 1e-9)
            .unwrap()
            .all_contained());
    }
}
