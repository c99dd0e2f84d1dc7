//! Upper hulls of lifted lattice points.
//!
//! One spatial dimension uses a monotone chain. Two and three spatial
//! dimensions use an incremental beneath-beyond hull in `ℝ^{n+1}` with
//! conflict lists; every sign decision goes through the filtered exact
//! orientation predicate.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::predicates::{det_int, spatial_det, Lifted, Query};
use crate::{Error, Result};

/// Outcome of a hull computation: vertex lists of the upper facets, each with
/// `n+1` entries, or `Flat` when all lifted points share one hyperplane.
pub(crate) enum UpperHull {
    Facets(Vec<[usize; 4]>),
    Flat([usize; 4]),
}

/// Upper hull of points with distinct 1D lattice indices.
pub(crate) fn upper_chain(l: &Lifted) -> Result<UpperHull> {
    let mut order: Vec<usize> = (0..l.len()).collect();
    order.sort_by_key(|&i| l.idx[i][0]);
    if order.len() < 2 {
        return Err(Error::DegeneratePoints("need at least two nodes".into()));
    }
    let mut chain: Vec<usize> = Vec::with_capacity(order.len());
    for &p in &order {
        // Pop while the last turn is not strictly clockwise (the middle point
        // lies on or below the chord).
        while chain.len() >= 2 {
            let a = chain[chain.len() - 2];
            let b = chain[chain.len() - 1];
            if l.orient(&[a, b], Query::Point(p)) >= 0 {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(p);
    }
    Ok(UpperHull::Facets(
        chain.windows(2).map(|w| [w[0], w[1], 0, 0]).collect(),
    ))
}

#[derive(Clone)]
struct Facet {
    verts: [usize; 4],
    nbr: [usize; 4],
    outside: Vec<usize>,
    alive: bool,
}

/// Largest-volume spatial simplex chosen greedily, exact in integers.
fn spatial_simplex(l: &Lifted) -> Result<Vec<usize>> {
    let n = l.n;
    let mut chosen = vec![0usize];
    for k in 1..=n {
        let mut best = (0i128, usize::MAX);
        for p in 0..l.len() {
            let g = gram_det(l, &chosen, p);
            if g > best.0 {
                best = (g, p);
            }
        }
        if best.1 == usize::MAX {
            return Err(Error::DegeneratePoints(format!(
                "lattice nodes span fewer than {} affine dimensions",
                k
            )));
        }
        chosen.push(best.1);
    }
    Ok(chosen)
}

/// Gram determinant of `{x_i − x_0}` over `chosen ∪ {p}`.
fn gram_det(l: &Lifted, chosen: &[usize], p: usize) -> i128 {
    let n = l.n;
    let o = l.idx[chosen[0]];
    let mut vecs: Vec<[i128; 3]> = chosen[1..]
        .iter()
        .chain(std::iter::once(&p))
        .map(|&q| {
            let mut v = [0i128; 3];
            for k in 0..n {
                v[k] = (l.idx[q][k] - o[k]) as i128;
            }
            v
        })
        .collect();
    let k = vecs.len();
    let mut g = [[0i128; 3]; 3];
    for i in 0..k {
        for j in 0..k {
            g[i][j] = (0..n).map(|c| vecs[i][c] * vecs[j][c]).sum();
        }
    }
    vecs.clear();
    det_int(&g, k)
}

pub(crate) fn upper_hull(l: &Lifted, seed: u64) -> Result<UpperHull> {
    if l.n == 1 {
        return upper_chain(l);
    }
    let d = l.d();
    let mut simplex = spatial_simplex(l)?;

    // Last vertex: off the hyperplane through the lifted spatial simplex.
    let base: Vec<usize> = simplex.clone();
    let mut best = (0.0f64, usize::MAX);
    for p in 0..l.len() {
        let v = l.orient_value(&base, Query::Point(p)).abs();
        if v > best.0 {
            best = (v, p);
        }
    }
    let apex = if best.1 != usize::MAX && l.orient(&base, Query::Point(best.1)) != 0 {
        Some(best.1)
    } else {
        (0..l.len()).find(|&p| l.orient(&base, Query::Point(p)) != 0)
    };
    let Some(apex) = apex else {
        let mut f = [0usize; 4];
        f[..d].copy_from_slice(&base);
        return Ok(UpperHull::Flat(f));
    };
    simplex.push(apex);
    let centroid = simplex.clone();

    let mut facets: Vec<Facet> = Vec::new();
    for i in 0..=d {
        let mut verts = [0usize; 4];
        let mut nbr = [0usize; 4];
        let mut k = 0;
        for j in 0..=d {
            if j != i {
                verts[k] = simplex[j];
                nbr[k] = j;
                k += 1;
            }
        }
        if l.orient(&verts[..d], Query::Point(simplex[i])) > 0 {
            verts.swap(0, 1);
            nbr.swap(0, 1);
        }
        facets.push(Facet {
            verts,
            nbr,
            outside: Vec::new(),
            alive: true,
        });
    }

    let in_simplex: std::collections::HashSet<usize> = simplex.iter().copied().collect();
    let mut rest: Vec<usize> = (0..l.len()).filter(|p| !in_simplex.contains(p)).collect();
    rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for p in rest {
        for f in facets.iter_mut() {
            if l.orient(&f.verts[..d], Query::Point(p)) > 0 {
                f.outside.push(p);
                break;
            }
        }
    }

    let mut stack: Vec<usize> = (0..facets.len())
        .filter(|&f| !facets[f].outside.is_empty())
        .collect();
    let mut mark: Vec<u32> = vec![0; facets.len()];
    let mut round = 0u32;
    while let Some(fid) = stack.pop() {
        if !facets[fid].alive || facets[fid].outside.is_empty() {
            continue;
        }
        round += 1;
        let q = {
            let f = &facets[fid];
            *f.outside
                .iter()
                .max_by(|&&a, &&b| {
                    let va = l.orient_value(&f.verts[..d], Query::Point(a));
                    let vb = l.orient_value(&f.verts[..d], Query::Point(b));
                    va.total_cmp(&vb).then(b.cmp(&a))
                })
                .expect("nonempty")
        };

        // Visible region by breadth-first search; mark == round means
        // visible, mark == round | high bit means tested and hidden.
        let hidden = round | 0x8000_0000;
        let mut visible = vec![fid];
        mark.resize(facets.len(), 0);
        mark[fid] = round;
        let mut head = 0;
        while head < visible.len() {
            let v = visible[head];
            head += 1;
            for k in 0..d {
                let g = facets[v].nbr[k];
                if mark[g] == round || mark[g] == hidden {
                    continue;
                }
                if l.orient(&facets[g].verts[..d], Query::Point(q)) > 0 {
                    mark[g] = round;
                    visible.push(g);
                } else {
                    mark[g] = hidden;
                }
            }
        }

        let mut ridges: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        let mut created = Vec::new();
        for &v in &visible {
            for k in 0..d {
                let g = facets[v].nbr[k];
                if mark[g] == round {
                    continue;
                }
                let mut verts = facets[v].verts;
                verts[k] = q;
                let mut qpos = k;
                if l.orient(&verts[..d], Query::Centroid(&centroid)) > 0 {
                    let swap = if k == 0 { 1 } else { 0 };
                    verts.swap(k, swap);
                    qpos = swap;
                }
                let id = facets.len();
                let mut nbr = [usize::MAX; 4];
                nbr[qpos] = g;
                for slot in 0..d {
                    if facets[g].nbr[slot] == v {
                        facets[g].nbr[slot] = id;
                    }
                }
                facets.push(Facet {
                    verts,
                    nbr,
                    outside: Vec::new(),
                    alive: true,
                });
                created.push(id);
                for j in 0..d {
                    if j == qpos {
                        continue;
                    }
                    let mut key: Vec<usize> =
                        (0..d).filter(|&m| m != j).map(|m| verts[m]).collect();
                    key.sort_unstable();
                    if let Some((other, oj)) = ridges.remove(&key) {
                        facets[id].nbr[j] = other;
                        facets[other].nbr[oj] = id;
                    } else {
                        ridges.insert(key, (id, j));
                    }
                }
            }
        }
        debug_assert!(ridges.is_empty(), "unmatched ridges in hull update");

        let mut orphans = Vec::new();
        for &v in &visible {
            facets[v].alive = false;
            orphans.append(&mut facets[v].outside);
        }
        for p in orphans {
            if p == q {
                continue;
            }
            for &c in &created {
                if l.orient(&facets[c].verts[..d], Query::Point(p)) > 0 {
                    facets[c].outside.push(p);
                    break;
                }
            }
        }
        for &c in &created {
            if !facets[c].outside.is_empty() {
                stack.push(c);
            }
        }
    }

    let n = l.n;
    let upper = facets
        .iter()
        .filter(|f| f.alive)
        .filter(|f| {
            let pts: Vec<[i64; 3]> = f.verts[..d].iter().map(|&p| l.idx[p]).collect();
            spatial_det(&pts, n) > 0
        })
        .map(|f| f.verts)
        .collect();
    Ok(UpperHull::Facets(upper))
}
