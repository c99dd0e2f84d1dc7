//! Uniform Cartesian grids over boxes and balls, node classification, and the
//! fields, derivatives and measures built on top of them.

mod field;
mod hessian;
mod quadrature;
mod snapshot;

pub use field::ScalarField;
pub use hessian::{central_hessian, HessianEntry, HessianField};
pub use quadrature::{distribution_function, weighted_lp_norm, CubeSpec, MeasureReport};
pub use snapshot::{fmt_real, read_snapshot, write_snapshot, FieldSnapshot};

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// Lattice coordinates of a node; unused trailing axes are zero.
pub type LatticeIndex = [i64; 3];

const REL_EPS: f64 = 1e-9;
const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Axis-aligned box `Π [lo_k, hi_k]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Ball of the given radius centered at the origin.
    Ball { radius: f64 },
}

impl Shape {
    pub fn cube(dim: usize, a: f64, b: f64) -> Self {
        Shape::Box {
            lo: vec![a; dim],
            hi: vec![b; dim],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Box { .. } => "box",
            Shape::Ball { .. } => "ball",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Box { lo, hi } => {
                write!(f, "box")?;
                for (a, b) in lo.iter().zip(hi) {
                    write!(f, "[{a},{b}]")?;
                }
                Ok(())
            }
            Shape::Ball { radius } => write!(f, "ball(R={radius})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
}

/// A uniform lattice restricted to a box or a ball.
///
/// Box grids contain every lattice point of the closed box; a node is
/// boundary iff it lies on a face. Ball grids contain the lattice points with
/// `|x| < R + h`; a node is interior iff `|x| + h ≤ R`, i.e. its whole
/// `h`-neighborhood stays inside the closed ball, and the remaining nodes form
/// a boundary layer straddling the sphere. Every interior node therefore has
/// the full `3^n` stencil available.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    shape: Shape,
    spacing: f64,
    origin: [f64; 3],
    extent: [usize; 3],
    nodes: Vec<LatticeIndex>,
    kinds: Vec<NodeKind>,
    lookup: Vec<u32>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.shape == other.shape
            && self.spacing == other.spacing
            && self.nodes.len() == other.nodes.len()
    }
}

/// Convenience constructor returning a shared grid.
pub fn build_grid(dim: usize, shape: Shape, spacing: f64) -> Result<Arc<Grid>> {
    Grid::new(dim, shape, spacing).map(Arc::new)
}

impl Grid {
    pub fn new(dim: usize, shape: Shape, spacing: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} outside {{1,2,3}}"
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        match &shape {
            Shape::Box { lo, hi } => Self::new_box(dim, lo.clone(), hi.clone(), spacing),
            Shape::Ball { radius } => Self::new_ball(dim, *radius, spacing),
        }
    }

    pub fn cube(dim: usize, a: f64, b: f64, spacing: f64) -> Result<Arc<Self>> {
        build_grid(dim, Shape::cube(dim, a, b), spacing)
    }

    pub fn ball(dim: usize, radius: f64, spacing: f64) -> Result<Arc<Self>> {
        build_grid(dim, Shape::Ball { radius }, spacing)
    }

    fn new_box(dim: usize, lo: Vec<f64>, hi: Vec<f64>, h: f64) -> Result<Self> {
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "box bounds have {} / {} entries for dimension {dim}",
                lo.len(),
                hi.len()
            )));
        }
        let diameter = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        if h > diameter {
            return Err(Error::InvalidGrid(format!(
                "spacing {h} exceeds domain diameter {diameter}"
            )));
        }
        let mut origin = [0.0; 3];
        let mut extent = [1usize; 3];
        for k in 0..dim {
            let side = hi[k] - lo[k];
            if !(side > 0.0) {
                return Err(Error::InvalidGrid(format!("empty box side on axis {k}")));
            }
            let cells = side / h;
            let rounded = cells.round();
            if rounded < 1.0 || (cells - rounded).abs() > REL_EPS * rounded.max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "spacing {h} does not divide side {side} on axis {k}"
                )));
            }
            origin[k] = lo[k];
            extent[k] = rounded as usize + 1;
        }
        let mut grid = Grid {
            dim,
            shape: Shape::Box { lo, hi },
            spacing: h,
            origin,
            extent,
            nodes: Vec::new(),
            kinds: Vec::new(),
            lookup: Vec::new(),
        };
        grid.populate(|idx, _| {
            let on_face = (0..dim).any(|k| idx[k] == 0 || idx[k] as usize == extent[k] - 1);
            Some(if on_face {
                NodeKind::Boundary
            } else {
                NodeKind::Interior
            })
        });
        Ok(grid)
    }

    fn new_ball(dim: usize, radius: f64, h: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if h > 2.0 * radius {
            return Err(Error::InvalidGrid(format!(
                "spacing {h} exceeds domain diameter {}",
                2.0 * radius
            )));
        }
        let half = ((radius + h) / h + REL_EPS).floor() as i64;
        let mut origin = [0.0; 3];
        let mut extent = [1usize; 3];
        for k in 0..dim {
            origin[k] = -(half as f64) * h;
            extent[k] = 2 * half as usize + 1;
        }
        let mut grid = Grid {
            dim,
            shape: Shape::Ball { radius },
            spacing: h,
            origin,
            extent,
            nodes: Vec::new(),
            kinds: Vec::new(),
            lookup: Vec::new(),
        };
        let slack = REL_EPS * h;
        grid.populate(|_, x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r >= radius + h - slack {
                None
            } else if r + h <= radius + slack {
                Some(NodeKind::Interior)
            } else {
                Some(NodeKind::Boundary)
            }
        });
        Ok(grid)
    }

    fn populate(&mut self, classify: impl Fn(&LatticeIndex, &[f64]) -> Option<NodeKind>) {
        let total: usize = self.extent.iter().product();
        self.lookup = vec![ABSENT; total];
        for k2 in 0..self.extent[2] as i64 {
            for k1 in 0..self.extent[1] as i64 {
                for k0 in 0..self.extent[0] as i64 {
                    let idx = [k0, k1, k2];
                    let x = self.lattice_coords(&idx);
                    if let Some(kind) = classify(&idx, &x[..self.dim]) {
                        let flat = self.flat(&idx);
                        self.lookup[flat] = self.nodes.len() as u32;
                        self.nodes.push(idx);
                        self.kinds.push(kind);
                    }
                }
            }
        }
    }

    fn flat(&self, idx: &LatticeIndex) -> usize {
        (idx[0] as usize) + self.extent[0] * ((idx[1] as usize) + self.extent[1] * idx[2] as usize)
    }

    fn lattice_coords(&self, idx: &LatticeIndex) -> [f64; 3] {
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            x[k] = self.origin[k] + idx[k] as f64 * self.spacing;
        }
        x
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Volume `hⁿ` attributed to each node by the midpoint rule.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn lattice_index(&self, node: usize) -> LatticeIndex {
        self.nodes[node]
    }

    /// Physical coordinates of a node; entries past `dim` are zero.
    pub fn coords(&self, node: usize) -> [f64; 3] {
        self.lattice_coords(&self.nodes[node])
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.kinds[node] == NodeKind::Interior
    }

    pub fn node_at(&self, idx: &LatticeIndex) -> Option<usize> {
        for k in 0..3 {
            if idx[k] < 0 || idx[k] as usize >= self.extent[k] {
                return None;
            }
        }
        match self.lookup[self.flat(idx)] {
            ABSENT => None,
            n => Some(n as usize),
        }
    }

    pub fn neighbor(&self, node: usize, offset: &LatticeIndex) -> Option<usize> {
        let base = self.nodes[node];
        self.node_at(&[
            base[0] + offset[0],
            base[1] + offset[1],
            base[2] + offset[2],
        ])
    }

    pub fn interior_mask(&self) -> Vec<bool> {
        self.kinds
            .iter()
            .map(|k| *k == NodeKind::Interior)
            .collect()
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        self.kinds
            .iter()
            .map(|k| *k == NodeKind::Boundary)
            .collect()
    }

    pub fn interior_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| **k == NodeKind::Interior)
            .count()
    }

    pub fn all_mask(&self) -> Vec<bool> {
        vec![true; self.len()]
    }

    /// Nodes with `|x - center| ≤ radius + h/2`.
    pub fn ball_mask(&self, center: &[f64], radius: f64) -> Vec<bool> {
        let r = radius + 0.5 * self.spacing;
        (0..self.len())
            .map(|n| self.distance(n, center) <= r)
            .collect()
    }

    /// Interior nodes of `B_{1/2}`, with the `h/2` margin used for half-ball
    /// sups and infs.
    pub fn half_ball_mask(&self) -> Vec<bool> {
        let origin = vec![0.0; self.dim];
        self.ball_mask(&origin, 0.5)
            .into_iter()
            .zip(&self.kinds)
            .map(|(m, k)| m && *k == NodeKind::Interior)
            .collect()
    }

    /// Nodes of the open cube `K_r(z)` (side `2r`), shrunk by a relative slack.
    pub fn cube_mask(&self, cube: &CubeSpec) -> Vec<bool> {
        let r = cube.half_side - REL_EPS * self.spacing;
        (0..self.len())
            .map(|n| {
                let x = self.coords(n);
                (0..self.dim).all(|k| (x[k] - cube.center[k]).abs() < r)
            })
            .collect()
    }

    pub fn distance(&self, node: usize, center: &[f64]) -> f64 {
        let x = self.coords(node);
        (0..self.dim)
            .map(|k| {
                let c = center.get(k).copied().unwrap_or(0.0);
                (x[k] - c) * (x[k] - c)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self, node: usize) -> f64 {
        let x = self.coords(node);
        x[..self.dim].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Whether the node lies in the closed continuum domain. Ball grids carry
    /// a boundary layer that partly sits outside the sphere.
    pub fn in_closed_domain(&self, node: usize) -> bool {
        match &self.shape {
            Shape::Box { .. } => true,
            Shape::Ball { radius } => self.norm(node) <= radius * (1.0 + REL_EPS),
        }
    }

    pub fn closed_domain_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|k| self.in_closed_domain(k)).collect()
    }

    /// Whether the closed cube lies inside the (closed) domain.
    pub fn contains_cube(&self, cube: &CubeSpec) -> bool {
        if cube.center.len() < self.dim {
            return false;
        }
        match &self.shape {
            Shape::Box { lo, hi } => (0..self.dim).all(|k| {
                cube.center[k] - cube.half_side >= lo[k] - REL_EPS
                    && cube.center[k] + cube.half_side <= hi[k] + REL_EPS
            }),
            Shape::Ball { radius } => {
                let far: f64 = (0..self.dim)
                    .map(|k| {
                        let v = cube.center[k].abs() + cube.half_side;
                        v * v
                    })
                    .sum::<f64>()
                    .sqrt();
                far <= radius + REL_EPS
            }
        }
    }

    /// `(n-1)`-dimensional boundary measure of the domain; for `n = 1` this
    /// counts the two endpoints.
    pub fn surface_area(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => match self.dim {
                1 => 2.0,
                2 => 2.0 * std::f64::consts::PI * radius,
                _ => 4.0 * std::f64::consts::PI * radius * radius,
            },
            Shape::Box { lo, hi } => {
                let sides: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
                (0..self.dim)
                    .map(|k| {
                        2.0 * sides
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != k)
                            .map(|(_, s)| *s)
                            .product::<f64>()
                    })
                    .sum()
            }
        }
    }

    /// Lebesgue measure of the continuum domain.
    pub fn domain_volume(&self) -> f64 {
        match &self.shape {
            Shape::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            Shape::Ball { radius } => unit_ball_volume(self.dim) * radius.powi(self.dim as i32),
        }
    }

    /// True when both grids describe the same lattice.
    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }
}

/// Volume of the unit ball in dimension `n ≤ 3`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => f64::NAN,
    }
}
