//! Fixtures shared by the criterion benchmarks.

use abplab::{Grid, ScalarField, SymMatrix};

/// A deterministic spread of symmetric 3×3 matrices.
pub fn sample_matrices(count: usize) -> Vec<SymMatrix> {
    (0..count)
        .map(|k| {
            let t = k as f64 * 0.618_033_988_75;
            let a = [
                [t.sin(), (2.0 * t).cos(), (3.0 * t).sin()],
                [(2.0 * t).cos(), (5.0 * t).sin(), t.cos()],
                [(3.0 * t).sin(), t.cos(), (7.0 * t).cos()],
            ];
            SymMatrix::from_symmetric(3, a)
        })
        .collect()
}

/// A bumpy field on a disk grid, neither concave nor convex.
pub fn bumpy_disk(h: f64) -> ScalarField {
    let grid = Grid::ball(2, 1.0, h).expect("valid grid");
    ScalarField::from_fn(grid, |x| {
        (1.0 - x[0] * x[0] - x[1] * x[1]) + 0.1 * (7.0 * x[0]).sin() * (5.0 * x[1]).cos()
    })
}
