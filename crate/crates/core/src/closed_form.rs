//! A fixed catalog of closed-form functions with analytic Hessians where they
//! exist. Config files refer to these by name.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::grid::{Grid, ScalarField};
use crate::pucci::SymMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Constant(f64),
    /// `(1 − |x|²)/(2n)`.
    Bowl,
    /// `−(1 − |x|²)/(2n)`.
    NegBowl,
    /// `|x|²`.
    SquaredNorm,
    /// `2 − |x|²`.
    TwoMinusSquaredNorm,
    /// `x·y`.
    Bilinear,
    /// `y² cos x`.
    Y2CosX,
    /// `sin x · cosh y`.
    SinXCoshY,
    /// `cosh x`.
    CoshX,
    /// `|x|`; no Hessian at the origin.
    AbsNorm,
    /// `|x| − 1`.
    AbsMinusOne,
    /// `|x|^{1/2}`.
    SqrtNorm,
    /// Harmonic quadratic in the tangential variables and the last
    /// coordinate `z`: `Σ x_i² − (n−1) z²`.
    HarmonicQuadratic,
}

const NAMES: &[&str] = &[
    "constant",
    "bowl",
    "neg_bowl",
    "squared_norm",
    "two_minus_squared_norm",
    "bilinear",
    "y2cosx",
    "sinx_coshy",
    "cosh_x",
    "abs_norm",
    "abs_minus_one",
    "sqrt_norm",
    "harmonic_quadratic",
];

fn sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl ClosedForm {
    pub fn catalog() -> &'static [&'static str] {
        NAMES
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClosedForm::Constant(_) => "constant",
            ClosedForm::Bowl => "bowl",
            ClosedForm::NegBowl => "neg_bowl",
            ClosedForm::SquaredNorm => "squared_norm",
            ClosedForm::TwoMinusSquaredNorm => "two_minus_squared_norm",
            ClosedForm::Bilinear => "bilinear",
            ClosedForm::Y2CosX => "y2cosx",
            ClosedForm::SinXCoshY => "sinx_coshy",
            ClosedForm::CoshX => "cosh_x",
            ClosedForm::AbsNorm => "abs_norm",
            ClosedForm::AbsMinusOne => "abs_minus_one",
            ClosedForm::SqrtNorm => "sqrt_norm",
            ClosedForm::HarmonicQuadratic => "harmonic_quadratic",
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        match *self {
            ClosedForm::Constant(c) => c,
            ClosedForm::Bowl => (1.0 - sq(x)) / (2.0 * n),
            ClosedForm::NegBowl => -(1.0 - sq(x)) / (2.0 * n),
            ClosedForm::SquaredNorm => sq(x),
            ClosedForm::TwoMinusSquaredNorm => 2.0 - sq(x),
            ClosedForm::Bilinear => x[0] * x[1],
            ClosedForm::Y2CosX => x[1] * x[1] * x[0].cos(),
            ClosedForm::SinXCoshY => x[0].sin() * x[1].cosh(),
            ClosedForm::CoshX => x[0].cosh(),
            ClosedForm::AbsNorm => sq(x).sqrt(),
            ClosedForm::AbsMinusOne => sq(x).sqrt() - 1.0,
            ClosedForm::SqrtNorm => sq(x).sqrt().sqrt(),
            ClosedForm::HarmonicQuadratic => {
                let (t, z) = x.split_at(x.len() - 1);
                sq(t) - (n - 1.0) * z[0] * z[0]
            }
        }
    }

    /// Analytic Hessian, or `None` where the function is not twice
    /// differentiable.
    pub fn hessian(&self, x: &[f64]) -> Option<SymMatrix> {
        let dim = x.len();
        let n = dim as f64;
        let scaled_identity = |c: f64| SymMatrix::identity(dim).scale(c);
        match *self {
            ClosedForm::Constant(_) => Some(SymMatrix::zeros(dim)),
            ClosedForm::Bowl => Some(scaled_identity(-1.0 / n)),
            ClosedForm::NegBowl => Some(scaled_identity(1.0 / n)),
            ClosedForm::SquaredNorm => Some(scaled_identity(2.0)),
            ClosedForm::TwoMinusSquaredNorm => Some(scaled_identity(-2.0)),
            ClosedForm::Bilinear => {
                let mut a = [[0.0; 3]; 3];
                a[0][1] = 1.0;
                a[1][0] = 1.0;
                Some(SymMatrix::from_symmetric(dim, a))
            }
            ClosedForm::Y2CosX => {
                let (c, s, y) = (x[0].cos(), x[0].sin(), x[1]);
                let mut a = [[0.0; 3]; 3];
                a[0][0] = -y * y * c;
                a[0][1] = -2.0 * y * s;
                a[1][0] = a[0][1];
                a[1][1] = 2.0 * c;
                Some(SymMatrix::from_symmetric(dim, a))
            }
            ClosedForm::SinXCoshY => {
                let (s, c) = (x[0].sin(), x[0].cos());
                let (ch, sh) = (x[1].cosh(), x[1].sinh());
                let mut a = [[0.0; 3]; 3];
                a[0][0] = -s * ch;
                a[0][1] = c * sh;
                a[1][0] = a[0][1];
                a[1][1] = s * ch;
                Some(SymMatrix::from_symmetric(dim, a))
            }
            ClosedForm::CoshX => {
                let mut a = [[0.0; 3]; 3];
                a[0][0] = x[0].cosh();
                Some(SymMatrix::from_symmetric(dim, a))
            }
            ClosedForm::AbsNorm | ClosedForm::AbsMinusOne | ClosedForm::SqrtNorm => None,
            ClosedForm::HarmonicQuadratic => {
                let mut d = vec![2.0; dim];
                d[dim - 1] = -2.0 * (n - 1.0);
                Some(SymMatrix::diag(&d))
            }
        }
    }

    pub fn hessian_or_err(&self, x: &[f64]) -> Result<SymMatrix> {
        self.hessian(x)
            .ok_or_else(|| Error::MissingHessian(self.name().into()))
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> ScalarField {
        let f = *self;
        ScalarField::from_fn(grid.clone(), move |x| f.value(x))
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedForm::Constant(c) => write!(f, "constant({c})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ClosedForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("constant(") {
            let c = rest
                .strip_suffix(')')
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("bad closed form `{s}`")))?;
            return Ok(ClosedForm::Constant(c));
        }
        Ok(match s {
            "bowl" => ClosedForm::Bowl,
            "neg_bowl" => ClosedForm::NegBowl,
            "squared_norm" => ClosedForm::SquaredNorm,
            "two_minus_squared_norm" => ClosedForm::TwoMinusSquaredNorm,
            "bilinear" => ClosedForm::Bilinear,
            "y2cosx" => ClosedForm::Y2CosX,
            "sinx_coshy" => ClosedForm::SinXCoshY,
            "cosh_x" => ClosedForm::CoshX,
            "abs_norm" => ClosedForm::AbsNorm,
            "abs_minus_one" => ClosedForm::AbsMinusOne,
            "sqrt_norm" => ClosedForm::SqrtNorm,
            "harmonic_quadratic" => ClosedForm::HarmonicQuadratic,
            other => return Err(Error::Unknown(format!("closed form `{other}`"))),
        })
    }
}
