//! Numerical laboratory for degenerate and singular Pucci extremal operators.
//!
//! The crate builds finite-difference grids and fields, evaluates the
//! generalized Pucci operators `M±` with position-dependent ellipticity
//! `λ(x) ≤ Λ(x)`, computes upper contact sets through concave envelopes, and
//! checks the Aleksandrov–Bakelman–Pucci estimate, local boundedness, weak
//! Harnack, Harnack and Hölder statements by reporting empirical constants.
//!
//! Module map:
//!
//! * [`grid`] – grids, scalar fields, Hessians, quadrature, measures, snapshots.
//! * [`ellipticity`] – ellipticity profiles, integrability exponents, admissibility.
//! * [`pucci`] – small symmetric eigenvalue solvers and `M±`.
//! * [`contact`] – concave envelopes and upper contact sets.
//! * [`estimates`] – theorem checkers, the cutoff function and fits.
//! * [`solver`] – diagonal non-divergence Dirichlet solver and comparison checks.
//! * [`closed_form`] – catalog of closed-form functions with analytic Hessians.
//! * [`gallery`] – counterexample and application bundles.
//! * [`report`] – CSV serialization of reports.

pub mod closed_form;
pub mod contact;
pub mod ellipticity;
mod error;
pub mod estimates;
pub mod gallery;
pub mod grid;
pub mod pucci;
pub mod report;
pub mod solver;

pub use closed_form::ClosedForm;
pub use contact::{concave_envelope, slope_restricted_contact, upper_contact_set, ContactMask};
pub use ellipticity::{
    derive_exponents, CheckMode, EllipticityPair, IntegrabilityExponents, Profile,
};
pub use error::{Error, Result};
pub use estimates::{EstimateReport, Verdict};
pub use grid::{central_hessian, Grid, HessianField, ScalarField, Shape};
pub use pucci::{pucci_minus, pucci_plus, strong_residual, Sense, SymMatrix};
