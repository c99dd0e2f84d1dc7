//! Theorem checkers reporting empirical constants, plus the fits and the
//! cutoff utilities used by the interior estimates.

mod abp;
mod cutoff;
mod harnack;
mod holder;
mod kappa;

use std::fmt;

pub use abp::{abp_min_report, abp_report};
pub use cutoff::{
    cutoff_eta, matrix_cauchy_schwarz_check, sign_flip_radius, threshold_beta,
    CauchySchwarzOutcome, CutoffFields, CutoffSpec,
};
pub use harnack::{
    harnack_report, largest_stable_t, local_boundedness_report, weak_harnack_report,
    HarnackDiagnostics, LocalBoundedness, WeakHarnackOutcome,
};
pub use holder::{holder_fit, HolderFit};
pub use kappa::{kappa_epsilon_sweep, kappa_fit, KappaFit, KappaSweep, Thresholds};

use crate::ellipticity::EllipticityPair;
use crate::grid::{weighted_lp_norm, ScalarField};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Finite empirical constant.
    Holds,
    /// Left side nonpositive.
    Vacuous,
    /// Positive left side against a vanishing right side.
    Violated,
    /// The check's hypotheses fail on the given data.
    HypothesisFailure,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Vacuous => "vacuous",
            Verdict::Violated => "violated",
            Verdict::HypothesisFailure => "hypothesis_failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "holds" => Some(Verdict::Holds),
            "vacuous" => Some(Verdict::Vacuous),
            "violated" => Some(Verdict::Violated),
            "hypothesis_failure" => Some(Verdict::HypothesisFailure),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one theorem check.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub theorem_id: String,
    pub lhs: f64,
    pub rhs_core: f64,
    pub empirical_constant: f64,
    pub verdict: Verdict,
    pub h: f64,
    pub profile: String,
    pub params: String,
    pub notes: Vec<String>,
}

impl EstimateReport {
    /// Builds a report and classifies it from `lhs` and `rhs_core`.
    pub fn classify(
        theorem_id: &str,
        lhs: f64,
        rhs_core: f64,
        h: f64,
        pair: &EllipticityPair,
        params: String,
    ) -> Self {
        let (empirical_constant, verdict) = if lhs <= 0.0 {
            (0.0, Verdict::Vacuous)
        } else if rhs_core == 0.0 {
            (f64::INFINITY, Verdict::Violated)
        } else {
            (lhs / rhs_core, Verdict::Holds)
        };
        EstimateReport {
            theorem_id: theorem_id.to_string(),
            lhs,
            rhs_core,
            empirical_constant,
            verdict,
            h,
            profile: pair.profile.to_string(),
            params,
            notes: Vec::new(),
        }
    }

    pub fn hypothesis_failure(
        theorem_id: &str,
        lhs: f64,
        h: f64,
        pair: &EllipticityPair,
        params: String,
        reason: String,
    ) -> Self {
        EstimateReport {
            theorem_id: theorem_id.to_string(),
            lhs,
            rhs_core: f64::NAN,
            empirical_constant: f64::NAN,
            verdict: Verdict::HypothesisFailure,
            h,
            profile: pair.profile.to_string(),
            params,
            notes: vec![reason],
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Result of a weighted norm after the a.e. pre-filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum FilteredNorm {
    Value {
        norm: f64,
        excluded_volume: f64,
    },
    /// Nodes with `g > 0` and an infinite weight occupy more than the a.e.
    /// allowance.
    Singular {
        volume: f64,
        allowance: f64,
    },
}

/// `‖g·w‖_{L^p(mask)}`, first dropping masked nodes where `g > 0` meets an
/// infinite weight when their total volume is within `4h·|∂Ω|`.
pub(crate) fn filtered_norm(
    g: &ScalarField,
    weight: Option<&ScalarField>,
    p: f64,
    mask: &[bool],
) -> Result<FilteredNorm> {
    let grid = g.grid();
    let mut keep = mask.to_vec();
    let mut dropped = 0usize;
    if let Some(w) = weight {
        for k in 0..g.len() {
            if keep[k] && g.value(k) != 0.0 && !w.value(k).is_finite() {
                keep[k] = false;
                dropped += 1;
            }
        }
    }
    let volume = dropped as f64 * grid.cell_volume();
    let allowance = 4.0 * grid.spacing() * grid.surface_area();
    if volume > allowance {
        return Ok(FilteredNorm::Singular { volume, allowance });
    }
    Ok(FilteredNorm::Value {
        norm: weighted_lp_norm(g, weight, p, &keep)?,
        excluded_volume: volume,
    })
}

/// `(Σ_mask |g|^t hⁿ)^{1/t}` for any `t > 0` (a quasi-norm when `t < 1`).
pub fn lt_quasi_norm(g: &ScalarField, t: f64, mask: &[bool]) -> f64 {
    let cell = g.grid().cell_volume();
    if t.is_infinite() {
        return (0..g.len())
            .filter(|k| mask[*k])
            .fold(0.0, |a, k| a.max(g.value(k).abs()));
    }
    let s: f64 = (0..g.len())
        .filter(|k| mask[*k])
        .map(|k| g.value(k).abs().powf(t) * cell)
        .sum();
    s.powf(1.0 / t)
}

pub(crate) fn fmt_param(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

pub(crate) fn pair_params(pair: &EllipticityPair) -> String {
    format!("p={};q={}", fmt_param(pair.p), fmt_param(pair.q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn classification_rules() {
        let pair = EllipticityPair::uniform(1.0, 1.0, 2).unwrap();
        let r = EstimateReport::classify("x", 1.0, 0.0, 0.1, &pair, String::new());
        assert_eq!(
            (r.verdict, r.empirical_constant),
            (Verdict::Violated, f64::INFINITY)
        );
        let r = EstimateReport::classify("x", -1.0, 0.0, 0.1, &pair, String::new());
        assert_eq!(r.verdict, Verdict::Vacuous);
        let r = EstimateReport::classify("x", 1.0, 4.0, 0.1, &pair, String::new());
        assert_eq!((r.verdict, r.empirical_constant), (Verdict::Holds, 0.25));
        for v in [
            Verdict::Holds,
            Verdict::Vacuous,
            Verdict::Violated,
            Verdict::HypothesisFailure,
        ] {
            assert_eq!(Verdict::parse(v.as_str()), Some(v));
        }
    }

    #[test]
    fn quasi_norm_of_constant() {
        let g = Grid::cube(2, 0.0, 1.0, 0.125).unwrap();
        let u = ScalarField::constant(g.clone(), 2.0);
        let mask = g.all_mask();
        let vol = g.len() as f64 * g.cell_volume();
        for t in [0.25, 1.0, 3.0] {
            assert!((lt_quasi_norm(&u, t, &mask) - 2.0 * vol.powf(1.0 / t)).abs() < 1e-12);
        }
    }
}
