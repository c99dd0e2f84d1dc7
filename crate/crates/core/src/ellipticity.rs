//! Ellipticity profiles `λ ≤ Λ`, their integrability exponents, and the
//! admissibility conditions on `(p, q)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::grid::{weighted_lp_norm, Grid, ScalarField};
use crate::{Error, Result};

/// Fraction of the critical exponent used as the declared default for the
/// power-type profiles.
pub const DECLARED_FRACTION: f64 = 0.9;

/// Closed-form ellipticity profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `λ ≡ λ₀`, `Λ ≡ Λ₀`: uniformly elliptic.
    Constant { lambda: f64, big_lambda: f64 },
    /// `n = 1`, `λ = |x|^γ`, `Λ = 1`.
    AbsGamma { gamma: f64 },
    /// `n = 2`, `λ = y²`, `Λ = 2`.
    YSquared,
    /// `n = 2`, `λ = |x|^α`, `Λ = 1`.
    GrushinAlpha { alpha: f64 },
    /// `λ = min(1, z^a)`, `Λ = max(1, z^a)` with `a = (2s-1)/s` and `z` the
    /// last coordinate.
    FractionalS { s: f64 },
}

impl Profile {
    pub fn id(&self) -> &'static str {
        match self {
            Profile::Constant { .. } => "constant",
            Profile::AbsGamma { .. } => "abs_gamma",
            Profile::YSquared => "y_squared",
            Profile::GrushinAlpha { .. } => "grushin_alpha",
            Profile::FractionalS { .. } => "fractional_s",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Profile::Constant { lambda, big_lambda } => vec![lambda, big_lambda],
            Profile::AbsGamma { gamma } => vec![gamma],
            Profile::YSquared => vec![],
            Profile::GrushinAlpha { alpha } => vec![alpha],
            Profile::FractionalS { s } => vec![s],
        }
    }

    /// Dimension the profile is defined in, if fixed.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Profile::AbsGamma { .. } => Some(1),
            Profile::YSquared | Profile::GrushinAlpha { .. } => Some(2),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            Profile::Constant { lambda, big_lambda } => {
                if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
                    return bad(format!(
                        "constant({lambda},{big_lambda}) needs 0 < λ ≤ Λ < ∞"
                    ));
                }
            }
            Profile::AbsGamma { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return bad(format!("abs_gamma needs γ > 0, got {gamma}"));
                }
            }
            Profile::GrushinAlpha { alpha } => {
                if !(0.0..1.0).contains(&alpha) {
                    return bad(format!("grushin_alpha needs 0 ≤ α < 1, got {alpha}"));
                }
            }
            Profile::FractionalS { s } => {
                if !(s > 0.0 && s < 1.0) {
                    return bad(format!("fractional_s needs 0 < s < 1, got {s}"));
                }
            }
            Profile::YSquared => {}
        }
        Ok(())
    }

    fn fractional_power(s: f64) -> f64 {
        (2.0 * s - 1.0) / s
    }

    /// `λ(x)`.
    pub fn lambda(&self, x: &[f64]) -> f64 {
        match *self {
            Profile::Constant { lambda, .. } => lambda,
            Profile::AbsGamma { gamma } => x[0].abs().powf(gamma),
            Profile::YSquared => x[1] * x[1],
            Profile::GrushinAlpha { alpha } => x[0].abs().powf(alpha),
            Profile::FractionalS { s } => {
                let z = x[x.len() - 1].abs();
                z.powf(Self::fractional_power(s)).min(1.0)
            }
        }
    }

    /// `Λ(x)`.
    pub fn big_lambda(&self, x: &[f64]) -> f64 {
        match *self {
            Profile::Constant { big_lambda, .. } => big_lambda,
            Profile::AbsGamma { .. } | Profile::GrushinAlpha { .. } => 1.0,
            Profile::YSquared => 2.0,
            Profile::FractionalS { s } => {
                let z = x[x.len() - 1].abs();
                z.powf(Self::fractional_power(s)).max(1.0)
            }
        }
    }

    /// Critical integrability of `1/λ` and of `Λ` on bounded domains.
    pub fn integrability(&self) -> IntegrabilityClass {
        let closed = CriticalExponent::closed_infinity();
        match *self {
            Profile::Constant { .. } => IntegrabilityClass {
                inv_lambda: closed,
                big_lambda: closed,
            },
            Profile::AbsGamma { gamma } => IntegrabilityClass {
                inv_lambda: CriticalExponent::open(gamma),
                big_lambda: closed,
            },
            Profile::YSquared => IntegrabilityClass {
                inv_lambda: CriticalExponent::open(2.0),
                big_lambda: closed,
            },
            Profile::GrushinAlpha { alpha } => IntegrabilityClass {
                inv_lambda: if alpha == 0.0 {
                    closed
                } else {
                    CriticalExponent::open(alpha)
                },
                big_lambda: closed,
            },
            Profile::FractionalS { s } => {
                let a = Self::fractional_power(s);
                if a > 0.0 {
                    IntegrabilityClass {
                        inv_lambda: CriticalExponent::open(a),
                        big_lambda: closed,
                    }
                } else if a < 0.0 {
                    IntegrabilityClass {
                        inv_lambda: closed,
                        big_lambda: CriticalExponent::open(-a),
                    }
                } else {
                    IntegrabilityClass {
                        inv_lambda: closed,
                        big_lambda: closed,
                    }
                }
            }
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params().iter().map(|v| v.to_string()).collect();
        if params.is_empty() {
            write!(f, "{}", self.id())
        } else {
            write!(f, "{}({})", self.id(), params.join(","))
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// Parses `<id>(<comma-separated params>)`, e.g. `grushin_alpha(0.25)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (id, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .filter(|c| *c == s.len() - 1 && *c > open)
                    .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in `{s}`")))?;
                (&s[..open], &s[open + 1..close])
            }
            None => (s, ""),
        };
        let params = args
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .map(|a| {
                a.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad profile parameter `{a}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let arity = |k: usize| {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "profile `{id}` takes {k} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        let profile = match id.trim() {
            "constant" => {
                arity(2)?;
                Profile::Constant {
                    lambda: params[0],
                    big_lambda: params[1],
                }
            }
            "abs_gamma" => {
                arity(1)?;
                Profile::AbsGamma { gamma: params[0] }
            }
            "y_squared" => {
                arity(0)?;
                Profile::YSquared
            }
            "grushin_alpha" => {
                arity(1)?;
                Profile::GrushinAlpha { alpha: params[0] }
            }
            "fractional_s" => {
                arity(1)?;
                Profile::FractionalS { s: params[0] }
            }
            other => return Err(Error::Unknown(format!("profile `{other}`"))),
        };
        profile.validate()?;
        Ok(profile)
    }
}

/// `1/p*` for an exponent class: `open` means membership in `L^p` for every
/// `p < p*` but not at `p*`; closed means membership at `p*` itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalExponent {
    pub reciprocal: f64,
    pub open: bool,
}

impl CriticalExponent {
    pub fn open(reciprocal: f64) -> Self {
        CriticalExponent {
            reciprocal,
            open: true,
        }
    }

    pub fn closed_infinity() -> Self {
        CriticalExponent {
            reciprocal: 0.0,
            open: false,
        }
    }

    pub fn exponent(&self) -> f64 {
        1.0 / self.reciprocal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrabilityClass {
    pub inv_lambda: CriticalExponent,
    pub big_lambda: CriticalExponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// `1/p + 1/q ≤ 1/n`.
    Abp,
    /// `1/p + 1/q < 1/(2n)`.
    WeakHarnack,
}

impl CheckMode {
    fn bound(&self, n: usize) -> f64 {
        match self {
            CheckMode::Abp => 1.0 / n as f64,
            CheckMode::WeakHarnack => 0.5 / n as f64,
        }
    }
}

/// An ellipticity profile in a given dimension with declared `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityPair {
    pub profile: Profile,
    pub dim: usize,
    pub p: f64,
    pub q: f64,
}

impl EllipticityPair {
    /// Builds the pair with default declared exponents: `∞` for bounded
    /// quantities, `0.9·p*` for open critical exponents.
    pub fn new(profile: Profile, dim: usize) -> Result<Self> {
        profile.validate()?;
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "dimension {dim} outside 1..=3"
            )));
        }
        if let Some(d) = profile.fixed_dim() {
            if d != dim {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: dim,
                });
            }
        }
        if matches!(profile, Profile::FractionalS { .. }) && dim < 2 {
            return Err(Error::InvalidParameter(
                "fractional_s needs at least one tangential and one normal axis".into(),
            ));
        }
        let class = profile.integrability();
        let declared = |c: CriticalExponent| {
            if c.reciprocal == 0.0 {
                f64::INFINITY
            } else if c.open {
                DECLARED_FRACTION / c.reciprocal
            } else {
                1.0 / c.reciprocal
            }
        };
        Ok(EllipticityPair {
            profile,
            dim,
            p: declared(class.inv_lambda),
            q: declared(class.big_lambda),
        })
    }

    pub fn uniform(lambda: f64, big_lambda: f64, dim: usize) -> Result<Self> {
        Self::new(Profile::Constant { lambda, big_lambda }, dim)
    }

    pub fn with_declared(mut self, p: f64, q: f64) -> Self {
        self.p = p;
        self.q = q;
        self
    }

    pub fn lambda(&self, x: &[f64]) -> f64 {
        self.profile.lambda(x)
    }

    pub fn big_lambda(&self, x: &[f64]) -> f64 {
        self.profile.big_lambda(x)
    }

    pub fn exponents(&self) -> IntegrabilityExponents {
        derive_exponents(self.p, self.q, self.dim)
    }

    /// Short descriptor echoing the declared exponents.
    pub fn descriptor(&self) -> String {
        format!("{} p={} q={}", self.profile, self.p, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrabilityExponents {
    pub p: f64,
    pub q: f64,
    pub n: usize,
    /// `1/θ = 1/n - 1/p - 1/q`; `None` when the right side is negative.
    pub theta: Option<f64>,
    /// `1/τ = 1/n - 1/p`; `None` when the right side is negative.
    pub tau: Option<f64>,
    /// Whether `1/p + 1/q ≤ 1/n`.
    pub admissible: bool,
    /// `1/n - 1/p - 1/q`.
    pub slack: f64,
}

fn reciprocal_to_exponent(r: f64) -> Option<f64> {
    if r < 0.0 {
        None
    } else if r == 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(1.0 / r)
    }
}

/// Exponent bookkeeping for declared `(p, q)` in dimension `n`. Violation of
/// `1/p + 1/q ≤ 1/n` is a flag, never an error.
pub fn derive_exponents(p: f64, q: f64, n: usize) -> IntegrabilityExponents {
    let inv_n = 1.0 / n as f64;
    let slack = inv_n - 1.0 / p - 1.0 / q;
    IntegrabilityExponents {
        p,
        q,
        n,
        theta: reciprocal_to_exponent(slack),
        tau: reciprocal_to_exponent(inv_n - 1.0 / p),
        admissible: exponents_admissible(p, q, n, CheckMode::Abp),
        slack,
    }
}

/// Predicate on declared exponents.
pub fn exponents_admissible(p: f64, q: f64, n: usize, mode: CheckMode) -> bool {
    let s = 1.0 / p + 1.0 / q;
    match mode {
        CheckMode::Abp => s <= mode.bound(n),
        CheckMode::WeakHarnack => s < mode.bound(n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityVerdict {
    pub mode: CheckMode,
    /// Whether some `(p, q)` allowed by the profile's integrability satisfies
    /// the condition.
    pub admissible: bool,
    /// Bound minus `1/p* + 1/q*` at the critical exponents.
    pub slack: f64,
    pub declared_p: f64,
    pub declared_q: f64,
    /// Same predicate evaluated at the declared exponents.
    pub declared_admissible: bool,
    pub declared_slack: f64,
    /// Admissible in principle but not at the declared exponents.
    pub conservative: bool,
}

pub fn check_admissible(pair: &EllipticityPair, mode: CheckMode) -> AdmissibilityVerdict {
    let class = pair.profile.integrability();
    let bound = mode.bound(pair.dim);
    let critical = class.inv_lambda.reciprocal + class.big_lambda.reciprocal;
    let any_open = class.inv_lambda.open || class.big_lambda.open;
    let admissible = match mode {
        CheckMode::Abp if !any_open => critical <= bound,
        _ => critical < bound,
    };
    let declared_admissible = exponents_admissible(pair.p, pair.q, pair.dim, mode);
    AdmissibilityVerdict {
        mode,
        admissible,
        slack: bound - critical,
        declared_p: pair.p,
        declared_q: pair.q,
        declared_admissible,
        declared_slack: bound - 1.0 / pair.p - 1.0 / pair.q,
        conservative: admissible && !declared_admissible,
    }
}

/// Pointwise samples of `λ`, `Λ` and the extended-real `1/λ`.
#[derive(Debug, Clone)]
pub struct EllipticitySamples {
    pub lambda: ScalarField,
    pub big_lambda: ScalarField,
    pub inv_lambda: ScalarField,
}

pub fn sample_ellipticity(pair: &EllipticityPair, grid: &Arc<Grid>) -> Result<EllipticitySamples> {
    if grid.dim() != pair.dim {
        return Err(Error::DimensionMismatch {
            expected: pair.dim,
            got: grid.dim(),
        });
    }
    let profile = pair.profile;
    let lambda = ScalarField::from_fn(grid.clone(), |x| profile.lambda(x));
    let big_lambda = ScalarField::from_fn(grid.clone(), |x| profile.big_lambda(x));
    let inv_lambda = lambda.map(|l| if l == 0.0 { f64::INFINITY } else { 1.0 / l });
    Ok(EllipticitySamples {
        lambda,
        big_lambda,
        inv_lambda,
    })
}

/// Sampled `(‖1/λ‖_{L^p}, ‖Λ‖_{L^q})` over interior nodes, skipping nodes
/// where the sampled value is infinite (zeros of `λ` on null sets).
pub fn sampled_norms(pair: &EllipticityPair, grid: &Arc<Grid>) -> Result<(f64, f64)> {
    let s = sample_ellipticity(pair, grid)?;
    let interior = grid.interior_mask();
    let finite_mask = |f: &ScalarField| -> Vec<bool> {
        interior
            .iter()
            .zip(f.values())
            .map(|(m, v)| *m && v.is_finite())
            .collect()
    };
    let inv = weighted_lp_norm(&s.inv_lambda, None, pair.p, &finite_mask(&s.inv_lambda))?;
    let big = weighted_lp_norm(&s.big_lambda, None, pair.q, &finite_mask(&s.big_lambda))?;
    Ok((inv, big))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_reduction() {
        for n in 1..=3 {
            let e = derive_exponents(f64::INFINITY, f64::INFINITY, n);
            assert_eq!(e.theta, Some(n as f64));
            assert_eq!(e.tau, Some(n as f64));
            assert!(e.admissible);
        }
    }

    #[test]
    fn exponent_arithmetic() {
        let e = derive_exponents(4.0, f64::INFINITY, 2);
        assert_eq!(e.tau, Some(4.0));
        assert_eq!(e.theta, Some(4.0));
        let bad = derive_exponents(2.0, 2.0, 2);
        assert!(!bad.admissible);
        assert_eq!(bad.theta, None);
    }

    #[test]
    fn admissibility_examples() {
        let c = EllipticityPair::uniform(1.0, 2.0, 2).unwrap();
        assert!(check_admissible(&c, CheckMode::Abp).admissible);
        assert!(check_admissible(&c, CheckMode::WeakHarnack).admissible);

        assert!(exponents_admissible(4.0, f64::INFINITY, 2, CheckMode::Abp));
        assert!(!exponents_admissible(
            4.0,
            f64::INFINITY,
            2,
            CheckMode::WeakHarnack
        ));

        let y2 = EllipticityPair::new(Profile::YSquared, 2).unwrap();
        assert!(!check_admissible(&y2, CheckMode::Abp).admissible);
        assert!(!check_admissible(&y2, CheckMode::WeakHarnack).admissible);
    }

    #[test]
    fn grushin_declared_defaults_are_conservative_near_half() {
        let g = EllipticityPair::new(Profile::GrushinAlpha { alpha: 0.48 }, 2).unwrap();
        assert!((g.p - 0.9 / 0.48).abs() < 1e-12);
        let v = check_admissible(&g, CheckMode::Abp);
        assert!(v.admissible && !v.declared_admissible && v.conservative);
    }

    #[test]
    fn sampling() {
        let g = Grid::cube(1, -1.0, 1.0, 0.25).unwrap();
        let pair = EllipticityPair::new(Profile::AbsGamma { gamma: 1.0 }, 1).unwrap();
        let s = sample_ellipticity(&pair, &g).unwrap();
        let zero = (0..g.len()).find(|n| g.coords(*n)[0] == 0.0).unwrap();
        assert_eq!(s.lambda.value(zero), 0.0);
        assert_eq!(s.inv_lambda.value(zero), f64::INFINITY);
        assert!(s.inv_lambda.is_extended());

        let g2 = Grid::cube(2, -1.0, 1.0, 1.0 / 16.0).unwrap();
        let gr = EllipticityPair::new(Profile::GrushinAlpha { alpha: 0.25 }, 2).unwrap();
        assert_eq!(gr.lambda(&[1.0 / 16.0, 0.3]), 0.5);
        let s2 = sample_ellipticity(&gr, &g2).unwrap();
        assert!(s2
            .lambda
            .values()
            .iter()
            .zip(s2.big_lambda.values())
            .all(|(a, b)| a <= b));

        let c = EllipticityPair::uniform(1.0, 2.0, 3).unwrap();
        assert_eq!(
            (c.lambda(&[0.1, 0.2, 0.3]), c.big_lambda(&[0.0; 3])),
            (1.0, 2.0)
        );
        assert!(matches!(
            sample_ellipticity(&gr, &g),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn profile_grammar() {
        let p: Profile = "grushin_alpha(0.25)".parse().unwrap();
        assert_eq!(p, Profile::GrushinAlpha { alpha: 0.25 });
        let c: Profile = "constant(1, 2)".parse().unwrap();
        assert_eq!(c.to_string(), "constant(1,2)");
        assert_eq!("y_squared".parse::<Profile>().unwrap(), Profile::YSquared);
        assert!("grushin_alpha(1.5)".parse::<Profile>().is_err());
        assert!("nope(1)".parse::<Profile>().is_err());
        assert!("constant(1)".parse::<Profile>().is_err());
    }
}
