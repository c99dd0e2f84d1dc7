//! Experiment configuration: a TOML file with sections, overridden by
//! command-line flags, resolved into validated settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use abplab::gallery::GridSpec;
use abplab::solver::Coefficient;
use abplab::{ClosedForm, EllipticityPair, Profile, Shape};
use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::Deserialize;

/// Grid spacing written as a number or as a fraction such as `1/64`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Spacing {
    Number(f64),
    Text(String),
}

impl Spacing {
    pub fn value(&self, key: &str) -> Result<f64> {
        let v = match self {
            Spacing::Number(v) => *v,
            Spacing::Text(s) => {
                parse_real(s).with_context(|| format!("`{key}`: bad spacing `{s}`"))?
            }
        };
        if !(v > 0.0 && v.is_finite()) {
            bail!("`{key}` must be positive, got {v}");
        }
        Ok(v)
    }
}

/// A real number or a fraction `a/b`.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
            if b == 0.0 {
                bail!("zero denominator in `{s}`");
            }
            Ok(a / b)
        }
        None => Ok(s.parse()?),
    }
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GridSection {
    pub dim: Option<usize>,
    /// `ball` or `box`.
    pub shape: Option<String>,
    pub radius: Option<f64>,
    /// Box bounds, the same on every axis.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub h: Option<Spacing>,
    pub h_list: Option<Vec<Spacing>>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ProfileSection {
    /// Profile grammar, e.g. `grushin_alpha(0.25)`.
    pub spec: Option<String>,
    pub p: Option<f64>,
    pub q: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ProblemSection {
    pub bundle: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Closed-form catalog name.
    pub u: Option<String>,
    /// `zero`, a number, `pucci-plus`, `pucci-minus` or `linear`.
    pub f: Option<String>,
    pub coefficients: Option<Vec<String>>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ChecksSection {
    pub list: Option<Vec<String>>,
    pub t: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub slope_radius: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutputSection {
    pub dir: Option<String>,
    pub snapshots: Option<bool>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ToleranceSection {
    pub solver: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub contact: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub command: Option<String>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub checks: ChecksSection,
    /// Swept parameter name to its list of values; exactly one entry.
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow!("malformed config {}: {e}", path.display()))
    }
}

/// Flags mirroring the configuration keys. Flags win over the file.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// TOML experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// `ball` or `box`.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    /// Grid spacing, e.g. `1/64`.
    #[arg(long)]
    pub h: Option<String>,
    /// Comma-separated, strictly decreasing spacings.
    #[arg(long = "h-list")]
    pub h_list: Option<String>,
    /// Ellipticity profile, e.g. `grushin_alpha(0.25)`.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Gallery bundle name.
    #[arg(long)]
    pub bundle: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Tangential dimension of the fractional bundle.
    #[arg(long)]
    pub n: Option<f64>,
    /// Closed-form solution from the catalog.
    #[arg(long)]
    pub u: Option<String>,
    /// Forcing: `zero`, a number, `pucci-plus`, `pucci-minus` or `linear`.
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Comma-separated diagonal coefficients, e.g. `1,|x0|^0.25`.
    #[arg(long)]
    pub coefficients: Option<String>,
    /// Comma-separated check ids.
    #[arg(long)]
    pub checks: Option<String>,
    /// Comma-separated exponents for the weak Harnack and local boundedness
    /// checks.
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated radii for the Hölder fit.
    #[arg(long)]
    pub radii: Option<String>,
    /// Slope bound for the restricted contact set.
    #[arg(long = "slope-radius")]
    pub slope_radius: Option<f64>,
    /// Swept parameter, `name=v1,v2,...`; may be repeated (and is then
    /// rejected).
    #[arg(long)]
    pub sweep: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write field snapshots.
    #[arg(long)]
    pub snapshots: bool,
    #[arg(long = "solver-tol")]
    pub solver_tol: Option<f64>,
    #[arg(long = "max-sweeps")]
    pub max_sweeps: Option<usize>,
    #[arg(long = "contact-tol")]
    pub contact_tol: Option<f64>,
}

fn list<T>(key: &str, s: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| parse(x.trim()).with_context(|| format!("`{key}`: bad entry `{x}`")))
        .collect()
}

impl Flags {
    /// Loads the file named by `--config`, if any, and applies the flags.
    pub fn merged(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let g = &mut c.grid;
        set(&mut g.dim, self.dim);
        set(&mut g.shape, self.shape.clone());
        set(&mut g.radius, self.radius);
        set(&mut g.lo, self.lo);
        set(&mut g.hi, self.hi);
        if let Some(h) = &self.h {
            g.h = Some(Spacing::Text(h.clone()));
        }
        if let Some(l) = &self.h_list {
            g.h_list = Some(
                l.split(',')
                    .map(|s| Spacing::Text(s.trim().to_string()))
                    .collect(),
            );
        }
        set(&mut c.profile.spec, self.profile.clone());
        set(&mut c.profile.p, self.p);
        set(&mut c.profile.q, self.q);
        let pr = &mut c.problem;
        set(&mut pr.bundle, self.bundle.clone());
        for (k, v) in [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("s", self.s),
            ("n", self.n),
        ] {
            if let Some(v) = v {
                pr.params.insert(k.to_string(), v);
            }
        }
        set(&mut pr.u, self.u.clone());
        set(&mut pr.f, self.f.clone());
        if let Some(cs) = &self.coefficients {
            pr.coefficients = Some(cs.split(',').map(|s| s.trim().to_string()).collect());
        }
        let ch = &mut c.checks;
        if let Some(l) = &self.checks {
            ch.list = Some(l.split(',').map(|s| s.trim().to_string()).collect());
        }
        if let Some(t) = &self.t {
            ch.t = Some(list("t", t, parse_real)?);
        }
        set(&mut ch.beta, self.beta);
        if let Some(r) = &self.radii {
            ch.radii = Some(list("radii", r, parse_real)?);
        }
        set(&mut ch.slope_radius, self.slope_radius);
        if !self.sweep.is_empty() {
            c.sweep.clear();
            for s in &self.sweep {
                let (k, v) = s
                    .split_once('=')
                    .ok_or_else(|| anyhow!("`sweep`: expected name=v1,v2,..., got `{s}`"))?;
                if c.sweep.contains_key(k.trim()) {
                    bail!("`sweep`: parameter `{}` given twice", k.trim());
                }
                c.sweep
                    .insert(k.trim().to_string(), list("sweep", v, parse_real)?);
            }
        }
        if let Some(o) = &self.out {
            c.output.dir = Some(o.display().to_string());
        }
        if self.snapshots {
            c.output.snapshots = Some(true);
        }
        set(&mut c.tolerances.solver, self.solver_tol);
        set(&mut c.tolerances.max_sweeps, self.max_sweeps);
        set(&mut c.tolerances.contact, self.contact_tol);
        Ok(c)
    }
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

/// The forcing term of a free-mode problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcingSpec {
    Constant(f64),
    PucciPlus,
    PucciMinus,
    Linear,
}

impl ForcingSpec {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "zero" => ForcingSpec::Constant(0.0),
            "pucci-plus" => ForcingSpec::PucciPlus,
            "pucci-minus" => ForcingSpec::PucciMinus,
            "linear" => ForcingSpec::Linear,
            other => ForcingSpec::Constant(
                parse_real(other).map_err(|_| anyhow!("`f`: expected zero, a number, pucci-plus, pucci-minus or linear, got `{other}`"))?,
            ),
        })
    }
}

/// Settings after validation.
#[derive(Debug, Clone)]
pub struct Settings {
    pub dim: usize,
    pub shape: Shape,
    /// Strictly decreasing.
    pub spacings: Vec<f64>,
    pub bundle: Option<String>,
    pub bundle_params: Vec<(String, f64)>,
    pub pair: Option<EllipticityPair>,
    pub u: Option<ClosedForm>,
    pub f: ForcingSpec,
    pub coefficients: Option<Vec<Coefficient>>,
    pub checks: Vec<String>,
    pub t: Vec<f64>,
    pub beta: Option<f64>,
    pub radii: Vec<f64>,
    pub slope_radius: Option<f64>,
    pub sweep: Option<(String, Vec<f64>)>,
    pub out: PathBuf,
    pub snapshots: bool,
    pub solver_tol: f64,
    pub max_sweeps: usize,
    pub contact_tol: Option<f64>,
}

impl Settings {
    pub fn grid_spec(&self, h: f64) -> GridSpec {
        GridSpec {
            dim: self.dim,
            shape: self.shape.clone(),
            h,
        }
    }

    pub fn bundle_param_refs(&self) -> Vec<(&str, f64)> {
        self.bundle_params
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .collect()
    }
}

pub fn resolve(c: &ExperimentConfig) -> Result<Settings> {
    let g = &c.grid;
    let spacings = match (&g.h, &g.h_list) {
        (Some(_), Some(_)) => bail!("`h` and `h-list` are mutually exclusive"),
        (Some(h), None) => vec![h.value("h")?],
        (None, Some(l)) => {
            if l.is_empty() {
                bail!("`h-list` is empty");
            }
            let v = l
                .iter()
                .map(|s| s.value("h-list"))
                .collect::<Result<Vec<f64>>>()?;
            if v.windows(2).any(|w| w[1] >= w[0]) {
                bail!("`h-list` must be strictly decreasing, got {v:?}");
            }
            v
        }
        (None, None) => vec![],
    };

    let profile = match &c.profile.spec {
        Some(s) => Some(
            s.parse::<Profile>()
                .map_err(|e| anyhow!("`profile`: {e}"))?,
        ),
        None => None,
    };
    let bundle = c.problem.bundle.clone();
    let dim = g
        .dim
        .or_else(|| profile.and_then(|p| p.fixed_dim()))
        .unwrap_or(2);
    if !(1..=3).contains(&dim) {
        bail!("`dim` must be 1, 2 or 3, got {dim}");
    }
    let shape = match g.shape.as_deref().unwrap_or("ball") {
        "ball" => Shape::Ball {
            radius: g.radius.unwrap_or(1.0),
        },
        "box" => {
            let (lo, hi) = (g.lo.unwrap_or(-1.0), g.hi.unwrap_or(1.0));
            if !(lo < hi) {
                bail!("`lo` must be below `hi`");
            }
            Shape::cube(dim, lo, hi)
        }
        other => bail!("`shape` must be ball or box, got `{other}`"),
    };
    let pair = match profile {
        Some(p) => {
            let mut pair = EllipticityPair::new(p, dim).map_err(|e| anyhow!("`profile`: {e}"))?;
            if c.profile.p.is_some() || c.profile.q.is_some() {
                pair = pair
                    .with_declared(c.profile.p.unwrap_or(pair.p), c.profile.q.unwrap_or(pair.q));
            }
            Some(pair)
        }
        None => None,
    };
    let u = match &c.problem.u {
        Some(s) => Some(s.parse::<ClosedForm>().map_err(|e| anyhow!("`u`: {e}"))?),
        None => None,
    };
    let f = ForcingSpec::parse(c.problem.f.as_deref().unwrap_or("zero"))?;
    let coefficients = match &c.problem.coefficients {
        Some(cs) => {
            let v = cs
                .iter()
                .map(|s| {
                    s.parse::<Coefficient>()
                        .map_err(|e| anyhow!("`coefficients`: {e}"))
                })
                .collect::<Result<Vec<_>>>()?;
            if v.len() != dim {
                bail!("`coefficients` has {} entries for dimension {dim}", v.len());
            }
            for co in &v {
                if let Coefficient::AbsPow { axis, .. } = co {
                    if *axis >= dim {
                        bail!("`coefficients`: axis {axis} out of range for dimension {dim}");
                    }
                }
            }
            Some(v)
        }
        None => None,
    };
    if let Some(b) = &bundle {
        if !abplab::gallery::BUNDLES.contains(&b.as_str()) {
            bail!(
                "`bundle`: unknown bundle `{b}` (known: {})",
                abplab::gallery::BUNDLES.join(", ")
            );
        }
    }
    let sweep = match c.sweep.len() {
        0 => None,
        1 => {
            let (k, v) = c.sweep.iter().next().unwrap();
            Some((k.clone(), v.clone()))
        }
        _ => bail!(
            "`sweep`: exactly one swept parameter allowed, got {}",
            c.sweep.keys().cloned().collect::<Vec<_>>().join(", ")
        ),
    };
    let t = c
        .checks
        .t
        .clone()
        .unwrap_or_else(|| abplab::gallery::WEAK_HARNACK_T.to_vec());
    if t.iter().any(|v| !(*v > 0.0)) {
        bail!("`t` values must be positive");
    }
    Ok(Settings {
        dim,
        shape,
        spacings,
        bundle,
        bundle_params: c
            .problem
            .params
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect(),
        pair,
        u,
        f,
        coefficients,
        checks: c.checks.list.clone().unwrap_or_default(),
        t,
        beta: c.checks.beta,
        radii: c
            .checks
            .radii
            .clone()
            .unwrap_or_else(|| vec![0.5, 0.25, 0.125, 0.0625]),
        slope_radius: c.checks.slope_radius,
        sweep,
        out: PathBuf::from(c.output.dir.clone().unwrap_or_else(|| ".".into())),
        snapshots: c.output.snapshots.unwrap_or(false),
        solver_tol: c.tolerances.solver.unwrap_or(1e-10),
        max_sweeps: c.tolerances.max_sweeps.unwrap_or(1_000_000),
        contact_tol: c.tolerances.contact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_numbers() {
        assert_eq!(parse_real("1/64").unwrap(), 0.015625);
        assert_eq!(parse_real(" 0.5 ").unwrap(), 0.5);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("x").is_err());
    }

    #[test]
    fn increasing_h_list_names_the_key() {
        let c: ExperimentConfig =
            toml::from_str("[grid]\nh-list = [\"1/32\", \"1/16\"]\n").unwrap();
        let e = resolve(&c).unwrap_err().to_string();
        assert!(e.contains("h-list"), "{e}");
    }

    #[test]
    fn unknown_key_is_named() {
        let e = toml::from_str::<ExperimentConfig>("[grid]\nspacing = 0.1\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("spacing"), "{e}");
    }

    #[test]
    fn two_sweeps_rejected() {
        let c: ExperimentConfig = toml::from_str("[sweep]\nalpha = [0.1]\nbeta = [2.0]\n").unwrap();
        assert!(resolve(&c).unwrap_err().to_string().contains("sweep"));
    }

    #[test]
    fn full_file_resolves() {
        let c: ExperimentConfig = toml::from_str(
            r#"
            command = "check"
            [grid]
            dim = 2
            shape = "box"
            h = "1/16"
            [profile]
            spec = "grushin_alpha(0.25)"
            [problem]
            u = "bowl"
            f = "pucci-plus"
            coefficients = ["1", "|x0|^0.25"]
            [checks]
            list = ["abp", "holder"]
            t = [0.5]
            [output]
            dir = "out"
            "#,
        )
        .unwrap();
        let s = resolve(&c).unwrap();
        assert_eq!(s.spacings, vec![0.0625]);
        assert_eq!(s.checks, vec!["abp", "holder"]);
        assert!(matches!(s.shape, Shape::Box { .. }));
        assert_eq!(s.f, ForcingSpec::PucciPlus);
    }
}
