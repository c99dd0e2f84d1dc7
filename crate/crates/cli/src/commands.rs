//! The five subcommands. Each writes `<out>/<command>.csv` and returns the
//! status that decides the exit code.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use abplab::ellipticity::check_admissible;
use abplab::estimates::{
    abp_min_report, abp_report, harnack_report, holder_fit, kappa_epsilon_sweep,
    local_boundedness_report, sign_flip_radius, threshold_beta, weak_harnack_report, Thresholds,
};
use abplab::gallery::{gallery, run_bundle, Observation};
use abplab::grid::{write_snapshot, CubeSpec};
use abplab::report::{
    bundle_rows, estimate_row, fmt_real, CsvTable, ESTIMATES_SCHEMA, ESTIMATE_COLUMNS,
};
use abplab::solver::{
    manufactured_rhs_linear, manufactured_rhs_pucci, solve_linear_dirichlet, Coefficient,
    LinearProblem,
};
use abplab::{
    concave_envelope, slope_restricted_contact, upper_contact_set, CheckMode, ClosedForm,
    EllipticityPair, EstimateReport, Grid, ScalarField, Sense, Verdict,
};
use anyhow::{anyhow, bail, Context, Result};

use crate::config::{ForcingSpec, Settings};

/// Outcome severity. Errors are reported through `Err` instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    /// A hypothesis of a checked statement failed.
    Hypothesis,
    /// A gallery expectation was not met for another reason.
    Mismatch,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Hypothesis => 2,
            Status::Mismatch => 1,
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub csv: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub summary: Vec<String>,
}

struct Writer {
    dir: PathBuf,
    snapshots: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("output directory {} is not writable", dir.display()))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            snapshots: Vec::new(),
        })
    }

    fn snapshot(&mut self, name: &str, field: &ScalarField) -> Result<()> {
        let path = self.dir.join(name);
        let file =
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_snapshot(field, std::io::BufWriter::new(file))?;
        self.snapshots.push(path);
        Ok(())
    }

    fn finish(
        self,
        command: &str,
        table: &CsvTable,
        status: Status,
        summary: Vec<String>,
    ) -> Result<Outcome> {
        let csv = self.dir.join(format!("{command}.csv"));
        let file = fs::File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
        table.write(std::io::BufWriter::new(file))?;
        Ok(Outcome {
            status,
            csv,
            snapshots: self.snapshots,
            summary,
        })
    }
}

fn h_tag(h: f64) -> String {
    let inv = 1.0 / h;
    if (inv - inv.round()).abs() < 1e-9 {
        format!("h1_{}", inv.round() as u64)
    } else {
        format!("h{}", fmt_real(h))
    }
}

fn require<T: Clone>(v: &Option<T>, key: &str, command: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| anyhow!("`{key}` is required for {command}"))
}

fn spacings(s: &Settings, default: Option<f64>, command: &str) -> Result<Vec<f64>> {
    if !s.spacings.is_empty() {
        Ok(s.spacings.clone())
    } else {
        default
            .map(|h| vec![h])
            .ok_or_else(|| anyhow!("`h` or `h-list` is required for {command}"))
    }
}

fn default_coefficients(dim: usize) -> Vec<Coefficient> {
    vec![Coefficient::Const(1.0); dim]
}

/// Samples the forcing of a free-mode problem.
fn forcing(
    s: &Settings,
    u: ClosedForm,
    pair: Option<&EllipticityPair>,
    grid: &Arc<Grid>,
) -> Result<ScalarField> {
    Ok(match s.f {
        ForcingSpec::Constant(c) => ScalarField::constant(grid.clone(), c),
        ForcingSpec::PucciPlus | ForcingSpec::PucciMinus => {
            let pair = pair.ok_or_else(|| anyhow!("`profile` is required for a Pucci forcing"))?;
            let sense = if s.f == ForcingSpec::PucciPlus {
                Sense::PlusGeq
            } else {
                Sense::MinusLeq
            };
            manufactured_rhs_pucci(u, pair, sense, grid)?
        }
        ForcingSpec::Linear => {
            let c = s
                .coefficients
                .clone()
                .unwrap_or_else(|| default_coefficients(s.dim));
            manufactured_rhs_linear(u, &c, grid)?
        }
    })
}

const FREE_CHECKS: &[&str] = &[
    "abp",
    "abp_min",
    "local_boundedness",
    "weak_harnack",
    "harnack",
    "holder",
    "kappa",
    "admissible",
    "cutoff",
];

fn holder_row(
    u: &ScalarField,
    radii: &[f64],
    h: f64,
    pair: &EllipticityPair,
) -> Result<Vec<String>> {
    let origin = vec![0.0; u.grid().dim()];
    let fit = holder_fit(u, &origin, radii)?;
    let osc = fit
        .oscillations
        .iter()
        .map(|(r, o)| format!("osc({})={}", fmt_real(*r), fmt_real(*o)))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(vec![
        "holder".into(),
        fmt_real(h),
        pair.profile.id().into(),
        pair.descriptor(),
        fmt_real(fit.alpha.unwrap_or(f64::NAN)),
        fmt_real(fit.seminorm),
        fmt_real(fit.raw_slope),
        if fit.is_flat() { "flat" } else { "fit" }.into(),
        format!(
            "lhs = fitted exponent; rhs_core = seminorm; empirical_constant = raw slope; {osc}"
        ),
    ])
}

fn kappa_rows(
    u: &ScalarField,
    pair: &EllipticityPair,
    f: &ScalarField,
    h: f64,
) -> Result<Vec<Vec<String>>> {
    let cube = CubeSpec::default_for(u.grid().dim());
    let sweep = kappa_epsilon_sweep(u, pair, f, &cube, &Thresholds::default())?;
    Ok(sweep
        .fits
        .iter()
        .map(|fit| {
            vec![
                "kappa".into(),
                fmt_real(h),
                pair.profile.id().into(),
                pair.descriptor(),
                fmt_real(fit.kappa),
                fmt_real(fit.constant),
                fmt_real(fit.residual),
                if fit.degenerate { "degenerate" } else { "fit" }.into(),
                format!(
                    "eps={}; lhs = kappa; rhs_core = C; empirical_constant = 1 - R^2; diverging={}",
                    fmt_real(fit.eps),
                    sweep.diverging
                ),
            ]
        })
        .collect())
}

fn admissible_rows(pair: &EllipticityPair, h: f64) -> Vec<Vec<String>> {
    [CheckMode::Abp, CheckMode::WeakHarnack]
        .into_iter()
        .map(|mode| {
            let v = check_admissible(pair, mode);
            vec![
                format!("admissible_{}", if mode == CheckMode::Abp { "abp" } else { "weak_harnack" }),
                fmt_real(h),
                pair.profile.id().into(),
                pair.descriptor(),
                fmt_real(v.slack),
                fmt_real(v.declared_slack),
                fmt_real(f64::NAN),
                if v.admissible { "admissible" } else { "inadmissible" }.into(),
                format!(
                    "lhs = slack; rhs_core = declared slack; declared_admissible={}; conservative={}",
                    v.declared_admissible, v.conservative
                ),
            ]
        })
        .collect()
}

pub fn check(s: &Settings) -> Result<Outcome> {
    let mut w = Writer::new(&s.out)?;
    let mut table = CsvTable::new(ESTIMATES_SCHEMA, ESTIMATE_COLUMNS);
    let mut status = Status::Ok;
    let mut summary = Vec::new();
    if let Some(name) = &s.bundle {
        let base = gallery(name, &s.bundle_param_refs())?;
        for h in spacings(s, Some(base.grid.h), "check")? {
            let b = base.clone().with_spacing(h);
            let run = run_bundle(&b)?;
            for o in run.outcomes.iter().filter(|o| !o.passed) {
                let hyp = matches!(
                    o.observed,
                    Ok(Observation::Verdict(Verdict::HypothesisFailure))
                );
                status = status.max(if hyp {
                    Status::Hypothesis
                } else {
                    Status::Mismatch
                });
                summary.push(format!(
                    "h={h}: {} expected {} observed {}",
                    o.id.as_str(),
                    o.expected,
                    o.observed_label()
                ));
            }
            table.rows.extend(bundle_rows(&run));
            if s.snapshots {
                let grid = b.grid.build()?;
                w.snapshot(&format!("check-u-{}.snap", h_tag(h)), &b.u.sample(&grid))?;
            }
        }
    } else {
        let pair = require(&s.pair, "profile", "check")?;
        let u_form = require(&s.u, "u", "check")?;
        let checks: Vec<String> = if s.checks.is_empty() {
            vec!["abp".into()]
        } else {
            s.checks.clone()
        };
        for c in &checks {
            if !FREE_CHECKS.contains(&c.as_str()) {
                bail!(
                    "`checks`: unknown check `{c}` (known: {})",
                    FREE_CHECKS.join(", ")
                );
            }
        }
        for h in spacings(s, None, "check")? {
            let grid = s.grid_spec(h).build()?;
            let u = u_form.sample(&grid);
            let f = forcing(s, u_form, Some(&pair), &grid)?;
            let mut reports: Vec<EstimateReport> = Vec::new();
            for c in &checks {
                match c.as_str() {
                    "abp" => reports.push(abp_report(&u, &pair, &f)?),
                    "abp_min" => reports.push(abp_min_report(&u, &pair, &f)?),
                    "local_boundedness" => {
                        for &t in &s.t {
                            let lb = local_boundedness_report(&u, &pair, &f, t)?;
                            reports.push(lb.primary);
                            reports.push(lb.secondary);
                        }
                    }
                    "weak_harnack" => {
                        reports.extend(weak_harnack_report(&u, &pair, &f, &s.t)?.reports)
                    }
                    "harnack" => reports.push(harnack_report(&u, &pair, &f)?),
                    "holder" => table.rows.push(holder_row(&u, &s.radii, h, &pair)?),
                    "kappa" => table.rows.extend(kappa_rows(&u, &pair, &f, h)?),
                    "admissible" => table.rows.extend(admissible_rows(&pair, h)),
                    "cutoff" => {
                        let beta = s.beta.unwrap_or_else(|| threshold_beta(s.dim));
                        let (id, lhs, rhs, c, verdict, notes) = cutoff_point(s.dim, beta);
                        table.rows.push(vec![
                            id,
                            fmt_real(h),
                            pair.profile.id().into(),
                            format!("beta={}", fmt_real(beta)),
                            fmt_real(lhs),
                            fmt_real(rhs),
                            fmt_real(c),
                            verdict,
                            notes,
                        ]);
                    }
                    _ => unreachable!(),
                }
                for r in reports.drain(..) {
                    if r.verdict == Verdict::HypothesisFailure {
                        status = status.max(Status::Hypothesis);
                        summary.push(format!("h={h}: {} hypothesis failure", r.theorem_id));
                    }
                    table.rows.push(estimate_row(&r));
                }
            }
            if s.snapshots {
                w.snapshot(&format!("check-u-{}.snap", h_tag(h)), &u)?;
            }
        }
    }
    w.finish("check", &table, status, summary)
}

pub const CONVERGENCE_COLUMNS: &[&str] = &["h", "error_linf", "residual", "sweeps", "order"];

pub fn convergence(s: &Settings) -> Result<Outcome> {
    let hs = spacings(s, None, "convergence")?;
    if hs.len() < 2 {
        bail!(
            "`h-list` needs at least 2 spacings for observed orders, got {}",
            hs.len()
        );
    }
    let u_form = require(&s.u, "u", "convergence")?;
    if !matches!(s.f, ForcingSpec::Linear | ForcingSpec::Constant(_)) {
        bail!("`f`: convergence needs a linear manufactured problem (f = linear)");
    }
    let coefficients = s
        .coefficients
        .clone()
        .unwrap_or_else(|| default_coefficients(s.dim));
    let mut w = Writer::new(&s.out)?;
    let mut table = CsvTable::new("convergence", CONVERGENCE_COLUMNS);
    let mut prev: Option<(f64, f64)> = None;
    for &h in &hs {
        let grid = s.grid_spec(h).build()?;
        let f = manufactured_rhs_linear(u_form, &coefficients, &grid)?;
        let prob = LinearProblem::from_catalog(&grid, &coefficients, &f, u_form)?;
        let sol = solve_linear_dirichlet(&prob, s.solver_tol, s.max_sweeps)?;
        let truth = u_form.sample(&grid);
        let err = sol.u.zip_with(&truth, |a, b| (a - b).abs())?.max();
        // Errors this close to the solver tolerance carry no discretization
        // signal.
        let floor = (100.0 * s.solver_tol).max(1e-9) * (1.0 + truth.sup_norm());
        let order = match prev {
            _ if err <= floor => "exact".to_string(),
            Some((hp, ep)) => fmt_real((ep / err).ln() / (hp / h).ln()),
            None => String::new(),
        };
        table.push(vec![
            fmt_real(h),
            fmt_real(err),
            fmt_real(sol.residual),
            sol.sweeps.to_string(),
            order,
        ])?;
        if s.snapshots {
            w.snapshot(&format!("convergence-u-{}.snap", h_tag(h)), &sol.u)?;
        }
        prev = Some((h, err));
    }
    w.finish("convergence", &table, Status::Ok, Vec::new())
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "param",
    "value",
    "metric",
    "lhs",
    "rhs_core",
    "empirical_constant",
    "verdict",
    "trend",
    "notes",
];

/// One sweep point: `(metric, lhs, rhs_core, empirical_constant, verdict, notes)`.
type Point = (String, f64, f64, f64, String, String);

fn report_point(r: EstimateReport) -> Point {
    (
        r.theorem_id.clone(),
        r.lhs,
        r.rhs_core,
        r.empirical_constant,
        r.verdict.to_string(),
        r.notes.join("; "),
    )
}

fn bundle_point(s: &Settings, name: &str, key: &str, v: f64, min_form: bool) -> Result<Point> {
    let mut params = s.bundle_param_refs();
    params.retain(|(k, _)| *k != key);
    params.push((key, v));
    let mut b = gallery(name, &params)?;
    if let Some(h) = s.spacings.first() {
        b = b.with_spacing(*h);
    }
    let grid = b.grid.build()?;
    let (u, f) = (b.u.sample(&grid), b.f.sample(&grid)?);
    let r = if min_form {
        abp_min_report(&u, &b.pair, &f)?
    } else {
        abp_report(&u, &b.pair, &f)?
    };
    Ok(report_point(r))
}

fn sweep_point(s: &Settings, param: &str, v: f64) -> Result<Point> {
    match param {
        "alpha" => bundle_point(s, "grushin", "alpha", v, false),
        "gamma" => bundle_point(s, "abs_gamma", "gamma", v, true),
        "s" => {
            let mut params = s.bundle_param_refs();
            params.retain(|(k, _)| *k != "s");
            params.push(("s", v));
            let b = gallery("fractional", &params)?;
            let a = check_admissible(&b.pair, CheckMode::Abp);
            Ok((
                "admissible_abp".into(),
                a.slack,
                a.declared_slack,
                f64::NAN,
                if a.admissible {
                    "admissible"
                } else {
                    "inadmissible"
                }
                .into(),
                format!(
                    "lhs = slack; rhs_core = declared slack; {}",
                    b.pair.descriptor()
                ),
            ))
        }
        "beta" => Ok(cutoff_point(s.dim, v)),
        "t" => {
            let (u, pair, f) = problem_fields(s)?;
            let out = weak_harnack_report(&u, &pair, &f, &[v])?;
            Ok(report_point(out.summary().clone()))
        }
        other => Err(anyhow!(
            "`sweep`: unknown parameter `{other}` (known: alpha, gamma, s, beta, t)"
        )),
    }
}

/// Sign-flip radius of the cutoff against the threshold rule in dimension `n`.
fn cutoff_point(n: usize, beta: f64) -> Point {
    let radius = sign_flip_radius(beta);
    let alpha = 1.0 / (3.0 * n as f64);
    let threshold = threshold_beta(n);
    let consistent = (beta >= threshold) == (radius <= alpha);
    (
        "cutoff_sign_flip".into(),
        radius,
        alpha,
        threshold,
        if consistent { "consistent" } else { "inconsistent" }.into(),
        format!(
            "n={n}; lhs = sign-flip radius; rhs_core = 1/(3n); empirical_constant = threshold beta; beta above threshold={}",
            beta >= threshold
        ),
    )
}

/// The fields of the configured problem on the first spacing: a bundle if
/// one is named, the free problem otherwise.
fn problem_fields(s: &Settings) -> Result<(ScalarField, EllipticityPair, ScalarField)> {
    if let Some(name) = &s.bundle {
        let mut b = gallery(name, &s.bundle_param_refs())?;
        if let Some(h) = s.spacings.first() {
            b = b.with_spacing(*h);
        }
        let grid = b.grid.build()?;
        let f = b.f.sample(&grid)?;
        Ok((b.u.sample(&grid), b.pair, f))
    } else {
        let pair = require(&s.pair, "profile", "this sweep")?;
        let u_form = require(&s.u, "u", "this sweep")?;
        let h = *s
            .spacings
            .first()
            .ok_or_else(|| anyhow!("`h` is required for this sweep"))?;
        let grid = s.grid_spec(h).build()?;
        let f = forcing(s, u_form, Some(&pair), &grid)?;
        Ok((u_form.sample(&grid), pair, f))
    }
}

fn trend(prev: Option<f64>, cur: f64) -> &'static str {
    match prev {
        Some(p) if p.is_finite() && cur.is_finite() => {
            let scale = 1e-12 * p.abs().max(cur.abs());
            if cur > p + scale {
                "increasing"
            } else if cur < p - scale {
                "decreasing"
            } else {
                "flat"
            }
        }
        _ => "",
    }
}

pub fn sweep(s: &Settings) -> Result<Outcome> {
    let (param, values) = s
        .sweep
        .clone()
        .ok_or_else(|| anyhow!("`sweep`: one swept parameter with a value list is required"))?;
    if values.is_empty() {
        bail!("`sweep`: the value list for `{param}` is empty");
    }
    if !["alpha", "gamma", "s", "beta", "t"].contains(&param.as_str()) {
        bail!("`sweep`: unknown parameter `{param}` (known: alpha, gamma, s, beta, t)");
    }
    let w = Writer::new(&s.out)?;
    let mut table = CsvTable::new("sweep", SWEEP_COLUMNS);
    let mut prev = None;
    let mut status = Status::Ok;
    for v in values {
        let row = match sweep_point(s, &param, v) {
            Ok((metric, lhs, rhs, c, verdict, notes)) => {
                if verdict == Verdict::HypothesisFailure.as_str() {
                    status = status.max(Status::Hypothesis);
                }
                let t = trend(prev, c);
                prev = Some(c);
                vec![
                    param.clone(),
                    fmt_real(v),
                    metric,
                    fmt_real(lhs),
                    fmt_real(rhs),
                    fmt_real(c),
                    verdict,
                    t.into(),
                    notes,
                ]
            }
            Err(e) => {
                prev = None;
                let nan = fmt_real(f64::NAN);
                vec![
                    param.clone(),
                    fmt_real(v),
                    String::new(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    "error".into(),
                    String::new(),
                    e.to_string(),
                ]
            }
        };
        table.push(row)?;
    }
    w.finish("sweep", &table, status, Vec::new())
}

pub const CONTACT_COLUMNS: &[&str] = &[
    "h",
    "nodes",
    "interior",
    "contact_count",
    "contact_measure",
    "max_gap",
    "slope_radius",
    "restricted_count",
    "restricted_measure",
];

pub fn envelope(s: &Settings) -> Result<Outcome> {
    let u_form = match (&s.u, &s.bundle) {
        (Some(u), _) => *u,
        (None, Some(name)) => gallery(name, &s.bundle_param_refs())?.u,
        (None, None) => bail!("`u` or `bundle` is required for envelope"),
    };
    let mut w = Writer::new(&s.out)?;
    let mut table = CsvTable::new("contact", CONTACT_COLUMNS);
    for h in spacings(s, None, "envelope")? {
        let grid = s.grid_spec(h).build()?;
        let u = u_form.sample(&grid);
        let env = concave_envelope(&u)?;
        let tol = s
            .contact_tol
            .unwrap_or_else(|| abplab::contact::default_tolerance(&u));
        let contact = upper_contact_set(&u, tol)?;
        let gap = env
            .zip_with(&u, |e, v| e - v)?
            .masked_max(&grid.closed_domain_mask())
            .unwrap_or(0.0);
        let tag = h_tag(h);
        w.snapshot(&format!("envelope-{tag}.snap"), &env)?;
        w.snapshot(&format!("contact-{tag}.snap"), &contact.to_field())?;
        let (r, count, measure) = match s.slope_radius {
            Some(r) => {
                let m = slope_restricted_contact(&u, r, tol)?;
                w.snapshot(&format!("contact-restricted-{tag}.snap"), &m.to_field())?;
                (fmt_real(r), m.count().to_string(), fmt_real(m.measure()))
            }
            None => (String::new(), String::new(), String::new()),
        };
        table.push(vec![
            fmt_real(h),
            grid.len().to_string(),
            grid.interior_count().to_string(),
            contact.count().to_string(),
            fmt_real(contact.measure()),
            fmt_real(gap),
            r,
            count,
            measure,
        ])?;
    }
    w.finish("envelope", &table, Status::Ok, Vec::new())
}

pub const SOLVE_COLUMNS: &[&str] = &[
    "h",
    "nodes",
    "sweeps",
    "omega",
    "residual",
    "error_linf",
    "coefficients",
];

pub fn solve(s: &Settings) -> Result<Outcome> {
    let u_form = require(&s.u, "u", "solve")?;
    if matches!(s.f, ForcingSpec::PucciPlus | ForcingSpec::PucciMinus) {
        bail!("`f`: solve handles linear equations; use linear, zero or a number");
    }
    let coefficients = s
        .coefficients
        .clone()
        .unwrap_or_else(|| default_coefficients(s.dim));
    let label = coefficients
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let mut w = Writer::new(&s.out)?;
    let mut table = CsvTable::new("solve", SOLVE_COLUMNS);
    for h in spacings(s, None, "solve")? {
        let grid = s.grid_spec(h).build()?;
        let f = match s.f {
            ForcingSpec::Constant(c) => ScalarField::constant(grid.clone(), c),
            _ => manufactured_rhs_linear(u_form, &coefficients, &grid)?,
        };
        let prob = LinearProblem::from_catalog(&grid, &coefficients, &f, u_form)?;
        let sol = solve_linear_dirichlet(&prob, s.solver_tol, s.max_sweeps)?;
        // Only a manufactured forcing makes `u` the exact solution.
        let err = if s.f == ForcingSpec::Linear {
            sol.u
                .zip_with(&u_form.sample(&grid), |a, b| (a - b).abs())?
                .max()
        } else {
            f64::NAN
        };
        w.snapshot(&format!("solve-u-{}.snap", h_tag(h)), &sol.u)?;
        table.push(vec![
            fmt_real(h),
            grid.len().to_string(),
            sol.sweeps.to_string(),
            fmt_real(sol.omega),
            fmt_real(sol.residual),
            fmt_real(err),
            label.clone(),
        ])?;
    }
    w.finish("solve", &table, Status::Ok, Vec::new())
}
