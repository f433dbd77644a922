//! Mode drivers. Each returns an [`Outcome`] carrying the exit status, the
//! JSON report and the sample table to write, if any.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rqfractal::constraints::{
    above_line_feasible, auto_parameters, coefficient_sign_validate, rectangle_feasible,
    Constraint, FeasibleRange, LineConstraint, RectangleConstraint, SubintervalRange,
};
use rqfractal::convergence::{
    empirical_convergence_study, surface_convergence_study, AlphaPolicy, StudyConfig,
};
use rqfractal::ifs::KnotVector;
use rqfractal::spline::{HermiteCurveData, RationalQuarticFif, ShapeParams};
use rqfractal::surface::{
    surface_above_plane_feasible, surface_box_feasible, BlendedSurface, LineParams, NetworkParams,
    PlaneConstraint, SurfaceFeasible, SurfaceGridData,
};

use crate::config::{ConstraintSpec, JobConfig, Mode, Original, ParamSpec};
use crate::io::{parse_curve, parse_rows, parse_surface, read_text, write_table};
use crate::{CliError, ExitKind, Result};

/// Slack allowed when checking sampled values against a constraint.
pub const CHECK_SLACK: f64 = 1e-9;

#[derive(Debug)]
pub struct Outcome {
    pub kind: ExitKind,
    pub report: Value,
    pub table: Option<String>,
}

impl Outcome {
    fn new(kind: ExitKind, report: Value, table: Option<String>) -> Self {
        Self {
            kind,
            report,
            table,
        }
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Curve => "curve",
        Mode::Surface => "surface",
        Mode::Feasible => "feasible",
        Mode::Validate => "validate",
        Mode::Converge => "converge",
    }
}

fn status(kind: ExitKind) -> &'static str {
    match kind {
        ExitKind::Success => "ok",
        ExitKind::Parse => "parse error",
        ExitKind::Infeasible => "infeasible",
        ExitKind::Violation => "constraint violation",
        ExitKind::Numerical => "numerical failure",
    }
}

/// Runs a job; errors become a report with the matching exit status.
pub fn run(config: &JobConfig) -> Outcome {
    let result = match config.mode {
        Mode::Curve => run_curve(config),
        Mode::Surface => run_surface(config),
        Mode::Feasible => run_feasible(config),
        Mode::Validate => run_validate(config),
        Mode::Converge => run_converge(config),
    };
    let mut outcome = result
        .unwrap_or_else(|e| Outcome::new(e.exit_kind(), json!({ "error": e.to_string() }), None));
    if let Value::Object(map) = &mut outcome.report {
        map.insert("mode".into(), json!(mode_name(config.mode)));
        map.insert("status".into(), json!(status(outcome.kind)));
        map.insert("exit_code".into(), json!(outcome.kind as i32));
        map.insert("constraint".into(), constraint_json(config.constraint));
    }
    outcome
}

fn constraint_json(c: ConstraintSpec) -> Value {
    match c {
        ConstraintSpec::None => Value::Null,
        ConstraintSpec::Box { c, d } => json!({ "box": { "c": c, "d": d } }),
        ConstraintSpec::Line { m, k } => json!({ "line": { "m": m, "k": k } }),
        ConstraintSpec::Plane { a, b, c } => json!({ "plane": { "a": a, "b": b, "c": c } }),
    }
}

enum Input {
    Curve(HermiteCurveData),
    Surface(SurfaceGridData),
}

fn load(config: &JobConfig) -> Result<Input> {
    let path = config.input.as_deref().expect("validated");
    let text = read_text(path)?;
    let name = path.display().to_string();
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if first.starts_with('x') {
        parse_curve(&name, &text).map(Input::Curve)
    } else {
        parse_surface(&name, &text).map(Input::Surface)
    }
}

fn load_curve(config: &JobConfig) -> Result<HermiteCurveData> {
    match load(config)? {
        Input::Curve(d) => Ok(d),
        Input::Surface(_) => Err(CliError::Config(format!(
            "--mode {} expects curve data (header `x,y,d`)",
            mode_name(config.mode)
        ))),
    }
}

fn load_surface(config: &JobConfig) -> Result<SurfaceGridData> {
    match load(config)? {
        Input::Surface(d) => Ok(d),
        Input::Curve(_) => Err(CliError::Config(
            "--mode surface expects surface data (header `m n`)".into(),
        )),
    }
}

fn read_param_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse_rows(&path.display().to_string(), &read_text(path)?)
}

/// All numbers in a parameter file, which must hold exactly `count`.
fn curve_params(spec: &ParamSpec, count: usize, what: &str) -> Result<Option<Vec<f64>>> {
    let ParamSpec::File(path) = spec else {
        return Ok(None);
    };
    let v: Vec<f64> = read_param_rows(path)?.into_iter().flatten().collect();
    if v.len() != count {
        return Err(CliError::Config(format!(
            "{what} file {}: expected {count} values, found {}",
            path.display(),
            v.len()
        )));
    }
    Ok(Some(v))
}

/// One row per horizontal line, then one per vertical line.
fn network_params(
    spec: &ParamSpec,
    data: &SurfaceGridData,
    what: &str,
) -> Result<Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> {
    let ParamSpec::File(path) = spec else {
        return Ok(None);
    };
    let rows = read_param_rows(path)?;
    let (nx, ny) = (data.nx(), data.ny());
    if rows.len() != nx + ny {
        return Err(CliError::Config(format!(
            "{what} file {}: expected {} rows ({ny} horizontal, then {nx} vertical), found {}",
            path.display(),
            nx + ny,
            rows.len()
        )));
    }
    for (k, r) in rows.iter().enumerate() {
        let want = if k < ny { nx - 1 } else { ny - 1 };
        if r.len() != want {
            return Err(CliError::Config(format!(
                "{what} file {}: row {} needs {want} values, found {}",
                path.display(),
                k + 1,
                r.len()
            )));
        }
    }
    let vertical = rows[ny..].to_vec();
    let mut horizontal = rows;
    horizontal.truncate(ny);
    Ok(Some((horizontal, vertical)))
}

fn empty_range_report(indices: &[usize]) -> Value {
    json!({ "empty_subintervals": indices })
}

/// Scaling and shape vectors for one curve. `Err` carries an infeasibility
/// report.
fn choose(
    range: Option<&FeasibleRange>,
    knots: &KnotVector,
    alpha: Option<Vec<f64>>,
    lambda: Option<Vec<f64>>,
    margin: f64,
) -> std::result::Result<(Vec<f64>, Vec<f64>), Value> {
    let segments = knots.subintervals();
    let alpha = match (alpha, range) {
        (Some(a), _) => a,
        (None, Some(r)) => match auto_parameters(r, margin) {
            Ok(auto) => auto.alpha,
            Err(e) => {
                let mut report = empty_range_report(&r.empty_subintervals());
                report["reason"] = json!(e.to_string());
                return Err(report);
            }
        },
        (None, None) => vec![0.0; segments],
    };
    let lambda = match (lambda, range) {
        (Some(l), _) => l,
        (None, None) => vec![1.0; segments],
        (None, Some(r)) => {
            let mut out = Vec::with_capacity(segments);
            for (s, &a) in r.subintervals.iter().zip(&alpha) {
                let bound = s.lambda_bound(a);
                if !bound.is_feasible() {
                    return Err(json!({
                        "empty_subintervals": [s.index],
                        "reason": format!("no admissible shape parameter at scaling {a} ({})", bound.binding),
                    }));
                }
                out.push(if bound.value > 0.0 {
                    bound.value * (1.0 + margin)
                } else {
                    1.0
                });
            }
            out
        }
    };
    Ok((alpha, lambda))
}

fn curve_range(data: &HermiteCurveData, c: ConstraintSpec) -> Result<Option<FeasibleRange>> {
    Ok(match c {
        ConstraintSpec::Box { c, d } => {
            Some(rectangle_feasible(data, &RectangleConstraint::new(c, d))?)
        }
        ConstraintSpec::Line { m, k } => {
            Some(above_line_feasible(data, &LineConstraint::new(m, k))?)
        }
        _ => None,
    })
}

fn library_constraint(c: ConstraintSpec) -> Option<Constraint> {
    match c {
        ConstraintSpec::Box { c, d } => Some(Constraint::Rectangle(RectangleConstraint::new(c, d))),
        ConstraintSpec::Line { m, k } => Some(Constraint::Line(LineConstraint::new(m, k))),
        _ => None,
    }
}

/// Sample check against a curve constraint: `(violations, worst excess)`.
fn check_curve(c: &Constraint, xs: &[f64], values: &[f64]) -> (usize, f64) {
    let excess = |x: f64, v: f64| match c {
        Constraint::Rectangle(b) => (b.c - v).max(v - b.d),
        Constraint::Line(l) => l.at(x) - v,
    };
    xs.iter()
        .zip(values)
        .fold((0, f64::NEG_INFINITY), |(n, w), (&x, &v)| {
            let e = excess(x, v);
            (n + usize::from(!(e <= CHECK_SLACK)), w.max(e))
        })
}

fn check_json(samples: usize, violations: usize, worst: f64) -> Value {
    json!({
        "samples": samples,
        "violations": violations,
        "max_excess": worst,
        "slack": CHECK_SLACK,
    })
}

fn run_curve(config: &JobConfig) -> Result<Outcome> {
    let data = load_curve(config)?;
    let segments = data.subintervals();
    let range = curve_range(&data, config.constraint)?;
    let alpha = curve_params(&config.alpha, segments, "alpha")?;
    let lambda = curve_params(&config.lambda, segments, "lambda")?;
    let (alpha, lambda) = match choose(range.as_ref(), data.knots(), alpha, lambda, config.margin) {
        Ok(p) => p,
        Err(report) => {
            return Ok(Outcome::new(
                ExitKind::Infeasible,
                json!({ "feasible": report }),
                None,
            ))
        }
    };
    let fif = RationalQuarticFif::assemble(
        data.clone(),
        ShapeParams::Single(lambda.clone()),
        alpha.clone(),
    )?;
    let table = fif.sample(config.resolution, config.tol)?;
    let mut report = json!({
        "parameters": { "alpha": alpha, "lambda": lambda },
        "sampling": {
            "points": table.len(),
            "per_subinterval": table.per_subinterval(),
            "iterations": table.iterations(),
            "last_distance": table.distances().last(),
            "contraction": table.contraction(),
        },
    });
    let mut kind = ExitKind::Success;
    if let Some(c) = library_constraint(config.constraint) {
        let signs = coefficient_sign_validate(&data, fif.shape(), &alpha, &c)?;
        let (violations, worst) = check_curve(&c, table.xs(), table.values());
        report["validation"] = json!({ "holds": signs.holds(), "failures": signs.failures() });
        report["check"] = check_json(table.len(), violations, worst);
        if violations > 0 {
            kind = ExitKind::Violation;
        }
    }
    if let Some(r) = &range {
        report["feasible"] = range_summary(r, &alpha);
    }
    let rows = table
        .xs()
        .iter()
        .zip(table.values())
        .map(|(&x, &v)| vec![x, v]);
    Ok(Outcome::new(
        kind,
        report,
        Some(write_table(&["x", "value"], rows)),
    ))
}

fn piece_json(p: &rqfractal::constraints::AlphaInterval) -> Value {
    json!({
        "lo": p.lo,
        "hi": p.hi,
        "lo_open": p.lo_open,
        "hi_open": p.hi_open,
        "lo_binding": p.lo_binding,
        "hi_binding": p.hi_binding,
    })
}

fn subinterval_summary(s: &SubintervalRange, alpha: Option<f64>) -> Value {
    let pieces: Vec<Value> = [Some(s.nonnegative), s.negative]
        .into_iter()
        .flatten()
        .filter(|p| !p.is_empty())
        .map(|p| piece_json(&p))
        .collect();
    let mut out = json!({
        "index": s.index,
        "cap": s.cap,
        "alpha_min": s.alpha_min(),
        "alpha_max": s.alpha_max(),
        "pieces": pieces,
    });
    if let Some(a) = alpha.filter(|&a| s.contains(a)) {
        let b = s.lambda_bound(a);
        out["alpha"] = json!(a);
        out["lambda_min"] = if b.is_feasible() {
            json!(b.value)
        } else {
            Value::Null
        };
        out["lambda_strict"] = json!(b.strict);
        out["lambda_binding"] = json!(b.binding);
    }
    out
}

fn range_summary(r: &FeasibleRange, alpha: &[f64]) -> Value {
    json!({
        "empty_subintervals": r.empty_subintervals(),
        "subintervals": r
            .subintervals
            .iter()
            .map(|s| subinterval_summary(s, alpha.get(s.index).copied()))
            .collect::<Vec<_>>(),
    })
}

fn surface_ranges(data: &SurfaceGridData, c: ConstraintSpec) -> Result<Option<SurfaceFeasible>> {
    Ok(match c {
        ConstraintSpec::Box { c, d } => {
            Some(surface_box_feasible(data, &RectangleConstraint::new(c, d))?)
        }
        ConstraintSpec::Plane { a, b, c } => Some(surface_above_plane_feasible(
            data,
            &PlaneConstraint::new(a, b, c)?,
        )?),
        _ => None,
    })
}

fn run_surface(config: &JobConfig) -> Result<Outcome> {
    let data = load_surface(config)?;
    let ranges = surface_ranges(&data, config.constraint)?;
    let alpha = network_params(&config.alpha, &data, "alpha")?;
    let lambda = network_params(&config.lambda, &data, "lambda")?;

    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    for (direction, count, knots) in [
        ("horizontal", data.ny(), data.x()),
        ("vertical", data.nx(), data.y()),
    ] {
        for line in 0..count {
            let pick = |p: &Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>| {
                p.as_ref().map(|(h, v)| {
                    if direction == "horizontal" {
                        h[line].clone()
                    } else {
                        v[line].clone()
                    }
                })
            };
            let range = ranges.as_ref().map(|r| {
                if direction == "horizontal" {
                    &r.horizontal[line]
                } else {
                    &r.vertical[line]
                }
            });
            match choose(range, knots, pick(&alpha), pick(&lambda), config.margin) {
                Ok((a, l)) => {
                    let target = if direction == "horizontal" {
                        &mut horizontal
                    } else {
                        &mut vertical
                    };
                    target.push(LineParams::new(a, l));
                }
                Err(mut report) => {
                    report["direction"] = json!(direction);
                    report["line"] = json!(line);
                    return Ok(Outcome::new(
                        ExitKind::Infeasible,
                        json!({ "feasible": report }),
                        None,
                    ));
                }
            }
        }
    }
    let params = NetworkParams {
        horizontal,
        vertical,
    };
    let surface = BlendedSurface::build(data, &params, config.resolution, config.tol)?;
    let (xs, ys) = (surface.lattice_x(), surface.lattice_y());
    let mut rows = Vec::with_capacity(xs.len() * ys.len());
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for (ix, &x) in xs.iter().enumerate() {
        for (iy, &y) in ys.iter().enumerate() {
            let v = surface.value_at_index(ix, iy);
            let excess = match config.constraint {
                ConstraintSpec::Box { c, d } => (c - v).max(v - d),
                ConstraintSpec::Plane { a, b, c } => c * (1.0 - x / a - y / b) - v,
                _ => f64::NEG_INFINITY,
            };
            worst = worst.max(excess);
            violations += usize::from(!(excess <= CHECK_SLACK));
            rows.push(vec![x, y, v]);
        }
    }
    let line_json = |p: &[LineParams]| -> Vec<Value> {
        p.iter()
            .map(|l| json!({ "alpha": l.scaling, "lambda": (0..l.scaling.len()).map(|n| l.shape.lambda(n)).collect::<Vec<_>>() }))
            .collect()
    };
    let mut report = json!({
        "parameters": {
            "horizontal": line_json(&params.horizontal),
            "vertical": line_json(&params.vertical),
        },
        "lattice": { "nx": xs.len(), "ny": ys.len() },
    });
    let mut kind = ExitKind::Success;
    if config.constraint != ConstraintSpec::None {
        report["check"] = check_json(rows.len(), violations, worst);
        if violations > 0 {
            kind = ExitKind::Violation;
        }
    }
    Ok(Outcome::new(
        kind,
        report,
        Some(write_table(&["x", "y", "value"], rows)),
    ))
}

fn run_feasible(config: &JobConfig) -> Result<Outcome> {
    match load(config)? {
        Input::Curve(data) => {
            let Some(range) = curve_range(&data, config.constraint)? else {
                return Err(CliError::Config("curve data takes --box or --line".into()));
            };
            let auto = auto_parameters(&range, config.margin).ok();
            let alpha = auto.as_ref().map(|a| a.alpha.clone()).unwrap_or_default();
            let mut report = json!({ "feasible": range_summary(&range, &alpha) });
            if range.is_empty() {
                return Ok(Outcome::new(ExitKind::Infeasible, report, None));
            }
            let mut kind = ExitKind::Success;
            if config.draws > 0 {
                let c = library_constraint(config.constraint).expect("curve constraint");
                let (draws, violations) = random_draws(config, &data, &range, &c)?;
                report["draws"] = draws;
                if violations > 0 {
                    kind = ExitKind::Violation;
                }
            }
            Ok(Outcome::new(kind, report, None))
        }
        Input::Surface(data) => {
            let Some(ranges) = surface_ranges(&data, config.constraint)? else {
                return Err(CliError::Config(
                    "surface data takes --box or --plane".into(),
                ));
            };
            let lines = |rs: &[FeasibleRange]| -> Vec<Value> {
                rs.iter()
                    .map(|r| {
                        let alpha = auto_parameters(r, config.margin)
                            .map(|a| a.alpha)
                            .unwrap_or_default();
                        range_summary(r, &alpha)
                    })
                    .collect()
            };
            let report = json!({
                "feasible": {
                    "horizontal": lines(&ranges.horizontal),
                    "vertical": lines(&ranges.vertical),
                }
            });
            let kind = if ranges.is_empty() {
                ExitKind::Infeasible
            } else {
                ExitKind::Success
            };
            Ok(Outcome::new(kind, report, None))
        }
    }
}

/// Random in-range parameters, each sampled and checked.
fn random_draws(
    config: &JobConfig,
    data: &HermiteCurveData,
    range: &FeasibleRange,
    c: &Constraint,
) -> Result<(Value, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for _ in 0..config.draws {
        let mut alpha = Vec::new();
        let mut lambda = Vec::new();
        for s in &range.subintervals {
            let pieces: Vec<_> = [Some(s.nonnegative), s.negative]
                .into_iter()
                .flatten()
                .filter(|p| !p.is_empty())
                .collect();
            let p = pieces[rng.gen_range(0..pieces.len())];
            let a = p.lo + (p.hi - p.lo) * rng.gen_range(0.01..0.99);
            let b = s.lambda_bound(a);
            alpha.push(a);
            lambda.push(b.value.max(0.0) + rng.gen_range(1e-3..2.0));
        }
        let fif = RationalQuarticFif::assemble(data.clone(), ShapeParams::Single(lambda), alpha)?;
        let table = fif.sample(config.resolution, config.tol)?;
        let (n, w) = check_curve(c, table.xs(), table.values());
        violations += n;
        worst = worst.max(w);
        samples += table.len();
    }
    let mut report = check_json(samples, violations, worst);
    report["draws"] = json!(config.draws);
    report["seed"] = json!(config.seed);
    Ok((report, violations))
}

fn run_validate(config: &JobConfig) -> Result<Outcome> {
    let data = load_curve(config)?;
    let segments = data.subintervals();
    let alpha = curve_params(&config.alpha, segments, "alpha")?.expect("validated");
    let lambda = curve_params(&config.lambda, segments, "lambda")?.expect("validated");
    let c = library_constraint(config.constraint).expect("validated");
    let report =
        coefficient_sign_validate(&data, &ShapeParams::Single(lambda.clone()), &alpha, &c)?;
    let failures: Vec<Value> = report
        .failures()
        .into_iter()
        .map(|(n, name)| json!({ "subinterval": n, "condition": name }))
        .collect();
    let kind = if report.holds() {
        ExitKind::Success
    } else {
        ExitKind::Violation
    };
    Ok(Outcome::new(
        kind,
        json!({
            "parameters": { "alpha": alpha, "lambda": lambda },
            "validation": { "holds": report.holds(), "failures": failures, "conditions": report },
        }),
        None,
    ))
}

fn run_converge(config: &JobConfig) -> Result<Outcome> {
    let study = StudyConfig {
        resolution: config.resolution,
        tol: config.tol,
        ..StudyConfig::default()
    };
    let (lo, hi) = config.domain;
    let mut runs = Vec::new();
    let mut table = Vec::new();
    let surface = config.function == Original::SinCos;
    for &rho in &config.rho {
        let policy = AlphaPolicy::new(rho)?;
        if surface {
            let rows = surface_convergence_study(
                |x, y| x.sin() * y.cos(),
                |x, y| x.cos() * y.cos(),
                |x, y| -x.sin() * y.sin(),
                (lo, hi),
                (lo, hi),
                &config.meshes,
                policy,
                study,
            )?;
            for r in &rows {
                table.push(vec![
                    rho,
                    r.knots as f64,
                    r.h,
                    r.h_star,
                    r.perturbation,
                    r.perturbation_bound,
                    r.sup_error,
                    r.order.unwrap_or(f64::NAN),
                ]);
            }
            runs.push(json!({ "rho": rho, "rows": rows }));
        } else {
            let rows = match config.function {
                Original::Sin => empirical_convergence_study(
                    f64::sin,
                    f64::cos,
                    lo,
                    hi,
                    &config.meshes,
                    policy,
                    study,
                ),
                Original::Exp => empirical_convergence_study(
                    f64::exp,
                    f64::exp,
                    lo,
                    hi,
                    &config.meshes,
                    policy,
                    study,
                ),
                _ => empirical_convergence_study(
                    |x| 1.0 / (1.0 + 25.0 * x * x),
                    |x| -50.0 * x / (1.0 + 25.0 * x * x).powi(2),
                    lo,
                    hi,
                    &config.meshes,
                    policy,
                    study,
                ),
            }?;
            for r in &rows {
                table.push(vec![
                    rho,
                    r.knots as f64,
                    r.h,
                    r.sup_error,
                    r.order.unwrap_or(f64::NAN),
                ]);
            }
            runs.push(json!({ "rho": rho, "rows": rows }));
        }
    }
    let header: &[&str] = if surface {
        &[
            "rho",
            "knots",
            "h",
            "h_star",
            "perturbation",
            "perturbation_bound",
            "sup_error",
            "order",
        ]
    } else {
        &["rho", "knots", "h", "sup_error", "order"]
    };
    Ok(Outcome::new(
        ExitKind::Success,
        json!({ "study": runs, "domain": [lo, hi], "lambda": study.lambda }),
        Some(write_table(header, table)),
    ))
}
