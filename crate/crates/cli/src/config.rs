//! Command-line flags and the validated job description built from them.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Assemble and sample a fractal curve.
    Curve,
    /// Assemble and sample a blended fractal surface.
    Surface,
    /// Report per-subinterval parameter ranges for a constraint.
    Feasible,
    /// Check explicit parameters against the coefficient sign conditions.
    Validate,
    /// Run a mesh-refinement study on a built-in original.
    Converge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Original {
    /// `sin x` (curve study).
    Sin,
    /// `exp x` (curve study).
    Exp,
    /// `1 / (1 + 25 x^2)` (curve study).
    Runge,
    /// `sin x cos y` (surface study).
    SinCos,
}

#[derive(Debug, Parser)]
#[command(
    name = "rqfractal",
    version,
    about = "Rational quartic fractal curves and blended surfaces"
)]
pub struct Cli {
    #[arg(long, value_enum)]
    pub mode: Mode,

    /// Curve (`x,y[,d]`) or surface (`m n` header) data file.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Sample table (curve, surface) or study table (converge).
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Keep the graph inside `c <= value <= d`.
    #[arg(long = "box", num_args = 2, value_names = ["C", "D"], allow_negative_numbers = true)]
    pub box_: Option<Vec<f64>>,

    /// Keep the graph above `m x + k`.
    #[arg(long, num_args = 2, value_names = ["M", "K"], allow_negative_numbers = true)]
    pub line: Option<Vec<f64>>,

    /// Keep the surface above `c (1 - x/a - y/b)`.
    #[arg(long, num_args = 3, value_names = ["A", "B", "C"], allow_negative_numbers = true)]
    pub plane: Option<Vec<f64>>,

    /// Scaling factors: a file of numbers, or `auto`.
    #[arg(long, default_value = "auto")]
    pub alpha: String,

    /// Shape parameters: a file of numbers, or `auto`.
    #[arg(long, default_value = "auto")]
    pub lambda: String,

    /// Relative margin above the shape-parameter bound for `auto`.
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,

    /// Sample points per subinterval (rounded up to the nested grid).
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,

    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Random in-range parameter draws checked in feasible mode.
    #[arg(long, default_value_t = 0)]
    pub draws: usize,

    /// Original for converge mode.
    #[arg(long, value_enum, default_value = "sin")]
    pub function: Original,

    /// Domain `lo hi` for converge mode (both axes for surfaces).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub domain: Option<Vec<f64>>,

    /// Knot counts for converge mode.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub meshes: Option<Vec<usize>>,

    /// Scaling policies `α_n = ρ a_n` for converge mode.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintSpec {
    None,
    Box { c: f64, d: f64 },
    Line { m: f64, k: f64 },
    Plane { a: f64, b: f64, c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSpec {
    Auto,
    File(PathBuf),
}

impl ParamSpec {
    fn parse(s: &str) -> Self {
        if s == "auto" {
            ParamSpec::Auto
        } else {
            ParamSpec::File(PathBuf::from(s))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub mode: Mode,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub constraint: ConstraintSpec,
    pub alpha: ParamSpec,
    pub lambda: ParamSpec,
    pub margin: f64,
    pub resolution: usize,
    pub tol: f64,
    pub seed: u64,
    pub draws: usize,
    pub function: Original,
    pub domain: (f64, f64),
    pub meshes: Vec<usize>,
    pub rho: Vec<f64>,
}

impl TryFrom<Cli> for JobConfig {
    type Error = CliError;

    fn try_from(cli: Cli) -> Result<Self> {
        let bad = |m: String| Err(CliError::Config(m));
        let given = [cli.box_.is_some(), cli.line.is_some(), cli.plane.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return bad("give at most one of --box, --line, --plane".into());
        }
        let constraint = match (&cli.box_, &cli.line, &cli.plane) {
            (Some(v), _, _) => ConstraintSpec::Box { c: v[0], d: v[1] },
            (_, Some(v), _) => ConstraintSpec::Line { m: v[0], k: v[1] },
            (_, _, Some(v)) => ConstraintSpec::Plane {
                a: v[0],
                b: v[1],
                c: v[2],
            },
            _ => ConstraintSpec::None,
        };
        if let ConstraintSpec::Box { c, d } = constraint {
            if !(c < d) {
                return bad(format!("--box needs c < d, got {c} {d}"));
            }
        }
        if cli.resolution < 2 {
            return bad(format!(
                "--resolution must be at least 2, got {}",
                cli.resolution
            ));
        }
        if !(cli.tol > 0.0 && cli.tol.is_finite()) {
            return bad(format!("--tol must be positive, got {}", cli.tol));
        }
        if !(cli.margin > 0.0 && cli.margin.is_finite()) {
            return bad(format!("--margin must be positive, got {}", cli.margin));
        }
        let needs_input = cli.mode != Mode::Converge;
        if needs_input && cli.input.is_none() {
            return bad(format!("--mode {:?} needs --input", cli.mode).to_lowercase());
        }
        let alpha = ParamSpec::parse(&cli.alpha);
        let lambda = ParamSpec::parse(&cli.lambda);
        match (cli.mode, constraint) {
            (Mode::Feasible | Mode::Validate, ConstraintSpec::None) => {
                return bad("feasible and validate modes need --box, --line or --plane".into())
            }
            (Mode::Curve | Mode::Validate, ConstraintSpec::Plane { .. }) => {
                return bad("--plane applies to surfaces only".into())
            }
            (Mode::Surface, ConstraintSpec::Line { .. }) => {
                return bad("--line applies to curves only; use --plane for surfaces".into())
            }
            _ => {}
        }
        if cli.mode == Mode::Validate && (alpha == ParamSpec::Auto || lambda == ParamSpec::Auto) {
            return bad("validate mode needs explicit --alpha and --lambda files".into());
        }
        let domain = match cli.domain {
            Some(v) if v[0] < v[1] => (v[0], v[1]),
            Some(v) => return bad(format!("--domain needs lo < hi, got {} {}", v[0], v[1])),
            None => (0.0, std::f64::consts::PI),
        };
        let rho = cli.rho.unwrap_or_else(|| vec![0.0, 0.5]);
        if let Some(r) = rho.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return bad(format!("--rho values must lie in [0, 1), got {r}"));
        }
        Ok(JobConfig {
            mode: cli.mode,
            input: cli.input,
            output: cli.output,
            report: cli.report,
            constraint,
            alpha,
            lambda,
            margin: cli.margin,
            resolution: cli.resolution,
            tol: cli.tol,
            seed: cli.seed,
            draws: cli.draws,
            function: cli.function,
            domain,
            meshes: cli
                .meshes
                .unwrap_or_else(|| rqfractal::convergence::DEFAULT_MESHES.to_vec()),
            rho,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(args: &[&str]) -> Result<JobConfig> {
        JobConfig::try_from(
            Cli::try_parse_from(std::iter::once("rqfractal").chain(args.iter().copied())).unwrap(),
        )
    }

    #[test]
    fn negative_constraint_values_parse() {
        let j = job(&[
            "--mode", "curve", "--input", "c.csv", "--line", "-0.5", "-2",
        ])
        .unwrap();
        assert_eq!(j.constraint, ConstraintSpec::Line { m: -0.5, k: -2.0 });
        assert_eq!(j.alpha, ParamSpec::Auto);
    }

    #[test]
    fn conflicting_flags_are_refused() {
        assert!(
            job(&["--mode", "curve", "--input", "c", "--box", "0", "1", "--line", "0", "0"])
                .is_err()
        );
        assert!(job(&["--mode", "curve", "--input", "c", "--box", "1", "0"]).is_err());
        assert!(job(&["--mode", "surface", "--input", "s", "--line", "0", "0"]).is_err());
        assert!(job(&["--mode", "validate", "--input", "c", "--box", "0", "1"]).is_err());
        assert!(job(&["--mode", "converge", "--rho", "1"]).is_err());
    }

    #[test]
    fn converge_defaults() {
        let j = job(&["--mode", "converge"]).unwrap();
        assert_eq!(j.domain, (0.0, std::f64::consts::PI));
        assert_eq!(j.rho, vec![0.0, 0.5]);
        assert_eq!(j.meshes, rqfractal::convergence::DEFAULT_MESHES.to_vec());
    }
}
