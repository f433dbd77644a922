//! A priori error bounds and empirical refinement studies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::KnotVector;
use crate::spline::{HermiteCurveData, RationalQuarticFif, ShapeParams};
use crate::surface::{BlendedSurface, LineParams, NetworkParams, SurfaceGridData};

/// Inputs to the univariate error bound.
///
/// `xi` and `k0` have no computable definition; [`BoundInputs::from_fit`]
/// defaults them to `gamma` and `y_norm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub h: f64,
    pub alpha_norm: f64,
    /// Largest mismatch between the original's slope and the supplied `d_n`.
    pub k: f64,
    /// `max |d_n| + |d_{n+1}|`.
    pub c: f64,
    /// `min{λ_n, 1}` over subintervals.
    pub mu: f64,
    /// `max{λ_n, 1}` over subintervals.
    pub gamma: f64,
    pub fourth_derivative_norm: f64,
    pub y_norm: f64,
    pub d_norm: f64,
    pub k0: f64,
    pub xi: f64,
}

impl BoundInputs {
    /// Collects everything but the original's fourth-derivative norm from an
    /// assembled spline.
    pub fn from_fit(
        fif: &RationalQuarticFif,
        slope: impl Fn(f64) -> f64,
        fourth_derivative_norm: f64,
        xi: Option<f64>,
        k0: Option<f64>,
    ) -> Self {
        let data = fif.data();
        let x = data.knots().knots();
        let d = data.derivatives();
        let shape = fif.shape();
        let n = data.subintervals();
        let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0_f64, f64::max);
        let lambdas: Vec<f64> = (0..n).map(|i| shape.lambda(i)).collect();
        let gamma = lambdas.iter().fold(1.0_f64, |a, &l| a.max(l));
        let y_norm = max(&mut data.values().iter().map(|v| v.abs()));
        Self {
            h: data.knots().max_width(),
            alpha_norm: max(&mut fif.scaling().iter().map(|a| a.abs())),
            k: max(&mut x.iter().zip(d).map(|(&xi, &di)| (slope(xi) - di).abs())),
            c: max(&mut (0..n).map(|i| d[i].abs() + d[i + 1].abs())),
            mu: lambdas.iter().fold(1.0_f64, |a, &l| a.min(l)),
            gamma,
            fourth_derivative_norm,
            y_norm,
            d_norm: max(&mut d.iter().map(|v| v.abs())),
            k0: k0.unwrap_or(y_norm),
            xi: xi.unwrap_or(gamma),
        }
    }

    fn validate(&self) -> Result<()> {
        let fields = [
            ("h", self.h),
            ("k", self.k),
            ("c", self.c),
            ("fourth derivative norm", self.fourth_derivative_norm),
            ("y norm", self.y_norm),
            ("d norm", self.d_norm),
            ("K0", self.k0),
            ("xi", self.xi),
            ("gamma", self.gamma),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "bound input {name} = {v} must be finite and nonnegative"
                )));
            }
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bound input mu = {} must be positive",
                self.mu
            )));
        }
        if !(self.alpha_norm >= 0.0) || self.alpha_norm >= 1.0 {
            return Err(Error::NotContractive {
                max_abs: self.alpha_norm,
            });
        }
        Ok(())
    }
}

/// `h^4/384 |Φ''''| + k h/4 + h ξ c/(16 μ) + |α|/(1-|α|) (|y| + h|d|/4 + K0)`.
pub fn univariate_error_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let b = inputs;
    let a = b.alpha_norm;
    Ok(b.h.powi(4) / 384.0 * b.fourth_derivative_norm
        + b.k * b.h / 4.0
        + b.h * b.xi * b.c / (16.0 * b.mu)
        + a / (1.0 - a) * (b.y_norm + 0.25 * b.h * b.d_norm + b.k0))
}

/// Grid norms entering the fractal-versus-classical surface bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceNorms {
    pub z: f64,
    pub zx: f64,
    pub zy: f64,
    /// `max |z|` over the columns `x = x_1` and `x = x_m`.
    pub z_edge_x: f64,
    /// `max |z^x|` over the columns `x = x_1` and `x = x_m`.
    pub zx_edge: f64,
    /// `max |z|` over the rows `y = y_1` and `y = y_n`.
    pub z_edge_y: f64,
    /// `max |z^y|` over the rows `y = y_1` and `y = y_n`.
    pub zy_edge: f64,
}

impl SurfaceNorms {
    pub fn from_grid(data: &SurfaceGridData) -> Self {
        let abs_max = |v: &[f64]| v.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let (m, n) = (data.nx(), data.ny());
        let mut z_edge_x = 0.0_f64;
        let mut zx_edge = 0.0_f64;
        for j in 0..n {
            for i in [0, m - 1] {
                z_edge_x = z_edge_x.max(data.z(i, j).abs());
                zx_edge = zx_edge.max(data.zx(i, j).abs());
            }
        }
        let mut z_edge_y = 0.0_f64;
        let mut zy_edge = 0.0_f64;
        for i in 0..m {
            for j in [0, n - 1] {
                z_edge_y = z_edge_y.max(data.z(i, j).abs());
                zy_edge = zy_edge.max(data.zy(i, j).abs());
            }
        }
        Self {
            z: abs_max(data.values()),
            zx: abs_max(data.x_partials()),
            zy: abs_max(data.y_partials()),
            z_edge_x,
            zx_edge,
            z_edge_y,
            zy_edge,
        }
    }
}

/// Bound on `|Φ - C|` between a blended surface and its classical
/// counterpart, for scalings with `|α| <= h/|I|` along rows and
/// `|α*| <= h*/|J|` along columns.
pub fn surface_perturbation_bound(
    norms: &SurfaceNorms,
    h: f64,
    h_star: f64,
    width_x: f64,
    width_y: f64,
) -> Result<f64> {
    if !(h > 0.0 && h < width_x && h_star > 0.0 && h_star < width_y) {
        return Err(Error::InvalidArgument(format!(
            "mesh sizes must be positive and finer than the domain: h = {h} vs {width_x}, h* = {h_star} vs {width_y}"
        )));
    }
    let columns = h_star / (width_y - h_star)
        * (norms.z + 0.25 * h_star * norms.zy + norms.z_edge_y + 0.25 * width_y * norms.zy_edge);
    let rows = h / (width_x - h)
        * (norms.z + 0.25 * h * norms.zx + norms.z_edge_x + 0.25 * width_x * norms.zx_edge);
    Ok(columns + rows)
}

/// Scaling factors `α_n = ρ a_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaPolicy {
    pub rho: f64,
}

impl AlphaPolicy {
    pub fn new(rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidArgument(format!(
                "rho = {rho} must lie in [0, 1)"
            )));
        }
        Ok(Self { rho })
    }

    pub fn scaling(&self, knots: &KnotVector) -> Vec<f64> {
        knots.ratios().into_iter().map(|a| self.rho * a).collect()
    }
}

/// Settings shared by the refinement studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyConfig {
    pub lambda: f64,
    /// Probes per subinterval for curves; rounded up to the nested grid.
    pub resolution: usize,
    pub tol: f64,
    /// Probe points per axis on the surface lattice.
    pub surface_probes: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            resolution: 64,
            tol: 1e-12,
            surface_probes: 201,
        }
    }
}

pub const DEFAULT_MESHES: [usize; 5] = [5, 9, 17, 33, 65];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub knots: usize,
    pub h: f64,
    pub sup_error: f64,
    /// `log(e_prev / e) / log(h_prev / h)`; absent on the first row.
    pub order: Option<f64>,
}

fn check_meshes(meshes: &[usize]) -> Result<()> {
    if meshes.is_empty() || meshes[0] < 2 {
        return Err(Error::InvalidArgument(
            "mesh sequence needs knot counts of at least 2".into(),
        ));
    }
    if meshes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "mesh sequence {meshes:?} is not strictly refining"
        )));
    }
    Ok(())
}

fn fill_orders(rows: &mut [StudyRow]) {
    for i in 1..rows.len() {
        let (prev, cur) = (&rows[i - 1], &rows[i]);
        rows[i].order = Some((prev.sup_error / cur.sup_error).ln() / (prev.h / cur.h).ln());
    }
}

fn parallel_map<T: Send>(
    meshes: &[usize],
    f: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = meshes
            .iter()
            .map(|&m| {
                let f = &f;
                scope.spawn(move || f(m))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("study worker panicked"))
            .collect()
    })
}

/// Fits the original from exact Hermite data on uniform meshes over
/// `[lo, hi]` and measures the sup error on the sample grid.
pub fn empirical_convergence_study<F, D>(
    original: F,
    slope: D,
    lo: f64,
    hi: f64,
    meshes: &[usize],
    policy: AlphaPolicy,
    config: StudyConfig,
) -> Result<Vec<StudyRow>>
where
    F: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64 + Sync,
{
    check_meshes(meshes)?;
    let mut rows = parallel_map(meshes, |count| {
        let knots = KnotVector::uniform(lo, hi, count)?;
        let data = HermiteCurveData::sample(knots.clone(), &original, &slope)?;
        let fif = RationalQuarticFif::assemble(
            data,
            ShapeParams::uniform(config.lambda, count - 1),
            policy.scaling(&knots),
        )?;
        let table = fif.sample(config.resolution, config.tol)?;
        let sup_error = table
            .xs()
            .iter()
            .zip(table.values())
            .map(|(&x, &v)| (v - original(x)).abs())
            .fold(0.0, f64::max);
        Ok(StudyRow {
            knots: count,
            h: knots.max_width(),
            sup_error,
            order: None,
        })
    })?;
    fill_orders(&mut rows);
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceStudyRow {
    pub knots: usize,
    pub h: f64,
    pub h_star: f64,
    /// Measured `|Φ - C|` on the probe lattice.
    pub perturbation: f64,
    pub perturbation_bound: f64,
    /// Measured `|Φ - H|` on the probe lattice.
    pub sup_error: f64,
    pub order: Option<f64>,
}

fn network(data: &SurfaceGridData, policy: AlphaPolicy, lambda: f64) -> NetworkParams {
    let line = |knots: &KnotVector| {
        LineParams::new(policy.scaling(knots), vec![lambda; knots.subintervals()])
    };
    NetworkParams {
        horizontal: (0..data.ny()).map(|_| line(data.x())).collect(),
        vertical: (0..data.nx()).map(|_| line(data.y())).collect(),
    }
}

/// Surface counterpart of [`empirical_convergence_study`] on square
/// `count x count` grids over `[x0, x1] x [y0, y1]`.
#[allow(clippy::too_many_arguments)]
pub fn surface_convergence_study<F, FX, FY>(
    original: F,
    fx: FX,
    fy: FY,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    meshes: &[usize],
    policy: AlphaPolicy,
    config: StudyConfig,
) -> Result<Vec<SurfaceStudyRow>>
where
    F: Fn(f64, f64) -> f64 + Sync,
    FX: Fn(f64, f64) -> f64 + Sync,
    FY: Fn(f64, f64) -> f64 + Sync,
{
    check_meshes(meshes)?;
    if meshes[0] < 3 {
        return Err(Error::InvalidArgument(
            "surface meshes need at least 3 knots per axis".into(),
        ));
    }
    let mut rows = parallel_map(meshes, |count| {
        let x = KnotVector::uniform(x0, x1, count)?;
        let y = KnotVector::uniform(y0, y1, count)?;
        let data = SurfaceGridData::sample(x.clone(), y.clone(), &original, &fx, &fy)?;
        let fractal = BlendedSurface::build(
            data.clone(),
            &network(&data, policy, config.lambda),
            config.resolution,
            config.tol,
        )?;
        let classical = BlendedSurface::build(
            data.clone(),
            &network(&data, AlphaPolicy { rho: 0.0 }, config.lambda),
            config.resolution,
            config.tol,
        )?;
        let (xs, ys, phi) = fractal.probe(config.surface_probes);
        let (_, _, c) = classical.probe(config.surface_probes);
        let perturbation = phi
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let sup_error = xs
            .iter()
            .flat_map(|&px| ys.iter().map(move |&py| (px, py)))
            .zip(&phi)
            .map(|((px, py), v)| (v - original(px, py)).abs())
            .fold(0.0, f64::max);
        let (h, h_star) = (x.max_width(), y.max_width());
        Ok(SurfaceStudyRow {
            knots: count,
            h,
            h_star,
            perturbation,
            perturbation_bound: surface_perturbation_bound(
                &SurfaceNorms::from_grid(&data),
                h,
                h_star,
                x.span(),
                y.span(),
            )?,
            sup_error,
            order: None,
        })
    })?;
    for i in 1..rows.len() {
        let (prev, cur) = (&rows[i - 1], &rows[i]);
        let h = |r: &SurfaceStudyRow| r.h.max(r.h_star);
        rows[i].order = Some((prev.sup_error / cur.sup_error).ln() / (h(prev) / h(cur)).ln());
    }
    Ok(rows)
}
