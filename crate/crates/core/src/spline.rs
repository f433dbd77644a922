//! Rational quartic splines with a linear denominator and their α-fractal
//! generalizations.
//!
//! On each subinterval the classical interpolant is
//!
//! ```text
//! Q(x) = [A (1-t)^4 + B (1-t)^3 t + C (1-t)^2 t^2 + D (1-t) t^3 + E t^4] / [u (1-t) + v t]
//! ```
//!
//! with `t` the local coordinate. The one-parameter family uses `(u, v) = (λ, 1)`.
//! The fractal curve satisfies `Q^α(L_n(x)) = α_n Q^α(x) + Q(L_n(x)) - α_n b_n(x)`,
//! where the base functions `b_n` share the rational form and match the data
//! values and slopes at the interval endpoints.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{
    evaluate_exact, rb_fixed_point, FixedPointTable, KnotVector, LocalTerms, PointEvaluation,
    ScalingCap, SelfReferentialCurve,
};

/// Hermite data: knots, values and first derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermiteCurveData {
    knots: KnotVector,
    values: Vec<f64>,
    derivatives: Vec<f64>,
}

impl HermiteCurveData {
    pub fn new(knots: KnotVector, values: Vec<f64>, derivatives: Vec<f64>) -> Result<Self> {
        check_finite("values", &values, knots.len())?;
        check_finite("derivatives", &derivatives, knots.len())?;
        Ok(Self {
            knots,
            values,
            derivatives,
        })
    }

    /// Data without derivatives; slopes come from [`estimate_derivatives`].
    pub fn from_values(knots: KnotVector, values: Vec<f64>) -> Result<Self> {
        let derivatives = estimate_derivatives(&knots, &values)?;
        Self::new(knots, values, derivatives)
    }

    /// Samples a function and its derivative at the knots.
    pub fn sample(
        knots: KnotVector,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = knots.knots().iter().map(|&x| f(x)).collect();
        let derivatives = knots.knots().iter().map(|&x| df(x)).collect();
        Self::new(knots, values, derivatives)
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivatives
    }

    pub fn subintervals(&self) -> usize {
        self.knots.subintervals()
    }

    /// Divided difference `Δ_n = (y_{n+1} - y_n) / h_n`.
    pub fn slope(&self, n: usize) -> f64 {
        (self.values[n + 1] - self.values[n]) / self.knots.width(n)
    }

    fn first_value(&self) -> f64 {
        self.values[0]
    }

    fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    fn first_derivative(&self) -> f64 {
        self.derivatives[0]
    }

    fn last_derivative(&self) -> f64 {
        self.derivatives[self.derivatives.len() - 1]
    }
}

fn check_finite(what: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::LengthMismatch {
            what,
            expected,
            got: v.len(),
        });
    }
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFiniteValue {
            what,
            index,
            value: v[index],
        }),
        None => Ok(()),
    }
}

/// Arithmetic-mean derivative estimates.
///
/// Interior slopes are the `h`-weighted mean of the neighbouring divided
/// differences; the end slopes extrapolate the first and last pair.
pub fn estimate_derivatives(knots: &KnotVector, values: &[f64]) -> Result<Vec<f64>> {
    check_finite("values", values, knots.len())?;
    let segs = knots.subintervals();
    let h: Vec<f64> = (0..segs).map(|n| knots.width(n)).collect();
    let delta: Vec<f64> = (0..segs)
        .map(|n| (values[n + 1] - values[n]) / h[n])
        .collect();

    let mut d = vec![0.0; knots.len()];
    for n in 1..segs {
        d[n] = (h[n] * delta[n - 1] + h[n - 1] * delta[n]) / (h[n - 1] + h[n]);
    }
    d[0] = delta[0] + (delta[0] - delta[1]) * h[0] / (h[0] + h[1]);
    let l = segs - 1;
    d[segs] = delta[l] + (delta[l] - delta[l - 1]) * h[l] / (h[l - 1] + h[l]);
    Ok(d)
}

/// Shape (tension) parameters, one family per subinterval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ShapeParams {
    /// `λ_n > 0`; denominator `λ_n (1-t) + t`.
    Single(Vec<f64>),
    /// `(u_n, v_n)` with matching signs; denominator `u_n (1-t) + v_n t`.
    Pair(Vec<(f64, f64)>),
}

impl ShapeParams {
    pub fn uniform(lambda: f64, count: usize) -> Self {
        ShapeParams::Single(vec![lambda; count])
    }

    pub fn len(&self) -> usize {
        match self {
            ShapeParams::Single(v) => v.len(),
            ShapeParams::Pair(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, count: usize) -> Result<()> {
        if self.len() != count {
            return Err(Error::LengthMismatch {
                what: "shape parameters",
                expected: count,
                got: self.len(),
            });
        }
        match self {
            ShapeParams::Single(v) => {
                for (index, &l) in v.iter().enumerate() {
                    if !(l > 0.0 && l.is_finite()) {
                        return Err(Error::InvalidShape {
                            index,
                            reason: format!("lambda = {l} must be positive and finite"),
                        });
                    }
                }
            }
            ShapeParams::Pair(v) => {
                for (index, &(u, w)) in v.iter().enumerate() {
                    if !(u.is_finite() && w.is_finite() && u * w > 0.0) {
                        return Err(Error::InvalidShape {
                            index,
                            reason: format!("(u, v) = ({u}, {w}) must be nonzero with equal signs"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Denominator weights `(u_n, v_n)`.
    pub fn weights(&self, n: usize) -> (f64, f64) {
        match self {
            ShapeParams::Single(v) => (v[n], 1.0),
            ShapeParams::Pair(v) => v[n],
        }
    }

    /// Equivalent one-parameter value `λ_n = u_n / v_n`.
    pub fn lambda(&self, n: usize) -> f64 {
        let (u, v) = self.weights(n);
        u / v
    }
}

/// Quartic in the scaled Bernstein basis `(1-t)^{4-i} t^i` (no binomial factors).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartic(pub [f64; 5]);

impl Quartic {
    /// Horner evaluation in `s = t / (1 - t)` (or its reciprocal past the
    /// midpoint), rescaled by `(1 - t)^4` or `t^4`.
    pub fn eval(&self, t: f64) -> f64 {
        let c = &self.0;
        if t <= 0.5 {
            let s = 1.0 - t;
            let r = t / s;
            let acc = (((c[4] * r + c[3]) * r + c[2]) * r + c[1]) * r + c[0];
            let s2 = s * s;
            acc * (s2 * s2)
        } else {
            let r = (1.0 - t) / t;
            let acc = (((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4];
            let t2 = t * t;
            acc * (t2 * t2)
        }
    }

    pub fn coeffs(&self) -> &[f64; 5] {
        &self.0
    }
}

/// Degree-elevated forms of the linear denominator `u (1-t) + v t`.
pub fn elevated_denominator_cubic(u: f64, v: f64) -> [f64; 4] {
    [u, 2.0 * u + v, u + 2.0 * v, v]
}

pub fn elevated_denominator_quartic(u: f64, v: f64) -> [f64; 5] {
    [u, 3.0 * u + v, 3.0 * u + 3.0 * v, u + 3.0 * v, v]
}

/// `numerator(t) / (u (1-t) + v t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RationalQuartic {
    pub numerator: Quartic,
    pub denominator: (f64, f64),
}

impl RationalQuartic {
    pub fn eval(&self, t: f64) -> f64 {
        let (u, v) = self.denominator;
        self.numerator.eval(t) / (u * (1.0 - t) + v * t)
    }

    pub fn coeffs(&self) -> &[f64; 5] {
        &self.numerator.0
    }

    /// `sup |P/Q|` on `[0, 1]`, bounded by the largest ratio between numerator
    /// and elevated denominator coefficients (both in the same basis, the
    /// denominator ones sharing one sign).
    pub fn sup_bound(&self) -> f64 {
        let (u, v) = self.denominator;
        let w = elevated_denominator_quartic(u, v);
        self.numerator
            .0
            .iter()
            .zip(w)
            .map(|(c, w)| (c / w).abs())
            .fold(0.0, f64::max)
    }
}

/// Which abscissa normalization a coefficient table expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ThetaConvention {
    /// `t = (x - x_n) / h_n` inside subinterval `n`.
    Local,
    /// `t = (x - x_1) / (x_N - x_1)` on the whole interval.
    Global,
}

/// Per-subinterval rational quartics tagged with their abscissa convention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub convention: ThetaConvention,
    pub rows: Vec<RationalQuartic>,
}

fn check_index(data: &HermiteCurveData, n: usize) -> Result<()> {
    if n >= data.subintervals() {
        return Err(Error::IndexOutOfRange {
            index: n,
            count: data.subintervals(),
        });
    }
    Ok(())
}

/// Coefficients of the fractal local term for weights `(u, v)` and scaling `alpha`.
pub(crate) fn local_term(
    data: &HermiteCurveData,
    (u, v): (f64, f64),
    alpha: f64,
    n: usize,
) -> RationalQuartic {
    let y = data.values();
    let d = data.derivatives();
    let h = data.knots.width(n);
    let span = data.knots.span();
    let start = y[n] - alpha * data.first_value();
    let end = y[n + 1] - alpha * data.last_value();
    let slope_start = h * d[n] - alpha * span * data.first_derivative();
    let slope_end = h * d[n + 1] - alpha * span * data.last_derivative();
    RationalQuartic {
        numerator: Quartic([
            u * start,
            u * slope_start + (3.0 * u + v) * start,
            3.0 * v * start + 3.0 * u * end,
            (u + 3.0 * v) * end - v * slope_end,
            v * end,
        ]),
        denominator: (u, v),
    }
}

/// Classical rational quartic on subinterval `n` (local abscissa convention).
pub fn classical_coeffs(
    data: &HermiteCurveData,
    shape: &ShapeParams,
    n: usize,
) -> Result<RationalQuartic> {
    check_index(data, n)?;
    shape.validate(data.subintervals())?;
    Ok(local_term(data, shape.weights(n), 0.0, n))
}

/// Local term `P_n / Q_n` of the fractal curve on subinterval `n`.
/// Requires `|alpha_n| <= a_n`.
pub fn fractal_coeffs(
    data: &HermiteCurveData,
    shape: &ShapeParams,
    scaling: &[f64],
    n: usize,
) -> Result<RationalQuartic> {
    check_index(data, n)?;
    shape.validate(data.subintervals())?;
    check_scaling_len(data, scaling)?;
    let cap = data.knots.ratio(n);
    let alpha = scaling[n];
    if !(alpha.abs() <= cap) {
        return Err(Error::ScalingCap {
            index: n,
            value: alpha,
            cap,
        });
    }
    Ok(local_term(data, shape.weights(n), alpha, n))
}

/// Two-parameter local term; identical to [`fractal_coeffs`] with a
/// [`ShapeParams::Pair`] shape, exposed for explicit `(u, v)` input.
pub fn two_param_coeffs(
    data: &HermiteCurveData,
    weights: &[(f64, f64)],
    scaling: &[f64],
    n: usize,
) -> Result<RationalQuartic> {
    fractal_coeffs(data, &ShapeParams::Pair(weights.to_vec()), scaling, n)
}

/// Base function `b_n` (global abscissa convention): matches `y_1, y_N` and
/// `d_1, d_N` at the interval ends.
pub fn base_function_coeffs(
    data: &HermiteCurveData,
    shape: &ShapeParams,
    n: usize,
) -> Result<RationalQuartic> {
    check_index(data, n)?;
    shape.validate(data.subintervals())?;
    let (u, v) = shape.weights(n);
    let span = data.knots.span();
    let (y1, yn) = (data.first_value(), data.last_value());
    let (d1, dn) = (data.first_derivative(), data.last_derivative());
    Ok(RationalQuartic {
        numerator: Quartic([
            u * y1,
            (3.0 * u + v) * y1 + span * u * d1,
            3.0 * u * yn + 3.0 * v * y1,
            (u + 3.0 * v) * yn - span * v * dn,
            v * yn,
        ]),
        denominator: (u, v),
    })
}

fn check_scaling_len(data: &HermiteCurveData, scaling: &[f64]) -> Result<()> {
    if scaling.len() != data.subintervals() {
        return Err(Error::LengthMismatch {
            what: "scaling factors",
            expected: data.subintervals(),
            got: scaling.len(),
        });
    }
    Ok(())
}

/// Checks the `C^r` smoothness requirement `|alpha_n| < a_n^r`.
pub fn check_smoothness(knots: &KnotVector, scaling: &[f64], r: u32) -> Result<()> {
    let caps = ScalingCap::RatioPower(r).caps(knots)?;
    for (index, (&a, &cap)) in scaling.iter().zip(&caps).enumerate() {
        if !(a.abs() < cap) {
            return Err(Error::ScalingCap {
                index,
                value: a,
                cap,
            });
        }
    }
    Ok(())
}

#[derive(Debug)]
struct FractalTerms {
    rows: Vec<RationalQuartic>,
}

impl LocalTerms for FractalTerms {
    fn count(&self) -> usize {
        self.rows.len()
    }

    fn eval(&self, n: usize, theta: f64) -> f64 {
        self.rows[n].eval(theta)
    }

    fn sup_bound(&self, n: usize) -> f64 {
        self.rows[n].sup_bound()
    }
}

/// An assembled α-fractal rational quartic spline.
#[derive(Debug, Clone)]
pub struct RationalQuarticFif {
    data: HermiteCurveData,
    shape: ShapeParams,
    scaling: Vec<f64>,
    classical: CoefficientTable,
    base: CoefficientTable,
    fractal: CoefficientTable,
    curve: SelfReferentialCurve,
}

impl RationalQuarticFif {
    /// Builds the curve with the C¹ cap `|alpha_n| < a_n`.
    pub fn assemble(data: HermiteCurveData, shape: ShapeParams, scaling: Vec<f64>) -> Result<Self> {
        Self::assemble_with_cap(data, shape, scaling, &ScalingCap::Ratio)
    }

    pub fn assemble_with_cap(
        data: HermiteCurveData,
        shape: ShapeParams,
        scaling: Vec<f64>,
        cap: &ScalingCap,
    ) -> Result<Self> {
        let segs = data.subintervals();
        shape.validate(segs)?;
        check_scaling_len(&data, &scaling)?;
        for (index, &a) in scaling.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFiniteValue {
                    what: "scaling factors",
                    index,
                    value: a,
                });
            }
        }
        let caps = cap.caps(data.knots())?;
        for (index, (&a, &c)) in scaling.iter().zip(&caps).enumerate() {
            if a.abs() >= c {
                return Err(Error::ScalingCap {
                    index,
                    value: a,
                    cap: c,
                });
            }
        }
        let classical = CoefficientTable {
            convention: ThetaConvention::Local,
            rows: (0..segs)
                .map(|n| local_term(&data, shape.weights(n), 0.0, n))
                .collect(),
        };
        let base = CoefficientTable {
            convention: ThetaConvention::Global,
            rows: (0..segs)
                .map(|n| base_function_coeffs(&data, &shape, n))
                .collect::<Result<_>>()?,
        };
        let fractal = CoefficientTable {
            convention: ThetaConvention::Global,
            rows: (0..segs)
                .map(|n| local_term(&data, shape.weights(n), scaling[n], n))
                .collect(),
        };
        let curve = SelfReferentialCurve::new(
            data.knots().clone(),
            data.values().to_vec(),
            scaling.clone(),
            cap,
            Arc::new(FractalTerms {
                rows: fractal.rows.clone(),
            }),
        )?;
        Ok(Self {
            data,
            shape,
            scaling,
            classical,
            base,
            fractal,
            curve,
        })
    }

    pub fn data(&self) -> &HermiteCurveData {
        &self.data
    }

    pub fn shape(&self) -> &ShapeParams {
        &self.shape
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn classical_table(&self) -> &CoefficientTable {
        &self.classical
    }

    pub fn base_table(&self) -> &CoefficientTable {
        &self.base
    }

    pub fn fractal_table(&self) -> &CoefficientTable {
        &self.fractal
    }

    pub fn curve(&self) -> &SelfReferentialCurve {
        &self.curve
    }

    /// Samples the fractal curve on a nested address grid.
    pub fn sample(&self, resolution: usize, tol: f64) -> Result<FixedPointTable> {
        rb_fixed_point(&self.curve, resolution, tol)
    }

    /// Evaluates the fractal curve at an arbitrary abscissa.
    pub fn evaluate(&self, x: f64, depth: usize) -> Result<PointEvaluation> {
        evaluate_exact(&self.curve, x, depth)
    }

    /// The classical (non-fractal) interpolant `Q(x)`.
    pub fn classical_value(&self, x: f64) -> Result<f64> {
        let knots = self.data.knots();
        let n = knots.locate(x).ok_or(Error::OutOfDomain {
            x,
            lo: knots.first(),
            hi: knots.last(),
        })?;
        let t = (x - knots.knots()[n]) / knots.width(n);
        Ok(self.classical.rows[n].eval(t))
    }

    /// Base function `b_n(x)` for `x` in `[x_1, x_N]`.
    pub fn base_value(&self, n: usize, x: f64) -> Result<f64> {
        let knots = self.data.knots();
        if !knots.contains(x) {
            return Err(Error::OutOfDomain {
                x,
                lo: knots.first(),
                hi: knots.last(),
            });
        }
        let row = self.base.rows.get(n).ok_or(Error::IndexOutOfRange {
            index: n,
            count: self.base.rows.len(),
        })?;
        Ok(row.eval((x - knots.first()) / knots.span()))
    }
}
