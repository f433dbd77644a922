//! Sufficient parameter ranges for constrained fractal splines.
//!
//! Every condition here is a sign requirement on one Bernstein coefficient of
//! `q_n - bound * denominator`. Conditions are affine in the scaling factor
//! for fixed shape and affine in the shape parameter for fixed scaling, so the
//! ranges are intersections of half-lines. When a printed quotient would
//! divide by a nonpositive number the underlying inequality is resolved
//! directly instead.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spline::{elevated_denominator_quartic, local_term, HermiteCurveData, ShapeParams};

/// Ordinate band `[c, d]` around the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectangleConstraint {
    pub c: f64,
    pub d: f64,
}

impl RectangleConstraint {
    pub fn new(c: f64, d: f64) -> Self {
        Self { c, d }
    }

    /// Requires `c < y_i < d` for every value.
    pub fn check(&self, values: &[f64]) -> Result<()> {
        if !(self.c < self.d) {
            return Err(Error::InvalidArgument(format!(
                "box lower bound {} must be below upper bound {}",
                self.c, self.d
            )));
        }
        let indices: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, &y)| !(y > self.c && y < self.d))
            .map(|(i, _)| i)
            .collect();
        if indices.is_empty() {
            Ok(())
        } else {
            Err(Error::Constraint {
                indices,
                reason: format!("values must lie strictly inside ({}, {})", self.c, self.d),
            })
        }
    }
}

/// The line `t = m x + k`, to be kept strictly below the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineConstraint {
    pub m: f64,
    pub k: f64,
}

impl LineConstraint {
    pub fn new(m: f64, k: f64) -> Self {
        Self { m, k }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.m * x + self.k
    }

    pub fn check(&self, knots: &[f64], values: &[f64]) -> Result<()> {
        let indices: Vec<usize> = knots
            .iter()
            .zip(values)
            .enumerate()
            .filter(|(_, (&x, &y))| !(y > self.at(x)))
            .map(|(i, _)| i)
            .collect();
        if indices.is_empty() {
            Ok(())
        } else {
            Err(Error::Constraint {
                indices,
                reason: format!(
                    "values must lie strictly above t = {} x + {}",
                    self.m, self.k
                ),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Constraint {
    Rectangle(RectangleConstraint),
    Line(LineConstraint),
}

/// An interval of scaling factors with per-end closure and the condition that
/// set each end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
    pub lo_binding: &'static str,
    pub hi_binding: &'static str,
}

impl AlphaInterval {
    pub fn new(
        lo: f64,
        lo_open: bool,
        lo_binding: &'static str,
        hi: f64,
        hi_open: bool,
        hi_binding: &'static str,
    ) -> Self {
        Self {
            lo,
            hi,
            lo_open,
            hi_open,
            lo_binding,
            hi_binding,
        }
    }

    /// True when no `f64` lies in the interval; one-ulp open slivers count
    /// as empty.
    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi) || !self.contains(0.5 * (self.lo + self.hi))
    }

    pub fn contains(&self, a: f64) -> bool {
        let above = if self.lo_open {
            a > self.lo
        } else {
            a >= self.lo
        };
        let below = if self.hi_open {
            a < self.hi
        } else {
            a <= self.hi
        };
        above && below
    }

    pub fn width(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn midpoint(&self) -> Option<f64> {
        (!self.is_empty()).then(|| 0.5 * (self.lo + self.hi))
    }

    fn raise(&mut self, lo: f64, open: bool, tag: &'static str) {
        if lo > self.lo || (lo == self.lo && open && !self.lo_open) {
            self.lo = lo;
            self.lo_open = open;
            self.lo_binding = tag;
        }
    }

    fn lower(&mut self, hi: f64, open: bool, tag: &'static str) {
        if hi < self.hi || (hi == self.hi && open && !self.hi_open) {
            self.hi = hi;
            self.hi_open = open;
            self.hi_binding = tag;
        }
    }

    /// Intersects with `{a : p + s a >= 0}` (`> 0` for strict conditions).
    /// `open_end` makes the resulting finite end open regardless.
    fn restrict(&mut self, cond: Affine, open_end: bool) {
        let Affine { p, s, strict, tag } = cond;
        if s > 0.0 {
            self.raise(-p / s, open_end || strict, tag);
        } else if s < 0.0 {
            self.lower(p / -s, open_end || strict, tag);
        } else if p < 0.0 || (strict && p == 0.0) {
            // Fails for every scaling factor.
            self.lo = f64::INFINITY;
            self.hi = f64::NEG_INFINITY;
            self.lo_binding = tag;
            self.hi_binding = tag;
        }
    }
}

/// `p + s * alpha`, labelled by the coefficient condition it encodes.
#[derive(Debug, Clone, Copy)]
struct Affine {
    p: f64,
    s: f64,
    strict: bool,
    tag: &'static str,
}

impl Affine {
    fn weak(p: f64, s: f64, tag: &'static str) -> Self {
        Self {
            p,
            s,
            strict: false,
            tag,
        }
    }

    fn strict(p: f64, s: f64, tag: &'static str) -> Self {
        Self {
            p,
            s,
            strict: true,
            tag,
        }
    }
}

/// One shape threshold `lambda * slope + offset >= 0` at a fixed scaling factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub name: &'static str,
    pub kind: ThresholdKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ThresholdKind {
    /// Holds for `lambda >= value` (or `>` for strict conditions).
    Bound(f64),
    /// Holds for every positive shape parameter.
    Vacuous,
    /// Fails for large shape parameters, so no lower bound guarantees it.
    Infeasible,
}

impl Threshold {
    fn from_linear(name: &'static str, slope: f64, offset: f64, strict: bool) -> Self {
        let kind = if slope > 0.0 {
            ThresholdKind::Bound(-offset / slope)
        } else if slope == 0.0 && (offset > 0.0 || (!strict && offset == 0.0)) {
            ThresholdKind::Vacuous
        } else {
            ThresholdKind::Infeasible
        };
        Self { name, kind }
    }
}

/// Lower bound on the shape parameter at a given scaling factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaBound {
    /// `max{0, thresholds}`; infinite when some threshold is infeasible.
    pub value: f64,
    /// Whether the bound itself is admissible (conditions are `>` rather than `>=`).
    pub strict: bool,
    pub binding: &'static str,
    pub thresholds: Vec<Threshold>,
}

impl LambdaBound {
    fn collect(thresholds: Vec<Threshold>, strict: bool) -> Self {
        let mut value = 0.0;
        let mut binding = "positivity";
        for t in &thresholds {
            match t.kind {
                ThresholdKind::Bound(b) if b > value => {
                    value = b;
                    binding = t.name;
                }
                ThresholdKind::Infeasible => {
                    return Self {
                        value: f64::INFINITY,
                        strict,
                        binding: t.name,
                        thresholds,
                    };
                }
                _ => {}
            }
        }
        Self {
            value,
            strict,
            binding,
            thresholds,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.value.is_finite()
    }

    /// Whether `lambda` meets every threshold. Positivity is always strict.
    pub fn admits(&self, lambda: f64) -> bool {
        if !(lambda > 0.0) || !self.is_feasible() {
            return false;
        }
        if self.strict {
            lambda > self.value
        } else {
            lambda >= self.value
        }
    }
}

/// Quantities one subinterval's rectangle conditions depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectangleTerms {
    pub c: f64,
    pub d: f64,
    pub y_start: f64,
    pub y_end: f64,
    pub y_first: f64,
    pub y_last: f64,
    /// `h_n d_n`, `h_n d_{n+1}`.
    pub slope_start: f64,
    pub slope_end: f64,
    /// `(x_N - x_1) d_1`, `(x_N - x_1) d_N`.
    pub slope_first: f64,
    pub slope_last: f64,
}

impl RectangleTerms {
    /// Scaled slope terms `G = h d_n - a S d_1`, `H = h d_{n+1} - a S d_N`.
    fn slopes(&self, a: f64) -> (f64, f64) {
        (
            self.slope_start - a * self.slope_first,
            self.slope_end - a * self.slope_last,
        )
    }

    /// Left and right end gaps `(U, V)` to the lower and upper walls for the
    /// case of `a`.
    fn gaps(&self, a: f64) -> [(f64, f64); 2] {
        let (c, d) = (self.c, self.d);
        if a >= 0.0 {
            [
                (
                    (self.y_start - c) - a * (self.y_first - c),
                    (self.y_end - c) - a * (self.y_last - c),
                ),
                (
                    (d - self.y_start) - a * (d - self.y_first),
                    (d - self.y_end) - a * (d - self.y_last),
                ),
            ]
        } else {
            [
                (
                    (self.y_start - c) + a * (d - self.y_first),
                    (self.y_end - c) + a * (d - self.y_last),
                ),
                (
                    (d - self.y_start) + a * (self.y_first - c),
                    (d - self.y_end) + a * (self.y_last - c),
                ),
            ]
        }
    }

    fn nonnegative_conditions(&self) -> [Affine; 6] {
        let (c, d) = (self.c, self.d);
        [
            Affine::weak(
                self.y_start - c,
                -(self.y_first - c),
                "lower wall, left end",
            ),
            Affine::weak(self.y_end - c, -(self.y_last - c), "lower wall, right end"),
            Affine::weak(
                self.slope_start,
                -self.slope_first,
                "lower wall, left slope",
            ),
            Affine::weak(
                d - self.y_start,
                -(d - self.y_first),
                "upper wall, left end",
            ),
            Affine::weak(d - self.y_end, -(d - self.y_last), "upper wall, right end"),
            Affine::weak(
                3.0 * (d - self.y_start) - self.slope_start,
                -(3.0 * (d - self.y_first) - self.slope_first),
                "upper wall, left slope",
            ),
        ]
    }

    fn negative_conditions(&self) -> [Affine; 6] {
        let (c, d) = (self.c, self.d);
        [
            Affine::weak(self.y_start - c, d - self.y_first, "lower wall, left end"),
            Affine::weak(self.y_end - c, d - self.y_last, "lower wall, right end"),
            Affine::weak(
                3.0 * (self.y_start - c) + self.slope_start,
                3.0 * (d - self.y_first) - self.slope_first,
                "lower wall, left slope",
            ),
            Affine::weak(d - self.y_start, self.y_first - c, "upper wall, left end"),
            Affine::weak(d - self.y_end, self.y_last - c, "upper wall, right end"),
            Affine::weak(
                3.0 * (d - self.y_start) - self.slope_start,
                3.0 * (self.y_first - c) + self.slope_first,
                "upper wall, left slope",
            ),
        ]
    }

    fn lambda_thresholds(&self, a: f64) -> Vec<Threshold> {
        let (g, h) = self.slopes(a);
        let [(u, v), (u2, v2)] = self.gaps(a);
        let names = if a >= 0.0 {
            ["lambda1", "lambda2", "lambda3", "lambda4"]
        } else {
            ["lambda5", "lambda6", "lambda7", "lambda8"]
        };
        vec![
            Threshold::from_linear(names[0], 3.0 * u + g, u, false),
            Threshold::from_linear(names[1], v, 3.0 * v - h, false),
            Threshold::from_linear(names[2], 3.0 * u2 - g, u2, false),
            Threshold::from_linear(names[3], v2, 3.0 * v2 + h, false),
        ]
    }
}

/// Quantities one subinterval's above-line conditions depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineTerms {
    /// `y_n - t_n`, `y_n - t_{n+1}`, `y_{n+1} - t_n`, `y_{n+1} - t_{n+1}`.
    pub start_start: f64,
    pub start_end: f64,
    pub end_start: f64,
    pub end_end: f64,
    /// The same four gaps for the interval ends `(x_1, x_N)`.
    pub first_first: f64,
    pub first_last: f64,
    pub last_first: f64,
    pub last_last: f64,
    pub slope_start: f64,
    pub slope_end: f64,
    pub slope_first: f64,
    pub slope_last: f64,
}

impl LineTerms {
    fn left_gap(&self, a: f64) -> f64 {
        self.start_start - a * self.first_first
    }

    fn right_gap(&self, a: f64) -> f64 {
        self.end_end - a * self.last_last
    }

    /// `l_n`, the shape-slope of the second coefficient.
    fn l(&self, a: f64) -> f64 {
        2.0 * self.start_start + self.start_end + self.slope_start
            - a * (2.0 * self.first_first + self.first_last + self.slope_first)
    }

    /// `m_n`, the shape-free part of the fourth coefficient.
    fn m(&self, a: f64) -> f64 {
        self.end_start + 2.0 * self.end_end
            - self.slope_end
            - a * (self.last_first + 2.0 * self.last_last - self.slope_last)
    }

    /// Shape-slope and shape-free parts of the middle coefficient.
    fn middle(&self, a: f64) -> (f64, f64) {
        let w = self.end_start + 2.0 * self.end_end - a * (self.last_first + 2.0 * self.last_last);
        let z = 2.0 * self.start_start + self.start_end
            - a * (2.0 * self.first_first + self.first_last);
        (w, z)
    }

    fn conditions(&self) -> [Affine; 4] {
        let l0 = self.l(0.0);
        [
            Affine::strict(self.start_start, -self.first_first, "left end above line"),
            Affine::strict(self.end_end, -self.last_last, "right end above line"),
            Affine::weak(
                self.end_start + 2.0 * self.end_end,
                -(self.last_first + 2.0 * self.last_last),
                "middle coefficient slope",
            ),
            Affine::weak(l0, self.l(1.0) - l0, "second coefficient slope"),
        ]
    }

    fn lambda_thresholds(&self, a: f64) -> Vec<Threshold> {
        let (w, z) = self.middle(a);
        vec![
            Threshold::from_linear("lambda9", w, z, true),
            Threshold::from_linear("lambda10", self.l(a), self.left_gap(a), true),
            Threshold::from_linear("lambda11", self.right_gap(a), self.m(a), true),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SubintervalTerms {
    Rectangle(RectangleTerms),
    Line(LineTerms),
}

/// Feasible parameters on one subinterval.
///
/// Nonnegative and negative scaling factors are handled by separate
/// sufficient conditions, so the two pieces are kept apart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubintervalRange {
    pub index: usize,
    pub cap: f64,
    pub nonnegative: AlphaInterval,
    pub negative: Option<AlphaInterval>,
    pub terms: SubintervalTerms,
}

impl SubintervalRange {
    pub fn is_empty(&self) -> bool {
        self.nonnegative.is_empty() && self.negative.is_none_or(|n| n.is_empty())
    }

    pub fn contains(&self, a: f64) -> bool {
        self.nonnegative.contains(a) || self.negative.is_some_and(|n| n.contains(a))
    }

    /// Smallest and largest admissible scaling factors.
    pub fn alpha_min(&self) -> Option<f64> {
        match self.negative {
            Some(n) if !n.is_empty() => Some(n.lo),
            _ => (!self.nonnegative.is_empty()).then_some(self.nonnegative.lo),
        }
    }

    pub fn alpha_max(&self) -> Option<f64> {
        if !self.nonnegative.is_empty() {
            Some(self.nonnegative.hi)
        } else {
            self.negative.filter(|n| !n.is_empty()).map(|n| n.hi)
        }
    }

    /// The widest nonempty piece.
    pub fn widest(&self) -> Option<AlphaInterval> {
        let pieces = [Some(self.nonnegative), self.negative];
        pieces
            .into_iter()
            .flatten()
            .filter(|p| !p.is_empty())
            .max_by(|a, b| a.width().total_cmp(&b.width()))
    }

    /// Shape-parameter lower bound at scaling factor `a`.
    pub fn lambda_bound(&self, a: f64) -> LambdaBound {
        match &self.terms {
            SubintervalTerms::Rectangle(t) => LambdaBound::collect(t.lambda_thresholds(a), false),
            SubintervalTerms::Line(t) => LambdaBound::collect(t.lambda_thresholds(a), true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibleRange {
    pub constraint: Constraint,
    pub subintervals: Vec<SubintervalRange>,
}

impl FeasibleRange {
    pub fn is_empty(&self) -> bool {
        self.subintervals.iter().any(SubintervalRange::is_empty)
    }

    pub fn empty_subintervals(&self) -> Vec<usize> {
        self.subintervals
            .iter()
            .filter(|s| s.is_empty())
            .map(|s| s.index)
            .collect()
    }
}

fn rectangle_terms(data: &HermiteCurveData, b: &RectangleConstraint, n: usize) -> RectangleTerms {
    let y = data.values();
    let dv = data.derivatives();
    let kv = data.knots();
    let (h, span) = (kv.width(n), kv.span());
    let last = y.len() - 1;
    RectangleTerms {
        c: b.c,
        d: b.d,
        y_start: y[n],
        y_end: y[n + 1],
        y_first: y[0],
        y_last: y[last],
        slope_start: h * dv[n],
        slope_end: h * dv[n + 1],
        slope_first: span * dv[0],
        slope_last: span * dv[last],
    }
}

fn line_terms(data: &HermiteCurveData, line: &LineConstraint, n: usize) -> LineTerms {
    let y = data.values();
    let dv = data.derivatives();
    let kv = data.knots();
    let x = kv.knots();
    let (h, span) = (kv.width(n), kv.span());
    let last = y.len() - 1;
    let t = |i: usize| line.at(x[i]);
    LineTerms {
        start_start: y[n] - t(n),
        start_end: y[n] - t(n + 1),
        end_start: y[n + 1] - t(n),
        end_end: y[n + 1] - t(n + 1),
        first_first: y[0] - t(0),
        first_last: y[0] - t(last),
        last_first: y[last] - t(0),
        last_last: y[last] - t(last),
        slope_start: h * dv[n],
        slope_end: h * dv[n + 1],
        slope_first: span * dv[0],
        slope_last: span * dv[last],
    }
}

/// Scaling and shape ranges keeping the fractal spline inside `[c, d]`.
pub fn rectangle_feasible(
    data: &HermiteCurveData,
    b: &RectangleConstraint,
) -> Result<FeasibleRange> {
    b.check(data.values())?;
    let kv = data.knots();
    let subintervals = (0..data.subintervals())
        .map(|n| {
            let cap = kv.ratio(n);
            let terms = rectangle_terms(data, b, n);
            let mut nonnegative =
                AlphaInterval::new(0.0, false, "case split", cap, true, "scaling cap");
            for cond in terms.nonnegative_conditions() {
                nonnegative.restrict(cond, true);
            }
            let mut negative =
                AlphaInterval::new(-cap, true, "scaling cap", 0.0, true, "case split");
            for cond in terms.negative_conditions() {
                negative.restrict(cond, true);
            }
            SubintervalRange {
                index: n,
                cap,
                nonnegative,
                negative: Some(negative),
                terms: SubintervalTerms::Rectangle(terms),
            }
        })
        .collect();
    Ok(FeasibleRange {
        constraint: Constraint::Rectangle(*b),
        subintervals,
    })
}

/// Scaling and shape ranges keeping the fractal spline strictly above a line.
/// Only nonnegative scaling factors are covered.
pub fn above_line_feasible(
    data: &HermiteCurveData,
    line: &LineConstraint,
) -> Result<FeasibleRange> {
    line.check(data.knots().knots(), data.values())?;
    let kv = data.knots();
    let subintervals = (0..data.subintervals())
        .map(|n| {
            let cap = kv.ratio(n);
            let terms = line_terms(data, line, n);
            let mut nonnegative =
                AlphaInterval::new(0.0, false, "case split", cap, true, "scaling cap");
            for cond in terms.conditions() {
                nonnegative.restrict(cond, true);
            }
            SubintervalRange {
                index: n,
                cap,
                nonnegative,
                negative: None,
                terms: SubintervalTerms::Line(terms),
            }
        })
        .collect();
    Ok(FeasibleRange {
        constraint: Constraint::Line(*line),
        subintervals,
    })
}

/// Parameters picked from a feasible range: each scaling factor is the
/// midpoint of its subinterval's widest piece, each shape parameter is the
/// lower bound there times `1 + margin` (or 1 when the bound is 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutoParams {
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda_bounds: Vec<LambdaBound>,
}

pub fn auto_parameters(range: &FeasibleRange, margin: f64) -> Result<AutoParams> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let empty = range.empty_subintervals();
    if !empty.is_empty() {
        return Err(Error::Constraint {
            indices: empty,
            reason: "no admissible scaling factor".into(),
        });
    }
    let mut out = AutoParams {
        alpha: Vec::new(),
        lambda: Vec::new(),
        lambda_bounds: Vec::new(),
    };
    for s in &range.subintervals {
        let alpha = s
            .widest()
            .and_then(|p| p.midpoint())
            .expect("nonempty range");
        let bound = s.lambda_bound(alpha);
        if !bound.is_feasible() {
            return Err(Error::Constraint {
                indices: vec![s.index],
                reason: format!(
                    "no admissible shape parameter at scaling {alpha} ({})",
                    bound.binding
                ),
            });
        }
        let lambda = if bound.value > 0.0 {
            bound.value * (1.0 + margin)
        } else {
            1.0
        };
        out.alpha.push(alpha);
        out.lambda.push(lambda);
        out.lambda_bounds.push(bound);
    }
    Ok(out)
}

/// One evaluated sign condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignCondition {
    pub name: String,
    pub value: f64,
    pub strict: bool,
    pub holds: bool,
}

impl SignCondition {
    fn new(name: impl Into<String>, value: f64, strict: bool) -> Self {
        let holds = if strict { value > 0.0 } else { value >= 0.0 };
        Self {
            name: name.into(),
            value,
            strict,
            holds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubintervalSigns {
    pub index: usize,
    pub alpha: f64,
    pub conditions: Vec<SignCondition>,
}

impl SubintervalSigns {
    pub fn holds(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> Vec<&SignCondition> {
        self.conditions.iter().filter(|c| !c.holds).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignReport {
    pub subintervals: Vec<SubintervalSigns>,
}

impl SignReport {
    pub fn holds(&self) -> bool {
        self.subintervals.iter().all(SubintervalSigns::holds)
    }

    /// `(subinterval, condition name)` for every failing condition.
    pub fn failures(&self) -> Vec<(usize, String)> {
        self.subintervals
            .iter()
            .flat_map(|s| {
                s.failures()
                    .into_iter()
                    .map(move |c| (s.index, c.name.clone()))
            })
            .collect()
    }
}

const LETTERS: [&str; 5] = ["A", "B", "C", "D", "E"];

/// Evaluates the coefficient sign conditions behind the feasible ranges for
/// concrete parameters.
///
/// Rectangle: ten conditions (five per wall) with the wall offset chosen by
/// the sign of the scaling factor. Line: five strict conditions plus
/// nonnegativity of the scaling factor. Both also report the scaling cap.
pub fn coefficient_sign_validate(
    data: &HermiteCurveData,
    shape: &ShapeParams,
    scaling: &[f64],
    constraint: &Constraint,
) -> Result<SignReport> {
    let segs = data.subintervals();
    shape.validate(segs)?;
    if scaling.len() != segs {
        return Err(Error::LengthMismatch {
            what: "scaling factors",
            expected: segs,
            got: scaling.len(),
        });
    }
    match constraint {
        Constraint::Rectangle(b) => b.check(data.values())?,
        Constraint::Line(l) => l.check(data.knots().knots(), data.values())?,
    }
    let kv = data.knots();
    let x = kv.knots();
    let last = x.len() - 1;
    let subintervals = (0..segs)
        .map(|n| {
            let a = scaling[n];
            let (u, v) = shape.weights(n);
            let p = local_term(data, (u, v), a, n).numerator.0;
            let w = elevated_denominator_quartic(u, v);
            let mut conditions = vec![SignCondition::new(
                "scaling cap",
                kv.ratio(n) - a.abs(),
                true,
            )];
            match constraint {
                Constraint::Rectangle(b) => {
                    let (lo, hi) = if a >= 0.0 {
                        (b.c * (1.0 - a), b.d * (1.0 - a))
                    } else {
                        (b.c - a * b.d, b.d - a * b.c)
                    };
                    for i in 0..5 {
                        conditions.push(SignCondition::new(
                            format!("lower {}", LETTERS[i]),
                            p[i] - lo * w[i],
                            false,
                        ));
                    }
                    for i in 0..5 {
                        conditions.push(SignCondition::new(
                            format!("upper {}", LETTERS[i]),
                            hi * w[i] - p[i],
                            false,
                        ));
                    }
                }
                Constraint::Line(l) => {
                    conditions.push(SignCondition::new("nonnegative scaling", a, false));
                    // a t(x) - t(L_n x) is linear in the global coordinate.
                    let e0 = a * l.at(x[0]) - l.at(x[n]);
                    let e1 = a * l.at(x[last]) - l.at(x[n + 1]);
                    let q = [e0 * u, e0 * v + e1 * u, e1 * v];
                    let lifted = [
                        q[0],
                        2.0 * q[0] + q[1],
                        q[0] + 2.0 * q[1] + q[2],
                        q[1] + 2.0 * q[2],
                        q[2],
                    ];
                    for i in 0..5 {
                        conditions.push(SignCondition::new(
                            format!("line {}*", LETTERS[i]),
                            p[i] + lifted[i],
                            true,
                        ));
                    }
                }
            }
            SubintervalSigns {
                index: n,
                alpha: a,
                conditions,
            }
        })
        .collect();
    Ok(SignReport { subintervals })
}

/// Bounds on the `r`-th derivatives feeding the derivative-range condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeEnvelope {
    /// Minimum and maximum of the original's `r`-th derivative on the subinterval.
    pub f_min: f64,
    pub f_max: f64,
    /// Minimum and maximum of the base function's `r`-th derivative on the whole interval.
    pub b_min: f64,
    pub b_max: f64,
}

/// Scaling factors keeping the `r`-th derivative of the α-fractal function in
/// `[m1, m2]`, intersected with `(-a_n^r, a_n^r)`.
///
/// `ratios` holds `a_n`; one envelope per subinterval.
pub fn derivative_range_scaling(
    envelopes: &[DerivativeEnvelope],
    m1: f64,
    m2: f64,
    ratios: &[f64],
    r: u32,
) -> Result<Vec<AlphaInterval>> {
    if !(m1 < m2) {
        return Err(Error::InvalidArgument(format!(
            "derivative bounds inverted: {m1} >= {m2}"
        )));
    }
    if envelopes.len() != ratios.len() {
        return Err(Error::LengthMismatch {
            what: "derivative envelopes",
            expected: ratios.len(),
            got: envelopes.len(),
        });
    }
    let exponent =
        i32::try_from(r).map_err(|_| Error::InvalidArgument(format!("order {r} too large")))?;
    envelopes
        .iter()
        .zip(ratios)
        .map(|(e, &a)| {
            if !(e.f_min <= e.f_max && e.b_min <= e.b_max) {
                return Err(Error::InvalidArgument(format!("inverted envelope {e:?}")));
            }
            let cap = a.powi(exponent);
            // Conditions in s = alpha / cap, rescaled to alpha.
            let mut upper = AlphaInterval::new(0.0, false, "case split", cap, true, "scaling cap");
            upper.restrict(
                Affine::weak(e.f_min - m1, -(e.b_max - m1) / cap, "lower bound"),
                false,
            );
            upper.restrict(
                Affine::weak(m2 - e.f_max, -(m2 - e.b_min) / cap, "upper bound"),
                false,
            );
            let mut lower = AlphaInterval::new(-cap, true, "scaling cap", 0.0, false, "case split");
            lower.restrict(
                Affine::weak(e.f_min - m1, (m2 - e.b_min) / cap, "lower bound"),
                false,
            );
            lower.restrict(
                Affine::weak(m2 - e.f_max, (e.b_max - m1) / cap, "upper bound"),
                false,
            );
            Ok(match (lower.is_empty(), upper.is_empty()) {
                (false, false) => AlphaInterval::new(
                    lower.lo,
                    lower.lo_open,
                    lower.lo_binding,
                    upper.hi,
                    upper.hi_open,
                    upper.hi_binding,
                ),
                (true, false) => upper,
                (false, true) => lower,
                (true, true) => AlphaInterval::new(
                    f64::INFINITY,
                    true,
                    "empty",
                    f64::NEG_INFINITY,
                    true,
                    "empty",
                ),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::KnotVector;

    fn data(knots: &[f64], y: &[f64], d: &[f64]) -> HermiteCurveData {
        HermiteCurveData::new(
            KnotVector::new(knots.to_vec()).unwrap(),
            y.to_vec(),
            d.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn affine_restriction_guards() {
        let mut i = AlphaInterval::new(0.0, false, "lo", 0.5, true, "hi");
        i.restrict(Affine::weak(1.0, 0.0, "flat"), true);
        assert_eq!((i.lo, i.hi), (0.0, 0.5));
        i.restrict(Affine::weak(-0.1, 1.0, "rise"), false);
        assert_eq!((i.lo, i.lo_binding, i.lo_open), (0.1, "rise", false));
        i.restrict(Affine::weak(0.3, -1.0, "fall"), true);
        assert_eq!((i.hi, i.hi_binding, i.hi_open), (0.3, "fall", true));
        assert!(i.contains(0.2) && !i.contains(0.3) && i.contains(0.1));
        i.restrict(Affine::weak(-1.0, 0.0, "dead"), false);
        assert!(i.is_empty());
    }

    #[test]
    fn threshold_limits() {
        assert_eq!(
            Threshold::from_linear("t", 2.0, -1.0, false).kind,
            ThresholdKind::Bound(0.5)
        );
        assert_eq!(
            Threshold::from_linear("t", 0.0, 0.0, false).kind,
            ThresholdKind::Vacuous
        );
        assert_eq!(
            Threshold::from_linear("t", 0.0, 0.0, true).kind,
            ThresholdKind::Infeasible
        );
        assert_eq!(
            Threshold::from_linear("t", -1.0, 5.0, false).kind,
            ThresholdKind::Infeasible
        );
    }

    /// Symmetric bump in a [0, 3] box, checked against the printed quotients.
    #[test]
    fn rectangle_quotients_by_hand() {
        let dt = data(&[0.0, 1.0, 2.0], &[1.0, 2.0, 1.0], &[2.0, 0.0, -2.0]);
        let fr = rectangle_feasible(&dt, &RectangleConstraint::new(0.0, 3.0)).unwrap();
        let first = &fr.subintervals[0];
        // min{a=0.5, 1/1, 2/1, 2/4, 2/2, 1/2, (3*2 - 2)/(3*2 - 4)}
        assert_eq!(first.nonnegative.lo, 0.0);
        assert_eq!(first.nonnegative.hi, 0.5);
        // Subinterval 2 has h d_2 = 0, so the left-slope quotient is 0 and the
        // nonnegative piece is empty.
        let second = &fr.subintervals[1];
        assert!(second.nonnegative.is_empty());
        assert_eq!(second.nonnegative.hi_binding, "lower wall, left slope");
        // Negative piece lower bound: max{-0.5, (2-0)/(1-3)=-1, (1)/(1-3)=-0.5,
        // (0 - 6)/(6 - 4) = -3, (3-2)/(0-1) = -1, (3-1)/(0-1) = -2, (0 - 3)/(3 + 4) = -3/7}
        let neg = second.negative.unwrap();
        assert!((neg.lo + 3.0 / 7.0).abs() < 1e-15, "{}", neg.lo);
        assert_eq!(neg.lo_binding, "upper wall, left slope");
        assert_eq!(neg.hi, 0.0);

        // lambda thresholds at alpha = 0.25 on the first subinterval:
        // V = 2 - 0.25 = 1.75, H = 0 - 0.25*2*(-2) = 1, lambda2 = -3 + 1/1.75 < 0.
        let lb = first.lambda_bound(0.25);
        assert_eq!(lb.value, 0.0);
        match lb.thresholds[1].kind {
            ThresholdKind::Bound(v) => assert!((v - (-3.0 + 1.0 / 1.75)).abs() < 1e-15),
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn loose_box_limit() {
        // The left-slope quotient h d_n / (S d_1) does not depend on the box;
        // d_1 = 0 with d_n >= 0 keeps it inactive.
        let dt = data(
            &[0.0, 1.0, 2.0, 3.0],
            &[1.0, 2.0, 1.5, 3.0],
            &[0.0, 0.5, 0.2, 1.0],
        );
        let fr = rectangle_feasible(&dt, &RectangleConstraint::new(-1e9, 1e9)).unwrap();
        for s in &fr.subintervals {
            assert_eq!(s.nonnegative.hi, s.cap);
            assert!((s.negative.unwrap().lo + s.cap).abs() < 1e-6);
            assert_eq!(s.lambda_bound(0.5 * s.cap).value, 0.0);
            assert_eq!(s.lambda_bound(-0.5 * s.cap).value, 0.0);
        }
    }

    #[test]
    fn rectangle_precondition() {
        let dt = data(&[0.0, 1.0, 2.0], &[0.0, 2.0, 1.0], &[0.0; 3]);
        match rectangle_feasible(&dt, &RectangleConstraint::new(0.0, 3.0)) {
            Err(Error::Constraint { indices, .. }) => assert_eq!(indices, vec![0]),
            other => panic!("{other:?}"),
        }
        let shape = ShapeParams::uniform(1.0, 2);
        let r = coefficient_sign_validate(
            &dt,
            &shape,
            &[0.0, 0.0],
            &Constraint::Rectangle(RectangleConstraint::new(0.0, 3.0)),
        );
        assert!(matches!(r, Err(Error::Constraint { .. })));
    }

    #[test]
    fn line_quotients_by_hand() {
        let dt = data(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]);
        let fr = above_line_feasible(&dt, &LineConstraint::new(0.0, 0.0)).unwrap();
        let s = &fr.subintervals[0];
        // min{a=0.5, 1/1, 2/3, (2 + 4)/(3 + 6)}
        assert_eq!(s.nonnegative.hi, 0.5);
        assert_eq!(s.nonnegative.hi_binding, "scaling cap");
        assert!(s.negative.is_none());
        // At alpha = 0.25: W = 6 - 0.25*9 = 3.75, Z = 3 - 0.25*3 = 2.25, lambda9 = -0.6.
        let lb = s.lambda_bound(0.25);
        assert_eq!(lb.thresholds[0].kind, ThresholdKind::Bound(-2.25 / 3.75));
        assert!(lb.strict);
        assert_eq!(lb.value, 0.0);
    }

    #[test]
    fn line_shrinks_as_gap_closes() {
        let mut prev = f64::INFINITY;
        for eps in [0.3, 0.1, 0.01, 0.001] {
            let dt = data(&[0.0, 1.0, 2.0, 3.0], &[1.0, eps, 1.0, 1.0], &[0.0; 4]);
            let fr = above_line_feasible(&dt, &LineConstraint::new(0.0, 0.0)).unwrap();
            for s in &fr.subintervals[..2] {
                assert!(s.nonnegative.hi <= eps);
            }
            let hi = fr.subintervals[0].nonnegative.hi;
            assert!(hi < prev);
            prev = hi;
        }
    }

    /// The general validator agrees with the printed line coefficients.
    #[test]
    fn line_coefficients_match_printed_form() {
        let dt = data(
            &[0.0, 0.7, 1.5, 2.0],
            &[3.0, 4.0, 2.5, 3.5],
            &[0.5, -1.0, 2.0, 0.3],
        );
        let line = LineConstraint::new(0.4, 0.2);
        let alpha = [0.1, 0.2, 0.05];
        let lambdas = [0.8, 2.0, 1.3];
        let report = coefficient_sign_validate(
            &dt,
            &ShapeParams::Single(lambdas.to_vec()),
            &alpha,
            &Constraint::Line(line),
        )
        .unwrap();
        let fr = above_line_feasible(&dt, &line).unwrap();
        for n in 0..3 {
            let SubintervalTerms::Line(t) = fr.subintervals[n].terms else {
                unreachable!()
            };
            let (a, l) = (alpha[n], lambdas[n]);
            let (w, z) = t.middle(a);
            let printed = [
                l * t.left_gap(a),
                l * t.l(a) + t.left_gap(a),
                l * w + z,
                l * t.right_gap(a) + t.m(a),
                t.right_gap(a),
            ];
            let got: Vec<f64> = report.subintervals[n].conditions[2..]
                .iter()
                .map(|c| c.value)
                .collect();
            for (p, g) in printed.iter().zip(&got) {
                assert!((p - g).abs() < 1e-12, "{n}: {printed:?} vs {got:?}");
            }
        }
    }

    #[test]
    fn validator_reports_cap_violation() {
        let dt = data(&[0.0, 1.0, 2.0], &[1.0, 2.0, 1.0], &[2.0, 0.0, -2.0]);
        let b = RectangleConstraint::new(0.9, 2.1);
        let report = coefficient_sign_validate(
            &dt,
            &ShapeParams::uniform(1.0, 2),
            &[0.5, 0.0],
            &Constraint::Rectangle(b),
        )
        .unwrap();
        assert!(!report.holds());
        let failures = report.failures();
        assert!(failures.contains(&(0, "scaling cap".to_string())));
        assert!(failures
            .iter()
            .any(|(n, name)| *n == 0 && name != "scaling cap"));
        assert!(report.subintervals[1].holds());
    }

    #[test]
    fn derivative_envelope_by_hand() {
        let e = DerivativeEnvelope {
            f_min: 0.25,
            f_max: 0.75,
            b_min: 0.1,
            b_max: 0.9,
        };
        let r = derivative_range_scaling(&[e], 0.0, 1.0, &[0.5], 1).unwrap();
        // s <= 0.25/0.9 and s >= -0.25/0.9, alpha = 0.5 s.
        let q = 0.5 * 0.25 / 0.9;
        assert!((r[0].hi - q).abs() < 1e-15 && (r[0].lo + q).abs() < 1e-15);
        assert!(!r[0].lo_open && !r[0].hi_open);
    }

    #[test]
    fn derivative_envelope_degenerate() {
        let e = DerivativeEnvelope {
            f_min: 0.5,
            f_max: 0.5,
            b_min: 0.5,
            b_max: 0.5,
        };
        let r = derivative_range_scaling(&[e], 0.0, 1.0, &[0.5], 2).unwrap();
        // Numerators 0.5 > 0 over positive denominators still bound s at 1.
        assert_eq!((r[0].lo, r[0].hi), (-0.25, 0.25));
        assert!(r[0].lo_open && r[0].hi_open);
        assert!(derivative_range_scaling(&[e], 1.0, 0.0, &[0.5], 1).is_err());
        let bad = DerivativeEnvelope {
            f_min: -1.0,
            f_max: 2.0,
            b_min: 0.0,
            b_max: 1.0,
        };
        assert!(derivative_range_scaling(&[bad], 0.0, 1.0, &[0.5], 1).unwrap()[0].is_empty());
    }
}
