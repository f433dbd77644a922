//! Interval-partition iterated function systems and their fixed points.
//!
//! An IFS here is the family of maps `w_n(x, y) = (L_n(x), alpha_n * y + q_n(x))`,
//! one per subinterval of a knot vector, where `L_n` is the affine bijection of
//! `[x_1, x_N]` onto `[x_n, x_{n+1}]`. Its attractor is the graph of the unique
//! continuous `g` with `g(L_n(x)) = alpha_n * g(x) + q_n(x)`.
//!
//! Local terms `q_n` are supplied through [`LocalTerms`] in the normalized
//! coordinate `theta = (x - x_1) / (x_N - x_1)`, so every client works on
//! `[0, 1]` regardless of the physical interval.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Strictly increasing abscissae `x_1 < ... < x_N` with `N >= 3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnotVector {
    knots: Vec<f64>,
}

impl KnotVector {
    pub const MIN_KNOTS: usize = 3;

    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < Self::MIN_KNOTS {
            return Err(Error::TooFewKnots {
                required: Self::MIN_KNOTS,
                got: knots.len(),
            });
        }
        for (i, &k) in knots.iter().enumerate() {
            if !k.is_finite() {
                return Err(Error::NonFiniteKnot { index: i });
            }
            if i > 0 && k <= knots[i - 1] {
                return Err(Error::NonMonotoneKnots {
                    index: i,
                    value: k,
                    prev_value: knots[i - 1],
                });
            }
        }
        Ok(Self { knots })
    }

    /// Uniform knots `lo, lo + h, ..., hi` with `count` points.
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::TooFewKnots {
                required: Self::MIN_KNOTS,
                got: count,
            });
        }
        let step = (hi - lo) / (count - 1) as f64;
        let mut knots: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
        knots[count - 1] = hi;
        Self::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Number of subintervals, `N - 1`.
    pub fn subintervals(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.knots[0]
    }

    pub fn last(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Length of the whole interval, `x_N - x_1`.
    pub fn span(&self) -> f64 {
        self.last() - self.first()
    }

    /// `h_n = x_{n+1} - x_n`.
    pub fn width(&self, n: usize) -> f64 {
        self.knots[n + 1] - self.knots[n]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.subintervals())
            .map(|n| self.width(n))
            .fold(0.0, f64::max)
    }

    /// Contraction ratio `a_n = h_n / (x_N - x_1)` of the map onto subinterval `n`.
    pub fn ratio(&self, n: usize) -> f64 {
        self.width(n) / self.span()
    }

    pub fn ratios(&self) -> Vec<f64> {
        (0..self.subintervals()).map(|n| self.ratio(n)).collect()
    }

    /// Subinterval containing `x`. Interior knots belong to the subinterval
    /// they start; `x_N` belongs to the last one.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.first() && x <= self.last()) {
            return None;
        }
        let idx = self.knots.partition_point(|&k| k <= x);
        Some(idx.saturating_sub(1).min(self.subintervals() - 1))
    }

    /// Knot index whose value equals `x` to within a few ulps.
    pub fn snap_to_knot(&self, x: f64) -> Option<usize> {
        let idx = self.knots.partition_point(|&k| k < x);
        [idx.checked_sub(1), Some(idx)]
            .into_iter()
            .flatten()
            .filter(|&i| i < self.knots.len())
            .find(|&i| {
                let k = self.knots[i];
                (k - x).abs() <= 4.0 * f64::EPSILON * k.abs().max(self.span())
            })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.first() && x <= self.last()
    }
}

/// Affine map `x -> scale * x + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineMap {
    pub scale: f64,
    pub shift: f64,
}

impl AffineMap {
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }

    pub fn invert(&self, x: f64) -> f64 {
        (x - self.shift) / self.scale
    }
}

/// The maps `L_n(x) = a_n x + b_n` sending `[x_1, x_N]` onto `[x_n, x_{n+1}]`.
pub fn build_affine_maps(knots: &KnotVector) -> Vec<AffineMap> {
    let x1 = knots.first();
    (0..knots.subintervals())
        .map(|n| {
            let scale = knots.ratio(n);
            // b_n = (x_N x_n - x_1 x_{n+1}) / (x_N - x_1), rearranged to avoid
            // cancellation between the two products.
            AffineMap {
                scale,
                shift: knots.knots()[n] - scale * x1,
            }
        })
        .collect()
}

/// Per-subinterval local terms `q_n`, evaluated in the normalized pre-image
/// coordinate `theta in [0, 1]`.
pub trait LocalTerms: Send + Sync + fmt::Debug {
    fn count(&self) -> usize;

    fn eval(&self, n: usize, theta: f64) -> f64;

    /// An upper bound on `sup |q_n|` over `[0, 1]`.
    fn sup_bound(&self, n: usize) -> f64;
}

/// Upper limit imposed on `|alpha_n|` when a curve is constructed.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ScalingCap {
    /// `|alpha_n| < a_n`.
    #[default]
    Ratio,
    /// `|alpha_n| < a_n^r`, the smoothness requirement for `C^r` fractal functions.
    RatioPower(u32),
    /// Caller-chosen caps; each must not exceed `a_n`.
    Explicit(Vec<f64>),
}

impl ScalingCap {
    pub fn caps(&self, knots: &KnotVector) -> Result<Vec<f64>> {
        let ratios = knots.ratios();
        match self {
            ScalingCap::Ratio => Ok(ratios),
            ScalingCap::RatioPower(r) => Ok(ratios.iter().map(|a| a.powi(*r as i32)).collect()),
            ScalingCap::Explicit(caps) => {
                if caps.len() != ratios.len() {
                    return Err(Error::LengthMismatch {
                        what: "scaling caps",
                        expected: ratios.len(),
                        got: caps.len(),
                    });
                }
                for (n, (&cap, &a)) in caps.iter().zip(&ratios).enumerate() {
                    if !(cap > 0.0 && cap <= a) {
                        return Err(Error::InvalidArgument(format!(
                            "cap {cap} for subinterval {n} must lie in (0, a_n = {a}]"
                        )));
                    }
                }
                Ok(caps.clone())
            }
        }
    }
}

/// A fractal interpolation function defined by knots, ordinates at the knots,
/// a scaling vector and local terms. Immutable once built.
#[derive(Debug, Clone)]
pub struct SelfReferentialCurve {
    knots: KnotVector,
    ordinates: Vec<f64>,
    scaling: Vec<f64>,
    terms: Arc<dyn LocalTerms>,
}

impl SelfReferentialCurve {
    /// Checks lengths, the scaling caps and the matching conditions
    /// `alpha_n y_1 + q_n(x_1) = y_n`, `alpha_n y_N + q_n(x_N) = y_{n+1}`.
    pub fn new(
        knots: KnotVector,
        ordinates: Vec<f64>,
        scaling: Vec<f64>,
        cap: &ScalingCap,
        terms: Arc<dyn LocalTerms>,
    ) -> Result<Self> {
        let segments = knots.subintervals();
        if ordinates.len() != knots.len() {
            return Err(Error::LengthMismatch {
                what: "ordinates",
                expected: knots.len(),
                got: ordinates.len(),
            });
        }
        if scaling.len() != segments {
            return Err(Error::LengthMismatch {
                what: "scaling factors",
                expected: segments,
                got: scaling.len(),
            });
        }
        if terms.count() != segments {
            return Err(Error::LengthMismatch {
                what: "local terms",
                expected: segments,
                got: terms.count(),
            });
        }
        for (i, &y) in ordinates.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::NonFiniteValue {
                    what: "ordinates",
                    index: i,
                    value: y,
                });
            }
        }
        let caps = cap.caps(&knots)?;
        for (n, (&alpha, &cap)) in scaling.iter().zip(&caps).enumerate() {
            if !alpha.is_finite() || alpha.abs() >= cap {
                return Err(Error::ScalingCap {
                    index: n,
                    value: alpha,
                    cap,
                });
            }
        }
        let max_abs = scaling.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if max_abs >= 1.0 {
            return Err(Error::NotContractive { max_abs });
        }

        let y_first = ordinates[0];
        let y_last = ordinates[ordinates.len() - 1];
        let scale = ordinates.iter().fold(1.0f64, |m, y| m.max(y.abs()));
        for n in 0..segments {
            let start = scaling[n] * y_first + terms.eval(n, 0.0);
            let end = scaling[n] * y_last + terms.eval(n, 1.0);
            let tol = 1e-9 * scale.max(terms.sup_bound(n));
            let d0 = (start - ordinates[n]).abs();
            if !(d0 <= tol) {
                return Err(Error::MatchingCondition {
                    index: n,
                    side: "left",
                    mismatch: d0,
                });
            }
            let d1 = (end - ordinates[n + 1]).abs();
            if !(d1 <= tol) {
                return Err(Error::MatchingCondition {
                    index: n,
                    side: "right",
                    mismatch: d1,
                });
            }
        }
        Ok(Self {
            knots,
            ordinates,
            scaling,
            terms,
        })
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn terms(&self) -> &dyn LocalTerms {
        self.terms.as_ref()
    }

    /// `|alpha|_inf`, the contraction factor of the RB operator.
    pub fn contraction_factor(&self) -> f64 {
        self.scaling.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// A bound on `sup |g|` obtained from `|g| <= |alpha| |g| + max sup |q_n|`.
    pub fn ordinate_bound(&self) -> f64 {
        let q = (0..self.scaling.len())
            .map(|n| self.terms.sup_bound(n))
            .fold(0.0f64, f64::max);
        let y = self.ordinates.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (q / (1.0 - self.contraction_factor())).max(y)
    }

    /// Piecewise-linear interpolant of the knot data.
    fn linear_interpolant(&self, n: usize, local: f64) -> f64 {
        self.ordinates[n] * (1.0 - local) + self.ordinates[n + 1] * local
    }
}

/// Nested address grid: level `k` is the image of level `k - 1` under all
/// `L_n`, starting from the two interval endpoints. Level `k - 1` points sit at
/// every `(N - 1)`-th index of level `k`, so each `L_n` maps the coarse grid
/// into the fine one exactly.
#[derive(Debug, Clone)]
struct AddressGrid {
    level: usize,
    per_subinterval: usize,
    /// Normalized abscissae of the previous level (the pre-image points).
    coarse_theta: Vec<f64>,
    theta: Vec<f64>,
    xs: Vec<f64>,
}

impl AddressGrid {
    fn build(knots: &KnotVector, level: usize) -> Self {
        let segments = knots.subintervals();
        let span = knots.span();
        let x1 = knots.first();
        let starts: Vec<f64> = knots.knots().iter().map(|k| (k - x1) / span).collect();
        let ratios = knots.ratios();

        let mut coarse_theta = vec![0.0, 1.0];
        let mut coarse_x = vec![knots.first(), knots.last()];
        let mut theta = coarse_theta.clone();
        let mut xs = coarse_x.clone();
        for _ in 0..level {
            coarse_theta = theta;
            coarse_x = xs;
            let m = coarse_theta.len() - 1;
            let mut next_theta = Vec::with_capacity(segments * m + 1);
            let mut next_x = Vec::with_capacity(segments * m + 1);
            for n in 0..segments {
                let h = knots.width(n);
                let xn = knots.knots()[n];
                for (j, &t) in coarse_theta.iter().enumerate().take(m) {
                    if j == 0 {
                        next_theta.push(starts[n]);
                        next_x.push(xn);
                    } else {
                        next_theta.push(starts[n] + ratios[n] * t);
                        next_x.push(xn + h * t);
                    }
                }
            }
            next_theta.push(1.0);
            next_x.push(knots.last());
            // Keep the coarse level an exact subset of the fine one.
            for (j, (&t, &x)) in coarse_theta.iter().zip(&coarse_x).enumerate() {
                next_theta[j * segments] = t;
                next_x[j * segments] = x;
            }
            theta = next_theta;
            xs = next_x;
        }
        let per_subinterval = (theta.len() - 1) / segments;
        Self {
            level,
            per_subinterval,
            coarse_theta,
            theta,
            xs,
        }
    }
}

/// Fixed point of the RB operator sampled on a nested address grid.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointTable {
    level: usize,
    segments: usize,
    per_subinterval: usize,
    xs: Vec<f64>,
    thetas: Vec<f64>,
    values: Vec<f64>,
    distances: Vec<f64>,
    contraction: f64,
    tolerance: f64,
}

impl FixedPointTable {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Normalized abscissae `(x - x_1) / (x_N - x_1)` of the samples.
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sup-distances between successive iterates, in order.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn iterations(&self) -> usize {
        self.distances.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Number of grid cells inside each subinterval.
    pub fn per_subinterval(&self) -> usize {
        self.per_subinterval
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn contraction(&self) -> f64 {
        self.contraction
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Grid index of the knot `x_i`.
    pub fn knot_index(&self, i: usize) -> usize {
        i * self.per_subinterval
    }

    /// For sample index `i = n * M + j`, the subinterval `n` and the grid
    /// index of the pre-image point `L_n^{-1}(x_i)`.
    pub fn preimage(&self, i: usize) -> (usize, usize) {
        let m = self.per_subinterval;
        let (n, j) = if i == self.xs.len() - 1 {
            (self.segments - 1, m)
        } else {
            (i / m, i % m)
        };
        (n, j * self.segments)
    }

    /// Index of the sample located exactly at `x`.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let idx = self.xs.partition_point(|&v| v < x);
        (idx < self.xs.len() && self.xs[idx] == x).then_some(idx)
    }

    pub fn value_at(&self, x: f64) -> Option<f64> {
        self.index_of(x).map(|i| self.values[i])
    }

    /// Largest `|g(L_n(x)) - alpha_n g(x) - q_n(x)|` over the coarse grid.
    pub fn max_residual(&self, curve: &SelfReferentialCurve) -> f64 {
        let grid_theta = &self.thetas;
        let mut worst = 0.0f64;
        for i in 0..self.xs.len() {
            let (n, pre) = self.preimage(i);
            let q = curve.terms().eval(n, grid_theta[pre]);
            let r = self.values[i] - curve.scaling()[n] * self.values[pre] - q;
            worst = worst.max(r.abs());
        }
        worst
    }
}

/// Default iteration cap for [`rb_fixed_point`].
pub const MAX_ITERATIONS: usize = 10_000;

/// Smallest address level giving at least `resolution` cells per subinterval.
pub fn level_for_resolution(segments: usize, resolution: usize) -> usize {
    let mut level = 1;
    let mut cells = 1usize;
    while cells < resolution {
        cells = cells.saturating_mul(segments);
        level += 1;
    }
    level
}

/// Samples the fixed point of the RB operator.
///
/// Iteration starts from the piecewise-linear interpolant of the knot data and
/// stops once the sup-distance between successive iterates drops to
/// `tol * (1 - |alpha|_inf)`, which bounds the distance to the true fixed point
/// by `tol`. The operator is affine in its argument, so iterates are advanced by
/// propagating the last correction, `delta_{k+1}(L_n x) = alpha_n delta_k(x)`.
pub fn rb_fixed_point(
    curve: &SelfReferentialCurve,
    resolution: usize,
    tol: f64,
) -> Result<FixedPointTable> {
    rb_fixed_point_capped(curve, resolution, tol, MAX_ITERATIONS)
}

pub fn rb_fixed_point_capped(
    curve: &SelfReferentialCurve,
    resolution: usize,
    tol: f64,
    max_iterations: usize,
) -> Result<FixedPointTable> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let contraction = curve.contraction_factor();
    if contraction >= 1.0 {
        return Err(Error::NotContractive {
            max_abs: contraction,
        });
    }
    let knots = curve.knots();
    let segments = knots.subintervals();
    let level = level_for_resolution(segments, resolution);
    let grid = AddressGrid::build(knots, level);
    let m = grid.per_subinterval;
    let len = grid.xs.len();

    // q_n at every pre-image point, row n holds j = 0..=M.
    let local: Vec<f64> = (0..segments)
        .flat_map(|n| grid.coarse_theta.iter().map(move |&t| (n, t)))
        .map(|(n, t)| curve.terms.eval(n, t))
        .collect();

    let initial: Vec<f64> = (0..len)
        .map(|i| {
            if i == len - 1 {
                return curve.ordinates[segments];
            }
            let (n, j) = (i / m, i % m);
            curve.linear_interpolant(n, grid.coarse_theta[j])
        })
        .collect();

    let is_knot = |i: usize| i % m == 0;

    // First application of the operator, computed directly.
    let mut values = initial.clone();
    for i in 0..len {
        let (n, j) = if i == len - 1 {
            (segments - 1, m)
        } else {
            (i / m, i % m)
        };
        values[i] = if is_knot(i) {
            curve.ordinates[i / m]
        } else {
            curve.scaling[n] * initial[j * segments] + local[n * (m + 1) + j]
        };
    }
    let mut delta: Vec<f64> = values.iter().zip(&initial).map(|(v, h)| v - h).collect();
    let mut distances = vec![sup_norm(&delta)];

    let threshold = tol * (1.0 - contraction);
    let mut next = vec![0.0; len];
    loop {
        let last = *distances.last().expect("at least one distance");
        if contraction == 0.0 || last <= threshold {
            break;
        }
        if distances.len() >= max_iterations {
            return Err(Error::NonConvergence {
                iterations: distances.len(),
                last_distance: last,
            });
        }
        for i in 0..len {
            next[i] = if is_knot(i) {
                0.0
            } else {
                let (n, j) = (i / m, i % m);
                curve.scaling[n] * delta[j * segments]
            };
        }
        std::mem::swap(&mut delta, &mut next);
        for (v, d) in values.iter_mut().zip(&delta) {
            *v += d;
        }
        distances.push(sup_norm(&delta));
    }

    Ok(FixedPointTable {
        level: grid.level,
        segments,
        per_subinterval: m,
        xs: grid.xs,
        thetas: grid.theta,
        values,
        distances,
        contraction,
        tolerance: tol,
    })
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Value of the fixed point at a single abscissa, with a bound on the error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointEvaluation {
    pub value: f64,
    /// Rigorous bound on `|g(x) - value|` from truncating the address expansion.
    pub remainder: f64,
    /// Number of inverse maps applied.
    pub levels: usize,
}

/// Evaluates `g(x)` by expanding `x` through up to `depth` inverse maps,
/// accumulating `alpha` products against the local terms.
///
/// Expansion stops early, with zero remainder, when the chain lands on a knot.
/// Otherwise the tail is approximated by the piecewise-linear interpolant and
/// the remainder is the product of `|alpha|` along the chain times the diameter
/// bound `2 sup |g|`.
pub fn evaluate_exact(
    curve: &SelfReferentialCurve,
    x: f64,
    depth: usize,
) -> Result<PointEvaluation> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let knots = curve.knots();
    if !knots.contains(x) {
        return Err(Error::OutOfDomain {
            x,
            lo: knots.first(),
            hi: knots.last(),
        });
    }
    if let Some(i) = knots.snap_to_knot(x) {
        return Ok(PointEvaluation {
            value: curve.ordinates[i],
            remainder: 0.0,
            levels: 0,
        });
    }

    let x1 = knots.first();
    let span = knots.span();
    let mut point = x;
    let mut acc = 0.0;
    let mut weight = 1.0;
    for level in 1..=depth {
        let n = knots
            .locate(point)
            .expect("point stays inside the interval");
        let local = ((point - knots.knots()[n]) / knots.width(n)).clamp(0.0, 1.0);
        acc += weight * curve.terms.eval(n, local);
        weight *= curve.scaling[n];
        if weight == 0.0 {
            return Ok(PointEvaluation {
                value: acc,
                remainder: 0.0,
                levels: level,
            });
        }
        point = x1 + local * span;
        let endpoint = if local == 0.0 {
            Some(0)
        } else if local == 1.0 {
            Some(knots.len() - 1)
        } else {
            knots.snap_to_knot(point)
        };
        if let Some(i) = endpoint {
            return Ok(PointEvaluation {
                value: acc + weight * curve.ordinates[i],
                remainder: 0.0,
                levels: level,
            });
        }
        point = point.clamp(x1, knots.last());
    }
    let n = knots
        .locate(point)
        .expect("point stays inside the interval");
    let local = (point - knots.knots()[n]) / knots.width(n);
    Ok(PointEvaluation {
        value: acc + weight * curve.linear_interpolant(n, local),
        remainder: weight.abs() * 2.0 * curve.ordinate_bound(),
        levels: depth,
    })
}
