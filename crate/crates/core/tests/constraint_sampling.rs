mod common;

use std::sync::Arc;

use rand::Rng;
use rqfractal::constraints::{
    above_line_feasible, coefficient_sign_validate, derivative_range_scaling, rectangle_feasible,
    Constraint, DerivativeEnvelope, LineConstraint, RectangleConstraint,
};
use rqfractal::ifs::{rb_fixed_point, KnotVector, LocalTerms, ScalingCap, SelfReferentialCurve};
use rqfractal::spline::{HermiteCurveData, ShapeParams};

use common::*;

#[test]
fn rectangle_draws_stay_in_box() {
    let mut rng = rng(11);
    let mut fixtures = 0;
    while fixtures < 6 {
        let count = rng.gen_range(3..=7);
        let data = random_hermite(&mut rng, count, 0.0, 1.0, 1.0);
        let b = RectangleConstraint::new(-rng.gen_range(0.05..0.5), 1.0 + rng.gen_range(0.05..0.5));
        let range = rectangle_feasible(&data, &b).unwrap();
        if draw_params(&mut rng, &range).is_none() {
            continue;
        }
        fixtures += 1;
        for _ in 0..20 {
            let (alpha, lambda) = draw_params(&mut rng, &range).unwrap();
            let report = coefficient_sign_validate(
                &data,
                &ShapeParams::Single(lambda.clone()),
                &alpha,
                &Constraint::Rectangle(b),
            )
            .unwrap();
            assert!(report.holds(), "{:?}", report.failures());
            let table = assemble(&data, &alpha, &lambda).sample(500, 1e-11).unwrap();
            for &v in table.values() {
                assert!(
                    v >= b.c - 1e-9 && v <= b.d + 1e-9,
                    "{v} outside [{}, {}]",
                    b.c,
                    b.d
                );
            }
        }
    }
}

#[test]
fn line_draws_stay_above() {
    let mut rng = rng(12);
    let mut fixtures = 0;
    while fixtures < 6 {
        let count = rng.gen_range(3..=7);
        let line = LineConstraint::new(rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0));
        let mut data = random_hermite(&mut rng, count, 0.05, 1.0, 1.0);
        let y: Vec<f64> = data
            .knots()
            .knots()
            .iter()
            .zip(data.values())
            .map(|(&x, &y)| line.at(x) + y)
            .collect();
        data = HermiteCurveData::new(data.knots().clone(), y, data.derivatives().to_vec()).unwrap();
        let range = above_line_feasible(&data, &line).unwrap();
        let Some(_) = draw_params(&mut rng, &range) else {
            continue;
        };
        fixtures += 1;
        for _ in 0..20 {
            let (alpha, lambda) = draw_params(&mut rng, &range).unwrap();
            let report = coefficient_sign_validate(
                &data,
                &ShapeParams::Single(lambda.clone()),
                &alpha,
                &Constraint::Line(line),
            )
            .unwrap();
            assert!(report.holds(), "{:?}", report.failures());
            let table = assemble(&data, &alpha, &lambda).sample(500, 1e-11).unwrap();
            for (&x, &v) in table.xs().iter().zip(table.values()) {
                assert!(v > line.at(x) - 1e-9);
            }
        }
    }
}

/// Widening the box never shrinks the nonnegative scaling range or raises
/// the shape bound there.
#[test]
fn nonnegative_case_is_monotone_in_the_box() {
    let mut rng = rng(13);
    for _ in 0..200 {
        let count = rng.gen_range(3..=7);
        let data = random_hermite(&mut rng, count, 0.0, 1.0, 1.0);
        let tight =
            RectangleConstraint::new(-rng.gen_range(0.01..0.3), 1.0 + rng.gen_range(0.01..0.3));
        let loose = RectangleConstraint::new(
            tight.c - rng.gen_range(0.0..1.0),
            tight.d + rng.gen_range(0.0..1.0),
        );
        let a = rectangle_feasible(&data, &tight).unwrap();
        let b = rectangle_feasible(&data, &loose).unwrap();
        for (s, t) in a.subintervals.iter().zip(&b.subintervals) {
            if s.nonnegative.is_empty() {
                continue;
            }
            assert!(t.nonnegative.lo <= s.nonnegative.lo);
            assert!(
                t.nonnegative.hi >= s.nonnegative.hi,
                "{:?} vs {:?}",
                s.nonnegative,
                t.nonnegative
            );
            let alpha = interior(&mut rng, &s.nonnegative);
            assert!(t.lambda_bound(alpha).value <= s.lambda_bound(alpha).value);
        }
    }
}

/// Negative scaling factors are bounded below by quotients such as
/// `-(y_n - c) / (d - y_1)`, which move toward zero as `d` grows.
#[test]
fn negative_case_can_shrink_when_box_grows() {
    let data = HermiteCurveData::new(
        KnotVector::new(vec![0.0, 1.0, 2.0]).unwrap(),
        vec![1.0, 1.5, 1.2],
        vec![0.0; 3],
    )
    .unwrap();
    let narrow = rectangle_feasible(&data, &RectangleConstraint::new(0.9, 2.0)).unwrap();
    let wide = rectangle_feasible(&data, &RectangleConstraint::new(0.9, 4.0)).unwrap();
    let lo_narrow = narrow.subintervals[1].negative.unwrap().lo;
    let lo_wide = wide.subintervals[1].negative.unwrap().lo;
    assert!((lo_narrow + 0.375).abs() < 1e-15);
    assert!(lo_wide > lo_narrow);
}

#[test]
fn cases_agree_at_zero_scaling() {
    let mut rng = rng(14);
    for _ in 0..100 {
        let data = random_hermite(&mut rng, 5, 0.0, 1.0, 2.0);
        let b = RectangleConstraint::new(-0.1, 1.1);
        for s in &rectangle_feasible(&data, &b).unwrap().subintervals {
            let zero = s.lambda_bound(0.0);
            let below = s.lambda_bound(-1e-300);
            assert_eq!(zero.is_feasible(), below.is_feasible());
            if zero.is_feasible() {
                assert!((zero.value - below.value).abs() < 1e-12);
            }
        }
    }
}

/// `q_n = f(L_n x) - alpha_n b_n(x)` for a smooth original and base functions
/// `b_n = f + beta_n (x - x_1)^2 (x - x_N)^2`.
#[derive(Debug)]
struct AlphaFractalTerms {
    knots: KnotVector,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

fn original(x: f64) -> f64 {
    x.sin()
}

fn original_slope(x: f64) -> f64 {
    x.cos()
}

impl AlphaFractalTerms {
    fn base(&self, n: usize, x: f64) -> f64 {
        let (x1, xn) = (self.knots.first(), self.knots.last());
        original(x) + self.beta[n] * (x - x1).powi(2) * (x - xn).powi(2)
    }

    fn base_slope(&self, n: usize, x: f64) -> f64 {
        let (x1, xn) = (self.knots.first(), self.knots.last());
        original_slope(x) + self.beta[n] * 2.0 * (x - x1) * (x - xn) * (2.0 * x - x1 - xn)
    }
}

impl LocalTerms for AlphaFractalTerms {
    fn count(&self) -> usize {
        self.alpha.len()
    }

    fn eval(&self, n: usize, theta: f64) -> f64 {
        let x = self.knots.first() + theta * self.knots.span();
        let image = self.knots.knots()[n] + theta * self.knots.width(n);
        original(image) - self.alpha[n] * self.base(n, x)
    }

    fn sup_bound(&self, n: usize) -> f64 {
        1.0 + self.alpha[n].abs() * (1.0 + self.beta[n].abs() * self.knots.span().powi(4))
    }
}

fn extremes(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    (0..=4000)
        .map(|k| f(lo + (hi - lo) * k as f64 / 4000.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        })
}

#[test]
fn derivative_range_draws_keep_slopes_in_band() {
    let mut rng = rng(15);
    let knots = KnotVector::uniform(0.0, 2.0, 5).unwrap();
    let (fmin, fmax) = extremes(original_slope, 0.0, 2.0);
    let (m1, m2) = (fmin - 0.3, fmax + 0.3);
    for _ in 0..10 {
        let beta: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let probe = AlphaFractalTerms {
            knots: knots.clone(),
            alpha: vec![0.0; 4],
            beta: beta.clone(),
        };
        let envelopes: Vec<DerivativeEnvelope> = (0..4)
            .map(|n| {
                let x = knots.knots();
                let (f_min, f_max) = extremes(original_slope, x[n], x[n + 1]);
                let (b_min, b_max) = extremes(|t| probe.base_slope(n, t), 0.0, 2.0);
                DerivativeEnvelope {
                    f_min,
                    f_max,
                    b_min,
                    b_max,
                }
            })
            .collect();
        let ranges = derivative_range_scaling(&envelopes, m1, m2, &knots.ratios(), 1).unwrap();
        let alpha: Vec<f64> = ranges.iter().map(|r| interior(&mut rng, r)).collect();
        let ordinates = knots.knots().iter().map(|&x| original(x)).collect();
        let curve = SelfReferentialCurve::new(
            knots.clone(),
            ordinates,
            alpha.clone(),
            &ScalingCap::Ratio,
            Arc::new(AlphaFractalTerms {
                knots: knots.clone(),
                alpha,
                beta,
            }),
        )
        .unwrap();
        let table = rb_fixed_point(&curve, 4096, 1e-13).unwrap();
        let (xs, vs) = (table.xs(), table.values());
        for i in 1..xs.len() {
            let slope = (vs[i] - vs[i - 1]) / (xs[i] - xs[i - 1]);
            assert!(
                slope >= m1 - 1e-6 && slope <= m2 + 1e-6,
                "slope {slope} at {}",
                xs[i]
            );
        }
    }
}
