use proptest::prelude::*;
use rqfractal::constraints::{
    auto_parameters, coefficient_sign_validate, rectangle_feasible, Constraint, RectangleConstraint,
};
use rqfractal::ifs::KnotVector;
use rqfractal::spline::{
    classical_coeffs, elevated_denominator_cubic, elevated_denominator_quartic, fractal_coeffs,
    HermiteCurveData, RationalQuarticFif, ShapeParams,
};
use rqfractal::surface::{BlendedSurface, NetworkParams, SurfaceGridData};

fn power_sum(c: &[f64], t: f64) -> f64 {
    let deg = c.len() as i32 - 1;
    c.iter()
        .enumerate()
        .map(|(i, ci)| ci * (1.0 - t).powi(deg - i as i32) * t.powi(i as i32))
        .sum()
}

prop_compose! {
    fn hermite(max: usize)(count in 3..=max)
        (widths in prop::collection::vec(0.2..2.0f64, count - 1),
         y in prop::collection::vec(-3.0..3.0f64, count),
         d in prop::collection::vec(-3.0..3.0f64, count),
         start in -2.0..2.0f64) -> HermiteCurveData {
        let mut x = vec![start];
        for w in widths {
            x.push(x.last().unwrap() + w);
        }
        HermiteCurveData::new(KnotVector::new(x).unwrap(), y, d).unwrap()
    }
}

prop_compose! {
    fn fitted(max: usize)(data in hermite(max))
        (fractions in prop::collection::vec(-0.99..0.99f64, data.subintervals()),
         lambda in prop::collection::vec(0.05..20.0f64, data.subintervals()),
         data in Just(data)) -> RationalQuarticFif {
        let alpha = data.knots().ratios().iter().zip(&fractions).map(|(a, f)| a * f).collect();
        RationalQuarticFif::assemble(data, ShapeParams::Single(lambda), alpha).unwrap()
    }
}

proptest! {
    #[test]
    fn denominators_stay_positive(u in 1e-3..1e3f64, v in 1e-3..1e3f64, sign in prop::bool::ANY, t in 0.0..=1.0f64) {
        let s = if sign { 1.0 } else { -1.0 };
        let (u, v) = (s * u, s * v);
        let q = elevated_denominator_quartic(u, v);
        prop_assert!(q.iter().all(|w| w * s > 0.0));
        prop_assert!(s * power_sum(&q, t) > 0.0);
    }

    #[test]
    fn elevation_matches_linear_form(u in -50.0..50.0f64, v in -50.0..50.0f64, t in 0.0..=1.0f64) {
        let linear = u * (1.0 - t) + v * t;
        let scale = 1.0 + u.abs() + v.abs();
        prop_assert!((power_sum(&elevated_denominator_cubic(u, v), t) - linear).abs() <= 1e-14 * scale);
        prop_assert!((power_sum(&elevated_denominator_quartic(u, v), t) - linear).abs() <= 1e-14 * scale);
    }

    #[test]
    fn pair_weights_match_their_ratio(data in hermite(6), v in 0.1..5.0f64, lambda in 0.05..20.0f64, t in 0.0..=1.0f64) {
        let n = data.subintervals();
        let single = ShapeParams::uniform(lambda, n);
        let pair = ShapeParams::Pair(vec![(lambda * v, v); n]);
        let alpha: Vec<f64> = data.knots().ratios().iter().map(|a| 0.5 * a).collect();
        for k in 0..n {
            let a = fractal_coeffs(&data, &single, &alpha, k).unwrap();
            let b = fractal_coeffs(&data, &pair, &alpha, k).unwrap();
            for (ca, cb) in a.coeffs().iter().zip(b.coeffs()) {
                prop_assert!((v * ca - cb).abs() <= 1e-10 * (1.0 + cb.abs()));
            }
            prop_assert!((a.eval(t) - b.eval(t)).abs() <= 1e-10 * (1.0 + a.eval(t).abs()));
        }
    }

    #[test]
    fn classical_curve_sits_between_coefficients(data in hermite(6), lambda in 0.05..20.0f64, t in 0.0..=1.0f64) {
        for k in 0..data.subintervals() {
            let r = classical_coeffs(&data, &ShapeParams::uniform(lambda, data.subintervals()), k).unwrap();
            let ratios: Vec<f64> = r.coeffs().iter().zip(elevated_denominator_quartic(lambda, 1.0)).map(|(c, w)| c / w).collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let v = r.eval(t);
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            prop_assert!(v.abs() <= r.sup_bound() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interpolates_at_every_knot(fif in fitted(7)) {
        let table = fif.sample(16, 1e-12).unwrap();
        for (&x, &y) in fif.data().knots().knots().iter().zip(fif.data().values()) {
            prop_assert!((table.value_at(x).unwrap() - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn zero_scaling_recovers_classical(data in hermite(6), lambda in prop::collection::vec(0.05..20.0f64, 5)) {
        let n = data.subintervals();
        let fif = RationalQuarticFif::assemble(data, ShapeParams::Single(lambda[..n].to_vec()), vec![0.0; n]).unwrap();
        let table = fif.sample(32, 1e-12).unwrap();
        for (&x, &v) in table.xs().iter().zip(table.values()) {
            prop_assert!((v - fif.classical_value(x).unwrap()).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn constant_data_gives_a_constant(c in -5.0..5.0f64, fif in fitted(6)) {
        let n = fif.data().knots().len();
        let data = HermiteCurveData::new(fif.data().knots().clone(), vec![c; n], vec![0.0; n]).unwrap();
        let flat = RationalQuarticFif::assemble(data, fif.shape().clone(), fif.scaling().to_vec()).unwrap();
        let table = flat.sample(16, 1e-12).unwrap();
        prop_assert!(table.values().iter().all(|v| (v - c).abs() <= 1e-10));
    }

    #[test]
    fn auto_parameters_pass_the_validator(data in hermite(6), lo in 0.05..1.0f64, hi in 0.05..1.0f64) {
        let ymin = data.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let ymax = data.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let b = RectangleConstraint::new(ymin - lo, ymax + hi);
        let range = rectangle_feasible(&data, &b).unwrap();
        if let Ok(auto) = auto_parameters(&range, 0.1) {
            let report = coefficient_sign_validate(&data, &ShapeParams::Single(auto.lambda.clone()), &auto.alpha, &Constraint::Rectangle(b)).unwrap();
            prop_assert!(report.holds(), "{:?}", report.failures());
        } else {
            prop_assert!(range.is_empty());
        }
    }

    #[test]
    fn transposed_grids_blend_to_the_transposed_surface(
        z in prop::collection::vec(-2.0..2.0f64, 12),
        lambda in 0.2..5.0f64,
        rho in 0.0..0.9f64,
    ) {
        let x = KnotVector::new(vec![0.0, 0.5, 1.5, 2.0]).unwrap();
        let y = KnotVector::new(vec![0.0, 1.0, 1.25]).unwrap();
        let data = SurfaceGridData::from_values(x, y, z).unwrap();
        let mut params = NetworkParams::classical(&data, lambda);
        for (k, p) in params.horizontal.iter_mut().chain(params.vertical.iter_mut()).enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let caps = if p.scaling.len() == 3 { data.x().ratios() } else { data.y().ratios() };
            p.scaling = caps.iter().map(|a| sign * rho * a).collect();
        }
        let swapped = NetworkParams { horizontal: params.vertical.clone(), vertical: params.horizontal.clone() };
        let s = BlendedSurface::build(data.clone(), &params, 8, 1e-12).unwrap();
        let t = BlendedSurface::build(data.transpose(), &swapped, 8, 1e-12).unwrap();
        for ix in 0..s.lattice_x().len() {
            for iy in 0..s.lattice_y().len() {
                prop_assert!((s.value_at_index(ix, iy) - t.value_at_index(iy, ix)).abs() <= 1e-12);
            }
        }
    }
}
