#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rqfractal::constraints::{AlphaInterval, FeasibleRange};
use rqfractal::ifs::KnotVector;
use rqfractal::spline::{HermiteCurveData, RationalQuarticFif, ShapeParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_knots(rng: &mut ChaCha8Rng, count: usize) -> KnotVector {
    let mut x = vec![rng.gen_range(-1.0..1.0)];
    for _ in 1..count {
        let last = *x.last().unwrap();
        x.push(last + rng.gen_range(0.3..1.5));
    }
    KnotVector::new(x).unwrap()
}

pub fn random_hermite(
    rng: &mut ChaCha8Rng,
    count: usize,
    lo: f64,
    hi: f64,
    slope: f64,
) -> HermiteCurveData {
    let knots = random_knots(rng, count);
    let y = (0..count).map(|_| rng.gen_range(lo..hi)).collect();
    let d = (0..count).map(|_| rng.gen_range(-slope..slope)).collect();
    HermiteCurveData::new(knots, y, d).unwrap()
}

/// A point strictly inside a nonempty interval, away from both ends.
pub fn interior(rng: &mut ChaCha8Rng, i: &AlphaInterval) -> f64 {
    i.lo + (i.hi - i.lo) * rng.gen_range(0.02..0.98)
}

/// Random scaling and shape vectors drawn inside every subinterval's range.
/// `None` when some subinterval is empty.
pub fn draw_params(rng: &mut ChaCha8Rng, range: &FeasibleRange) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut alpha = Vec::new();
    let mut lambda = Vec::new();
    for s in &range.subintervals {
        let pieces: Vec<AlphaInterval> = [Some(s.nonnegative), s.negative]
            .into_iter()
            .flatten()
            .filter(|p| p.width() > 1e-9)
            .collect();
        if pieces.is_empty() {
            return None;
        }
        let piece = pieces[rng.gen_range(0..pieces.len())];
        let a = interior(rng, &piece);
        debug_assert!(piece.contains(a));
        let bound = s.lambda_bound(a);
        if !bound.is_feasible() {
            return None;
        }
        alpha.push(a);
        lambda.push(bound.value + rng.gen_range(1e-3..4.0));
    }
    Some((alpha, lambda))
}

pub fn assemble(data: &HermiteCurveData, alpha: &[f64], lambda: &[f64]) -> RationalQuarticFif {
    RationalQuarticFif::assemble(
        data.clone(),
        ShapeParams::Single(lambda.to_vec()),
        alpha.to_vec(),
    )
    .unwrap()
}
