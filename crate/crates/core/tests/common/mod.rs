//! Oracles shared by the integration and acceptance tests.

#![allow(clippy::excessive_precision)]

use dissest::FeaturePoint;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Points strictly on one side of a random plane through the origin, so the
/// origin is outside their hull.
pub fn instance(seed: u64) -> Vec<FeaturePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = dot(&w, &w).sqrt();
    w.iter_mut().for_each(|x| *x /= norm);
    let n = rng.random_range(1..=20);
    (0..n)
        .map(|_| {
            let mut p: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            if dot(&p, &w) < 0.0 {
                p.iter_mut().for_each(|x| *x = -*x);
            }
            if dot(&p, &w) < 0.05 {
                p.iter_mut().zip(&w).for_each(|(x, wi)| *x += 0.05 * wi);
            }
            FeaturePoint::from_flat(p)
        })
        .collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum-norm point of the hull by enumerating every support set of at
/// most four points and keeping the best one that satisfies the KKT
/// conditions.
pub fn oracle(points: &[FeaturePoint]) -> (Vec<f64>, f64) {
    let n = points.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for k in 1..=n.min(4) {
        for set in subsets(n, k) {
            let mut m = DMatrix::zeros(k + 1, k + 1);
            for (a, &i) in set.iter().enumerate() {
                for (b, &j) in set.iter().enumerate() {
                    m[(a, b)] = dot(points[i].values(), points[j].values());
                }
                m[(a, k)] = 1.0;
                m[(k, a)] = 1.0;
            }
            let mut rhs = DVector::zeros(k + 1);
            rhs[k] = 1.0;
            let Some(sol) = m.lu().solve(&rhs) else { continue };
            if (0..k).any(|a| sol[a] < -1e-12 || sol[a].is_nan()) {
                continue;
            }
            let mut x = vec![0.0; 3];
            for (a, &i) in set.iter().enumerate() {
                for (xd, pd) in x.iter_mut().zip(points[i].values()) {
                    *xd += sol[a] * pd;
                }
            }
            let xx = dot(&x, &x);
            let rho = points
                .iter()
                .map(|p| dot(p.values(), &x))
                .fold(f64::INFINITY, f64::min);
            if rho < xx - 1e-9 * xx.max(1.0) {
                continue;
            }
            if best.as_ref().is_none_or(|(bx, _)| xx < dot(bx, bx)) {
                best = Some((x, rho));
            }
        }
    }
    best.expect("a support set always exists")
}

/// Reference values computed with 50-digit arithmetic from the same f64
/// inputs.
pub const BOUND_REFERENCE: [(u64, f64, f64, f64, f64); 8] = [
    (1_000_000, 2.06, 0.5, 0.05, 0.007324187779120093199),
    (10_000_000, 2.06, 0.5, 0.05, 0.00091418830516230361318),
    (100_000_000, 2.06, 0.5, 0.05, 0.00010959578324125979065),
    (1000, 103.0, 1.0, 0.05, -2015.1445381383792554),
    (100_000_000, 103.0, 1.0, 0.01, 0.036237001696653126103),
    (5000, 1.0, 0.8, 0.1, 0.10270983930989276672),
    (123_456, 3.5, 0.25, 0.001, 0.34467370750392458832),
    (1_000_000_000, 10.0, 0.9, 1e-6, 0.000080835918146091533302),
];
