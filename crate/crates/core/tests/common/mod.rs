#![allow(dead_code)]

use permuton::rng;
use permuton::BivariateSample;
use rand::Rng;

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        let tol = (tol / 2.0).max(1e-15);
        step(f, a, m, fa, flm, fm, left, tol, depth - 1) + step(f, m, b, fm, frm, fb, right, tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 18)
}

/// Iterated adaptive Simpson over the unit square.
pub fn simpson2<F: Fn(f64, f64) -> f64>(f: F, tol: f64) -> f64 {
    let inner = |x: f64| simpson(&|y| f(x, y), 0.0, 1.0, tol);
    simpson(&inner, 0.0, 1.0, tol)
}

/// `n` iid uniform pairs.
pub fn uniform_sample(n: usize, seed: u64) -> BivariateSample {
    let mut r = rng::seeded(seed);
    BivariateSample::new((0..n).map(|_| (r.random(), r.random())).collect()).unwrap()
}
