//! Growth chains on permutations.
//!
//! `Π^F` inserts the new maximum into a uniform gap; `Π^H` inserts a uniform
//! value at a uniform position. A copula chain takes the relating permutation
//! of growing prefixes of an iid sample, which is again a double insertion
//! (of the new point's x-rank and y-rank).

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde_json::{json, Value};

use crate::copula::{pattern_law_mc, rational_to_f64, Copula};
use crate::error::{Error, Result};
use crate::patterns::pattern_frequency;
use crate::perm::{factorial, Permutation};
use crate::rng;

/// The randomness consumed by one growth step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Draw {
    Start,
    Gap(usize),
    Insert { i: usize, j: usize },
    /// Chinese restaurant choice: right neighbour, or `n + 1` for a new table.
    Seat(usize),
    Point { x: f64, y: f64 },
}

impl Draw {
    fn to_json(self) -> Value {
        match self {
            Draw::Start => Value::Null,
            Draw::Gap(i) => json!({ "i": i }),
            Draw::Insert { i, j } => json!({ "i": i, "j": j }),
            Draw::Seat(c) => json!({ "choice": c }),
            Draw::Point { x, y } => json!({ "x": x, "y": y }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// `steps[m]` has size `m + 1`.
    pub steps: Vec<Permutation>,
    pub draws: Vec<Draw>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// State of size `n`.
    pub fn at(&self, n: usize) -> &Permutation {
        &self.steps[n - 1]
    }

    pub fn last(&self) -> &Permutation {
        self.steps.last().expect("trajectories start at size 1")
    }

    /// One JSON object per step: `{"n", "permutation", "draw"}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (p, d) in self.steps.iter().zip(&self.draws) {
            let rec = json!({ "n": p.len(), "permutation": p.to_string(), "draw": d.to_json() });
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }
}

/// Inserts the value `n + 1` in gap `i` (1-based, `1..=n+1`).
pub fn step_f(p: &Permutation, i: usize) -> Result<Permutation> {
    let n = p.len();
    if i == 0 || i > n + 1 {
        return Err(Error::OutOfRange(format!("gap {i} not in 1..={}", n + 1)));
    }
    let mut v = p.one_line();
    v.insert(i - 1, n + 1);
    Ok(Permutation::from_slice(&v))
}

/// Inserts value `j` at position `i` and shifts the old values `≥ j` up by one.
pub fn step_h(p: &Permutation, i: usize, j: usize) -> Result<Permutation> {
    let n = p.len();
    if i == 0 || i > n + 1 || j == 0 || j > n + 1 {
        return Err(Error::OutOfRange(format!("insertion ({i}, {j}) not in [1, {}]²", n + 1)));
    }
    let mut v: Vec<usize> = p.one_line().into_iter().map(|x| if x >= j { x + 1 } else { x }).collect();
    v.insert(i - 1, j);
    Ok(Permutation::from_slice(&v))
}

pub fn simulate_f(n: usize, seed: u64) -> Result<Trajectory> {
    check_size(n)?;
    let mut r = rng::seeded(seed);
    let mut steps = vec![Permutation::identity(1)];
    let mut draws = vec![Draw::Start];
    for m in 1..n {
        let i = r.random_range(1..=m + 1);
        steps.push(step_f(&steps[m - 1], i)?);
        draws.push(Draw::Gap(i));
    }
    Ok(Trajectory { steps, draws, seed })
}

pub fn simulate_h(n: usize, seed: u64) -> Result<Trajectory> {
    check_size(n)?;
    let mut r = rng::seeded(seed);
    let mut steps = vec![Permutation::identity(1)];
    let mut draws = vec![Draw::Start];
    for m in 1..n {
        let i = r.random_range(1..=m + 1);
        let j = r.random_range(1..=m + 1);
        steps.push(step_h(&steps[m - 1], i, j)?);
        draws.push(Draw::Insert { i, j });
    }
    Ok(Trajectory { steps, draws, seed })
}

/// Final state of `Π^H_n` without keeping the trajectory.
pub fn sample_h<R: Rng + ?Sized>(n: usize, r: &mut R) -> Permutation {
    let mut v: Vec<usize> = Vec::with_capacity(n);
    for m in 0..n {
        let i = r.random_range(0..=m);
        let j = r.random_range(1..=m + 1);
        for x in v.iter_mut() {
            if *x >= j {
                *x += 1;
            }
        }
        v.insert(i, j);
    }
    Permutation::from_slice(&v)
}

pub(crate) fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::OutOfRange("chain length must be at least 1".into()));
    }
    Ok(())
}

/// Relating permutations of the prefixes of an iid sample from `c`.
///
/// Ties are broken by arrival order: a new point that ties an earlier one in
/// a coordinate is ranked above it.
pub fn simulate_copula_chain(c: &dyn Copula, n: usize, seed: u64) -> Result<Trajectory> {
    check_size(n)?;
    let mut r = rng::seeded(seed);
    let (x, y) = c.sample(&mut r)?;
    let mut xs = vec![x];
    let mut ys = vec![y];
    let mut steps = vec![Permutation::identity(1)];
    let mut draws = vec![Draw::Point { x, y }];
    for m in 1..n {
        let (x, y) = c.sample(&mut r)?;
        let i = xs.partition_point(|&v| v <= x);
        let j = ys.partition_point(|&v| v <= y);
        xs.insert(i, x);
        ys.insert(j, y);
        steps.push(step_h(&steps[m - 1], i + 1, j + 1)?);
        draws.push(Draw::Point { x, y });
    }
    Ok(Trajectory { steps, draws, seed })
}

/// Marginal law of `Π^F_n` from all `n!` equally likely gap histories.
pub fn enumerate_f(n: usize) -> Result<BTreeMap<Permutation, BigRational>> {
    enumerate(n, |p| (1..=p.len() + 1).map(|i| step_f(p, i)).collect())
}

/// Marginal law of `Π^H_n` from all `(n!)²` equally likely insertion histories.
pub fn enumerate_h(n: usize) -> Result<BTreeMap<Permutation, BigRational>> {
    enumerate(n, |p| {
        let m = p.len() + 1;
        (1..=m).flat_map(|i| (1..=m).map(move |j| (i, j))).map(|(i, j)| step_h(p, i, j)).collect()
    })
}

pub(crate) fn enumerate<F>(n: usize, successors: F) -> Result<BTreeMap<Permutation, BigRational>>
where
    F: Fn(&Permutation) -> Result<Vec<Permutation>>,
{
    check_size(n)?;
    if n > 7 {
        return Err(Error::Budget { required: factorial(n) as u128, budget: factorial(7) as u128 });
    }
    let mut law = BTreeMap::from([(Permutation::identity(1), BigRational::one())]);
    for _ in 1..n {
        let mut next = BTreeMap::new();
        for (p, w) in &law {
            let succ = successors(p)?;
            let share = w / BigInt::from(succ.len());
            for q in succ {
                *next.entry(q).or_insert_with(BigRational::zero) += &share;
            }
        }
        law = next;
    }
    Ok(law)
}

/// `P(Π^H_n = τ | Π^H_k = σ) = (k!/n!)·t(σ, τ)` for `k ≤ n`.
pub fn transition_h(sigma: &Permutation, tau: &Permutation) -> Result<BigRational> {
    let (k, n) = (sigma.len(), tau.len());
    if k > n {
        return Err(Error::OutOfRange(format!("|σ| = {k} exceeds |τ| = {n}")));
    }
    let ratio = BigRational::new(BigInt::from(1), (k + 1..=n).fold(BigInt::one(), |a, m| a * m));
    Ok(ratio * pattern_frequency(sigma, tau))
}

/// `P(Π_n = σ | Π_{n+1} = τ) = t(σ, τ)`, the same for every copula chain.
pub fn cotransition_h(sigma: &Permutation, tau: &Permutation) -> Result<BigRational> {
    if tau.len() != sigma.len() + 1 {
        return Err(Error::SizeMismatch { left: sigma.len() + 1, right: tau.len() });
    }
    Ok(pattern_frequency(sigma, tau))
}

/// One-step row of `Π^H` from `σ`, by enumerating the `(n+1)²` insertions.
pub fn one_step_row_h(sigma: &Permutation) -> BTreeMap<Permutation, BigRational> {
    let m = sigma.len() + 1;
    let share = BigRational::new(BigInt::one(), BigInt::from(m * m));
    let mut row = BTreeMap::new();
    for i in 1..=m {
        for j in 1..=m {
            let tau = step_h(sigma, i, j).expect("in range");
            *row.entry(tau).or_insert_with(BigRational::zero) += &share;
        }
    }
    row
}

/// Law of `Π^H_{k+steps}` given `Π^H_k = σ`, composing one-step rows.
pub fn multi_step_row_h(sigma: &Permutation, steps: usize) -> BTreeMap<Permutation, BigRational> {
    let mut law = BTreeMap::from([(sigma.clone(), BigRational::one())]);
    for _ in 0..steps {
        let mut next = BTreeMap::new();
        for (p, w) in &law {
            for (q, pq) in one_step_row_h(p) {
                *next.entry(q).or_insert_with(BigRational::zero) += w * pq;
            }
        }
        law = next;
    }
    law
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelValue {
    Exact(BigRational),
    Approx(f64),
}

impl KernelValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            KernelValue::Exact(r) => rational_to_f64(r),
            KernelValue::Approx(x) => *x,
        }
    }
}

/// Second argument of the Martin kernel.
pub enum Boundary<'a> {
    Perm(&'a Permutation),
    /// A copula; `mc = Some((m, seed))` allows a Monte Carlo law when no exact one exists.
    Copula { c: &'a dyn Copula, mc: Option<(u64, u64)> },
}

/// `K(σ, ·) = k!·t(σ, ·)`.
pub fn martin_kernel(sigma: &Permutation, target: Boundary<'_>) -> Result<KernelValue> {
    let kf = BigInt::from(factorial(sigma.len()));
    match target {
        Boundary::Perm(pi) => Ok(KernelValue::Exact(pattern_frequency(sigma, pi) * kf)),
        Boundary::Copula { c, mc } => {
            if let Some(law) = c.exact_pattern_law(sigma.len()) {
                return Ok(KernelValue::Exact(law[sigma.lex_rank()].clone() * kf));
            }
            let (m, seed) = mc.ok_or_else(|| no_exact_law(c))?;
            let law = pattern_law_mc(c, sigma.len(), m, seed)?;
            Ok(KernelValue::Approx(law.prob(sigma) * factorial(sigma.len()) as f64))
        }
    }
}

fn no_exact_law(c: &dyn Copula) -> Error {
    Error::Unsupported(format!("copula {} has no exact pattern law; supply a Monte Carlo budget", c.name()))
}

/// One-step row of the copula chain: `τ ↦ t(τ, C)·t(σ, τ)/t(σ, C)`.
pub fn h_transform_row(sigma: &Permutation, c: &dyn Copula) -> Result<BTreeMap<Permutation, BigRational>> {
    let k = sigma.len();
    let law = c.exact_pattern_law(k + 1).ok_or_else(|| no_exact_law(c))?;
    let t_sigma = c.exact_pattern_law(k).ok_or_else(|| no_exact_law(c))?[sigma.lex_rank()].clone();
    if t_sigma.is_zero() {
        return Err(Error::Unreachable(format!("t({sigma}, {}) = 0", c.name())));
    }
    let mut row = BTreeMap::new();
    for (tau, t_tau) in Permutation::all(k + 1).zip(law) {
        if t_tau.is_zero() {
            continue;
        }
        let p = t_tau * pattern_frequency(sigma, &tau) / &t_sigma;
        if !p.is_zero() {
            row.insert(tau, p);
        }
    }
    Ok(row)
}

/// Monte Carlo version of [`h_transform_row`] from an estimated law on
/// `S_{k+1}`; `t(σ, C)` is taken from the same estimate so the row sums to one.
pub fn h_transform_row_mc(sigma: &Permutation, c: &dyn Copula, m: u64, seed: u64) -> Result<BTreeMap<Permutation, f64>> {
    let k = sigma.len();
    let law = pattern_law_mc(c, k + 1, m, seed)?;
    let weights: Vec<(Permutation, f64)> = Permutation::all(k + 1)
        .zip(&law.probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(tau, &p)| {
            let w = p * rational_to_f64(&pattern_frequency(sigma, &tau));
            (tau, w)
        })
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    if total == 0.0 {
        return Err(Error::Unreachable(format!("{sigma} not observed under {}", c.name())));
    }
    Ok(weights.into_iter().map(|(tau, w)| (tau, w / total)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{Independence, MinCopula};

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn single_steps() {
        assert_eq!(step_f(&p("1"), 1).unwrap(), p("2,1"));
        assert_eq!(step_f(&p("2,1"), 3).unwrap(), p("2,1,3"));
        assert!(step_f(&p("2,1"), 4).is_err());
        assert_eq!(step_h(&p("1,2"), 2, 3).unwrap(), p("1,3,2"));
        assert_eq!(step_h(&p("1"), 1, 2).unwrap(), p("2,1"));
        assert_eq!(step_h(&p("2,1"), 2, 1).unwrap(), p("3,1,2"));
        assert!(step_h(&p("1"), 0, 1).is_err());
    }

    #[test]
    fn exact_marginals_are_uniform() {
        for n in 1..=4 {
            let u = r(1, factorial(n) as i64);
            let f = enumerate_f(n).unwrap();
            let h = enumerate_h(n).unwrap();
            assert_eq!(f.len(), factorial(n));
            assert_eq!(h.len(), factorial(n));
            assert!(f.values().chain(h.values()).all(|w| *w == u));
        }
    }

    #[test]
    fn kernels() {
        assert_eq!(transition_h(&p("1,2"), &p("1,2,3")).unwrap(), r(1, 3));
        assert_eq!(transition_h(&p("2,1"), &p("1,2,3")).unwrap(), r(0, 1));
        assert_eq!(transition_h(&p("1"), &p("2,4,1,3")).unwrap(), r(1, 24));
        assert_eq!(cotransition_h(&p("1,2"), &p("1,3,2")).unwrap(), r(2, 3));
        assert!(cotransition_h(&p("1,2"), &p("1,2")).is_err());
        assert_eq!(one_step_row_h(&p("1,2"))[&p("1,2,3")], r(1, 3));
    }

    #[test]
    fn martin() {
        let k = |s: &str, b| martin_kernel(&p(s), b).unwrap();
        assert_eq!(k("1,2", Boundary::Copula { c: &Independence, mc: None }), KernelValue::Exact(r(1, 1)));
        assert_eq!(k("2,1", Boundary::Copula { c: &MinCopula, mc: None }), KernelValue::Exact(r(0, 1)));
        assert_eq!(k("1,2", Boundary::Perm(&p("1,3,2"))), KernelValue::Exact(r(4, 3)));
        let mix = crate::copula::ComonotoneMixture::new(0.5).unwrap();
        assert!(martin_kernel(&p("1,2"), Boundary::Copula { c: &mix, mc: None }).is_err());
        let v = martin_kernel(&p("1,2"), Boundary::Copula { c: &mix, mc: Some((20_000, 1)) }).unwrap();
        // t(12) = θ² + 4θ(1 - θ)/3 + (1 - θ)²/2 = 17/24 at θ = 1/2
        assert!((v.to_f64() - 17.0 / 12.0).abs() < 0.03, "{v:?}");
    }

    #[test]
    fn h_rows() {
        let row = h_transform_row(&p("1,2"), &MinCopula).unwrap();
        assert_eq!(row.len(), 1);
        assert_eq!(row[&p("1,2,3")], r(1, 1));
        assert!(h_transform_row(&p("2,1"), &MinCopula).is_err());
        for sigma in Permutation::all(3) {
            assert_eq!(h_transform_row(&sigma, &Independence).unwrap(), one_step_row_h(&sigma));
        }
        let mc = h_transform_row_mc(&p("1,2"), &MinCopula, 1000, 3).unwrap();
        assert_eq!(mc[&p("1,2,3")], 1.0);
    }

    #[test]
    fn simulated_chains_are_graded_and_reachable() {
        let f = simulate_f(30, 5).unwrap();
        for n in 1..30 {
            assert_eq!(f.at(n + 1).order_restrict(n).unwrap(), *f.at(n));
        }
        let h = simulate_h(30, 5).unwrap();
        for (m, (s, d)) in h.steps.iter().zip(&h.draws).enumerate().skip(1) {
            let Draw::Insert { i, j } = *d else { panic!("unexpected draw") };
            assert_eq!(step_h(&h.steps[m - 1], i, j).unwrap(), *s);
        }
        let c = simulate_copula_chain(&MinCopula, 25, 1).unwrap();
        assert!(c.steps.iter().enumerate().all(|(m, s)| s.len() == m + 1 && s.is_identity()));
        assert_eq!(simulate_h(10, 2).unwrap(), simulate_h(10, 2).unwrap());
    }

    #[test]
    fn jsonl_layout() {
        let mut out = Vec::new();
        simulate_f(3, 0).unwrap().write_jsonl(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with(r#"{"n":1,"permutation":"1","draw":null}"#));
        assert!(lines[2].contains(r#""draw":{"i":"#));
    }
}
