//! Independence tests built from pattern frequencies.
//!
//! Under independence `√n (f − u)` is asymptotically normal, where `f` is the
//! vector of length-`k` pattern frequencies and `u` the uniform vector. For
//! `k = 3` the covariance is known exactly: `ζ(σ, τ) = 9·cov(φ_σ, φ_τ)`, with
//! `φ_σ(x, y)` the probability of pattern `σ` among three points given that
//! the first sits at `(x, y)`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::copula::rational_to_f64;
use crate::error::{Error, Result};
use crate::patterns::{count_patterns4, count_patterns_fast};
use crate::perm::Permutation;
use crate::rng;
use crate::sample::{BivariateSample, TiePolicy};
use crate::stats;

/// Bivariate polynomial with rational coefficients; key `(a, b)` is `x^a y^b`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), BigRational>,
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

impl Poly2 {
    pub fn constant(c: BigRational) -> Self {
        let mut p = Poly2::default();
        p.push((0, 0), c);
        p
    }

    pub fn x() -> Self {
        let mut p = Poly2::default();
        p.push((1, 0), BigRational::one());
        p
    }

    pub fn y() -> Self {
        Poly2::x().swap()
    }

    fn push(&mut self, key: (u32, u32), c: BigRational) {
        let e = self.terms.entry(key).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, a: u32, b: u32) -> BigRational {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut p = Poly2::default();
        for (k, v) in &self.terms {
            p.push(*k, v * c);
        }
        p
    }

    /// `p(y, x)`.
    pub fn swap(&self) -> Self {
        let mut p = Poly2::default();
        for (&(a, b), v) in &self.terms {
            p.push((b, a), v.clone());
        }
        p
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|(&(a, b), c)| rational_to_f64(c) * x.powi(a as i32) * y.powi(b as i32)).sum()
    }

    /// Exact integral over the unit square.
    pub fn integrate(&self) -> BigRational {
        self.terms
            .iter()
            .map(|(&(a, b), c)| c / BigInt::from((a as u64 + 1) * (b as u64 + 1)))
            .fold(BigRational::zero(), |s, t| s + t)
    }
}

impl Add for &Poly2 {
    type Output = Poly2;
    fn add(self, o: &Poly2) -> Poly2 {
        let mut p = self.clone();
        for (k, v) in &o.terms {
            p.push(*k, v.clone());
        }
        p
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;
    fn mul(self, o: &Poly2) -> Poly2 {
        let mut p = Poly2::default();
        for (&(a, b), u) in &self.terms {
            for (&(c, d), v) in &o.terms {
                p.push((a + c, b + d), u * v);
            }
        }
        p
    }
}

fn product(factors: &[&Poly2]) -> Poly2 {
    factors.iter().fold(Poly2::constant(BigRational::one()), |acc, f| &acc * *f)
}

/// `φ_σ` as an exact polynomial; `σ` must have length 3.
pub fn phi_poly(sigma: &Permutation) -> Result<Poly2> {
    if sigma.len() != 3 {
        return Err(Error::OutOfRange(format!("φ is defined on S_3, got {sigma}")));
    }
    let one = Poly2::constant(BigRational::one());
    let x = Poly2::x();
    let y = Poly2::y();
    let ox = &one + &x.scale(&q(-1, 1));
    let oy = &one + &y.scale(&q(-1, 1));
    let half = q(1, 2);
    let two = q(2, 1);
    // the three summands of each φ_σ as (factors, coefficient)
    let terms: [(&[&Poly2], BigRational); 3] = match sigma.one_line().as_slice() {
        [1, 2, 3] => [(&[&x, &ox, &y, &oy], two), (&[&x, &x, &y, &y], half.clone()), (&[&ox, &ox, &oy, &oy], half)],
        [1, 3, 2] => [(&[&x, &x, &y, &oy], q(1, 1)), (&[&x, &ox, &y, &y], q(1, 1)), (&[&ox, &ox, &oy, &oy], half)],
        [2, 1, 3] => [(&[&x, &ox, &oy, &oy], q(1, 1)), (&[&ox, &ox, &y, &oy], q(1, 1)), (&[&x, &x, &y, &y], half)],
        [2, 3, 1] => [(&[&x, &ox, &y, &y], q(1, 1)), (&[&ox, &ox, &y, &oy], q(1, 1)), (&[&x, &x, &oy, &oy], half)],
        [3, 1, 2] => [(&[&x, &ox, &oy, &oy], q(1, 1)), (&[&x, &x, &y, &oy], q(1, 1)), (&[&ox, &ox, &y, &y], half)],
        _ => [(&[&x, &ox, &y, &oy], two), (&[&x, &x, &oy, &oy], half.clone()), (&[&ox, &ox, &y, &y], half)],
    };
    Ok(terms.iter().fold(Poly2::default(), |acc, (f, c)| &acc + &product(f).scale(c)))
}

/// `φ_σ(x, y)` for `(x, y)` in the unit square.
pub fn phi(sigma: &Permutation, x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::OutOfRange(format!("({x}, {y}) outside the unit square")));
    }
    Ok(phi_poly(sigma)?.eval(x, y))
}

/// `ζ(σ, τ) = 9·(∫∫ φ_σ φ_τ − ∫∫ φ_σ · ∫∫ φ_τ)`.
pub fn zeta(sigma: &Permutation, tau: &Permutation) -> Result<BigRational> {
    let (a, b) = (phi_poly(sigma)?, phi_poly(tau)?);
    let cov = (&a * &b).integrate() - a.integrate() * b.integrate();
    Ok(cov * BigInt::from(9))
}

/// The 6×6 matrix `ζ` in lexicographic order of `S_3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CovMatrix {
    entries: Vec<Vec<BigRational>>,
}

impl CovMatrix {
    pub fn exact() -> Self {
        let perms: Vec<Permutation> = Permutation::all(3).collect();
        let entries = perms.iter().map(|s| perms.iter().map(|t| zeta(s, t).expect("S_3")).collect()).collect();
        CovMatrix { entries }
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.entries
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(6, 6, |i, j| rational_to_f64(&self.entries[i][j]))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.to_f64().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub test: String,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub details: Value,
}

impl TestReport {
    pub fn to_json(&self) -> Value {
        json!({
            "test": self.test,
            "n": self.n,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "details": self.details,
        })
    }
}

fn relating(data: &BivariateSample, min_n: usize) -> Result<Permutation> {
    if data.len() < min_n {
        return Err(Error::InvalidData(format!("need at least {min_n} observations, got {}", data.len())));
    }
    Ok(data.ranks(TiePolicy::Strict)?.relating)
}

/// Kendall's `τ = t(12, Π_n) − t(21, Π_n)` with the normal approximation
/// `Var τ ≈ 2(2n + 5)/(9n(n − 1))`; two-sided.
pub fn kendall_test(data: &BivariateSample) -> Result<TestReport> {
    let pi = relating(data, 2)?;
    let table = count_patterns_fast(&pi, 2)?;
    let n = pi.len();
    let pairs = table.total() as f64;
    let (conc, disc) = (table.counts()[0], table.counts()[1]);
    let tau = (conc as f64 - disc as f64) / pairs;
    let var = 2.0 * (2.0 * n as f64 + 5.0) / (9.0 * n as f64 * (n as f64 - 1.0));
    let z = tau / var.sqrt();
    Ok(TestReport {
        test: "kendall".into(),
        n,
        statistic: tau,
        p_value: (2.0 * stats::normal_sf(z.abs())).min(1.0),
        details: json!({ "concordant": conc, "discordant": disc, "pairs": table.total() as u64, "z": z }),
    })
}

/// One-sided upper z-test of `t(σ, Π_n) = 1/6` from an observed frequency.
pub fn pattern3_test_from_frequency(t_obs: f64, sigma: &Permutation, n: usize) -> Result<TestReport> {
    if n < 3 {
        return Err(Error::InvalidData(format!("need n >= 3, got {n}")));
    }
    let var = rational_to_f64(&zeta(sigma, sigma)?);
    let z = (n as f64).sqrt() * (t_obs - 1.0 / 6.0) / var.sqrt();
    Ok(TestReport {
        test: "pattern3".into(),
        n,
        statistic: z,
        p_value: stats::normal_sf(z),
        details: json!({ "sigma": sigma.to_string(), "t_obs": t_obs, "zeta": zeta(sigma, sigma)?.to_string() }),
    })
}

pub fn pattern3_test(data: &BivariateSample, sigma: &Permutation) -> Result<TestReport> {
    let pi = relating(data, 3)?;
    let t = count_patterns_fast(&pi, 3)?.frequency_f64(sigma);
    pattern3_test_from_frequency(t, sigma, pi.len())
}

const EIGEN_REL_TOL: f64 = 1e-9;

/// `n (f − u)ᵀ ζ⁺ (f − u)` over the six length-3 frequencies, chi-square
/// with `rank ζ` degrees of freedom.
pub fn pattern3_joint_test(data: &BivariateSample) -> Result<TestReport> {
    let pi = relating(data, 3)?;
    pattern3_joint_test_perm(&pi)
}

pub fn pattern3_joint_test_perm(pi: &Permutation) -> Result<TestReport> {
    let n = pi.len();
    let f = count_patterns_fast(pi, 3)?.frequencies();
    let d = DVector::from_iterator(6, f.iter().map(|x| x - 1.0 / 6.0));
    let (form, rank) = stats::pinv_quadratic_form(&CovMatrix::exact().to_f64(), &d, EIGEN_REL_TOL);
    let statistic = n as f64 * form;
    Ok(TestReport {
        test: "pattern3-joint".into(),
        n,
        statistic,
        p_value: stats::chi_square_sf(statistic, rank),
        details: json!({ "df": rank, "frequencies": f }),
    })
}

/// Null distribution for the length-4 test at one sample size, estimated
/// from uniform random permutations.
///
/// The first half of the replicates estimates the covariance of `√n (f − u)`;
/// the second half gives the null distribution of the quadratic form.
#[derive(Clone, Debug)]
pub struct Pattern4Null {
    pub n: usize,
    pub m: usize,
    cov: DMatrix<f64>,
    rank: usize,
    null_stats: Vec<f64>,
}

pub const MIN_PATTERN4_REPLICATES: usize = 50;
/// Eigenvalues below this fraction of the largest are dropped; the finite-`n`
/// corrections they carry are too noisy to invert.
const PATTERN4_REL_TOL: f64 = 1e-2;

fn deviation4(p: &Permutation) -> DVector<f64> {
    let f = count_patterns4(p).frequencies();
    DVector::from_iterator(24, f.into_iter().map(|x| x - 1.0 / 24.0))
}

impl Pattern4Null {
    pub fn estimate(n: usize, m: usize, seed: u64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidData(format!("need n >= 4, got {n}")));
        }
        if m < MIN_PATTERN4_REPLICATES {
            return Err(Error::OutOfRange(format!("need m >= {MIN_PATTERN4_REPLICATES} replicates, got {m}")));
        }
        let devs: Vec<DVector<f64>> = (0..m as u64)
            .into_par_iter()
            .map(|b| deviation4(&Permutation::random(n, &mut rng::stream(seed, b))))
            .collect();
        let half = m / 2;
        let scale = n as f64 / half as f64;
        let mut cov = DMatrix::zeros(24, 24);
        for d in &devs[..half] {
            cov += d * d.transpose() * scale;
        }
        let rank = stats::pinv_quadratic_form(&cov, &DVector::zeros(24), PATTERN4_REL_TOL).1;
        let null_stats =
            devs[half..].iter().map(|d| n as f64 * stats::pinv_quadratic_form(&cov, d, PATTERN4_REL_TOL).0).collect();
        Ok(Pattern4Null { n, m, cov, rank, null_stats })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn test_perm(&self, pi: &Permutation) -> Result<TestReport> {
        if pi.len() != self.n {
            return Err(Error::SizeMismatch { left: self.n, right: pi.len() });
        }
        let d = deviation4(pi);
        let statistic = self.n as f64 * stats::pinv_quadratic_form(&self.cov, &d, PATTERN4_REL_TOL).0;
        let exceed = self.null_stats.iter().filter(|&&s| s >= statistic).count();
        let p_value = (exceed + 1) as f64 / (self.null_stats.len() + 1) as f64;
        Ok(TestReport {
            test: "pattern4-mc".into(),
            n: self.n,
            statistic,
            p_value,
            details: json!({
                "m": self.m,
                "df": self.rank,
                "chi_square_p_value": stats::chi_square_sf(statistic, self.rank),
            }),
        })
    }
}

/// Quadratic-form test over the 24 length-4 frequencies with a Monte Carlo null.
pub fn pattern4_test_mc(data: &BivariateSample, m: usize, seed: u64) -> Result<TestReport> {
    let pi = relating(data, 4)?;
    Pattern4Null::estimate(pi.len(), m, seed)?.test_perm(&pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn phi_identities() {
        let total = Permutation::all(3).fold(Poly2::default(), |acc, s| &acc + &phi_poly(&s).unwrap());
        assert_eq!(total, Poly2::constant(BigRational::one()));
        for s in Permutation::all(3) {
            assert_eq!(phi_poly(&s).unwrap(), phi_poly(&s.inverse()).unwrap().swap());
            assert_eq!(phi_poly(&s).unwrap().integrate(), q(1, 6));
        }
        assert!((phi(&p("1,2,3"), 0.5, 0.5).unwrap() - 3.0 / 16.0).abs() < 1e-15);
        assert!(phi(&p("1,2,3"), 1.5, 0.5).is_err());
        assert!(phi_poly(&p("1,2")).is_err());
    }

    #[test]
    fn zeta_values() {
        assert_eq!(zeta(&p("3,1,2"), &p("3,1,2")).unwrap(), q(7, 200));
        let m = CovMatrix::exact();
        assert_eq!(*m.get(0, 0), q(13, 200));
        assert_eq!(*m.get(0, 5), q(-3, 50));
        for i in 0..6 {
            let s = m.rows()[i].iter().fold(BigRational::zero(), |a, b| a + b);
            assert!(s.is_zero());
            for j in 0..6 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert!(m.eigenvalues()[0] > -1e-12);
    }

    #[test]
    fn z_statistic_for_observed_frequency() {
        let r = pattern3_test_from_frequency(0.228, &p("3,1,2"), 16).unwrap();
        assert!((r.statistic - 1.311).abs() < 0.002);
        assert!((r.p_value - 0.094).abs() < 0.002);
        let r = pattern3_test_from_frequency(1.0 / 6.0, &p("1,2,3"), 50).unwrap();
        assert!(r.statistic.abs() < 1e-12 && (r.p_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kendall_extremes() {
        let up = BivariateSample::new((0..20).map(|i| (i as f64, i as f64)).collect()).unwrap();
        let down = BivariateSample::new((0..20).map(|i| (i as f64, -(i as f64))).collect()).unwrap();
        assert_eq!(kendall_test(&up).unwrap().statistic, 1.0);
        assert_eq!(kendall_test(&down).unwrap().statistic, -1.0);
        let city = kendall_test(&crate::datasets::city_sample()).unwrap();
        assert_eq!(city.details["concordant"], 61);
        assert!(city.p_value > 0.1);
    }

    #[test]
    fn joint_test_df_and_divergence() {
        let r = pattern3_joint_test_perm(&Permutation::identity(10)).unwrap();
        assert_eq!(r.details["df"], 4);
        let s: Vec<f64> =
            [10, 20, 40].iter().map(|&n| pattern3_joint_test_perm(&Permutation::identity(n)).unwrap().statistic).collect();
        assert!(s[0] < s[1] && s[1] < s[2]);
    }

    #[test]
    fn pattern4_null() {
        assert!(Pattern4Null::estimate(20, 10, 0).is_err());
        let null = Pattern4Null::estimate(60, 200, 4).unwrap();
        let r = null.test_perm(&Permutation::identity(60)).unwrap();
        assert!(r.p_value < 0.01);
        assert!(null.test_perm(&Permutation::identity(5)).is_err());
    }
}
