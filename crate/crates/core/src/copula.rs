//! Copulas (permutons) and their pattern laws.
//!
//! Sampling is the one capability every copula has. The distribution
//! function, the conditional quantile function and an exact pattern law are
//! optional and queried at run time.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::perm::{factorial, lex_rank_of, Permutation};
use crate::rng;

pub trait Copula: Send + Sync {
    fn name(&self) -> String;

    /// One draw `(x, y)` from the copula.
    fn sample(&self, rng: &mut dyn RngCore) -> Result<(f64, f64)>;

    fn cdf(&self, _u: f64, _v: f64) -> Option<f64> {
        None
    }

    /// `W(x, y) = inf{z : G(x, z) ≥ y}` with `G(x, ·)` the conditional
    /// distribution function of the second coordinate given the first.
    fn conditional_quantile(&self, _x: f64, _y: f64) -> Option<f64> {
        None
    }

    /// Exact `t(σ, C)` for every `σ ∈ S_k`, lexicographic order.
    fn exact_pattern_law(&self, _k: usize) -> Option<Vec<BigRational>> {
        None
    }
}

/// `C(x, y) = x·y`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Independence;

/// `C(u, v) = min(u, v)`: all mass on the diagonal.
#[derive(Clone, Copy, Debug, Default)]
pub struct MinCopula;

/// `C(u, v) = max(u + v - 1, 0)`: all mass on the anti-diagonal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Countermonotone;

/// Mixture `θ·min(u, v) + (1 - θ)·u·v` of the comonotone and independence copulas.
#[derive(Clone, Copy, Debug)]
pub struct ComonotoneMixture {
    theta: f64,
}

/// Copula defined by a conditional quantile function `W`; draws are
/// `(U, W(U, V))` with `U, V` independent uniforms.
pub struct QuantileCopula {
    name: String,
    w: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

pub fn independence_copula() -> Independence {
    Independence
}

pub fn min_copula() -> MinCopula {
    MinCopula
}

pub fn from_conditional_quantile<F>(name: &str, w: F) -> QuantileCopula
where
    F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
{
    QuantileCopula { name: name.to_string(), w: Box::new(w) }
}

fn uniform(rng: &mut dyn RngCore) -> f64 {
    rng.random::<f64>()
}

fn rational(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Copula for Independence {
    fn name(&self) -> String {
        "independence".into()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
        Ok((uniform(rng), uniform(rng)))
    }

    fn cdf(&self, u: f64, v: f64) -> Option<f64> {
        Some(u.clamp(0.0, 1.0) * v.clamp(0.0, 1.0))
    }

    fn conditional_quantile(&self, _x: f64, y: f64) -> Option<f64> {
        Some(y)
    }

    fn exact_pattern_law(&self, k: usize) -> Option<Vec<BigRational>> {
        let f = factorial(k);
        Some(vec![rational(1, f); f])
    }
}

impl Copula for MinCopula {
    fn name(&self) -> String {
        "min".into()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
        let u = uniform(rng);
        Ok((u, u))
    }

    fn cdf(&self, u: f64, v: f64) -> Option<f64> {
        Some(u.min(v).clamp(0.0, 1.0))
    }

    fn conditional_quantile(&self, x: f64, _y: f64) -> Option<f64> {
        Some(x)
    }

    fn exact_pattern_law(&self, k: usize) -> Option<Vec<BigRational>> {
        let mut law = vec![rational(0, 1); factorial(k)];
        law[0] = rational(1, 1);
        Some(law)
    }
}

impl Copula for Countermonotone {
    fn name(&self) -> String {
        "countermonotone".into()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
        let u = uniform(rng);
        Ok((u, 1.0 - u))
    }

    fn cdf(&self, u: f64, v: f64) -> Option<f64> {
        Some((u + v - 1.0).clamp(0.0, 1.0))
    }

    fn conditional_quantile(&self, x: f64, _y: f64) -> Option<f64> {
        Some(1.0 - x)
    }

    fn exact_pattern_law(&self, k: usize) -> Option<Vec<BigRational>> {
        let f = factorial(k);
        let mut law = vec![rational(0, 1); f];
        law[f - 1] = rational(1, 1);
        Some(law)
    }
}

impl ComonotoneMixture {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::OutOfRange(format!("mixture weight {theta} not in [0, 1]")));
        }
        Ok(ComonotoneMixture { theta })
    }

    fn quantile(&self, x: f64, y: f64) -> f64 {
        let t = self.theta;
        if t >= 1.0 {
            return x;
        }
        let below = (1.0 - t) * x;
        if y <= below {
            y / (1.0 - t)
        } else if y <= below + t {
            x
        } else {
            (y - t) / (1.0 - t)
        }
    }
}

impl Copula for ComonotoneMixture {
    fn name(&self) -> String {
        format!("mixture:{}", self.theta)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
        let (u, v) = (uniform(rng), uniform(rng));
        Ok((u, self.quantile(u, v)))
    }

    fn cdf(&self, u: f64, v: f64) -> Option<f64> {
        let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
        Some(self.theta * u.min(v) + (1.0 - self.theta) * u * v)
    }

    fn conditional_quantile(&self, x: f64, y: f64) -> Option<f64> {
        Some(self.quantile(x, y))
    }
}

impl Copula for QuantileCopula {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
        let (u, v) = (uniform(rng), uniform(rng));
        let y = (self.w)(u, v);
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::OutOfRange(format!("W({u}, {v}) = {y} outside [0, 1]")));
        }
        Ok((u, y))
    }

    fn conditional_quantile(&self, x: f64, y: f64) -> Option<f64> {
        Some((self.w)(x, y))
    }
}

/// Built-in copula by name: `independence`, `min`, `countermonotone`, `mixture:<θ>`.
pub fn copula_by_name(name: &str) -> Result<Box<dyn Copula>> {
    match name {
        "independence" | "product" => Ok(Box::new(Independence)),
        "min" | "comonotone" => Ok(Box::new(MinCopula)),
        "countermonotone" | "anti" => Ok(Box::new(Countermonotone)),
        other => {
            if let Some(t) = other.strip_prefix("mixture:") {
                let theta = t.parse::<f64>().map_err(|_| Error::InvalidData(format!("bad mixture weight {t:?}")))?;
                return Ok(Box::new(ComonotoneMixture::new(theta)?));
            }
            Err(Error::Unsupported(format!("unknown copula {other:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawMode {
    Exact,
    MonteCarlo { m: u64 },
}

/// Distribution `σ ↦ t(σ, C)` on `S_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternLaw {
    pub k: usize,
    pub mode: LawMode,
    /// Probabilities in lexicographic order of `S_k`.
    pub probs: Vec<f64>,
    /// Binomial standard errors `sqrt(p̂(1 - p̂)/m)`; zero for exact laws.
    pub se: Vec<f64>,
    pub exact: Option<Vec<BigRational>>,
    /// Raw draw counts for Monte Carlo laws.
    pub counts: Option<Vec<u64>>,
}

impl PatternLaw {
    pub fn prob(&self, sigma: &Permutation) -> f64 {
        self.probs[sigma.lex_rank()]
    }

    pub fn to_json(&self) -> Value {
        let mut probs = Map::new();
        let mut se = Map::new();
        for (i, sigma) in Permutation::all(self.k).enumerate() {
            probs.insert(sigma.to_string(), json!(self.probs[i]));
            se.insert(sigma.to_string(), json!(self.se[i]));
        }
        let (mode, m) = match self.mode {
            LawMode::Exact => ("exact", Value::Null),
            LawMode::MonteCarlo { m } => ("mc", json!(m)),
        };
        json!({ "k": self.k, "mode": mode, "m": m, "probs": probs, "se": se })
    }
}

/// Exact pattern law for copulas that provide one.
pub fn pattern_law_exact(c: &dyn Copula, k: usize) -> Result<PatternLaw> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be at least 1".into()));
    }
    let exact = c
        .exact_pattern_law(k)
        .ok_or_else(|| Error::Unsupported(format!("no exact pattern law for copula {}", c.name())))?;
    let probs = exact.iter().map(rational_to_f64).collect();
    Ok(PatternLaw { k, mode: LawMode::Exact, probs, se: vec![0.0; exact.len()], exact: Some(exact), counts: None })
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

const MC_BATCH: u64 = 4096;

/// Lex rank in `S_k` of the order-relating permutation of `k` draws; ties
/// within a coordinate are ordered by draw index.
pub(crate) fn draw_pattern(c: &dyn Copula, k: usize, rng: &mut dyn RngCore, buf: &mut Vec<(f64, f64)>) -> Result<usize> {
    buf.clear();
    for _ in 0..k {
        buf.push(c.sample(rng)?);
    }
    // sort by x (stable, so ties keep draw order), then rank the y's
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| buf[a].0.total_cmp(&buf[b].0));
    let ys: Vec<(f64, usize)> = order.iter().map(|&i| (buf[i].1, i)).collect();
    Ok(lex_rank_of(&ys))
}

/// Monte Carlo estimate of `t(·, C)` on `S_k` from `m` independent `k`-samples.
///
/// Draws are split into batches of 4096; batch `b` uses stream `(seed, b)`.
pub fn pattern_law_mc(c: &dyn Copula, k: usize, m: u64, seed: u64) -> Result<PatternLaw> {
    if k == 0 || m == 0 {
        return Err(Error::OutOfRange("need k >= 1 and m >= 1".into()));
    }
    let cells = factorial(k);
    let batches = m.div_ceil(MC_BATCH);
    let parts: Vec<Result<Vec<u64>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, b);
            let mut counts = vec![0u64; cells];
            let mut buf = Vec::with_capacity(k);
            let draws = MC_BATCH.min(m - b * MC_BATCH);
            for _ in 0..draws {
                counts[draw_pattern(c, k, &mut r, &mut buf)?] += 1;
            }
            Ok(counts)
        })
        .collect();
    let mut counts = vec![0u64; cells];
    for part in parts {
        for (t, x) in counts.iter_mut().zip(part?) {
            *t += x;
        }
    }
    let probs: Vec<f64> = counts.iter().map(|&x| x as f64 / m as f64).collect();
    let se = probs.iter().map(|&p| (p * (1.0 - p) / m as f64).sqrt()).collect();
    Ok(PatternLaw { k, mode: LawMode::MonteCarlo { m }, probs, se, exact: None, counts: Some(counts) })
}
