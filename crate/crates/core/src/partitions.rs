//! Integer partitions, cycle types and the Young lattice.
//!
//! Two growth processes live on the lattice here: the cycle-type image of
//! the Chinese restaurant process and Plancherel growth, with transition
//! probabilities `d_η / ((n + 1) d_λ)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::chains::{check_size, enumerate, Draw, Trajectory};
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng;

/// Weakly decreasing positive parts; the empty partition is the lattice root.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidData("partition parts must be positive".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidData(format!("parts {parts:?} are not weakly decreasing")));
        }
        Ok(Partition { parts })
    }

    /// Sorts arbitrary positive sizes into a partition.
    pub fn from_sizes(mut sizes: Vec<usize>) -> Self {
        sizes.retain(|&s| s > 0);
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Partition { parts: sizes }
    }

    pub fn empty() -> Self {
        Partition::default()
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Part `i` (1-based), zero beyond the length.
    pub fn part(&self, i: usize) -> usize {
        self.parts.get(i - 1).copied().unwrap_or(0)
    }

    pub fn conjugate(&self) -> Partition {
        let cols = self.parts.first().copied().unwrap_or(0);
        Partition { parts: (1..=cols).map(|c| self.parts.iter().take_while(|&&p| p >= c).count()).collect() }
    }

    /// `self ≤ other` in the Young lattice (diagram containment).
    pub fn is_contained_in(&self, other: &Partition) -> bool {
        self.len() <= other.len() && self.parts.iter().zip(&other.parts).all(|(a, b)| a <= b)
    }

    /// Partitions obtained by removing one corner box.
    pub fn predecessors(&self) -> Vec<Partition> {
        (0..self.len())
            .filter(|&i| i + 1 == self.len() || self.parts[i] > self.parts[i + 1])
            .map(|i| {
                let mut p = self.parts.clone();
                p[i] -= 1;
                Partition::from_sizes(p)
            })
            .collect()
    }

    /// Partitions obtained by adding one box.
    pub fn successors(&self) -> Vec<Partition> {
        (0..=self.len())
            .filter(|&i| i == 0 || self.parts[i - 1] > self.part(i + 1))
            .map(|i| {
                let mut p = self.parts.clone();
                if i == p.len() {
                    p.push(1);
                } else {
                    p[i] += 1;
                }
                Partition { parts: p }
            })
            .collect()
    }

    /// Cotransition weights by atom removal: `λ` loses one box from a part of
    /// size `m` with weight `m · #{parts equal to m} / n`.
    pub fn atom_removal_weights(&self) -> Result<BTreeMap<Partition, BigRational>> {
        let n = self.size();
        if n < 2 {
            return Err(Error::OutOfRange(format!("{self} has no predecessor with positive size")));
        }
        let mut out = BTreeMap::new();
        for (m, mult) in self.multiplicities() {
            let mut p = self.parts.clone();
            let idx = p.iter().rposition(|&x| x == m).expect("part present");
            p[idx] -= 1;
            out.insert(Partition::from_sizes(p), BigRational::new(BigInt::from(m * mult), BigInt::from(n)));
        }
        Ok(out)
    }

    /// `(part size, multiplicity)` in decreasing part size.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &p in &self.parts {
            match out.last_mut() {
                Some((m, c)) if *m == p => *c += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// Hook lengths row by row.
    pub fn hooks(&self) -> Vec<Vec<usize>> {
        let conj = self.conjugate();
        self.parts
            .iter()
            .enumerate()
            .map(|(r, &len)| (0..len).map(|c| (len - c - 1) + (conj.parts[c] - r - 1) + 1).collect())
            .collect()
    }

    /// `d_λ = n! / Π hooks`, the number of standard Young tableaux.
    pub fn dimension(&self) -> BigUint {
        let n = self.size();
        let fact: BigUint = (1..=n).fold(BigUint::one(), |a, k| a * k);
        let hooks: BigUint = self.hooks().iter().flatten().fold(BigUint::one(), |a, &h| a * h);
        fact / hooks
    }

    /// `(λ_i / n)` and `(λ*_i / n)` padded or cut to `len` entries.
    /// Modified Frobenius coordinates `(λ_i − i + ½)/n`, `(λ*_i − i + ½)/n`
    /// along the diagonal, zero beyond it. Same limits as `λ_i/n`, `λ*_i/n`,
    /// and the total is exactly 1 at every finite `n`.
    pub fn thoma_coordinates(&self, len: usize) -> BoundaryPoint {
        let n = self.size().max(1) as f64;
        let durfee = (1..=self.len()).take_while(|&i| self.part(i) >= i).count();
        let coords = |p: &Partition| {
            (1..=len).map(|i| if i <= durfee { (p.part(i) as f64 - i as f64 + 0.5) / n } else { 0.0 }).collect()
        };
        BoundaryPoint { alpha: coords(self), beta: coords(&self.conjugate()) }
    }
}

pub const DEFAULT_THOMA_LENGTH: usize = 10;

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        f.write_str(&s.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        if s.is_empty() {
            return Ok(Partition::empty());
        }
        let parts = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| Error::InvalidData(format!("bad part {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

/// All partitions of `n`, in decreasing lexicographic order.
pub fn partitions_of(n: usize) -> Vec<Partition> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        for p in (1..=max.min(rest)).rev() {
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Levels `0..=max_n` of the Young lattice with path-count dimensions.
#[derive(Clone, Debug)]
pub struct YoungLattice {
    levels: Vec<Vec<Partition>>,
    dims: HashMap<Partition, BigUint>,
}

impl YoungLattice {
    pub fn new(max_n: usize) -> Self {
        let mut levels = vec![vec![Partition::empty()]];
        let mut dims = HashMap::from([(Partition::empty(), BigUint::one())]);
        for n in 1..=max_n {
            let level = partitions_of(n);
            for lam in &level {
                let d = lam.predecessors().iter().map(|p| &dims[p]).fold(BigUint::zero(), |a, b| a + b);
                dims.insert(lam.clone(), d);
            }
            levels.push(level);
        }
        YoungLattice { levels, dims }
    }

    pub fn max_n(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &[Partition] {
        &self.levels[n]
    }

    /// Number of root-to-`λ` paths.
    pub fn paths(&self, lam: &Partition) -> Option<&BigUint> {
        self.dims.get(lam)
    }

    /// Edge list `parent,child,weight_num,weight_den` with cotransition
    /// weights `P(parent | child)`.
    pub fn write_edges_csv<W: Write>(&self, w: W, weighting: Weighting) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        out.write_record(["parent", "child", "weight_num", "weight_den"]).map_err(io)?;
        for n in 2..=self.max_n() {
            for child in self.level(n) {
                let weights: Vec<(Partition, BigRational)> = match weighting {
                    Weighting::AtomRemoval => child.atom_removal_weights()?.into_iter().collect(),
                    Weighting::Dimension => child
                        .predecessors()
                        .into_iter()
                        .map(|p| {
                            let w = BigRational::new(self.dims[&p].clone().into(), self.dims[child].clone().into());
                            (p, w)
                        })
                        .collect(),
                };
                for (parent, wt) in weights {
                    out.write_record([
                        parent.to_string(),
                        child.to_string(),
                        wt.numer().to_string(),
                        wt.denom().to_string(),
                    ])
                    .map_err(io)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Cycle-type cotransitions.
    AtomRemoval,
    /// Plancherel cotransitions `d_λ / d_η`.
    Dimension,
}

/// Cycle counts `c_i`, stored as `counts[i - 1]`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CycleType {
    n: usize,
    counts: Vec<usize>,
}

impl CycleType {
    /// Checks `Σ i·c_i = n`.
    pub fn new(n: usize, counts: Vec<usize>) -> Result<Self> {
        let total: usize = counts.iter().enumerate().map(|(i, c)| (i + 1) * c).sum();
        if total != n {
            return Err(Error::InvalidData(format!("Σ i·c_i = {total}, expected {n}")));
        }
        let mut counts = counts;
        counts.resize(n, 0);
        Ok(CycleType { n, counts })
    }

    pub fn from_partition(lam: &Partition) -> Self {
        let n = lam.size();
        let mut counts = vec![0; n];
        for &p in lam.parts() {
            counts[p - 1] += 1;
        }
        CycleType { n, counts }
    }

    pub fn to_partition(&self) -> Partition {
        Partition::from_sizes(self.counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i + 1, c)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `c_i` for 1-based `i`.
    pub fn count(&self, i: usize) -> usize {
        self.counts.get(i - 1).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

pub fn cycle_type(p: &Permutation) -> (CycleType, Partition) {
    let lam = Partition::from_sizes(p.to_cycles().cycles().iter().map(Vec::len).collect());
    (CycleType::from_partition(&lam), lam)
}

fn factorial_big(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * k)
}

/// `P(C_n = c) = Π_i 1/(i^{c_i} c_i!)` under the uniform law on `S_n`.
pub fn cycle_type_pmf(c: &CycleType) -> BigRational {
    let den = c
        .counts
        .iter()
        .enumerate()
        .fold(BigInt::one(), |a, (i, &ci)| a * BigInt::from(i + 1).pow(ci as u32) * factorial_big(ci));
    BigRational::new(BigInt::one(), den)
}

/// `P(π has a fixed point) = Σ_{k=1}^n (−1)^{k+1}/k!`.
pub fn fixed_point_prob(n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be at least 1".into()));
    }
    Ok((1..=n).fold(BigRational::zero(), |acc, k| {
        let term = BigRational::new(BigInt::one(), factorial_big(k));
        if k % 2 == 1 {
            acc + term
        } else {
            acc - term
        }
    }))
}

/// Law of independent `Z_i ~ Poisson(1/i)`, `i ≤ n`, conditioned on
/// `Σ i·Z_i = n`; the `exp(−1/i)` factors cancel in the ratio.
pub fn conditioned_poisson_exact(n: usize) -> BTreeMap<Partition, BigRational> {
    let weights: Vec<(Partition, BigRational)> = partitions_of(n)
        .into_iter()
        .map(|lam| {
            let w = cycle_type_pmf(&CycleType::from_partition(&lam));
            (lam, w)
        })
        .collect();
    let total = weights.iter().fold(BigRational::zero(), |a, (_, w)| a + w);
    weights.into_iter().map(|(lam, w)| (lam, w / &total)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonCheck {
    pub n: usize,
    pub accepted: u64,
    pub trials: u64,
    /// Total variation distance between the accepted draws and the cycle-type law.
    pub tv_distance: f64,
    pub empirical: BTreeMap<Partition, f64>,
}

/// Rejection sampler for the conditioned Poisson representation.
///
/// Runs batches of 4096 trials on streams `(seed, b)` until `accepted`
/// draws are collected; fails once `max_trials` is exceeded.
pub fn conditioned_poisson_check(n: usize, accepted: u64, max_trials: u64, seed: u64) -> Result<PoissonCheck> {
    check_size(n)?;
    const BATCH: u64 = 4096;
    let dists: Vec<Poisson<f64>> = (1..=n).map(|i| Poisson::new(1.0 / i as f64).expect("positive mean")).collect();
    let mut counts: BTreeMap<Partition, u64> = BTreeMap::new();
    let mut got = 0u64;
    let mut trials = 0u64;
    let mut batch = 0u64;
    let threads = rayon::current_num_threads() as u64;
    while got < accepted {
        if trials >= max_trials {
            return Err(Error::Budget { required: accepted as u128, budget: got as u128 });
        }
        let round: Vec<Vec<Partition>> = (batch..batch + threads)
            .into_par_iter()
            .map(|b| {
                let mut r = rng::stream(seed, b);
                let mut hits = Vec::new();
                for _ in 0..BATCH {
                    let z: Vec<usize> = dists.iter().map(|d| d.sample(&mut r) as usize).collect();
                    if z.iter().enumerate().map(|(i, c)| (i + 1) * c).sum::<usize>() == n {
                        hits.push(CycleType { n, counts: z }.to_partition());
                    }
                }
                hits
            })
            .collect();
        // consume whole batches in stream order so the result is thread-count independent
        for hits in round {
            if got >= accepted || trials >= max_trials {
                break;
            }
            trials += BATCH;
            for lam in hits {
                if got < accepted {
                    *counts.entry(lam).or_insert(0) += 1;
                    got += 1;
                }
            }
        }
        batch += threads;
    }
    let exact = conditioned_poisson_exact(n);
    let empirical: BTreeMap<Partition, f64> = exact
        .keys()
        .map(|lam| (lam.clone(), counts.get(lam).copied().unwrap_or(0) as f64 / got as f64))
        .collect();
    let tv = 0.5
        * exact
            .iter()
            .map(|(lam, p)| (p.to_f64().unwrap_or(f64::NAN) - empirical[lam]).abs())
            .sum::<f64>();
    Ok(PoissonCheck { n, accepted: got, trials, tv_distance: tv, empirical })
}

/// Seats customer `n + 1`: `choice ≤ n` makes customer `choice` its right
/// neighbour (`π(n+1) = choice`), `choice = n + 1` opens a new table.
pub fn crp_step(p: &Permutation, choice: usize) -> Result<Permutation> {
    let n = p.len();
    if choice == 0 || choice > n + 1 {
        return Err(Error::OutOfRange(format!("choice {choice} not in 1..={}", n + 1)));
    }
    let mut v = p.one_line();
    if choice == n + 1 {
        v.push(n + 1);
    } else {
        let pred = v.iter().position(|&x| x == choice).expect("bijection");
        v[pred] = n + 1;
        v.push(choice);
    }
    Ok(Permutation::from_slice(&v))
}

pub fn simulate_crp(n: usize, seed: u64) -> Result<Trajectory> {
    check_size(n)?;
    let mut r = rng::seeded(seed);
    let mut steps = vec![Permutation::identity(1)];
    let mut draws = vec![Draw::Start];
    let mut state = CrpState::new();
    for m in 1..n {
        let c = r.random_range(1..=m + 1);
        state.seat(c);
        steps.push(state.permutation());
        draws.push(Draw::Seat(c));
    }
    Ok(Trajectory { steps, draws, seed })
}

/// Marginal law of the restaurant chain from all `n!` seating histories.
pub fn enumerate_crp(n: usize) -> Result<BTreeMap<Permutation, BigRational>> {
    enumerate(n, |p| (1..=p.len() + 1).map(|c| crp_step(p, c)).collect())
}

/// Mutable restaurant with O(1) seating.
#[derive(Clone, Debug)]
pub struct CrpState {
    /// 0-based successor map.
    next: Vec<usize>,
    pred: Vec<usize>,
}

impl Default for CrpState {
    fn default() -> Self {
        Self::new()
    }
}

impl CrpState {
    pub fn new() -> Self {
        CrpState { next: vec![0], pred: vec![0] }
    }

    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same convention as [`crp_step`]; `choice` must be in `1..=n+1`.
    pub fn seat(&mut self, choice: usize) {
        let new = self.next.len();
        if choice == new + 1 {
            self.next.push(new);
            self.pred.push(new);
        } else {
            let j = choice - 1;
            let a = self.pred[j];
            self.next[a] = new;
            self.pred[j] = new;
            self.next.push(j);
            self.pred.push(a);
        }
    }

    pub fn permutation(&self) -> Permutation {
        Permutation::from_zero_based(self.next.clone())
    }
}

/// Table sizes after `n` customers of the restaurant.
pub fn crp_table_sizes<R: Rng + ?Sized>(n: usize, r: &mut R) -> Vec<usize> {
    let mut table_of: Vec<usize> = Vec::with_capacity(n);
    let mut sizes: Vec<usize> = Vec::new();
    for m in 0..n {
        let c = r.random_range(0..=m);
        let t = if c == m {
            sizes.push(0);
            sizes.len() - 1
        } else {
            table_of[c]
        };
        sizes[t] += 1;
        table_of.push(t);
    }
    sizes
}

/// `n` independent draws of `max cycle length / n` for uniform `π ∈ S_n`.
pub fn largest_cycle_fractions(n: usize, replicates: usize, seed: u64) -> Vec<f64> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, b);
            *crp_table_sizes(n, &mut r).iter().max().expect("n >= 1") as f64 / n as f64
        })
        .collect()
}

/// A point of the boundary: decreasing `α` and `β` with `Σα + Σβ ≤ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// First `count` stick lengths `V_1 = U_1`, `V_{k+1} = (1 − Σ_{i≤k} V_i) U_{k+1}`,
/// sorted decreasingly as `α`.
pub fn stick_breaking<R: Rng + ?Sized>(count: usize, r: &mut R) -> Result<BoundaryPoint> {
    if count == 0 {
        return Err(Error::OutOfRange("need at least one stick".into()));
    }
    let mut rest = 1.0;
    let mut alpha: Vec<f64> = (0..count)
        .map(|_| {
            let v = rest * r.random::<f64>();
            rest -= v;
            v
        })
        .collect();
    alpha.sort_by(|a, b| b.total_cmp(a));
    Ok(BoundaryPoint { alpha, beta: Vec::new() })
}

pub fn stick_breaking_seeded(count: usize, seed: u64) -> Result<BoundaryPoint> {
    stick_breaking(count, &mut rng::seeded(seed))
}

/// Exact Plancherel transition row `η ↦ d_η / ((n + 1) d_λ)`.
pub fn plancherel_row(lam: &Partition) -> BTreeMap<Partition, BigRational> {
    let dl = BigInt::from(lam.dimension()) * BigInt::from(lam.size() + 1);
    lam.successors().into_iter().map(|eta| {
        let p = BigRational::new(BigInt::from(eta.dimension()), dl.clone());
        (eta, p)
    }).collect()
}

/// Floating-point transition row from hook ratios: adding the box at row
/// `r`, column `c` multiplies the hook product by `Π h/(h+1)` over the old
/// hooks in that row and column.
fn plancherel_row_f64(lam: &Partition) -> Vec<(usize, f64)> {
    let hooks = lam.hooks();
    let conj = lam.conjugate();
    (0..=lam.len())
        .filter(|&i| i == 0 || lam.parts[i - 1] > lam.part(i + 1))
        .map(|r| {
            let c = lam.part(r + 1);
            let mut ratio = 1.0;
            if r < lam.len() {
                for &h in &hooks[r][..c] {
                    ratio *= h as f64 / (h + 1) as f64;
                }
            }
            for hr in hooks.iter().take(conj.part(c + 1)) {
                let h = hr[c];
                ratio *= h as f64 / (h + 1) as f64;
            }
            (r, ratio)
        })
        .collect()
}

/// One Plancherel growth step.
pub fn plancherel_step<R: Rng + ?Sized>(lam: &Partition, r: &mut R) -> Partition {
    let row = plancherel_row_f64(lam);
    let total: f64 = row.iter().map(|(_, p)| p).sum();
    let mut u = r.random::<f64>() * total;
    let mut pick = row.last().expect("always addable").0;
    for &(i, p) in &row {
        if u < p {
            pick = i;
            break;
        }
        u -= p;
    }
    let mut parts = lam.parts.clone();
    if pick == parts.len() {
        parts.push(1);
    } else {
        parts[pick] += 1;
    }
    Partition { parts }
}

/// Plancherel growth from `(1)` to size `n`.
pub fn simulate_plancherel(n: usize, seed: u64) -> Result<Vec<Partition>> {
    check_size(n)?;
    let mut r = rng::seeded(seed);
    let mut out = vec![Partition { parts: vec![1] }];
    for _ in 1..n {
        let next = plancherel_step(out.last().expect("non-empty"), &mut r);
        out.push(next);
    }
    Ok(out)
}

/// `P(Λ_n = λ)` for `n = 1..=max_n` by forward recursion from `(1)`.
pub fn plancherel_marginals(max_n: usize) -> Vec<BTreeMap<Partition, BigRational>> {
    let mut law = BTreeMap::from([(Partition { parts: vec![1] }, BigRational::one())]);
    let mut out = vec![law.clone()];
    for _ in 1..max_n {
        let mut next = BTreeMap::new();
        for (lam, w) in &law {
            for (eta, p) in plancherel_row(lam) {
                *next.entry(eta).or_insert_with(BigRational::zero) += w * p;
            }
        }
        law = next;
        out.push(law.clone());
    }
    out
}
