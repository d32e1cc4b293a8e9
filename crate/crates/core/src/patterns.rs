//! Pattern occurrence counts `t(σ, π)`.
//!
//! The brute-force counter enumerates every `k`-subset of positions and is the
//! reference for the faster kernels:
//!
//! * `k = 2`: inversion counting with a Fenwick tree, `O(n log n)`;
//! * `k = 3`: per-position smaller/larger prefix and suffix counts, `O(n log n)`;
//! * `k = 4`: every position triple extended by suffix value counts, `O(n³)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::perm::{factorial, lex_rank_of, Permutation};
use crate::rng;

/// Default cap on the number of subsets the brute-force counter may visit.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Default size ceiling for rejection sampling of separable permutations.
pub const DEFAULT_AVOIDER_CEILING: usize = 12;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Resource guard for exhaustive subset enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(pub u128);

impl Default for Budget {
    fn default() -> Self {
        Budget(DEFAULT_BUDGET)
    }
}

impl Budget {
    /// Reads `PERMUTON_BUDGET` if set and valid, otherwise the default.
    pub fn from_env() -> Self {
        std::env::var("PERMUTON_BUDGET")
            .ok()
            .and_then(|s| s.trim().parse::<u128>().ok())
            .map(Budget)
            .unwrap_or_default()
    }

    pub fn unlimited() -> Self {
        Budget(u128::MAX)
    }

    fn check(&self, required: u128) -> Result<()> {
        if required > self.0 {
            Err(Error::Budget { required, budget: self.0 })
        } else {
            Ok(())
        }
    }
}

/// Occurrence counts of every pattern of length `k` in a host permutation of size `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternTable {
    k: usize,
    n: usize,
    // indexed by lexicographic rank in S_k
    counts: Vec<u64>,
}

impl PatternTable {
    fn zeros(k: usize, n: usize) -> Self {
        PatternTable { k, n, counts: vec![0; factorial(k)] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `binomial(n, k)`; zero when `k > n`.
    pub fn total(&self) -> u128 {
        binomial(self.n, self.k)
    }

    /// Counts in lexicographic order of `S_k`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, sigma: &Permutation) -> u64 {
        assert_eq!(sigma.len(), self.k, "pattern length must match the table");
        self.counts[sigma.lex_rank()]
    }

    /// Exact relative frequency `t(σ, π)`; zero when `k > n`.
    pub fn frequency(&self, sigma: &Permutation) -> BigRational {
        let total = self.total();
        if total == 0 {
            return BigRational::from_integer(BigInt::from(0));
        }
        BigRational::new(BigInt::from(self.count(sigma)), BigInt::from(total))
    }

    pub fn frequency_f64(&self, sigma: &Permutation) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.count(sigma) as f64 / total as f64
        }
    }

    /// Relative frequencies in lexicographic order of `S_k`.
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.total();
        self.counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect()
    }

    /// `(σ, count)` pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Permutation, u64)> + '_ {
        Permutation::all(self.k).zip(self.counts.iter().copied())
    }

    /// `{"k":…, "n":…, "counts": {"1,2,3": …, …}}` with keys in lexicographic order.
    pub fn to_json(&self) -> Value {
        let mut counts = Map::new();
        for (sigma, c) in self.iter() {
            counts.insert(sigma.to_string(), json!(c));
        }
        json!({ "k": self.k, "n": self.n, "counts": counts })
    }
}

/// Exact counts by enumerating all `binomial(n, k)` position subsets.
pub fn count_patterns_bruteforce(p: &Permutation, k: usize, budget: Budget) -> Result<PatternTable> {
    if k == 0 {
        return Err(Error::OutOfRange("pattern length must be at least 1".into()));
    }
    let n = p.len();
    let mut table = PatternTable::zeros(k, n);
    if k > n {
        return Ok(table);
    }
    budget.check(binomial(n, k))?;
    let values = p.images();
    let partial: Vec<Vec<u64>> = (0..=n - k)
        .into_par_iter()
        .map(|first| {
            let mut counts = vec![0u64; table.counts.len()];
            let mut idx: Vec<usize> = std::iter::once(first).chain(first + 1..first + k).collect();
            let mut buf = vec![0usize; k];
            loop {
                for (b, &i) in buf.iter_mut().zip(&idx) {
                    *b = values[i];
                }
                counts[lex_rank_of(&buf)] += 1;
                // advance idx[1..] to the next combination of (first+1..n)
                let mut pos = k;
                loop {
                    if pos == 1 {
                        return counts;
                    }
                    pos -= 1;
                    if idx[pos] < n - (k - pos) {
                        break;
                    }
                }
                idx[pos] += 1;
                for j in pos + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        })
        .collect();
    for part in partial {
        for (t, c) in table.counts.iter_mut().zip(part) {
            *t += c;
        }
    }
    Ok(table)
}

struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![0; n + 1] }
    }

    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted indices `< i`.
    fn prefix(&self, i: usize) -> u64 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// For each position, the number of earlier positions holding a smaller value.
fn left_smaller(values: &[usize]) -> Vec<u64> {
    let mut fw = Fenwick::new(values.len());
    values
        .iter()
        .map(|&v| {
            let c = fw.prefix(v);
            fw.add(v);
            c
        })
        .collect()
}

pub(crate) fn inversion_count(values: &[usize]) -> u64 {
    let ls = left_smaller(values);
    ls.iter().enumerate().map(|(j, &s)| j as u64 - s).sum()
}

fn choose2(m: u64) -> u64 {
    m * m.saturating_sub(1) / 2
}

/// Exact counts for `k ∈ {1, 2, 3}` without subset enumeration.
pub fn count_patterns_fast(p: &Permutation, k: usize) -> Result<PatternTable> {
    let n = p.len();
    let mut table = PatternTable::zeros(k, n);
    match k {
        1 => table.counts[0] = n as u64,
        2 => {
            let inv = inversion_count(p.images());
            table.counts = vec![binomial(n, 2) as u64 - inv, inv];
        }
        3 => {
            if n < 3 {
                return Ok(table);
            }
            let values = p.images();
            let ls = left_smaller(values);
            let (mut s123, mut s321, mut first_min, mut mid_max, mut first_max, mut mid_min) = (0u64, 0, 0, 0, 0, 0);
            for (j, &v) in values.iter().enumerate() {
                let ls = ls[j];
                let lg = j as u64 - ls;
                let rs = v as u64 - ls;
                let rg = (n - 1 - j) as u64 - rs;
                s123 += ls * rg;
                s321 += lg * rs;
                first_min += choose2(rg);
                first_max += choose2(rs);
                mid_max += ls * rs;
                mid_min += lg * rg;
            }
            let s132 = first_min - s123;
            let s231 = mid_max - s132;
            let s312 = first_max - s321;
            let s213 = mid_min - s312;
            table.counts = vec![s123, s132, s213, s231, s312, s321];
        }
        _ => return Err(Error::Unsupported(format!("fast counter handles k <= 3, got {k}"))),
    }
    Ok(table)
}

/// Exact counts for `k = 4`: each position triple is extended by the number
/// of later values falling in each of the four gaps it defines.
pub fn count_patterns4(p: &Permutation) -> PatternTable {
    let n = p.len();
    let mut table = PatternTable::zeros(4, n);
    if n < 4 {
        return table;
    }
    // lex rank in S_4 of the triple pattern (lex rank t in S_3) with a fourth
    // value of relative rank r appended
    let mut extend = [[0usize; 4]; 6];
    for (t, tri) in Permutation::all(3).enumerate() {
        for (r, slot) in extend[t].iter_mut().enumerate() {
            let mut seq: Vec<usize> = tri.images().iter().map(|&v| if v >= r { v + 1 } else { v }).collect();
            seq.push(r);
            *slot = lex_rank_of(&seq);
        }
    }
    let values = p.images();
    let partial: Vec<[u64; 24]> = (2..n - 1)
        .into_par_iter()
        .map(|c| {
            // less[v] = #{l > c : π(l) < v}
            let mut less = vec![0u64; n + 1];
            for &v in &values[c + 1..] {
                less[v + 1] += 1;
            }
            for v in 1..=n {
                less[v] += less[v - 1];
            }
            let after = (n - 1 - c) as u64;
            let vc = values[c];
            let mut counts = [0u64; 24];
            for a in 0..c {
                let va = values[a];
                for &vb in &values[a + 1..c] {
                    let (s0, s1, s2, t) = sort3(va, vb, vc);
                    let l0 = less[s0];
                    let l1 = less[s1];
                    let l2 = less[s2];
                    let ext = &extend[t];
                    counts[ext[0]] += l0;
                    counts[ext[1]] += l1 - l0;
                    counts[ext[2]] += l2 - l1;
                    counts[ext[3]] += after - l2;
                }
            }
            counts
        })
        .collect();
    for part in partial {
        for (t, c) in table.counts.iter_mut().zip(part) {
            *t += c;
        }
    }
    table
}

/// Sorted values and the lex rank in `S_3` of the pattern `(a, b, c)`.
fn sort3(a: usize, b: usize, c: usize) -> (usize, usize, usize, usize) {
    match (a < b, b < c, a < c) {
        (true, true, _) => (a, b, c, 0),      // 123
        (true, false, true) => (a, c, b, 1),  // 132
        (false, true, true) => (b, a, c, 2),  // 213
        (true, false, false) => (c, a, b, 3), // 231
        (false, true, false) => (b, c, a, 4), // 312
        (false, false, _) => (c, b, a, 5),    // 321
    }
}

/// Fastest exact counter available for `k`.
pub fn count_patterns(p: &Permutation, k: usize, budget: Budget) -> Result<PatternTable> {
    match k {
        1..=3 => count_patterns_fast(p, k),
        4 => Ok(count_patterns4(p)),
        _ => count_patterns_bruteforce(p, k, budget),
    }
}

/// Exact `t(σ, π)`; zero when `|σ| > |π|`.
pub fn pattern_frequency(sigma: &Permutation, pi: &Permutation) -> BigRational {
    let (k, n) = (sigma.len(), pi.len());
    if k <= 4 {
        let table = count_patterns(pi, k, Budget::unlimited()).expect("unlimited budget");
        return table.frequency(sigma);
    }
    if k > n {
        return BigRational::zero();
    }
    // single-pattern scan: a k!-sized table is out of reach for long σ
    let target = sigma.images();
    let values = pi.images();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0usize; k];
    let mut hits = 0u64;
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = values[i];
        }
        if standardizes_to(&buf, &target) {
            hits += 1;
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return BigRational::new(BigInt::from(hits), BigInt::from(binomial(n, k)));
            }
            pos -= 1;
            if idx[pos] < n - (k - pos) {
                break;
            }
        }
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn standardizes_to(buf: &[usize], target: &[usize]) -> bool {
    (0..buf.len()).all(|a| (a + 1..buf.len()).all(|b| (buf[a] < buf[b]) == (target[a] < target[b])))
}

/// Both sides of `t(σ, ρ) = Σ_{τ ∈ S_l} t(σ, τ) t(τ, ρ)` for `|σ| < l < |ρ|`.
pub fn verify_cotransition(sigma: &Permutation, rho: &Permutation, l: usize) -> Result<(BigRational, BigRational)> {
    if !(sigma.len() < l && l < rho.len()) {
        return Err(Error::OutOfRange(format!(
            "need |σ| < l < |ρ|, got {} < {} < {}",
            sigma.len(),
            l,
            rho.len()
        )));
    }
    let lhs = pattern_frequency(sigma, rho);
    let outer = count_patterns_bruteforce(rho, l, Budget::unlimited())?;
    let mut rhs = BigRational::from_integer(BigInt::from(0));
    for (tau, c) in outer.iter() {
        if c == 0 {
            continue;
        }
        rhs += pattern_frequency(sigma, &tau) * outer.frequency(&tau);
    }
    Ok((lhs, rhs))
}

/// True iff `π` avoids both 2413 and 3142.
pub fn is_separable(p: &Permutation) -> bool {
    if p.len() <= 50 {
        is_separable_bruteforce(p)
    } else {
        is_separable_stack(p)
    }
}

/// Avoidance of 2413 and 3142 by a full length-4 pattern scan.
pub fn is_separable_bruteforce(p: &Permutation) -> bool {
    if p.len() < 4 {
        return true;
    }
    let table = count_patterns4(p);
    table.count(&Permutation::from_slice(&[2, 4, 1, 3])) == 0 && table.count(&Permutation::from_slice(&[3, 1, 4, 2])) == 0
}

/// Linear-time check: merges adjacent value intervals on a stack; the
/// permutation is separable iff everything merges into one interval.
pub fn is_separable_stack(p: &Permutation) -> bool {
    let mut stack: Vec<(usize, usize)> = Vec::with_capacity(p.len());
    for &v in p.images() {
        let mut cur = (v, v);
        while let Some(&(lo, hi)) = stack.last() {
            if hi + 1 == cur.0 || cur.1 + 1 == lo {
                stack.pop();
                cur = (lo.min(cur.0), hi.max(cur.1));
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    stack.len() == 1
}

/// Uniform sample from the separable permutations of size `n`, by rejection
/// from the uniform distribution on `S_n`.
pub fn sample_avoider_uniform(n: usize, seed: u64, ceiling: usize) -> Result<Permutation> {
    if n == 0 || n > ceiling {
        return Err(Error::OutOfRange(format!("n = {n} outside 1..={ceiling}")));
    }
    let mut r = rng::seeded(seed);
    sample_avoider_with(n, &mut r)
}

pub(crate) fn sample_avoider_with<R: Rng + ?Sized>(n: usize, r: &mut R) -> Result<Permutation> {
    loop {
        let candidate = Permutation::random(n, r);
        if is_separable_stack(&candidate) {
            return Ok(candidate);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[usize]) -> Permutation {
        Permutation::from_slice(v)
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(16, 3), 560);
        assert_eq!(binomial(16, 2), 120);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }

    #[test]
    fn reverse_permutation_pairs() {
        let t = count_patterns_bruteforce(&p(&[3, 2, 1]), 2, Budget::default()).unwrap();
        assert_eq!(t.count(&p(&[2, 1])), 3);
        assert_eq!(t.count(&p(&[1, 2])), 0);
    }

    #[test]
    fn identity_concentrates_on_identity() {
        for k in 1..=5 {
            let t = count_patterns_bruteforce(&Permutation::identity(7), k, Budget::default()).unwrap();
            assert_eq!(t.count(&Permutation::identity(k)) as u128, binomial(7, k));
            assert_eq!(t.counts().iter().map(|&c| c as u128).sum::<u128>(), binomial(7, k));
        }
    }

    #[test]
    fn padding_rule() {
        let t = count_patterns_bruteforce(&p(&[2, 1]), 3, Budget::default()).unwrap();
        assert!(t.counts().iter().all(|&c| c == 0));
        assert_eq!(t.total(), 0);
        assert_eq!(pattern_frequency(&p(&[1, 2, 3]), &p(&[1, 2])), BigRational::from_integer(0.into()));
    }

    #[test]
    fn budget_guard() {
        let q = Permutation::identity(30);
        let err = count_patterns_bruteforce(&q, 5, Budget(1000)).unwrap_err();
        assert_eq!(err, Error::Budget { required: binomial(30, 5), budget: 1000 });
        assert!(count_patterns_bruteforce(&q, 0, Budget::default()).is_err());
    }

    #[test]
    fn fast_matches_bruteforce_exhaustively() {
        for n in 1..=7 {
            for q in Permutation::all(n) {
                for k in 1..=3 {
                    assert_eq!(
                        count_patterns_fast(&q, k).unwrap(),
                        count_patterns_bruteforce(&q, k, Budget::default()).unwrap()
                    );
                }
                assert_eq!(count_patterns4(&q), count_patterns_bruteforce(&q, 4, Budget::default()).unwrap());
            }
        }
        assert!(count_patterns_fast(&p(&[1, 2, 3, 4]), 4).is_err());
    }

    #[test]
    fn cotransition_small() {
        let (l, r) = verify_cotransition(&p(&[1]), &p(&[2, 4, 1, 3]), 2).unwrap();
        assert_eq!(l, r);
        assert_eq!(l, BigRational::from_integer(1.into()));
        assert!(verify_cotransition(&p(&[1, 2]), &p(&[1, 2, 3]), 3).is_err());
    }

    #[test]
    fn separability() {
        assert!(!is_separable(&p(&[2, 4, 1, 3])));
        assert!(!is_separable(&p(&[3, 1, 4, 2])));
        assert!(is_separable(&Permutation::identity(9)));
        for n in 1..=8 {
            for q in Permutation::all(n) {
                assert_eq!(is_separable_bruteforce(&q), is_separable_stack(&q), "{q}");
            }
        }
    }

    #[test]
    fn schroeder_numbers() {
        // large Schröder numbers 1, 2, 6, 22, 90, 394
        let counts: Vec<usize> = (1..=6).map(|n| Permutation::all(n).filter(is_separable).count()).collect();
        assert_eq!(counts, [1, 2, 6, 22, 90, 394]);
    }

    #[test]
    fn avoider_sampling_bounds() {
        assert_eq!(sample_avoider_uniform(1, 0, 12).unwrap(), p(&[1]));
        assert!(sample_avoider_uniform(13, 0, 12).is_err());
        assert!(sample_avoider_uniform(0, 0, 12).is_err());
        for seed in 0..20 {
            assert!(is_separable(&sample_avoider_uniform(9, seed, 12).unwrap()));
        }
    }

    #[test]
    fn table_json_layout() {
        let t = count_patterns_fast(&p(&[1, 3, 2]), 2).unwrap();
        assert_eq!(t.to_json().to_string(), r#"{"k":2,"n":3,"counts":{"1,2":2,"2,1":1}}"#);
    }
}
