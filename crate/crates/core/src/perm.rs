//! Permutations in one-line and cycle notation.
//!
//! All public positions and values are 1-based. A [`Permutation`] of size `n`
//! is a bijection of `{1, ..., n}`; position `i` holds `π(i)`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    // 0-based images: map[i] = π(i + 1) - 1
    map: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from 1-based one-line notation.
    pub fn new(one_line: Vec<usize>) -> Result<Self> {
        if one_line.is_empty() {
            return Err(Error::InvalidPermutation("empty".into()));
        }
        let n = one_line.len();
        let mut seen = vec![false; n];
        let mut map = Vec::with_capacity(n);
        for &v in &one_line {
            if v == 0 || v > n {
                return Err(Error::InvalidPermutation(format!("value {v} outside 1..={n}")));
            }
            if seen[v - 1] {
                return Err(Error::InvalidPermutation(format!("value {v} repeated")));
            }
            seen[v - 1] = true;
            map.push(v - 1);
        }
        Ok(Permutation { map })
    }

    /// Convenience constructor for literals; panics on invalid input.
    pub fn from_slice(one_line: &[usize]) -> Self {
        Self::new(one_line.to_vec()).expect("valid one-line notation")
    }

    pub(crate) fn from_zero_based(map: Vec<usize>) -> Self {
        debug_assert!(is_bijection(&map));
        Permutation { map }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "permutations have size at least 1");
        Permutation { map: (0..n).collect() }
    }

    /// Uniformly random element of `S_n`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Permutation { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    /// Never true; permutations have size at least 1.
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `π(i)` for 1-based `i`.
    pub fn at(&self, i: usize) -> usize {
        self.map[i - 1] + 1
    }

    pub fn one_line(&self) -> Vec<usize> {
        self.map.iter().map(|v| v + 1).collect()
    }

    pub(crate) fn images(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// `(self ∘ q)(i) = self(q(i))`.
    pub fn compose(&self, q: &Permutation) -> Result<Permutation> {
        if self.len() != q.len() {
            return Err(Error::SizeMismatch { left: self.len(), right: q.len() });
        }
        Ok(Permutation { map: q.map.iter().map(|&j| self.map[j]).collect() })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { map: inv }
    }

    /// One-line notation read backwards.
    pub fn reverse(&self) -> Permutation {
        Permutation { map: self.map.iter().rev().copied().collect() }
    }

    /// Values `v` replaced by `n + 1 - v`.
    pub fn complement(&self) -> Permutation {
        let n = self.len();
        Permutation { map: self.map.iter().map(|&v| n - 1 - v).collect() }
    }

    pub fn reverse_complement(&self) -> Permutation {
        self.reverse().complement()
    }

    /// Number of pairs `i < j` with `π(i) > π(j)`.
    pub fn inversions(&self) -> u64 {
        crate::patterns::inversion_count(&self.map)
    }

    /// Standard cycle notation.
    pub fn to_cycles(&self) -> CycleForm {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i + 1);
                i = self.map[i];
            }
            cycles.push(cycle);
        }
        CycleForm::standardize(cycles)
    }

    pub fn from_cycles(c: &CycleForm) -> Permutation {
        let n = c.size();
        let mut map = vec![0; n];
        for cycle in &c.cycles {
            for (k, &a) in cycle.iter().enumerate() {
                let b = cycle[(k + 1) % cycle.len()];
                map[a - 1] = b - 1;
            }
        }
        Permutation { map }
    }

    /// Foata's correspondence: reads the one-line word of `self`, opens a
    /// cycle at every left-to-right maximum, and returns the permutation with
    /// those cycles.
    pub fn foata(&self) -> Permutation {
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut record = 0;
        for v in self.one_line() {
            if v > record {
                record = v;
                cycles.push(vec![v]);
            } else {
                cycles.last_mut().expect("first entry is a record").push(v);
            }
        }
        Permutation::from_cycles(&CycleForm { cycles })
    }

    /// Inverse of [`Permutation::foata`]: erases the brackets of the standard
    /// cycle notation.
    pub fn foata_inverse(&self) -> Permutation {
        let word: Vec<usize> = self.to_cycles().cycles.into_iter().flatten().collect();
        Permutation::new(word).expect("cycles partition [n]")
    }

    /// Restriction of the order `<_π` to `[k]`: deletes all values greater
    /// than `k` from the one-line notation.
    pub fn order_restrict(&self, k: usize) -> Result<Permutation> {
        if k == 0 || k > self.len() {
            return Err(Error::OutOfRange(format!("k = {k} not in 1..={}", self.len())));
        }
        Ok(Permutation { map: self.map.iter().copied().filter(|&v| v < k).collect() })
    }

    /// Deletes all numbers greater than `k` from the cycle notation.
    pub fn cycle_restrict(&self, k: usize) -> Result<Permutation> {
        if k == 0 || k > self.len() {
            return Err(Error::OutOfRange(format!("k = {k} not in 1..={}", self.len())));
        }
        let map = (0..k)
            .map(|i| {
                let mut j = self.map[i];
                while j >= k {
                    j = self.map[j];
                }
                j
            })
            .collect();
        Ok(Permutation { map })
    }

    /// Pattern formed by the values at the given strictly increasing
    /// 1-based positions.
    pub fn pattern_of(&self, positions: &[usize]) -> Result<Permutation> {
        if positions.is_empty() {
            return Err(Error::OutOfRange("empty position set".into()));
        }
        let mut prev = 0;
        for &p in positions {
            if p <= prev || p > self.len() {
                return Err(Error::OutOfRange(format!(
                    "positions must be strictly increasing within 1..={}",
                    self.len()
                )));
            }
            prev = p;
        }
        let values: Vec<usize> = positions.iter().map(|&p| self.map[p - 1]).collect();
        Ok(Permutation { map: standardize(&values) })
    }

    /// `self ⊕ q`: `q` placed above and to the right of `self`.
    pub fn direct_sum(&self, q: &Permutation) -> Permutation {
        let k = self.len();
        let mut map = self.map.clone();
        map.extend(q.map.iter().map(|v| v + k));
        Permutation { map }
    }

    /// `self ⊖ q`: `q` placed below and to the right of `self`.
    pub fn skew_sum(&self, q: &Permutation) -> Permutation {
        let l = q.len();
        let mut map: Vec<usize> = self.map.iter().map(|v| v + l).collect();
        map.extend(q.map.iter().copied());
        Permutation { map }
    }

    /// Finest decomposition `self = ψ_1 ⊕ ... ⊕ ψ_r`.
    pub fn sum_components(&self) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut start = 0;
        let mut max = 0;
        for (i, &v) in self.map.iter().enumerate() {
            max = max.max(v);
            if max == i {
                out.push(Permutation { map: self.map[start..=i].iter().map(|v| v - start).collect() });
                start = i + 1;
            }
        }
        out
    }

    /// True if the permutation is not a direct sum of two smaller ones.
    pub fn is_sum_indecomposable(&self) -> bool {
        self.sum_components().len() == 1
    }

    /// Permutation matrix `M(π)` with `m[i][j] = 1` iff `π(j) = i` (rows and
    /// columns 1-based in that statement, 0-based in the returned storage).
    pub fn perm_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.len();
        let mut m = vec![vec![0u8; n]; n];
        for (j, &v) in self.map.iter().enumerate() {
            m[v][j] = 1;
        }
        m
    }

    /// Support points `(i/n, π(i)/n)` of the empirical measure, each with mass `1/n`.
    pub fn empirical_measure(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        self.map
            .iter()
            .enumerate()
            .map(|(i, &v)| ((i + 1) as f64 / n, (v + 1) as f64 / n))
            .collect()
    }

    /// Index of the permutation in the lexicographic order of `S_n`, from 0.
    pub fn lex_rank(&self) -> usize {
        lex_rank_of(&self.map)
    }

    pub fn from_lex_rank(n: usize, mut rank: usize) -> Result<Permutation> {
        let total = factorial(n);
        if n == 0 || rank >= total {
            return Err(Error::OutOfRange(format!("rank {rank} not below {n}!")));
        }
        let mut avail: Vec<usize> = (0..n).collect();
        let mut map = Vec::with_capacity(n);
        for i in (0..n).rev() {
            let f = factorial(i);
            map.push(avail.remove(rank / f));
            rank %= f;
        }
        Ok(Permutation { map })
    }

    /// All elements of `S_n` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        (0..factorial(n)).map(move |r| Permutation::from_lex_rank(n, r).expect("rank in range"))
    }
}

pub(crate) fn is_bijection(map: &[usize]) -> bool {
    let mut seen = vec![false; map.len()];
    map.iter().all(|&v| v < seen.len() && !std::mem::replace(&mut seen[v], true))
}

/// Relabels distinct values by their ranks `0..k`.
pub(crate) fn standardize<T: PartialOrd + Copy>(values: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("comparable values"));
    let mut out = vec![0; values.len()];
    for (r, &i) in idx.iter().enumerate() {
        out[i] = r;
    }
    out
}

/// Lexicographic rank of a sequence of distinct values (any labels).
pub(crate) fn lex_rank_of<T: PartialOrd>(values: &[T]) -> usize {
    let k = values.len();
    let mut rank = 0;
    for i in 0..k {
        let smaller_after = values[i + 1..].iter().filter(|v| **v < values[i]).count();
        rank = rank * (k - i) + smaller_after;
    }
    rank
}

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", v + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses comma-separated one-line notation such as `"3,1,2"`.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidPermutation(format!("cannot parse {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::new(values)
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Standard cycle notation: each cycle starts with its largest element and
/// cycles are listed by increasing first element.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CycleForm {
    cycles: Vec<Vec<usize>>,
}

impl CycleForm {
    /// Validates that the cycles partition `{1, ..., n}` and standardizes them.
    pub fn new(cycles: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = cycles.iter().map(Vec::len).sum();
        if n == 0 {
            return Err(Error::InvalidCycles("no elements".into()));
        }
        let mut seen = vec![false; n];
        for c in &cycles {
            if c.is_empty() {
                return Err(Error::InvalidCycles("empty cycle".into()));
            }
            for &a in c {
                if a == 0 || a > n {
                    return Err(Error::InvalidCycles(format!("element {a} outside 1..={n}")));
                }
                if std::mem::replace(&mut seen[a - 1], true) {
                    return Err(Error::InvalidCycles(format!("element {a} repeated")));
                }
            }
        }
        Ok(Self::standardize(cycles))
    }

    fn standardize(cycles: Vec<Vec<usize>>) -> Self {
        let mut cycles: Vec<Vec<usize>> = cycles
            .into_iter()
            .map(|mut c| {
                let top = c.iter().enumerate().max_by_key(|(_, &v)| v).map(|(i, _)| i).unwrap_or(0);
                c.rotate_left(top);
                c
            })
            .collect();
        cycles.sort_by_key(|c| c[0]);
        CycleForm { cycles }
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn size(&self) -> usize {
        self.cycles.iter().map(Vec::len).sum()
    }
}

impl fmt::Display for CycleForm {
    /// Bracketed form, e.g. `(5)(8,7,3,2,4)(9,1,6)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cycles {
            let body: Vec<String> = c.iter().map(ToString::to_string).collect();
            write!(f, "({})", body.join(","))?;
        }
        Ok(())
    }
}
