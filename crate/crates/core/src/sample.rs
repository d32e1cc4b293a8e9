//! Bivariate data, marginal ranks and the order-relating permutation.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng;

/// How equal values within one coordinate are handled when ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TiePolicy {
    /// Ties are an error.
    #[default]
    Strict,
    /// Tied values are ordered by observation index.
    ByIndex,
    /// Tied values are ordered by a seeded random shuffle.
    Random(u64),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BivariateSample {
    pairs: Vec<(f64, f64)>,
}

/// Marginal rank permutations and the permutation relating them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranks {
    pub x: Permutation,
    pub y: Permutation,
    /// `π_y ∘ π_x⁻¹`
    pub relating: Permutation,
}

impl BivariateSample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if let Some((i, _)) = pairs.iter().enumerate().find(|(_, (x, y))| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite value in pair {}", i + 1)));
        }
        Ok(BivariateSample { pairs })
    }

    pub fn from_columns(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::SizeMismatch { left: x.len(), right: y.len() });
        }
        Self::new(x.iter().copied().zip(y.iter().copied()).collect())
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Reorders the observations: row `i` of the result is row `order[i]` (0-based).
    pub fn permuted(&self, order: &[usize]) -> Self {
        BivariateSample { pairs: order.iter().map(|&i| self.pairs[i]).collect() }
    }

    pub fn xs(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// `(π_x, π_y, π_y ∘ π_x⁻¹)` with `π_x = (rk(x_1), ..., rk(x_n))`.
    pub fn ranks(&self, policy: TiePolicy) -> Result<Ranks> {
        if self.pairs.is_empty() {
            return Err(Error::InvalidData("empty sample".into()));
        }
        let x = rank_vector(&self.xs(), 'x', policy, 0)?;
        let y = rank_vector(&self.ys(), 'y', policy, 1)?;
        let relating = y.compose(&x.inverse())?;
        Ok(Ranks { x, y, relating })
    }

    /// The order-relating permutation under the strict tie policy.
    pub fn relating_permutation(&self) -> Result<Permutation> {
        Ok(self.ranks(TiePolicy::Strict)?.relating)
    }

    /// Reads CSV with header `x,y`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
            return Err(Error::Parse { line: 1, message: "expected header \"x,y\"".into() });
        }
        let mut pairs = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
            if rec.len() != 2 {
                return Err(Error::Parse { line, message: format!("expected 2 fields, found {}", rec.len()) });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("not a number: {s:?}") })
            };
            let (x, y) = (parse(&rec[0])?, parse(&rec[1])?);
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::Parse { line, message: "non-finite value".into() });
            }
            pairs.push((x, y));
        }
        Ok(BivariateSample { pairs })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y")?;
        for (x, y) in &self.pairs {
            writeln!(w, "{x},{y}")?;
        }
        Ok(())
    }
}

fn rank_vector(values: &[f64], coordinate: char, policy: TiePolicy, salt: u64) -> Result<Permutation> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    // stable sort keeps index order among ties
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        if end - start > 1 {
            match policy {
                TiePolicy::Strict => {
                    return Err(Error::Tie { coordinate, value: values[idx[start]] });
                }
                TiePolicy::ByIndex => {}
                TiePolicy::Random(seed) => {
                    let mut r = rng::stream(seed, salt);
                    idx[start..end].shuffle(&mut r);
                }
            }
        }
        start = end;
    }
    let mut ranks = vec![0; n];
    for (r, &i) in idx.iter().enumerate() {
        ranks[i] = r;
    }
    Ok(Permutation::from_zero_based(ranks))
}
