//! Binary array encoding of the pairwise order structure of a bivariate sample.
//!
//! For observations `1..n` in arrival order:
//!
//! * above the diagonal (`i < j`): `Z[i][j] = 1` iff `y_i < y_j`;
//! * below the diagonal (`i > j`): `Z[i][j] = 1` iff `x_j < x_i`;
//! * `Z[i][i] = 0`.
//!
//! The upper-left `m × m` corner is the array of the first `m` observations.

use std::fmt;

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::sample::{BivariateSample, TiePolicy};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZArray {
    n: usize,
    bits: Vec<bool>,
}

impl ZArray {
    /// Encodes a sample without ties.
    pub fn encode(data: &BivariateSample) -> Result<Self> {
        let ranks = data.ranks(TiePolicy::Strict)?;
        Ok(Self::from_rank_vectors(&ranks.x, &ranks.y))
    }

    fn from_rank_vectors(x: &Permutation, y: &Permutation) -> Self {
        let n = x.len();
        let mut bits = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                bits[i * n + j] = match i.cmp(&j) {
                    std::cmp::Ordering::Less => y.at(i + 1) < y.at(j + 1),
                    std::cmp::Ordering::Greater => x.at(j + 1) < x.at(i + 1),
                    std::cmp::Ordering::Equal => false,
                };
            }
        }
        ZArray { n, bits }
    }

    /// Builds an array from 0/1 rows; checks shape and the zero diagonal only.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InconsistentZ("empty array".into()));
        }
        let mut bits = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InconsistentZ(format!("row {} has length {}", i + 1, row.len())));
            }
            for (j, &b) in row.iter().enumerate() {
                if b > 1 {
                    return Err(Error::InconsistentZ(format!("entry ({},{}) is not binary", i + 1, j + 1)));
                }
                if i == j && b == 1 {
                    return Err(Error::InconsistentZ(format!("diagonal entry {} is 1", i + 1)));
                }
                bits.push(b == 1);
            }
        }
        Ok(ZArray { n, bits })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Entry at 1-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[(i - 1) * self.n + (j - 1)]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.bits.chunks(self.n).map(|r| r.iter().map(|&b| u8::from(b)).collect()).collect()
    }

    /// Upper-left `m × m` corner.
    pub fn corner(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n {
            return Err(Error::OutOfRange(format!("corner size {m} not in 1..={}", self.n)));
        }
        let rows: Vec<Vec<u8>> = self.rows().into_iter().take(m).map(|r| r[..m].to_vec()).collect();
        Self::from_rows(&rows)
    }

    /// Recovers the marginal rank vectors `(π_x, π_y)`; fails if the array is
    /// not produced by any tie-free sample.
    pub fn rank_vectors(&self) -> Result<(Permutation, Permutation)> {
        let n = self.n;
        let z = |i: usize, j: usize| usize::from(self.bits[i * n + j]);
        let mut rx = Vec::with_capacity(n);
        let mut ry = Vec::with_capacity(n);
        for j in 0..n {
            let x_below: usize = (0..j).map(|i| z(j, i)).sum::<usize>() + (j + 1..n).map(|i| 1 - z(i, j)).sum::<usize>();
            let y_below: usize = (0..j).map(|i| z(i, j)).sum::<usize>() + (j + 1..n).map(|i| 1 - z(j, i)).sum::<usize>();
            rx.push(x_below + 1);
            ry.push(y_below + 1);
        }
        let x = Permutation::new(rx).map_err(|_| Error::InconsistentZ("x-order is not a total order".into()))?;
        let y = Permutation::new(ry).map_err(|_| Error::InconsistentZ("y-order is not a total order".into()))?;
        if Self::from_rank_vectors(&x, &y) != *self {
            return Err(Error::InconsistentZ("array is not realizable by any sample".into()));
        }
        Ok((x, y))
    }

    /// The order-relating permutation `π_y ∘ π_x⁻¹` of the encoded sample.
    pub fn decode(&self) -> Result<Permutation> {
        let (x, y) = self.rank_vectors()?;
        y.compose(&x.inverse())
    }
}

impl fmt::Display for ZArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let s: String = row.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;

    #[test]
    fn city_corner() {
        let z = ZArray::encode(&datasets::city_sample()).unwrap();
        let corner = z.corner(4).unwrap();
        assert_eq!(corner.rows(), vec![vec![0, 1, 0, 0], vec![0, 0, 0, 0], vec![0, 1, 0, 1], vec![0, 0, 0, 0]]);
        assert_eq!(z.decode().unwrap(), datasets::city_permutation());
    }

    #[test]
    fn comonotone_is_all_off_diagonal() {
        let s = BivariateSample::new((0..5).map(|i| (i as f64, i as f64)).collect()).unwrap();
        let z = ZArray::encode(&s).unwrap();
        for i in 1..=5 {
            for j in 1..=5 {
                assert_eq!(z.get(i, j), i != j);
            }
        }
        assert!(z.decode().unwrap().is_identity());
    }

    #[test]
    fn rejects_unrealizable_arrays() {
        // cyclic y-order: y1 < y2 < y3 < y1
        let rows = vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]];
        assert!(ZArray::from_rows(&rows).unwrap().decode().is_err());
        assert!(ZArray::from_rows(&[vec![1]]).is_err());
        assert!(ZArray::from_rows(&[vec![0, 2], vec![0, 0]]).is_err());
        assert!(ZArray::from_rows(&[vec![0, 1]]).is_err());
    }
}
