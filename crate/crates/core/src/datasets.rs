//! The city data set: the 16 largest German cities, numbered by decreasing
//! population, with their west-east and south-north rank orderings.

use crate::perm::Permutation;
use crate::sample::BivariateSample;

/// West-east ordering, indexed by population rank.
pub const CITY_LONGITUDE: [usize; 16] = [15, 11, 13, 3, 7, 9, 2, 6, 4, 8, 16, 14, 10, 12, 1, 5];

/// South-north ordering, indexed by population rank.
pub const CITY_LATITUDE: [usize; 16] = [14, 16, 1, 5, 4, 2, 7, 12, 10, 15, 6, 8, 13, 3, 9, 11];

/// The order-relating permutation `π_lat ∘ π_long⁻¹`.
pub const CITY_RANK_PERMUTATION: [usize; 16] = [9, 7, 5, 10, 11, 12, 4, 15, 2, 13, 16, 3, 1, 8, 14, 6];

/// Reference-table counts for the length-3 patterns 123, 132, 213, 231, 312, 321.
/// They sum to 455, not to `binomial(16, 3) = 560`.
pub const CITY_TABLE_COUNTS: [u64; 6] = [69, 57, 88, 61, 130, 50];

/// Reference-table relative frequencies matching [`CITY_TABLE_COUNTS`].
pub const CITY_TABLE_FREQUENCIES: [f64; 6] = [0.152, 0.125, 0.193, 0.134, 0.286, 0.110];

/// Cities as `(longitude rank, latitude rank)` pairs in population order.
pub fn city_sample() -> BivariateSample {
    BivariateSample::new(
        CITY_LONGITUDE.iter().zip(CITY_LATITUDE.iter()).map(|(&x, &y)| (x as f64, y as f64)).collect(),
    )
    .expect("finite values")
}

pub fn city_permutation() -> Permutation {
    Permutation::from_slice(&CITY_RANK_PERMUTATION)
}

/// The city fixture as CSV text with header `x,y`.
pub fn city_csv() -> String {
    let mut buf = Vec::new();
    city_sample().write_csv(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("ascii")
}
