//! Permutation patterns, permutons and growth chains.
//!
//! The crate covers pattern frequencies of permutations, copulas as limit
//! objects and their sampling, the single- and double-insertion growth
//! chains with their exact transition and cotransition laws, independence
//! tests built from pattern frequencies, queue-generated permutations, and
//! the partition side (cycle types, the Young lattice, the Chinese
//! restaurant process and Plancherel growth).

pub mod chains;
pub mod copula;
pub mod datasets;
pub mod error;
pub mod indep;
pub mod partitions;
pub mod patterns;
pub mod perm;
pub mod queue;
pub mod rng;
pub mod sample;
pub mod stats;
pub mod zarray;

pub use chains::{KernelValue, Trajectory};
pub use copula::{Copula, PatternLaw};
pub use error::{Error, Result};
pub use indep::{CovMatrix, Pattern4Null, TestReport};
pub use partitions::{BoundaryPoint, CycleType, Partition, YoungLattice};
pub use patterns::{Budget, PatternTable};
pub use perm::{CycleForm, Permutation};
pub use queue::{Discipline, QueueTrace, ServiceDist};
pub use sample::{BivariateSample, Ranks, TiePolicy};
pub use zarray::ZArray;
