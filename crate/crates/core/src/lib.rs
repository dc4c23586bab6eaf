//! Numerical lab for maximal operators, Orlicz norms and Lipschitz
//! characterization on Euclidean space and the first Heisenberg group.

pub mod corpus;
pub mod error;
pub mod field;
pub mod field_io;
pub mod geometry;
pub mod lipschitz;
pub mod maximal;
pub mod orlicz;
pub mod rng;
pub mod young;

pub use error::{Error, Result};
pub use field::{GridSpec, RegionMask, SampledField};
pub use geometry::{Ball, GroupKind, GroupPoint, GroupSpec};
pub use young::{Tail, YoungFamily, YoungFunction};
