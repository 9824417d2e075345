//! Dedekind numbers `D(m+2)` from the lattice `D_m` of monotone Boolean
//! functions, summed per equivalence class of "tops" into a dataset whose
//! records can each be recomputed and checked on their own.

pub mod accum;
pub mod equiv;
pub mod error;
pub mod lattice;
pub mod mbf;
pub mod pcoeff;
pub mod pipeline;
pub mod verify;

pub use error::{Error, Result};
pub use mbf::{AntiChain, BaseSize, Mbf, Permutation, PointMask};
