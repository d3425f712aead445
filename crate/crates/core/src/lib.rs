//! Sparse matrix-vector multiplication with run-time storage transformation.
//!
//! - [`formats`]: CRS, CCS, COO, ELL and a dense oracle, with invariant checks
//! - [`convert`]: transformations between them, including the ELL memory guard
//! - [`spmv`]: the sequential CRS baseline and four lane-parallel kernels
//! - [`stats`]: row-length statistics and `D_mat`
//! - [`autotune`]: cost metrics, off-line profiling and on-line selection
//! - [`ingest`]: Matrix Market I/O and seeded generators
//! - [`cli`]: the `spmv-at` command-line front end

pub mod autotune;
pub mod cli;
pub mod convert;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod rng;
pub mod spmv;
pub mod stats;

pub use error::{Error, Result};
