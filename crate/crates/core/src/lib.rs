//! Numerics for attention-memory video matting.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: dense `f64` feature grids and the deterministic kernels on them
//!   (convolution, resampling, pooling, row softmax).
//! - [`compositor`]: the compositing model `I = αF + (1 − α)B′` and a seeded
//!   synthetic clip generator with exact ground truth.
//! - [`attention`]: the three-slot temporal memory block (query from frame `t`,
//!   keys/values from `t`, `t−1`, `t−2`), its low-resolution supervision heads,
//!   analytic gradients and a gradient-descent fitting loop.
//! - [`losses`]: the image and temporal training objectives, including the
//!   Laplacian pyramid loss.
//! - [`metrics`]: MAD, MSE, Grad, Conn, dtSSD, MAC counting and the report
//!   format.
//! - [`net`]: a forward-only toy encoder/memory/decoder network.
//! - [`io`]: PNG frame sequences and atomic file writes.

pub mod attention;
pub mod compositor;
pub mod error;
pub mod grid;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod named;
pub mod net;
pub mod rng;

pub use error::{Error, Result};
pub use grid::{Grid, Matrix};
