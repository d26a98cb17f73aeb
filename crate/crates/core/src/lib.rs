//! Reconstruction of full-resolution HDR radiance maps from single-shot,
//! row-wise dual-exposure Bayer captures.
//!
//! The crate is organized around a small dense-tensor engine with
//! reverse-mode differentiation ([`tape`], [`conv`], [`optim`]), the
//! spatially varying convolution and first-layer variants ([`svc`]), the
//! radiometric front end ([`radiometry`], [`dataio`]), the two-branch
//! reconstruction network ([`network`]), training losses and HDR quality
//! metrics ([`loss`], [`metrics`]), and the end-to-end pipeline ([`train`]).
//!
//! [`oracle`] holds deliberately slow reference implementations used by the
//! test suite and the `check` command to cross-verify the optimized paths.

pub mod checks;
pub mod conv;
pub mod dataio;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod metrics;
pub mod network;
pub mod optim;
pub mod oracle;
pub mod radiometry;
pub mod scalar;
pub mod svc;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Error, ErrorClass, Result};
pub use scalar::{Dtype, Scalar};
pub use tensor::{Shape4, Tensor};
