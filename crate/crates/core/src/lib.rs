//! Image denoising by dual sparse decomposition.
//!
//! A patch dictionary is learned at a low error tolerance so that it keeps
//! weak image detail, then split into a principal and a noise sub-dictionary
//! according to how often each atom is used across a group of similar
//! patches. Patches are rebuilt from the principal atoms only and the
//! overlapping estimates are averaged back into an image.
//!
//! The crate is organised bottom-up:
//!
//! * [`image`] and [`patch`]: rasters, patch extraction and aggregation.
//! * [`sparse`]: dictionaries, sparse codes, orthogonal matching pursuit and
//!   K-SVD learning.
//! * [`subdict`]: atom frequencies, the histogram-mode cut and the
//!   principal/noise split.
//! * [`grouping`]: nonlocal grouping under the Euclidean or the
//!   probabilistic patch-based (speckle) similarity.
//! * [`pipeline`]: the end-to-end denoiser and the homomorphic despeckler.
//! * [`eval`]: PSNR, SSIM and noise simulators.
//! * [`io`]: PGM/PNG/raw-float images and binary dictionary/code files.

pub mod error;
pub mod eval;
pub mod grouping;
pub mod image;
pub mod io;
pub mod linalg;
pub mod patch;
pub mod pipeline;
pub mod sparse;
pub mod special;
pub mod subdict;

pub use error::{Error, Result};
pub use image::Image;
pub use linalg::Matrix;
