//! Continuous-variable Bell tests on photon-subtracted multimode squeezed
//! light: joint-spectral supermode decomposition, heralded photon
//! subtraction in the signed-Gaussian-mixture picture, pixel-mode
//! coarse-graining, orthant-probability correlators, and CHSH /
//! Mermin-Klyshko / Mermin inequality search.
//!
//! The runnable examples walk through each stage; start with
//! `cargo run --release --example chsh_reference`. The `combbell` binary
//! wraps the same pipeline behind scenario files.

pub mod bell;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod jsa;
pub mod linalg;
pub mod orthant;
pub mod pixel;
pub mod scenario;
pub mod search;
pub mod subtraction;

pub use error::{Error, Result};
