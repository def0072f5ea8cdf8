//! Reduced-order feedback controllers from frequency-response samples.
//!
//! The pipeline follows the Loewner data-driven control method:
//!
//! 1. [`plants`] samples a (possibly irrational) plant on a frequency grid.
//! 2. [`hardy`] and [`unstable`] estimate its right-half-plane poles and
//!    zeros from stable/antistable projections of the data.
//! 3. [`refmodel`] corrects the desired closed loop so that it is
//!    achievable and computes the ideal controller's response.
//! 4. [`loewner`] interpolates that response with a descriptor system and
//!    reduces it.
//! 5. [`certify`] checks the reduced controllers with a small-gain bound and
//!    a projection test on the reconstructed closed loop.
//!
//! [`pipeline`] runs the whole chain from a TOML configuration and writes
//! the artifacts used by the `lddc` command-line tool.

pub mod certify;
pub mod error;
pub mod hardy;
pub mod linalg;
pub mod loewner;
pub mod pipeline;
pub mod plants;
pub mod poly;
pub mod refmodel;
pub mod report;
pub mod scenarios;
pub mod unstable;

pub use error::{Error, Result};
pub use num_complex::Complex64;
