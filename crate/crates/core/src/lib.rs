//! Exact computation, simulation and asymptotic prediction for the coupon
//! collector problem with group drawings: each draw is a uniformly random set
//! of `s` distinct coupons out of `n`, and `Y` counts draws until every
//! coupon has been seen.

pub mod analysis;
pub mod asymptotics;
pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod hypergeom;
pub mod instance;
pub mod montecarlo;
pub mod pmf;
pub mod sum;

pub use error::{Error, Result};
pub use instance::{DerivedIndices, Instance, RegimeSpec, TruncationControl};
pub use pmf::{ExactPmf, PmfTable};
