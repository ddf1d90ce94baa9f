//! Analytic term structures of the first four conditional moments of
//! forward and aggregated returns and variances under a GJR-GARCH(1,1)
//! process with generic innovations, their infinite-horizon limits, and
//! four-moment approximate predictive distributions, together with the
//! Monte Carlo, goodness-of-fit and estimation machinery used to validate
//! them.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod error;
pub mod estimate;
pub mod gof;
pub mod innovation;
pub mod limits;
pub mod model;
pub mod moments_aggregated;
pub mod moments_forward;
pub mod quadrature;
pub mod simulate;
pub mod summation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/forward.md")]
    mod forward {}
    #[doc = include_str!("../../../book/src/aggregated.md")]
    mod aggregated {}
    #[doc = include_str!("../../../book/src/cross_moments.md")]
    mod cross_moments {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
    #[doc = include_str!("../../../book/src/densities.md")]
    mod densities {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
