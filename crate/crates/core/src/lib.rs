//! Spatially controlled amplify-and-forward relay beamforming.
//!
//! Mobile relays sit between a fixed source and destination. Every slot they
//! beamform optimally with the channel they observe, then each relay picks
//! its next grid cell by maximizing a prediction of its own SINR
//! contribution, conditioned on everything observed so far. The crate
//! contains the correlated channel model and its sampler ([`channel`]),
//! conditional-Gaussian prediction ([`gaussian`]), the closed-form
//! beamforming value ([`beamform`]), the decision rules ([`policy`]) and the
//! Monte-Carlo engine ([`sim`]). The [`cli`] module backs the `relaysim`
//! binary.

pub mod beamform;
pub mod channel;
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod policy;
pub mod quadrature;
pub mod sim;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/prediction.md")]
    mod prediction {}
    #[doc = include_str!("../../../book/src/beamforming.md")]
    mod beamforming {}
    #[doc = include_str!("../../../book/src/policies.md")]
    mod policies {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
