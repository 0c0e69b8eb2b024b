//! Freshness evaluation for AI-edge LEO satellite downlinks.
//!
//! The library models a single LEO satellite serving a population of ground
//! users over a composite channel (free-space path loss, rain attenuation,
//! Rician small-scale fading), maps the resulting SNR to a per-user
//! classification success probability, and evaluates information freshness
//! through the Age of Misclassified Information (AoMI):
//!
//! - [`channel`] — link geometry, path loss, rain, Rician fading, SNR
//! - [`scheme`] — transceiver scheme descriptors (symbol counts, delays)
//! - [`accuracy`] — SNR-to-accuracy profiles and fading-averaged accuracy
//! - [`shs`] — stochastic-hybrid-system closed form for the average AoMI
//! - [`sim`] — event-driven Monte Carlo oracle for the same SHS model
//! - [`experiment`] — scenario files, population sampling, power sweeps, CSV output

pub mod accuracy;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod rng;
pub mod scheme;
pub mod shs;
pub mod sim;
pub mod units;

pub use error::{Error, Result};
