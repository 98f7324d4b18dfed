//! Lattice strategies for the Gaussian dirty multiple-access channel.
//!
//! The crate covers the channel models, the canonical dithered
//! modulo-lattice transmission scheme and its preset parameterizations, the
//! closed-form inner and outer rate bounds with their gap constants, and a
//! one-dimensional numerical entropy engine that evaluates the information
//! rates of the simulated schemes exactly up to grid resolution.

pub mod bounds;
pub mod channel;
pub mod entropy;
pub mod envelope;
pub mod lattice;
pub mod region;
pub mod roots;
pub mod schemes;
pub mod stats;

pub use channel::{ChannelError, ChannelKind, InterferenceSpec, PowerConfig};
pub use lattice::{Lattice, LatticeError};
