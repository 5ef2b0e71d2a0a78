//! Radially symmetric minimizers of aggregation free energies
//! `F(u) = ∫Φ(u) - ½∬u(x)K(x-y)u(y)`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criticality;
pub mod energy;
pub mod ensemble;
pub mod entropy;
pub mod error;
pub mod interaction;
pub mod kernel;
pub mod minimizer;
pub mod plot;
pub mod quadrature;
pub mod radial;
pub mod rearrangement;
pub mod runner;

pub use energy::{FreeEnergy, FreeEnergyReport};
pub use entropy::EntropyLaw;
pub use error::{Error, Result};
pub use interaction::InteractionOperator;
pub use kernel::{Kernel, KernelShape};
pub use minimizer::{minimize, FlowConfig, MinimizeResult, Outcome, Scheme};
pub use radial::{Dimension, Profile, RadialGrid};
