//! Max-min rate and energy-efficiency resource allocation for RIS-aided
//! multi-cell MIMO broadcast channels with rate splitting and
//! finite-blocklength coding.
//!
//! The numerical code is generic over the real scalar type (see
//! [`scalar::Real`]); the aliases at the crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod optimizer;
pub mod rates;
pub mod scalar;
pub mod split;
pub mod surrogate;
pub mod wire;

pub use channel::{draw_channels, effective_channel, ris_scattering_matrix, GeometryModel};
pub use error::{Error, Result};
pub use kernel::SolverOptions;
pub use model::{
    transmit_covariance, transmit_power, validate_config, FeasibilitySet, NetworkConfig,
    ObjectiveKind, RateModel, Scheme, StreamMode,
};
pub use objective::DesignContext;
pub use optimizer::{
    evaluate_allocation, evaluate_allocation_with, initialize, optimize, single_stream_rate,
    AllocationReport, Modes, OptimizerOptions, RisMode,
};
pub use scalar::Real;

/// Channel realization over `f64`.
pub type ChannelSet = channel::ChannelSet<f64>;
/// Precoders over `f64`.
pub type PrecoderSet = model::PrecoderSet<f64>;
/// RIS coefficients over `f64`.
pub type RisPhases = model::RisPhases<f64>;
/// Common-rate split over `f64`.
pub type CommonRateSplit = model::CommonRateSplit<f64>;
/// Allocation over `f64`.
pub type Allocation = model::Allocation<f64>;
