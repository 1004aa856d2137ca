//! Gibbs sampler with data augmentation for the selection model.

mod chain;
pub(crate) use chain::flatten_state;
mod config;
mod layout;
mod sampler;

pub use chain::{
    parameter_names, run_chain, run_measurement_only, run_with_mode, ChainOutput, ParamSummary,
};
pub use config::{AdaptationConfig, FaultInjection, SamplerConfig};
pub use layout::{AugSlot, FitMode, Layout};
pub use sampler::{Counter, Sampler, SamplerState};

#[cfg(test)]
mod tests;
