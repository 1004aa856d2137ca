//! Sampler diagnostics, correctness harnesses and prior sensitivity.

mod gir;
mod mcmc;
mod oracle;
mod sensitivity;

pub use gir::{getting_it_right, GirConfig, GirReport, GirRow};
pub use mcmc::{effective_sample_size, geweke_z, mcse};
pub use oracle::{
    conjugate_checks, mh_checks, oracle_suite, OracleCheck, KS_TOLERANCE, MOMENT_TOLERANCE,
};
pub use sensitivity::{
    ig_label, ig_prior_sensitivity, max_adjacent_jump, max_mcse_discrepancy, phi_label,
    sensitivity_sweep, SensitivityGrid, SensitivityRow, SensitivityTable,
};
