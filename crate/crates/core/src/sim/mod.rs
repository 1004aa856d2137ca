//! Simulation designs, baseline estimators and replicate studies.

mod design;
mod generate;
mod methods;
mod replicate;

pub use design::{generate_dataset, SimDesign, Variant, DATA_TAG};
pub use generate::{simulate, SimulatedData, Skeleton};
pub use methods::{fit_available_case, fit_complete_case, fit_method, Method};
pub use replicate::{
    dropout_fractions, reported_parameters, run_replicates, DropoutRow, Estimate, ReplicateReport,
    ReportRow,
};
