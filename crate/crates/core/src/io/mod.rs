//! Panel CSV, run configuration and output files.

mod config;
mod panel;

pub use config::{ModelSection, PriorSection, RoleColumns, RunConfig, SamplerSection};
pub use panel::{parse_panel, read_panel, save_panel, write_panel};
