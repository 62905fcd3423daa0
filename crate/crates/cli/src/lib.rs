//! Config-driven experiment runner for the `aisdd` simulator.

pub mod analyze;
pub mod config;
pub mod plot;
pub mod run;

pub use analyze::{analyze_dir, read_trace_csv, Analysis};
pub use config::{parse_value, ConfigErrors, RunConfig};
pub use plot::{emit_plot_data, PlotError, Series};
pub use run::{output_root, run_experiment, Report, OUT_ENV};
