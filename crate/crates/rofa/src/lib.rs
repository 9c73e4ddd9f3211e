//! Experiment harness around `rofa-core`: scenario files, named presets,
//! Monte Carlo runners and CSV output.
//!
//! Every trial draws from its own `RngStream` keyed by the scenario seed
//! and the trial's position on the sweep, so results do not depend on
//! thread scheduling and variants at the same point share random numbers.

pub mod config;
mod error;
pub mod experiments;
pub mod output;
pub mod presets;
pub mod sim;

pub use config::Scenario;
pub use error::{Error, Result};
pub use output::MetricRow;

/// Runs a validated scenario and returns its rows in output order.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<MetricRow>> {
    scenario.validate()?;
    let mut rows = experiments::run(scenario)?;
    output::sort_rows(&mut rows);
    Ok(rows)
}
