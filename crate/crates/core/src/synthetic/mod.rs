//! Forward simulation of the model and the oracles used to validate the
//! sampler.

pub mod geweke;
mod oracle;
mod scenario;
mod simulate;

pub use geweke::{geweke_test, GewekeConfig, GewekeReport, GewekeRow};
pub use oracle::conjugate_oracle;
pub use scenario::{CovariateProcess, ScenarioConfig, ShockEpisode, TruthConfig};
pub use simulate::{
    draw_from_prior, flat_truth, generate_panel, hourly_file, ingest_synthetic, simulate_scenario,
    simulate_targets, simulate_targets_from, SyntheticPanel, TrueParameters, DAILY_FILE, SCENARIO_FILE,
    TRUTH_FILE,
};
