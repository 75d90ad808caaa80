//! Declarative scenario configuration, runners, and report output.

mod config;
mod report;
mod run;

pub use config::{
    validate_config, validate_config_str, LossConfig, MotConfig, PlanConfig, ScanConfig,
    Scenario, ScenarioConfig,
};
pub use report::{Expectation, ExpectationResult, Metric, ScenarioReport};
pub use run::run_scenario;
