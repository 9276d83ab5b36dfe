pub mod chsh;
pub mod interference;
pub mod rates;
pub mod sensitivity;
pub mod walkoff;

use std::path::PathBuf;

use crate::config::{self, Scenario};
use crate::{CliError, Report};

/// Standard error of a count, floored at one count so empty bins still
/// carry weight in a fit.
pub(crate) fn count_sigma(n: f64) -> f64 {
    n.abs().max(1.0).sqrt()
}

/// Runs `scenario` from config text. Returns the report and the directory it
/// should be written to.
pub fn run(
    scenario: Scenario,
    text: &str,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(Report, PathBuf), CliError> {
    match scenario {
        Scenario::Interference => {
            let cfg: config::InterferenceConfig = config::parse(text, seed, out)?;
            Ok((interference::run(&cfg)?.report, cfg.output_directory))
        }
        Scenario::Chsh => {
            let cfg: config::ChshConfig = config::parse(text, seed, out)?;
            Ok((chsh::run(&cfg)?.report, cfg.output_directory))
        }
        Scenario::Walkoff => {
            let cfg: config::WalkoffConfig = config::parse(text, seed, out)?;
            Ok((walkoff::run(&cfg)?.report, cfg.output_directory))
        }
        Scenario::Sensitivity => {
            let cfg: config::SensitivityConfig = config::parse(text, seed, out)?;
            Ok((sensitivity::run(&cfg)?.report, cfg.output_directory))
        }
        Scenario::Rates => {
            let cfg: config::RatesConfig = config::parse(text, seed, out)?;
            Ok((rates::run(&cfg)?.report, cfg.output_directory))
        }
    }
}
