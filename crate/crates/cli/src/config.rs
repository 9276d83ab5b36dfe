//! Scenario configs. Files are sectioned TOML; every section rejects unknown
//! keys and missing keys take the defaults below.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use spades_core::beamprop::WalkoffSetup;
use spades_core::detection::CountRates;
use spades_core::pipeline::SourceConfig;

use crate::{invalid_config, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scenario {
    Interference,
    Chsh,
    Walkoff,
    Sensitivity,
    Rates,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Interference,
        Scenario::Chsh,
        Scenario::Walkoff,
        Scenario::Sensitivity,
        Scenario::Rates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Interference => "interference",
            Scenario::Chsh => "chsh",
            Scenario::Walkoff => "walkoff",
            Scenario::Sensitivity => "sensitivity",
            Scenario::Rates => "rates",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_seed() -> u64 {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Coincidence counting parameters shared by the counting scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Counting {
    pub duration_s: f64,
    pub window_ns: f64,
    /// Multiplier on the S_A·S_B·τ accidental mean.
    pub accidental_scale: f64,
    pub dark_count_rate: f64,
    pub dead_time_ns: f64,
}

impl Default for Counting {
    fn default() -> Self {
        Counting {
            duration_s: 1.0,
            window_ns: 1.0,
            accidental_scale: 1.0,
            dark_count_rate: 0.0,
            dead_time_ns: 0.0,
        }
    }
}

impl Counting {
    pub fn window_s(&self) -> f64 {
        self.window_ns * 1e-9
    }

    pub fn rates(&self, pair_rate: f64, singles_a: f64, singles_b: f64) -> CountRates {
        CountRates {
            pair_rate,
            singles_a,
            singles_b,
            accidental_scale: self.accidental_scale,
            dark_count_rate: self.dark_count_rate,
            dead_time_s: self.dead_time_ns * 1e-9,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("counting.duration_s", self.duration_s),
            ("counting.window_ns", self.window_ns),
            ("counting.accidental_scale", self.accidental_scale),
            ("counting.dark_count_rate", self.dark_count_rate),
            ("counting.dead_time_ns", self.dead_time_ns),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Config(format!("{name} must be finite and ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TiltScan {
    pub theta_min_rad: f64,
    pub theta_max_rad: f64,
    pub points: usize,
}

impl Default for TiltScan {
    fn default() -> Self {
        TiltScan {
            theta_min_rad: -1e-3,
            theta_max_rad: 1e-3,
            points: 81,
        }
    }
}

impl TiltScan {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| self.theta_min_rad + (self.theta_max_rad - self.theta_min_rad) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_directory: PathBuf,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub counting: Counting,
    #[serde(default)]
    pub scan: TiltScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChshSettings {
    /// Alice LC phases sampled uniformly over one period.
    pub alice_points: usize,
    /// Bob's two LC phases b and b'.
    pub bob_phases_rad: Vec<f64>,
    /// Exact probabilities instead of Poisson counts.
    pub analytic: bool,
}

impl Default for ChshSettings {
    fn default() -> Self {
        ChshSettings {
            alice_points: 32,
            bob_phases_rad: vec![0.0, FRAC_PI_2],
            analytic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_directory: PathBuf,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub counting: Counting,
    #[serde(default)]
    pub chsh: ChshSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacerSpec {
    pub thickness_mm: f64,
    /// Measured lateral shear; the geometric value is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_shear_mm: Option<f64>,
}

impl Default for DisplacerSpec {
    fn default() -> Self {
        DisplacerSpec {
            thickness_mm: 8.73,
            measured_shear_mm: Some(1.010),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SavartSpec {
    pub net_shear_mm: f64,
}

impl Default for SavartSpec {
    fn default() -> Self {
        SavartSpec { net_shear_mm: 0.972 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkoffConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_directory: PathBuf,
    /// 1σ camera error on each fitted beam radius.
    #[serde(default = "default_radius_noise")]
    pub radius_noise_um: f64,
    #[serde(default)]
    pub setup: WalkoffSetup,
    #[serde(default)]
    pub displacer: DisplacerSpec,
    #[serde(default)]
    pub savart: SavartSpec,
    #[serde(default = "default_nir")]
    pub nir_displacer: DisplacerSpec,
}

/// Gives the fitted separation an uncertainty of about 0.03 mm.
fn default_radius_noise() -> f64 {
    1.5
}

fn default_nir() -> DisplacerSpec {
    DisplacerSpec {
        thickness_mm: 11.26,
        measured_shear_mm: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Savart,
    Displacer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivitySettings {
    pub wavelength_nm: f64,
    /// Output beam separation shared by both elements.
    pub shear_mm: f64,
    pub pivot_distance_mm: f64,
    pub motor_start_um: f64,
    pub motor_stop_um: f64,
    pub points: usize,
    /// Mean camera counts at a bright fringe.
    pub peak_counts: f64,
    /// Element measured in the "sp" column; `displacer` gives a
    /// self-comparison.
    pub test_element: ElementKind,
}

impl Default for SensitivitySettings {
    fn default() -> Self {
        SensitivitySettings {
            wavelength_nm: 810.0,
            shear_mm: 1.0,
            pivot_distance_mm: 80.0,
            motor_start_um: 0.0,
            motor_stop_um: 1600.0,
            points: 321,
            peak_counts: 1e4,
            test_element: ElementKind::Savart,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_directory: PathBuf,
    #[serde(default)]
    pub sensitivity: SensitivitySettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_directory: PathBuf,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub counting: Counting,
}

/// Common handling of the top-level keys.
pub trait ScenarioConfig: Serialize + DeserializeOwned + Clone {
    const SCENARIO: Scenario;
    fn scenario_key(&self) -> Option<&str>;
    fn seed_mut(&mut self) -> &mut u64;
    fn output_directory_mut(&mut self) -> &mut PathBuf;
    fn validate(&self) -> Result<(), CliError>;
}

macro_rules! common_fields {
    ($t:ty, $s:expr) => {
        impl ScenarioConfig for $t {
            const SCENARIO: Scenario = $s;
            fn scenario_key(&self) -> Option<&str> {
                self.scenario.as_deref()
            }
            fn seed_mut(&mut self) -> &mut u64 {
                &mut self.seed
            }
            fn output_directory_mut(&mut self) -> &mut PathBuf {
                &mut self.output_directory
            }
            fn validate(&self) -> Result<(), CliError> {
                self.check()
            }
        }
    };
}

common_fields!(InterferenceConfig, Scenario::Interference);
common_fields!(ChshConfig, Scenario::Chsh);
common_fields!(WalkoffConfig, Scenario::Walkoff);
common_fields!(SensitivityConfig, Scenario::Sensitivity);
common_fields!(RatesConfig, Scenario::Rates);

impl InterferenceConfig {
    fn check(&self) -> Result<(), CliError> {
        self.source.validate().map_err(invalid_config)?;
        self.counting.validate()?;
        let s = &self.scan;
        if s.points < 5 || !(s.theta_max_rad > s.theta_min_rad) {
            return Err(CliError::Config(
                "scan needs ≥ 5 points and theta_max_rad > theta_min_rad".into(),
            ));
        }
        if s.theta_min_rad.abs() >= spades_core::birefringence::MAX_TILT
            || s.theta_max_rad.abs() >= spades_core::birefringence::MAX_TILT
        {
            return Err(CliError::Config("scan tilt outside |θ| < π/4".into()));
        }
        Ok(())
    }
}

impl ChshConfig {
    fn check(&self) -> Result<(), CliError> {
        self.source.validate().map_err(invalid_config)?;
        self.counting.validate()?;
        if self.chsh.alice_points < 4 {
            return Err(CliError::Config("chsh.alice_points must be ≥ 4".into()));
        }
        if self.chsh.bob_phases_rad.len() != 2 || self.chsh.bob_phases_rad.iter().any(|b| !b.is_finite()) {
            return Err(CliError::Config(
                "chsh.bob_phases_rad must hold exactly two finite phases".into(),
            ));
        }
        Ok(())
    }
}

impl WalkoffConfig {
    fn check(&self) -> Result<(), CliError> {
        if !(self.radius_noise_um.is_finite() && self.radius_noise_um >= 0.0) {
            return Err(CliError::Config("radius_noise_um must be finite and ≥ 0".into()));
        }
        for (name, d) in [("displacer", &self.displacer), ("nir_displacer", &self.nir_displacer)] {
            if !(d.thickness_mm.is_finite() && d.thickness_mm > 0.0) {
                return Err(CliError::Config(format!("{name}.thickness_mm must be positive")));
            }
            if let Some(s) = d.measured_shear_mm {
                if !(s.is_finite() && s > 0.0) {
                    return Err(CliError::Config(format!("{name}.measured_shear_mm must be positive")));
                }
            }
        }
        if !(self.savart.net_shear_mm.is_finite() && self.savart.net_shear_mm > 0.0) {
            return Err(CliError::Config("savart.net_shear_mm must be positive".into()));
        }
        Ok(())
    }
}

impl SensitivityConfig {
    fn check(&self) -> Result<(), CliError> {
        let s = &self.sensitivity;
        for (name, v) in [
            ("wavelength_nm", s.wavelength_nm),
            ("shear_mm", s.shear_mm),
            ("pivot_distance_mm", s.pivot_distance_mm),
            ("peak_counts", s.peak_counts),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("sensitivity.{name} must be positive")));
            }
        }
        if s.points < 5 || !(s.motor_stop_um > s.motor_start_um) {
            return Err(CliError::Config(
                "sensitivity scan needs ≥ 5 points and motor_stop_um > motor_start_um".into(),
            ));
        }
        let max_theta = (s.motor_start_um.abs().max(s.motor_stop_um.abs()) * 1e-3 / s.pivot_distance_mm).atan();
        if max_theta >= spades_core::birefringence::MAX_TILT {
            return Err(CliError::Config("motor range tilts beyond π/4".into()));
        }
        Ok(())
    }
}

impl RatesConfig {
    fn check(&self) -> Result<(), CliError> {
        self.source.validate().map_err(invalid_config)?;
        self.counting.validate()
    }
}

/// Parses and validates a config, applying command-line overrides.
pub fn parse<T: ScenarioConfig>(text: &str, seed: Option<u64>, out: Option<PathBuf>) -> Result<T, CliError> {
    let mut cfg: T = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(name) = cfg.scenario_key() {
        if name != T::SCENARIO.name() {
            return Err(CliError::Config(format!(
                "config is for scenario '{name}', not '{}'",
                T::SCENARIO
            )));
        }
    }
    if let Some(s) = seed {
        *cfg.seed_mut() = s;
    }
    if let Some(o) = out {
        *cfg.output_directory_mut() = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The config with every default filled in, as TOML.
pub fn effective<T: ScenarioConfig>(cfg: &T) -> String {
    toml::to_string(cfg).expect("configs serialize")
}
