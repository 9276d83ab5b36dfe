//! Source model: the pump is split by the first Savart plate, rotated to V by
//! the first segmented half-wave plate, down-converted into |VV⟩ pairs on each
//! path, rotated to |++⟩ / |−−⟩ by the second segmented plate, and recombined
//! by the (tilted) second Savart plate.
//!
//! Also holds the photon-rate and loss budget of the source.

use std::f64::consts::FRAC_PI_8;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::birefringence::{tilt_phase, Element, SavartPlate, TiltedElement, MAX_TILT};
use crate::error::{ensure_finite, ensure_fraction, Error, Result};
use crate::polcalc::{bell_phi, half_wave_plate, JonesMatrix, JonesVector, TwoPhotonState, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossBudget {
    /// Product of the bulk optics transmissions.
    pub component_transmission: f64,
    /// Fraction of each photon's ring clipped at the segmented plate seam.
    pub shwp_interface_loss: f64,
    /// Extra loss from diffraction and scatter at the knife-edge mirror.
    pub knife_edge_loss: f64,
    pub fiber_coupling: f64,
    pub detector_efficiency: f64,
}

impl Default for LossBudget {
    fn default() -> Self {
        LossBudget {
            component_transmission: 0.78,
            shwp_interface_loss: 0.10,
            knife_edge_loss: 0.15,
            fiber_coupling: 0.335,
            detector_efficiency: 0.60,
        }
    }
}

impl LossBudget {
    pub fn lossless() -> Self {
        LossBudget {
            component_transmission: 1.0,
            shwp_interface_loss: 0.0,
            knife_edge_loss: 0.0,
            fiber_coupling: 1.0,
            detector_efficiency: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_fraction("component_transmission", self.component_transmission)?;
        ensure_fraction("shwp_interface_loss", self.shwp_interface_loss)?;
        ensure_fraction("knife_edge_loss", self.knife_edge_loss)?;
        ensure_fraction("fiber_coupling", self.fiber_coupling)?;
        ensure_fraction("detector_efficiency", self.detector_efficiency)
    }

    /// Probability that one photon of a pair reaches its detector and clicks.
    pub fn arm_transmission(&self) -> f64 {
        self.component_transmission
            * (1.0 - self.shwp_interface_loss)
            * (1.0 - self.knife_edge_loss)
            * self.fiber_coupling
            * self.detector_efficiency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spectral {
    pub spdc_fwhm_nm: f64,
    pub filter_fwhm_nm: f64,
}

impl Default for Spectral {
    fn default() -> Self {
        Spectral {
            spdc_fwhm_nm: 22.0,
            filter_fwhm_nm: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub pump_power_mw: f64,
    /// Pairs generated in the crystal per second per mW, before filtering.
    pub pair_generation_rate_per_mw: f64,
    /// Yaw tilt of the second Savart plate.
    pub tilt_theta_rad: f64,
    pub intrinsic_visibility: f64,
    pub signal_wavelength_nm: f64,
    /// Output beam separation of the second Savart plate.
    pub sp2_net_shear_mm: f64,
    /// Static phase added to the tilt-induced one.
    pub phase_offset_rad: f64,
    pub loss_budget: LossBudget,
    pub spectral: Spectral,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            pump_power_mw: 2.6,
            pair_generation_rate_per_mw: 1.62e7,
            tilt_theta_rad: 0.0,
            intrinsic_visibility: 0.99,
            signal_wavelength_nm: 810.0,
            sp2_net_shear_mm: 1.0,
            phase_offset_rad: 0.0,
            loss_budget: LossBudget::default(),
            spectral: Spectral::default(),
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pump_power_mw", self.pump_power_mw),
            ("pair_generation_rate_per_mw", self.pair_generation_rate_per_mw),
            ("signal_wavelength_nm", self.signal_wavelength_nm),
            ("sp2_net_shear_mm", self.sp2_net_shear_mm),
            ("tilt_theta_rad", self.tilt_theta_rad),
            ("phase_offset_rad", self.phase_offset_rad),
        ] {
            ensure_finite(name, v)?;
        }
        if self.pump_power_mw < 0.0 || self.pair_generation_rate_per_mw < 0.0 {
            return Err(Error::InvalidArgument("rates and pump power must be ≥ 0".into()));
        }
        if self.signal_wavelength_nm <= 0.0 || self.sp2_net_shear_mm <= 0.0 {
            return Err(Error::InvalidArgument("wavelength and shear must be positive".into()));
        }
        if self.tilt_theta_rad.abs() >= MAX_TILT {
            return Err(Error::InvalidArgument("tilt outside |θ| < π/4".into()));
        }
        if !(self.spectral.spdc_fwhm_nm > 0.0 && self.spectral.filter_fwhm_nm > 0.0) {
            return Err(Error::InvalidArgument("spectral widths must be positive".into()));
        }
        ensure_fraction("intrinsic_visibility", self.intrinsic_visibility)?;
        self.loss_budget.validate()
    }

    pub fn sp2(&self) -> Result<SavartPlate> {
        SavartPlate::calcite_with_net_shear(self.sp2_net_shear_mm)
    }

    /// A degenerate pair crossing the plate accumulates twice the
    /// single-photon phase, i.e. the phase at half the signal wavelength.
    pub fn biphoton_wavelength_nm(&self) -> f64 {
        self.signal_wavelength_nm / 2.0
    }

    /// Two-photon phase φ for a given tilt of the second Savart plate.
    pub fn phase_at(&self, theta: f64) -> Result<f64> {
        let te = TiltedElement::new(Element::Savart(self.sp2()?), theta, self.biphoton_wavelength_nm())?;
        Ok(tilt_phase(&te) + self.phase_offset_rad)
    }

    /// Smallest |θ| at which the two-photon phase reaches `target` (radians),
    /// found by bisection on the monotone branch through θ = 0.
    pub fn tilt_for_phase(&self, target: f64) -> Result<f64> {
        let f = |t: f64| self.phase_at(t).map(|p| p - target);
        let f0 = f(0.0)?;
        if f0 == 0.0 {
            return Ok(0.0);
        }
        // Expand outward until the target is bracketed on either side.
        let mut step = 1e-6;
        while step < MAX_TILT {
            for t in [step, -step] {
                if t.abs() >= MAX_TILT {
                    continue;
                }
                if f(t)?.signum() != f0.signum() {
                    let (mut lo, mut hi) = (0.0, t);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if f(mid)?.signum() == f0.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    return Ok(0.5 * (lo + hi));
                }
            }
            step *= 1.5;
        }
        Err(Error::InvalidArgument(format!(
            "phase {target} not reachable within the tilt range"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Path {
    Left,
    Right,
}

/// Path-resolved state at one point of the source.
#[derive(Debug, Clone, PartialEq)]
pub enum StageState {
    /// Single pump photon amplitude on each path.
    Pump(Vec<(Path, JonesVector)>),
    /// Pair amplitude on each path.
    Pairs(Vec<(Path, TwoPhotonState)>),
    /// Paths recombined.
    Output(TwoPhotonState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub label: &'static str,
    pub state: StageState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineTrace {
    pub steps: Vec<TraceStep>,
    pub phase: f64,
    pub output: TwoPhotonState,
}

impl PipelineTrace {
    pub fn step(&self, label: &str) -> Option<&StageState> {
        self.steps.iter().find(|s| s.label == label).map(|s| &s.state)
    }
}

/// Segment of a segmented half-wave plate acting on each path. The left
/// path carries |+⟩ after the first Savart plate, the right path |−⟩.
fn shwp_segment(path: Path) -> JonesMatrix {
    match path {
        Path::Left => half_wave_plate(-FRAC_PI_8),
        Path::Right => half_wave_plate(FRAC_PI_8),
    }
}

/// Runs the pump through the source and records every intermediate state.
pub fn evolve_trace(cfg: &SourceConfig) -> Result<PipelineTrace> {
    cfg.validate()?;
    let mut steps = Vec::with_capacity(6);
    let pump = JonesVector::vertical();
    steps.push(TraceStep {
        label: "pump",
        state: StageState::Pump(vec![(Path::Left, pump)]),
    });

    let sp1 = SavartPlate::calcite_with_net_shear(1.0)?;
    let [plus, minus] = sp1.split(&pump, [0.0, 0.0]);
    let split = vec![(Path::Left, plus.polarization), (Path::Right, minus.polarization)];
    steps.push(TraceStep {
        label: "sp1",
        state: StageState::Pump(split.clone()),
    });

    let rotated: Vec<(Path, JonesVector)> = split.iter().map(|(p, v)| (*p, shwp_segment(*p).apply(v))).collect();
    steps.push(TraceStep {
        label: "shwp1",
        state: StageState::Pump(rotated.clone()),
    });

    // Type-0 conversion: only the V component of the pump makes |VV⟩ pairs,
    // inheriting the pump amplitude on that path.
    let vv = TwoPhotonState::product(&JonesVector::vertical(), &JonesVector::vertical());
    let raw: Vec<(Path, TwoPhotonState)> = rotated.iter().map(|(p, v)| (*p, vv.scale(v.v))).collect();
    let norm: f64 = raw.iter().map(|(_, s)| s.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ContractViolation(
            "no V-polarized pump reaches the crystal".into(),
        ));
    }
    let pairs: Vec<(Path, TwoPhotonState)> = raw.iter().map(|(p, s)| (*p, s.scale(C64::from(1.0 / norm)))).collect();
    steps.push(TraceStep {
        label: "spdc",
        state: StageState::Pairs(pairs.clone()),
    });

    let rotated_pairs: Vec<(Path, TwoPhotonState)> = pairs
        .iter()
        .map(|(p, s)| {
            let m = shwp_segment(*p);
            (*p, crate::polcalc::tensor_apply(&m, &m, s))
        })
        .collect();
    steps.push(TraceStep {
        label: "shwp2",
        state: StageState::Pairs(rotated_pairs.clone()),
    });

    let phase = cfg.phase_at(cfg.tilt_theta_rad)?;
    let output = rotated_pairs
        .iter()
        .map(|(p, s)| match p {
            Path::Left => *s,
            Path::Right => s.scale(C64::from_polar(1.0, phase)),
        })
        .fold(
            TwoPhotonState {
                amps: [C64::new(0.0, 0.0); 4],
            },
            |acc, s| acc.add(&s),
        );
    steps.push(TraceStep {
        label: "sp2",
        state: StageState::Output(output),
    });

    Ok(PipelineTrace { steps, phase, output })
}

/// Output polarization state of the source.
pub fn evolve_state(cfg: &SourceConfig) -> Result<TwoPhotonState> {
    Ok(evolve_trace(cfg)?.output)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub theta: f64,
    pub phi: f64,
    /// Normalized coincidence probability (1 + V·cos φ)/2.
    pub probability: f64,
}

/// Coincidence probability after an H projection of both photons and a
/// 50/50 fibre split, as the second Savart plate is tilted.
pub fn interference_scan(cfg: &SourceConfig, theta_grid: &[f64]) -> Result<Vec<ScanPoint>> {
    cfg.validate()?;
    if theta_grid.is_empty() {
        return Err(Error::InvalidArgument("tilt grid is empty".into()));
    }
    let v = cfg.intrinsic_visibility;
    theta_grid
        .iter()
        .map(|&theta| {
            let phi = cfg.phase_at(theta)?;
            Ok(ScanPoint {
                theta,
                phi,
                probability: (1.0 + v * phi.cos()) / 2.0,
            })
        })
        .collect()
}

/// Ideal-state check of the same curve: |⟨H,H|bell_phi(φ)⟩|² normalized to
/// its maximum of ½. Clamped so rounding never leaves [0, 1].
pub fn ideal_h_projection(phi: f64) -> f64 {
    let h = JonesVector::horizontal();
    (2.0 * crate::polcalc::project(&bell_phi(phi), &h, &h).expect("normalized Bell state")).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub singles_a: f64,
    pub singles_b: f64,
    pub coincidences: f64,
    /// CC / mean per-arm singles.
    pub heralding_eta: f64,
    /// CC / (S_A + S_B), the summed-singles convention.
    pub heralding_eta_summed: f64,
    pub detected_brightness: f64,
    pub emitted_brightness: f64,
    pub spectral_factor: f64,
}

/// Fraction of a Gaussian spectrum of width `spdc_fwhm` passed by an ideal
/// flat-top filter of width `filter_fwhm` centred on it.
pub fn spectral_filter_factor(spdc_fwhm_nm: f64, filter_fwhm_nm: f64) -> Result<f64> {
    if !(spdc_fwhm_nm > 0.0 && filter_fwhm_nm > 0.0) {
        return Err(Error::InvalidArgument("spectral widths must be positive".into()));
    }
    // σ = FWHM/(2√(2 ln 2)); the band ±w/2 covers erf(w/(2√2 σ)) = erf(√ln2·w/FWHM).
    Ok(libm::erf(std::f64::consts::LN_2.sqrt() * filter_fwhm_nm / spdc_fwhm_nm))
}

pub fn rate_report(cfg: &SourceConfig) -> Result<RateReport> {
    cfg.validate()?;
    let spectral = spectral_filter_factor(cfg.spectral.spdc_fwhm_nm, cfg.spectral.filter_fwhm_nm)?;
    let pairs = cfg.pump_power_mw * cfg.pair_generation_rate_per_mw * spectral;
    let t = cfg.loss_budget.arm_transmission();
    let singles = pairs * t;
    let cc = pairs * t * t;
    if cc == 0.0 {
        return Ok(RateReport {
            singles_a: singles,
            singles_b: singles,
            coincidences: 0.0,
            heralding_eta: 0.0,
            heralding_eta_summed: 0.0,
            detected_brightness: 0.0,
            emitted_brightness: 0.0,
            spectral_factor: spectral,
        });
    }
    let eta = cc / singles;
    let detected = cc / cfg.pump_power_mw;
    Ok(RateReport {
        singles_a: singles,
        singles_b: singles,
        coincidences: cc,
        heralding_eta: eta,
        heralding_eta_summed: cc / (2.0 * singles),
        detected_brightness: detected,
        emitted_brightness: detected / (eta * eta),
        spectral_factor: spectral,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Routing {
    ToAlice,
    ToBob,
    Lost,
}

/// Routes one photon at the knife-edge mirror: positive transverse momentum
/// goes to Alice, negative to Bob, and photons exactly on the edge are lost.
/// Surviving photons are still dropped with probability `edge_loss`.
pub fn knife_edge_split<R: Rng + ?Sized>(momentum_sign: i8, edge_loss: f64, rng: &mut R) -> Result<Routing> {
    ensure_fraction("edge_loss", edge_loss)?;
    let side = match momentum_sign.signum() {
        1 => Routing::ToAlice,
        -1 => Routing::ToBob,
        _ => return Ok(Routing::Lost),
    };
    if edge_loss > 0.0 && rng.random::<f64>() < edge_loss {
        Ok(Routing::Lost)
    } else {
        Ok(side)
    }
}

/// Routes both photons of a pair whose signal photon has `signal_sign`.
pub fn route_pair<R: Rng + ?Sized>(signal_sign: i8, edge_loss: f64, rng: &mut R) -> Result<(Routing, Routing)> {
    let signal = knife_edge_split(signal_sign, edge_loss, rng)?;
    let idler = knife_edge_split(-signal_sign, edge_loss, rng)?;
    Ok((signal, idler))
}
