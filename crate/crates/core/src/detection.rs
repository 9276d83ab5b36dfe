//! Photon counting: per-setting detection probabilities, Poissonian singles
//! and coincidences, accidental estimation and subtraction.

use std::f64::consts::FRAC_PI_4;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_fraction, Error, Result};
use crate::exec::Exec;
use crate::polcalc::{tensor_apply, waveplate, DensityMatrix2Q, JonesMatrix, JonesVector, TwoPhotonState};
use crate::report::format_float;

/// Detector behind the analyzing polarizer: 1 sees H, 2 sees V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    One,
    Two,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::One, Channel::Two];

    pub fn polarization(self) -> JonesVector {
        match self {
            Channel::One => JonesVector::horizontal(),
            Channel::Two => JonesVector::vertical(),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Channel::One => 1,
            Channel::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub alice_lc_phase: f64,
    pub bob_lc_phase: f64,
    pub alice_channel: Channel,
    pub bob_channel: Channel,
}

impl MeasurementSetting {
    /// The four channel combinations at fixed LC phases, ordered
    /// (1,1), (1,2), (2,1), (2,2).
    pub fn channel_set(alice_lc_phase: f64, bob_lc_phase: f64) -> [MeasurementSetting; 4] {
        let mk = |a, b| MeasurementSetting {
            alice_lc_phase,
            bob_lc_phase,
            alice_channel: a,
            bob_channel: b,
        };
        [
            mk(Channel::One, Channel::One),
            mk(Channel::One, Channel::Two),
            mk(Channel::Two, Channel::One),
            mk(Channel::Two, Channel::Two),
        ]
    }
}

/// Liquid-crystal retarder with its axis at 45°.
pub fn lc_retarder(phase: f64) -> Result<JonesMatrix> {
    waveplate(phase, FRAC_PI_4)
}

/// Coincidence probability for one setting, with the state degraded towards
/// the maximally mixed state: p = V·p_ideal + (1 − V)·p_mixed.
pub fn setting_probability(state: &TwoPhotonState, setting: &MeasurementSetting, visibility: f64) -> Result<f64> {
    ensure_fraction("visibility", visibility)?;
    let a = lc_retarder(setting.alice_lc_phase)?;
    let b = lc_retarder(setting.bob_lc_phase)?;
    let evolved = tensor_apply(&a, &b, state);
    let pa = setting.alice_channel.polarization();
    let pb = setting.bob_channel.polarization();
    let ideal = crate::polcalc::project(&evolved, &pa, &pb)?;
    // Unitaries leave I/4 unchanged, so only the projection matters.
    let mixed = DensityMatrix2Q::maximally_mixed().project(&pa, &pb);
    Ok(visibility * ideal + (1.0 - visibility) * mixed)
}

/// Mean rates feeding [`simulate_counts`] for one detector pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountRates {
    /// Detected coincidences per second for a setting of probability 1.
    pub pair_rate: f64,
    /// Singles on Alice's detector, including clicks from true pairs.
    pub singles_a: f64,
    pub singles_b: f64,
    /// Multiplier on the S_A·S_B·τ accidental mean.
    pub accidental_scale: f64,
    pub dark_count_rate: f64,
    /// Non-paralyzable dead time per detector.
    pub dead_time_s: f64,
}

impl Default for CountRates {
    fn default() -> Self {
        CountRates {
            pair_rate: 0.0,
            singles_a: 0.0,
            singles_b: 0.0,
            accidental_scale: 1.0,
            dark_count_rate: 0.0,
            dead_time_s: 0.0,
        }
    }
}

impl CountRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pair_rate", self.pair_rate),
            ("singles_a", self.singles_a),
            ("singles_b", self.singles_b),
            ("accidental_scale", self.accidental_scale),
            ("dark_count_rate", self.dark_count_rate),
            ("dead_time_s", self.dead_time_s),
        ] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        Ok(())
    }

    fn throughput(&self, rate: f64) -> f64 {
        1.0 / (1.0 + rate * self.dead_time_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub duration_s: f64,
    pub singles_a: u64,
    pub singles_b: u64,
    pub coincidences: u64,
    pub accidental_estimate: f64,
}

impl CountRecord {
    pub fn zero(duration_s: f64) -> Self {
        CountRecord {
            duration_s,
            singles_a: 0,
            singles_b: 0,
            coincidences: 0,
            accidental_estimate: 0.0,
        }
    }
}

pub const CSV_HEADER: &str = "setting_delta_a_rad,setting_delta_b_rad,ch_a,ch_b,duration_s,singles_a,singles_b,cc,acc";

pub fn csv_row(setting: &MeasurementSetting, rec: &CountRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        format_float(setting.alice_lc_phase),
        format_float(setting.bob_lc_phase),
        setting.alice_channel.index(),
        setting.bob_channel.index(),
        format_float(rec.duration_s),
        rec.singles_a,
        rec.singles_b,
        rec.coincidences,
        format_float(rec.accidental_estimate)
    )
}

fn poisson<R: rand::Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// One Poisson draw from its own seeded generator.
pub fn poisson_count(mean: f64, seed: u64) -> u64 {
    poisson(mean, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Seed for item `index` of a sweep started from `seed`. Depends only on the
/// pair, so sweeps give the same records in any execution order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng.next_u64()
}

/// Draws one counting record.
///
/// True coincidences are Poisson with mean pair_rate·prob·T and contribute to
/// both singles; accidentals are Poisson with mean scale·S_A·S_B·τ·T. The
/// accidental estimate in the record is recomputed from the drawn singles.
pub fn simulate_counts(
    prob: f64,
    rates: &CountRates,
    duration_s: f64,
    window_s: f64,
    seed: u64,
) -> Result<CountRecord> {
    ensure_fraction("probability", prob)?;
    rates.validate()?;
    ensure_finite("duration_s", duration_s)?;
    ensure_finite("window_s", window_s)?;
    if duration_s < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "duration must be ≥ 0, got {duration_s}"
        )));
    }
    if window_s < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "coincidence window must be ≥ 0, got {window_s}"
        )));
    }
    if duration_s == 0.0 {
        return Ok(CountRecord::zero(0.0));
    }

    let raw_a = rates.singles_a + rates.dark_count_rate;
    let raw_b = rates.singles_b + rates.dark_count_rate;
    let (fa, fb) = (rates.throughput(raw_a), rates.throughput(raw_b));
    let (obs_a, obs_b) = (raw_a * fa, raw_b * fb);

    let true_mean = rates.pair_rate * prob * fa * fb * duration_s;
    let acc_mean = rates.accidental_scale * obs_a * obs_b * window_s * duration_s;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let true_cc = poisson(true_mean, &mut rng);
    let acc = poisson(acc_mean, &mut rng);
    let extra_a = poisson((obs_a * duration_s - true_mean - acc_mean).max(0.0), &mut rng);
    let extra_b = poisson((obs_b * duration_s - true_mean - acc_mean).max(0.0), &mut rng);

    let singles_a = true_cc + acc + extra_a;
    let singles_b = true_cc + acc + extra_b;
    let accidental_estimate = rates.accidental_scale * singles_a as f64 * singles_b as f64 * window_s / duration_s;
    Ok(CountRecord {
        duration_s,
        singles_a,
        singles_b,
        coincidences: true_cc + acc,
        accidental_estimate,
    })
}

/// Rates seen by one channel pair when the arm singles split according to
/// the state's marginals.
pub fn channel_rates(arm: &CountRates, marginal_a: f64, marginal_b: f64) -> CountRates {
    CountRates {
        singles_a: arm.singles_a * marginal_a,
        singles_b: arm.singles_b * marginal_b,
        ..*arm
    }
}

/// Counting run over many settings; record `i` uses `derive_seed(seed, i)`.
pub struct SweepSpec<'a> {
    pub state: &'a TwoPhotonState,
    pub visibility: f64,
    /// Per-arm totals; singles are split over channels by the marginals.
    pub arm_rates: CountRates,
    pub duration_s: f64,
    pub window_s: f64,
    pub seed: u64,
}

pub fn sweep_settings(spec: &SweepSpec<'_>, settings: &[MeasurementSetting], exec: Exec) -> Result<Vec<CountRecord>> {
    let indexed: Vec<(usize, &MeasurementSetting)> = settings.iter().enumerate().collect();
    exec.map(&indexed, |(i, s)| {
        let p = setting_probability(spec.state, s, spec.visibility)?;
        let marginal = |alice: bool| -> Result<f64> {
            Channel::BOTH
                .iter()
                .map(|&c| {
                    let other = MeasurementSetting {
                        alice_channel: if alice { s.alice_channel } else { c },
                        bob_channel: if alice { c } else { s.bob_channel },
                        ..**s
                    };
                    setting_probability(spec.state, &other, spec.visibility)
                })
                .sum()
        };
        let rates = channel_rates(&spec.arm_rates, marginal(true)?, marginal(false)?);
        simulate_counts(
            p,
            &rates,
            spec.duration_s,
            spec.window_s,
            derive_seed(spec.seed, *i as u64),
        )
    })
    .into_iter()
    .collect()
}

/// A count with its 1σ Poisson error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corrected {
    pub value: f64,
    pub error: f64,
}

/// Coincidences minus the accidental estimate, error √(CC + acc). Negative
/// values are kept.
pub fn subtract_accidentals(rec: &CountRecord) -> Corrected {
    let cc = rec.coincidences as f64;
    Corrected {
        value: cc - rec.accidental_estimate,
        error: (cc + rec.accidental_estimate).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Car {
    Finite(f64),
    /// No accidentals expected.
    Infinite,
}

impl Car {
    pub fn value(self) -> f64 {
        match self {
            Car::Finite(v) => v,
            Car::Infinite => f64::INFINITY,
        }
    }
}

/// Coincidence-to-accidental ratio.
pub fn car(rec: &CountRecord) -> Car {
    if rec.accidental_estimate > 0.0 {
        Car::Finite(rec.coincidences as f64 / rec.accidental_estimate)
    } else {
        Car::Infinite
    }
}
