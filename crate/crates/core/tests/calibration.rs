//! Seeded Monte Carlo calibrations of the fitters and the counting model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use spades_core::analysis::{fit_cosine, visibility};
use spades_core::beamprop::{
    beam_radius, fit_separation, fit_waist, walkoff_experiment, GaussianBeam, WaistScan, WalkoffSetup,
};
use spades_core::birefringence::{bd_walkoff, BirefringentPlate, Element, SavartPlate};
use spades_core::detection::{derive_seed, simulate_counts, subtract_accidentals, CountRates};
use spades_core::pipeline::{ideal_h_projection, SourceConfig};
use spades_core::Exec;

#[test]
fn waist_position_is_recovered_within_three_sigma() {
    let beam = GaussianBeam::new(405.0, 10.0, 0.0).unwrap();
    let zr = beam.rayleigh_range_mm();
    let noise = 2.0;
    let z: Vec<f64> = (0..41).map(|i| -5.0 * zr + 10.0 * zr * i as f64 / 40.0).collect();
    let hits: usize = Exec::Parallel
        .map_range(1000, |trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(17, trial as u64));
            let normal = Normal::new(0.0, noise).unwrap();
            let w = z
                .iter()
                .map(|&zi| beam_radius(&beam, zi) + normal.sample(&mut rng))
                .collect();
            let fit = fit_waist(&WaistScan::new(z.clone(), w, noise).unwrap(), 405.0).unwrap();
            usize::from(fit.beam.waist_position_mm.abs() <= 3.0 * fit.sigma_waist_position_mm)
        })
        .into_iter()
        .sum();
    assert!(hits >= 950, "{hits}/1000 within 3 sigma");
}

#[test]
fn lab_scale_walkoff_experiment() {
    let setup = WalkoffSetup::default();
    let bd = BirefringentPlate::calcite(8.73)
        .unwrap()
        .with_measured_shear(1.010)
        .unwrap();
    let model = bd_walkoff(&bd);
    let sp = Element::Savart(SavartPlate::calcite_with_net_shear(0.972).unwrap());
    let bd = Element::Displacer(bd);

    let trials = 200;
    let (mut bd_ok, mut sp_ok, mut sigma_sum) = (0, 0, 0.0);
    for t in 0..trials {
        let scans = walkoff_experiment(&bd, &setup, 1.5, derive_seed(5, 2 * t)).unwrap();
        let fit = fit_separation(&scans, setup.wavelength_nm).unwrap();
        bd_ok += usize::from((fit.separation_mm - model).abs() <= 2.0 * fit.sigma_mm);
        sigma_sum += fit.sigma_mm;
        let scans = walkoff_experiment(&sp, &setup, 1.5, derive_seed(5, 2 * t + 1)).unwrap();
        let fit = fit_separation(&scans, setup.wavelength_nm).unwrap();
        sp_ok += usize::from(fit.separation_mm.abs() <= 2.0 * fit.sigma_mm);
    }
    // Two-sigma coverage is 95.4% for a Gaussian estimator.
    assert!(bd_ok >= 180, "BD {bd_ok}/{trials}");
    assert!(sp_ok >= 180, "SP {sp_ok}/{trials}");
    let mean_sigma = sigma_sum / trials as f64;
    assert!((0.02..0.04).contains(&mean_sigma), "{mean_sigma}");
}

/// Fringe at the measured interference-scan rates, fitted after accidental
/// subtraction, across many seeds.
#[test]
fn corrected_visibility_is_calibrated() {
    let rates = CountRates {
        pair_rate: 61_721.69,
        singles_a: 1_029_237.75,
        singles_b: 1_029_237.75,
        accidental_scale: 5.55,
        ..CountRates::default()
    };
    let phi: Vec<f64> = (0..81).map(|i| -6.0 + 12.0 * i as f64 / 80.0).collect();
    let visibilities = Exec::Parallel.map_range(50, |seed| {
        let y: Vec<_> = phi
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let rec = simulate_counts(
                    ideal_h_projection(p),
                    &rates,
                    1.0,
                    1e-9,
                    derive_seed(seed as u64, i as u64),
                );
                subtract_accidentals(&rec.unwrap())
            })
            .collect();
        let values: Vec<f64> = y.iter().map(|c| c.value).collect();
        let sigma: Vec<f64> = y.iter().map(|c| c.error.max(1.0)).collect();
        visibility(&fit_cosine(&phi, &values, &sigma).unwrap()).unwrap()
    });
    let mean = visibilities.iter().map(|v| v.0).sum::<f64>() / 50.0;
    assert!((mean - 1.0).abs() < 0.01, "mean corrected visibility {mean}");
    let pulls: Vec<f64> = visibilities.iter().map(|(v, e)| (v - 1.0) / e).collect();
    let rms = (pulls.iter().map(|p| p * p).sum::<f64>() / pulls.len() as f64).sqrt();
    assert!(
        (0.5..2.0).contains(&rms),
        "visibility error is miscalibrated, pull rms {rms}"
    );
}

/// Two fringes at the measured stage-scan frequencies with comparable sampling are
/// told apart by more than three combined standard errors.
#[test]
fn fringe_frequencies_are_distinguishable() {
    let x: Vec<f64> = (0..321).map(|i| 5.0 * i as f64).collect();
    let fit_at = |omega: f64, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| {
                let mean = 1e4 * (1.0 + (omega * xi).cos()) / 2.0;
                rand_distr::Poisson::new(mean.max(1e-9)).unwrap().sample(&mut rng)
            })
            .collect();
        let sigma: Vec<f64> = y.iter().map(|v| v.max(1.0).sqrt()).collect();
        fit_cosine(&x, &y, &sigma).unwrap()
    };
    let sp = fit_at(0.1004, 1);
    let bd = fit_at(0.1036, 2);
    assert!((sp.angular_frequency - 0.1004).abs() < 3.0 * sp.sigma_angular_frequency);
    assert!((bd.angular_frequency - 0.1036).abs() < 3.0 * bd.sigma_angular_frequency);
    let combined = sp.sigma_angular_frequency.hypot(bd.sigma_angular_frequency);
    assert!((bd.angular_frequency - sp.angular_frequency) / combined > 3.0);
}

#[test]
fn source_phase_can_be_dialled_in() {
    let cfg = SourceConfig::default();
    for target in [0.0, 1.0, std::f64::consts::PI] {
        let theta = cfg.tilt_for_phase(target).unwrap();
        let phase = cfg.phase_at(theta).unwrap();
        let wrapped = (phase - target).rem_euclid(2.0 * std::f64::consts::PI);
        assert!(
            wrapped.min(2.0 * std::f64::consts::PI - wrapped) < 1e-9,
            "{target}: {phase}"
        );
    }
}
