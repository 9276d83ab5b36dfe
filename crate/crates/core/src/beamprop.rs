//! Gaussian beam propagation and waist-scan fitting, used to emulate the
//! camera-based measurement of longitudinal walkoff behind a displacer.
//!
//! Units: wavelength in nm, beam radii in µm, axial positions in mm.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::birefringence::Element;
use crate::error::{ensure_finite, Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions, Residuals};
use crate::report::format_float;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBeam {
    pub wavelength_nm: f64,
    /// 1/e² intensity radius at the waist.
    pub waist_radius_um: f64,
    pub waist_position_mm: f64,
}

impl GaussianBeam {
    pub fn new(wavelength_nm: f64, waist_radius_um: f64, waist_position_mm: f64) -> Result<Self> {
        ensure_finite("wavelength_nm", wavelength_nm)?;
        ensure_finite("waist_radius_um", waist_radius_um)?;
        ensure_finite("waist_position_mm", waist_position_mm)?;
        if wavelength_nm <= 0.0 || waist_radius_um <= 0.0 {
            return Err(Error::InvalidArgument(
                "beam wavelength and waist radius must be positive".into(),
            ));
        }
        Ok(GaussianBeam {
            wavelength_nm,
            waist_radius_um,
            waist_position_mm,
        })
    }

    /// z_R = π·w0²/λ, in mm.
    pub fn rayleigh_range_mm(&self) -> f64 {
        rayleigh_range_mm(self.waist_radius_um, self.wavelength_nm)
    }

    pub fn radius_at(&self, z_mm: f64) -> f64 {
        beam_radius(self, z_mm)
    }
}

fn rayleigh_range_mm(w0_um: f64, wavelength_nm: f64) -> f64 {
    // (µm)²/nm = 1e-12 m² / 1e-9 m = 1e-3 m = 1 mm
    PI * w0_um * w0_um / wavelength_nm
}

/// w(z) = w0·√(1 + ((z − z0)/z_R)²).
pub fn beam_radius(beam: &GaussianBeam, z_mm: f64) -> f64 {
    let u = (z_mm - beam.waist_position_mm) / beam.rayleigh_range_mm();
    beam.waist_radius_um * (1.0 + u * u).sqrt()
}

/// Thin-lens focused waist w0 = λ·f/(π·w_in), with w_in the collimated 1/e²
/// radius (half of `collimated_diameter_mm`). Returns µm.
pub fn focused_waist_um(wavelength_nm: f64, collimated_diameter_mm: f64, focal_length_mm: f64) -> f64 {
    let w_in_mm = collimated_diameter_mm / 2.0;
    wavelength_nm * 1e-6 * focal_length_mm / (PI * w_in_mm) * 1e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaistScan {
    pub z_positions_mm: Vec<f64>,
    pub beam_radii_um: Vec<f64>,
    /// Per-point radius noise; 0 when unknown.
    pub radius_noise_sigma_um: f64,
}

impl WaistScan {
    pub fn new(z_positions_mm: Vec<f64>, beam_radii_um: Vec<f64>, radius_noise_sigma_um: f64) -> Result<Self> {
        let scan = WaistScan {
            z_positions_mm,
            beam_radii_um,
            radius_noise_sigma_um,
        };
        scan.validate()?;
        Ok(scan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.z_positions_mm.len() != self.beam_radii_um.len() {
            return Err(Error::InvalidArgument("waist scan columns differ in length".into()));
        }
        if self.z_positions_mm.len() < 5 {
            return Err(Error::InvalidArgument("waist scan needs at least 5 points".into()));
        }
        if self.beam_radii_um.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("beam radii must be positive".into()));
        }
        if self.z_positions_mm.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument("scan positions must be finite".into()));
        }
        if !(self.radius_noise_sigma_um >= 0.0) {
            return Err(Error::InvalidArgument("radius noise must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.z_positions_mm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_positions_mm.is_empty()
    }

    /// Writes `z_mm,w_um` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "z_mm,w_um")?;
        for (z, w) in self.z_positions_mm.iter().zip(&self.beam_radii_um) {
            writeln!(out, "{},{}", format_float(*z), format_float(*w))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitWarning {
    /// The minimum is not bracketed by the scan; z0 is an extrapolation.
    OneSidedScan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaistFit {
    pub beam: GaussianBeam,
    pub sigma_waist_radius_um: f64,
    pub sigma_waist_position_mm: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub warnings: Vec<FitWarning>,
}

struct Hyperbola<'a> {
    scan: &'a WaistScan,
    wavelength_nm: f64,
    sigma: f64,
    /// Positions are fitted relative to this origin.
    z_ref: f64,
}

impl Residuals for Hyperbola<'_> {
    fn n_params(&self) -> usize {
        2
    }

    fn n_points(&self) -> usize {
        self.scan.len()
    }

    fn evaluate(&self, p: &[f64], r: &mut DVector<f64>, j: &mut DMatrix<f64>) {
        let (w0, z0) = (p[0], p[1]);
        let zr = rayleigh_range_mm(w0, self.wavelength_nm);
        for (i, (&z, &w)) in self
            .scan
            .z_positions_mm
            .iter()
            .zip(&self.scan.beam_radii_um)
            .enumerate()
        {
            let u = (z - self.z_ref - z0) / zr;
            let root = (1.0 + u * u).sqrt();
            r[i] = (w - w0 * root) / self.sigma;
            j[(i, 0)] = -((1.0 - u * u) / root) / self.sigma;
            j[(i, 1)] = (w0 * u / (zr * root)) / self.sigma;
        }
    }
}

/// Least-squares fit of (w0, z0) to a waist scan at known wavelength.
pub fn fit_waist(scan: &WaistScan, wavelength_nm: f64) -> Result<WaistFit> {
    scan.validate()?;
    let (i_min, &w_min) = scan
        .beam_radii_um
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    let z_start = scan.z_positions_mm[i_min];

    let known_sigma = scan.radius_noise_sigma_um > 0.0;
    let problem = Hyperbola {
        scan,
        wavelength_nm,
        sigma: if known_sigma { scan.radius_noise_sigma_um } else { 1.0 },
        z_ref: z_start,
    };
    let sol = levenberg_marquardt(&problem, &[w_min, 0.0], LmOptions::default());
    if !sol.converged || sol.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::FitFailure {
            message: format!("waist fit did not converge in {} iterations", sol.iterations),
            residual_norm: sol.residual_norm(),
        });
    }
    let cov = if known_sigma {
        sol.covariance.clone()
    } else {
        sol.scaled_covariance(scan.len())
    };
    let cov = cov.ok_or_else(|| Error::FitFailure {
        message: "singular waist-fit normal matrix".into(),
        residual_norm: sol.residual_norm(),
    })?;

    let w0 = sol.params[0].abs();
    let z0 = z_start + sol.params[1];
    let (z_lo, z_hi) = scan
        .z_positions_mm
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| {
            (lo.min(z), hi.max(z))
        });
    let mut warnings = Vec::new();
    let at_edge = i_min == 0 || i_min + 1 == scan.len();
    if at_edge || z0 <= z_lo || z0 >= z_hi {
        warnings.push(FitWarning::OneSidedScan);
    }
    Ok(WaistFit {
        beam: GaussianBeam::new(wavelength_nm, w0, z0)?,
        sigma_waist_radius_um: cov[(0, 0)].max(0.0).sqrt(),
        sigma_waist_position_mm: cov[(1, 1)].max(0.0).sqrt(),
        residual_norm: sol.residual_norm() * problem.sigma,
        iterations: sol.iterations,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkoffSetup {
    pub collimated_diameter_mm: f64,
    pub focal_length_mm: f64,
    pub wavelength_nm: f64,
    /// Waist radius at focus, taken as a direct input.
    pub waist_radius_um: f64,
    /// Half-width of the camera scan in Rayleigh ranges.
    pub scan_half_range_rayleigh: f64,
    pub scan_points: usize,
}

impl Default for WalkoffSetup {
    fn default() -> Self {
        WalkoffSetup {
            collimated_diameter_mm: 1.4,
            focal_length_mm: 150.0,
            wavelength_nm: 405.0,
            waist_radius_um: 10.0,
            scan_half_range_rayleigh: 5.0,
            scan_points: 41,
        }
    }
}

impl WalkoffSetup {
    pub fn validate(&self, element: &Element) -> Result<()> {
        for (name, v) in [
            ("collimated_diameter_mm", self.collimated_diameter_mm),
            ("focal_length_mm", self.focal_length_mm),
            ("wavelength_nm", self.wavelength_nm),
            ("waist_radius_um", self.waist_radius_um),
            ("scan_half_range_rayleigh", self.scan_half_range_rayleigh),
        ] {
            ensure_finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.scan_points < 5 {
            return Err(Error::InvalidArgument("scan needs at least 5 points".into()));
        }
        // The element is centred halfway between lens and focus.
        let half_gap = self.focal_length_mm / 2.0;
        if element.thickness() / 2.0 >= half_gap {
            return Err(Error::InvalidArgument(format!(
                "element of thickness {} mm does not fit between the lens and the {} mm focus",
                element.thickness(),
                self.focal_length_mm
            )));
        }
        Ok(())
    }
}

/// Camera scans of the two polarization branches behind `element`.
///
/// For a Savart plate, `ordinary` is the branch that is ordinary in the
/// first plate.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkoffScans {
    pub ordinary: WaistScan,
    pub extraordinary: WaistScan,
    /// Model walkoff placed between the two waists.
    pub model_walkoff_mm: f64,
}

/// Synthesizes the two waist scans. The ordinary focus lies `Δz/2` beyond the
/// nominal focus and the extraordinary one `Δz/2` before it; the common
/// prismatic shift is dropped.
pub fn walkoff_experiment(
    element: &Element,
    setup: &WalkoffSetup,
    noise_sigma_um: f64,
    seed: u64,
) -> Result<WalkoffScans> {
    setup.validate(element)?;
    if !(noise_sigma_um >= 0.0 && noise_sigma_um.is_finite()) {
        return Err(Error::InvalidArgument("noise sigma must be finite and ≥ 0".into()));
    }
    let dz = element.walkoff();
    let focus = setup.focal_length_mm;
    let zr = rayleigh_range_mm(setup.waist_radius_um, setup.wavelength_nm);
    let half = setup.scan_half_range_rayleigh * zr;
    let n = setup.scan_points;
    let z: Vec<f64> = (0..n)
        .map(|i| focus - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();

    let scan = |waist_position: f64, stream: u64| -> Result<WaistScan> {
        let beam = GaussianBeam::new(setup.wavelength_nm, setup.waist_radius_um, waist_position)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let normal = Normal::new(0.0, noise_sigma_um.max(f64::MIN_POSITIVE)).expect("valid sigma");
        let radii = z
            .iter()
            .map(|&zi| {
                let clean = beam.radius_at(zi);
                if noise_sigma_um == 0.0 {
                    clean
                } else {
                    (clean + normal.sample(&mut rng)).max(1e-3 * clean)
                }
            })
            .collect();
        WaistScan::new(z.clone(), radii, noise_sigma_um)
    };

    Ok(WalkoffScans {
        ordinary: scan(focus + dz / 2.0, 0)?,
        extraordinary: scan(focus - dz / 2.0, 1)?,
        model_walkoff_mm: dz,
    })
}

/// Fitted focal separation between the two branches.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationFit {
    pub ordinary: WaistFit,
    pub extraordinary: WaistFit,
    pub separation_mm: f64,
    pub sigma_mm: f64,
}

pub fn fit_separation(scans: &WalkoffScans, wavelength_nm: f64) -> Result<SeparationFit> {
    let ordinary = fit_waist(&scans.ordinary, wavelength_nm)?;
    let extraordinary = fit_waist(&scans.extraordinary, wavelength_nm)?;
    let separation_mm = ordinary.beam.waist_position_mm - extraordinary.beam.waist_position_mm;
    let sigma_mm = ordinary
        .sigma_waist_position_mm
        .hypot(extraordinary.sigma_waist_position_mm);
    Ok(SeparationFit {
        ordinary,
        extraordinary,
        separation_mm,
        sigma_mm,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::birefringence::{BirefringentPlate, SavartPlate};
    use crate::exec::Exec;

    fn clean_scan(beam: &GaussianBeam, n: usize, half_range_rayleigh: f64) -> WaistScan {
        let zr = beam.rayleigh_range_mm();
        let z: Vec<f64> = (0..n)
            .map(|i| {
                beam.waist_position_mm - half_range_rayleigh * zr
                    + 2.0 * half_range_rayleigh * zr * i as f64 / (n - 1) as f64
            })
            .collect();
        let w = z.iter().map(|&z| beam.radius_at(z)).collect();
        WaistScan::new(z, w, 0.0).unwrap()
    }

    #[test]
    fn radius_examples() {
        let b = GaussianBeam::new(405.0, 10.0, 3.0).unwrap();
        assert_abs_diff_eq!(beam_radius(&b, 3.0), 10.0, epsilon = 1e-12);
        let zr = b.rayleigh_range_mm();
        assert_abs_diff_eq!(beam_radius(&b, 3.0 + zr), 10.0 * 2f64.sqrt(), epsilon = 1e-12);
        // z_R = π·(10 µm)²/405 nm = 0.7757 mm, so one millimetre out:
        let oracle = 10.0 * (1.0 + (1.0 / (PI * 1e-4 / 4.05e-4)).powi(2)).sqrt();
        assert_abs_diff_eq!(beam_radius(&b, 4.0), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(beam_radius(&b, 4.0), 16.315_393_696, epsilon = 1e-8);
    }

    #[test]
    fn lens_relation_helper() {
        // 405 nm, D = 1.4 mm, f = 150 mm gives roughly a 55 µm waist diameter.
        let w0 = focused_waist_um(405.0, 1.4, 150.0);
        assert_abs_diff_eq!(2.0 * w0, 55.2, epsilon = 0.1);
    }

    #[test]
    fn noiseless_fit_inverts_exactly() {
        let b = GaussianBeam::new(405.0, 10.0, 150.27).unwrap();
        let fit = fit_waist(&clean_scan(&b, 41, 5.0), 405.0).unwrap();
        assert_abs_diff_eq!(fit.beam.waist_radius_um, 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.beam.waist_position_mm, 150.27, epsilon = 1e-9);
        assert!(fit.warnings.is_empty());
    }

    #[test]
    fn one_sided_scan_is_flagged() {
        let b = GaussianBeam::new(405.0, 10.0, 0.0).unwrap();
        let zr = b.rayleigh_range_mm();
        let z: Vec<f64> = (0..20).map(|i| 0.5 * zr + i as f64 * 0.2 * zr).collect();
        let w = z.iter().map(|&z| b.radius_at(z)).collect();
        let fit = fit_waist(&WaistScan::new(z, w, 0.0).unwrap(), 405.0).unwrap();
        assert_eq!(fit.warnings, vec![FitWarning::OneSidedScan]);
    }

    #[test]
    fn invalid_scans_are_rejected() {
        assert!(WaistScan::new(vec![0.0; 4], vec![1.0; 4], 0.0).is_err());
        assert!(WaistScan::new(vec![0.0; 6], vec![1.0; 5], 0.0).is_err());
        assert!(WaistScan::new(vec![0.0; 5], vec![1.0, 1.0, -1.0, 1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn noisy_fit_z0_is_calibrated() {
        // 1000 seeded trials, 2 µm radius noise, 41 points over ±5 z_R.
        let truth = GaussianBeam::new(405.0, 10.0, 0.0).unwrap();
        let base = clean_scan(&truth, 41, 5.0);
        let within = Exec::Parallel.map_range(1000, |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let normal = Normal::new(0.0, 2.0).unwrap();
            let radii = base
                .beam_radii_um
                .iter()
                .map(|w| (w + normal.sample(&mut rng)).max(1e-3))
                .collect();
            let scan = WaistScan::new(base.z_positions_mm.clone(), radii, 2.0).unwrap();
            let fit = fit_waist(&scan, 405.0).unwrap();
            (fit.beam.waist_position_mm.abs() <= 3.0 * fit.sigma_waist_position_mm) as usize
        });
        let hits: usize = within.iter().sum();
        assert!(hits >= 950, "only {hits}/1000 trials within 3σ");
    }

    #[test]
    fn noiseless_experiment_recovers_model_walkoff() {
        let bd = Element::Displacer(
            BirefringentPlate::calcite(8.73)
                .unwrap()
                .with_measured_shear(1.010)
                .unwrap(),
        );
        let scans = walkoff_experiment(&bd, &WalkoffSetup::default(), 0.0, 1).unwrap();
        let sep = fit_separation(&scans, 405.0).unwrap();
        assert_abs_diff_eq!(sep.separation_mm, scans.model_walkoff_mm, epsilon = 1e-9);
    }

    #[test]
    fn experiment_is_reproducible() {
        let sp = Element::Savart(SavartPlate::calcite_with_net_shear(0.972).unwrap());
        let a = walkoff_experiment(&sp, &WalkoffSetup::default(), 2.0, 99).unwrap();
        let b = walkoff_experiment(&sp, &WalkoffSetup::default(), 2.0, 99).unwrap();
        assert_eq!(a, b);
        let c = walkoff_experiment(&sp, &WalkoffSetup::default(), 2.0, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn element_must_fit_before_focus() {
        let thick = Element::Displacer(BirefringentPlate::calcite(40.0).unwrap());
        let setup = WalkoffSetup {
            focal_length_mm: 30.0,
            ..WalkoffSetup::default()
        };
        assert!(matches!(
            walkoff_experiment(&thick, &setup, 0.0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let b = GaussianBeam::new(405.0, 10.0, 0.0).unwrap();
        let scan = clean_scan(&b, 5, 2.0);
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "z_mm,w_um");
        assert_eq!(lines.len(), 6);
        let w: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
        assert_abs_diff_eq!(w, 10.0, epsilon = 1e-7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fit_round_trips(w0 in 5.0f64..60.0, z0 in -50.0f64..50.0) {
            let b = GaussianBeam::new(405.0, w0, z0).unwrap();
            let fit = fit_waist(&clean_scan(&b, 31, 4.0), 405.0).unwrap();
            prop_assert!((fit.beam.waist_radius_um - w0).abs() < 1e-9);
            prop_assert!((fit.beam.waist_position_mm - z0).abs() < 1e-9);
        }

        #[test]
        fn fit_is_translation_equivariant(shift in -100.0f64..100.0, seed in 0u64..1000) {
            let b = GaussianBeam::new(405.0, 12.0, 0.0).unwrap();
            let base = clean_scan(&b, 41, 5.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 1.0).unwrap();
            let radii: Vec<f64> = base.beam_radii_um.iter().map(|w| w + normal.sample(&mut rng)).collect();
            let a = WaistScan::new(base.z_positions_mm.clone(), radii.clone(), 1.0).unwrap();
            let shifted = WaistScan::new(base.z_positions_mm.iter().map(|z| z + shift).collect(), radii, 1.0).unwrap();
            let fa = fit_waist(&a, 405.0).unwrap();
            let fb = fit_waist(&shifted, 405.0).unwrap();
            prop_assert!((fb.beam.waist_position_mm - fa.beam.waist_position_mm - shift).abs() < 1e-8);
            prop_assert!((fb.beam.waist_radius_um - fa.beam.waist_radius_um).abs() < 1e-10, "{} {} it {} {}", fa.beam.waist_radius_um, fb.beam.waist_radius_um, fa.iterations, fb.iterations);
        }
    }
}
