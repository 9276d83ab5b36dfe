//! Uniaxial displacing elements: beam displacers (single plates) and Savart
//! plates (two crossed plates).
//!
//! Lengths are millimeters, angles radians, wavelengths nanometers. Each plate
//! is a slab with faces normal to z. Its optic axis lies in the plane spanned
//! by z and the plate's transverse displacement axis, at `cut_angle` from z,
//! oriented so that the extraordinary ray is displaced along
//! `+displacement_axis`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::polcalc::{JonesVector, C64};

/// Calcite ordinary index used throughout unless overridden.
pub const CALCITE_N_O: f64 = 1.66;
/// Calcite extraordinary index used throughout unless overridden.
pub const CALCITE_N_E: f64 = 1.49;

/// Largest yaw tilt for which the slab model is used.
pub const MAX_TILT: f64 = FRAC_PI_4;

/// Index seen by a wave travelling at `alpha` from the plate normal when the
/// optic axis sits at `beta`:
/// n = 1/√(cos²(α−β)/n_o² + sin²(α−β)/n_e²).
pub fn effective_index(alpha: f64, beta: f64, n_o: f64, n_e: f64) -> f64 {
    let (s, c) = (alpha - beta).sin_cos();
    1.0 / (c * c / (n_o * n_o) + s * s / (n_e * n_e)).sqrt()
}

/// Walkoff angle ρ of the extraordinary ray at normal incidence:
/// tan ρ = (n_o² − n_e²)·tan β / (n_e² + n_o²·tan² β).
pub fn walkoff_angle(n_o: f64, n_e: f64, beta: f64) -> f64 {
    let t = beta.tan();
    let (o2, e2) = (n_o * n_o, n_e * n_e);
    ((o2 - e2) * t / (e2 + o2 * t * t)).atan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ordinary,
    Extraordinary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirefringentPlate {
    pub n_o: f64,
    pub n_e: f64,
    pub cut_angle: f64,
    pub thickness_mm: f64,
    /// Unit vector in the transverse (x, y) plane.
    pub displacement_axis: [f64; 2],
    /// Measured shear; takes precedence over the geometric value when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_shear_mm: Option<f64>,
}

impl BirefringentPlate {
    pub fn new(n_o: f64, n_e: f64, cut_angle: f64, thickness_mm: f64, displacement_axis: [f64; 2]) -> Result<Self> {
        let plate = BirefringentPlate {
            n_o,
            n_e,
            cut_angle,
            thickness_mm,
            displacement_axis,
            measured_shear_mm: None,
        };
        plate.validate()?;
        Ok(plate)
    }

    /// Calcite plate cut at 45°, displacing along +x.
    pub fn calcite(thickness_mm: f64) -> Result<Self> {
        Self::new(CALCITE_N_O, CALCITE_N_E, FRAC_PI_4, thickness_mm, [1.0, 0.0])
    }

    pub fn with_measured_shear(mut self, shear_mm: f64) -> Result<Self> {
        self.measured_shear_mm = Some(shear_mm);
        self.validate()?;
        let geometric = self.geometric_shear();
        if (geometric - shear_mm).abs() > 1e-9 {
            debug!(
                "measured shear {shear_mm:.4} mm overrides geometric shear {geometric:.4} mm (d = {} mm)",
                self.thickness_mm
            );
        }
        Ok(self)
    }

    pub fn with_axis(mut self, axis: [f64; 2]) -> Result<Self> {
        self.displacement_axis = axis;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_o", self.n_o),
            ("n_e", self.n_e),
            ("cut_angle", self.cut_angle),
            ("thickness_mm", self.thickness_mm),
        ] {
            ensure_finite(name, v)?;
        }
        if self.n_o <= 1.0 || self.n_e <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "refractive indices must exceed 1 (n_o = {}, n_e = {})",
                self.n_o, self.n_e
            )));
        }
        if self.thickness_mm <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "plate thickness must be positive, got {} mm",
                self.thickness_mm
            )));
        }
        let [ux, uy] = self.displacement_axis;
        if ((ux * ux + uy * uy) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("displacement axis must be a unit vector".into()));
        }
        if let Some(s) = self.measured_shear_mm {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::InvalidArgument(format!("measured shear must be ≥ 0, got {s}")));
            }
        }
        Ok(())
    }

    /// Shear from the walkoff geometry, d·tan ρ.
    pub fn geometric_shear(&self) -> f64 {
        self.thickness_mm * walkoff_angle(self.n_o, self.n_e, self.cut_angle).abs().tan()
    }

    pub fn shear(&self) -> f64 {
        self.measured_shear_mm.unwrap_or_else(|| self.geometric_shear())
    }

    /// Measured minus geometric shear, when a measured value is present.
    pub fn shear_discrepancy(&self) -> Option<f64> {
        self.measured_shear_mm.map(|s| s - self.geometric_shear())
    }

    /// Internal deviation angle α of the extraordinary path, tan α = S/d.
    pub fn deviation_angle(&self) -> f64 {
        (self.shear() / self.thickness_mm).atan()
    }

    /// Geometric length of the extraordinary path, √(d² + S²).
    pub fn extraordinary_path(&self) -> f64 {
        self.thickness_mm.hypot(self.shear())
    }

    /// Unit optic axis in the plate frame.
    pub fn optic_axis(&self) -> [f64; 3] {
        // For n_o > n_e the ray walks away from the axis tilt direction.
        let sign = if self.n_o > self.n_e { -1.0 } else { 1.0 };
        let (s, c) = self.cut_angle.sin_cos();
        let [ux, uy] = self.displacement_axis;
        [sign * s * ux, sign * s * uy, c]
    }

    /// Transverse displacement vector of the extraordinary beam at normal
    /// incidence.
    pub fn displacement(&self) -> [f64; 2] {
        let s = self.shear();
        [s * self.displacement_axis[0], s * self.displacement_axis[1]]
    }

    /// Unit polarization of the extraordinary eigenmode at normal incidence.
    pub fn extraordinary_polarization(&self) -> JonesVector {
        let [ux, uy] = self.displacement_axis;
        JonesVector::new(C64::from(ux), C64::from(uy))
    }
}

/// Longitudinal walkoff of a single displacer: Δz = d_o·n_o − d_e·n_eff(α, β)
/// with d_e = √(d_o² + S²) and α = arctan(S/d_o).
pub fn bd_walkoff(plate: &BirefringentPlate) -> f64 {
    let n_eff = effective_index(plate.deviation_angle(), plate.cut_angle, plate.n_o, plate.n_e);
    plate.thickness_mm * plate.n_o - plate.extraordinary_path() * n_eff
}

/// Two crossed displacers cemented together.
///
/// The beam polarized along `plate_1`'s displacement axis is extraordinary in
/// plate 1 and ordinary in plate 2 (the "+" branch for the standard ±45°
/// orientation); the orthogonal beam is the reverse (the "−" branch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavartPlate {
    pub plate_1: BirefringentPlate,
    pub plate_2: BirefringentPlate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitBranch {
    /// Branch polarization scaled by its amplitude.
    pub polarization: JonesVector,
    pub position: [f64; 2],
}

impl SplitBranch {
    pub fn probability(&self) -> f64 {
        self.polarization.norm_sqr()
    }
}

impl SavartPlate {
    pub fn new(plate_1: BirefringentPlate, plate_2: BirefringentPlate) -> Result<Self> {
        plate_1.validate()?;
        plate_2.validate()?;
        let [a, b] = plate_1.displacement_axis;
        let [c, d] = plate_2.displacement_axis;
        if (a * c + b * d).abs() > 1e-9 {
            return Err(Error::InvalidArgument(
                "Savart plate displacement axes must be orthogonal".into(),
            ));
        }
        Ok(SavartPlate { plate_1, plate_2 })
    }

    /// Two copies of `plate`, re-oriented to displace along (1, 1)/√2 and
    /// (−1, 1)/√2.
    pub fn symmetric(plate: &BirefringentPlate) -> Result<Self> {
        let p1 = plate.clone().with_axis([FRAC_1_SQRT_2, FRAC_1_SQRT_2])?;
        let p2 = plate.clone().with_axis([-FRAC_1_SQRT_2, FRAC_1_SQRT_2])?;
        Self::new(p1, p2)
    }

    /// Symmetric calcite Savart plate whose two output beams are separated by
    /// `net_shear_mm`.
    pub fn calcite_with_net_shear(net_shear_mm: f64) -> Result<Self> {
        let per_plate = net_shear_mm / std::f64::consts::SQRT_2;
        let rho = walkoff_angle(CALCITE_N_O, CALCITE_N_E, FRAC_PI_4);
        let plate = BirefringentPlate::calcite(per_plate / rho.tan())?;
        Self::symmetric(&plate)
    }

    /// Transverse separation between the two output beams.
    pub fn net_shear(&self) -> f64 {
        let [a, b] = self.plate_1.displacement();
        let [c, d] = self.plate_2.displacement();
        (a - c).hypot(b - d)
    }

    pub fn total_thickness(&self) -> f64 {
        self.plate_1.thickness_mm + self.plate_2.thickness_mm
    }

    /// Optical path of the (plate-1 extraordinary, plate-2 ordinary) branch.
    pub fn branch_path_plus(&self) -> f64 {
        let p1 = &self.plate_1;
        let p2 = &self.plate_2;
        let e1 = p1.extraordinary_path() * effective_index(p1.deviation_angle(), p1.cut_angle, p1.n_o, p1.n_e);
        e1 + p2.thickness_mm * p2.n_o
    }

    /// Optical path of the (plate-1 ordinary, plate-2 extraordinary) branch.
    pub fn branch_path_minus(&self) -> f64 {
        let p1 = &self.plate_1;
        let p2 = &self.plate_2;
        let e2 = p2.extraordinary_path() * effective_index(p2.deviation_angle(), p2.cut_angle, p2.n_o, p2.n_e);
        e2 + p1.thickness_mm * p1.n_o
    }

    /// Splits a single beam into the two eigen-branches.
    ///
    /// Branch amplitudes are the projections of `input` onto each plate's
    /// extraordinary polarization; positions are displaced by the
    /// corresponding plate's shear vector.
    pub fn split(&self, input: &JonesVector, position: [f64; 2]) -> [SplitBranch; 2] {
        [&self.plate_1, &self.plate_2].map(|p| {
            let pol = p.extraordinary_polarization();
            let d = p.displacement();
            SplitBranch {
                polarization: pol.scale(pol.inner(input)),
                position: [position[0] + d[0], position[1] + d[1]],
            }
        })
    }
}

/// Difference in optical path between the two Savart plate output beams
/// ("−" branch minus "+" branch). Zero for identical plates.
pub fn sp_walkoff(sp: &SavartPlate) -> f64 {
    sp.branch_path_minus() - sp.branch_path_plus()
}

/// Savart-plate splitting of one input beam; see [`SavartPlate::split`].
pub fn sp_split(sp: &SavartPlate, input: &JonesVector, position: [f64; 2]) -> [SplitBranch; 2] {
    sp.split(input, position)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Element {
    Displacer(BirefringentPlate),
    Savart(SavartPlate),
}

impl Element {
    pub fn thickness(&self) -> f64 {
        match self {
            Element::Displacer(p) => p.thickness_mm,
            Element::Savart(sp) => sp.total_thickness(),
        }
    }

    /// Longitudinal walkoff at normal incidence.
    pub fn walkoff(&self) -> f64 {
        match self {
            Element::Displacer(p) => bd_walkoff(p),
            Element::Savart(sp) => sp_walkoff(sp),
        }
    }

    /// The two polarization paths as (plate, mode) segment lists. Path 0 is
    /// the "+" (extraordinary-first) path.
    fn paths(&self) -> [Vec<(&BirefringentPlate, Mode)>; 2] {
        match self {
            Element::Displacer(p) => [vec![(p, Mode::Extraordinary)], vec![(p, Mode::Ordinary)]],
            Element::Savart(sp) => [
                vec![(&sp.plate_1, Mode::Extraordinary), (&sp.plate_2, Mode::Ordinary)],
                vec![(&sp.plate_1, Mode::Ordinary), (&sp.plate_2, Mode::Extraordinary)],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltedElement {
    pub element: Element,
    /// Rotation about the y axis (tilt in the xz plane).
    pub yaw_tilt: f64,
    pub wavelength_nm: f64,
}

impl TiltedElement {
    pub fn new(element: Element, yaw_tilt: f64, wavelength_nm: f64) -> Result<Self> {
        ensure_finite("yaw_tilt", yaw_tilt)?;
        ensure_finite("wavelength_nm", wavelength_nm)?;
        if yaw_tilt.abs() >= MAX_TILT {
            return Err(Error::InvalidArgument(format!(
                "tilt {yaw_tilt} rad outside the model validity range |θ| < π/4"
            )));
        }
        if wavelength_nm <= 0.0 {
            return Err(Error::InvalidArgument("wavelength must be positive".into()));
        }
        Ok(TiltedElement {
            element,
            yaw_tilt,
            wavelength_nm,
        })
    }

    /// Tangential component of the normalized wave vector in the element
    /// frame; conserved across every face of the slab stack.
    fn tangential(&self) -> [f64; 2] {
        [self.yaw_tilt.sin(), 0.0]
    }
}

/// Normal component n_z of the refractive-index vector (k/k₀) of `mode` in
/// `plate`, given the conserved tangential component.
pub fn normal_index(plate: &BirefringentPlate, mode: Mode, tangential: [f64; 2]) -> f64 {
    let [kx, ky] = tangential;
    let kt2 = kx * kx + ky * ky;
    match mode {
        Mode::Ordinary => (plate.n_o * plate.n_o - kt2).sqrt(),
        Mode::Extraordinary => {
            // (n·c)²/n_o² + (|n|² − (n·c)²)/n_e² = 1, solved for the forward root.
            let [cx, cy, cz] = plate.optic_axis();
            let g = 1.0 / (plate.n_o * plate.n_o) - 1.0 / (plate.n_e * plate.n_e);
            let inv_e2 = 1.0 / (plate.n_e * plate.n_e);
            let p = kx * cx + ky * cy;
            let a = g * cz * cz + inv_e2;
            let b = 2.0 * g * p * cz;
            let c = g * p * p + kt2 * inv_e2 - 1.0;
            (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
        }
    }
}

/// Unit ray (energy-flow) direction for a wave with index vector `n`.
fn ray_direction(plate: &BirefringentPlate, mode: Mode, n: [f64; 3]) -> [f64; 3] {
    let grad = match mode {
        Mode::Ordinary => n,
        Mode::Extraordinary => {
            let c = plate.optic_axis();
            let nc = n[0] * c[0] + n[1] * c[1] + n[2] * c[2];
            let inv_o2 = 1.0 / (plate.n_o * plate.n_o);
            let inv_e2 = 1.0 / (plate.n_e * plate.n_e);
            [0, 1, 2].map(|i| nc * c[i] * inv_o2 + (n[i] - nc * c[i]) * inv_e2)
        }
    };
    let norm = (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]).sqrt();
    grad.map(|g| g / norm)
}

/// One straight ray segment inside a plate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySegment {
    pub mode: Mode,
    pub direction: [f64; 3],
    pub length_mm: f64,
    /// Phase path k·Δr / k₀ along the segment.
    pub optical_path_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayPath {
    pub segments: Vec<RaySegment>,
    /// Transverse exit position relative to the entry point, element frame.
    pub exit_offset: [f64; 2],
}

impl RayPath {
    pub fn optical_path(&self) -> f64 {
        self.segments.iter().map(|s| s.optical_path_mm).sum()
    }
}

/// Traces both polarization paths through the tilted element, refracting at
/// each face with the mode's own index surface.
pub fn trace_paths(te: &TiltedElement) -> [RayPath; 2] {
    let kt = te.tangential();
    te.element.paths().map(|path| {
        let mut offset = [0.0, 0.0];
        let segments = path
            .iter()
            .map(|&(plate, mode)| {
                let nz = normal_index(plate, mode, kt);
                let n = [kt[0], kt[1], nz];
                let dir = ray_direction(plate, mode, n);
                let length = plate.thickness_mm / dir[2];
                offset[0] += dir[0] * length;
                offset[1] += dir[1] * length;
                RaySegment {
                    mode,
                    direction: dir,
                    length_mm: length,
                    optical_path_mm: (n[0] * dir[0] + n[1] * dir[1] + n[2] * dir[2]) * length,
                }
            })
            .collect();
        RayPath {
            segments,
            exit_offset: offset,
        }
    })
}

/// Relative phase φ(θ) = (2π/λ)·(OPL₊ − OPL₋) between the two polarization
/// paths of a tilted element, referenced to a common output wavefront.
pub fn tilt_phase(te: &TiltedElement) -> f64 {
    let kt = te.tangential();
    let k0 = 2.0 * PI / (te.wavelength_nm * 1e-6);
    let [plus, minus] = trace_paths(te);
    // Rays leave from different points; subtract the exit-plane offset so
    // both phases refer to the same outgoing plane wave.
    let wavefront = |p: &RayPath| p.optical_path() - (kt[0] * p.exit_offset[0] + kt[1] * p.exit_offset[1]);
    k0 * (wavefront(&plus) - wavefront(&minus))
}
