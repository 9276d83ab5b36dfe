//! Polarization calculus for one and two photons.
//!
//! Single photons are Jones vectors over (H, V). Two-photon states are
//! 4-component vectors in the fixed basis order (HH, HV, VH, VV), with the
//! first letter belonging to photon A (Alice) and the second to photon B
//! (Bob). States are rays: comparisons "up to global phase" go through
//! [`TwoPhotonState::overlap`] / [`JonesVector::overlap`].

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_fraction, Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance on the norm used by contract checks on caller-supplied states.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub h: C64,
    pub v: C64,
}

impl JonesVector {
    pub const fn new(h: C64, v: C64) -> Self {
        JonesVector { h, v }
    }

    pub fn horizontal() -> Self {
        JonesVector::new(ONE, ZERO)
    }

    pub fn vertical() -> Self {
        JonesVector::new(ZERO, ONE)
    }

    /// |+⟩ = (|H⟩ + |V⟩)/√2, linear polarization at +45°.
    pub fn diagonal() -> Self {
        JonesVector::new(C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2))
    }

    /// |−⟩ = (|H⟩ − |V⟩)/√2, linear polarization at −45°.
    pub fn antidiagonal() -> Self {
        JonesVector::new(C64::from(FRAC_1_SQRT_2), C64::from(-FRAC_1_SQRT_2))
    }

    /// Linear polarization at `angle` radians from horizontal.
    pub fn linear(angle: f64) -> Self {
        JonesVector::new(C64::from(angle.cos()), C64::from(angle.sin()))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        JonesVector::new(self.h / n, self.v / n)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &JonesVector) -> C64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    /// |⟨self|other⟩|², equal to 1 for states identical up to global phase.
    pub fn overlap(&self, other: &JonesVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn scale(&self, factor: C64) -> Self {
        JonesVector::new(self.h * factor, self.v * factor)
    }
}

/// A 2×2 complex Jones matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub [[C64; 2]; 2]);

impl JonesMatrix {
    pub fn identity() -> Self {
        JonesMatrix([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        let m = &self.0;
        JonesVector::new(m[0][0] * v.h + m[0][1] * v.v, m[1][0] * v.h + m[1][1] * v.v)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        JonesMatrix([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    /// Largest entry-wise deviation of M†M from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint() * *self;
        let id = JonesMatrix::identity();
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((p.0[r][c] - id.0[r][c]).norm());
            }
        }
        worst
    }

    /// Projector |p⟩⟨p| onto a (normalized) polarization.
    pub fn projector(p: &JonesVector) -> Self {
        JonesMatrix([
            [p.h * p.h.conj(), p.h * p.v.conj()],
            [p.v * p.h.conj(), p.v * p.v.conj()],
        ])
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        JonesMatrix(out)
    }
}

/// Linear retarder with the given retardance and fast axis angle (both in
/// radians, axis measured from horizontal).
///
/// Built as R(θ)·diag(e^{-iΓ/2}, e^{iΓ/2})·R(−θ). A retardance of π is a
/// half-wave plate; a variable retardance at a fixed axis models a liquid
/// crystal retarder.
pub fn waveplate(retardance: f64, fast_axis_angle: f64) -> Result<JonesMatrix> {
    ensure_finite("retardance", retardance)?;
    ensure_finite("fast_axis_angle", fast_axis_angle)?;
    let (s, c) = fast_axis_angle.sin_cos();
    let fast = C64::from_polar(1.0, -retardance / 2.0);
    let slow = C64::from_polar(1.0, retardance / 2.0);
    let off = (fast - slow) * (c * s);
    Ok(JonesMatrix([
        [fast * (c * c) + slow * (s * s), off],
        [off, fast * (s * s) + slow * (c * c)],
    ]))
}

/// Half-wave plate with fast axis at `fast_axis_angle`.
pub fn half_wave_plate(fast_axis_angle: f64) -> JonesMatrix {
    waveplate(std::f64::consts::PI, fast_axis_angle).expect("finite half-wave plate angle")
}

/// Two-photon polarization state in the (HH, HV, VH, VV) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState {
    pub amps: [C64; 4],
}

impl TwoPhotonState {
    pub const HH: usize = 0;
    pub const HV: usize = 1;
    pub const VH: usize = 2;
    pub const VV: usize = 3;

    pub const fn from_amps(amps: [C64; 4]) -> Self {
        TwoPhotonState { amps }
    }

    /// |a⟩ ⊗ |b⟩.
    pub fn product(a: &JonesVector, b: &JonesVector) -> Self {
        TwoPhotonState::from_amps([a.h * b.h, a.h * b.v, a.v * b.h, a.v * b.v])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &TwoPhotonState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn overlap(&self, other: &TwoPhotonState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn scale(&self, factor: C64) -> Self {
        TwoPhotonState::from_amps(self.amps.map(|a| a * factor))
    }

    pub fn add(&self, other: &TwoPhotonState) -> Self {
        let mut amps = self.amps;
        for (a, b) in amps.iter_mut().zip(&other.amps) {
            *a += b;
        }
        TwoPhotonState::from_amps(amps)
    }

    pub fn to_vector(&self) -> Vector4<C64> {
        Vector4::from_column_slice(&self.amps)
    }
}

/// (m_a ⊗ m_b)·s, photon A acted on by `m_a` and photon B by `m_b`.
pub fn tensor_apply(m_a: &JonesMatrix, m_b: &JonesMatrix, s: &TwoPhotonState) -> TwoPhotonState {
    let mut out = [ZERO; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let (ia, ib) = (i / 2, i % 2);
        for j in 0..4 {
            let (ja, jb) = (j / 2, j % 2);
            *slot += m_a.0[ia][ja] * m_b.0[ib][jb] * s.amps[j];
        }
    }
    TwoPhotonState::from_amps(out)
}

/// |⟨bra_a, bra_b|s⟩|².
pub fn project(s: &TwoPhotonState, bra_a: &JonesVector, bra_b: &JonesVector) -> Result<f64> {
    if !s.is_normalized(NORM_TOLERANCE) {
        return Err(Error::ContractViolation(format!(
            "two-photon state not normalized (norm² = {})",
            s.norm_sqr()
        )));
    }
    for (name, v) in [("bra_a", bra_a), ("bra_b", bra_b)] {
        if !v.is_normalized(NORM_TOLERANCE) {
            return Err(Error::ContractViolation(format!(
                "{name} not normalized (norm² = {})",
                v.norm_sqr()
            )));
        }
    }
    let bra = TwoPhotonState::product(bra_a, bra_b);
    Ok(bra.overlap(s).clamp(0.0, 1.0))
}

/// (|++⟩ + e^{iφ}|−−⟩)/√2 written in the H/V basis.
///
/// φ = 0 gives Φ⁺ = (|HH⟩ + |VV⟩)/√2, φ = π gives (|HV⟩ + |VH⟩)/√2.
pub fn bell_phi(phi: f64) -> TwoPhotonState {
    let plus = TwoPhotonState::product(&JonesVector::diagonal(), &JonesVector::diagonal());
    let minus = TwoPhotonState::product(&JonesVector::antidiagonal(), &JonesVector::antidiagonal());
    plus.add(&minus.scale(C64::from_polar(1.0, phi)))
        .scale(C64::from(FRAC_1_SQRT_2))
}

/// Φ⁺ = (|HH⟩ + |VV⟩)/√2.
pub fn phi_plus() -> TwoPhotonState {
    let a = C64::from(FRAC_1_SQRT_2);
    TwoPhotonState::from_amps([a, ZERO, ZERO, a])
}

/// Two-qubit density matrix in the (HH, HV, VH, VV) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix2Q(pub Matrix4<C64>);

impl DensityMatrix2Q {
    pub fn pure(s: &TwoPhotonState) -> Self {
        let v = s.to_vector();
        DensityMatrix2Q(v * v.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix2Q(Matrix4::identity() * C64::from(0.25))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = self.0.symmetric_eigen();
        let mut out = [0.0; 4];
        for (o, e) in out.iter_mut().zip(eig.eigenvalues.iter()) {
            *o = *e;
        }
        out
    }

    /// ⟨s|ρ|s⟩.
    pub fn expectation(&self, s: &TwoPhotonState) -> f64 {
        let v = s.to_vector();
        (v.adjoint() * self.0 * v)[(0, 0)].re
    }

    /// Probability of the product outcome (a, b).
    pub fn project(&self, a: &JonesVector, b: &JonesVector) -> f64 {
        self.expectation(&TwoPhotonState::product(a, b))
    }
}

/// Werner state V·|Φ⁺⟩⟨Φ⁺| + (1−V)/4·I.
pub fn werner(v: f64) -> Result<DensityMatrix2Q> {
    werner_around(v, &phi_plus())
}

/// Werner state built around an arbitrary pure target, e.g. `bell_phi(φ)`.
pub fn werner_around(v: f64, target: &TwoPhotonState) -> Result<DensityMatrix2Q> {
    ensure_fraction("visibility", v)?;
    if !target.is_normalized(NORM_TOLERANCE) {
        return Err(Error::ContractViolation("Werner target not normalized".into()));
    }
    let pure = DensityMatrix2Q::pure(target).0 * C64::from(v);
    let mixed = Matrix4::identity() * C64::from((1.0 - v) / 4.0);
    Ok(DensityMatrix2Q(pure + mixed))
}

/// Fidelity lower bound from a Bell-state visibility, assuming the worst
/// case Werner mixture: F = ¼(3/2·√V + ½·√(4 − 3V))².
pub fn fidelity_bound(v_s: f64) -> Result<f64> {
    ensure_fraction("visibility", v_s)?;
    let root = 1.5 * v_s.sqrt() + 0.5 * (4.0 - 3.0 * v_s).sqrt();
    Ok(0.25 * root * root)
}

/// Overlap ⟨Φ|ρ_W|Φ⟩ = (1 + 3V)/4 of a Werner state with its target.
///
/// Reported next to [`fidelity_bound`] because the two conversions disagree
/// at the visibilities seen in practice.
pub fn werner_overlap(v: f64) -> Result<f64> {
    ensure_fraction("visibility", v)?;
    Ok((1.0 + 3.0 * v) / 4.0)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn h() -> JonesVector {
        JonesVector::horizontal()
    }

    fn v() -> JonesVector {
        JonesVector::vertical()
    }

    /// Independent two-qubit Kronecker product through nalgebra.
    fn kron_oracle(a: &JonesMatrix, b: &JonesMatrix) -> Matrix4<C64> {
        Matrix4::from_fn(|r, c| a.0[r / 2][c / 2] * b.0[r % 2][c % 2])
    }

    #[test]
    fn waveplate_examples() {
        let hwp0 = waveplate(PI, 0.0).unwrap();
        assert_abs_diff_eq!(hwp0.apply(&h()).overlap(&h()), 1.0, epsilon = 1e-12);

        let hwp = waveplate(PI, FRAC_PI_8).unwrap();
        assert_abs_diff_eq!(hwp.apply(&h()).overlap(&JonesVector::diagonal()), 1.0, epsilon = 1e-12);

        let qwp = waveplate(PI / 2.0, FRAC_PI_4).unwrap();
        let twice = qwp * qwp;
        assert_abs_diff_eq!(twice.apply(&h()).overlap(&v()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn waveplate_rejects_non_finite() {
        assert!(matches!(waveplate(f64::NAN, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(waveplate(PI, f64::INFINITY), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn tensor_apply_examples() {
        let id = JonesMatrix::identity();
        let s = bell_phi(0.3);
        assert_eq!(tensor_apply(&id, &id, &s), s);

        let hwp = half_wave_plate(FRAC_PI_8);
        let hh = TwoPhotonState::product(&h(), &h());
        let pp = TwoPhotonState::product(&JonesVector::diagonal(), &JonesVector::diagonal());
        assert_abs_diff_eq!(tensor_apply(&hwp, &hwp, &hh).overlap(&pp), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn opposite_half_wave_plates_on_phi_plus() {
        // (HWP@22.5° ⊗ HWP@−22.5°)·Φ⁺ is the singlet, which has no HH component.
        let a = half_wave_plate(FRAC_PI_8);
        let b = half_wave_plate(-FRAC_PI_8);
        let out = tensor_apply(&a, &b, &phi_plus());
        let oracle = kron_oracle(&a, &b) * phi_plus().to_vector();
        for i in 0..4 {
            assert_abs_diff_eq!((out.amps[i] - oracle[i]).norm(), 0.0, epsilon = 1e-14);
        }
        let p = project(&out, &h(), &h()).unwrap();
        assert_abs_diff_eq!(p, oracle[0].norm_sqr(), epsilon = 1e-14);
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn projection_examples() {
        assert_abs_diff_eq!(project(&phi_plus(), &h(), &h()).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(project(&bell_phi(0.0), &h(), &h()).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(project(&bell_phi(PI), &h(), &h()).unwrap(), 0.0, epsilon = 1e-12);
        let d = JonesVector::diagonal();
        let a = JonesVector::antidiagonal();
        assert_abs_diff_eq!(project(&phi_plus(), &d, &a).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_rejects_unnormalized() {
        let s = phi_plus().scale(C64::from(1.01));
        assert!(matches!(project(&s, &h(), &h()), Err(Error::ContractViolation(_))));
        let bad = h().scale(C64::from(2.0));
        assert!(matches!(
            project(&phi_plus(), &bad, &h()),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn bell_phi_examples() {
        assert_abs_diff_eq!(bell_phi(0.0).overlap(&phi_plus()), 1.0, epsilon = 1e-12);
        let r = C64::from(FRAC_1_SQRT_2);
        let hv_vh = TwoPhotonState::from_amps([ZERO, r, r, ZERO]);
        assert_abs_diff_eq!(bell_phi(PI).overlap(&hv_vh), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn h_projection_follows_one_plus_cosine() {
        for k in 0..=64 {
            let phi = -PI + 2.0 * PI * k as f64 / 64.0;
            let p = project(&bell_phi(phi), &h(), &h()).unwrap();
            assert_abs_diff_eq!(p, (1.0 + phi.cos()) / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn werner_examples() {
        let pure = werner(1.0).unwrap();
        let proj = DensityMatrix2Q::pure(&phi_plus());
        assert!((pure.0 - proj.0).iter().all(|z| z.norm() < 1e-14));
        let mixed = werner(0.0).unwrap();
        assert!((mixed.0 - DensityMatrix2Q::maximally_mixed().0)
            .iter()
            .all(|z| z.norm() < 1e-14));
        assert_abs_diff_eq!(werner(0.99).unwrap().expectation(&phi_plus()), 0.9925, epsilon = 1e-12);
        assert!(werner(1.2).is_err());
        assert!(werner(-0.1).is_err());
    }

    #[test]
    fn werner_around_other_phases() {
        let target = bell_phi(1.1);
        let rho = werner_around(0.8, &target).unwrap();
        assert_abs_diff_eq!(rho.expectation(&target), (1.0 + 3.0 * 0.8) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        assert_abs_diff_eq!(fidelity_bound(1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_bound(0.0).unwrap(), 0.25, epsilon = 1e-15);
        // ¼(1.5·√0.9 + 0.5·√1.3)²
        assert_abs_diff_eq!(fidelity_bound(0.9).unwrap(), 0.993_124_518_5, epsilon = 1e-10);
        assert!(fidelity_bound(1.0001).is_err());
        assert!(fidelity_bound(f64::NAN).is_err());
    }

    #[test]
    fn fidelity_is_monotone() {
        let values: Vec<f64> = (0..1000).map(|i| fidelity_bound(i as f64 / 999.0).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] >= w[0]));
    }

    fn arb_state() -> impl Strategy<Value = TwoPhotonState> {
        prop::array::uniform8(-1.0f64..1.0).prop_filter_map("non-zero", |x| {
            let amps = [
                C64::new(x[0], x[1]),
                C64::new(x[2], x[3]),
                C64::new(x[4], x[5]),
                C64::new(x[6], x[7]),
            ];
            let s = TwoPhotonState::from_amps(amps);
            let n = s.norm_sqr();
            (n > 1e-3).then(|| s.scale(C64::from(1.0 / n.sqrt())))
        })
    }

    proptest! {
        #[test]
        fn waveplates_are_unitary(ret in -10.0f64..10.0, axis in -4.0f64..4.0) {
            prop_assert!(waveplate(ret, axis).unwrap().unitarity_error() < 1e-12);
        }

        #[test]
        fn unitary_evolution_preserves_norm(
            s in arb_state(),
            r1 in -7.0f64..7.0, a1 in -4.0f64..4.0,
            r2 in -7.0f64..7.0, a2 in -4.0f64..4.0,
        ) {
            let out = tensor_apply(&waveplate(r1, a1).unwrap(), &waveplate(r2, a2).unwrap(), &s);
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn product_basis_probabilities_sum_to_one(s in arb_state(), ta in -4.0f64..4.0, tb in -4.0f64..4.0) {
            let a = [JonesVector::linear(ta), JonesVector::linear(ta + PI / 2.0)];
            let b = [JonesVector::linear(tb), JonesVector::linear(tb + PI / 2.0)];
            let total: f64 = a.iter()
                .flat_map(|x| b.iter().map(move |y| (x, y)))
                .map(|(x, y)| project(&s, x, y).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }

        #[test]
        fn werner_is_a_density_matrix(v in 0.0f64..=1.0, phi in -4.0f64..4.0) {
            let rho = werner_around(v, &bell_phi(phi)).unwrap();
            prop_assert!(rho.hermiticity_error() < 1e-12);
            prop_assert!((rho.trace() - C64::from(1.0)).norm() < 1e-12);
            prop_assert!(rho.eigenvalues().iter().all(|&e| e >= -1e-10));
        }

        #[test]
        fn bell_phi_is_normalized(phi in -100.0f64..100.0) {
            prop_assert!((bell_phi(phi).norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
