//! Pauli matrices, wave-plate unitaries and the Bloch rotations they induce.
//!
//! Basis convention: `|0⟩` is horizontal (h) polarization, `|1⟩` vertical (v).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix2, RotationMatrix3, DEFAULT_TOLERANCE, I, ONE, ZERO};

/// σ₀ = I, σ₁ = σx, σ₂ = σy, σ₃ = σz.
pub const PAULI_MATRICES: [ComplexMatrix2; 4] = [
    ComplexMatrix2::from_entries([[ONE, ZERO], [ZERO, ONE]]),
    ComplexMatrix2::from_entries([[ZERO, ONE], [ONE, ZERO]]),
    ComplexMatrix2::from_entries([[ZERO, Complex64::new(0.0, -1.0)], [I, ZERO]]),
    ComplexMatrix2::from_entries([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]]),
];

/// Returns σ_i for `i` in `0..=3`.
pub fn pauli(i: usize) -> Result<ComplexMatrix2> {
    PAULI_MATRICES.get(i).copied().ok_or(Error::PauliIndex(i))
}

/// A birefringent plate with retardation `phi` and fast-axis orientation
/// `theta` (both radians, any real value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePlateSpec {
    phi: f64,
    theta: f64,
}

impl WavePlateSpec {
    pub fn new(phi: f64, theta: f64) -> Result<Self> {
        if phi.is_finite() && theta.is_finite() {
            Ok(Self { phi, theta })
        } else {
            Err(Error::NonFiniteAngle)
        }
    }

    /// Angles given as multiples of π, as plates are usually quoted.
    pub fn from_multiples_of_pi(phi_over_pi: f64, theta_over_pi: f64) -> Result<Self> {
        Self::new(phi_over_pi * PI, theta_over_pi * PI)
    }

    /// λ/2 plate at orientation `theta`.
    pub fn half_wave(theta: f64) -> Result<Self> {
        Self::new(PI, theta)
    }

    /// λ/4 plate at orientation `theta`.
    pub fn quarter_wave(theta: f64) -> Result<Self> {
        Self::new(FRAC_PI_2, theta)
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn matrix(&self) -> ComplexMatrix2 {
        waveplate_matrix(self)
    }
}

/// Jones matrix of a wave-plate:
///
/// ```text
/// W(φ, θ) = [[z₊ + c·z₋,  s·z₋      ],
///            [s·z₋,       z₊ − c·z₋ ]]
/// ```
///
/// with `s = sin 2θ`, `c = cos 2θ`, `z± = (1 ± e^{iφ}) / 2`. This is the plate
/// retardation `diag(1, e^{iφ})` rotated by θ.
pub fn waveplate_matrix(spec: &WavePlateSpec) -> ComplexMatrix2 {
    let (s, c) = (2.0 * spec.theta).sin_cos();
    let e = Complex64::from_polar(1.0, spec.phi);
    let z_plus = (ONE + e) * 0.5;
    let z_minus = (ONE - e) * 0.5;
    ComplexMatrix2::from_entries([
        [z_plus + z_minus * c, z_minus * s],
        [z_minus * s, z_plus - z_minus * c],
    ])
}

/// One optical element of a device under test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeviceElement {
    Plate(WavePlateSpec),
    /// An arbitrary unitary Jones matrix.
    Matrix(ComplexMatrix2),
}

impl DeviceElement {
    pub fn matrix(&self) -> ComplexMatrix2 {
        match self {
            DeviceElement::Plate(p) => waveplate_matrix(p),
            DeviceElement::Matrix(m) => *m,
        }
    }
}

impl From<WavePlateSpec> for DeviceElement {
    fn from(p: WavePlateSpec) -> Self {
        DeviceElement::Plate(p)
    }
}

/// Elements listed in the order the photon traverses them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeviceSpec {
    pub elements: Vec<DeviceElement>,
}

impl DeviceSpec {
    pub fn new(elements: Vec<DeviceElement>) -> Self {
        Self { elements }
    }

    pub fn plates(plates: impl IntoIterator<Item = WavePlateSpec>) -> Self {
        Self::new(plates.into_iter().map(DeviceElement::Plate).collect())
    }
}

/// Total unitary `U = W_last · … · W_first` of a cascade.
pub fn compose_device(spec: &DeviceSpec) -> Result<ComplexMatrix2> {
    compose_device_with_tolerance(spec, DEFAULT_TOLERANCE)
}

pub fn compose_device_with_tolerance(spec: &DeviceSpec, tolerance: f64) -> Result<ComplexMatrix2> {
    let mut total = ComplexMatrix2::identity();
    for element in &spec.elements {
        if let DeviceElement::Matrix(m) = element {
            m.ensure_unitary(tolerance)?;
        }
        total = element.matrix() * total;
    }
    Ok(total)
}

/// Bloch rotation induced by `u` in the Heisenberg picture,
/// `U† σ_α U = Σ_β R_αβ σ_β`, so `R_αβ = ½ Tr[U† σ_α U σ_β]`.
///
/// Composition follows `R(U·V) = R(U)·R(V)`.
pub fn rotation_of(u: &ComplexMatrix2) -> Result<RotationMatrix3> {
    rotation_of_with_tolerance(u, DEFAULT_TOLERANCE)
}

pub fn rotation_of_with_tolerance(u: &ComplexMatrix2, tolerance: f64) -> Result<RotationMatrix3> {
    u.ensure_unitary(tolerance)?;
    let u_adj = u.adjoint();
    let mut out = [[0.0; 3]; 3];
    for (alpha, row) in out.iter_mut().enumerate() {
        let evolved = u_adj * PAULI_MATRICES[alpha + 1] * *u;
        for (beta, cell) in row.iter_mut().enumerate() {
            let t = (evolved * PAULI_MATRICES[beta + 1]).trace() * 0.5;
            debug_assert!(t.im.abs() < 1e-9, "imaginary residue {}", t.im);
            *cell = t.re;
        }
    }
    Ok(RotationMatrix3::from_entries(out))
}

/// Closed form of the rotation induced by a λ/2 plate at orientation `theta`.
pub fn half_wave_rotation(theta: f64) -> RotationMatrix3 {
    let (s4, c4) = (4.0 * theta).sin_cos();
    RotationMatrix3::from_entries([[-c4, 0.0, s4], [0.0, -1.0, 0.0], [s4, 0.0, c4]])
}

/// Orientation of the λ/2 plate that turns a σz detector into a σx detector.
pub const SIGMA_X_PLATE_THETA: f64 = PI / 8.0;
/// Orientation of the λ/4 plate that turns a σz detector into a σy detector.
pub const SIGMA_Y_PLATE_THETA: f64 = FRAC_PI_4;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// e^{iγ}·Rz(a)·Ry(b)·Rz(d), covering U(2).
    fn unitary_from_angles(g: f64, a: f64, b: f64, d: f64) -> ComplexMatrix2 {
        let rz = |t: f64| ComplexMatrix2::diagonal(Complex64::from_polar(1.0, -t / 2.0), Complex64::from_polar(1.0, t / 2.0));
        let (s, co) = (b / 2.0).sin_cos();
        let ry = ComplexMatrix2::from_real([[co, -s], [s, co]]).unwrap();
        (rz(a) * ry * rz(d)).scale(Complex64::from_polar(1.0, g))
    }

    #[test]
    fn pauli_table() {
        assert_eq!(pauli(0).unwrap(), ComplexMatrix2::identity());
        assert_eq!(pauli(1).unwrap(), ComplexMatrix2::from_real([[0.0, 1.0], [1.0, 0.0]]).unwrap());
        assert_eq!(
            pauli(2).unwrap(),
            ComplexMatrix2::new([[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]]).unwrap()
        );
        assert_eq!(pauli(3).unwrap(), ComplexMatrix2::from_real([[1.0, 0.0], [0.0, -1.0]]).unwrap());
        assert!(matches!(pauli(4), Err(Error::PauliIndex(4))));
    }

    #[test]
    fn pauli_products_close_the_ring() {
        let [_, x, y, z] = PAULI_MATRICES;
        assert!((x * y).approx_eq(&z.scale(I), 0.0));
        assert!((y * z).approx_eq(&x.scale(I), 0.0));
        assert!((z * x).approx_eq(&y.scale(I), 0.0));
    }

    #[test]
    fn zero_retardation_is_identity() {
        for theta in [0.0, 0.3, -2.0, 17.5] {
            let w = waveplate_matrix(&WavePlateSpec::new(0.0, theta).unwrap());
            assert!(w.approx_eq(&ComplexMatrix2::identity(), 1e-15));
        }
    }

    #[test]
    fn diagonal_half_wave_plate() {
        let w = waveplate_matrix(&WavePlateSpec::half_wave(PI / 8.0).unwrap());
        let expected = ComplexMatrix2::from_real([[1.0, 1.0], [1.0, -1.0]])
            .unwrap()
            .scale_real(FRAC_1_SQRT_2);
        assert!(w.approx_eq(&expected, 1e-12), "{w}");
    }

    #[test]
    fn waveplate_is_rotated_retarder() {
        let spec = WavePlateSpec::new(0.7, -0.4).unwrap();
        let (s, co) = spec.theta().sin_cos();
        let rot = ComplexMatrix2::from_real([[co, -s], [s, co]]).unwrap();
        let ret = ComplexMatrix2::diagonal(ONE, Complex64::from_polar(1.0, spec.phi()));
        let expected = rot * ret * rot.transpose();
        assert!(waveplate_matrix(&spec).approx_eq(&expected, 1e-15));
    }

    #[test]
    fn quarter_wave_at_pi_over_4() {
        // Direct evaluation of the general plate formula at (π/2, π/4):
        // (e^{iπ/4}/√2)·[[1, −i], [−i, 1]].
        let w = waveplate_matrix(&WavePlateSpec::quarter_wave(FRAC_PI_4).unwrap());
        let expected = ComplexMatrix2::new([[ONE, c(0.0, -1.0)], [c(0.0, -1.0), ONE]])
            .unwrap()
            .scale(Complex64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4));
        assert!(w.approx_eq(&expected, 1e-15), "{w}");
    }

    #[test]
    fn rejects_non_finite_angles() {
        assert!(WavePlateSpec::new(f64::NAN, 0.0).is_err());
        assert!(WavePlateSpec::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn empty_and_single_cascade() {
        assert_eq!(compose_device(&DeviceSpec::default()).unwrap(), ComplexMatrix2::identity());
        let p = WavePlateSpec::new(1.1, 0.2).unwrap();
        assert_eq!(compose_device(&DeviceSpec::plates([p])).unwrap(), p.matrix());
    }

    #[test]
    fn cascade_applies_first_element_first() {
        let first = WavePlateSpec::from_multiples_of_pi(0.45, -0.138).unwrap();
        let second = WavePlateSpec::from_multiples_of_pi(1.0, 0.29).unwrap();
        let u = compose_device(&DeviceSpec::plates([first, second])).unwrap();
        assert!(u.approx_eq(&(second.matrix() * first.matrix()), 0.0));
        assert!(!u.approx_eq(&(first.matrix() * second.matrix()), 1e-3));
        assert!(u.is_unitary(1e-14));
    }

    #[test]
    fn cascade_rejects_non_unitary_matrix() {
        let bad = ComplexMatrix2::from_real([[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let spec = DeviceSpec::new(vec![DeviceElement::Matrix(bad)]);
        assert!(matches!(compose_device(&spec), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn rotation_of_identity_and_sigma_z_plate() {
        let r = rotation_of(&ComplexMatrix2::identity()).unwrap();
        assert!(r.approx_eq(&RotationMatrix3::identity(), 0.0));
        // W(π, 0) = σz flips x and y.
        let r = rotation_of(&WavePlateSpec::half_wave(0.0).unwrap().matrix()).unwrap();
        let expected = RotationMatrix3::from_entries([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(r.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn rotation_rejects_non_unitary() {
        let m = ComplexMatrix2::from_real([[1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(rotation_of(&m).is_err());
    }

    proptest! {
        #[test]
        fn waveplates_are_unitary(phi in -10.0..10.0f64, theta in -10.0..10.0f64) {
            let w = waveplate_matrix(&WavePlateSpec::new(phi, theta).unwrap());
            prop_assert!(w.is_unitary(1e-12));
        }

        #[test]
        fn half_wave_rotation_closed_form(theta in -4.0..4.0f64) {
            let r = rotation_of(&WavePlateSpec::half_wave(theta).unwrap().matrix()).unwrap();
            prop_assert!(r.approx_eq(&half_wave_rotation(theta), 1e-12));
        }

        #[test]
        fn rotation_is_proper(g in -PI..PI, a in -PI..PI, b in 0.0..PI, d in -PI..PI) {
            let r = rotation_of(&unitary_from_angles(g, a, b, d)).unwrap();
            prop_assert!(r.is_proper_rotation(1e-10));
        }

        #[test]
        fn rotation_is_homomorphism(
            u in (-PI..PI, -PI..PI, 0.0..PI, -PI..PI),
            v in (-PI..PI, -PI..PI, 0.0..PI, -PI..PI),
        ) {
            let u = unitary_from_angles(u.0, u.1, u.2, u.3);
            let v = unitary_from_angles(v.0, v.1, v.2, v.3);
            let ruv = rotation_of(&(u * v)).unwrap();
            let expected = rotation_of(&u).unwrap() * rotation_of(&v).unwrap();
            prop_assert!(ruv.approx_eq(&expected, 1e-10));
        }
    }
}
