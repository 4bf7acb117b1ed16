#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use pauli_tomography::entangled::TwoQubitPureState;
use pauli_tomography::pauli::{DeviceSpec, WavePlateSpec};
use pauli_tomography::ComplexMatrix2;
use rand::Rng;

/// Single partial-retardation plate: with retardation 0.45π at −0.138π.
pub fn single_plate() -> DeviceSpec {
    DeviceSpec::plates([WavePlateSpec::from_multiples_of_pi(0.45, -0.138).unwrap()])
}

/// Same plate followed by a λ/2 plate at 0.29π.
pub fn plate_cascade() -> DeviceSpec {
    DeviceSpec::plates([
        WavePlateSpec::from_multiples_of_pi(0.45, -0.138).unwrap(),
        WavePlateSpec::from_multiples_of_pi(1.0, 0.29).unwrap(),
    ])
}

/// e^{iγ}·Rz(a)·Ry(b)·Rz(d) with uniformly drawn angles.
pub fn random_unitary<R: Rng>(rng: &mut R) -> ComplexMatrix2 {
    let g = rng.random_range(-PI..PI);
    let a = rng.random_range(-PI..PI);
    let b = rng.random_range(0.0..PI);
    let d = rng.random_range(-PI..PI);
    let rz = |t: f64| ComplexMatrix2::diagonal(Complex64::from_polar(1.0, -t / 2.0), Complex64::from_polar(1.0, t / 2.0));
    let (s, c) = (b / 2.0).sin_cos();
    let ry = ComplexMatrix2::from_real([[c, -s], [s, c]]).unwrap();
    (rz(a) * ry * rz(d)).scale(Complex64::from_polar(1.0, g))
}

pub fn random_matrix<R: Rng>(rng: &mut R) -> ComplexMatrix2 {
    let mut v = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    ComplexMatrix2::new([[v(), v()], [v(), v()]]).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R) -> TwoQubitPureState {
    TwoQubitPureState::normalized(random_matrix(rng)).unwrap()
}

/// Random state with `|det Ψ| >= min_det`.
pub fn random_full_rank_state<R: Rng>(rng: &mut R, min_det: f64) -> TwoQubitPureState {
    loop {
        let s = random_state(rng);
        if s.matrix().det().norm() >= min_det {
            return s;
        }
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// The eight real numbers (Re, Im of U00, U01, U10, U11).
pub fn components(m: &ComplexMatrix2) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (k, (r, c)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        out[2 * k] = m.get(r, c).re;
        out[2 * k + 1] = m.get(r, c).im;
    }
    out
}

/// Least-squares slope of y against x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
