//! Built-in consistency checks: closed-form plate and rotation identities,
//! detector construction, Bell correlations, and noise-free round trips.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use rand::Rng;

use crate::entangled::{
    apply_local, bell_state, correlation_tensor, correlation_tensor_with, BellIndex, TwoQubitPureState,
};
use crate::linalg::{ComplexMatrix2, I};
use crate::measurement::{outcome_probabilities, outcome_probabilities_with_plates, Setting};
use crate::pauli::{
    compose_device, half_wave_rotation, rotation_of, waveplate_matrix, DeviceSpec, WavePlateSpec, PAULI_MATRICES,
};
use crate::rng::stream_rng;
use crate::tomography::{
    gauge_fidelity, reconstruct_device, reconstruct_state, CorrelationEstimate, ExpectedCounts, ReferenceChoice,
};

const SELFTEST_SEED: u64 = 0x5eed;

/// Expected diagonals of `⟨σ_i⊗σ_i⟩` for the Bell states `σ_k/√2`.
pub const BELL_DIAGONALS: [[f64; 4]; 4] = [
    [1.0, 1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, 1.0],
];

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        out
    }
}

/// A random cascade of 0 to `max_len` plates with arbitrary angles.
pub fn random_cascade<R: Rng + ?Sized>(rng: &mut R, max_len: usize) -> DeviceSpec {
    let len = rng.random_range(0..=max_len);
    DeviceSpec::plates((0..len).map(|_| {
        WavePlateSpec::new(rng.random_range(0.0..2.0 * PI), rng.random_range(-PI..PI)).expect("finite")
    }))
}

type Check = fn(&[ComplexMatrix2; 4]) -> Result<String, String>;

/// Runs every check with the built-in Pauli table.
pub fn run() -> SelftestReport {
    run_with_pauli_table(&PAULI_MATRICES)
}

/// Runs the checks, taking the table-dependent ones (Pauli algebra and Bell
/// correlations) from `table`. A corrupted table must make the run fail.
pub fn run_with_pauli_table(table: &[ComplexMatrix2; 4]) -> SelftestReport {
    let checks: Vec<(&'static str, Check)> = vec![
        ("pauli-table", check_pauli_table),
        ("diagonal-plate", |_| check_diagonal_plate()),
        ("half-wave-matrix", |_| check_half_wave_matrix()),
        ("half-wave-rotation", |_| check_half_wave_rotation()),
        ("detector-plates", |_| check_detector_plates()),
        ("bell-correlations", check_bell_correlations),
        ("exact-round-trip", |_| check_round_trip()),
        ("state-round-trip", |_| check_state_round_trip()),
    ];
    SelftestReport {
        checks: checks
            .into_iter()
            .map(|(name, f)| match f(table) {
                Ok(detail) => CheckOutcome { name, passed: true, detail },
                Err(detail) => CheckOutcome { name, passed: false, detail },
            })
            .collect(),
    }
}

fn within(what: &str, err: f64, tol: f64) -> Result<String, String> {
    if err <= tol {
        Ok(format!("{what} max error {err:.1e} <= {tol:.0e}"))
    } else {
        Err(format!("{what} max error {err:.3e} > {tol:.0e}"))
    }
}

fn check_pauli_table(table: &[ComplexMatrix2; 4]) -> Result<String, String> {
    let mut err = 0.0f64;
    for (k, m) in table.iter().enumerate() {
        err = err.max(m.max_abs_diff(&PAULI_MATRICES[k]));
        err = err.max(m.max_abs_diff(&m.adjoint()));
        err = err.max((*m * *m).max_abs_diff(&ComplexMatrix2::identity()));
    }
    // σ_a σ_b = i σ_c for cyclic (a, b, c)
    for (a, b, c) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
        err = err.max((table[a] * table[b]).max_abs_diff(&table[c].scale(I)));
    }
    within("pauli algebra", err, 1e-15)
}

fn check_diagonal_plate() -> Result<String, String> {
    let w = waveplate_matrix(&WavePlateSpec::new(PI, PI / 8.0).expect("finite"));
    let h = ComplexMatrix2::from_real([[1.0, 1.0], [1.0, -1.0]])
        .expect("finite")
        .scale_real(FRAC_1_SQRT_2);
    within("W(pi, pi/8)", w.max_abs_diff(&h), 1e-12)
}

fn check_half_wave_matrix() -> Result<String, String> {
    let mut rng = stream_rng(SELFTEST_SEED, 1);
    let mut err = 0.0f64;
    for _ in 0..20 {
        let theta = rng.random_range(-PI..PI);
        let (s, c) = (2.0 * theta).sin_cos();
        let closed = ComplexMatrix2::from_real([[c, s], [s, -c]]).expect("finite");
        err = err.max(waveplate_matrix(&WavePlateSpec::half_wave(theta).expect("finite")).max_abs_diff(&closed));
    }
    within("W(pi, theta)", err, 1e-12)
}

fn check_half_wave_rotation() -> Result<String, String> {
    let mut rng = stream_rng(SELFTEST_SEED, 2);
    let mut err = 0.0f64;
    for _ in 0..20 {
        let theta = rng.random_range(-PI..PI);
        let r = rotation_of(&WavePlateSpec::half_wave(theta).expect("finite").matrix()).map_err(|e| e.to_string())?;
        err = err.max(r.max_abs_diff(&half_wave_rotation(theta)));
    }
    within("R(W(pi, theta))", err, 1e-12)
}

fn random_state<R: Rng + ?Sized>(rng: &mut R) -> TwoQubitPureState {
    let mut v = || num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let m = ComplexMatrix2::new([[v(), v()], [v(), v()]]).expect("finite");
    TwoQubitPureState::normalized(m).expect("nonzero with probability one")
}

fn check_detector_plates() -> Result<String, String> {
    let mut rng = stream_rng(SELFTEST_SEED, 3);
    let mut err = 0.0f64;
    for _ in 0..20 {
        let state = random_state(&mut rng);
        for s in Setting::all() {
            let direct = outcome_probabilities(&state, s).0;
            let plates = outcome_probabilities_with_plates(&state, s).0;
            for (a, b) in direct.iter().zip(plates.iter()) {
                err = err.max((a - b).abs());
            }
        }
    }
    within("plate-built detectors", err, 1e-12)
}

fn check_bell_correlations(table: &[ComplexMatrix2; 4]) -> Result<String, String> {
    let mut err = 0.0f64;
    for k in 0..4 {
        let t = correlation_tensor_with(table, &table[k].scale_real(FRAC_1_SQRT_2));
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { BELL_DIAGONALS[k][i] } else { 0.0 };
                err = err.max((t.get(i, j) - want).abs());
            }
        }
    }
    within("Bell correlation tensors", err, 1e-12)
}

fn check_round_trip() -> Result<String, String> {
    let mut rng = stream_rng(SELFTEST_SEED, 4);
    let mut worst = 0.0f64;
    for k in BellIndex::all() {
        let input = bell_state(k);
        for _ in 0..50 {
            let u = compose_device(&random_cascade(&mut rng, 3)).map_err(|e| e.to_string())?;
            let output = apply_local(&u, &input).map_err(|e| e.to_string())?;
            let rec = reconstruct_device(
                &ExpectedCounts::from_state(&input, 1),
                &ExpectedCounts::from_state(&output, 1),
                ReferenceChoice::Auto,
            )
            .map_err(|e| e.to_string())?;
            let f = gauge_fidelity(&u, &rec.unitary.u_hat).map_err(|e| e.to_string())?;
            worst = worst.max(1.0 - f);
        }
    }
    within("device infidelity over 200 cascades", worst, 1e-9)
}

fn check_state_round_trip() -> Result<String, String> {
    let mut rng = stream_rng(SELFTEST_SEED, 5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let state = random_state(&mut rng);
        let corr = CorrelationEstimate::exact(&correlation_tensor(&state));
        let est = reconstruct_state(&corr, ReferenceChoice::Auto).map_err(|e| e.to_string())?;
        let f = gauge_fidelity(state.matrix(), &est.psi_hat).map_err(|e| e.to_string())?;
        worst = worst.max(1.0 - f);
    }
    within("state infidelity over 50 states", worst, 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        let report = run();
        assert!(report.passed(), "{}", report.render());
        assert_eq!(report.checks.len(), 8);
    }

    #[test]
    fn corrupted_table_fails() {
        let mut table = PAULI_MATRICES;
        // drop the minus sign of σz
        table[3] = ComplexMatrix2::identity();
        let report = run_with_pauli_table(&table);
        assert!(!report.passed());
        let failed: Vec<_> = report.failures().map(|c| c.name).collect();
        assert!(failed.contains(&"pauli-table"));
        assert!(failed.contains(&"bell-correlations"));
    }

    #[test]
    fn output_is_repeatable() {
        assert_eq!(run().render(), run().render());
    }
}
