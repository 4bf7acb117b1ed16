//! Experiment configuration documents (JSON).
//!
//! ```json
//! {
//!   "input_state": {"bell": 1},
//!   "device": [{"phi_over_pi": 0.45, "theta_over_pi": -0.138}],
//!   "shots_per_setting": 10000,
//!   "detector_efficiency": 1.0,
//!   "seed": 0,
//!   "reference_vector": "auto",
//!   "bootstrap_resamples": 200
//! }
//! ```
//!
//! Angles are multiples of π. Explicit matrices are written as
//! `[[[re, im], [re, im]], [[re, im], [re, im]]]`, row-major.

use serde::Deserialize;
use thiserror::Error;

use crate::entangled::{bell_state, BellIndex, TwoQubitPureState};
use crate::linalg::ComplexMatrix2;
use crate::measurement::DetectorModel;
use crate::pauli::{compose_device_with_tolerance, DeviceElement, DeviceSpec, WavePlateSpec};
use crate::tomography::{BasisPair, ReferenceChoice, DEFAULT_RESAMPLES};

pub const DEFAULT_SHOTS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0;

/// Unitarity tolerance for hand-written device matrices.
pub const CONFIG_UNITARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {message}")]
pub struct ConfigError {
    /// Location of the offending field, e.g. `device[1].phi_over_pi`.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Where the entangled input comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InputState {
    Bell(BellIndex),
    /// Explicit coefficient matrix, normalized on parse.
    Matrix(TwoQubitPureState),
}

impl InputState {
    pub fn state(&self) -> TwoQubitPureState {
        match self {
            InputState::Bell(k) => bell_state(*k),
            InputState::Matrix(s) => *s,
        }
    }
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub input_state: InputState,
    pub device: DeviceSpec,
    pub shots_per_setting: u64,
    pub detector: DetectorModel,
    pub seed: u64,
    pub reference: ReferenceChoice,
    /// 0 disables the bootstrap.
    pub bootstrap_resamples: usize,
}

impl ExperimentConfig {
    pub fn new(input_state: InputState, device: DeviceSpec) -> Self {
        Self {
            input_state,
            device,
            shots_per_setting: DEFAULT_SHOTS,
            detector: DetectorModel::ideal(),
            seed: DEFAULT_SEED,
            reference: ReferenceChoice::Auto,
            bootstrap_resamples: DEFAULT_RESAMPLES,
        }
    }

    /// Product of the device elements.
    pub fn device_matrix(&self) -> ComplexMatrix2 {
        compose_device_with_tolerance(&self.device, CONFIG_UNITARY_TOLERANCE)
            .expect("device validated on construction")
    }
}

type RawMatrix = [[[f64; 2]; 2]; 2];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    input_state: RawInputState,
    #[serde(default)]
    device: Vec<RawElement>,
    #[serde(default = "default_shots")]
    shots_per_setting: u64,
    #[serde(default = "default_efficiency")]
    detector_efficiency: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    reference_vector: Option<RawReference>,
    #[serde(default = "default_resamples")]
    bootstrap_resamples: usize,
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

fn default_efficiency() -> f64 {
    1.0
}

fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum RawInputState {
    Bell(usize),
    Matrix(RawMatrix),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    phi_over_pi: Option<f64>,
    theta_over_pi: Option<f64>,
    matrix: Option<RawMatrix>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawReference {
    Keyword(String),
    Pair([usize; 2]),
}

fn to_matrix(raw: &RawMatrix, path: &str) -> Result<ComplexMatrix2, ConfigError> {
    ComplexMatrix2::new(raw.map(|row| row.map(|[re, im]| num_complex::Complex64::new(re, im))))
        .map_err(|e| ConfigError::at(path, e.to_string()))
}

/// Parses and validates a JSON configuration, filling in defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::at(if path == "." { "<document>".into() } else { path }, e.into_inner().to_string())
    })?;

    let input_state = match &raw.input_state {
        RawInputState::Bell(k) => InputState::Bell(
            BellIndex::new(*k).map_err(|e| ConfigError::at("input_state.bell", e.to_string()))?,
        ),
        RawInputState::Matrix(m) => {
            let path = "input_state.matrix";
            let state = TwoQubitPureState::normalized(to_matrix(m, path)?)
                .map_err(|e| ConfigError::at(path, e.to_string()))?;
            if !state.is_full_rank() {
                return Err(ConfigError::at(
                    path,
                    format!(
                        "input state is not full-rank (|det| = {:.3e} after normalization); the device cannot be recovered by inversion",
                        state.matrix().det().norm()
                    ),
                ));
            }
            InputState::Matrix(state)
        }
    };

    let mut elements = Vec::with_capacity(raw.device.len());
    for (k, el) in raw.device.iter().enumerate() {
        let path = format!("device[{k}]");
        let element = match (el.phi_over_pi, el.theta_over_pi, &el.matrix) {
            (Some(phi), Some(theta), None) => DeviceElement::Plate(
                WavePlateSpec::from_multiples_of_pi(phi, theta).map_err(|e| ConfigError::at(&path, e.to_string()))?,
            ),
            (None, None, Some(m)) => {
                let path = format!("{path}.matrix");
                let m = to_matrix(m, &path)?;
                if !m.is_unitary(CONFIG_UNITARY_TOLERANCE) {
                    return Err(ConfigError::at(
                        path,
                        format!("matrix is not unitary (|U†U - I| = {:.3e})", m.unitarity_defect()),
                    ));
                }
                DeviceElement::Matrix(m)
            }
            _ => {
                return Err(ConfigError::at(
                    path,
                    "expected either {phi_over_pi, theta_over_pi} or {matrix}",
                ))
            }
        };
        elements.push(element);
    }

    let detector = DetectorModel::new(raw.detector_efficiency)
        .map_err(|e| ConfigError::at("detector_efficiency", e.to_string()))?;

    let reference = match raw.reference_vector {
        None => ReferenceChoice::Auto,
        Some(RawReference::Keyword(k)) if k.eq_ignore_ascii_case("auto") => ReferenceChoice::Auto,
        Some(RawReference::Keyword(k)) => {
            return Err(ConfigError::at("reference_vector", format!("expected \"auto\" or [n, m], got {k:?}")))
        }
        Some(RawReference::Pair([n, m])) => ReferenceChoice::Fixed(
            BasisPair::new(n, m).map_err(|e| ConfigError::at("reference_vector", e.to_string()))?,
        ),
    };

    if raw.bootstrap_resamples == 1 {
        return Err(ConfigError::at(
            "bootstrap_resamples",
            "needs at least 2 resamples (or 0 to disable)",
        ));
    }

    Ok(ExperimentConfig {
        input_state,
        device: DeviceSpec::new(elements),
        shots_per_setting: raw.shots_per_setting,
        detector,
        seed: raw.seed,
        reference,
        bootstrap_resamples: raw.bootstrap_resamples,
    })
}
