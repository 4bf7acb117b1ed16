//! End-to-end orchestration: simulate both datasets, reconstruct, compare.

use rand::RngCore;
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::entangled::apply_local;
use crate::error::Error;
use crate::linalg::ComplexMatrix2;
use crate::measurement::{run_experiment, CountsTable};
use crate::report::{element_reports, state_report, DeviceReport, RunMetadata, RunReport};
use crate::rng::{stream_rng, PIPELINE_STREAM};
use crate::tomography::{
    align_phase, bootstrap_variances, gauge_fidelity, reconstruct_device, ReferenceChoice,
};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

fn at(stage: &'static str) -> impl FnOnce(Error) -> PipelineError {
    move |source| PipelineError { stage, source }
}

/// Seeds for the independent random parts of one run, all derived from the
/// configured master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSeeds {
    pub input: u64,
    pub output: u64,
    pub bootstrap: u64,
}

impl RunSeeds {
    pub fn derive(master: u64) -> Self {
        let mut rng = stream_rng(master, PIPELINE_STREAM);
        Self {
            input: rng.next_u64(),
            output: rng.next_u64(),
            bootstrap: rng.next_u64(),
        }
    }
}

/// The two raw datasets of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedData {
    /// Entangled source measured directly (device absent).
    pub input: CountsTable,
    /// Device inserted on beam 1.
    pub output: CountsTable,
}

pub fn simulate(config: &ExperimentConfig) -> Result<SimulatedData, PipelineError> {
    let seeds = RunSeeds::derive(config.seed);
    let state = config.input_state.state();
    let out_state = apply_local(&config.device_matrix(), &state).map_err(at("device"))?;
    Ok(SimulatedData {
        input: run_experiment(&state, config.shots_per_setting, &config.detector, seeds.input),
        output: run_experiment(&out_state, config.shots_per_setting, &config.detector, seeds.output),
    })
}

/// Reconstruction options that do not depend on how the counts were obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructionOptions {
    pub reference: ReferenceChoice,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
    pub detector_efficiency: Option<f64>,
    pub seed: Option<u64>,
}

/// Counts → report. `theory`, when known, is phase-aligned to the estimate
/// for display and used for the fidelity figures.
pub fn reconstruct_report(
    data: &SimulatedData,
    theory: Option<&ComplexMatrix2>,
    options: &ReconstructionOptions,
) -> Result<RunReport, PipelineError> {
    let rec = reconstruct_device(&data.input, &data.output, options.reference).map_err(at("reconstruction"))?;
    let boot = if options.bootstrap_resamples >= 2 {
        Some(
            bootstrap_variances(
                &data.input,
                &data.output,
                options.reference,
                options.bootstrap_resamples,
                options.bootstrap_seed,
            )
            .map_err(at("bootstrap"))?,
        )
    } else {
        None
    };
    let u_hat = rec.unitary.u_hat;
    let aligned_theory = theory.map(|t| align_phase(&u_hat, t));
    let fidelity = |m: &ComplexMatrix2| theory.map(|t| gauge_fidelity(t, m)).transpose();
    let (r, c) = rec.unitary.gauge_element;
    Ok(RunReport {
        input_state: state_report(&rec.input, boot.as_ref().map(|b| &b.input_state)),
        output_state: state_report(&rec.output, boot.as_ref().map(|b| &b.output_state)),
        device: DeviceReport {
            gauge_element: [r, c],
            elements: element_reports("U", &u_hat, boot.as_ref().map(|b| &b.unitary), aligned_theory.as_ref()),
            unitary_projection: rec.unitary.u_unitary,
        },
        gauge_fidelity: fidelity(&u_hat).map_err(at("fidelity"))?,
        gauge_fidelity_unitary: fidelity(&rec.unitary.u_unitary).map_err(at("fidelity"))?,
        metadata: RunMetadata {
            shots_per_setting: data.input.shots_requested().max(data.output.shots_requested()),
            detector_efficiency: options.detector_efficiency,
            seed: options.seed,
            reference_mode: match options.reference {
                ReferenceChoice::Auto => "auto".into(),
                ReferenceChoice::Fixed(p) => p.to_string(),
            },
            bootstrap_resamples: boot.map_or(0, |b| b.resamples),
            input_coincidences: data.input.total(),
            output_coincidences: data.output.total(),
        },
    })
}

/// Simulates both datasets for `config`, reconstructs the device and compares
/// it with the composed theory matrix. Deterministic for a given seed.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<RunReport, PipelineError> {
    run_pipeline_with_data(config).map(|(report, _)| report)
}

/// [`run_pipeline`], also returning the simulated counts.
pub fn run_pipeline_with_data(config: &ExperimentConfig) -> Result<(RunReport, SimulatedData), PipelineError> {
    let data = simulate(config)?;
    let options = ReconstructionOptions {
        reference: config.reference,
        bootstrap_resamples: config.bootstrap_resamples,
        bootstrap_seed: RunSeeds::derive(config.seed).bootstrap,
        detector_efficiency: Some(config.detector.efficiency()),
        seed: Some(config.seed),
    };
    let report = reconstruct_report(&data, Some(&config.device_matrix()), &options)?;
    Ok((report, data))
}
