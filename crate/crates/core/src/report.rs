//! Run reports: a structured (JSON) form and an aligned text table.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::ComplexMatrix2;
use crate::tomography::{gauge_fidelity, BasisPair, ElementVariances, StateEstimate};

/// One complex matrix entry with optional bootstrap spread.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementReport {
    pub element: String,
    pub re: f64,
    pub im: f64,
    pub re_var: Option<f64>,
    pub im_var: Option<f64>,
    pub re_std: Option<f64>,
    pub im_std: Option<f64>,
    pub theory_re: Option<f64>,
    pub theory_im: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub reference: BasisPair,
    pub p_hat: f64,
    pub elements: Vec<ElementReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceReport {
    /// Entry of the raw estimate fixed real and non-negative.
    pub gauge_element: [usize; 2],
    /// Raw `Û`, its spread, and the theory matrix phase-aligned to it.
    pub elements: Vec<ElementReport>,
    /// Polar projection of `Û` onto the unitaries.
    pub unitary_projection: ComplexMatrix2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub shots_per_setting: u64,
    pub detector_efficiency: Option<f64>,
    pub seed: Option<u64>,
    pub reference_mode: String,
    pub bootstrap_resamples: usize,
    pub input_coincidences: u64,
    pub output_coincidences: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub input_state: StateReport,
    pub output_state: StateReport,
    pub device: DeviceReport,
    /// `|Tr(U_theory† Û)| / (‖U_theory‖‖Û‖)` for the raw estimate.
    pub gauge_fidelity: Option<f64>,
    /// Same for the unitary projection.
    pub gauge_fidelity_unitary: Option<f64>,
    pub metadata: RunMetadata,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Structured,
}

const ELEMENTS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

pub(crate) fn element_reports(
    prefix: &str,
    m: &ComplexMatrix2,
    variances: Option<&ElementVariances>,
    theory: Option<&ComplexMatrix2>,
) -> Vec<ElementReport> {
    ELEMENTS
        .iter()
        .map(|&(r, c)| {
            let z = m.get(r, c);
            let re_var = variances.map(|v| v.re[r][c]);
            let im_var = variances.map(|v| v.im[r][c]);
            ElementReport {
                element: format!("{prefix}{r}{c}"),
                re: z.re,
                im: z.im,
                re_var,
                im_var,
                re_std: re_var.map(f64::sqrt),
                im_std: im_var.map(f64::sqrt),
                theory_re: theory.map(|t| t.get(r, c).re),
                theory_im: theory.map(|t| t.get(r, c).im),
            }
        })
        .collect()
}

pub(crate) fn state_report(est: &StateEstimate, variances: Option<&ElementVariances>) -> StateReport {
    StateReport {
        reference: est.reference,
        p_hat: est.p_hat,
        elements: element_reports("psi", &est.psi_hat, variances, None),
    }
}

fn matrix_from(elements: &[ElementReport], pick: impl Fn(&ElementReport) -> Option<(f64, f64)>) -> Option<ComplexMatrix2> {
    if elements.len() != 4 {
        return None;
    }
    let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (&(r, c), e) in ELEMENTS.iter().zip(elements) {
        let (re, im) = pick(e)?;
        entries[r][c] = Complex64::new(re, im);
    }
    ComplexMatrix2::new(entries).ok()
}

impl DeviceReport {
    pub fn estimate(&self) -> Option<ComplexMatrix2> {
        matrix_from(&self.elements, |e| Some((e.re, e.im)))
    }

    pub fn theory(&self) -> Option<ComplexMatrix2> {
        matrix_from(&self.elements, |e| Some((e.theory_re?, e.theory_im?)))
    }
}

impl StateReport {
    pub fn estimate(&self) -> Option<ComplexMatrix2> {
        matrix_from(&self.elements, |e| Some((e.re, e.im)))
    }
}

impl RunReport {
    /// Recomputes the raw-estimate fidelity from the matrices in the report.
    pub fn recompute_fidelity(&self) -> Option<f64> {
        gauge_fidelity(&self.device.theory()?, &self.device.estimate()?).ok()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Renders the report. The text form is the 8-row table of Re/Im parts of
/// `U₀₀ … U₁₁` (estimate ± standard deviation, theory) plus summary lines.
pub fn emit_report(report: &RunReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
        ReportFormat::Text => render_text(report),
    }
}

fn opt(x: Option<f64>, width: usize) -> String {
    match x {
        Some(v) => format!("{v:>width$.6}"),
        None => format!("{:>width$}", "-"),
    }
}

fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    let m = &report.metadata;
    let _ = writeln!(out, "Pauli tomography report");
    let _ = writeln!(
        out,
        "shots/setting: {}  detector efficiency: {}  seed: {}  bootstrap resamples: {}  reference: {}",
        m.shots_per_setting,
        m.detector_efficiency.map_or("-".into(), |e| e.to_string()),
        m.seed.map_or("-".into(), |s| s.to_string()),
        m.bootstrap_resamples,
        m.reference_mode,
    );
    let _ = writeln!(
        out,
        "coincidences: input {}  output {}",
        m.input_coincidences, m.output_coincidences
    );
    for (label, st) in [("input", &report.input_state), ("output", &report.output_state)] {
        let _ = writeln!(out, "\n{label} state (reference {}, p_hat {:.6})", st.reference, st.p_hat);
        let _ = writeln!(out, "{:<10}{:>12}{:>12}{:>12}{:>12}", "element", "re", "re std", "im", "im std");
        for e in &st.elements {
            let _ = writeln!(
                out,
                "{:<10}{:>12.6}{}{:>12.6}{}",
                e.element,
                e.re,
                opt(e.re_std, 12),
                e.im,
                opt(e.im_std, 12)
            );
        }
    }
    let g = report.device.gauge_element;
    let _ = writeln!(out, "\ndevice matrix (phase: U{}{} real, non-negative)", g[0], g[1]);
    let _ = writeln!(out, "{:<10}{:>12}{:>12}{:>12}", "element", "estimate", "std", "theory");
    for e in &report.device.elements {
        for (part, value, std, theory) in [
            ("Re", e.re, e.re_std, e.theory_re),
            ("Im", e.im, e.im_std, e.theory_im),
        ] {
            let _ = writeln!(
                out,
                "{:<10}{:>12.6}{}{}",
                format!("{part} {}", e.element),
                value,
                opt(std, 12),
                opt(theory, 12)
            );
        }
    }
    let _ = writeln!(out, "\nunitary projection:\n{}", report.device.unitary_projection);
    let _ = writeln!(out, "gauge fidelity (raw): {}", opt(report.gauge_fidelity, 0).trim());
    let _ = writeln!(
        out,
        "gauge fidelity (unitary projection): {}",
        opt(report.gauge_fidelity_unitary, 0).trim()
    );
    out
}
