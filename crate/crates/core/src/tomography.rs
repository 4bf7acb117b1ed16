//! Inverse problem: coincidence counts → Pauli correlations → state matrices →
//! device unitary, plus bootstrap error bars and phase-invariant comparison.
//!
//! With correlations `s_ij = ⟨σ_i ⊗ σ_j⟩` and a reference basis vector
//! `|r⟩ = |r₁r₂⟩`, the tomographic expansion gives
//!
//! ```text
//! Ψ_nm · Ψ*_r = ¼ Σ_ij Q_ij(nm) s_ij,     Q_ij(nm) = ⟨n|σ_i|r₁⟩⟨m|σ_j|r₂⟩
//! ```
//!
//! and dividing by `√p`, `p = |Ψ_r|²`, yields `Ψ` with `Ψ_r` real and
//! non-negative. The global phase is not observable, so every matrix
//! produced here is defined up to one overall phase.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entangled::{CorrelationTensor, TwoQubitPureState, RANK_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix2, ZERO};
use crate::measurement::{
    outcome_probabilities, sample_setting, CountsTable, OutcomeCounts, OutcomeProbabilities, Setting,
    OUTCOME_SIGNS,
};
use crate::pauli::PAULI_MATRICES;
use crate::rng::{stream_rng, BOOTSTRAP_STREAMS};

/// Smallest reference probability accepted before dividing by `√p`.
pub const DEFAULT_P_MIN: f64 = 1e-3;

/// Default number of bootstrap resamples.
pub const DEFAULT_RESAMPLES: usize = 200;

/// Anything that provides (possibly fractional) coincidence counts per setting,
/// in [`OUTCOME_SIGNS`] order.
pub trait CoincidenceData {
    fn setting_counts(&self, setting: Setting) -> [f64; 4];

    /// Nominal number of pairs per setting.
    fn nominal_shots(&self) -> u64;
}

impl CoincidenceData for CountsTable {
    fn setting_counts(&self, setting: Setting) -> [f64; 4] {
        self.get(setting).as_array().map(|n| n as f64)
    }

    fn nominal_shots(&self) -> u64 {
        self.shots_requested()
    }
}

/// Expected counts `shots · P(a, b)` for a known state.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedCounts {
    weights: [[f64; 4]; 9],
    shots: u64,
}

impl ExpectedCounts {
    pub fn from_state(state: &TwoQubitPureState, shots: u64) -> Self {
        let weights = Setting::all().map(|s| outcome_probabilities(state, s).0.map(|p| p * shots as f64));
        Self { weights, shots }
    }

    /// Integer counts closest to the expectation (each cell rounded).
    pub fn rounded(&self) -> CountsTable {
        let counts = self.weights.map(|w| OutcomeCounts::from_array(w.map(|x| x.round() as u64)));
        CountsTable::new(counts, self.shots, None)
    }
}

impl CoincidenceData for ExpectedCounts {
    fn setting_counts(&self, setting: Setting) -> [f64; 4] {
        self.weights[setting.index()]
    }

    fn nominal_shots(&self) -> u64 {
        self.shots
    }
}

/// Estimated correlation tensor `ŝ_ij` with standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub values: [[f64; 4]; 4],
    pub std_errors: [[f64; 4]; 4],
    pub shots: u64,
}

impl CorrelationEstimate {
    /// Noise-free estimate from an exact tensor.
    pub fn exact(tensor: &CorrelationTensor) -> Self {
        Self {
            values: *tensor.values(),
            std_errors: [[0.0; 4]; 4],
            shots: 0,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

/// Averages of `a·b`, `a` and `b` over the coincidences.
///
/// Beam-1 marginals `ŝ_α0` pool the three settings that measure α on beam 1
/// (count-weighted), likewise `ŝ_0β`. Standard errors are binomial:
/// `√((1 − ŝ²)/N)`.
pub fn estimate_correlations<D: CoincidenceData + ?Sized>(data: &D) -> Result<CorrelationEstimate> {
    let mut values = [[0.0; 4]; 4];
    let mut std_errors = [[0.0; 4]; 4];
    let mut sum_a = [0.0; 4];
    let mut tot_a = [0.0; 4];
    let mut sum_b = [0.0; 4];
    let mut tot_b = [0.0; 4];

    let se = |mean: f64, n: f64| ((1.0 - mean * mean).max(0.0) / n).sqrt();

    for setting in Setting::all() {
        let counts = data.setting_counts(setting);
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySetting { setting });
        }
        let (i, j) = (setting.alpha.index(), setting.beta.index());
        let mut ab = 0.0;
        for ((a, b), n) in OUTCOME_SIGNS.iter().zip(counts) {
            ab += (a * b) as f64 * n;
            sum_a[i] += *a as f64 * n;
            sum_b[j] += *b as f64 * n;
        }
        tot_a[i] += total;
        tot_b[j] += total;
        let mean = ab / total;
        values[i][j] = mean;
        std_errors[i][j] = se(mean, total);
    }
    for k in 1..4 {
        let a = sum_a[k] / tot_a[k];
        values[k][0] = a;
        std_errors[k][0] = se(a, tot_a[k]);
        let b = sum_b[k] / tot_b[k];
        values[0][k] = b;
        std_errors[0][k] = se(b, tot_b[k]);
    }
    values[0][0] = 1.0;
    Ok(CorrelationEstimate {
        values,
        std_errors,
        shots: data.nominal_shots(),
    })
}

/// Product basis vector `|n⟩⊗|m⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct BasisPair {
    n: usize,
    m: usize,
}

impl BasisPair {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        for idx in [n, m] {
            if idx > 1 {
                return Err(Error::BasisIndex(idx));
            }
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn all() -> [BasisPair; 4] {
        [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(n, m)| Self { n, m })
    }
}

impl fmt::Display for BasisPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}{}>", self.n, self.m)
    }
}

impl TryFrom<[usize; 2]> for BasisPair {
    type Error = Error;

    fn try_from(v: [usize; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<BasisPair> for [usize; 2] {
    fn from(p: BasisPair) -> Self {
        [p.n, p.m]
    }
}

/// Which basis vector fixes the normalization and phase of a reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReferenceChoice {
    /// The basis vector with the largest estimated probability.
    #[default]
    Auto,
    Fixed(BasisPair),
}

/// `Q_ij(nm) = ⟨n|σ_i|r₁⟩·⟨m|σ_j|r₂⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QTensor {
    values: [[Complex64; 4]; 4],
}

impl QTensor {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i][j]
    }

    /// `¼ Σ_ij Q_ij s_ij`.
    pub fn contract(&self, corr: &[[f64; 4]; 4]) -> Complex64 {
        let mut acc = ZERO;
        for (qrow, srow) in self.values.iter().zip(corr) {
            for (q, s) in qrow.iter().zip(srow) {
                acc += q * s;
            }
        }
        acc * 0.25
    }
}

pub fn q_tensor(target: BasisPair, reference: BasisPair) -> QTensor {
    let mut values = [[ZERO; 4]; 4];
    for (i, row) in values.iter_mut().enumerate() {
        let left = PAULI_MATRICES[i].get(target.n, reference.n);
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = left * PAULI_MATRICES[j].get(target.m, reference.m);
        }
    }
    QTensor { values }
}

/// Estimate of `|Ψ_r|²` from correlations: `¼ Σ_ij Q_ij(r; r) ŝ_ij`, which
/// expands to `¼(1 ± ŝ₃₀ ± ŝ₀₃ ± ŝ₃₃)` with signs set by `r`.
pub fn reference_probability(corr: &CorrelationEstimate, reference: BasisPair) -> f64 {
    q_tensor(reference, reference).contract(&corr.values).re
}

/// A reconstructed two-qubit state matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEstimate {
    pub psi_hat: ComplexMatrix2,
    /// Entry that was made real and non-negative.
    pub reference: BasisPair,
    /// Estimated probability of the reference basis vector.
    pub p_hat: f64,
}

pub fn reconstruct_state(corr: &CorrelationEstimate, reference: ReferenceChoice) -> Result<StateEstimate> {
    reconstruct_state_with(corr, reference, DEFAULT_P_MIN)
}

pub fn reconstruct_state_with(
    corr: &CorrelationEstimate,
    reference: ReferenceChoice,
    p_min: f64,
) -> Result<StateEstimate> {
    let (reference, p_hat) = match reference {
        ReferenceChoice::Fixed(r) => (r, reference_probability(corr, r)),
        ReferenceChoice::Auto => BasisPair::all()
            .into_iter()
            .map(|r| (r, reference_probability(corr, r)))
            .fold(None, |best: Option<(BasisPair, f64)>, cand| match best {
                Some(b) if b.1 >= cand.1 => Some(b),
                _ => Some(cand),
            })
            .expect("four candidates"),
    };
    if p_hat.is_nan() || p_hat <= p_min {
        return Err(Error::LowReferenceProbability { reference, p_hat, p_min });
    }
    let norm = 1.0 / p_hat.sqrt();
    let mut entries = [[ZERO; 2]; 2];
    for target in BasisPair::all() {
        entries[target.n][target.m] = q_tensor(target, reference).contract(&corr.values) * norm;
    }
    entries[reference.n][reference.m] = Complex64::new(p_hat.sqrt(), 0.0);
    Ok(StateEstimate {
        psi_hat: ComplexMatrix2::new(entries)?,
        reference,
        p_hat,
    })
}

/// Per-element variances of the real and imaginary parts of a 2×2 estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ElementVariances {
    pub re: [[f64; 2]; 2],
    pub im: [[f64; 2]; 2],
}

impl ElementVariances {
    pub fn std_dev_re(&self, r: usize, c: usize) -> f64 {
        self.re[r][c].sqrt()
    }

    pub fn std_dev_im(&self, r: usize, c: usize) -> f64 {
        self.im[r][c].sqrt()
    }

    /// Unbiased sample variances over a set of matrices.
    pub fn from_samples(samples: &[ComplexMatrix2]) -> Self {
        let n = samples.len() as f64;
        let mut out = Self::default();
        for r in 0..2 {
            for c in 0..2 {
                let (mut sr, mut si) = (0.0, 0.0);
                for m in samples {
                    sr += m.get(r, c).re;
                    si += m.get(r, c).im;
                }
                let (mr, mi) = (sr / n, si / n);
                let (mut vr, mut vi) = (0.0, 0.0);
                for m in samples {
                    vr += (m.get(r, c).re - mr).powi(2);
                    vi += (m.get(r, c).im - mi).powi(2);
                }
                out.re[r][c] = vr / (n - 1.0);
                out.im[r][c] = vi / (n - 1.0);
            }
        }
        out
    }
}

/// Reconstructed device matrix.
///
/// Phase convention: the largest-magnitude entry of `u_hat` (at
/// `gauge_element`) is real and non-negative; `u_unitary` shares that phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryEstimate {
    /// `(UΨ)^ · Ψ̂⁻¹`, not forced to be unitary.
    pub u_hat: ComplexMatrix2,
    /// Nearest unitary to `u_hat` (polar decomposition).
    pub u_unitary: ComplexMatrix2,
    pub gauge_element: (usize, usize),
    pub variances: Option<ElementVariances>,
}

/// `Û = (UΨ)^ · Ψ̂⁻¹`.
pub fn reconstruct_unitary(input: &StateEstimate, output: &StateEstimate) -> Result<UnitaryEstimate> {
    let inverse = input.psi_hat.inverse(RANK_TOLERANCE).ok_or(Error::NotFullRank {
        det: input.psi_hat.det().norm(),
    })?;
    let (u_hat, gauge_element) = fix_gauge(&(output.psi_hat * inverse));
    let u_unitary = u_hat.nearest_unitary()?;
    Ok(UnitaryEstimate {
        u_hat,
        u_unitary,
        gauge_element,
        variances: None,
    })
}

/// Rephases `m` so its largest-magnitude entry (first in row-major order on
/// ties) is real and non-negative.
pub fn fix_gauge(m: &ComplexMatrix2) -> (ComplexMatrix2, (usize, usize)) {
    let mut best = (0, 0);
    for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        if m.get(r, c).norm() > m.get(best.0, best.1).norm() {
            best = (r, c);
        }
    }
    let z = m.get(best.0, best.1);
    if z.norm() == 0.0 {
        return (*m, best);
    }
    let mut out = m.scale(z.conj() / z.norm());
    let mut entries = *out.entries();
    entries[best.0][best.1] = Complex64::new(z.norm(), 0.0);
    out = ComplexMatrix2::from_entries(entries);
    (out, best)
}

/// Rephases `m` so that `Tr(target† m)` is real and non-negative, i.e. the
/// global phase that brings `m` closest to `target`.
pub fn align_phase(target: &ComplexMatrix2, m: &ComplexMatrix2) -> ComplexMatrix2 {
    let overlap = target.inner(m);
    if overlap.norm() == 0.0 {
        return *m;
    }
    m.scale(overlap.conj() / overlap.norm())
}

/// `|Tr(A†B)| / (‖A‖_F ‖B‖_F)`, in `[0, 1]` and blind to global phases.
pub fn gauge_fidelity(reference_u: &ComplexMatrix2, estimate_u: &ComplexMatrix2) -> Result<f64> {
    let (na, nb) = (reference_u.frobenius_norm(), estimate_u.frobenius_norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok((reference_u.inner(estimate_u).norm() / (na * nb)).min(1.0))
}

/// Both state reconstructions and the resulting device estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceReconstruction {
    pub input: StateEstimate,
    pub output: StateEstimate,
    pub unitary: UnitaryEstimate,
}

/// Full estimator: input-state data (no device) and output-state data
/// (device on beam 1) → device matrix.
pub fn reconstruct_device<A, B>(
    input_data: &A,
    output_data: &B,
    reference: ReferenceChoice,
) -> Result<DeviceReconstruction>
where
    A: CoincidenceData + ?Sized,
    B: CoincidenceData + ?Sized,
{
    reconstruct_device_with(input_data, output_data, reference, reference)
}

fn reconstruct_device_with<A, B>(
    input_data: &A,
    output_data: &B,
    input_reference: ReferenceChoice,
    output_reference: ReferenceChoice,
) -> Result<DeviceReconstruction>
where
    A: CoincidenceData + ?Sized,
    B: CoincidenceData + ?Sized,
{
    let input = reconstruct_state(&estimate_correlations(input_data)?, input_reference)?;
    let output = reconstruct_state(&estimate_correlations(output_data)?, output_reference)?;
    let unitary = reconstruct_unitary(&input, &output)?;
    Ok(DeviceReconstruction { input, output, unitary })
}

/// Bootstrap spreads of the state and device estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapVariances {
    pub input_state: ElementVariances,
    pub output_state: ElementVariances,
    pub unitary: ElementVariances,
    pub resamples: usize,
}

/// Nonparametric bootstrap: every setting's counts are redrawn from a
/// multinomial with the observed frequencies and total, and the whole
/// reconstruction is repeated.
///
/// Resamples reuse the reference vectors chosen by the point estimate, and each
/// resampled `Û` is phase-aligned to the point estimate before variances are
/// taken. Resample `k` draws from its own stream of `seed`.
pub fn bootstrap_variances(
    input_counts: &CountsTable,
    output_counts: &CountsTable,
    reference: ReferenceChoice,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapVariances> {
    if resamples < 2 {
        return Err(Error::TooFewResamples(resamples));
    }
    let point = reconstruct_device(input_counts, output_counts, reference)?;
    let in_ref = ReferenceChoice::Fixed(point.input.reference);
    let out_ref = ReferenceChoice::Fixed(point.output.reference);

    let draws: Vec<DeviceReconstruction> = (0..resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, BOOTSTRAP_STREAMS + k as u64);
            let a = resample_table(input_counts, &mut rng)?;
            let b = resample_table(output_counts, &mut rng)?;
            reconstruct_device_with(&a, &b, in_ref, out_ref)
        })
        .collect::<Result<_>>()?;

    let inputs: Vec<_> = draws.iter().map(|d| d.input.psi_hat).collect();
    let outputs: Vec<_> = draws.iter().map(|d| d.output.psi_hat).collect();
    let unitaries: Vec<_> = draws
        .iter()
        .map(|d| align_phase(&point.unitary.u_hat, &d.unitary.u_hat))
        .collect();
    Ok(BootstrapVariances {
        input_state: ElementVariances::from_samples(&inputs),
        output_state: ElementVariances::from_samples(&outputs),
        unitary: ElementVariances::from_samples(&unitaries),
        resamples,
    })
}

fn resample_table<R: rand::Rng + ?Sized>(table: &CountsTable, rng: &mut R) -> Result<CountsTable> {
    let mut counts = [OutcomeCounts::default(); 9];
    for (slot, (setting, observed)) in counts.iter_mut().zip(table.iter()) {
        let total = observed.total();
        if total == 0 {
            return Err(Error::EmptySetting { setting });
        }
        let freq = OutcomeProbabilities(observed.as_array().map(|n| n as f64 / total as f64));
        *slot = sample_setting(&freq, total, rng)?;
    }
    Ok(CountsTable::new(counts, table.shots_requested(), table.seed()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entangled::{apply_local, bell_state, correlation_tensor, BellIndex};
    use crate::measurement::{run_experiment, Axis, DetectorModel};
    use crate::pauli::WavePlateSpec;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn bell(k: usize) -> TwoQubitPureState {
        bell_state(BellIndex::new(k).unwrap())
    }

    fn pair(n: usize, m: usize) -> BasisPair {
        BasisPair::new(n, m).unwrap()
    }

    fn exact(state: &TwoQubitPureState) -> CorrelationEstimate {
        CorrelationEstimate::exact(&correlation_tensor(state))
    }

    fn nonzero_q(q: &QTensor) -> Vec<((usize, usize), Complex64)> {
        let mut out = vec![];
        for i in 0..4 {
            for j in 0..4 {
                if q.get(i, j).norm() > 0.0 {
                    out.push(((i, j), q.get(i, j)));
                }
            }
        }
        out
    }

    #[test]
    fn q_tensor_examples() {
        let c = |re, im| Complex64::new(re, im);
        let q = q_tensor(pair(0, 1), pair(0, 1));
        assert_eq!(
            nonzero_q(&q),
            vec![((0, 0), c(1.0, 0.0)), ((0, 3), c(-1.0, 0.0)), ((3, 0), c(1.0, 0.0)), ((3, 3), c(-1.0, 0.0))]
        );
        let q = q_tensor(pair(1, 1), pair(0, 1));
        assert_eq!(
            nonzero_q(&q),
            vec![((1, 0), c(1.0, 0.0)), ((1, 3), c(-1.0, 0.0)), ((2, 0), c(0.0, 1.0)), ((2, 3), c(0.0, -1.0))]
        );
    }

    #[test]
    fn estimate_from_product_state() {
        let state = TwoQubitPureState::basis(0, 0).unwrap();
        let est = estimate_correlations(&ExpectedCounts::from_state(&state, 1000).rounded()).unwrap();
        assert_eq!(est.get(3, 3), 1.0);
        assert_eq!(est.get(3, 0), 1.0);
        assert_eq!(est.get(0, 3), 1.0);
        assert_eq!(est.get(0, 0), 1.0);
        assert_eq!(est.std_errors[0][0], 0.0);
    }

    #[test]
    fn estimate_from_singlet_counts() {
        let table = ExpectedCounts::from_state(&bell(2), 4000).rounded();
        let est = estimate_correlations(&table).unwrap();
        for a in 1..4 {
            assert_eq!(est.get(a, a), -1.0);
        }
        assert_eq!(est.shots, 4000);
    }

    #[test]
    fn empty_setting_is_named() {
        let mut counts = [OutcomeCounts::from_array([1, 2, 3, 4]); 9];
        counts[Setting::new(Axis::Y, Axis::Z).index()] = OutcomeCounts::default();
        let err = estimate_correlations(&CountsTable::new(counts, 10, None)).unwrap_err();
        assert_eq!(err, Error::EmptySetting { setting: Setting::new(Axis::Y, Axis::Z) });
        assert!(err.to_string().contains("(y,z)"));
    }

    #[test]
    fn reference_probability_of_triplet() {
        let corr = exact(&bell(1));
        assert!((reference_probability(&corr, pair(0, 1)) - 0.5).abs() < 1e-15);
        assert!(reference_probability(&corr, pair(0, 0)).abs() < 1e-15);
    }

    #[test]
    fn reconstruct_triplet_with_paper_reference() {
        let est = reconstruct_state(&exact(&bell(1)), ReferenceChoice::Fixed(pair(0, 1))).unwrap();
        assert!((est.p_hat - 0.5).abs() < 1e-15);
        assert_eq!(est.psi_hat.get(0, 1), Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert!(est.psi_hat.approx_eq(bell(1).matrix(), 1e-15));
    }

    #[test]
    fn zero_overlap_reference_fails_or_switches() {
        let corr = exact(&bell(0));
        let err = reconstruct_state(&corr, ReferenceChoice::Fixed(pair(0, 1))).unwrap_err();
        assert!(matches!(err, Error::LowReferenceProbability { .. }));
        let auto = reconstruct_state(&corr, ReferenceChoice::Auto).unwrap();
        assert_eq!(auto.reference, pair(0, 0));
        assert!(auto.psi_hat.approx_eq(bell(0).matrix(), 1e-15));
        let fixed = reconstruct_state(&corr, ReferenceChoice::Fixed(pair(0, 0))).unwrap();
        assert!(fixed.psi_hat.approx_eq(bell(0).matrix(), 1e-15));
    }

    #[test]
    fn unitary_of_identical_states_is_identity() {
        let s = reconstruct_state(&exact(&bell(3)), ReferenceChoice::Auto).unwrap();
        let u = reconstruct_unitary(&s, &s).unwrap();
        assert!(u.u_hat.approx_eq(&ComplexMatrix2::identity(), 1e-14));
        assert_eq!(u.gauge_element, (0, 0));
    }

    #[test]
    fn singular_input_is_rejected() {
        let s = reconstruct_state(&exact(&TwoQubitPureState::basis(0, 0).unwrap()), ReferenceChoice::Auto).unwrap();
        let err = reconstruct_unitary(&s, &s).unwrap_err();
        assert!(matches!(err, Error::NotFullRank { .. }));
        assert!(err.to_string().contains("full-rank"));
    }

    #[test]
    fn exact_pipeline_recovers_diagonal_plate() {
        let w = WavePlateSpec::new(PI, PI / 8.0).unwrap().matrix();
        let out_state = apply_local(&w, &bell(1)).unwrap();
        let rec = reconstruct_device(
            &ExpectedCounts::from_state(&bell(1), 1),
            &ExpectedCounts::from_state(&out_state, 1),
            ReferenceChoice::Auto,
        )
        .unwrap();
        let h = ComplexMatrix2::from_real([[1.0, 1.0], [1.0, -1.0]]).unwrap().scale_real(FRAC_1_SQRT_2);
        assert!(rec.unitary.u_hat.approx_eq(&h, 1e-12), "{}", rec.unitary.u_hat);
        assert!((gauge_fidelity(&h, &rec.unitary.u_unitary).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let w = WavePlateSpec::new(1.3, 0.2).unwrap().matrix();
        assert!((gauge_fidelity(&w, &w).unwrap() - 1.0).abs() < 1e-15);
        for g in [0.3, 2.0, -1.7] {
            let f = gauge_fidelity(&w, &w.scale(Complex64::from_polar(1.0, g))).unwrap();
            assert!((f - 1.0).abs() < 1e-15);
        }
        assert_eq!(gauge_fidelity(&PAULI_MATRICES[1], &PAULI_MATRICES[3]).unwrap(), 0.0);
        assert_eq!(gauge_fidelity(&ComplexMatrix2::zero(), &w), Err(Error::ZeroMatrix));
    }

    #[test]
    fn gauge_fix_makes_largest_entry_real() {
        let m = ComplexMatrix2::new([
            [Complex64::new(0.1, 0.2), Complex64::new(-0.5, 0.6)],
            [Complex64::new(0.0, 0.3), Complex64::new(0.2, 0.0)],
        ])
        .unwrap();
        let (g, at) = fix_gauge(&m);
        assert_eq!(at, (0, 1));
        assert_eq!(g.get(0, 1).im, 0.0);
        assert!(g.get(0, 1).re > 0.0);
        assert!((gauge_fidelity(&m, &g).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_needs_two_resamples() {
        let t = run_experiment(&bell(1), 100, &DetectorModel::ideal(), 0);
        assert_eq!(
            bootstrap_variances(&t, &t, ReferenceChoice::Auto, 1, 0),
            Err(Error::TooFewResamples(1))
        );
    }

    #[test]
    fn bootstrap_rejects_empty_settings() {
        let t = run_experiment(&bell(1), 0, &DetectorModel::ideal(), 0);
        assert!(matches!(
            bootstrap_variances(&t, &t, ReferenceChoice::Auto, 10, 0),
            Err(Error::EmptySetting { .. })
        ));
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let w = WavePlateSpec::from_multiples_of_pi(0.45, -0.138).unwrap().matrix();
        let a = run_experiment(&bell(1), 2000, &DetectorModel::ideal(), 1);
        let b = run_experiment(&apply_local(&w, &bell(1)).unwrap(), 2000, &DetectorModel::ideal(), 2);
        let v1 = bootstrap_variances(&a, &b, ReferenceChoice::Auto, 50, 9).unwrap();
        let v2 = bootstrap_variances(&a, &b, ReferenceChoice::Auto, 50, 9).unwrap();
        assert_eq!(v1, v2);
        let v3 = bootstrap_variances(&a, &b, ReferenceChoice::Auto, 50, 10).unwrap();
        assert_ne!(v1, v3);
    }

    #[test]
    fn sample_variance_is_unbiased_form() {
        let samples = [ComplexMatrix2::identity(), ComplexMatrix2::identity().scale_real(3.0)];
        let v = ElementVariances::from_samples(&samples);
        assert_eq!(v.re[0][0], 2.0);
        assert_eq!(v.re[0][1], 0.0);
        assert_eq!(v.im[1][1], 0.0);
    }
}
