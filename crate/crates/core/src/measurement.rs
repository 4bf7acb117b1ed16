//! Forward model of the two-arm Pauli detection apparatus.
//!
//! Each arm measures σz with a polarizing beam splitter (outcome +1 when the
//! h detector fires, −1 for v); σx and σy are obtained by inserting a plate
//! in front of it. A coincidence gives one outcome pair per trial.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entangled::TwoQubitPureState;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix2;
use crate::pauli::{WavePlateSpec, SIGMA_X_PLATE_THETA, SIGMA_Y_PLATE_THETA};
use crate::rng::{stream_rng, EXPERIMENT_STREAMS};

/// Measurement axis of one arm. Discriminants match the Pauli index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X = 1,
    Y = 2,
    Z = 3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Axis::X),
            2 => Ok(Axis::Y),
            3 => Ok(Axis::Z),
            _ => Err(Error::AxisIndex(i)),
        }
    }

    /// Pauli index 1..=3.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    /// Eigenvectors of σ_axis for eigenvalues +1 and −1.
    pub fn eigenvectors(self) -> [[Complex64; 2]; 2] {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let ri = Complex64::new(0.0, FRAC_1_SQRT_2);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Axis::X => [[r, r], [r, -r]],
            Axis::Y => [[r, ri], [r, -ri]],
            Axis::Z => [[one, zero], [zero, one]],
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" | "1" => Ok(Axis::X),
            "y" | "Y" | "2" => Ok(Axis::Y),
            "z" | "Z" | "3" => Ok(Axis::Z),
            other => Err(Error::CountsFormat(format!("unknown axis {other:?}"))),
        }
    }
}

/// Joint setting: `alpha` on beam 1, `beta` on beam 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Setting {
    pub alpha: Axis,
    pub beta: Axis,
}

impl Setting {
    pub fn new(alpha: Axis, beta: Axis) -> Self {
        Self { alpha, beta }
    }

    /// All nine settings in row-major `(alpha, beta)` order.
    pub fn all() -> [Setting; 9] {
        let mut out = [Setting::new(Axis::X, Axis::X); 9];
        for (k, s) in out.iter_mut().enumerate() {
            *s = Setting::new(Axis::ALL[k / 3], Axis::ALL[k % 3]);
        }
        out
    }

    /// Position in [`Setting::all`].
    pub fn index(self) -> usize {
        (self.alpha.index() - 1) * 3 + (self.beta.index() - 1)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.alpha, self.beta)
    }
}

/// Outcome-pair signs in storage order: (+,+), (+,−), (−,+), (−,−).
pub const OUTCOME_SIGNS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Coincidence counts of one setting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
}

impl OutcomeCounts {
    pub fn from_array(a: [u64; 4]) -> Self {
        Self {
            n_pp: a[0],
            n_pm: a[1],
            n_mp: a[2],
            n_mm: a[3],
        }
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.n_pp, self.n_pm, self.n_mp, self.n_mm]
    }

    pub fn total(&self) -> u64 {
        self.as_array().iter().sum()
    }
}

/// Joint outcome probabilities in [`OUTCOME_SIGNS`] order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeProbabilities(pub [f64; 4]);

impl OutcomeProbabilities {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Per-detector quantum efficiency; a coincidence needs both arms to fire.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    efficiency: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64) -> Result<Self> {
        if efficiency > 0.0 && efficiency <= 1.0 {
            Ok(Self { efficiency })
        } else {
            Err(Error::InvalidEfficiency(efficiency))
        }
    }

    pub fn ideal() -> Self {
        Self { efficiency: 1.0 }
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Probability that a pair yields a coincidence.
    pub fn coincidence_probability(&self) -> f64 {
        self.efficiency * self.efficiency
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Raw data of a run: outcome counts for all nine settings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountsTable {
    counts: [OutcomeCounts; 9],
    shots_requested: u64,
    seed: Option<u64>,
}

pub const CSV_HEADER: [&str; 5] = ["alpha", "beta", "outcome_a", "outcome_b", "count"];

impl CountsTable {
    /// `counts` is indexed like [`Setting::all`]. `seed` is `None` for data
    /// that did not come from the simulator.
    pub fn new(counts: [OutcomeCounts; 9], shots_requested: u64, seed: Option<u64>) -> Self {
        Self {
            counts,
            shots_requested,
            seed,
        }
    }

    pub fn get(&self, setting: Setting) -> &OutcomeCounts {
        &self.counts[setting.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Setting, &OutcomeCounts)> {
        Setting::all().into_iter().zip(self.counts.iter())
    }

    pub fn shots_requested(&self) -> u64 {
        self.shots_requested
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(OutcomeCounts::total).sum()
    }

    /// Writes the 36-row CSV form: `alpha,beta,outcome_a,outcome_b,count`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::CountsFormat(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for (setting, counts) in self.iter() {
            for ((a, b), n) in OUTCOME_SIGNS.iter().zip(counts.as_array()) {
                w.write_record([
                    setting.alpha.symbol(),
                    setting.beta.symbol(),
                    sign_label(*a),
                    sign_label(*b),
                    &n.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::CountsFormat(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }

    /// Parses the CSV form. Every (setting, outcome) cell must appear exactly once.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let fmt_err = |msg: String| Error::CountsFormat(msg);
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers().map_err(|e| fmt_err(e.to_string()))?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(fmt_err(format!("expected header {}", CSV_HEADER.join(","))));
        }
        let mut cells: [[Option<u64>; 4]; 9] = [[None; 4]; 9];
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|e| fmt_err(e.to_string()))?;
            let row = line + 2;
            if record.len() != 5 {
                return Err(fmt_err(format!("row {row}: expected 5 fields")));
            }
            let setting = Setting::new(record[0].parse()?, record[1].parse()?);
            let a = parse_sign(&record[2]).ok_or_else(|| fmt_err(format!("row {row}: bad outcome_a")))?;
            let b = parse_sign(&record[3]).ok_or_else(|| fmt_err(format!("row {row}: bad outcome_b")))?;
            let n: u64 = record[4]
                .parse()
                .map_err(|_| fmt_err(format!("row {row}: bad count {:?}", &record[4])))?;
            let cell = OUTCOME_SIGNS.iter().position(|&s| s == (a, b)).expect("all sign pairs listed");
            let slot = &mut cells[setting.index()][cell];
            if slot.is_some() {
                return Err(fmt_err(format!("row {row}: duplicate cell for {setting}")));
            }
            *slot = Some(n);
        }
        let mut counts = [OutcomeCounts::default(); 9];
        for (k, (out, cell)) in counts.iter_mut().zip(cells.iter()).enumerate() {
            let mut arr = [0; 4];
            for (dst, src) in arr.iter_mut().zip(cell) {
                *dst = src.ok_or_else(|| fmt_err(format!("missing cells for setting {}", Setting::all()[k])))?;
            }
            *out = OutcomeCounts::from_array(arr);
        }
        let shots = counts.iter().map(OutcomeCounts::total).max().unwrap_or(0);
        Ok(Self::new(counts, shots, None))
    }
}

fn sign_label(s: i8) -> &'static str {
    if s > 0 {
        "+1"
    } else {
        "-1"
    }
}

fn parse_sign(s: &str) -> Option<i8> {
    match s {
        "+1" | "1" => Some(1),
        "-1" | "\u{2212}1" => Some(-1),
        _ => None,
    }
}

/// Plate that turns a σz detector into a σ_axis detector: λ/2 at π/8 for x,
/// λ/4 at π/4 for y, nothing for z.
pub fn detector_plate_for(axis: Axis) -> Option<WavePlateSpec> {
    match axis {
        Axis::X => Some(WavePlateSpec::new(PI, SIGMA_X_PLATE_THETA).expect("finite")),
        Axis::Y => Some(WavePlateSpec::new(FRAC_PI_2, SIGMA_Y_PLATE_THETA).expect("finite")),
        Axis::Z => None,
    }
}

/// `P(a, b) = |(⟨e_a^α| ⊗ ⟨e_b^β|) |Ψ⟩⟩|²`.
pub fn outcome_probabilities(state: &TwoQubitPureState, setting: Setting) -> OutcomeProbabilities {
    let psi = state.matrix();
    let ea = setting.alpha.eigenvectors();
    let eb = setting.beta.eigenvectors();
    let mut p = [0.0; 4];
    for (k, cell) in p.iter_mut().enumerate() {
        let (u, v) = (&ea[k / 2], &eb[k % 2]);
        let mut amp = Complex64::new(0.0, 0.0);
        for n in 0..2 {
            for m in 0..2 {
                amp += u[n].conj() * psi.get(n, m) * v[m].conj();
            }
        }
        *cell = amp.norm_sqr();
    }
    OutcomeProbabilities(p)
}

/// Same probabilities as [`outcome_probabilities`], computed the way the
/// apparatus does it: detector plates act on each beam, then both arms
/// measure σz.
pub fn outcome_probabilities_with_plates(
    state: &TwoQubitPureState,
    setting: Setting,
) -> OutcomeProbabilities {
    let plate = |axis| {
        detector_plate_for(axis)
            .map(|p| p.matrix())
            .unwrap_or_else(ComplexMatrix2::identity)
    };
    // (A ⊗ B)|Ψ⟩⟩ has coefficient matrix A·Ψ·Bᵀ
    let rotated = plate(setting.alpha) * *state.matrix() * plate(setting.beta).transpose();
    OutcomeProbabilities([0, 1, 2, 3].map(|k| rotated.get(k / 2, k % 2).norm_sqr()))
}

/// One multinomial draw of `shots` trials, as a chain of binomials.
pub fn sample_setting<R: Rng + ?Sized>(
    probabilities: &OutcomeProbabilities,
    shots: u64,
    rng: &mut R,
) -> Result<OutcomeCounts> {
    let p = validate_probabilities(probabilities)?;
    let mut out = [0u64; 4];
    let mut remaining = shots;
    let mut mass = 1.0;
    for k in 0..3 {
        if remaining == 0 {
            break;
        }
        let q = if mass > 0.0 { (p[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, q)
            .map_err(|e| Error::InvalidProbabilities(e.to_string()))?
            .sample(rng);
        out[k] = draw;
        remaining -= draw;
        mass -= p[k];
    }
    out[3] = remaining;
    Ok(OutcomeCounts::from_array(out))
}

fn validate_probabilities(p: &OutcomeProbabilities) -> Result<[f64; 4]> {
    if p.0.iter().any(|x| !x.is_finite() || *x < -1e-12) {
        return Err(Error::InvalidProbabilities(format!("{:?}", p.0)));
    }
    let sum = p.sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbabilities(format!("sum {sum} != 1")));
    }
    Ok(p.0.map(|x| x.max(0.0) / sum))
}

/// Simulates `shots_per_setting` pairs for each of the nine settings.
///
/// With efficiency `q < 1` every pair is kept with probability `q²` before its
/// outcome is drawn. Setting `s` draws from stream `s.index()` of `seed`, so
/// the table does not depend on thread scheduling.
pub fn run_experiment(
    state: &TwoQubitPureState,
    shots_per_setting: u64,
    detector: &DetectorModel,
    seed: u64,
) -> CountsTable {
    let keep = detector.coincidence_probability();
    let counts: Vec<OutcomeCounts> = Setting::all()
        .par_iter()
        .map(|&setting| {
            let mut rng = stream_rng(seed, EXPERIMENT_STREAMS + setting.index() as u64);
            let kept = if keep < 1.0 {
                Binomial::new(shots_per_setting, keep)
                    .expect("efficiency validated")
                    .sample(&mut rng)
            } else {
                shots_per_setting
            };
            let probs = outcome_probabilities(state, setting);
            sample_setting(&probs, kept, &mut rng).expect("state probabilities are valid")
        })
        .collect();
    CountsTable::new(
        counts.try_into().expect("nine settings"),
        shots_per_setting,
        Some(seed),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entangled::{bell_state, correlation_tensor, BellIndex};
    use crate::pauli::{rotation_of, PAULI_MATRICES};
    use crate::rng::stream_rng;

    fn bell(k: usize) -> TwoQubitPureState {
        bell_state(BellIndex::new(k).unwrap())
    }

    fn close(a: [f64; 4], b: [f64; 4], tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn setting_indexing() {
        for (k, s) in Setting::all().iter().enumerate() {
            assert_eq!(s.index(), k);
        }
        assert_eq!(Setting::all()[5], Setting::new(Axis::Y, Axis::Z));
        assert!(matches!(Axis::from_index(0), Err(Error::AxisIndex(0))));
    }

    #[test]
    fn eigenvectors_match_pauli() {
        for axis in Axis::ALL {
            let sigma = PAULI_MATRICES[axis.index()];
            for (v, lambda) in axis.eigenvectors().iter().zip([1.0, -1.0]) {
                let sv = sigma.apply(*v);
                assert!((sv[0] - v[0] * lambda).norm() < 1e-15);
                assert!((sv[1] - v[1] * lambda).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn detector_plates() {
        assert_eq!(detector_plate_for(Axis::Z), None);
        let x = detector_plate_for(Axis::X).unwrap();
        assert_eq!((x.phi(), x.theta()), (PI, PI / 8.0));
        let y = detector_plate_for(Axis::Y).unwrap();
        assert_eq!((y.phi(), y.theta()), (FRAC_PI_2, PI / 4.0));
        // measuring σz after the plate measures the row of R mapped onto z
        for axis in [Axis::X, Axis::Y] {
            let r = rotation_of(&detector_plate_for(axis).unwrap().matrix()).unwrap();
            let mut want = [0.0; 3];
            want[axis.index() - 1] = 1.0;
            for (b, w) in want.iter().enumerate() {
                assert!((r.get(2, b) - w).abs() < 1e-12, "{axis}");
            }
        }
    }

    #[test]
    fn probability_examples() {
        let zz = Setting::new(Axis::Z, Axis::Z);
        let xx = Setting::new(Axis::X, Axis::X);
        assert!(close(outcome_probabilities(&bell(1), zz).0, [0.0, 0.5, 0.5, 0.0], 1e-15));
        assert!(close(outcome_probabilities(&bell(1), xx).0, [0.5, 0.0, 0.0, 0.5], 1e-15));
        let product = TwoQubitPureState::basis(0, 0).unwrap();
        assert!(close(outcome_probabilities(&product, zz).0, [1.0, 0.0, 0.0, 0.0], 0.0));
    }

    #[test]
    fn probabilities_follow_correlation_expansion() {
        // P(a,b) = ¼(1 + a·Δ_α0 + b·Δ_0β + a·b·Δ_αβ)
        let state = TwoQubitPureState::normalized(
            ComplexMatrix2::new([
                [Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.4)],
                [Complex64::new(0.2, -0.7), Complex64::new(0.6, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let t = correlation_tensor(&state);
        for s in Setting::all() {
            let p = outcome_probabilities(&state, s);
            for (k, (a, b)) in OUTCOME_SIGNS.iter().enumerate() {
                let (a, b) = (*a as f64, *b as f64);
                let want = 0.25
                    * (1.0 + a * t.get(s.alpha.index(), 0) + b * t.get(0, s.beta.index())
                        + a * b * t.get(s.alpha.index(), s.beta.index()));
                assert!((p.0[k] - want).abs() < 1e-12, "{s} {k}");
            }
            assert!(close(p.0, outcome_probabilities_with_plates(&state, s).0, 1e-12));
        }
    }

    #[test]
    fn sampling_edge_cases() {
        let mut rng = stream_rng(1, 0);
        let uniform = OutcomeProbabilities([0.25; 4]);
        assert_eq!(sample_setting(&uniform, 0, &mut rng).unwrap(), OutcomeCounts::default());
        let certain = OutcomeProbabilities([1.0, 0.0, 0.0, 0.0]);
        assert_eq!(sample_setting(&certain, 1234, &mut rng).unwrap().as_array(), [1234, 0, 0, 0]);
        let last = OutcomeProbabilities([0.0, 0.0, 0.0, 1.0]);
        assert_eq!(sample_setting(&last, 99, &mut rng).unwrap().as_array(), [0, 0, 0, 99]);
    }

    #[test]
    fn sampling_rejects_bad_probabilities() {
        let mut rng = stream_rng(1, 0);
        for bad in [[0.5, 0.5, 0.5, 0.0], [-0.1, 0.6, 0.25, 0.25], [f64::NAN, 0.0, 0.0, 1.0]] {
            assert!(matches!(
                sample_setting(&OutcomeProbabilities(bad), 10, &mut rng),
                Err(Error::InvalidProbabilities(_))
            ));
        }
    }

    #[test]
    fn uniform_sampling_within_five_sigma() {
        let mut rng = stream_rng(42, 0);
        let counts = sample_setting(&OutcomeProbabilities([0.25; 4]), 10_000, &mut rng).unwrap();
        let bound = 5.0 * (10_000.0f64 * 0.25 * 0.75).sqrt();
        for n in counts.as_array() {
            assert!((n as f64 - 2500.0).abs() <= bound, "{n}");
        }
        assert_eq!(counts.total(), 10_000);
    }

    #[test]
    fn experiment_totals() {
        let zero = run_experiment(&bell(1), 0, &DetectorModel::ideal(), 3);
        assert_eq!(zero.total(), 0);
        let full = run_experiment(&bell(1), 10_000, &DetectorModel::ideal(), 3);
        for (_, c) in full.iter() {
            assert_eq!(c.total(), 10_000);
        }
        assert_eq!(full.seed(), Some(3));
    }

    #[test]
    fn efficiency_thins_coincidences() {
        let det = DetectorModel::new(0.42).unwrap();
        let shots = 100_000u64;
        let table = run_experiment(&bell(1), shots, &det, 11);
        let q = 0.42f64 * 0.42;
        let sd = (shots as f64 * q * (1.0 - q)).sqrt();
        for (_, c) in table.iter() {
            assert!((c.total() as f64 - shots as f64 * q).abs() < 5.0 * sd);
        }
        assert!(DetectorModel::new(0.0).is_err());
        assert!(DetectorModel::new(1.01).is_err());
        assert!(DetectorModel::new(1.0).is_ok());
    }

    #[test]
    fn experiment_is_deterministic() {
        let det = DetectorModel::new(0.8).unwrap();
        let a = run_experiment(&bell(2), 5000, &det, 99);
        let b = run_experiment(&bell(2), 5000, &det, 99);
        let c = run_experiment(&bell(2), 5000, &det, 100);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn csv_layout() {
        let table = run_experiment(&bell(1), 100, &DetectorModel::ideal(), 5);
        let text = table.to_csv_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 37);
        assert_eq!(lines[0], "alpha,beta,outcome_a,outcome_b,count");
        assert!(lines[1].starts_with("x,x,+1,+1,"));
        assert!(lines[36].starts_with("z,z,-1,-1,"));
        let back = CountsTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.seed(), None);
        assert_eq!(back.shots_requested(), 100);
        for ((_, a), (_, b)) in table.iter().zip(back.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn csv_rejects_malformed() {
        let good = run_experiment(&bell(1), 10, &DetectorModel::ideal(), 5).to_csv_string();
        let missing: String = good.lines().take(30).map(|l| format!("{l}\n")).collect();
        assert!(CountsTable::read_csv(missing.as_bytes()).is_err());
        let dup = format!("{good}x,x,+1,+1,3\n");
        assert!(CountsTable::read_csv(dup.as_bytes()).is_err());
        let bad_header = good.replacen("count", "n", 1);
        assert!(CountsTable::read_csv(bad_header.as_bytes()).is_err());
        let bad_axis = good.replacen("x,x,+1,+1", "w,x,+1,+1", 1);
        assert!(CountsTable::read_csv(bad_axis.as_bytes()).is_err());
    }
}
