//! Simulated coincidence counts, expectation estimates with Poisson error
//! bars, and the adaptive few-setting Q₂ bound.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::Verdict;
use crate::error::{Error, Result};
use crate::measured::{Measured, MeasuredTable};
use crate::rng::{substream, SimRng};
use crate::state::{DensityMatrix, LocalRotation, PauliTable};

/// All nine correlation settings in row-major order.
pub const SETTINGS: [(usize, usize); 9] = [
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 1),
    (2, 2),
    (2, 3),
    (3, 1),
    (3, 2),
    (3, 3),
];

pub const DEFAULT_FIDELITY: f64 = 0.91;
pub const DEFAULT_BUDGET: u64 = 100_000;

pub fn check_setting(setting: (usize, usize)) -> Result<()> {
    let (i, j) = setting;
    if !(1..=3).contains(&i) || !(1..=3).contains(&j) {
        return Err(Error::InvalidSetting(i, j));
    }
    Ok(())
}

fn setting_index(setting: (usize, usize)) -> usize {
    3 * (setting.0 - 1) + (setting.1 - 1)
}

/// Coincidence counts for one setting, ordered `[n_pp, n_pm, n_mp, n_mm]`
/// (first sign for qubit A).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: (usize, usize),
    pub counts: [u64; 4],
    /// Pairs emitted per setting (mean of the total count).
    pub budget: u64,
}

impl CountRecord {
    pub fn new(setting: (usize, usize), counts: [u64; 4], budget: u64) -> Result<Self> {
        check_setting(setting)?;
        Ok(CountRecord { setting, counts, budget })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// `E = (s − d)/N` with `σ² = 4sd/N³`, the first-order Poisson error for
/// independent counts split into agreeing (`s`) and disagreeing (`d`) groups.
fn signed_fraction(s: u64, d: u64) -> Measured {
    let (s, d) = (s as f64, d as f64);
    let n = s + d;
    Measured {
        value: (s - d) / n,
        sigma: (4.0 * s * d / (n * n * n)).sqrt(),
    }
}

fn nonempty(record: &CountRecord) -> Result<()> {
    check_setting(record.setting)?;
    if record.total() == 0 {
        return Err(Error::EmptyRecord(record.setting.0, record.setting.1));
    }
    Ok(())
}

/// `⟨σ_i σ_j⟩ = (n_pp − n_pm − n_mp + n_mm)/N`.
pub fn estimate_expectation(record: &CountRecord) -> Result<Measured> {
    nonempty(record)?;
    let [pp, pm, mp, mm] = record.counts;
    Ok(signed_fraction(pp + mm, pm + mp))
}

/// `⟨σ_i σ_0⟩` from the same counts, marginalizing over qubit B.
pub fn estimate_marginal_a(record: &CountRecord) -> Result<Measured> {
    nonempty(record)?;
    let [pp, pm, mp, mm] = record.counts;
    Ok(signed_fraction(pp + pm, mp + mm))
}

/// `⟨σ_0 σ_j⟩`, marginalizing over qubit A.
pub fn estimate_marginal_b(record: &CountRecord) -> Result<Measured> {
    nonempty(record)?;
    let [pp, pm, mp, mm] = record.counts;
    Ok(signed_fraction(pp + mp, pm + mm))
}

fn mean_of(estimates: &[Measured]) -> Measured {
    let n = estimates.len() as f64;
    Measured {
        value: estimates.iter().map(|m| m.value).sum::<f64>() / n,
        sigma: estimates.iter().map(|m| m.sigma * m.sigma).sum::<f64>().sqrt() / n,
    }
}

/// Index the nine records by setting, rejecting duplicates and gaps.
pub fn index_records(records: &[CountRecord]) -> Result<[CountRecord; 9]> {
    let mut slots: [Option<CountRecord>; 9] = [None; 9];
    for r in records {
        check_setting(r.setting)?;
        let k = setting_index(r.setting);
        if slots[k].is_some() {
            return Err(Error::DuplicateSetting(r.setting.0, r.setting.1));
        }
        slots[k] = Some(*r);
    }
    let missing: Vec<_> = SETTINGS.iter().zip(&slots).filter(|(_, s)| s.is_none()).map(|(p, _)| *p).collect();
    if !missing.is_empty() {
        return Err(Error::MissingSettings(missing));
    }
    Ok(slots.map(|s| s.expect("checked above")))
}

/// Full measured table from the nine correlation settings. Each marginal is
/// the mean of its three compatible estimates; `t[0][0] = 1` exactly.
pub fn estimate_table(records: &[CountRecord]) -> Result<MeasuredTable> {
    let recs = index_records(records)?;
    let mut table = MeasuredTable::exact(PauliTable::default());
    for r in &recs {
        table.set(r.setting.0, r.setting.1, estimate_expectation(r)?);
    }
    for k in 1..=3 {
        let a: Vec<_> = recs.iter().filter(|r| r.setting.0 == k).map(estimate_marginal_a).collect::<Result<_>>()?;
        let b: Vec<_> = recs.iter().filter(|r| r.setting.1 == k).map(estimate_marginal_b).collect::<Result<_>>()?;
        table.set(k, 0, mean_of(&a));
        table.set(0, k, mean_of(&b));
    }
    Ok(table)
}

/// The three per-setting estimates of each marginal, `[A: t10,t20,t30; B: t01,t02,t03]`,
/// for self-consistency checks.
pub fn marginal_estimates(records: &[CountRecord]) -> Result<[[[Measured; 3]; 3]; 2]> {
    let recs = index_records(records)?;
    let mut out = [[[Measured::exact(0.0); 3]; 3]; 2];
    for r in &recs {
        let (i, j) = r.setting;
        out[0][i - 1][j - 1] = estimate_marginal_a(r)?;
        out[1][j - 1][i - 1] = estimate_marginal_b(r)?;
    }
    Ok(out)
}

/// Outcome probabilities `[p_pp, p_pm, p_mp, p_mm]` for a setting.
pub fn outcome_probabilities(table: &PauliTable, setting: (usize, usize)) -> Result<[f64; 4]> {
    check_setting(setting)?;
    let (i, j) = setting;
    let p = |a: f64, b: f64| ((1.0 + a * table[(i, 0)] + b * table[(0, j)] + a * b * table[(i, j)]) / 4.0).max(0.0);
    Ok([p(1.0, 1.0), p(1.0, -1.0), p(-1.0, 1.0), p(-1.0, -1.0)])
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
    draw as u64
}

/// Poisson counts with means `budget × p_ab` for one setting.
pub fn sample_counts<R: Rng + ?Sized>(
    rng: &mut R,
    table: &PauliTable,
    setting: (usize, usize),
    budget: u64,
) -> Result<CountRecord> {
    let probs = outcome_probabilities(table, setting)?;
    let counts = probs.map(|p| poisson(rng, budget as f64 * p));
    Ok(CountRecord { setting, counts, budget })
}

/// Exact (noise-free) expected counts, rounded; for analytic fixtures.
pub fn expected_counts(table: &PauliTable, setting: (usize, usize), budget: u64) -> Result<CountRecord> {
    let probs = outcome_probabilities(table, setting)?;
    Ok(CountRecord {
        setting,
        counts: probs.map(|p| (budget as f64 * p).round() as u64),
        budget,
    })
}

/// Isotropic-noise Bell state `p|φ⁻⟩⟨φ⁻| + (1 − p) I/4` with fidelity `F`
/// to `|φ⁻⟩`, i.e. `p = (4F − 1)/3`.
pub fn state_for_fidelity(fidelity: f64) -> Result<DensityMatrix> {
    if !(fidelity > 0.25 && fidelity <= 1.0) {
        return Err(Error::InvalidParameter(format!("fidelity {fidelity} outside (0.25, 1]")));
    }
    DensityMatrix::werner((4.0 * fidelity - 1.0) / 3.0)
}

/// Simulated photon source: a target state seen through a local rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pub state: DensityMatrix,
    pub rotation: LocalRotation,
    pub pairs_per_setting: u64,
    pub seed: u64,
}

impl SourceModel {
    pub fn new(state: DensityMatrix, rotation: LocalRotation, pairs_per_setting: u64, seed: u64) -> Result<Self> {
        if pairs_per_setting == 0 {
            return Err(Error::InvalidParameter("pairs per setting must be positive".into()));
        }
        Ok(SourceModel {
            state,
            rotation,
            pairs_per_setting,
            seed,
        })
    }

    /// Fidelity-0.91 isotropic source, unrotated, 10⁵ pairs per setting.
    pub fn default_source(seed: u64) -> Self {
        SourceModel {
            state: state_for_fidelity(DEFAULT_FIDELITY).expect("valid default fidelity"),
            rotation: LocalRotation::identity(),
            pairs_per_setting: DEFAULT_BUDGET,
            seed,
        }
    }

    /// The state actually measured, `(R_A ⊗ R_B) ρ (R_A ⊗ R_B)†`.
    pub fn measured_state(&self) -> DensityMatrix {
        self.state.rotate(&self.rotation)
    }

    fn stream(&self, setting: (usize, usize)) -> SimRng {
        substream(self.seed, setting_index(setting) as u64)
    }
}

/// Source for rotation `k` (1-based) of a multi-rotation run. Rotation 1 is
/// the identity; later ones are Haar draws. Each rotation takes its rotation
/// and model seed from sub-stream `k` of `seed`.
pub fn rotation_model(state: &DensityMatrix, pairs_per_setting: u64, seed: u64, k: usize) -> Result<SourceModel> {
    if k == 0 {
        return Err(Error::InvalidParameter("rotations are numbered from 1".into()));
    }
    let mut rng = substream(seed, k as u64);
    let rotation = if k == 1 { LocalRotation::identity() } else { LocalRotation::haar(&mut rng) };
    SourceModel::new(state.clone(), rotation, pairs_per_setting, rng.random())
}

/// Counts for one setting. Each setting draws from its own sub-stream of the
/// model seed, so results do not depend on the order settings are simulated.
pub fn simulate_counts(model: &SourceModel, setting: (usize, usize)) -> Result<CountRecord> {
    check_setting(setting)?;
    let table = model.measured_state().pauli_table();
    sample_counts(&mut model.stream(setting), &table, setting, model.pairs_per_setting)
}

/// All nine settings, in [`SETTINGS`] order.
pub fn simulate_all(model: &SourceModel) -> Result<Vec<CountRecord>> {
    let table = model.measured_state().pauli_table();
    SETTINGS
        .par_iter()
        .map(|&s| sample_counts(&mut model.stream(s), &table, s, model.pairs_per_setting))
        .collect()
}

/// Anything that can answer a correlation setting with a measured value.
pub trait MeasurementOracle {
    fn measure(&mut self, setting: (usize, usize)) -> Result<Measured>;
}

/// Oracle backed by a simulated source.
#[derive(Debug, Clone)]
pub struct SimulatedOracle {
    pub model: SourceModel,
}

impl MeasurementOracle for SimulatedOracle {
    fn measure(&mut self, setting: (usize, usize)) -> Result<Measured> {
        estimate_expectation(&simulate_counts(&self.model, setting)?)
    }
}

/// Oracle replaying previously recorded counts.
#[derive(Debug, Clone)]
pub struct RecordOracle {
    pub records: Vec<CountRecord>,
}

impl MeasurementOracle for RecordOracle {
    fn measure(&mut self, setting: (usize, usize)) -> Result<Measured> {
        let r = self
            .records
            .iter()
            .find(|r| r.setting == setting)
            .ok_or_else(|| Error::Oracle(format!("no record for setting {setting:?}")))?;
        estimate_expectation(r)
    }
}

impl<F: FnMut((usize, usize)) -> Result<Measured>> MeasurementOracle for F {
    fn measure(&mut self, setting: (usize, usize)) -> Result<Measured> {
        self(setting)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOutcome {
    /// Running lower bound `Σ t_ij²` over the measured settings.
    pub bound: Measured,
    pub settings: Vec<(usize, usize)>,
    pub values: Vec<Measured>,
    pub verdict: Verdict,
}

/// Predicted `t_ij²` for an unmeasured setting, assuming unit-norm rows and
/// columns (the correlation block of a maximally entangled state is
/// orthogonal) and spreading each row's and column's unexplained weight
/// evenly over its unmeasured entries.
fn predicted_square(known: &[[Option<f64>; 3]; 3], i: usize, j: usize) -> f64 {
    let residual = |cells: [Option<f64>; 3]| {
        let seen: f64 = cells.iter().flatten().map(|v| v * v).sum();
        let unknown = cells.iter().filter(|c| c.is_none()).count().max(1);
        (1.0 - seen).max(0.0) / unknown as f64
    };
    let row = known[i];
    let col = [known[0][j], known[1][j], known[2][j]];
    0.5 * (residual(row) + residual(col))
}

/// Next setting by largest predicted magnitude, ties to the lowest index.
fn next_setting(known: &[[Option<f64>; 3]; 3], candidates: &[(usize, usize)]) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for &(i, j) in candidates {
        if known[i - 1][j - 1].is_some() {
            continue;
        }
        let p = predicted_square(known, i - 1, j - 1);
        if best.is_none_or(|(_, b)| p > b) {
            best = Some(((i, j), p));
        }
    }
    best.map(|(s, _)| s)
}

/// Measure settings one at a time until `Σ t_ij² − z σ > 1` certifies
/// entanglement or `max_settings` is reached.
///
/// Order: `(3,3)`, `(1,1)`, then the better of `(1,2)`, `(2,1)`, `(2,2)` by
/// predicted magnitude, then the remaining settings greedily by the same
/// predictor.
pub fn adaptive_q2_bound(
    oracle: &mut dyn MeasurementOracle,
    max_settings: usize,
    z: f64,
) -> Result<AdaptiveOutcome> {
    if !(1..=9).contains(&max_settings) {
        return Err(Error::InvalidParameter(format!("max_settings {max_settings} outside 1..=9")));
    }
    let mut known = [[None; 3]; 3];
    let mut out = AdaptiveOutcome {
        bound: Measured::exact(0.0),
        settings: Vec::new(),
        values: Vec::new(),
        verdict: Verdict::Inconclusive,
    };
    let mut variance = 0.0;
    while out.settings.len() < max_settings {
        let setting = match out.settings.len() {
            0 => (3, 3),
            1 => (1, 1),
            2 => next_setting(&known, &[(1, 2), (2, 1), (2, 2)]).expect("unmeasured candidates"),
            _ => match next_setting(&known, &SETTINGS) {
                Some(s) => s,
                None => break,
            },
        };
        let m = oracle.measure(setting)?;
        known[setting.0 - 1][setting.1 - 1] = Some(m.value);
        out.settings.push(setting);
        out.values.push(m);
        out.bound.value += m.value * m.value;
        variance += (2.0 * m.value * m.sigma).powi(2);
        out.bound.sigma = variance.sqrt();
        if out.bound.value - z * out.bound.sigma > 1.0 {
            out.verdict = Verdict::Entangled;
            break;
        }
    }
    Ok(out)
}
