//! Random-state scatter data and bound-violation counts.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{concurrence, mems_min_q2, random_separable_state};
use crate::error::{Error, Result};
use crate::rfi::RfiReport;
use crate::rng::{substream, SimRng};
use crate::state::{DensityMatrix, Subsystem};

/// Slack on every bound comparison.
pub const BOUND_SLACK: f64 = 1e-9;

pub const BAND_LABELS: [&str; 6] = ["<=0.5", "0.5-0.6", "0.6-0.7", "0.7-0.8", "0.8-0.9", ">0.9"];

pub fn purity_band(purity: f64) -> usize {
    match purity {
        p if p <= 0.5 => 0,
        p if p <= 0.6 => 1,
        p if p <= 0.7 => 2,
        p if p <= 0.8 => 3,
        p if p <= 0.9 => 4,
        _ => 5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// Ginibre states of uniform rank 1..=4, half of them mixed with `I/4`
    /// at a uniform weight to fill the low-purity bands.
    Mixed,
    /// Ginibre rank 1 (Haar-random pure states).
    Pure,
}

pub fn sample_state<R: Rng + ?Sized>(rng: &mut R, ensemble: Ensemble) -> DensityMatrix {
    match ensemble {
        Ensemble::Pure => DensityMatrix::random(rng, 1).expect("rank in range"),
        Ensemble::Mixed => {
            let rank = rng.random_range(1..=4);
            let rho = DensityMatrix::random(rng, rank).expect("rank in range");
            if rng.random_bool(0.5) {
                let w: f64 = rng.random();
                rho.mix(&DensityMatrix::maximally_mixed(), w).expect("weight in range")
            } else {
                rho
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub band: &'static str,
    pub purity: f64,
    pub concurrence: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Checks {
    lower_bound: bool,
    mems: bool,
    sandwich: bool,
    pure_residual: f64,
}

fn evaluate(rho: &DensityMatrix) -> (Point, Checks) {
    let t = rho.pauli_table();
    let r = RfiReport::from_table(&t);
    let c = concurrence(rho);
    let p = rho.purity();
    let pa = rho.partial_trace(Subsystem::A).purity();
    let pb = rho.partial_trace(Subsystem::B).purity();
    let checks = Checks {
        lower_bound: c * c < (r.q2 - 1.0) / 2.0 - BOUND_SLACK,
        mems: r.q2 < mems_min_q2(c) - BOUND_SLACK,
        sandwich: c * c < 2.0 * (p - pa).max(p - pb) - BOUND_SLACK || c * c > 2.0 * (1.0 - pa).min(1.0 - pb) + BOUND_SLACK,
        pure_residual: (r.q2 - 1.0 - 2.0 * c * c).abs(),
    };
    let point = Point {
        band: BAND_LABELS[purity_band(p)],
        purity: p,
        concurrence: c,
        q2: r.normalized.q2,
        q3: r.normalized.q3,
        q4: r.normalized.q4,
        q5: r.normalized.q5,
    };
    (point, checks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub samples: usize,
    pub ensemble: Ensemble,
    pub seed: u64,
    /// Proven lower bound `C² ≥ (Q₂ − 1)/2`; must be zero.
    pub lower_bound_violations: usize,
    /// MEMS-conjectured upper bound; reported, not assumed.
    pub mems_violations: usize,
    pub mems_proven: bool,
    /// Purity sandwich on `C²`; must be zero.
    pub sandwich_violations: usize,
    pub band_counts: [usize; 6],
    /// Largest normalized Q₂ among states of purity ≤ 0.5.
    pub max_q2_low_purity: Option<f64>,
    /// Whether any state of purity ≤ 0.5 crosses `Q₂ = 1`.
    pub low_purity_crosses_q2_one: bool,
    /// Largest `|Q₂ − 1 − 2C²|`, meaningful for the pure ensemble.
    pub max_pure_identity_residual: f64,
}

pub struct Run {
    pub points: Vec<Point>,
    pub summary: Summary,
}

/// Sample `n` states; sample `k` draws from sub-stream `k` of `seed`, so the
/// output does not depend on the thread count.
pub fn run(samples: usize, seed: u64, ensemble: Ensemble) -> Result<Run> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let results: Vec<(Point, Checks)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng: SimRng = substream(seed, k as u64);
            evaluate(&sample_state(&mut rng, ensemble))
        })
        .collect();
    let mut summary = Summary {
        samples,
        ensemble,
        seed,
        lower_bound_violations: 0,
        mems_violations: 0,
        mems_proven: false,
        sandwich_violations: 0,
        band_counts: [0; 6],
        max_q2_low_purity: None,
        low_purity_crosses_q2_one: false,
        max_pure_identity_residual: 0.0,
    };
    for (p, c) in &results {
        summary.lower_bound_violations += c.lower_bound as usize;
        summary.mems_violations += c.mems as usize;
        summary.sandwich_violations += c.sandwich as usize;
        summary.band_counts[purity_band(p.purity)] += 1;
        summary.max_pure_identity_residual = summary.max_pure_identity_residual.max(c.pure_residual);
        if purity_band(p.purity) == 0 {
            let q2 = p.q2;
            summary.max_q2_low_purity = Some(summary.max_q2_low_purity.map_or(q2, |m: f64| m.max(q2)));
            summary.low_purity_crosses_q2_one |= q2 * crate::rfi::Q2_MAX > 1.0;
        }
    }
    Ok(Run {
        points: results.into_iter().map(|(p, _)| p).collect(),
        summary,
    })
}

pub fn write_points_csv<W: Write>(writer: W, points: &[Point]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["purity_band", "purity", "concurrence", "q2_norm", "q3_norm", "q4_norm", "q5_norm"])?;
    for p in points {
        wtr.write_record([
            p.band.to_string(),
            format!("{:.12}", p.purity),
            format!("{:.12}", p.concurrence),
            format!("{:.12}", p.q2),
            format!("{:.12}", p.q3),
            format!("{:.12}", p.q4),
            format!("{:.12}", p.q5),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Count separable states violating `tr ρ_r² ≥ tr ρ²` beyond [`BOUND_SLACK`].
pub fn separable_purity_violations(samples: usize, seed: u64) -> usize {
    (0..samples)
        .into_par_iter()
        .filter(|&k| {
            let rho = random_separable_state(&mut substream(seed, k as u64));
            let p = rho.purity();
            let pa = rho.partial_trace(Subsystem::A).purity();
            let pb = rho.partial_trace(Subsystem::B).purity();
            p > pa + BOUND_SLACK || p > pb + BOUND_SLACK
        })
        .count()
}
