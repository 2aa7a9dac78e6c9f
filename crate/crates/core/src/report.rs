//! Full analysis of one measured table: invariants, purities, concurrence
//! bounds, entropy bounds and the tomography comparison.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    concurrence_interval_from_purities, concurrence_interval_from_q2, purity_separability_test, ConcurrenceInterval,
    Verdict, DEFAULT_Z,
};
use crate::entropy::{
    largest_pairs, mercator_lower_bound_measured, s2_from_table, s2_upper_bound_measured, DEFAULT_MERCATOR_DEPTH,
};
use crate::error::Result;
use crate::measured::{Measured, MeasuredTable};
use crate::measurement::{estimate_table, CountRecord};
use crate::rfi::{Quantity, Q2_MAX, Q3_MAX, Q4_MAX, Q5_MAX};
use crate::state::PauliTable;
use crate::tomography::{compare_tables, Comparison};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub z: f64,
    pub mercator_depth: usize,
    /// Number of largest-magnitude entries used for the S₂ bound.
    pub s2_pairs: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            z: DEFAULT_Z,
            mercator_depth: DEFAULT_MERCATOR_DEPTH,
            s2_pairs: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredNormalized {
    pub q2: Measured,
    pub q3: Measured,
    pub q4: Measured,
    pub q5: Measured,
}

/// Every invariant with propagated uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredRfi {
    pub q1_a: Measured,
    pub q1_b: Measured,
    pub q2: Measured,
    pub q3: Measured,
    pub q4: Measured,
    pub q5: Measured,
    pub g: Measured,
    pub y: Measured,
    pub z1: Measured,
    pub z2: Measured,
    pub normalized: MeasuredNormalized,
}

fn scaled(m: Measured, max: f64) -> Measured {
    Measured {
        value: m.value / max,
        sigma: m.sigma / max,
    }
}

impl MeasuredRfi {
    pub fn from_table(table: &MeasuredTable) -> Result<Self> {
        let v = Quantity::ALL.map(|q| table.propagate(|t| q.eval(t)));
        let [q1_a, q1_b, q2, q3, q4, q5, g, y, z1, z2] = v;
        let (q2, q3, q4, q5) = (q2?, q3?, q4?, q5?);
        Ok(MeasuredRfi {
            q1_a: q1_a?,
            q1_b: q1_b?,
            q2,
            q3,
            q4,
            q5,
            g: g?,
            y: y?,
            z1: z1?,
            z2: z2?,
            normalized: MeasuredNormalized {
                q2: scaled(q2, Q2_MAX),
                q3: scaled(q3, Q3_MAX),
                q4: scaled(q4, Q4_MAX),
                q5: scaled(q5, Q5_MAX),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Purities {
    pub full: Measured,
    pub a: Measured,
    pub b: Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityTest {
    pub verdict: Verdict,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S2Bound {
    /// The subset 𝕊 of table entries; `(0,0)` is always counted.
    pub pairs: Vec<(usize, usize)>,
    pub value: Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MercatorBound {
    pub depth: usize,
    pub value: Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimates {
    pub s2: Measured,
    pub s2_upper_bound: S2Bound,
    pub s1_lower_bound: MercatorBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub pauli_table: MeasuredTable,
    pub rfi: MeasuredRfi,
    pub purities: Purities,
    pub separability: SeparabilityTest,
    pub concurrence_from_q2: ConcurrenceInterval,
    pub concurrence_from_purities: ConcurrenceInterval,
    pub entropy: EntropyEstimates,
    pub tomography: Comparison,
}

impl Analysis {
    pub fn from_table(table: &MeasuredTable, opts: &AnalysisOptions) -> Result<Self> {
        let rfi = MeasuredRfi::from_table(table)?;
        let purities = Purities {
            full: table.propagate(PauliTable::purity)?,
            a: table.propagate(PauliTable::purity_a)?,
            b: table.propagate(PauliTable::purity_b)?,
        };
        let pairs = largest_pairs(&table.value, opts.s2_pairs);
        Ok(Analysis {
            pauli_table: *table,
            separability: SeparabilityTest {
                verdict: purity_separability_test(purities.full, purities.a, purities.b, opts.z),
                z: opts.z,
            },
            concurrence_from_q2: concurrence_interval_from_q2(rfi.q2)?,
            concurrence_from_purities: concurrence_interval_from_purities(purities.full, purities.a, purities.b)?,
            entropy: EntropyEstimates {
                s2: s2_from_table(table)?,
                s2_upper_bound: S2Bound {
                    value: s2_upper_bound_measured(table, &pairs)?,
                    pairs,
                },
                s1_lower_bound: MercatorBound {
                    depth: opts.mercator_depth,
                    value: mercator_lower_bound_measured(table, opts.mercator_depth)?,
                },
            },
            tomography: compare_tables(table, opts.s2_pairs, opts.mercator_depth)?,
            rfi,
            purities,
        })
    }

    pub fn from_records(records: &[CountRecord], opts: &AnalysisOptions) -> Result<Self> {
        Self::from_table(&estimate_table(records)?, opts)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let r = &self.rfi;
        let _ = writeln!(s, "Q2 = {}  (normalized {})", r.q2, r.normalized.q2);
        let _ = writeln!(s, "Q3 = {}  (normalized {})", r.q3, r.normalized.q3);
        let _ = writeln!(s, "Q4 = {}  (normalized {})", r.q4, r.normalized.q4);
        let _ = writeln!(s, "Q5 = {}  (normalized {})", r.q5, r.normalized.q5);
        let p = &self.purities;
        let _ = writeln!(s, "purities: full {}, A {}, B {}", p.full, p.a, p.b);
        let _ = writeln!(s, "purity test (z = {}): {:?}", self.separability.z, self.separability.verdict);
        let c = &self.concurrence_from_q2;
        let _ = writeln!(s, "C from Q2: [{}, {}] (upper bound unproven)", c.lower, c.upper);
        let c = &self.concurrence_from_purities;
        let _ = writeln!(s, "C from purities: [{}, {}]", c.lower, c.upper);
        let e = &self.entropy;
        let _ = writeln!(s, "S2 = {}, S2 <= {} over {:?}", e.s2, e.s2_upper_bound.value, e.s2_upper_bound.pairs);
        let _ = writeln!(s, "S1 >= {} (Mercator depth {})", e.s1_lower_bound.value, e.s1_lower_bound.depth);
        s.push_str(&self.tomography.to_text());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{expected_counts, SETTINGS};
    use crate::state::DensityMatrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_bell_counts() {
        let t = DensityMatrix::phi_minus().pauli_table();
        let recs: Vec<_> = SETTINGS.iter().map(|&s| expected_counts(&t, s, 1_000_000).unwrap()).collect();
        let a = Analysis::from_records(&recs, &AnalysisOptions::default()).unwrap();
        assert_abs_diff_eq!(a.rfi.q2.value, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.concurrence_from_q2.lower.value, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.concurrence_from_q2.upper.value, 1.0, epsilon = 1e-9);
        assert_eq!(a.separability.verdict, Verdict::Entangled);
        assert_eq!(a.entropy.s2_upper_bound.pairs.len(), 4);
    }

    #[test]
    fn json_has_canonical_fields() {
        let table = MeasuredTable::exact(DensityMatrix::werner(0.88).unwrap().pauli_table());
        let a = Analysis::from_table(&table, &AnalysisOptions::default()).unwrap();
        let v = serde_json::to_value(&a).unwrap();
        assert!(v["pauli_table"]["value"].is_array());
        assert!(v["concurrence_from_q2"]["upper_proven"] == false);
        assert!(v["concurrence_from_purities"]["upper_proven"] == true);
        assert!(v["tomography"]["tomography"]["rho_linear"]["unphysical_flag"] == false);
        assert_eq!(v["entropy"]["s1_lower_bound"]["depth"], 3);
    }
}
