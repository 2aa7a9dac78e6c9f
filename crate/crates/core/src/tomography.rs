//! Linear-inversion tomography with a nearest-physical-state projection, and
//! the comparison of tomographic values against direct estimates.

use std::fmt::Write as _;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::bounds::{concurrence, concurrence_interval_from_purities, concurrence_interval_from_q2};
use crate::entropy::{
    largest_pairs, mercator_lower_bound_measured, s2_from_table, s2_upper_bound_measured, von_neumann,
};
use crate::error::Result;
use crate::measured::{Measured, MeasuredTable};
use crate::measurement::estimate_table;
use crate::measurement::CountRecord;
use crate::rfi::Quantity;
use crate::state::{DensityMatrix, Matrix4c, PauliTable, StateCandidate, C64, PSD_TOL};

/// Eq.-(1) reconstruction from the central values of a measured table.
pub fn linear_inversion(table: &MeasuredTable) -> StateCandidate {
    table.value.reconstruct()
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn simplex_projection(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Nearest (Frobenius) unit-trace PSD matrix: keep the eigenvectors and
/// project the spectrum onto the simplex. Inputs that are physical within
/// [`PSD_TOL`] are returned as is.
pub fn project_physical(candidate: &StateCandidate) -> DensityMatrix {
    let m = candidate.matrix;
    let eig = SymmetricEigen::new(m);
    let spectrum: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let total: f64 = spectrum.iter().sum();
    if spectrum.iter().all(|&l| l >= -PSD_TOL) && (total - 1.0).abs() <= 1e-12 {
        if let Ok(rho) = DensityMatrix::new(m) {
            return rho;
        }
    }
    let projected = simplex_projection(&spectrum);
    let d = Matrix4c::from_diagonal(&nalgebra::Vector4::from_iterator(
        projected.iter().map(|&l| C64::new(l, 0.0)),
    ));
    let mut rho = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
    rho = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let trace = rho.trace().re;
    rho /= C64::new(trace, 0.0);
    DensityMatrix::new(rho).expect("simplex projection yields a valid state")
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographyResult {
    pub rho_linear: StateCandidate,
    pub rho_physical: DensityMatrix,
    /// Frobenius distance between the linear and projected matrices.
    pub projection_distance: f64,
    pub concurrence: f64,
    pub q2: f64,
    pub s1: f64,
    pub s2: f64,
}

pub fn tomography(table: &MeasuredTable) -> Result<TomographyResult> {
    let rho_linear = linear_inversion(table);
    let rho_physical = project_physical(&rho_linear);
    let projection_distance = (rho_physical.matrix() - rho_linear.matrix).norm();
    let t = rho_physical.pauli_table();
    Ok(TomographyResult {
        projection_distance,
        concurrence: concurrence(&rho_physical),
        q2: crate::rfi::q2(&t),
        s1: von_neumann(&rho_physical)?,
        s2: -rho_physical.purity().ln(),
        rho_linear,
        rho_physical,
    })
}

/// Quantities computed directly from a measured table, with propagated σ.
///
/// The S₂ bound uses the `s2_pairs` largest entries of `reference`, so direct
/// and tomographic rows bound over the same subset.
pub fn direct_quantities(
    table: &MeasuredTable,
    reference: &PauliTable,
    s2_pairs: usize,
    mercator_depth: usize,
) -> Result<Vec<(&'static str, Measured)>> {
    let mut rows = Vec::new();
    for q in [Quantity::Q2, Quantity::Q3, Quantity::Q4, Quantity::Q5] {
        rows.push((q.name(), table.propagate(|t| q.eval(t))?));
    }
    let purity = table.propagate(PauliTable::purity)?;
    let purity_a = table.propagate(PauliTable::purity_a)?;
    let purity_b = table.propagate(PauliTable::purity_b)?;
    rows.push(("purity", purity));
    rows.push(("purity_a", purity_a));
    rows.push(("purity_b", purity_b));
    let q2 = rows[0].1;
    let by_q2 = concurrence_interval_from_q2(q2)?;
    let by_purity = concurrence_interval_from_purities(purity, purity_a, purity_b)?;
    rows.push(("c_lower_q2", by_q2.lower));
    rows.push(("c_upper_q2", by_q2.upper));
    rows.push(("c_lower_purity", by_purity.lower));
    rows.push(("c_upper_purity", by_purity.upper));
    rows.push(("s2", s2_from_table(table)?));
    rows.push(("s2_bound", s2_upper_bound_measured(table, &largest_pairs(reference, s2_pairs))?));
    rows.push(("s_mercator", mercator_lower_bound_measured(table, mercator_depth)?));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub direct: Measured,
    pub tomographic: f64,
    /// `tomographic − direct`.
    pub difference: f64,
    /// Difference in units of the direct σ.
    pub discrepancy_sigma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub tomography: TomographyResult,
}

/// Differences below this count as agreement when the direct σ is zero.
const EXACT_SLACK: f64 = 1e-12;

fn discrepancy(direct: Measured, tomographic: f64) -> f64 {
    let d = tomographic - direct.value;
    if direct.sigma > 0.0 {
        d / direct.sigma
    } else if d.abs() <= EXACT_SLACK {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

pub fn compare_tables(table: &MeasuredTable, s2_pairs: usize, mercator_depth: usize) -> Result<Comparison> {
    let tomo = tomography(table)?;
    let direct = direct_quantities(table, &table.value, s2_pairs, mercator_depth)?;
    let exact = MeasuredTable::exact(tomo.rho_physical.pauli_table());
    let point = direct_quantities(&exact, &table.value, s2_pairs, mercator_depth)?;
    let rows = direct
        .into_iter()
        .zip(point)
        .map(|((name, d), (_, p))| ComparisonRow {
            quantity: name.to_string(),
            direct: d,
            tomographic: p.value,
            difference: p.value - d.value,
            discrepancy_sigma: discrepancy(d, p.value),
        })
        .collect();
    Ok(Comparison { rows, tomography: tomo })
}

pub fn compare_direct_vs_tomography(
    records: &[CountRecord],
    s2_pairs: usize,
    mercator_depth: usize,
) -> Result<Comparison> {
    compare_tables(&estimate_table(records)?, s2_pairs, mercator_depth)
}

impl Comparison {
    pub fn max_abs_difference(&self) -> f64 {
        self.rows.iter().map(|r| r.difference.abs()).fold(0.0, f64::max)
    }

    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.quantity == name)
    }

    /// Aligned-column text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16} {:>10} {:>10} {:>12} {:>10}",
            "quantity", "direct", "sigma", "tomographic", "delta/sig"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<16} {:>10.5} {:>10.5} {:>12.5} {:>10.2}",
                r.quantity, r.direct.value, r.direct.sigma, r.tomographic, r.discrepancy_sigma
            );
        }
        let t = &self.tomography;
        let _ = writeln!(
            s,
            "tomographic state: C = {:.5}, S1 = {:.5}, projection distance = {:.3e}, linear inversion {}",
            t.concurrence,
            t.s1,
            t.projection_distance,
            if t.rho_linear.unphysical { "unphysical" } else { "physical" }
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inversion_examples() {
        let bell = DensityMatrix::phi_minus();
        let c = linear_inversion(&MeasuredTable::exact(bell.pauli_table()));
        assert!(!c.unphysical);
        assert!((c.matrix - bell.matrix()).norm() < 1e-12);

        let mut t = bell.pauli_table();
        t[(3, 3)] = 1.05;
        assert!(linear_inversion(&MeasuredTable::exact(t)).unphysical);
    }

    /// Brute force: for every support set, the best point on the affine hull
    /// restricted to that support, keeping feasible ones.
    fn brute_force_projection(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << n) {
            let support: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
            let shift = (support.iter().map(|&k| v[k]).sum::<f64>() - 1.0) / support.len() as f64;
            let mut w = vec![0.0; n];
            let mut ok = true;
            for &k in &support {
                w[k] = v[k] - shift;
                ok &= w[k] >= 0.0;
            }
            if !ok {
                continue;
            }
            let d: f64 = v.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, w));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn simplex_projection_examples() {
        let v = [1.1, 0.2, -0.2, -0.1];
        let p = simplex_projection(&v);
        for (a, b) in p.iter().zip([0.95, 0.05, 0.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        for (a, b) in p.iter().zip(brute_force_projection(&v)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let mut rng = seeded(70);
        use rand::Rng;
        for _ in 0..1000 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..1.2)).collect();
            for (a, b) in simplex_projection(&v).iter().zip(brute_force_projection(&v)) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = seeded(71);
        for _ in 0..100 {
            let rho = DensityMatrix::random(&mut rng, 2).unwrap();
            let c = StateCandidate::new(*rho.matrix());
            assert_eq!(project_physical(&c), rho);
        }
        let mut t = DensityMatrix::phi_minus().pauli_table();
        t[(3, 3)] = 1.05;
        t[(1, 2)] = 0.1;
        let once = project_physical(&t.reconstruct());
        let twice = project_physical(&StateCandidate::new(*once.matrix()));
        assert!((once.matrix() - twice.matrix()).norm() < 1e-12);
        assert!(once.eigenvalues()[3] >= -1e-12);
    }

    #[test]
    fn exact_data_has_zero_discrepancy() {
        let mut rng = seeded(72);
        for rank in 1..=4 {
            let rho = DensityMatrix::random(&mut rng, rank).unwrap();
            let cmp = compare_tables(&MeasuredTable::exact(rho.pauli_table()), 4, 3).unwrap();
            assert!(cmp.max_abs_difference() < 1e-9, "rank {rank}: {}", cmp.to_text());
            assert!(cmp.rows.iter().all(|r| r.discrepancy_sigma == 0.0));
        }
    }

    #[test]
    fn text_table_lists_every_row() {
        let cmp = compare_tables(&MeasuredTable::exact(DensityMatrix::werner(0.88).unwrap().pauli_table()), 4, 3).unwrap();
        let text = cmp.to_text();
        assert_eq!(text.lines().count(), cmp.rows.len() + 2);
        assert!(text.contains("c_lower_q2"));
    }

    proptest::proptest! {
        #[test]
        fn simplex_projection_lands_on_simplex(v in proptest::collection::vec(-2.0f64..2.0, 1..8)) {
            let p = simplex_projection(&v);
            proptest::prop_assert!(p.iter().all(|&x| x >= 0.0));
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // idempotent
            let q = simplex_projection(&p);
            for (a, b) in p.iter().zip(&q) {
                proptest::prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
