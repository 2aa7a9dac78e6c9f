//! Frame-independent polynomials of the Pauli table.
//!
//! Every quantity here is a polynomial in the entries of a [`PauliTable`] and
//! is unchanged when the state is conjugated by a local rotation `R_A ⊗ R_B`.
//! Indices below run over `1..=3` unless stated otherwise; `t[i][0]` and
//! `t[0][j]` are the local Bloch components.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::PauliTable;

/// Normalization constants mapping Q₂, Q₃, Q₄, Q₅ to a maximum of 1.
pub const Q2_MAX: f64 = 3.0;
pub const Q3_MAX: f64 = 1.0;
pub const Q4_MAX: f64 = 6.0;
pub const Q5_MAX: f64 = 3.0;

/// Separable states satisfy `Q₂ ≤ 1`.
pub const Q2_SEPARABLE_BOUND: f64 = 1.0;

const AXES: [usize; 3] = [1, 2, 3];

/// `Σ_i ⟨σ_i⟩²` for a single-qubit Bloch vector.
pub fn q1(bloch: &[f64; 3]) -> f64 {
    bloch.iter().map(|x| x * x).sum()
}

/// `Σ_{i,j≥1} t[i][j]²`.
pub fn q2(t: &PauliTable) -> f64 {
    let mut s = 0.0;
    for i in AXES {
        for j in AXES {
            s += t[(i, j)].powi(2);
        }
    }
    s
}

/// Sum of squares over a subset of correlation entries; never exceeds the
/// full-table Q₂ of the same state.
pub fn q2_partial(entries: &[((usize, usize), f64)]) -> Result<f64> {
    let mut s = 0.0;
    for &((i, j), v) in entries {
        if !(1..=3).contains(&i) || !(1..=3).contains(&j) {
            return Err(Error::IndexOutOfRange(i, j));
        }
        s += v * v;
    }
    Ok(s)
}

/// Six-term cubic invariant; equals `−det` of the correlation block.
pub fn q3(t: &PauliTable) -> f64 {
    let c = |i, j| t[(i, j)];
    c(1, 3) * c(2, 2) * c(3, 1) - c(1, 2) * c(2, 3) * c(3, 1) - c(1, 3) * c(2, 1) * c(3, 2)
        + c(1, 1) * c(2, 3) * c(3, 2)
        + c(1, 2) * c(2, 1) * c(3, 3)
        - c(1, 1) * c(2, 2) * c(3, 3)
}

/// Quartic invariant from `tr ρ⁴`:
/// `Σ_{i≠k} Σ_{j≠l} t_ij² t_kl² − t_ij t_kl t_il t_kj`.
pub fn q4(t: &PauliTable) -> f64 {
    let mut s = 0.0;
    for i in AXES {
        for k in AXES {
            if i == k {
                continue;
            }
            for j in AXES {
                for l in AXES {
                    if j == l {
                        continue;
                    }
                    let (ij, kl) = (t[(i, j)], t[(k, l)]);
                    s += ij * ij * kl * kl - ij * kl * t[(i, l)] * t[(k, j)];
                }
            }
        }
    }
    s
}

/// Quintic invariant from `tr ρ⁵`, evaluated term by term. Each entry is a
/// sign and the five correlation factors `(i, j)` of one monomial.
#[rustfmt::skip]
pub(crate) const Q5_TERMS: [(f64, [(usize, usize); 5]); 54] = [
    (1.0, [(1, 1), (1, 1), (1, 3), (2, 2), (3, 1)]),
    (1.0, [(1, 2), (1, 2), (1, 3), (2, 2), (3, 1)]),
    (1.0, [(1, 3), (1, 3), (1, 3), (2, 2), (3, 1)]),
    (1.0, [(1, 3), (2, 1), (2, 1), (2, 2), (3, 1)]),
    (1.0, [(1, 3), (2, 2), (2, 2), (2, 2), (3, 1)]),
    (-1.0, [(1, 1), (1, 1), (1, 2), (2, 3), (3, 1)]),
    (-1.0, [(1, 2), (1, 2), (1, 2), (2, 3), (3, 1)]),
    (-1.0, [(1, 2), (1, 3), (1, 3), (2, 3), (3, 1)]),
    (-1.0, [(1, 2), (2, 1), (2, 1), (2, 3), (3, 1)]),
    (-1.0, [(1, 2), (2, 2), (2, 2), (2, 3), (3, 1)]),
    (1.0, [(1, 3), (2, 2), (2, 3), (2, 3), (3, 1)]),
    (-1.0, [(1, 2), (2, 3), (2, 3), (2, 3), (3, 1)]),
    (1.0, [(1, 3), (2, 2), (3, 1), (3, 1), (3, 1)]),
    (-1.0, [(1, 2), (2, 3), (3, 1), (3, 1), (3, 1)]),
    (-1.0, [(1, 1), (1, 1), (1, 3), (2, 1), (3, 2)]),
    (-1.0, [(1, 2), (1, 2), (1, 3), (2, 1), (3, 2)]),
    (-1.0, [(1, 3), (1, 3), (1, 3), (2, 1), (3, 2)]),
    (-1.0, [(1, 3), (2, 1), (2, 1), (2, 1), (3, 2)]),
    (-1.0, [(1, 3), (2, 1), (2, 2), (2, 2), (3, 2)]),
    (1.0, [(1, 1), (1, 1), (1, 1), (2, 3), (3, 2)]),
    (1.0, [(1, 1), (1, 2), (1, 2), (2, 3), (3, 2)]),
    (1.0, [(1, 1), (1, 3), (1, 3), (2, 3), (3, 2)]),
    (1.0, [(1, 1), (2, 1), (2, 1), (2, 3), (3, 2)]),
    (1.0, [(1, 1), (2, 2), (2, 2), (2, 3), (3, 2)]),
    (-1.0, [(1, 3), (2, 1), (2, 3), (2, 3), (3, 2)]),
    (1.0, [(1, 1), (2, 3), (2, 3), (2, 3), (3, 2)]),
    (-1.0, [(1, 3), (2, 1), (3, 1), (3, 1), (3, 2)]),
    (1.0, [(1, 1), (2, 3), (3, 1), (3, 1), (3, 2)]),
    (1.0, [(1, 3), (2, 2), (3, 1), (3, 2), (3, 2)]),
    (-1.0, [(1, 2), (2, 3), (3, 1), (3, 2), (3, 2)]),
    (-1.0, [(1, 3), (2, 1), (3, 2), (3, 2), (3, 2)]),
    (1.0, [(1, 1), (2, 3), (3, 2), (3, 2), (3, 2)]),
    (1.0, [(1, 1), (1, 1), (1, 2), (2, 1), (3, 3)]),
    (1.0, [(1, 2), (1, 2), (1, 2), (2, 1), (3, 3)]),
    (1.0, [(1, 2), (1, 3), (1, 3), (2, 1), (3, 3)]),
    (1.0, [(1, 2), (2, 1), (2, 1), (2, 1), (3, 3)]),
    (-1.0, [(1, 1), (1, 1), (1, 1), (2, 2), (3, 3)]),
    (-1.0, [(1, 1), (1, 2), (1, 2), (2, 2), (3, 3)]),
    (-1.0, [(1, 1), (1, 3), (1, 3), (2, 2), (3, 3)]),
    (-1.0, [(1, 1), (2, 1), (2, 1), (2, 2), (3, 3)]),
    (1.0, [(1, 2), (2, 1), (2, 2), (2, 2), (3, 3)]),
    (-1.0, [(1, 1), (2, 2), (2, 2), (2, 2), (3, 3)]),
    (1.0, [(1, 2), (2, 1), (2, 3), (2, 3), (3, 3)]),
    (-1.0, [(1, 1), (2, 2), (2, 3), (2, 3), (3, 3)]),
    (1.0, [(1, 2), (2, 1), (3, 1), (3, 1), (3, 3)]),
    (-1.0, [(1, 1), (2, 2), (3, 1), (3, 1), (3, 3)]),
    (1.0, [(1, 2), (2, 1), (3, 2), (3, 2), (3, 3)]),
    (-1.0, [(1, 1), (2, 2), (3, 2), (3, 2), (3, 3)]),
    (1.0, [(1, 3), (2, 2), (3, 1), (3, 3), (3, 3)]),
    (-1.0, [(1, 2), (2, 3), (3, 1), (3, 3), (3, 3)]),
    (-1.0, [(1, 3), (2, 1), (3, 2), (3, 3), (3, 3)]),
    (1.0, [(1, 1), (2, 3), (3, 2), (3, 3), (3, 3)]),
    (1.0, [(1, 2), (2, 1), (3, 3), (3, 3), (3, 3)]),
    (-1.0, [(1, 1), (2, 2), (3, 3), (3, 3), (3, 3)]),
];

pub fn q5(t: &PauliTable) -> f64 {
    Q5_TERMS
        .iter()
        .map(|(sign, factors)| sign * factors.iter().map(|&f| t[f]).product::<f64>())
        .sum()
}

/// `Σ_{i,j≥1} (t_ij − t_i0 t_0j)²`.
pub fn g(t: &PauliTable) -> f64 {
    let mut s = 0.0;
    for i in AXES {
        for j in AXES {
            s += (t[(i, j)] - t[(i, 0)] * t[(0, j)]).powi(2);
        }
    }
    s
}

/// All orderings `(i, j, k)` of `(1, 2, 3)`.
const PERMUTATIONS: [[usize; 3]; 6] = [
    [1, 2, 3],
    [1, 3, 2],
    [2, 1, 3],
    [2, 3, 1],
    [3, 1, 2],
    [3, 2, 1],
];

fn cyclic_sign(first: usize, last: usize) -> f64 {
    if (last + 3 - first) % 3 % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Σ (−1)^((k−i) mod 3) (−1)^((n−l) mod 3) t_0l t_i0 t_jm t_kn` over all
/// orderings `(i, j, k)` and `(l, m, n)` of `(1, 2, 3)`.
pub fn y(t: &PauliTable) -> f64 {
    let mut s = 0.0;
    for [i, j, k] in PERMUTATIONS {
        for [l, m, n] in PERMUTATIONS {
            s += cyclic_sign(i, k)
                * cyclic_sign(l, n)
                * t[(0, l)]
                * t[(i, 0)]
                * t[(j, m)]
                * t[(k, n)];
        }
    }
    s
}

/// `Σ_{i,j,k} t_0j t_0k t_ij t_ik`.
pub fn z1(t: &PauliTable) -> f64 {
    let mut s = 0.0;
    for i in AXES {
        for j in AXES {
            for k in AXES {
                s += t[(0, j)] * t[(0, k)] * t[(i, j)] * t[(i, k)];
            }
        }
    }
    s
}

/// `Σ_{i,j,k} t_j0 t_k0 t_ji t_ki`.
pub fn z2(t: &PauliTable) -> f64 {
    let mut s = 0.0;
    for i in AXES {
        for j in AXES {
            for k in AXES {
                s += t[(j, 0)] * t[(k, 0)] * t[(j, i)] * t[(k, i)];
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedQ {
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
}

/// Every frame-independent quantity of one table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfiReport {
    pub q1_a: f64,
    pub q1_b: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
    pub g: f64,
    pub y: f64,
    pub z1: f64,
    pub z2: f64,
    pub normalized: NormalizedQ,
}

impl RfiReport {
    pub fn from_table(t: &PauliTable) -> Self {
        let (q2, q3, q4, q5) = (q2(t), q3(t), q4(t), q5(t));
        RfiReport {
            q1_a: q1(&t.marginal_a()),
            q1_b: q1(&t.marginal_b()),
            q2,
            q3,
            q4,
            q5,
            g: g(t),
            y: y(t),
            z1: z1(t),
            z2: z2(t),
            normalized: NormalizedQ {
                q2: q2 / Q2_MAX,
                q3: q3 / Q3_MAX,
                q4: q4 / Q4_MAX,
                q5: q5 / Q5_MAX,
            },
        }
    }

    /// `(name, value)` for the ten raw fields, in a fixed order.
    pub fn fields(&self) -> [(&'static str, f64); 10] {
        [
            ("q1_a", self.q1_a),
            ("q1_b", self.q1_b),
            ("q2", self.q2),
            ("q3", self.q3),
            ("q4", self.q4),
            ("q5", self.q5),
            ("g", self.g),
            ("y", self.y),
            ("z1", self.z1),
            ("z2", self.z2),
        ]
    }
}

/// A quantity computed from a Pauli table, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Q1A,
    Q1B,
    Q2,
    Q3,
    Q4,
    Q5,
    G,
    Y,
    Z1,
    Z2,
}

impl Quantity {
    pub const ALL: [Quantity; 10] = [
        Quantity::Q1A,
        Quantity::Q1B,
        Quantity::Q2,
        Quantity::Q3,
        Quantity::Q4,
        Quantity::Q5,
        Quantity::G,
        Quantity::Y,
        Quantity::Z1,
        Quantity::Z2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Q1A => "q1_a",
            Quantity::Q1B => "q1_b",
            Quantity::Q2 => "q2",
            Quantity::Q3 => "q3",
            Quantity::Q4 => "q4",
            Quantity::Q5 => "q5",
            Quantity::G => "g",
            Quantity::Y => "y",
            Quantity::Z1 => "z1",
            Quantity::Z2 => "z2",
        }
    }

    pub fn eval(self, t: &PauliTable) -> f64 {
        match self {
            Quantity::Q1A => q1(&t.marginal_a()),
            Quantity::Q1B => q1(&t.marginal_b()),
            Quantity::Q2 => q2(t),
            Quantity::Q3 => q3(t),
            Quantity::Q4 => q4(t),
            Quantity::Q5 => q5(t),
            Quantity::G => g(t),
            Quantity::Y => y(t),
            Quantity::Z1 => z1(t),
            Quantity::Z2 => z2(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::state::{DensityMatrix, LocalRotation, QubitState, Subsystem};
    use approx::assert_abs_diff_eq;

    fn bell() -> PauliTable {
        DensityMatrix::phi_minus().pauli_table()
    }

    fn zero_zero() -> PauliTable {
        DensityMatrix::basis(0, 0).pauli_table()
    }

    #[test]
    fn extremal_values() {
        for t in [bell(), DensityMatrix::phi_plus().pauli_table()] {
            assert_abs_diff_eq!(q2(&t), 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(q3(&t), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(q4(&t), 6.0, epsilon = 1e-12);
            assert_abs_diff_eq!(q5(&t), 3.0, epsilon = 1e-12);
        }
        let t = zero_zero();
        assert_abs_diff_eq!(q2(&t), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q3(&t), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q4(&t), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q5(&t), 0.0, epsilon = 1e-12);

        let mixed = PauliTable::default();
        for q in Quantity::ALL {
            assert_eq!(q.eval(&mixed), 0.0, "{}", q.name());
        }
    }

    #[test]
    fn partial_sums() {
        let t = bell();
        assert_abs_diff_eq!(q2_partial(&[((3, 3), t[(3, 3)])]).unwrap(), 1.0, epsilon = 1e-12);
        let diag: Vec<_> = (1..=3).map(|k| ((k, k), t[(k, k)])).collect();
        assert_abs_diff_eq!(q2_partial(&diag).unwrap(), 3.0, epsilon = 1e-12);
        assert_eq!(q2_partial(&[]).unwrap(), 0.0);
        assert!(matches!(q2_partial(&[((0, 1), 0.5)]), Err(Error::IndexOutOfRange(0, 1))));
        assert!(q2_partial(&[((1, 4), 0.5)]).is_err());
    }

    #[test]
    fn marginal_dependent_quantities() {
        let b = bell();
        assert_abs_diff_eq!(g(&b), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(y(&b), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z1(&b), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z2(&b), 0.0, epsilon = 1e-12);

        let p = zero_zero();
        assert_abs_diff_eq!(g(&p), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z1(&p), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z2(&p), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn q1_examples() {
        assert_eq!(q1(&[0.0, 0.0, 1.0]), 1.0);
        assert_eq!(q1(&[0.0, 0.0, 0.0]), 0.0);
        assert_abs_diff_eq!(q1(&[0.6, 0.0, 0.8]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn q3_is_minus_determinant() {
        let mut rng = seeded(31);
        for _ in 0..200 {
            let t = DensityMatrix::random(&mut rng, 4).unwrap().pauli_table();
            assert_abs_diff_eq!(q3(&t), -t.correlations().determinant(), epsilon = 1e-13);
        }
    }

    /// Every printed monomial is one Q₃ monomial times one squared correlation,
    /// and each (Q₃ monomial, squared entry) pair occurs exactly once.
    #[test]
    fn q5_terms_factor_as_q3_times_squares() {
        let q3_terms: [(f64, [(usize, usize); 3]); 6] = [
            (1.0, [(1, 3), (2, 2), (3, 1)]),
            (-1.0, [(1, 2), (2, 3), (3, 1)]),
            (-1.0, [(1, 3), (2, 1), (3, 2)]),
            (1.0, [(1, 1), (2, 3), (3, 2)]),
            (1.0, [(1, 2), (2, 1), (3, 3)]),
            (-1.0, [(1, 1), (2, 2), (3, 3)]),
        ];
        let mut seen = std::collections::HashSet::new();
        for (sign, factors) in Q5_TERMS {
            let mut factors = factors.to_vec();
            factors.sort();
            let mut matched = None;
            for (k, (s3, f3)) in q3_terms.iter().enumerate() {
                let mut rest = factors.clone();
                let mut ok = true;
                for f in f3 {
                    match rest.iter().position(|x| x == f) {
                        Some(p) => {
                            rest.remove(p);
                        }
                        None => ok = false,
                    }
                }
                if ok && rest[0] == rest[1] && *s3 == sign {
                    matched = Some((k, rest[0]));
                    break;
                }
            }
            let key = matched.unwrap_or_else(|| panic!("unmatched monomial {factors:?}"));
            assert!(seen.insert(key), "duplicate monomial {key:?}");
        }
        assert_eq!(seen.len(), 54);
    }

    #[test]
    fn q5_matches_product_of_q2_and_q3() {
        let mut rng = seeded(32);
        for rank in 1..=4 {
            for _ in 0..200 {
                let t = DensityMatrix::random(&mut rng, rank).unwrap().pauli_table();
                let oracle = q2(&t) * -t.correlations().determinant();
                assert_abs_diff_eq!(q5(&t), oracle, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn purity_identities() {
        let mut rng = seeded(33);
        for _ in 0..500 {
            let rho = DensityMatrix::random(&mut rng, 4).unwrap();
            let t = rho.pauli_table();
            let pa = rho.partial_trace(Subsystem::A).purity();
            let pb = rho.partial_trace(Subsystem::B).purity();
            let (m2, m3, m4) = (
                rho.trace_moment(2).unwrap(),
                rho.trace_moment(3).unwrap(),
                rho.trace_moment(4).unwrap(),
            );
            let r = RfiReport::from_table(&t);

            assert_abs_diff_eq!(r.q2, 4.0 * m2 - 2.0 * (pa + pb) + 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(
                6.0 * r.q3,
                16.0 * m3 - 24.0 * m2 + 3.0 * r.g + 12.0 * (pa + pb - pa * pb) - 4.0,
                epsilon = 1e-10
            );
            let (a, b) = (r.q1_a, r.q1_b);
            let rhs = 64.0 * m4 + 12.0 * r.g
                - 2.0 * r.q2 * (a + b)
                - 18.0 * a * b
                - 6.0 * (a + b)
                - (a * a + b * b)
                - r.q2 * r.q2
                - 18.0 * r.q2
                + 4.0 * r.y
                - 4.0 * (r.z1 + r.z2)
                - 24.0 * r.q3
                - 1.0;
            assert_abs_diff_eq!(2.0 * r.q4, rhs, epsilon = 1e-9);
        }
    }

    #[test]
    fn invariant_under_local_rotations() {
        let mut rng = seeded(34);
        for _ in 0..200 {
            let rho = DensityMatrix::random(&mut rng, 4).unwrap();
            let rot = LocalRotation::haar(&mut rng);
            let before = RfiReport::from_table(&rho.pauli_table());
            let after = RfiReport::from_table(&rho.rotate(&rot).pauli_table());
            for ((name, x), (_, y)) in before.fields().iter().zip(after.fields()) {
                assert!((x - y).abs() < 1e-9, "{name}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn product_states_never_exceed_separable_bound() {
        let mut rng = seeded(35);
        for _ in 0..2000 {
            let ra: [f64; 3] = std::array::from_fn(|_| rand::Rng::random_range(&mut rng, -0.577..0.577));
            let rb: [f64; 3] = std::array::from_fn(|_| rand::Rng::random_range(&mut rng, -0.577..0.577));
            let rho = DensityMatrix::product(
                &QubitState::from_bloch(ra).unwrap(),
                &QubitState::from_bloch(rb).unwrap(),
            );
            assert!(q2(&rho.pauli_table()) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn normalized_fields_peak_at_one() {
        let r = RfiReport::from_table(&bell());
        assert_abs_diff_eq!(r.normalized.q2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.normalized.q3, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.normalized.q4, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.normalized.q5, 1.0, epsilon = 1e-12);
        let v = serde_json::to_value(r).unwrap();
        assert!(v.get("normalized").is_some() && v.get("q5").is_some());
    }

    proptest::proptest! {
        #[test]
        fn invariants_survive_local_rotation(seed in proptest::num::u64::ANY, rank in 1usize..=4) {
            let mut rng = seeded(seed);
            let rho = DensityMatrix::random(&mut rng, rank).unwrap();
            let rotated = rho.rotate(&LocalRotation::haar(&mut rng));
            let (a, b) = (rho.pauli_table(), rotated.pauli_table());
            for q in Quantity::ALL {
                proptest::prop_assert!((q.eval(&a) - q.eval(&b)).abs() < 1e-9, "{}", q.name());
            }
        }

        #[test]
        fn product_states_stay_below_separable_bound(
            ra in proptest::array::uniform3(-0.57f64..0.57),
            rb in proptest::array::uniform3(-0.57f64..0.57),
        ) {
            let rho = DensityMatrix::product(&QubitState::from_bloch(ra).unwrap(), &QubitState::from_bloch(rb).unwrap());
            proptest::prop_assert!(q2(&rho.pauli_table()) <= 1.0 + 1e-12);
        }
    }
}
