//! Exact linear algebra for two-qubit states.
//!
//! A two-qubit state is stored as a dense 4x4 complex matrix in the
//! computational basis `|00>, |01>, |10>, |11>` (first qubit is the most
//! significant index). The Pauli table `t[i][j] = tr((σ_i ⊗ σ_j) ρ)` is the
//! common input to every frame-independent quantity in this crate.

use std::ops::{Index, IndexMut};

use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix2c = Matrix2<C64>;
pub type Matrix4c = Matrix4<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues below `-PSD_TOL` mark a matrix as unphysical.
pub const PSD_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-12;
pub const MAX_MOMENT: usize = 8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Single-qubit Pauli operator `σ_i`, with `σ_0 = I`.
pub fn pauli(i: usize) -> Matrix2c {
    match i {
        0 => Matrix2c::new(ONE, ZERO, ZERO, ONE),
        1 => Matrix2c::new(ZERO, ONE, ONE, ZERO),
        2 => Matrix2c::new(ZERO, -I, I, ZERO),
        3 => Matrix2c::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli index {i} out of range"),
    }
}

/// `σ_i ⊗ σ_j`.
pub fn pauli_pair(i: usize, j: usize) -> Matrix4c {
    pauli(i).kronecker(&pauli(j))
}

pub fn hermitian_residual<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..N {
        for c in 0..N {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

fn sorted_eigenvalues<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> [f64; N]
{
    let dynamic = nalgebra::DMatrix::from_iterator(N, N, m.iter().copied());
    let eig = SymmetricEigen::new(dynamic);
    let mut out = [0.0f64; N];
    for (k, v) in eig.eigenvalues.iter().enumerate() {
        out[k] = *v;
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Eigenvalues of a Hermitian 4x4 matrix, sorted descending.
pub fn hermitian_eigenvalues(m: &Matrix4c) -> [f64; 4] {
    sorted_eigenvalues(m)
}

fn validate<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> Result<()>
{
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("validating a density matrix"));
    }
    let residual = hermitian_residual(m);
    if residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let trace = m.trace();
    if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
        return Err(Error::TraceNotUnit { trace: trace.re });
    }
    let min_eigenvalue = sorted_eigenvalues(m)[N - 1];
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(())
}

/// Which qubit of the pair to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

impl Subsystem {
    /// `0` is the first qubit, `1` the second.
    pub fn from_id(id: usize) -> Result<Self> {
        match id {
            0 => Ok(Subsystem::A),
            1 => Ok(Subsystem::B),
            other => Err(Error::InvalidParameter(format!(
                "subsystem id {other} (expected 0 or 1)"
            ))),
        }
    }
}

/// A validated single-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState(Matrix2c);

impl QubitState {
    pub fn new(m: Matrix2c) -> Result<Self> {
        validate(&m)?;
        Ok(QubitState(m))
    }

    /// `(I + r·σ)/2`; the Bloch vector must satisfy `|r| ≤ 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let norm2: f64 = r.iter().map(|x| x * x).sum();
        if norm2 > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "Bloch vector norm {} exceeds 1",
                norm2.sqrt()
            )));
        }
        let mut m = pauli(0);
        for (k, &x) in r.iter().enumerate() {
            m += pauli(k + 1) * C64::new(x, 0.0);
        }
        Ok(QubitState(m * C64::new(0.5, 0.0)))
    }

    pub fn pure(psi: [C64; 2]) -> Result<Self> {
        let norm = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let v = nalgebra::Vector2::new(psi[0] / norm, psi[1] / norm);
        Ok(QubitState(v * v.adjoint()))
    }

    pub fn matrix(&self) -> &Matrix2c {
        &self.0
    }

    /// `(⟨σ_1⟩, ⟨σ_2⟩, ⟨σ_3⟩)`.
    pub fn bloch(&self) -> [f64; 3] {
        [1, 2, 3].map(|k| (pauli(k) * self.0).trace().re)
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }
}

/// A validated two-qubit density matrix: Hermitian, unit trace, PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix4c);

impl DensityMatrix {
    pub fn new(m: Matrix4c) -> Result<Self> {
        validate(&m)?;
        Ok(DensityMatrix(m))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: [C64; 4]) -> Result<Self> {
        let v = nalgebra::Vector4::from(psi);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let v = v / C64::new(norm, 0.0);
        Ok(DensityMatrix(v * v.adjoint()))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Matrix4c::identity() * C64::new(0.25, 0.0))
    }

    /// `|φ⁻⟩ = (|00⟩ − |11⟩)/√2`.
    pub fn phi_minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::pure([C64::new(h, 0.0), ZERO, ZERO, C64::new(-h, 0.0)]).unwrap()
    }

    /// `|φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
    pub fn phi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::pure([C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]).unwrap()
    }

    /// Computational basis state `|ab⟩`.
    pub fn basis(a: usize, b: usize) -> Self {
        let mut psi = [ZERO; 4];
        psi[2 * (a & 1) + (b & 1)] = ONE;
        Self::pure(psi).unwrap()
    }

    pub fn product(a: &QubitState, b: &QubitState) -> Self {
        DensityMatrix(a.0.kronecker(&b.0))
    }

    /// `p |φ⁻⟩⟨φ⁻| + (1 − p) I/4`, valid for `p ∈ [−1/3, 1]`.
    pub fn werner(p: f64) -> Result<Self> {
        if !(-1.0 / 3.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("Werner weight {p} outside [-1/3, 1]")));
        }
        let m = Self::phi_minus().0 * C64::new(p, 0.0)
            + Self::maximally_mixed().0 * C64::new(1.0 - p, 0.0);
        Ok(DensityMatrix(m))
    }

    /// Convex combination `(1 − w) self + w other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!("mixing weight {w} outside [0, 1]")));
        }
        Ok(DensityMatrix(
            self.0 * C64::new(1.0 - w, 0.0) + other.0 * C64::new(w, 0.0),
        ))
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix4c {
        self.0
    }

    pub fn pauli_table(&self) -> PauliTable {
        PauliTable::from_hermitian(&self.0)
    }

    pub fn partial_trace(&self, keep: Subsystem) -> QubitState {
        let mut out = Matrix2c::zeros();
        for r in 0..2 {
            for c in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += match keep {
                        Subsystem::A => self.0[(2 * r + k, 2 * c + k)],
                        Subsystem::B => self.0[(2 * k + r, 2 * k + c)],
                    };
                }
                out[(r, c)] = acc;
            }
        }
        QubitState(out)
    }

    /// `tr ρⁿ` for `1 ≤ n ≤ MAX_MOMENT`.
    pub fn trace_moment(&self, n: usize) -> Result<f64> {
        matrix_trace_moment(&self.0, n)
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Spectrum, sorted descending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.0)
    }

    /// `(R_A ⊗ R_B) ρ (R_A ⊗ R_B)†`.
    pub fn rotate(&self, rot: &LocalRotation) -> DensityMatrix {
        let u = rot.matrix();
        let mut m = u * self.0 * u.adjoint();
        // restore exact Hermiticity lost to rounding
        m = (m + m.adjoint()) * C64::new(0.5, 0.0);
        DensityMatrix(m)
    }

    /// Ginibre-induced random state of rank at most `rank`: `G G† / tr(G G†)`
    /// with `G` a 4×rank matrix of standard complex Gaussians.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> Result<Self> {
        if !(1..=4).contains(&rank) {
            return Err(Error::InvalidParameter(format!("rank {rank} outside 1..=4")));
        }
        let mut m = Matrix4c::zeros();
        for _ in 0..rank {
            let col = nalgebra::Vector4::from_fn(|_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            m += col * col.adjoint();
        }
        let tr = m.trace().re;
        let mut m = m / C64::new(tr, 0.0);
        m = (m + m.adjoint()) * C64::new(0.5, 0.0);
        Ok(DensityMatrix(m))
    }
}

/// `tr(mⁿ)` of a Hermitian matrix (real part; the imaginary residue is discarded).
pub fn matrix_trace_moment(m: &Matrix4c, n: usize) -> Result<f64> {
    if !(1..=MAX_MOMENT).contains(&n) {
        return Err(Error::MomentOrder { order: n, max: MAX_MOMENT });
    }
    let mut p = *m;
    for _ in 1..n {
        p *= m;
    }
    Ok(p.trace().re)
}

/// Table of Pauli expectation values `t[i][j] = ⟨σ_i σ_j⟩`, `i, j ∈ 0..4`.
///
/// Index 0 is the identity, so `t[i][0]` and `t[0][j]` are the local Bloch
/// components of the first and second qubit, and `t[0][0] = 1` for a
/// normalized state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PauliTable(pub [[f64; 4]; 4]);

impl Default for PauliTable {
    fn default() -> Self {
        let mut t = [[0.0; 4]; 4];
        t[0][0] = 1.0;
        PauliTable(t)
    }
}

impl Index<(usize, usize)> for PauliTable {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for PauliTable {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl PauliTable {
    /// Table of an arbitrary 4x4 matrix; rejects non-Hermitian or non-unit-trace input.
    pub fn from_matrix(m: &Matrix4c) -> Result<Self> {
        let residual = hermitian_residual(m);
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let trace = m.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotUnit { trace });
        }
        Ok(Self::from_hermitian(m))
    }

    fn from_hermitian(m: &Matrix4c) -> Self {
        let mut t = [[0.0; 4]; 4];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (pauli_pair(i, j) * m).trace().re;
            }
        }
        PauliTable(t)
    }

    /// `¼ Σ t[i][j] σ_i ⊗ σ_j`.
    pub fn to_matrix(&self) -> Matrix4c {
        let mut m = Matrix4c::zeros();
        for i in 0..4 {
            for j in 0..4 {
                if self.0[i][j] != 0.0 {
                    m += pauli_pair(i, j) * C64::new(self.0[i][j], 0.0);
                }
            }
        }
        m * C64::new(0.25, 0.0)
    }

    /// Reconstruct the matrix, flagging (not rejecting) indefinite results.
    pub fn reconstruct(&self) -> StateCandidate {
        StateCandidate::new(self.to_matrix())
    }

    /// `¼ Σ_{i,j} t[i][j]²`, equal to `tr ρ²`.
    pub fn purity(&self) -> f64 {
        0.25 * self.0.iter().flatten().map(|x| x * x).sum::<f64>()
    }

    /// Bloch vector of the first qubit, `t[i][0]` for `i = 1..3`.
    pub fn marginal_a(&self) -> [f64; 3] {
        [self.0[1][0], self.0[2][0], self.0[3][0]]
    }

    /// Bloch vector of the second qubit, `t[0][j]` for `j = 1..3`.
    pub fn marginal_b(&self) -> [f64; 3] {
        [self.0[0][1], self.0[0][2], self.0[0][3]]
    }

    /// `tr ρ_A² = ½ (1 + |a|²)` from the table.
    pub fn purity_a(&self) -> f64 {
        0.5 * (self.0[0][0].powi(2) + self.marginal_a().iter().map(|x| x * x).sum::<f64>())
    }

    pub fn purity_b(&self) -> f64 {
        0.5 * (self.0[0][0].powi(2) + self.marginal_b().iter().map(|x| x * x).sum::<f64>())
    }

    /// The 3x3 correlation block `t[i][j]`, `i, j = 1..3`.
    pub fn correlations(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.0[r + 1][c + 1])
    }

    pub fn max_abs_diff(&self, other: &PauliTable) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A Hermitian unit-trace matrix that may have negative eigenvalues,
/// e.g. a linear inversion of noisy data.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCandidate {
    pub matrix: Matrix4c,
    pub min_eigenvalue: f64,
    pub unphysical: bool,
}

impl StateCandidate {
    pub fn new(matrix: Matrix4c) -> Self {
        let min_eigenvalue = hermitian_eigenvalues(&matrix)[3];
        StateCandidate {
            matrix,
            min_eigenvalue,
            unphysical: min_eigenvalue < -PSD_TOL,
        }
    }

    pub fn into_state(self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.matrix)
    }
}

/// Haar-random element of SU(2), built from a uniformly random unit quaternion.
pub fn haar_su2<R: Rng + ?Sized>(rng: &mut R) -> Matrix2c {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        let [a, b, c, d] = q.map(|x| x / norm);
        return Matrix2c::new(
            C64::new(a, b),
            C64::new(c, d),
            C64::new(-c, d),
            C64::new(a, -b),
        );
    }
}

fn unitary_residual(u: &Matrix2c) -> f64 {
    (u * u.adjoint() - Matrix2c::identity())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// A pair of local unitaries acting as `R_A ⊗ R_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRotation {
    a: Matrix2c,
    b: Matrix2c,
}

impl LocalRotation {
    pub fn new(a: Matrix2c, b: Matrix2c) -> Result<Self> {
        for (factor, u) in [('A', &a), ('B', &b)] {
            let residual = unitary_residual(u);
            if residual > UNITARY_TOL {
                return Err(Error::NotUnitary { factor, residual });
            }
        }
        Ok(LocalRotation { a, b })
    }

    pub fn identity() -> Self {
        LocalRotation {
            a: Matrix2c::identity(),
            b: Matrix2c::identity(),
        }
    }

    /// Independent Haar-random unitaries on both qubits.
    pub fn haar<R: Rng + ?Sized>(rng: &mut R) -> Self {
        LocalRotation {
            a: haar_su2(rng),
            b: haar_su2(rng),
        }
    }

    /// Haar-random unitary on the second qubit only.
    pub fn haar_on_b<R: Rng + ?Sized>(rng: &mut R) -> Self {
        LocalRotation {
            a: Matrix2c::identity(),
            b: haar_su2(rng),
        }
    }

    pub fn a(&self) -> &Matrix2c {
        &self.a
    }

    pub fn b(&self) -> &Matrix2c {
        &self.b
    }

    pub fn matrix(&self) -> Matrix4c {
        self.a.kronecker(&self.b)
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitary_residual(&self.a).max(unitary_residual(&self.b))
    }
}

/// `[[re, im], ...]` rows, the JSON layout for complex matrices.
pub fn complex_rows<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> Vec<Vec<[f64; 2]>> {
    (0..N)
        .map(|r| (0..N).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Matrix4c> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(Error::InvalidParameter("density matrix must be 4x4".into()));
    }
    Ok(Matrix4c::from_fn(|r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixJson {
    rho: Vec<Vec<[f64; 2]>>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityMatrixJson { rho: complex_rows(&self.0) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = DensityMatrixJson::deserialize(d)?;
        let m = matrix_from_rows(&raw.rho).map_err(serde::de::Error::custom)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize)]
struct CandidateJson {
    rho: Vec<Vec<[f64; 2]>>,
    min_eigenvalue: f64,
    unphysical_flag: bool,
}

impl Serialize for StateCandidate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CandidateJson {
            rho: complex_rows(&self.matrix),
            min_eigenvalue: self.min_eigenvalue,
            unphysical_flag: self.unphysical,
        }
        .serialize(s)
    }
}
