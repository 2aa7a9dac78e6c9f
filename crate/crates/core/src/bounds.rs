//! Concurrence, the MEMS family, and concurrence bounds from Q₂ and purities.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measured::Measured;
use crate::rfi;
use nalgebra::SymmetricEigen;

use crate::state::{haar_su2, pauli_pair, DensityMatrix, Matrix4c, QubitState, C64};

/// Slack allowed on exact (σ = 0) physical-range checks.
pub const RANGE_SLACK: f64 = 1e-9;

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
///
/// The `λ_k` are computed as the singular values of `τ = Wᵀ (σ_y⊗σ_y) W`,
/// where `ρ = W W†` with `W = V √Λ` from the eigendecomposition. This equals the
/// usual `√ρ ρ̃ √ρ` spectrum but avoids square roots of near-zero eigenvalues
/// of that product, which would amplify rounding to `√ε` on low-rank states.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let eig = SymmetricEigen::new(*rho.matrix());
    let mut w = eig.eigenvectors;
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        let scale = C64::new(lambda.max(0.0).sqrt(), 0.0);
        w.column_mut(k).scale_mut(scale.re);
    }
    let tau = w.transpose() * pauli_pair(2, 2) * w;
    let mut l: Vec<f64> = tau.singular_values().iter().copied().collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0)
}

/// Parameters of the maximally-entangled-mixed-state family
///
/// ```text
/// ⎡ x+γ/2  0  0  γ/2  ⎤
/// ⎢  0     α  0   0   ⎥
/// ⎢  0     0  β   0   ⎥
/// ⎣ γ/2    0  0 y+γ/2 ⎦
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemsParams {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl MemsParams {
    pub fn new(x: f64, y: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = MemsParams { x, y, alpha, beta, gamma };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let all = [self.x, self.y, self.alpha, self.beta, self.gamma];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!("MEMS parameters must be non-negative: {self:?}")));
        }
        let total: f64 = all.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("MEMS parameters sum to {total}, expected 1")));
        }
        Ok(())
    }

    pub fn phi(&self) -> f64 {
        self.x + self.y
    }

    /// Closed-form concurrence of the family, `max(0, γ − 2√(αβ))`.
    pub fn concurrence(&self) -> f64 {
        (self.gamma - 2.0 * (self.alpha * self.beta).sqrt()).max(0.0)
    }
}

pub fn mems_state(p: &MemsParams) -> Result<DensityMatrix> {
    p.validate()?;
    let h = C64::new(p.gamma / 2.0, 0.0);
    let mut m = Matrix4c::zeros();
    m[(0, 0)] = C64::new(p.x + p.gamma / 2.0, 0.0);
    m[(0, 3)] = h;
    m[(3, 0)] = h;
    m[(1, 1)] = C64::new(p.alpha, 0.0);
    m[(2, 2)] = C64::new(p.beta, 0.0);
    m[(3, 3)] = C64::new(p.y + p.gamma / 2.0, 0.0);
    DensityMatrix::new(m)
}

/// Smallest Q₂ attainable by a MEMS state of concurrence `c`: `2c²` for
/// `c ≤ ½`, `1 − 4c + 6c²` above. Conjectured (not proven) to hold for all
/// states.
pub fn mems_min_q2(c: f64) -> f64 {
    if c <= 0.5 {
        2.0 * c * c
    } else {
        1.0 - 4.0 * c + 6.0 * c * c
    }
}

/// Largest concurrence compatible with `q2` under [`mems_min_q2`].
pub fn concurrence_upper_from_q2(q2: f64) -> f64 {
    if q2 <= 0.5 {
        (q2.max(0.0) / 2.0).sqrt()
    } else {
        (2.0 + (6.0 * q2 - 2.0).sqrt()) / 6.0
    }
}

/// Proven lower bound `C ≥ √((Q₂ − 1)/2)`, clipped at zero.
pub fn concurrence_lower_from_q2(q2: f64) -> f64 {
    ((q2 - 1.0) / 2.0).max(0.0).sqrt()
}

/// Lower and upper concurrence bounds with propagated uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceInterval {
    pub lower: Measured,
    pub upper: Measured,
    /// `false` when the upper bound rests on the MEMS conjecture.
    pub upper_proven: bool,
}

impl ConcurrenceInterval {
    /// Whether `c` lies inside the interval up to `slack`.
    pub fn contains(&self, c: f64, slack: f64) -> bool {
        c >= self.lower.value - slack && c <= self.upper.value + slack
    }
}

/// `sqrt(x)` with first-order σ. Within one σ of the clip point at zero the
/// derivative diverges, so σ becomes the shift under a one-σ displacement.
fn sqrt_measured(x: f64, sigma_x: f64) -> Measured {
    let value = x.max(0.0).sqrt();
    let sigma = if x > sigma_x {
        sigma_x / (2.0 * value)
    } else {
        (x + sigma_x).max(0.0).sqrt() - value
    };
    Measured { value, sigma }
}

fn check_range(name: &str, m: Measured, lo: f64, hi: f64) -> Result<f64> {
    let slack = RANGE_SLACK + 3.0 * m.sigma;
    if !m.value.is_finite() || m.value < lo - slack || m.value > hi + slack {
        return Err(Error::InvalidParameter(format!(
            "{name} = {} outside physical range [{lo}, {hi}]",
            m
        )));
    }
    Ok(m.value.clamp(lo, hi))
}

/// Bounds from Q₂: the proven `C² ≥ (Q₂ − 1)/2` and the MEMS-derived upper bound.
///
/// Values within `3σ` of the physical range `[0, 3]` are accepted and
/// evaluated at the nearest endpoint.
pub fn concurrence_interval_from_q2(q2: Measured) -> Result<ConcurrenceInterval> {
    let v = check_range("Q2", q2, 0.0, rfi::Q2_MAX)?;
    let s = q2.sigma;
    let lower = sqrt_measured((v - 1.0) / 2.0, s / 2.0);
    let upper = if v <= 0.5 {
        sqrt_measured(v / 2.0, s / 2.0)
    } else {
        let root = (6.0 * v - 2.0).sqrt();
        Measured {
            value: (2.0 + root) / 6.0,
            sigma: s / (2.0 * root),
        }
    };
    Ok(ConcurrenceInterval {
        lower,
        upper,
        upper_proven: false,
    })
}

/// Bounds from full and marginal purities:
/// `2 max_r(tr ρ² − tr ρ_r²) ≤ C² ≤ 2 min_r(1 − tr ρ_r²)`.
///
/// Estimated purities outside their physical ranges are clamped to them;
/// only non-finite inputs are rejected.
pub fn concurrence_interval_from_purities(
    tr2: Measured,
    tr_a2: Measured,
    tr_b2: Measured,
) -> Result<ConcurrenceInterval> {
    if [tr2, tr_a2, tr_b2].iter().any(|m| !m.value.is_finite() || !m.sigma.is_finite()) {
        return Err(Error::NonFinite("bounding concurrence from purities"));
    }
    let p = tr2.value.clamp(0.25, 1.0);
    let pa = tr_a2.value.clamp(0.5, 1.0);
    let pb = tr_b2.value.clamp(0.5, 1.0);

    let (gap, sigma_gap) = if p - pa >= p - pb {
        (p - pa, tr2.sigma.hypot(tr_a2.sigma))
    } else {
        (p - pb, tr2.sigma.hypot(tr_b2.sigma))
    };
    let lower = sqrt_measured(2.0 * gap, 2.0 * sigma_gap);

    let (mixedness, sigma_mix) = if 1.0 - pa <= 1.0 - pb {
        (1.0 - pa, tr_a2.sigma)
    } else {
        (1.0 - pb, tr_b2.sigma)
    };
    let upper = sqrt_measured(2.0 * mixedness, 2.0 * sigma_mix);

    Ok(ConcurrenceInterval {
        lower,
        upper,
        upper_proven: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Entangled,
    Inconclusive,
}

/// Default number of standard deviations required for an "entangled" verdict.
pub const DEFAULT_Z: f64 = 3.0;

/// Separable states satisfy `tr ρ_A² ≥ tr ρ²` and `tr ρ_B² ≥ tr ρ²`; report
/// entanglement when either is violated by more than `z` combined σ.
pub fn purity_separability_test(tr2: Measured, tr_a2: Measured, tr_b2: Measured, z: f64) -> Verdict {
    let violated = |marginal: Measured| {
        let excess = tr2.value - marginal.value;
        excess > z * tr2.sigma.hypot(marginal.sigma) + 1e-12
    };
    if violated(tr_a2) || violated(tr_b2) {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    }
}

/// Convex mixture of 1..=16 Haar-random product pure states with flat
/// Dirichlet weights.
pub fn random_separable_state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let count = rng.random_range(1..=16);
    let weights: Vec<f64> = (0..count).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = Matrix4c::zeros();
    for w in weights {
        let a = haar_su2(rng);
        let b = haar_su2(rng);
        let qa = QubitState::pure([a[(0, 0)], a[(1, 0)]]).expect("unit column");
        let qb = QubitState::pure([b[(0, 0)], b[(1, 0)]]).expect("unit column");
        m += DensityMatrix::product(&qa, &qb).into_matrix() * C64::new(w / total, 0.0);
    }
    m = (m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(m).expect("mixture of product states is a valid state")
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_min(lo: f64, hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let (fx, fa, fb) = (f(x), f(lo), f(hi));
    // the bracket endpoints are feasible minimizers too
    [(x, fx), (lo, fa), (hi, fb)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

/// MEMS member with concurrence `c`, coherence `gamma`, and `alpha + beta = s`,
/// splitting the remaining weight evenly between `x` and `y`.
fn mems_member(c: f64, gamma: f64, s: f64) -> Option<MemsParams> {
    let d = gamma - c;
    let disc = s * s - d * d;
    let phi = 1.0 - gamma - s;
    if d < -1e-15 || disc < -1e-15 || phi < -1e-15 {
        return None;
    }
    let root = disc.max(0.0).sqrt();
    let alpha = ((s + root) / 2.0).max(0.0);
    let beta = ((s - root) / 2.0).max(0.0);
    let phi = phi.max(0.0);
    // renormalize away rounding so the sum constraint holds to 1e-12
    let total = alpha + beta + gamma + phi;
    Some(MemsParams {
        x: phi / 2.0 / total,
        y: phi / 2.0 / total,
        alpha: alpha / total,
        beta: beta / total,
        gamma: gamma / total,
    })
}

/// Numerically minimize Q₂ over the MEMS family at fixed concurrence.
///
/// The family is parametrized by `γ ∈ [c, (1 + c)/2]` and `s = α + β ∈
/// [γ − c, 1 − γ]`, with `α, β` fixed by `γ − 2√(αβ) = c`. Q₂ is evaluated on
/// the constructed matrix; nested golden-section searches locate the minimum.
pub fn minimize_mems_q2(c: f64) -> Result<(f64, MemsParams)> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("concurrence {c} outside [0, 1]")));
    }
    let q2_of = |gamma: f64, s: f64| -> f64 {
        match mems_member(c, gamma, s).and_then(|p| mems_state(&p).ok()) {
            Some(rho) => rfi::q2(&rho.pauli_table()),
            None => f64::INFINITY,
        }
    };
    let inner = |gamma: f64| -> (f64, f64) {
        let lo = gamma - c;
        let hi = 1.0 - gamma;
        if hi <= lo {
            return (lo.max(0.0), q2_of(gamma, lo.max(0.0)));
        }
        golden_min(lo, hi, 1e-11, |s| q2_of(gamma, s))
    };
    let g_hi = (1.0 + c) / 2.0;
    let (gamma, q2) = golden_min(c, g_hi, 1e-11, |g| inner(g).1);
    let (s, _) = inner(gamma);
    let params = mems_member(c, gamma, s)
        .ok_or_else(|| Error::InvalidParameter(format!("no MEMS state with concurrence {c}")))?;
    Ok((q2, params))
}
