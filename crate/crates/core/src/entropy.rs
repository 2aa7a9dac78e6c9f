//! Renyi and von Neumann entropies, the partial-table S₂ upper bound, the
//! Mercator lower bound on S₁, and spectra recovered from trace moments.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measured::{Measured, MeasuredTable};
use crate::state::{matrix_trace_moment, DensityMatrix, PauliTable, MAX_MOMENT, PSD_TOL};

/// Tolerance on moment-range checks.
pub const MOMENT_TOL: f64 = 1e-10;
/// Default Mercator truncation depth (the four-moment bound `S_a`).
pub const DEFAULT_MERCATOR_DEPTH: usize = 3;

/// `tr ρⁿ` for `n = 1..=len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraceMoments(Vec<f64>);

impl TraceMoments {
    pub fn new(moments: Vec<f64>) -> Result<Self> {
        if moments.is_empty() || moments.len() > MAX_MOMENT {
            return Err(Error::MomentOrder {
                order: moments.len(),
                max: MAX_MOMENT,
            });
        }
        for (k, &m) in moments.iter().enumerate() {
            let n = k as i32 + 1;
            let lo = 4f64.powi(1 - n) - MOMENT_TOL;
            if !m.is_finite() {
                return Err(Error::NonFinite("reading trace moments"));
            }
            if n == 1 && (m - 1.0).abs() > MOMENT_TOL {
                return Err(Error::InvalidParameter(format!("tr rho = {m}, expected 1")));
            }
            if m < lo || m > 1.0 + MOMENT_TOL {
                return Err(Error::InvalidParameter(format!(
                    "tr rho^{n} = {m} outside [{}, 1]",
                    lo + MOMENT_TOL
                )));
            }
        }
        Ok(TraceMoments(moments))
    }

    pub fn of_state(rho: &DensityMatrix, count: usize) -> Result<Self> {
        let m = (1..=count).map(|n| rho.trace_moment(n)).collect::<Result<Vec<_>>>()?;
        Ok(TraceMoments(m))
    }

    pub fn from_spectrum(spectrum: &[f64], count: usize) -> Self {
        TraceMoments((1..=count).map(|n| spectrum.iter().map(|l| l.powi(n as i32)).sum()).collect())
    }

    /// `tr ρⁿ`, 1-based.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|k| self.0.get(k).copied())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Clamp tiny negative eigenvalues to zero; fail on anything more negative.
fn clamped_spectrum(rho: &DensityMatrix) -> Result<[f64; 4]> {
    let mut ev = rho.eigenvalues();
    for v in &mut ev {
        if *v < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue: *v });
        }
        *v = v.max(0.0);
    }
    Ok(ev)
}

/// Renyi entropy of a spectrum; `alpha = ∞` gives the min-entropy.
pub fn renyi_from_spectrum(spectrum: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 {
        return Err(Error::InvalidParameter(format!(
            "Renyi order {alpha} must be positive and not 1 (use von_neumann)"
        )));
    }
    if alpha.is_infinite() {
        let max = spectrum.iter().copied().fold(0.0, f64::max);
        return Ok(-max.ln());
    }
    let sum: f64 = spectrum.iter().filter(|&&l| l > 0.0).map(|l| l.powf(alpha)).sum();
    Ok(sum.ln() / (1.0 - alpha))
}

pub fn renyi(rho: &DensityMatrix, alpha: f64) -> Result<f64> {
    renyi_from_spectrum(&clamped_spectrum(rho)?, alpha)
}

pub fn von_neumann_from_spectrum(spectrum: &[f64]) -> f64 {
    -spectrum.iter().filter(|&&l| l > 0.0).map(|l| l * l.ln()).sum::<f64>()
}

pub fn von_neumann(rho: &DensityMatrix) -> Result<f64> {
    Ok(von_neumann_from_spectrum(&clamped_spectrum(rho)?))
}

/// S₂ from a (possibly measured) table, `−ln tr ρ²`.
pub fn s2_from_table(table: &MeasuredTable) -> Result<Measured> {
    table.propagate(|t| -t.purity().ln())
}

fn check_pairs(pairs: &[(usize, usize)]) -> Result<()> {
    let mut seen = [[false; 4]; 4];
    for &(i, j) in pairs {
        if i > 3 || j > 3 {
            return Err(Error::IndexOutOfRange(i, j));
        }
        if seen[i][j] {
            return Err(Error::DuplicateSetting(i, j));
        }
        seen[i][j] = true;
    }
    Ok(())
}

fn partial_s2(t: &PauliTable, pairs: &[(usize, usize)]) -> f64 {
    let extra: f64 = pairs
        .iter()
        .filter(|&&p| p != (0, 0))
        .map(|&(i, j)| t[(i, j)] * t[(i, j)])
        .sum();
    -((1.0 + extra) / 4.0).ln()
}

/// `−ln(¼ Σ_𝕊 t_ij²) ≥ S₂`. The `(0,0)` entry is always counted as 1,
/// whether or not it is listed.
pub fn s2_upper_bound(values: &[((usize, usize), f64)]) -> Result<f64> {
    let pairs: Vec<_> = values.iter().map(|(p, _)| *p).collect();
    check_pairs(&pairs)?;
    let mut t = PauliTable([[0.0; 4]; 4]);
    for &((i, j), v) in values {
        t[(i, j)] = v;
    }
    Ok(partial_s2(&t, &pairs))
}

/// [`s2_upper_bound`] on a subset of a measured table, with propagated σ.
pub fn s2_upper_bound_measured(table: &MeasuredTable, pairs: &[(usize, usize)]) -> Result<Measured> {
    check_pairs(pairs)?;
    table.propagate(|t| partial_s2(t, pairs))
}

/// The `k` entries of largest magnitude over the whole table, `(0,0)` included,
/// ties broken by index order.
pub fn largest_pairs(table: &PauliTable, k: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).collect();
    all.sort_by(|&a, &b| table[b].abs().total_cmp(&table[a].abs()).then(a.cmp(&b)));
    all.truncate(k);
    all
}

/// Binomial coefficients of `tr ρ(1 − ρ)ⁿ / n` summed to `depth`, expressed
/// as weights on `tr ρ^{k+1}`.
fn mercator_weights(depth: usize) -> Vec<f64> {
    let mut w = vec![0.0; depth + 1];
    for n in 1..=depth {
        let mut binom = 1.0;
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            w[k] += sign * binom / n as f64;
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
    }
    w
}

fn check_depth(depth: usize, available: usize) -> Result<()> {
    if depth == 0 || depth + 1 > available {
        return Err(Error::InvalidParameter(format!(
            "Mercator depth {depth} needs {} trace moments, {available} available",
            depth + 1
        )));
    }
    Ok(())
}

/// Truncated Mercator series `Σ_{n=1}^{depth} tr(ρ(1 − ρ)ⁿ)/n ≤ S₁`.
///
/// Depth 3 is `11/6 tr ρ − 3 tr ρ² + 3/2 tr ρ³ − 1/3 tr ρ⁴`.
pub fn mercator_lower_bound(moments: &TraceMoments, depth: usize) -> Result<f64> {
    check_depth(depth, moments.len())?;
    Ok(mercator_weights(depth)
        .iter()
        .zip(moments.as_slice())
        .map(|(w, m)| w * m)
        .sum())
}

/// Mercator bound evaluated on the state reconstructed from a measured table.
pub fn mercator_lower_bound_measured(table: &MeasuredTable, depth: usize) -> Result<Measured> {
    check_depth(depth, MAX_MOMENT)?;
    let w = mercator_weights(depth);
    table.propagate(|t| {
        let m = t.to_matrix();
        w.iter()
            .enumerate()
            .map(|(k, wk)| wk * matrix_trace_moment(&m, k + 1).unwrap_or(f64::NAN))
            .sum()
    })
}

/// Imaginary part above which companion roots signal inconsistent moments.
pub const ROOT_IMAG_TOL: f64 = 1e-8;
/// Power-sum residual accepted for the recovered spectrum.
const MOMENT_FIT_TOL: f64 = 1e-9;
/// Extra power-sum residual tolerated when merging clustered roots.
const MERGE_SLACK: f64 = 4e-15;

/// Spectrum of a 4×4 density matrix from `tr ρ, …, tr ρ⁴`, sorted descending.
///
/// Newton's identities give the characteristic polynomial; its roots come from
/// a companion-matrix eigensolve. Clustered roots (degenerate spectra) are
/// ill-conditioned individually but their mean is not, so adjacent roots may
/// be merged when that reproduces the moments better.
pub fn eigenvalues_from_moments(moments: &TraceMoments) -> Result<[f64; 4]> {
    if moments.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need 4 trace moments, got {}",
            moments.len()
        )));
    }
    let p = &moments.as_slice()[..4];
    // e[k] with a first-order rounding bound b[k], moments taken as exact to 16 ulp
    let mut e = [1.0, 0.0, 0.0, 0.0, 0.0];
    let mut b = [0.0; 5];
    for k in 1..=4 {
        let (mut acc, mut bound) = (0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * p[i - 1];
            bound += e[k - i].abs() * (16.0 * f64::EPSILON + f64::EPSILON * p[i - 1].abs()) + p[i - 1].abs() * b[k - i];
        }
        e[k] = acc / k as f64;
        b[k] = bound / k as f64;
    }
    // trailing coefficients indistinguishable from zero are exact zero roots
    let mut degree = 4;
    while degree > 1 && e[degree].abs() <= b[degree] {
        degree -= 1;
    }

    // x^d − e1 x^(d−1) + e2 x^(d−2) − …
    let companion = DMatrix::from_fn(degree, degree, |i, j| {
        if i == 0 {
            let k = j + 1;
            if k % 2 == 1 { e[k] } else { -e[k] }
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<_> = companion.complex_eigenvalues().iter().copied().collect();
    roots.resize(4, Complex::new(0.0, 0.0));
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let max_imag = roots.iter().map(|z| z.im.abs()).fold(0.0, f64::max);

    // (residual, group count, spectrum) for every admissible contiguous grouping
    let mut candidates: Vec<(f64, u32, [f64; 4])> = Vec::new();
    // each bit marks a cut between sorted neighbours
    for cuts in 0u32..8 {
        let mut spectrum = [0.0; 4];
        let mut admissible = true;
        let mut start = 0;
        for end in 1..=4 {
            if end < 4 && cuts & (1 << (end - 1)) == 0 {
                continue;
            }
            let group = &roots[start..end];
            let n = group.len() as f64;
            let re = group.iter().map(|z| z.re).sum::<f64>() / n;
            let im = group.iter().map(|z| z.im).sum::<f64>() / n;
            if im.abs() > ROOT_IMAG_TOL {
                admissible = false;
            }
            spectrum[start..end].fill(re);
            start = end;
        }
        if !admissible {
            continue;
        }
        let fit = TraceMoments::from_spectrum(&spectrum, 4);
        let residual = fit
            .as_slice()
            .iter()
            .zip(p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        candidates.push((residual, cuts.count_ones() + 1, spectrum));
    }
    let floor = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    // coarsest grouping that fits as well as the best one, up to rounding
    let best = candidates
        .into_iter()
        .filter(|c| c.0 <= floor + MERGE_SLACK)
        .min_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .map(|c| (c.0, c.2));
    match best {
        Some((residual, mut spectrum)) if residual <= MOMENT_FIT_TOL => {
            for v in &mut spectrum {
                *v = v.clamp(-PSD_TOL, 1.0);
            }
            spectrum.sort_by(|a, b| b.total_cmp(a));
            Ok(spectrum)
        }
        _ => Err(Error::InconsistentMoments(max_imag)),
    }
}
