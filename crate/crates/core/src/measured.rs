//! Values with one-standard-deviation uncertainties and first-order error
//! propagation through functions of a Pauli table.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::PauliTable;

/// Central-difference step for numerical gradients.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Result<Self> {
        if !value.is_finite() || !sigma.is_finite() {
            return Err(Error::NonFinite("constructing a measured value"));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidParameter(format!("negative sigma {sigma}")));
        }
        Ok(Measured { value, sigma })
    }

    pub const fn exact(value: f64) -> Self {
        Measured { value, sigma: 0.0 }
    }

    /// First-order propagation through a scalar function with known derivative.
    pub fn map(self, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Measured {
        Measured {
            value: f(self.value),
            sigma: (df(self.value) * self.sigma).abs(),
        }
    }

    /// `(self − other) / combined σ`; infinite when both are exact and differ.
    pub fn z_score(self, other: Measured) -> f64 {
        let s = self.sigma.hypot(other.sigma);
        let d = self.value - other.value;
        if s == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                d.signum() * f64::INFINITY
            }
        } else {
            d / s
        }
    }
}

impl fmt::Display for Measured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.value, self.sigma)
    }
}

/// A Pauli table whose entries carry independent standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredTable {
    pub value: PauliTable,
    pub sigma: [[f64; 4]; 4],
}

impl MeasuredTable {
    pub fn exact(value: PauliTable) -> Self {
        MeasuredTable {
            value,
            sigma: [[0.0; 4]; 4],
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Measured {
        Measured {
            value: self.value[(i, j)],
            sigma: self.sigma[i][j],
        }
    }

    pub fn set(&mut self, i: usize, j: usize, m: Measured) {
        self.value[(i, j)] = m.value;
        self.sigma[i][j] = m.sigma;
    }

    /// Evaluate `f` at the central values and propagate uncertainty.
    pub fn propagate(&self, f: impl Fn(&PauliTable) -> f64) -> Result<Measured> {
        propagate(f, self)
    }
}

/// `value = f(t)`, `σ² = Σ (∂f/∂t_ij)² σ_ij²`, with derivatives from central
/// differences and the entries treated as independent.
pub fn propagate(f: impl Fn(&PauliTable) -> f64, table: &MeasuredTable) -> Result<Measured> {
    let value = f(&table.value);
    if !value.is_finite() {
        return Err(Error::NonFinite("evaluating a propagated function"));
    }
    let mut var = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let s = table.sigma[i][j];
            if s == 0.0 {
                continue;
            }
            let mut up = table.value;
            let mut down = table.value;
            up[(i, j)] += FD_STEP;
            down[(i, j)] -= FD_STEP;
            let d = (f(&up) - f(&down)) / (2.0 * FD_STEP);
            if !d.is_finite() {
                return Err(Error::NonFinite("differentiating a propagated function"));
            }
            var += d * d * s * s;
        }
    }
    Ok(Measured {
        value,
        sigma: var.sqrt(),
    })
}
