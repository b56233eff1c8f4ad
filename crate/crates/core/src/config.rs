//! Numerical tolerances and the finite-net pass rule used to certify limits.

use serde::{Deserialize, Serialize};

/// Environment variable selecting a tolerance profile (`strict` or `default`).
pub const PROFILE_ENV: &str = "ASMLAB_TOLERANCE_PROFILE";

/// Every tolerance used by the library, in one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-entry asymmetry accepted when wrapping a matrix as Hermitian.
    pub hermiticity: f64,
    /// Smallest eigenvalue accepted as "nonnegative" is `-psd`.
    pub psd: f64,
    /// Allowed deviation of a density operator's trace from 1.
    pub trace: f64,
    /// Allowed `||A(X) - I||` for a normalized measure.
    pub normalization: f64,
    /// Allowed projectivity residual for a PVM.
    pub projectivity: f64,
    /// Relative eigenvalue clustering width for spectral measures.
    pub cluster: f64,
    /// Effects with norm at most this are outside the spectrum.
    pub support: f64,
    /// Relative off-diagonal Frobenius mass at which Jacobi stops.
    pub jacobi_threshold: f64,
    pub max_sweeps: usize,
    /// Slack on the closed unit ball.
    pub ball: f64,
    /// Row-sum slack for stochastic matrices.
    pub stochastic: f64,
    /// Normalization and trace slack for spin POVMs.
    pub spin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            psd: 1e-10,
            trace: 1e-10,
            normalization: 1e-10,
            projectivity: 1e-10,
            cluster: 1e-8,
            support: 1e-12,
            jacobi_threshold: 1e-13,
            max_sweeps: 100,
            ball: 1e-12,
            stochastic: 1e-12,
            spin: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn strict() -> Self {
        Self {
            psd: 1e-12,
            trace: 1e-12,
            normalization: 1e-12,
            projectivity: 1e-12,
            cluster: 1e-10,
            jacobi_threshold: 1e-14,
            ..Self::default()
        }
    }

    /// Looks up a profile by name.
    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default()),
            "strict" => Some(Self::strict()),
            _ => None,
        }
    }

    /// Reads [`PROFILE_ENV`]; unset means the default profile.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(PROFILE_ENV) {
            Ok(name) => Self::profile(&name)
                .ok_or_else(|| format!("{PROFILE_ENV}={name:?}: expected `strict` or `default`")),
            Err(_) => Ok(Self::default()),
        }
    }
}

/// Finite stand-in for `lim_{hbar -> 0} d(hbar) = 0`.
///
/// A sequence sampled on a decreasing net passes when its last `tail`
/// entries never grow by more than `slack` (relative, plus `abs_floor` to
/// absorb rounding noise) and the final entry is below `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassRule {
    pub tail: usize,
    pub slack: f64,
    pub floor: f64,
    pub abs_floor: f64,
}

impl Default for PassRule {
    fn default() -> Self {
        Self { tail: 5, slack: 0.10, floor: 0.05, abs_floor: 1e-12 }
    }
}

impl PassRule {
    /// `values` must be ordered along the net (largest hbar first).
    pub fn passes(&self, values: &[f64]) -> bool {
        let Some(&last) = values.last() else {
            return false;
        };
        if !values.iter().all(|v| v.is_finite()) {
            return false;
        }
        let start = values.len().saturating_sub(self.tail.max(1));
        let tail = &values[start..];
        let nonincreasing = tail
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + self.slack) + self.abs_floor);
        nonincreasing && last < self.floor
    }
}
