//! Exact binomial confidence intervals.

use serde::{Deserialize, Serialize};

use super::beta::regularized_incomplete_beta;
use crate::error::{CoreError, Result};

/// Absolute tolerance on interval endpoints.
pub const ENDPOINT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub confidence: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }

    /// Endpoints at four decimals, e.g. `(0.4604, 0.8348)`.
    pub fn display(&self) -> String {
        format!("({:.4}, {:.4})", self.lo, self.hi)
    }
}

/// `P(X >= k)` for `X ~ Bin(n, p)`.
pub fn upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        regularized_incomplete_beta(p, k as f64, (n - k + 1) as f64)
    }
}

/// `P(X <= k)` for `X ~ Bin(n, p)`.
pub fn lower_tail(k: u64, n: u64, p: f64) -> f64 {
    if k >= n {
        1.0
    } else {
        1.0 - regularized_incomplete_beta(p, (k + 1) as f64, (n - k) as f64)
    }
}

/// Exact (Clopper-Pearson) interval for a binomial proportion.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> Result<ConfidenceInterval> {
    if n == 0 {
        return Err(CoreError::InvalidBinomial("need at least one trial".into()));
    }
    if k > n {
        return Err(CoreError::InvalidBinomial(format!("{k} successes exceed {n} trials")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CoreError::InvalidBinomial(format!(
            "confidence {confidence} must lie strictly between 0 and 1"
        )));
    }
    let half_alpha = (1.0 - confidence) / 2.0;
    let lo = if k == 0 {
        0.0
    } else {
        bisect_increasing(|p| upper_tail(k, n, p) - half_alpha)
    };
    let hi = if k == n {
        1.0
    } else {
        bisect_increasing(|p| half_alpha - lower_tail(k, n, p))
    };
    Ok(ConfidenceInterval { lo, hi, confidence })
}

/// Root in `[0, 1]` of a function that increases from negative to positive.
fn bisect_increasing(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > ENDPOINT_TOLERANCE / 4.0 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
