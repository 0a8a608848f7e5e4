//! Truncated Poisson weights for uniformization.
//!
//! For a stochastic operator `P`, `e^{t(P − I)} = e^{−t} Σ_l (tˡ/l!) Pˡ`.
//! Every `Pˡ f` is bounded by `‖f‖_∞`, so dropping the terms past level `L`
//! costs at most the neglected Poisson mass times `‖f‖_∞`.

use crate::{Error, Result};

/// Poisson(t) probabilities for levels `0..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    weights: Vec<f64>,
    neglected: f64,
}

impl PoissonWeights {
    /// Truncates at the first level `L` whose neglected mass `Σ_{l>L} w_l`
    /// is at most `epsilon`.
    ///
    /// Weights are built multiplicatively outward from the mode `⌊t⌋` and
    /// normalized, so large `t` neither underflows `e^{−t}` nor accumulates
    /// rounding in a long log-space recursion. The tail is summed from the
    /// far end, which keeps it accurate far below the rounding level of the
    /// cumulative sum.
    pub fn new(t: f64, epsilon: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidTimes(format!(
                "time {t} is not a finite nonnegative number"
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {epsilon} not in (0, 1)"
            )));
        }
        if t == 0.0 {
            return Ok(Self {
                weights: vec![1.0],
                neglected: 0.0,
            });
        }

        let mode = t.floor() as usize;
        let mut raw = vec![0.0; mode + 1];
        raw[mode] = 1.0;
        for l in (1..=mode).rev() {
            raw[l - 1] = raw[l] * l as f64 / t;
        }
        // Past the mode, terms decay at least geometrically with ratio t/(l+2),
        // so stop once the remaining tail is negligible next to the mode term.
        let cutoff = epsilon.min(1e-20) * 1e-4;
        loop {
            let l = raw.len() - 1;
            let next = raw[l] * t / (l + 1) as f64;
            raw.push(next);
            let ratio = t / (l + 3) as f64;
            if ratio < 1.0 && next / (1.0 - ratio) < cutoff {
                break;
            }
        }

        let total: f64 = raw.iter().sum();
        let mut tail = 0.0;
        let mut level = raw.len() - 1;
        // tail = Σ_{k > level} w_k
        while level > 0 {
            let candidate = tail + raw[level] / total;
            if candidate > epsilon {
                break;
            }
            tail = candidate;
            level -= 1;
        }
        let weights = raw[..=level].iter().map(|w| w / total).collect();
        Ok(Self {
            weights,
            neglected: tail,
        })
    }

    /// `e^{−t} tˡ / l!` for `l = 0..=L`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Truncation level `L`.
    pub fn level(&self) -> usize {
        self.weights.len() - 1
    }

    /// Poisson mass beyond level `L`.
    pub fn neglected(&self) -> f64 {
        self.neglected
    }
}

/// Checks that `times` is finite, nonnegative and strictly increasing.
pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidTimes("no times given".into()));
    }
    for (i, &t) in times.iter().enumerate() {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidTimes(format!(
                "time {t} is not a finite nonnegative number"
            )));
        }
        if i > 0 && t <= times[i - 1] {
            return Err(Error::InvalidTimes(format!(
                "times must be strictly increasing ({} then {t})",
                times[i - 1]
            )));
        }
    }
    Ok(())
}

/// Prepends `t = 0` when absent, so every trace starts at the initial datum.
pub(crate) fn with_initial_time(times: &[f64]) -> Result<Vec<f64>> {
    check_times(times)?;
    let mut out = Vec::with_capacity(times.len() + 1);
    if times[0] > 0.0 {
        out.push(0.0);
    }
    out.extend_from_slice(times);
    Ok(out)
}
