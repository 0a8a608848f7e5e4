//! Row-stochastic matrices: regularity, stationary rows, and the heat
//! semigroup `e^{t(P − I)}` by uniformization.

use std::ops::Deref;

use ndarray::{Array1, Array2, ArrayView1};

use crate::coupling::{DiscreteCoupling, Marginal, PointFunction, ZERO_MASS};
use crate::error::shape_mismatch;
use crate::poisson::{with_initial_time, PoissonWeights};
use crate::{DiffusionTrace, Error, Result};

/// Row sums must equal 1 within this.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Row-stochastic `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMatrix(Array2<f64>);

impl MarkovMatrix {
    pub fn new(p: Array2<f64>) -> Result<Self> {
        if p.nrows() != p.ncols() || p.nrows() == 0 {
            return Err(shape_mismatch(
                "nonempty square matrix",
                format!("{}x{}", p.nrows(), p.ncols()),
            ));
        }
        for ((i, j), &v) in p.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("transition ({i}, {j})")));
            }
            if v < 0.0 {
                return Err(Error::NegativeMass {
                    location: format!("transition ({i}, {j})"),
                    value: v,
                });
            }
        }
        for (i, row) in p.rows().into_iter().enumerate() {
            let s = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidParameter(format!(
                    "row {i} of transition matrix sums to {s}"
                )));
            }
        }
        Ok(Self(p))
    }

    /// `D⁻¹π` where `D = diag(π¹)`; every point needs positive first marginal.
    pub fn from_coupling(coupling: &DiscreteCoupling) -> Result<Self> {
        let mu = coupling.marginal(Marginal::First);
        if let Some(i) = mu.iter().position(|&m| m < ZERO_MASS) {
            return Err(Error::DegenerateVertex(i));
        }
        let mut p = (**coupling).clone();
        for (mut row, &m) in p.rows_mut().into_iter().zip(mu.iter()) {
            row /= m;
        }
        Ok(Self(p))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

impl Deref for MarkovMatrix {
    type Target = Array2<f64>;
    fn deref(&self) -> &Array2<f64> {
        &self.0
    }
}

fn boolean_product(a: &[bool], b: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if a[i * n + k] {
                let row = &b[k * n..(k + 1) * n];
                for (o, &v) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o |= v;
                }
            }
        }
    }
    out
}

/// True iff some power `Pᵏ` is entrywise positive.
///
/// Works on the support pattern. A primitive pattern is positive at every
/// power from `(n − 1)² + 1` on, and positivity persists once reached, so
/// squaring until the exponent passes that bound decides the question.
pub fn is_regular_chain(p: &MarkovMatrix) -> bool {
    let n = p.size();
    let bound = (n - 1) * (n - 1) + 1;
    let mut support: Vec<bool> = p.iter().map(|&v| v > 0.0).collect();
    let mut exponent = 1usize;
    while exponent < bound {
        support = boolean_product(&support, &support, n);
        exponent *= 2;
    }
    support.into_iter().all(|b| b)
}

/// Row vector `m` with `m P = m`, by power iteration on the left action.
///
/// Stops when `‖m P − m‖₁ ≤ tolerance`.
pub fn stationary_row(p: &MarkovMatrix, tolerance: f64, max_iter: usize) -> Result<Array1<f64>> {
    if !is_regular_chain(p) {
        return Err(Error::NotRegular);
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    let n = p.size();
    let mut m = Array1::from_elem(n, 1.0 / n as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = m.dot(&p.0);
        let total = next.sum();
        next /= total;
        residual = next.iter().zip(m.iter()).map(|(a, b)| (a - b).abs()).sum();
        m = next;
        if residual <= tolerance {
            return Ok(m);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// `e^{t(P − I)} f = e^{−t} Σ_{l ≤ L(t)} (tˡ/l!) Pˡ f` at each requested time.
///
/// `L(t)` is chosen so the dropped Poisson mass is at most `epsilon`, hence
/// the sup-norm error is at most `epsilon · ‖f‖_∞`. The powers `Pˡ f` are
/// computed once up to the largest level and shared by all times. A time 0
/// is prepended when absent.
pub fn uniformize(
    p: &MarkovMatrix,
    f: &PointFunction,
    times: &[f64],
    epsilon: f64,
    steady: Option<Array1<f64>>,
) -> Result<DiffusionTrace> {
    let n = p.size();
    if f.len() != n {
        return Err(shape_mismatch(n, f.len()));
    }
    let times = with_initial_time(times)?;
    let weights = times
        .iter()
        .map(|&t| PoissonWeights::new(t, epsilon))
        .collect::<Result<Vec<_>>>()?;
    let max_level = weights.iter().map(PoissonWeights::level).max().unwrap_or(0);

    let mut powers = Vec::with_capacity(max_level + 1);
    powers.push((**f).clone());
    for l in 1..=max_level {
        let next = p.0.dot(&powers[l - 1]);
        powers.push(next);
    }

    let mut snapshots = Array2::zeros((times.len(), n));
    for (mut row, w) in snapshots.rows_mut().into_iter().zip(&weights) {
        if w.level() == 0 && w.weights()[0] == 1.0 {
            row.assign(&powers[0]);
            continue;
        }
        for (coef, power) in w.weights().iter().zip(&powers) {
            row.scaled_add(*coef, power);
        }
    }
    Ok(DiffusionTrace::assemble(
        times, snapshots, steady, max_level,
    ))
}

/// `Σ_j m_j f_j`.
pub fn weighted_mean(m: ArrayView1<'_, f64>, f: &PointFunction) -> f64 {
    m.dot(&***f)
}
