//! The finite case: a weighted graph on `n` vertices with symmetric weights
//! `w(i, j)` of total mass 1 defines the coupling `π(i, j) = w(i, j)`.
//!
//! Its first marginal is the vertex measure `μ_i = Σ_j w(i, j)`, the
//! Laplacian is `Δ = D⁻¹W − I` with `D = diag(μ)`, and
//! `e^{tΔ} = e^{−t} e^{tD⁻¹W}`, which [`heat_evolve`] evaluates by
//! uniformization of the transition matrix `D⁻¹W`.

use ndarray::{Array1, Array2};

use crate::coupling::{
    DiscreteCoupling, DiscreteMeasure, EdgeFunction, PointFunction, MASS_TOLERANCE,
};
use crate::error::shape_mismatch;
use crate::markov;
use crate::{DiffusionTrace, Error, Result};

pub use crate::markov::{is_regular_chain, MarkovMatrix};

/// Symmetric, zero-diagonal, nonnegative weights of total mass 1 with every
/// vertex measure positive.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    w: Array2<f64>,
    mu: DiscreteMeasure,
    transition: MarkovMatrix,
}

impl WeightedGraph {
    /// Validates `w`. With `normalize` the weights are first divided by
    /// their total; otherwise a total other than 1 is an error.
    pub fn new(w: Array2<f64>, normalize: bool) -> Result<Self> {
        let n = w.nrows();
        if w.ncols() != n {
            return Err(shape_mismatch(
                "square matrix",
                format!("{}x{}", n, w.ncols()),
            ));
        }
        if n < 2 {
            return Err(Error::InvalidGraph(format!(
                "need at least 2 vertices, got {n}"
            )));
        }
        for ((i, j), &v) in w.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("weight ({i}, {j})")));
            }
            if v < 0.0 {
                return Err(Error::NegativeMass {
                    location: format!("weight ({i}, {j})"),
                    value: v,
                });
            }
            if i == j && v != 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "nonzero diagonal weight at vertex {i}"
                )));
            }
        }
        let total = w.sum();
        let scale = if normalize { total } else { 1.0 };
        if total.is_nan() || total <= 0.0 {
            return Err(Error::NotNormalized(total));
        }
        for i in 0..n {
            for j in 0..i {
                if (w[[i, j]] - w[[j, i]]).abs() > MASS_TOLERANCE * scale {
                    return Err(Error::InvalidGraph(format!(
                        "weights not symmetric at ({i}, {j}): {} vs {}",
                        w[[i, j]],
                        w[[j, i]]
                    )));
                }
            }
        }
        let w = if normalize { w / total } else { w };
        if (w.sum() - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotNormalized(w.sum()));
        }

        let mu_raw = w.sum_axis(ndarray::Axis(1));
        if let Some(i) = mu_raw.iter().position(|&m| m <= 0.0) {
            return Err(Error::DegenerateVertex(i));
        }
        let mut p = w.clone();
        for (mut row, &m) in p.rows_mut().into_iter().zip(mu_raw.iter()) {
            row /= m;
        }
        let transition = MarkovMatrix::new(p)?;
        let mu = DiscreteMeasure::new(mu_raw)?;
        Ok(Self { w, mu, transition })
    }

    /// Builds from an undirected edge list; each `(i, j, weight)` sets both
    /// `w(i, j)` and `w(j, i)`.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], normalize: bool) -> Result<Self> {
        let mut w = Array2::zeros((n, n));
        for &(i, j, v) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) outside {n} vertices"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
        Self::new(w, normalize)
    }

    pub fn size(&self) -> usize {
        self.w.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.w
    }

    /// `μ_i = Σ_j w(i, j)`.
    pub fn vertex_measure(&self) -> &DiscreteMeasure {
        &self.mu
    }

    /// `D⁻¹W`.
    pub fn transition_matrix(&self) -> &MarkovMatrix {
        &self.transition
    }

    /// The weights viewed as a coupling on `V × V`.
    pub fn coupling(&self) -> DiscreteCoupling {
        DiscreteCoupling::new(self.w.clone()).expect("graph weights form a coupling")
    }

    /// True iff every vertex reaches every other along positive weights.
    pub fn is_connected(&self) -> bool {
        let n = self.size();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, &w) in self.w.row(i).iter().enumerate() {
                if !seen[j] && w > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// `ψ_i = (1/μ_i) Σ_j w(i, j) Φ(i, j)`.
pub fn graph_kirchhoff(g: &WeightedGraph, phi: &EdgeFunction) -> Result<PointFunction> {
    let n = g.size();
    if phi.dim() != (n, n) {
        return Err(shape_mismatch(
            format!("({n}, {n})"),
            format!("{:?}", phi.dim()),
        ));
    }
    let psi: Array1<f64> = (0..n)
        .map(|i| {
            let s: f64 = (0..n).map(|j| g.w[[i, j]] * phi[[i, j]]).sum();
            s / g.mu[i]
        })
        .collect();
    PointFunction::new(psi)
}

/// `(Δf)_i = (1/μ_i) Σ_j w(i, j) (f_j − f_i)`.
pub fn graph_laplacian_apply(g: &WeightedGraph, f: &PointFunction) -> Result<PointFunction> {
    let n = g.size();
    if f.len() != n {
        return Err(shape_mismatch(n, f.len()));
    }
    let out: Array1<f64> = (0..n)
        .map(|i| {
            let s: f64 = (0..n).map(|j| g.w[[i, j]] * (f[j] - f[i])).sum();
            s / g.mu[i]
        })
        .collect();
    PointFunction::new(out)
}

/// `u(t) = e^{tΔ} f` by uniformization of `D⁻¹W`; see
/// [`markov::uniformize`] for the truncation rule.
///
/// On a connected graph the trace carries the steady state
/// `(Σ_j μ_j f_j)·1`: symmetric weights make `μ` stationary for `D⁻¹W`.
pub fn heat_evolve(
    g: &WeightedGraph,
    f: &PointFunction,
    times: &[f64],
    epsilon: f64,
) -> Result<DiffusionTrace> {
    if f.len() != g.size() {
        return Err(shape_mismatch(g.size(), f.len()));
    }
    let steady = g
        .is_connected()
        .then(|| Array1::from_elem(g.size(), markov::weighted_mean(g.mu.view(), f)));
    markov::uniformize(&g.transition, f, times, epsilon, steady)
}

/// The common row `m` of `lim_k (D⁻¹W)ᵏ`, by power iteration.
///
/// Fails with [`Error::NotRegular`] unless the transition matrix is regular
/// (for instance a two-vertex graph, whose chain has period 2).
pub fn steady_state(g: &WeightedGraph, tolerance: f64, max_iter: usize) -> Result<PointFunction> {
    let m = markov::stationary_row(&g.transition, tolerance, max_iter)?;
    PointFunction::new(m)
}

/// True iff `‖Δf‖_∞ ≤ tolerance`, i.e. `f` satisfies the mean value identity.
pub fn is_harmonic(g: &WeightedGraph, f: &PointFunction, tolerance: f64) -> Result<bool> {
    Ok(graph_laplacian_apply(g, f)?.sup_norm() <= tolerance)
}
