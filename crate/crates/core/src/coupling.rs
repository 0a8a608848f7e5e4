//! Finite-support measures and couplings, and the Kirchhoff divergence
//! defined by duality:
//!
//! ```text
//! Σ_i φ(i) ψ(i) μ(i) = Σ_{i,j} φ(i) Φ(i,j) π(i,j)   for every φ.
//! ```
//!
//! On a finite set the solution is the density of the first marginal of
//! `Φ·π` with respect to `μ`. With `μ = π¹` it always exists; with an
//! arbitrary reference `μ` it exists only when that marginal vanishes on
//! `μ`-null points.

use std::ops::Deref;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::shape_mismatch;
use crate::{Error, Result};

/// Reference masses below this are treated as zero.
pub const ZERO_MASS: f64 = 1e-15;
/// Divergence numerators above this on a null point violate absolute continuity.
pub const ZERO_NUMERATOR: f64 = 1e-12;
/// Allowed deviation of a total mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-12;

fn check_finite<'a>(values: impl Iterator<Item = &'a f64>, what: &str) -> Result<()> {
    for (k, v) in values.enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{what} entry {k}")));
        }
    }
    Ok(())
}

/// Probability weights on `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure(Array1<f64>);

impl DiscreteMeasure {
    pub fn new(weights: Array1<f64>) -> Result<Self> {
        check_finite(weights.iter(), "measure")?;
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
            return Err(Error::NegativeMass {
                location: format!("point {i}"),
                value: w,
            });
        }
        let total = weights.sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self(weights))
    }

    /// Unit mass at `index`.
    pub fn dirac(n: usize, index: usize) -> Self {
        let mut w = Array1::zeros(n);
        w[index] = 1.0;
        Self(w)
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.0
    }
}

impl Deref for DiscreteMeasure {
    type Target = Array1<f64>;
    fn deref(&self) -> &Array1<f64> {
        &self.0
    }
}

/// Which factor of `X × X` a marginal projects onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginal {
    First,
    Second,
}

/// Joint probability `π(i, j)` on `{0..n} × {0..n}`, stored dense.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCoupling(Array2<f64>);

impl DiscreteCoupling {
    pub fn new(mass: Array2<f64>) -> Result<Self> {
        if mass.nrows() != mass.ncols() {
            return Err(shape_mismatch(
                "square matrix",
                format!("{}x{}", mass.nrows(), mass.ncols()),
            ));
        }
        check_finite(mass.iter(), "coupling")?;
        if let Some(((i, j), &v)) = mass.indexed_iter().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeMass {
                location: format!("({i}, {j})"),
                value: v,
            });
        }
        let total = mass.sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self(mass))
    }

    /// Rescales nonnegative mass to total 1 before validating.
    pub fn normalized(mass: Array2<f64>) -> Result<Self> {
        let total = mass.sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NotNormalized(total));
        }
        Self::new(mass / total)
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    /// `π¹` (row sums) or `π²` (column sums).
    pub fn marginal(&self, which: Marginal) -> DiscreteMeasure {
        let axis = match which {
            Marginal::First => Axis(1),
            Marginal::Second => Axis(0),
        };
        DiscreteMeasure(self.0.sum_axis(axis))
    }

    pub fn is_symmetric(&self, tolerance: f64) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..i).all(|j| (self.0[[i, j]] - self.0[[j, i]]).abs() <= tolerance))
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

impl Deref for DiscreteCoupling {
    type Target = Array2<f64>;
    fn deref(&self) -> &Array2<f64> {
        &self.0
    }
}

/// Real function `Φ(i, j)` on the product space.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFunction(Array2<f64>);

impl EdgeFunction {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        check_finite(values.iter(), "edge function")?;
        Ok(Self(values))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(Array2::from_elem((n, n), c))
    }

    /// `F(i, j) = f(j) − f(i)`, the edge function whose divergence is `Δf`.
    pub fn difference(f: &PointFunction) -> Self {
        let n = f.len();
        Self(Array2::from_shape_fn((n, n), |(i, j)| f[j] - f[i]))
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

impl Deref for EdgeFunction {
    type Target = Array2<f64>;
    fn deref(&self) -> &Array2<f64> {
        &self.0
    }
}

/// Real function on the points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFunction(Array1<f64>);

impl PointFunction {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        check_finite(values.iter(), "point function")?;
        Ok(Self(values))
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Self::new(Array1::from(values))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(Array1::from_elem(n, c))
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.0
    }
}

impl Deref for PointFunction {
    type Target = Array1<f64>;
    fn deref(&self) -> &Array1<f64> {
        &self.0
    }
}

fn check_square_shapes(coupling: &DiscreteCoupling, phi: &EdgeFunction) -> Result<()> {
    if coupling.dim() != phi.dim() {
        return Err(shape_mismatch(
            format!("{:?}", coupling.dim()),
            format!("{:?}", phi.dim()),
        ));
    }
    Ok(())
}

/// The signed measure `Φ·π`, entrywise.
pub fn phi_measure(coupling: &DiscreteCoupling, phi: &EdgeFunction) -> Result<Array2<f64>> {
    check_square_shapes(coupling, phi)?;
    Ok(&coupling.0 * &phi.0)
}

/// Density of the first marginal of `Φ·π` with respect to an arbitrary
/// reference measure `μ`.
///
/// Points with `μ(i) < ZERO_MASS` get `ψ(i) = 0` when the numerator there
/// vanishes; any value satisfies the defining identity at such a point.
pub fn divergence_wrt(
    coupling: &DiscreteCoupling,
    phi: &EdgeFunction,
    mu: &DiscreteMeasure,
) -> Result<PointFunction> {
    check_square_shapes(coupling, phi)?;
    if mu.len() != coupling.size() {
        return Err(shape_mismatch(coupling.size(), mu.len()));
    }
    let numerator = phi_measure(coupling, phi)?.sum_axis(Axis(1));
    let mut psi = Array1::zeros(numerator.len());
    for (i, (&num, &mass)) in numerator.iter().zip(mu.iter()).enumerate() {
        if mass < ZERO_MASS {
            if num.abs() > ZERO_NUMERATOR {
                return Err(Error::AbsoluteContinuityViolation {
                    index: i,
                    mass,
                    numerator: num,
                });
            }
        } else {
            psi[i] = num / mass;
        }
    }
    Ok(PointFunction(psi))
}

/// `Kir_π Φ`: divergence with respect to the first marginal `π¹`.
pub fn kirchhoff_divergence(
    coupling: &DiscreteCoupling,
    phi: &EdgeFunction,
) -> Result<PointFunction> {
    divergence_wrt(coupling, phi, &coupling.marginal(Marginal::First))
}

/// `Δ_π f = Kir_π F` with `F(i, j) = f(j) − f(i)`.
pub fn laplacian_from_coupling(
    coupling: &DiscreteCoupling,
    f: &PointFunction,
) -> Result<PointFunction> {
    if f.len() != coupling.size() {
        return Err(shape_mismatch(coupling.size(), f.len()));
    }
    kirchhoff_divergence(coupling, &EdgeFunction::difference(f))
}

/// Largest violation of the defining identity over `trials` seeded random
/// test functions `φ` with entries uniform in `[−1, 1)`, against `μ = π¹`.
pub fn defining_equation_residual(
    coupling: &DiscreteCoupling,
    phi: &EdgeFunction,
    psi: &PointFunction,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_square_shapes(coupling, phi)?;
    if psi.len() != coupling.size() {
        return Err(shape_mismatch(coupling.size(), psi.len()));
    }
    let mu = coupling.marginal(Marginal::First);
    let weighted = phi_measure(coupling, phi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let test: Array1<f64> = (0..psi.len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let lhs: f64 = test
            .iter()
            .zip(psi.iter())
            .zip(mu.iter())
            .map(|((a, b), c)| a * b * c)
            .sum();
        let rhs: f64 = weighted.indexed_iter().map(|((i, _), w)| test[i] * w).sum();
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Checks the defining identity for `psi` on `trials` test functions drawn
/// from ChaCha8 seeded with [`DEFAULT_SEED`](crate::DEFAULT_SEED).
pub fn verify_defining_equation(
    coupling: &DiscreteCoupling,
    phi: &EdgeFunction,
    psi: &PointFunction,
    trials: usize,
    tolerance: f64,
) -> Result<bool> {
    verify_defining_equation_seeded(coupling, phi, psi, trials, tolerance, crate::DEFAULT_SEED)
}

pub fn verify_defining_equation_seeded(
    coupling: &DiscreteCoupling,
    phi: &EdgeFunction,
    psi: &PointFunction,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Result<bool> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    Ok(defining_equation_residual(coupling, phi, psi, trials, seed)? <= tolerance)
}

/// `‖Kir_π Φ‖_∞ ≤ ‖Φ‖_∞`, up to `1e-12`.
pub fn sup_bound_check(coupling: &DiscreteCoupling, phi: &EdgeFunction) -> Result<bool> {
    let psi = kirchhoff_divergence(coupling, phi)?;
    Ok(psi.sup_norm() <= phi.sup_norm() + 1e-12)
}
