//! Dyadic Markov couplings on `[0, 1)` at finite resolution.
//!
//! A kernel in the class `M_δ(dx)` depends only on the dyadic ultrametric,
//! `K(x, y) = Σ_j α_j 2^j 1{δ(x, y) ≤ 2^{−j}}`, and is Markov when
//!
//! * (a) `Σ |α_j| < ∞` (automatic for finite vectors),
//! * (b) `Σ_{l ≤ j} α_l 2^l ≥ 0` for every `j`,
//! * (c) `Σ_j α_j = 1`.
//!
//! Such an operator is diagonal in the Haar basis: constants have
//! eigenvalue 1 and a Haar function supported on an interval of length
//! `2^{−s}` has eigenvalue `Σ_{j ≥ s+1} α_j`. The heat semigroup of
//! `Δ = K − I` therefore damps each Haar coefficient by `e^{t(λ − 1)}`.
//!
//! Grid functions hold cell averages on the `2^J` cells `[k 2^{−J}, (k+1) 2^{−J})`;
//! Haar inner products are exact for that class.

use ndarray::{Array1, Array2};

use crate::coupling::EdgeFunction;
use crate::error::shape_mismatch;
use crate::poisson::with_initial_time;
use crate::{DiffusionTrace, Error, Result};

/// Tolerance on `Σ α_j = 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Kernel partial sums `Σ_{l ≤ j} α_l 2^l` may dip this far below zero.
pub const PARTIAL_SUM_TOLERANCE: f64 = 1e-12;
/// Row and column integrals of a Markov kernel must be 1 within this.
pub const MARKOV_TOLERANCE: f64 = 1e-10;
/// Largest grid resolution handled by the `O(2^J)` Haar routines.
pub const MAX_RESOLUTION: u32 = 30;
/// Largest resolution for dense `2^J × 2^J` kernel matrices.
pub const MAX_KERNEL_RESOLUTION: u32 = 12;

fn check_unit(v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::DomainError {
            value: v,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// `δ(x, y)`: length of the smallest dyadic interval containing both points.
pub fn dyadic_delta(x: f64, y: f64) -> Result<f64> {
    check_unit(x)?;
    check_unit(y)?;
    if x == y {
        return Ok(0.0);
    }
    // Scaling by 2^64 is exact, so the truncations are the first 64 binary digits.
    const SCALE: f64 = 18_446_744_073_709_551_616.0;
    let (bx, by) = ((x * SCALE) as u64, (y * SCALE) as u64);
    if bx != by {
        return Ok(0.5f64.powi((bx ^ by).leading_zeros() as i32));
    }
    // Both points agree on 64 digits: continue digit by digit.
    let mut j = 64;
    let (mut sx, mut sy) = (x * SCALE, y * SCALE);
    loop {
        sx *= 2.0;
        sy *= 2.0;
        if sx.floor() != sy.floor() {
            return Ok(0.5f64.powi(j));
        }
        j += 1;
    }
}

/// Measured summability, partial-sum and total-mass conditions for a
/// coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConditions {
    /// `Σ |α_j|`.
    pub abs_sum: f64,
    /// `Σ α_j`.
    pub sum: f64,
    /// `min_j Σ_{l ≤ j} α_l 2^l` and the scale where it occurs.
    pub min_partial_sum: f64,
    pub min_partial_scale: usize,
}

impl KernelConditions {
    pub fn measure(alpha: &[f64]) -> Self {
        let mut partial = 0.0;
        let mut min_partial_sum = f64::INFINITY;
        let mut min_partial_scale = 0;
        for (j, a) in alpha.iter().enumerate() {
            partial += a * 2f64.powi(j as i32);
            if partial < min_partial_sum {
                min_partial_sum = partial;
                min_partial_scale = j;
            }
        }
        Self {
            abs_sum: alpha.iter().map(|a| a.abs()).sum(),
            sum: alpha.iter().sum(),
            min_partial_sum,
            min_partial_scale,
        }
    }

    pub fn absolutely_summable(&self) -> bool {
        self.abs_sum.is_finite()
    }

    pub fn nonnegative(&self) -> bool {
        self.min_partial_sum >= -PARTIAL_SUM_TOLERANCE
    }

    pub fn unit_mass(&self) -> bool {
        (self.sum - 1.0).abs() <= SUM_TOLERANCE
    }
}

/// Coefficients `(α_0, …, α_J)` of a kernel in `M_δ(dx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicKernelSpec {
    alpha: Vec<f64>,
}

impl DyadicKernelSpec {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidParameter(
                "kernel needs at least one coefficient".into(),
            ));
        }
        if alpha.len() > MAX_RESOLUTION as usize + 1 {
            return Err(Error::ScaleOutOfRange {
                scale: alpha.len() - 1,
                max: MAX_RESOLUTION as usize,
            });
        }
        if let Some(j) = alpha.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFinite(format!("alpha_{j}")));
        }
        let c = KernelConditions::measure(&alpha);
        if !c.unit_mass() {
            return Err(Error::CoefficientSum(c.sum));
        }
        if !c.nonnegative() {
            return Err(Error::NegativeKernel {
                scale: c.min_partial_scale,
                partial_sum: c.min_partial_sum,
            });
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `J`, the finest scale carrying a coefficient.
    pub fn max_scale(&self) -> usize {
        self.alpha.len() - 1
    }

    fn coefficient(&self, j: usize) -> f64 {
        self.alpha.get(j).copied().unwrap_or(0.0)
    }

    /// Kernel value at distance `δ = 2^{−m}`: `Σ_{j ≤ m} α_j 2^j`, for `m = 0..=resolution`.
    fn kernel_levels(&self, resolution: usize) -> Vec<f64> {
        let mut partial = 0.0;
        (0..=resolution)
            .map(|j| {
                partial += self.coefficient(j) * 2f64.powi(j as i32);
                partial
            })
            .collect()
    }

    /// Eigenvalue for Haar functions supported at scale `s`, with
    /// coefficients beyond `J` read as zero.
    fn eigenvalue_at(&self, support_scale: usize) -> f64 {
        self.alpha.iter().skip(support_scale + 1).sum()
    }
}

/// Eigenvalue `Σ_{j ≥ s+1} α_j` of the kernel operator on Haar functions
/// supported on intervals of length `2^{−s}`, `0 ≤ s < J`.
///
/// The constant function has eigenvalue `Σ_j α_j = 1`.
pub fn haar_eigenvalue(spec: &DyadicKernelSpec, support_scale: usize) -> Result<f64> {
    if support_scale >= spec.max_scale() {
        return Err(Error::ScaleOutOfRange {
            scale: support_scale,
            max: spec.max_scale().saturating_sub(1),
        });
    }
    Ok(spec.eigenvalue_at(support_scale))
}

/// Cell averages of a function on the `2^J` dyadic cells of level `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicGridFunction {
    resolution: u32,
    values: Array1<f64>,
}

impl DyadicGridFunction {
    pub fn new(resolution: u32, values: Array1<f64>) -> Result<Self> {
        if resolution > MAX_RESOLUTION {
            return Err(Error::ScaleOutOfRange {
                scale: resolution as usize,
                max: MAX_RESOLUTION as usize,
            });
        }
        if values.len() != 1 << resolution {
            return Err(shape_mismatch(1usize << resolution, values.len()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("cell {k}")));
        }
        Ok(Self { resolution, values })
    }

    /// Infers `J` from a length that must be a power of two.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(shape_mismatch("power-of-two length", n));
        }
        Self::new(n.trailing_zeros(), Array1::from(values))
    }

    pub fn constant(resolution: u32, c: f64) -> Result<Self> {
        Self::new(resolution, Array1::from_elem(1 << resolution, c))
    }

    /// Samples `f` at cell midpoints.
    pub fn from_midpoints(resolution: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 0.5f64.powi(resolution as i32);
        Self::new(
            resolution,
            (0..1usize << resolution)
                .map(|k| f((k as f64 + 0.5) * h))
                .collect(),
        )
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn cell_width(&self) -> f64 {
        0.5f64.powi(self.resolution as i32)
    }

    /// `∫_{[0,1)} f`.
    pub fn mean(&self) -> f64 {
        self.values.sum() * self.cell_width()
    }

    /// `‖f‖²_{L²}`.
    pub fn l2_norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.cell_width()
    }

    pub fn into_values(self) -> Array1<f64> {
        self.values
    }
}

/// L²-normalized Haar function `h_I` for `I = [k 2^{−s}, (k+1) 2^{−s})`,
/// as cell values at resolution `J > s`.
pub fn haar_vector(
    resolution: u32,
    support_scale: u32,
    position: usize,
) -> Result<DyadicGridFunction> {
    if support_scale >= resolution {
        return Err(Error::ScaleOutOfRange {
            scale: support_scale as usize,
            max: resolution as usize - 1,
        });
    }
    if position >= 1 << support_scale {
        return Err(Error::InvalidParameter(format!(
            "position {position} outside scale {support_scale}"
        )));
    }
    let amplitude = 2f64.powi(support_scale as i32).sqrt();
    let width = 1usize << (resolution - support_scale);
    let start = position * width;
    let mut values = Array1::zeros(1 << resolution);
    for c in 0..width {
        values[start + c] = if c < width / 2 { amplitude } else { -amplitude };
    }
    DyadicGridFunction::new(resolution, values)
}

/// Coefficients of a grid function in the basis `{1} ∪ {h_I : |I| ≥ 2^{1−J}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarSpectrum {
    resolution: u32,
    /// `⟨f, 1⟩`.
    pub mean: f64,
    /// `detail[s][k] = ⟨f, h_I⟩` with `I = I^s_k`, for `s < J`, `k < 2^s`.
    pub detail: Vec<Vec<f64>>,
}

impl HaarSpectrum {
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn detail(&self, support_scale: usize, position: usize) -> f64 {
        self.detail[support_scale][position]
    }

    /// `mean² + Σ detail²`.
    pub fn energy(&self) -> f64 {
        self.mean * self.mean + self.detail.iter().flatten().map(|d| d * d).sum::<f64>()
    }
}

/// Fast Haar analysis in `O(2^J)`.
pub fn haar_forward(f: &DyadicGridFunction) -> HaarSpectrum {
    let j_max = f.resolution as usize;
    // integrals over the cells of the current level
    let mut sums: Vec<f64> = f.values.iter().map(|v| v * f.cell_width()).collect();
    let mut detail = vec![Vec::new(); j_max];
    for s in (0..j_max).rev() {
        let amplitude = 2f64.powi(s as i32).sqrt();
        let (parents, coefficients): (Vec<f64>, Vec<f64>) = sums
            .chunks_exact(2)
            .map(|pair| (pair[0] + pair[1], amplitude * (pair[0] - pair[1])))
            .unzip();
        detail[s] = coefficients;
        sums = parents;
    }
    HaarSpectrum {
        resolution: f.resolution,
        mean: sums[0],
        detail,
    }
}

/// Inverse of [`haar_forward`].
pub fn haar_inverse(s: &HaarSpectrum) -> DyadicGridFunction {
    let mut averages = vec![s.mean];
    for (scale, coefficients) in s.detail.iter().enumerate() {
        let amplitude = 2f64.powi(scale as i32).sqrt();
        averages = averages
            .iter()
            .zip(coefficients)
            .flat_map(|(&a, &d)| [a + amplitude * d, a - amplitude * d])
            .collect();
    }
    DyadicGridFunction {
        resolution: s.resolution,
        values: Array1::from(averages),
    }
}

/// Kernel values `k(a, b)` on pairs of level-`J` cells; integrals against
/// `dy` are sums weighted by `2^{−J}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    resolution: u32,
    k: Array2<f64>,
}

impl DiscreteKernel {
    /// Accepts any finite `2^J × 2^J` matrix; use [`markov_kernel_check`]
    /// to test the Markov conditions.
    pub fn new(resolution: u32, k: Array2<f64>) -> Result<Self> {
        if resolution > MAX_KERNEL_RESOLUTION {
            return Err(Error::ScaleOutOfRange {
                scale: resolution as usize,
                max: MAX_KERNEL_RESOLUTION as usize,
            });
        }
        let n = 1usize << resolution;
        if k.dim() != (n, n) {
            return Err(shape_mismatch(
                format!("({n}, {n})"),
                format!("{:?}", k.dim()),
            ));
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kernel".into()));
        }
        Ok(Self { resolution, k })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.k
    }

    pub fn cell_weight(&self) -> f64 {
        0.5f64.powi(self.resolution as i32)
    }
}

/// Dense kernel of `spec` on level-`resolution` cells.
///
/// For distinct cells `a ≠ b`, `δ = 2^{−m}` where `m` is the length of the
/// common binary prefix of their indices; the diagonal takes every term.
pub fn kernel_matrix(spec: &DyadicKernelSpec, resolution: u32) -> Result<DiscreteKernel> {
    if spec.max_scale() > resolution as usize {
        return Err(Error::ScaleOutOfRange {
            scale: spec.max_scale(),
            max: resolution as usize,
        });
    }
    if resolution > MAX_KERNEL_RESOLUTION {
        return Err(Error::ScaleOutOfRange {
            scale: resolution as usize,
            max: MAX_KERNEL_RESOLUTION as usize,
        });
    }
    let levels = spec.kernel_levels(resolution as usize);
    let n = 1usize << resolution;
    let k = Array2::from_shape_fn((n, n), |(a, b)| {
        let differing = usize::BITS - (a ^ b).leading_zeros();
        levels[resolution as usize - differing as usize]
    });
    DiscreteKernel::new(resolution, k)
}

/// Markov conditions: `k ≥ 0` (to `−1e-12`) and unit weighted row and
/// column sums (to `1e-10`).
pub fn markov_kernel_check(k: &DiscreteKernel) -> bool {
    let w = k.cell_weight();
    let nonnegative = k.k.iter().all(|&v| v >= -PARTIAL_SUM_TOLERANCE);
    let rows =
        k.k.rows()
            .into_iter()
            .all(|r| (r.sum() * w - 1.0).abs() <= MARKOV_TOLERANCE);
    let cols =
        k.k.columns()
            .into_iter()
            .all(|c| (c.sum() * w - 1.0).abs() <= MARKOV_TOLERANCE);
    nonnegative && rows && cols
}

/// `(Kf)(a) = Σ_b k(a, b) f(b) 2^{−J}`.
pub fn kernel_apply(k: &DiscreteKernel, f: &DyadicGridFunction) -> Result<DyadicGridFunction> {
    if k.resolution != f.resolution {
        return Err(shape_mismatch(k.resolution, f.resolution));
    }
    let values = k.k.dot(&f.values) * k.cell_weight();
    Ok(DyadicGridFunction {
        resolution: k.resolution,
        values,
    })
}

/// `Kir_π Φ(a) = Σ_b k(a, b) Φ(a, b) 2^{−J}`.
pub fn kirchhoff_markov(k: &DiscreteKernel, phi: &EdgeFunction) -> Result<DyadicGridFunction> {
    if phi.dim() != k.k.dim() {
        return Err(shape_mismatch(
            format!("{:?}", k.k.dim()),
            format!("{:?}", phi.dim()),
        ));
    }
    let w = k.cell_weight();
    let values =
        k.k.rows()
            .into_iter()
            .zip(phi.rows())
            .map(|(kr, pr)| kr.dot(&pr) * w)
            .collect();
    Ok(DyadicGridFunction {
        resolution: k.resolution,
        values,
    })
}

/// `Δf = Kf − f`.
pub fn markov_laplacian(k: &DiscreteKernel, f: &DyadicGridFunction) -> Result<DyadicGridFunction> {
    let kf = kernel_apply(k, f)?;
    Ok(DyadicGridFunction {
        resolution: f.resolution,
        values: kf.values - &f.values,
    })
}

fn damp(spectrum: &HaarSpectrum, factors: &[f64]) -> HaarSpectrum {
    HaarSpectrum {
        resolution: spectrum.resolution,
        mean: spectrum.mean,
        detail: spectrum
            .detail
            .iter()
            .zip(factors)
            .map(|(row, &c)| row.iter().map(|d| d * c).collect())
            .collect(),
    }
}

/// `u(·, t) = ∫f + Σ_h e^{t(λ_h − 1)} ⟨f, h⟩ h`, with no series truncation.
///
/// The trace's steady state keeps the mean and every Haar component whose
/// eigenvalue is 1; when all `λ < 1` it is the constant `mean(f)`.
pub fn spectral_heat_solve(
    spec: &DyadicKernelSpec,
    f: &DyadicGridFunction,
    times: &[f64],
) -> Result<DiffusionTrace> {
    if spec.max_scale() > f.resolution as usize {
        return Err(Error::ScaleOutOfRange {
            scale: spec.max_scale(),
            max: f.resolution as usize,
        });
    }
    let times = with_initial_time(times)?;
    let spectrum = haar_forward(f);
    let rates: Vec<f64> = (0..f.resolution as usize)
        .map(|s| spec.eigenvalue_at(s) - 1.0)
        .collect();

    let mut snapshots = Array2::zeros((times.len(), f.values.len()));
    for (mut row, &t) in snapshots.rows_mut().into_iter().zip(&times) {
        if t == 0.0 {
            row.assign(&f.values);
            continue;
        }
        let factors: Vec<f64> = rates.iter().map(|r| (t * r).exp()).collect();
        row.assign(&haar_inverse(&damp(&spectrum, &factors)).values);
    }

    let persistent: Vec<f64> = rates
        .iter()
        .map(|r| if r.abs() <= 1e-14 { 1.0 } else { 0.0 })
        .collect();
    let steady = haar_inverse(&damp(&spectrum, &persistent)).values;
    Ok(DiffusionTrace::assemble(times, snapshots, Some(steady), 0))
}
