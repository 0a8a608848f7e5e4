//! Deterministic couplings `π = μ∘G⁻¹` with `G(x) = (x, T(x))`.
//!
//! Here `Kir_π Φ(x) = Φ(x, T(x))`, the Laplacian is `τ − I` with
//! `τf = f∘T`, and
//!
//! ```text
//! e^{tΔ} f = e^{−t} Σ_{l ≥ 0} (tˡ/l!) f∘Tˡ,
//! ```
//!
//! so the long-time behaviour is governed by the orbits of `T`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};

use crate::error::shape_mismatch;
use crate::poisson::{with_initial_time, PoissonWeights};
use crate::{DiffusionTrace, Error, Result};

/// A real function that can be evaluated anywhere in its domain.
pub trait RealFunction {
    fn eval(&self, x: f64) -> Result<f64>;
}

impl<F: Fn(f64) -> f64> RealFunction for F {
    fn eval(&self, x: f64) -> Result<f64> {
        Ok(self(x))
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "[{lo}, {hi}] is not a proper interval"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::DomainError {
                value: x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// Sorted abscissae with values, interpolated linearly between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    domain: Interval,
    points: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(domain: Interval, points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(shape_mismatch(points.len(), values.len()));
        }
        if points.is_empty() {
            return Err(Error::InvalidParameter("no sample points".into()));
        }
        for (i, &x) in points.iter().enumerate() {
            domain.check(x)?;
            if i > 0 && x <= points[i - 1] {
                return Err(Error::InvalidParameter(format!(
                    "sample points must be strictly increasing ({} then {x})",
                    points[i - 1]
                )));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        Ok(Self {
            domain,
            points,
            values,
        })
    }

    /// Samples `f` at `points`.
    pub fn sample(domain: Interval, points: Vec<f64>, f: &impl RealFunction) -> Result<Self> {
        let values = points
            .iter()
            .map(|&x| f.eval(x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, points, values)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl RealFunction for SampledFunction {
    /// Exact at nodes, linear in between; no extrapolation past the end nodes.
    fn eval(&self, x: f64) -> Result<f64> {
        let p = &self.points;
        if !(x >= p[0] && x <= p[p.len() - 1]) {
            return Err(Error::DomainError {
                value: x,
                lo: p[0],
                hi: p[p.len() - 1],
            });
        }
        match p.binary_search_by(|q| q.total_cmp(&x)) {
            Ok(i) => Ok(self.values[i]),
            Err(i) => {
                let (x0, x1) = (p[i - 1], p[i]);
                let (y0, y1) = (self.values[i - 1], self.values[i]);
                let s = (x - x0) / (x1 - x0);
                Ok(y0 + s * (y1 - y0))
            }
        }
    }
}

/// Closed-form initial data selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expr {
    /// `x`
    Linear,
    /// `x²`
    Square,
    /// `x + x²`
    LinearPlusSquare,
}

impl Expr {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Expr::Linear => x,
            Expr::Square => x * x,
            Expr::LinearPlusSquare => x + x * x,
        }
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace(' ', "").as_str() {
            "x" => Ok(Expr::Linear),
            "x^2" | "x2" | "x*x" => Ok(Expr::Square),
            "x+x^2" | "x+x2" | "x+x*x" => Ok(Expr::LinearPlusSquare),
            other => Err(Error::InvalidParameter(format!(
                "unknown expression `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expr::Linear => "x",
            Expr::Square => "x^2",
            Expr::LinearPlusSquare => "x+x^2",
        })
    }
}

/// Initial datum: exact expression or interpolated table.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Expr(Expr),
    Table(SampledFunction),
}

impl RealFunction for InitialData {
    fn eval(&self, x: f64) -> Result<f64> {
        match self {
            InitialData::Expr(e) => Ok(e.eval(x)),
            InitialData::Table(t) => t.eval(x),
        }
    }
}

/// Built-in or tabulated self-map of an interval.
#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Negation,
    Identity,
    Cantor,
    /// Piecewise-linear through `(x_i, T(x_i))`.
    Tabulated {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap {
    kind: MapKind,
    domain: Interval,
}

impl TransportMap {
    /// `T(x) = −x` on `[−1/2, 1/2]`.
    pub fn negation() -> Self {
        Self {
            kind: MapKind::Negation,
            domain: Interval { lo: -0.5, hi: 0.5 },
        }
    }

    pub fn identity(domain: Interval) -> Self {
        Self {
            kind: MapKind::Identity,
            domain,
        }
    }

    /// The Cantor function on `[0, 1]`.
    pub fn cantor() -> Self {
        Self {
            kind: MapKind::Cantor,
            domain: Interval { lo: 0.0, hi: 1.0 },
        }
    }

    /// Piecewise-linear map through the given nodes; the domain is
    /// `[xs[0], xs[last]]` and every node value must lie in it, which makes
    /// the whole image lie in it.
    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidMap(format!(
                "need at least two matching nodes, got {} abscissae and {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMap("non-finite node".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMap(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let domain = Interval::new(xs[0], xs[xs.len() - 1])?;
        if let Some(y) = ys.iter().find(|y| !domain.contains(**y)) {
            return Err(Error::InvalidMap(format!(
                "value {y} leaves the domain [{}, {}]",
                domain.lo, domain.hi
            )));
        }
        Ok(Self {
            kind: MapKind::Tabulated { xs, ys },
            domain,
        })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// `x, T(x), …, T^len(x)`.
    pub fn orbit(&self, x: f64, len: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len + 1);
        out.push(x);
        let mut y = x;
        for _ in 0..len {
            y = apply_map(self, y)?;
            out.push(y);
        }
        Ok(out)
    }
}

impl FromStr for TransportMap {
    type Err = Error;
    /// `negation`, `identity` (on `[0, 1]`) or `cantor`; tables are loaded
    /// separately.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negation" => Ok(Self::negation()),
            "identity" => Ok(Self::identity(Interval { lo: 0.0, hi: 1.0 })),
            "cantor" => Ok(Self::cantor()),
            other => Err(Error::InvalidMap(format!("unknown map `{other}`"))),
        }
    }
}

/// `T(x)`.
pub fn apply_map(map: &TransportMap, x: f64) -> Result<f64> {
    map.domain.check(x)?;
    Ok(match &map.kind {
        MapKind::Negation => -x,
        MapKind::Identity => x,
        MapKind::Cantor => cantor_value(x)?,
        MapKind::Tabulated { xs, ys } => {
            let i = xs.partition_point(|&p| p <= x).clamp(1, xs.len() - 1);
            let (x0, x1) = (xs[i - 1], xs[i]);
            let s = (x - x0) / (x1 - x0);
            ys[i - 1] + s * (ys[i] - ys[i - 1])
        }
    })
}

const CANTOR_DIGITS: u32 = 64;

/// Binary digits `b_1 … b_64` packed MSB-first, read as `M / 2^64`.
fn bits_to_unit(bits: u64) -> f64 {
    bits as f64 * 0.5f64.powi(64)
}

/// Cantor function by ternary digits: digits 0 and 2 become binary 0 and
/// 1, and the first ternary 1 contributes a final binary 1.
///
/// Digits of a float are extracted in floating point; each step triples the
/// representation error of the input, so only about the first 33 ternary
/// digits are reliable. Use [`cantor_value_ratio`] for exact rational input.
pub fn cantor_value(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError {
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let mut bits = 0u64;
    let mut y = x;
    for i in 0..CANTOR_DIGITS {
        y *= 3.0;
        let digit = y.floor().min(2.0);
        y -= digit;
        let bit = 1u64 << (CANTOR_DIGITS - 1 - i);
        if digit == 1.0 {
            bits |= bit;
            break;
        }
        if digit == 2.0 {
            bits |= bit;
        }
        if y == 0.0 {
            break;
        }
    }
    Ok(bits_to_unit(bits))
}

/// Cantor function of `numerator / denominator`, with ternary digits
/// extracted in exact integer arithmetic.
pub fn cantor_value_ratio(numerator: u64, denominator: u64) -> Result<f64> {
    if denominator == 0 || numerator > denominator {
        return Err(Error::DomainError {
            value: numerator as f64 / denominator as f64,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if numerator == denominator {
        return Ok(1.0);
    }
    let q = denominator as u128;
    let mut r = numerator as u128;
    let mut bits = 0u64;
    for i in 0..CANTOR_DIGITS {
        r *= 3;
        let digit = r / q;
        r %= q;
        let bit = 1u64 << (CANTOR_DIGITS - 1 - i);
        match digit {
            1 => {
                bits |= bit;
                break;
            }
            2 => bits |= bit,
            _ => {}
        }
        if r == 0 {
            break;
        }
    }
    Ok(bits_to_unit(bits))
}

fn check_points(map: &TransportMap, xs: &[f64]) -> Result<()> {
    for &x in xs {
        map.domain.check(x)?;
    }
    Ok(())
}

/// `Kir_π Φ(x) = Φ(x, T(x))` at each sample point.
pub fn det_kirchhoff(
    map: &TransportMap,
    phi: impl Fn(f64, f64) -> f64,
    xs: &[f64],
) -> Result<SampledFunction> {
    check_points(map, xs)?;
    let values = xs
        .iter()
        .map(|&x| Ok(phi(x, apply_map(map, x)?)))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(map.domain, xs.to_vec(), values)
}

/// `Δf(x) = f(T(x)) − f(x)`.
pub fn det_laplacian(
    map: &TransportMap,
    f: &impl RealFunction,
    xs: &[f64],
) -> Result<SampledFunction> {
    laplacian_power(map, f, xs, 1)
}

/// `Δᵏf = Σ_{l=0}^{k} C(k, l) (−1)^{k−l} f∘Tˡ`.
pub fn laplacian_power(
    map: &TransportMap,
    f: &impl RealFunction,
    xs: &[f64],
    k: usize,
) -> Result<SampledFunction> {
    check_points(map, xs)?;
    let mut binomial = vec![1.0f64; k + 1];
    for l in 1..=k {
        binomial[l] = binomial[l - 1] * (k + 1 - l) as f64 / l as f64;
    }
    let values = xs
        .iter()
        .map(|&x| {
            let orbit = map.orbit(x, k)?;
            orbit.iter().enumerate().try_fold(0.0, |acc, (l, &y)| {
                let sign = if (k - l).is_multiple_of(2) { 1.0 } else { -1.0 };
                Ok(acc + sign * binomial[l] * f.eval(y)?)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(map.domain, xs.to_vec(), values)
}

/// Iterates `T` from `x` until two successive iterates differ by at most
/// `tolerance`, returning the last one.
pub fn orbit_limit(map: &TransportMap, x: f64, max_iter: usize, tolerance: f64) -> Result<f64> {
    let mut current = x;
    let mut gap = f64::INFINITY;
    for _ in 0..max_iter {
        let next = apply_map(map, current)?;
        gap = (next - current).abs();
        if gap <= tolerance {
            return Ok(next);
        }
        current = next;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: gap,
    })
}

/// `u(x, t) = e^{−t} Σ_{l ≤ L(t)} (tˡ/l!) f(Tˡ(x))` at each sample point.
///
/// `L(t)` drops at most `epsilon` Poisson mass, so the error is at most
/// `epsilon · sup |f|` over the orbits. Each orbit is computed once, to the
/// largest level over all times. The steady state `f(lim Tˡ(x))` is
/// attached when every sampled orbit settles on a fixed point.
pub fn det_heat_evolve(
    map: &TransportMap,
    f: &impl RealFunction,
    xs: &[f64],
    times: &[f64],
    epsilon: f64,
) -> Result<DiffusionTrace> {
    check_points(map, xs)?;
    let times = with_initial_time(times)?;
    let weights = times
        .iter()
        .map(|&t| PoissonWeights::new(t, epsilon))
        .collect::<Result<Vec<_>>>()?;
    let max_level = weights.iter().map(PoissonWeights::level).max().unwrap_or(0);

    let mut snapshots = Array2::zeros((times.len(), xs.len()));
    for (c, &x) in xs.iter().enumerate() {
        let along_orbit = map
            .orbit(x, max_level)?
            .into_iter()
            .map(|y| f.eval(y))
            .collect::<Result<Vec<_>>>()?;
        for (r, w) in weights.iter().enumerate() {
            snapshots[[r, c]] = if w.level() == 0 {
                along_orbit[0]
            } else {
                w.weights()
                    .iter()
                    .zip(&along_orbit)
                    .map(|(a, b)| a * b)
                    .sum()
            };
        }
    }

    let steady = xs
        .iter()
        .map(|&x| orbit_limit(map, x, 10_000, 0.0).and_then(|p| f.eval(p)))
        .collect::<Result<Vec<_>>>()
        .ok()
        .map(Array1::from);
    Ok(DiffusionTrace::assemble(
        times, snapshots, steady, max_level,
    ))
}

/// `f_e + e^{−2t} f_o` for `T(x) = −x`, reading `f(−x)` from the mirrored
/// sample.
pub fn closed_form_negation(f: &SampledFunction, t: f64) -> Result<SampledFunction> {
    let d = f.domain();
    let p = f.points();
    let n = p.len();
    let symmetric_domain = (d.lo + d.hi).abs() <= 1e-12;
    let symmetric_grid = (0..n).all(|i| (p[i] + p[n - 1 - i]).abs() <= 1e-12);
    if !(symmetric_domain && symmetric_grid) {
        return Err(Error::AsymmetricGrid);
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidTimes(format!(
            "time {t} is not a finite nonnegative number"
        )));
    }
    let decay = (-2.0 * t).exp();
    let v = f.values();
    let values = (0..n)
        .map(|i| {
            let mirrored = v[n - 1 - i];
            let even = 0.5 * (v[i] + mirrored);
            let odd = 0.5 * (v[i] - mirrored);
            even + decay * odd
        })
        .collect();
    SampledFunction::new(d, p.to_vec(), values)
}

/// `n` equally spaced points covering `[lo, hi]`, symmetric when the
/// interval is.
pub fn uniform_grid(domain: Interval, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (domain.lo + domain.hi)];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| {
            // (lo·(m−i) + hi·i)/m keeps mirrored points exact negatives on symmetric domains
            (domain.lo * (m - i as f64) + domain.hi * i as f64) / m
        })
        .collect()
}
