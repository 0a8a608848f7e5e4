//! Independent oracles and seeded instance generators shared by the
//! integration tests. Nothing here calls the code paths it is used to check.
#![allow(dead_code)]

use kirchhoff_core::coupling::{DiscreteCoupling, EdgeFunction, PointFunction};
use kirchhoff_core::dyadic::DyadicKernelSpec;
use kirchhoff_core::graph::WeightedGraph;
use kirchhoff_core::transport::{det_laplacian, uniform_grid, Interval, TransportMap};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Coupling with a random sparsity pattern; every row keeps some mass.
pub fn random_coupling(rng: &mut impl Rng, n: usize) -> DiscreteCoupling {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(0.7) {
                m[[i, j]] = rng.random_range(0.0..1.0);
            }
        }
        let j = rng.random_range(0..n);
        m[[i, j]] += 0.1;
    }
    DiscreteCoupling::normalized(m).unwrap()
}

pub fn random_symmetric_coupling(rng: &mut impl Rng, n: usize) -> DiscreteCoupling {
    let c = random_coupling(rng, n).into_inner();
    DiscreteCoupling::normalized(&c + &c.t()).unwrap()
}

pub fn random_edge_function(rng: &mut impl Rng, n: usize, scale: f64) -> EdgeFunction {
    EdgeFunction::new(Array2::from_shape_fn((n, n), |_| {
        rng.random_range(-scale..scale)
    }))
    .unwrap()
}

pub fn random_point_function(rng: &mut impl Rng, n: usize, scale: f64) -> PointFunction {
    PointFunction::new((0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

/// Connected weighted graph: a random spanning path plus random extra edges.
pub fn random_graph(rng: &mut impl Rng, n: usize) -> WeightedGraph {
    let mut w = Array2::zeros((n, n));
    for i in 1..n {
        let v = rng.random_range(0.05..1.0);
        w[[i - 1, i]] = v;
        w[[i, i - 1]] = v;
    }
    for i in 0..n {
        for j in 0..i {
            if rng.random_bool(0.5) {
                let v = rng.random_range(0.0..1.0);
                w[[i, j]] = v;
                w[[j, i]] = v;
            }
        }
    }
    WeightedGraph::new(w, true).unwrap()
}

/// Graph with every off-diagonal weight positive.
pub fn random_complete_graph(rng: &mut impl Rng, n: usize) -> WeightedGraph {
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            let v = rng.random_range(0.01..1.0);
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
    }
    WeightedGraph::new(w, true).unwrap()
}

/// Left power iteration `m ← m P` from the uniform row, run a fixed number
/// of steps on the lazy chain `(P + I)/2`, which has the same stationary row.
pub fn power_iteration_oracle(p: &Array2<f64>, steps: usize) -> Vec<f64> {
    let n = p.nrows();
    let mut m = vec![1.0 / n as f64; n];
    for _ in 0..steps {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += m[i] * 0.5 * (p[[i, j]] + if i == j { 1.0 } else { 0.0 });
            }
        }
        m = next;
    }
    m
}

/// `e^{tΔ} f` from the dense eigendecomposition of the symmetrized operator
/// `D^{-1/2} W D^{-1/2}`: with `ψ_i = D^{-1/2} v_i` orthonormal in `L²(μ)`,
/// `u = Σ e^{t(θ_i − 1)} ⟨f, ψ_i⟩_μ ψ_i`.
pub fn eigen_heat_oracle(w: &Array2<f64>, f: &[f64], t: f64) -> Vec<f64> {
    let n = w.nrows();
    let mu: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[[i, j]]).sum()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| w[[i, j]] / (mu[i] * mu[j]).sqrt());
    let eig = SymmetricEigen::new(s);
    let mut u = vec![0.0; n];
    for k in 0..n {
        let v = eig.eigenvectors.column(k);
        let psi: Vec<f64> = (0..n).map(|i| v[i] / mu[i].sqrt()).collect();
        let coeff: f64 = (0..n).map(|i| f[i] * psi[i] * mu[i]).sum();
        let decay = (t * (eig.eigenvalues[k] - 1.0)).exp();
        for i in 0..n {
            u[i] += decay * coeff * psi[i];
        }
    }
    u
}

/// Smallest dyadic interval containing both points, by comparing
/// `⌊2^j x⌋` and `⌊2^j y⌋` level by level.
pub fn delta_oracle(x: f64, y: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    let mut j = 0;
    while (x * 2f64.powi(j)).floor() == (y * 2f64.powi(j)).floor() {
        j += 1;
    }
    2f64.powi(-(j - 1))
}

/// Kernel `Σ_j α_j 2^j 1{δ ≤ 2^{−j}}` evaluated on cell midpoints with
/// [`delta_oracle`].
pub fn kernel_oracle(alpha: &[f64], resolution: u32) -> DMatrix<f64> {
    let n = 1usize << resolution;
    let h = 0.5f64.powi(resolution as i32);
    DMatrix::from_fn(n, n, |a, b| {
        let d = delta_oracle((a as f64 + 0.5) * h, (b as f64 + 0.5) * h);
        alpha
            .iter()
            .enumerate()
            .filter(|(j, _)| d <= 0.5f64.powi(*j as i32))
            .map(|(j, a)| a * 2f64.powi(j as i32))
            .sum()
    })
}

/// `e^{−t} Σ_m (tᵐ/m!) Kᵐ f` with the integral operator `K·2^{−J}`,
/// summed until the terms are below `1e-18` past the Poisson mode.
pub fn kernel_series_oracle(k: &DMatrix<f64>, f: &[f64], t: f64) -> Vec<f64> {
    let n = f.len();
    let op = k * (1.0 / n as f64);
    let mut term = DVector::from_column_slice(f);
    let mut weight = (-t).exp();
    let mut acc = &term * weight;
    let mut m = 0usize;
    loop {
        m += 1;
        term = &op * term;
        weight *= t / m as f64;
        acc += &term * weight;
        if m as f64 > t && weight < 1e-18 {
            break;
        }
    }
    acc.iter().copied().collect()
}

/// Random valid coefficients: draw nonnegative kernel levels `S_0..S_J`,
/// set `α_0 = S_0`, `α_j = (S_j − S_{j−1}) 2^{−j}`, and rescale to `Σα = 1`.
/// Coefficients may be negative; the kernel stays nonnegative by construction.
pub fn random_spec(rng: &mut impl Rng, max_scale: usize) -> DyadicKernelSpec {
    let levels: Vec<f64> = (0..=max_scale)
        .map(|_| rng.random_range(0.0..4.0))
        .collect();
    let mut alpha: Vec<f64> = (0..=max_scale)
        .map(|j| {
            let prev = if j == 0 { 0.0 } else { levels[j - 1] };
            (levels[j] - prev) * 0.5f64.powi(j as i32)
        })
        .collect();
    let total: f64 = alpha.iter().sum();
    if total <= 1e-3 {
        return random_spec(rng, max_scale);
    }
    alpha.iter_mut().for_each(|a| *a /= total);
    let residual: f64 = 1.0 - alpha.iter().sum::<f64>();
    alpha[0] += residual;
    DyadicKernelSpec::new(alpha).unwrap()
}

/// Nonnegative coefficients with `α_0 ≥ 1/2`, so every Haar eigenvalue is at
/// most 1/2 and the spectral solution reaches its mean quickly.
pub fn random_damped_spec(rng: &mut impl Rng, max_scale: usize) -> DyadicKernelSpec {
    let head = rng.random_range(0.5..0.9);
    let rest: Vec<f64> = (0..max_scale).map(|_| rng.random_range(0.0..1.0)).collect();
    let rest_total: f64 = rest.iter().sum();
    let mut alpha = vec![head];
    alpha.extend(rest.iter().map(|r| r / rest_total * (1.0 - head)));
    let residual: f64 = 1.0 - alpha.iter().sum::<f64>();
    alpha[0] += residual;
    DyadicKernelSpec::new(alpha).unwrap()
}

/// Cantor function from self-similarity on exact rationals:
/// `C(x) = C(3x)/2` on `[0, 1/3]`, `1/2` on the middle third, and
/// `1/2 + C(3x − 2)/2` on `[2/3, 1]`, unrolled `depth` times.
pub fn cantor_oracle(num: u128, den: u128, depth: u32) -> f64 {
    if depth == 0 {
        return 0.0;
    }
    if 3 * num < den {
        0.5 * cantor_oracle(3 * num, den, depth - 1)
    } else if 3 * num <= 2 * den {
        0.5
    } else {
        0.5 + 0.5 * cantor_oracle(3 * num - 2 * den, den, depth - 1)
    }
}

pub fn ndarray_to_vec(a: &Array1<f64>) -> Vec<f64> {
    a.to_vec()
}

/// Random smooth-ish test function `a x + b x² + c cos(d x)`.
pub fn random_fn(r: &mut impl Rng) -> impl Fn(f64) -> f64 + Clone {
    let (a, b, c, d) = (
        r.random_range(-2.0..2.0),
        r.random_range(-2.0..2.0),
        r.random_range(-1.0..1.0),
        r.random_range(0.0..8.0),
    );
    move |x: f64| a * x + b * x * x + c * (d * x).cos()
}

pub fn random_tabulated_map(r: &mut impl Rng) -> TransportMap {
    let n = r.random_range(2..12);
    let xs = uniform_grid(Interval::new(0.0, 1.0).unwrap(), n);
    let ys = (0..n).map(|_| r.random_range(0.0..=1.0)).collect();
    TransportMap::tabulated(xs, ys).unwrap()
}

/// `Δᵏ f` by recursion on `Δ g = g∘T − g`, one [`det_laplacian`] per level.
pub fn iterated_laplacian<'a>(
    map: &'a TransportMap,
    f: Box<dyn Fn(f64) -> f64 + 'a>,
    k: usize,
) -> Box<dyn Fn(f64) -> f64 + 'a> {
    if k == 0 {
        return f;
    }
    let inner = iterated_laplacian(map, f, k - 1);
    Box::new(move |x| det_laplacian(map, &inner, &[x]).unwrap().values()[0])
}
