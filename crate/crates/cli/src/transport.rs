use std::path::Path;

use anyhow::{Context, Result};
use kirchhoff_core::csvio;
use kirchhoff_core::transport::{
    apply_map, closed_form_negation, det_heat_evolve, det_kirchhoff, det_laplacian,
    laplacian_power, orbit_limit, uniform_grid, InitialData, MapKind, RealFunction,
    SampledFunction, TransportMap,
};

use crate::report::ValidationReport;
use crate::{read_with, required, write_output, Command, Outcome, RunConfig};

pub(crate) fn run(config: &RunConfig) -> Result<Outcome> {
    let map = parse_map(required(&config.map, "--map")?)?;
    let xs = match &config.grid {
        Some(spec) => parse_grid(spec)?,
        None => uniform_grid(map.domain(), 101),
    };
    let outcome = match config.command {
        Command::Evolve => {
            let f = parse_function(required(&config.function, "--fn")?, &map)?;
            let trace = det_heat_evolve(&map, &f, &xs, &config.times, config.epsilon)?;
            write_output(&config.out, |w| csvio::write_trace(w, &trace))?;
            Outcome::Written
        }
        Command::Steady => {
            let f = parse_function(required(&config.function, "--fn")?, &map)?;
            let values = xs
                .iter()
                .map(|&x| {
                    let limit = orbit_limit(&map, x, config.max_iter, config.tolerance)
                        .with_context(|| format!("orbit of {x} does not settle"))?;
                    Ok(f.eval(limit)?)
                })
                .collect::<Result<Vec<_>>>()?;
            write_output(&config.out, |w| csvio::write_vector(w, &values))?;
            Outcome::Written
        }
        Command::Kirchhoff => {
            let psi = match config.phi_kind {
                crate::PhiKind::Difference => {
                    let f = parse_function(required(&config.function, "--fn")?, &map)?;
                    det_laplacian(&map, &f, &xs)?
                }
                crate::PhiKind::Displacement => det_kirchhoff(&map, |x, y| y - x, &xs)?,
            };
            write_output(&config.out, |w| csvio::write_vector(w, psi.values()))?;
            Outcome::Written
        }
        Command::Validate => {
            let f = parse_function(required(&config.function, "--fn")?, &map)?;
            let report = validate(config, &map, &f, &xs)?;
            write_output(&config.out, |w| Ok(report.write_csv(w)?))?;
            Outcome::Report(report)
        }
    };
    write_output(&config.abscissae_path(), |w| csvio::write_abscissae(w, &xs))?;
    Ok(outcome)
}

/// `negation`, `identity`, `cantor` or `table:<path>` with rows `x,Tx`.
pub(crate) fn parse_map(spec: &str) -> Result<TransportMap> {
    match spec.strip_prefix("table:") {
        Some(path) => {
            let (xs, ys) = read_with(Path::new(path), csvio::read_table)?;
            Ok(TransportMap::tabulated(xs, ys).with_context(|| format!("in {path}"))?)
        }
        None => Ok(spec.parse()?),
    }
}

/// A named expression or `table:<path>` with rows `x,value`, interpolated
/// linearly on the map's domain.
pub(crate) fn parse_function(spec: &str, map: &TransportMap) -> Result<InitialData> {
    match spec.strip_prefix("table:") {
        Some(path) => {
            let (xs, ys) = read_with(Path::new(path), csvio::read_table)?;
            let table =
                SampledFunction::new(map.domain(), xs, ys).with_context(|| format!("in {path}"))?;
            Ok(InitialData::Table(table))
        }
        None => Ok(InitialData::Expr(spec.parse()?)),
    }
}

/// `linspace:a,b,n` or a comma list of strictly increasing abscissae.
pub(crate) fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let number = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .with_context(|| format!("`{}` is not a number", s.trim()))?;
        anyhow::ensure!(v.is_finite(), "abscissa {v} is not finite");
        Ok(v)
    };
    let xs = if let Some(rest) = spec.trim().strip_prefix("linspace:") {
        let parts: Vec<&str> = rest.split(',').collect();
        let [a, b, n] = parts[..] else {
            anyhow::bail!("`{spec}`: expected linspace:a,b,n");
        };
        let (a, b) = (number(a)?, number(b)?);
        let n: usize = n
            .trim()
            .parse()
            .with_context(|| format!("`{}` is not a count", n.trim()))?;
        anyhow::ensure!(n >= 1, "grid needs at least one point");
        if n == 1 {
            vec![a]
        } else {
            (0..n)
                .map(|i| (a * (n - 1 - i) as f64 + b * i as f64) / (n - 1) as f64)
                .collect()
        }
    } else {
        spec.split(',').map(number).collect::<Result<Vec<_>>>()?
    };
    anyhow::ensure!(
        xs.windows(2).all(|w| w[0] < w[1]),
        "grid points must be strictly increasing"
    );
    Ok(xs)
}

fn validate(
    config: &RunConfig,
    map: &TransportMap,
    f: &InitialData,
    xs: &[f64],
) -> Result<ValidationReport> {
    let tol = config.tolerance;
    let mut report = ValidationReport::new();
    let trace = det_heat_evolve(map, f, xs, &config.times, config.epsilon)?;
    let initial = xs
        .iter()
        .map(|&x| f.eval(x))
        .collect::<kirchhoff_core::Result<Vec<_>>>()?;
    let start_gap = trace
        .snapshot(0)
        .iter()
        .zip(&initial)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report.at_most("initial_time_reproduces_f", start_gap, 0.0);

    // every snapshot is a Poisson mixture of f along the orbits
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        for y in map.orbit(x, trace.truncation_level)? {
            let v = f.eval(y)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let norm = lo.abs().max(hi.abs());
    let excess = trace
        .snapshots
        .iter()
        .fold(0.0f64, |e, &u| e.max(lo - u).max(u - hi));
    report.at_most(
        "maximum_principle_excess",
        excess,
        config.epsilon * norm + f64::EPSILON * norm,
    );

    // Δᵏf(x) = Δᵏ⁻¹f(Tx) − Δᵏ⁻¹f(x)
    let mut recursion_gap: f64 = 0.0;
    for &x in xs.iter().step_by((xs.len() / 16).max(1)) {
        let tx = apply_map(map, x)?;
        for k in 1..=8 {
            let lhs = laplacian_power(map, f, &[x], k)?.values()[0];
            let rhs = laplacian_power(map, f, &[tx], k - 1)?.values()[0]
                - laplacian_power(map, f, &[x], k - 1)?.values()[0];
            recursion_gap = recursion_gap.max((lhs - rhs).abs());
        }
    }
    report.at_most("laplacian_power_recursion", recursion_gap, tol);

    let symmetric = (0..xs.len()).all(|i| (xs[i] + xs[xs.len() - 1 - i]).abs() <= 1e-12);
    if matches!(map.kind(), MapKind::Negation) && symmetric {
        let sampled = SampledFunction::new(map.domain(), xs.to_vec(), initial.clone())?;
        let mut gap: f64 = 0.0;
        for (i, &t) in trace.times.iter().enumerate() {
            let closed = closed_form_negation(&sampled, t)?;
            let row = trace.snapshot(i);
            gap = closed
                .values()
                .iter()
                .zip(row.iter())
                .fold(gap, |g, (a, b)| g.max((a - b).abs()));
        }
        report.at_most("negation_closed_form", gap, tol);
        let total0: f64 = initial.iter().sum();
        let drift = trace
            .snapshots
            .rows()
            .into_iter()
            .map(|r| (r.sum() - total0).abs())
            .fold(0.0, f64::max);
        report.at_most("negation_mass_conservation", drift, tol);
    }
    Ok(report)
}
