use anyhow::{Context, Result};
use kirchhoff_core::csvio;
use kirchhoff_core::dyadic::{
    haar_vector, kernel_apply, kernel_matrix, kirchhoff_markov, spectral_heat_solve,
    DyadicGridFunction, DyadicKernelSpec, KernelConditions,
};
use kirchhoff_core::transport::Expr;

use crate::report::ValidationReport;
use crate::{read_edge_function, read_with, required, write_output, Command, Outcome, RunConfig};

pub(crate) fn run(config: &RunConfig) -> Result<Outcome> {
    let alpha_path = required(&config.alpha, "--alpha")?;
    if config.command == Command::Validate {
        let alpha = read_with(alpha_path, csvio::read_vector)?.to_vec();
        let report = validate(config, &alpha)?;
        write_output(&config.out, |w| Ok(report.write_csv(w)?))?;
        return Ok(Outcome::Report(report));
    }
    let spec = read_with(alpha_path, csvio::read_alpha)?;
    match config.command {
        Command::Evolve => {
            let f = read_initial(config, &spec)?;
            let trace = spectral_heat_solve(&spec, &f, &config.times)?;
            write_output(&config.out, |w| csvio::write_trace(w, &trace))?;
        }
        Command::Steady => {
            let f = read_initial(config, &spec)?;
            let trace = spectral_heat_solve(&spec, &f, &[0.0])?;
            let steady = trace.steady.context("no steady state")?;
            write_output(&config.out, |w| {
                csvio::write_vector(w, steady.as_slice().unwrap())
            })?;
        }
        Command::Kirchhoff => {
            let path = required(&config.phi, "--phi")?;
            let resolution = config.resolution.unwrap_or(default_resolution(&spec));
            let phi = read_edge_function(path, 1 << resolution)?;
            let k = kernel_matrix(&spec, resolution)?;
            let psi = kirchhoff_markov(&k, &phi)?;
            write_output(&config.out, |w| {
                csvio::write_vector(w, psi.values().as_slice().unwrap())
            })?;
        }
        Command::Validate => unreachable!(),
    }
    Ok(Outcome::Written)
}

fn default_resolution(spec: &DyadicKernelSpec) -> u32 {
    spec.max_scale().max(1) as u32
}

/// `--initial` grid file, or `--fn` sampled at cell midpoints.
fn read_initial(config: &RunConfig, spec: &DyadicKernelSpec) -> Result<DyadicGridFunction> {
    if let Some(path) = &config.initial {
        return read_with(path, csvio::read_grid_function);
    }
    let expr: Expr = required(&config.function, "--initial or --fn")?.parse()?;
    let resolution = config.resolution.unwrap_or(default_resolution(spec));
    Ok(DyadicGridFunction::from_midpoints(resolution, |x| {
        expr.eval(x)
    })?)
}

/// Summability, nonnegative partial sums and unit mass of the coefficients,
/// then the Markov property of the discretized kernel (unit column and row
/// integrals) and its Haar eigen-resolution.
fn validate(config: &RunConfig, alpha: &[f64]) -> Result<ValidationReport> {
    let tol = config.tolerance;
    let c = KernelConditions::measure(alpha);
    let mut report = ValidationReport::new();
    report.push(
        "absolutely_summable",
        c.absolutely_summable(),
        c.abs_sum,
        f64::INFINITY,
    );
    report.push(
        "partial_sums_nonnegative",
        c.nonnegative(),
        c.min_partial_sum,
        -1e-12,
    );
    report.at_most("unit_mass", (c.sum - 1.0).abs(), 1e-12);
    if !report.overall {
        return Ok(report);
    }

    let spec = DyadicKernelSpec::new(alpha.to_vec())?;
    let resolution = config.resolution.unwrap_or(default_resolution(&spec));
    let k = kernel_matrix(&spec, resolution)?;
    let w = k.cell_weight();
    let m = k.matrix();
    let worst = |sums: Vec<f64>| sums.iter().map(|s| (s * w - 1.0).abs()).fold(0.0, f64::max);
    report.at_most(
        "column_integrals",
        worst(m.columns().into_iter().map(|c| c.sum()).collect()),
        tol,
    );
    report.at_most(
        "row_integrals",
        worst(m.rows().into_iter().map(|r| r.sum()).collect()),
        tol,
    );
    let min_entry = m.iter().copied().fold(f64::INFINITY, f64::min);
    report.push("kernel_nonnegative", min_entry >= -1e-12, min_entry, -1e-12);

    let mut eigen_gap: f64 = 0.0;
    for s in 0..resolution {
        let lambda: f64 = alpha.iter().skip(s as usize + 1).sum();
        for p in 0..1usize << s {
            let h = haar_vector(resolution, s, p)?;
            let kh = kernel_apply(&k, &h)?;
            let gap = kh
                .values()
                .iter()
                .zip(h.values())
                .map(|(a, b)| (a - lambda * b).abs())
                .fold(0.0, f64::max);
            eigen_gap = eigen_gap.max(gap);
        }
    }
    report.at_most("haar_eigen_resolution", eigen_gap, tol);
    Ok(report)
}
