use anyhow::Result;
use kirchhoff_core::coupling::{
    defining_equation_residual, kirchhoff_divergence, laplacian_from_coupling, DiscreteCoupling,
    EdgeFunction, Marginal, PointFunction,
};
use kirchhoff_core::csvio;
use kirchhoff_core::markov::{
    is_regular_chain, stationary_row, uniformize, weighted_mean, MarkovMatrix,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::ValidationReport;
use crate::{read_edge_function, read_with, required, write_output, Command, Outcome, RunConfig};

pub(crate) fn run(config: &RunConfig) -> Result<Outcome> {
    let mass = read_with(
        required(&config.coupling, "--coupling")?,
        csvio::read_matrix,
    )?;
    let coupling = if config.normalize {
        DiscreteCoupling::normalized(mass)?
    } else {
        DiscreteCoupling::new(mass)?
    };
    let n = coupling.size();
    match config.command {
        Command::Kirchhoff => {
            let phi = read_edge_function(required(&config.phi, "--phi")?, n)?;
            let psi = kirchhoff_divergence(&coupling, &phi)?;
            write_output(&config.out, |w| {
                csvio::write_vector(w, psi.as_slice().unwrap())
            })?;
        }
        Command::Evolve => {
            let f = read_initial(config, n)?;
            let p = MarkovMatrix::from_coupling(&coupling)?;
            let steady = if is_regular_chain(&p) {
                let m = stationary_row(&p, config.tolerance * 1e-2, config.max_iter)?;
                Some(Array1::from_elem(n, weighted_mean(m.view(), &f)))
            } else {
                None
            };
            let trace = uniformize(&p, &f, &config.times, config.epsilon, steady)?;
            write_output(&config.out, |w| csvio::write_trace(w, &trace))?;
        }
        Command::Steady => {
            let p = MarkovMatrix::from_coupling(&coupling)?;
            let m = stationary_row(&p, config.tolerance, config.max_iter)?;
            write_output(&config.out, |w| {
                csvio::write_vector(w, m.as_slice().unwrap())
            })?;
        }
        Command::Validate => {
            let report = validate(config, &coupling)?;
            write_output(&config.out, |w| Ok(report.write_csv(w)?))?;
            return Ok(Outcome::Report(report));
        }
    }
    Ok(Outcome::Written)
}

fn read_initial(config: &RunConfig, n: usize) -> Result<PointFunction> {
    let f = read_with(required(&config.initial, "--initial")?, csvio::read_vector)?;
    if f.len() != n {
        anyhow::bail!(
            "initial condition has {} entries for a coupling on {n} points",
            f.len()
        );
    }
    Ok(PointFunction::new(f)?)
}

fn validate(config: &RunConfig, coupling: &DiscreteCoupling) -> Result<ValidationReport> {
    let n = coupling.size();
    let tol = config.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = ValidationReport::new();

    let mu = coupling.marginal(Marginal::First);
    let min_mass = mu.iter().copied().fold(f64::INFINITY, f64::min);
    report.holds("first_marginal_positive", min_mass > 0.0);

    let phi = match &config.phi {
        Some(p) => read_edge_function(p, n)?,
        None => EdgeFunction::new(Array2::from_shape_fn((n, n), |_| {
            rng.random_range(-1.0..1.0)
        }))?,
    };
    match kirchhoff_divergence(coupling, &phi) {
        Ok(psi) => {
            let residual = defining_equation_residual(coupling, &phi, &psi, 100, config.seed)?;
            report.at_most("defining_equation_residual", residual, tol);
            report.at_most(
                "sup_bound_excess",
                (psi.sup_norm() - phi.sup_norm()).max(0.0),
                1e-12,
            );
        }
        Err(e) => {
            eprintln!("divergence does not exist: {e}");
            report.holds("divergence_exists", false);
        }
    }

    let f = PointFunction::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let constant = laplacian_from_coupling(coupling, &PointFunction::constant(n, 1.0))?;
    report.at_most("laplacian_of_constant", constant.sup_norm(), 0.0);
    if coupling.is_symmetric(1e-12) {
        let lap = laplacian_from_coupling(coupling, &f)?;
        report.at_most("generator_mass_conservation", mu.dot(&**lap).abs(), 1e-12);
    }
    Ok(report)
}
