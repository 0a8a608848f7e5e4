use anyhow::Result;
use kirchhoff_core::coupling::{
    defining_equation_residual, kirchhoff_divergence, EdgeFunction, PointFunction,
};
use kirchhoff_core::csvio;
use kirchhoff_core::graph::{
    graph_kirchhoff, heat_evolve, is_regular_chain, steady_state, WeightedGraph,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::ValidationReport;
use crate::{read_edge_function, read_with, required, write_output, Command, Outcome, RunConfig};

pub(crate) fn run(config: &RunConfig) -> Result<Outcome> {
    let path = required(&config.graph, "--graph")?;
    let g = read_with(path, |r| csvio::read_graph(r, config.normalize))?;
    let n = g.size();
    match config.command {
        Command::Evolve => {
            let f = read_initial(config, n)?;
            let trace = heat_evolve(&g, &f, &config.times, config.epsilon)?;
            write_output(&config.out, |w| csvio::write_trace(w, &trace))?;
        }
        Command::Steady => {
            let m = steady_state(&g, config.tolerance, config.max_iter)?;
            write_output(&config.out, |w| {
                csvio::write_vector(w, m.as_slice().unwrap())
            })?;
        }
        Command::Kirchhoff => {
            let phi = read_edge_function(required(&config.phi, "--phi")?, n)?;
            let psi = graph_kirchhoff(&g, &phi)?;
            write_output(&config.out, |w| {
                csvio::write_vector(w, psi.as_slice().unwrap())
            })?;
        }
        Command::Validate => {
            let report = validate(config, &g)?;
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
            "initial condition has {} entries for a graph on {n} vertices",
            f.len()
        );
    }
    Ok(PointFunction::new(f)?)
}

fn validate(config: &RunConfig, g: &WeightedGraph) -> Result<ValidationReport> {
    let n = g.size();
    let tol = config.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = ValidationReport::new();

    report.holds("connected", g.is_connected());
    let regular = is_regular_chain(g.transition_matrix());
    report.holds("regular_chain", regular);
    if regular {
        let m = steady_state(g, tol * 1e-2, config.max_iter)?;
        let gap = m
            .iter()
            .zip(g.vertex_measure().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.at_most("steady_state_equals_vertex_measure", gap, tol);
    }

    let phi = match &config.phi {
        Some(p) => read_edge_function(p, n)?,
        None => EdgeFunction::new(Array2::from_shape_fn((n, n), |_| {
            rng.random_range(-1.0..1.0)
        }))?,
    };
    let coupling = g.coupling();
    let psi = kirchhoff_divergence(&coupling, &phi)?;
    report.at_most(
        "defining_equation_residual",
        defining_equation_residual(&coupling, &phi, &psi, 100, config.seed)?,
        tol,
    );
    report.at_most(
        "sup_bound_excess",
        (psi.sup_norm() - phi.sup_norm()).max(0.0),
        1e-12,
    );

    let f = match &config.initial {
        Some(_) => read_initial(config, n)?,
        None => PointFunction::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())?,
    };
    let trace = heat_evolve(g, &f, &config.times, config.epsilon)?;
    let mu = g.vertex_measure();
    let mass0: f64 = mu.iter().zip(f.iter()).map(|(a, b)| a * b).sum();
    let (lo, hi) = f
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let mut drift: f64 = 0.0;
    let mut excess: f64 = 0.0;
    for row in trace.snapshots.rows() {
        drift = drift.max((row.dot(&**mu) - mass0).abs());
        excess = row.iter().fold(excess, |e, &u| e.max(lo - u).max(u - hi));
    }
    report.at_most("mass_conservation_drift", drift, tol);
    report.at_most(
        "maximum_principle_excess",
        excess,
        config.epsilon * f.sup_norm() + tol * 1e-3,
    );
    Ok(report)
}
