use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;

use crate::{parse_times, Command, PhiKind, Regime, RunConfig, SEED_VAR};

/// Kirchhoff-divergence diffusion on graphs, dyadic kernels, deterministic
/// transports and raw couplings.
#[derive(Debug, Parser)]
#[command(name = "kirchhoff", version)]
pub struct Cli {
    pub regime: Regime,
    pub command: Command,
    /// Graph edges `i,j,w` (symmetrized on load).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Coupling masses `i,j,value`.
    #[arg(long)]
    pub coupling: Option<PathBuf>,
    /// Initial condition: `i,value` rows (graph, coupling) or `k,value` grid cells (dyadic).
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Edge function `i,j,value` for `kirchhoff` and `validate`.
    #[arg(long)]
    pub phi: Option<PathBuf>,
    /// Kernel coefficients `j,alpha`.
    #[arg(long)]
    pub alpha: Option<PathBuf>,
    /// `negation`, `identity`, `cantor` or `table:<path>`.
    #[arg(long)]
    pub map: Option<String>,
    /// `x`, `x^2`, `x+x^2` or `table:<path>`.
    #[arg(long = "fn")]
    pub function: Option<String>,
    /// Transport abscissae: `linspace:a,b,n` or a comma list (default: 101 points over the map domain).
    #[arg(long)]
    pub grid: Option<String>,
    /// Dyadic grid level `J` (default: the kernel's finest scale, at least 1).
    #[arg(long)]
    pub resolution: Option<u32>,
    /// Edge function for `transport kirchhoff`.
    #[arg(long = "phi-kind", value_enum, default_value_t = PhiKind::Difference)]
    pub phi_kind: PhiKind,
    /// Rescale input weights to total mass 1.
    #[arg(long)]
    pub normalize: bool,
    /// `t0,t1,...` or `linspace:a,b,n`. Required for `evolve`.
    #[arg(long)]
    pub times: Option<String>,
    /// Poisson tail mass neglected by the series evaluation.
    #[arg(long, default_value_t = 1e-12)]
    pub epsilon: f64,
    /// Tolerance for iterative solvers and validation checks.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long = "max-iter", default_value_t = 1_000_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Transport abscissae file (default: `<out stem>.x.<ext>`).
    #[arg(long)]
    pub abscissae: Option<PathBuf>,
}

/// Times used by `validate` when `--times` is absent.
const VALIDATION_TIMES: [f64; 4] = [0.5, 1.0, 5.0, 20.0];

impl Cli {
    /// Resolves defaults; `seed` is the value of `KIRCHHOFF_SEED`, if set.
    pub fn into_config(self, seed: Option<&str>) -> Result<RunConfig> {
        let times = match (&self.times, self.command) {
            (Some(spec), _) => parse_times(spec)?,
            (None, Command::Evolve) => anyhow::bail!("missing required option --times"),
            (None, Command::Validate) => VALIDATION_TIMES.to_vec(),
            (None, _) => vec![0.0],
        };
        let mut config = RunConfig::new(self.regime, self.command, self.out);
        if let Some(s) = seed {
            config.seed = parse_seed(s).with_context(|| format!("{SEED_VAR}={s}"))?;
        }
        config.graph = self.graph;
        config.coupling = self.coupling;
        config.initial = self.initial;
        config.phi = self.phi;
        config.alpha = self.alpha;
        config.map = self.map;
        config.function = self.function;
        config.grid = self.grid;
        config.resolution = self.resolution;
        config.phi_kind = self.phi_kind;
        config.normalize = self.normalize;
        config.times = times;
        config.epsilon = self.epsilon;
        config.tolerance = self.tolerance;
        config.max_iter = self.max_iter;
        config.abscissae = self.abscissae;
        Ok(config)
    }
}

/// Decimal or `0x`-prefixed hexadecimal.
fn parse_seed(s: &str) -> Result<u64> {
    let s = s.trim();
    Ok(match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16)?,
        None => s.parse()?,
    })
}
