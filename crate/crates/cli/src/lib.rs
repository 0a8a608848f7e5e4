//! Batch front-end for `kirchhoff-core`.
//!
//! A run is `kirchhoff <regime> <command> [options]`. Data goes to the file
//! named by `--out`; diagnostics go to stderr. Exit status is 0 on success,
//! 1 when a validation report contains a failed check and 2 on input or
//! regime errors.

mod args;
mod coupling;
mod dyadic;
mod graph;
mod report;
mod transport;

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use kirchhoff_core::coupling::EdgeFunction;
use kirchhoff_core::csvio;
use ndarray::Array2;

pub use args::Cli;
pub use report::ValidationReport;

/// Environment variable overriding the seed of validation test functions.
pub const SEED_VAR: &str = "KIRCHHOFF_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    Graph,
    Dyadic,
    Transport,
    Coupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Evolve,
    Steady,
    Kirchhoff,
    Validate,
}

/// Edge function used by `transport kirchhoff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum PhiKind {
    /// `Φ(x, y) = f(y) − f(x)`, giving the Laplacian `f∘T − f`.
    #[default]
    Difference,
    /// `Φ(x, y) = y − x`.
    Displacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub regime: Regime,
    pub command: Command,
    pub graph: Option<PathBuf>,
    pub coupling: Option<PathBuf>,
    pub initial: Option<PathBuf>,
    pub phi: Option<PathBuf>,
    pub alpha: Option<PathBuf>,
    pub map: Option<String>,
    pub function: Option<String>,
    pub grid: Option<String>,
    pub resolution: Option<u32>,
    pub phi_kind: PhiKind,
    pub normalize: bool,
    pub times: Vec<f64>,
    pub epsilon: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub abscissae: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults for everything except the required selectors and output.
    pub fn new(regime: Regime, command: Command, out: impl Into<PathBuf>) -> Self {
        Self {
            regime,
            command,
            graph: None,
            coupling: None,
            initial: None,
            phi: None,
            alpha: None,
            map: None,
            function: None,
            grid: None,
            resolution: None,
            phi_kind: PhiKind::Difference,
            normalize: false,
            times: vec![0.0],
            epsilon: 1e-12,
            tolerance: 1e-10,
            max_iter: 1_000_000,
            seed: kirchhoff_core::DEFAULT_SEED,
            out: out.into(),
            abscissae: None,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            anyhow::bail!("epsilon {} must lie in (0, 1)", self.epsilon);
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            anyhow::bail!("tolerance {} must be positive", self.tolerance);
        }
        if self.times.windows(2).any(|w| w[0] >= w[1])
            || self.times.iter().any(|t| !t.is_finite() || *t < 0.0)
        {
            anyhow::bail!("times must be finite, nonnegative and ascending");
        }
        Ok(())
    }

    /// Sidecar path for transport abscissae: `--abscissae`, or `<out>` with
    /// `.x` inserted before the extension.
    pub fn abscissae_path(&self) -> PathBuf {
        if let Some(p) = &self.abscissae {
            return p.clone();
        }
        let stem = self
            .out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let name = match self.out.extension() {
            Some(ext) => format!("{stem}.x.{}", ext.to_string_lossy()),
            None => format!("{stem}.x"),
        };
        self.out.with_file_name(name)
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Written,
    Report(ValidationReport),
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        match self {
            Outcome::Report(r) if !r.overall => 1,
            _ => 0,
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.check()?;
    match config.regime {
        Regime::Graph => graph::run(config),
        Regime::Dyadic => dyadic::run(config),
        Regime::Transport => transport::run(config),
        Regime::Coupling => coupling::run(config),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError(String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

/// Parses `t0,t1,...` or `linspace:a,b,n` into sorted, deduplicated,
/// nonnegative times.
pub fn parse_times(spec: &str) -> std::result::Result<Vec<f64>, ParseError> {
    let number = |s: &str| -> std::result::Result<f64, ParseError> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| ParseError(format!("`{}` is not a number", s.trim())))?;
        if !v.is_finite() || v < 0.0 {
            return Err(ParseError(format!(
                "time {v} must be finite and nonnegative"
            )));
        }
        Ok(v)
    };
    let mut times = if let Some(rest) = spec.trim().strip_prefix("linspace:") {
        let parts: Vec<&str> = rest.split(',').collect();
        let [a, b, n] = parts[..] else {
            return Err(ParseError(format!("`{spec}`: expected linspace:a,b,n")));
        };
        let (a, b) = (number(a)?, number(b)?);
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| ParseError(format!("`{}` is not a count", n.trim())))?;
        match n {
            0 => return Err(ParseError("linspace needs at least one point".into())),
            1 => vec![a],
            _ => (0..n)
                .map(|i| (a * (n - 1 - i) as f64 + b * i as f64) / (n - 1) as f64)
                .collect(),
        }
    } else {
        spec.split(',')
            .map(number)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(times)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value
        .as_ref()
        .with_context(|| format!("missing required option {flag}"))
}

fn read_with<T>(
    path: &Path,
    read: impl FnOnce(BufReader<File>) -> kirchhoff_core::Result<T>,
) -> Result<T> {
    read(open(path)?).with_context(|| format!("in {}", path.display()))
}

/// Matrix file padded with zeros to `n × n`.
fn read_edge_function(path: &Path, n: usize) -> Result<EdgeFunction> {
    let m = read_with(path, csvio::read_matrix)?;
    let (r, c) = m.dim();
    if r > n || c > n {
        anyhow::bail!(
            "{}: edge function is {r}×{c}, larger than the {n} points",
            path.display()
        );
    }
    let mut padded = Array2::zeros((n, n));
    padded.slice_mut(ndarray::s![..r, ..c]).assign(&m);
    Ok(EdgeFunction::new(padded)?)
}

fn write_output(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> kirchhoff_core::Result<()>,
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
