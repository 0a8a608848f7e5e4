use std::io::Write;

use kirchhoff_core::csvio::format_float;

/// One named check: measured value against a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self {
            checks: Vec::new(),
            overall: true,
        }
    }

    /// Passes when `measured ≤ tolerance`.
    pub fn at_most(&mut self, name: &str, measured: f64, tolerance: f64) {
        self.push(name, measured <= tolerance, measured, tolerance);
    }

    /// Boolean check, recorded as measured 1 (true) or 0 (false).
    pub fn holds(&mut self, name: &str, pass: bool) {
        self.push(name, pass, if pass { 1.0 } else { 0.0 }, 0.0);
    }

    pub fn push(&mut self, name: &str, pass: bool, measured: f64, tolerance: f64) {
        self.overall &= pass;
        self.checks.push(Check {
            name: name.to_owned(),
            pass,
            measured,
            tolerance,
        });
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// CSV with header `check,pass,measured,tolerance`, closed by an
    /// `overall` row.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "check,pass,measured,tolerance")?;
        for c in &self.checks {
            writeln!(
                w,
                "{},{},{},{}",
                c.name,
                c.pass,
                format_float(c.measured),
                format_float(c.tolerance)
            )?;
        }
        writeln!(w, "overall,{},,", self.overall)
    }
}
