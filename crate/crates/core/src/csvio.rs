//! Plain-text formats.
//!
//! All inputs are comma-separated, may start with one header line, and may
//! contain `#` comment lines. Indices are 0-based.
//!
//! | Format | Rows |
//! |--------|------|
//! | matrix | `i,j,value` (omitted pairs are zero) |
//! | graph | `i,j,w` (symmetrized; diagonal rejected) |
//! | vector | `i,value` (every index once) |
//! | alpha | `j,alpha` (every scale once) |
//! | table | `x,value` (strictly increasing `x`) |
//! | trace | header `time,index,value` |
//!
//! Floats are written as `{:.16e}`: 17 significant digits, enough to
//! round-trip any `f64`.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use crate::dyadic::{DyadicGridFunction, DyadicKernelSpec};
use crate::graph::WeightedGraph;
use crate::{DiffusionTrace, Error, Result};

/// Formats a float with 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

struct Row {
    line: u64,
    fields: Vec<String>,
}

impl Row {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn expect_len(&self, n: usize) -> Result<()> {
        if self.fields.len() != n {
            return Err(self.err(format!("expected {n} fields, found {}", self.fields.len())));
        }
        Ok(())
    }

    fn index(&self, k: usize) -> Result<usize> {
        self.fields[k].parse().map_err(|_| {
            self.err(format!(
                "`{}` is not a nonnegative integer index",
                self.fields[k]
            ))
        })
    }

    fn float(&self, k: usize) -> Result<f64> {
        let v: f64 = self.fields[k]
            .parse()
            .map_err(|_| self.err(format!("`{}` is not a number", self.fields[k])))?;
        if !v.is_finite() {
            return Err(self.err(format!("`{}` is not finite", self.fields[k])));
        }
        Ok(v)
    }
}

fn read_rows(reader: impl Read) -> Result<Vec<Row>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut first = true;
    for record in csv.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let fields: Vec<String> = record.iter().map(str::to_owned).collect();
        // a non-numeric first field on the first row is a header
        let is_header = first && fields[0].parse::<f64>().is_err();
        first = false;
        if !is_header {
            rows.push(Row { line, fields });
        }
    }
    Ok(rows)
}

/// Dense square matrix from `i,j,value` triplets; the size is one past the
/// largest index.
pub fn read_matrix(reader: impl Read) -> Result<Array2<f64>> {
    let rows = read_rows(reader)?;
    let mut entries = Vec::with_capacity(rows.len());
    let mut n = 0;
    for row in &rows {
        row.expect_len(3)?;
        let (i, j, v) = (row.index(0)?, row.index(1)?, row.float(2)?);
        n = n.max(i + 1).max(j + 1);
        entries.push((row, i, j, v));
    }
    let mut m = Array2::zeros((n, n));
    let mut seen = Array2::from_elem((n, n), false);
    for (row, i, j, v) in entries {
        if seen[[i, j]] {
            return Err(row.err(format!("duplicate entry ({i}, {j})")));
        }
        seen[[i, j]] = true;
        m[[i, j]] = v;
    }
    Ok(m)
}

/// Undirected edge list `i,j,w`. Each edge sets both orientations; an edge
/// listed both ways must carry the same weight.
pub fn read_graph(reader: impl Read, normalize: bool) -> Result<WeightedGraph> {
    let rows = read_rows(reader)?;
    let mut edges = Vec::with_capacity(rows.len());
    let mut n = 0;
    for row in &rows {
        row.expect_len(3)?;
        let (i, j, w) = (row.index(0)?, row.index(1)?, row.float(2)?);
        if i == j {
            return Err(row.err(format!("diagonal entry ({i}, {i}) not allowed")));
        }
        if w < 0.0 {
            return Err(row.err(format!("negative weight {w}")));
        }
        n = n.max(i + 1).max(j + 1);
        edges.push((row, i.min(j), i.max(j), w));
    }
    let mut w = Array2::<f64>::zeros((n, n));
    let mut seen = Array2::from_elem((n, n), false);
    for (row, i, j, v) in edges {
        if seen[[i, j]] && w[[i, j]] != v {
            return Err(row.err(format!(
                "edge ({i}, {j}) given twice with different weights"
            )));
        }
        seen[[i, j]] = true;
        w[[i, j]] = v;
        w[[j, i]] = v;
    }
    WeightedGraph::new(w, normalize)
}

/// Dense vector from `i,value`, every index `0..n` exactly once.
pub fn read_vector(reader: impl Read) -> Result<Array1<f64>> {
    let rows = read_rows(reader)?;
    let mut slots: Vec<Option<f64>> = vec![None; rows.len()];
    for row in &rows {
        row.expect_len(2)?;
        let i = row.index(0)?;
        let v = row.float(1)?;
        let slot = slots
            .get_mut(i)
            .ok_or_else(|| row.err(format!("index {i} out of range for {} rows", rows.len())))?;
        if slot.is_some() {
            return Err(row.err(format!("duplicate index {i}")));
        }
        *slot = Some(v);
    }
    // n rows, no duplicates, all indices < n: every slot is filled
    Ok(slots.into_iter().map(|v| v.unwrap_or_default()).collect())
}

/// Kernel coefficients from `j,alpha` rows.
pub fn read_alpha(reader: impl Read) -> Result<DyadicKernelSpec> {
    DyadicKernelSpec::new(read_vector(reader)?.to_vec())
}

/// Grid function from `k,value` rows; the row count must be `2^J`.
pub fn read_grid_function(reader: impl Read) -> Result<DyadicGridFunction> {
    DyadicGridFunction::from_values(read_vector(reader)?.to_vec())
}

/// `x,value` pairs with strictly increasing `x`.
pub fn read_table(reader: impl Read) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = read_rows(reader)?;
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for row in &rows {
        row.expect_len(2)?;
        let x = row.float(0)?;
        if let Some(&prev) = xs.last() {
            if x <= prev {
                return Err(row.err(format!("abscissa {x} does not increase past {prev}")));
            }
        }
        xs.push(x);
        ys.push(row.float(1)?);
    }
    Ok((xs, ys))
}

/// `index,value` with a header line.
pub fn write_vector(mut writer: impl Write, values: &[f64]) -> Result<()> {
    writeln!(writer, "index,value")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(writer, "{i},{}", format_float(*v))?;
    }
    Ok(())
}

/// `index,x` sidecar mapping trace indices to abscissae.
pub fn write_abscissae(mut writer: impl Write, xs: &[f64]) -> Result<()> {
    writeln!(writer, "index,x")?;
    for (i, x) in xs.iter().enumerate() {
        writeln!(writer, "{i},{}", format_float(*x))?;
    }
    Ok(())
}

/// `time,index,value`, one row per time and point.
pub fn write_trace(mut writer: impl Write, trace: &DiffusionTrace) -> Result<()> {
    writeln!(writer, "time,index,value")?;
    for (t, row) in trace.times.iter().zip(trace.snapshots.rows()) {
        let t = format_float(*t);
        for (i, v) in row.iter().enumerate() {
            writeln!(writer, "{t},{i},{}", format_float(*v))?;
        }
    }
    Ok(())
}

/// Reads a trace back as `(times, snapshots)`. Rows must be grouped by time
/// with indices `0..n` in order.
pub fn read_trace(reader: impl Read) -> Result<(Vec<f64>, Array2<f64>)> {
    let rows = read_rows(reader)?;
    let mut times: Vec<f64> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for row in &rows {
        row.expect_len(3)?;
        let (t, i, v) = (row.float(0)?, row.index(1)?, row.float(2)?);
        if times.last() != Some(&t) {
            if times.last().is_some_and(|&prev| t <= prev) {
                return Err(row.err(format!("time {t} out of order")));
            }
            times.push(t);
            values.push(Vec::new());
        }
        let current = values.last_mut().expect("a time was pushed");
        if i != current.len() {
            return Err(row.err(format!("expected index {}, found {i}", current.len())));
        }
        current.push(v);
    }
    let width = values.first().map_or(0, Vec::len);
    if values.iter().any(|r| r.len() != width) {
        return Err(Error::Parse {
            line: 0,
            message: "snapshots have different lengths".into(),
        });
    }
    let flat: Vec<f64> = values.into_iter().flatten().collect();
    let snapshots =
        Array2::from_shape_vec((times.len(), width), flat).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    Ok((times, snapshots))
}
