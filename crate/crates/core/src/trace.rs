use ndarray::{Array1, Array2, ArrayView1};

/// Time-stamped snapshots of a diffusion `u(·, t)`.
///
/// `snapshots` has one row per entry of `times`; `times[0] = 0` and row 0 is
/// the initial datum, copied verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionTrace {
    pub times: Vec<f64>,
    pub snapshots: Array2<f64>,
    /// Limit of `u(·, t)` as `t → ∞`, when the regime determines one.
    pub steady: Option<Array1<f64>>,
    /// `‖u(·, t_last) − steady‖_∞` when `steady` is known, otherwise the
    /// sup-norm change between the last two snapshots.
    pub residual: f64,
    /// Largest Poisson truncation level used; 0 for exact spectral solvers.
    pub truncation_level: usize,
}

impl DiffusionTrace {
    pub(crate) fn assemble(
        times: Vec<f64>,
        snapshots: Array2<f64>,
        steady: Option<Array1<f64>>,
        truncation_level: usize,
    ) -> Self {
        let last = snapshots.nrows() - 1;
        let residual = match &steady {
            Some(s) => sup_distance(snapshots.row(last), s.view()),
            None if last > 0 => sup_distance(snapshots.row(last), snapshots.row(last - 1)),
            None => 0.0,
        };
        Self {
            times,
            snapshots,
            steady,
            residual,
            truncation_level,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of spatial points per snapshot.
    pub fn width(&self) -> usize {
        self.snapshots.ncols()
    }

    pub fn snapshot(&self, i: usize) -> ArrayView1<'_, f64> {
        self.snapshots.row(i)
    }

    pub fn last(&self) -> ArrayView1<'_, f64> {
        self.snapshots.row(self.snapshots.nrows() - 1)
    }

    /// Snapshot recorded at exactly time `t`, if any.
    pub fn at_time(&self, t: f64) -> Option<ArrayView1<'_, f64>> {
        self.times
            .iter()
            .position(|&s| s == t)
            .map(|i| self.snapshot(i))
    }
}

pub(crate) fn sup_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
