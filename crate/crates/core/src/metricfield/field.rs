use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::expr::Expr;
use crate::error::{MetricError, ParseError};

/// Base point `(x1, y1, x2, y2)` with `z1 = x1 + i y1`, `z2 = x2 + i y2`.
pub type BasePoint = [f64; 4];

pub const AXIS_NAMES: [&str; 4] = ["x1", "y1", "x2", "y2"];

/// Which directions the metric is required to be flat in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Bundle over a product of curves: flat along both factors.
    Product,
    /// Bundle over a fibred surface: flat along the `z1` direction only.
    Fibration,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Product => "product",
            Mode::Fibration => "fibration",
        }
    }
}

/// Coordinate box on which a metric is sampled.
///
/// Periodicity is set per coordinate pair: `periodic[0]` wraps `(x1, y1)`,
/// `periodic[1]` wraps `(x2, y2)`; the period of a wrapped axis is the width
/// of its range. `margin` is how far outside a non-periodic range the metric
/// may still be evaluated by derivative stencils.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Patch {
    ranges: [(f64, f64); 4],
    periodic: [bool; 2],
    margin: f64,
}

impl Patch {
    pub fn new(ranges: [(f64, f64); 4]) -> Result<Self, MetricError> {
        for (axis, (lo, hi)) in ranges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(MetricError::Patch(format!(
                    "range for {} is empty or not finite: [{lo}, {hi}]",
                    AXIS_NAMES[axis]
                )));
            }
        }
        Ok(Patch {
            ranges,
            periodic: [false, false],
            margin: 0.0,
        })
    }

    pub fn unit_cube() -> Self {
        Self::new([(0.0, 1.0); 4]).expect("unit cube is valid")
    }

    pub fn with_periodic(mut self, periodic: [bool; 2]) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Result<Self, MetricError> {
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(MetricError::Patch(format!("margin {margin} must be >= 0")));
        }
        self.margin = margin;
        Ok(self)
    }

    pub fn range(&self, axis: usize) -> (f64, f64) {
        self.ranges[axis]
    }

    pub fn width(&self, axis: usize) -> f64 {
        let (lo, hi) = self.ranges[axis];
        hi - lo
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis / 2]
    }

    pub fn periodic_pairs(&self) -> [bool; 2] {
        self.periodic
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn volume(&self) -> f64 {
        (0..4).map(|a| self.width(a)).product()
    }

    /// Maps a coordinate into the fundamental domain of a periodic axis.
    pub fn wrap(&self, axis: usize, x: f64) -> f64 {
        if !self.is_periodic(axis) {
            return x;
        }
        let (lo, _) = self.ranges[axis];
        let period = self.width(axis);
        lo + (x - lo).rem_euclid(period)
    }

    /// Whether `x ± reach` stays in the evaluable part of a non-periodic axis.
    pub fn admits(&self, axis: usize, x: f64, reach: f64) -> bool {
        if self.is_periodic(axis) {
            return true;
        }
        let (lo, hi) = self.ranges[axis];
        let slack = 1e-12 * self.width(axis);
        x - reach >= lo - self.margin - slack && x + reach <= hi + self.margin + slack
    }

    pub fn contains(&self, p: &BasePoint) -> bool {
        (0..4).all(|a| self.admits(a, p[a], 0.0))
    }
}

/// Hermitian metric on a trivialized rank `r` bundle, one expression per
/// entry `h_ij = h(s_i, s_j)`.
#[derive(Debug, Clone)]
pub struct HermitianMetricField {
    rank: usize,
    entries: Vec<Expr>,
    mode: Mode,
}

/// A metric matrix at one point.
#[derive(Debug, Clone)]
pub struct EvaluatedMetric {
    /// Hermitian part `(M + M^*) / 2`.
    pub matrix: DMatrix<Complex64>,
    /// `max |M - M^*|` before symmetrization.
    pub hermitian_deviation: f64,
}

impl HermitianMetricField {
    /// Row-major `rank × rank` entries.
    pub fn new(rank: usize, entries: Vec<Expr>, mode: Mode) -> Result<Self, MetricError> {
        if rank == 0 {
            return Err(MetricError::ZeroRank);
        }
        if entries.len() != rank * rank {
            return Err(MetricError::Shape {
                rank,
                found: entries.len(),
            });
        }
        Ok(HermitianMetricField {
            rank,
            entries,
            mode,
        })
    }

    /// Builds a metric from the diagonal and upper triangle; each missing
    /// lower entry `h_ji` becomes `conj(h_ij)` and a missing upper entry is 0.
    /// Diagonal entries are required.
    pub fn from_upper(entries: Vec<Vec<Option<Expr>>>, mode: Mode) -> Result<Self, MetricError> {
        let rank = entries.len();
        let mut out = Vec::with_capacity(rank * rank);
        for i in 0..rank {
            if entries[i].len() != rank {
                return Err(MetricError::Shape {
                    rank,
                    found: entries.iter().map(Vec::len).sum(),
                });
            }
            for j in 0..rank {
                let e = match &entries[i][j] {
                    Some(e) => e.clone(),
                    None if i == j => return Err(MetricError::MissingDiagonal(i)),
                    None if i > j => match &entries[j][i] {
                        Some(upper) => upper.clone().conj(),
                        None => Expr::constant(0.0),
                    },
                    None => Expr::constant(0.0),
                };
                out.push(e);
            }
        }
        Self::new(rank, out, mode)
    }

    /// Parses upper-triangle entries given as `((i, j), text)` with 0-based
    /// indices.
    pub fn parse_upper(
        rank: usize,
        texts: &[((usize, usize), &str)],
        mode: Mode,
    ) -> Result<Self, ParseError> {
        let mut grid: Vec<Vec<Option<Expr>>> = vec![vec![None; rank]; rank];
        for ((i, j), text) in texts {
            if *i >= rank || *j >= rank {
                return Err(ParseError {
                    message: MetricError::Component(*i, *j, rank).to_string(),
                    column: 1,
                });
            }
            grid[*i][*j] = Some(Expr::parse(text)?);
        }
        Self::from_upper(grid, mode).map_err(|e| ParseError {
            message: e.to_string(),
            column: 1,
        })
    }

    pub fn identity(rank: usize, mode: Mode) -> Self {
        let entries = (0..rank * rank)
            .map(|k| Expr::constant(if k / rank == k % rank { 1.0 } else { 0.0 }))
            .collect();
        Self::new(rank, entries, mode).expect("identity shape")
    }

    /// Block-diagonal metric `diag(h_1, ..., h_r)`.
    pub fn diagonal(diag: Vec<Expr>, mode: Mode) -> Result<Self, MetricError> {
        let rank = diag.len();
        let mut entries = vec![Expr::constant(0.0); rank * rank];
        for (i, e) in diag.into_iter().enumerate() {
            entries[i * rank + i] = e;
        }
        Self::new(rank, entries, mode)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.rank + j]
    }

    /// Metric with entries `conj(h_ij)` evaluated at conjugated coordinates
    /// `(x1, -y1, x2, -y2)`.
    pub fn conjugate_reflected(&self) -> Self {
        let entries = self.entries.iter().map(|e| reflect_y(e).conj()).collect();
        HermitianMetricField {
            rank: self.rank,
            entries,
            mode: self.mode,
        }
    }

    /// Relabels the frame: new `h'_ij = h_{σ(i) σ(j)}`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, MetricError> {
        let r = self.rank;
        let mut seen = vec![false; r];
        if perm.len() != r
            || perm
                .iter()
                .any(|&p| p >= r || std::mem::replace(&mut seen[p], true))
        {
            return Err(MetricError::Shape {
                rank: r,
                found: perm.len(),
            });
        }
        let entries = (0..r * r)
            .map(|k| self.entry(perm[k / r], perm[k % r]).clone())
            .collect();
        Self::new(r, entries, self.mode)
    }

    /// Entries at a point, row-major, without symmetrization.
    pub fn evaluate_raw(&self, p: &BasePoint) -> Result<Vec<Complex64>, MetricError> {
        self.entries
            .iter()
            .enumerate()
            .map(|(k, e)| {
                e.eval(p).map_err(|source| MetricError::Evaluation {
                    entry: (k / self.rank, k % self.rank),
                    point: *p,
                    source,
                })
            })
            .collect()
    }

    pub fn evaluate(&self, p: &BasePoint) -> Result<EvaluatedMetric, MetricError> {
        let raw = self.evaluate_raw(p)?;
        Ok(symmetrize(self.rank, &raw))
    }

    /// Checks Hermiticity within `threshold` and positive definiteness by
    /// leading principal minors.
    pub fn check_at(&self, p: &BasePoint, threshold: f64) -> Result<EvaluatedMetric, MetricError> {
        let ev = self.evaluate(p)?;
        if ev.hermitian_deviation > threshold {
            return Err(MetricError::NotHermitian {
                point: *p,
                deviation: ev.hermitian_deviation,
            });
        }
        if let Some((minor, value)) = first_nonpositive_minor(&ev.matrix) {
            return Err(MetricError::NotPositiveDefinite {
                point: *p,
                minor,
                value,
            });
        }
        Ok(ev)
    }
}

pub(crate) fn symmetrize(rank: usize, raw: &[Complex64]) -> EvaluatedMetric {
    let m = DMatrix::from_row_slice(rank, rank, raw);
    let adj = m.adjoint();
    let hermitian_deviation = (&m - &adj).iter().map(|c| c.norm()).fold(0.0, f64::max);
    EvaluatedMetric {
        matrix: (m + adj).map(|c| c * 0.5),
        hermitian_deviation,
    }
}

/// Index (1-based size) and value of the first leading principal minor that
/// is not strictly positive.
pub fn first_nonpositive_minor(m: &DMatrix<Complex64>) -> Option<(usize, f64)> {
    (1..=m.nrows()).find_map(|k| {
        let d = m.view((0, 0), (k, k)).into_owned().determinant().re;
        (d <= 0.0 || !d.is_finite()).then_some((k, d))
    })
}

fn reflect_y(e: &Expr) -> Expr {
    use super::expr::Var;
    match e {
        Expr::Var(v @ (Var::Y1 | Var::Y2)) => Expr::Neg(Box::new(Expr::Var(*v))),
        Expr::Var(v) => Expr::Var(*v),
        Expr::Const(c) => Expr::Const(*c),
        Expr::Neg(a) => Expr::Neg(Box::new(reflect_y(a))),
        Expr::Func(f, a) => Expr::Func(*f, Box::new(reflect_y(a))),
        Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(reflect_y(a)), Box::new(reflect_y(b))),
        Expr::Pow(a, n) => Expr::Pow(Box::new(reflect_y(a)), *n),
        Expr::ComplexOf(a, b) => Expr::ComplexOf(Box::new(reflect_y(a)), Box::new(reflect_y(b))),
    }
}
