//! Flatness block patterns of the second-derivative blocks.
//!
//! Over a product of curves every `∂²h_ij` must vanish on both diagonal 2×2
//! squares (pure `(z1, zbar1)` and pure `(z2, zbar2)` derivatives). Over a
//! fibred surface only the `(z1, zbar1)` square has to vanish.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::derivative::{Block2, DerivativeEngine, FiniteDifference, MetricJet, Slot};
use super::field::{BasePoint, HermitianMetricField, Mode, Patch};
use super::grid::Grid;
use crate::error::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Offender {
    pub point: BasePoint,
    pub component: (usize, usize),
    pub entry: (Slot, Slot),
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockResidual {
    pub max_abs: f64,
    pub worst: Option<Offender>,
    /// Whether the block is required to vanish in this mode.
    pub required: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternReport {
    pub mode: Mode,
    pub tolerance: f64,
    pub points: usize,
    /// Pure `(z1, zbar1)` square.
    pub first_block: BlockResidual,
    /// Pure `(z2, zbar2)` square.
    pub second_block: BlockResidual,
    /// Off-diagonal (mixed-direction) content; informational only.
    pub mixed: BlockResidual,
    pub pass: bool,
}

#[derive(Clone, Copy)]
enum Region {
    First,
    Second,
    Mixed,
}

impl Region {
    fn slots(self) -> ([Slot; 2], [Slot; 2]) {
        match self {
            Region::First => ([Slot::Z1, Slot::ZBar1], [Slot::Z1, Slot::ZBar1]),
            Region::Second => ([Slot::Z2, Slot::ZBar2], [Slot::Z2, Slot::ZBar2]),
            Region::Mixed => ([Slot::Z2, Slot::ZBar2], [Slot::Z1, Slot::ZBar1]),
        }
    }

    fn pick(self, jet: &MetricJet, i: usize, j: usize) -> Block2 {
        let b = jet.block(i, j);
        match self {
            Region::First => b.pure_first(),
            Region::Second => b.pure_second(),
            Region::Mixed => b.lower_left(),
        }
    }
}

fn worst_in(jet: &MetricJet, region: Region) -> Option<Offender> {
    let (rows, cols) = region.slots();
    let mut best: Option<Offender> = None;
    for i in 0..jet.rank {
        for j in 0..jet.rank {
            let blk = region.pick(jet, i, j);
            for (a, row) in blk.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    if best.is_none_or(|o| v.norm() > o.value.norm()) {
                        best = Some(Offender {
                            point: jet.point,
                            component: (i, j),
                            entry: (rows[a], cols[b]),
                            value: *v,
                        });
                    }
                }
            }
        }
    }
    best
}

fn fold_worst(items: &[Option<Offender>]) -> Option<Offender> {
    items
        .iter()
        .flatten()
        .fold(None, |acc: Option<Offender>, o| match acc {
            Some(a) if a.value.norm() >= o.value.norm() => Some(a),
            _ => Some(*o),
        })
}

fn residual(worst: Option<Offender>, required: bool, tolerance: f64) -> BlockResidual {
    let max_abs = worst.map_or(0.0, |o| o.value.norm());
    BlockResidual {
        max_abs,
        worst,
        required,
        pass: !required || max_abs <= tolerance,
    }
}

/// Sweeps `grid` (kept clear of open boundaries by the stencil reach) and
/// reports the largest second derivative in each diagonal square.
pub fn flatness_pattern_report(
    metric: &HermitianMetricField,
    patch: &Patch,
    fd: FiniteDifference,
    grid: &Grid,
    tolerance: f64,
) -> Result<PatternReport, MetricError> {
    let engine = DerivativeEngine::new(metric, patch, fd);
    let nodes = grid.interior(patch, engine.steps())?;
    if nodes.is_empty() {
        return Err(MetricError::EmptyGrid);
    }
    let per_point: Vec<[Option<Offender>; 3]> = (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let (p, _) = nodes.get(k);
            let jet = engine.jet(&p)?;
            Ok([
                worst_in(&jet, Region::First),
                worst_in(&jet, Region::Second),
                worst_in(&jet, Region::Mixed),
            ])
        })
        .collect::<Result<_, MetricError>>()?;

    let column = |c: usize| fold_worst(&per_point.iter().map(|r| r[c]).collect::<Vec<_>>());
    let mode = metric.mode();
    let first_block = residual(column(0), true, tolerance);
    let second_block = residual(column(1), mode == Mode::Product, tolerance);
    let mixed = residual(column(2), false, tolerance);
    let pass = first_block.pass && second_block.pass;
    Ok(PatternReport {
        mode,
        tolerance,
        points: nodes.len(),
        first_block,
        second_block,
        mixed,
        pass,
    })
}
