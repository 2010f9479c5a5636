//! Hermitian metric fields given by expressions, their Wirtinger
//! derivatives, and the flatness block patterns of `∂²h_ij`.

pub mod derivative;
pub mod expr;
pub mod field;
pub mod grid;
pub mod pattern;

pub use derivative::{DerivativeEngine, FiniteDifference, MetricJet, SecondDerivativeBlock, Slot};
pub use expr::Expr;
pub use field::{BasePoint, EvaluatedMetric, HermitianMetricField, Mode, Patch};
pub use grid::{Grid, Nodes};
pub use pattern::{flatness_pattern_report, PatternReport};
