//! Numerical toolkit for Chern classes of Hermitian metrics on trivial
//! bundles over complex surfaces, with supporting lattice and curve-family
//! bookkeeping.

pub mod curvature;
pub mod error;
pub mod family;
pub mod formcalc;
pub mod lattice;
pub mod metricfield;
pub mod paperformulas;

pub use num_complex::Complex64;
