//! Families of curves, sections of the associated moduli spaces and
//! parabolic weight data. Moduli points are opaque key/value payloads.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::FamilyError;

/// Opaque description of a point of a moduli space.
pub type BundlePoint = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiberDescriptor {
    pub parameter: String,
    pub genus: u32,
    pub singularities: u32,
    pub point: BundlePoint,
    pub stable: bool,
}

impl FiberDescriptor {
    pub fn new(parameter: impl Into<String>, genus: u32, singularities: u32) -> Self {
        FiberDescriptor {
            parameter: parameter.into(),
            genus,
            singularities,
            point: BundlePoint::new(),
            stable: true,
        }
    }

    pub fn with_point(mut self, point: BundlePoint) -> Self {
        self.point = point;
        self
    }

    pub fn with_stable(mut self, stable: bool) -> Self {
        self.stable = stable;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyMode {
    ConstantCurve,
    Product,
    Fibration,
}

impl FamilyMode {
    pub fn name(self) -> &'static str {
        match self {
            FamilyMode::ConstantCurve => "constant-curve",
            FamilyMode::Product => "product",
            FamilyMode::Fibration => "fibration",
        }
    }
}

impl std::str::FromStr for FamilyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant-curve" | "constant" => Ok(FamilyMode::ConstantCurve),
            "product" => Ok(FamilyMode::Product),
            "fibration" => Ok(FamilyMode::Fibration),
            other => Err(format!("unknown family mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurveFamily {
    mode: FamilyMode,
    fibers: Vec<FiberDescriptor>,
}

impl CurveFamily {
    pub fn new(mode: FamilyMode, fibers: Vec<FiberDescriptor>) -> Result<Self, FamilyError> {
        if fibers.is_empty() {
            return Err(FamilyError::Empty);
        }
        let mut seen = BTreeSet::new();
        for f in &fibers {
            if !seen.insert(f.parameter.as_str()) {
                return Err(FamilyError::DuplicateFiber(f.parameter.clone()));
            }
        }
        if mode == FamilyMode::ConstantCurve {
            let first = &fibers[0];
            if let Some(f) = fibers
                .iter()
                .find(|f| (f.genus, f.singularities) != (first.genus, first.singularities))
            {
                return Err(FamilyError::NotConstant(format!(
                    "{} has (genus {}, singularities {}) but {} has (genus {}, singularities {})",
                    first.parameter,
                    first.genus,
                    first.singularities,
                    f.parameter,
                    f.genus,
                    f.singularities
                )));
            }
        }
        Ok(CurveFamily { mode, fibers })
    }

    pub fn mode(&self) -> FamilyMode {
        self.mode
    }

    pub fn fibers(&self) -> &[FiberDescriptor] {
        &self.fibers
    }

    pub fn len(&self) -> usize {
        self.fibers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fibers.is_empty()
    }

    pub fn fiber(&self, parameter: &str) -> Option<&FiberDescriptor> {
        self.fibers.iter().find(|f| f.parameter == parameter)
    }

    /// Fibers whose singularity count exceeds `threshold`, sorted.
    pub fn singular_fibers(&self, threshold: u32) -> Vec<String> {
        let mut out: Vec<String> = self
            .fibers
            .iter()
            .filter(|f| f.singularities > threshold)
            .map(|f| f.parameter.clone())
            .collect();
        out.sort();
        out
    }

    /// Errors unless every fiber has at most `threshold` singular points.
    pub fn check_singularity_threshold(&self, threshold: u32) -> Result<(), FamilyError> {
        let fibers = self.singular_fibers(threshold);
        if fibers.is_empty() {
            Ok(())
        } else {
            Err(FamilyError::TooSingular { threshold, fibers })
        }
    }
}

/// A point of the moduli space of every fiber. Smoothness in the parameter
/// is not checked: the points are opaque.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuliSection {
    family: CurveFamily,
    assignment: Vec<BundlePoint>,
}

impl ModuliSection {
    pub fn family(&self) -> &CurveFamily {
        &self.family
    }

    /// Assigned points in fiber order.
    pub fn points(&self) -> impl Iterator<Item = (&str, &BundlePoint)> {
        self.family
            .fibers
            .iter()
            .map(|f| f.parameter.as_str())
            .zip(&self.assignment)
    }

    pub fn point(&self, parameter: &str) -> Option<&BundlePoint> {
        self.points().find(|(p, _)| *p == parameter).map(|(_, b)| b)
    }
}

/// Validates `assignments` against `family`. Missing, unknown and unstable
/// fibers are reported in sorted order.
pub fn build_section(
    family: CurveFamily,
    assignments: &BTreeMap<String, BundlePoint>,
) -> Result<ModuliSection, FamilyError> {
    let unknown: Vec<String> = assignments
        .keys()
        .filter(|k| family.fiber(k).is_none())
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(FamilyError::UnknownFiber(unknown));
    }
    let mut missing: Vec<String> = family
        .fibers
        .iter()
        .filter(|f| !assignments.contains_key(&f.parameter))
        .map(|f| f.parameter.clone())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(FamilyError::Incomplete(missing));
    }
    let mut unstable: Vec<String> = family
        .fibers
        .iter()
        .filter(|f| !f.stable)
        .map(|f| f.parameter.clone())
        .collect();
    if !unstable.is_empty() {
        unstable.sort();
        return Err(FamilyError::Unstable(unstable));
    }
    let assignment = family
        .fibers
        .iter()
        .map(|f| assignments[&f.parameter].clone())
        .collect();
    Ok(ModuliSection { family, assignment })
}

/// Uses each fiber's own `point` as its assignment.
pub fn section_from_descriptors(family: CurveFamily) -> Result<ModuliSection, FamilyError> {
    let assignments = family
        .fibers
        .iter()
        .map(|f| (f.parameter.clone(), f.point.clone()))
        .collect();
    build_section(family, &assignments)
}

/// The multiset of assigned points of a constant-curve family, in fiber
/// order.
pub fn cycle_from_constant_family(
    section: &ModuliSection,
) -> Result<Vec<BundlePoint>, FamilyError> {
    if section.family.mode != FamilyMode::ConstantCurve {
        return Err(FamilyError::WrongMode(
            section.family.mode.name().to_string(),
        ));
    }
    Ok(section.assignment.clone())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParabolicData {
    #[serde(serialize_with = "ser_rationals")]
    pub weights: Vec<Rational64>,
    pub multiplicities: Vec<u32>,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ParabolicViolation {
    LengthMismatch {
        weights: usize,
        multiplicities: usize,
    },
    Negative {
        index: usize,
    },
    NotBelowOne {
        index: usize,
    },
    NotIncreasing {
        index: usize,
    },
    ZeroMultiplicity {
        index: usize,
    },
}

impl std::fmt::Display for ParabolicViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParabolicViolation::LengthMismatch {
                weights,
                multiplicities,
            } => write!(f, "{weights} weights but {multiplicities} multiplicities"),
            ParabolicViolation::Negative { index } => write!(f, "weight {index} is negative"),
            ParabolicViolation::NotBelowOne { index } => write!(f, "weight {index} is not below 1"),
            ParabolicViolation::NotIncreasing { index } => {
                write!(f, "weight {index} does not exceed weight {}", index - 1)
            }
            ParabolicViolation::ZeroMultiplicity { index } => {
                write!(f, "multiplicity {index} is zero")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParabolicValidation {
    pub valid: bool,
    pub violations: Vec<ParabolicViolation>,
}

pub fn validate_parabolic_data(p: &ParabolicData) -> ParabolicValidation {
    let mut violations = Vec::new();
    if p.weights.len() != p.multiplicities.len() {
        violations.push(ParabolicViolation::LengthMismatch {
            weights: p.weights.len(),
            multiplicities: p.multiplicities.len(),
        });
    }
    for (index, w) in p.weights.iter().enumerate() {
        if w.is_negative() {
            violations.push(ParabolicViolation::Negative { index });
        }
        if *w >= Rational64::one() {
            violations.push(ParabolicViolation::NotBelowOne { index });
        }
        if index > 0 && *w <= p.weights[index - 1] {
            violations.push(ParabolicViolation::NotIncreasing { index });
        }
    }
    for (index, k) in p.multiplicities.iter().enumerate() {
        if k.is_zero() {
            violations.push(ParabolicViolation::ZeroMultiplicity { index });
        }
    }
    violations.sort();
    ParabolicValidation {
        valid: violations.is_empty(),
        violations,
    }
}
