//! Complex differential forms on a patch of a complex surface.
//!
//! The coframe is `{dz1, dzbar1, dz2, dzbar2}` with the fixed total order
//! `dz1 < dzbar1 < dz2 < dzbar2`. A monomial is a strictly increasing tuple of
//! basis elements, stored as a 4-bit mask; every sign produced by [`wedge`]
//! is the parity of the permutation that sorts the concatenated tuple back
//! into this order.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::FormError;

/// One of the four coframe elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Basis {
    Dz1,
    DzBar1,
    Dz2,
    DzBar2,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::Dz1, Basis::DzBar1, Basis::Dz2, Basis::DzBar2];

    /// Position in the global order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Basis> {
        Self::ALL.get(i).copied()
    }

    /// Holomorphic coframe element `dz^alpha`, `alpha` in {0, 1}.
    pub fn dz(alpha: usize) -> Basis {
        [Basis::Dz1, Basis::Dz2][alpha]
    }

    /// Antiholomorphic coframe element `dzbar^beta`, `beta` in {0, 1}.
    pub fn dzbar(beta: usize) -> Basis {
        [Basis::DzBar1, Basis::DzBar2][beta]
    }

    pub fn name(self) -> &'static str {
        match self {
            Basis::Dz1 => "dz1",
            Basis::DzBar1 => "dzbar1",
            Basis::Dz2 => "dz2",
            Basis::DzBar2 => "dzbar2",
        }
    }
}

/// A strictly increasing tuple of basis elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(u8);

impl Monomial {
    /// `dz1 ∧ dzbar1 ∧ dz2 ∧ dzbar2`.
    pub const TOP: Monomial = Monomial(0b1111);
    pub const ONE: Monomial = Monomial(0);

    /// Builds the canonical monomial for a set of basis elements.
    /// Returns `None` when an element repeats.
    pub fn from_sorted_unique(elems: &[Basis]) -> Option<Monomial> {
        let mut mask = 0u8;
        for b in elems {
            let bit = 1u8 << b.index();
            if mask & bit != 0 {
                return None;
            }
            mask |= bit;
        }
        Some(Monomial(mask))
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    /// Basis elements in increasing order.
    pub fn elements(self) -> Vec<Basis> {
        Basis::ALL
            .iter()
            .copied()
            .filter(|b| self.0 & (1 << b.index()) != 0)
            .collect()
    }

    /// Product of two monomials: the merged monomial and the sign of the
    /// sorting permutation, or `None` when they share an element.
    pub fn wedge(self, other: Monomial) -> Option<(Monomial, f64)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        // each element of `other` must move past every larger element of `self`
        let mut inversions = 0u32;
        for j in 0..4 {
            if other.0 & (1 << j) != 0 {
                inversions += (self.0 >> (j + 1)).count_ones();
            }
        }
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        Some((Monomial(self.0 | other.0), sign))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let elems = self.elements();
        if elems.is_empty() {
            return write!(f, "1");
        }
        let names: Vec<_> = elems.iter().map(|b| b.name()).collect();
        write!(f, "{}", names.join("^"))
    }
}

/// A homogeneous complex form of degree 0..=4.
///
/// Zero coefficients are never stored, so the zero form of any degree has an
/// empty coefficient map.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexForm {
    degree: usize,
    coefficients: BTreeMap<Monomial, Complex64>,
}

impl ComplexForm {
    pub fn zero(degree: usize) -> Self {
        ComplexForm {
            degree: degree.min(4),
            coefficients: BTreeMap::new(),
        }
    }

    /// Constant 0-form.
    pub fn scalar(c: Complex64) -> Self {
        Self::zero(0).with_term(Monomial::ONE, c)
    }

    /// A single basis 1-form.
    pub fn basis(b: Basis) -> Self {
        Self::zero(1).with_term(Monomial(1 << b.index()), Complex64::new(1.0, 0.0))
    }

    /// `c * e_1 ∧ ... ∧ e_k` for elements already in canonical order.
    pub fn monomial(elems: &[Basis], c: Complex64) -> Result<Self, FormError> {
        let sorted = elems.windows(2).all(|w| w[0] < w[1]);
        if !sorted {
            return Err(FormError::NotIncreasing(
                elems.iter().map(|b| b.name()).collect::<Vec<_>>().join(","),
            ));
        }
        let m = Monomial::from_sorted_unique(elems).expect("sorted tuple has no repeats");
        Ok(Self::zero(elems.len()).with_term(m, c))
    }

    /// Adds `c` to the coefficient of `m`.
    ///
    /// Panics if `m` has the wrong degree.
    pub fn with_term(mut self, m: Monomial, c: Complex64) -> Self {
        self.add_term(m, c);
        self
    }

    pub fn add_term(&mut self, m: Monomial, c: Complex64) {
        assert_eq!(
            m.degree(),
            self.degree,
            "monomial {m} does not have degree {}",
            self.degree
        );
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let entry = self
            .coefficients
            .entry(m)
            .or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.coefficients.remove(&m);
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficient(&self, m: Monomial) -> Complex64 {
        self.coefficients
            .get(&m)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, Complex64)> + '_ {
        self.coefficients.iter().map(|(m, c)| (*m, *c))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.degree);
        for (m, v) in self.terms() {
            out.add_term(m, v * c);
        }
        out
    }

    /// Largest coefficient modulus, 0 for the zero form.
    pub fn max_abs(&self) -> f64 {
        self.coefficients
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.degree);
        for (m, v) in self.terms() {
            out.add_term(m, v.conj());
        }
        out
    }
}

impl Add for &ComplexForm {
    type Output = ComplexForm;

    /// Panics when both forms are nonzero and their degrees differ.
    fn add(self, rhs: &ComplexForm) -> ComplexForm {
        if rhs.is_zero() && rhs.degree != self.degree {
            return self.clone();
        }
        if self.is_zero() && rhs.degree != self.degree {
            return rhs.clone();
        }
        assert_eq!(self.degree, rhs.degree, "sum of forms of unequal degree");
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(m, c);
        }
        out
    }
}

impl Add for ComplexForm {
    type Output = ComplexForm;
    fn add(self, rhs: ComplexForm) -> ComplexForm {
        &self + &rhs
    }
}

impl Neg for &ComplexForm {
    type Output = ComplexForm;
    fn neg(self) -> ComplexForm {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Sub for &ComplexForm {
    type Output = ComplexForm;
    fn sub(self, rhs: &ComplexForm) -> ComplexForm {
        self + &(-rhs)
    }
}

impl Mul<Complex64> for &ComplexForm {
    type Output = ComplexForm;
    fn mul(self, rhs: Complex64) -> ComplexForm {
        self.scale(rhs)
    }
}

impl fmt::Display for ComplexForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms()
            .map(|(m, c)| format!("({}{:+}i)·{}", c.re, c.im, m))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Exterior product. Degrees above 4 give the zero form of degree 4.
pub fn wedge(a: &ComplexForm, b: &ComplexForm) -> ComplexForm {
    let degree = a.degree + b.degree;
    if degree > 4 {
        return ComplexForm::zero(4);
    }
    let mut out = ComplexForm::zero(degree);
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            if let Some((m, sign)) = ma.wedge(mb) {
                out.add_term(m, ca * cb * sign);
            }
        }
    }
    out
}

/// Coefficient of `dz1 ∧ dzbar1 ∧ dz2 ∧ dzbar2`; zero below top degree.
pub fn top_coefficient(a: &ComplexForm) -> Complex64 {
    if a.degree != 4 {
        return Complex64::new(0.0, 0.0);
    }
    a.coefficient(Monomial::TOP)
}

/// Square matrix of forms sharing one degree.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixForm {
    rank: usize,
    degree: usize,
    entries: Vec<ComplexForm>,
}

impl MatrixForm {
    pub fn zero(rank: usize, degree: usize) -> Self {
        MatrixForm {
            rank,
            degree: degree.min(4),
            entries: vec![ComplexForm::zero(degree); rank * rank],
        }
    }

    /// Row-major construction.
    pub fn from_entries(rank: usize, entries: Vec<ComplexForm>) -> Result<Self, FormError> {
        if rank == 0 {
            return Err(FormError::ZeroRank);
        }
        if entries.len() != rank * rank {
            return Err(FormError::EntryCount {
                rank,
                found: entries.len(),
            });
        }
        let degree = entries
            .iter()
            .find(|e| !e.is_zero())
            .map_or(entries[0].degree, |e| e.degree);
        if let Some(bad) = entries.iter().find(|e| !e.is_zero() && e.degree != degree) {
            return Err(FormError::MixedDegree {
                expected: degree,
                found: bad.degree,
            });
        }
        let entries = entries
            .into_iter()
            .map(|e| {
                if e.is_zero() {
                    ComplexForm::zero(degree)
                } else {
                    e
                }
            })
            .collect();
        Ok(MatrixForm {
            rank,
            degree,
            entries,
        })
    }

    pub fn diagonal(diag: Vec<ComplexForm>) -> Result<Self, FormError> {
        let rank = diag.len();
        let degree = diag.iter().find(|e| !e.is_zero()).map_or(0, |e| e.degree);
        let mut entries = vec![ComplexForm::zero(degree); rank * rank];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i * rank + i] = d;
        }
        Self::from_entries(rank, entries)
    }

    pub fn identity(rank: usize) -> Self {
        let diag = vec![ComplexForm::scalar(Complex64::new(1.0, 0.0)); rank];
        Self::diagonal(diag).expect("identity is well formed")
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, i: usize, j: usize) -> &ComplexForm {
        &self.entries[i * self.rank + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(ComplexForm::is_zero)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        MatrixForm {
            rank: self.rank,
            degree: self.degree,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .map(ComplexForm::max_abs)
            .fold(0.0, f64::max)
    }
}

/// Matrix exterior product `(A ∧ B)_ij = Σ_k A_ik ∧ B_kj`.
pub fn mat_wedge(a: &MatrixForm, b: &MatrixForm) -> Result<MatrixForm, FormError> {
    if a.rank != b.rank {
        return Err(FormError::RankMismatch {
            left: a.rank,
            right: b.rank,
        });
    }
    let r = a.rank;
    let degree = (a.degree + b.degree).min(4);
    let mut entries = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            let mut acc = ComplexForm::zero(degree);
            for k in 0..r {
                acc = &acc + &wedge(a.get(i, k), b.get(k, j));
            }
            entries.push(acc);
        }
    }
    Ok(MatrixForm {
        rank: r,
        degree,
        entries,
    })
}

pub fn trace(a: &MatrixForm) -> ComplexForm {
    (0..a.rank).fold(ComplexForm::zero(a.degree), |acc, i| &acc + a.get(i, i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn repeated_basis_wedges_to_zero() {
        let dz1 = ComplexForm::basis(Basis::Dz1);
        assert!(wedge(&dz1, &dz1).is_zero());
    }

    #[test]
    fn antisymmetry_of_one_forms() {
        let dz1 = ComplexForm::basis(Basis::Dz1);
        let dzb1 = ComplexForm::basis(Basis::DzBar1);
        let m = Monomial::from_sorted_unique(&[Basis::Dz1, Basis::DzBar1]).unwrap();
        assert_eq!(wedge(&dz1, &dzb1).coefficient(m), c(1.0));
        assert_eq!(wedge(&dzb1, &dz1).coefficient(m), c(-1.0));
    }

    #[test]
    fn scaled_one_form_times_two_form() {
        let a = ComplexForm::basis(Basis::Dz1).scale(c(2.0));
        let b = ComplexForm::monomial(&[Basis::Dz2, Basis::DzBar2], c(3.0)).unwrap();
        let w = wedge(&a, &b);
        let m = Monomial::from_sorted_unique(&[Basis::Dz1, Basis::Dz2, Basis::DzBar2]).unwrap();
        assert_eq!(w.degree(), 3);
        assert_eq!(w.coefficient(m), c(6.0));
    }

    #[test]
    fn degree_overflow_is_flagged_zero() {
        let top = ComplexForm::monomial(&Basis::ALL, c(1.0)).unwrap();
        let one = ComplexForm::basis(Basis::Dz1);
        let w = wedge(&top, &one);
        assert!(w.is_zero());
        assert_eq!(w.degree(), 4);
    }

    #[test]
    fn monomial_rejects_unsorted_tuples() {
        assert!(ComplexForm::monomial(&[Basis::Dz2, Basis::Dz1], c(1.0)).is_err());
        assert!(ComplexForm::monomial(&[Basis::Dz1, Basis::Dz1], c(1.0)).is_err());
    }

    #[test]
    fn top_coefficient_reads_canonical_tuple() {
        let f = ComplexForm::monomial(&Basis::ALL, c(5.0)).unwrap();
        assert_eq!(top_coefficient(&f), c(5.0));
        let two = ComplexForm::monomial(&[Basis::Dz1, Basis::DzBar1], c(5.0)).unwrap();
        assert_eq!(top_coefficient(&two), c(0.0));
    }

    #[test]
    fn swapped_pairs_have_even_parity() {
        let first = ComplexForm::monomial(&[Basis::Dz2, Basis::DzBar2], c(1.0)).unwrap();
        let second = ComplexForm::monomial(&[Basis::Dz1, Basis::DzBar1], c(1.0)).unwrap();
        assert_eq!(top_coefficient(&wedge(&first, &second)), c(1.0));
    }

    #[test]
    fn scalar_mat_wedge() {
        let f = ComplexForm::basis(Basis::Dz1);
        let g = ComplexForm::basis(Basis::DzBar2).scale(c(-2.0));
        let a = MatrixForm::from_entries(1, vec![f.clone()]).unwrap();
        let b = MatrixForm::from_entries(1, vec![g.clone()]).unwrap();
        let ab = mat_wedge(&a, &b).unwrap();
        assert_eq!(ab.get(0, 0), &wedge(&f, &g));
    }

    #[test]
    fn zero_matrix_wedge() {
        let z = MatrixForm::zero(2, 2);
        let b = MatrixForm::diagonal(vec![
            ComplexForm::monomial(&[Basis::Dz1, Basis::DzBar1], c(1.0)).unwrap(),
            ComplexForm::monomial(&[Basis::Dz2, Basis::DzBar2], c(1.0)).unwrap(),
        ])
        .unwrap();
        assert!(mat_wedge(&z, &b).unwrap().is_zero());
    }

    #[test]
    fn diagonal_mat_wedge_is_entrywise() {
        let w1 = ComplexForm::monomial(&[Basis::Dz1, Basis::DzBar1], c(2.0)).unwrap();
        let w2 = ComplexForm::monomial(&[Basis::Dz1, Basis::DzBar2], c(-1.0)).unwrap();
        let e1 = ComplexForm::monomial(&[Basis::Dz2, Basis::DzBar2], c(3.0)).unwrap();
        let e2 = ComplexForm::monomial(&[Basis::DzBar1, Basis::Dz2], c(0.5)).unwrap();
        let a = MatrixForm::diagonal(vec![w1.clone(), w2.clone()]).unwrap();
        let b = MatrixForm::diagonal(vec![e1.clone(), e2.clone()]).unwrap();
        let ab = mat_wedge(&a, &b).unwrap();
        assert_eq!(ab.get(0, 0), &wedge(&w1, &e1));
        assert_eq!(ab.get(1, 1), &wedge(&w2, &e2));
        assert!(ab.get(0, 1).is_zero());
        assert!(ab.get(1, 0).is_zero());
    }

    #[test]
    fn mat_wedge_rank_mismatch() {
        let a = MatrixForm::zero(1, 1);
        let b = MatrixForm::zero(2, 1);
        assert!(matches!(
            mat_wedge(&a, &b),
            Err(FormError::RankMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn trace_examples() {
        assert_eq!(trace(&MatrixForm::identity(3)), ComplexForm::scalar(c(3.0)));

        let w =
            ComplexForm::monomial(&[Basis::Dz1, Basis::DzBar2], Complex64::new(0.3, -1.0)).unwrap();
        let d = MatrixForm::diagonal(vec![w.clone(), -&w]).unwrap();
        assert!(trace(&d).is_zero());

        let off = MatrixForm::from_entries(
            2,
            vec![
                ComplexForm::zero(2),
                w.clone(),
                w.clone(),
                ComplexForm::zero(2),
            ],
        )
        .unwrap();
        assert!(trace(&off).is_zero());
    }

    #[test]
    fn matrix_rejects_mixed_degrees() {
        let e = MatrixForm::from_entries(
            2,
            vec![
                ComplexForm::basis(Basis::Dz1),
                ComplexForm::scalar(c(1.0)),
                ComplexForm::zero(1),
                ComplexForm::zero(1),
            ],
        );
        assert!(matches!(e, Err(FormError::MixedDegree { .. })));
    }
}
