//! Numerical lattice of a surface: intersection form, positive cone,
//! hyperbolic distance between polarizations, slope differences and the
//! effective restriction bound.

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Rational64;
use num_traits::{CheckedDiv, CheckedMul, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::LatticeError;

pub type Rational = Rational64;

/// Deviation below 1 tolerated in the `arccosh` argument.
pub const ARCCOSH_CLAMP: f64 = 1e-12;

/// Symmetric integral form on `Num` with exactly one positive eigenvalue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionForm {
    dim: usize,
    entries: Vec<i64>,
}

impl IntersectionForm {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self, LatticeError> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(LatticeError::NotSquare {
                rows: dim,
                cols: bad.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(LatticeError::NotSymmetric(i, j));
                }
            }
        }
        let entries: Vec<i64> = rows.into_iter().flatten().collect();
        let form = IntersectionForm { dim, entries };
        let positive = form.positive_eigenvalues();
        if positive != 1 {
            return Err(LatticeError::Signature(positive));
        }
        Ok(form)
    }

    pub fn diagonal(diag: &[i64]) -> Result<Self, LatticeError> {
        let n = diag.len();
        Self::new(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0 }).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    fn positive_eigenvalues(&self) -> usize {
        if self.dim == 0 {
            return 0;
        }
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j) as f64);
        let eig = SymmetricEigen::new(m);
        let scale = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
        eig.eigenvalues
            .iter()
            .filter(|&&v| v > 1e-9 * scale)
            .count()
    }

    fn check(&self, u: &LatticeClass) -> Result<(), LatticeError> {
        if u.coords.len() != self.dim {
            return Err(LatticeError::Dimension {
                expected: self.dim,
                found: u.coords.len(),
            });
        }
        Ok(())
    }

    /// `u.v`
    pub fn pair(&self, u: &LatticeClass, v: &LatticeClass) -> Result<Rational, LatticeError> {
        self.check(u)?;
        self.check(v)?;
        let mut acc = Rational::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let q = self.entry(i, j);
                if q != 0 {
                    acc += u.coords[i] * v.coords[j] * Rational::from_integer(q);
                }
            }
        }
        Ok(acc)
    }

    /// `u² = u.u`
    pub fn square(&self, u: &LatticeClass) -> Result<Rational, LatticeError> {
        self.pair(u, u)
    }
}

/// Element of `Num ⊗ Q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LatticeClass {
    #[serde(serialize_with = "ser_rationals")]
    coords: Vec<Rational>,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

impl LatticeClass {
    pub fn new(coords: Vec<Rational>) -> Self {
        LatticeClass { coords }
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        LatticeClass {
            coords: coords.iter().map(|&c| Rational::from_integer(c)).collect(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        LatticeClass {
            coords: vec![Rational::zero(); dim],
        }
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, s: Rational) -> Self {
        LatticeClass {
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, LatticeError> {
        if self.coords.len() != other.coords.len() {
            return Err(LatticeError::Dimension {
                expected: self.coords.len(),
                found: other.coords.len(),
            });
        }
        Ok(LatticeClass {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, LatticeError> {
        self.checked_add(&other.scale(Rational::from_integer(-1)))
    }
}

impl std::fmt::Display for LatticeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `|u| = |u²|^{1/2}`
pub fn norm(u: &LatticeClass, q: &IntersectionForm) -> Result<f64, LatticeError> {
    Ok(to_f64(q.square(u)?.abs()).sqrt())
}

/// `β(H, H') = arccosh(H.H' / (|H| |H'|))`.
pub fn hyperbolic_distance(
    h: &LatticeClass,
    h2: &LatticeClass,
    q: &IntersectionForm,
) -> Result<f64, LatticeError> {
    let hh = q.square(h)?;
    let hh2 = q.square(h2)?;
    let cross = q.pair(h, h2)?;
    if !hh.is_positive() {
        return Err(LatticeError::NotInPositiveCone(format!(
            "{h} has square {hh}"
        )));
    }
    if !hh2.is_positive() {
        return Err(LatticeError::NotInPositiveCone(format!(
            "{h2} has square {hh2}"
        )));
    }
    if !cross.is_positive() {
        return Err(LatticeError::NotInPositiveCone(format!(
            "{h}.{h2} = {cross} is not positive"
        )));
    }
    let arg = to_f64(cross) / (to_f64(hh).sqrt() * to_f64(hh2).sqrt());
    // arccosh(x) = ln(1 + (x - 1) + sqrt(x² - 1)) with x - 1 = (x² - 1)/(x + 1);
    // x² - 1 is formed exactly when it fits.
    let excess = cross
        .checked_mul(&cross)
        .zip(hh.checked_mul(&hh2))
        .and_then(|(a, b)| (a - b).checked_div(&b))
        .map(to_f64)
        .unwrap_or_else(|| arg * arg - 1.0);
    if excess < -ARCCOSH_CLAMP {
        return Err(LatticeError::NotInPositiveCone(format!(
            "normalized pairing {arg} is below 1"
        )));
    }
    let excess = excess.max(0.0);
    Ok((excess / (arg.max(1.0) + 1.0) + excess.sqrt()).ln_1p())
}

/// `D² > 0` and `D.H > 0` for every supplied ample class `H`.
pub fn in_k_plus(
    d: &LatticeClass,
    q: &IntersectionForm,
    ample_samples: &[LatticeClass],
) -> Result<bool, LatticeError> {
    if ample_samples.is_empty() {
        return Err(LatticeError::NoAmpleSamples);
    }
    for (k, h) in ample_samples.iter().enumerate() {
        if !q.square(h)?.is_positive() {
            return Err(LatticeError::NonAmpleSample(k));
        }
    }
    if !q.square(d)?.is_positive() {
        return Ok(false);
    }
    for h in ample_samples {
        if !q.pair(d, h)?.is_positive() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `ξ_{G',G} = c1(G')/rk(G') - c1(G)/rk(G)`.
pub fn xi_invariant(
    c1_g_prime: &LatticeClass,
    rk_g_prime: i64,
    c1_g: &LatticeClass,
    rk_g: i64,
) -> Result<LatticeClass, LatticeError> {
    if rk_g_prime == 0 || rk_g == 0 {
        return Err(LatticeError::ZeroRank);
    }
    let a = c1_g_prime.scale(Rational::new(1, rk_g_prime));
    let b = c1_g.scale(Rational::new(1, rk_g));
    a.checked_sub(&b)
}

/// Discriminant input: a number, or a class to be paired with the
/// polarization.
#[derive(Debug, Clone, PartialEq)]
pub enum Discriminant {
    Scalar(Rational),
    Class(LatticeClass),
}

/// `δ(F).H^{n-1} >= 0`. A class-valued `δ` is paired with `H`, which needs
/// `n = 2`; a scalar `δ` is checked directly.
pub fn semistable_discriminant_inequality(
    delta: &Discriminant,
    h: &LatticeClass,
    q: &IntersectionForm,
    n: u32,
) -> Result<bool, LatticeError> {
    match delta {
        Discriminant::Scalar(d) => Ok(!d.is_negative()),
        Discriminant::Class(d) => {
            if n != 2 {
                return Err(LatticeError::UnsupportedDimension(n));
            }
            Ok(!q.pair(d, h)?.is_negative())
        }
    }
}

/// `2r c2 - (r-1) c1²` for a rank `r` sheaf on a surface. Offered as a
/// helper only; bound queries take `δ` as given.
pub fn surface_discriminant(
    rank: i64,
    c1: &LatticeClass,
    c2: Rational,
    q: &IntersectionForm,
) -> Result<Rational, LatticeError> {
    let r = Rational::from_integer(rank);
    Ok(Rational::from_integer(2) * r * c2 - (r - Rational::from_integer(1)) * q.square(c1)?)
}

/// Inputs of the restriction bound `2n >= (R/r) δ + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundQuery {
    pub rank: u32,
    #[serde(serialize_with = "ser_rational")]
    pub big_r: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub delta: Rational,
    pub n: u64,
}

fn ser_rational<S: serde::Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl BoundQuery {
    pub fn new(rank: u32, big_r: Rational, delta: Rational, n: u64) -> Result<Self, LatticeError> {
        if rank < 2 {
            return Err(LatticeError::BoundQuery(format!(
                "rank {rank} must be >= 2"
            )));
        }
        if !big_r.is_positive() {
            return Err(LatticeError::BoundQuery(format!(
                "R = {big_r} must be positive"
            )));
        }
        if delta.is_negative() {
            return Err(LatticeError::BoundQuery(format!(
                "delta = {delta} must be >= 0"
            )));
        }
        if n < 1 {
            return Err(LatticeError::BoundQuery("n must be >= 1".into()));
        }
        Ok(BoundQuery {
            rank,
            big_r,
            delta,
            n,
        })
    }

    /// `(R/r) δ + 1`
    pub fn threshold(&self) -> Rational {
        self.big_r / Rational::from_integer(self.rank as i64) * self.delta
            + Rational::from_integer(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundOutcome {
    pub satisfied: bool,
    /// Smallest `n >= 1` with `2n >= (R/r) δ + 1`.
    pub minimal_n: u64,
}

pub fn restriction_bound_satisfied(q: &BoundQuery) -> BoundOutcome {
    let t = q.threshold();
    let two = Rational::from_integer(2);
    let satisfied = two * Rational::from_integer(q.n as i64) >= t;
    let minimal = (t / two).ceil().to_integer().max(1);
    BoundOutcome {
        satisfied,
        minimal_n: minimal as u64,
    }
}
