//! Chern-connection curvature of a Hermitian metric and its Chern densities.
//!
//! With `H[j][k] = h_{j kbar}` the lowered curvature is
//!
//! ```text
//! R_{j kbar α βbar} = -∂_α ∂_βbar h_{j kbar} + Σ_{p,q} ∂_α h_{j qbar} (H^{-1})[q][p] ∂_βbar h_{p kbar}
//! ```
//!
//! and the raised tensor is fixed by `R_{j kbar α βbar} = Σ_i h_{i kbar} R^i_{j α βbar}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CurvatureError;
use crate::formcalc::{mat_wedge, top_coefficient, trace, wedge, Basis, ComplexForm, MatrixForm};
use crate::metricfield::field::symmetrize;
use crate::metricfield::{
    BasePoint, DerivativeEngine, FiniteDifference, Grid, HermitianMetricField, MetricJet, Patch,
    Slot,
};
use crate::paperformulas::det_formula_from_jet;

/// Condition number above which `h^{-1}` is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Fraction of grid points allowed to fail before an integral is abandoned.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `(tr(Ω∧Ω) - tr Ω ∧ tr Ω) / 8π²` on the raw curvature.
    Paper,
    /// `½ (tr Θ ∧ tr Θ - tr(Θ∧Θ))` with `Θ = (i/2π) Ω`.
    ChernWeil,
}

impl Convention {
    pub const ALL: [Convention; 2] = [Convention::Paper, Convention::ChernWeil];

    pub fn name(self) -> &'static str {
        match self {
            Convention::Paper => "paper",
            Convention::ChernWeil => "chernweil",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    rank: usize,
    point: BasePoint,
    lowered: Vec<Complex64>,
    raised: Vec<Complex64>,
}

fn tidx(r: usize, a: usize, b: usize, alpha: usize, beta: usize) -> usize {
    ((a * r + b) * 2 + alpha) * 2 + beta
}

impl CurvatureTensor {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn point(&self) -> BasePoint {
        self.point
    }

    /// `R_{j kbar α βbar}` with `α, β` in {0, 1} for `z1, z2`.
    pub fn lowered(&self, j: usize, k: usize, alpha: usize, beta: usize) -> Complex64 {
        self.lowered[tidx(self.rank, j, k, alpha, beta)]
    }

    /// `R^i_{j α βbar}`.
    pub fn raised(&self, i: usize, j: usize, alpha: usize, beta: usize) -> Complex64 {
        self.raised[tidx(self.rank, i, j, alpha, beta)]
    }

    pub fn max_abs(&self) -> f64 {
        self.lowered
            .iter()
            .chain(&self.raised)
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// `max |R_{j kbar α βbar} - conj(R_{k jbar β αbar})|`.
    pub fn hermitian_defect(&self) -> f64 {
        let r = self.rank;
        let mut worst: f64 = 0.0;
        for j in 0..r {
            for k in 0..r {
                for a in 0..2 {
                    for b in 0..2 {
                        let d = self.lowered(j, k, a, b) - self.lowered(k, j, b, a).conj();
                        worst = worst.max(d.norm());
                    }
                }
            }
        }
        worst
    }
}

/// Curvature from a precomputed jet.
pub fn curvature_from_jet(jet: &MetricJet) -> Result<CurvatureTensor, CurvatureError> {
    let r = jet.rank;
    let h = symmetrize(r, &jet.value).matrix;
    let hinv = guarded_inverse(&h, &jet.point)?;

    let mut lowered = vec![Complex64::new(0.0, 0.0); r * r * 4];
    let mut raised = lowered.clone();
    for alpha in 0..2 {
        let sa = Slot::holomorphic(alpha);
        let d_alpha = DMatrix::from_fn(r, r, |j, q| jet.first(sa, j, q));
        for beta in 0..2 {
            let sb = Slot::antiholomorphic(beta);
            let d_beta = DMatrix::from_fn(r, r, |p, k| jet.first(sb, p, k));
            let second = DMatrix::from_fn(r, r, |j, k| jet.block(j, k).get(sa, sb));
            let low = -second + &d_alpha * &hinv * &d_beta;
            // R^i_j = (L H^{-1})^T
            let up = (&low * &hinv).transpose();
            for a in 0..r {
                for b in 0..r {
                    lowered[tidx(r, a, b, alpha, beta)] = low[(a, b)];
                    raised[tidx(r, a, b, alpha, beta)] = up[(a, b)];
                }
            }
        }
    }
    Ok(CurvatureTensor {
        rank: r,
        point: jet.point,
        lowered,
        raised,
    })
}

fn guarded_inverse(
    h: &DMatrix<Complex64>,
    point: &BasePoint,
) -> Result<DMatrix<Complex64>, CurvatureError> {
    let sv = h.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) {
        return Err(CurvatureError::IllConditioned {
            point: *point,
            condition,
        });
    }
    h.clone()
        .try_inverse()
        .ok_or(CurvatureError::IllConditioned {
            point: *point,
            condition,
        })
}

pub fn curvature_at(
    metric: &HermitianMetricField,
    patch: &Patch,
    fd: FiniteDifference,
    p: &BasePoint,
) -> Result<CurvatureTensor, CurvatureError> {
    let jet = DerivativeEngine::new(metric, patch, fd).jet(p)?;
    curvature_from_jet(&jet)
}

/// `dz^α ∧ dzbar^β` as a 2-form.
pub fn area_element(alpha: usize, beta: usize) -> ComplexForm {
    wedge(
        &ComplexForm::basis(Basis::dz(alpha)),
        &ComplexForm::basis(Basis::dzbar(beta)),
    )
}

/// `Ω^i_j = Σ R^i_{j α βbar} dz^α ∧ dzbar^β`.
pub fn curvature_form(t: &CurvatureTensor) -> MatrixForm {
    let r = t.rank;
    let mut entries = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            let mut f = ComplexForm::zero(2);
            for alpha in 0..2 {
                for beta in 0..2 {
                    f = &f + &area_element(alpha, beta).scale(t.raised(i, j, alpha, beta));
                }
            }
            entries.push(f);
        }
    }
    MatrixForm::from_entries(r, entries).expect("curvature entries are 2-forms")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChernDensities {
    pub convention: Convention,
    /// `(i/2π) tr Ω`.
    pub c1: ComplexForm,
    /// Coefficient of `dz1 ∧ dzbar1 ∧ dz2 ∧ dzbar2`.
    pub c2: Complex64,
}

pub fn chern_densities_from_form(omega: &MatrixForm, convention: Convention) -> ChernDensities {
    let scale = Complex64::new(0.0, 1.0 / (2.0 * PI));
    let c1 = trace(omega).scale(scale);
    let c2 = match convention {
        Convention::Paper => {
            let tr_sq = trace(&mat_wedge(omega, omega).expect("square"));
            let t = trace(omega);
            top_coefficient(&(&tr_sq - &wedge(&t, &t))) / (8.0 * PI * PI)
        }
        Convention::ChernWeil => {
            let theta = omega.scale(scale);
            let t = trace(&theta);
            let tr_sq = trace(&mat_wedge(&theta, &theta).expect("square"));
            top_coefficient(&(&wedge(&t, &t) - &tr_sq)) * 0.5
        }
    };
    ChernDensities { convention, c1, c2 }
}

pub fn chern_densities(
    metric: &HermitianMetricField,
    patch: &Patch,
    fd: FiniteDifference,
    p: &BasePoint,
    convention: Convention,
) -> Result<ChernDensities, CurvatureError> {
    let t = curvature_at(metric, patch, fd, p)?;
    Ok(chern_densities_from_form(&curvature_form(&t), convention))
}

/// Everything the reports need at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointDensities {
    pub point: BasePoint,
    /// `Σ_{i,j} det(∂²h_ij)`.
    pub det_formula: Complex64,
    pub c2_paper: Complex64,
    pub c2_chernweil: Complex64,
}

impl PointDensities {
    pub fn c2(&self, convention: Convention) -> Complex64 {
        match convention {
            Convention::Paper => self.c2_paper,
            Convention::ChernWeil => self.c2_chernweil,
        }
    }
}

pub fn point_densities(
    engine: &DerivativeEngine<'_>,
    p: &BasePoint,
) -> Result<PointDensities, CurvatureError> {
    let jet = engine.jet(p)?;
    let omega = curvature_form(&curvature_from_jet(&jet)?);
    Ok(PointDensities {
        point: *p,
        det_formula: det_formula_from_jet(&jet),
        c2_paper: chern_densities_from_form(&omega, Convention::Paper).c2,
        c2_chernweil: chern_densities_from_form(&omega, Convention::ChernWeil).c2,
    })
}

/// Values of a pointwise quantity on the trapezoidal nodes of a grid.
#[derive(Debug, Clone)]
pub struct GridSamples<T> {
    pub grid: Grid,
    /// `(point, weight, value)` in node order.
    pub samples: Vec<(BasePoint, f64, Result<T, CurvatureError>)>,
}

impl<T: Send> GridSamples<T> {
    pub fn collect<F>(patch: &Patch, grid: &Grid, f: F) -> Result<Self, CurvatureError>
    where
        F: Fn(&BasePoint) -> Result<T, CurvatureError> + Sync,
    {
        if let Some(&n) = grid.resolution.iter().find(|&&n| n < 2) {
            return Err(CurvatureError::Resolution(n));
        }
        let nodes = grid.trapezoid(patch).map_err(CurvatureError::Metric)?;
        let samples = (0..nodes.len())
            .into_par_iter()
            .map(|k| {
                let (p, w) = nodes.get(k);
                (p, w, f(&p))
            })
            .collect();
        Ok(GridSamples {
            grid: *grid,
            samples,
        })
    }

    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| s.2.is_err()).count()
    }

    fn check_failures(&self) -> Result<(), CurvatureError> {
        let failed = self.failures();
        let total = self.samples.len();
        if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
            let first = self
                .samples
                .iter()
                .find_map(|s| s.2.as_ref().err())
                .map(ToString::to_string)
                .unwrap_or_default();
            return Err(CurvatureError::TooManyFailures {
                failed,
                total,
                first,
            });
        }
        Ok(())
    }

    /// Weighted sum in node order over the points that evaluated.
    pub fn integrate(&self, value: impl Fn(&T) -> Complex64) -> Result<Complex64, CurvatureError> {
        self.check_failures()?;
        Ok(self
            .samples
            .iter()
            .filter_map(|(_, w, v)| v.as_ref().ok().map(|t| value(t) * *w))
            .fold(Complex64::new(0.0, 0.0), |acc, x| acc + x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: Complex64,
    /// Value on the half-resolution grid.
    pub coarse_value: Complex64,
    /// `|value - coarse_value|`.
    pub error_estimate: f64,
    pub points: usize,
    pub failed: usize,
}

/// Pointwise density to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensitySelector {
    C2(Convention),
    DetFormula,
    Constant(Complex64),
}

impl DensitySelector {
    pub fn pick(&self, d: &PointDensities) -> Complex64 {
        match *self {
            DensitySelector::C2(c) => d.c2(c),
            DensitySelector::DetFormula => d.det_formula,
            DensitySelector::Constant(v) => v,
        }
    }
}

/// Trapezoidal integral over `(x1, y1, x2, y2)` of an arbitrary pointwise
/// function, with the half-resolution grid as error estimate.
pub fn integrate_fn<F>(patch: &Patch, grid: &Grid, f: F) -> Result<IntegralEstimate, CurvatureError>
where
    F: Fn(&BasePoint) -> Result<Complex64, CurvatureError> + Sync,
{
    let fine = GridSamples::collect(patch, grid, &f)?;
    let coarse = GridSamples::collect(patch, &grid.halved(), &f)?;
    estimate(&fine, &coarse, |v| *v)
}

pub(crate) fn estimate<T: Send>(
    fine: &GridSamples<T>,
    coarse: &GridSamples<T>,
    pick: impl Fn(&T) -> Complex64 + Copy,
) -> Result<IntegralEstimate, CurvatureError> {
    let value = fine.integrate(pick)?;
    let coarse_value = coarse.integrate(pick)?;
    Ok(IntegralEstimate {
        value,
        coarse_value,
        error_estimate: (value - coarse_value).norm(),
        points: fine.samples.len(),
        failed: fine.failures(),
    })
}

/// Integral of a selected density of `metric` over `patch`.
///
/// The integrand is the raw coefficient against `dx1 dy1 dx2 dy2`; as forms,
/// `dz1∧dzbar1∧dz2∧dzbar2 = -4 dx1∧dy1∧dx2∧dy2`.
pub fn integrate_density(
    metric: &HermitianMetricField,
    patch: &Patch,
    fd: FiniteDifference,
    grid: &Grid,
    selector: DensitySelector,
) -> Result<IntegralEstimate, CurvatureError> {
    if let DensitySelector::Constant(v) = selector {
        return integrate_fn(patch, grid, |_| Ok(v));
    }
    let engine = DerivativeEngine::new(metric, patch, fd);
    integrate_fn(patch, grid, |p| {
        point_densities(&engine, p).map(|d| selector.pick(&d))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metricfield::{Expr, Mode};

    fn rank_one(text: &str) -> HermitianMetricField {
        HermitianMetricField::parse_upper(1, &[((0, 0), text)], Mode::Product).unwrap()
    }

    fn centred() -> Patch {
        Patch::new([(-1.0, 1.0); 4]).unwrap()
    }

    #[test]
    fn constant_metric_is_flat() {
        let m = HermitianMetricField::parse_upper(
            2,
            &[((0, 0), "2"), ((0, 1), "0.5*i"), ((1, 1), "3")],
            Mode::Product,
        )
        .unwrap();
        let t = curvature_at(
            &m,
            &centred(),
            FiniteDifference::default(),
            &[0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        assert_eq!(t.max_abs(), 0.0);
        assert!(curvature_form(&t).is_zero());
    }

    #[test]
    fn gaussian_weight_at_origin() {
        let m = rank_one("exp(x1^2 + y1^2)");
        let t = curvature_at(&m, &centred(), FiniteDifference::default(), &[0.0; 4]).unwrap();
        assert!((t.lowered(0, 0, 0, 0) - Complex64::new(-1.0, 0.0)).norm() < 1e-7);
        let omega = curvature_form(&t);
        let expected = area_element(0, 0).scale(Complex64::new(-1.0, 0.0));
        assert!((omega.get(0, 0) - &expected).max_abs() < 1e-7);
    }

    #[test]
    fn block_diagonal_metric_gives_block_diagonal_curvature() {
        let h1 = "exp(x1*x2 + y1^2)";
        let h2 = "2 + sin(x1)*cos(y2)";
        let p = [0.2, -0.1, 0.4, 0.3];
        let fd = FiniteDifference::default();
        let diag = HermitianMetricField::diagonal(
            vec![Expr::parse(h1).unwrap(), Expr::parse(h2).unwrap()],
            Mode::Product,
        )
        .unwrap();
        let t = curvature_at(&diag, &centred(), fd, &p).unwrap();
        let t1 = curvature_at(&rank_one(h1), &centred(), fd, &p).unwrap();
        let t2 = curvature_at(&rank_one(h2), &centred(), fd, &p).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((t.raised(0, 0, a, b) - t1.raised(0, 0, a, b)).norm() < 1e-12);
                assert!((t.raised(1, 1, a, b) - t2.raised(0, 0, a, b)).norm() < 1e-12);
                assert_eq!(t.raised(0, 1, a, b).norm(), 0.0);
                assert_eq!(t.raised(1, 0, a, b).norm(), 0.0);
            }
        }
    }

    #[test]
    fn lowering_is_consistent() {
        let m = HermitianMetricField::parse_upper(
            2,
            &[
                ((0, 0), "2 + x1*y2"),
                ((0, 1), "0.3*complex(x2, y1)"),
                ((1, 1), "exp(0.2*x1)"),
            ],
            Mode::Product,
        )
        .unwrap();
        let p = [0.3, 0.1, -0.2, 0.5];
        let patch = centred();
        let t = curvature_at(&m, &patch, FiniteDifference::default(), &p).unwrap();
        let h = m.evaluate(&p).unwrap().matrix;
        for j in 0..2 {
            for k in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let s: Complex64 = (0..2).map(|i| h[(i, k)] * t.raised(i, j, a, b)).sum();
                        assert!((s - t.lowered(j, k, a, b)).norm() < 1e-12);
                    }
                }
            }
        }
        assert!(t.hermitian_defect() < 1e-8);
    }

    #[test]
    fn singular_metric_is_ill_conditioned() {
        let m = HermitianMetricField::parse_upper(
            2,
            &[((0, 0), "1"), ((0, 1), "1"), ((1, 1), "1")],
            Mode::Product,
        )
        .unwrap();
        let err = curvature_at(&m, &centred(), FiniteDifference::default(), &[0.0; 4]).unwrap_err();
        assert!(matches!(err, CurvatureError::IllConditioned { .. }));
    }

    #[test]
    fn flat_metric_has_zero_densities() {
        let m = HermitianMetricField::identity(2, Mode::Product);
        for c in Convention::ALL {
            let d =
                chern_densities(&m, &centred(), FiniteDifference::default(), &[0.0; 4], c).unwrap();
            assert!(d.c1.is_zero());
            assert_eq!(d.c2, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rank_one_second_chern_density_vanishes() {
        let m = rank_one("exp(x1*x2 - y1*y2 + x1^2)");
        let d = chern_densities(
            &m,
            &centred(),
            FiniteDifference::default(),
            &[0.3, -0.4, 0.1, 0.2],
            Convention::ChernWeil,
        )
        .unwrap();
        assert!(d.c2.norm() <= 1e-12);
        assert!(!d.c1.is_zero());
    }

    #[test]
    fn split_metric_c2_is_product_of_line_bundle_c1() {
        let h1 = "exp(x1^2 + 0.5*x1*x2 + y2^2)";
        let h2 = "exp(0.3*y1*y2 + x2^2 - 0.2*x1*y1)";
        let p = [0.1, 0.2, -0.3, 0.25];
        let fd = FiniteDifference::default();
        let patch = centred();
        let diag = HermitianMetricField::diagonal(
            vec![Expr::parse(h1).unwrap(), Expr::parse(h2).unwrap()],
            Mode::Product,
        )
        .unwrap();
        let c2 = chern_densities(&diag, &patch, fd, &p, Convention::ChernWeil)
            .unwrap()
            .c2;
        let c1a = chern_densities(&rank_one(h1), &patch, fd, &p, Convention::ChernWeil)
            .unwrap()
            .c1;
        let c1b = chern_densities(&rank_one(h2), &patch, fd, &p, Convention::ChernWeil)
            .unwrap()
            .c1;
        let expected = top_coefficient(&wedge(&c1a, &c1b));
        assert!(expected.norm() > 1e-4);
        assert!((c2 - expected).norm() < 1e-9 * expected.norm().max(1.0));
    }

    #[test]
    fn conventions_measure_the_same_density() {
        let m = HermitianMetricField::parse_upper(
            2,
            &[
                ((0, 0), "exp(x1*x2 + y1^2)"),
                ((0, 1), "0.2*complex(x1*y2, x2)"),
                ((1, 1), "2 + x1*y1*x2"),
            ],
            Mode::Product,
        )
        .unwrap();
        let p = [0.2, 0.1, 0.3, -0.4];
        let fd = FiniteDifference::default();
        let a = chern_densities(&m, &centred(), fd, &p, Convention::Paper)
            .unwrap()
            .c2;
        let b = chern_densities(&m, &centred(), fd, &p, Convention::ChernWeil)
            .unwrap()
            .c2;
        assert!(a.norm() > 1e-6);
        assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-3));
    }

    #[test]
    fn integrate_constant_over_unit_cube() {
        let m = HermitianMetricField::identity(1, Mode::Product);
        let r = integrate_density(
            &m,
            &Patch::unit_cube(),
            FiniteDifference::default(),
            &Grid::uniform(3),
            DensitySelector::Constant(Complex64::new(1.0, 0.0)),
        )
        .unwrap();
        assert!((r.value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(r.error_estimate < 1e-14);

        let z = integrate_density(
            &m,
            &Patch::unit_cube(),
            FiniteDifference::default(),
            &Grid::uniform(3),
            DensitySelector::Constant(Complex64::new(0.0, 0.0)),
        )
        .unwrap();
        assert_eq!(z.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn flat_metric_integrates_to_zero() {
        let m = HermitianMetricField::identity(2, Mode::Product);
        let patch = Patch::unit_cube().with_margin(0.01).unwrap();
        for c in Convention::ALL {
            let r = integrate_density(
                &m,
                &patch,
                FiniteDifference::default(),
                &Grid::uniform(3),
                DensitySelector::C2(c),
            )
            .unwrap();
            assert_eq!(r.value.norm(), 0.0);
        }
    }

    #[test]
    fn boundary_failures_abort_integration() {
        let m = HermitianMetricField::identity(1, Mode::Product);
        let err = integrate_density(
            &m,
            &Patch::unit_cube(),
            FiniteDifference::default(),
            &Grid::uniform(3),
            DensitySelector::C2(Convention::ChernWeil),
        )
        .unwrap_err();
        assert!(matches!(err, CurvatureError::TooManyFailures { .. }));
    }

    #[test]
    fn resolution_below_two_rejected() {
        let err = integrate_fn(&Patch::unit_cube(), &Grid::new([1, 2, 2, 2]), |_| {
            Ok(Complex64::new(1.0, 0.0))
        })
        .unwrap_err();
        assert_eq!(err, CurvatureError::Resolution(1));
    }
}
