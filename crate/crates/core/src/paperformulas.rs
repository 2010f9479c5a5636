//! The determinant formula for the second Chern density and its measurement
//! against the Chern–Weil densities.
//!
//! For each component `h_ij` the 4×4 block `∂²h_ij` is split as
//!
//! ```text
//! [ pure (z1, zbar1)   Dbar_ij          ]
//! [ D_ij               pure (z2, zbar2) ]
//! ```
//!
//! with `D_ij` the lower-left square (rows `d_z2, d_zbar2`, columns
//! `d_z1, d_zbar1`). When the upper-left square vanishes,
//! `det ∂²h_ij = det D_ij · det Dbar_ij` regardless of the lower-right square.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

use crate::curvature::{
    estimate, point_densities, Convention, GridSamples, IntegralEstimate, PointDensities,
};
use crate::error::CurvatureError;
use crate::metricfield::derivative::Block2;
use crate::metricfield::{
    flatness_pattern_report, BasePoint, DerivativeEngine, FiniteDifference, Grid,
    HermitianMetricField, MetricJet, Patch, PatternReport, SecondDerivativeBlock,
};

pub fn det4(block: &SecondDerivativeBlock) -> Complex64 {
    Matrix4::from_fn(|r, c| block.entries[r][c]).determinant()
}

pub fn det2(m: &Block2) -> Complex64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// `Σ_{i,j} det(∂²h_ij)` from a precomputed jet.
pub fn det_formula_from_jet(jet: &MetricJet) -> Complex64 {
    jet.second.iter().map(det4).sum()
}

/// Coefficient of `dz1∧dzbar1∧dz2∧dzbar2` in `Σ_{i,j} det(∂²h_ij)`.
pub fn det_formula_density(
    metric: &HermitianMetricField,
    patch: &Patch,
    fd: FiniteDifference,
    p: &BasePoint,
) -> Result<Complex64, CurvatureError> {
    let jet = DerivativeEngine::new(metric, patch, fd).jet(p)?;
    Ok(det_formula_from_jet(&jet))
}

/// Which diagonal squares of a block vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockShape {
    /// Both diagonal squares vanish.
    Product,
    /// Only the `(z1, zbar1)` square vanishes.
    Fibration,
    /// The `(z1, zbar1)` square is nonzero; the factorization is not expected.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorizationCheck {
    pub shape: BlockShape,
    /// `det` of the full block.
    pub lhs: Complex64,
    /// `det(upper-right) · det(lower-left)`.
    pub rhs: Complex64,
    pub holds: bool,
}

impl FactorizationCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

fn square_max(b: &Block2) -> f64 {
    b.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn block_factorization_check(
    block: &SecondDerivativeBlock,
    tolerance: f64,
) -> FactorizationCheck {
    let shape = if square_max(&block.pure_first()) > tolerance {
        BlockShape::Other
    } else if square_max(&block.pure_second()) > tolerance {
        BlockShape::Fibration
    } else {
        BlockShape::Product
    };
    let lhs = det4(block);
    // 2×2 block anti-diagonal permutation has sign (+1)
    let rhs = det2(&block.upper_right()) * det2(&block.lower_left());
    FactorizationCheck {
        shape,
        lhs,
        rhs,
        holds: (lhs - rhs).norm() <= tolerance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub convention: Convention,
    pub density: Complex64,
    /// `|paper density - oracle density|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub point: BasePoint,
    pub paper_density: Complex64,
    pub oracle: Vec<OracleValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionSummary {
    pub convention: Convention,
    pub max_residual: f64,
    pub oracle_integral: IntegralEstimate,
    /// `|∫ paper - ∫ oracle|` on the main grid.
    pub integral_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub grid: Grid,
    pub paper_integral: Complex64,
    /// One entry per requested convention, same order as the report.
    pub oracle_integrals: Vec<Complex64>,
    pub integral_residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub grid: Grid,
    pub pattern: PatternReport,
    /// Whether the metric has the flatness pattern of its declared mode.
    pub in_hypothesis: bool,
    pub records: Vec<PointRecord>,
    pub failed_points: usize,
    pub paper_integral: IntegralEstimate,
    pub conventions: Vec<ConventionSummary>,
    pub convergence: Vec<ConvergenceRow>,
    pub tolerance: f64,
    /// In hypothesis, yet some convention differs from the paper density by
    /// more than the tolerance somewhere.
    pub discrepancy: bool,
}

impl IdentityReport {
    pub fn summary(&self, c: Convention) -> Option<&ConventionSummary> {
        self.conventions.iter().find(|s| s.convention == c)
    }

    pub fn max_paper_density(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.paper_density.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_paper_density_re(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.paper_density.re)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    pub paper_integral: IntegralEstimate,
    /// Sign of the real part; `Zero` within the tolerance.
    pub sign: Sign,
    pub imaginary_within_tolerance: bool,
    pub oracle_integrals: Vec<(Convention, IntegralEstimate)>,
    pub tolerance: f64,
}

/// Grid samples shared by the identity and positivity reports.
pub struct DensityRun<'a> {
    fd: FiniteDifference,
    engine: DerivativeEngine<'a>,
    cache: Vec<GridSamples<PointDensities>>,
}

impl<'a> DensityRun<'a> {
    pub fn new(metric: &'a HermitianMetricField, patch: &'a Patch, fd: FiniteDifference) -> Self {
        DensityRun {
            fd,
            engine: DerivativeEngine::new(metric, patch, fd),
            cache: Vec::new(),
        }
    }

    pub fn samples(&mut self, grid: &Grid) -> Result<&GridSamples<PointDensities>, CurvatureError> {
        if let Some(k) = self.cache.iter().position(|s| s.grid == *grid) {
            return Ok(&self.cache[k]);
        }
        let engine = self.engine;
        let s = GridSamples::collect(engine.patch(), grid, |p| point_densities(&engine, p))?;
        self.cache.push(s);
        Ok(self.cache.last().expect("just pushed"))
    }

    /// Trapezoidal integral of `pick` on `grid`, with the half-resolution grid
    /// as error estimate.
    pub fn integral(
        &mut self,
        grid: &Grid,
        pick: impl Fn(&PointDensities) -> Complex64 + Copy,
    ) -> Result<IntegralEstimate, CurvatureError> {
        self.samples(grid)?;
        self.samples(&grid.halved())?;
        let fine = self.cache.iter().find(|s| s.grid == *grid).expect("cached");
        let coarse = self
            .cache
            .iter()
            .find(|s| s.grid == grid.halved())
            .expect("cached");
        estimate(fine, coarse, pick)
    }

    /// Pointwise and integrated comparison of the determinant formula with
    /// each requested convention, plus a refinement table over `refinements`.
    pub fn identity_residual(
        &mut self,
        grid: &Grid,
        refinements: &[Grid],
        conventions: &[Convention],
        tolerance: f64,
    ) -> Result<IdentityReport, CurvatureError> {
        let metric = self.engine.metric();
        let patch = self.engine.patch();
        let pattern = flatness_pattern_report(metric, patch, self.fd, grid, tolerance)?;

        let paper_integral = self.integral(grid, |d| d.det_formula)?;
        let mut summaries = Vec::new();
        for &c in conventions {
            let oracle_integral = self.integral(grid, move |d| d.c2(c))?;
            summaries.push((c, oracle_integral));
        }

        let samples = self.samples(grid)?;
        let records: Vec<PointRecord> = samples
            .samples
            .iter()
            .filter_map(|(_, _, v)| v.as_ref().ok())
            .map(|d| PointRecord {
                point: d.point,
                paper_density: d.det_formula,
                oracle: conventions
                    .iter()
                    .map(|&c| OracleValue {
                        convention: c,
                        density: d.c2(c),
                        residual: (d.det_formula - d.c2(c)).norm(),
                    })
                    .collect(),
            })
            .collect();
        let failed_points = samples.failures();

        let conventions_out: Vec<ConventionSummary> = summaries
            .into_iter()
            .enumerate()
            .map(|(k, (c, oracle_integral))| ConventionSummary {
                convention: c,
                max_residual: records
                    .iter()
                    .map(|r| r.oracle[k].residual)
                    .fold(0.0, f64::max),
                integral_residual: (paper_integral.value - oracle_integral.value).norm(),
                oracle_integral,
            })
            .collect();

        let mut convergence = Vec::with_capacity(refinements.len());
        for g in refinements {
            let s = self.samples(g)?;
            let paper = s.integrate(|d| d.det_formula)?;
            let oracle: Vec<Complex64> = conventions
                .iter()
                .map(|&c| s.integrate(|d| d.c2(c)))
                .collect::<Result<_, _>>()?;
            convergence.push(ConvergenceRow {
                grid: *g,
                paper_integral: paper,
                integral_residuals: oracle.iter().map(|o| (paper - o).norm()).collect(),
                oracle_integrals: oracle,
            });
        }

        let in_hypothesis = pattern.pass;
        let discrepancy =
            in_hypothesis && conventions_out.iter().any(|s| s.max_residual > tolerance);
        Ok(IdentityReport {
            grid: *grid,
            pattern,
            in_hypothesis,
            records,
            failed_points,
            paper_integral,
            conventions: conventions_out,
            convergence,
            tolerance,
            discrepancy,
        })
    }

    /// Integral of the determinant density and its sign, next to the oracle
    /// integrals.
    pub fn positivity_report(
        &mut self,
        grid: &Grid,
        conventions: &[Convention],
        tolerance: f64,
    ) -> Result<PositivityReport, CurvatureError> {
        let paper_integral = self.integral(grid, |d| d.det_formula)?;
        let re = paper_integral.value.re;
        let sign = if re.abs() <= tolerance {
            Sign::Zero
        } else if re > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        };
        let mut oracle_integrals = Vec::new();
        for &c in conventions {
            oracle_integrals.push((c, self.integral(grid, move |d| d.c2(c))?));
        }
        Ok(PositivityReport {
            paper_integral,
            sign,
            imaginary_within_tolerance: paper_integral.value.im.abs() <= tolerance,
            oracle_integrals,
            tolerance,
        })
    }
}

pub fn identity_residual(
    metric: &HermitianMetricField,
    patch: &Patch,
    fd: FiniteDifference,
    grid: &Grid,
    refinements: &[Grid],
    conventions: &[Convention],
    tolerance: f64,
) -> Result<IdentityReport, CurvatureError> {
    DensityRun::new(metric, patch, fd).identity_residual(grid, refinements, conventions, tolerance)
}

pub fn positivity_report(
    metric: &HermitianMetricField,
    patch: &Patch,
    fd: FiniteDifference,
    grid: &Grid,
    conventions: &[Convention],
    tolerance: f64,
) -> Result<PositivityReport, CurvatureError> {
    DensityRun::new(metric, patch, fd).positivity_report(grid, conventions, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metricfield::{Mode, Slot};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Leibniz expansion over all 24 permutations.
    fn leibniz(m: &[[Complex64; 4]; 4]) -> Complex64 {
        let mut total = c(0.0, 0.0);
        let mut perm = [0usize, 1, 2, 3];
        permute(&mut perm, 0, &mut |p| {
            let mut inv = 0;
            for a in 0..4 {
                for b in (a + 1)..4 {
                    if p[a] > p[b] {
                        inv += 1;
                    }
                }
            }
            let sign = if inv % 2 == 0 { 1.0 } else { -1.0 };
            total += (0..4).map(|r| m[r][p[r]]).product::<Complex64>() * sign;
        });
        total
    }

    fn permute(p: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize; 4])) {
        if k == 4 {
            f(p);
            return;
        }
        for i in k..4 {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    fn rank_one(text: &str) -> HermitianMetricField {
        HermitianMetricField::parse_upper(1, &[((0, 0), text)], Mode::Product).unwrap()
    }

    fn patch() -> Patch {
        Patch::new([(-0.5, 0.5); 4])
            .unwrap()
            .with_margin(0.01)
            .unwrap()
    }

    #[test]
    fn det4_agrees_with_leibniz() {
        let mut b = SecondDerivativeBlock::zero();
        for r in 0..4 {
            for col in 0..4 {
                b.entries[r][col] = c(
                    (r * 7 + col * 3) as f64 % 5.0 - 2.0,
                    (r + 2 * col) as f64 % 3.0 - 1.0,
                );
            }
        }
        assert!((det4(&b) - leibniz(&b.entries)).norm() < 1e-12);
    }

    #[test]
    fn zero_block_factorizes() {
        let chk = block_factorization_check(&SecondDerivativeBlock::zero(), 1e-12);
        assert!(chk.holds);
        assert_eq!(chk.shape, BlockShape::Product);
        assert_eq!(chk.lhs, c(0.0, 0.0));
    }

    #[test]
    fn fibration_shape_still_factorizes() {
        let mut b = SecondDerivativeBlock::zero();
        let a = [[c(1.0, 2.0), c(-0.5, 0.0)], [c(0.3, -1.0), c(2.0, 0.5)]];
        let ur = [[c(0.0, 1.0), c(1.5, 0.0)], [c(-2.0, 0.0), c(0.7, 0.7)]];
        let lr = [[c(3.0, 0.0), c(1.0, -1.0)], [c(-4.0, 2.0), c(0.1, 0.0)]];
        for r in 0..2 {
            for col in 0..2 {
                b.entries[r][col + 2] = ur[r][col];
                b.entries[r + 2][col] = a[r][col];
                b.entries[r + 2][col + 2] = lr[r][col];
            }
        }
        let chk = block_factorization_check(&b, 1e-12);
        assert_eq!(chk.shape, BlockShape::Fibration);
        assert!(chk.holds);
        assert!((chk.lhs - leibniz(&b.entries)).norm() < 1e-12);
        assert!((chk.rhs - det2(&a) * det2(&ur)).norm() < 1e-12);
    }

    #[test]
    fn nonzero_upper_left_breaks_factorization() {
        let mut b = SecondDerivativeBlock::zero();
        b.entries[0][0] = c(1.0, 0.0);
        b.entries[1][1] = c(1.0, 0.0);
        b.entries[2][2] = c(1.0, 0.0);
        b.entries[3][3] = c(1.0, 0.0);
        let chk = block_factorization_check(&b, 1e-12);
        assert_eq!(chk.shape, BlockShape::Other);
        assert!(!chk.holds);
        assert_eq!(chk.lhs, c(1.0, 0.0));
        assert_eq!(chk.rhs, c(0.0, 0.0));
    }

    #[test]
    fn constant_metric_has_zero_det_density() {
        let m = rank_one("2.5");
        assert_eq!(
            det_formula_density(&m, &patch(), FiniteDifference::default(), &[0.1; 4]).unwrap(),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn real_part_product_has_singular_mixed_square() {
        // all four mixed entries equal ε/4, so det D = 0
        let m = rank_one("1 + 0.1*x1*x2");
        let d = det_formula_density(
            &m,
            &patch(),
            FiniteDifference::default(),
            &[0.1, 0.2, -0.1, 0.3],
        )
        .unwrap();
        assert!(d.norm() < 1e-12);
    }

    #[test]
    fn hermitian_product_density_is_det_d_squared() {
        // h = 1 + ε Re(z1 zbar2): D = [[0, ε/2], [ε/2, 0]]
        let eps = 0.1;
        let m = rank_one("1 + 0.1*(x1*x2 + y1*y2)");
        let d = det_formula_density(
            &m,
            &patch(),
            FiniteDifference::default(),
            &[0.1, 0.2, -0.1, 0.3],
        )
        .unwrap();
        let expected = (eps * eps / 4.0) * (eps * eps / 4.0);
        assert!((d - c(expected, 0.0)).norm() < 1e-10 * expected.max(1e-12) + 1e-13);
    }

    #[test]
    fn off_diagonal_blocks_are_conjugate() {
        let m = HermitianMetricField::parse_upper(
            2,
            &[
                ((0, 0), "2"),
                ((0, 1), "0.1*complex(x1*x2 - y1*y2, x1*y2)"),
                ((1, 1), "2"),
            ],
            Mode::Product,
        )
        .unwrap();
        let p = patch();
        let eng = DerivativeEngine::new(&m, &p, FiniteDifference::default());
        let jet = eng.jet(&[0.1, -0.2, 0.05, 0.3]).unwrap();
        let d12 = det4(jet.block(0, 1));
        let d21 = det4(jet.block(1, 0));
        assert!(det4(jet.block(0, 0)).norm() == 0.0);
        assert!(d12.norm() > 1e-8);
        assert!((d12 - d21.conj()).norm() < 1e-9 * d12.norm());
        // slot conjugation relates the two blocks entrywise
        for a in Slot::ALL {
            for b in Slot::ALL {
                let lhs = jet.block(1, 0).get(a, b);
                let rhs = jet.block(0, 1).get(a.conjugate(), b.conjugate()).conj();
                assert!((lhs - rhs).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn flat_metric_identity_report() {
        let m = HermitianMetricField::identity(2, Mode::Product);
        let grids = [Grid::uniform(2), Grid::uniform(3), Grid::uniform(4)];
        let r = identity_residual(
            &m,
            &patch(),
            FiniteDifference::default(),
            &Grid::uniform(3),
            &grids,
            &Convention::ALL,
            1e-6,
        )
        .unwrap();
        assert!(r.in_hypothesis);
        assert!(!r.discrepancy);
        assert_eq!(r.convergence.len(), 3);
        for s in &r.conventions {
            assert_eq!(s.max_residual, 0.0);
        }
        let pos = positivity_report(
            &m,
            &patch(),
            FiniteDifference::default(),
            &Grid::uniform(3),
            &Convention::ALL,
            1e-12,
        )
        .unwrap();
        assert_eq!(pos.sign, Sign::Zero);
    }

    #[test]
    fn rank_one_mixed_metric_flags_the_gap() {
        let m = rank_one("1 + 0.1*(x1*x2 + y1*y2)");
        let grids = [Grid::uniform(2), Grid::uniform(3), Grid::uniform(4)];
        let r = identity_residual(
            &m,
            &patch(),
            FiniteDifference::default(),
            &Grid::uniform(3),
            &grids,
            &Convention::ALL,
            1e-9,
        )
        .unwrap();
        assert!(r.in_hypothesis);
        assert!(r.discrepancy);
        let cw = r.summary(Convention::ChernWeil).unwrap();
        for rec in &r.records {
            assert!(rec.oracle[1].density.norm() <= 1e-12);
            assert!(rec.paper_density.re > 0.0);
        }
        assert!((cw.max_residual - r.max_paper_density()).abs() < 1e-12);
    }

    #[test]
    fn conjugate_reflection_preserves_paper_integral() {
        let m = HermitianMetricField::parse_upper(
            2,
            &[
                ((0, 0), "1 + 0.1*(x1*x2 + y1*y2)"),
                ((0, 1), "0.05*i*(x1*y2 + y1*x2)"),
                ((1, 1), "1 + 0.1*(x1*x2 - y1*y2)"),
            ],
            Mode::Product,
        )
        .unwrap();
        let fd = FiniteDifference::default();
        let g = Grid::uniform(3);
        let a = positivity_report(&m, &patch(), fd, &g, &Convention::ALL, 1e-12).unwrap();
        let b = positivity_report(
            &m.conjugate_reflected(),
            &patch(),
            fd,
            &g,
            &Convention::ALL,
            1e-12,
        )
        .unwrap();
        assert_eq!(a.sign, Sign::Positive);
        assert!((a.paper_integral.value - b.paper_integral.value).norm() < 1e-12);
    }

    #[test]
    fn component_permutation_leaves_density_unchanged() {
        let m = HermitianMetricField::parse_upper(
            2,
            &[
                ((0, 0), "1 + 0.1*(x1*x2 + y1*y2)"),
                ((0, 1), "0.05*complex(x1*x2, y1*x2)"),
                ((1, 1), "1.5 + 0.2*(x1*y2 + y1*x2)"),
            ],
            Mode::Product,
        )
        .unwrap();
        let swapped = m.permuted(&[1, 0]).unwrap();
        let p = [0.1, 0.2, -0.3, 0.05];
        let fd = FiniteDifference::default();
        let a = det_formula_density(&m, &patch(), fd, &p).unwrap();
        let b = det_formula_density(&swapped, &patch(), fd, &p).unwrap();
        assert!((a - b).norm() <= 1e-15 * a.norm().max(1e-12) * 16.0);
    }
}
