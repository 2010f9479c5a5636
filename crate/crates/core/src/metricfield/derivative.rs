//! Wirtinger derivatives of metric entries by central differences with one
//! level of Richardson extrapolation.
//!
//! Real partials are taken in `(x1, y1, x2, y2)` and combined through
//! `∂_z = (∂_x - i ∂_y) / 2`, `∂_zbar = (∂_x + i ∂_y) / 2`.

use num_complex::Complex64;
use serde::Serialize;

use super::field::{BasePoint, HermitianMetricField, Patch};
use crate::error::MetricError;

/// Differentiation slot, ordered like the coframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Slot {
    Z1,
    ZBar1,
    Z2,
    ZBar2,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::Z1, Slot::ZBar1, Slot::Z2, Slot::ZBar2];

    pub fn index(self) -> usize {
        self as usize
    }

    /// `∂_{z^alpha}`, `alpha` in {0, 1}.
    pub fn holomorphic(alpha: usize) -> Slot {
        [Slot::Z1, Slot::Z2][alpha]
    }

    /// `∂_{zbar^beta}`, `beta` in {0, 1}.
    pub fn antiholomorphic(beta: usize) -> Slot {
        [Slot::ZBar1, Slot::ZBar2][beta]
    }

    /// Swaps barred and unbarred slots.
    pub fn conjugate(self) -> Slot {
        match self {
            Slot::Z1 => Slot::ZBar1,
            Slot::ZBar1 => Slot::Z1,
            Slot::Z2 => Slot::ZBar2,
            Slot::ZBar2 => Slot::Z2,
        }
    }

    pub fn name(self) -> &'static str {
        ["d_z1", "d_zbar1", "d_z2", "d_zbar2"][self as usize]
    }

    /// Weights of this slot on the real partials `(∂x1, ∂y1, ∂x2, ∂y2)`.
    fn weights(self) -> [Complex64; 4] {
        let half = Complex64::new(0.5, 0.0);
        let ihalf = Complex64::new(0.0, 0.5);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Slot::Z1 => [half, -ihalf, zero, zero],
            Slot::ZBar1 => [half, ihalf, zero, zero],
            Slot::Z2 => [zero, zero, half, -ihalf],
            Slot::ZBar2 => [zero, zero, half, ihalf],
        }
    }
}

/// All second Wirtinger derivatives of one metric component, indexed by
/// `(d_z1, d_zbar1, d_z2, d_zbar2) × (same)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondDerivativeBlock {
    pub entries: [[Complex64; 4]; 4],
}

pub type Block2 = [[Complex64; 2]; 2];

impl SecondDerivativeBlock {
    pub fn zero() -> Self {
        SecondDerivativeBlock {
            entries: [[Complex64::new(0.0, 0.0); 4]; 4],
        }
    }

    pub fn get(&self, a: Slot, b: Slot) -> Complex64 {
        self.entries[a.index()][b.index()]
    }

    fn sub(&self, row: usize, col: usize) -> Block2 {
        let e = &self.entries;
        [
            [e[row][col], e[row][col + 1]],
            [e[row + 1][col], e[row + 1][col + 1]],
        ]
    }

    /// Derivatives purely along `(z1, zbar1)`.
    pub fn pure_first(&self) -> Block2 {
        self.sub(0, 0)
    }

    /// Derivatives purely along `(z2, zbar2)`.
    pub fn pure_second(&self) -> Block2 {
        self.sub(2, 2)
    }

    /// Rows `(d_z1, d_zbar1)`, columns `(d_z2, d_zbar2)`.
    pub fn upper_right(&self) -> Block2 {
        self.sub(0, 2)
    }

    /// Rows `(d_z2, d_zbar2)`, columns `(d_z1, d_zbar1)`.
    pub fn lower_left(&self) -> Block2 {
        self.sub(2, 0)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Finite-difference configuration. The step along each axis is
/// `rel_step` times the width of the patch along that axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteDifference {
    pub rel_step: f64,
}

impl Default for FiniteDifference {
    fn default() -> Self {
        FiniteDifference { rel_step: 1e-3 }
    }
}

impl FiniteDifference {
    pub fn new(rel_step: f64) -> Self {
        FiniteDifference { rel_step }
    }

    pub fn steps(&self, patch: &Patch) -> [f64; 4] {
        std::array::from_fn(|a| self.rel_step * patch.width(a))
    }
}

/// Value, first and second Wirtinger derivatives of every metric component
/// at one point. Component vectors are row-major `(i, j)`.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub rank: usize,
    pub point: BasePoint,
    pub value: Vec<Complex64>,
    /// `first[slot][i * rank + j]`
    pub first: [Vec<Complex64>; 4],
    /// `second[i * rank + j]`
    pub second: Vec<SecondDerivativeBlock>,
}

impl MetricJet {
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.value[i * self.rank + j]
    }

    pub fn first(&self, slot: Slot, i: usize, j: usize) -> Complex64 {
        self.first[slot.index()][i * self.rank + j]
    }

    pub fn block(&self, i: usize, j: usize) -> &SecondDerivativeBlock {
        &self.second[i * self.rank + j]
    }
}

/// Differentiates one metric on one patch.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeEngine<'a> {
    metric: &'a HermitianMetricField,
    patch: &'a Patch,
    steps: [f64; 4],
}

impl<'a> DerivativeEngine<'a> {
    pub fn new(metric: &'a HermitianMetricField, patch: &'a Patch, fd: FiniteDifference) -> Self {
        DerivativeEngine {
            metric,
            patch,
            steps: fd.steps(patch),
        }
    }

    pub fn metric(&self) -> &'a HermitianMetricField {
        self.metric
    }

    pub fn patch(&self) -> &'a Patch {
        self.patch
    }

    pub fn steps(&self) -> [f64; 4] {
        self.steps
    }

    /// Full jet of the metric at `p`.
    pub fn jet(&self, p: &BasePoint) -> Result<MetricJet, MetricError> {
        let r = self.metric.rank();
        let real = self.real_jet(p, r * r, |q| self.metric.evaluate_raw(q))?;
        let first = std::array::from_fn(|s| {
            let w = Slot::ALL[s].weights();
            (0..r * r)
                .map(|c| (0..4).map(|a| w[a] * real.grad[a][c]).sum())
                .collect()
        });
        let second = (0..r * r)
            .map(|c| wirtinger_block(|a, b| real.hess[a][b][c]))
            .collect();
        Ok(MetricJet {
            rank: r,
            point: *p,
            value: real.value,
            first,
            second,
        })
    }

    pub fn wirtinger_derivative(
        &self,
        p: &BasePoint,
        component: (usize, usize),
        slot: Slot,
    ) -> Result<Complex64, MetricError> {
        let real = self.component_jet(p, component)?;
        let w = slot.weights();
        Ok((0..4).map(|a| w[a] * real.grad[a][0]).sum())
    }

    pub fn second_derivative_block(
        &self,
        p: &BasePoint,
        component: (usize, usize),
    ) -> Result<SecondDerivativeBlock, MetricError> {
        let real = self.component_jet(p, component)?;
        Ok(wirtinger_block(|a, b| real.hess[a][b][0]))
    }

    fn component_jet(&self, p: &BasePoint, (i, j): (usize, usize)) -> Result<RealJet, MetricError> {
        let r = self.metric.rank();
        if i >= r || j >= r {
            return Err(MetricError::Component(i, j, r));
        }
        let expr = self.metric.entry(i, j);
        self.real_jet(p, 1, |q| {
            expr.eval(q)
                .map(|v| vec![v])
                .map_err(|source| MetricError::Evaluation {
                    entry: (i, j),
                    point: *q,
                    source,
                })
        })
    }

    /// Gradient and Hessian in real coordinates of a vector-valued function.
    fn real_jet<F>(&self, p: &BasePoint, width: usize, f: F) -> Result<RealJet, MetricError>
    where
        F: Fn(&BasePoint) -> Result<Vec<Complex64>, MetricError>,
    {
        let h = self.steps;
        for a in 0..4 {
            if !self.patch.admits(a, p[a], h[a]) {
                return Err(MetricError::Stencil { point: *p, axis: a });
            }
        }
        let eval = |offsets: [f64; 4]| {
            let q: BasePoint = std::array::from_fn(|a| self.patch.wrap(a, p[a] + offsets[a]));
            f(&q)
        };
        let shift = |pairs: &[(usize, f64)]| {
            let mut o = [0.0; 4];
            for &(a, d) in pairs {
                o[a] += d;
            }
            o
        };

        let f0 = eval([0.0; 4])?;
        let zero = Complex64::new(0.0, 0.0);
        let mut grad = [(); 4].map(|_| vec![zero; width]);
        let mut hess = [[(); 4]; 4].map(|row| row.map(|_| vec![zero; width]));

        // Richardson over the step pair (h, h/2): R = (4 D(h/2) - D(h)) / 3
        for a in 0..4 {
            let mut d1 = [vec![zero; width], vec![zero; width]];
            let mut d2 = [vec![zero; width], vec![zero; width]];
            for (k, s) in [1.0, 0.5].into_iter().enumerate() {
                let step = s * h[a];
                let fp = eval(shift(&[(a, step)]))?;
                let fm = eval(shift(&[(a, -step)]))?;
                for c in 0..width {
                    d1[k][c] = (fp[c] - fm[c]) / (2.0 * step);
                    d2[k][c] = (fp[c] - 2.0 * f0[c] + fm[c]) / (step * step);
                }
            }
            for c in 0..width {
                grad[a][c] = (4.0 * d1[1][c] - d1[0][c]) / 3.0;
                hess[a][a][c] = (4.0 * d2[1][c] - d2[0][c]) / 3.0;
            }
        }
        for a in 0..4 {
            for b in (a + 1)..4 {
                let mut d = [vec![zero; width], vec![zero; width]];
                for (k, s) in [1.0, 0.5].into_iter().enumerate() {
                    let (sa, sb) = (s * h[a], s * h[b]);
                    let fpp = eval(shift(&[(a, sa), (b, sb)]))?;
                    let fpm = eval(shift(&[(a, sa), (b, -sb)]))?;
                    let fmp = eval(shift(&[(a, -sa), (b, sb)]))?;
                    let fmm = eval(shift(&[(a, -sa), (b, -sb)]))?;
                    for c in 0..width {
                        d[k][c] = (fpp[c] - fpm[c] - fmp[c] + fmm[c]) / (4.0 * sa * sb);
                    }
                }
                for c in 0..width {
                    let v = (4.0 * d[1][c] - d[0][c]) / 3.0;
                    hess[a][b][c] = v;
                    hess[b][a][c] = v;
                }
            }
        }
        Ok(RealJet {
            value: f0,
            grad,
            hess,
        })
    }
}

struct RealJet {
    value: Vec<Complex64>,
    grad: [Vec<Complex64>; 4],
    hess: [[Vec<Complex64>; 4]; 4],
}

fn wirtinger_block(hess: impl Fn(usize, usize) -> Complex64) -> SecondDerivativeBlock {
    let mut out = SecondDerivativeBlock::zero();
    for s in Slot::ALL {
        let ws = s.weights();
        for t in Slot::ALL {
            let wt = t.weights();
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..4 {
                if ws[a].norm_sqr() == 0.0 {
                    continue;
                }
                for b in 0..4 {
                    if wt[b].norm_sqr() == 0.0 {
                        continue;
                    }
                    acc += ws[a] * wt[b] * hess(a, b);
                }
            }
            out.entries[s.index()][t.index()] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metricfield::field::Mode;

    fn scalar(text: &str) -> HermitianMetricField {
        HermitianMetricField::parse_upper(1, &[((0, 0), text)], Mode::Product).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn constant_entry_has_zero_derivatives() {
        let m = scalar("3.5");
        let patch = Patch::unit_cube();
        let eng = DerivativeEngine::new(&m, &patch, FiniteDifference::default());
        let p = [0.5; 4];
        for s in Slot::ALL {
            assert_eq!(
                eng.wirtinger_derivative(&p, (0, 0), s).unwrap(),
                Complex64::new(0.0, 0.0)
            );
        }
        assert_eq!(
            eng.second_derivative_block(&p, (0, 0)).unwrap().max_abs(),
            0.0
        );
    }

    #[test]
    fn real_part_of_z1() {
        let m = scalar("x1");
        let patch = Patch::unit_cube();
        let eng = DerivativeEngine::new(&m, &patch, FiniteDifference::default());
        let d = eng
            .wirtinger_derivative(&[0.3, 0.4, 0.5, 0.5], (0, 0), Slot::Z1)
            .unwrap();
        assert!(close(d, Complex64::new(0.5, 0.0), 1e-12));
        let d = eng
            .wirtinger_derivative(&[0.3, 0.4, 0.5, 0.5], (0, 0), Slot::ZBar1)
            .unwrap();
        assert!(close(d, Complex64::new(0.5, 0.0), 1e-12));
    }

    #[test]
    fn modulus_squared_of_z1() {
        let m = scalar("x1^2 + y1^2");
        let patch = Patch::new([(0.0, 2.0), (-1.0, 1.0), (0.0, 1.0), (0.0, 1.0)]).unwrap();
        let eng = DerivativeEngine::new(&m, &patch, FiniteDifference::default());
        let p = [1.0, 0.0, 0.5, 0.5];
        let d = eng.wirtinger_derivative(&p, (0, 0), Slot::Z1).unwrap();
        assert!(close(d, Complex64::new(1.0, 0.0), 1e-10));

        let block = eng.second_derivative_block(&p, (0, 0)).unwrap();
        for a in Slot::ALL {
            for b in Slot::ALL {
                let expected = match (a, b) {
                    (Slot::Z1, Slot::ZBar1) | (Slot::ZBar1, Slot::Z1) => 1.0,
                    _ => 0.0,
                };
                assert!(
                    close(block.get(a, b), Complex64::new(expected, 0.0), 1e-8),
                    "{a:?} {b:?}"
                );
            }
        }
    }

    #[test]
    fn mixed_bilinear_block() {
        let eps = 0.1;
        let m = scalar("1 + 0.1*x1*x2");
        let patch = Patch::unit_cube();
        let eng = DerivativeEngine::new(&m, &patch, FiniteDifference::default());
        let block = eng
            .second_derivative_block(&[0.4, 0.6, 0.2, 0.7], (0, 0))
            .unwrap();
        for row in block.pure_first().iter().chain(block.pure_second().iter()) {
            for v in row {
                assert!(v.norm() < 1e-8);
            }
        }
        for row in block.upper_right().iter().chain(block.lower_left().iter()) {
            for v in row {
                assert!(close(*v, Complex64::new(eps / 4.0, 0.0), 1e-8));
            }
        }
    }

    #[test]
    fn stencil_error_near_open_boundary() {
        let m = scalar("x1");
        let patch = Patch::unit_cube();
        let eng = DerivativeEngine::new(&m, &patch, FiniteDifference::default());
        let err = eng
            .wirtinger_derivative(&[0.0, 0.5, 0.5, 0.5], (0, 0), Slot::Z1)
            .unwrap_err();
        assert!(matches!(err, MetricError::Stencil { axis: 0, .. }));

        let periodic = Patch::unit_cube().with_periodic([true, true]);
        let m = scalar("cos(2*pi*x1)");
        let eng = DerivativeEngine::new(&m, &periodic, FiniteDifference::default());
        let d = eng
            .wirtinger_derivative(&[0.0, 0.5, 0.5, 0.5], (0, 0), Slot::Z1)
            .unwrap();
        assert!(d.norm() < 1e-9);
    }

    #[test]
    fn jet_matches_componentwise_calls() {
        let m = HermitianMetricField::parse_upper(
            2,
            &[
                ((0, 0), "exp(x1*y2)"),
                ((0, 1), "i*x1*x2 + y1"),
                ((1, 1), "2 + sin(x2)"),
            ],
            Mode::Product,
        )
        .unwrap();
        let patch = Patch::unit_cube();
        let eng = DerivativeEngine::new(&m, &patch, FiniteDifference::default());
        let p = [0.3, 0.6, 0.45, 0.2];
        let jet = eng.jet(&p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let block = eng.second_derivative_block(&p, (i, j)).unwrap();
                assert_eq!(&block, jet.block(i, j));
                for s in Slot::ALL {
                    let d = eng.wirtinger_derivative(&p, (i, j), s).unwrap();
                    assert_eq!(d, jet.first(s, i, j));
                }
            }
        }
    }

    #[test]
    fn component_out_of_range() {
        let m = scalar("1");
        let patch = Patch::unit_cube();
        let eng = DerivativeEngine::new(&m, &patch, FiniteDifference::default());
        assert!(matches!(
            eng.second_derivative_block(&[0.5; 4], (1, 0)),
            Err(MetricError::Component(1, 0, 1))
        ));
    }
}
