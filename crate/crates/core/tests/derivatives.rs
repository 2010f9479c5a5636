use chern_core::metricfield::{
    DerivativeEngine, FiniteDifference, HermitianMetricField, Mode, Patch, SecondDerivativeBlock,
    Slot,
};
use num_complex::Complex64;
use proptest::prelude::*;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Hand-derived Wirtinger derivatives, ordered `(z1, zbar1, z2, zbar2)`.
struct ClosedForm {
    text: &'static str,
    first: fn(&[f64; 4]) -> [C; 4],
    second: fn(&[f64; 4]) -> [[C; 4]; 4],
}

fn corpus() -> Vec<ClosedForm> {
    vec![
        ClosedForm {
            text: "x1*x2",
            first: |p| [c(p[2] / 2.0), c(p[2] / 2.0), c(p[0] / 2.0), c(p[0] / 2.0)],
            second: |_| {
                let q = c(0.25);
                let z = c(0.0);
                [[z, z, q, q], [z, z, q, q], [q, q, z, z], [q, q, z, z]]
            },
        },
        ClosedForm {
            text: "x1^2 + y1^2",
            // d_z |z|² = zbar, d_zbar |z|² = z
            first: |p| [C::new(p[0], -p[1]), C::new(p[0], p[1]), c(0.0), c(0.0)],
            second: |_| {
                let z = c(0.0);
                let o = c(1.0);
                [[z, o, z, z], [o, z, z, z], [z, z, z, z], [z, z, z, z]]
            },
        },
        ClosedForm {
            text: "exp(x1)",
            first: |p| {
                let h = c(p[0].exp() / 2.0);
                [h, h, c(0.0), c(0.0)]
            },
            second: |p| {
                let q = c(p[0].exp() / 4.0);
                let z = c(0.0);
                [[q, q, z, z], [q, q, z, z], [z, z, z, z], [z, z, z, z]]
            },
        },
        ClosedForm {
            text: "sin(x2)",
            first: |p| {
                let h = c(p[2].cos() / 2.0);
                [c(0.0), c(0.0), h, h]
            },
            second: |p| {
                let q = c(-p[2].sin() / 4.0);
                let z = c(0.0);
                [[z, z, z, z], [z, z, z, z], [z, z, q, q], [z, z, q, q]]
            },
        },
    ]
}

fn metric(text: &str) -> HermitianMetricField {
    HermitianMetricField::parse_upper(1, &[((0, 0), text)], Mode::Product).unwrap()
}

fn sample_points() -> Vec<[f64; 4]> {
    vec![
        [0.5, 0.5, 0.5, 0.5],
        [0.3, 0.7, 0.6, 0.2],
        [0.81, 0.13, 0.27, 0.66],
    ]
}

fn rel_err(approx: C, exact: C) -> f64 {
    (approx - exact).norm() / exact.norm().max(1.0)
}

#[test]
fn corpus_matches_closed_forms_at_default_step() {
    let patch = Patch::unit_cube();
    for f in corpus() {
        let m = metric(f.text);
        let engine = DerivativeEngine::new(&m, &patch, FiniteDifference::new(1e-3));
        for p in sample_points() {
            let first = (f.first)(&p);
            let second = (f.second)(&p);
            for s in Slot::ALL {
                let d = engine.wirtinger_derivative(&p, (0, 0), s).unwrap();
                assert!(
                    rel_err(d, first[s.index()]) <= 1e-7,
                    "{} {:?} at {p:?}: {d}",
                    f.text,
                    s
                );
            }
            let block = engine.second_derivative_block(&p, (0, 0)).unwrap();
            for a in Slot::ALL {
                for b in Slot::ALL {
                    let d = block.get(a, b);
                    let e = second[a.index()][b.index()];
                    assert!(
                        rel_err(d, e) <= 1e-7,
                        "{} {:?}{:?} at {p:?}: {d} vs {e}",
                        f.text,
                        a,
                        b
                    );
                }
            }
        }
    }
}

fn worst_errors(f: &ClosedForm, patch: &Patch, rel_step: f64, p: &[f64; 4]) -> (f64, f64) {
    let m = metric(f.text);
    let engine = DerivativeEngine::new(&m, patch, FiniteDifference::new(rel_step));
    let first = (f.first)(p);
    let second = (f.second)(p);
    let mut e1 = 0.0f64;
    let mut e2 = 0.0f64;
    for s in Slot::ALL {
        let d = engine.wirtinger_derivative(p, (0, 0), s).unwrap();
        e1 = e1.max((d - first[s.index()]).norm());
    }
    let block = engine.second_derivative_block(p, (0, 0)).unwrap();
    for a in Slot::ALL {
        for b in Slot::ALL {
            e2 = e2.max((block.get(a, b) - second[a.index()][b.index()]).norm());
        }
    }
    (e1, e2)
}

// Polynomial members are differentiated exactly up to rounding, so the
// refinement ratio is measured on the transcendental members, with steps
// large enough that truncation dominates rounding.
#[test]
fn richardson_error_drops_at_least_eightfold() {
    let patch = Patch::new([(-1.0, 1.0); 4])
        .unwrap()
        .with_margin(1.0)
        .unwrap();
    let p = [0.3, -0.2, 0.4, 0.1];
    for f in corpus().iter().filter(|f| f.text.contains('(')) {
        let (a1, a2) = worst_errors(f, &patch, 0.1, &p);
        let (b1, b2) = worst_errors(f, &patch, 0.05, &p);
        assert!(a1 / b1 >= 8.0, "{} first: {a1} -> {b1}", f.text);
        assert!(a2 / b2 >= 8.0, "{} second: {a2} -> {b2}", f.text);
    }
}

#[test]
fn polynomial_members_sit_at_rounding_floor() {
    let patch = Patch::new([(-1.0, 1.0); 4])
        .unwrap()
        .with_margin(1.0)
        .unwrap();
    let p = [0.3, -0.2, 0.4, 0.1];
    for f in corpus().iter().filter(|f| !f.text.contains('(')) {
        let (e1, e2) = worst_errors(f, &patch, 0.1, &p);
        assert!(e1 <= 1e-12 && e2 <= 1e-12, "{}: {e1} {e2}", f.text);
    }
}

fn block_of(text: &str, p: &[f64; 4]) -> SecondDerivativeBlock {
    let m = metric(text);
    let patch = Patch::new([(-1.0, 1.0); 4]).unwrap();
    DerivativeEngine::new(&m, &patch, FiniteDifference::default())
        .second_derivative_block(p, (0, 0))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_partials_commute_and_conjugate(
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        k in -1.0f64..1.0,
        p in proptest::array::uniform4(-0.8f64..0.8),
    ) {
        let text = format!("{a}*x1*y2 + {b}*sin(x2)*y1 + {k}*exp(x1*y1) + x2^2*y2");
        let blk = block_of(&text, &p);
        for s in Slot::ALL {
            for t in Slot::ALL {
                let v = blk.get(s, t);
                prop_assert!((v - blk.get(t, s)).norm() <= 1e-7);
                // a real function has d_conj(s) d_conj(t) f = conj(d_s d_t f)
                prop_assert!((v.conj() - blk.get(s.conjugate(), t.conjugate())).norm() <= 1e-7);
            }
        }
    }
}
