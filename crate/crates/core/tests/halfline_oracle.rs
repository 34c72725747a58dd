//! Independent brute force over the half-line grid: the metric and controls
//! are re-typed here from their definitions, in plain `f64` arithmetic, and
//! the violating triples are compared with what the falsifier reports.

use std::collections::BTreeSet;

use conemetric::spaces::{make_halfline_space, Point};
use conemetric::verification::{verify_cm, verify_controlled, verify_dcm, AxiomId, Mode, Verdict};

const GRID: [f64; 10] = [0.0, 0.25, 0.5, 0.75, 0.9, 1.0, 1.5, 2.0, 3.0, 5.0];
const TOL: f64 = 1e-12;

fn p(x: f64, y: f64) -> [f64; 2] {
    if x == y {
        [0.0, 0.0]
    } else if x >= 1.0 && y < 1.0 {
        [1.0 / x, 1.0 / 3.0]
    } else if x < 1.0 && y >= 1.0 {
        [1.0 / 3.0, 1.0 / y]
    } else {
        [1.0, 1.0]
    }
}

fn alpha(x: f64, y: f64) -> f64 {
    if x >= 1.0 && y >= 1.0 {
        x
    } else {
        1.0
    }
}

fn beta(x: f64, y: f64) -> f64 {
    if x < 1.0 && y < 1.0 {
        1.0
    } else {
        x.max(y)
    }
}

type Key = (u64, u64, u64);

fn oracle(coeffs: impl Fn(f64, f64, f64) -> (f64, f64)) -> BTreeSet<Key> {
    let mut out = BTreeSet::new();
    for &x in &GRID {
        for &z in &GRID {
            for &y in &GRID {
                let (a, b) = coeffs(x, z, y);
                let (l, r1, r2) = (p(x, y), p(x, z), p(z, y));
                if (0..2).any(|i| l[i] - (a * r1[i] + b * r2[i]) > TOL) {
                    out.insert((x.to_bits(), z.to_bits(), y.to_bits()));
                }
            }
        }
    }
    out
}

fn reported(report: &conemetric::verification::AxiomReport) -> BTreeSet<Key> {
    let t = |p: Point| match p {
        Point::HalfLine(v) => v.to_bits(),
        other => panic!("unexpected point {other:?}"),
    };
    report
        .violations
        .iter()
        .map(|v| {
            let (x, z, y) = v.triple().expect("triangle witness");
            (t(x), t(z), t(y))
        })
        .collect()
}

#[test]
fn dcm3_matches_brute_force() {
    let s = make_halfline_space();
    let suite = verify_dcm(&s, Mode::Exhaustive);
    let r = suite.get(AxiomId::DCM3).unwrap();
    let expected = oracle(|x, z, y| (alpha(x, z), beta(z, y)));
    assert_eq!(r.checked, 1000);
    assert_eq!(reported(r), expected);
    assert_eq!(r.verdict == Verdict::Fail, !expected.is_empty());
    // Desk analysis: (3, 1/2, 1) has RHS (1/3 + 1/3, 1/3 + 1) = (2/3, 4/3).
    assert!(expected.contains(&(3f64.to_bits(), 0.5f64.to_bits(), 1f64.to_bits())));
}

#[test]
fn ccm3_matches_brute_force() {
    let s = make_halfline_space();
    let r = verify_controlled(&s, Mode::Exhaustive);
    let expected = oracle(|x, z, y| (alpha(x, z), alpha(z, y)));
    assert_eq!(reported(&r), expected);
    assert!(expected.contains(&(0f64.to_bits(), 3f64.to_bits(), 0.5f64.to_bits())));
}

#[test]
fn cm3_matches_brute_force() {
    let s = make_halfline_space();
    let r = verify_cm(&s, Mode::Exhaustive);
    assert_eq!(reported(&r), oracle(|_, _, _| (1.0, 1.0)));
}

#[test]
fn halfline_is_not_symmetric() {
    let s = make_halfline_space();
    let suite = verify_dcm(&s, Mode::Exhaustive);
    let r = suite.get(AxiomId::DCM2).unwrap();
    let asymmetric =
        GRID.iter().flat_map(|&x| GRID.iter().map(move |&y| (x, y))).filter(|&(x, y)| p(x, y) != p(y, x)).count();
    assert_eq!(r.violations.len(), asymmetric);
    assert!(asymmetric > 0);
}
