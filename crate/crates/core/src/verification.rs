//! Falsification of the metric axioms.
//!
//! The relaxed triangle inequality is checked in three strengths:
//!
//! | axiom  | inequality                                   |
//! |--------|----------------------------------------------|
//! | `DCM3` | `p(x,y) ⪯ α(x,z)·p(x,z) + β(z,y)·p(z,y)`     |
//! | `CCM3` | `p(x,y) ⪯ α(x,z)·p(x,z) + α(z,y)·p(z,y)`     |
//! | `CM3`  | `p(x,y) ⪯ p(x,z) + p(z,y)`                   |
//!
//! together with `DCM1` (`p` lies in the cone and vanishes exactly on the
//! diagonal) and `DCM2` (symmetry). A check either enumerates a space's
//! canonical grid or draws seeded random samples; both produce an
//! [`AxiomReport`] whose violations replay to genuine order failures.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ordered_space::Vector;
use crate::sampling::{chunked_streams, derive_seed, seeded};
use crate::spaces::{Point, Space};

/// Random-mode runs that find nothing with fewer samples than this are
/// reported as inconclusive.
pub const INCONCLUSIVE_FLOOR: usize = 1000;

const RANDOM_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AxiomId {
    DCM1,
    DCM2,
    DCM3,
    CCM3,
    CM3,
    C1,
    C2,
    C3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// A witness coordinate: a domain point for metric axioms, a vector of `E`
/// for cone axioms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    Point(Point),
    Vector(Vector),
}

impl Witness {
    fn cmp_key(&self, other: &Witness) -> Ordering {
        match (self, other) {
            (Witness::Point(a), Witness::Point(b)) => a.total_cmp(b),
            (Witness::Vector(a), Witness::Vector(b)) => cmp_slices(a.coords(), b.coords()),
            (Witness::Point(_), Witness::Vector(_)) => Ordering::Less,
            (Witness::Vector(_), Witness::Point(_)) => Ordering::Greater,
        }
    }

    pub fn as_point(&self) -> Option<&Point> {
        match self {
            Witness::Point(p) => Some(p),
            Witness::Vector(_) => None,
        }
    }
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or_else(|| a.len().cmp(&b.len()))
}

fn cmp_opt(a: &Option<Witness>, b: &Option<Witness>) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a.cmp_key(b),
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
    }
}

/// One counterexample. For triangle axioms `(x, z, y)` is the triple with `z`
/// the intermediate point; pair axioms leave `z` empty; for `C2` the `z` slot
/// carries the coefficient pair `(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Witness,
    pub z: Option<Witness>,
    pub y: Option<Witness>,
    pub lhs: Vector,
    pub rhs: Vector,
    /// Largest coordinate excess; ranks violations.
    pub margin: f64,
}

impl Violation {
    pub(crate) fn single(x: Witness, lhs: Vector, rhs: Vector, margin: f64) -> Self {
        Violation { x, z: None, y: None, lhs, rhs, margin }
    }

    fn pair(x: Point, y: Point, lhs: Vector, rhs: Vector, margin: f64) -> Self {
        Violation { x: Witness::Point(x), z: None, y: Some(Witness::Point(y)), lhs, rhs, margin }
    }

    fn order(&self, other: &Violation) -> Ordering {
        other
            .margin
            .total_cmp(&self.margin)
            .then_with(|| self.x.cmp_key(&other.x))
            .then_with(|| cmp_opt(&self.z, &other.z))
            .then_with(|| cmp_opt(&self.y, &other.y))
    }

    /// The witness as a point triple `(x, z, y)`, if it is one.
    pub fn triple(&self) -> Option<(Point, Point, Point)> {
        let x = *self.x.as_point()?;
        let z = *self.z.as_ref()?.as_point()?;
        let y = *self.y.as_ref()?.as_point()?;
        Some((x, z, y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: AxiomId,
    pub checked: usize,
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
}

impl AxiomReport {
    pub fn new(axiom: AxiomId) -> Self {
        AxiomReport { axiom, checked: 0, verdict: Verdict::Pass, violations: Vec::new() }
    }

    pub(crate) fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    /// Combines partial reports for the same axiom. The result does not depend
    /// on merge order once [`finalize`](Self::finalize) has run.
    pub fn merge(mut self, other: AxiomReport) -> AxiomReport {
        debug_assert_eq!(self.axiom, other.axiom);
        self.checked += other.checked;
        self.violations.extend(other.violations);
        self
    }

    /// Sorts violations and sets the verdict. `random_n` is the sample count
    /// for random-mode runs, which may turn an empty pass into inconclusive.
    pub fn finalize(&mut self, random_n: Option<usize>) {
        self.violations.sort_by(|a, b| a.order(b));
        self.verdict = if !self.violations.is_empty() {
            Verdict::Fail
        } else if random_n.is_some_and(|n| n < INCONCLUSIVE_FLOOR) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
    }
}

/// An ordered list of reports, one per axiom.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AxiomSuite {
    reports: Vec<AxiomReport>,
}

impl AxiomSuite {
    pub fn push(&mut self, report: AxiomReport) {
        self.reports.push(report);
    }

    pub fn extend(&mut self, other: AxiomSuite) {
        self.reports.extend(other.reports);
    }

    pub fn get(&self, axiom: AxiomId) -> Option<&AxiomReport> {
        self.reports.iter().find(|r| r.axiom == axiom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AxiomReport> {
        self.reports.iter()
    }

    /// No report failed.
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn total_violations(&self) -> usize {
        self.reports.iter().map(|r| r.violations.len()).sum()
    }

    pub fn into_reports(self) -> Vec<AxiomReport> {
        self.reports
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every pair and ordered triple of the space's canonical grid.
    Exhaustive,
    /// `n` uniform random samples from the whole domain.
    Random { n: usize, seed: u64 },
    /// `n` random samples drawn from the canonical grid.
    RandomGrid { n: usize, seed: u64 },
}

impl Mode {
    fn random_n(&self) -> Option<usize> {
        match *self {
            Mode::Exhaustive => None,
            Mode::Random { n, .. } | Mode::RandomGrid { n, .. } => Some(n),
        }
    }
}

/// Which coefficients multiply the two legs of the triangle inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Controls {
    /// `α(x, z)` and `β(z, y)`.
    Double,
    /// `α(x, z)` and `α(z, y)`.
    Single,
    /// Both 1.
    Unit,
}

impl Controls {
    fn axiom(self) -> AxiomId {
        match self {
            Controls::Double => AxiomId::DCM3,
            Controls::Single => AxiomId::CCM3,
            Controls::Unit => AxiomId::CM3,
        }
    }

    fn of(axiom: AxiomId) -> Option<Controls> {
        match axiom {
            AxiomId::DCM3 => Some(Controls::Double),
            AxiomId::CCM3 => Some(Controls::Single),
            AxiomId::CM3 => Some(Controls::Unit),
            _ => None,
        }
    }
}

/// Evaluates both sides of the triangle inequality at `(x, z, y)` and returns
/// a violation if `lhs ⪯ rhs` fails.
pub fn triangle_violation(s: &Space, controls: Controls, x: &Point, z: &Point, y: &Point) -> Option<Violation> {
    let lhs = s.metric(x, y).ok()?;
    let (c1, c2) = match controls {
        Controls::Double => (s.alpha(x, z).ok()?, s.beta(z, y).ok()?),
        Controls::Single => (s.alpha(x, z).ok()?, s.alpha(z, y).ok()?),
        Controls::Unit => (1.0, 1.0),
    };
    let rhs = &(c1 * &s.metric(x, z).ok()?) + &(c2 * &s.metric(z, y).ok()?);
    let margin = excess(&lhs, &rhs);
    (margin > s.target().cone.boundary_tol).then_some(Violation {
        x: Witness::Point(*x),
        z: Some(Witness::Point(*z)),
        y: Some(Witness::Point(*y)),
        lhs,
        rhs,
        margin,
    })
}

/// `max(lhsᵢ − rhsᵢ)`: positive exactly when `lhs ⪯ rhs` fails in the
/// orthant order.
fn excess(lhs: &Vector, rhs: &Vector) -> f64 {
    lhs.coords().iter().zip(rhs.coords()).fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b))
}

fn check_dcm1(s: &Space, x: &Point, y: &Point, report: &mut AxiomReport) {
    report.checked += 1;
    let p = s.metric(x, y).expect("sampled points lie in the space");
    let cone = &s.target().cone;
    let zero = Vector::zeros(p.dim());
    let outside = cone.membership_margin(&p).expect("metric matches target dimension");
    if outside > cone.boundary_tol {
        report.push(Violation::pair(*x, *y, p, zero, outside));
    } else if x == y && !p.is_zero() {
        let m = p.max_abs();
        report.push(Violation::pair(*x, *y, p, zero, m));
    } else if x != y && p.is_zero() {
        report.push(Violation::pair(*x, *y, p, zero, 0.0));
    }
}

fn check_dcm2(s: &Space, x: &Point, y: &Point, report: &mut AxiomReport) {
    report.checked += 1;
    let pxy = s.metric(x, y).expect("sampled points lie in the space");
    let pyx = s.metric(y, x).expect("sampled points lie in the space");
    if pxy != pyx {
        let m = (&pxy - &pyx).max_abs();
        report.push(Violation::pair(*x, *y, pxy, pyx, m));
    }
}

fn check_triangle(s: &Space, controls: Controls, x: &Point, z: &Point, y: &Point, report: &mut AxiomReport) {
    report.checked += 1;
    if let Some(v) = triangle_violation(s, controls, x, z, y) {
        report.push(v);
    }
}

/// Runs `f` on every pair the mode selects, in parallel, and merges.
fn over_pairs(
    s: &Space,
    mode: Mode,
    axiom: AxiomId,
    stream: u64,
    f: impl Fn(&Point, &Point, &mut AxiomReport) + Sync,
) -> AxiomReport {
    let grid = s.grid();
    let partials: Vec<AxiomReport> = match mode {
        Mode::Exhaustive => grid
            .par_iter()
            .map(|x| {
                let mut r = AxiomReport::new(axiom);
                grid.iter().for_each(|y| f(x, y, &mut r));
                r
            })
            .collect(),
        Mode::Random { n, seed } | Mode::RandomGrid { n, seed } => {
            chunked_streams(derive_seed(seed, stream), n, RANDOM_CHUNK)
                .into_par_iter()
                .map(|(chunk_seed, len)| {
                    let mut rng = seeded(chunk_seed);
                    let mut r = AxiomReport::new(axiom);
                    for _ in 0..len {
                        let (x, y) = match mode {
                            Mode::RandomGrid { .. } => (pick(&grid, &mut rng), pick(&grid, &mut rng)),
                            _ => (s.sample_point(&mut rng), s.sample_point(&mut rng)),
                        };
                        f(&x, &y, &mut r);
                    }
                    r
                })
                .collect()
        }
    };
    let mut out = partials.into_iter().fold(AxiomReport::new(axiom), AxiomReport::merge);
    out.finalize(mode.random_n());
    out
}

fn over_triples(s: &Space, mode: Mode, controls: Controls) -> AxiomReport {
    let axiom = controls.axiom();
    let grid = s.grid();
    let partials: Vec<AxiomReport> = match mode {
        Mode::Exhaustive => grid
            .par_iter()
            .map(|x| {
                let mut r = AxiomReport::new(axiom);
                for z in &grid {
                    for y in &grid {
                        check_triangle(s, controls, x, z, y, &mut r);
                    }
                }
                r
            })
            .collect(),
        Mode::Random { n, seed } | Mode::RandomGrid { n, seed } => {
            chunked_streams(derive_seed(seed, 3), n, RANDOM_CHUNK)
                .into_par_iter()
                .map(|(chunk_seed, len)| {
                    let mut rng = seeded(chunk_seed);
                    let mut r = AxiomReport::new(axiom);
                    for _ in 0..len {
                        let [x, z, y] = match mode {
                            Mode::RandomGrid { .. } => [0; 3].map(|_| pick(&grid, &mut rng)),
                            _ => [0; 3].map(|_| s.sample_point(&mut rng)),
                        };
                        check_triangle(s, controls, &x, &z, &y, &mut r);
                    }
                    r
                })
                .collect()
        }
    };
    let mut out = partials.into_iter().fold(AxiomReport::new(axiom), AxiomReport::merge);
    out.finalize(mode.random_n());
    out
}

fn pick(grid: &[Point], rng: &mut crate::sampling::Rng) -> Point {
    use rand::Rng as _;
    grid[rng.random_range(0..grid.len())]
}

/// Checks `DCM1`, `DCM2` on pairs and `DCM3` on ordered triples `(x, z, y)`.
///
/// Exhaustive mode enumerates all `n³` triples of the grid; those with
/// `x = y` hold trivially and are kept as sanity coverage.
pub fn verify_dcm(s: &Space, mode: Mode) -> AxiomSuite {
    let mut suite = AxiomSuite::default();
    suite.push(over_pairs(s, mode, AxiomId::DCM1, 1, |x, y, r| check_dcm1(s, x, y, r)));
    suite.push(over_pairs(s, mode, AxiomId::DCM2, 2, |x, y, r| check_dcm2(s, x, y, r)));
    suite.push(over_triples(s, mode, Controls::Double));
    suite
}

/// Checks the single-control triangle inequality (`β` replaced by `α`).
pub fn verify_controlled(s: &Space, mode: Mode) -> AxiomReport {
    over_triples(s, mode, Controls::Single)
}

/// Checks the plain triangle inequality.
pub fn verify_cm(s: &Space, mode: Mode) -> AxiomReport {
    over_triples(s, mode, Controls::Unit)
}

/// Moves every off-grid witness coordinate to the nearest grid point that
/// keeps the triple violating, then re-evaluates, deduplicates and re-sorts.
///
/// Only triangle-type reports are shrunk; anything else comes back
/// unchanged, as does a report without violations. Shrinking a shrunk report
/// is a no-op.
pub fn shrink_witness(report: &AxiomReport, s: &Space) -> AxiomReport {
    let Some(controls) = Controls::of(report.axiom) else {
        return report.clone();
    };
    if report.violations.is_empty() {
        return report.clone();
    }
    let grid = s.grid();
    let mut out = AxiomReport { violations: Vec::new(), ..report.clone() };
    for v in &report.violations {
        let Some(mut triple) = v.triple() else {
            out.push(v.clone());
            continue;
        };
        for slot in 0..3 {
            let current = [triple.0, triple.1, triple.2][slot];
            if grid.contains(&current) {
                continue;
            }
            let mut candidates = grid.clone();
            candidates.sort_by(|a, b| {
                let da = (a.line_coord() - current.line_coord()).abs();
                let db = (b.line_coord() - current.line_coord()).abs();
                da.total_cmp(&db).then_with(|| a.total_cmp(b))
            });
            for c in candidates {
                let trial = match slot {
                    0 => (c, triple.1, triple.2),
                    1 => (triple.0, c, triple.2),
                    _ => (triple.0, triple.1, c),
                };
                if triangle_violation(s, controls, &trial.0, &trial.1, &trial.2).is_some() {
                    triple = trial;
                    break;
                }
            }
        }
        let replay = triangle_violation(s, controls, &triple.0, &triple.1, &triple.2)
            .expect("shrinking only accepts violating triples");
        if !out.violations.iter().any(|w| w.triple() == Some(triple)) {
            out.push(replay);
        }
    }
    let random_n = (report.verdict == Verdict::Inconclusive).then_some(0);
    out.finalize(random_n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{make_cross_space, make_halfline_space, make_interval_space, Axis, CrossControls};

    fn hl(t: f64) -> Point {
        Point::HalfLine(t)
    }

    #[test]
    fn controlled_counterexample_on_halfline() {
        let r = verify_controlled(&make_halfline_space(), Mode::Exhaustive);
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r
            .violations
            .iter()
            .find(|v| v.triple() == Some((hl(0.0), hl(3.0), hl(0.5))))
            .expect("counterexample (0, 3, 1/2) is found");
        assert_eq!(w.lhs, Vector::pair(1.0, 1.0));
        assert!((w.rhs.coords()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w.rhs.coords()[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn plain_triangle_fails_on_halfline() {
        let r = verify_cm(&make_halfline_space(), Mode::Exhaustive);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.violations.iter().any(|v| v.triple() == Some((hl(0.0), hl(3.0), hl(0.5)))));
    }

    #[test]
    fn unit_control_spaces_pass() {
        for s in [make_cross_space(CrossControls::Unit), make_interval_space()] {
            assert!(verify_dcm(&s, Mode::Exhaustive).passed());
            assert_eq!(verify_controlled(&s, Mode::Exhaustive).verdict, Verdict::Pass);
            assert_eq!(verify_cm(&s, Mode::Exhaustive).verdict, Verdict::Pass);
        }
    }

    #[test]
    fn exhaustive_counts() {
        let s = make_halfline_space();
        let suite = verify_dcm(&s, Mode::Exhaustive);
        assert_eq!(suite.get(AxiomId::DCM1).unwrap().checked, 100);
        assert_eq!(suite.get(AxiomId::DCM3).unwrap().checked, 1000);
    }

    #[test]
    fn small_random_runs_are_inconclusive() {
        let s = make_interval_space();
        let r = verify_cm(&s, Mode::Random { n: 10, seed: 0 });
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.checked, 10);
    }

    #[test]
    fn every_violation_replays() {
        let s = make_halfline_space();
        for controls in [Controls::Double, Controls::Single, Controls::Unit] {
            let r = over_triples(&s, Mode::Random { n: 3000, seed: 5 }, controls);
            for v in &r.violations {
                let (x, z, y) = v.triple().unwrap();
                assert!(!s.target().leq(&v.lhs, &v.rhs).unwrap());
                assert_eq!(triangle_violation(&s, controls, &x, &z, &y).as_ref(), Some(v));
            }
        }
    }

    #[test]
    fn shrink_moves_to_grid() {
        let s = make_halfline_space();
        let v = triangle_violation(&s, Controls::Single, &hl(0.0), &hl(2.987), &hl(0.5)).unwrap();
        let mut report = AxiomReport::new(AxiomId::CCM3);
        report.checked = 1;
        report.push(v);
        report.finalize(None);
        let shrunk = shrink_witness(&report, &s);
        assert_eq!(shrunk.violations.len(), 1);
        assert_eq!(shrunk.violations[0].triple(), Some((hl(0.0), hl(3.0), hl(0.5))));
        assert_eq!(shrink_witness(&shrunk, &s), shrunk);
    }

    #[test]
    fn shrink_leaves_grid_witnesses_and_passes_alone() {
        let s = make_halfline_space();
        let r = verify_controlled(&s, Mode::Exhaustive);
        assert_eq!(shrink_witness(&r, &s), r);

        let pass = verify_cm(&make_interval_space(), Mode::Exhaustive);
        assert_eq!(shrink_witness(&pass, &make_interval_space()), pass);

        let dcm2 = verify_dcm(&s, Mode::Exhaustive).get(AxiomId::DCM2).unwrap().clone();
        assert_eq!(shrink_witness(&dcm2, &s), dcm2);
    }

    #[test]
    fn cross_origin_witness_sorting_is_total() {
        let a = Witness::Point(Point::cross(Axis::V, 0.5).unwrap());
        let b = Witness::Point(Point::cross(Axis::H, 0.5).unwrap());
        assert_eq!(a.cmp_key(&b), Ordering::Less);
        assert_eq!(b.cmp_key(&a), Ordering::Greater);
    }

    #[test]
    fn merge_order_does_not_matter() {
        let s = make_halfline_space();
        let full = verify_cm(&s, Mode::Exhaustive);
        let mut halves = full.violations.clone();
        let tail = halves.split_off(halves.len() / 2);
        let a = AxiomReport { axiom: AxiomId::CM3, checked: 600, verdict: Verdict::Pass, violations: tail };
        let b = AxiomReport { axiom: AxiomId::CM3, checked: 400, verdict: Verdict::Pass, violations: halves };
        let mut merged = a.merge(b);
        merged.finalize(None);
        assert_eq!(merged, full);
    }
}
