//! Concrete double controlled cone metric spaces and the self-maps that act
//! on them.
//!
//! Three spaces ship, all valued in `R²` with the orthant order:
//!
//! * `halfline`: `X = [0, ∞)` with a piecewise metric and the controls
//!   `α(x, y) = x` when both arguments are `≥ 1` (else 1) and
//!   `β(x, y) = 1` when both are `< 1` (else `max{x, y}`). The definition is
//!   reproduced exactly as written, including its asymmetric branches; the
//!   falsifier in [`crate::verification`] reports what it finds.
//! * `cross` / `cross-unit`: the union of the unit segments on the two
//!   coordinate axes, with controls `max{1/x, 1/y}` and `1/x + 1/y` or
//!   constant 1.
//! * `interval`: `[0, 1]` with `p(x, y) = (|x − y|, |x − y|)` and unit
//!   controls. This one is an extra test bed for Kannan-type maps.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ordered_space::{OrderedSpace, Vector};
use crate::sampling::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    H,
    V,
}

/// A point of one of the shipped domains.
///
/// The cross origin is stored on the `H` axis; [`Point::cross`] enforces
/// this, so `(0, 0)` has exactly one representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", try_from = "RawPoint", into = "RawPoint")]
pub enum Point {
    HalfLine(f64),
    Cross { axis: Axis, t: f64 },
    Interval(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawPoint {
    HalfLine(f64),
    Cross { axis: Axis, t: f64 },
    Interval(f64),
}

impl TryFrom<RawPoint> for Point {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        match raw {
            RawPoint::HalfLine(t) => Point::half_line(t),
            RawPoint::Cross { axis, t } => Point::cross(axis, t),
            RawPoint::Interval(t) => Point::interval(t),
        }
    }
}

impl From<Point> for RawPoint {
    fn from(p: Point) -> Self {
        match p {
            Point::HalfLine(t) => RawPoint::HalfLine(t),
            Point::Cross { axis, t } => RawPoint::Cross { axis, t },
            Point::Interval(t) => RawPoint::Interval(t),
        }
    }
}

impl Point {
    pub fn half_line(t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(domain(format!("half-line point {t} is not in [0, ∞)")));
        }
        Ok(Point::HalfLine(t))
    }

    pub fn cross(axis: Axis, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(domain(format!("cross point {t} is not in [0, 1]")));
        }
        let axis = if t == 0.0 { Axis::H } else { axis };
        // Also folds -0.0 into 0.0.
        Ok(Point::Cross { axis, t: t + 0.0 })
    }

    pub fn interval(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(domain(format!("interval point {t} is not in [0, 1]")));
        }
        Ok(Point::Interval(t))
    }

    pub fn kind(&self) -> PointKind {
        match self {
            Point::HalfLine(_) => PointKind::HalfLine,
            Point::Cross { .. } => PointKind::Cross,
            Point::Interval(_) => PointKind::Interval,
        }
    }

    /// Position along the domain read as a line: the cross `H` arm is the
    /// positive half, the `V` arm the negative half.
    pub fn line_coord(&self) -> f64 {
        match *self {
            Point::HalfLine(t) | Point::Interval(t) => t,
            Point::Cross { axis: Axis::H, t } => t,
            Point::Cross { axis: Axis::V, t } => -t,
        }
    }

    /// Total order used to sort witnesses deterministically.
    pub fn total_cmp(&self, other: &Point) -> Ordering {
        (self.kind() as u8).cmp(&(other.kind() as u8)).then_with(|| self.line_coord().total_cmp(&other.line_coord()))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::HalfLine(t) | Point::Interval(t) => write!(f, "{t}"),
            Point::Cross { axis, t } => write!(f, "{axis:?}:{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointKind {
    HalfLine,
    Cross,
    Interval,
}

impl PointKind {
    /// Parses a command-line point literal: `H:0.5` / `V:0.25` on the cross,
    /// a plain decimal elsewhere.
    pub fn parse(&self, s: &str) -> Result<Point> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{t}`")));
        match self {
            PointKind::HalfLine => Point::half_line(num(s)?),
            PointKind::Interval => Point::interval(num(s)?),
            PointKind::Cross => {
                let (axis, t) = s
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("cross point `{s}` must look like H:0.5 or V:0.5")))?;
                let axis = match axis.trim() {
                    "H" | "h" => Axis::H,
                    "V" | "v" => Axis::V,
                    other => return Err(Error::Parse(format!("unknown axis `{other}`"))),
                };
                Point::cross(axis, num(t)?)
            }
        }
    }
}

/// Which pair of control functions the cross space carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossControls {
    /// `α = max{1/x, 1/y}`, `β = 1/x + 1/y`.
    Reciprocal,
    /// `α = β = 1`.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceId {
    #[serde(rename = "halfline")]
    HalfLine,
    #[serde(rename = "cross")]
    Cross,
    #[serde(rename = "cross-unit")]
    CrossUnit,
    #[serde(rename = "interval")]
    Interval,
}

impl SpaceId {
    pub const ALL: [SpaceId; 4] = [SpaceId::HalfLine, SpaceId::Cross, SpaceId::CrossUnit, SpaceId::Interval];

    pub fn as_str(&self) -> &'static str {
        match self {
            SpaceId::HalfLine => "halfline",
            SpaceId::Cross => "cross",
            SpaceId::CrossUnit => "cross-unit",
            SpaceId::Interval => "interval",
        }
    }
}

impl FromStr for SpaceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpaceId::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| Error::UnknownId(s.to_string()))
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A domain with its cone-valued metric `p` and control functions `α`, `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    id: SpaceId,
    target: OrderedSpace,
}

const HALFLINE_GRID: [f64; 10] = [0.0, 0.25, 0.5, 0.75, 0.9, 1.0, 1.5, 2.0, 3.0, 5.0];
const UNIT_GRID_STEPS: u32 = 20;
const HALFLINE_SAMPLE_MAX: f64 = 6.0;

pub fn make_halfline_space() -> Space {
    Space { id: SpaceId::HalfLine, target: OrderedSpace::plane() }
}

pub fn make_cross_space(controls: CrossControls) -> Space {
    let id = match controls {
        CrossControls::Reciprocal => SpaceId::Cross,
        CrossControls::Unit => SpaceId::CrossUnit,
    };
    Space { id, target: OrderedSpace::plane() }
}

pub fn make_interval_space() -> Space {
    Space { id: SpaceId::Interval, target: OrderedSpace::plane() }
}

impl Space {
    pub fn from_id(id: SpaceId) -> Space {
        match id {
            SpaceId::HalfLine => make_halfline_space(),
            SpaceId::Cross => make_cross_space(CrossControls::Reciprocal),
            SpaceId::CrossUnit => make_cross_space(CrossControls::Unit),
            SpaceId::Interval => make_interval_space(),
        }
    }

    pub fn id(&self) -> SpaceId {
        self.id
    }

    pub fn kind(&self) -> PointKind {
        match self.id {
            SpaceId::HalfLine => PointKind::HalfLine,
            SpaceId::Cross | SpaceId::CrossUnit => PointKind::Cross,
            SpaceId::Interval => PointKind::Interval,
        }
    }

    pub fn target(&self) -> &OrderedSpace {
        &self.target
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.kind() == self.kind()
    }

    fn check(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(domain(format!("point {p} is not in the {} space", self.id)))
        }
    }

    pub fn parse_point(&self, s: &str) -> Result<Point> {
        self.kind().parse(s)
    }

    /// The metric `p(x, y)`.
    pub fn metric(&self, x: &Point, y: &Point) -> Result<Vector> {
        self.check(x)?;
        self.check(y)?;
        Ok(match (*x, *y) {
            (Point::HalfLine(a), Point::HalfLine(b)) => halfline_metric(a, b),
            (Point::Cross { axis: ax, t: a }, Point::Cross { axis: bx, t: b }) => cross_metric((ax, a), (bx, b)),
            (Point::Interval(a), Point::Interval(b)) => {
                let d = (a - b).abs();
                Vector::pair(d, d)
            }
            _ => unreachable!("kinds checked above"),
        })
    }

    /// The first control function `α(x, y)`.
    pub fn alpha(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(match (self.id, *x, *y) {
            (SpaceId::HalfLine, Point::HalfLine(a), Point::HalfLine(b)) => {
                if a >= 1.0 && b >= 1.0 {
                    a
                } else {
                    1.0
                }
            }
            (SpaceId::Cross, Point::Cross { t: a, .. }, Point::Cross { t: b, .. }) if a != 0.0 && b != 0.0 => {
                (1.0 / a).max(1.0 / b)
            }
            _ => 1.0,
        })
    }

    /// The second control function `β(x, y)`.
    pub fn beta(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(match (self.id, *x, *y) {
            (SpaceId::HalfLine, Point::HalfLine(a), Point::HalfLine(b)) => {
                if a < 1.0 && b < 1.0 {
                    1.0
                } else {
                    a.max(b)
                }
            }
            (SpaceId::Cross, Point::Cross { t: a, .. }, Point::Cross { t: b, .. }) if a != 0.0 && b != 0.0 => {
                1.0 / a + 1.0 / b
            }
            _ => 1.0,
        })
    }

    /// The canonical finite grid used for exhaustive audits.
    pub fn grid(&self) -> Vec<Point> {
        let unit = (0..=UNIT_GRID_STEPS).map(|j| f64::from(j) / f64::from(UNIT_GRID_STEPS));
        match self.kind() {
            PointKind::HalfLine => HALFLINE_GRID.iter().map(|&t| Point::HalfLine(t)).collect(),
            PointKind::Interval => unit.map(Point::Interval).collect(),
            PointKind::Cross => {
                let h = unit.clone().map(|t| Point::Cross { axis: Axis::H, t });
                let v = unit.skip(1).map(|t| Point::Cross { axis: Axis::V, t });
                h.chain(v).collect()
            }
        }
    }

    /// Uniform random point of the domain (the half-line is sampled on
    /// `[0, 6)`, which covers every branch of its metric).
    pub fn sample_point(&self, rng: &mut Rng) -> Point {
        match self.kind() {
            PointKind::HalfLine => Point::HalfLine(rng.random_range(0.0..HALFLINE_SAMPLE_MAX)),
            PointKind::Interval => Point::Interval(rng.random_range(0.0..=1.0)),
            PointKind::Cross => {
                let axis = if rng.random_bool(0.5) { Axis::H } else { Axis::V };
                Point::cross(axis, rng.random_range(0.0..=1.0)).expect("sampled inside [0, 1]")
            }
        }
    }

    /// Default starting point for iterations.
    pub fn default_start(&self) -> Point {
        match self.kind() {
            PointKind::HalfLine => Point::HalfLine(5.0),
            PointKind::Cross => Point::Cross { axis: Axis::H, t: 1.0 },
            PointKind::Interval => Point::Interval(1.0),
        }
    }
}

fn halfline_metric(x: f64, y: f64) -> Vector {
    if x == y {
        Vector::pair(0.0, 0.0)
    } else if x >= 1.0 && y < 1.0 {
        Vector::pair(1.0 / x, 1.0 / 3.0)
    } else if x < 1.0 && y >= 1.0 {
        Vector::pair(1.0 / 3.0, 1.0 / y)
    } else {
        Vector::pair(1.0, 1.0)
    }
}

fn cross_metric(x: (Axis, f64), y: (Axis, f64)) -> Vector {
    match (x, y) {
        ((Axis::H, a), (Axis::H, b)) => {
            let d = (a - b).abs();
            Vector::pair(4.0 / 3.0 * d, d)
        }
        ((Axis::V, a), (Axis::V, b)) => {
            let d = (a - b).abs();
            Vector::pair(d, 2.0 / 3.0 * d)
        }
        ((Axis::H, h), (Axis::V, v)) | ((Axis::V, v), (Axis::H, h)) => {
            Vector::pair(4.0 / 3.0 * h + v, h + 2.0 / 3.0 * v)
        }
    }
}

/// A self-map `T: X → X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelfMap {
    /// `t ↦ t/2` along either arm of the cross.
    Halving,
    /// `t ↦ t/4` on the interval.
    Quartering,
    Identity,
    Constant(Point),
}

/// Resolves a map name (`halving`, `quartering`, `identity`, `const:<point>`)
/// for the given space.
pub fn make_map(name: &str, space: &Space) -> Result<SelfMap> {
    let map = match name {
        "halving" => SelfMap::Halving,
        "quartering" => SelfMap::Quartering,
        "identity" => SelfMap::Identity,
        other => match other.strip_prefix("const:") {
            Some(lit) => SelfMap::Constant(space.parse_point(lit)?),
            None => return Err(Error::UnknownId(other.to_string())),
        },
    };
    let ok = match map {
        SelfMap::Halving => space.kind() == PointKind::Cross,
        SelfMap::Quartering => space.kind() == PointKind::Interval,
        SelfMap::Identity => true,
        SelfMap::Constant(p) => space.contains(&p),
    };
    if !ok {
        return Err(domain(format!("map `{name}` does not act on the {} space", space.id())));
    }
    Ok(map)
}

impl SelfMap {
    pub fn apply(&self, x: &Point) -> Result<Point> {
        match (self, *x) {
            (SelfMap::Identity, p) => Ok(p),
            (SelfMap::Constant(c), p) if c.kind() == p.kind() => Ok(*c),
            (SelfMap::Halving, Point::Cross { axis, t }) => Point::cross(axis, t / 2.0),
            (SelfMap::Quartering, Point::Interval(t)) => Point::interval(t / 4.0),
            _ => Err(domain(format!("map {} cannot be applied to {x}", self.name()))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SelfMap::Halving => "halving".into(),
            SelfMap::Quartering => "quartering".into(),
            SelfMap::Identity => "identity".into(),
            SelfMap::Constant(p) => format!("const:{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::seeded;

    fn h(t: f64) -> Point {
        Point::cross(Axis::H, t).unwrap()
    }
    fn vt(t: f64) -> Point {
        Point::cross(Axis::V, t).unwrap()
    }
    fn hl(t: f64) -> Point {
        Point::HalfLine(t)
    }

    #[test]
    fn halfline_metric_values() {
        let s = make_halfline_space();
        assert_eq!(s.metric(&hl(0.0), &hl(0.5)).unwrap(), Vector::pair(1.0, 1.0));
        assert_eq!(s.metric(&hl(3.0), &hl(0.5)).unwrap(), Vector::pair(1.0 / 3.0, 1.0 / 3.0));
        assert_eq!(s.metric(&hl(2.0), &hl(2.0)).unwrap(), Vector::pair(0.0, 0.0));
        assert_eq!(s.metric(&hl(2.0), &hl(7.0)).unwrap(), Vector::pair(1.0, 1.0));
        // y = 1 falls in the `≥ 1` branch.
        assert_eq!(s.metric(&hl(0.5), &hl(1.0)).unwrap(), Vector::pair(1.0 / 3.0, 1.0));
    }

    #[test]
    fn halfline_controls() {
        let s = make_halfline_space();
        assert_eq!(s.alpha(&hl(0.0), &hl(3.0)).unwrap(), 1.0);
        assert_eq!(s.beta(&hl(3.0), &hl(0.5)).unwrap(), 3.0);
        assert_eq!(s.alpha(&hl(2.0), &hl(3.0)).unwrap(), 2.0);
        assert_eq!(s.beta(&hl(0.25), &hl(0.5)).unwrap(), 1.0);
    }

    #[test]
    fn cross_metric_values() {
        let s = make_cross_space(CrossControls::Unit);
        let mixed = s.metric(&h(1.0), &vt(1.0)).unwrap();
        assert!((mixed.coords()[0] - 7.0 / 3.0).abs() < 1e-15 && (mixed.coords()[1] - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.metric(&h(1.0), &h(0.25)).unwrap(), Vector::pair(1.0, 0.75));
        assert_eq!(s.metric(&vt(1.0), &vt(0.25)).unwrap(), Vector::pair(0.75, 0.5));
    }

    #[test]
    fn cross_origin_is_one_point() {
        let s = make_cross_space(CrossControls::Reciprocal);
        let o_h = Point::cross(Axis::H, 0.0).unwrap();
        let o_v = Point::cross(Axis::V, 0.0).unwrap();
        assert_eq!(o_h, o_v);
        for q in s.grid() {
            assert_eq!(s.metric(&o_h, &q).unwrap(), s.metric(&o_v, &q).unwrap());
        }
        assert_eq!(s.metric(&o_h, &vt(0.5)).unwrap(), Vector::pair(0.5, 1.0 / 3.0));
    }

    #[test]
    fn cross_controls() {
        let recip = make_cross_space(CrossControls::Reciprocal);
        assert_eq!(recip.alpha(&h(0.5), &h(0.25)).unwrap(), 4.0);
        assert_eq!(recip.beta(&h(0.5), &h(0.25)).unwrap(), 6.0);
        assert_eq!(recip.alpha(&h(0.0), &h(0.25)).unwrap(), 1.0);
        assert_eq!(recip.beta(&h(0.0), &h(0.0)).unwrap(), 1.0);

        let unit = make_cross_space(CrossControls::Unit);
        for x in unit.grid() {
            for y in unit.grid() {
                assert_eq!(unit.alpha(&x, &y).unwrap(), 1.0);
                assert_eq!(unit.beta(&x, &y).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn interval_metric() {
        let s = make_interval_space();
        let p = |a, b| s.metric(&Point::Interval(a), &Point::Interval(b)).unwrap();
        assert_eq!(p(1.0, 0.0), Vector::pair(1.0, 1.0));
        assert_eq!(p(0.3, 0.3), Vector::pair(0.0, 0.0));
    }

    #[test]
    fn controls_are_at_least_one() {
        let mut rng = seeded(11);
        for id in SpaceId::ALL {
            let s = Space::from_id(id);
            for _ in 0..2000 {
                let (x, y) = (s.sample_point(&mut rng), s.sample_point(&mut rng));
                assert!(s.alpha(&x, &y).unwrap() >= 1.0);
                assert!(s.beta(&x, &y).unwrap() >= 1.0);
            }
        }
    }

    #[test]
    fn grids_have_canonical_sizes() {
        assert_eq!(make_halfline_space().grid().len(), 10);
        assert_eq!(make_cross_space(CrossControls::Unit).grid().len(), 41);
        assert_eq!(make_interval_space().grid().len(), 21);
    }

    #[test]
    fn foreign_points_are_rejected() {
        let s = make_interval_space();
        assert!(s.metric(&hl(0.5), &Point::Interval(0.5)).is_err());
        assert!(Point::cross(Axis::H, 1.5).is_err());
        assert!(Point::half_line(-1.0).is_err());
        assert!(serde_json::from_str::<Point>(r#"{"interval":2.0}"#).is_err());
    }

    #[test]
    fn point_literals() {
        let cross = make_cross_space(CrossControls::Unit);
        assert_eq!(cross.parse_point("H:0.5").unwrap(), h(0.5));
        assert_eq!(cross.parse_point("V:0").unwrap(), h(0.0));
        assert!(cross.parse_point("0.5").is_err());
        assert!(cross.parse_point("X:0.5").is_err());
        assert_eq!(make_halfline_space().parse_point("3").unwrap(), hl(3.0));
        assert_eq!(h(0.5).to_string(), "H:0.5");
        let json = serde_json::to_string(&vt(0.25)).unwrap();
        assert_eq!(serde_json::from_str::<Point>(&json).unwrap(), vt(0.25));
    }

    #[test]
    fn maps() {
        let cross = make_cross_space(CrossControls::Unit);
        let interval = make_interval_space();
        let halving = make_map("halving", &cross).unwrap();
        assert_eq!(halving.apply(&h(1.0)).unwrap(), h(0.5));
        assert_eq!(halving.apply(&vt(0.5)).unwrap(), vt(0.25));
        let quarter = make_map("quartering", &interval).unwrap();
        assert_eq!(quarter.apply(&Point::Interval(1.0)).unwrap(), Point::Interval(0.25));
        assert_eq!(make_map("identity", &cross).unwrap().apply(&vt(0.3)).unwrap(), vt(0.3));
        let c = make_map("const:V:0.5", &cross).unwrap();
        assert_eq!(c.apply(&h(1.0)).unwrap(), vt(0.5));
        assert_eq!(c.name(), "const:V:0.5");

        assert!(make_map("halving", &interval).is_err());
        assert!(make_map("quartering", &cross).is_err());
        assert!(make_map("doubling", &cross).is_err());
        assert!(make_map("const:H:0.5", &interval).is_err());
    }

    #[test]
    fn space_ids_round_trip() {
        for id in SpaceId::ALL {
            assert_eq!(id.as_str().parse::<SpaceId>().unwrap(), id);
        }
        assert!(matches!("nosuch".parse::<SpaceId>(), Err(Error::UnknownId(_))));
    }
}
