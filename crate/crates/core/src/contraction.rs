//! Fitting contraction constants from sampled pairs.
//!
//! Three families are supported, each an inequality in the cone order that
//! must hold for every pair `(x, y)`:
//!
//! * Banach: `p(Tx, Ty) ⪯ k·p(x, y)`
//! * Kannan: `p(Tx, Ty) ⪯ a·p(x, Tx) + b·p(y, Ty)`
//! * Reich: `p(Tx, Ty) ⪯ a·p(x, Tx) + b·p(y, Ty) + c·p(x, y)`
//!
//! In the orthant order the smallest admissible `k` is the largest
//! coordinate ratio, so Banach is fitted in closed form. Kannan and Reich
//! constants are found by scanning a uniform grid in order of increasing
//! `a + b (+ c)`; the first cell that satisfies every sampled pair wins.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::report::real;
use crate::sampling::seeded;
use crate::spaces::{Point, SelfMap, Space};

pub const DEFAULT_GRID_STEP: f64 = 1.0 / 48.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Banach,
    Kannan,
    Reich,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Banach => "banach",
            Family::Kannan => "kannan",
            Family::Reich => "reich",
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "banach" => Ok(Family::Banach),
            "kannan" => Ok(Family::Kannan),
            "reich" => Ok(Family::Reich),
            other => Err(Error::UnknownId(other.to_string())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Contraction constants of one family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Params {
    Banach {
        #[serde(with = "real")]
        k: f64,
    },
    Kannan {
        a: f64,
        b: f64,
    },
    Reich {
        a: f64,
        b: f64,
        c: f64,
    },
}

impl Params {
    pub fn family(&self) -> Family {
        match self {
            Params::Banach { .. } => Family::Banach,
            Params::Kannan { .. } => Family::Kannan,
            Params::Reich { .. } => Family::Reich,
        }
    }

    /// Builds parameters from a flat list: `[k]`, `[a, b]` or `[a, b, c]`.
    pub fn from_values(family: Family, values: &[f64]) -> Result<Params> {
        match (family, values) {
            (Family::Banach, &[k]) => Ok(Params::Banach { k }),
            (Family::Kannan, &[a, b]) => Ok(Params::Kannan { a, b }),
            (Family::Reich, &[a, b, c]) => Ok(Params::Reich { a, b, c }),
            _ => Err(Error::InvalidParams(format!(
                "{family} takes {} values, got {}",
                family_arity(family),
                values.len()
            ))),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Params::Banach { k } => vec![k],
            Params::Kannan { a, b } => vec![a, b],
            Params::Reich { a, b, c } => vec![a, b, c],
        }
    }

    /// Checks the standing assumptions: every constant in `[0, 1)` and
    /// `k < 1`, `a + b < 1`, `a + b + c < 1` respectively.
    pub fn validate(&self) -> Result<()> {
        let vals = self.values();
        if vals.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(Error::InvalidParams(format!("constants must lie in [0, 1): {vals:?}")));
        }
        if vals.iter().sum::<f64>() >= 1.0 {
            return Err(Error::InvalidParams(format!("constants must sum to less than 1: {vals:?}")));
        }
        Ok(())
    }

    /// Per-step decay rate of `p(xₙ, xₙ₊₁)`: `k`, `a/(1−b)` or `(a+c)/(1−b)`.
    pub fn rate(&self) -> f64 {
        match *self {
            Params::Banach { k } => k,
            Params::Kannan { a, b } => a / (1.0 - b),
            Params::Reich { a, b, c } => (a + c) / (1.0 - b),
        }
    }

    fn coeffs(&self) -> [f64; 3] {
        match *self {
            Params::Banach { k } => [0.0, 0.0, k],
            Params::Kannan { a, b } => [a, b, 0.0],
            Params::Reich { a, b, c } => [a, b, c],
        }
    }
}

fn family_arity(f: Family) -> usize {
    match f {
        Family::Banach => 1,
        Family::Kannan => 2,
        Family::Reich => 3,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionEstimate {
    pub family: Family,
    /// Fitted constants. Always present for Banach (possibly `k ≥ 1`); absent
    /// when a grid search finds no admissible cell.
    pub params: Option<Params>,
    pub feasible: bool,
    /// Banach: the pair with the largest ratio. Grid searches: the tightest
    /// pair at the chosen cell, or the pair that ruled out the most cells.
    pub worst_pair: Option<(Point, Point)>,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSample {
    /// All ordered pairs of the canonical grid.
    Grid,
    Random {
        n: usize,
        seed: u64,
    },
    GridAndRandom {
        n: usize,
        seed: u64,
    },
}

pub fn sample_pairs(s: &Space, spec: PairSample) -> Vec<(Point, Point)> {
    let grid_pairs = || {
        let g = s.grid();
        g.iter().flat_map(|x| g.iter().map(move |y| (*x, *y))).collect::<Vec<_>>()
    };
    let random_pairs = |n: usize, seed: u64| {
        let mut rng = seeded(seed);
        (0..n).map(|_| (s.sample_point(&mut rng), s.sample_point(&mut rng))).collect::<Vec<_>>()
    };
    match spec {
        PairSample::Grid => grid_pairs(),
        PairSample::Random { n, seed } => random_pairs(n, seed),
        PairSample::GridAndRandom { n, seed } => {
            let mut out = grid_pairs();
            out.extend(random_pairs(n, seed));
            out
        }
    }
}

/// Per-pair vectors `p(Tx,Ty)`, `p(x,Tx)`, `p(y,Ty)`, `p(x,y)`, flattened.
struct Constraints {
    dim: usize,
    image: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    base: Vec<f64>,
    tol: f64,
}

impl Constraints {
    fn build(s: &Space, t: &SelfMap, pairs: &[(Point, Point)]) -> Result<Constraints> {
        if pairs.is_empty() {
            return Err(domain("contraction estimate needs at least one pair"));
        }
        let dim = s.target().dim();
        let mut c = Constraints {
            dim,
            image: Vec::with_capacity(pairs.len() * dim),
            left: Vec::with_capacity(pairs.len() * dim),
            right: Vec::with_capacity(pairs.len() * dim),
            base: Vec::with_capacity(pairs.len() * dim),
            tol: s.target().cone.boundary_tol,
        };
        for (x, y) in pairs {
            let (tx, ty) = (t.apply(x)?, t.apply(y)?);
            c.image.extend_from_slice(s.metric(&tx, &ty)?.coords());
            c.left.extend_from_slice(s.metric(x, &tx)?.coords());
            c.right.extend_from_slice(s.metric(y, &ty)?.coords());
            c.base.extend_from_slice(s.metric(x, y)?.coords());
        }
        Ok(c)
    }

    fn len(&self) -> usize {
        self.image.len() / self.dim
    }

    /// `min over coordinates of (a·left + b·right + c·base − image)`.
    fn slack(&self, i: usize, [a, b, c]: [f64; 3]) -> f64 {
        let r = i * self.dim..(i + 1) * self.dim;
        r.map(|k| a * self.left[k] + b * self.right[k] + c * self.base[k] - self.image[k]).fold(f64::INFINITY, f64::min)
    }

    fn holds(&self, i: usize, coeffs: [f64; 3]) -> bool {
        self.slack(i, coeffs) >= -self.tol
    }
}

/// Largest coordinate ratio `p(Tx,Ty)ᵢ / p(x,y)ᵢ` with `0/0 = 0` and
/// `positive/0 = ∞`.
pub fn estimate_banach(s: &Space, t: &SelfMap, pairs: &[(Point, Point)]) -> Result<ContractionEstimate> {
    let cons = Constraints::build(s, t, pairs)?;
    let mut k_hat = 0.0_f64;
    let mut worst = None;
    for (i, pair) in pairs.iter().enumerate() {
        for k in i * cons.dim..(i + 1) * cons.dim {
            let (num, den) = (cons.image[k], cons.base[k]);
            let ratio = if den == 0.0 {
                if num == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                num / den
            };
            if ratio > k_hat || worst.is_none() {
                k_hat = k_hat.max(ratio);
                worst = Some(*pair);
            }
        }
    }
    Ok(ContractionEstimate {
        family: Family::Banach,
        params: Some(Params::Banach { k: k_hat }),
        feasible: k_hat < 1.0,
        worst_pair: worst,
        n_pairs: pairs.len(),
    })
}

/// Grid values `0, step, 2·step, …`. When `1/step` is an integer `n` the
/// values are computed as `i/n` so that e.g. `1/3` and `1/2` come out
/// correctly rounded.
struct GridAxis {
    step: f64,
    divisions: Option<f64>,
    max_sum: u32,
}

impl GridAxis {
    fn new(step: f64) -> Result<GridAxis> {
        if !(step > 0.0 && step < 1.0) {
            return Err(domain(format!("grid step must lie in (0, 1), got {step}")));
        }
        let inv = 1.0 / step;
        let divisions = ((inv.round() * step - 1.0).abs() < 1e-9).then(|| inv.round());
        // Largest s with s·step < 1.
        let max_sum = ((inv - 1e-9).ceil() as u32).saturating_sub(1);
        Ok(GridAxis { step, divisions, max_sum })
    }

    fn value(&self, i: u32) -> f64 {
        match self.divisions {
            Some(n) => f64::from(i) / n,
            None => f64::from(i) * self.step,
        }
    }
}

fn grid_search(
    family: Family,
    cons: &Constraints,
    pairs: &[(Point, Point)],
    cells: impl Iterator<Item = [f64; 3]>,
) -> ContractionEstimate {
    let mut kills = vec![0u32; cons.len()];
    let mut last_killer: Option<usize> = None;
    for cell in cells {
        if let Some(k) = last_killer {
            if !cons.holds(k, cell) {
                kills[k] += 1;
                continue;
            }
        }
        match (0..cons.len()).find(|&i| !cons.holds(i, cell)) {
            Some(k) => {
                kills[k] += 1;
                last_killer = Some(k);
            }
            None => {
                let tightest = (0..cons.len())
                    .min_by(|&i, &j| cons.slack(i, cell).total_cmp(&cons.slack(j, cell)))
                    .expect("pairs are nonempty");
                let params = match family {
                    Family::Kannan => Params::Kannan { a: cell[0], b: cell[1] },
                    _ => Params::Reich { a: cell[0], b: cell[1], c: cell[2] },
                };
                return ContractionEstimate {
                    family,
                    params: Some(params),
                    feasible: true,
                    worst_pair: Some(pairs[tightest]),
                    n_pairs: pairs.len(),
                };
            }
        }
    }
    // Ties go to the earliest pair.
    let worst = kills.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).map(|(i, _)| pairs[i]);
    ContractionEstimate { family, params: None, feasible: false, worst_pair: worst, n_pairs: pairs.len() }
}

/// Grid search over `(a, b)` with `a + b < 1`, smallest `a + b` first and
/// then smallest `a`.
pub fn estimate_kannan(
    s: &Space,
    t: &SelfMap,
    pairs: &[(Point, Point)],
    grid_step: f64,
) -> Result<ContractionEstimate> {
    let axis = GridAxis::new(grid_step)?;
    let cons = Constraints::build(s, t, pairs)?;
    let cells = (0..=axis.max_sum).flat_map(|sum| (0..=sum).map(move |i| (i, sum - i)));
    let cells = cells.map(|(i, j)| [axis.value(i), axis.value(j), 0.0]);
    Ok(grid_search(Family::Kannan, &cons, pairs, cells))
}

/// Grid search over `(a, b, c)` with `a + b + c < 1`, smallest sum first,
/// then lexicographic.
pub fn estimate_reich(s: &Space, t: &SelfMap, pairs: &[(Point, Point)], grid_step: f64) -> Result<ContractionEstimate> {
    let axis = GridAxis::new(grid_step)?;
    let cons = Constraints::build(s, t, pairs)?;
    let cells =
        (0..=axis.max_sum).flat_map(|sum| (0..=sum).flat_map(move |i| (0..=sum - i).map(move |j| (i, j, sum - i - j))));
    let cells = cells.map(|(i, j, l)| [axis.value(i), axis.value(j), axis.value(l)]);
    Ok(grid_search(Family::Reich, &cons, pairs, cells))
}

pub fn estimate(
    s: &Space,
    t: &SelfMap,
    family: Family,
    pairs: &[(Point, Point)],
    grid_step: f64,
) -> Result<ContractionEstimate> {
    match family {
        Family::Banach => estimate_banach(s, t, pairs),
        Family::Kannan => estimate_kannan(s, t, pairs, grid_step),
        Family::Reich => estimate_reich(s, t, pairs, grid_step),
    }
}

/// Pairs on which the inequality of `params` fails (up to the cone's
/// boundary tolerance).
pub fn violations(s: &Space, t: &SelfMap, params: &Params, pairs: &[(Point, Point)]) -> Result<Vec<(Point, Point)>> {
    let cons = Constraints::build(s, t, pairs)?;
    let coeffs = params.coeffs();
    Ok((0..cons.len()).filter(|&i| !cons.holds(i, coeffs)).map(|i| pairs[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{make_cross_space, make_interval_space, make_map, Axis, CrossControls};

    fn cross() -> Space {
        make_cross_space(CrossControls::Unit)
    }

    #[test]
    fn halving_is_banach_with_one_half() {
        let s = cross();
        let t = make_map("halving", &s).unwrap();
        let est = estimate_banach(&s, &t, &sample_pairs(&s, PairSample::Random { n: 2000, seed: 1 })).unwrap();
        assert_eq!(est.params, Some(Params::Banach { k: 0.5 }));
        assert!(est.feasible);
    }

    #[test]
    fn identity_and_constant_maps() {
        let s = cross();
        let pairs = sample_pairs(&s, PairSample::Grid);
        let id = estimate_banach(&s, &SelfMap::Identity, &pairs).unwrap();
        assert_eq!(id.params, Some(Params::Banach { k: 1.0 }));
        assert!(!id.feasible);

        let c = make_map("const:H:0.5", &s).unwrap();
        assert_eq!(estimate_banach(&s, &c, &pairs).unwrap().params, Some(Params::Banach { k: 0.0 }));
        let kannan = estimate_kannan(&s, &c, &pairs, DEFAULT_GRID_STEP).unwrap();
        assert_eq!(kannan.params, Some(Params::Kannan { a: 0.0, b: 0.0 }));
    }

    #[test]
    fn equal_pairs_contribute_zero_ratio() {
        let s = cross();
        let x = Point::cross(Axis::H, 0.5).unwrap();
        let est = estimate_banach(&s, &SelfMap::Identity, &[(x, x)]).unwrap();
        assert_eq!(est.params, Some(Params::Banach { k: 0.0 }));
    }

    #[test]
    fn quartering_kannan_at_one_third() {
        let s = make_interval_space();
        let t = make_map("quartering", &s).unwrap();
        let pairs = sample_pairs(&s, PairSample::Grid);
        let est = estimate_kannan(&s, &t, &pairs, 1.0 / 24.0).unwrap();
        assert_eq!(est.params, Some(Params::Kannan { a: 1.0 / 3.0, b: 1.0 / 3.0 }));
        let est48 = estimate_kannan(&s, &t, &pairs, DEFAULT_GRID_STEP).unwrap();
        assert_eq!(est48.params, Some(Params::Kannan { a: 1.0 / 3.0, b: 1.0 / 3.0 }));
    }

    #[test]
    fn halving_is_not_kannan() {
        let s = cross();
        let t = make_map("halving", &s).unwrap();
        let est = estimate_kannan(&s, &t, &sample_pairs(&s, PairSample::Grid), DEFAULT_GRID_STEP).unwrap();
        assert!(!est.feasible);
        assert!(est.params.is_none());
        assert!(est.worst_pair.is_some());
    }

    #[test]
    fn reich_examples() {
        let s = cross();
        let t = make_map("halving", &s).unwrap();
        let pairs = sample_pairs(&s, PairSample::Grid);
        let est = estimate_reich(&s, &t, &pairs, DEFAULT_GRID_STEP).unwrap();
        assert_eq!(est.params, Some(Params::Reich { a: 0.0, b: 0.0, c: 0.5 }));

        let i = make_interval_space();
        let q = make_map("quartering", &i).unwrap();
        let est = estimate_reich(&i, &q, &sample_pairs(&i, PairSample::Grid), DEFAULT_GRID_STEP).unwrap();
        let sum: f64 = est.params.unwrap().values().iter().sum();
        assert!(sum <= 2.0 / 3.0 + DEFAULT_GRID_STEP);

        assert!(!estimate_reich(&s, &SelfMap::Identity, &pairs, DEFAULT_GRID_STEP).unwrap().feasible);
    }

    #[test]
    fn bad_inputs() {
        let s = cross();
        assert!(estimate_banach(&s, &SelfMap::Identity, &[]).is_err());
        let pairs = sample_pairs(&s, PairSample::Grid);
        assert!(estimate_kannan(&s, &SelfMap::Identity, &pairs, 0.0).is_err());
        assert!(estimate_kannan(&s, &SelfMap::Identity, &pairs, 1.0).is_err());
        assert!(Params::Kannan { a: 0.6, b: 0.5 }.validate().is_err());
        assert!(Params::Banach { k: 1.0 }.validate().is_err());
        assert!(Params::Reich { a: 0.1, b: 0.1, c: 0.1 }.validate().is_ok());
        assert!(Params::from_values(Family::Kannan, &[0.1]).is_err());
    }

    #[test]
    fn rates() {
        assert!((Params::Kannan { a: 1.0 / 3.0, b: 1.0 / 3.0 }.rate() - 0.5).abs() < 1e-15);
        assert_eq!(Params::Reich { a: 0.0, b: 0.0, c: 0.25 }.rate(), 0.25);
    }

    #[test]
    fn odd_grid_steps_stay_below_one() {
        let axis = GridAxis::new(0.3).unwrap();
        assert_eq!(axis.max_sum, 3);
        assert!(axis.divisions.is_none());
        let axis = GridAxis::new(0.5).unwrap();
        assert_eq!(axis.max_sum, 1);
    }
}
