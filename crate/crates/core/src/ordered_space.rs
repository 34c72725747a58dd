//! Finite-dimensional ordered vector spaces.
//!
//! A [`Cone`] `P` induces the partial order `x ⪯ y ⇔ y − x ∈ P` and the strict
//! order `x ≪ y ⇔ y − x ∈ int P`. An [`OrderedSpace`] pairs a cone with a
//! norm, which is what the normality estimators and the solver need.
//!
//! `C¹[0, 1]` is represented on a fixed uniform grid: a [`Vector`] of length
//! `2n` holds the `n` function samples followed by the `n` samples of the
//! analytic derivative. Every operation on such vectors is linear, so sums and
//! scalings stay consistent with the underlying functions.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::sampling::Rng;
use crate::verification::{AxiomId, AxiomReport, AxiomSuite, Violation, Witness};

/// Comparison slack used by cone membership when none is given.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-12;

/// An element of the ordered vector space. Coordinates are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector {
    coords: Vec<f64>,
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(domain("vector must have at least one coordinate"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(domain(format!("coordinate {i} is not finite")));
        }
        Ok(Vector { coords })
    }

    /// Two-coordinate vector. Panics on non-finite input.
    pub fn pair(a: f64, b: f64) -> Self {
        Vector::new(vec![a, b]).expect("finite coordinates")
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Vector { coords: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector { coords: self.coords.iter().map(|c| c * s).collect() }
    }

    pub fn checked_sub(&self, other: &Vector) -> Result<Vector> {
        same_dim(self, other)?;
        Ok(self - other)
    }

    pub fn checked_add(&self, other: &Vector) -> Result<Vector> {
        same_dim(self, other)?;
        Ok(self + other)
    }

    fn zip_with(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        Vector { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| f(*a, *b)).collect() }
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.coords
    }
}

fn same_dim(a: &Vector, b: &Vector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scale(self)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

/// Uniform sampling grid over `[0, 1]` for the discretized `C¹[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct C1Grid {
    n_points: usize,
}

impl C1Grid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(domain("C1 grid needs at least two points"));
        }
        Ok(C1Grid { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n_points - 1) as f64
    }

    /// Ambient dimension of the discretized space (values plus derivatives).
    pub fn dim(&self) -> usize {
        2 * self.n_points
    }

    pub fn node(&self, i: usize) -> f64 {
        // Exact endpoints.
        if i + 1 == self.n_points {
            1.0
        } else {
            i as f64 * self.spacing()
        }
    }

    /// Samples `f` and its analytic derivative `df` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Vector {
        let mut coords = Vec::with_capacity(self.dim());
        coords.extend((0..self.n_points).map(|i| f(self.node(i))));
        coords.extend((0..self.n_points).map(|i| df(self.node(i))));
        Vector::new(coords).expect("sampled function must be finite")
    }

    /// Splits a discretized function into its value and derivative samples.
    pub fn split<'a>(&self, v: &'a Vector) -> Result<(&'a [f64], &'a [f64])> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.dim() });
        }
        Ok(v.coords().split_at(self.n_points))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// The nonnegative orthant of `R^d`.
    Orthant(usize),
    /// Functions that are nonnegative at every grid node.
    C1NonNegative(C1Grid),
    /// `{x : x[axis] ≥ 0}`. Not a cone in the strict sense (it contains a
    /// line); kept as a negative control for the axiom checks.
    HalfSpace { dim: usize, axis: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub kind: ConeKind,
    pub boundary_tol: f64,
}

impl Cone {
    pub fn orthant(dim: usize) -> Self {
        assert!(dim > 0, "orthant dimension must be positive");
        Cone { kind: ConeKind::Orthant(dim), boundary_tol: DEFAULT_BOUNDARY_TOL }
    }

    pub fn c1_nonnegative(grid: C1Grid) -> Self {
        Cone { kind: ConeKind::C1NonNegative(grid), boundary_tol: DEFAULT_BOUNDARY_TOL }
    }

    pub fn half_space(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "half-space axis out of range");
        Cone { kind: ConeKind::HalfSpace { dim, axis }, boundary_tol: DEFAULT_BOUNDARY_TOL }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        assert!(tol >= 0.0 && tol.is_finite(), "tolerance must be finite and nonnegative");
        self.boundary_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ConeKind::Orthant(d) => d,
            ConeKind::C1NonNegative(g) => g.dim(),
            ConeKind::HalfSpace { dim, .. } => dim,
        }
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.dim() });
        }
        Ok(())
    }

    /// Coordinates constrained to be nonnegative.
    fn constrained<'a>(&self, v: &'a Vector) -> &'a [f64] {
        match self.kind {
            ConeKind::Orthant(_) => v.coords(),
            ConeKind::C1NonNegative(g) => &v.coords()[..g.n_points()],
            ConeKind::HalfSpace { axis, .. } => &v.coords()[axis..=axis],
        }
    }

    /// How far `v` sits outside the cone: `max(−vᵢ)` over the constrained
    /// coordinates. Membership holds iff this is `≤ boundary_tol`.
    pub fn membership_margin(&self, v: &Vector) -> Result<f64> {
        self.check_dim(v)?;
        Ok(self.constrained(v).iter().fold(f64::NEG_INFINITY, |m, c| m.max(-c)))
    }

    pub fn contains(&self, v: &Vector) -> Result<bool> {
        Ok(self.membership_margin(v)? <= self.boundary_tol)
    }

    pub fn interior_contains(&self, v: &Vector) -> Result<bool> {
        self.check_dim(v)?;
        Ok(self.constrained(v).iter().all(|&c| c > self.boundary_tol))
    }

    /// Fixed nonzero members used to seed every sampling procedure.
    pub fn probes(&self) -> Vec<Vector> {
        match self.kind {
            ConeKind::Orthant(d) => {
                let mut out: Vec<Vector> = (0..d).map(|i| basis(d, i)).collect();
                if d > 1 {
                    out.push(Vector { coords: vec![1.0; d] });
                }
                out
            }
            ConeKind::HalfSpace { dim, axis } => {
                let mut out: Vec<Vector> = (0..dim).map(|i| basis(dim, i)).collect();
                out.extend((0..dim).filter(|&i| i != axis).map(|i| -&basis(dim, i)));
                out
            }
            ConeKind::C1NonNegative(g) => vec![
                g.sample(|_| 1.0, |_| 0.0),
                g.sample(|t| t, |_| 1.0),
                g.sample(|t| 1.0 - t, |_| -1.0),
                g.sample(|t| t * t, |t| 2.0 * t),
                g.sample(|t| 1.0 + (PI * t).sin(), |t| PI * (PI * t).cos()),
            ],
        }
    }

    /// Draws one member of the cone. Coordinates are snapped to zero with
    /// probability 1/5 so that boundary faces get exercised.
    pub fn sample_member(&self, rng: &mut Rng) -> Vector {
        let snap = |rng: &mut Rng, v: f64| if rng.random_bool(0.2) { 0.0 } else { v };
        match self.kind {
            ConeKind::Orthant(d) => {
                let coords = (0..d).map(|_| {
                    let u = rng.random::<f64>();
                    snap(rng, u)
                });
                Vector { coords: coords.collect() }
            }
            ConeKind::HalfSpace { dim, axis } => {
                let coords = (0..dim).map(|i| {
                    let u = if i == axis { rng.random::<f64>() } else { rng.random_range(-1.0..1.0) };
                    snap(rng, u)
                });
                Vector { coords: coords.collect() }
            }
            ConeKind::C1NonNegative(g) => {
                let c0 = rng.random::<f64>();
                let c1 = rng.random::<f64>();
                let c2 = rng.random::<f64>();
                let omega = PI * rng.random_range(1..=3) as f64;
                let phase = rng.random_range(0.0..2.0 * PI);
                g.sample(
                    |t| c0 + c1 * t + c2 * (1.0 + (omega * t + phase).sin()),
                    |t| c1 + c2 * omega * (omega * t + phase).cos(),
                )
            }
        }
    }
}

fn basis(dim: usize, i: usize) -> Vector {
    let mut coords = vec![0.0; dim];
    coords[i] = 1.0;
    Vector { coords }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Max,
    Euclidean,
    /// `sup |f| + sup |f′|` over the grid; the vector is split in half into
    /// value and derivative samples.
    C1Sum,
}

impl Norm {
    pub fn eval(&self, v: &Vector) -> f64 {
        match self {
            Norm::Max => v.max_abs(),
            Norm::Euclidean => v.coords().iter().map(|c| c * c).sum::<f64>().sqrt(),
            Norm::C1Sum => {
                let (values, derivs) = v.coords().split_at(v.dim() / 2);
                let sup = |xs: &[f64]| xs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
                sup(values) + sup(derivs)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedSpace {
    pub cone: Cone,
    pub norm: Norm,
}

impl OrderedSpace {
    pub fn new(cone: Cone, norm: Norm) -> Self {
        OrderedSpace { cone, norm }
    }

    /// `R²` with the orthant cone and the max norm, the codomain of every
    /// shipped metric space.
    pub fn plane() -> Self {
        OrderedSpace::new(Cone::orthant(2), Norm::Max)
    }

    /// Discretized `C¹[0, 1]` with the pointwise-nonnegative cone.
    pub fn c1(grid: C1Grid) -> Self {
        OrderedSpace::new(Cone::c1_nonnegative(grid), Norm::C1Sum)
    }

    pub fn dim(&self) -> usize {
        self.cone.dim()
    }

    pub fn norm(&self, v: &Vector) -> f64 {
        self.norm.eval(v)
    }

    /// `x ⪯ y`.
    pub fn leq(&self, x: &Vector, y: &Vector) -> Result<bool> {
        self.cone.contains(&y.checked_sub(x)?)
    }

    /// `x ≪ y`.
    pub fn ll(&self, x: &Vector, y: &Vector) -> Result<bool> {
        self.cone.interior_contains(&y.checked_sub(x)?)
    }
}

/// Samples the cone axioms: `P ≠ {0}` on the probe set, closure under
/// nonnegative combinations, and `P ∩ (−P) = {0}`.
///
/// Closedness is not checked; every cone here is defined by non-strict
/// inequalities.
pub fn verify_cone_axioms(cone: &Cone, rng: &mut Rng, n: usize) -> AxiomSuite {
    let tol = cone.boundary_tol;
    let probes = cone.probes();
    let mut members = probes.clone();
    members.extend((0..n).map(|_| cone.sample_member(rng)));

    // C1: some nonzero member exists.
    let mut c1 = AxiomReport::new(AxiomId::C1);
    c1.checked = probes.len();
    let nonzero = probes.iter().any(|p| p.max_abs() > tol && cone.contains(p).unwrap_or(false));
    if !nonzero {
        let zero = Vector::zeros(cone.dim());
        c1.push(Violation::single(Witness::Vector(zero.clone()), zero.clone(), zero, 0.0));
    }

    // C2: ax + by ∈ P. Probe pairs with a = b = 1 first, then random tuples.
    let mut c2 = AxiomReport::new(AxiomId::C2);
    let check_combo = |x: &Vector, y: &Vector, a: f64, b: f64, report: &mut AxiomReport| {
        report.checked += 1;
        let w = &(a * x) + &(b * y);
        let margin = cone.membership_margin(&w).expect("sampled members share the cone dimension");
        if margin > tol {
            report.push(Violation {
                x: Witness::Vector(x.clone()),
                z: Some(Witness::Vector(Vector::pair(a, b))),
                y: Some(Witness::Vector(y.clone())),
                lhs: w.clone(),
                rhs: Vector::zeros(w.dim()),
                margin,
            });
        }
    };
    for (i, x) in probes.iter().enumerate() {
        for y in &probes[i..] {
            check_combo(x, y, 1.0, 1.0, &mut c2);
            check_combo(x, y, 0.0, 0.0, &mut c2);
        }
    }
    for _ in 0..n {
        let x = cone.sample_member(rng);
        let y = cone.sample_member(rng);
        let a = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..4.0) };
        let b = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..4.0) };
        check_combo(&x, &y, a, b, &mut c2);
    }

    // C3: no nonzero v with both v and −v in P.
    let mut c3 = AxiomReport::new(AxiomId::C3);
    for v in &members {
        c3.checked += 1;
        let size = v.max_abs();
        if size > tol && cone.contains(v).unwrap_or(false) && cone.contains(&-v).unwrap_or(false) {
            c3.push(Violation::single(Witness::Vector(v.clone()), v.clone(), -v, size));
        }
    }

    let mut suite = AxiomSuite::default();
    for mut report in [c1, c2, c3] {
        report.finalize(None);
        suite.push(report);
    }
    suite
}

/// Unit-norm cone members: the normalized probes, an angle grid for the
/// two-dimensional orthant, and nothing random.
fn deterministic_unit_members(space: &OrderedSpace) -> Vec<Vector> {
    let mut out: Vec<Vector> = space.cone.probes().into_iter().filter_map(|p| normalize(space, &p)).collect();
    if space.cone.kind == ConeKind::Orthant(2) {
        const STEPS: usize = 64;
        for j in 1..STEPS {
            let theta = j as f64 * (PI / 2.0) / STEPS as f64;
            if let Some(u) = normalize(space, &Vector::pair(theta.cos(), theta.sin())) {
                out.push(u);
            }
        }
    }
    out.retain(|u| space.cone.contains(u).unwrap_or(false));
    out
}

fn normalize(space: &OrderedSpace, v: &Vector) -> Option<Vector> {
    let n = space.norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.scale(1.0 / n))
}

fn random_unit_member(space: &OrderedSpace, rng: &mut Rng) -> Option<Vector> {
    // Snapping can yield the zero vector; retry a bounded number of times.
    (0..64).find_map(|_| normalize(space, &space.cone.sample_member(rng)))
}

/// Sampled estimate of `inf { ‖x + y‖ : x, y ∈ P, ‖x‖ = ‖y‖ = 1 }`.
///
/// The value is a minimum over finitely many pairs, hence an upper estimate of
/// the infimum. A clearly positive value is evidence of normality, nothing
/// more.
pub fn normality_infimum(space: &OrderedSpace, rng: &mut Rng, n: usize) -> Result<f64> {
    normality_infimum_with(space, rng, n, &[])
}

/// As [`normality_infimum`], with caller-supplied pairs added to the sample.
/// Supplied pairs are used as given, not renormalized.
pub fn normality_infimum_with(
    space: &OrderedSpace,
    rng: &mut Rng,
    n: usize,
    extra_pairs: &[(Vector, Vector)],
) -> Result<f64> {
    if n == 0 {
        return Err(domain("normality estimate needs at least one sampled pair"));
    }
    let fixed = deterministic_unit_members(space);
    let mut best = f64::INFINITY;
    let mut seen = 0usize;
    for (i, x) in fixed.iter().enumerate() {
        for y in &fixed[i..] {
            best = best.min(space.norm(&(x + y)));
            seen += 1;
        }
    }
    for _ in 0..n {
        let (Some(x), Some(y)) = (random_unit_member(space, rng), random_unit_member(space, rng)) else {
            continue;
        };
        best = best.min(space.norm(&(&x + &y)));
        seen += 1;
    }
    for (x, y) in extra_pairs {
        best = best.min(space.norm(&x.checked_add(y)?));
        seen += 1;
    }
    if seen == 0 {
        return Err(domain("no unit-norm cone members could be sampled"));
    }
    Ok(best)
}

/// Sampled lower estimate of the normal constant: the largest `‖x‖ / ‖y‖`
/// over pairs `0 ⪯ x ⪯ y`, `y ≠ 0`. Pairs are built as `y = x + z` with
/// `x, z ∈ P`, and every probe is also paired with itself.
pub fn normal_constant_estimate(space: &OrderedSpace, rng: &mut Rng, n: usize) -> f64 {
    let mut best: f64 = 0.0;
    let mut ratio = |x: &Vector, y: &Vector| {
        let ny = space.norm(y);
        if ny > 0.0 {
            best = best.max(space.norm(x) / ny);
        }
    };
    for p in space.cone.probes() {
        ratio(&p, &p);
    }
    for _ in 0..n {
        let x = space.cone.sample_member(rng);
        let z = space.cone.sample_member(rng);
        ratio(&x, &(&x + &z));
    }
    best
}

/// The non-normality witnesses `xₙ(t) = (1 − sin nt)/(n + 2)` and
/// `yₙ(t) = (1 + sin nt)/(n + 2)` on the grid, with analytic derivatives.
pub fn make_nonnormal_family(n: u32, grid: &C1Grid) -> Result<(Vector, Vector)> {
    if n < 1 {
        return Err(domain("family index must be at least 1"));
    }
    let nf = f64::from(n);
    let denom = nf + 2.0;
    let x = grid.sample(|t| (1.0 - (nf * t).sin()) / denom, |t| -nf * (nf * t).cos() / denom);
    let y = grid.sample(|t| (1.0 + (nf * t).sin()) / denom, |t| nf * (nf * t).cos() / denom);
    Ok((x, y))
}
