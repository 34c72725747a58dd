//! Picard iteration and numerical audits of the fixed-point hypotheses.
//!
//! [`picard_orbit`] generates `xₙ = Tⁿx₀` until the step `p(xₙ, xₙ₊₁)` is
//! small in norm. Convergence in the cone order is read through the norm,
//! which is legitimate for normal cones (every target space here is the
//! orthant of `R²`).
//!
//! The hypothesis audits evaluate, along a computed orbit, the quantity
//!
//! ```text
//! Q = sup_m lim_i  α(x_{i+1}, x_{i+2}) / α(x_i, x_{i+1}) · β(x_{i+1}, x_m)
//! ```
//!
//! and the limits `lim α(x, xₙ)`, `lim β(xₙ, x)` at the orbit's limit point,
//! and compare them with the thresholds of each contraction family. Limits
//! and suprema are finite-horizon estimates; an estimate that has not settled
//! over the stabilization window never passes.

use serde::{Deserialize, Serialize};

use crate::contraction::{Family, Params};
use crate::error::{domain, Result};
use crate::ordered_space::Vector;
use crate::report::{real, real_vec};
use crate::spaces::{Point, SelfMap, Space};
use crate::verification::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitStatus {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub x0: Point,
    pub points: Vec<Point>,
    /// `steps[n] = p(xₙ, xₙ₊₁)`.
    pub steps: Vec<Vector>,
    pub step_norms: Vec<f64>,
    pub status: OrbitStatus,
}

impl Orbit {
    pub fn last(&self) -> &Point {
        self.points.last().expect("an orbit always holds x0")
    }

    pub fn iterations(&self) -> usize {
        self.steps.len()
    }
}

/// Iterates `T` from `x0`.
///
/// Stops as converged when a step is exactly zero (the current point is
/// fixed) or when two consecutive step norms fall below `tol`; as diverged
/// when a step norm exceeds `1/tol`; otherwise after `max_iter` steps.
pub fn picard_orbit(s: &Space, t: &SelfMap, x0: Point, max_iter: usize, tol: f64) -> Result<Orbit> {
    if max_iter < 1 {
        return Err(domain("max_iter must be at least 1"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(domain("tol must be positive"));
    }
    if !s.contains(&x0) {
        return Err(domain(format!("start point {x0} is not in the {} space", s.id())));
    }
    let mut orbit =
        Orbit { x0, points: vec![x0], steps: Vec::new(), step_norms: Vec::new(), status: OrbitStatus::MaxIter };
    let mut small_in_a_row = 0;
    for _ in 0..max_iter {
        let x = *orbit.last();
        let next = t.apply(&x)?;
        let step = s.metric(&x, &next)?;
        let norm = s.target().norm(&step);
        let exact = step.is_zero();
        orbit.points.push(next);
        orbit.steps.push(step);
        orbit.step_norms.push(norm);
        if exact {
            orbit.status = OrbitStatus::Converged;
            break;
        }
        if norm > 1.0 / tol {
            orbit.status = OrbitStatus::Diverged;
            break;
        }
        small_in_a_row = if norm < tol { small_in_a_row + 1 } else { 0 };
        if small_in_a_row >= 2 {
            orbit.status = OrbitStatus::Converged;
            break;
        }
    }
    Ok(orbit)
}

/// Exactly `len` points of the orbit of `x0`, with no stopping rule. Used to
/// give the hypothesis audits a horizon longer than the convergence orbit.
pub fn picard_prefix(s: &Space, t: &SelfMap, x0: Point, len: usize) -> Result<Orbit> {
    if len < 2 {
        return Err(domain("orbit prefix needs at least two points"));
    }
    let mut orbit =
        Orbit { x0, points: vec![x0], steps: Vec::new(), step_norms: Vec::new(), status: OrbitStatus::MaxIter };
    while orbit.points.len() < len {
        let x = *orbit.last();
        let next = t.apply(&x)?;
        let step = s.metric(&x, &next)?;
        orbit.step_norms.push(s.target().norm(&step));
        orbit.steps.push(step);
        orbit.points.push(next);
    }
    Ok(orbit)
}

/// Finite horizons for the sup/lim estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizons {
    pub i_horizon: usize,
    pub m_horizon: usize,
    pub stab_window: usize,
    pub stab_tol: f64,
}

impl Default for Horizons {
    fn default() -> Self {
        Horizons { i_horizon: 64, m_horizon: 64, stab_window: 8, stab_tol: 1e-9 }
    }
}

impl Horizons {
    /// Orbit length (in points) the audits need.
    pub fn required_len(&self) -> usize {
        (self.i_horizon + 2).max(self.m_horizon + 1)
    }

    fn validate(&self) -> Result<()> {
        if self.i_horizon < 1 || self.m_horizon < 1 {
            return Err(domain("horizons must be at least 1"));
        }
        if self.stab_window < 1 || self.stab_window > self.i_horizon {
            return Err(domain("stabilization window must lie in [1, i_horizon]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub theorem: Family,
    #[serde(with = "real")]
    pub q_estimate: f64,
    #[serde(with = "real")]
    pub q_threshold: f64,
    #[serde(with = "real")]
    pub alpha_limit: f64,
    /// `β`-limit in the orientation the theorem uses: `β(xₙ, x)` for Banach
    /// and Kannan, `β(x, xₙ)` for Reich.
    #[serde(with = "real")]
    pub beta_limit: f64,
    /// The other orientation, for comparison.
    #[serde(with = "real")]
    pub beta_limit_swapped: f64,
    #[serde(with = "real")]
    pub beta_threshold: f64,
    #[serde(with = "real_vec")]
    pub s_series: Vec<f64>,
    pub s_cauchy: bool,
    pub stabilized: bool,
    pub verdict: Verdict,
}

fn threshold(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

fn spread(xs: &[f64]) -> f64 {
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

fn settled(xs: &[f64], tol: f64) -> bool {
    xs.iter().all(|x| x.is_finite()) && spread(xs) < tol
}

/// Audits the hypotheses of the fixed-point theorem for `params` along
/// `orbit`.
///
/// `q_i(m)` is evaluated for `i < i_horizon` and `1 ≤ m ≤ m_horizon`;
/// `Q` is the maximum over `m` of `q` at the last `i`. The limits
/// `α(x, xₙ)` and `β(·,·)` are read at `n = i_horizon` with `x` the last
/// orbit point. Everything must vary by less than `stab_tol` over the last
/// `stab_window` indices to count as stabilized.
pub fn check_hypothesis(s: &Space, orbit: &Orbit, params: &Params, h: &Horizons) -> Result<HypothesisReport> {
    h.validate()?;
    if orbit.points.len() < h.required_len() {
        return Err(domain(format!("orbit has {} points, audits need {}", orbit.points.len(), h.required_len())));
    }
    let xs = &orbit.points;
    let limit = *orbit.last();
    let window = h.i_horizon - h.stab_window..h.i_horizon;

    let mut q_estimate = f64::NEG_INFINITY;
    let mut stabilized = true;
    for m in 1..=h.m_horizon {
        let q: Vec<f64> = window
            .clone()
            .map(|i| Ok(s.alpha(&xs[i + 1], &xs[i + 2])? / s.alpha(&xs[i], &xs[i + 1])? * s.beta(&xs[i + 1], &xs[m])?))
            .collect::<Result<_>>()?;
        stabilized &= settled(&q, h.stab_tol);
        q_estimate = q_estimate.max(*q.last().expect("window is nonempty"));
    }

    let limit_window = h.i_horizon + 1 - h.stab_window..=h.i_horizon;
    let alphas: Vec<f64> = limit_window.clone().map(|n| s.alpha(&limit, &xs[n])).collect::<Result<_>>()?;
    let beta_in: Vec<f64> = limit_window.clone().map(|n| s.beta(&xs[n], &limit)).collect::<Result<_>>()?;
    let beta_out: Vec<f64> = limit_window.map(|n| s.beta(&limit, &xs[n])).collect::<Result<_>>()?;
    stabilized &= settled(&alphas, h.stab_tol) && settled(&beta_in, h.stab_tol) && settled(&beta_out, h.stab_tol);

    let (beta_used, beta_other) = match params.family() {
        Family::Reich => (&beta_out, &beta_in),
        _ => (&beta_in, &beta_out),
    };
    let (q_threshold, beta_threshold) = match *params {
        Params::Banach { k } => (threshold(1.0, k), f64::INFINITY),
        Params::Kannan { a, b } => (threshold(1.0 - b, a), threshold(1.0, b)),
        Params::Reich { a, b, c } => (threshold(1.0 - b, a + c), threshold(1.0, b)),
    };

    let sums = partial_sums(s, orbit, params.rate(), h.m_horizon)?;
    let s_cauchy = sums.is_cauchy(h.stab_window, h.stab_tol);

    let alpha_limit = *alphas.last().expect("window is nonempty");
    let beta_limit = *beta_used.last().expect("window is nonempty");
    let holds =
        q_estimate < q_threshold && alpha_limit.is_finite() && beta_limit.is_finite() && beta_limit < beta_threshold;
    let verdict = if !stabilized || !s_cauchy {
        Verdict::Inconclusive
    } else if holds {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    Ok(HypothesisReport {
        theorem: params.family(),
        q_estimate,
        q_threshold,
        alpha_limit,
        beta_limit,
        beta_limit_swapped: *beta_other.last().expect("window is nonempty"),
        beta_threshold,
        s_series: sums.values,
        s_cauchy,
        stabilized,
        verdict,
    })
}

pub fn check_banach_hypothesis(s: &Space, orbit: &Orbit, k: f64, h: &Horizons) -> Result<HypothesisReport> {
    check_hypothesis(s, orbit, &Params::Banach { k }, h)
}

pub fn check_kannan_hypothesis(s: &Space, orbit: &Orbit, a: f64, b: f64, h: &Horizons) -> Result<HypothesisReport> {
    check_hypothesis(s, orbit, &Params::Kannan { a, b }, h)
}

pub fn check_reich_hypothesis(
    s: &Space,
    orbit: &Orbit,
    a: f64,
    b: f64,
    c: f64,
    h: &Horizons,
) -> Result<HypothesisReport> {
    check_hypothesis(s, orbit, &Params::Reich { a, b, c }, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayAudit {
    pub rate: f64,
    pub passed: bool,
    pub first_failure: Option<usize>,
}

/// Checks `p(xₙ, xₙ₊₁) ⪯ rⁿ·p(x₀, x₁)` for every recorded step, with slack
/// `boundary_tol·(1 + rⁿ)`.
pub fn geometric_decay_audit(s: &Space, orbit: &Orbit, r: f64) -> Result<DecayAudit> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(domain(format!("decay rate must be finite and nonnegative, got {r}")));
    }
    let first = orbit.steps.first().ok_or_else(|| domain("orbit has no steps"))?;
    let tol = s.target().cone.boundary_tol;
    let cone = s.target().cone.with_tol(0.0);
    let mut scale = 1.0;
    for (n, step) in orbit.steps.iter().enumerate() {
        let bound = first.scale(scale);
        let slack = tol * (1.0 + scale);
        let outside = cone.membership_margin(&bound.checked_sub(step)?)?;
        if outside > slack {
            return Ok(DecayAudit { rate: r, passed: false, first_failure: Some(n) });
        }
        scale *= r;
    }
    Ok(DecayAudit { rate: r, passed: true, first_failure: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSums {
    #[serde(with = "real_vec")]
    pub values: Vec<f64>,
}

impl PartialSums {
    /// `|S_R − S_{R−window}| < tol`.
    pub fn is_cauchy(&self, window: usize, tol: f64) -> bool {
        let r = self.values.len();
        if r == 0 {
            return false;
        }
        let last = self.values[r - 1];
        let earlier = self.values[r.saturating_sub(window + 1)];
        (last - earlier).abs() < tol
    }
}

/// `S_r = Σ_{i≤r} (Π_{j≤i} β(x_j, x_m)) · α(x_i, x_{i+1}) · rateⁱ` for
/// `r = 0 … len − 2`.
pub fn partial_sums(s: &Space, orbit: &Orbit, rate: f64, m: usize) -> Result<PartialSums> {
    let xs = &orbit.points;
    if m >= xs.len() {
        return Err(domain(format!("anchor index {m} is beyond the orbit ({} points)", xs.len())));
    }
    if xs.len() < 2 {
        return Err(domain("orbit has no steps"));
    }
    let mut values = Vec::with_capacity(xs.len() - 1);
    let (mut sum, mut product, mut power) = (0.0, 1.0, 1.0);
    for i in 0..xs.len() - 1 {
        product *= s.beta(&xs[i], &xs[m])?;
        sum += product * s.alpha(&xs[i], &xs[i + 1])? * power;
        values.push(sum);
        power *= rate;
    }
    Ok(PartialSums { values })
}

/// `d(n) = max_{n < m ≤ N} ‖p(xₙ, x_m)‖` for `n < N`.
pub fn cauchy_witness(s: &Space, orbit: &Orbit, big_n: usize) -> Result<Vec<f64>> {
    let xs = &orbit.points;
    if big_n >= xs.len() {
        return Err(domain(format!("N = {big_n} is beyond the orbit ({} points)", xs.len())));
    }
    (0..big_n)
        .map(|n| ((n + 1)..=big_n).try_fold(0.0_f64, |acc, m| Ok(acc.max(s.target().norm(&s.metric(&xs[n], &xs[m])?)))))
        .collect()
}

/// `‖p(xₙ, x̂)‖` for every orbit point, with `x̂` the last one.
pub fn limit_distances(s: &Space, orbit: &Orbit) -> Result<Vec<f64>> {
    let limit = orbit.last();
    orbit.points.iter().map(|x| Ok(s.target().norm(&s.metric(x, limit)?))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub horizons: Horizons,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { max_iter: 10_000, tol: 1e-9, horizons: Horizons::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub params: Params,
    /// The last orbit point, when the orbit converged with a small residual.
    pub fixed_point: Option<Point>,
    /// `‖p(x̂, T x̂)‖` at the last orbit point.
    pub residual: f64,
    pub iterations: usize,
    pub status: OrbitStatus,
    pub decay_audit: DecayAudit,
    pub hypothesis: HypothesisReport,
    /// Orbit as iterated until the stopping rule fired.
    #[serde(skip)]
    pub orbit: Option<Orbit>,
    /// Orbit prefix long enough for the hypothesis horizons.
    #[serde(skip)]
    pub audit_orbit: Option<Orbit>,
}

/// Runs the iteration and every audit for one contraction family.
pub fn solve(s: &Space, t: &SelfMap, x0: Point, params: &Params, config: &SolveConfig) -> Result<SolveResult> {
    params.validate()?;
    let orbit = picard_orbit(s, t, x0, config.max_iter, config.tol)?;
    let audit_orbit = picard_prefix(s, t, x0, config.horizons.required_len())?;
    let hypothesis = check_hypothesis(s, &audit_orbit, params, &config.horizons)?;
    let decay_audit = geometric_decay_audit(s, &orbit, params.rate())?;
    let candidate = *orbit.last();
    let residual = s.target().norm(&s.metric(&candidate, &t.apply(&candidate)?)?);
    let fixed_point = (orbit.status == OrbitStatus::Converged && residual < config.tol).then_some(candidate);
    Ok(SolveResult {
        params: *params,
        fixed_point,
        residual,
        iterations: orbit.iterations(),
        status: orbit.status,
        decay_audit,
        hypothesis,
        orbit: Some(orbit),
        audit_orbit: Some(audit_orbit),
    })
}
