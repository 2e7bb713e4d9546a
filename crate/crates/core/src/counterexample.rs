//! A linear equation `tr(A(x,y)·ℋw) = 0` with continuous, rank-one
//! coefficients for which comparison fails.
//!
//! `A = qqᵀ` with `q = (x^{1/3}, −y^{1/3})`. Both Aronsson's function
//! `u = x^{4/3} − y^{4/3}` and `v = |x| − |y|` solve the equation on the
//! diamond `|y| < min(x, 1−x)`; `u ≥ v` on its boundary while `v > u` on the
//! open segment `y = 0`. This module evaluates every ingredient of that
//! certificate numerically.
//!
//! Fractional powers are real-valued: `x^{1/3} = sign(x)|x|^{1/3}`,
//! `x^{2/3} = |x|^{2/3}` and `x^{4/3} = |x|^{4/3}`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;
use crate::scalar::Scalar;
use crate::symmat::SymMat;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PlanePoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> PlanePoint<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> T {
        self.x * self.x + self.y * self.y
    }

    pub fn dist_sq(self, other: Self) -> T {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }
}

#[inline]
fn pow_two_thirds<T: Scalar>(t: T) -> T {
    (t * t).cbrt()
}

#[inline]
fn pow_four_thirds<T: Scalar>(t: T) -> T {
    let a = t.abs();
    a * a.cbrt()
}

/// `(u, v) = (x^{4/3} − y^{4/3}, |x| − |y|)`.
pub fn eval_solutions<T: Scalar>(p: PlanePoint<T>) -> (T, T) {
    let u = pow_four_thirds(p.x) - pow_four_thirds(p.y);
    let v = p.x.abs() - p.y.abs();
    (u, v)
}

/// `q = (x^{1/3}, −y^{1/3})`.
pub fn q_vector<T: Scalar>(p: PlanePoint<T>) -> [T; 2] {
    [p.x.cbrt(), -p.y.cbrt()]
}

/// `A(x,y) = [[x^{2/3}, −(xy)^{1/3}], [−(xy)^{1/3}, y^{2/3}]]`.
pub fn coefficient_matrix<T: Scalar>(p: PlanePoint<T>) -> SymMat<T> {
    let off = -(p.x * p.y).cbrt();
    SymMat::from_rows(&[vec![pow_two_thirds(p.x), off], vec![off, pow_two_thirds(p.y)]]).expect("2x2")
}

/// Closed-form Hessian of `u` off the axes.
pub fn hessian_u<T: Scalar>(p: PlanePoint<T>) -> Result<SymMat<T>> {
    if p.x == T::zero() || p.y == T::zero() {
        return Err(Error::OnAxis(p.x.to_f64_lossy(), p.y.to_f64_lossy()));
    }
    let c = T::lit(4.0 / 9.0);
    Ok(SymMat::diag(&[c / pow_two_thirds(p.x), -c / pow_two_thirds(p.y)]))
}

/// `tr(A·ℋu)`, which vanishes identically off the axes.
pub fn classical_residual_u<T: Scalar>(p: PlanePoint<T>) -> Result<T> {
    coefficient_matrix(p).inner(&hessian_u(p)?)
}

/// `tr(A(p)·(−tI)) = −(x^{2/3} + y^{2/3})·t`.
pub fn max_principle_witness<T: Scalar>(p: PlanePoint<T>, t: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    Ok(-coefficient_matrix(p).trace() * t)
}

// ---------------------------------------------------------------------------
// Axis viscosity tests for v
// ---------------------------------------------------------------------------

/// Where a quadratic test function touches `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisSide {
    /// From above at `(t0, 0)`; subsolution test, expects `tr(Aℋφ) ≥ 0`.
    AboveVOnXAxis,
    /// From below at `(0, t0)`; supersolution test, expects `tr(Aℋφ) ≤ 0`.
    BelowVOnYAxis,
    /// From above at `(0, t0)`. No smooth function touches here.
    AboveVOnYAxis,
    /// From below at `(t0, 0)`. No smooth function touches here.
    BelowVOnXAxis,
}

impl AxisSide {
    fn touches_from_above(self) -> bool {
        matches!(self, AxisSide::AboveVOnXAxis | AxisSide::AboveVOnYAxis)
    }

    fn on_x_axis(self) -> bool {
        matches!(self, AxisSide::AboveVOnXAxis | AxisSide::BelowVOnXAxis)
    }
}

/// Half-width of the local grid used to accept touching quadratics.
pub const TOUCH_GRID_RADIUS: f64 = 0.05;
/// Points per side of the local acceptance grid.
pub const TOUCH_GRID_POINTS: usize = 41;

#[derive(Clone, Debug, Serialize)]
pub struct AxisCheck<T: Scalar> {
    pub side: AxisSide,
    pub base: PlanePoint<T>,
    pub trials: usize,
    pub accepted: usize,
    pub pass: bool,
    /// `tr(Aℋφ)` for the above side, `−tr(Aℋφ)` for the below side.
    pub min_signed_residual: T,
    /// Smallest signed centered second difference of `φ` along the axis,
    /// at the grid spacing.
    pub min_signed_second_difference: T,
}

#[derive(Clone, Copy, Debug)]
struct Quadratic<T> {
    base: PlanePoint<T>,
    value: T,
    grad: [T; 2],
    hess: [[T; 2]; 2],
}

impl<T: Scalar> Quadratic<T> {
    fn eval(&self, p: PlanePoint<T>) -> T {
        let (sx, sy) = (p.x - self.base.x, p.y - self.base.y);
        let half = T::lit(0.5);
        self.value
            + self.grad[0] * sx
            + self.grad[1] * sy
            + half * (self.hess[0][0] * sx * sx + (self.hess[0][1] + self.hess[0][1]) * sx * sy + self.hess[1][1] * sy * sy)
    }

    fn hessian(&self) -> SymMat<T> {
        SymMat::from_rows(&[vec![self.hess[0][0], self.hess[0][1]], vec![self.hess[0][1], self.hess[1][1]]]).expect("2x2")
    }
}

fn touch_base<T: Scalar>(t0: T, side: AxisSide) -> PlanePoint<T> {
    if side.on_x_axis() {
        PlanePoint::new(t0, T::zero())
    } else {
        PlanePoint::new(T::zero(), t0)
    }
}

/// Random quadratic equal to `v` at the base point. The gradient component
/// along the axis usually matches the one-sided slope of `v` exactly.
fn sample_quadratic<T: Scalar>(rng: &mut sampling::StreamRng, base: PlanePoint<T>, side: AxisSide) -> Quadratic<T> {
    use rand::Rng;
    let (_, v0) = eval_solutions(base);
    let along_slope = if side.on_x_axis() { base.x.signum() } else { -base.y.signum() };
    let along = if rng.gen_bool(0.75) {
        along_slope
    } else {
        along_slope + sampling::uniform(rng, T::lit(-0.05), T::lit(0.05))
    };
    let across = sampling::uniform(rng, T::lit(-1.5), T::lit(1.5));
    let grad = if side.on_x_axis() { [along, across] } else { [across, along] };
    let h = T::lit(2.0);
    let (a, b, c) = (
        sampling::uniform(rng, -h, h),
        sampling::uniform(rng, -h, h),
        sampling::uniform(rng, -h, h),
    );
    Quadratic { base, value: v0, grad, hess: [[a, b], [b, c]] }
}

fn touches<T: Scalar>(q: &Quadratic<T>, from_above: bool) -> bool {
    let k = TOUCH_GRID_POINTS as i64 / 2;
    let step = T::lit(TOUCH_GRID_RADIUS) / T::lit(k as f64);
    for i in -k..=k {
        for j in -k..=k {
            let p = PlanePoint::new(q.base.x + T::lit(i as f64) * step, q.base.y + T::lit(j as f64) * step);
            let gap = q.eval(p) - eval_solutions(p).1;
            if (from_above && gap < T::zero()) || (!from_above && gap > T::zero()) {
                return false;
            }
        }
    }
    true
}

/// Samples quadratics touching `v` at an axis point and checks the sign of
/// `tr(A·ℋφ)` for every accepted one.
pub fn axis_viscosity_check<T: Scalar>(t0: T, side: AxisSide, trials: usize, seed: u64) -> Result<AxisCheck<T>> {
    if t0 == T::zero() {
        return Err(Error::InvalidParameter("touching point must be off the origin".into()));
    }
    let base = touch_base(t0, side);
    let a = coefficient_matrix(base);
    let from_above = side.touches_from_above();
    let sign = if from_above { T::one() } else { -T::one() };
    let k = TOUCH_GRID_POINTS as i64 / 2;
    let step = T::lit(TOUCH_GRID_RADIUS) / T::lit(k as f64);
    let axis_dir = if side.on_x_axis() { (step, T::zero()) } else { (T::zero(), step) };

    let accepted: Vec<(T, T)> = (0..trials)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let q = sample_quadratic(&mut rng, base, side);
            if !touches(&q, from_above) {
                return None;
            }
            let residual = a.inner(&q.hessian()).ok()?;
            let fwd = q.eval(PlanePoint::new(base.x + axis_dir.0, base.y + axis_dir.1));
            let bwd = q.eval(PlanePoint::new(base.x - axis_dir.0, base.y - axis_dir.1));
            let second = (fwd - q.value - q.value + bwd) / (step * step);
            Some((sign * residual, sign * second))
        })
        .collect();

    if accepted.is_empty() {
        return Err(Error::NoTouchingFound);
    }
    let min_res = accepted.iter().fold(T::infinity(), |m, r| m.min(r.0));
    let min_sd = accepted.iter().fold(T::infinity(), |m, r| m.min(r.1));
    Ok(AxisCheck {
        side,
        base,
        trials,
        accepted: accepted.len(),
        pass: min_res >= T::lit(-1e-9),
        min_signed_residual: min_res,
        min_signed_second_difference: min_sd,
    })
}

/// Number of sampled quadratics the grid surrogate accepts on the sides where
/// no smooth test function can touch. A diagnostic only: a sampler can fail
/// to find a touching function but cannot prove none exists.
pub fn forbidden_touch_count<T: Scalar>(t0: T, side: AxisSide, trials: usize, seed: u64) -> usize {
    let base = touch_base(t0, side);
    (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = sampling::stream(seed, i as u64);
            touches(&sample_quadratic(&mut rng, base, side), side.touches_from_above())
        })
        .count()
}

// ---------------------------------------------------------------------------
// Diamond domain
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryGap<T: Scalar> {
    /// `min (u − v)` over the sampled boundary.
    pub min_gap: T,
    pub worst_point: PlanePoint<T>,
    /// Minimum per edge, in the order ℓ₁⁺, ℓ₁⁻, ℓ₂⁺, ℓ₂⁻.
    pub edge_min: [T; 4],
    pub samples_per_edge: usize,
}

/// The four boundary segments of `|y| < min(x, 1−x)`, each parametrized on `[0, 1]`.
pub fn diamond_edge_point<T: Scalar>(edge: usize, s: T) -> PlanePoint<T> {
    let half = T::lit(0.5);
    match edge {
        0 => PlanePoint::new(half * s, half * s),
        1 => PlanePoint::new(half * s, -(half * s)),
        2 => {
            let x = half + half * s;
            PlanePoint::new(x, T::one() - x)
        }
        3 => {
            let x = half + half * s;
            PlanePoint::new(x, -(T::one() - x))
        }
        _ => panic!("diamond has four edges"),
    }
}

/// `min (u − v)` over evenly spaced points on each of the four edges,
/// endpoints included.
pub fn boundary_comparison<T: Scalar>(samples_per_edge: usize) -> Result<BoundaryGap<T>> {
    if samples_per_edge < 2 {
        return Err(Error::InvalidCount);
    }
    let denom = T::lit((samples_per_edge - 1) as f64);
    let mut edge_min = [T::infinity(); 4];
    let mut best = (T::infinity(), PlanePoint::new(T::zero(), T::zero()));
    for (edge, slot) in edge_min.iter_mut().enumerate() {
        for k in 0..samples_per_edge {
            let p = diamond_edge_point(edge, T::lit(k as f64) / denom);
            let (u, v) = eval_solutions(p);
            let gap = u - v;
            *slot = slot.min(gap);
            if gap < best.0 {
                best = (gap, p);
            }
        }
    }
    Ok(BoundaryGap { min_gap: best.0, worst_point: best.1, edge_min, samples_per_edge })
}

#[derive(Clone, Debug, Serialize)]
pub struct InteriorViolation<T: Scalar> {
    pub max_gap: T,
    pub argmax_x: T,
    pub grid_step: T,
}

/// `v(x, 0) − u(x, 0) = x − x^{4/3}`.
pub fn axis_gap<T: Scalar>(x: T) -> T {
    let (u, v) = eval_solutions(PlanePoint::new(x, T::zero()));
    v - u
}

/// Largest `v − u` on the segment `y = 0, 0 < x < 1`: a grid search at step
/// `1e-6` followed by golden-section refinement.
pub fn interior_violation<T: Scalar>() -> InteriorViolation<T> {
    const STEPS: usize = 1_000_000;
    let step = T::one() / T::lit(STEPS as f64);
    let (best_gap, best_k) = (1..STEPS)
        .into_par_iter()
        .map(|k| (axis_gap(T::lit(k as f64) * step), k))
        .reduce(|| (T::neg_infinity(), usize::MAX), argmax_lowest_index);

    let center = T::lit(best_k as f64) * step;
    let (mut lo, mut hi) = (center - step, center + step);
    let ratio = T::lit(0.5 * (5f64.sqrt() - 1.0));
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (axis_gap(c), axis_gap(d));
    for _ in 0..200 {
        if hi - lo <= T::tiny_rel(1e-15) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = axis_gap(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = axis_gap(d);
        }
    }
    let refined = T::lit(0.5) * (lo + hi);
    let refined_gap = axis_gap(refined);
    let (max_gap, argmax_x) = if refined_gap >= best_gap { (refined_gap, refined) } else { (best_gap, center) };
    InteriorViolation { max_gap, argmax_x, grid_step: step }
}

fn argmax_lowest_index<T: Scalar>(a: (T, usize), b: (T, usize)) -> (T, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// CSV profile of `u`, `v` and `v − u` along `y = 0`.
pub fn axis_profile_csv<T: Scalar>(samples: usize) -> String {
    let mut out = String::from("x,u,v,v_minus_u\n");
    let denom = T::lit(samples.saturating_sub(1).max(1) as f64);
    for k in 0..samples {
        let x = T::lit(k as f64) / denom;
        let (u, v) = eval_solutions(PlanePoint::new(x, T::zero()));
        out.push_str(&format!("{},{},{},{}\n", x, u, v, v - u));
    }
    out
}

// ---------------------------------------------------------------------------
// Touching quadratic on a grid
// ---------------------------------------------------------------------------

/// Values on the nodes of a regular axis-aligned grid.
///
/// A node is a boundary node when one of its four grid neighbours is missing.
#[derive(Clone, Debug, Serialize)]
pub struct GridFunction<T: Scalar> {
    pub nodes: Vec<PlanePoint<T>>,
    pub values: Vec<T>,
    pub boundary: Vec<bool>,
    pub spacing: T,
}

impl<T: Scalar> GridFunction<T> {
    /// Nodes `(i·h, j·h)` inside `[lo, hi]²` that satisfy `keep`.
    pub fn on_mask(
        spacing: T,
        lo: T,
        hi: T,
        keep: impl Fn(PlanePoint<T>) -> bool,
        f: impl Fn(PlanePoint<T>) -> T,
    ) -> Result<Self> {
        if !(spacing > T::zero()) {
            return Err(Error::InvalidParameter("grid spacing must be positive".into()));
        }
        let i_lo = (lo / spacing).ceil().to_i64().unwrap_or(0);
        let i_hi = (hi / spacing).floor().to_i64().unwrap_or(0);
        let mut keys = Vec::new();
        let mut nodes = Vec::new();
        for i in i_lo..=i_hi {
            for j in i_lo..=i_hi {
                let p = PlanePoint::new(T::lit(i as f64) * spacing, T::lit(j as f64) * spacing);
                if keep(p) {
                    keys.push((i, j));
                    nodes.push(p);
                }
            }
        }
        let set: HashSet<(i64, i64)> = keys.iter().copied().collect();
        let boundary = keys
            .iter()
            .map(|&(i, j)| [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(di, dj)| !set.contains(&(i + di, j + dj))))
            .collect();
        let values = nodes.iter().map(|&p| f(p)).collect();
        Ok(Self { nodes, values, boundary, spacing })
    }

    /// Closed diamond `|y| ≤ min(x, 1−x)`, optionally cut at `x ≥ cut`.
    pub fn diamond(spacing: T, cut: Option<T>, f: impl Fn(PlanePoint<T>) -> T) -> Result<Self> {
        let slack = spacing * T::lit(1e-9);
        let cut = cut.unwrap_or(T::zero());
        Self::on_mask(
            spacing,
            T::lit(-1.0),
            T::lit(1.0),
            |p| p.x >= cut - slack && p.y.abs() <= p.x.min(T::one() - p.x) + slack,
            f,
        )
    }

    /// Closed disk of `radius` around the origin.
    pub fn disk(spacing: T, radius: T, f: impl Fn(PlanePoint<T>) -> T) -> Result<Self> {
        Self::on_mask(spacing, -radius, radius, |p| p.norm_sq() <= radius * radius, f)
    }
}

/// `v − (u + κ)` on the diamond grid, where `κ ≥ 0` lifts `u` above `v`
/// along the cut segment when the corner at the origin is removed.
pub fn diamond_difference<T: Scalar>(spacing: T, cut: Option<T>) -> Result<GridFunction<T>> {
    let lift = match cut {
        None => T::zero(),
        Some(c) => {
            let mut lift = T::zero();
            let steps = 1000;
            let top = c.min(T::one() - c);
            for k in 0..=steps {
                let y = top * (T::lit(2.0 * k as f64 / steps as f64) - T::one());
                let (u, v) = eval_solutions(PlanePoint::new(c, y));
                lift = lift.max(v - u);
            }
            lift
        }
    };
    GridFunction::diamond(spacing, cut, |p| {
        let (u, v) = eval_solutions(p);
        v - (u + lift)
    })
}

/// `φ(p) = a + bᵀp − (m/2)|p|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TouchingQuadratic<T: Scalar> {
    pub a: T,
    pub b: [T; 2],
    pub m: T,
}

impl<T: Scalar> TouchingQuadratic<T> {
    pub fn eval(&self, p: PlanePoint<T>) -> T {
        self.a + self.b[0] * p.x + self.b[1] * p.y - T::lit(0.5) * self.m * p.norm_sq()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Touching<T: Scalar> {
    pub phi: TouchingQuadratic<T>,
    pub touch_point: PlanePoint<T>,
    pub touch_index: usize,
    /// `max w` over the nodes.
    pub beta: T,
    /// `max (w + m|p|²)`.
    pub c: T,
}

/// Concave quadratic touching `w` strictly from above at an interior node.
///
/// With `β = max w`, `m = β/R²` and `c = max(w + m|p|²)` the paraboloid
/// `c − m|p|²` dominates `w` and meets it at the maximizer `p₀`, which cannot
/// be a boundary node since there `w + m|p|² < β ≤ c`. Adding
/// `(m/2)|p − p₀|²` makes the contact strict.
pub fn build_touching_quadratic<T: Scalar>(w: &GridFunction<T>, radius: T) -> Result<Touching<T>> {
    if !(radius > T::zero()) {
        return Err(Error::InvalidRadius(radius.to_f64_lossy()));
    }
    let r2 = radius * radius;
    if let Some(p) = w.nodes.iter().find(|p| p.norm_sq() >= r2) {
        return Err(Error::PreconditionNotMet(format!("node ({}, {}) lies outside B_R(0)", p.x, p.y)));
    }
    if let Some(i) = (0..w.nodes.len()).find(|&i| w.boundary[i] && w.values[i] > T::zero()) {
        return Err(Error::BoundaryViolation { node: i, value: w.values[i].to_f64_lossy() });
    }
    let beta = w.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    if !(beta > T::zero()) {
        return Err(Error::NoPositiveMax);
    }
    let m = beta / r2;
    let (c, idx) = w
        .nodes
        .par_iter()
        .zip(w.values.par_iter())
        .enumerate()
        .map(|(i, (p, &v))| (v + m * p.norm_sq(), i))
        .reduce(|| (T::neg_infinity(), usize::MAX), argmax_lowest_index);
    let p0 = w.nodes[idx];
    let half_m = T::lit(0.5) * m;
    let phi = TouchingQuadratic { a: c + half_m * p0.norm_sq(), b: [-(m * p0.x), -(m * p0.y)], m };
    Ok(Touching { phi, touch_point: p0, touch_index: idx, beta, c })
}

#[derive(Clone, Debug, Serialize)]
pub struct TouchingCheck<T: Scalar> {
    /// `|φ(p₀) − w(p₀)|`.
    pub contact_error: T,
    /// `min (φ − w − (m/2)|p − p₀|²)` over the other nodes.
    pub min_margin_slack: T,
    pub interior: bool,
}

pub fn verify_touching<T: Scalar>(w: &GridFunction<T>, t: &Touching<T>) -> TouchingCheck<T> {
    let p0 = t.touch_point;
    let half_m = T::lit(0.5) * t.phi.m;
    let min_margin_slack = w
        .nodes
        .par_iter()
        .zip(w.values.par_iter())
        .enumerate()
        .filter(|(i, _)| *i != t.touch_index)
        .map(|(_, (&p, &v))| t.phi.eval(p) - v - half_m * p.dist_sq(p0))
        .reduce(|| T::infinity(), T::min);
    TouchingCheck {
        contact_error: (t.phi.eval(p0) - w.values[t.touch_index]).abs(),
        min_margin_slack,
        interior: !w.boundary[t.touch_index],
    }
}

// ---------------------------------------------------------------------------
// Certificate
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ResidualStats<T: Scalar> {
    pub samples: usize,
    pub max_abs_residual: T,
    pub max_rank_one_error: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct ForbiddenTouches {
    pub above_v_on_y_axis: usize,
    pub below_v_on_x_axis: usize,
    pub trials: usize,
}

/// Everything the counterexample asserts, gathered in one report.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate<T: Scalar> {
    pub boundary_min_gap: T,
    pub boundary_worst_point: PlanePoint<T>,
    pub boundary_samples_per_edge: usize,
    pub interior_max_gap: T,
    pub argmax_x: T,
    pub residual_stats: ResidualStats<T>,
    pub axis_check_results: Vec<AxisCheck<T>>,
    pub forbidden_touches: ForbiddenTouches,
    pub touching: Touching<T>,
    pub touching_check: TouchingCheck<T>,
    pub grid_spacing: T,
}

#[derive(Clone, Debug)]
pub struct CertificateConfig {
    /// Grid resolution: spacing `1/grid` on the diamond, `100·grid` boundary
    /// samples per edge.
    pub grid: usize,
    pub residual_samples: usize,
    pub axis_trials: usize,
    pub seed: u64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self { grid: 256, residual_samples: 10_000, axis_trials: 500, seed: 0 }
    }
}

/// Random off-axis points inside the diamond.
pub fn diamond_samples<T: Scalar>(count: usize, seed: u64) -> Vec<PlanePoint<T>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            loop {
                let x = sampling::uniform(&mut rng, T::zero(), T::one());
                let y = sampling::uniform(&mut rng, -T::lit(0.5), T::lit(0.5));
                if y.abs() < x.min(T::one() - x) && y != T::zero() && x != T::zero() {
                    return PlanePoint::new(x, y);
                }
            }
        })
        .collect()
}

pub fn residual_stats<T: Scalar>(count: usize, seed: u64) -> ResidualStats<T> {
    let points = diamond_samples::<T>(count, seed);
    let (max_res, max_rank) = points
        .par_iter()
        .map(|&p| {
            let r = classical_residual_u(p).map(|r| r.abs()).unwrap_or(T::infinity());
            let q = q_vector(p);
            let e = coefficient_matrix(p).max_abs_diff(&SymMat::rank_one(&q));
            (r, e)
        })
        .reduce(|| (T::zero(), T::zero()), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    ResidualStats { samples: count, max_abs_residual: max_res, max_rank_one_error: max_rank }
}

pub fn certificate<T: Scalar>(cfg: &CertificateConfig) -> Result<Certificate<T>> {
    if cfg.grid < 2 {
        return Err(Error::InvalidParameter("grid must be at least 2".into()));
    }
    let boundary = boundary_comparison::<T>(100 * cfg.grid)?;
    let interior = interior_violation::<T>();
    let residual = residual_stats::<T>(cfg.residual_samples, sampling::derive_seed(cfg.seed, 1));
    let half = T::lit(0.5);
    let axis_check_results = vec![
        axis_viscosity_check(half, AxisSide::AboveVOnXAxis, cfg.axis_trials, sampling::derive_seed(cfg.seed, 2))?,
        axis_viscosity_check(half, AxisSide::BelowVOnYAxis, cfg.axis_trials, sampling::derive_seed(cfg.seed, 3))?,
    ];
    let forbidden_touches = ForbiddenTouches {
        above_v_on_y_axis: forbidden_touch_count(half, AxisSide::AboveVOnYAxis, cfg.axis_trials, sampling::derive_seed(cfg.seed, 4)),
        below_v_on_x_axis: forbidden_touch_count(half, AxisSide::BelowVOnXAxis, cfg.axis_trials, sampling::derive_seed(cfg.seed, 5)),
        trials: cfg.axis_trials,
    };
    let spacing = T::one() / T::lit(cfg.grid as f64);
    let w = diamond_difference(spacing, None)?;
    let touching = build_touching_quadratic(&w, T::lit(2.0))?;
    let touching_check = verify_touching(&w, &touching);
    Ok(Certificate {
        boundary_min_gap: boundary.min_gap,
        boundary_worst_point: boundary.worst_point,
        boundary_samples_per_edge: boundary.samples_per_edge,
        interior_max_gap: interior.max_gap,
        argmax_x: interior.argmax_x,
        residual_stats: residual,
        axis_check_results,
        forbidden_touches,
        touching,
        touching_check,
        grid_spacing: spacing,
    })
}

impl<T: Scalar> Certificate<T> {
    /// Failed assertions, empty when the certificate holds.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.boundary_min_gap < T::lit(-1e-12) {
            out.push(format!("boundary gap {} below -1e-12", self.boundary_min_gap));
        }
        if !(self.interior_max_gap > T::zero()) {
            out.push(format!("no interior violation (max gap {})", self.interior_max_gap));
        }
        if self.residual_stats.max_abs_residual > T::lit(1e-12) {
            out.push(format!("classical residual {} above 1e-12", self.residual_stats.max_abs_residual));
        }
        if self.residual_stats.max_rank_one_error > T::lit(1e-14) {
            out.push(format!("rank-one error {} above 1e-14", self.residual_stats.max_rank_one_error));
        }
        let tc = &self.touching_check;
        if !tc.interior || tc.contact_error > T::lit(1e-12) || tc.min_margin_slack < T::lit(-1e-12) {
            out.push(format!(
                "touching quadratic: interior={} contact error {} margin slack {}",
                tc.interior, tc.contact_error, tc.min_margin_slack
            ));
        }
        for a in &self.axis_check_results {
            if !a.pass || a.accepted < 100 {
                out.push(format!("axis check {:?}: pass={} accepted={}", a.side, a.pass, a.accepted));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solution_values() {
        assert_eq!(eval_solutions(PlanePoint::new(1.0, 0.0)), (1.0, 1.0));
        let (u, v) = eval_solutions(PlanePoint::new(0.5, 0.5));
        assert_eq!((u, v), (0.0, 0.0));
        let (u, v) = eval_solutions(PlanePoint::new(27.0 / 64.0, 0.0));
        assert_abs_diff_eq!(v - u, 27.0 / 256.0, epsilon = 1e-16);
        let (u, _) = eval_solutions(PlanePoint::new(-8.0, 1.0));
        assert_abs_diff_eq!(u, 16.0 - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn coefficient_examples() {
        let a = coefficient_matrix(PlanePoint::new(1.0, 1.0));
        assert_eq!(a.to_rows(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let a = coefficient_matrix(PlanePoint::new(0.125, 0.0));
        assert_abs_diff_eq!(a.get(0, 0), 0.25, epsilon = 1e-16);
        assert_eq!((a.get(0, 1), a.get(1, 1)), (0.0, 0.0));
        assert_eq!(coefficient_matrix(PlanePoint::new(0.0, 0.0)), SymMat::zeros(2));
        let a = coefficient_matrix(PlanePoint::new(-0.3, 0.7));
        assert!(a.lambda_min().unwrap() > -1e-15);
    }

    #[test]
    fn residual_vanishes_off_axis_and_errors_on_it() {
        for p in [PlanePoint::new(0.5f64, 0.25), PlanePoint::new(1.0, 1.0), PlanePoint::new(-0.2, 0.9)] {
            assert!(classical_residual_u(p).unwrap().abs() <= 1e-12);
        }
        assert!(matches!(classical_residual_u(PlanePoint::new(1.0, 0.0)), Err(Error::OnAxis(..))));
    }

    #[test]
    fn max_principle_values() {
        assert_abs_diff_eq!(max_principle_witness(PlanePoint::new(1.0, 0.0), 1.0).unwrap(), -1.0);
        assert_eq!(max_principle_witness(PlanePoint::new(0.0, 0.0), 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(max_principle_witness(PlanePoint::new(1.0, 1.0), 2.0).unwrap(), -4.0);
        assert!(max_principle_witness(PlanePoint::new(1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn axis_checks() {
        let up = axis_viscosity_check(0.5, AxisSide::AboveVOnXAxis, 500, 1).unwrap();
        assert!(up.pass && up.accepted >= 100, "{up:?}");
        assert!(up.min_signed_second_difference >= -1e-9);
        let down = axis_viscosity_check(0.5, AxisSide::BelowVOnYAxis, 500, 2).unwrap();
        assert!(down.pass && down.accepted >= 100, "{down:?}");
        assert!(matches!(
            axis_viscosity_check(0.5, AxisSide::AboveVOnXAxis, 0, 1),
            Err(Error::NoTouchingFound)
        ));
        assert_eq!(forbidden_touch_count(0.5, AxisSide::AboveVOnYAxis, 500, 3), 0);
        assert_eq!(forbidden_touch_count(0.5, AxisSide::BelowVOnXAxis, 500, 3), 0);
    }

    #[test]
    fn boundary_gap_examples() {
        let g = boundary_comparison::<f64>(101).unwrap();
        assert_eq!(g.edge_min[0], 0.0);
        assert_eq!(g.edge_min[1], 0.0);
        assert!(g.min_gap >= -1e-12);
        let (u, v) = eval_solutions(PlanePoint::new(1.0, 0.0));
        assert_eq!(u - v, 0.0);
        let (u, _) = eval_solutions(PlanePoint::new(0.75, 0.25));
        assert!(u - (2.0 * 0.75 - 1.0) >= 0.0);
        assert!(boundary_comparison::<f64>(1).is_err());
    }

    #[test]
    fn touching_quadratic_on_a_disk() {
        let w = GridFunction::disk(0.05, 1.0, |p: PlanePoint<f64>| 1.0 - p.norm_sq()).unwrap();
        let mut w = w;
        for i in 0..w.nodes.len() {
            if w.boundary[i] {
                w.values[i] = 0.0;
            }
        }
        let t = build_touching_quadratic(&w, 2.0).unwrap();
        assert_eq!(t.touch_point, PlanePoint::new(0.0, 0.0));
        assert_abs_diff_eq!(t.phi.eval(t.touch_point), 1.0, epsilon = 1e-12);

        let neg = GridFunction::disk(0.1, 1.0, |_| -1.0).unwrap();
        assert!(matches!(build_touching_quadratic(&neg, 2.0), Err(Error::NoPositiveMax)));
        let raw = GridFunction::disk(0.1, 1.0, |p: PlanePoint<f64>| 1.0 - p.norm_sq()).unwrap();
        assert!(matches!(build_touching_quadratic(&raw, 2.0), Err(Error::BoundaryViolation { .. })));
    }

    #[test]
    fn touching_quadratic_dominates_strictly() {
        for cut in [None, Some(0.0625)] {
            let w = diamond_difference(1.0 / 64.0, cut).unwrap();
            let t = build_touching_quadratic(&w, 2.0).unwrap();
            assert!(!w.boundary[t.touch_index]);
            assert!(t.beta > 0.0);
            let p0 = t.touch_point;
            assert_abs_diff_eq!(t.phi.eval(p0), w.values[t.touch_index], epsilon = 1e-12);
            for (i, (&p, &v)) in w.nodes.iter().zip(&w.values).enumerate() {
                if i != t.touch_index {
                    assert!(t.phi.eval(p) - v >= 0.5 * t.phi.m * p.dist_sq(p0) - 1e-12);
                }
            }
        }
    }
}
