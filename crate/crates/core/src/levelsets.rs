//! Distances to level sets, the excess functional and the bounded Hausdorff
//! distance, plus sampled probes of the continuity condition on `x ↦ Θ±(x)`.
//!
//! Every distance is read off a bisection along `X + tI`:
//! `dist(X, Θ₊) = max(inf{t | X + tI ∈ Θ₊}, 0)` and
//! `dist(X, Θ₋) = max(−sup{t | X + tI ∈ Θ₋}, 0)` in operator norm. The two use
//! separate bisections, so combining them is a genuine cross-check of `F̄`.
//!
//! Sampled suprema are lower bounds of the true ones.

use rayon::prelude::*;
use serde::Serialize;

use crate::acdo;
use crate::error::{Error, Result};
use crate::operators::{dual_operator, EllipticOperator, Side};
use crate::sampling;
use crate::scalar::Scalar;
use crate::symmat::{resolvent_transform, SymMat};

/// Largest sample scale used by [`excess_estimate`], whatever `1/δ` is.
pub const EXCESS_SCALE_CAP: f64 = 1e3;
/// Smallest log-log decay slope accepted by [`check_condition`].
pub const DECAY_SLOPE_MIN: f64 = 0.5;
/// Largest final-row excess accepted by [`check_condition`].
pub const FINAL_EXCESS_MAX: f64 = 5e-2;

pub fn dist_to_level_set<T: Scalar>(op: &EllipticOperator<T>, m: &SymMat<T>, x: &[T], side: Side, tol: T) -> Result<T> {
    match side {
        Side::Plus => Ok(acdo::plus_bracket(op, m, x, tol)?.mid().max(T::zero())),
        Side::Minus => Ok((-acdo::minus_bracket(op, m, x, tol)?.mid()).max(T::zero())),
    }
}

/// `|tr(AZ) − f| / ‖A‖₁`, the operator-norm distance from `Z` to the
/// hyperplane `{tr(AY) = f}`.
pub fn ascoli_distance<T: Scalar>(a: &SymMat<T>, f: T, z: &SymMat<T>) -> Result<T> {
    let trace_norm = a.norms()?.trace;
    if trace_norm == T::zero() {
        return Err(Error::ZeroCoefficient);
    }
    Ok((a.inner(z)? - f).abs() / trace_norm)
}

const SAMPLE_ATTEMPTS: usize = 16;

/// One level-set sample from stream `(seed, index)`.
fn level_set_sample<T: Scalar>(
    op: &EllipticOperator<T>,
    x: &[T],
    side: Side,
    scale: T,
    seed: u64,
    index: usize,
    tol: T,
) -> Result<SymMat<T>> {
    let n = op.dim();
    let mut rng = sampling::stream(seed, index as u64);
    let lo = T::lit(1e-2).min(scale);
    for _ in 0..SAMPLE_ATTEMPTS {
        let w_scale = sampling::log_uniform(&mut rng, lo, scale);
        let w = sampling::sym_from_rng(&mut rng, n, w_scale);
        let z = acdo::project_into_side(op, &w, x, side, tol)?;
        let candidate = if index.is_multiple_of(8) {
            z
        } else {
            let bump = sampling::psd_bump(&mut rng, n, tol.min(scale), scale);
            match side {
                Side::Plus => &z + &bump,
                Side::Minus => &z - &bump,
            }
        };
        if side.contains(op.eval_unchecked(&candidate, x)?) {
            return Ok(candidate);
        }
    }
    Err(Error::PreconditionNotMet(format!(
        "no {side} level-set sample after {SAMPLE_ATTEMPTS} attempts; is the operator elliptic at 0?"
    )))
}

/// Matrices in the closed level set on `side`: projections onto `Γ(x)`
/// pushed inward by PSD bumps. Every eighth sample is left on the boundary.
pub fn sample_level_set<T: Scalar>(
    op: &EllipticOperator<T>,
    x: &[T],
    side: Side,
    count: usize,
    scale: T,
    seed: u64,
    tol: T,
) -> Result<Vec<SymMat<T>>> {
    if count == 0 {
        return Err(Error::InvalidCount);
    }
    if !(scale > T::zero()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    op.check_point(x)?;
    (0..count)
        .into_par_iter()
        .map(|i| level_set_sample(op, x, side, scale, seed, i, tol))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcessEstimate<T: Scalar> {
    pub value: T,
    pub samples_in: usize,
    /// Permuted matrix `Z = X(I ∓ δX)⁻¹` attaining `value`.
    pub witness: SymMat<T>,
    /// The level-set sample `X` that produced `witness`.
    pub witness_source: SymMat<T>,
    pub delta: T,
}

/// Distance, permuted matrix and its source sample.
type Scored<T> = (T, SymMat<T>, SymMat<T>);

/// Sampled `ex(Θ^{±δ}_side(x), Θ_side(y))`. The plus side maps with `+δ`,
/// the minus side with `−δ`.
#[allow(clippy::too_many_arguments)]
pub fn excess_estimate<T: Scalar>(
    op: &EllipticOperator<T>,
    x: &[T],
    y: &[T],
    delta: T,
    side: Side,
    count: usize,
    seed: u64,
    tol: T,
) -> Result<ExcessEstimate<T>> {
    if !(delta >= T::zero()) {
        return Err(Error::InvalidParameter(format!("delta must be non-negative, got {delta}")));
    }
    if count == 0 {
        return Err(Error::InvalidCount);
    }
    op.check_point(x)?;
    op.check_point(y)?;
    let cap = T::lit(EXCESS_SCALE_CAP);
    let scale = if delta > T::zero() { (T::one() / delta).min(cap) } else { cap };
    let signed_delta = side.sign::<T>() * delta;

    let items: Vec<Option<Scored<T>>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let xm = level_set_sample(op, x, side, scale, seed, i, tol)?;
            let z = match resolvent_transform(&xm, signed_delta) {
                Ok(z) => z,
                Err(Error::SingularShift { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let d = dist_to_level_set(op, &z, y, side, tol)?;
            Ok(Some((d, z, xm)))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<Scored<T>> = None;
    let mut samples_in = 0;
    for (d, z, xm) in items.into_iter().flatten() {
        samples_in += 1;
        if best.as_ref().is_none_or(|b| d > b.0) {
            best = Some((d, z, xm));
        }
    }
    let (value, witness, witness_source) = best.ok_or(Error::NoAcceptedSamples)?;
    Ok(ExcessEstimate { value, samples_in, witness, witness_source, delta })
}

/// Checks `B_radius(center) ⊆ Ω` on the axis points and a fixed spread of
/// sphere points.
pub fn check_ball<T: Scalar>(op: &EllipticOperator<T>, center: &[T], radius: T) -> Result<()> {
    op.check_point(center)?;
    let d = center.len();
    let mut probes: Vec<Vec<T>> = Vec::new();
    for k in 0..d {
        for s in [T::one(), -T::one()] {
            let mut p = center.to_vec();
            p[k] += s * radius;
            probes.push(p);
        }
    }
    for i in 0..64 {
        let mut rng = sampling::stream(0x5eed, i);
        let e = sampling::unit_vector::<T>(&mut rng, d);
        probes.push(center.iter().zip(&e).map(|(&c, &v)| c + radius * v).collect());
    }
    if probes.iter().all(|p| op.contains_point(p)) {
        Ok(())
    } else {
        Err(Error::BallOutsideDomain {
            center: center.iter().map(|v| v.to_f64_lossy()).collect(),
            radius: radius.to_f64_lossy(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionRow<T: Scalar> {
    pub t: T,
    pub sup_excess_plus: T,
    pub sup_excess_minus: T,
    pub pairs_sampled: usize,
    pub witness_plus: Option<PairWitness<T>>,
    pub witness_minus: Option<PairWitness<T>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairWitness<T: Scalar> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub delta: T,
    pub matrix: SymMat<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport<T: Scalar> {
    pub base_point: Vec<T>,
    pub rows: Vec<ConditionRow<T>>,
    /// Least-squares slope of `log max(sup_excess, tol)` against `log t`.
    pub decay_slope: T,
    pub final_sup_excess: T,
    /// Slope at least [`DECAY_SLOPE_MIN`] and final row at most [`FINAL_EXCESS_MAX`].
    pub trend_pass: bool,
    pub note: &'static str,
}

impl<T: Scalar> ConditionReport<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,sup_excess_plus,sup_excess_minus,pairs_sampled\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.t, r.sup_excess_plus, r.sup_excess_minus, r.pairs_sampled));
        }
        out
    }

    /// Largest of the two branches in each row.
    pub fn sup_excess(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.sup_excess_plus.max(r.sup_excess_minus)).collect()
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    let n = T::lit(xs.len() as f64);
    let mx = xs.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = ys.iter().fold(T::zero(), |a, &v| a + v) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == T::zero() {
        T::zero()
    } else {
        sxy / sxx
    }
}

type BranchHit<T> = Option<(T, PairWitness<T>)>;

type BranchMax<T> = (T, Option<PairWitness<T>>);

fn branch_sup<T: Scalar>(results: Vec<Option<(T, PairWitness<T>)>>) -> (BranchMax<T>, usize) {
    let mut accepted = 0;
    let mut best: BranchMax<T> = (T::zero(), None);
    for (v, w) in results.into_iter().flatten() {
        accepted += 1;
        if best.1.is_none() || v > best.0 {
            best = (v, Some(w));
        }
    }
    (best, accepted)
}

/// Two points of `B_t(x0)`: independent, or (`close`) with `|x − y|`
/// log-uniform in `[1e-4·t, 2t]`. Near-coincident pairs matter because the
/// permutation strength `δ = |x − y|²/t` vanishes faster than `|x − y|`.
fn sample_pair<T: Scalar>(rng: &mut sampling::StreamRng, x0: &[T], t: T, close: bool) -> (Vec<T>, Vec<T>) {
    let x = sampling::point_in_ball(rng, x0, t);
    if !close {
        return (x, sampling::point_in_ball(rng, x0, t));
    }
    let t2 = t * t;
    loop {
        let r = sampling::log_uniform(rng, T::lit(1e-4) * t, t + t);
        let e = sampling::unit_vector::<T>(rng, x0.len());
        let y: Vec<T> = x.iter().zip(&e).map(|(&a, &b)| a + r * b).collect();
        let d2 = y.iter().zip(x0).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        if d2 <= t2 {
            return (x, y);
        }
    }
}

/// Probes the continuity condition near `x0`.
///
/// For each `t`, pairs `x, y` are drawn in `B_t(x0)` (every other pair
/// near-coincident), `δ = |x − y|²/t`, and
/// the sampled excess is maximized over pairs. The plus branch uses `F`; the
/// minus branch runs the same machinery on the dual operator.
#[allow(clippy::too_many_arguments)]
pub fn check_condition<T: Scalar>(
    op: &EllipticOperator<T>,
    x0: &[T],
    t_schedule: &[T],
    pairs: usize,
    samples_per_pair: usize,
    seed: u64,
    tol: T,
) -> Result<ConditionReport<T>> {
    if t_schedule.is_empty() || pairs == 0 || samples_per_pair == 0 {
        return Err(Error::InvalidCount);
    }
    if t_schedule.iter().any(|&t| !(t > T::zero())) || t_schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("t schedule must be positive and strictly decreasing".into()));
    }
    for &t in t_schedule {
        check_ball(op, x0, t)?;
    }
    let dual = dual_operator(op);

    let mut rows = Vec::with_capacity(t_schedule.len());
    for (ti, &t) in t_schedule.iter().enumerate() {
        let pair_seed = sampling::derive_seed(seed, 2 * ti as u64);
        let sample_seed = sampling::derive_seed(seed, 2 * ti as u64 + 1);
        let per_pair: Vec<(BranchHit<T>, BranchHit<T>)> = (0..pairs)
            .into_par_iter()
            .map(|p| {
                let mut rng = sampling::stream(pair_seed, p as u64);
                let (x, y) = sample_pair(&mut rng, x0, t, p % 2 == 1);
                let d2 = x.iter().zip(&y).fold(T::zero(), |a, (&u, &v)| a + (u - v) * (u - v));
                let delta = d2 / t;
                let s = sampling::derive_seed(sample_seed, p as u64);
                let run = |f: &EllipticOperator<T>| -> Result<Option<(T, PairWitness<T>)>> {
                    match excess_estimate(f, &x, &y, delta, Side::Plus, samples_per_pair, s, tol) {
                        Ok(e) => Ok(Some((
                            e.value,
                            PairWitness { x: x.clone(), y: y.clone(), delta, matrix: e.witness },
                        ))),
                        Err(Error::NoAcceptedSamples) => Ok(None),
                        Err(e) => Err(e),
                    }
                };
                Ok((run(op)?, run(&dual)?))
            })
            .collect::<Result<_>>()?;
        let (plus, minus): (Vec<_>, Vec<_>) = per_pair.into_iter().unzip();
        let ((sup_plus, w_plus), n_plus) = branch_sup(plus);
        let ((sup_minus, w_minus), n_minus) = branch_sup(minus);
        rows.push(ConditionRow {
            t,
            sup_excess_plus: sup_plus,
            sup_excess_minus: sup_minus,
            pairs_sampled: n_plus.min(n_minus),
            witness_plus: w_plus,
            witness_minus: w_minus,
        });
    }

    let sup: Vec<T> = rows.iter().map(|r| r.sup_excess_plus.max(r.sup_excess_minus)).collect();
    let logs_t: Vec<T> = rows.iter().map(|r| r.t.ln()).collect();
    let logs_e: Vec<T> = sup.iter().map(|&e| e.max(tol).ln()).collect();
    let decay_slope = ls_slope(&logs_t, &logs_e);
    let final_sup_excess = *sup.last().expect("non-empty schedule");
    let trend_pass = decay_slope >= T::lit(DECAY_SLOPE_MIN) && final_sup_excess <= T::lit(FINAL_EXCESS_MAX);
    Ok(ConditionReport {
        base_point: x0.to_vec(),
        rows,
        decay_slope,
        final_sup_excess,
        trend_pass,
        note: "sampled suprema are lower bounds; a passing trend is evidence, not proof",
    })
}

/// Sampled `d_R(Θ₊(x), Θ₊(y)) = sup_{|X|<R} |dist(X, Θ₊(x)) − dist(X, Θ₊(y))|`.
///
/// Half of the samples are pushed to the sphere `|X| = R(1 − 1e-12)` by
/// replacing every eigenvalue with `±R`, where the supremum of a difference
/// of 1-Lipschitz functions tends to sit.
pub fn bounded_hausdorff<T: Scalar>(
    op: &EllipticOperator<T>,
    x: &[T],
    y: &[T],
    radius: T,
    count: usize,
    seed: u64,
    tol: T,
) -> Result<T> {
    if !(radius > T::zero()) {
        return Err(Error::InvalidRadius(radius.to_f64_lossy()));
    }
    if count == 0 {
        return Err(Error::InvalidCount);
    }
    op.check_point(x)?;
    op.check_point(y)?;
    let n = op.dim();
    let r_in = radius * (T::one() - T::lit(1e-12));
    let diffs: Vec<T> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let raw = sampling::sym_from_rng(&mut rng, n, T::one());
            let m = if i % 2 == 0 {
                raw.map_spectrum(|l| if l >= T::zero() { r_in } else { -r_in })?
            } else {
                let op_norm = raw.op_norm()?.max(T::lit(1e-12));
                let u: T = sampling::uniform(&mut rng, T::zero(), T::one());
                raw.scaled(r_in * u.powf(T::lit(0.25)) / op_norm)
            };
            let dx = dist_to_level_set(op, &m, x, Side::Plus, tol)?;
            let dy = dist_to_level_set(op, &m, y, Side::Plus, tol)?;
            Ok((dx - dy).abs())
        })
        .collect::<Result<_>>()?;
    Ok(diffs.into_iter().fold(T::zero(), T::max))
}

/// `max |F̄(X₀, y) − F̄(X₀, x₀)|` over `y` sampled in `B_r(x₀)`, per radius.
pub fn gamma_continuity_probe<T: Scalar>(
    op: &EllipticOperator<T>,
    m: &SymMat<T>,
    x0: &[T],
    radii: &[T],
    samples: usize,
    seed: u64,
    tol: T,
) -> Result<Vec<(T, T)>> {
    let base = acdo::compute_acdo(op, m, x0, tol)?.value;
    radii
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            check_ball(op, x0, r)?;
            let s = sampling::derive_seed(seed, k as u64);
            let worst: Vec<T> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = sampling::stream(s, i as u64);
                    let y = sampling::point_in_ball(&mut rng, x0, r);
                    Ok((acdo::compute_acdo(op, m, &y, tol)?.value - base).abs())
                })
                .collect::<Result<_>>()?;
            Ok((r, worst.into_iter().fold(T::zero(), T::max)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{make_operator, OperatorSpec};
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-10;

    fn op(spec: OperatorSpec) -> EllipticOperator<f64> {
        make_operator(&spec).unwrap()
    }

    fn half_identity() -> OperatorSpec {
        OperatorSpec::linear_constant(vec![vec![0.5, 0.0], vec![0.0, 0.5]], 0.0)
    }

    #[test]
    fn distance_examples() {
        let x = [0.0, 0.0];
        let lin = op(half_identity());
        assert_abs_diff_eq!(dist_to_level_set(&lin, &SymMat::scalar(2, -1.0), &x, Side::Plus, TOL).unwrap(), 1.0, epsilon = TOL);
        assert_eq!(dist_to_level_set(&lin, &SymMat::identity(2), &x, Side::Plus, TOL).unwrap(), 0.0);
        let me = op(OperatorSpec::max_eigenvalue(2));
        assert_abs_diff_eq!(dist_to_level_set(&me, &SymMat::scalar(2, -3.0), &x, Side::Plus, TOL).unwrap(), 3.0, epsilon = TOL);
        assert_abs_diff_eq!(dist_to_level_set(&me, &SymMat::scalar(2, 2.0), &x, Side::Minus, TOL).unwrap(), 2.0, epsilon = TOL);
    }

    #[test]
    fn ascoli_examples() {
        let a = SymMat::diag(&[0.5, 0.5]);
        assert_abs_diff_eq!(ascoli_distance(&a, 0.0, &SymMat::diag(&[-1.0, -1.0])).unwrap(), 1.0);
        assert_eq!(ascoli_distance(&a, 1.0, &SymMat::identity(2)).unwrap(), 0.0);
        let a = SymMat::diag(&[1.0, 0.0]);
        assert_abs_diff_eq!(ascoli_distance(&a, 2.0, &SymMat::diag(&[1.0, 99.0])).unwrap(), 1.0);
        assert!(matches!(ascoli_distance(&SymMat::zeros(2), 0.0, &SymMat::identity(2)), Err(Error::ZeroCoefficient)));
    }

    #[test]
    fn level_set_samples_are_members() {
        let x = [0.0, 0.0];
        let lap = op(OperatorSpec::laplacian(2));
        for m in sample_level_set(&lap, &x, Side::Plus, 100, 5.0, 1, TOL).unwrap() {
            assert!(m.trace() >= -1e-9);
        }
        let ma = op(OperatorSpec::monge_ampere(2, 1.0, 0.0));
        for m in sample_level_set(&ma, &x, Side::Plus, 100, 5.0, 2, TOL).unwrap() {
            assert!(m.lambda_min().unwrap() >= -1e-9);
            assert!(m.determinant().unwrap() >= 1.0 - 1e-6);
        }
        assert!(matches!(sample_level_set(&lap, &x, Side::Plus, 0, 5.0, 1, TOL), Err(Error::InvalidCount)));
    }

    #[test]
    fn excess_vanishes_for_autonomous_operators() {
        let lap = op(OperatorSpec::laplacian(2));
        let e = excess_estimate(&lap, &[0.1, 0.0], &[0.4, -0.3], 0.05, Side::Plus, 200, 3, TOL).unwrap();
        assert!(e.value <= 2.0 * TOL && e.samples_in > 0);
        let ma = op(OperatorSpec::monge_ampere(2, 1.0, 1.0));
        let x = [0.2, 0.1];
        let e = excess_estimate(&ma, &x, &x, 0.0, Side::Plus, 200, 3, TOL).unwrap();
        assert!(e.value <= 2.0 * TOL);
        let again = dist_to_level_set(&ma, &e.witness, &x, Side::Plus, TOL).unwrap();
        assert!((again - e.value).abs() <= 1e-9);
    }

    #[test]
    fn excess_is_monotone_in_count() {
        let ce = op(OperatorSpec::counterexample_linear());
        let (x, y) = ([0.5, 0.02], [0.5, -0.02]);
        let a = excess_estimate(&ce, &x, &y, 0.01, Side::Plus, 50, 9, TOL).unwrap().value;
        let b = excess_estimate(&ce, &x, &y, 0.01, Side::Plus, 100, 9, TOL).unwrap().value;
        assert!(b >= a && a > 0.0);
    }

    #[test]
    fn bounded_hausdorff_examples() {
        let lin = op(half_identity());
        assert!(bounded_hausdorff(&lin, &[0.0, 0.0], &[0.0, 0.0], 1.0, 50, 0, TOL).unwrap() <= 2.0 * TOL);
        assert!(matches!(bounded_hausdorff(&lin, &[0.0, 0.0], &[0.0, 0.0], 0.0, 50, 0, TOL), Err(Error::InvalidRadius(_))));
    }

    #[test]
    fn ball_outside_domain() {
        let ce = op(OperatorSpec::counterexample_linear());
        assert!(check_ball(&ce, &[0.5, 0.0], 0.1).is_ok());
        assert!(matches!(check_ball(&ce, &[0.05, 0.0], 0.05), Err(Error::BallOutsideDomain { .. })));
    }

    #[test]
    fn slope_fit() {
        let xs = [0.0, 1.0, 2.0];
        assert_abs_diff_eq!(ls_slope(&xs, &[1.0, 3.0, 5.0]), 2.0);
    }
}
