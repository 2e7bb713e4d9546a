//! The associated consistent distance operator
//! `F̄(X, x) = −inf{t | X + tI ∈ Θ₊(x)}`.
//!
//! Everything here reduces to one-dimensional bisection along the ray
//! `t ↦ X + tI`. For an operator that is elliptic at 0, membership in `Θ₊` is
//! monotone along that ray, so a single sign change brackets the infimum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{EllipticOperator, Side};
use crate::scalar::Scalar;
use crate::symmat::SymMat;

/// Default bisection tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Bracket expansion stops at `|t| = 2²⁰`.
pub const T_MAX: f64 = 1_048_576.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct AcdoResult<T> {
    pub value: T,
    /// `X + t_lo·I ∉ Θ₊(x)` and `X + t_hi·I ∈ Θ₊(x)`.
    pub bracket: (T, T),
    pub evals: usize,
}

/// Bracket around the point where a monotone membership flips.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Bracket<T> {
    pub lo: T,
    pub hi: T,
    pub evals: usize,
}

impl<T: Scalar> Bracket<T> {
    pub fn mid(&self) -> T {
        self.lo + (self.hi - self.lo) * T::lit(0.5)
    }
}

/// Brackets the flip of a predicate that is false below and true above
/// some threshold, to width `tol` (or to adjacent floats).
pub fn bracket_threshold<T: Scalar>(mut above: impl FnMut(T) -> Result<bool>, tol: T) -> Result<Bracket<T>> {
    let t_max = T::lit(T_MAX);
    let mut evals = 1;
    let (mut lo, mut hi);
    if above(T::zero())? {
        hi = T::zero();
        let mut step = T::one();
        loop {
            if step > t_max {
                return Err(Error::NoBracket { t_max: T_MAX });
            }
            evals += 1;
            if !above(-step)? {
                lo = -step;
                break;
            }
            hi = -step;
            step = step + step;
        }
    } else {
        lo = T::zero();
        let mut step = T::one();
        loop {
            if step > t_max {
                return Err(Error::NoBracket { t_max: T_MAX });
            }
            evals += 1;
            if above(step)? {
                hi = step;
                break;
            }
            lo = step;
            step = step + step;
        }
    }
    while hi - lo > tol {
        let mid = lo + (hi - lo) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        evals += 1;
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Bracket { lo, hi, evals })
}

fn check_inputs<T: Scalar>(op: &EllipticOperator<T>, m: &SymMat<T>, x: &[T], tol: T) -> Result<()> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if m.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: m.dim() });
    }
    op.check_point(x)
}

/// Bracket of `inf{t | X + tI ∈ Θ₊(x)}`.
pub fn plus_bracket<T: Scalar>(op: &EllipticOperator<T>, m: &SymMat<T>, x: &[T], tol: T) -> Result<Bracket<T>> {
    check_inputs(op, m, x, tol)?;
    bracket_threshold(|t| Ok(Side::Plus.contains(op.eval_unchecked(&m.shifted(t), x)?)), tol)
}

/// Bracket of `sup{t | X + tI ∈ Θ₋(x)}`, found by its own bisection:
/// `lo` is inside `Θ₋`, `hi` is not.
pub fn minus_bracket<T: Scalar>(op: &EllipticOperator<T>, m: &SymMat<T>, x: &[T], tol: T) -> Result<Bracket<T>> {
    check_inputs(op, m, x, tol)?;
    bracket_threshold(|t| Ok(!Side::Minus.contains(op.eval_unchecked(&m.shifted(t), x)?)), tol)
}

pub fn compute_acdo<T: Scalar>(op: &EllipticOperator<T>, m: &SymMat<T>, x: &[T], tol: T) -> Result<AcdoResult<T>> {
    let b = plus_bracket(op, m, x, tol)?;
    Ok(AcdoResult { value: -b.mid(), bracket: (b.lo, b.hi), evals: b.evals })
}

/// Signed operator-norm distance to `Γ(x)`, positive inside `Θ₊(x)`.
/// It coincides with `F̄(X, x)`.
pub fn signed_distance_to_gamma<T: Scalar>(op: &EllipticOperator<T>, m: &SymMat<T>, x: &[T], tol: T) -> Result<T> {
    Ok(compute_acdo(op, m, x, tol)?.value)
}

/// `F̄` through the sublevel set: `−sup{t | X + tI ∈ Θ₋(x)}`.
pub fn acdo_from_minus<T: Scalar>(op: &EllipticOperator<T>, m: &SymMat<T>, x: &[T], tol: T) -> Result<T> {
    Ok(-minus_bracket(op, m, x, tol)?.mid())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct GapReport<T> {
    /// `sup{t | X + tI ∈ Θ₋(x)}`.
    pub sup_minus: T,
    /// `inf{t | X + tI ∈ Θ₊(x)}`.
    pub inf_plus: T,
    /// `inf_plus − sup_minus`. Far below zero when `Γ₀` is fat along the ray.
    pub gap: T,
}

pub fn sup_inf_gap<T: Scalar>(op: &EllipticOperator<T>, m: &SymMat<T>, x: &[T], tol: T) -> Result<GapReport<T>> {
    let sup_minus = minus_bracket(op, m, x, tol)?.mid();
    let inf_plus = plus_bracket(op, m, x, tol)?.mid();
    Ok(GapReport { sup_minus, inf_plus, gap: inf_plus - sup_minus })
}

/// `W − F̄(W, x)·I`, a point of `Γ(x)` up to `tol`.
pub fn project_to_gamma<T: Scalar>(op: &EllipticOperator<T>, w: &SymMat<T>, x: &[T], tol: T) -> Result<SymMat<T>> {
    let v = compute_acdo(op, w, x, tol)?.value;
    Ok(w.shifted(-v))
}

/// Point of the ray `W + tI` within `tol` of `Γ(x)` that is guaranteed to
/// lie in the closed level set on `side`.
pub fn project_into_side<T: Scalar>(
    op: &EllipticOperator<T>,
    w: &SymMat<T>,
    x: &[T],
    side: Side,
    tol: T,
) -> Result<SymMat<T>> {
    match side {
        Side::Plus => Ok(w.shifted(plus_bracket(op, w, x, tol)?.hi)),
        Side::Minus => Ok(w.shifted(minus_bracket(op, w, x, tol)?.lo)),
    }
}

/// Two quadratic solutions `φ = ½xᵀX₀x` and `ψ = ½xᵀ(X₀ − 2εI)x + ε = φ + ε(1 − |x|²)` of the
/// autonomous equation that agree on the unit sphere but differ inside.
#[derive(Clone, Debug, Serialize)]
pub struct FlatZeroPair<T: Scalar> {
    pub hessian_phi: SymMat<T>,
    pub hessian_psi: SymMat<T>,
    pub epsilon: T,
    pub f_phi: T,
    pub f_psi: T,
    /// `max |φ − ψ|` over the sampled unit sphere.
    pub boundary_max_diff: T,
    pub boundary_samples: usize,
    /// `ψ(0) − φ(0) = ε`.
    pub center_diff: T,
}

/// Builds a [`FlatZeroPair`] when `Γ₀` contains a segment of the ray through `X`.
///
/// `X₀` is the midpoint of the flat segment and `ε` is an eighth of its length,
/// so `ℋψ = X₀ − 2εI` stays inside the segment. Returns `None` when the gap is
/// not negative beyond `2·tol`.
pub fn flat_zero_pair<T: Scalar>(
    op: &EllipticOperator<T>,
    m: &SymMat<T>,
    x: &[T],
    tol: T,
    boundary_samples: usize,
    seed: u64,
) -> Result<Option<FlatZeroPair<T>>> {
    let gap = sup_inf_gap(op, m, x, tol)?;
    if gap.gap >= -(tol + tol) {
        return Ok(None);
    }
    let width = gap.sup_minus - gap.inf_plus;
    let x0 = m.shifted(T::lit(0.5) * (gap.sup_minus + gap.inf_plus));
    let epsilon = width / T::lit(8.0);
    let psi = x0.shifted(-(epsilon + epsilon));
    let finite = |v: crate::operators::ExtReal<T>| v.finite().unwrap_or(T::nan());
    let f_phi = finite(op.eval(&x0, x)?);
    let f_psi = finite(op.eval(&psi, x)?);

    let n = m.dim();
    let quad = |h: &SymMat<T>, p: &[T]| {
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc += h.get(i, j) * p[i] * p[j];
            }
        }
        T::lit(0.5) * acc
    };
    let mut worst = T::zero();
    for k in 0..boundary_samples {
        let mut rng = crate::sampling::stream(seed, k as u64);
        let p = crate::sampling::unit_vector::<T>(&mut rng, n);
        let phi = quad(&x0, &p);
        let psi_v = quad(&psi, &p) + epsilon;
        worst = worst.max((psi_v - phi).abs());
    }
    Ok(Some(FlatZeroPair {
        hessian_phi: x0,
        hessian_psi: psi,
        epsilon,
        f_phi,
        f_psi,
        boundary_max_diff: worst,
        boundary_samples,
        center_diff: epsilon,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{dual_operator, make_operator, OperatorSpec};
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-10;

    fn op(spec: OperatorSpec) -> EllipticOperator<f64> {
        make_operator(&spec).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let lap = op(OperatorSpec::laplacian(2));
        let r = compute_acdo(&lap, &SymMat::diag(&[4.0, 0.0]), &[0.0, 0.0], TOL).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = TOL);
        assert!(r.bracket.1 - r.bracket.0 <= TOL);

        let me = op(OperatorSpec::max_eigenvalue(3));
        for seed in 0..20 {
            let m = crate::symmat::random_sym::<f64>(3, 3.0, seed);
            let v = compute_acdo(&me, &m, &[0.0; 3], TOL).unwrap().value;
            assert_abs_diff_eq!(v, m.lambda_max().unwrap(), epsilon = TOL);
        }

        let ma = op(OperatorSpec::monge_ampere(2, 1.0, 0.0));
        let v = compute_acdo(&ma, &SymMat::scalar(2, 2.0), &[0.0, 0.0], TOL).unwrap().value;
        assert_abs_diff_eq!(v, 1.0, epsilon = TOL);
    }

    #[test]
    fn signed_distance_examples() {
        let lin = op(OperatorSpec::linear_constant(vec![vec![0.5, 0.0], vec![0.0, 0.5]], 0.0));
        let d = signed_distance_to_gamma(&lin, &SymMat::scalar(2, -1.0), &[0.0, 0.0], TOL).unwrap();
        assert_abs_diff_eq!(d, -1.0, epsilon = TOL);
        let me = op(OperatorSpec::max_eigenvalue(2));
        let d = signed_distance_to_gamma(&me, &SymMat::diag(&[-3.0, -5.0]), &[0.0, 0.0], TOL).unwrap();
        assert_abs_diff_eq!(d, -3.0, epsilon = TOL);
    }

    #[test]
    fn projection_examples() {
        let x = [0.0, 0.0];
        let lap = op(OperatorSpec::laplacian(2));
        let z = project_to_gamma(&lap, &SymMat::identity(2), &x, TOL).unwrap();
        assert!(z.max_abs_diff(&SymMat::zeros(2)) <= TOL);
        let ma = op(OperatorSpec::monge_ampere(2, 1.0, 0.0));
        let z = project_to_gamma(&ma, &SymMat::scalar(2, 2.0), &x, TOL).unwrap();
        assert!(z.max_abs_diff(&SymMat::identity(2)) <= TOL);
        assert!(signed_distance_to_gamma(&ma, &z, &x, TOL).unwrap().abs() <= 2.0 * TOL);
        let again = project_to_gamma(&ma, &z, &x, TOL).unwrap();
        assert!(again.max_abs_diff(&z) <= TOL);
    }

    #[test]
    fn gap_examples() {
        let x = [0.0, 0.0];
        let me = op(OperatorSpec::max_eigenvalue(2));
        let g = sup_inf_gap(&me, &SymMat::diag(&[0.0, 3.0]), &x, TOL).unwrap();
        assert_abs_diff_eq!(g.sup_minus, -3.0, epsilon = TOL);
        assert_abs_diff_eq!(g.inf_plus, -3.0, epsilon = TOL);

        let p = op(OperatorSpec::plateau(2, 1.0));
        let g = sup_inf_gap(&p, &SymMat::zeros(2), &x, TOL).unwrap();
        assert_abs_diff_eq!(g.sup_minus, 0.5, epsilon = TOL);
        assert_abs_diff_eq!(g.inf_plus, -0.5, epsilon = TOL);
        assert_abs_diff_eq!(g.gap, -1.0, epsilon = 2.0 * TOL);
    }

    #[test]
    fn flat_pair_for_plateau_only() {
        let x = [0.0, 0.0];
        let p = op(OperatorSpec::plateau(2, 1.0));
        let pair = flat_zero_pair(&p, &SymMat::zeros(2), &x, TOL, 360, 0).unwrap().unwrap();
        assert_eq!((pair.f_phi, pair.f_psi), (0.0, 0.0));
        assert!(pair.boundary_max_diff <= 1e-12);
        assert!(pair.center_diff > 0.1);
        let lap = op(OperatorSpec::laplacian(2));
        assert!(flat_zero_pair(&lap, &SymMat::zeros(2), &x, TOL, 10, 0).unwrap().is_none());
    }

    #[test]
    fn no_bracket_for_improper_operators() {
        let never = EllipticOperator::new("never", 2, 2, |_: &SymMat<f64>, _: &[f64]| {
            Ok(crate::operators::ExtReal::NegInf)
        });
        assert!(matches!(
            compute_acdo(&never, &SymMat::zeros(2), &[0.0, 0.0], TOL),
            Err(Error::NoBracket { .. })
        ));
        let ce = op(OperatorSpec::counterexample_linear());
        assert!(matches!(
            compute_acdo(&ce, &SymMat::zeros(2), &[0.0, 0.0], TOL),
            Err(Error::PointOutsideDomain(_))
        ));
    }

    #[test]
    fn dual_commutes_with_acdo() {
        let x = [0.2, -0.1];
        let ma = op(OperatorSpec::monge_ampere(2, 1.0, 1.0));
        let d = dual_operator(&ma);
        for seed in 0..50 {
            let m = crate::symmat::random_sym::<f64>(2, 3.0, seed);
            let lhs = compute_acdo(&d, &m, &x, TOL).unwrap().value;
            let rhs = -compute_acdo(&ma, &-&m, &x, TOL).unwrap().value;
            assert!((lhs - rhs).abs() <= 2.0 * TOL, "{lhs} vs {rhs}");
        }
    }
}
