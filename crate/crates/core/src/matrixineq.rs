//! The block inequality
//!
//! ```text
//! ⎡X   0⎤       ⎡ I  −I⎤
//! ⎣0  −Y⎦ ≼ α · ⎣−I   I⎦
//! ```
//!
//! and its resolvent form: it holds iff `εX < I` and `X(I − εX)⁻¹ ≼ Y` for
//! every `ε ∈ [0, 1/α)`. Also the two-factor inequality
//! `Q₁ᵀXQ₁ − Q₂ᵀX(I − δX)⁻¹Q₂ ≼ (1/δ)(Q₁ − Q₂)ᵀ(Q₁ − Q₂)` and
//! `X(I − δX)⁻¹ ≽ X + (δ/2)X²`.
//!
//! Orderings of large matrices are compared with the tolerance scaled by
//! `max(1, |·|)` of the matrices involved.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::{self, StreamRng};
use crate::scalar::Scalar;
use crate::symmat::{resolvent_transform, shifted_resolvent, Mat, SymMat};

/// Points in the default `ε` grid.
pub const GRID_POINTS: usize = 100;
/// The grid stops at `(1/α)(1 − GRID_GAP)`.
pub const GRID_GAP: f64 = 1e-6;
/// Fewest grid points for which the reverse check is meaningful.
pub const MIN_REVERSE_GRID: usize = 50;

#[derive(Clone, Debug, Serialize)]
pub struct BlockPair<T: Scalar> {
    pub x: SymMat<T>,
    pub y: SymMat<T>,
    pub alpha: T,
}

impl<T: Scalar> BlockPair<T> {
    pub fn new(x: SymMat<T>, y: SymMat<T>, alpha: T) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
        }
        if !(alpha > T::zero()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { x, y, alpha })
    }
}

/// `λₙ(diag(X, −Y) − α[[I, −I], [−I, I]])`.
pub fn block_defect<T: Scalar>(p: &BlockPair<T>) -> Result<T> {
    let n = p.x.dim();
    if p.y.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.y.dim() });
    }
    let mut m = SymMat::block_diag(&p.x, &-&p.y);
    let a = p.alpha;
    m = &m - &SymMat::from_fn(2 * n, |i, j| {
        if i == j {
            a
        } else if (i + n == j) || (j + n == i) {
            -a
        } else {
            T::zero()
        }
    });
    m.lambda_max()
}

pub fn block_inequality_holds<T: Scalar>(p: &BlockPair<T>, tol: T) -> Result<bool> {
    Ok(block_defect(p)? <= tol)
}

/// `ε_k = (1/α)(1 − 10^{−6k/(N−1)})`: starts at 0 and crowds toward `1/α`.
pub fn eps_grid<T: Scalar>(alpha: T, points: usize) -> Vec<T> {
    let top = T::one() / alpha;
    let last = T::lit(points.saturating_sub(1).max(1) as f64);
    let decades = -T::lit(GRID_GAP).log10();
    (0..points)
        .map(|k| top * (T::one() - T::lit(10.0).powf(-decades * T::lit(k as f64) / last)))
        .collect()
}

fn scaled_tol<T: Scalar>(tol: T, mats: &[&SymMat<T>]) -> Result<T> {
    let mut s = T::one();
    for m in mats {
        s = s.max(m.op_norm()?);
    }
    Ok(tol * s)
}

/// Outcome of the resolvent-form hypotheses on an `ε` grid.
#[derive(Clone, Debug, Serialize)]
pub struct GridCheck<T: Scalar> {
    pub pass: bool,
    /// First `ε` at which a hypothesis failed.
    pub witness_eps: Option<T>,
    pub checked: usize,
}

/// `εX < I` (with margin `tol`) and `X(I − εX)⁻¹ ≼ Y` for each grid `ε`
/// in `[0, 1/α)`.
fn resolvent_hypotheses<T: Scalar>(x: &SymMat<T>, y: &SymMat<T>, alpha: T, grid: &[T], tol: T) -> Result<GridCheck<T>> {
    let top = T::one() / alpha;
    let lmax = x.lambda_max()?;
    let mut checked = 0;
    for &eps in grid.iter().filter(|&&e| e >= T::zero() && e < top) {
        checked += 1;
        let ok = eps * lmax < T::one() + tol
            && match shifted_resolvent(x, eps) {
                Ok(r) => (y - &r).lambda_min()? >= -scaled_tol(tol, &[&r, y])?,
                Err(Error::SingularShift { .. }) => false,
                Err(e) => return Err(e),
            };
        if !ok {
            return Ok(GridCheck { pass: false, witness_eps: Some(eps), checked });
        }
    }
    Ok(GridCheck { pass: true, witness_eps: None, checked })
}

/// The block inequality implies the resolvent form on every grid point.
pub fn forward_direction_check<T: Scalar>(p: &BlockPair<T>, eps_grid: &[T], tol: T) -> Result<GridCheck<T>> {
    let defect = block_defect(p)?;
    if defect > scaled_tol(tol, &[&p.x, &p.y])? {
        return Err(Error::PreconditionNotMet(format!("block inequality fails with defect {defect}")));
    }
    resolvent_hypotheses(&p.x, &p.y, p.alpha, eps_grid, tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReverseCheck<T: Scalar> {
    pub hypotheses: GridCheck<T>,
    pub block_defect: T,
    /// Hypotheses hold on the grid and the block inequality holds.
    pub pass: bool,
}

/// If the resolvent form holds on a dense grid, the block inequality holds.
pub fn reverse_direction_check<T: Scalar>(
    x: &SymMat<T>,
    y: &SymMat<T>,
    alpha: T,
    eps_grid: &[T],
    tol: T,
) -> Result<ReverseCheck<T>> {
    let p = BlockPair::new(x.clone(), y.clone(), alpha)?;
    if eps_grid.len() < MIN_REVERSE_GRID {
        return Err(Error::PreconditionNotMet(format!(
            "reverse check needs at least {MIN_REVERSE_GRID} grid points, got {}",
            eps_grid.len()
        )));
    }
    let hypotheses = resolvent_hypotheses(x, y, alpha, eps_grid, tol)?;
    let block_defect = block_defect(&p)?;
    let pass = hypotheses.pass && block_defect <= scaled_tol(tol, &[x, y])?;
    Ok(ReverseCheck { hypotheses, block_defect, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmCheck<T: Scalar> {
    pub holds: bool,
    /// `λₙ(LHS − RHS)` in `S(m)`.
    pub defect: T,
}

/// `Q₁ᵀXQ₁ − Q₂ᵀX(I − δX)⁻¹Q₂ ≼ (1/δ)(Q₁ − Q₂)ᵀ(Q₁ − Q₂)`.
pub fn lemma_sm_check<T: Scalar>(x: &SymMat<T>, delta: T, q1: &Mat<T>, q2: &Mat<T>, tol: T) -> Result<SmCheck<T>> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if q1.rows() != q2.rows() || q1.cols() != q2.cols() {
        return Err(Error::DimensionMismatch { expected: q1.rows() * q1.cols(), got: q2.rows() * q2.cols() });
    }
    let r = resolvent_transform(x, delta)?;
    let a = x.congruence(q1)?;
    let b = r.congruence(q2)?;
    let rhs = q1.sub(q2)?.gram().scaled(T::one() / delta);
    let lhs = &a - &b;
    let defect = (&lhs - &rhs).lambda_max()?;
    Ok(SmCheck { holds: defect <= scaled_tol(tol, &[&a, &b, &rhs])?, defect })
}

/// `λ₁(X(I − δX)⁻¹ − X − (δ/2)X²)`, non-negative for `δ ≥ 0`.
pub fn xd_ineq_defect<T: Scalar>(x: &SymMat<T>, delta: T) -> Result<T> {
    let r = resolvent_transform(x, delta)?;
    (&(&r - x) - &x.square().scaled(delta * T::lit(0.5))).lambda_min()
}

/// Random `X` with log-uniform scale in `[0.1, 10]` and `δ` uniform in
/// `[0.01, 0.999]/|X|`.
pub fn random_x_delta<T: Scalar>(rng: &mut StreamRng, n: usize) -> Result<(SymMat<T>, T)> {
    let scale = sampling::log_uniform(rng, T::lit(0.1), T::lit(10.0));
    let x = sampling::sym_from_rng(rng, n, scale);
    let op = x.op_norm()?.max(T::lit(1e-12));
    let delta = sampling::uniform(rng, T::lit(0.01), T::lit(0.999)) / op;
    Ok((x, delta))
}

/// `(X, X(I − δX)⁻¹ + bump, 1/δ)` with `I − δX ≻ 0` only, so `X` may have
/// large negative eigenvalues.
pub fn random_block_pair<T: Scalar>(rng: &mut StreamRng, n: usize) -> Result<BlockPair<T>> {
    let scale = sampling::log_uniform(rng, T::lit(0.1), T::lit(10.0));
    let x = sampling::sym_from_rng(rng, n, scale);
    let lmax = x.lambda_max()?;
    let delta = if lmax > T::zero() {
        sampling::uniform(rng, T::lit(0.01), T::lit(0.999)) / lmax
    } else {
        sampling::log_uniform(rng, T::lit(0.01), T::lit(10.0))
    };
    let mut y = shifted_resolvent(&x, delta)?;
    if rng_bool(rng) {
        y = &y + &sampling::psd_bump(rng, n, T::lit(1e-3), scale);
    }
    BlockPair::new(x, y, T::one() / delta)
}

fn rng_bool(rng: &mut StreamRng) -> bool {
    use rand::Rng;
    rng.gen_bool(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn block_examples() {
        let z = SymMat::<f64>::zeros(2);
        assert!(block_inequality_holds(&BlockPair::new(z.clone(), z.clone(), 1.0).unwrap(), TOL).unwrap());
        let three = SymMat::scalar(2, 3.0);
        assert!(!block_inequality_holds(&BlockPair::new(three, z, 1.0).unwrap(), TOL).unwrap());
        for seed in 0..50 {
            let mut rng = sampling::stream(seed, 0);
            let (x, d) = random_x_delta::<f64>(&mut rng, 3).unwrap();
            let y = resolvent_transform(&x, d).unwrap();
            assert!(block_inequality_holds(&BlockPair::new(x, y, 1.0 / d).unwrap(), TOL).unwrap());
        }
    }

    #[test]
    fn grid_shape() {
        let g = eps_grid(2.0f64, GRID_POINTS);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.0);
        assert!((g[99] - 0.5 * (1.0 - 1e-6)).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn forward_examples() {
        for seed in 0..20 {
            let mut rng = sampling::stream(seed, 1);
            let p = random_block_pair::<f64>(&mut rng, 3).unwrap();
            let c = forward_direction_check(&p, &eps_grid(p.alpha, 10), TOL).unwrap();
            assert!(c.pass, "{c:?}");
            assert!(forward_direction_check(&p, &[0.0], TOL).unwrap().pass);
        }
        let bad = BlockPair::new(SymMat::scalar(2, 3.0), SymMat::zeros(2), 1.0).unwrap();
        assert!(matches!(forward_direction_check(&bad, &[0.0], TOL), Err(Error::PreconditionNotMet(_))));
    }

    #[test]
    fn reverse_examples() {
        let x = crate::symmat::random_sym::<f64>(3, 2.0, 11);
        let alpha = 2.0 * x.op_norm().unwrap();
        let y = resolvent_transform(&x, 1.0 / alpha).unwrap();
        let c = reverse_direction_check(&x, &y, alpha, &eps_grid(alpha, GRID_POINTS), TOL).unwrap();
        assert!(c.pass, "{c:?}");

        let y = x.shifted(100.0);
        let c = reverse_direction_check(&x, &y, alpha, &eps_grid(alpha, GRID_POINTS), TOL).unwrap();
        assert!(c.pass);

        let c = reverse_direction_check(&x, &x.shifted(-1.0), alpha, &eps_grid(alpha, GRID_POINTS), TOL).unwrap();
        assert!(!c.pass);
        assert_eq!(c.hypotheses.witness_eps, Some(0.0));
    }

    #[test]
    fn sm_examples() {
        let x = crate::symmat::random_sym::<f64>(3, 1.0, 5);
        let d = 0.5 / x.op_norm().unwrap();
        let i = Mat::identity(3);
        assert!(lemma_sm_check(&x, d, &i, &i, TOL).unwrap().holds);
        let big = SymMat::scalar(3, 4.0);
        assert!(matches!(lemma_sm_check(&big, 0.5, &i, &i, TOL), Err(Error::SingularShift { .. })));
    }

    #[test]
    fn xd_defect_nonnegative() {
        for seed in 0..100 {
            let mut rng = sampling::stream(seed, 2);
            let (x, d) = random_x_delta::<f64>(&mut rng, 4).unwrap();
            assert!(xd_ineq_defect(&x, d).unwrap() >= -1e-10);
        }
    }
}
