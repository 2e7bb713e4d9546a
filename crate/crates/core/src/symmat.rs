//! Dense symmetric matrices of small dimension.
//!
//! `SymMat` stores the full `n × n` array and keeps it exactly symmetric: every
//! constructor symmetrizes its input as `(M + Mᵀ)/2`, and every operation that
//! returns a `SymMat` either preserves symmetry algebraically or rebuilds the
//! result from an eigen-decomposition.
//!
//! Norm conventions follow the level-set geometry used throughout the crate:
//! the operator norm `|X| = max(-λ₁, λₙ)` measures distances, the Frobenius
//! norm `‖X‖₂` and the trace norm `‖X‖₁ = Σ|λᵢ|` appear in closed forms.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Default ordering tolerance for `psd_leq` and friends.
pub const DEFAULT_ORDER_TOL: f64 = 1e-10;

/// Dense real symmetric matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<T>>", try_from = "Vec<Vec<T>>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct SymMat<T> {
    n: usize,
    data: Vec<T>,
}

/// Dense rectangular matrix, row-major. Used for the `n × m` factors in
/// congruence products and for eigenvector bases.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Eigen-decomposition `X = Q·diag(λ)·Qᵀ` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Mat<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Norms<T> {
    pub op: T,
    pub frobenius: T,
    pub trace: T,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch { expected: c, got: bad.len() });
        }
        Ok(Self::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, rhs: &Mat<T>) -> Result<Mat<T>> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: rhs.rows });
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(T::zero(), |acc, k| acc + self.get(i, k) * rhs.get(k, j))
        }))
    }

    pub fn sub(&self, rhs: &Mat<T>) -> Result<Mat<T>> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, got: rhs.rows * rhs.cols });
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) - rhs.get(i, j)))
    }

    /// `MᵀM`, symmetric by construction.
    pub fn gram(&self) -> SymMat<T> {
        SymMat::from_fn(self.cols, |i, j| {
            (0..self.rows).fold(T::zero(), |acc, k| acc + self.get(k, i) * self.get(k, j))
        })
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn max_abs_diff(&self, other: &Mat<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Entries uniform in `[-scale, scale]`.
    pub fn random(rows: usize, cols: usize, scale: T, rng: &mut sampling::StreamRng) -> Self {
        Self::from_fn(rows, cols, |_, _| sampling::uniform(rng, -scale, scale))
    }
}

impl<T: Scalar> SymMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, T::one())
    }

    /// `c·I`.
    pub fn scalar(n: usize, c: T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds from an entry function, symmetrizing as `(f(i,j) + f(j,i))/2`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut raw = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                raw.push(f(i, j));
            }
        }
        let half = T::lit(0.5);
        let mut data = raw.clone();
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = if i == j { raw[i * n + j] } else { (raw[i * n + j] + raw[j * n + i]) * half };
            }
        }
        Self { n, data }
    }

    /// Square row list, symmetrized on input.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    /// Symmetric part of a square `Mat`.
    pub fn from_mat(m: &Mat<T>) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch { expected: m.rows, got: m.cols });
        }
        Ok(Self::from_fn(m.rows, |i, j| m.get(i, j)))
    }

    /// `vvᵀ`.
    pub fn rank_one(v: &[T]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = v[i] * v[j];
            }
        }
        m
    }

    /// `diag(a, b)` in `S(n_a + n_b)`.
    pub fn block_diag(a: &SymMat<T>, b: &SymMat<T>) -> Self {
        let (na, nb) = (a.n, b.n);
        let n = na + nb;
        let mut m = Self::zeros(n);
        for i in 0..na {
            for j in 0..na {
                m.data[i * n + j] = a.get(i, j);
            }
        }
        for i in 0..nb {
            for j in 0..nb {
                m.data[(na + i) * n + na + j] = b.get(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    pub fn to_mat(&self) -> Mat<T> {
        Mat { rows: self.n, cols: self.n, data: self.data.clone() }
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    /// `tr(AB)` for symmetric `A`, `B`: the Frobenius inner product.
    pub fn inner(&self, other: &SymMat<T>) -> Result<T> {
        self.check_dim(other)?;
        Ok(self.data.iter().zip(&other.data).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&x| x * c).collect() }
    }

    /// `X + tI`.
    pub fn shifted(&self, t: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.data[i * self.n + i] += t;
        }
        m
    }

    /// `X²`, re-symmetrized to absorb rounding.
    pub fn square(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).fold(T::zero(), |acc, k| acc + self.get(i, k) * self.get(k, j)))
    }

    /// `QᵀXQ` for an `n × m` matrix `Q`, giving an element of `S(m)`.
    pub fn congruence(&self, q: &Mat<T>) -> Result<SymMat<T>> {
        if q.rows != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: q.rows });
        }
        let xq = self.to_mat().matmul(q)?;
        let m = q.transpose().matmul(&xq)?;
        SymMat::from_mat(&m)
    }

    pub fn max_abs_diff(&self, other: &SymMat<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn check_dim(&self, other: &SymMat<T>) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(())
    }

    /// Cyclic Jacobi eigen-decomposition; eigenvalues ascending.
    ///
    /// Sweeps stop once the off-diagonal Frobenius mass drops below
    /// `1e-14·‖X‖₂` (or a few ulps for `f32`).
    pub fn eig(&self) -> Result<SymEigen<T>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = Mat::<T>::identity(n);
        let scale = self.frobenius_norm();
        let threshold = T::tiny_rel(1e-14) * scale;
        let big = T::max_value().sqrt();

        let off_mass = |a: &[T]| {
            let mut s = T::zero();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += a[i * n + j] * a[i * n + j];
                    }
                }
            }
            s.sqrt()
        };

        let mut converged = scale == T::zero() || n == 1;
        let mut sweeps = 0;
        while !converged {
            if off_mass(&a) <= threshold {
                converged = true;
                break;
            }
            if sweeps == MAX_SWEEPS {
                return Err(Error::EigenNotConverged { sweeps, off: off_mass(&a).to_f64_lossy() });
            }
            sweeps += 1;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (apq + apq);
                    let t = if theta.abs() > big {
                        T::one() / (theta + theta)
                    } else {
                        let sgn = if theta < T::zero() { -T::one() } else { T::one() };
                        sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k * n + p], a[k * n + q]);
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    a[p * n + q] = T::zero();
                    a[q * n + p] = T::zero();
                    for k in 0..n {
                        let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
        debug_assert!(converged);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| a[i * n + i]).collect();
        let vectors = Mat::from_fn(n, n, |r, c| v.get(r, order[c]));
        Ok(SymEigen { values, vectors })
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        Ok(self.eig()?.values)
    }

    pub fn lambda_min(&self) -> Result<T> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn lambda_max(&self) -> Result<T> {
        Ok(*self.eigenvalues()?.last().expect("dim >= 1"))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    /// `|X| = max(-λ₁, λₙ)`.
    pub fn op_norm(&self) -> Result<T> {
        let ev = self.eigenvalues()?;
        Ok(ev.iter().fold(T::zero(), |m, &l| m.max(l.abs())))
    }

    /// Operator, Frobenius and trace norms, all read off the spectrum.
    pub fn norms(&self) -> Result<Norms<T>> {
        let ev = self.eigenvalues()?;
        Ok(norms_from_eigenvalues(&ev))
    }

    /// Applies `f` to each eigenvalue: `Q·diag(f(λ))·Qᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(T) -> T) -> Result<SymMat<T>> {
        let e = self.eig()?;
        let mapped: Vec<T> = e.values.iter().map(|&l| f(l)).collect();
        Ok(e.compose(&mapped))
    }

    pub fn determinant(&self) -> Result<T> {
        Ok(self.eigenvalues()?.into_iter().fold(T::one(), |acc, l| acc * l))
    }
}

impl<T: Scalar> SymEigen<T> {
    /// `Q·diag(values)·Qᵀ` for replacement eigenvalues.
    pub fn compose(&self, values: &[T]) -> SymMat<T> {
        let n = values.len();
        let q = &self.vectors;
        SymMat::from_fn(n, |i, j| (0..n).fold(T::zero(), |acc, k| acc + q.get(i, k) * values[k] * q.get(j, k)))
    }

    pub fn reconstruct(&self) -> SymMat<T> {
        self.compose(&self.values)
    }
}

pub fn norms_from_eigenvalues<T: Scalar>(ev: &[T]) -> Norms<T> {
    let op = ev.iter().fold(T::zero(), |m, &l| m.max(l.abs()));
    let frobenius = ev.iter().fold(T::zero(), |acc, &l| acc + l * l).sqrt();
    let trace = ev.iter().fold(T::zero(), |acc, &l| acc + l.abs());
    Norms { op, frobenius, trace }
}

/// `X ≼ Y` up to `tol`: `λ₁(Y − X) ≥ −tol`.
pub fn psd_leq<T: Scalar>(x: &SymMat<T>, y: &SymMat<T>, tol: T) -> Result<bool> {
    x.check_dim(y)?;
    Ok((y - x).lambda_min()? >= -tol)
}

/// `X(I − δX)⁻¹`, requiring `|δ|·|X| < 1` in operator norm.
pub fn resolvent_transform<T: Scalar>(x: &SymMat<T>, delta: T) -> Result<SymMat<T>> {
    let e = x.eig()?;
    let op = e.values.iter().fold(T::zero(), |m, &l| m.max(l.abs()));
    let product = delta.abs() * op;
    if !(product < T::one()) {
        return Err(Error::SingularShift { product: product.to_f64_lossy() });
    }
    Ok(e.compose(&resolvent_values(&e.values, delta)))
}

/// `X(I − δX)⁻¹` requiring only `I − δX ≻ 0`.
///
/// Weaker than [`resolvent_transform`]: for `δ > 0` strongly negative
/// eigenvalues are allowed, which the two-sided block inequality needs.
pub fn shifted_resolvent<T: Scalar>(x: &SymMat<T>, delta: T) -> Result<SymMat<T>> {
    let e = x.eig()?;
    let worst = e.values.iter().fold(T::neg_infinity(), |m, &l| m.max(delta * l));
    if !(worst < T::one()) {
        return Err(Error::SingularShift { product: worst.to_f64_lossy() });
    }
    Ok(e.compose(&resolvent_values(&e.values, delta)))
}

fn resolvent_values<T: Scalar>(values: &[T], delta: T) -> Vec<T> {
    values.iter().map(|&l| l / (T::one() - delta * l)).collect()
}

/// Deterministic random symmetric matrix: entries i.i.d. uniform in
/// `[-scale, scale]`, then symmetrized.
///
/// # Panics
/// If `dim == 0`.
pub fn random_sym<T: Scalar>(dim: usize, scale: T, seed: u64) -> SymMat<T> {
    assert!(dim >= 1, "random_sym needs dim >= 1");
    let mut rng = sampling::stream(seed, 0);
    sampling::sym_from_rng(&mut rng, dim, scale)
}

impl<T: Scalar> From<SymMat<T>> for Vec<Vec<T>> {
    fn from(m: SymMat<T>) -> Self {
        m.to_rows()
    }
}

impl<T: Scalar> TryFrom<Vec<Vec<T>>> for SymMat<T> {
    type Error = Error;

    fn try_from(rows: Vec<Vec<T>>) -> Result<Self> {
        SymMat::from_rows(&rows)
    }
}

impl<T: Scalar> fmt::Debug for SymMat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMat{:?}", self.to_rows())
    }
}

/// Row literal: entries separated by `,`, rows by `;`.
impl<T: Scalar> fmt::Display for SymMat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            if i > 0 {
                f.write_str(";")?;
            }
            for j in 0..self.n {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

macro_rules! elementwise {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<T: Scalar> $trait<&SymMat<T>> for &SymMat<T> {
            type Output = SymMat<T>;

            fn $method(self, rhs: &SymMat<T>) -> SymMat<T> {
                assert_eq!(self.n, rhs.n, "SymMat dimension mismatch");
                SymMat {
                    n: self.n,
                    data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a $op b).collect(),
                }
            }
        }

        impl<T: Scalar> $trait<SymMat<T>> for SymMat<T> {
            type Output = SymMat<T>;

            fn $method(self, rhs: SymMat<T>) -> SymMat<T> {
                &self $op &rhs
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl<T: Scalar> Neg for &SymMat<T> {
    type Output = SymMat<T>;

    fn neg(self) -> SymMat<T> {
        self.scaled(-T::one())
    }
}

impl<T: Scalar> Neg for SymMat<T> {
    type Output = SymMat<T>;

    fn neg(self) -> SymMat<T> {
        -&self
    }
}

impl<T: Scalar> Mul<T> for &SymMat<T> {
    type Output = SymMat<T>;

    fn mul(self, c: T) -> SymMat<T> {
        self.scaled(c)
    }
}
