//! Operators `F: S(n) × Ω → [−∞, +∞]` and their level sets.
//!
//! An [`EllipticOperator`] is an immutable bundle of an evaluation closure and a
//! domain predicate. Level-set membership only ever looks at the sign of the
//! value, so [`ExtReal`] supports comparisons and negation but no arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::counterexample::{coefficient_matrix, PlanePoint};
use crate::error::{Error, Result};
use crate::sampling;
use crate::scalar::Scalar;
use crate::symmat::SymMat;

/// Largest matrix dimension the catalog accepts.
pub const MAX_DIM: usize = 8;

/// Value in the extended real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ExtReal<T> {
    NegInf,
    Finite(T),
    PosInf,
}

impl<T: Scalar> ExtReal<T> {
    pub fn is_nonneg(self) -> bool {
        match self {
            ExtReal::NegInf => false,
            ExtReal::Finite(v) => v >= T::zero(),
            ExtReal::PosInf => true,
        }
    }

    pub fn is_nonpos(self) -> bool {
        match self {
            ExtReal::NegInf => true,
            ExtReal::Finite(v) => v <= T::zero(),
            ExtReal::PosInf => false,
        }
    }

    pub fn is_pos(self) -> bool {
        !self.is_nonpos()
    }

    pub fn is_neg(self) -> bool {
        !self.is_nonneg()
    }

    pub fn finite(self) -> Option<T> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v.to_f64_lossy(),
            ExtReal::PosInf => f64::INFINITY,
        }
    }
}

impl<T: Scalar> std::ops::Neg for ExtReal<T> {
    type Output = ExtReal<T>;

    fn neg(self) -> Self {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl<T: Scalar> PartialOrd for ExtReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (PosInf, _) | (_, NegInf) => Some(Ordering::Greater),
        }
    }
}

/// Which level set: `Θ₊ = {F ≥ 0}` or `Θ₋ = {F ≤ 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn contains<T: Scalar>(self, value: ExtReal<T>) -> bool {
        match self {
            Side::Plus => value.is_nonneg(),
            Side::Minus => value.is_nonpos(),
        }
    }

    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Side::Plus => T::one(),
            Side::Minus => -T::one(),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

type EvalFn<T> = dyn Fn(&SymMat<T>, &[T]) -> Result<ExtReal<T>> + Send + Sync;
type DomainFn<T> = dyn Fn(&[T]) -> bool + Send + Sync;

/// `F(X, x)` together with its domain `Ω ⊆ ℝ^space_dim`.
#[derive(Clone)]
pub struct EllipticOperator<T> {
    name: String,
    dim: usize,
    space_dim: usize,
    domain: Arc<DomainFn<T>>,
    eval: Arc<EvalFn<T>>,
}

impl<T: Scalar> EllipticOperator<T> {
    /// Operator defined on all of `ℝ^space_dim`.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        space_dim: usize,
        eval: impl Fn(&SymMat<T>, &[T]) -> Result<ExtReal<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            space_dim,
            domain: Arc::new(|x: &[T]| x.iter().all(|v| v.is_finite())),
            eval: Arc::new(eval),
        }
    }

    pub fn with_domain(mut self, domain: impl Fn(&[T]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Arc::new(domain);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn contains_point(&self, x: &[T]) -> bool {
        x.len() == self.space_dim && (self.domain)(x)
    }

    pub fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.space_dim {
            return Err(Error::DimensionMismatch { expected: self.space_dim, got: x.len() });
        }
        if !(self.domain)(x) {
            return Err(Error::PointOutsideDomain(x.iter().map(|v| v.to_f64_lossy()).collect()));
        }
        Ok(())
    }

    /// Checked evaluation.
    pub fn eval(&self, m: &SymMat<T>, x: &[T]) -> Result<ExtReal<T>> {
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: m.dim() });
        }
        self.check_point(x)?;
        (self.eval)(m, x)
    }

    /// Evaluation without dimension or domain checks, for inner loops that
    /// validated their inputs once.
    pub fn eval_unchecked(&self, m: &SymMat<T>, x: &[T]) -> Result<ExtReal<T>> {
        (self.eval)(m, x)
    }
}

impl<T> fmt::Debug for EllipticOperator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticOperator")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("space_dim", &self.space_dim)
            .finish()
    }
}

pub fn in_level_set<T: Scalar>(op: &EllipticOperator<T>, m: &SymMat<T>, x: &[T], side: Side) -> Result<bool> {
    Ok(side.contains(op.eval(m, x)?))
}

/// `(X, x) ↦ −F(−X, x)`.
pub fn dual_operator<T: Scalar>(op: &EllipticOperator<T>) -> EllipticOperator<T> {
    let inner = op.eval.clone();
    let name = match op.name.strip_prefix("dual(").and_then(|s| s.strip_suffix(')')) {
        Some(orig) => orig.to_string(),
        None => format!("dual({})", op.name),
    };
    EllipticOperator {
        name,
        dim: op.dim,
        space_dim: op.space_dim,
        domain: op.domain.clone(),
        eval: Arc::new(move |m: &SymMat<T>, x: &[T]| Ok(-inner(&-m, x)?)),
    }
}

/// Outcome of sampling the two implications of ellipticity at 0.
#[derive(Clone, Debug, Serialize)]
pub struct EllipticityCheck<T: Scalar> {
    pub holds: bool,
    pub samples: usize,
    /// First pair `X ≼ Y` (by sample index) that violates an implication.
    pub witness: Option<(SymMat<T>, SymMat<T>)>,
}

/// Samples pairs `X ≼ Y` with `Y = X + Σ vᵢvᵢᵀ` (1–3 bumps) and tests
/// `F(X) ≥ 0 ⇒ F(Y) ≥ 0` and `F(X) > 0 ⇒ F(Y) > 0`.
pub fn check_ellipticity_at_zero<T: Scalar>(
    op: &EllipticOperator<T>,
    x: &[T],
    samples: usize,
    seed: u64,
) -> Result<EllipticityCheck<T>> {
    if samples == 0 {
        return Err(Error::InvalidCount);
    }
    op.check_point(x)?;
    let n = op.dim();
    let outcome: Result<Option<(SymMat<T>, SymMat<T>)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let scale = sampling::log_uniform(&mut rng, T::lit(1e-2), T::lit(10.0));
            let base = sampling::sym_from_rng(&mut rng, n, scale);
            let xm = match i % 3 {
                0 => base,
                // PSD and NSD starts so that constrained operators see both branches.
                1 => base.square().scaled(T::one() / scale.max(T::one())),
                _ => -base.square().scaled(T::one() / scale.max(T::one())),
            };
            let ym = &xm + &sampling::psd_bump(&mut rng, n, T::lit(1e-3), scale);
            let fx = op.eval_unchecked(&xm, x)?;
            let fy = op.eval_unchecked(&ym, x)?;
            let violated = (fx.is_nonneg() && !fy.is_nonneg()) || (fx.is_pos() && !fy.is_pos());
            Ok(violated.then_some((xm, ym)))
        })
        .find_first(|r| !matches!(r, Ok(None)))
        .unwrap_or(Ok(None));
    let witness = outcome?;
    Ok(EllipticityCheck { holds: witness.is_none(), samples, witness })
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConstantParams {
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub f: f64,
}

/// `A(x) = a0 + Σ xᵢ·a_grad[i]`, `f(x) = f0 + Σ xᵢ·f_grad[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearFieldParams {
    pub a0: Vec<Vec<f64>>,
    pub a_grad: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub f0: f64,
    #[serde(default)]
    pub f_grad: Vec<f64>,
}

/// `f(x) = f_const + f_quad·|x|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MongeAmpereParams {
    #[serde(default = "one")]
    pub f_const: f64,
    #[serde(default)]
    pub f_quad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauParams {
    #[serde(default = "one")]
    pub half_width: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    /// `tr X`.
    Laplacian,
    /// `λₙ(X)`.
    MaxEigenvalue,
    /// `tr(AX) − f`.
    LinearConstant(LinearConstantParams),
    /// `tr(A(x)X) − f(x)`.
    LinearField(LinearFieldParams),
    /// `det X − f(x)` on `X ≽ 0`, `−∞` elsewhere.
    MongeAmpere(MongeAmpereParams),
    /// `s(tr X)` with a flat zero band `|r| ≤ half_width`.
    Plateau(PlateauParams),
    /// `tr(A(x,y)X)` with `A = qqᵀ`, `q = (x^{1/3}, −y^{1/3})`; `n = 2`.
    CounterexampleLinear,
}

impl OperatorKind {
    pub fn tag(&self) -> &'static str {
        match self {
            OperatorKind::Laplacian => "laplacian",
            OperatorKind::MaxEigenvalue => "max_eigenvalue",
            OperatorKind::LinearConstant(_) => "linear_constant",
            OperatorKind::LinearField(_) => "linear_field",
            OperatorKind::MongeAmpere(_) => "monge_ampere",
            OperatorKind::Plateau(_) => "plateau",
            OperatorKind::CounterexampleLinear => "counterexample_linear",
        }
    }
}

pub const KINDS: [&str; 7] = [
    "laplacian",
    "max_eigenvalue",
    "linear_constant",
    "linear_field",
    "monge_ampere",
    "plateau",
    "counterexample_linear",
];

/// Serializable operator description: `{"kind": ..., "n": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    pub n: usize,
    pub kind: OperatorKind,
}

impl OperatorSpec {
    pub fn new(n: usize, kind: OperatorKind) -> Self {
        Self { n, kind }
    }

    pub fn laplacian(n: usize) -> Self {
        Self::new(n, OperatorKind::Laplacian)
    }

    pub fn max_eigenvalue(n: usize) -> Self {
        Self::new(n, OperatorKind::MaxEigenvalue)
    }

    pub fn linear_constant(a: Vec<Vec<f64>>, f: f64) -> Self {
        Self::new(a.len(), OperatorKind::LinearConstant(LinearConstantParams { a, f }))
    }

    pub fn monge_ampere(n: usize, f_const: f64, f_quad: f64) -> Self {
        Self::new(n, OperatorKind::MongeAmpere(MongeAmpereParams { f_const, f_quad }))
    }

    pub fn plateau(n: usize, half_width: f64) -> Self {
        Self::new(n, OperatorKind::Plateau(PlateauParams { half_width }))
    }

    pub fn counterexample_linear() -> Self {
        Self::new(2, OperatorKind::CounterexampleLinear)
    }

    /// Parses the JSON form, then validates.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(s).map_err(|e| Error::Parse {
            field: "<document>".into(),
            message: e.to_string(),
        })?;
        let spec = Self::from_json_value(&doc)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_value(doc: &Value) -> Result<Self> {
        let obj = doc.as_object().ok_or_else(|| Error::Parse {
            field: "<document>".into(),
            message: "expected a JSON object".into(),
        })?;
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse { field: "kind".into(), message: "missing or not a string".into() })?;
        let n = obj
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse { field: "n".into(), message: "missing or not a non-negative integer".into() })?
            as usize;
        if let Some(extra) = obj.keys().find(|k| !matches!(k.as_str(), "kind" | "n" | "params")) {
            return Err(Error::Parse { field: extra.clone(), message: "unknown field".into() });
        }
        let params = obj.get("params").cloned().unwrap_or_else(|| Value::Object(Map::new()));

        fn typed<P: serde::de::DeserializeOwned>(v: Value) -> Result<P> {
            serde_json::from_value(v).map_err(|e| Error::Parse { field: "params".into(), message: e.to_string() })
        }
        fn empty(v: &Value) -> Result<()> {
            match v.as_object() {
                Some(m) if m.is_empty() => Ok(()),
                _ => Err(Error::Parse { field: "params".into(), message: "this kind takes no parameters".into() }),
            }
        }

        let kind = match kind {
            "laplacian" => {
                empty(&params)?;
                OperatorKind::Laplacian
            }
            "max_eigenvalue" => {
                empty(&params)?;
                OperatorKind::MaxEigenvalue
            }
            "linear_constant" => OperatorKind::LinearConstant(typed(params)?),
            "linear_field" => OperatorKind::LinearField(typed(params)?),
            "monge_ampere" => OperatorKind::MongeAmpere(typed(params)?),
            "plateau" => OperatorKind::Plateau(typed(params)?),
            "counterexample_linear" => {
                empty(&params)?;
                OperatorKind::CounterexampleLinear
            }
            other => {
                return Err(Error::Parse {
                    field: "kind".into(),
                    message: format!("unknown kind `{other}`, expected one of {}", KINDS.join(", ")),
                })
            }
        };
        Ok(Self { n, kind })
    }

    pub fn to_json_value(&self) -> Value {
        let params = match &self.kind {
            OperatorKind::Laplacian | OperatorKind::MaxEigenvalue | OperatorKind::CounterexampleLinear => json!({}),
            OperatorKind::LinearConstant(p) => serde_json::to_value(p).expect("plain data"),
            OperatorKind::LinearField(p) => serde_json::to_value(p).expect("plain data"),
            OperatorKind::MongeAmpere(p) => serde_json::to_value(p).expect("plain data"),
            OperatorKind::Plateau(p) => serde_json::to_value(p).expect("plain data"),
        };
        json!({ "kind": self.kind.tag(), "n": self.n, "params": params })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("plain data")
    }

    /// Per-kind parameter checks.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidSpec(format!("n must be in 1..={MAX_DIM}, got {n}")));
        }
        let check_matrix = |name: &str, rows: &[Vec<f64>]| -> Result<SymMat<f64>> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidSpec(format!("{name} must be {n}x{n}")));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("{name} has non-finite entries")));
            }
            SymMat::from_rows(rows)
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be finite")))
            }
        };
        match &self.kind {
            OperatorKind::Laplacian | OperatorKind::MaxEigenvalue => Ok(()),
            OperatorKind::LinearConstant(p) => {
                let a = check_matrix("a", &p.a)?;
                finite("f", p.f)?;
                check_coefficient(&a, "a")
            }
            OperatorKind::LinearField(p) => {
                let a0 = check_matrix("a0", &p.a0)?;
                if p.a_grad.len() != n {
                    return Err(Error::InvalidSpec(format!("a_grad needs {n} matrices, got {}", p.a_grad.len())));
                }
                for (i, g) in p.a_grad.iter().enumerate() {
                    check_matrix(&format!("a_grad[{i}]"), g)?;
                }
                if !p.f_grad.is_empty() && p.f_grad.len() != n {
                    return Err(Error::InvalidSpec(format!("f_grad needs 0 or {n} entries")));
                }
                finite("f0", p.f0)?;
                p.f_grad.iter().try_for_each(|&v| finite("f_grad", v))?;
                check_coefficient(&a0, "a0")
            }
            OperatorKind::MongeAmpere(p) => {
                finite("f_const", p.f_const)?;
                finite("f_quad", p.f_quad)
            }
            OperatorKind::Plateau(p) => {
                if p.half_width > 0.0 && p.half_width.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec("half_width must be positive".into()))
                }
            }
            OperatorKind::CounterexampleLinear => {
                if n == 2 {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec("counterexample_linear requires n = 2".into()))
                }
            }
        }
    }
}

fn check_coefficient(a: &SymMat<f64>, name: &str) -> Result<()> {
    let ev = a.eigenvalues()?;
    if ev.iter().all(|&l| l == 0.0) {
        return Err(Error::InvalidSpec(format!("{name} vanishes; the coefficient must be nonzero")));
    }
    if ev[0] < -1e-12 {
        return Err(Error::InvalidSpec(format!("{name} must be positive semidefinite (λ₁ = {})", ev[0])));
    }
    Ok(())
}

fn to_sym<T: Scalar>(rows: &[Vec<f64>]) -> SymMat<T> {
    let n = rows.len();
    SymMat::from_fn(n, |i, j| T::lit(rows[i][j]))
}

impl LinearFieldParams {
    /// `A(x)`.
    pub fn coefficient_at<T: Scalar>(&self, x: &[T]) -> SymMat<T> {
        self.a_grad
            .iter()
            .zip(x)
            .fold(to_sym::<T>(&self.a0), |acc, (g, &xi)| &acc + &to_sym::<T>(g).scaled(xi))
    }

    pub fn rhs_at<T: Scalar>(&self, x: &[T]) -> T {
        self.f_grad.iter().zip(x).fold(T::lit(self.f0), |acc, (&g, &xi)| acc + T::lit(g) * xi)
    }
}

/// Builds the catalog operator described by `spec`.
pub fn make_operator<T: Scalar>(spec: &OperatorSpec) -> Result<EllipticOperator<T>> {
    spec.validate()?;
    let n = spec.n;
    let op = match &spec.kind {
        OperatorKind::Laplacian => EllipticOperator::new("laplacian", n, n, |m, _| Ok(ExtReal::Finite(m.trace()))),
        OperatorKind::MaxEigenvalue => {
            EllipticOperator::new("max_eigenvalue", n, n, |m, _| Ok(ExtReal::Finite(m.lambda_max()?)))
        }
        OperatorKind::LinearConstant(p) => {
            let a = to_sym::<T>(&p.a);
            let f = T::lit(p.f);
            EllipticOperator::new("linear_constant", n, n, move |m, _| Ok(ExtReal::Finite(a.inner(m)? - f)))
        }
        OperatorKind::LinearField(p) => {
            let eval_p = p.clone();
            let domain_p = p.clone();
            EllipticOperator::new("linear_field", n, n, move |m: &SymMat<T>, x: &[T]| {
                let a = eval_p.coefficient_at(x);
                Ok(ExtReal::Finite(a.inner(m)? - eval_p.rhs_at(x)))
            })
            .with_domain(move |x| {
                if x.iter().any(|v| !v.is_finite()) {
                    return false;
                }
                let a = domain_p.coefficient_at(x);
                match a.eigenvalues() {
                    Ok(ev) => ev[0] >= T::lit(-1e-12) && ev.iter().any(|&l| l.abs() > T::lit(1e-12)),
                    Err(_) => false,
                }
            })
        }
        OperatorKind::MongeAmpere(p) => {
            let (c, q) = (T::lit(p.f_const), T::lit(p.f_quad));
            EllipticOperator::new("monge_ampere", n, n, move |m, x| {
                let ev = m.eigenvalues()?;
                if ev[0] < T::zero() {
                    return Ok(ExtReal::NegInf);
                }
                let det = ev.iter().fold(T::one(), |acc, &l| acc * l);
                let r2 = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
                Ok(ExtReal::Finite(det - (c + q * r2)))
            })
        }
        OperatorKind::Plateau(p) => {
            let w = T::lit(p.half_width);
            EllipticOperator::new("plateau", n, n, move |m, _| {
                let r = m.trace();
                Ok(ExtReal::Finite(if r > w {
                    r - w
                } else if r < -w {
                    r + w
                } else {
                    T::zero()
                }))
            })
        }
        OperatorKind::CounterexampleLinear => EllipticOperator::new("counterexample_linear", 2, 2, |m, x| {
            let a = coefficient_matrix(PlanePoint::new(x[0], x[1]));
            Ok(ExtReal::Finite(a.inner(m)?))
        })
        .with_domain(|x: &[T]| x.iter().all(|v| v.is_finite()) && (x[0] != T::zero() || x[1] != T::zero())),
    };
    Ok(op)
}
