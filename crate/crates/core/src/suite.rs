//! Randomized property suites over the operator catalog.
//!
//! Each suite returns a [`SuiteReport`] listing named checks with the worst
//! observed value and the limit it was held to. Reports contain no timings,
//! so equal seeds give byte-identical JSON regardless of the worker count.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::acdo;
use crate::counterexample::{self, CertificateConfig};
use crate::error::Result;
use crate::levelsets;
use crate::matrixineq::{self, BlockPair};
use crate::operators::{make_operator, EllipticOperator, OperatorSpec, Side};
use crate::sampling::{self, derive_seed, StreamRng};
use crate::symmat::{resolvent_transform, Mat, SymMat};

pub const NONDEGENERACY_SLACK: f64 = 1e-8;
pub const LIPSCHITZ_SLACK: f64 = 1e-8;
pub const ELLIPTICITY_SLACK: f64 = 1e-8;
pub const ASCOLI_TOL: f64 = 1e-8;
pub const BLOCK_TOL: f64 = 1e-9;
pub const XD_TOL: f64 = 1e-10;
pub const PLATEAU_GAP_MAX: f64 = -0.9;
pub const BOUNDARY_MATCH_TOL: f64 = 1e-12;
pub const INTERIOR_GAP: f64 = 27.0 / 256.0;
pub const INTERIOR_GAP_TOL: f64 = 1e-9;
pub const ARGMAX_X: f64 = 27.0 / 64.0;
pub const ARGMAX_TOL: f64 = 1e-6;
pub const BOUNDARY_GAP_MIN: f64 = -1e-12;
pub const RESIDUAL_MAX: f64 = 1e-12;
pub const RANK_ONE_MAX: f64 = 1e-14;
pub const MIN_ACCEPTED_QUADRATICS: usize = 100;
/// Regression floor for the sampled sup-excess of the linear counterexample
/// operator near `(1/2, 0)`. The default [`SuiteConfig`] measured a row
/// minimum of 17.97 over [`CONDITION_SCHEDULE`]; the floor is that value
/// rounded down.
pub const COUNTEREXAMPLE_EXCESS_FLOOR: f64 = 17.0;

pub const CONDITION_SCHEDULE: [f64; 4] = [0.1, 0.05, 0.02, 0.01];

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tol: f64,
    pub dim: usize,
    pub samples: usize,
    pub orderings: usize,
    pub gap_samples: usize,
    pub direction_instances: usize,
    pub condition_pairs: usize,
    pub condition_samples: usize,
    pub certificate: CertificateConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: acdo::DEFAULT_TOL,
            dim: 3,
            samples: 1000,
            orderings: 200,
            gap_samples: 500,
            direction_instances: 200,
            condition_pairs: 128,
            condition_samples: 64,
            certificate: CertificateConfig { grid: 256, residual_samples: 10_000, axis_trials: 500, seed: 0 },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub samples: usize,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub limit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Check {
    fn at_most(name: impl Into<String>, samples: usize, worst: f64, limit: f64, witness: Option<Value>) -> Self {
        Self { name: name.into(), pass: worst <= limit, samples, worst, relation: "<=", limit, witness }
    }

    fn at_least(name: impl Into<String>, samples: usize, worst: f64, limit: f64, witness: Option<Value>) -> Self {
        Self { name: name.into(), pass: worst >= limit, samples, worst, relation: ">=", limit, witness }
    }

    fn failed(name: impl Into<String>, message: String) -> Self {
        Self {
            name: name.into(),
            pass: false,
            samples: 0,
            worst: f64::NAN,
            relation: "<=",
            limit: f64::NAN,
            witness: Some(Value::String(message)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(id: u8, name: &'static str, checks: Vec<Check>) -> Self {
        Self { id, name, pass: checks.iter().all(|c| c.pass), checks }
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

fn witness_json<S: Serialize>(w: &S) -> Value {
    serde_json::to_value(w).unwrap_or(Value::Null)
}

/// Worst value and its witness, ties broken by lowest sample index.
fn worst_of<W>(items: Vec<(f64, W)>, larger_is_worse: bool) -> Option<(f64, W)> {
    let mut best: Option<(f64, W)> = None;
    for (v, w) in items {
        let replace = match &best {
            None => true,
            Some((b, _)) => {
                if v.is_nan() {
                    !b.is_nan()
                } else if larger_is_worse {
                    v > *b
                } else {
                    v < *b
                }
            }
        };
        if replace {
            best = Some((v, w));
        }
    }
    best
}

/// Runs `f` on every index and gathers results in index order, turning an
/// error into a failed check.
fn sampled<W: Send>(
    name: &str,
    count: usize,
    larger_is_worse: bool,
    f: impl Fn(usize) -> Result<(f64, W)> + Sync + Send,
) -> std::result::Result<(f64, W), Check> {
    let items: Result<Vec<(f64, W)>> = (0..count).into_par_iter().map(f).collect();
    match items {
        Ok(v) => worst_of(v, larger_is_worse).ok_or_else(|| Check::failed(name, "no samples".into())),
        Err(e) => Err(Check::failed(name, e.to_string())),
    }
}

fn at_most_sampled<W: Serialize + Send>(
    name: String,
    count: usize,
    limit: f64,
    f: impl Fn(usize) -> Result<(f64, W)> + Sync + Send,
) -> Check {
    match sampled(&name, count, true, f) {
        Ok((v, w)) => {
            let witness = (v > limit).then(|| witness_json(&w));
            Check::at_most(name, count, v, limit, witness)
        }
        Err(c) => c,
    }
}

fn at_least_sampled<W: Serialize + Send>(
    name: String,
    count: usize,
    limit: f64,
    f: impl Fn(usize) -> Result<(f64, W)> + Sync + Send,
) -> Check {
    match sampled(&name, count, false, f) {
        Ok((v, w)) => {
            let witness = (v < limit).then(|| witness_json(&w));
            Check::at_least(name, count, v, limit, witness)
        }
        Err(c) => c,
    }
}

/// The four operators every acdo property is checked on.
pub fn acdo_catalog(n: usize) -> Vec<OperatorSpec> {
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.abs_diff(j) {
                    0 => 1.0 / (1.0 + i as f64),
                    1 => 0.1,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    vec![
        OperatorSpec::laplacian(n),
        OperatorSpec::max_eigenvalue(n),
        OperatorSpec::linear_constant(a, 0.3),
        OperatorSpec::monge_ampere(n, 1.0, 0.0),
    ]
}

fn build(spec: &OperatorSpec) -> EllipticOperator<f64> {
    make_operator(spec).expect("catalog specs are valid")
}

fn random_point(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    sampling::point_in_ball(rng, &vec![0.0; n], 1.0)
}

fn random_matrix(rng: &mut StreamRng, n: usize, lo: f64, hi: f64) -> SymMat<f64> {
    let s = sampling::log_uniform(rng, lo, hi);
    sampling::sym_from_rng(rng, n, s)
}

#[derive(Serialize)]
struct MatPoint {
    x: SymMat<f64>,
    point: Vec<f64>,
    other: Option<SymMat<f64>>,
    tau: Option<f64>,
}

/// Nondegeneracy, 1-Lipschitz continuity and ellipticity of `F̄`.
pub fn acdo_properties(cfg: &SuiteConfig) -> SuiteReport {
    let tol = cfg.tol;
    let n = cfg.dim;
    let mut checks = Vec::new();
    for (k, spec) in acdo_catalog(n).iter().enumerate() {
        let op = build(spec);
        let seed = derive_seed(cfg.seed, 100 + k as u64);
        let tag = spec.kind.tag();
        checks.push(at_most_sampled(format!("{tag}: nondegeneracy"), cfg.samples, NONDEGENERACY_SLACK, |i| {
            let mut rng = sampling::stream(seed, i as u64);
            let x = random_matrix(&mut rng, n, 0.1, 5.0);
            let tau = sampling::uniform(&mut rng, -5.0, 5.0);
            let p = random_point(&mut rng, n);
            let a = acdo::compute_acdo(&op, &x, &p, tol)?.value;
            let b = acdo::compute_acdo(&op, &x.shifted(tau), &p, tol)?.value;
            Ok(((b - a - tau).abs(), MatPoint { x, point: p, other: None, tau: Some(tau) }))
        }));
        let seed = derive_seed(cfg.seed, 200 + k as u64);
        checks.push(at_most_sampled(format!("{tag}: 1-Lipschitz excess"), cfg.samples, LIPSCHITZ_SLACK, |i| {
            let mut rng = sampling::stream(seed, i as u64);
            let x = random_matrix(&mut rng, n, 0.1, 5.0);
            let y = random_matrix(&mut rng, n, 1e-3, 2.0);
            let p = random_point(&mut rng, n);
            let a = acdo::compute_acdo(&op, &x, &p, tol)?.value;
            let b = acdo::compute_acdo(&op, &(&x + &y), &p, tol)?.value;
            let excess = (b - a).abs() - y.op_norm()?;
            Ok((excess, MatPoint { x, point: p, other: Some(y), tau: None }))
        }));
        let seed = derive_seed(cfg.seed, 300 + k as u64);
        checks.push(at_most_sampled(format!("{tag}: ellipticity"), cfg.orderings, ELLIPTICITY_SLACK, |i| {
            let mut rng = sampling::stream(seed, i as u64);
            let x = random_matrix(&mut rng, n, 0.1, 5.0);
            let y = &x + &sampling::psd_bump(&mut rng, n, 1e-6, 5.0);
            let p = random_point(&mut rng, n);
            let a = acdo::compute_acdo(&op, &x, &p, tol)?.value;
            let b = acdo::compute_acdo(&op, &y, &p, tol)?.value;
            Ok((a - b, MatPoint { x, point: p, other: Some(y), tau: None }))
        }));
    }
    SuiteReport::new(1, "acdo properties", checks)
}

/// Representations through `Θ₋` and through distances agree with the
/// definition, and the Ascoli formula matches bisection distances.
pub fn representations(cfg: &SuiteConfig) -> SuiteReport {
    let tol = cfg.tol;
    let n = cfg.dim;
    let mut checks = Vec::new();
    for (k, spec) in acdo_catalog(n).iter().enumerate() {
        let op = build(spec);
        let tag = spec.kind.tag();
        let seed = derive_seed(cfg.seed, 400 + k as u64);
        checks.push(at_most_sampled(format!("{tag}: sublevel representation"), cfg.samples, 2.0 * tol, |i| {
            let mut rng = sampling::stream(seed, i as u64);
            let x = random_matrix(&mut rng, n, 0.1, 5.0);
            let p = random_point(&mut rng, n);
            let a = acdo::compute_acdo(&op, &x, &p, tol)?.value;
            let b = acdo::acdo_from_minus(&op, &x, &p, tol)?;
            Ok(((a - b).abs(), MatPoint { x, point: p, other: None, tau: None }))
        }));
        let seed = derive_seed(cfg.seed, 500 + k as u64);
        checks.push(at_most_sampled(format!("{tag}: distance representation"), cfg.samples, 2.0 * tol, |i| {
            let mut rng = sampling::stream(seed, i as u64);
            let x = random_matrix(&mut rng, n, 0.1, 5.0);
            let p = random_point(&mut rng, n);
            let a = acdo::compute_acdo(&op, &x, &p, tol)?.value;
            let dm = levelsets::dist_to_level_set(&op, &x, &p, Side::Minus, tol)?;
            let dp = levelsets::dist_to_level_set(&op, &x, &p, Side::Plus, tol)?;
            Ok(((a - (dm - dp)).abs(), MatPoint { x, point: p, other: None, tau: None }))
        }));
    }

    let (a_rows, f) = match &acdo_catalog(n)[2].kind {
        crate::operators::OperatorKind::LinearConstant(p) => (p.a.clone(), p.f),
        _ => unreachable!("third catalog entry is linear"),
    };
    let lin = build(&acdo_catalog(n)[2]);
    let a = SymMat::from_rows(&a_rows).expect("square");
    let seed = derive_seed(cfg.seed, 600);
    checks.push(at_most_sampled("linear_constant: Ascoli formula".into(), cfg.samples, ASCOLI_TOL, |i| {
        let mut rng = sampling::stream(seed, i as u64);
        let z = random_matrix(&mut rng, n, 0.1, 5.0);
        let p = vec![0.0; n];
        let closed = levelsets::ascoli_distance(&a, f, &z)?;
        let side = if a.inner(&z)? >= f { Side::Minus } else { Side::Plus };
        let d = levelsets::dist_to_level_set(&lin, &z, &p, side, tol)?;
        Ok(((closed - d).abs(), MatPoint { x: z, point: p, other: None, tau: None }))
    }));

    let field = linear_field_example(n);
    let field_op = build(&field);
    let params = match &field.kind {
        crate::operators::OperatorKind::LinearField(p) => p.clone(),
        _ => unreachable!(),
    };
    let seed = derive_seed(cfg.seed, 601);
    checks.push(at_most_sampled("linear_field: Ascoli formula".into(), cfg.samples, ASCOLI_TOL, |i| {
        let mut rng = sampling::stream(seed, i as u64);
        let z = random_matrix(&mut rng, n, 0.1, 5.0);
        let p = sampling::point_in_ball(&mut rng, &vec![0.0; n], 0.5);
        let a = params.coefficient_at(&p);
        let f = params.rhs_at(&p);
        let closed = levelsets::ascoli_distance(&a, f, &z)?;
        let side = if a.inner(&z)? >= f { Side::Minus } else { Side::Plus };
        let d = levelsets::dist_to_level_set(&field_op, &z, &p, side, tol)?;
        Ok(((closed - d).abs(), MatPoint { x: z, point: p, other: None, tau: None }))
    }));
    SuiteReport::new(2, "representations", checks)
}

/// `A(x) = diag(1/2 + x₁/4, 1/2 − x₁/4, 1, …)` shifted so `tr A` stays
/// constant, with `f(x) = 0.2 + 0.1·x₂`.
pub fn linear_field_example(n: usize) -> OperatorSpec {
    let mut a0 = vec![vec![0.0; n]; n];
    for (i, row) in a0.iter_mut().enumerate() {
        row[i] = if i < 2 { 0.5 } else { 1.0 };
    }
    let mut a_grad = vec![vec![vec![0.0; n]; n]; n];
    a_grad[0][0][0] = 0.25;
    if n > 1 {
        a_grad[0][1][1] = -0.25;
    }
    let mut f_grad = vec![0.0; n];
    if n > 1 {
        f_grad[1] = 0.1;
    }
    OperatorSpec::new(
        n,
        crate::operators::OperatorKind::LinearField(crate::operators::LinearFieldParams { a0, a_grad, f0: 0.2, f_grad }),
    )
}

#[derive(Serialize)]
struct XDelta {
    x: SymMat<f64>,
    delta: f64,
}

#[derive(Serialize)]
struct SmWitness {
    x: SymMat<f64>,
    delta: f64,
    m: usize,
}

/// The block inequality, its resolvent form in both directions, the
/// two-factor inequality and `X(I − δX)⁻¹ ≽ X + (δ/2)X²`.
pub fn matrix_inequalities(cfg: &SuiteConfig) -> SuiteReport {
    let n = cfg.dim;
    let mut checks = Vec::new();
    let seed = derive_seed(cfg.seed, 700);
    checks.push(at_most_sampled("block defect".into(), cfg.samples, BLOCK_TOL, |i| {
        let mut rng = sampling::stream(seed, i as u64);
        let (x, delta) = matrixineq::random_x_delta(&mut rng, n)?;
        let y = resolvent_transform(&x, delta)?;
        let d = matrixineq::block_defect(&BlockPair::new(x.clone(), y, 1.0 / delta)?)?;
        Ok((d, XDelta { x, delta }))
    }));
    let seed = derive_seed(cfg.seed, 701);
    checks.push(at_most_sampled("two-factor inequality: failures".into(), cfg.samples, 0.0, |i| {
        let mut rng = sampling::stream(seed, i as u64);
        let (x, delta) = matrixineq::random_x_delta(&mut rng, n)?;
        let m = 1 + i % 3;
        let q1 = Mat::random(n, m, 1.0, &mut rng);
        let q2 = if i % 5 == 0 { q1.clone() } else { Mat::random(n, m, 1.0, &mut rng) };
        let c = matrixineq::lemma_sm_check(&x, delta, &q1, &q2, BLOCK_TOL)?;
        Ok((if c.holds { 0.0 } else { 1.0 }, SmWitness { x, delta, m }))
    }));
    let seed = derive_seed(cfg.seed, 702);
    checks.push(at_least_sampled("resolvent lower bound: defect".into(), cfg.samples, -XD_TOL, |i| {
        let mut rng = sampling::stream(seed, i as u64);
        let (x, delta) = matrixineq::random_x_delta(&mut rng, n)?;
        Ok((matrixineq::xd_ineq_defect(&x, delta)?, XDelta { x, delta }))
    }));
    let seed = derive_seed(cfg.seed, 703);
    checks.push(at_most_sampled("forward direction: failures".into(), cfg.direction_instances, 0.0, |i| {
        let mut rng = sampling::stream(seed, i as u64);
        let p = matrixineq::random_block_pair(&mut rng, n)?;
        let grid = matrixineq::eps_grid(p.alpha, matrixineq::GRID_POINTS);
        let c = matrixineq::forward_direction_check(&p, &grid, BLOCK_TOL)?;
        Ok((if c.pass { 0.0 } else { 1.0 }, p))
    }));
    let seed = derive_seed(cfg.seed, 704);
    let reverse: Result<Vec<(bool, bool, BlockPair<f64>)>> = (0..cfg.direction_instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let p = matrixineq::random_block_pair(&mut rng, n)?;
            // Every third instance asks for a larger α than the data supports.
            let alpha = if i % 3 == 2 { 0.5 * p.alpha } else { p.alpha };
            let grid = matrixineq::eps_grid(alpha, matrixineq::GRID_POINTS);
            let c = matrixineq::reverse_direction_check(&p.x, &p.y, alpha, &grid, BLOCK_TOL)?;
            let implication_ok = !c.hypotheses.pass || c.pass;
            Ok((implication_ok, c.hypotheses.pass, BlockPair { alpha, ..p }))
        })
        .collect();
    match reverse {
        Ok(items) => {
            let hyp = items.iter().filter(|r| r.1).count();
            let bad = items.iter().position(|r| !r.0);
            let failures = items.iter().filter(|r| !r.0).count();
            let witness = bad.map(|k| witness_json(&items[k].2));
            checks.push(Check::at_most("reverse direction: failures", items.len(), failures as f64, 0.0, witness));
            checks.push(Check::at_least(
                "reverse direction: instances with hypotheses",
                items.len(),
                hyp as f64,
                (cfg.direction_instances / 2) as f64,
                None,
            ));
        }
        Err(e) => checks.push(Check::failed("reverse direction: failures", e.to_string())),
    }
    SuiteReport::new(3, "matrix inequalities", checks)
}

/// `sup_minus` against `inf_plus` for autonomous operators, and the
/// plateau operator's fat zero set with its pair of quadratic solutions.
pub fn autonomous_detector(cfg: &SuiteConfig) -> SuiteReport {
    let tol = cfg.tol;
    let n = cfg.dim;
    let mut checks = Vec::new();
    for (k, spec) in [OperatorSpec::laplacian(n), OperatorSpec::max_eigenvalue(n), OperatorSpec::monge_ampere(n, 1.0, 0.0)]
        .iter()
        .enumerate()
    {
        let op = build(spec);
        let seed = derive_seed(cfg.seed, 800 + k as u64);
        checks.push(at_most_sampled(format!("{}: |gap|", spec.kind.tag()), cfg.gap_samples, 2.0 * tol, |i| {
            let mut rng = sampling::stream(seed, i as u64);
            let x = random_matrix(&mut rng, n, 0.1, 5.0);
            let p = vec![0.0; n];
            let g = acdo::sup_inf_gap(&op, &x, &p, tol)?;
            Ok((g.gap.abs(), XDelta { x, delta: 0.0 }))
        }));
    }
    let plateau = build(&OperatorSpec::plateau(2, 1.0));
    let origin = [0.0, 0.0];
    match acdo::sup_inf_gap(&plateau, &SymMat::zeros(2), &origin, tol) {
        Ok(g) => checks.push(Check::at_most("plateau: gap at X = 0", 1, g.gap, PLATEAU_GAP_MAX, Some(witness_json(&g)))),
        Err(e) => checks.push(Check::failed("plateau: gap at X = 0", e.to_string())),
    }
    match acdo::flat_zero_pair(&plateau, &SymMat::zeros(2), &origin, tol, 3600, derive_seed(cfg.seed, 810)) {
        Ok(Some(pair)) => {
            checks.push(Check::at_most(
                "plateau: boundary mismatch of the two solutions",
                pair.boundary_samples,
                pair.boundary_max_diff,
                BOUNDARY_MATCH_TOL,
                Some(witness_json(&pair)),
            ));
            checks.push(Check::at_most(
                "plateau: |F| at both Hessians",
                2,
                pair.f_phi.abs().max(pair.f_psi.abs()),
                0.0,
                None,
            ));
            checks.push(Check::at_least("plateau: interior separation", 1, pair.center_diff, 0.1, None));
        }
        Ok(None) => checks.push(Check::failed("plateau: boundary mismatch of the two solutions", "no flat segment".into())),
        Err(e) => checks.push(Check::failed("plateau: boundary mismatch of the two solutions", e.to_string())),
    }
    SuiteReport::new(4, "autonomous detector", checks)
}

/// Condition reports for the probe operators, in the order laplacian,
/// max_eigenvalue, monge_ampere, counterexample_linear.
pub fn condition_reports(cfg: &SuiteConfig) -> Result<Vec<(String, levelsets::ConditionReport<f64>)>> {
    let probes: [(OperatorSpec, Vec<f64>); 4] = [
        (OperatorSpec::laplacian(2), vec![0.0, 0.0]),
        (OperatorSpec::max_eigenvalue(2), vec![0.0, 0.0]),
        (OperatorSpec::monge_ampere(2, 1.0, 1.0), vec![0.0, 0.0]),
        (OperatorSpec::counterexample_linear(), vec![0.5, 0.0]),
    ];
    probes
        .iter()
        .enumerate()
        .map(|(k, (spec, x0))| {
            let op = build(spec);
            let r = levelsets::check_condition(
                &op,
                x0,
                &CONDITION_SCHEDULE,
                cfg.condition_pairs,
                cfg.condition_samples,
                derive_seed(cfg.seed, 900 + k as u64),
                cfg.tol,
            )?;
            Ok((spec.kind.tag().to_string(), r))
        })
        .collect()
}

pub fn condition_probe(cfg: &SuiteConfig) -> SuiteReport {
    let reports = match condition_reports(cfg) {
        Ok(r) => r,
        Err(e) => return SuiteReport::new(5, "condition probe", vec![Check::failed("condition reports", e.to_string())]),
    };
    let mut checks = Vec::new();
    for (tag, r) in &reports {
        let sup = r.sup_excess();
        let rows = serde_json::json!({ "t": CONDITION_SCHEDULE, "sup_excess": sup, "slope": r.decay_slope });
        match tag.as_str() {
            "laplacian" | "max_eigenvalue" => {
                let worst = sup.iter().copied().fold(0.0, f64::max);
                checks.push(Check::at_most(format!("{tag}: sup excess"), sup.len(), worst, 2.0 * cfg.tol, Some(rows)));
            }
            "monge_ampere" => {
                checks.push(Check::at_least(
                    "monge_ampere: decay slope",
                    sup.len(),
                    r.decay_slope,
                    levelsets::DECAY_SLOPE_MIN,
                    Some(rows),
                ));
                checks.push(Check::at_most(
                    "monge_ampere: final sup excess",
                    1,
                    r.final_sup_excess,
                    levelsets::FINAL_EXCESS_MAX,
                    None,
                ));
            }
            _ => {
                let low = sup.iter().copied().fold(f64::INFINITY, f64::min);
                checks.push(Check::at_least(
                    format!("{tag}: sup excess floor"),
                    sup.len(),
                    low,
                    COUNTEREXAMPLE_EXCESS_FLOOR,
                    Some(rows),
                ));
                checks.push(Check::at_most(format!("{tag}: no decay trend"), 1, if r.trend_pass { 1.0 } else { 0.0 }, 0.0, None));
            }
        }
    }
    SuiteReport::new(5, "condition probe", checks)
}

pub fn counterexample_certificate(cfg: &SuiteConfig) -> SuiteReport {
    let cert = match counterexample::certificate::<f64>(&cfg.certificate) {
        Ok(c) => c,
        Err(e) => return SuiteReport::new(6, "counterexample certificate", vec![Check::failed("certificate", e.to_string())]),
    };
    let per_edge = cert.boundary_samples_per_edge;
    let mut checks = vec![
        Check::at_least("boundary min gap", 4 * per_edge, cert.boundary_min_gap, BOUNDARY_GAP_MIN, None),
        Check::at_least("boundary samples per edge", 1, per_edge as f64, 1e4, None),
        Check::at_most("interior max gap error", 1, (cert.interior_max_gap - INTERIOR_GAP).abs(), INTERIOR_GAP_TOL, None),
        Check::at_most("argmax error", 1, (cert.argmax_x - ARGMAX_X).abs(), ARGMAX_TOL, None),
        Check::at_most(
            "classical residual of u",
            cert.residual_stats.samples,
            cert.residual_stats.max_abs_residual,
            RESIDUAL_MAX,
            None,
        ),
        Check::at_most(
            "rank-one identity",
            cert.residual_stats.samples,
            cert.residual_stats.max_rank_one_error,
            RANK_ONE_MAX,
            None,
        ),
    ];
    for a in &cert.axis_check_results {
        let name = format!("{:?}", a.side);
        checks.push(Check::at_least(format!("{name}: min signed residual"), a.accepted, a.min_signed_residual, -1e-9, None));
        checks.push(Check::at_least(
            format!("{name}: min signed second difference"),
            a.accepted,
            a.min_signed_second_difference,
            -1e-9,
            None,
        ));
        checks.push(Check::at_least(
            format!("{name}: accepted quadratics"),
            a.trials,
            a.accepted as f64,
            MIN_ACCEPTED_QUADRATICS as f64,
            None,
        ));
    }
    let tc = &cert.touching_check;
    checks.push(Check::at_most("touching quadratic: contact error", 1, tc.contact_error, 1e-12, None));
    checks.push(Check::at_least("touching quadratic: margin slack", 1, tc.min_margin_slack, -1e-12, None));
    checks.push(Check::at_least("touching quadratic: interior", 1, if tc.interior { 1.0 } else { 0.0 }, 1.0, None));
    SuiteReport::new(6, "counterexample certificate", checks)
}

/// Criteria 1–6 in order.
pub fn run_all(cfg: &SuiteConfig) -> Vec<SuiteReport> {
    vec![
        acdo_properties(cfg),
        representations(cfg),
        matrix_inequalities(cfg),
        autonomous_detector(cfg),
        condition_probe(cfg),
        counterexample_certificate(cfg),
    ]
}

/// Serialized suite output, the unit compared by the determinism check.
pub fn report_json(reports: &[SuiteReport]) -> String {
    serde_json::to_string_pretty(reports).expect("plain data")
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

/// Criterion 7: two runs with equal seeds, one of them on a single worker,
/// give byte-identical reports.
pub fn determinism(cfg: &SuiteConfig, reference: &str, workers: usize) -> SuiteReport {
    let again = report_json(&with_workers(workers, || run_all(cfg)));
    let single = report_json(&with_workers(1, || run_all(cfg)));
    let diff = |a: &str, b: &str| if a == b { 0.0 } else { 1.0 };
    SuiteReport::new(
        7,
        "determinism",
        vec![
            Check::at_most(format!("rerun on {workers} workers differs"), 1, diff(reference, &again), 0.0, None),
            Check::at_most("single-worker run differs", 1, diff(reference, &single), 0.0, None),
        ],
    )
}
