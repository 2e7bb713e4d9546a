use levelkit::acdo::compute_acdo;
use levelkit::levelsets::{
    ascoli_distance, bounded_hausdorff, check_ball, check_condition, dist_to_level_set, excess_estimate,
    gamma_continuity_probe, ls_slope, sample_level_set,
};
use levelkit::operators::{in_level_set, make_operator, EllipticOperator, OperatorSpec, Side};
use levelkit::suite::{acdo_catalog, linear_field_example};
use levelkit::symmat::{resolvent_transform, SymMat};
use levelkit::{sampling, Error};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn catalog() -> Vec<EllipticOperator<f64>> {
    acdo_catalog(3).iter().map(|s| make_operator(s).unwrap()).collect()
}

fn linear_field() -> EllipticOperator<f64> {
    make_operator(&linear_field_example(3)).unwrap()
}

/// `F̄` of the linear field operator by hand: `(tr(A(x)X) − f(x)) / tr A(x)`.
fn linear_field_value(m: &SymMat<f64>, x: &[f64]) -> f64 {
    let a = SymMat::diag(&[0.5 + 0.25 * x[0], 0.5 - 0.25 * x[0], 1.0]);
    let f = 0.2 + 0.1 * x[1];
    (a.inner(m).unwrap() - f) / a.trace()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distances_are_never_both_positive(seed in any::<u64>()) {
        let mut rng = sampling::stream(seed, 0);
        let x = sampling::point_in_ball(&mut rng, &[0.0; 3], 1.0);
        for op in catalog() {
            let m = sampling::sym_from_rng::<f64>(&mut rng, 3, 3.0);
            let dp = dist_to_level_set(&op, &m, &x, Side::Plus, TOL).unwrap();
            let dm = dist_to_level_set(&op, &m, &x, Side::Minus, TOL).unwrap();
            prop_assert!(dp >= 0.0 && dm >= 0.0);
            prop_assert!(dp <= TOL || dm <= TOL, "{}: {dp} {dm}", op.name());
            let v = compute_acdo(&op, &m, &x, TOL).unwrap().value;
            prop_assert!((dp - (-v).max(0.0)).abs() <= 2.0 * TOL);
            prop_assert!((dm - v.max(0.0)).abs() <= 2.0 * TOL);
        }
    }

    #[test]
    fn distance_is_one_lipschitz(seed in any::<u64>()) {
        let mut rng = sampling::stream(seed, 1);
        let x = sampling::point_in_ball(&mut rng, &[0.0; 3], 1.0);
        for op in catalog() {
            let a = sampling::sym_from_rng::<f64>(&mut rng, 3, 3.0);
            let b = sampling::sym_from_rng::<f64>(&mut rng, 3, 3.0);
            let gap = (&a - &b).op_norm().unwrap();
            for side in [Side::Plus, Side::Minus] {
                let da = dist_to_level_set(&op, &a, &x, side, TOL).unwrap();
                let db = dist_to_level_set(&op, &b, &x, side, TOL).unwrap();
                prop_assert!((da - db).abs() <= gap + 2.0 * TOL);
            }
        }
    }

    #[test]
    fn resolvent_moves_plus_distance_down(seed in any::<u64>(), u in 0.0f64..0.9) {
        let mut rng = sampling::stream(seed, 2);
        let x = sampling::point_in_ball(&mut rng, &[0.0; 3], 1.0);
        for op in catalog() {
            let m = sampling::sym_from_rng::<f64>(&mut rng, 3, 3.0);
            let delta = u / m.op_norm().unwrap().max(1e-12);
            let z = resolvent_transform(&m, delta).unwrap();
            // Z ⪰ X, so Z is no farther from the superlevel set.
            let dz = dist_to_level_set(&op, &z, &x, Side::Plus, TOL).unwrap();
            let dx = dist_to_level_set(&op, &m, &x, Side::Plus, TOL).unwrap();
            prop_assert!(dz <= dx + 2.0 * TOL, "{}: {dz} > {dx}", op.name());
            let zm = resolvent_transform(&m, -delta).unwrap();
            let dzm = dist_to_level_set(&op, &zm, &x, Side::Minus, TOL).unwrap();
            let dxm = dist_to_level_set(&op, &m, &x, Side::Minus, TOL).unwrap();
            prop_assert!(dzm <= dxm + 2.0 * TOL);
        }
    }

    #[test]
    fn linear_field_distance_matches_hand_formula(seed in any::<u64>()) {
        let op = linear_field();
        let mut rng = sampling::stream(seed, 3);
        let x = sampling::point_in_ball(&mut rng, &[0.0; 3], 1.0);
        let m = sampling::sym_from_rng::<f64>(&mut rng, 3, 3.0);
        let v = linear_field_value(&m, &x);
        let dp = dist_to_level_set(&op, &m, &x, Side::Plus, TOL).unwrap();
        prop_assert!((dp - (-v).max(0.0)).abs() <= 2.0 * TOL);
        // Ascoli's hyperplane formula measures the same distance.
        let a = SymMat::diag(&[0.5 + 0.25 * x[0], 0.5 - 0.25 * x[0], 1.0]);
        let asc = ascoli_distance(&a, 0.2 + 0.1 * x[1], &m).unwrap();
        prop_assert!((asc - v.abs()).abs() <= 1e-12 * (1.0 + v.abs()));
    }
}

#[test]
fn samples_lie_in_their_level_set() {
    let x = [0.2, -0.1, 0.3];
    for op in catalog() {
        for side in [Side::Plus, Side::Minus] {
            let s = sample_level_set(&op, &x, side, 64, 10.0, 5, TOL).unwrap();
            assert_eq!(s.len(), 64);
            for m in &s {
                assert!(in_level_set(&op, m, &x, side).unwrap(), "{} {side}", op.name());
            }
            // Every eighth sample sits on Γ.
            let v = compute_acdo(&op, &s[0], &x, TOL).unwrap().value;
            assert!(v.abs() <= 2.0 * TOL);
        }
    }
}

#[test]
fn autonomous_excess_vanishes() {
    let x = [0.1, 0.0, -0.2];
    let y = [-0.3, 0.2, 0.1];
    for op in catalog().into_iter().take(2) {
        for side in [Side::Plus, Side::Minus] {
            let e = excess_estimate(&op, &x, &y, 0.05, side, 128, 9, TOL).unwrap();
            assert!(e.value <= 2.0 * TOL, "{} {side}: {}", op.name(), e.value);
            assert!(e.samples_in > 0);
        }
    }
}

#[test]
fn linear_field_excess_is_linear_in_the_displacement() {
    let op = linear_field();
    let x = [0.0, 0.0, 0.0];
    let mut ratios = Vec::new();
    for k in 0..4 {
        let h = 0.1 / 2f64.powi(k);
        let y = [h, h, 0.0];
        let e = excess_estimate(&op, &x, &y, 0.0, Side::Plus, 256, 11, TOL).unwrap();
        ratios.push(e.value / h);
    }
    // Sample scale caps at 1e3: |ΔF̄| ≤ (1e3·‖ΔA‖₁ + |Δf|)/tr A = (500h + 0.1h)/2.
    let c = (1e3 * 0.5 + 0.1) / 2.0;
    for r in &ratios {
        assert!(*r <= c + 1e-6, "{ratios:?}");
        assert!(*r > 0.0);
    }
    // Same samples at every h, so the ratio is stable under halving.
    for w in ratios.windows(2) {
        assert!((w[0] - w[1]).abs() <= 0.05 * w[0], "{ratios:?}");
    }
}

#[test]
fn bounded_hausdorff_of_linear_field() {
    let op = linear_field();
    let x = [0.0, 0.0, 0.0];
    for &(h, r) in &[(0.2, 1.0), (0.1, 1.0), (0.1, 4.0)] {
        let y = [h, 0.0, 0.0];
        // ‖A(x) − A(y)‖₁ = h/2 and tr A = 2.
        let bound = r * (h / 2.0) / 2.0;
        let d = bounded_hausdorff(&op, &x, &y, r, 1000, 21, TOL).unwrap();
        assert!(d <= bound + 4.0 * TOL, "h={h} R={r}: {d} > {bound}");
        assert!(d >= 0.8 * bound, "h={h} R={r}: {d} far below {bound}");
    }
    let lap = make_operator::<f64>(&OperatorSpec::laplacian(3)).unwrap();
    assert!(bounded_hausdorff(&lap, &x, &[0.5, 0.5, 0.5], 2.0, 200, 1, TOL).unwrap() <= 2.0 * TOL);
}

#[test]
fn continuity_probe_shrinks_with_radius() {
    let op = linear_field();
    let m = SymMat::diag(&[1.0, -2.0, 0.5]);
    let x0 = [0.1, 0.1, 0.0];
    let radii = [0.2, 0.1, 0.05, 0.025];
    let probe = gamma_continuity_probe(&op, &m, &x0, &radii, 200, 4, TOL).unwrap();
    // |ΔF̄| ≤ r·(|∂A/∂x₁ : X| + |∂f/∂x₂|)/2 = r·(0.75 + 0.1)/2.
    for (r, worst) in &probe {
        assert!(*worst <= r * 0.85 / 2.0 + 4.0 * TOL, "r={r}: {worst}");
    }
    assert!(probe.windows(2).all(|w| w[1].1 <= w[0].1));
}

#[test]
fn condition_report_shape() {
    let op = make_operator::<f64>(&OperatorSpec::laplacian(2)).unwrap();
    let rep = check_condition(&op, &[0.0, 0.0], &[0.1, 0.05], 4, 8, 2, TOL).unwrap();
    assert_eq!(rep.rows.len(), 2);
    assert!(rep.sup_excess().iter().all(|&e| e <= 2.0 * TOL));
    let csv = rep.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,sup_excess_plus,sup_excess_minus,pairs_sampled");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.1,"));
    let json = serde_json::to_value(&rep).unwrap();
    for key in ["base_point", "rows", "decay_slope", "final_sup_excess", "trend_pass", "note"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["rows"][0]["pairs_sampled"], 4);
}

#[test]
fn slope_fit_recovers_power_laws() {
    let ts = [0.1f64, 0.05, 0.02, 0.01];
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ts.iter().map(|t| (3.0 * t.powi(2)).ln()).collect();
    assert!((ls_slope(&lx, &ly) - 2.0).abs() < 1e-12);
    assert_eq!(ls_slope(&[1.0, 1.0], &[0.0, 5.0]), 0.0);
}

#[test]
fn error_cases() {
    let lap = make_operator::<f64>(&OperatorSpec::laplacian(2)).unwrap();
    let ce = make_operator::<f64>(&OperatorSpec::counterexample_linear()).unwrap();
    let z = SymMat::zeros(2);
    assert!(matches!(ascoli_distance(&z, 1.0, &z), Err(Error::ZeroCoefficient)));
    assert!(matches!(sample_level_set(&lap, &[0.0, 0.0], Side::Plus, 0, 1.0, 0, TOL), Err(Error::InvalidCount)));
    assert!(matches!(
        bounded_hausdorff(&lap, &[0.0, 0.0], &[0.0, 0.0], 0.0, 10, 0, TOL),
        Err(Error::InvalidRadius(_))
    ));
    assert!(matches!(check_ball(&ce, &[0.1, 0.0], 0.1), Err(Error::BallOutsideDomain { .. })));
    assert!(check_ball(&ce, &[0.5, 0.0], 0.1).is_ok());
    assert!(check_condition(&lap, &[0.0, 0.0], &[0.05, 0.1], 2, 2, 0, TOL).is_err());
    assert!(matches!(check_condition(&lap, &[0.0, 0.0], &[], 2, 2, 0, TOL), Err(Error::InvalidCount)));
    assert!(excess_estimate(&lap, &[0.0, 0.0], &[0.1, 0.0], -1.0, Side::Plus, 4, 0, TOL).is_err());
}
