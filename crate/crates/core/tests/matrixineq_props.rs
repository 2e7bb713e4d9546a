use levelkit::matrixineq::{
    block_defect, block_inequality_holds, eps_grid, forward_direction_check, lemma_sm_check, random_block_pair,
    random_x_delta, reverse_direction_check, xd_ineq_defect, BlockPair, GRID_POINTS,
};
use levelkit::symmat::{shifted_resolvent, Mat, SymMat};
use levelkit::{sampling, Error};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

/// Largest eigenvalue of `[[x − a, a], [a, −y − a]]`.
fn two_by_two_defect(x: f64, y: f64, a: f64) -> f64 {
    let (p, q, r) = (x - a, a, -y - a);
    0.5 * (p + r) + (0.25 * (p - r) * (p - r) + q * q).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn scalar_block_defect_matches_closed_form(x in -5.0f64..5.0, y in -5.0f64..5.0, a in 0.01f64..10.0) {
        let p = BlockPair::new(SymMat::diag(&[x]), SymMat::diag(&[y]), a).unwrap();
        let d = block_defect(&p).unwrap();
        prop_assert!((d - two_by_two_defect(x, y, a)).abs() <= 1e-12 * (1.0 + d.abs()));
    }

    #[test]
    fn generated_pairs_satisfy_both_forms(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = sampling::stream(seed, 0);
        let p = random_block_pair::<f64>(&mut rng, n).unwrap();
        let scale = p.x.op_norm().unwrap().max(p.y.op_norm().unwrap()).max(1.0);
        prop_assert!(block_inequality_holds(&p, TOL * scale).unwrap());
        let grid = eps_grid(p.alpha, GRID_POINTS);
        prop_assert!(forward_direction_check(&p, &grid, TOL).unwrap().pass);
        let rev = reverse_direction_check(&p.x, &p.y, p.alpha, &grid, TOL).unwrap();
        prop_assert!(rev.pass);
        prop_assert_eq!(rev.hypotheses.checked, GRID_POINTS);
    }

    #[test]
    fn lowering_y_breaks_both_forms(seed in any::<u64>(), n in 1usize..=4, c in 1e-2f64..1.0) {
        let mut rng = sampling::stream(seed, 1);
        let p = random_block_pair::<f64>(&mut rng, n).unwrap();
        // Y − cI sits strictly below X(I − X/α)⁻¹, which the block form forces.
        // The gap is relative so it clears the norm-scaled tolerances.
        let r = shifted_resolvent(&p.x, 1.0 / p.alpha).unwrap();
        let lowered = r.shifted(-c * r.op_norm().unwrap().max(1.0));
        let q = BlockPair::new(p.x.clone(), lowered, p.alpha).unwrap();
        prop_assert!(block_defect(&q).unwrap() > 0.0);
        let grid = eps_grid(p.alpha, GRID_POINTS);
        let rev = reverse_direction_check(&q.x, &q.y, q.alpha, &grid, TOL).unwrap();
        prop_assert!(!rev.pass);
        prop_assert!(!rev.hypotheses.pass);
    }

    #[test]
    fn two_factor_inequality_holds(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let mut rng = sampling::stream(seed, 2);
        let (x, delta) = random_x_delta::<f64>(&mut rng, n).unwrap();
        let q1 = Mat::random(n, m, 2.0, &mut rng);
        let q2 = Mat::random(n, m, 2.0, &mut rng);
        let r = lemma_sm_check(&x, delta, &q1, &q2, 1e-10).unwrap();
        prop_assert!(r.holds, "defect {}", r.defect);
        prop_assert!(xd_ineq_defect(&x, delta).unwrap() >= -1e-10 * x.op_norm().unwrap().max(1.0));
    }

    #[test]
    fn grid_shape(alpha in 1e-3f64..1e3, points in 2usize..300) {
        let g = eps_grid(alpha, points);
        prop_assert_eq!(g.len(), points);
        prop_assert_eq!(g[0], 0.0);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        let top = (1.0 / alpha) * (1.0 - 1e-6);
        prop_assert!((g[points - 1] - top).abs() <= 1e-12 / alpha);
    }
}

#[test]
fn equal_matrices_at_the_edge() {
    // X = Y = 0 is on the boundary of the block inequality for every α.
    let p = BlockPair::new(SymMat::<f64>::zeros(2), SymMat::zeros(2), 3.0).unwrap();
    assert!(block_defect(&p).unwrap().abs() <= 1e-15);
}

#[test]
fn error_cases() {
    assert!(BlockPair::new(SymMat::<f64>::zeros(2), SymMat::zeros(3), 1.0).is_err());
    assert!(BlockPair::new(SymMat::<f64>::zeros(2), SymMat::zeros(2), 0.0).is_err());
    let x = SymMat::identity(2);
    let y = SymMat::zeros(2);
    let p = BlockPair::new(x.clone(), y.clone(), 1.0).unwrap();
    assert!(matches!(forward_direction_check(&p, &eps_grid(1.0, 10), TOL), Err(Error::PreconditionNotMet(_))));
    assert!(matches!(
        reverse_direction_check(&x, &y, 1.0, &eps_grid(1.0, 49), TOL),
        Err(Error::PreconditionNotMet(_))
    ));
    let q = Mat::<f64>::identity(2);
    assert!(lemma_sm_check(&x, 0.0, &q, &q, TOL).is_err());
}
