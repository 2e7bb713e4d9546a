use levelkit::counterexample::{coefficient_matrix, max_principle_witness, q_vector, PlanePoint};
use levelkit::operators::{dual_operator, make_operator, EllipticOperator, OperatorSpec};
use levelkit::sampling;
use levelkit::symmat::SymMat;
use proptest::prelude::*;

fn catalog() -> Vec<(EllipticOperator<f64>, Vec<f64>)> {
    vec![
        (make_operator(&OperatorSpec::laplacian(3)).unwrap(), vec![0.0; 3]),
        (make_operator(&OperatorSpec::max_eigenvalue(3)).unwrap(), vec![0.0; 3]),
        (
            make_operator(&OperatorSpec::linear_constant(vec![vec![2.0, 1.0], vec![1.0, 1.0]], -0.5)).unwrap(),
            vec![0.0; 2],
        ),
        (make_operator(&levelkit::suite::linear_field_example(3)).unwrap(), vec![0.1, -0.2, 0.3]),
        (make_operator(&OperatorSpec::monge_ampere(3, 1.0, 1.0)).unwrap(), vec![0.2, 0.1, 0.0]),
        (make_operator(&OperatorSpec::plateau(2, 1.0)).unwrap(), vec![0.0; 2]),
        (make_operator(&OperatorSpec::counterexample_linear()).unwrap(), vec![0.5, -0.25]),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ellipticity_at_zero_both_implications(seed in any::<u64>(), scale in 0.01f64..5.0) {
        for (op, x) in catalog() {
            let n = op.dim();
            let mut rng = sampling::stream(seed, 0);
            let m = sampling::sym_from_rng(&mut rng, n, scale);
            // Near-boundary starts matter most: move m onto Γ for half the cases.
            let m = if seed % 2 == 0 {
                levelkit::acdo::project_to_gamma(&op, &m, &x, 1e-10).unwrap()
            } else {
                m
            };
            let a = &sampling::psd_bump(&mut rng, n, 1e-3, scale) + &SymMat::scalar(n, 1e-6);
            let f0 = op.eval(&m, &x).unwrap();
            let f1 = op.eval(&(&m + &a), &x).unwrap();
            prop_assert!(!f0.is_nonneg() || f1.is_nonneg(), "{}: {f0:?} -> {f1:?}", op.name());
            prop_assert!(!f0.is_pos() || f1.is_pos(), "{}: {f0:?} -> {f1:?}", op.name());
        }
    }

    #[test]
    fn dual_is_an_involution(seed in any::<u64>()) {
        for (op, x) in catalog() {
            let dd = dual_operator(&dual_operator(&op));
            let m = levelkit::symmat::random_sym::<f64>(op.dim(), 3.0, seed);
            prop_assert_eq!(dd.eval(&m, &x).unwrap(), op.eval(&m, &x).unwrap());
            let d = dual_operator(&op);
            prop_assert_eq!(d.eval(&m, &x).unwrap(), -op.eval(&-&m, &x).unwrap());
        }
    }

    #[test]
    fn coefficient_is_rank_one_product(x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let p = PlanePoint::new(x, y);
        let a = coefficient_matrix(p);
        let q = q_vector(p);
        prop_assert!(a.max_abs_diff(&SymMat::rank_one(&q)) <= 1e-14);
        prop_assert!(a.lambda_min().unwrap() >= -1e-15);
        let tr = (x * x).cbrt() + (y * y).cbrt();
        prop_assert!((a.trace() - tr).abs() <= 1e-14);
    }

    #[test]
    fn maximum_principle_sign(x in -2.0f64..2.0, y in -2.0f64..2.0, t in 1e-3f64..10.0) {
        prop_assume!(x != 0.0 || y != 0.0);
        let w = max_principle_witness(PlanePoint::new(x, y), t).unwrap();
        prop_assert!(w < 0.0);
        let expected = -((x * x).cbrt() + (y * y).cbrt()) * t;
        prop_assert!((w - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }
}

#[test]
fn counterexample_coefficient_on_the_x_axis() {
    for &x0 in &[0.125f64, 0.5, 2.0, -0.3] {
        let a = coefficient_matrix(PlanePoint::new(x0, 0.0));
        let c = (x0 * x0).cbrt();
        assert!(a.max_abs_diff(&SymMat::diag(&[c, 0.0])) <= 1e-15);
    }
}
