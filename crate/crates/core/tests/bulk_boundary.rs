use approx::assert_relative_eq;
use cle_fourpoint::bulk::*;
use cle_fourpoint::ode::KappaParams;
use cle_fourpoint::Error;
use proptest::prelude::*;

#[test]
fn alpha_at_percolation_is_five_over_forty_eight() {
    assert_eq!(KappaParams::new(6.0).unwrap().alpha, 5.0 / 48.0);
}

#[test]
fn three_solutions_solve_the_bulk_ode() {
    for kappa in [4.5, 24.0 / 5.0, 5.0, 6.0, 7.0, 7.5] {
        let p = KappaParams::new(kappa).unwrap();
        for c in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.3, -1.2, 0.7]] {
            for l in [0.2, 0.5, 0.8, 1.2, 1.6] {
                let r = bulk_residual(l, c, &p, p.alpha).unwrap();
                assert!(r <= 1e-8, "kappa {kappa}, c {c:?}, lambda {l}: {r:e}");
            }
        }
    }
}

#[test]
fn power_solution_selects_alpha() {
    for i in 0..20 {
        let p = KappaParams::new(4.1 + 0.2 * i as f64).unwrap();
        let off = bulk_residual(0.7, [1.0, 0.0, 0.0], &p, p.alpha + 1e-3).unwrap();
        assert!(off > 1e-4, "kappa {}: {off:e}", p.kappa);
    }
}

#[test]
fn green_function_examples() {
    let p = KappaParams::new(6.0).unwrap();
    let pt = BulkPoint::new(-1.0, 1.0, 0.0, 1.0).unwrap();
    // |x₂−x₁|^{−1/3}·1·(√2)^{−2/3} = 2^{−2/3}.
    assert_relative_eq!(bulk_green(&pt, &p).unwrap(), 2f64.powf(-2.0 / 3.0), max_relative = 1e-15);
    let l = pt.cross_ratio().unwrap();
    // A symmetric configuration sits at λ = 2, the far point of the circle.
    assert_relative_eq!(l.re, 2.0, epsilon = 1e-15);
    assert_relative_eq!(l.im, 0.0, epsilon = 1e-15);
}

#[test]
fn invalid_points_are_rejected() {
    assert!(matches!(BulkPoint::new(0.0, 0.0, 0.5, 1.0), Err(Error::DegenerateGeometry(_))));
    assert!(matches!(BulkPoint::new(0.0, 1.0, 0.5, 0.0), Err(Error::DegenerateGeometry(_))));
    let p = KappaParams::new(6.0).unwrap();
    assert!(matches!(bulk_solution(2.5, [1.0, 0.0, 0.0], &p), Err(Error::Domain(_))));
    assert!(matches!(bulk_solution(1.0, [1.0, 0.0, 0.0], &p), Err(Error::DegenerateGeometry(_))));
}

fn bulk_point() -> impl Strategy<Value = BulkPoint> {
    (-5.0f64..5.0, 0.05f64..5.0, -5.0f64..5.0, 0.05f64..5.0)
        .prop_map(|(x1, gap, z_re, z_im)| BulkPoint { x1, x2: x1 + gap, z_re, z_im })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cross_ratio_lies_on_the_circle(pt in bulk_point()) {
        let l = pt.cross_ratio().unwrap();
        prop_assert!(((l - 1.0).norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn green_function_is_mobius_covariant(
        pt in bulk_point(), a in 0.1f64..10.0, b in -10.0f64..10.0, k in 4.1f64..7.9,
    ) {
        let p = KappaParams::new(k).unwrap();
        let affine = Mobius::Affine { a, b };
        prop_assert!(covariance_defect(&pt, affine, &p).unwrap() <= 1e-10);
        if pt.x1.abs() > 0.05 && pt.x2.abs() > 0.05 {
            prop_assert!(covariance_defect(&pt, Mobius::Inversion, &p).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn green_function_factorizes(pt in bulk_point(), k in 4.1f64..7.9) {
        let p = KappaParams::new(k).unwrap();
        prop_assert!(factorization_defect(&pt, &p).unwrap() <= 1e-12);
    }
}
