use approx::assert_relative_eq;
use cle_fourpoint::closed_forms::*;
use cle_fourpoint::connection::connect_basis;
use cle_fourpoint::frobenius::{boundary_basis, eval_jet, DEFAULT_ORDER};
use cle_fourpoint::ode::{make_boundary_ode, normalized_residual, KappaParams};
use cle_fourpoint::Error;
use std::f64::consts::PI;

fn interior_grid() -> Vec<f64> {
    (1..=50).map(|i| i as f64 / 51.0).collect()
}

#[test]
fn special_kappa_tags() {
    let kappas: Vec<f64> = SpecialKappa::ALL.iter().map(|s| s.kappa()).collect();
    assert_eq!(kappas, vec![6.0, 16.0 / 3.0, 24.0 / 5.0, 8.0, 4.0, 8.0 / 3.0, 2.0]);
    assert!(SpecialKappa::K2.conjectural() && !SpecialKappa::K6.conjectural());
}

#[test]
fn printed_solutions_solve_the_ode() {
    for sk in SpecialKappa::ALL {
        let spec = make_boundary_ode(&sk.params());
        for &which in sk.solutions() {
            let quadrature = sk == SpecialKappa::K16_3 && which == Solution::V3h1;
            let bound = if quadrature { 1e-4 } else { 1e-9 };
            let k6 = sk == SpecialKappa::K6;
            for l in interior_grid().into_iter().filter(|&l| !k6 || l <= FS_MAX_LAMBDA) {
                let r = normalized_residual(&spec, &v_exact_jet(sk, which, l).unwrap(), l);
                assert!(r <= bound, "{sk:?} {which:?} at {l}: {r:e}");
            }
        }
    }
}

/// Largest relative spread of f/g over the points.
fn ratio_spread(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, pts: &[f64]) -> f64 {
    let r: Vec<f64> = pts.iter().map(|&l| f(l) / g(l)).collect();
    r.iter().fold(0.0f64, |m, v| m.max((v - r[0]).abs() / r[0].abs()))
}

#[test]
fn printed_solutions_are_multiples_of_series_solutions() {
    let pts: Vec<f64> = (0..=35).map(|i| (10 + i) as f64 / 100.0).collect();
    let cases = [
        (SpecialKappa::K6, Solution::V3h1, 2),
        (SpecialKappa::K16_3, Solution::V0, 0),
        (SpecialKappa::K16_3, Solution::V3h1, 2),
        (SpecialKappa::K24_5, Solution::Vh, 1),
        (SpecialKappa::K24_5, Solution::V3h1, 2),
    ];
    for (sk, which, idx) in cases {
        let basis = boundary_basis(&sk.params(), DEFAULT_ORDER).unwrap();
        let spread = ratio_spread(
            |l| v_exact(sk, which, l).unwrap(),
            |l| eval_jet(&basis[idx], l).unwrap().u,
            &pts,
        );
        assert!(spread <= 1e-7, "{sk:?} {which:?}: {spread:e}");
    }
}

#[test]
fn twenty_four_fifths_v0_is_symmetric_and_solves() {
    for l in [0.1, 0.3, 0.45] {
        assert_relative_eq!(
            v_exact(SpecialKappa::K24_5, Solution::V0, l).unwrap(),
            v_exact(SpecialKappa::K24_5, Solution::V0, 1.0 - l).unwrap(),
            max_relative = 1e-15
        );
    }
}

#[test]
fn fk_integral_identity() {
    // V₀·∫₀^λ g is the V_{5/2} solution up to normalization.
    let basis = boundary_basis(&SpecialKappa::K16_3.params(), DEFAULT_ORDER).unwrap();
    let a = a_fk().unwrap();
    let pts: Vec<f64> = (0..=40).map(|i| 0.1 + 0.01 * i as f64).collect();
    let spread = ratio_spread(
        |l| (1.0 - l + l * l) * r_fk(l).unwrap() / a,
        |l| eval_jet(&basis[2], l).unwrap().u,
        &pts,
    );
    assert!(spread <= 1e-7, "{spread:e}");
}

#[test]
fn fk_constants() {
    let total = fk_total_integral().unwrap();
    assert_relative_eq!(total, 0.833_691_282, epsilon = 1e-8);
    assert!((1.0 / total - 1.19948).abs() <= 2e-5);
    assert_relative_eq!(a_fk().unwrap() * total, 1.0, max_relative = 1e-14);
}

#[test]
fn g_is_continuous_across_the_branch_switch() {
    let hyper = g_fk_hypergeometric_jet(G_FK_SPLIT).unwrap();
    let series = g_fk_series(1.0 - G_FK_SPLIT).unwrap();
    assert_relative_eq!(hyper.u, series[0], max_relative = 1e-10);
    assert_relative_eq!(hyper.du, series[1], max_relative = 1e-8);
    for x in [1e-6, 1e-4] {
        assert_relative_eq!(g_fk(x).unwrap() / x.powf(1.5), 1.0, max_relative = 1e-3);
    }
}

#[test]
fn r_fk_limits() {
    assert!(r_fk(1e-6).unwrap() < 1e-12);
    assert!((r_fk(1.0 - 1e-9).unwrap() - 1.0).abs() < 1e-3);
    assert!(matches!(r_fk(1.5), Err(Error::Domain(_))));
}

#[test]
fn fk_log_singularity_fit() {
    let eps: Vec<f64> = (0..=12).map(|i| 10f64.powf(-4.0 + i as f64 / 6.0)).collect();
    let fit = fk_tail_fit(&eps).unwrap();
    assert!((fit.c0 / (64.0 / (21.0 * PI)) - 1.0).abs() <= 0.01, "{fit:?}");
    assert!((fit.c1 / (16.0 / (21.0 * PI)) - 1.0).abs() <= 0.03, "{fit:?}");
    assert!((fit.c_log / (2.0 / (5.0 * PI)) - 1.0).abs() <= 0.10, "{fit:?}");
    assert!(fk_tail_fit(&eps[..3]).is_err());
}

#[test]
fn partition_function_decay() {
    let taus: Vec<f64> = (0..=20).map(|i| 10f64.powf(-3.0 + 0.1 * i as f64)).collect();
    for kappa in [5.0, 16.0 / 3.0, 7.0] {
        let z = z_check(&KappaParams::new(kappa).unwrap(), &taus).unwrap();
        let slope = z.slope.expect("nonzero deviation");
        assert!((1.9..=2.1).contains(&slope), "kappa {kappa}: {slope}");
    }
    // At κ = 6 the deviation vanishes identically.
    let z = z_check(&KappaParams::new(6.0).unwrap(), &taus).unwrap();
    assert!(z.slope.is_none() && z.max_deviation <= Z_EXACT_TOL);
}

#[test]
fn partition_function_is_cardy_at_six() {
    let p = KappaParams::new(6.0).unwrap();
    for x in [0.1, 0.37, 0.8] {
        assert_relative_eq!(f_partition(&p, x).unwrap() + f_partition(&p, 1.0 - x).unwrap(), 1.0, epsilon = 1e-13);
    }
}

#[test]
fn percolation_series_branch_matches_connection_ratio() {
    // R = C·V₂/V₀ and F_S ∝ V₂ on the small-λ side.
    let c = connect_basis(&KappaParams::new(6.0).unwrap(), DEFAULT_ORDER).unwrap();
    let pts: Vec<f64> = (1..=9).map(|i| 0.05 * i as f64).collect();
    let spread = ratio_spread(|l| f_s_jet(l).unwrap().u, |l| c.solution_jet(2, l).unwrap().u, &pts);
    assert!(spread <= 1e-7, "{spread:e}");
    assert!(f_s_jet(0.6).is_err());
}

#[test]
fn brownian_probability_is_a_probability() {
    let vals: Vec<f64> = (1..20).map(|i| brownian_p(i as f64 / 20.0).unwrap()).collect();
    assert!(vals.iter().all(|&v| (0.0..=1.0).contains(&v)), "{vals:?}");
    assert!(brownian_p(1.0).is_err());
}

#[test]
fn unsupported_pairs_are_rejected() {
    assert!(matches!(v_exact(SpecialKappa::K6, Solution::V0, 0.3), Err(Error::Unsupported(_))));
    assert!(matches!(v_exact(SpecialKappa::K8, Solution::V0, 0.3), Err(Error::Unsupported(_))));
}
