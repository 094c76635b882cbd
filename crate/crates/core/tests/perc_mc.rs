use cle_fourpoint::perc_mc::*;
use cle_fourpoint::Error;
use proptest::prelude::*;

fn small_config(samples: u64, seed: u64) -> McConfig {
    McConfig::conformal(64, &[0.3, 0.5], &[1, 2], 16, samples, seed).unwrap()
}

#[test]
fn planarity_forbids_the_crossed_pattern() {
    let cfg = small_config(2000, 3);
    let tallies = run_box(&cfg).unwrap();
    let sets = cfg.point_sets.iter().flat_map(|s| std::iter::repeat_n(s, cfg.halfwidths.len()));
    assert_eq!(tallies.len(), cfg.point_sets.len() * cfg.halfwidths.len());
    for (t, set) in tallies.iter().zip(sets) {
        assert!((t.lambda - set.lambda).abs() < 0.05);
        assert_eq!(t.n_13_24, 0);
        assert_eq!(t.n_1234 + t.n_12_34 + t.n_14_23 + t.n_13_24 + t.n_other, t.placements);
        assert_eq!(t.placements, t.samples * set.placements.len() as u64);
        assert!(t.n_total() > 0);
    }
}

#[test]
fn seed_and_workers_determine_the_counts() {
    let mut cfg = small_config(300, 11);
    cfg.workers = 3;
    let a = run_box(&cfg).unwrap();
    let b = run_box(&cfg).unwrap();
    assert_eq!(a, b);
    cfg.seed = 12;
    assert_ne!(run_box(&cfg).unwrap(), a);
}

#[test]
fn ratio_estimates_increase_with_lambda() {
    let mut cfg = McConfig::conformal(128, &[0.3, 0.5, 0.7], &[2], 32, 3000, 5).unwrap();
    cfg.workers = 2;
    let r: Vec<f64> = run_box(&cfg).unwrap().iter().map(|t| t.ratio()).collect();
    assert!(r[0] < r[1] && r[1] < r[2], "{r:?}");
}

#[test]
fn relabeling_symmetry() {
    // The (12)(34) ratio at λ estimates the (14)(23) ratio at 1 − λ.
    let mut cfg = McConfig::conformal(128, &[0.3, 0.7], &[2], 32, 6000, 9).unwrap();
    cfg.workers = 2;
    let t = run_box(&cfg).unwrap();
    let (low, high) = (&t[0], &t[1]);
    let joint = (low.stderr_12_34().powi(2) + high.stderr().powi(2)).sqrt();
    assert!((low.ratio_12_34() - high.ratio()).abs() <= 3.0 * joint);
    let joint = (low.stderr().powi(2) + high.stderr_12_34().powi(2)).sqrt();
    assert!((low.ratio() - high.ratio_12_34()).abs() <= 3.0 * joint);
}

#[test]
fn closed_box_matches_exact_ratio_and_wiring_shifts_it() {
    // The closed box is a rectangle with free sides, so the conformal cross
    // ratio makes it unbiased. Wiring the far boundary changes the event.
    let exact = cle_fourpoint::connection::connect_basis(
        &cle_fourpoint::ode::KappaParams::new(6.0).unwrap(),
        cle_fourpoint::frobenius::DEFAULT_ORDER,
    )
    .unwrap();
    let mut closed = McConfig::conformal(128, &[0.5], &[2], 32, 6000, 21).unwrap();
    closed.workers = 2;
    let mut wired = closed.clone();
    wired.far_boundary = FarBoundary::Wired;
    let (c, w) = (run_box(&closed).unwrap()[0], run_box(&wired).unwrap()[0]);
    let r = exact.ratio(c.lambda).unwrap();
    assert!((c.ratio() - r).abs() <= 3.0 * c.stderr(), "closed {} ± {} vs {r}", c.ratio(), c.stderr());
    assert!(w.ratio() > c.ratio(), "wired {} closed {}", w.ratio(), c.ratio());
}

#[test]
fn stderr_scales_as_inverse_root_samples() {
    let once = run_box(&McConfig::conformal(64, &[0.5], &[2], 16, 4000, 2).unwrap()).unwrap()[0];
    let twice = run_box(&McConfig::conformal(64, &[0.5], &[2], 16, 8000, 2).unwrap()).unwrap()[0];
    let ratio = twice.stderr() / once.stderr();
    assert!((ratio - 0.5f64.sqrt()).abs() < 0.1, "{ratio}");
}

#[test]
fn csv_rows_follow_the_header() {
    let tallies = run_box(&small_config(50, 1)).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &tallies).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    for (line, t) in lines.zip(&tallies) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[0].parse::<f64>().unwrap(), t.lambda);
        assert_eq!(fields[2].parse::<usize>().unwrap(), t.halfwidth);
        assert_eq!(fields[6].parse::<u64>().unwrap(), t.n_14_23);
    }
}

#[test]
fn misconfiguration_is_reported() {
    let mut cfg = small_config(10, 1);
    cfg.halfwidths = vec![0];
    assert!(matches!(run_box(&cfg), Err(Error::Misconfigured(_))));
    let mut cfg = small_config(10, 1);
    cfg.aspect = 1.0;
    assert!(matches!(run_box(&cfg), Err(Error::Misconfigured(_))));
    let mut cfg = small_config(10, 1);
    cfg.point_sets[0].placements[0] = [0, 10, 20, 30];
    assert!(matches!(run_box(&cfg), Err(Error::Misconfigured(_))));
    let mut cfg = small_config(10, 1);
    cfg.memory_budget = 10;
    assert!(matches!(run_box(&cfg), Err(Error::MemoryBudget { .. })));
    assert!(McConfig::conformal(64, &[1.2], &[1], 16, 10, 1).is_err());
    // Segments this wide cannot sit close enough for λ = 0.7.
    assert!(matches!(McConfig::conformal(64, &[0.7], &[2], 16, 10, 1), Err(Error::Misconfigured(_))));
    assert!(one_arm(&[4, 8, 16], 10, 1, 1).is_err());
}

#[test]
fn rhombus_crossing_is_self_dual() {
    let r = rhombus_crossing(48, 20_000, 4, 2).unwrap();
    assert!((r.probability - 0.5).abs() <= 3.0 * r.stderr, "{r:?}");
}

#[test]
fn one_arm_probabilities_decrease() {
    let r = one_arm(&[4, 8, 16, 32], 4000, 6, 2).unwrap();
    assert!(r.probability.windows(2).all(|w| w[1] < w[0]));
    assert!(r.exponent > 0.2 && r.exponent < 0.5, "{}", r.exponent);
}

#[test]
fn conformal_cross_ratio_is_reflection_symmetric() {
    let cfg = McConfig::conformal(256, &[0.4], &[1], 64, 1, 1).unwrap();
    let map = cfg.rectangle_map().unwrap();
    let w = cfg.width();
    for pts in &cfg.point_sets[0].placements {
        let mirrored = [w - 1 - pts[3], w - 1 - pts[2], w - 1 - pts[1], w - 1 - pts[0]];
        let (a, b) = (map.lambda(pts).unwrap(), map.lambda(&mirrored).unwrap());
        assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_is_a_partition(edges in proptest::collection::vec(any::<bool>(), 6)) {
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let linked = |i: usize, j: usize| pairs.iter().zip(&edges).any(|(&p, &e)| e && (p == (i, j) || p == (j, i)));
        let pattern = classify(linked);
        let relabeled = classify(|i, j| linked(3 - i, 3 - j));
        // Reversing the order keeps (12)(34) and (14)(23) fixed.
        prop_assert_eq!(pattern, relabeled);
    }

    #[test]
    fn map_preserves_order(a in 300usize..500, d1 in 5usize..60, d2 in 5usize..60, d3 in 5usize..60) {
        let cfg = McConfig::conformal(512, &[0.5], &[1], 64, 1, 1).unwrap();
        let map = cfg.rectangle_map().unwrap();
        let pts = [a, a + d1, a + d1 + d2, a + d1 + d2 + d3];
        let l = map.lambda(&pts).unwrap();
        prop_assert!(l > 0.0 && l < 1.0);
    }
}
