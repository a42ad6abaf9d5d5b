mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sse_tda::analysis::{correlation_dimension, sup_row_distance, EpsilonGrid, FitRange};
use sse_tda::denoise::{backward_pinv, forward_nudft, threshold_psd};
use sse_tda::embedding::pointwise_center_scale;
use sse_tda::persistence::{bottleneck, bottleneck_pairs, hausdorff, vr_persistence, FiltrationParams};
use sse_tda::timeseries::read_csv;
use sse_tda::{extract_subsequences, rescale_to_grid, DiagramF64, EmbeddingF64, TimeSeries};

fn tick_set() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::btree_set(0i64..80, 1..60).prop_map(|s| s.into_iter().collect())
}

fn cloud(max_points: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=3).prop_flat_map(move |d| prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), 2..max_points))
}

fn diagram() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..3.0, 0.01f64..3.0).prop_map(|(b, p)| (b, b + p)), 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subsequences_are_disjoint_progressions(ticks in tick_set(), r in 1i64..4, m in 1usize..6) {
        prop_assume!(m <= ticks.len() && r <= ticks[ticks.len() - 1] - ticks[0]);
        let set = extract_subsequences(&ticks, r, m).unwrap();
        let mut seen = HashSet::new();
        for s in &set.subsequences {
            prop_assert!(s.len() >= m);
            prop_assert!(s.ticks.windows(2).all(|w| w[1] - w[0] == r));
            for (&i, &t) in s.indices.iter().zip(&s.ticks) {
                prop_assert_eq!(ticks[i], t);
                prop_assert!(seen.insert(i));
            }
        }
    }

    #[test]
    fn no_long_progression_is_left_behind(ticks in tick_set(), r in 1i64..4, m in 1usize..6) {
        prop_assume!(m <= ticks.len() && r <= ticks[ticks.len() - 1] - ticks[0]);
        let set = extract_subsequences(&ticks, r, m).unwrap();
        let residual = set.residual_ticks();
        for run in common::maximal_progressions(&residual, r) {
            prop_assert!(run.len() < m, "residual run of length {} with m = {}", run.len(), m);
        }
    }

    #[test]
    fn uniform_ticks_form_one_subsequence(n in 1i64..100, m in 1usize..5) {
        let ticks: Vec<i64> = (0..n).collect();
        match extract_subsequences(&ticks, 1, m) {
            Ok(set) => {
                prop_assert_eq!(set.len(), 1);
                prop_assert!(set.covers_parent());
            }
            Err(_) => prop_assert!((n as usize) < m),
        }
    }

    #[test]
    fn rescaling_inverts_to_original_times(ticks in tick_set(), base in -50.0f64..50.0, step in 0.01f64..5.0) {
        prop_assume!(ticks.len() >= 2);
        let times: Vec<f64> = ticks.iter().map(|&k| base + k as f64 * step).collect();
        let ts = TimeSeries::new(times.clone(), vec![0.0; times.len()]).unwrap();
        let tol = 1e-9 * (1.0 + base.abs() + 80.0 * step);
        match rescale_to_grid(&ts, tol) {
            Ok((rescaled, grid)) => {
                for (&k, &t) in grid.ticks.iter().zip(&times) {
                    prop_assert!((grid.time_of(k) - t).abs() <= 10.0 * tol);
                }
                prop_assert_eq!(rescaled.times()[0], 0.0);
            }
            // grids much finer than the closest pair are refused
            Err(_) => {
                let min_gap = ticks.windows(2).map(|w| w[1] - w[0]).min().unwrap();
                let g = ticks.windows(2).map(|w| w[1] - w[0]).fold(0, gcd);
                prop_assert!(min_gap > 2 * g);
            }
        }
    }

    #[test]
    fn bottleneck_is_a_metric(a in diagram(), b in diagram(), c in diagram()) {
        let ab = bottleneck_pairs(&a, &b);
        prop_assert_eq!(ab, bottleneck_pairs(&b, &a));
        prop_assert_eq!(bottleneck_pairs(&a, &a), 0.0);
        prop_assert!(bottleneck_pairs(&a, &c) <= ab + bottleneck_pairs(&b, &c) + 1e-12);
    }

    #[test]
    fn bottleneck_matches_enumeration(a in prop::collection::vec((0.0f64..3.0, 0.01f64..3.0).prop_map(|(b, p)| (b, b + p)), 0..4),
                                      b in prop::collection::vec((0.0f64..3.0, 0.01f64..3.0).prop_map(|(b, p)| (b, b + p)), 0..4)) {
        prop_assert_eq!(bottleneck_pairs(&a, &b), common::brute_bottleneck(&a, &b));
    }

    #[test]
    fn duplicated_points_leave_diagrams_unchanged(points in cloud(25), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..10)) {
        let mut extended = points.clone();
        for p in &picks {
            extended.push(points[p.index(points.len())].clone());
        }
        let params = FiltrationParams::up_to(1);
        let a = vr_persistence(&points, &params).unwrap();
        let b = vr_persistence(&extended, &params).unwrap();
        prop_assert_eq!(a.features(), b.features());
    }

    #[test]
    fn diagrams_are_stable_under_hausdorff_perturbation(points in cloud(20), seed in any::<u64>(), scale in 0.0f64..0.3) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let moved: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().map(|x| x + rng.gen_range(-scale..=scale)).collect())
            .collect();
        let params = FiltrationParams::up_to(1);
        let h = hausdorff(&points, &moved).unwrap();
        let a = vr_persistence(&points, &params).unwrap();
        let b = vr_persistence(&moved, &params).unwrap();
        for k in 0..=1 {
            prop_assert!(bottleneck(&a, &b, k).unwrap() <= 2.0 * h + 1e-12);
        }
    }

    #[test]
    fn aligned_row_distance_dominates_hausdorff(points in cloud(20), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let other: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|x| x + rng.gen_range(-0.5..0.5)).collect()).collect();
        let (a, b) = (EmbeddingF64::from_points(&points), EmbeddingF64::from_points(&other));
        prop_assert!(sup_row_distance(&a, &b).unwrap() >= hausdorff(&a, &b).unwrap());
    }

    #[test]
    fn correlation_sum_is_a_monotone_fraction(points in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 20..60)) {
        let e = EmbeddingF64::from_points(&points);
        if let Ok(r) = correlation_dimension(&e, &EpsilonGrid::Auto { count: 30 }, FitRange::Corr { lo: 0.0, hi: 1.0 }) {
            prop_assert!(r.corr_sums.iter().all(|c| (0.0..=1.0).contains(c)));
            prop_assert!(r.corr_sums.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*r.corr_sums.last().unwrap(), 1.0);
        }
    }

    #[test]
    fn thresholding_is_idempotent(values in prop::collection::vec(-5.0f64..5.0, 4..60), t in 0.0f64..20.0) {
        let sv = forward_nudft(&TimeSeries::uniform(values).unwrap()).unwrap();
        let once = threshold_psd(&sv, t);
        let twice = threshold_psd(&once, t);
        prop_assert_eq!(once.coefficients, twice.coefficients);
    }

    #[test]
    fn normalization_is_idempotent(points in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 1..30)) {
        let e = EmbeddingF64::from_points(&points);
        if let Ok(once) = pointwise_center_scale(&e) {
            let twice = pointwise_center_scale(&once).unwrap();
            for (x, y) in once.to_points().iter().flatten().zip(twice.to_points().iter().flatten()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transform_round_trip_is_linear(keep in prop::collection::vec(any::<bool>(), 20..60),
                                      a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        use rand::Rng;
        let ticks: Vec<f64> = keep.iter().enumerate().filter(|(i, &k)| k || *i == 0 || *i == keep.len() - 1).map(|(i, _)| i as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = ticks.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = ticks.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let op = |v: &[f64]| backward_pinv(&forward_nudft(&TimeSeries::new(ticks.clone(), v.to_vec()).unwrap()).unwrap()).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (fx, fy, fc) = (op(&x), op(&y), op(&combo));
        for i in 0..ticks.len() {
            prop_assert!((fc[i] - (a * fx[i] + b * fy[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn series_csv_round_trips(values in prop::collection::vec(-1e6f64..1e6, 1..40), step in 0.001f64..10.0) {
        let times: Vec<f64> = (0..values.len()).map(|i| i as f64 * step).collect();
        let ts = TimeSeries::new(times, values).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf, "t", "x").unwrap();
        let back: TimeSeries<f64> = read_csv(buf.as_slice(), "t", "x").unwrap();
        prop_assert_eq!(back, ts);
    }

    #[test]
    fn diagram_csv_and_json_round_trip(points in cloud(15)) {
        let dgm = vr_persistence(&points, &FiltrationParams::up_to(1)).unwrap();
        let mut buf = Vec::new();
        dgm.write_csv(&mut buf).unwrap();
        prop_assert_eq!(&DiagramF64::read_csv(buf.as_slice()).unwrap(), &dgm);
        prop_assert_eq!(&DiagramF64::from_json(&dgm.to_json()).unwrap(), &dgm);
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn persistence_matches_boundary_matrix_oracle_on_small_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for draw in 0..200 {
        let n = 1 + draw % 7;
        let cloud = common::random_cloud(&mut rng, n, 3, draw % 3 == 0);
        let dgm = vr_persistence(&cloud, &FiltrationParams::up_to(2)).unwrap();
        let mut got: Vec<(usize, f64, f64)> = dgm.features().iter().map(|f| (f.dim, f.birth, f.death)).collect();
        common::sort_pairs(&mut got);
        assert_eq!(got, common::naive_vr(&cloud, 2), "cloud {cloud:?}");
    }
}
