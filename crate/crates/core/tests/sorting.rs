use popsynth_core::nsga2::{crowding_distance, dominates, fast_nondominated_sort};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Peels fronts by repeated pairwise dominance checks.
fn brute_force_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j], &points[i]).unwrap()))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn random_instance(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rng.gen_range(1..=50);
    let k = rng.gen_range(2..=4);
    // small integer grid so ties and duplicates are common
    (0..n)
        .map(|_| (0..k).map(|_| rng.gen_range(0..6) as f64).collect())
        .collect()
}

#[test]
fn sort_matches_brute_force_on_200_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let points = random_instance(&mut rng);
        assert_eq!(
            fast_nondominated_sort(&points),
            brute_force_fronts(&points),
            "{points:?}"
        );
    }
}

#[test]
fn crowding_examples() {
    let d = crowding_distance(&[vec![1.0, 5.0], vec![2.0, 3.0], vec![4.0, 1.0]]);
    assert!(d[0].is_infinite() && d[2].is_infinite());
    assert!((d[1] - 2.0).abs() < 1e-9);
}

fn points(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=4)
        .prop_flat_map(move |k| prop::collection::vec(prop::collection::vec(0u8..8, k), 1..max_n))
        .prop_map(|v| v.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect())
}

proptest! {
    #[test]
    fn fronts_partition_and_order(points in points(40)) {
        let fronts = fast_nondominated_sort(&points);
        let mut seen: Vec<usize> = fronts.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..points.len()).collect::<Vec<_>>());
        for (r, front) in fronts.iter().enumerate() {
            for &a in front {
                for &b in front {
                    prop_assert!(!dominates(&points[a], &points[b]).unwrap());
                }
                if r > 0 {
                    prop_assert!(fronts[r - 1].iter().any(|&p| dominates(&points[p], &points[a]).unwrap()));
                }
            }
        }
    }

    #[test]
    fn crowding_is_nonnegative_with_infinite_extremes(points in points(30)) {
        let d = crowding_distance(&points);
        prop_assert_eq!(d.len(), points.len());
        prop_assert!(d.iter().all(|x| *x >= 0.0));
        let infinite = d.iter().filter(|x| x.is_infinite()).count();
        prop_assert!(infinite >= points.len().min(2));
    }

    #[test]
    fn dominance_is_irreflexive_and_antisymmetric(a in prop::collection::vec(0u8..5, 3), b in prop::collection::vec(0u8..5, 3)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        prop_assert!(!dominates(&a, &a).unwrap());
        prop_assert!(!(dominates(&a, &b).unwrap() && dominates(&b, &a).unwrap()));
    }
}
