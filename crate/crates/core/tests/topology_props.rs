mod common;

use mapf_lab::roadmap::VertexId;
use mapf_lab::topology::{analyze, betweenness, ClassifierConfig, Sampling};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(seed: u64) -> Vec<Vec<VertexId>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=25);
    let extra = rng.random_range(0..=2 * n);
    common::random_connected_graph(&mut rng, n, extra)
}

proptest! {
    #[test]
    fn brandes_matches_path_enumeration(seed in any::<u64>()) {
        let adj = graph(seed);
        let fast = betweenness(&adj, None).unwrap();
        for (a, b) in fast.raw.iter().zip(common::brute_force_betweenness(&adj)) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn relabelling_permutes_the_field(seed in any::<u64>()) {
        let adj = graph(seed);
        let n = adj.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let mut relabelled = vec![Vec::new(); n];
        for (v, list) in adj.iter().enumerate() {
            relabelled[perm[v]] = list.iter().map(|u| VertexId(perm[u.index()] as u32)).collect();
        }
        let a = betweenness(&adj, None).unwrap();
        let b = betweenness(&relabelled, None).unwrap();
        for (v, &w) in perm.iter().enumerate() {
            prop_assert!((a.raw[v] - b.raw[w]).abs() <= 1e-9);
        }
    }

    #[test]
    fn sampling_every_source_is_exact(seed in any::<u64>()) {
        let adj = graph(seed);
        let exact = betweenness(&adj, None).unwrap();
        let sampled = betweenness(&adj, Some(Sampling { sources: adj.len(), seed })).unwrap();
        for (a, b) in exact.raw.iter().zip(&sampled.raw) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn normalized_field_spans_unit_interval(seed in any::<u64>()) {
        let f = betweenness(&graph(seed), None).unwrap();
        prop_assert!(f.normalized.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let flat = f.raw.iter().all(|&x| x == f.raw[0]);
        let top = f.normalized.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(top, if flat { 0.0 } else { 1.0 });
    }

    #[test]
    fn classification_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = rng.random_range(2..=12u32);
        let density = rng.random_range(0.0..0.4);
        let rm = common::roadmap(common::random_map(&mut rng, side, side, density), 1);
        let config = ClassifierConfig::default();
        match (analyze(&rm, &config), analyze(&rm, &config)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => prop_assert_eq!(rm.num_vertices(), 0),
            _ => prop_assert!(false, "analysis is not repeatable"),
        }
    }
}
