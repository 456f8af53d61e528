use std::collections::HashSet;

use enflo_core::graphgroup::Graph;
use enflo_core::oracle::{oracle_group, oracle_mean, oracle_segments, oracle_unit_distances, OracleBudget};
use enflo_core::poincare::exact_mean_g;
use enflo_core::space::{
    canonical_segment, count_segments_formula, distance, enumerate_segments, isometry_group, point_index, Isometry,
    Point, SpaceSpec,
};
use enflo_core::{BigRational, Budget, EmbeddingMap};
use num_bigint::BigUint;

fn matrix() -> Vec<SpaceSpec> {
    vec![SpaceSpec::custom(8, 2, 2, 1).unwrap(), SpaceSpec::custom(8, 4, 2, 2).unwrap()]
}

#[test]
fn segments_match_enumeration_and_formula() {
    let b = OracleBudget::default();
    for spec in matrix() {
        for m in 0..=spec.levels {
            let oracle: HashSet<(Vec<u64>, Vec<u64>)> = oracle_segments(&spec, m, &b).unwrap().into_iter().collect();
            let production: HashSet<(Vec<u64>, Vec<u64>)> = enumerate_segments(&spec, m, &Budget::default())
                .unwrap()
                .map(|s| (s.a.to_vec(), s.b.to_vec()))
                .collect();
            assert_eq!(oracle, production, "{spec:?} m={m}");
            assert_eq!(BigUint::from(oracle.len()), count_segments_formula(&spec, m).unwrap());
        }
        assert!(oracle_segments(&spec, spec.levels + 1, &b).unwrap().is_empty());
    }
}

#[test]
fn means_match_exact_mean() {
    let b = Budget::default();
    for spec in matrix() {
        for seed in 0..3 {
            let f = EmbeddingMap::random_integer_table(&spec, 3, 5, seed, &b).unwrap();
            for m in 0..=spec.levels {
                assert_eq!(oracle_mean(&spec, &f, m, &b).unwrap(), exact_mean_g(&spec, &f, m, &b).unwrap());
            }
        }
        let lift = EmbeddingMap::CoordinateLift;
        assert_eq!(oracle_mean(&spec, &lift, 1, &b).unwrap(), exact_mean_g(&spec, &lift, 1, &b).unwrap());
        let zero = EmbeddingMap::constant_table(&spec, vec![BigRational::from_integer(7.into())], &b).unwrap();
        assert_eq!(oracle_mean(&spec, &zero, 0, &b).unwrap(), BigRational::from_integer(0.into()));
    }
}

#[test]
fn group_matches_production_and_is_closed() {
    let spec = SpaceSpec::custom(8, 2, 2, 1).unwrap();
    let b = Budget::default();
    let oracle: HashSet<Isometry> = oracle_group(&spec, &b).unwrap().into_iter().collect();
    let production: HashSet<Isometry> = isometry_group(&spec, &b).unwrap().into_iter().collect();
    assert_eq!(oracle.len(), 512);
    assert_eq!(oracle, production);
    let sample: Vec<&Isometry> = oracle.iter().step_by(37).collect();
    for g in &sample {
        assert!(oracle.contains(&g.inverse()));
        for h in &sample {
            assert!(oracle.contains(&g.compose(h).unwrap()));
        }
    }
}

#[test]
fn group_orbit_of_canonical_segment_is_the_class() {
    let spec = SpaceSpec::custom(8, 2, 2, 1).unwrap();
    let b = Budget::default();
    for m in 0..=spec.levels {
        let seg = canonical_segment(&spec, m).unwrap();
        let orbit: HashSet<(Vec<u64>, Vec<u64>)> = oracle_group(&spec, &b)
            .unwrap()
            .iter()
            .map(|h| (h.apply(&seg.a).unwrap().to_vec(), h.apply(&seg.b).unwrap().to_vec()))
            .collect();
        let class: HashSet<(Vec<u64>, Vec<u64>)> = oracle_segments(&spec, m, &b).unwrap().into_iter().collect();
        assert_eq!(orbit, class);
    }
}

#[test]
fn unit_graph_distances_match_floyd_warshall() {
    let spec = SpaceSpec::custom(8, 2, 2, 1).unwrap();
    let b = Budget::default();
    let fw = oracle_unit_distances(&spec, &b).unwrap();
    let graph = Graph::unit_graph(&spec, &b).unwrap();
    for (i, row) in fw.iter().enumerate() {
        let bfs = graph.bfs(i).unwrap();
        for (j, &d) in row.iter().enumerate() {
            assert_eq!(bfs[j], Some(d as usize));
        }
    }
    let a = Point::dense(vec![0, 0]);
    let c = Point::dense(vec![3, 7]);
    assert_eq!(fw[point_index(&spec, &a).unwrap()][point_index(&spec, &c).unwrap()], 3);
    assert_eq!(distance(&spec, &a, &c).unwrap(), 3);
}
