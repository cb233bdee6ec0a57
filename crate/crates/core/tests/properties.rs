use std::collections::BTreeSet;

use combwm_core::build::{brute_force_st_paths, build_st_paths, reduce_from_family, EdgeOrder};
use combwm_core::dp::{self, WeightVector};
use combwm_core::graph::Graph;
use combwm_core::linalg::{eigen_symmetric, pinv_symmetric, SymMatrix, DEFAULT_REL_TOL};
use combwm_core::zdd::{read_zdd, write_zdd};
use combwm_core::{Family, NodeId, SuperArm};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn family_strategy(max_d: usize, max_sets: usize) -> impl Strategy<Value = (usize, Family)> {
    (1..=max_d).prop_flat_map(move |d| {
        let set = proptest::collection::btree_set(1..=d, 0..=d);
        (
            Just(d),
            proptest::collection::vec(set, 1..=max_sets)
                .prop_map(|sets| sets.into_iter().map(|s| SuperArm::new(s.into_iter().collect())).collect()),
        )
    })
}

fn log_weights(d: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, d)
}

/// `(ln Z, P)` by explicit summation over the members.
fn explicit_cpm(family: &Family, lw: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let d = lw.len();
    let weights: Vec<f64> = family
        .iter()
        .map(|x| x.arms().iter().map(|&i| lw[i - 1]).sum::<f64>().exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let mut p = vec![vec![0.0; d]; d];
    for (x, w) in family.iter().zip(&weights) {
        for &i in x.arms() {
            for &j in x.arms() {
                p[i - 1][j - 1] += w / z;
            }
        }
    }
    (z.ln(), p)
}

fn to_nalgebra(m: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduce_round_trips((d, family) in family_strategy(8, 40)) {
        let z = reduce_from_family(&family, d).unwrap();
        prop_assert!(z.validate().is_valid());
        prop_assert_eq!(z.count_u64(), Some(family.len() as u64));
        let back = z.enumerate(family.len() + 1).unwrap();
        prop_assert_eq!(&back, &family);
        prop_assert_eq!(reduce_from_family(&back, d).unwrap(), z.clone());
        prop_assert_eq!(z.canonical(), z);
    }

    #[test]
    fn membership_and_cardinality((d, family) in family_strategy(7, 30), probe in proptest::collection::btree_set(1usize..=7, 0..=7)) {
        let z = reduce_from_family(&family, d).unwrap();
        let probe = SuperArm::new(probe.into_iter().filter(|&i| i <= d).collect());
        prop_assert_eq!(z.contains(&probe), family.contains(&probe));
        let sizes: Vec<usize> = family.iter().map(SuperArm::len).collect();
        prop_assert_eq!(z.max_cardinality().unwrap(), *sizes.iter().max().unwrap());
        prop_assert_eq!(z.min_cardinality().unwrap(), *sizes.iter().min().unwrap());
    }

    #[test]
    fn text_format_round_trips((d, family) in family_strategy(8, 30)) {
        let z = reduce_from_family(&family, d).unwrap();
        let mut buf = Vec::new();
        write_zdd(&z, &mut buf).unwrap();
        prop_assert_eq!(read_zdd(buf.as_slice()).unwrap(), z);
    }

    #[test]
    fn min_cost_matches_enumeration((d, family) in family_strategy(8, 30), cost in proptest::collection::vec(-1.0f64..1.0, 8), scale in 0.1f64..10.0) {
        let cost = &cost[..d];
        let z = reduce_from_family(&family, d).unwrap();
        let best = family.iter().map(|x| x.dot(cost)).fold(f64::INFINITY, f64::min);
        let (value, arg) = z.min_additive_cost(cost).unwrap();
        prop_assert!((value - best).abs() < 1e-12);
        prop_assert!(family.contains(&arg));
        prop_assert!((arg.dot(cost) - best).abs() < 1e-12);

        let argmins = |c: &[f64], b: f64| -> BTreeSet<SuperArm> {
            family.iter().filter(|x| (x.dot(c) - b).abs() <= 1e-12 * (1.0 + b.abs())).cloned().collect()
        };
        let scaled: Vec<f64> = cost.iter().map(|c| c * scale).collect();
        let v2 = z.min_additive_value(&scaled).unwrap();
        prop_assert!((v2 - scale * best).abs() < 1e-10);
        prop_assert_eq!(argmins(cost, best), argmins(&scaled, v2));
    }

    #[test]
    fn cpm_matches_enumeration((d, family) in family_strategy(9, 60), lw in log_weights(9)) {
        let lw = lw[..d].to_vec();
        let z = reduce_from_family(&family, d).unwrap();
        let w = WeightVector::from_log(lw.clone()).unwrap();
        let (log_z, reference) = explicit_cpm(&family, &lw);
        let f = dp::forward_weights(&z, &w).unwrap();
        let b = dp::backward_weights(&z, &w).unwrap();
        prop_assert!((f.at(NodeId::ONE) - b.at(z.root())).abs() < 1e-10);
        prop_assert!((dp::partition(&z, &w).unwrap() - log_z).abs() < 1e-10);
        let p = dp::cpm_for(&z, &w).unwrap();
        for i in 0..d {
            for j in 0..d {
                prop_assert!((p.get(i, j) - reference[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigen_and_pinv_agree_with_nalgebra(n in 1usize..12, rank in 1usize..12, seed in proptest::collection::vec(-1.0f64..1.0, 144)) {
        let rank = rank.min(n);
        let b: Vec<f64> = seed[..n * rank].to_vec();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = (0..rank).map(|k| b[i * rank + k] * b[j * rank + k]).sum();
            }
        }
        let m = SymMatrix::from_row_major(n, data).unwrap();
        let na = to_nalgebra(&m);

        let mut ours = eigen_symmetric(&m).unwrap().values;
        let mut theirs: Vec<f64> = na.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a - b).abs() < 1e-9);
        }

        let lmax = theirs.last().copied().unwrap().max(0.0);
        let cut = DEFAULT_REL_TOL * lmax;
        // skip spectra with an eigenvalue too close to the rank cut to classify
        prop_assume!(theirs.iter().all(|&l| l <= cut * 0.5 || l >= 1e-4));
        let reference = na.pseudo_inverse(cut).unwrap();
        let pinv = to_nalgebra(&pinv_symmetric(&m, DEFAULT_REL_TOL).unwrap());
        prop_assert!((pinv - &reference).norm() <= 1e-8 * reference.norm().max(1.0));
    }

    #[test]
    fn random_graph_paths_match_dfs(n in 3usize..8, mask in proptest::collection::vec(any::<bool>(), 21), rev in any::<bool>()) {
        let mut edges = Vec::new();
        let mut k = 0;
        for u in 0..n {
            for v in u + 1..n {
                if mask[k % mask.len()] {
                    edges.push((u, v, 1.0));
                }
                k += 1;
            }
        }
        prop_assume!(!edges.is_empty());
        let g = Graph::new(n, edges).unwrap();
        let oracle = brute_force_st_paths(&g, 0, n - 1).unwrap();
        let order = if rev {
            EdgeOrder::Custom((1..=g.n_edges()).rev().collect())
        } else {
            EdgeOrder::BreadthFirst
        };
        let z = build_st_paths(&g, 0, n - 1, &order).unwrap();
        prop_assert!(z.zdd.validate().is_valid());
        prop_assert_eq!(z.edge_family(oracle.len() + 1).unwrap(), oracle);
    }
}

#[test]
fn penrose_conditions_on_cpms() {
    let family: Family = [[1, 2], [2, 3], [1, 3]].iter().map(|s| SuperArm::from(&s[..])).collect();
    let z = reduce_from_family(&family, 4).unwrap();
    let p = dp::cpm_for(&z, &WeightVector::uniform(4)).unwrap();
    let pinv = pinv_symmetric(&p, DEFAULT_REL_TOL).unwrap();
    let (a, x) = (to_nalgebra(&p), to_nalgebra(&pinv));
    assert!((&a * &x * &a - &a).norm() < 1e-10);
    assert!((&x * &a * &x - &x).norm() < 1e-10);
    assert!((&a * &x - (&a * &x).transpose()).norm() < 1e-10);
    assert!((&x * &a - (&x * &a).transpose()).norm() < 1e-10);
    // arm 4 never appears, so its row of the pseudo-inverse vanishes
    assert!((0..4).all(|j| pinv.get(3, j) == 0.0));
}
