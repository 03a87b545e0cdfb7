use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::adversary::{gen_cycle_to_path, gen_lower_bound_gn, gen_random_connected, gen_static_complete, InputScheme};
use crate::counting::find_exposed_pairs;
use crate::model::{DynamicNetworkTrace, MultigraphSnapshot, ProcessInput};

fn path2(rounds: usize) -> DynamicNetworkTrace {
    let inputs = vec![ProcessInput::leader("x"), ProcessInput::follower("x")];
    let snap = MultigraphSnapshot::new(2, [(1, 2, 1)]).unwrap();
    DynamicNetworkTrace::new(inputs, vec![snap; rounds]).unwrap()
}

/// Replays the local merge along `trace` and returns every process's
/// history after each round.
fn local_histories(trace: &DynamicNetworkTrace) -> Vec<Vec<View>> {
    let mut current: Vec<View> = trace.inputs().iter().map(View::initial).collect();
    let mut all = vec![current.clone()];
    for round in 1..=trace.len() {
        let adjacency = trace.snapshot(round).adjacency();
        current = adjacency
            .iter()
            .enumerate()
            .map(|(p, links)| {
                let received: Vec<(&View, u64)> = links.iter().map(|&(q, m)| (&current[q], m)).collect();
                extend_and_merge(&current[p], &received).unwrap()
            })
            .collect();
        all.push(current.clone());
    }
    all
}

/// Rebuilds `view` inserting each level's nodes in a shuffled order.
fn shuffled(view: &View, seed: u64) -> View {
    let src = view.tree();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tree = HistoryTree::new();
    let mut map = vec![tree.root(); src.len()];
    for level in 0..=src.depth() {
        let mut nodes = src.level(level).to_vec();
        nodes.shuffle(&mut rng);
        for x in nodes {
            let red = src.red_edges(x).iter().map(|&(u, m)| (map[u.index()], m)).collect();
            map[x.index()] = tree.add_child(map[src.parent(x).unwrap().index()], src.label(x).unwrap().clone(), red);
        }
    }
    View { tree, viewpoint: map[view.viewpoint().index()] }
}

fn small_corpus() -> Vec<DynamicNetworkTrace> {
    let two = InputScheme::with_followers(&["a", "b"]);
    let mut out = vec![
        path2(6),
        gen_lower_bound_gn(5, 10).unwrap(),
        gen_cycle_to_path(6, 3, 10).unwrap(),
        gen_static_complete(4, &two, 6).unwrap(),
    ];
    for seed in 0..12 {
        out.push(gen_random_connected(2 + seed as usize % 6, 10, 3, 0.4, seed, &two).unwrap());
    }
    out
}

#[test]
fn path_of_two() {
    let gt = build_ground_truth(&path2(1));
    let tree = gt.tree();
    let l0 = tree.level(0);
    assert_eq!(l0.len(), 2);
    assert!(l0.iter().all(|&v| gt.alpha(v) == 1));
    let leader = gt.rho(0, 0);
    let other = gt.rho(0, 1);
    assert_eq!(tree.red_edges(gt.rho(1, 0)), &[(other, 1)]);
    assert_eq!(tree.red_edges(gt.rho(1, 1)), &[(leader, 1)]);
}

#[test]
fn leader_flag_distinguishes_equal_values() {
    let gt = build_ground_truth(&path2(2));
    assert_eq!(gt.tree().level(0).len(), 2);
    assert_ne!(gt.rho(0, 0), gt.rho(0, 1));
}

#[test]
fn complete_graph_never_splits() {
    let inputs = InputScheme::with_followers(&["a", "b", "c"]);
    for n in 2..=7 {
        let gt = build_ground_truth(&gen_static_complete(n, &inputs, 5).unwrap());
        let tree = gt.tree();
        for v in tree.node_ids().skip(1) {
            if tree.level_of(v) < 5 {
                assert_eq!(tree.children(v).len(), 1);
            }
        }
    }
}

#[test]
fn view_of_root_is_trivial() {
    let gt = build_ground_truth(&path2(3));
    let view = view_of(&gt, gt.tree().root());
    assert_eq!(view.len(), 1);
    assert_eq!(view.round(), -1);
}

#[test]
fn views_validate() {
    for trace in small_corpus() {
        let gt = build_ground_truth(&trace);
        for v in gt.tree().node_ids() {
            gt.view_of(v).validate().unwrap();
        }
    }
}

#[test]
fn old_levels_are_in_every_late_view() {
    for trace in small_corpus() {
        let gt = build_ground_truth(&trace);
        let tree = gt.tree();
        let n = gt.n() as i32;
        for t in 0..=gt.depth() {
            for late in (t + n - 1).min(gt.depth() + 1)..=gt.depth() {
                for &w in tree.level(late) {
                    let (view, origin) = gt.view_with_origin(w);
                    let count = view.tree().level(t).len();
                    assert_eq!(count, tree.level(t).len(), "level {t} incomplete in view of {w}");
                    assert!(origin.iter().filter(|o| tree.level_of(**o) == t).count() == count);
                }
            }
        }
    }
}

#[test]
fn lone_process_merges_nothing() {
    let view = View::initial(&ProcessInput::leader("x"));
    let next = extend_and_merge(&view, &[]).unwrap();
    assert_eq!(next.len(), 3);
    assert_eq!(next.round(), 1);
    assert!(next.tree().red_edges(next.viewpoint()).is_empty());
}

#[test]
fn self_merge_becomes_one_red_edge() {
    // two processes with the same input joined by a double link
    let own = View::initial(&ProcessInput::follower("x"));
    let merged = extend_and_merge(&own, &[(&own, 2)]).unwrap();
    let tree = merged.tree();
    assert_eq!(tree.level(0).len(), 1);
    assert_eq!(tree.red_edges(merged.viewpoint()), &[(tree.level(0)[0], 2)]);
}

#[test]
fn depth_mismatch_is_a_protocol_error() {
    let a = View::initial(&ProcessInput::leader("x"));
    let b = extend_and_merge(&a, &[]).unwrap();
    let err = extend_and_merge(&b, &[(&a, 1)]).unwrap_err();
    assert!(matches!(err, crate::error::Error::Protocol(_)));
}

#[test]
fn local_merge_reproduces_ground_truth() {
    for trace in small_corpus() {
        let gt = build_ground_truth(&trace);
        for (round, views) in local_histories(&trace).iter().enumerate() {
            for (p, view) in views.iter().enumerate() {
                assert!(views_isomorphic(view, &gt.history(p, round)), "process {p} round {round}");
            }
        }
    }
}

#[test]
fn canonical_form_ignores_insertion_order() {
    for trace in small_corpus() {
        let gt = build_ground_truth(&trace);
        for p in 0..gt.n() {
            let view = gt.history(p, trace.len());
            for seed in 0..3 {
                assert_eq!(canonical_form(&view), canonical_form(&shuffled(&view, seed)));
            }
        }
    }
}

#[test]
fn canonical_form_separates_labels_and_depths() {
    let a = View::initial(&ProcessInput::follower("a"));
    let b = View::initial(&ProcessInput::follower("b"));
    assert_ne!(canonical_form(&a), canonical_form(&b));
    assert!(views_isomorphic(&a, &a));
    let deeper = extend_and_merge(&a, &[]).unwrap();
    assert!(!views_isomorphic(&a, &deeper));
}

#[test]
fn different_processes_have_different_histories() {
    for trace in small_corpus() {
        let gt = build_ground_truth(&trace);
        for round in 0..=trace.len() {
            for p in 0..gt.n() {
                for q in p + 1..gt.n() {
                    let same_node = gt.rho(round as i32, p) == gt.rho(round as i32, q);
                    assert_eq!(same_node, views_isomorphic(&gt.history(p, round), &gt.history(q, round)));
                }
            }
        }
    }
}

#[test]
fn lower_bound_leaders_agree_at_round_seven() {
    let g6 = build_ground_truth(&gen_lower_bound_gn(6, 7).unwrap());
    let g7 = build_ground_truth(&gen_lower_bound_gn(7, 7).unwrap());
    assert_eq!(canonical_form(&g6.history(0, 7)), canonical_form(&g7.history(0, 7)));
}

#[test]
fn dot_output_has_every_node() {
    let gt = build_ground_truth(&gen_lower_bound_gn(4, 3).unwrap());
    let dot = to_dot(gt.tree(), Some(gt.alphas()), Some(gt.rho(3, 0)));
    assert!(dot.starts_with("digraph"));
    for v in gt.tree().node_ids() {
        assert!(dot.contains(&format!("n{} ", v.0)) || dot.contains(&format!("n{}[", v.0)));
    }
}

fn arb_trace() -> impl Strategy<Value = DynamicNetworkTrace> {
    (1usize..=7, 1usize..=8, 0usize..=5, 0.0f64..=0.8, any::<u64>(), 1usize..=3).prop_map(
        |(n, rounds, extra, prob, seed, values)| {
            let names = ["a", "b", "c"];
            let inputs = InputScheme::with_followers(&names[..values]);
            gen_random_connected(n, rounds, extra, prob, seed, &inputs).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn anonymities_add_up(trace in arb_trace()) {
        let gt = build_ground_truth(&trace);
        let tree = gt.tree();
        for level in 0..=gt.depth() {
            let sum: u64 = tree.level(level).iter().map(|&v| gt.alpha(v)).sum();
            prop_assert_eq!(sum, trace.n() as u64);
        }
        for v in tree.node_ids() {
            if !tree.children(v).is_empty() {
                let below: u64 = tree.children(v).iter().map(|&c| gt.alpha(c)).sum();
                prop_assert_eq!(below, gt.alpha(v));
            }
        }
    }

    #[test]
    fn partitions_refine(trace in arb_trace()) {
        let gt = build_ground_truth(&trace);
        for level in 1..=gt.depth() {
            for p in 0..gt.n() {
                prop_assert_eq!(gt.tree().parent(gt.rho(level, p)), Some(gt.rho(level - 1, p)));
            }
        }
    }

    #[test]
    fn red_edges_conserve_links(trace in arb_trace()) {
        // links counted from either side agree: sum over v of alpha(v) * m(v, u)
        // equals sum over u's children of alpha * m back to v's parent
        let gt = build_ground_truth(&trace);
        let tree = gt.tree();
        for level in 1..=gt.depth() {
            for &x in tree.level(level - 1) {
                for &y in tree.level(level - 1) {
                    let from_y: u64 = tree.children(y).iter().map(|&v| gt.alpha(v) * tree.red_multiplicity(v, x)).sum();
                    let from_x: u64 = tree.children(x).iter().map(|&u| gt.alpha(u) * tree.red_multiplicity(u, y)).sum();
                    prop_assert_eq!(from_x, from_y);
                }
            }
        }
    }

    #[test]
    fn exposed_pairs_balance(trace in arb_trace()) {
        let gt = build_ground_truth(&trace);
        for level in 0..gt.depth() {
            for pair in find_exposed_pairs(gt.tree(), level) {
                prop_assert_eq!(gt.alpha(pair.first) * pair.m1, gt.alpha(pair.second) * pair.m2);
            }
        }
    }

    #[test]
    fn merge_matches_ground_truth(trace in arb_trace()) {
        let gt = build_ground_truth(&trace);
        let local = local_histories(&trace);
        let last = trace.len();
        for p in 0..gt.n() {
            prop_assert!(views_isomorphic(&local[last][p], &gt.history(p, last)));
        }
    }
}
