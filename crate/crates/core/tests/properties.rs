use proptest::prelude::*;

use valuetree_core::compare::{compare_trees, similarity};
use valuetree_core::decisions::{replay, AutoProvider, Decider};
use valuetree_core::emm::{build_ends_means_map, propagate_labels, transform_rule, Rule};
use valuetree_core::graph::DEFAULT_CYCLE_CEILING;
use valuetree_core::io::artifacts::run_artifacts;
use valuetree_core::io::{to_dot, AnyMap, MapDocument};
use valuetree_core::pipeline::{run_from_vcm, run_stages, Outcome, StageName, Start};
use valuetree_core::testing::{
    check_arborescence, check_emm_properties, enumerate_emm_scripts, random_emm, random_vcm, rng,
    tied_gadgets, RandomProvider,
};
use valuetree_core::tree::{build_value_tree, TreeError};
use valuetree_core::validate::validate_tree;
use valuetree_core::{InfluenceArc, LiteralKey, Sign, Valence};

#[test]
fn rule_table() {
    // (sign, end valence) -> (end, mean) for an influence x -> y.
    let cases = [
        (Sign::Positive, Valence::Affirmed, "y", "x"),
        (Sign::Positive, Valence::Negated, "~y", "~x"),
        (Sign::Negative, Valence::Affirmed, "y", "~x"),
        (Sign::Negative, Valence::Negated, "~y", "x"),
    ];
    for (sign, end, want_end, want_mean) in cases {
        let (e, m) = transform_rule(&InfluenceArc::new("x", "y", sign), end);
        assert_eq!((e.id().as_str(), m.id().as_str()), (want_end, want_mean));
    }
    assert_eq!(Rule::ALL.len(), 4);
}

#[test]
fn one_tied_cycle_gives_two_maps() {
    let e = enumerate_emm_scripts(&tied_gadgets(1)).unwrap();
    assert_eq!(e.option_counts, [vec![2]].into());
    assert_eq!(e.scripts, 2);
    assert_eq!(e.outcomes.len(), 2);
}

#[test]
fn two_tied_cycles_give_four_maps() {
    let e = enumerate_emm_scripts(&tied_gadgets(2)).unwrap();
    assert_eq!(e.option_counts, [vec![2, 2]].into());
    assert_eq!(e.scripts, 4);
    assert_eq!(e.outcomes.len(), 4);
}

fn vcm_strategy() -> impl Strategy<Value = valuetree_core::ValueCognitiveMap> {
    (any::<u64>(), 4usize..=12).prop_map(|(seed, n)| random_vcm(&mut rng(seed), n))
}

fn emm_strategy() -> impl Strategy<Value = valuetree_core::EndsMeansMap> {
    (any::<u64>(), 2usize..=12, 0usize..=12)
        .prop_map(|(seed, n, extra)| random_emm(&mut rng(seed), n, extra))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ends_means_maps_keep_their_invariants(vcm in vcm_strategy()) {
        let mut auto = AutoProvider;
        let mut decider = Decider::new(&mut auto);
        let out = build_ends_means_map(&vcm, &mut decider, DEFAULT_CYCLE_CEILING).unwrap();
        let Outcome::Complete((emm, trace)) = out else {
            panic!("auto decisions left a question open");
        };
        prop_assert_eq!(check_emm_properties(&vcm, &emm, &trace), Ok(()));
    }

    #[test]
    fn labelling_is_deterministic(vcm in vcm_strategy()) {
        let a = propagate_labels(&vcm).unwrap();
        let b = propagate_labels(&vcm.clone()).unwrap();
        prop_assert_eq!(&a, &b);

        let run = |seed| {
            let mut p = RandomProvider::new(rng(seed));
            let mut d = Decider::new(&mut p);
            match build_ends_means_map(&vcm, &mut d, DEFAULT_CYCLE_CEILING).unwrap() {
                Outcome::Complete((_, t)) => t,
                Outcome::Pending(r) => panic!("random answers left {} open", r.id),
            }
        };
        // Whatever the cycle answers, everything before them is fixed.
        let (t1, t2) = (run(1), run(2));
        prop_assert_eq!(t1.before_cycles(), t2.before_cycles());
        prop_assert_eq!(t1.before_cycles(), a.trace.before_cycles());
    }

    #[test]
    fn treeification_yields_arborescences(emm in emm_strategy(), seed in any::<u64>()) {
        let mut p = RandomProvider::new(rng(seed));
        let mut d = Decider::new(&mut p);
        match build_value_tree(&emm, &mut d) {
            Ok(Outcome::Complete((tree, _))) => {
                prop_assert_eq!(check_arborescence(&tree), Ok(()));
                prop_assert!(validate_tree(&tree).is_valid());
            }
            Ok(Outcome::Pending(r)) => panic!("random answers left {} open", r.id),
            Err(TreeError::NoProgress { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn replay_is_byte_identical(vcm in vcm_strategy(), seed in any::<u64>()) {
        let first = run_from_vcm(vcm.clone(), &mut RandomProvider::new(rng(seed)));
        prop_assume!(first.is_complete());
        let again = run_from_vcm(vcm, &mut replay(&first.transcript));
        prop_assert!(again.is_complete());
        prop_assert_eq!(run_artifacts(&first, true).unwrap(), run_artifacts(&again, true).unwrap());
    }

    #[test]
    fn documents_round_trip(vcm in vcm_strategy(), seed in any::<u64>()) {
        let run = run_from_vcm(vcm.clone(), &mut RandomProvider::new(rng(seed)));
        let mut maps = vec![AnyMap::Value(vcm)];
        if let Some((emm, _)) = run.emm {
            maps.push(AnyMap::EndsMeans(emm));
        }
        if let Some((tree, _)) = run.tree {
            maps.push(AnyMap::Tree(tree));
        }
        for map in maps {
            let text = map.to_document().to_json().unwrap();
            let back = MapDocument::parse(&text).unwrap().into_any().unwrap();
            prop_assert_eq!(&back, &map);
            prop_assert!(graphviz_rust::parse(&to_dot(&map)).is_ok());
        }
    }

    #[test]
    fn request_ids_are_unique(vcm in vcm_strategy(), seed in any::<u64>()) {
        let run = run_stages(Start::Value(vcm), StageName::Tree, &mut RandomProvider::new(rng(seed)));
        let ids: std::collections::BTreeSet<&str> =
            run.transcript.entries().iter().map(|e| e.id.as_str()).collect();
        prop_assert_eq!(ids.len(), run.transcript.len());
    }

    #[test]
    fn similarity_is_bounded_and_symmetric(emm in emm_strategy(), seed in any::<u64>()) {
        let mut p = RandomProvider::new(rng(seed));
        let mut d = Decider::new(&mut p);
        let Ok(Outcome::Complete((tree, _))) = build_value_tree(&emm, &mut d) else {
            return Ok(());
        };
        for a in tree.nodes() {
            for b in tree.nodes() {
                let s = similarity(a, b);
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert_eq!(s, similarity(b, a));
            }
        }
        let report = compare_trees(&tree, &tree, 0.0);
        for n in tree.nodes() {
            prop_assert!(report.pairs.iter().any(|p| p.left == n.id && p.right == n.id));
        }
        prop_assert!(report.pairs.windows(2).all(|w| w[0].similarity >= w[1].similarity));
    }
}

#[test]
fn literal_ids_parse_back() {
    for id in ["a", "~a", "m(a|b)", "a@b"] {
        assert_eq!(LiteralKey::parse(id).id(), id);
    }
}
