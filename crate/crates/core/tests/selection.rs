use std::collections::BTreeMap;

use proptest::prelude::*;

use vlmc_oracle::counts::CountTable;
use vlmc_oracle::harness::RenewalStudy;
use vlmc_oracle::par::Execution;
use vlmc_oracle::select::{
    bootstrap_penalty_table, brute_force_select, default_slope_grid, penalty_path, prune_select, BootstrapOptions,
    LeafTable, Penalty, PenaltyShape, SelectOptions, Selector,
};
use vlmc_oracle::sources::{renewal_context, ContextKernel, RenewalParams};
use vlmc_oracle::tree::{enumerate_complete_subtrees, Alphabet, ContextTree, Word};

fn table_of(x: &[u8], k: usize, d: usize) -> CountTable {
    let alphabet = Alphabet::new(&"012"[..k]).unwrap();
    CountTable::new(x, &alphabet, d).unwrap()
}

fn words(k: u8, depth: usize) -> Vec<Word> {
    let mut all = vec![Word::empty()];
    let mut frontier = vec![Word::empty()];
    for _ in 0..depth {
        frontier = frontier.iter().flat_map(|w| (0..k).map(|a| w.prepend(a))).collect();
        all.extend(frontier.iter().cloned());
    }
    all
}

fn leaf_table(weights: &[f64], k: u8, depth: usize) -> LeafTable {
    LeafTable::new(words(k, depth).into_iter().zip(weights.iter().copied()).collect()).unwrap()
}

fn sequence() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 20..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_is_exact(x in sequence(), weights in prop::collection::vec(0.0f64..0.05, 15), c in 0.0f64..4.0) {
        let table = table_of(&x, 2, 3);
        let options = SelectOptions::new(3);
        for shape in [PenaltyShape::Bic, PenaltyShape::PerLeaf(leaf_table(&weights, 2, 3))] {
            let penalty = Penalty::new(shape, c).unwrap();
            let dp = prune_select(&table, &penalty, options).unwrap();
            let bf = brute_force_select(&table, &penalty, options).unwrap();
            prop_assert_eq!(&dp.tree, &bf.tree);
            prop_assert_eq!(dp.criterion, bf.criterion);
            prop_assert!((dp.criterion - dp.entropy_term - dp.penalty_value).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_shape_and_constant_cancels(
        x in sequence(),
        weights in prop::collection::vec(0.001f64..0.05, 15),
        c in 0.1f64..4.0,
        s in 0.1f64..10.0,
    ) {
        let table = table_of(&x, 2, 3);
        let base = leaf_table(&weights, 2, 3);
        let options = SelectOptions::new(3);
        let a = prune_select(&table, &Penalty::new(PenaltyShape::PerLeaf(base.clone()), c).unwrap(), options).unwrap();
        let b = prune_select(
            &table,
            &Penalty::new(PenaltyShape::PerLeaf(base.scaled(s).unwrap()), c / s).unwrap(),
            options,
        )
        .unwrap();
        // Rounding can only matter at an exact tie.
        if (a.criterion - b.criterion).abs() > 1e-9 {
            prop_assert!(false, "criteria {} vs {}", a.criterion, b.criterion);
        }
        let ties = enumerate_complete_subtrees(table.alphabet(), 3)
            .unwrap()
            .iter()
            .filter(|t| {
                let sel = Selector::new(&table, PenaltyShape::PerLeaf(base.clone()), options).unwrap();
                (sel.evaluate(t, c).unwrap() - a.criterion).abs() < 1e-9
            })
            .count();
        if ties == 1 {
            prop_assert_eq!(a.tree, b.tree);
        }
    }

    #[test]
    fn ternary_dp_is_exact(x in prop::collection::vec(0u8..3, 20..150), c in 0.0f64..3.0) {
        let table = table_of(&x, 3, 2);
        let options = SelectOptions::new(2);
        let penalty = Penalty::bic(c);
        let dp = prune_select(&table, &penalty, options).unwrap();
        let bf = brute_force_select(&table, &penalty, options).unwrap();
        prop_assert_eq!(dp.tree, bf.tree);
        prop_assert_eq!(dp.criterion, bf.criterion);
    }

    #[test]
    fn paths_are_monotone(x in sequence(), weights in prop::collection::vec(0.0f64..0.05, 31)) {
        let table = table_of(&x, 2, 4);
        let grid = default_slope_grid();
        for shape in [PenaltyShape::Bic, PenaltyShape::Aic, PenaltyShape::PerLeaf(leaf_table(&weights, 2, 4))] {
            let selector = Selector::new(&table, shape, SelectOptions::new(4)).unwrap();
            let uniform = selector.shape().is_uniform();
            let path = penalty_path(&selector, &grid, Execution::Sequential).unwrap();
            prop_assert!(!uniform || path.sizes.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(path.complexities.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }
}

/// Per-leaf exact variance μ_τ(ω) KL(P_τ(·|ω) ‖ P̂(·|ω)) on the renewal universe.
fn exact_variance_shape(study: &RenewalStudy, table: &CountTable) -> LeafTable {
    // Prohibitive but finite, for leaves whose fit misses part of the support.
    const BLOCKED: f64 = 1e3;
    let mut entries = BTreeMap::new();
    for (k, p) in study.projections.iter().enumerate() {
        let report = p.report(&table.plug_in(p.tree())).unwrap();
        for (word, risk) in p.tree().contexts().iter().zip(&report.contexts) {
            let v = if risk.kl.is_finite() { risk.mass * risk.kl } else { BLOCKED };
            let keep = *word == Word::repeat(0, k + 1) || k == study.projections.len() - 1;
            if keep {
                entries.insert(word.clone(), v);
            }
        }
    }
    LeafTable::new(entries).unwrap()
}

#[test]
#[ignore = "does not hold at n=500: deep leaves almost always miss support, so their exact variance is infinite"]
fn exact_variance_penalty_jumps_between_half_and_two() {
    let study = RenewalStudy::new(&RenewalParams::default()).unwrap();
    let mut jumps = 0;
    for r in 0..100 {
        let x = study.sample(500, 61, r);
        let table = CountTable::new(&x, &Alphabet::binary(), 15).unwrap();
        let shape = exact_variance_shape(&study, &table);
        let selector = Selector::new(&table, PenaltyShape::PerLeaf(shape), SelectOptions::renewal(15)).unwrap();
        let low = selector.solve(0.5).unwrap().complexity;
        let high = selector.solve(2.0).unwrap().complexity;
        if low > 5.0 * high {
            jumps += 1;
        }
    }
    assert!(jumps >= 80, "jump in {jumps}/100 replicates");
}

#[test]
fn bic_path_sizes_are_champions() {
    // Each tree on the path maximizes the likelihood among trees no larger than it.
    let study = RenewalStudy::new(&RenewalParams::default()).unwrap();
    for r in 0..10 {
        let x = study.sample(500, 62, r);
        let table = CountTable::new(&x, &Alphabet::binary(), 3).unwrap();
        let selector = Selector::new(&table, PenaltyShape::Bic, SelectOptions::new(3)).unwrap();
        let path = penalty_path(&selector, &default_slope_grid(), Execution::Sequential).unwrap();
        let all = enumerate_complete_subtrees(table.alphabet(), 3).unwrap();
        for tree in path.distinct_trees() {
            let own = selector.evaluate(&tree, 0.0).unwrap();
            let best = all
                .iter()
                .filter(|t| t.size() <= tree.size())
                .map(|t| selector.evaluate(t, 0.0).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(own <= best + 1e-12, "replicate {r}: size {} not a champion", tree.size());
        }
    }
}

#[test]
fn bootstrap_table_golden() {
    let study = RenewalStudy::new(&RenewalParams::default()).unwrap();
    let x = study.sample(500, 63, 0);
    let table = CountTable::new(&x, &Alphabet::binary(), 15).unwrap();
    let selector = Selector::new(&table, PenaltyShape::Bic, SelectOptions::renewal(15)).unwrap();
    let fitted = ContextKernel::fit(&table, &selector.maximal_tree().unwrap()).unwrap();
    let options = BootstrapOptions {
        samples: 1,
        seed: 63,
        replicate: 0,
    };
    let a = bootstrap_penalty_table(&selector, &fitted, &x[..fitted.tree().depth()], &options).unwrap();
    let b = bootstrap_penalty_table(&selector, &fitted, &x[..fitted.tree().depth()], &options).unwrap();
    assert_eq!(a, b);
    let pinned: Vec<(String, f64)> = [renewal_context(0), renewal_context(1), Word::repeat(0, 1)]
        .iter()
        .map(|w| (table.alphabet().format_word(w), a.get(w)))
        .collect();
    assert_eq!(format!("{pinned:?}"), GOLDEN_BOOTSTRAP);
}

const GOLDEN_BOOTSTRAP: &str =
    "[(\"1\", 0.0009990752218190675), (\"10\", 0.0038308980244081223), (\"0\", 0.00021045597821360215)]";

#[test]
fn alternating_data_selects_depth_one() {
    let x: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
    let table = CountTable::new(&x, &Alphabet::binary(), 3).unwrap();
    let expected = ContextTree::full(Alphabet::binary(), 1).unwrap();
    for c in [0.0, 0.5] {
        let r = prune_select(&table, &Penalty::bic(c), SelectOptions::new(3)).unwrap();
        assert_eq!(r.tree, expected);
        assert_eq!(r.entropy_term, 0.0);
    }
}
