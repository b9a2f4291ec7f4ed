use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use sipforge::fst::enumerate_strings;
use sipforge::metrics::{edit_distance, evaluate};
use sipforge::prefix::{prefix_similarity_exact, Prefix};
use sipforge::sampling::{
    gen_bimachine, gen_corpus, gen_fst_with_states, gen_set_task, task_rng, BimachineConfig,
    CorpusConfig, CorpusMode,
};
use sipforge::splits::{
    gen_iteration_split, gen_length_split, gen_uc_split, iteration_count, verify_split,
    IterationSplitConfig, LengthSplitConfig, UcSplitConfig,
};
use sipforge::symbols::{syms, SymbolTable};
use sipforge::{Execution, Transduction};

fn small_corpus(seed: u64, tasks: usize) -> CorpusConfig {
    CorpusConfig {
        num_tasks: tasks,
        master_seed: seed,
        ..Default::default()
    }
}

#[test]
fn corpus_is_schedule_independent() {
    let cfg = small_corpus(21, 64);
    let seq = gen_corpus(&cfg, Execution::Sequential).unwrap();
    let par = gen_corpus(&cfg, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    let prefix = gen_corpus(&small_corpus(21, 16), Execution::Parallel).unwrap();
    assert_eq!(&seq[..16], &prefix[..]);
}

#[test]
fn corpus_pairs_are_valid() {
    let cfg = small_corpus(22, 200);
    for task in gen_corpus(&cfg, Execution::Parallel).unwrap() {
        assert!(task.fst.is_deterministic());
        assert!(task.fst.is_cyclic());
        assert!(task.fst.num_states() <= cfg.max_states);
        assert!((cfg.min_vocab..=cfg.max_vocab).contains(&task.fst.vocab().len()));
        assert!(task.fst.vocab().iter().all(|s| s.is_concrete()));
        assert!(task
            .fst
            .vocab()
            .iter()
            .all(|s| s.to_char().is_some_and(|c| !"[]\\".contains(c))));
        assert_eq!(task.pairs.len(), cfg.pairs_per_task);
        let mut inputs: Vec<_> = task.pairs.iter().map(|p| p.0.clone()).collect();
        inputs.sort();
        inputs.dedup();
        assert_eq!(inputs.len(), cfg.pairs_per_task);
        for (x, y) in &task.pairs {
            assert!((cfg.min_input_len..=cfg.max_input_len).contains(&x.len()));
            assert_eq!(task.fst.transduce(x), Transduction::Output(y.clone()));
        }
    }
}

#[test]
fn bimachine_corpus_matches_its_bimachines() {
    let cfg = CorpusConfig {
        num_tasks: 40,
        master_seed: 23,
        mode: CorpusMode::Bimachine {
            left_min: 2,
            left_max: 3,
            right_min: 2,
            right_max: 3,
        },
        p_drop: 0.6,
        max_vocab: 6,
        ..Default::default()
    };
    for task in gen_corpus(&cfg, Execution::Parallel).unwrap() {
        let bm = task.bimachine.as_ref().unwrap();
        for (x, y) in &task.pairs {
            assert_eq!(bm.run(x).as_ref(), Some(y));
            assert_eq!(task.fst.transduce(x), Transduction::Output(y.clone()));
        }
    }
}

#[test]
fn splits_verify_clean() {
    let vocab: Vec<_> = SymbolTable::global().ascii().take(25).collect();
    for seed in 0..3 {
        let mut rng = task_rng(30 + seed, 0);
        let f = gen_fst_with_states(4, &vocab, 1000, &mut rng).unwrap();
        let it = IterationSplitConfig {
            train_size: 300,
            test_size: 100,
            ..Default::default()
        };
        let ds = gen_iteration_split(&f, &it, &mut rng).unwrap();
        assert!(verify_split(&ds.fst, &ds.meta, &ds.train, &ds.test).is_empty());
        for (x, _) in &ds.train {
            assert!(iteration_count(&f, x).unwrap() <= 3);
        }
        let uc = UcSplitConfig {
            train_size: 300,
            test_size: 100,
            ..Default::default()
        };
        if let Ok(ds) = gen_uc_split(&f, &uc, &mut rng) {
            assert!(verify_split(&ds.fst, &ds.meta, &ds.train, &ds.test).is_empty());
        }
        let len = LengthSplitConfig {
            train_size: 200,
            test_size: 50,
            ..LengthSplitConfig::preset_40_70()
        };
        let ds = gen_length_split(&f, &len, &mut rng).unwrap();
        assert!(verify_split(&ds.fst, &ds.meta, &ds.train, &ds.test).is_empty());
        assert!(ds.test.iter().all(|(x, _)| (40..=70).contains(&x.len())));
    }
}

#[test]
fn corrupted_split_is_flagged() {
    let vocab: Vec<_> = SymbolTable::global().ascii().take(25).collect();
    let mut rng = task_rng(40, 0);
    let f = gen_fst_with_states(4, &vocab, 1000, &mut rng).unwrap();
    let it = IterationSplitConfig {
        train_size: 100,
        test_size: 50,
        ..Default::default()
    };
    let mut ds = gen_iteration_split(&f, &it, &mut rng).unwrap();
    ds.test[7].1.push(vocab[0]);
    let v = verify_split(&ds.fst, &ds.meta, &ds.train, &ds.test);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].index, 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bimachine_compiles_faithfully(seed in any::<u64>(), l in 1usize..=3, r in 1usize..=3, v in 1usize..=3) {
        let cfg = BimachineConfig { left_states: l, right_states: r, vocab: syms("abc")[..v].to_vec(), p_drop: 0.3, p_id: 0.2 };
        let bm = gen_bimachine(&cfg, &mut task_rng(seed, 0)).unwrap();
        let fst = bm.to_fst();
        for x in enumerate_strings(bm.vocab(), 4) {
            let want = bm.run(&x).map_or(Transduction::Undefined, Transduction::Output);
            prop_assert_eq!(fst.transduce(&x), want);
        }
    }

    #[test]
    fn set_task_outputs_dedup(seed in any::<u64>()) {
        for (x, y) in gen_set_task(20, &mut task_rng(seed, 0)) {
            let mut seen = std::collections::BTreeSet::new();
            prop_assert!(y.iter().all(|s| seen.insert(*s)));
            let mut it = x.iter();
            prop_assert!(y.iter().all(|s| it.any(|t| t == s)));
            prop_assert_eq!(seen, x.iter().copied().collect());
        }
    }

    #[test]
    fn edit_distance_is_a_metric(a in "[abc]{0,8}", b in "[abc]{0,8}", c in "[abc]{0,8}") {
        let (a, b, c): (Vec<char>, Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect(), c.chars().collect());
        let ab = edit_distance(&a, &b);
        prop_assert_eq!(ab, edit_distance(&b, &a));
        prop_assert_eq!(ab == 0, a == b);
        prop_assert!(ab <= edit_distance(&a, &c) + edit_distance(&c, &b));
        prop_assert!(ab >= a.len().abs_diff(b.len()));
        prop_assert!(ab <= a.len().max(b.len()));
    }

    #[test]
    fn perfect_predictions_score_perfectly(golds in proptest::collection::vec("[a-z]{0,6}", 1..10)) {
        let r = evaluate(&golds, &golds).unwrap();
        prop_assert_eq!(r.seq_accuracy, 1.0);
        prop_assert_eq!(r.per, 0.0);
    }

    #[test]
    fn exact_similarity_is_permutation_invariant(seed in any::<u64>(), n in 1usize..8, d in 1usize..6) {
        let mut rng = task_rng(seed, 0);
        let mut rows = || -> Vec<Vec<f64>> {
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.1..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect()).collect()
        };
        let (pv, qv) = (rows(), rows());
        let mut shuffled = qv.clone();
        shuffled.shuffle(&mut task_rng(seed, 1));
        let p = Prefix::new(pv).unwrap();
        let q = Prefix::new(qv).unwrap();
        let qs = Prefix::new(shuffled).unwrap();
        let base = prefix_similarity_exact(&p, &q).unwrap().score;
        prop_assert!((base - prefix_similarity_exact(&p, &qs).unwrap().score).abs() < 1e-9);
        prop_assert!((base - prefix_similarity_exact(&q, &p).unwrap().score).abs() < 1e-9);
        prop_assert!((prefix_similarity_exact(&p, &p).unwrap().score - 1.0).abs() < 1e-9);
    }
}
