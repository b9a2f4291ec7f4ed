//! Systematic-generalization splits: iteration generalization, unseen
//! combinations of transitions (UC), and length extrapolation.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fst::{Fst, Transduction, Transition};
use crate::sampling::{sample_distinct_inputs, InputSpec, Pair};
use crate::symbols::Symbol;
use crate::walk::WalkGraph;

/// Largest number of visits to a single state along the run on `input`,
/// counting the initial visit.
pub fn iteration_count(fst: &Fst, input: &[Symbol]) -> Result<usize> {
    let seq = fst.state_sequence(input)?.ok_or(Error::Undefined)?;
    let mut counts = vec![0usize; fst.num_states()];
    for &q in &seq.states {
        counts[q] += 1;
    }
    Ok(counts.into_iter().max().unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSplitConfig {
    pub train_max_iter: usize,
    pub test_min_iter: usize,
    pub train_len_range: (usize, usize),
    pub test_max_len: usize,
    pub train_size: usize,
    pub test_size: usize,
}

impl Default for IterationSplitConfig {
    fn default() -> Self {
        IterationSplitConfig {
            train_max_iter: 3,
            test_min_iter: 4,
            train_len_range: (3, 15),
            test_max_len: 30,
            train_size: 5000,
            test_size: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcSplitConfig {
    pub max_withheld_pairs: usize,
    pub train_len_range: (usize, usize),
    pub test_len_range: (usize, usize),
    pub train_size: usize,
    pub test_size: usize,
}

impl Default for UcSplitConfig {
    fn default() -> Self {
        UcSplitConfig {
            max_withheld_pairs: 20,
            train_len_range: (3, 15),
            test_len_range: (3, 15),
            train_size: 5000,
            test_size: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthSplitConfig {
    pub train_max_len: usize,
    pub test_len_range: (usize, usize),
    pub train_size: usize,
    pub test_size: usize,
}

impl LengthSplitConfig {
    pub fn preset_40_70() -> Self {
        LengthSplitConfig {
            train_max_len: 15,
            test_len_range: (40, 70),
            train_size: 5000,
            test_size: 1000,
        }
    }

    pub fn preset_90_110() -> Self {
        LengthSplitConfig {
            test_len_range: (90, 110),
            ..Self::preset_40_70()
        }
    }
}

/// Two adjacent transitions whose co-occurrence is withheld from training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WithheldPair {
    pub a: Transition,
    pub b: Transition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitMeta {
    Iteration {
        config: IterationSplitConfig,
    },
    Uc {
        config: UcSplitConfig,
        withheld: Vec<[[u32; 4]; 2]>,
    },
    Length {
        config: LengthSplitConfig,
    },
}

impl SplitMeta {
    pub fn withheld_pairs(&self) -> Vec<WithheldPair> {
        let SplitMeta::Uc { withheld, .. } = self else {
            return Vec::new();
        };
        let t = |r: &[u32; 4]| {
            Transition::new(r[0] as usize, Symbol(r[1]), Symbol(r[2]), r[3] as usize)
        };
        withheld
            .iter()
            .map(|[a, b]| WithheldPair { a: t(a), b: t(b) })
            .collect()
    }
}

fn transition_row(t: &Transition) -> [u32; 4] {
    [t.src as u32, t.input.0, t.output.0, t.dst as u32]
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskDataset {
    pub fst: Fst,
    pub train: Vec<Pair>,
    pub test: Vec<Pair>,
    pub meta: SplitMeta,
}

fn label(fst: &Fst, inputs: Vec<Vec<Symbol>>) -> Result<Vec<Pair>> {
    inputs
        .into_iter()
        .map(|x| {
            let y = fst.apply(&x)?;
            Ok((x, y))
        })
        .collect()
}

fn attempts_for(size: usize) -> usize {
    1000 + 200 * size
}

/// Train inputs need at most `train_max_iter` visits to every state, test
/// inputs at least `test_min_iter` visits to some state.
pub fn gen_iteration_split<R: Rng + ?Sized>(
    fst: &Fst,
    cfg: &IterationSplitConfig,
    rng: &mut R,
) -> Result<TaskDataset> {
    fst.check_deterministic()?;
    if cfg.train_max_iter >= cfg.test_min_iter {
        return Err(Error::Config(
            "train_max_iter must be below test_min_iter".into(),
        ));
    }
    let graph = WalkGraph::from_fst(fst)?;
    let count = |x: &[Symbol]| iteration_count(fst, x).unwrap_or(0);
    let (lo, hi) = cfg.train_len_range;
    let train = sample_distinct_inputs(
        &graph,
        &InputSpec::uniform(lo, hi),
        cfg.train_size,
        attempts_for(cfg.train_size),
        |x| count(x) <= cfg.train_max_iter,
        rng,
    )?;
    let test = sample_distinct_inputs(
        &graph,
        &InputSpec::uniform(1, cfg.test_max_len),
        cfg.test_size,
        attempts_for(cfg.test_size),
        |x| count(x) >= cfg.test_min_iter,
        rng,
    )?;
    Ok(TaskDataset {
        train: label(fst, train)?,
        test: label(fst, test)?,
        fst: fst.clone(),
        meta: SplitMeta::Iteration {
            config: cfg.clone(),
        },
    })
}

/// Transitions that first discover each state in a depth-first traversal
/// from state 0, visiting outgoing transitions in (input, dst) order.
pub fn protected_transitions(fst: &Fst) -> BTreeSet<Transition> {
    let mut protected = BTreeSet::new();
    if fst.is_empty() {
        return protected;
    }
    let mut visited = vec![false; fst.num_states()];
    fn visit(fst: &Fst, q: usize, visited: &mut [bool], protected: &mut BTreeSet<Transition>) {
        visited[q] = true;
        let mut out: Vec<&Transition> = fst.outgoing(q).collect();
        out.sort_by_key(|t| (t.input, t.dst, t.output));
        for t in out {
            if !visited[t.dst] {
                protected.insert(*t);
                visit(fst, t.dst, visited, protected);
            }
        }
    }
    visit(fst, 0, &mut visited, &mut protected);
    protected
}

/// Every adjacent pair `a` then `b` (`a.dst == b.src`, `a != b`) where
/// neither transition is protected.
pub fn eligible_pairs(fst: &Fst) -> Vec<WithheldPair> {
    let protected = protected_transitions(fst);
    let free: Vec<&Transition> = fst
        .transitions()
        .iter()
        .filter(|t| !protected.contains(t))
        .collect();
    let mut pairs = Vec::new();
    for &a in &free {
        for &b in &free {
            if a != b && a.dst == b.src {
                pairs.push(WithheldPair { a: *a, b: *b });
            }
        }
    }
    pairs.sort();
    pairs
}

fn all_states_useful(fst: &Fst) -> bool {
    let acc = fst.accessible();
    let coacc = fst.coaccessible();
    acc.iter().zip(&coacc).all(|(a, c)| *a && *c)
}

/// Chooses up to `max_pairs` withheld pairs at random. A pair is kept only if
/// the a-sides and b-sides stay disjoint and deleting all a-sides, or all
/// b-sides, leaves every state on an accepting path.
pub fn select_withheld_pairs<R: Rng + ?Sized>(
    fst: &Fst,
    max_pairs: usize,
    rng: &mut R,
) -> Result<Vec<WithheldPair>> {
    fst.check_deterministic()?;
    let mut candidates = eligible_pairs(fst);
    candidates.shuffle(rng);
    let mut a_sides = BTreeSet::new();
    let mut b_sides = BTreeSet::new();
    let mut chosen = Vec::new();
    for pair in candidates {
        if chosen.len() == max_pairs {
            break;
        }
        if a_sides.contains(&pair.b) || b_sides.contains(&pair.a) {
            continue;
        }
        let mut a_try = a_sides.clone();
        a_try.insert(pair.a);
        let mut b_try = b_sides.clone();
        b_try.insert(pair.b);
        if all_states_useful(&fst.without_transitions(&b_try))
            && all_states_useful(&fst.without_transitions(&a_try))
        {
            a_sides = a_try;
            b_sides = b_try;
            chosen.push(pair);
        }
    }
    Ok(chosen)
}

/// The copies `f_a` (all b-sides removed), `f_b` (all a-sides removed) and
/// their union behind a fresh initial state.
pub struct UcMachines {
    pub f_a: Fst,
    pub f_b: Fst,
    pub f_train: Fst,
    pub a_sides: BTreeSet<Transition>,
    pub b_sides: BTreeSet<Transition>,
}

impl UcMachines {
    pub fn new(fst: &Fst, pairs: &[WithheldPair]) -> Self {
        let a_sides: BTreeSet<Transition> = pairs.iter().map(|p| p.a).collect();
        let b_sides: BTreeSet<Transition> = pairs.iter().map(|p| p.b).collect();
        let f_a = fst.without_transitions(&b_sides).trim();
        let f_b = fst.without_transitions(&a_sides).trim();
        let f_train = Fst::union_with_fresh_initial(&f_a, &f_b);
        UcMachines {
            f_a,
            f_b,
            f_train,
            a_sides,
            b_sides,
        }
    }

    /// Walk graph over (state, used-an-a-side, used-a-b-side) that accepts
    /// exactly the inputs of `fst` whose run uses both kinds.
    fn test_graph(&self, fst: &Fst) -> WalkGraph {
        let n = fst.num_states();
        let node = |q: usize, flags: usize| q * 4 + flags;
        let mut moves = vec![Vec::new(); n * 4];
        for t in fst.transitions() {
            let bits = usize::from(self.a_sides.contains(t))
                | (usize::from(self.b_sides.contains(t)) << 1);
            for flags in 0..4 {
                for (s, _) in fst.expanded_moves(t) {
                    moves[node(t.src, flags)].push((s, node(t.dst, flags | bits)));
                }
            }
        }
        let accepting = (0..n * 4)
            .map(|v| v % 4 == 3 && fst.is_final(v / 4))
            .collect();
        WalkGraph::new(vec![node(0, 0)], accepting, moves)
    }
}

/// Which withheld transitions the deterministic run on `input` uses.
pub fn withheld_usage(
    fst: &Fst,
    pairs: &[WithheldPair],
    input: &[Symbol],
) -> Option<(bool, bool, bool)> {
    let run = fst.run_unchecked(input)?;
    let used: HashSet<Transition> = run
        .transitions
        .iter()
        .map(|&i| fst.transitions()[i])
        .collect();
    let any_a = pairs.iter().any(|p| used.contains(&p.a));
    let any_b = pairs.iter().any(|p| used.contains(&p.b));
    let both_of_one = pairs
        .iter()
        .any(|p| used.contains(&p.a) && used.contains(&p.b));
    Some((any_a, any_b, both_of_one))
}

/// Unseen-combinations split. Train inputs come from the domain of
/// `f_train`; test inputs are accepted by `fst` but use at least one withheld
/// a-side and one withheld b-side, so `f_train` rejects them.
pub fn gen_uc_split<R: Rng + ?Sized>(
    fst: &Fst,
    cfg: &UcSplitConfig,
    rng: &mut R,
) -> Result<TaskDataset> {
    let pairs = select_withheld_pairs(fst, cfg.max_withheld_pairs, rng)?;
    if pairs.is_empty() {
        return Err(Error::Quota(
            "FST admits no withheld transition pairs".into(),
        ));
    }
    let machines = UcMachines::new(fst, &pairs);
    let graphs = [
        WalkGraph::from_fst(&machines.f_a)?,
        WalkGraph::from_fst(&machines.f_b)?,
    ];
    let (lo, hi) = cfg.train_len_range;
    let spec = InputSpec::uniform(lo, hi);

    // alternate between the two copies at random
    let mut seen = BTreeSet::new();
    let mut train = Vec::with_capacity(cfg.train_size);
    for _ in 0..attempts_for(cfg.train_size) {
        if train.len() == cfg.train_size {
            break;
        }
        let g = &graphs[rng.gen_range(0..2)];
        let Some(x) = spec.draw(g, rng) else { continue };
        if seen.insert(x.clone()) {
            train.push(x);
        }
    }
    if train.len() < cfg.train_size {
        return Err(Error::Quota(format!(
            "found {} of {} UC training inputs",
            train.len(),
            cfg.train_size
        )));
    }
    let train = label(fst, train)?;
    for (x, y) in &train {
        if machines.f_train.transduce(x) != Transduction::Output(y.clone()) {
            return Err(Error::Generation {
                attempts: 0,
                reason: "f_train disagrees with f on a training input".into(),
            });
        }
    }

    let test_graph = machines.test_graph(fst);
    let (lo, hi) = cfg.test_len_range;
    let test = sample_distinct_inputs(
        &test_graph,
        &InputSpec::uniform(lo, hi),
        cfg.test_size,
        attempts_for(cfg.test_size),
        |x| !seen.contains(x),
        rng,
    )?;
    let withheld = pairs
        .iter()
        .map(|p| [transition_row(&p.a), transition_row(&p.b)])
        .collect();
    Ok(TaskDataset {
        train,
        test: label(fst, test)?,
        fst: fst.clone(),
        meta: SplitMeta::Uc {
            config: cfg.clone(),
            withheld,
        },
    })
}

/// Train on lengths up to `train_max_len`, test inside `test_len_range`.
pub fn gen_length_split<R: Rng + ?Sized>(
    fst: &Fst,
    cfg: &LengthSplitConfig,
    rng: &mut R,
) -> Result<TaskDataset> {
    fst.check_deterministic()?;
    if !fst.is_cyclic() {
        return Err(Error::Config("length splits need a cyclic FST".into()));
    }
    let (lo, hi) = cfg.test_len_range;
    if lo <= cfg.train_max_len || lo > hi {
        return Err(Error::Config(
            "test band must lie strictly above the training lengths".into(),
        ));
    }
    let graph = WalkGraph::from_fst(fst)?;
    let train = sample_distinct_inputs(
        &graph,
        &InputSpec::uniform(1, cfg.train_max_len),
        cfg.train_size,
        attempts_for(cfg.train_size),
        |_| true,
        rng,
    )?;
    let test = sample_distinct_inputs(
        &graph,
        &InputSpec::uniform(lo, hi),
        cfg.test_size,
        attempts_for(cfg.test_size),
        |_| true,
        rng,
    )?;
    Ok(TaskDataset {
        train: label(fst, train)?,
        test: label(fst, test)?,
        fst: fst.clone(),
        meta: SplitMeta::Length {
            config: cfg.clone(),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub part: Part,
    /// Zero-based record index within its part.
    pub index: usize,
    pub message: String,
}

/// Replays every split invariant on a dataset. An empty result means sound.
pub fn verify_split(fst: &Fst, meta: &SplitMeta, train: &[Pair], test: &[Pair]) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut flag = |part, index, message: String| {
        violations.push(Violation {
            part,
            index,
            message,
        })
    };
    let mut parts: Vec<(Part, &[Pair])> = vec![(Part::Train, train), (Part::Test, test)];

    for (part, pairs) in &mut parts {
        let mut seen = HashSet::new();
        for (i, (x, y)) in pairs.iter().enumerate() {
            match fst.transduce(x) {
                Transduction::Output(o) if &o == y => {}
                Transduction::Output(_) => flag(*part, i, "output differs from the FST".into()),
                Transduction::Undefined => flag(*part, i, "input not in the FST domain".into()),
                Transduction::Ambiguous => flag(*part, i, "FST is ambiguous on this input".into()),
            }
            if !seen.insert(x) {
                flag(*part, i, "duplicate input".into());
            }
        }
    }
    let train_inputs: HashSet<&Vec<Symbol>> = train.iter().map(|p| &p.0).collect();
    for (i, (x, _)) in test.iter().enumerate() {
        if train_inputs.contains(x) {
            flag(Part::Test, i, "input also occurs in train".into());
        }
    }

    match meta {
        SplitMeta::Iteration { config } => {
            let (lo, hi) = config.train_len_range;
            for (i, (x, _)) in train.iter().enumerate() {
                if !(lo..=hi).contains(&x.len()) {
                    flag(
                        Part::Train,
                        i,
                        format!("length {} outside {lo}..={hi}", x.len()),
                    );
                }
                match iteration_count(fst, x) {
                    Ok(c) if c <= config.train_max_iter => {}
                    Ok(c) => flag(
                        Part::Train,
                        i,
                        format!("iteration count {c} > {}", config.train_max_iter),
                    ),
                    Err(e) => flag(Part::Train, i, e.to_string()),
                }
            }
            for (i, (x, _)) in test.iter().enumerate() {
                if x.len() > config.test_max_len {
                    flag(
                        Part::Test,
                        i,
                        format!("length {} > {}", x.len(), config.test_max_len),
                    );
                }
                match iteration_count(fst, x) {
                    Ok(c) if c >= config.test_min_iter => {}
                    Ok(c) => flag(
                        Part::Test,
                        i,
                        format!("iteration count {c} < {}", config.test_min_iter),
                    ),
                    Err(e) => flag(Part::Test, i, e.to_string()),
                }
            }
        }
        SplitMeta::Uc { config, .. } => {
            let pairs = meta.withheld_pairs();
            let machines = UcMachines::new(fst, &pairs);
            for (i, (x, y)) in train.iter().enumerate() {
                let (lo, hi) = config.train_len_range;
                if !(lo..=hi).contains(&x.len()) {
                    flag(
                        Part::Train,
                        i,
                        format!("length {} outside {lo}..={hi}", x.len()),
                    );
                }
                if let Some((_, _, true)) = withheld_usage(fst, &pairs, x) {
                    flag(
                        Part::Train,
                        i,
                        "uses both members of a withheld pair".into(),
                    );
                }
                if machines.f_train.transduce(x) != Transduction::Output(y.clone()) {
                    flag(
                        Part::Train,
                        i,
                        "f_train does not reproduce the output".into(),
                    );
                }
            }
            for (i, (x, _)) in test.iter().enumerate() {
                let (lo, hi) = config.test_len_range;
                if !(lo..=hi).contains(&x.len()) {
                    flag(
                        Part::Test,
                        i,
                        format!("length {} outside {lo}..={hi}", x.len()),
                    );
                }
                if !matches!(withheld_usage(fst, &pairs, x), Some((true, true, _))) {
                    flag(
                        Part::Test,
                        i,
                        "does not use both a withheld a-side and b-side".into(),
                    );
                }
                if machines.f_train.transduce(x).is_defined() {
                    flag(Part::Test, i, "input is in the domain of f_train".into());
                }
            }
        }
        SplitMeta::Length { config } => {
            for (i, (x, _)) in train.iter().enumerate() {
                if x.len() > config.train_max_len {
                    flag(
                        Part::Train,
                        i,
                        format!("length {} > {}", x.len(), config.train_max_len),
                    );
                }
            }
            let (lo, hi) = config.test_len_range;
            for (i, (x, _)) in test.iter().enumerate() {
                if !(lo..=hi).contains(&x.len()) {
                    flag(
                        Part::Test,
                        i,
                        format!("length {} outside {lo}..={hi}", x.len()),
                    );
                }
            }
        }
    }
    violations
}
