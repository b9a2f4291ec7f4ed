//! Random generators for deterministic FSTs, bimachines, input/output pairs
//! and the Set deduplication task.
//!
//! Every task draws from its own ChaCha stream selected by
//! `(master_seed, task index)`, so results do not depend on generation order
//! or on the number of worker threads.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bimachine::{Bimachine, Dfa};
use crate::error::{Error, Result};
use crate::fst::{minimize, Fst, Transduction, Transition};
use crate::par::Execution;
use crate::symbols::{Symbol, SymbolTable};
use crate::walk::WalkGraph;

/// Stop probability at final states used for pre-training inputs. Chosen so
/// that the mean input length of the default corpus is close to 15.6.
pub const DEFAULT_STOP_PROB: f64 = 0.082;

pub type Pair = (Vec<Symbol>, Vec<Symbol>);

/// RNG for one task of a corpus.
pub fn task_rng(master_seed: u64, task: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(task);
    rng
}

/// Where the transition sampler draws target states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetChoice {
    /// One target per source state, shared by all its transitions.
    PerState,
    /// A fresh target for every symbol edge.
    #[default]
    PerSymbol,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetFstConfig {
    pub num_states: usize,
    pub num_finals: usize,
    pub vocab: Vec<Symbol>,
    pub p_id: f64,
    pub p_drop: f64,
    pub p_shorthand: f64,
    pub target: TargetChoice,
    pub max_retries: usize,
}

impl DetFstConfig {
    pub fn new(num_states: usize, num_finals: usize, vocab: Vec<Symbol>) -> Self {
        DetFstConfig {
            num_states,
            num_finals,
            vocab,
            p_id: 0.2,
            p_drop: 0.4,
            p_shorthand: 0.15,
            target: TargetChoice::PerSymbol,
            max_retries: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_id", self.p_id),
            ("p_drop", self.p_drop),
            ("p_shorthand", self.p_shorthand),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.num_states == 0 || self.num_finals == 0 {
            return Err(Error::Config(
                "need at least one state and one final state".into(),
            ));
        }
        if self.vocab.is_empty() || self.vocab.iter().any(|s| !s.is_concrete()) {
            return Err(Error::Config(
                "vocabulary must be non-empty and concrete".into(),
            ));
        }
        Ok(())
    }
}

/// One pass of the transition sampler: for each state a single target is
/// drawn, then either one shorthand self-transition family or a per-symbol
/// choice between no edge, an identity edge and a uniform output from the
/// vocabulary plus epsilon.
fn sample_transitions<R: Rng + ?Sized>(
    n: usize,
    vocab: &[Symbol],
    p_id: f64,
    p_drop: f64,
    p_shorthand: f64,
    target_choice: TargetChoice,
    rng: &mut R,
) -> Vec<Transition> {
    let mut transitions = Vec::new();
    let mut outputs: Vec<Symbol> = vocab.to_vec();
    outputs.push(Symbol::EPS);
    for q in 0..n {
        let target = rng.gen_range(0..n);
        if rng.gen_bool(p_shorthand) {
            let s = *Symbol::SHORTHANDS.choose(rng).unwrap();
            transitions.push(Transition::new(q, s, s, target));
        } else {
            for &sigma in vocab {
                if rng.gen_bool(p_drop) {
                    continue;
                }
                let out = if rng.gen_bool(p_id) {
                    sigma
                } else {
                    *outputs.choose(rng).unwrap()
                };
                let dst = match target_choice {
                    TargetChoice::PerState => target,
                    TargetChoice::PerSymbol => rng.gen_range(0..n),
                };
                transitions.push(Transition::new(q, sigma, out, dst));
            }
        }
    }
    transitions
}

/// Random deterministic cyclic FST. Retries until the minimized machine is
/// non-empty and has a cycle.
pub fn gen_det_fst<R: Rng + ?Sized>(cfg: &DetFstConfig, rng: &mut R) -> Result<Fst> {
    cfg.validate()?;
    for _ in 0..cfg.max_retries {
        let transitions = sample_transitions(
            cfg.num_states,
            &cfg.vocab,
            cfg.p_id,
            cfg.p_drop,
            cfg.p_shorthand,
            cfg.target,
            rng,
        );
        let raw = Fst::new(
            cfg.num_states,
            cfg.vocab.iter().copied(),
            [0],
            [],
            transitions,
        )?;
        let reachable = raw.connect_accessible();
        let k = cfg.num_finals.min(reachable.num_states());
        let finals = index::sample(rng, reachable.num_states(), k).into_vec();
        let trimmed = reachable.with_finals(finals)?.trim();
        if trimmed.is_empty() {
            continue;
        }
        let m = minimize(&trimmed)?;
        if m.is_cyclic() {
            return Ok(m);
        }
    }
    Err(Error::Generation {
        attempts: cfg.max_retries,
        reason: "no cyclic non-empty FST sampled".into(),
    })
}

/// Random deterministic FST with exactly `num_states` states after
/// minimization; the number of final states is uniform in `1..=num_states`.
pub fn gen_fst_with_states<R: Rng + ?Sized>(
    num_states: usize,
    vocab: &[Symbol],
    max_retries: usize,
    rng: &mut R,
) -> Result<Fst> {
    for _ in 0..max_retries {
        let finals = rng.gen_range(1..=num_states);
        let mut cfg = DetFstConfig::new(num_states, finals, vocab.to_vec());
        cfg.max_retries = 1;
        match gen_det_fst(&cfg, rng) {
            Ok(f) if f.num_states() == num_states => return Ok(f),
            Ok(_) | Err(Error::Generation { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation {
        attempts: max_retries,
        reason: format!("no FST with exactly {num_states} states"),
    })
}

/// Transition structure of the sampler read as an automaton (outputs
/// dropped, no shorthands), restricted to its accessible part.
pub fn gen_dfa<R: Rng + ?Sized>(
    num_states: usize,
    vocab: &[Symbol],
    p_drop: f64,
    rng: &mut R,
) -> Result<Dfa> {
    let transitions = sample_transitions(
        num_states,
        vocab,
        0.2,
        p_drop,
        0.0,
        TargetChoice::default(),
        rng,
    );
    let all_final: Vec<usize> = (0..num_states).collect();
    let fst = Fst::new(
        num_states,
        vocab.iter().copied(),
        [0],
        all_final,
        transitions,
    )?
    .connect_accessible();
    Dfa::new(
        fst.num_states(),
        vocab.iter().copied(),
        0,
        fst.transitions().iter().map(|t| (t.src, t.input, t.dst)),
    )
}

/// Output function: identity with probability `p_id`, otherwise uniform over
/// the vocabulary plus epsilon.
pub fn gen_psi<R: Rng + ?Sized>(
    left: Dfa,
    right: Dfa,
    p_id: f64,
    rng: &mut R,
) -> Result<Bimachine> {
    let mut outputs: Vec<Symbol> = left.vocab().to_vec();
    outputs.push(Symbol::EPS);
    let (nl, nr, width) = (left.num_states(), right.num_states(), left.vocab().len());
    let mut table = vec![Symbol::EPS; nl * nr * width];
    for ql in 0..nl {
        for qr in 0..nr {
            for (vi, &sigma) in left.vocab().iter().enumerate() {
                table[(ql * width + vi) * nr + qr] = if rng.gen_bool(p_id) {
                    sigma
                } else {
                    *outputs.choose(rng).unwrap()
                };
            }
        }
    }
    let vocab = left.vocab().to_vec();
    Bimachine::new(left, right, |ql, s, qr| {
        let vi = vocab.binary_search(&s).unwrap();
        table[(ql * width + vi) * nr + qr]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BimachineConfig {
    pub left_states: usize,
    pub right_states: usize,
    pub vocab: Vec<Symbol>,
    pub p_drop: f64,
    pub p_id: f64,
}

pub fn gen_bimachine<R: Rng + ?Sized>(cfg: &BimachineConfig, rng: &mut R) -> Result<Bimachine> {
    if cfg.left_states == 0 || cfg.right_states == 0 {
        return Err(Error::Config(
            "bimachine automata need at least one state".into(),
        ));
    }
    let left = gen_dfa(cfg.left_states, &cfg.vocab, cfg.p_drop, rng)?;
    let right = gen_dfa(cfg.right_states, &cfg.vocab, cfg.p_drop, rng)?;
    gen_psi(left, right, cfg.p_id, rng)
}

/// How input lengths are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthModel {
    /// Budgeted walk that stops at final states with this probability.
    StopAtFinal(f64),
    /// Length uniform in the band, then a walk of exactly that length.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub min_len: usize,
    pub max_len: usize,
    pub model: LengthModel,
}

impl InputSpec {
    pub fn stop_at_final(min_len: usize, max_len: usize) -> Self {
        InputSpec {
            min_len,
            max_len,
            model: LengthModel::StopAtFinal(DEFAULT_STOP_PROB),
        }
    }

    pub fn uniform(min_len: usize, max_len: usize) -> Self {
        InputSpec {
            min_len,
            max_len,
            model: LengthModel::Uniform,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, graph: &WalkGraph, rng: &mut R) -> Option<Vec<Symbol>> {
        match self.model {
            LengthModel::StopAtFinal(p) => {
                graph.walk_stop_at_final(self.min_len, self.max_len, p, rng)
            }
            LengthModel::Uniform => {
                graph.walk_exact(rng.gen_range(self.min_len..=self.max_len), rng)
            }
        }
    }
}

/// Draws `count` distinct inputs accepted by `filter`. Gives up after
/// `attempts` draws.
pub fn sample_distinct_inputs<R, F>(
    graph: &WalkGraph,
    spec: &InputSpec,
    count: usize,
    attempts: usize,
    mut filter: F,
    rng: &mut R,
) -> Result<Vec<Vec<Symbol>>>
where
    R: Rng + ?Sized,
    F: FnMut(&[Symbol]) -> bool,
{
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    for _ in 0..attempts {
        if out.len() == count {
            break;
        }
        let Some(x) = spec.draw(graph, rng) else {
            continue;
        };
        if !filter(&x) || seen.contains(&x) {
            continue;
        }
        seen.insert(x.clone());
        out.push(x);
    }
    if out.len() < count {
        return Err(Error::Quota(format!(
            "found {} of {count} distinct inputs with lengths {}..={} after {attempts} draws",
            out.len(),
            spec.min_len,
            spec.max_len
        )));
    }
    Ok(out)
}

/// Distinct inputs from the domain of `fst` with their outputs.
pub fn sample_io_pairs<R: Rng + ?Sized>(
    fst: &Fst,
    count: usize,
    min_len: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<Vec<Pair>> {
    sample_io_pairs_with(fst, count, &InputSpec::stop_at_final(min_len, max_len), rng)
}

pub fn sample_io_pairs_with<R: Rng + ?Sized>(
    fst: &Fst,
    count: usize,
    spec: &InputSpec,
    rng: &mut R,
) -> Result<Vec<Pair>> {
    if fst.is_empty() {
        return Err(Error::Quota("FST has an empty domain".into()));
    }
    let graph = WalkGraph::from_fst(fst)?;
    let attempts = 200 + 50 * count;
    let inputs = sample_distinct_inputs(&graph, spec, count, attempts, |_| true, rng)?;
    inputs
        .into_iter()
        .map(|x| match fst.transduce(&x) {
            Transduction::Output(y) => Ok((x, y)),
            Transduction::Ambiguous => Err(Error::NotDeterministic(
                "sampled input has two outputs".into(),
            )),
            Transduction::Undefined => unreachable!("walks only produce accepted inputs"),
        })
        .collect()
}

/// Uniform vocabulary size in `min..=max`, then a uniform subset of `pool`.
pub fn sample_vocab<R: Rng + ?Sized>(
    pool: &[Symbol],
    min: usize,
    max: usize,
    rng: &mut R,
) -> Vec<Symbol> {
    let size = rng.gen_range(min..=max).min(pool.len());
    let mut v: Vec<Symbol> = index::sample(rng, pool.len(), size)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    v.sort_unstable();
    v
}

/// Output of the Set task: first occurrence of each symbol, in order.
pub fn dedup_first(input: &[Symbol]) -> Vec<Symbol> {
    let mut seen = BTreeSet::new();
    input.iter().copied().filter(|s| seen.insert(*s)).collect()
}

/// Set deduplication examples: per example a vocabulary of uniform size in
/// 5..=25 and a uniform input length in 5..=35.
pub fn gen_set_task<R: Rng + ?Sized>(num_examples: usize, rng: &mut R) -> Vec<Pair> {
    let pool: Vec<Symbol> = SymbolTable::global().concrete().collect();
    (0..num_examples)
        .map(|_| {
            let vocab = sample_vocab(&pool, 5, 25, rng);
            let len = rng.gen_range(5..=35);
            let x: Vec<Symbol> = (0..len).map(|_| *vocab.choose(rng).unwrap()).collect();
            let y = dedup_first(&x);
            (x, y)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabPool {
    /// Whole symbol table.
    Full,
    /// Printable ASCII only.
    Ascii,
}

impl VocabPool {
    pub fn symbols(self) -> Vec<Symbol> {
        let table = SymbolTable::global();
        match self {
            VocabPool::Full => table.concrete().collect(),
            VocabPool::Ascii => table.ascii().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusMode {
    Deterministic,
    Bimachine {
        left_min: usize,
        left_max: usize,
        right_min: usize,
        right_max: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub num_tasks: usize,
    pub pairs_per_task: usize,
    pub min_input_len: usize,
    pub max_input_len: usize,
    pub min_vocab: usize,
    pub max_vocab: usize,
    pub min_states: usize,
    pub max_states: usize,
    pub master_seed: u64,
    pub mode: CorpusMode,
    pub vocab_pool: VocabPool,
    pub p_id: f64,
    pub p_drop: f64,
    pub p_shorthand: f64,
    pub target_choice: TargetChoice,
    pub stop_prob: f64,
    pub max_retries: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            num_tasks: 40_000,
            pairs_per_task: 5,
            min_input_len: 1,
            max_input_len: 35,
            min_vocab: 5,
            max_vocab: 25,
            min_states: 2,
            max_states: 4,
            master_seed: 0,
            mode: CorpusMode::Deterministic,
            vocab_pool: VocabPool::Full,
            p_id: 0.2,
            p_drop: 0.4,
            p_shorthand: 0.15,
            target_choice: TargetChoice::PerSymbol,
            stop_prob: DEFAULT_STOP_PROB,
            max_retries: 100,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check(
            self.min_states >= 1 && self.min_states <= self.max_states,
            "need 1 <= states-min <= states-max",
        )?;
        check(
            self.min_vocab >= 1 && self.min_vocab <= self.max_vocab,
            "need 1 <= vocab-min <= vocab-max",
        )?;
        check(
            self.max_vocab <= self.vocab_pool.symbols().len(),
            "vocab-max exceeds the symbol pool",
        )?;
        check(
            self.min_input_len <= self.max_input_len,
            "need min length <= max length",
        )?;
        check(
            (0.0..=1.0).contains(&self.stop_prob),
            "stop probability must lie in [0, 1]",
        )?;
        if let CorpusMode::Bimachine {
            left_min,
            left_max,
            right_min,
            right_max,
        } = self.mode
        {
            check(
                left_min >= 1 && left_min <= left_max,
                "need 1 <= left-min <= left-max",
            )?;
            check(
                right_min >= 1 && right_min <= right_max,
                "need 1 <= right-min <= right-max",
            )?;
        }
        DetFstConfig {
            num_states: self.max_states,
            num_finals: 1,
            vocab: vec![Symbol(crate::symbols::FIRST_CONCRETE)],
            p_id: self.p_id,
            p_drop: self.p_drop,
            p_shorthand: self.p_shorthand,
            target: self.target_choice,
            max_retries: self.max_retries,
        }
        .validate()
    }
}

/// One pre-training task: a machine and sampled pairs from its domain.
#[derive(Clone, Debug, PartialEq)]
pub struct PretrainTask {
    pub task_id: u64,
    /// Single-initial machine, ready for encoding.
    pub fst: Fst,
    pub bimachine: Option<Bimachine>,
    pub pairs: Vec<Pair>,
}

/// Generates task `index` of the corpus described by `cfg`.
pub fn gen_pretrain_task(cfg: &CorpusConfig, index: u64) -> Result<PretrainTask> {
    let mut rng = task_rng(cfg.master_seed, index);
    let pool = cfg.vocab_pool.symbols();
    let spec = InputSpec {
        min_len: cfg.min_input_len,
        max_len: cfg.max_input_len,
        model: LengthModel::StopAtFinal(cfg.stop_prob),
    };
    let mut last_err = None;
    for _ in 0..cfg.max_retries {
        let vocab = sample_vocab(&pool, cfg.min_vocab, cfg.max_vocab, &mut rng);
        let (walk_fst, bimachine) = match &cfg.mode {
            CorpusMode::Deterministic => {
                let n = rng.gen_range(cfg.min_states..=cfg.max_states);
                let f = rng.gen_range(1..=n);
                let det = DetFstConfig {
                    num_states: n,
                    num_finals: f,
                    vocab,
                    p_id: cfg.p_id,
                    p_drop: cfg.p_drop,
                    p_shorthand: cfg.p_shorthand,
                    target: cfg.target_choice,
                    max_retries: cfg.max_retries,
                };
                match gen_det_fst(&det, &mut rng) {
                    Ok(fst) => (fst, None),
                    Err(e @ Error::Generation { .. }) => {
                        last_err = Some(e);
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            CorpusMode::Bimachine {
                left_min,
                left_max,
                right_min,
                right_max,
            } => {
                let bm_cfg = BimachineConfig {
                    left_states: rng.gen_range(*left_min..=*left_max),
                    right_states: rng.gen_range(*right_min..=*right_max),
                    vocab,
                    p_drop: cfg.p_drop,
                    p_id: cfg.p_id,
                };
                let bm = gen_bimachine(&bm_cfg, &mut rng)?;
                let fst = bm.to_fst();
                if fst.is_empty() || !fst.is_cyclic() {
                    continue;
                }
                (fst, Some(bm))
            }
        };
        match sample_io_pairs_with(&walk_fst, cfg.pairs_per_task, &spec, &mut rng) {
            Ok(pairs) => {
                return Ok(PretrainTask {
                    task_id: index,
                    fst: walk_fst.with_single_initial(),
                    bimachine,
                    pairs,
                })
            }
            Err(e @ Error::Quota(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::Generation {
        attempts: cfg.max_retries,
        reason: format!("task {index}"),
    }))
}

/// All tasks of a corpus, in task-id order.
pub fn gen_corpus(cfg: &CorpusConfig, exec: Execution) -> Result<Vec<PretrainTask>> {
    cfg.validate()?;
    exec.try_map(cfg.num_tasks, |i| gen_pretrain_task(cfg, i as u64))
}

/// FSTs with the same state count and vocabulary as a reference machine.
pub fn gen_distractors(
    num_states: usize,
    vocab: &[Symbol],
    count: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Fst>> {
    exec.try_map(count, |i| {
        let mut rng = task_rng(seed, i as u64);
        gen_fst_with_states(num_states, vocab, 1000, &mut rng)
    })
}
