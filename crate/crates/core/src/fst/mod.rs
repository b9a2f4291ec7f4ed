//! Unweighted finite-state transducers over the global symbol table.
//!
//! An [`Fst`] is immutable once built. Shorthand labels (`<id>`, `<l2u>`,
//! `<u2l>`) are kept as single transitions everywhere except inside the
//! execution engine, which expands them against the machine's vocabulary.

mod att;
mod exec;
mod minimize;

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::symbols::Symbol;

pub use att::{read_att, write_att};
pub use exec::{DeterministicRun, StateSequence, Transduction};
pub use minimize::minimize;

pub type StateId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub src: StateId,
    pub input: Symbol,
    pub output: Symbol,
    pub dst: StateId,
}

impl Transition {
    pub fn new(src: StateId, input: Symbol, output: Symbol, dst: StateId) -> Self {
        Transition {
            src,
            input,
            output,
            dst,
        }
    }

    pub fn is_self_loop(&self) -> bool {
        self.src == self.dst
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fst {
    num_states: usize,
    vocab: BTreeSet<Symbol>,
    initials: BTreeSet<StateId>,
    finals: BTreeSet<StateId>,
    transitions: Vec<Transition>,
    // outgoing transition indices per state
    out: Vec<Vec<usize>>,
}

impl Fst {
    pub fn new(
        num_states: usize,
        vocab: impl IntoIterator<Item = Symbol>,
        initials: impl IntoIterator<Item = StateId>,
        finals: impl IntoIterator<Item = StateId>,
        transitions: Vec<Transition>,
    ) -> Result<Self> {
        let vocab: BTreeSet<Symbol> = vocab.into_iter().collect();
        let initials: BTreeSet<StateId> = initials.into_iter().collect();
        let finals: BTreeSet<StateId> = finals.into_iter().collect();
        if let Some(bad) = vocab.iter().find(|s| !s.is_concrete()) {
            return Err(Error::Config(format!(
                "vocabulary contains reserved symbol {}",
                bad.0
            )));
        }
        if let Some(&q) = initials
            .iter()
            .chain(finals.iter())
            .find(|&&q| q >= num_states)
        {
            return Err(Error::Config(format!(
                "state {q} out of range for {num_states} states"
            )));
        }
        for t in &transitions {
            if t.src >= num_states || t.dst >= num_states {
                return Err(Error::Config(format!(
                    "transition {t:?} out of range for {num_states} states"
                )));
            }
            if t.input == Symbol::PAD || t.output == Symbol::PAD {
                return Err(Error::Config(format!(
                    "transition {t:?} uses the padding symbol"
                )));
            }
            if (t.input.is_shorthand() || t.output.is_shorthand()) && t.input != t.output {
                return Err(Error::Config(format!(
                    "shorthand transition {t:?} must have input == output"
                )));
            }
        }
        Ok(Self::from_parts(
            num_states,
            vocab,
            initials,
            finals,
            transitions,
        ))
    }

    fn from_parts(
        num_states: usize,
        vocab: BTreeSet<Symbol>,
        initials: BTreeSet<StateId>,
        finals: BTreeSet<StateId>,
        transitions: Vec<Transition>,
    ) -> Self {
        let mut out = vec![Vec::new(); num_states];
        for (i, t) in transitions.iter().enumerate() {
            out[t.src].push(i);
        }
        Fst {
            num_states,
            vocab,
            initials,
            finals,
            transitions,
            out,
        }
    }

    /// The FST with no states. Its domain is empty.
    pub fn empty(vocab: impl IntoIterator<Item = Symbol>) -> Self {
        Self::from_parts(
            0,
            vocab.into_iter().collect(),
            BTreeSet::new(),
            BTreeSet::new(),
            Vec::new(),
        )
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn vocab(&self) -> &BTreeSet<Symbol> {
        &self.vocab
    }

    pub fn initials(&self) -> &BTreeSet<StateId> {
        &self.initials
    }

    pub fn finals(&self) -> &BTreeSet<StateId> {
        &self.finals
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals.contains(&q)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, q: StateId) -> impl Iterator<Item = &Transition> + '_ {
        self.out[q].iter().map(move |&i| &self.transitions[i])
    }

    pub(crate) fn outgoing_indices(&self, q: StateId) -> &[usize] {
        &self.out[q]
    }

    pub fn is_empty(&self) -> bool {
        self.num_states == 0
    }

    pub fn expanded_moves<'a>(
        &'a self,
        t: &'a Transition,
    ) -> impl Iterator<Item = (Symbol, Symbol)> + 'a {
        let shorthand = t.input.is_shorthand();
        let single = (!shorthand).then_some((t.input, t.output));
        let family = self
            .vocab
            .iter()
            .filter(move |_| shorthand)
            .filter_map(move |&s| s.apply_shorthand(t.input).map(|o| (s, o)));
        single.into_iter().chain(family)
    }

    /// Whether `t` can consume the concrete symbol `s`, and with which output.
    pub fn reads(&self, t: &Transition, s: Symbol) -> Option<Symbol> {
        if t.input.is_shorthand() {
            if self.vocab.contains(&s) {
                s.apply_shorthand(t.input)
            } else {
                None
            }
        } else if t.input == s {
            Some(t.output)
        } else {
            None
        }
    }

    /// A shorthand transition that matches nothing in the vocabulary can never fire.
    fn can_fire(&self, t: &Transition) -> bool {
        !t.input.is_shorthand() || self.expanded_moves(t).next().is_some()
    }

    /// Checks the deterministic-FST invariants: single initial state 0,
    /// no epsilon inputs, and at most one applicable transition per
    /// (state, concrete input) after shorthand expansion.
    pub fn check_deterministic(&self) -> Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        if self.initials.len() != 1 || !self.initials.contains(&0) {
            return Err(Error::NotDeterministic(format!(
                "initial states {:?}, expected {{0}}",
                self.initials
            )));
        }
        for q in 0..self.num_states {
            let mut seen = BTreeSet::new();
            for t in self.outgoing(q) {
                if t.input == Symbol::EPS {
                    return Err(Error::NotDeterministic(format!("epsilon input on {t:?}")));
                }
                for (s, _) in self.expanded_moves(t) {
                    if !seen.insert(s) {
                        return Err(Error::NotDeterministic(format!(
                            "state {q} has two transitions reading {s}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.check_deterministic().is_ok()
    }

    /// Keeps the given states in the given order; `order[i]` becomes state `i`.
    fn restrict(&self, order: &[StateId]) -> Fst {
        let mut map = vec![usize::MAX; self.num_states];
        for (new, &old) in order.iter().enumerate() {
            map[old] = new;
        }
        let keep = |q: StateId| map[q] != usize::MAX;
        let transitions = self
            .transitions
            .iter()
            .filter(|t| keep(t.src) && keep(t.dst) && self.can_fire(t))
            .map(|t| Transition::new(map[t.src], t.input, t.output, map[t.dst]))
            .collect();
        Self::from_parts(
            order.len(),
            self.vocab.clone(),
            self.initials
                .iter()
                .filter(|&&q| keep(q))
                .map(|&q| map[q])
                .collect(),
            self.finals
                .iter()
                .filter(|&&q| keep(q))
                .map(|&q| map[q])
                .collect(),
            transitions,
        )
    }

    /// States reachable from an initial state.
    pub fn accessible(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut queue: VecDeque<StateId> = self.initials.iter().copied().collect();
        for &q in &self.initials {
            seen[q] = true;
        }
        while let Some(q) = queue.pop_front() {
            for t in self.outgoing(q) {
                if self.can_fire(t) && !seen[t.dst] {
                    seen[t.dst] = true;
                    queue.push_back(t.dst);
                }
            }
        }
        seen
    }

    /// States from which a final state is reachable.
    pub fn coaccessible(&self) -> Vec<bool> {
        let mut incoming = vec![Vec::new(); self.num_states];
        for t in self.transitions.iter().filter(|t| self.can_fire(t)) {
            incoming[t.dst].push(t.src);
        }
        let mut seen = vec![false; self.num_states];
        let mut queue: VecDeque<StateId> = self.finals.iter().copied().collect();
        for &q in &self.finals {
            seen[q] = true;
        }
        while let Some(q) = queue.pop_front() {
            for &p in &incoming[q] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Drops states that lie on no accepting path, and shorthand transitions
    /// that match nothing in the vocabulary. Initial states come first in the
    /// result; otherwise surviving states keep their relative order.
    pub fn trim(&self) -> Fst {
        let acc = self.accessible();
        let coacc = self.coaccessible();
        let useful = |q: StateId| acc[q] && coacc[q];
        let mut order: Vec<StateId> = self
            .initials
            .iter()
            .copied()
            .filter(|&q| useful(q))
            .collect();
        order.extend((0..self.num_states).filter(|&q| useful(q) && !self.initials.contains(&q)));
        if order.is_empty() {
            return Fst::empty(self.vocab.iter().copied());
        }
        self.restrict(&order)
    }

    /// Same machine with only accessible states (no co-accessibility check).
    pub fn connect_accessible(&self) -> Fst {
        let acc = self.accessible();
        let mut order: Vec<StateId> = self.initials.iter().copied().collect();
        order.extend((0..self.num_states).filter(|&q| acc[q] && !self.initials.contains(&q)));
        self.restrict(&order)
    }

    /// Same machine with a different final-state set.
    pub fn with_finals(&self, finals: impl IntoIterator<Item = StateId>) -> Result<Fst> {
        Fst::new(
            self.num_states,
            self.vocab.clone(),
            self.initials.clone(),
            finals,
            self.transitions.clone(),
        )
    }

    /// Same machine without the listed transitions.
    pub fn without_transitions(&self, removed: &BTreeSet<Transition>) -> Fst {
        let transitions = self
            .transitions
            .iter()
            .filter(|t| !removed.contains(t))
            .copied()
            .collect();
        Self::from_parts(
            self.num_states,
            self.vocab.clone(),
            self.initials.clone(),
            self.finals.clone(),
            transitions,
        )
    }

    /// True iff the transition graph contains a directed cycle.
    pub fn is_cyclic(&self) -> bool {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let mut mark = vec![Mark::New; self.num_states];
        for root in 0..self.num_states {
            if mark[root] != Mark::New {
                continue;
            }
            // iterative DFS with explicit edge cursors
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Open;
            while let Some(&mut (q, ref mut cursor)) = stack.last_mut() {
                if let Some(&ti) = self.out[q].get(*cursor) {
                    *cursor += 1;
                    let t = &self.transitions[ti];
                    if !self.can_fire(t) {
                        continue;
                    }
                    match mark[t.dst] {
                        Mark::Open => return true,
                        Mark::New => {
                            mark[t.dst] = Mark::Open;
                            stack.push((t.dst, 0));
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[q] = Mark::Done;
                    stack.pop();
                }
            }
        }
        false
    }

    /// Replaces every shorthand transition by its concrete expansion.
    pub fn expand_shorthands(&self) -> Fst {
        let transitions = self
            .transitions
            .iter()
            .flat_map(|t| {
                self.expanded_moves(t)
                    .map(move |(i, o)| Transition::new(t.src, i, o, t.dst))
            })
            .collect();
        Self::from_parts(
            self.num_states,
            self.vocab.clone(),
            self.initials.clone(),
            self.finals.clone(),
            transitions,
        )
    }

    /// Disjoint union of `a` and `b` behind a fresh initial state 0 with
    /// epsilon transitions into the former initial states.
    pub fn union_with_fresh_initial(a: &Fst, b: &Fst) -> Fst {
        let off_a = 1;
        let off_b = 1 + a.num_states;
        let mut transitions = Vec::new();
        for &q in &a.initials {
            transitions.push(Transition::new(0, Symbol::EPS, Symbol::EPS, q + off_a));
        }
        for &q in &b.initials {
            transitions.push(Transition::new(0, Symbol::EPS, Symbol::EPS, q + off_b));
        }
        let shift = |t: &Transition, off: usize| {
            Transition::new(t.src + off, t.input, t.output, t.dst + off)
        };
        transitions.extend(a.transitions.iter().map(|t| shift(t, off_a)));
        transitions.extend(b.transitions.iter().map(|t| shift(t, off_b)));
        let finals = a
            .finals
            .iter()
            .map(|q| q + off_a)
            .chain(b.finals.iter().map(|q| q + off_b))
            .collect();
        let vocab = a.vocab.union(&b.vocab).copied().collect();
        Self::from_parts(
            1 + a.num_states + b.num_states,
            vocab,
            BTreeSet::from([0]),
            finals,
            transitions,
        )
    }

    /// Equivalent machine whose only initial state is 0. Several initial
    /// states get a fresh state 0 with epsilon transitions into them.
    pub fn with_single_initial(&self) -> Fst {
        if self.is_empty() || (self.initials.len() == 1 && self.initials.contains(&0)) {
            return self.clone();
        }
        if self.initials.len() == 1 {
            let init = *self.initials.iter().next().unwrap();
            let mut order = vec![init];
            order.extend((0..self.num_states).filter(|&q| q != init));
            return self.restrict(&order);
        }
        let mut transitions: Vec<Transition> = self
            .initials
            .iter()
            .map(|&q| Transition::new(0, Symbol::EPS, Symbol::EPS, q + 1))
            .collect();
        transitions.extend(
            self.transitions
                .iter()
                .map(|t| Transition::new(t.src + 1, t.input, t.output, t.dst + 1)),
        );
        Self::from_parts(
            self.num_states + 1,
            self.vocab.clone(),
            BTreeSet::from([0]),
            self.finals.iter().map(|q| q + 1).collect(),
            transitions,
        )
    }

    /// Structural isomorphism for deterministic machines, matched from the
    /// initial states.
    pub fn deterministic_isomorphic(&self, other: &Fst) -> bool {
        if self.num_states != other.num_states || self.transitions.len() != other.transitions.len()
        {
            return false;
        }
        if self.is_empty() {
            return true;
        }
        let mut map = vec![usize::MAX; self.num_states];
        let mut used = vec![false; other.num_states];
        let (Some(&a0), Some(&b0)) = (self.initials.iter().next(), other.initials.iter().next())
        else {
            return false;
        };
        map[a0] = b0;
        used[b0] = true;
        let mut queue = VecDeque::from([a0]);
        while let Some(q) = queue.pop_front() {
            let p = map[q];
            if self.is_final(q) != other.is_final(p) {
                return false;
            }
            let mut mine: Vec<_> = self.outgoing(q).collect();
            let mut theirs: Vec<_> = other.outgoing(p).collect();
            if mine.len() != theirs.len() {
                return false;
            }
            mine.sort_by_key(|t| (t.input, t.output));
            theirs.sort_by_key(|t| (t.input, t.output));
            for (s, o) in mine.iter().zip(&theirs) {
                if (s.input, s.output) != (o.input, o.output) {
                    return false;
                }
                if map[s.dst] == usize::MAX {
                    if used[o.dst] {
                        return false;
                    }
                    map[s.dst] = o.dst;
                    used[o.dst] = true;
                    queue.push_back(s.dst);
                } else if map[s.dst] != o.dst {
                    return false;
                }
            }
        }
        true
    }
}

/// All strings over `alphabet` of length at most `max_len`, shortest first.
pub fn enumerate_strings(alphabet: &[Symbol], max_len: usize) -> Vec<Vec<Symbol>> {
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * alphabet.len());
        for s in &frontier {
            for &a in alphabet {
                let mut t = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::symbols::{sym, syms};

    /// Deletes leading zeros over {0,1,2}. q0 is initial, q1 final.
    pub fn leading_zero_deleter() -> Fst {
        let (z, o, t) = (sym('0'), sym('1'), sym('2'));
        Fst::new(
            2,
            syms("012"),
            [0],
            [1],
            vec![
                Transition::new(0, z, Symbol::EPS, 0),
                Transition::new(0, o, o, 1),
                Transition::new(0, t, t, 1),
                Transition::new(1, z, z, 1),
                Transition::new(1, o, o, 1),
                Transition::new(1, t, t, 1),
            ],
        )
        .unwrap()
    }

    /// Non-deterministic functional FST: every 0 becomes the last input
    /// symbol, which must be 1 or 2. q1 guesses "ends in 1", q3 "ends in 2".
    pub fn last_symbol_decides() -> Fst {
        let (z, o, t) = (sym('0'), sym('1'), sym('2'));
        let mut tr = Vec::new();
        for (loop_state, fin, last) in [(1, 2, o), (3, 4, t)] {
            for (src, dst) in [(0, loop_state), (loop_state, loop_state)] {
                tr.push(Transition::new(src, z, last, dst));
                tr.push(Transition::new(src, o, o, dst));
                tr.push(Transition::new(src, t, t, dst));
            }
            tr.push(Transition::new(0, last, last, fin));
            tr.push(Transition::new(loop_state, last, last, fin));
        }
        Fst::new(5, syms("012"), [0], [2, 4], tr).unwrap()
    }
}
