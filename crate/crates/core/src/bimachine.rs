//! Bimachines: a left-to-right DFA, a right-to-left DFA and an output
//! function over (left state, symbol, right state). Every bimachine defines a
//! functional relation, and compiles to an equivalent non-deterministic FST
//! through a product construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fst::{Fst, StateId, Transition};
use crate::symbols::Symbol;

/// A deterministic automaton with a partial transition function. All states
/// are accepting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    num_states: usize,
    vocab: Vec<Symbol>,
    initial: StateId,
    // dense (state, vocab index) table
    delta: Vec<Option<StateId>>,
}

impl Dfa {
    pub fn new(
        num_states: usize,
        vocab: impl IntoIterator<Item = Symbol>,
        initial: StateId,
        edges: impl IntoIterator<Item = (StateId, Symbol, StateId)>,
    ) -> Result<Self> {
        let mut vocab: Vec<Symbol> = vocab.into_iter().collect();
        vocab.sort_unstable();
        vocab.dedup();
        if num_states == 0 || initial >= num_states {
            return Err(Error::Config(format!(
                "DFA needs initial state < num_states ({initial} vs {num_states})"
            )));
        }
        let mut delta = vec![None; num_states * vocab.len()];
        for (src, s, dst) in edges {
            let vi = vocab
                .binary_search(&s)
                .map_err(|_| Error::Config(format!("symbol {s} is not in the DFA vocabulary")))?;
            if src >= num_states || dst >= num_states {
                return Err(Error::Config(format!(
                    "DFA edge {src} -> {dst} out of range"
                )));
            }
            let slot = &mut delta[src * vocab.len() + vi];
            if slot.is_some_and(|d| d != dst) {
                return Err(Error::NotDeterministic(format!(
                    "DFA state {src} has two edges on {s}"
                )));
            }
            *slot = Some(dst);
        }
        Ok(Dfa {
            num_states,
            vocab,
            initial,
            delta,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn vocab(&self) -> &[Symbol] {
        &self.vocab
    }

    pub fn step(&self, q: StateId, s: Symbol) -> Option<StateId> {
        let vi = self.vocab.binary_search(&s).ok()?;
        self.delta[q * self.vocab.len() + vi]
    }

    pub fn edges(&self) -> impl Iterator<Item = (StateId, Symbol, StateId)> + '_ {
        let width = self.vocab.len();
        self.delta
            .iter()
            .enumerate()
            .filter_map(move |(i, d)| d.map(|dst| (i / width, self.vocab[i % width], dst)))
    }

    /// States visited while reading `input` from left to right, starting
    /// with the initial state. `None` when the run dies.
    pub fn trace<'a>(&self, input: impl IntoIterator<Item = &'a Symbol>) -> Option<Vec<StateId>> {
        let mut q = self.initial;
        let mut states = vec![q];
        for &s in input {
            q = self.step(q, s)?;
            states.push(q);
        }
        Some(states)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bimachine {
    left: Dfa,
    right: Dfa,
    vocab: Vec<Symbol>,
    // dense [left][vocab][right] table; Symbol::EPS for empty output
    psi: Vec<Symbol>,
}

impl Bimachine {
    /// `psi(ql, s, qr)` is called for every triple over the shared vocabulary.
    pub fn new(
        left: Dfa,
        right: Dfa,
        psi: impl Fn(StateId, Symbol, StateId) -> Symbol,
    ) -> Result<Self> {
        if left.vocab != right.vocab {
            return Err(Error::Config(
                "left and right DFAs must share a vocabulary".into(),
            ));
        }
        let vocab = left.vocab.clone();
        let mut table = Vec::with_capacity(left.num_states * vocab.len() * right.num_states);
        for ql in 0..left.num_states {
            for &s in &vocab {
                for qr in 0..right.num_states {
                    let out = psi(ql, s, qr);
                    if !(out.is_concrete() || out == Symbol::EPS) {
                        return Err(Error::Config(format!(
                            "psi output {} must be concrete or epsilon",
                            out.0
                        )));
                    }
                    table.push(out);
                }
            }
        }
        Ok(Bimachine {
            left,
            right,
            vocab,
            psi: table,
        })
    }

    pub fn left(&self) -> &Dfa {
        &self.left
    }

    pub fn right(&self) -> &Dfa {
        &self.right
    }

    pub fn vocab(&self) -> &[Symbol] {
        &self.vocab
    }

    pub fn psi(&self, ql: StateId, s: Symbol, qr: StateId) -> Option<Symbol> {
        let vi = self.vocab.binary_search(&s).ok()?;
        let nr = self.right.num_states;
        self.psi
            .get((ql * self.vocab.len() + vi) * nr + qr)
            .copied()
    }

    /// Runs the left DFA forwards and the right DFA backwards, then emits
    /// `psi(left[i-1], x_i, right[n-i])` for every position `i`.
    pub fn run(&self, input: &[Symbol]) -> Option<Vec<Symbol>> {
        let left = self.left.trace(input)?;
        let right = self.right.trace(input.iter().rev())?;
        let n = input.len();
        let out = (1..=n)
            .filter_map(|i| {
                let o = self
                    .psi(left[i - 1], input[i - 1], right[n - i])
                    .expect("symbol in vocab");
                (o != Symbol::EPS).then_some(o)
            })
            .collect();
        Some(out)
    }

    /// Product construction without trimming: states `(ql, qr)` are numbered
    /// `ql * |Q^R| + qr`.
    pub fn to_fst_untrimmed(&self) -> Fst {
        let nl = self.left.num_states;
        let nr = self.right.num_states;
        let id = |ql: StateId, qr: StateId| ql * nr + qr;
        let mut transitions = Vec::new();
        for (ql, s, ql2) in self.left.edges() {
            for (qr2, s2, qr) in self.right.edges() {
                if s2 != s {
                    continue;
                }
                let out = self.psi(ql, s, qr2).expect("symbol in vocab");
                transitions.push(Transition::new(id(ql, qr), s, out, id(ql2, qr2)));
            }
        }
        let initials: Vec<_> = (0..nr).map(|qr| id(self.left.initial, qr)).collect();
        let finals: Vec<_> = (0..nl).map(|ql| id(ql, self.right.initial)).collect();
        Fst::new(
            nl * nr,
            self.vocab.iter().copied(),
            initials,
            finals,
            transitions,
        )
        .expect("product is well-formed")
    }

    /// Equivalent functional FST (trimmed, possibly several initial states).
    pub fn to_fst(&self) -> Fst {
        self.to_fst_untrimmed().trim()
    }

    pub fn to_json(&self) -> BimachineJson {
        let dfa = |d: &Dfa| DfaJson {
            num_states: d.num_states,
            initial: d.initial,
            transitions: d.edges().map(|(a, s, b)| (a, s.0, b)).collect(),
        };
        let mut psi = Vec::new();
        for ql in 0..self.left.num_states {
            for &s in &self.vocab {
                for qr in 0..self.right.num_states {
                    psi.push((ql, s.0, qr, self.psi(ql, s, qr).unwrap().0));
                }
            }
        }
        BimachineJson {
            version: 1,
            vocab: self.vocab.iter().map(|s| s.0).collect(),
            left: dfa(&self.left),
            right: dfa(&self.right),
            psi,
        }
    }

    pub fn from_json(j: &BimachineJson) -> Result<Self> {
        if j.version != 1 {
            return Err(Error::Config(format!(
                "unsupported bimachine version {}",
                j.version
            )));
        }
        let vocab: Vec<Symbol> = j.vocab.iter().map(|&s| Symbol(s)).collect();
        let dfa = |d: &DfaJson| {
            Dfa::new(
                d.num_states,
                vocab.iter().copied(),
                d.initial,
                d.transitions.iter().map(|&(a, s, b)| (a, Symbol(s), b)),
            )
        };
        let (left, right) = (dfa(&j.left)?, dfa(&j.right)?);
        let mut table = std::collections::HashMap::new();
        for &(ql, s, qr, o) in &j.psi {
            table.insert((ql, s, qr), Symbol(o));
        }
        let missing = std::cell::Cell::new(None);
        let bm = Bimachine::new(left, right, |ql, s, qr| {
            table.get(&(ql, s.0, qr)).copied().unwrap_or_else(|| {
                missing.set(Some((ql, s.0, qr)));
                Symbol::EPS
            })
        })?;
        if let Some(triple) = missing.get() {
            return Err(Error::Config(format!("psi undefined for {triple:?}")));
        }
        Ok(bm)
    }
}

/// Versioned JSON form of a bimachine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BimachineJson {
    pub version: u32,
    pub vocab: Vec<u32>,
    pub left: DfaJson,
    pub right: DfaJson,
    pub psi: Vec<(usize, u32, usize, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfaJson {
    pub num_states: usize,
    pub initial: usize,
    pub transitions: Vec<(usize, u32, usize)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::{enumerate_strings, Transduction};
    use crate::symbols::{sym, syms};

    fn identity_bimachine(vocab: &str) -> Bimachine {
        let v = syms(vocab);
        let loops = |d: &[Symbol]| d.iter().map(|&s| (0, s, 0)).collect::<Vec<_>>();
        let left = Dfa::new(1, v.clone(), 0, loops(&v)).unwrap();
        let right = Dfa::new(1, v.clone(), 0, loops(&v)).unwrap();
        Bimachine::new(left, right, |_, s, _| s).unwrap()
    }

    /// Right DFA remembers the last symbol (state 1: last was '1', state 2:
    /// last was '2'); psi rewrites 0 accordingly.
    fn last_symbol_bimachine() -> Bimachine {
        let v = syms("012");
        let left = Dfa::new(1, v.clone(), 0, v.iter().map(|&s| (0, s, 0))).unwrap();
        let (z, o, t) = (sym('0'), sym('1'), sym('2'));
        let right = Dfa::new(
            3,
            v.clone(),
            0,
            [
                (0, o, 1),
                (0, t, 2),
                (1, z, 1),
                (1, o, 1),
                (1, t, 1),
                (2, z, 2),
                (2, o, 2),
                (2, t, 2),
            ],
        )
        .unwrap();
        Bimachine::new(left, right, move |_, s, qr| {
            // qr is the right state after reading the suffix strictly after s;
            // qr == 0 means s is the last symbol.
            match (s == z, qr) {
                (true, 1) => o,
                (true, 2) => t,
                _ => s,
            }
        })
        .unwrap()
    }

    #[test]
    fn identity_run() {
        let bm = identity_bimachine("abc");
        assert_eq!(bm.run(&syms("abc")), Some(syms("abc")));
        assert_eq!(bm.run(&[]), Some(vec![]));
        let f = bm.to_fst();
        for x in enumerate_strings(&syms("abc"), 6) {
            assert_eq!(f.transduce(&x), Transduction::Output(x.clone()));
        }
    }

    #[test]
    fn last_symbol_decides_compiles() {
        let bm = last_symbol_bimachine();
        assert_eq!(bm.run(&syms("001")), Some(syms("111")));
        assert_eq!(bm.run(&syms("0202")), Some(syms("2222")));
        let f = bm.to_fst();
        assert!(!f.is_deterministic());
        assert_eq!(f.transduce(&syms("001")), Transduction::Output(syms("111")));
        for x in enumerate_strings(&syms("012"), 6) {
            let expect = bm
                .run(&x)
                .map_or(Transduction::Undefined, Transduction::Output);
            assert_eq!(f.transduce(&x), expect, "input {x:?}");
        }
    }

    #[test]
    fn product_state_count() {
        let bm = last_symbol_bimachine();
        assert_eq!(bm.to_fst_untrimmed().num_states(), 3);
        assert!(bm.to_fst().num_states() <= 3);
    }

    #[test]
    fn partial_delta_makes_run_partial() {
        let v = syms("ab");
        let left = Dfa::new(1, v.clone(), 0, [(0, sym('a'), 0)]).unwrap();
        let right = Dfa::new(1, v.clone(), 0, [(0, sym('a'), 0), (0, sym('b'), 0)]).unwrap();
        let bm = Bimachine::new(left, right, |_, s, _| s).unwrap();
        assert_eq!(bm.run(&syms("ab")), None);
        assert_eq!(bm.to_fst().transduce(&syms("ab")), Transduction::Undefined);
        assert_eq!(bm.run(&syms("aa")), Some(syms("aa")));
    }

    #[test]
    fn json_roundtrip() {
        let bm = last_symbol_bimachine();
        let text = serde_json::to_string(&bm.to_json()).unwrap();
        let back = Bimachine::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, bm);
    }
}
