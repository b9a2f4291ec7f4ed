//! Random walks over the concrete move graph of an automaton, used to draw
//! strings from its domain.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fst::Fst;
use crate::symbols::Symbol;

/// Explicit graph of concrete moves. Nodes are usually FST states, but any
/// product construction can be expressed this way.
#[derive(Clone, Debug)]
pub struct WalkGraph {
    starts: Vec<usize>,
    accepting: Vec<bool>,
    moves: Vec<Vec<(Symbol, usize)>>,
    // shortest number of moves to an accepting node
    dist: Vec<usize>,
}

impl WalkGraph {
    pub fn new(starts: Vec<usize>, accepting: Vec<bool>, moves: Vec<Vec<(Symbol, usize)>>) -> Self {
        let n = accepting.len();
        let mut incoming = vec![Vec::new(); n];
        for (q, ms) in moves.iter().enumerate() {
            for &(_, d) in ms {
                incoming[d].push(q);
            }
        }
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for q in (0..n).filter(|&q| accepting[q]) {
            dist[q] = 0;
            queue.push_back(q);
        }
        while let Some(q) = queue.pop_front() {
            for &p in &incoming[q] {
                if dist[p] == usize::MAX {
                    dist[p] = dist[q] + 1;
                    queue.push_back(p);
                }
            }
        }
        WalkGraph {
            starts,
            accepting,
            moves,
            dist,
        }
    }

    /// Shorthands are expanded against the vocabulary. Epsilon-input
    /// transitions are not supported.
    pub fn from_fst(fst: &Fst) -> Result<Self> {
        let mut moves = vec![Vec::new(); fst.num_states()];
        for t in fst.transitions() {
            if t.input == Symbol::EPS {
                return Err(Error::Config(
                    "cannot walk an FST with epsilon inputs".into(),
                ));
            }
            moves[t.src].extend(fst.expanded_moves(t).map(|(i, _)| (i, t.dst)));
        }
        let accepting = (0..fst.num_states()).map(|q| fst.is_final(q)).collect();
        Ok(Self::new(
            fst.initials().iter().copied().collect(),
            accepting,
            moves,
        ))
    }

    pub fn num_nodes(&self) -> usize {
        self.accepting.len()
    }

    pub fn moves(&self, q: usize) -> &[(Symbol, usize)] {
        &self.moves[q]
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn distance_to_accept(&self, q: usize) -> Option<usize> {
        (self.dist[q] != usize::MAX).then_some(self.dist[q])
    }

    /// Budgeted walk: only moves that can still reach an accepting node
    /// within `max_len` are taken; at an accepting node past `min_len` the walk
    /// stops with probability `stop_prob`. `None` if the walk got stuck.
    pub fn walk_stop_at_final<R: Rng + ?Sized>(
        &self,
        min_len: usize,
        max_len: usize,
        stop_prob: f64,
        rng: &mut R,
    ) -> Option<Vec<Symbol>> {
        let candidates: Vec<usize> = self
            .starts
            .iter()
            .copied()
            .filter(|&q| self.dist[q] <= max_len)
            .collect();
        let mut q = *candidates.choose(rng)?;
        let mut out = Vec::new();
        let mut options = Vec::new();
        loop {
            let remaining = max_len - out.len();
            let may_stop = self.accepting[q] && out.len() >= min_len;
            options.clear();
            if remaining > 0 {
                options.extend(
                    self.moves[q]
                        .iter()
                        .filter(|&&(_, d)| self.dist[d] < remaining),
                );
            }
            if may_stop && (options.is_empty() || rng.gen_bool(stop_prob)) {
                return Some(out);
            }
            let &(s, d) = options.choose(rng)?;
            out.push(s);
            q = d;
        }
    }

    /// Walk of exactly `len` moves ending in an accepting node, uniform over
    /// the feasible moves at each step. `None` if no such string exists.
    pub fn walk_exact<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Option<Vec<Symbol>> {
        let feasible = self.exact_feasibility(len);
        let candidates: Vec<usize> = self
            .starts
            .iter()
            .copied()
            .filter(|&q| feasible[len][q])
            .collect();
        let mut q = *candidates.choose(rng)?;
        let mut out = Vec::with_capacity(len);
        let mut options = Vec::new();
        for r in (1..=len).rev() {
            options.clear();
            options.extend(self.moves[q].iter().filter(|&&(_, d)| feasible[r - 1][d]));
            let &(s, d) = options.choose(rng)?;
            out.push(s);
            q = d;
        }
        Some(out)
    }

    /// `table[r][q]`: some walk of exactly `r` moves from `q` accepts.
    pub fn exact_feasibility(&self, max_len: usize) -> Vec<Vec<bool>> {
        let mut table = Vec::with_capacity(max_len + 1);
        table.push(self.accepting.clone());
        for r in 1..=max_len {
            let prev: &Vec<bool> = &table[r - 1];
            let row = (0..self.num_nodes())
                .map(|q| self.moves[q].iter().any(|&(_, d)| prev[d]))
                .collect();
            table.push(row);
        }
        table
    }
}
