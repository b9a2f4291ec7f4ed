use std::collections::{BTreeSet, HashMap};

use super::{Fst, Transition};
use crate::error::Result;
use crate::symbols::Symbol;

/// Current block plus sorted outgoing (input, output, target block).
type Signature = (usize, Vec<(Symbol, Symbol, usize)>);

/// Merges equivalent states of a deterministic FST.
///
/// The machine is trimmed first. States then start out split by finality
/// and blocks are refined by the signature (input label, output label,
/// target block) of their outgoing transitions until the partition is
/// stable. Shorthand labels are compared as atomic labels. Block numbering
/// follows the lowest original state in each block, so state 0 stays the
/// initial state and re-minimizing a minimized machine is the identity.
pub fn minimize(fst: &Fst) -> Result<Fst> {
    fst.check_deterministic()?;
    let trimmed = fst.trim();
    if trimmed.is_empty() {
        return Ok(trimmed);
    }
    let n = trimmed.num_states();
    let mut block: Vec<usize> = (0..n).map(|q| usize::from(trimmed.is_final(q))).collect();
    let mut num_blocks = renumber(&mut block);
    loop {
        let signatures: Vec<Signature> = (0..n)
            .map(|q| {
                let mut sig: Vec<_> = trimmed
                    .outgoing(q)
                    .map(|t| (t.input, t.output, block[t.dst]))
                    .collect();
                sig.sort_unstable();
                (block[q], sig)
            })
            .collect();
        let mut ids: HashMap<&Signature, usize> = HashMap::new();
        let mut next: Vec<usize> = signatures
            .iter()
            .map(|s| {
                let len = ids.len();
                *ids.entry(s).or_insert(len)
            })
            .collect();
        let refined = renumber(&mut next);
        block = next;
        if refined == num_blocks {
            break;
        }
        num_blocks = refined;
    }

    let mut transitions = BTreeSet::new();
    let mut seen = vec![false; num_blocks];
    for q in 0..n {
        if std::mem::replace(&mut seen[block[q]], true) {
            continue;
        }
        for t in trimmed.outgoing(q) {
            transitions.insert(Transition::new(block[q], t.input, t.output, block[t.dst]));
        }
    }
    let finals: Vec<usize> = trimmed.finals().iter().map(|&q| block[q]).collect();
    let mut transitions: Vec<Transition> = transitions.into_iter().collect();
    transitions.sort_by_key(|t| (t.src, t.input, t.output, t.dst));
    Fst::new(
        num_blocks,
        trimmed.vocab().iter().copied(),
        [block[0]],
        finals,
        transitions,
    )
}

/// Renames block ids in order of first appearance; returns the block count.
fn renumber(block: &mut [usize]) -> usize {
    let mut map = HashMap::new();
    for b in block.iter_mut() {
        let len = map.len();
        *b = *map.entry(*b).or_insert(len);
    }
    map.len()
}
