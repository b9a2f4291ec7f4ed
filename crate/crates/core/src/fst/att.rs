//! AT&T / OpenFST text format.
//!
//! Transition lines are `src dst in out`, final lines are `state`. The
//! source of the first transition line is the start state; a machine with no
//! transitions has start state 0. Labels are single characters of the global
//! table or one of the reserved tokens `<eps>`, `<id>`, `<l2u>`, `<u2l>`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{Fst, Transition};
use crate::error::{Error, Result};
use crate::symbols::Symbol;

/// Serializes a single-initial FST. The initial state must be 0.
pub fn write_att(fst: &Fst) -> Result<String> {
    if fst.is_empty() {
        return Ok(String::new());
    }
    if fst.initials() != &BTreeSet::from([0]) {
        return Err(Error::Config(
            "AT&T output needs a single initial state 0".into(),
        ));
    }
    let mut rows: Vec<&Transition> = fst.transitions().iter().collect();
    rows.sort_by_key(|t| (t.src, t.input, t.output, t.dst));
    let mut out = String::new();
    for t in rows {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            t.src,
            t.dst,
            t.input.att_token(),
            t.output.att_token()
        );
    }
    for q in fst.finals() {
        let _ = writeln!(out, "{q}");
    }
    // states with no transitions and no finality still count towards num_states
    if fst.num_states() > 0 {
        let mentioned = fst
            .transitions()
            .iter()
            .flat_map(|t| [t.src, t.dst])
            .chain(fst.finals().iter().copied())
            .max()
            .unwrap_or(0);
        if mentioned + 1 < fst.num_states() {
            let _ = writeln!(out, "# num_states {}", fst.num_states());
        }
    }
    Ok(out)
}

/// Parses the AT&T text format. Weights in a fifth column (or second column
/// of final lines) are ignored. Lines starting with `#` are comments, except
/// for the `# num_states N` hint written by [`write_att`].
pub fn read_att(text: &str, vocab: impl IntoIterator<Item = Symbol>) -> Result<Fst> {
    let mut transitions = Vec::new();
    let mut finals = Vec::new();
    let mut max_state: Option<usize> = None;
    let mut hinted = 0usize;
    let mut start = None;
    let parse_state = |tok: &str, line: usize| -> Result<usize> {
        tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad state id {tok:?}"),
        })
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        if let Some(rest) = raw.strip_prefix('#') {
            if let Some(n) = rest.trim().strip_prefix("num_states") {
                hinted = n.trim().parse().map_err(|_| Error::Parse {
                    line,
                    msg: "bad num_states hint".into(),
                })?;
            }
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.len() {
            1 | 2 => {
                let q = parse_state(fields[0], line)?;
                finals.push(q);
                max_state = max_state.max(Some(q));
            }
            4 | 5 => {
                let src = parse_state(fields[0], line)?;
                let dst = parse_state(fields[1], line)?;
                let label = |tok: &str| {
                    Symbol::from_att_token(tok).ok_or_else(|| Error::Parse {
                        line,
                        msg: format!("unknown label {tok:?}"),
                    })
                };
                transitions.push(Transition::new(
                    src,
                    label(fields[2])?,
                    label(fields[3])?,
                    dst,
                ));
                start.get_or_insert(src);
                max_state = max_state.max(Some(src.max(dst)));
            }
            n => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 1, 2, 4 or 5 fields, found {n}"),
                })
            }
        }
    }
    let Some(max_state) = max_state else {
        return Ok(Fst::empty(vocab));
    };
    let num_states = (max_state + 1).max(hinted);
    Fst::new(num_states, vocab, [start.unwrap_or(0)], finals, transitions)
}
