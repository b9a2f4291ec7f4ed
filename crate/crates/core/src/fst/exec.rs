use serde::{Deserialize, Serialize};

use super::{Fst, StateId};
use crate::error::{Error, Result};
use crate::symbols::Symbol;

/// Result of running a (possibly non-deterministic) FST on one input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transduction {
    /// No accepting path.
    Undefined,
    /// Every accepting path yields this output.
    Output(Vec<Symbol>),
    /// Two accepting paths disagree; the FST is not functional here.
    Ambiguous,
}

impl Transduction {
    pub fn output(self) -> Option<Vec<Symbol>> {
        match self {
            Transduction::Output(o) => Some(o),
            _ => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        !matches!(self, Transduction::Undefined)
    }

    fn merge(self, other: Transduction) -> Transduction {
        use Transduction::*;
        match (self, other) {
            (Undefined, x) | (x, Undefined) => x,
            (Output(a), Output(b)) if a == b => Output(a),
            _ => Ambiguous,
        }
    }

    fn prefixed(self, s: Symbol) -> Transduction {
        match self {
            Transduction::Output(mut o) if s != Symbol::EPS => {
                o.insert(0, s);
                Transduction::Output(o)
            }
            other => other,
        }
    }
}

/// States visited before each input token, plus the state reached at the
/// end of the input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSequence {
    pub states: Vec<StateId>,
}

/// The unique run of a deterministic FST on an accepted input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicRun {
    pub states: StateSequence,
    /// Index into [`Fst::transitions`] of the transition taken at each position.
    pub transitions: Vec<usize>,
    /// Per-position output (possibly epsilon).
    pub outputs: Vec<Symbol>,
}

impl DeterministicRun {
    pub fn output(&self) -> Vec<Symbol> {
        self.outputs
            .iter()
            .copied()
            .filter(|&s| s != Symbol::EPS)
            .collect()
    }
}

#[derive(Clone)]
enum Memo {
    Fresh,
    Open,
    Done(Transduction),
}

impl Fst {
    /// Runs the FST on `input` and reports its output, or why there is none.
    ///
    /// Explores (state, position) pairs with memoization, so the cost is
    /// bounded by the number of pairs times the out-degree. Epsilon-input
    /// cycles are cut: a pair re-entered while still open contributes nothing.
    pub fn transduce(&self, input: &[Symbol]) -> Transduction {
        let width = input.len() + 1;
        let mut memo = vec![Memo::Fresh; self.num_states * width];
        let mut result = Transduction::Undefined;
        for &q in &self.initials {
            result = result.merge(self.eval(q, 0, input, &mut memo));
            if result == Transduction::Ambiguous {
                break;
            }
        }
        result
    }

    fn eval(&self, q: StateId, pos: usize, input: &[Symbol], memo: &mut Vec<Memo>) -> Transduction {
        let key = q * (input.len() + 1) + pos;
        match &memo[key] {
            Memo::Done(r) => return r.clone(),
            Memo::Open => return Transduction::Undefined,
            Memo::Fresh => {}
        }
        memo[key] = Memo::Open;
        let mut acc = if pos == input.len() && self.is_final(q) {
            Transduction::Output(Vec::new())
        } else {
            Transduction::Undefined
        };
        for &ti in self.outgoing_indices(q) {
            if acc == Transduction::Ambiguous {
                break;
            }
            let t = self.transitions[ti];
            let branch = if t.input == Symbol::EPS {
                self.eval(t.dst, pos, input, memo).prefixed(t.output)
            } else if let Some(out) = input.get(pos).and_then(|&s| self.reads(&t, s)) {
                self.eval(t.dst, pos + 1, input, memo).prefixed(out)
            } else {
                continue;
            };
            acc = acc.merge(branch);
        }
        memo[key] = Memo::Done(acc.clone());
        acc
    }

    /// Follows the unique run of a deterministic FST. `Ok(None)` when the run
    /// dies or ends in a non-final state.
    pub fn run_deterministic(&self, input: &[Symbol]) -> Result<Option<DeterministicRun>> {
        self.check_deterministic()?;
        Ok(self.run_unchecked(input))
    }

    /// Like [`Fst::run_deterministic`] without re-validating determinism.
    /// On a non-deterministic machine this takes the first applicable
    /// transition at each step.
    pub fn run_unchecked(&self, input: &[Symbol]) -> Option<DeterministicRun> {
        let mut q = *self.initials.iter().next()?;
        let mut states = Vec::with_capacity(input.len() + 1);
        let mut transitions = Vec::with_capacity(input.len());
        let mut outputs = Vec::with_capacity(input.len());
        states.push(q);
        for &s in input {
            let (ti, out) = self
                .outgoing_indices(q)
                .iter()
                .find_map(|&ti| self.reads(&self.transitions[ti], s).map(|o| (ti, o)))?;
            transitions.push(ti);
            outputs.push(out);
            q = self.transitions[ti].dst;
            states.push(q);
        }
        self.is_final(q).then_some(DeterministicRun {
            states: StateSequence { states },
            transitions,
            outputs,
        })
    }

    /// States visited before each token and before the end-of-sequence
    /// marker. Rejects non-deterministic machines.
    pub fn state_sequence(&self, input: &[Symbol]) -> Result<Option<StateSequence>> {
        Ok(self.run_deterministic(input)?.map(|r| r.states))
    }

    /// Output of a deterministic run, treating anything else as an error.
    pub fn apply(&self, input: &[Symbol]) -> Result<Vec<Symbol>> {
        match self.transduce(input) {
            Transduction::Output(o) => Ok(o),
            Transduction::Undefined => Err(Error::Undefined),
            Transduction::Ambiguous => Err(Error::NotDeterministic("ambiguous output".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{enumerate_strings, Transition};
    use super::*;
    use crate::symbols::{sym, syms};

    #[test]
    fn last_symbol_decides_on_001() {
        let f = last_symbol_decides();
        assert_eq!(f.transduce(&syms("001")), Transduction::Output(syms("111")));
        assert_eq!(
            f.transduce(&syms("0102")),
            Transduction::Output(syms("2122"))
        );
        assert_eq!(f.transduce(&syms("00")), Transduction::Undefined);
    }

    #[test]
    fn leading_zeros_deleted() {
        let f = leading_zero_deleter();
        assert_eq!(f.transduce(&syms("0021")), Transduction::Output(syms("21")));
        assert_eq!(f.transduce(&syms("000")), Transduction::Undefined);
    }

    #[test]
    fn empty_input_on_final_initial() {
        let f = Fst::new(1, syms("a"), [0], [0], vec![]).unwrap();
        assert_eq!(f.transduce(&[]), Transduction::Output(vec![]));
        assert_eq!(
            f.state_sequence(&[]).unwrap(),
            Some(StateSequence { states: vec![0] })
        );
    }

    #[test]
    fn ambiguity_is_witnessed() {
        let a = sym('a');
        let f = Fst::new(
            2,
            syms("ab"),
            [0],
            [1],
            vec![
                Transition::new(0, a, a, 1),
                Transition::new(0, a, sym('b'), 1),
            ],
        )
        .unwrap();
        assert_eq!(f.transduce(&syms("a")), Transduction::Ambiguous);
    }

    #[test]
    fn epsilon_output_paths_agree() {
        // two paths: a:x then b:eps, or a:eps then b:x
        let (a, b, x) = (sym('a'), sym('b'), sym('x'));
        let f = Fst::new(
            4,
            syms("abx"),
            [0],
            [3],
            vec![
                Transition::new(0, a, x, 1),
                Transition::new(1, b, Symbol::EPS, 3),
                Transition::new(0, a, Symbol::EPS, 2),
                Transition::new(2, b, x, 3),
            ],
        )
        .unwrap();
        assert_eq!(f.transduce(&syms("ab")), Transduction::Output(syms("x")));
    }

    #[test]
    fn epsilon_cycle_terminates() {
        let a = sym('a');
        let f = Fst::new(
            2,
            syms("a"),
            [0],
            [1],
            vec![
                Transition::new(0, Symbol::EPS, Symbol::EPS, 1),
                Transition::new(1, Symbol::EPS, Symbol::EPS, 0),
                Transition::new(1, a, a, 1),
            ],
        )
        .unwrap();
        assert_eq!(f.transduce(&syms("aa")), Transduction::Output(syms("aa")));
    }

    #[test]
    fn state_sequence_on_leading_zeros() {
        let f = leading_zero_deleter();
        assert_eq!(
            f.state_sequence(&syms("001")).unwrap().unwrap().states,
            vec![0, 0, 0, 1]
        );
        assert_eq!(f.state_sequence(&syms("0a")).unwrap(), None);
        assert!(last_symbol_decides().state_sequence(&syms("01")).is_err());
    }

    #[test]
    fn run_outputs_concatenate_to_transduction() {
        let f = leading_zero_deleter();
        for x in enumerate_strings(&syms("012"), 5) {
            match f.run_deterministic(&x).unwrap() {
                Some(run) => {
                    assert_eq!(run.states.states.len(), x.len() + 1);
                    assert_eq!(f.transduce(&x), Transduction::Output(run.output()));
                }
                None => assert_eq!(f.transduce(&x), Transduction::Undefined),
            }
        }
    }

    #[test]
    fn shorthand_expanded_on_the_fly() {
        let f = Fst::new(
            1,
            syms("abC"),
            [0],
            [0],
            vec![Transition::new(
                0,
                Symbol::LOWER_TO_UPPER,
                Symbol::LOWER_TO_UPPER,
                0,
            )],
        )
        .unwrap();
        assert_eq!(f.transduce(&syms("ba")), Transduction::Output(syms("BA")));
        assert_eq!(f.transduce(&syms("bC")), Transduction::Undefined);
        // 'c' is not in the vocabulary
        assert_eq!(f.transduce(&syms("c")), Transduction::Undefined);
    }
}
