use std::collections::BTreeSet;

use proptest::prelude::*;
use sipforge::fst::{enumerate_strings, read_att, write_att};
use sipforge::sampling::{gen_det_fst, sample_io_pairs, task_rng, DetFstConfig};
use sipforge::symbols::syms;
use sipforge::{decode_fst, encode_fst, minimize, Fst, Symbol, Transduction, Transition};

const LABELS: [Symbol; 7] = [
    Symbol(0),
    Symbol(0),
    Symbol(0),
    Symbol(0),
    Symbol::ID,
    Symbol::LOWER_TO_UPPER,
    Symbol::UPPER_TO_LOWER,
];

fn alphabet() -> Vec<Symbol> {
    syms("abAB")
}

/// Random machine without epsilon inputs; possibly non-deterministic.
fn raw_fst() -> impl Strategy<Value = Fst> {
    (1usize..=4).prop_flat_map(|n| {
        let tr = (0..n, 0usize..LABELS.len(), 0usize..4, 0usize..5, 0..n);
        (
            Just(n),
            proptest::collection::vec(tr, 0..10),
            proptest::collection::btree_set(0..n, 1..=n),
            proptest::collection::btree_set(0..n, 0..=n),
        )
            .prop_map(|(n, raw, initials, finals)| {
                let ab = alphabet();
                let transitions = raw
                    .into_iter()
                    .map(|(src, label, sym_in, sym_out, dst)| {
                        let input = if LABELS[label].is_shorthand() {
                            LABELS[label]
                        } else {
                            ab[sym_in]
                        };
                        let output = if input.is_shorthand() {
                            input
                        } else if sym_out == 4 {
                            Symbol::EPS
                        } else {
                            ab[sym_out]
                        };
                        Transition::new(src, input, output, dst)
                    })
                    .collect();
                Fst::new(n, ab, initials, finals, transitions).unwrap()
            })
    })
}

fn det_fst() -> impl Strategy<Value = Fst> {
    (any::<u64>(), 1usize..=5, 1usize..=5, 1usize..=4).prop_map(|(seed, n, f, v)| {
        let cfg = DetFstConfig::new(n, f.min(n), alphabet()[..v].to_vec());
        gen_det_fst(&cfg, &mut task_rng(seed, 0)).unwrap()
    })
}

/// Outputs of every accepting path, by exhaustive path enumeration.
fn path_oracle(fst: &Fst, input: &[Symbol]) -> Transduction {
    fn go(
        fst: &Fst,
        q: usize,
        rest: &[Symbol],
        out: &mut Vec<Symbol>,
        acc: &mut BTreeSet<Vec<Symbol>>,
    ) {
        if rest.is_empty() {
            if fst.is_final(q) {
                acc.insert(out.clone());
            }
            return;
        }
        for t in fst.outgoing(q) {
            for (i, o) in fst.expanded_moves(t) {
                if i == rest[0] {
                    let pushed = o != Symbol::EPS;
                    if pushed {
                        out.push(o);
                    }
                    go(fst, t.dst, &rest[1..], out, acc);
                    if pushed {
                        out.pop();
                    }
                }
            }
        }
    }
    let mut acc = BTreeSet::new();
    for &q in fst.initials() {
        go(fst, q, input, &mut Vec::new(), &mut acc);
    }
    match acc.len() {
        0 => Transduction::Undefined,
        1 => Transduction::Output(acc.into_iter().next().unwrap()),
        _ => Transduction::Ambiguous,
    }
}

fn agree_up_to(a: &Fst, b: &Fst, max_len: usize) -> Result<(), TestCaseError> {
    for x in enumerate_strings(&alphabet(), max_len) {
        prop_assert_eq!(a.transduce(&x), b.transduce(&x), "input {:?}", x);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn transduce_matches_path_enumeration(f in raw_fst()) {
        for x in enumerate_strings(&alphabet(), 4) {
            prop_assert_eq!(f.transduce(&x), path_oracle(&f, &x));
        }
    }

    #[test]
    fn deterministic_machines_are_never_ambiguous(f in det_fst(), seed in any::<u64>()) {
        prop_assert!(f.is_deterministic());
        prop_assert!(f.is_cyclic());
        let mut rng = task_rng(seed, 1);
        for x in enumerate_strings(&alphabet(), 3) {
            prop_assert_ne!(f.transduce(&x), Transduction::Ambiguous);
        }
        if let Ok(pairs) = sample_io_pairs(&f, 5, 1, 12, &mut rng) {
            for (x, y) in pairs {
                prop_assert_eq!(f.transduce(&x), Transduction::Output(y));
            }
        }
    }

    #[test]
    fn run_outputs_concatenate_to_transduction(f in det_fst()) {
        for x in enumerate_strings(&alphabet(), 4) {
            let run = f.run_deterministic(&x).unwrap();
            match (run, f.transduce(&x)) {
                (Some(run), Transduction::Output(y)) => {
                    prop_assert_eq!(run.states.states.len(), x.len() + 1);
                    prop_assert_eq!(run.output(), y);
                    let seq = f.state_sequence(&x).unwrap().unwrap();
                    prop_assert_eq!(seq, run.states);
                }
                (None, Transduction::Undefined) => {}
                (r, t) => prop_assert!(false, "run {:?} vs transduction {:?}", r, t),
            }
        }
    }

    #[test]
    fn trim_is_idempotent_and_preserves_semantics(f in raw_fst()) {
        let t = f.trim();
        prop_assert_eq!(t.trim(), t.clone());
        prop_assert!(t.num_states() <= f.num_states());
        agree_up_to(&f, &t, 4)?;
    }

    #[test]
    fn expansion_preserves_semantics(f in raw_fst()) {
        let e = f.expand_shorthands();
        prop_assert!(e.transitions().iter().all(|t| !t.input.is_shorthand()));
        agree_up_to(&f, &e, 4)?;
    }

    #[test]
    fn union_merges_both_sides(a in raw_fst(), b in raw_fst()) {
        let u = Fst::union_with_fresh_initial(&a, &b);
        for x in enumerate_strings(&alphabet(), 3) {
            let want = match (a.transduce(&x), b.transduce(&x)) {
                (Transduction::Undefined, y) | (y, Transduction::Undefined) => y,
                (Transduction::Output(p), Transduction::Output(q)) if p == q => Transduction::Output(p),
                _ => Transduction::Ambiguous,
            };
            prop_assert_eq!(u.transduce(&x), want);
        }
    }

    #[test]
    fn single_initial_form_preserves_semantics(f in raw_fst()) {
        let s = f.with_single_initial();
        prop_assert!(s.initials().len() <= 1);
        agree_up_to(&f, &s, 3)?;
    }

    #[test]
    fn minimization_is_sound(f in det_fst()) {
        let m = minimize(&f).unwrap();
        prop_assert!(m.num_states() <= f.num_states());
        prop_assert!(m.is_deterministic());
        agree_up_to(&f, &m, 5)?;
        prop_assert!(minimize(&m).unwrap().deterministic_isomorphic(&m));
    }

    #[test]
    fn encoding_roundtrip(f in det_fst()) {
        let enc = encode_fst(&f).unwrap();
        for w in enc.rows.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        let finals: Vec<usize> = f.finals().iter().copied().collect();
        let back = decode_fst(&enc, f.num_states(), &finals).unwrap();
        prop_assert_eq!(encode_fst(&back).unwrap(), enc);
        let full = sipforge::encoding::decode_fst_with_vocab(&encode_fst(&f).unwrap(), f.num_states(), &finals, f.vocab().iter().copied()).unwrap();
        agree_up_to(&f, &full, 4)?;
    }

    #[test]
    fn att_roundtrip(f in det_fst()) {
        let text = write_att(&f).unwrap();
        let back = read_att(&text, f.vocab().iter().copied()).unwrap();
        prop_assert_eq!(write_att(&back).unwrap(), text);
        agree_up_to(&f, &back, 4)?;
    }
}
