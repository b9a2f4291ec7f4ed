//! Sequence metrics and state-probing utilities.

use std::fmt;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fst::{Fst, StateId};
use crate::symbols::Symbol;

/// Unit-cost Levenshtein distance.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub count: usize,
    pub seq_accuracy: f64,
    pub mean_edit_distance: f64,
    /// Total edit distance over total gold length.
    pub per: f64,
    /// Mean of per-example edit distance over gold length.
    pub per_macro: f64,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20}{:>12}", "examples", self.count)?;
        writeln!(f, "{:<20}{:>12.4}", "seq_accuracy", self.seq_accuracy)?;
        writeln!(
            f,
            "{:<20}{:>12.4}",
            "mean_edit_distance", self.mean_edit_distance
        )?;
        writeln!(f, "{:<20}{:>12.4}", "per", self.per)?;
        write!(f, "{:<20}{:>12.4}", "per_macro", self.per_macro)
    }
}

/// Scores predictions against golds character by character.
pub fn evaluate<S: AsRef<str>, G: AsRef<str>>(
    predictions: &[S],
    golds: &[G],
) -> Result<EvalReport> {
    if predictions.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: golds.len(),
        });
    }
    let n = golds.len();
    let mut correct = 0usize;
    let mut total_ed = 0usize;
    let mut total_gold = 0usize;
    let mut macro_sum = 0.0;
    for (p, g) in predictions.iter().zip(golds) {
        let p: Vec<char> = p.as_ref().chars().collect();
        let g: Vec<char> = g.as_ref().chars().collect();
        let ed = edit_distance(&p, &g);
        correct += usize::from(ed == 0);
        total_ed += ed;
        total_gold += g.len();
        macro_sum += if g.is_empty() {
            ed as f64
        } else {
            ed as f64 / g.len() as f64
        };
    }
    let div = |a: f64, b: usize| if b == 0 { 0.0 } else { a / b as f64 };
    Ok(EvalReport {
        count: n,
        seq_accuracy: div(correct as f64, n),
        mean_edit_distance: div(total_ed as f64, n),
        per: div(total_ed as f64, total_gold),
        per_macro: div(macro_sum, n),
    })
}

/// Random state guess per position: any state with an outgoing transition
/// that reads the token, and any final state for the end-of-sequence slot.
pub fn heuristic_probe_baseline<R: Rng + ?Sized>(
    fst: &Fst,
    input: &[Symbol],
    rng: &mut R,
) -> Vec<StateId> {
    let readers = |s: Symbol| -> Vec<StateId> {
        (0..fst.num_states())
            .filter(|&q| fst.outgoing(q).any(|t| fst.reads(t, s).is_some()))
            .collect()
    };
    let finals: Vec<StateId> = fst.finals().iter().copied().collect();
    let mut out: Vec<StateId> = input
        .iter()
        .map(|&s| *readers(s).choose(rng).unwrap_or(&0))
        .collect();
    out.push(*finals.choose(rng).unwrap_or(&0));
    out
}

/// Token-level and whole-sequence accuracy of predicted state sequences.
pub fn sequence_accuracy(pred: &[Vec<StateId>], gold: &[Vec<StateId>]) -> Result<(f64, f64)> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    let mut hits = 0usize;
    let mut tokens = 0usize;
    let mut whole = 0usize;
    for (p, g) in pred.iter().zip(gold) {
        if p.len() != g.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: g.len(),
            });
        }
        let h = p.iter().zip(g).filter(|(a, b)| a == b).count();
        hits += h;
        tokens += g.len();
        whole += usize::from(h == g.len());
    }
    let token = if tokens == 0 {
        0.0
    } else {
        hits as f64 / tokens as f64
    };
    let seq = if gold.is_empty() {
        0.0
    } else {
        whole as f64 / gold.len() as f64
    };
    Ok((token, seq))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub token_accuracy: f64,
    pub whole_sequence_accuracy: f64,
    /// `matching[p]` is the gold state that predicted id `p` is mapped to.
    pub matching: Vec<StateId>,
}

pub const MAX_ISOMORPHISM_STATES: usize = 8;

/// Relabeling of predicted state ids that maximizes token accuracy, found
/// by scanning all permutations. Among equally good relabelings the
/// lexicographically smallest wins, so the identity is preferred.
pub fn best_isomorphism_match(
    pred: &[Vec<StateId>],
    gold: &[Vec<StateId>],
    num_states: usize,
) -> Result<ProbeReport> {
    if num_states > MAX_ISOMORPHISM_STATES {
        return Err(Error::Config(format!(
            "at most {MAX_ISOMORPHISM_STATES} states supported, got {num_states}"
        )));
    }
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    // co-occurrence counts[p][g]
    let mut counts = vec![vec![0usize; num_states]; num_states];
    for (p, g) in pred.iter().zip(gold) {
        if p.len() != g.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: g.len(),
            });
        }
        for (&a, &b) in p.iter().zip(g) {
            if a >= num_states || b >= num_states {
                return Err(Error::Config(format!("state id {} out of range", a.max(b))));
            }
            counts[a][b] += 1;
        }
    }
    let mut best: Option<(usize, Vec<StateId>)> = None;
    for perm in (0..num_states).permutations(num_states) {
        let score: usize = perm.iter().enumerate().map(|(p, &g)| counts[p][g]).sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, perm));
        }
    }
    let matching = best.map(|(_, p)| p).unwrap_or_default();
    let mapped: Vec<Vec<StateId>> = pred
        .iter()
        .map(|p| p.iter().map(|&q| matching[q]).collect())
        .collect();
    let (token_accuracy, whole_sequence_accuracy) = sequence_accuracy(&mapped, gold)?;
    Ok(ProbeReport {
        token_accuracy,
        whole_sequence_accuracy,
        matching,
    })
}

/// Row-normalized confusion matrix: rows are gold states, columns are
/// relabeled predictions. Rows of unseen gold states are all zero.
pub fn confusion_matrix(
    pred: &[Vec<StateId>],
    gold: &[Vec<StateId>],
    matching: &[StateId],
) -> Vec<Vec<f64>> {
    let n = matching.len();
    let mut m = vec![vec![0.0; n]; n];
    for (p, g) in pred.iter().zip(gold) {
        for (&a, &b) in p.iter().zip(g) {
            if let (Some(&col), true) = (matching.get(a), b < n) {
                m[b][col] += 1.0;
            }
        }
    }
    for row in &mut m {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|x| *x /= total);
        }
    }
    m
}

pub fn confusion_csv(matrix: &[Vec<f64>]) -> String {
    let n = matrix.len();
    let mut out = String::from("gold");
    for j in 0..n {
        out.push_str(&format!(",pred_{j}"));
    }
    out.push('\n');
    for (i, row) in matrix.iter().enumerate() {
        out.push_str(&i.to_string());
        for x in row {
            out.push_str(&format!(",{x:.6}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::Transition;
    use crate::sampling::task_rng;
    use crate::symbols::{sym, syms};

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance(&[] as &[char], &['a', 'b', 'c']), 3);
        assert_eq!(edit_distance(&syms("abc"), &syms("abc")), 0);
        let k: Vec<char> = "kitten".chars().collect();
        let s: Vec<char> = "sitting".chars().collect();
        assert_eq!(edit_distance(&k, &s), 3);
    }

    #[test]
    fn evaluate_edge_cases() {
        let r = evaluate(&["ab", "c"], &["ab", "c"]).unwrap();
        assert_eq!(
            (r.seq_accuracy, r.mean_edit_distance, r.per),
            (1.0, 0.0, 0.0)
        );
        let r = evaluate(&["", ""], &["abc", "d"]).unwrap();
        assert_eq!(r.per, 1.0);
        assert_eq!(r.per_macro, 1.0);
        assert!(matches!(
            evaluate(&["a"], &["a", "b"]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_fixture() {
        // hand-computed: eds 0,1,2,1 ; gold lengths 3,3,2,4
        let preds = ["abc", "abd", "", "abcx"];
        let golds = ["abc", "abc", "xy", "abc"];
        let r = evaluate(&preds, &golds).unwrap();
        assert_eq!(r.seq_accuracy, 0.25);
        assert_eq!(r.mean_edit_distance, 1.0);
        assert!((r.per - 4.0 / 11.0).abs() < 1e-12);
        assert!((r.per_macro - (0.0 + 1.0 / 3.0 + 1.0 + 1.0 / 3.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn heuristic_equals_gold_when_readers_are_unique() {
        // q0 reads only a, q1 reads only b; a: q0->q1, b: q1->q0; both final
        let (a, b) = (sym('a'), sym('b'));
        let f = Fst::new(
            2,
            syms("ab"),
            [0],
            [0],
            vec![Transition::new(0, a, a, 1), Transition::new(1, b, b, 0)],
        )
        .unwrap();
        let mut rng = task_rng(0, 0);
        let x = syms("abab");
        let gold = f.state_sequence(&x).unwrap().unwrap().states;
        assert_eq!(heuristic_probe_baseline(&f, &x, &mut rng), gold);
    }

    #[test]
    fn heuristic_coin_flip() {
        // both states read everything: expected accuracy 0.5 on input tokens
        let (a, b) = (sym('a'), sym('b'));
        let f = Fst::new(
            2,
            syms("ab"),
            [0],
            [1],
            vec![
                Transition::new(0, a, a, 1),
                Transition::new(0, b, b, 0),
                Transition::new(1, a, a, 1),
                Transition::new(1, b, b, 0),
            ],
        )
        .unwrap();
        let mut rng = task_rng(1, 0);
        let x = syms("abba");
        let gold = f.state_sequence(&x).unwrap().unwrap().states;
        let (mut hits, mut total) = (0, 0);
        for _ in 0..4000 {
            let guess = heuristic_probe_baseline(&f, &x, &mut rng);
            hits += guess[..4]
                .iter()
                .zip(&gold[..4])
                .filter(|(p, g)| p == g)
                .count();
            total += 4;
        }
        let acc = hits as f64 / total as f64;
        assert!((acc - 0.5).abs() < 0.03, "{acc}");
    }

    #[test]
    fn relabeled_predictions_match_perfectly() {
        let gold = vec![vec![0, 1, 2, 1], vec![2, 2, 0]];
        let pred: Vec<Vec<usize>> = gold
            .iter()
            .map(|s| s.iter().map(|&q| (q + 1) % 3).collect())
            .collect();
        let r = best_isomorphism_match(&pred, &gold, 3).unwrap();
        assert_eq!(r.token_accuracy, 1.0);
        assert_eq!(r.whole_sequence_accuracy, 1.0);
        assert_eq!(r.matching, vec![2, 0, 1]);
        let id = best_isomorphism_match(&gold, &gold, 3).unwrap();
        assert_eq!(id.matching, vec![0, 1, 2]);
        assert!(best_isomorphism_match(&gold, &gold, 9).is_err());
    }

    #[test]
    fn isomorphism_matches_exhaustive_scan() {
        let mut rng = task_rng(4, 4);
        let gold: Vec<Vec<usize>> = (0..6)
            .map(|_| (0..7).map(|_| rng.gen_range(0..4)).collect())
            .collect();
        let pred: Vec<Vec<usize>> = (0..6)
            .map(|_| (0..7).map(|_| rng.gen_range(0..4)).collect())
            .collect();
        let report = best_isomorphism_match(&pred, &gold, 4).unwrap();
        // independent scorer over all 24 relabelings
        let mut best = 0.0f64;
        for perm in (0..4usize).permutations(4) {
            let mut hits = 0;
            for (p, g) in pred.iter().zip(&gold) {
                for (a, b) in p.iter().zip(g) {
                    if perm[*a] == *b {
                        hits += 1;
                    }
                }
            }
            best = best.max(hits as f64 / 42.0);
        }
        assert!((report.token_accuracy - best).abs() < 1e-12);
        assert!(report.whole_sequence_accuracy <= report.token_accuracy);
    }

    #[test]
    fn confusion_rows() {
        let gold = vec![vec![0, 1, 1, 2]];
        let perfect = confusion_matrix(&gold, &gold, &[0, 1, 2]);
        assert_eq!(
            perfect,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
        let single = confusion_matrix(&[vec![0, 1]], &[vec![1, 1]], &[0, 1]);
        assert_eq!(single, vec![vec![0.0, 0.0], vec![0.5, 0.5]]);
        let csv = confusion_csv(&single);
        assert!(csv.starts_with("gold,pred_0,pred_1\n0,0.000000,0.000000\n"));
    }
}
