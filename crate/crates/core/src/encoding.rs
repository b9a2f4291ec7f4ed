//! Integer prefix layout of an FST: one `(src, in, out, dst, final)` row per
//! transition, grouped by source state in ascending order starting at the
//! initial state 0. Within a group rows are ordered by `(in, out, dst)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fst::{Fst, Transition};
use crate::symbols::{Symbol, SymbolTable};

/// Reserved state id used by padding rows. Real state ids stay below it.
pub const PAD_STATE: u32 = 63;
/// Size of the state embedding table (real states plus the padding state).
pub const STATE_CAPACITY: u32 = PAD_STATE + 1;
/// Final-flag value of padding rows.
pub const PAD_FINAL: u32 = 2;
/// Prefix length used for fine-tuning.
pub const PREFIX_LEN: usize = 50;
/// Number of pre-training encodings averaged to initialize a prefix.
pub const INIT_POOL_SIZE: usize = 32;

/// Embedding widths the trainer uses for the three lookup tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingDims {
    pub state: usize,
    pub symbol: usize,
    pub final_flag: usize,
}

impl Default for EmbeddingDims {
    fn default() -> Self {
        EmbeddingDims {
            state: 64,
            symbol: 256,
            final_flag: 16,
        }
    }
}

pub type Row = [u32; 5];

pub const PAD_ROW: Row = [
    PAD_STATE,
    Symbol::PAD.0,
    Symbol::PAD.0,
    PAD_STATE,
    PAD_FINAL,
];

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrefixEncoding {
    pub rows: Vec<Row>,
}

impl PrefixEncoding {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows without trailing padding.
    pub fn content(&self) -> &[Row] {
        let end = self
            .rows
            .iter()
            .rposition(|r| *r != PAD_ROW)
            .map_or(0, |i| i + 1);
        &self.rows[..end]
    }

    /// Pads with [`PAD_ROW`] or drops tail rows to reach exactly `len` rows.
    pub fn fit_to(&self, len: usize) -> PrefixEncoding {
        let mut rows: Vec<Row> = self.rows.iter().copied().take(len).collect();
        rows.resize(len, PAD_ROW);
        PrefixEncoding { rows }
    }
}

pub fn encode_fst(fst: &Fst) -> Result<PrefixEncoding> {
    if fst.is_empty() {
        return Ok(PrefixEncoding::default());
    }
    if fst.initials() != &BTreeSet::from([0]) {
        return Err(Error::Config(
            "encoding needs a single initial state 0".into(),
        ));
    }
    if fst.num_states() as u64 >= PAD_STATE as u64 {
        return Err(Error::Capacity(format!(
            "{} states, at most {} supported",
            fst.num_states(),
            PAD_STATE
        )));
    }
    let capacity = SymbolTable::global().capacity();
    let mut transitions: Vec<&Transition> = fst.transitions().iter().collect();
    transitions.sort_by_key(|t| (t.src, t.input, t.output, t.dst));
    let rows = transitions
        .into_iter()
        .map(|t| {
            if t.input.0 >= capacity || t.output.0 >= capacity {
                return Err(Error::Capacity(format!(
                    "symbol id beyond the table in {t:?}"
                )));
            }
            Ok([
                t.src as u32,
                t.input.0,
                t.output.0,
                t.dst as u32,
                u32::from(fst.is_final(t.dst)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrefixEncoding { rows })
}

/// Rebuilds an FST, inferring the vocabulary from the concrete labels.
pub fn decode_fst(enc: &PrefixEncoding, num_states: usize, finals: &[usize]) -> Result<Fst> {
    let vocab: BTreeSet<Symbol> = enc
        .content()
        .iter()
        .flat_map(|r| [Symbol(r[1]), Symbol(r[2])])
        .filter(|s| s.is_concrete())
        .collect();
    decode_fst_with_vocab(enc, num_states, finals, vocab)
}

pub fn decode_fst_with_vocab(
    enc: &PrefixEncoding,
    num_states: usize,
    finals: &[usize],
    vocab: impl IntoIterator<Item = Symbol>,
) -> Result<Fst> {
    let finals_set: BTreeSet<usize> = finals.iter().copied().collect();
    let capacity = SymbolTable::global().capacity();
    let mut transitions = Vec::with_capacity(enc.rows.len());
    for (i, row) in enc.content().iter().enumerate() {
        let bad = |msg: String| Error::MalformedRow { row: i, msg };
        if *row == PAD_ROW {
            return Err(bad("padding row before the end of the encoding".into()));
        }
        let [src, input, output, dst, fin] = *row;
        let (src, dst) = (src as usize, dst as usize);
        if src >= num_states || dst >= num_states {
            return Err(bad(format!("state out of range for {num_states} states")));
        }
        if input >= capacity
            || output >= capacity
            || input == Symbol::PAD.0
            || output == Symbol::PAD.0
        {
            return Err(bad("symbol id out of range".into()));
        }
        if fin > 1 || (fin == 1) != finals_set.contains(&dst) {
            return Err(bad(format!(
                "final flag {fin} disagrees with the final states"
            )));
        }
        transitions.push(Transition::new(src, Symbol(input), Symbol(output), dst));
    }
    Fst::new(
        num_states,
        vocab,
        (num_states > 0).then_some(0),
        finals_set,
        transitions,
    )
}

/// Pads every encoding to `target_len` rows.
pub fn pad_batch(encs: &[PrefixEncoding], target_len: usize) -> Result<Vec<PrefixEncoding>> {
    if let Some(e) = encs.iter().find(|e| e.len() > target_len) {
        return Err(Error::Capacity(format!(
            "encoding of {} rows exceeds target {target_len}",
            e.len()
        )));
    }
    Ok(encs.iter().map(|e| e.fit_to(target_len)).collect())
}

/// Mean embedded prefix over `encs`, each fitted to `prefix_len` rows first.
pub fn average_encoding_init<F>(
    encs: &[PrefixEncoding],
    prefix_len: usize,
    embed: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&Row) -> Vec<f64>,
{
    if encs.is_empty() {
        return Err(Error::Config(
            "need at least one encoding to average".into(),
        ));
    }
    let mut sum: Vec<Vec<f64>> = Vec::new();
    for enc in encs {
        let fitted = enc.fit_to(prefix_len);
        for (pos, row) in fitted.rows.iter().enumerate() {
            let v = embed(row);
            match sum.get_mut(pos) {
                Some(acc) => {
                    if acc.len() != v.len() {
                        return Err(Error::Dimension(format!(
                            "embedding width {} vs {}",
                            acc.len(),
                            v.len()
                        )));
                    }
                    acc.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
                }
                None => sum.push(v),
            }
        }
    }
    let n = encs.len() as f64;
    Ok(sum
        .into_iter()
        .map(|v| v.into_iter().map(|x| x / n).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{sym, syms};

    fn leading_zero_deleter() -> Fst {
        let (z, o, t) = (sym('0'), sym('1'), sym('2'));
        Fst::new(
            2,
            syms("012"),
            [0],
            [1],
            vec![
                Transition::new(1, z, z, 1),
                Transition::new(0, t, t, 1),
                Transition::new(0, z, Symbol::EPS, 0),
                Transition::new(1, o, o, 1),
                Transition::new(0, o, o, 1),
                Transition::new(1, t, t, 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn leading_zero_rows() {
        let (z, o, t) = (sym('0').0, sym('1').0, sym('2').0);
        let enc = encode_fst(&leading_zero_deleter()).unwrap();
        assert_eq!(
            enc.rows,
            vec![
                [0, z, Symbol::EPS.0, 0, 0],
                [0, o, o, 1, 1],
                [0, t, t, 1, 1],
                [1, z, z, 1, 1],
                [1, o, o, 1, 1],
                [1, t, t, 1, 1],
            ]
        );
    }

    #[test]
    fn empty_fst_encodes_empty() {
        let f = Fst::new(1, syms("a"), [0], [0], vec![]).unwrap();
        assert!(encode_fst(&f).unwrap().is_empty());
        let back = decode_fst(&PrefixEncoding::default(), 1, &[0]).unwrap();
        assert_eq!(back.num_states(), 1);
        assert!(back.transitions().is_empty());
    }

    #[test]
    fn decode_ignores_trailing_padding() {
        let f = leading_zero_deleter();
        let enc = encode_fst(&f).unwrap();
        let padded = pad_batch(std::slice::from_ref(&enc), 9).unwrap().remove(0);
        assert_eq!(padded.len(), 9);
        let back = decode_fst_with_vocab(&padded, 2, &[1], syms("012")).unwrap();
        assert_eq!(encode_fst(&back).unwrap(), enc);
    }

    #[test]
    fn padding_in_the_middle_is_malformed() {
        let mut enc = encode_fst(&leading_zero_deleter()).unwrap();
        enc.rows.insert(2, PAD_ROW);
        let err = decode_fst(&enc, 2, &[1]).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 2, .. }));
    }

    #[test]
    fn bad_final_flag_is_malformed() {
        let mut enc = encode_fst(&leading_zero_deleter()).unwrap();
        enc.rows[0][4] = 1;
        assert!(matches!(
            decode_fst(&enc, 2, &[1]),
            Err(Error::MalformedRow { row: 0, .. })
        ));
    }

    #[test]
    fn pad_batch_rules() {
        let enc = encode_fst(&leading_zero_deleter()).unwrap();
        let same = pad_batch(std::slice::from_ref(&enc), enc.len()).unwrap();
        assert_eq!(same[0], enc);
        let empty = pad_batch(&[PrefixEncoding::default()], 3).unwrap();
        assert_eq!(empty[0].rows, vec![PAD_ROW; 3]);
        assert!(pad_batch(&[enc], 3).is_err());
    }

    #[test]
    fn capacity_is_enforced() {
        let a = sym('a');
        let n = PAD_STATE as usize + 1;
        let tr = (0..n - 1)
            .map(|q| Transition::new(q, a, a, q + 1))
            .collect();
        let f = Fst::new(n, syms("a"), [0], [n - 1], tr).unwrap();
        assert!(matches!(encode_fst(&f), Err(Error::Capacity(_))));
    }

    #[test]
    fn average_init() {
        let embed = |r: &Row| r.iter().map(|&x| x as f64 + 1.0).collect::<Vec<f64>>();
        let enc = encode_fst(&leading_zero_deleter()).unwrap();
        let copies = vec![enc.clone(); INIT_POOL_SIZE];
        let avg = average_encoding_init(&copies, PREFIX_LEN, embed).unwrap();
        assert_eq!(avg.len(), PREFIX_LEN);
        let fitted = enc.fit_to(PREFIX_LEN);
        for (pos, v) in avg.iter().enumerate() {
            let want = embed(&fitted.rows[pos]);
            for (a, b) in v.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        // mean of two encodings equals the mean of their embeddings per position
        let other = PrefixEncoding {
            rows: vec![[0, 5, 5, 0, 1]],
        };
        let pair = average_encoding_init(&[enc.clone(), other.clone()], 4, embed).unwrap();
        let swapped = average_encoding_init(&[other, enc], 4, embed).unwrap();
        assert_eq!(pair, swapped);
    }
}
