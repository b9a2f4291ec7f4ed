//! Newline-delimited JSON records, FST sidecars and TSV pair files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::encoding::{decode_fst_with_vocab, encode_fst, PrefixEncoding, Row};
use crate::error::{Error, Result};
use crate::fst::{Fst, StateId};
use crate::sampling::Pair;
use crate::symbols::{decode_str, encode_str, Symbol};

/// One input/output example. `states` holds the gold state sequence when
/// the record has been annotated for probing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub task_id: u64,
    pub input: String,
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<StateId>>,
}

impl Record {
    pub fn from_pair(task_id: u64, (x, y): &Pair) -> Self {
        Record {
            task_id,
            input: decode_str(x),
            output: decode_str(y),
            states: None,
        }
    }

    pub fn to_pair(&self) -> Result<Pair> {
        let conv = |s: &str| {
            encode_str(s).map_err(|c| Error::Parse {
                line: 0,
                msg: format!("character {c:?} not in the symbol table"),
            })
        };
        Ok((conv(&self.input)?, conv(&self.output)?))
    }
}

/// Per-task FST sidecar line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FstRecord {
    pub task_id: u64,
    pub num_states: usize,
    pub finals: Vec<StateId>,
    pub rows: Vec<Row>,
}

/// Per-task vocabulary sidecar line; shorthand expansion depends on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabRecord {
    pub task_id: u64,
    pub vocab: Vec<u32>,
}

impl FstRecord {
    pub fn from_fst(task_id: u64, fst: &Fst) -> Result<Self> {
        Ok(FstRecord {
            task_id,
            num_states: fst.num_states(),
            finals: fst.finals().iter().copied().collect(),
            rows: encode_fst(fst)?.rows,
        })
    }

    pub fn to_fst(&self, vocab: impl IntoIterator<Item = Symbol>) -> Result<Fst> {
        decode_fst_with_vocab(
            &PrefixEncoding {
                rows: self.rows.clone(),
            },
            self.num_states,
            &self.finals,
            vocab,
        )
    }
}

impl VocabRecord {
    pub fn from_fst(task_id: u64, fst: &Fst) -> Self {
        VocabRecord {
            task_id,
            vocab: fst.vocab().iter().map(|s| s.0).collect(),
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.vocab.iter().map(|&s| Symbol(s))
    }
}

pub fn to_jsonl_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    parse_jsonl(BufReader::new(File::open(path)?))
}

/// Tab-separated `input\toutput` lines, as used for natural-data tasks.
pub fn parse_tsv_pairs(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let l = l.strip_suffix('\r').unwrap_or(l);
            let (x, y) = l.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "missing tab".into(),
            })?;
            if y.contains('\t') {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "more than two columns".into(),
                });
            }
            Ok((x.to_string(), y.to_string()))
        })
        .collect()
}

/// One prediction per line; trailing `\r` is stripped.
pub fn parse_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect()
}
