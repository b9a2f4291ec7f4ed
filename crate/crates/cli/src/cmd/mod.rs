pub mod eval;
pub mod ingest;
pub mod prefix_sim;
pub mod pretrain;
pub mod probe;
pub mod set;
pub mod split;
pub mod verify;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sipforge::fst::read_att;
use sipforge::io::{read_jsonl, FstRecord, Record, VocabRecord};
use sipforge::sampling::Pair;
use sipforge::symbols::SymbolTable;
use sipforge::Fst;

use crate::error::{CliError, CliResult};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const FSTS_FILE: &str = "fsts.jsonl";
pub const VOCAB_FILE: &str = "vocab.jsonl";
pub const SYMBOLS_FILE: &str = "symbols.json";
pub const BIMACHINES_FILE: &str = "bimachines.jsonl";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const ATT_FILE: &str = "fst.att";

pub(crate) fn create_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn write_pretty(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub(crate) fn write_symbols(dir: &Path) -> CliResult<()> {
    write_pretty(&dir.join(SYMBOLS_FILE), &SymbolTable::global().to_json())
}

pub(crate) fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

pub(crate) fn read_records(path: &Path) -> CliResult<Vec<Record>> {
    if !path.exists() {
        return Err(CliError::Config(format!(
            "{} does not exist",
            path.display()
        )));
    }
    Ok(read_jsonl(path)?)
}

pub(crate) fn records_to_pairs(records: &[Record]) -> CliResult<Vec<Pair>> {
    Ok(records
        .iter()
        .map(Record::to_pair)
        .collect::<Result<_, _>>()?)
}

/// Machines of a corpus directory keyed by task id.
pub(crate) fn read_corpus_fsts(dir: &Path) -> CliResult<BTreeMap<u64, Fst>> {
    let fsts: Vec<FstRecord> = read_jsonl(&dir.join(FSTS_FILE))?;
    let vocab: BTreeMap<u64, VocabRecord> = read_jsonl::<VocabRecord>(&dir.join(VOCAB_FILE))?
        .into_iter()
        .map(|v| (v.task_id, v))
        .collect();
    fsts.iter()
        .map(|r| {
            let v = vocab.get(&r.task_id).ok_or_else(|| {
                CliError::Config(format!("task {} has no vocabulary record", r.task_id))
            })?;
            Ok((r.task_id, r.to_fst(v.symbols())?))
        })
        .collect()
}

/// The machine of a split directory, read from its AT&T file.
pub(crate) fn read_split_fst(dir: &Path) -> CliResult<Fst> {
    let vocab: Vec<VocabRecord> = read_jsonl(&dir.join(VOCAB_FILE))?;
    let [v] = vocab.as_slice() else {
        return Err(CliError::Config(format!(
            "{} must hold exactly one record",
            VOCAB_FILE
        )));
    };
    Ok(read_att(&read_text(&dir.join(ATT_FILE))?, v.symbols())?)
}
