use serde::Serialize;
use serde_json::json;
use sipforge::bimachine::BimachineJson;
use sipforge::encoding::EmbeddingDims;
use sipforge::io::{write_jsonl, FstRecord, Record, VocabRecord};
use sipforge::sampling::{gen_corpus, CorpusConfig, CorpusMode};
use sipforge::Execution;

use super::*;
use crate::args::{CorpusModeArg, GenPretrainArgs};
use crate::manifest::RunManifest;

#[derive(Serialize)]
struct BimachineRecord {
    task_id: u64,
    bimachine: BimachineJson,
}

pub fn corpus_config(args: &GenPretrainArgs) -> CorpusConfig {
    let mode = match args.mode {
        CorpusModeArg::Det => CorpusMode::Deterministic,
        CorpusModeArg::Bimachine => CorpusMode::Bimachine {
            left_min: args.left_min,
            left_max: args.left_max,
            right_min: args.right_min,
            right_max: args.right_max,
        },
    };
    CorpusConfig {
        num_tasks: args.tasks,
        pairs_per_task: args.pairs_per_task,
        min_input_len: args.min_len,
        max_input_len: args.max_len,
        min_vocab: args.vocab_min,
        max_vocab: args.vocab_max,
        min_states: args.states_min,
        max_states: args.states_max,
        master_seed: args.seed,
        mode,
        vocab_pool: args.vocab_pool.into(),
        p_id: args.p_id,
        p_drop: args.p_drop.unwrap_or(default_p_drop(args.mode)),
        p_shorthand: args.p_shorthand,
        target_choice: args.target_choice.into(),
        stop_prob: args.stop_prob,
        max_retries: args.max_retries,
    }
}

fn default_p_drop(mode: CorpusModeArg) -> f64 {
    match mode {
        CorpusModeArg::Det => CorpusConfig::default().p_drop,
        CorpusModeArg::Bimachine => 0.6,
    }
}

pub fn run(args: &GenPretrainArgs, exec: Execution) -> CliResult<()> {
    let mut args = args.clone();
    args.p_drop = Some(args.p_drop.unwrap_or(default_p_drop(args.mode)));
    let cfg = corpus_config(&args);
    cfg.validate()?;
    let tasks = gen_corpus(&cfg, exec)?;

    let out = &args.out;
    create_out_dir(out)?;
    let records: Vec<Record> = tasks
        .iter()
        .flat_map(|t| t.pairs.iter().map(|p| Record::from_pair(t.task_id, p)))
        .collect();
    write_jsonl(&out.join(CORPUS_FILE), &records)?;
    let fsts = tasks
        .iter()
        .map(|t| FstRecord::from_fst(t.task_id, &t.fst))
        .collect::<Result<Vec<_>, _>>()?;
    write_jsonl(&out.join(FSTS_FILE), &fsts)?;
    let vocab: Vec<_> = tasks
        .iter()
        .map(|t| VocabRecord::from_fst(t.task_id, &t.fst))
        .collect();
    write_jsonl(&out.join(VOCAB_FILE), &vocab)?;
    write_symbols(out)?;
    let mut files = vec![CORPUS_FILE, FSTS_FILE, VOCAB_FILE, SYMBOLS_FILE];
    if args.mode == CorpusModeArg::Bimachine {
        let bms: Vec<_> = tasks
            .iter()
            .filter_map(|t| {
                t.bimachine.as_ref().map(|b| BimachineRecord {
                    task_id: t.task_id,
                    bimachine: b.to_json(),
                })
            })
            .collect();
        write_jsonl(&out.join(BIMACHINES_FILE), &bms)?;
        files.push(BIMACHINES_FILE);
    }

    let lens: Vec<usize> = tasks
        .iter()
        .flat_map(|t| t.pairs.iter().map(|p| p.0.len()))
        .collect();
    let states: Vec<usize> = tasks.iter().map(|t| t.fst.num_states()).collect();
    let mean = |v: &[usize]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<usize>() as f64 / v.len() as f64
        }
    };
    let mut manifest = RunManifest::new(
        "gen-pretrain",
        &args,
        Some(args.seed),
        serde_json::to_value(&cfg)?,
    )?;
    manifest.metadata = json!({
        "embedding_dims": EmbeddingDims::default(),
        "records": records.len(),
        "tasks": tasks.len(),
        "mean_input_len": mean(&lens),
        "max_input_len": lens.iter().max(),
        "mean_states": mean(&states),
        "max_prefix_rows": fsts.iter().map(|f| f.rows.len()).max(),
    });
    manifest.finish(out, &files)?;
    println!(
        "wrote {} records for {} tasks to {}",
        records.len(),
        tasks.len(),
        out.display()
    );
    Ok(())
}
