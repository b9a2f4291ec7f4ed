use std::fs;

use serde::Serialize;
use sipforge::io::{write_jsonl, Record};
use sipforge::metrics::{
    best_isomorphism_match, confusion_csv, confusion_matrix, heuristic_probe_baseline,
    sequence_accuracy,
};
use sipforge::sampling::task_rng;
use sipforge::{Error, Execution};

use super::*;
use crate::args::{ProbeOracleArgs, ProbeScoreArgs, ReportFormat};
use crate::manifest::RunManifest;

pub const STATES_FILE: &str = "states.jsonl";
pub const HEURISTIC_FILE: &str = "heuristic.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeuristicReport {
    pub records: usize,
    pub tasks: usize,
    pub token_accuracy: f64,
    pub whole_sequence_accuracy: f64,
}

/// Corpus records with their gold state sequences attached.
pub fn annotate(corpus: &Path, exec: Execution) -> CliResult<(Vec<Record>, BTreeMap<u64, Fst>)> {
    let fsts = read_corpus_fsts(corpus)?;
    let records = read_records(&corpus.join(CORPUS_FILE))?;
    for (id, fst) in &fsts {
        fst.check_deterministic()
            .map_err(|e| CliError::Config(format!("task {id}: {e}")))?;
    }
    let annotated = exec.try_map(records.len(), |i| {
        let r = &records[i];
        let fst = fsts
            .get(&r.task_id)
            .ok_or_else(|| Error::Config(format!("task {} has no FST", r.task_id)))?;
        let (x, _) = r.to_pair()?;
        let seq = fst.state_sequence(&x)?.ok_or(Error::Undefined)?;
        Ok::<_, Error>(Record {
            states: Some(seq.states),
            ..r.clone()
        })
    })?;
    Ok((annotated, fsts))
}

/// Heuristic guesses drawn from one stream per record.
pub fn heuristic(
    records: &[Record],
    fsts: &BTreeMap<u64, Fst>,
    seed: u64,
    exec: Execution,
) -> CliResult<HeuristicReport> {
    let preds = exec.try_map(records.len(), |i| {
        let r = &records[i];
        let (x, _) = r.to_pair()?;
        Ok::<_, Error>(heuristic_probe_baseline(
            &fsts[&r.task_id],
            &x,
            &mut task_rng(seed, i as u64),
        ))
    })?;
    let golds: Vec<Vec<usize>> = records
        .iter()
        .map(|r| r.states.clone().unwrap_or_default())
        .collect();
    let (token_accuracy, whole_sequence_accuracy) = sequence_accuracy(&preds, &golds)?;
    Ok(HeuristicReport {
        records: records.len(),
        tasks: fsts.len(),
        token_accuracy,
        whole_sequence_accuracy,
    })
}

pub fn run_oracle(args: &ProbeOracleArgs, exec: Execution) -> CliResult<()> {
    let (records, fsts) = annotate(&args.corpus, exec)?;
    create_out_dir(&args.out)?;
    write_jsonl(&args.out.join(STATES_FILE), &records)?;
    let mut files = vec![STATES_FILE];
    let mut manifest = RunManifest::new(
        "probe-oracle",
        args,
        args.heuristic_seed,
        serde_json::json!({ "corpus": args.corpus, "heuristic_seed": args.heuristic_seed }),
    )?;
    if let Some(seed) = args.heuristic_seed {
        let report = heuristic(&records, &fsts, seed, exec)?;
        write_pretty(&args.out.join(HEURISTIC_FILE), &report)?;
        files.push(HEURISTIC_FILE);
        println!(
            "heuristic baseline over {} records: token {:.4}, whole sequence {:.4}",
            report.records, report.token_accuracy, report.whole_sequence_accuracy
        );
        manifest.metadata = serde_json::to_value(&report)?;
    }
    manifest.finish(&args.out, &files)?;
    println!(
        "wrote {} annotated records to {}",
        records.len(),
        args.out.display()
    );
    Ok(())
}

fn read_states(path: &Path) -> CliResult<Vec<Vec<usize>>> {
    read_records(path)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.states.ok_or_else(|| {
                CliError::Config(format!("{}: record {i} has no states", path.display()))
            })
        })
        .collect()
}

pub fn run_score(args: &ProbeScoreArgs) -> CliResult<()> {
    let pred = read_states(&args.pred)?;
    let gold = read_states(&args.gold)?;
    let report = best_isomorphism_match(&pred, &gold, args.num_states)?;
    if let Some(path) = &args.confusion {
        fs::write(
            path,
            confusion_csv(&confusion_matrix(&pred, &gold, &report.matching)),
        )?;
    }
    match args.format {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        ReportFormat::Text => {
            println!("{:<24}{:>10.4}", "token_accuracy", report.token_accuracy);
            println!(
                "{:<24}{:>10.4}",
                "whole_sequence_accuracy", report.whole_sequence_accuracy
            );
            let m: Vec<String> = report.matching.iter().map(|q| q.to_string()).collect();
            println!("{:<24}{:>10}", "matching", m.join(" "));
        }
    }
    Ok(())
}
