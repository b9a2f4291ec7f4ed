use rand::seq::SliceRandom;
use serde_json::json;
use sipforge::fst::write_att;
use sipforge::io::{write_jsonl, Record, VocabRecord};
use sipforge::sampling::{gen_fst_with_states, task_rng};
use sipforge::splits::{
    gen_iteration_split, gen_length_split, gen_uc_split, iteration_count, IterationSplitConfig,
    LengthSplitConfig, SplitMeta, TaskDataset, UcSplitConfig,
};
use sipforge::symbols::SymbolTable;
use sipforge::{Fst, Symbol};

use super::*;
use crate::args::{BandArg, GenSplitArgs, SplitModeArg};
use crate::manifest::RunManifest;

fn split_vocab<R: rand::Rng>(args: &GenSplitArgs, rng: &mut R) -> CliResult<Vec<Symbol>> {
    let mut pool: Vec<Symbol> = SymbolTable::global().ascii().collect();
    if args.vocab_size == 0 || args.vocab_size > pool.len() {
        return Err(CliError::Config(format!(
            "vocab size must lie in 1..={}",
            pool.len()
        )));
    }
    if args.random_vocab {
        pool.shuffle(rng);
        pool.truncate(args.vocab_size);
        pool.sort();
    } else {
        pool.truncate(args.vocab_size);
    }
    Ok(pool)
}

fn build<R: rand::Rng>(
    args: &GenSplitArgs,
    fst: &Fst,
    rng: &mut R,
) -> sipforge::Result<TaskDataset> {
    match args.mode {
        SplitModeArg::Iteration => {
            let cfg = IterationSplitConfig {
                train_size: args.train,
                test_size: args.test,
                ..Default::default()
            };
            gen_iteration_split(fst, &cfg, rng)
        }
        SplitModeArg::Uc => {
            let cfg = UcSplitConfig {
                max_withheld_pairs: args.pairs,
                train_size: args.train,
                test_size: args.test,
                ..Default::default()
            };
            gen_uc_split(fst, &cfg, rng)
        }
        SplitModeArg::Length => {
            let preset = match args.band {
                BandArg::B40to70 => LengthSplitConfig::preset_40_70(),
                BandArg::B90to110 => LengthSplitConfig::preset_90_110(),
            };
            gen_length_split(
                fst,
                &LengthSplitConfig {
                    train_size: args.train,
                    test_size: args.test,
                    ..preset
                },
                rng,
            )
        }
    }
}

/// Samples FSTs until one admits the requested split.
pub fn generate(args: &GenSplitArgs) -> CliResult<(TaskDataset, usize)> {
    if args.states == 0 || args.states > sipforge::encoding::PAD_STATE as usize {
        return Err(CliError::Config(format!(
            "states must lie in 1..={}",
            sipforge::encoding::PAD_STATE
        )));
    }
    let mut rng = task_rng(args.seed, args.task_id);
    let vocab = split_vocab(args, &mut rng)?;
    let mut diagnostics = Vec::new();
    for attempt in 1..=args.fst_retries {
        let fst = match gen_fst_with_states(args.states, &vocab, 1000, &mut rng) {
            Ok(f) => f,
            Err(e @ (sipforge::Error::Generation { .. } | sipforge::Error::Quota(_))) => {
                diagnostics.push(format!("attempt {attempt}: {e}"));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        match build(args, &fst, &mut rng) {
            Ok(ds) => return Ok((ds, attempt)),
            Err(e @ (sipforge::Error::Generation { .. } | sipforge::Error::Quota(_))) => {
                diagnostics.push(format!("attempt {attempt}: {e}"))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(CliError::Generation(format!(
        "no FST out of {} admitted the split:\n  {}",
        args.fst_retries,
        diagnostics.join("\n  ")
    )))
}

fn mean(v: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = v.fold((0, 0), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

pub fn run(args: &GenSplitArgs) -> CliResult<()> {
    let (ds, attempts) = generate(args)?;
    let out = &args.out;
    create_out_dir(out)?;
    let to_records = |pairs: &[sipforge::sampling::Pair]| -> Vec<Record> {
        pairs
            .iter()
            .map(|p| Record::from_pair(args.task_id, p))
            .collect()
    };
    write_jsonl(&out.join(TRAIN_FILE), &to_records(&ds.train))?;
    write_jsonl(&out.join(TEST_FILE), &to_records(&ds.test))?;
    let att = write_att(&ds.fst)?;
    std::fs::write(out.join(ATT_FILE), &att)?;
    write_jsonl(
        &out.join(FSTS_FILE),
        &[sipforge::io::FstRecord::from_fst(args.task_id, &ds.fst)?],
    )?;
    write_jsonl(
        &out.join(VOCAB_FILE),
        &[VocabRecord::from_fst(args.task_id, &ds.fst)],
    )?;
    write_symbols(out)?;

    let mut stats = json!({
        "fst_attempts": attempts,
        "num_states": ds.fst.num_states(),
        "train_mean_len": mean(ds.train.iter().map(|p| p.0.len())),
        "test_mean_len": mean(ds.test.iter().map(|p| p.0.len())),
    });
    if let SplitMeta::Iteration { .. } = ds.meta {
        let count = |p: &sipforge::sampling::Pair| iteration_count(&ds.fst, &p.0).unwrap_or(0);
        stats["train_mean_iterations"] = json!(mean(ds.train.iter().map(count)));
        stats["train_max_iterations"] = json!(ds.train.iter().map(count).max());
        stats["test_mean_iterations"] = json!(mean(ds.test.iter().map(count)));
    }
    if let SplitMeta::Uc { withheld, .. } = &ds.meta {
        stats["withheld_pairs"] = json!(withheld.len());
    }
    let config = json!({ "split": ds.meta, "fst_att": att });
    let mut manifest = RunManifest::new("gen-split", args, Some(args.seed), config)?;
    manifest.metadata = stats;
    manifest.finish(
        out,
        &[
            TRAIN_FILE,
            TEST_FILE,
            ATT_FILE,
            FSTS_FILE,
            VOCAB_FILE,
            SYMBOLS_FILE,
        ],
    )?;
    println!(
        "wrote {} train and {} test records to {} (FST attempt {attempts})",
        ds.train.len(),
        ds.test.len(),
        out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run_argv;

    #[test]
    fn quota_failure_reports_every_attempt() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s");
        let e = run_argv(&[
            "gen-split",
            "--mode",
            "iteration",
            "--states",
            "1",
            "--train",
            "20",
            "--test",
            "10",
            "--fst-retries",
            "2",
            "--seed",
            "1",
            "--out",
            out.to_str().unwrap(),
        ])
        .unwrap_err();
        assert_eq!(e.exit_code(), 3);
        let msg = e.to_string();
        assert!(
            msg.contains("attempt 1:") && msg.contains("attempt 2:"),
            "{msg}"
        );
        assert!(!out.exists());
    }

    #[test]
    fn vocabulary_choice() {
        let dir = tempfile::tempdir().unwrap();
        let mut args = GenSplitArgs {
            out: dir.path().to_path_buf(),
            seed: 4,
            mode: SplitModeArg::Length,
            task_id: 0,
            states: 3,
            train: 50,
            test: 10,
            pairs: 20,
            band: BandArg::B90to110,
            vocab_size: 25,
            random_vocab: false,
            fst_retries: 20,
        };
        let mut rng = task_rng(0, 0);
        let first: Vec<Symbol> = SymbolTable::global().ascii().take(25).collect();
        assert_eq!(split_vocab(&args, &mut rng).unwrap(), first);
        args.random_vocab = true;
        let random = split_vocab(&args, &mut rng).unwrap();
        assert_eq!(random.len(), 25);
        assert!(random.iter().all(|s| s.to_char().unwrap().is_ascii()));
        assert_ne!(random, first);
        let (ds, _) = generate(&args).unwrap();
        assert!(ds.test.iter().all(|(x, _)| (90..=110).contains(&x.len())));
        args.vocab_size = 0;
        assert_eq!(generate(&args).unwrap_err().exit_code(), 2);
    }
}
