use std::collections::BTreeSet;

use sipforge::io::{write_jsonl, Record};
use sipforge::sampling::{gen_set_task, task_rng};

use super::*;
use crate::args::GenSetArgs;
use crate::manifest::RunManifest;

/// Train and test examples with disjoint inputs.
pub fn run(args: &GenSetArgs) -> CliResult<()> {
    let mut rng = task_rng(args.seed, 0);
    let mut seen = BTreeSet::new();
    let mut examples = Vec::with_capacity(args.train + args.test);
    let budget = 100 + 10 * (args.train + args.test);
    for _ in 0..budget {
        if examples.len() == args.train + args.test {
            break;
        }
        for pair in gen_set_task(args.train + args.test - examples.len(), &mut rng) {
            if seen.insert(pair.0.clone()) {
                examples.push(pair);
            }
        }
    }
    if examples.len() < args.train + args.test {
        return Err(CliError::Generation(format!(
            "only {} distinct Set inputs found",
            examples.len()
        )));
    }
    let test = examples.split_off(args.train);
    let out = &args.out;
    create_out_dir(out)?;
    let records = |pairs: &[sipforge::sampling::Pair]| {
        pairs
            .iter()
            .map(|p| Record::from_pair(0, p))
            .collect::<Vec<_>>()
    };
    write_jsonl(&out.join(TRAIN_FILE), &records(&examples))?;
    write_jsonl(&out.join(TEST_FILE), &records(&test))?;
    write_symbols(out)?;
    let manifest = RunManifest::new(
        "gen-set",
        args,
        Some(args.seed),
        serde_json::json!({ "task": "set" }),
    )?;
    manifest.finish(out, &[TRAIN_FILE, TEST_FILE, SYMBOLS_FILE])?;
    println!(
        "wrote {} train and {} test Set examples to {}",
        examples.len(),
        test.len(),
        out.display()
    );
    Ok(())
}
