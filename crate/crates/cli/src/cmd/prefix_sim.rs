use std::fmt::Write as _;
use std::fs;

use sipforge::encoding::{encode_fst, PrefixEncoding};
use sipforge::prefix::{distractor_discrimination, LinearEmbedder, Prefix, SimilarityConfig};
use sipforge::sampling::gen_distractors;
use sipforge::Execution;

use super::*;
use crate::args::PrefixSimArgs;

fn read_prefix(path: &Path) -> CliResult<Prefix> {
    Prefix::parse(&read_text(path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn config(args: &PrefixSimArgs) -> SimilarityConfig {
    SimilarityConfig {
        method: args.method.into(),
        temperature: args.temperature,
        iters: args.iters,
    }
}

/// `left,right,score,permutation` for every unordered pair of files, or the
/// self-comparison of a single file.
pub fn pairwise(args: &PrefixSimArgs) -> CliResult<String> {
    let cfg = config(args);
    let prefixes = args
        .prefixes
        .iter()
        .map(|p| read_prefix(p))
        .collect::<CliResult<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..prefixes.len() {
        for j in i + 1..prefixes.len() {
            pairs.push((i, j));
        }
    }
    if prefixes.len() == 1 {
        pairs.push((0, 0));
    }
    let mut csv = String::from("left,right,score,permutation\n");
    for (i, j) in pairs {
        let s = cfg.similarity(&prefixes[i], &prefixes[j])?;
        let perm: Vec<String> = s.permutation.iter().map(|k| k.to_string()).collect();
        writeln!(
            csv,
            "{},{},{:.6},{}",
            args.prefixes[i].display(),
            args.prefixes[j].display(),
            s.score,
            perm.join(" ")
        )
        .unwrap();
    }
    Ok(csv)
}

/// One row per task: similarity to the gold machine against the best of the
/// sampled distractors.
pub fn discrimination(
    args: &PrefixSimArgs,
    embedder_path: &Path,
    exec: Execution,
) -> CliResult<String> {
    let seed = args
        .seed
        .ok_or_else(|| CliError::Config("distractor mode needs --seed".into()))?;
    if args.learned.is_empty() || args.learned.len() != args.task_dir.len() {
        return Err(CliError::Config(
            "give one --task-dir per --learned prefix".into(),
        ));
    }
    let embedder = LinearEmbedder::from_json(&read_text(embedder_path)?)?;
    let cfg = config(args);
    let mut csv =
        String::from("task,gold_score,best_distractor_score,best_distractor,rank,gold_wins\n");
    for (t, (learned, dir)) in args.learned.iter().zip(&args.task_dir).enumerate() {
        let learned = read_prefix(learned)?;
        let fst = read_split_fst(dir)?;
        let gold = encode_fst(&fst)?;
        let vocab: Vec<_> = fst.vocab().iter().copied().collect();
        let distractors = gen_distractors(
            fst.num_states(),
            &vocab,
            args.distractors,
            seed.wrapping_add(t as u64),
            exec,
        )?;
        let encs = distractors
            .iter()
            .map(encode_fst)
            .collect::<Result<Vec<PrefixEncoding>, _>>()?;
        let r =
            distractor_discrimination(&learned, &gold, &encs, |e| embedder.embed(e), &cfg, exec)?;
        let best = r.best_distractor.map_or(String::new(), |b| b.to_string());
        writeln!(
            csv,
            "{},{:.6},{:.6},{best},{},{}",
            dir.display(),
            r.gold_score,
            r.best_distractor_score,
            r.rank,
            r.gold_wins
        )
        .unwrap();
    }
    Ok(csv)
}

pub fn run(args: &PrefixSimArgs, exec: Execution) -> CliResult<()> {
    let csv = match &args.embedder {
        Some(e) => discrimination(args, e, exec)?,
        None if args.prefixes.is_empty() => {
            return Err(CliError::Config("no prefix files given".into()))
        }
        None => pairwise(args)?,
    };
    match &args.out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
