use std::collections::{BTreeMap, BTreeSet};

use sipforge::sampling::{dedup_first, CorpusConfig};
use sipforge::splits::{verify_split, Part, SplitMeta};
use sipforge::Transduction;

use super::*;
use crate::args::VerifyArgs;
use crate::manifest::RunManifest;

/// A failed check, located by file and zero-based record index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub file: &'static str,
    pub index: usize,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}:{} (record {}): {}",
            self.file,
            self.index + 1,
            self.index,
            self.message
        )
    }
}

fn check_split(dir: &Path, manifest: &RunManifest) -> CliResult<(Vec<Finding>, usize)> {
    let meta: SplitMeta = serde_json::from_value(manifest.config["split"].clone())?;
    let fst = read_split_fst(dir)?;
    let train = records_to_pairs(&read_records(&dir.join(TRAIN_FILE))?)?;
    let test = records_to_pairs(&read_records(&dir.join(TEST_FILE))?)?;
    let findings = verify_split(&fst, &meta, &train, &test)
        .into_iter()
        .map(|v| Finding {
            file: if v.part == Part::Train {
                TRAIN_FILE
            } else {
                TEST_FILE
            },
            index: v.index,
            message: v.message,
        })
        .collect();
    Ok((findings, train.len() + test.len()))
}

fn check_corpus(dir: &Path, manifest: &RunManifest) -> CliResult<(Vec<Finding>, usize)> {
    let cfg: CorpusConfig = serde_json::from_value(manifest.config.clone())?;
    let fsts = read_corpus_fsts(dir)?;
    let records = read_records(&dir.join(CORPUS_FILE))?;
    let mut findings = Vec::new();
    let mut flag = |index, message: String| {
        findings.push(Finding {
            file: CORPUS_FILE,
            index,
            message,
        })
    };
    let mut seen: BTreeMap<u64, BTreeSet<String>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let Some(fst) = fsts.get(&r.task_id) else {
            flag(i, format!("task {} has no FST", r.task_id));
            continue;
        };
        let (x, y) = match r.to_pair() {
            Ok(p) => p,
            Err(e) => {
                flag(i, e.to_string());
                continue;
            }
        };
        if !(cfg.min_input_len..=cfg.max_input_len).contains(&x.len()) {
            flag(
                i,
                format!(
                    "input length {} outside {}..={}",
                    x.len(),
                    cfg.min_input_len,
                    cfg.max_input_len
                ),
            );
        }
        match fst.transduce(&x) {
            Transduction::Output(o) if o == y => {}
            Transduction::Output(_) => flag(i, "output differs from the FST".into()),
            Transduction::Undefined => flag(i, "input not in the FST domain".into()),
            Transduction::Ambiguous => flag(i, "FST is ambiguous on this input".into()),
        }
        if !seen.entry(r.task_id).or_default().insert(r.input.clone()) {
            flag(i, "duplicate input within the task".into());
        }
    }
    for (&task, fst) in &fsts {
        if !fst.is_cyclic() {
            findings.push(Finding {
                file: FSTS_FILE,
                index: task as usize,
                message: "FST is acyclic".into(),
            });
        }
        let n = seen.get(&task).map_or(0, |s| s.len());
        if n != cfg.pairs_per_task {
            findings.push(Finding {
                file: CORPUS_FILE,
                index: 0,
                message: format!(
                    "task {task} has {n} distinct records, expected {}",
                    cfg.pairs_per_task
                ),
            });
        }
    }
    Ok((findings, records.len()))
}

fn check_set(dir: &Path) -> CliResult<(Vec<Finding>, usize)> {
    let mut findings = Vec::new();
    let mut total = 0;
    let mut inputs = BTreeSet::new();
    for file in [TRAIN_FILE, TEST_FILE] {
        let records = read_records(&dir.join(file))?;
        total += records.len();
        for (i, r) in records.iter().enumerate() {
            let (x, y) = r.to_pair()?;
            if dedup_first(&x) != y {
                findings.push(Finding {
                    file,
                    index: i,
                    message: "output is not the deduplicated input".into(),
                });
            }
            if !inputs.insert(r.input.clone()) {
                findings.push(Finding {
                    file,
                    index: i,
                    message: "input occurs twice".into(),
                });
            }
        }
    }
    Ok((findings, total))
}

/// All findings for a dataset directory plus the number of records checked.
pub fn check(dir: &Path) -> CliResult<(Vec<Finding>, usize)> {
    let manifest = RunManifest::read(dir)?;
    match manifest.command.first().map(String::as_str) {
        Some("gen-split") => check_split(dir, &manifest),
        Some("gen-pretrain") => check_corpus(dir, &manifest),
        Some("gen-set") => check_set(dir),
        other => Err(CliError::Config(format!(
            "cannot verify output of {other:?}"
        ))),
    }
}

pub fn run(args: &VerifyArgs) -> CliResult<()> {
    let manifest = RunManifest::read(&args.dir)?;
    for f in manifest.stale_outputs(&args.dir) {
        eprintln!("warning: {f} differs from its recorded digest");
    }
    let (findings, total) = check(&args.dir)?;
    if findings.is_empty() {
        println!("PASS {} ({total} records)", args.dir.display());
        return Ok(());
    }
    for f in &findings {
        println!("FAIL {f}");
    }
    Err(CliError::Verification(format!(
        "{} violation(s) in {}",
        findings.len(),
        args.dir.display()
    )))
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;
    use crate::run_argv;

    fn split(dir: &Path, mode: &str) -> std::path::PathBuf {
        let out = dir.join(mode);
        run_argv(&[
            "gen-split",
            "--mode",
            mode,
            "--train",
            "300",
            "--test",
            "60",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
        out
    }

    fn rewrite(path: &Path, edit: impl FnOnce(&mut Vec<Record>)) {
        let mut records = read_records(path).unwrap();
        edit(&mut records);
        sipforge::io::write_jsonl(path, &records).unwrap();
    }

    #[test]
    fn fresh_splits_pass() {
        let dir = tempfile::tempdir().unwrap();
        for mode in ["uc", "iteration", "length"] {
            let out = split(dir.path(), mode);
            let (findings, n) = check(&out).unwrap();
            assert!(findings.is_empty(), "{mode}: {findings:?}");
            assert_eq!(n, 360);
            run_argv(&["verify", out.to_str().unwrap()]).unwrap();
        }
    }

    #[test]
    fn corrupted_record_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let out = split(dir.path(), "uc");
        rewrite(&out.join(TEST_FILE), |r| r[7].output.push('!'));
        let (findings, _) = check(&out).unwrap();
        assert_eq!(findings.len(), 1);
        assert_eq!((findings[0].file, findings[0].index), (TEST_FILE, 7));
        assert!(findings[0]
            .to_string()
            .starts_with("test.jsonl:8 (record 7)"));
        let e = run_argv(&["verify", out.to_str().unwrap()]).unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn low_iteration_test_example_fails() {
        let dir = tempfile::tempdir().unwrap();
        let out = split(dir.path(), "iteration");
        let mut moved = None;
        rewrite(&out.join(TRAIN_FILE), |r| moved = Some(r.remove(0)));
        rewrite(&out.join(TEST_FILE), |r| r.push(moved.unwrap()));
        let (findings, _) = check(&out).unwrap();
        assert_eq!(findings.len(), 1, "{findings:?}");
        assert_eq!((findings[0].file, findings[0].index), (TEST_FILE, 60));
        assert!(findings[0].message.contains("iteration count"));
    }

    #[test]
    fn corpus_and_set_directories() {
        let dir = tempfile::tempdir().unwrap();
        let c = dir.path().join("c");
        run_argv(&[
            "gen-pretrain",
            "--tasks",
            "8",
            "--seed",
            "3",
            "--out",
            c.to_str().unwrap(),
        ])
        .unwrap();
        assert!(check(&c).unwrap().0.is_empty());
        rewrite(&c.join(CORPUS_FILE), |r| r[3].input = r[2].input.clone());
        let messages: Vec<String> = check(&c)
            .unwrap()
            .0
            .into_iter()
            .map(|f| f.message)
            .collect();
        assert!(
            messages.iter().any(|m| m.contains("duplicate")),
            "{messages:?}"
        );

        let s = dir.path().join("s");
        run_argv(&[
            "gen-set",
            "--train",
            "40",
            "--test",
            "10",
            "--seed",
            "3",
            "--out",
            s.to_str().unwrap(),
        ])
        .unwrap();
        assert!(check(&s).unwrap().0.is_empty());
        rewrite(&s.join(TEST_FILE), |r| {
            r[0].output = r[0].input.clone() + "x"
        });
        assert_eq!(check(&s).unwrap().0.len(), 1);
    }

    #[test]
    fn missing_manifest_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(TRAIN_FILE), "").unwrap();
        assert_eq!(
            run_argv(&["verify", dir.path().to_str().unwrap()])
                .unwrap_err()
                .exit_code(),
            2
        );
    }
}
