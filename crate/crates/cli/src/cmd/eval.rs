use sipforge::io::{parse_jsonl, parse_lines, parse_tsv_pairs, Record};
use sipforge::metrics::{evaluate, EvalReport};

use super::*;
use crate::args::{EvalArgs, ReportFormat};

/// Gold outputs from JSONL records or from `input\toutput` lines.
pub fn read_gold(path: &Path) -> CliResult<Vec<String>> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        let records: Vec<Record> = parse_jsonl(text.as_bytes())?;
        Ok(records.into_iter().map(|r| r.output).collect())
    } else {
        Ok(parse_tsv_pairs(&text)?
            .into_iter()
            .map(|(_, y)| y)
            .collect())
    }
}

pub fn report(args: &EvalArgs) -> CliResult<EvalReport> {
    let preds = parse_lines(&read_text(&args.pred)?);
    let golds = read_gold(&args.gold)?;
    Ok(evaluate(&preds, &golds)?)
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let r = report(args)?;
    match args.format {
        ReportFormat::Text => println!("{r}"),
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&r)?),
    }
    Ok(())
}
