use sipforge::io::{parse_tsv_pairs, write_jsonl, Record};
use sipforge::symbols::encode_str;

use super::*;
use crate::args::IngestTsvArgs;

/// Converts `input\toutput` lines to records, rejecting characters outside
/// the symbol table.
pub fn run(args: &IngestTsvArgs) -> CliResult<()> {
    let pairs = parse_tsv_pairs(&read_text(&args.input)?)?;
    for (i, (x, y)) in pairs.iter().enumerate() {
        for s in [x, y] {
            encode_str(s).map_err(|c| {
                CliError::Config(format!(
                    "pair {}: character {c:?} not in the symbol table",
                    i + 1
                ))
            })?;
        }
    }
    let records: Vec<Record> = pairs
        .into_iter()
        .map(|(input, output)| Record {
            task_id: args.task_id,
            input,
            output,
            states: None,
        })
        .collect();
    write_jsonl(&args.out, &records)?;
    println!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}
