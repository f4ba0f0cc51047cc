use serde_json::json;
use websift::corpus::build_vocabulary;
use websift::discovery::rank_candidates;

use super::{doc_matrix, load_documents, num, path_value, tokenized, Outcome};
use crate::config::{check_range, ConfigFile, Resolver};
use crate::error::CliError;
use crate::report::Report;
use crate::DiscoverArgs;

pub fn run(args: &DiscoverArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let mut cfg = Resolver::new(file);
    let threshold = cfg.get("threshold", args.threshold, 0.5)?;
    let min_df = cfg.get("min_df", args.min_df, 1usize)?;
    let max_df_ratio = cfg.get("max_df_ratio", args.max_df_ratio, 1.0)?;
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(CliError::usage(format!(
            "`threshold` = {threshold} must be nonnegative"
        )));
    }
    if min_df == 0 {
        return Err(CliError::usage("`min_df` must be at least 1"));
    }
    check_range("max_df_ratio", max_df_ratio, 0.0, 1.0, true)?;

    let seeds = load_documents(&args.seeds)?;
    let candidates = load_documents(&args.candidates)?;
    if seeds.is_empty() {
        return Err(CliError::data(format!(
            "{}: no seed documents",
            args.seeds.display()
        )));
    }
    let all: Vec<_> = seeds.iter().chain(&candidates).collect();
    let tokens: Vec<Vec<String>> = tokenized(&seeds)
        .into_iter()
        .chain(tokenized(&candidates))
        .collect();
    let vocab = build_vocabulary(&tokens, min_df, max_df_ratio)?;
    let x = doc_matrix(vocab, &all, &tokens)?;
    let (seed_rows, cand_rows) = x.rows().split_at(seeds.len());
    let labeled: Vec<_> = candidates
        .iter()
        .map(|d| d.id.clone())
        .zip(cand_rows.iter().cloned())
        .collect();
    let ranked = rank_candidates(seed_rows, &labeled, threshold)?;

    cfg.echo_value("seeds", path_value(&args.seeds));
    cfg.echo_value("candidates", path_value(&args.candidates));
    let mut report = Report::new("discover", cfg.echo);
    for (n, (id, score)) in ranked.iter().enumerate() {
        report.push(
            "candidate",
            json!({"rank": n + 1, "id": id, "score": num(*score)}),
        );
    }
    Ok(report.into())
}
