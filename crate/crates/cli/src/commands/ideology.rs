use std::collections::BTreeSet;

use serde_json::json;
use websift::discovery::{classify_ideology, Ideology, WebGraph};
use websift::io::{parse_edge_list, parse_id_list};

use super::{path_value, Outcome};
use crate::config::{ConfigFile, Resolver};
use crate::error::{read_input, CliError};
use crate::report::Report;
use crate::IdeologyArgs;

fn load_ids(path: &std::path::Path) -> Result<BTreeSet<String>, CliError> {
    Ok(parse_id_list(
        &path.display().to_string(),
        &read_input(path)?,
    )?)
}

pub fn run(args: &IdeologyArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let mut cfg = Resolver::new(file);
    let mut targets: Vec<String> = args.target.clone();
    if let Some(p) = &args.targets {
        targets.extend(load_ids(p)?);
    }
    if targets.is_empty() {
        return Err(CliError::usage(
            "give at least one `--target` or a `--targets` file",
        ));
    }

    let edges = parse_edge_list(&args.graph.display().to_string(), &read_input(&args.graph)?)?;
    let g = WebGraph::from_edges(edges.iter().map(|(a, b)| (a.as_str(), b.as_str())));
    let set_a = load_ids(&args.set_a)?;
    let set_b = load_ids(&args.set_b)?;

    let mut rows = Vec::with_capacity(targets.len());
    for target in &targets {
        let vote = classify_ideology(&g, &set_a, &set_b, target)
            .map_err(|e| CliError::from_core(&format!("target `{target}`"), e))?;
        let label = match vote.label {
            Ideology::A => "A",
            Ideology::B => "B",
            Ideology::Undetermined => "undetermined",
        };
        rows.push(json!({
            "target": target,
            "label": label,
            "votes_a": vote.votes_a,
            "votes_b": vote.votes_b,
            "abstained": vote.abstained,
        }));
    }

    cfg.echo_value("graph", path_value(&args.graph));
    cfg.echo_value("set_a", path_value(&args.set_a));
    cfg.echo_value("set_b", path_value(&args.set_b));
    let mut report = Report::new("ideology", cfg.echo);
    for row in rows {
        report.push("site", row);
    }
    Ok(report.into())
}
