use std::collections::BTreeMap;

use serde_json::{json, Value};
use websift::corpus::{build_vocabulary, tokenize, vectorize, Vocabulary};
use websift::io::{parse_lexicon, parse_word_weights, write_word_weights, DocRecord, Domain};
use websift::numerics::CgOptions;
use websift::sentiment::{
    build_bipartite, classify_orientation, semi_supervised_fit, transfer_fit, LabelData,
    SemiSupervisedParams, TransferParams, DEFAULT_RIDGE,
};

use super::{doc_matrix, load_documents, num, path_value, tokenized, Outcome};
use crate::config::{check_range, ConfigFile, Resolver};
use crate::error::{read_input, write_output, CliError};
use crate::report::Report;
use crate::{SentimentArgs, SentimentMode};

fn domain_value(d: Option<Domain>) -> Value {
    match d {
        Some(Domain::Source) => Value::from("source"),
        Some(Domain::Target) => Value::from("target"),
        None => Value::Null,
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn check_nonneg(key: &str, v: f64) -> Result<(), CliError> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(CliError::usage(format!(
            "`{key}` = {v} must be finite and nonnegative"
        )));
    }
    Ok(())
}

pub fn run(args: &SentimentArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    match args.mode {
        SentimentMode::Classify => classify(args, file),
        mode => fit(args, file, mode),
    }
}

fn fit(args: &SentimentArgs, file: &ConfigFile, mode: SentimentMode) -> Result<Outcome, CliError> {
    let transfer = mode == SentimentMode::Transfer;
    let mut cfg = Resolver::new(file);
    cfg.echo_value("mode", if transfer { "transfer" } else { "semi" });
    let beta1 = cfg.get("beta1", args.beta1, 1.0)?;
    let beta2 = cfg.get("beta2", args.beta2, if transfer { 10.0 } else { 1.0 })?;
    let (beta3, k_s, k_t) = if transfer {
        (
            cfg.get("beta3", args.beta3, 1.0)?,
            cfg.get("k_s", args.k_s, 1.0)?,
            cfg.get("k_t", args.k_t, 1.0)?,
        )
    } else {
        (0.0, 1.0, 1.0)
    };
    let ridge = cfg.get("ridge", args.ridge, DEFAULT_RIDGE)?;
    let cg_tol = cfg.get("cg_tol", args.cg_tol, CgOptions::default().tol)?;
    let cg_max_iter = cfg.optional("cg_max_iter", args.cg_max_iter)?;
    let normalize_rows = cfg.get("normalize_rows", args.normalize_rows, false)?;
    let min_df = cfg.get("min_df", args.min_df, 1usize)?;
    let max_df_ratio = cfg.get("max_df_ratio", args.max_df_ratio, 1.0)?;

    check_nonneg("beta1", beta1)?;
    check_nonneg("beta2", beta2)?;
    check_nonneg("beta3", beta3)?;
    check_nonneg("ridge", ridge)?;
    for (key, v) in [("k_s", k_s), ("k_t", k_t)] {
        if !v.is_finite() {
            return Err(CliError::usage(format!("`{key}` must be finite")));
        }
    }
    if !(cg_tol > 0.0 && cg_tol.is_finite()) {
        return Err(CliError::usage(format!(
            "`cg_tol` = {cg_tol} must be positive"
        )));
    }
    if cg_max_iter == Some(0) {
        return Err(CliError::usage("`cg_max_iter` must be at least 1"));
    }
    if min_df == 0 {
        return Err(CliError::usage("`min_df` must be at least 1"));
    }
    check_range("max_df_ratio", max_df_ratio, 0.0, 1.0, true)?;

    let docs = load_documents(&args.docs)?;
    if docs.is_empty() {
        return Err(CliError::data(format!(
            "{}: no documents",
            args.docs.display()
        )));
    }
    let lexicon = match &args.lexicon {
        Some(p) => parse_lexicon(&p.display().to_string(), &read_input(p)?)?,
        None => BTreeMap::new(),
    };

    // transfer mode places source-domain documents first
    let mut order: Vec<usize> = (0..docs.len()).collect();
    if transfer {
        order.sort_by_key(|&i| docs[i].domain != Some(Domain::Source));
    }
    let n_source = if transfer {
        docs.iter()
            .filter(|d| d.domain == Some(Domain::Source))
            .count()
    } else {
        0
    };
    let ordered: Vec<&DocRecord> = order.iter().map(|&i| &docs[i]).collect();
    let all_tokens = tokenized(&docs);
    let tokens: Vec<Vec<String>> = order.iter().map(|&i| all_tokens[i].clone()).collect();

    let mut vocab = build_vocabulary(&tokens, min_df, max_df_ratio)?;
    vocab.extend_with(lexicon.keys().cloned());
    let mut x = doc_matrix(vocab, &ordered, &tokens)?;
    if normalize_rows {
        x = x.l2_normalized();
    }
    let mut graph = build_bipartite(&x)?;
    if transfer {
        graph = graph.with_source_block(n_source).map_err(|_| {
            CliError::data(format!(
                "{}: transfer mode needs at least one target document",
                args.docs.display()
            ))
        })?;
    }

    let mut labels = LabelData::default();
    for (pos, doc) in ordered.iter().enumerate() {
        if let Some(l) = doc.label {
            labels.doc_labels.insert(pos, l);
        }
    }
    for (word, &pol) in &lexicon {
        let j = x.vocab().position(word).expect("lexicon words were added");
        labels.lexicon.insert(j, pol);
    }

    let cg = CgOptions {
        tol: cg_tol,
        max_iter: cg_max_iter,
    };
    let fitted = if transfer {
        let params = TransferParams {
            beta1,
            beta2,
            beta3,
            k_source: k_s,
            k_target: k_t,
            ridge,
            cg,
        };
        transfer_fit(&graph, &labels, &params)
    } else {
        let params = SemiSupervisedParams {
            beta1,
            beta2,
            ridge,
            cg,
        };
        semi_supervised_fit(&graph, &labels, &params)
    }
    .map_err(|e| CliError::from_core(&args.docs.display().to_string(), e))?;

    if let Some(p) = &args.weights_out {
        write_output(p, &write_word_weights(x.vocab().terms(), &fitted.c))?;
        cfg.echo_value("weights_out", path_value(p));
    }
    cfg.echo_value("docs", path_value(&args.docs));
    if let Some(p) = &args.lexicon {
        cfg.echo_value("lexicon", path_value(p));
    }

    let mut report = Report::new("sentiment", cfg.echo);
    report.push(
        "solver",
        json!({
            "iterations": fitted.iterations,
            "residual": num(fitted.residual),
            "dim": graph.dim(),
            "documents": graph.n_docs(),
            "words": graph.n_words(),
            "isolated_words": graph.isolated_words().len(),
        }),
    );
    let mut d_by_input = vec![0.0; docs.len()];
    for (pos, &i) in order.iter().enumerate() {
        d_by_input[i] = fitted.d_est[pos];
    }
    for (doc, &d) in docs.iter().zip(&d_by_input) {
        report.push(
            "document",
            json!({
                "id": doc.id,
                "domain": domain_value(doc.domain),
                "input_label": doc.label.map(num),
                "d_est": num(d),
                "label": sign(d),
            }),
        );
    }
    for (word, &w) in x.vocab().terms().iter().zip(&fitted.c) {
        report.push("word", json!({"word": word, "weight": num(w)}));
    }
    Ok(report.into())
}

fn classify(args: &SentimentArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let mut cfg = Resolver::new(file);
    cfg.echo_value("mode", "classify");
    let weights_path = args
        .weights
        .as_ref()
        .ok_or_else(|| CliError::usage("`--mode classify` needs `--weights`"))?;
    let pairs = parse_word_weights(
        &weights_path.display().to_string(),
        &read_input(weights_path)?,
    )?;
    let (words, c): (Vec<String>, Vec<f64>) = pairs.into_iter().unzip();
    let vocab = Vocabulary::from_terms(words)?;
    let docs = load_documents(&args.docs)?;

    cfg.echo_value("docs", path_value(&args.docs));
    cfg.echo_value("weights", path_value(weights_path));
    let mut report = Report::new("sentiment", cfg.echo);
    for doc in &docs {
        let v = vectorize(&tokenize(&doc.text), &vocab);
        let score = v.dot_dense(&c)?;
        report.push(
            "document",
            json!({
                "id": doc.id,
                "domain": domain_value(doc.domain),
                "input_label": doc.label.map(num),
                "score": num(score),
                "label": classify_orientation(&c, &v)?,
            }),
        );
    }
    Ok(report.into())
}
