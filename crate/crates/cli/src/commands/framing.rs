use serde_json::json;
use websift::corpus::{build_vocabulary, tokenize, vectorize};
use websift::discovery::{nb_classify, nb_train, FramingLabel};

use super::{doc_matrix, load_documents, num, path_value, tokenized, Outcome};
use crate::config::{check_range, ConfigFile, Resolver};
use crate::error::CliError;
use crate::report::Report;
use crate::FramingArgs;

pub fn run(args: &FramingArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let mut cfg = Resolver::new(file);
    let alpha = cfg.get("alpha", args.alpha, websift::discovery::DEFAULT_ALPHA)?;
    let min_df = cfg.get("min_df", args.min_df, 1usize)?;
    let max_df_ratio = cfg.get("max_df_ratio", args.max_df_ratio, 1.0)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(CliError::usage(format!(
            "`alpha` = {alpha} must be positive"
        )));
    }
    if min_df == 0 {
        return Err(CliError::usage("`min_df` must be at least 1"));
    }
    check_range("max_df_ratio", max_df_ratio, 0.0, 1.0, true)?;

    let train = load_documents(&args.train)?;
    let test = load_documents(&args.test)?;
    let mut labels = Vec::with_capacity(train.len());
    for doc in &train {
        labels.push(match doc.label {
            Some(l) if l > 0.0 => FramingLabel::Framing,
            Some(_) => FramingLabel::NonFraming,
            None => {
                return Err(CliError::data(format!(
                    "{}: training document `{}` has no label",
                    args.train.display(),
                    doc.id
                )))
            }
        });
    }
    let tokens = tokenized(&train);
    let vocab = build_vocabulary(&tokens, min_df, max_df_ratio)?;
    let refs: Vec<_> = train.iter().collect();
    let x = doc_matrix(vocab, &refs, &tokens)?;
    let model = nb_train(&x, &labels, alpha)
        .map_err(|e| CliError::from_core(&args.train.display().to_string(), e))?;

    let mut rows = Vec::with_capacity(test.len());
    for doc in &test {
        let v = vectorize(&tokenize(&doc.text), x.vocab());
        let (label, log_odds) = nb_classify(&model, &v)?;
        rows.push(json!({
            "id": doc.id,
            "label": label.as_str(),
            "log_odds": num(log_odds),
        }));
    }

    cfg.echo_value("train", path_value(&args.train));
    cfg.echo_value("test", path_value(&args.test));
    let mut report = Report::new("classify-framing", cfg.echo);
    for row in rows {
        report.push("document", row);
    }
    Ok(report.into())
}
