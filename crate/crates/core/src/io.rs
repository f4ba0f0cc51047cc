//! Line-oriented text formats.
//!
//! Every reader skips blank lines and lines whose first non-blank character
//! is `#`, and reports malformed lines with their 1-based line number.
//! Fields are tab-separated.
//!
//! | format        | line layout                                   |
//! |---------------|-----------------------------------------------|
//! | update log    | `timestamp  prefix  origin_as  vp`            |
//! | edge list     | `from  to`                                    |
//! | vp homes      | `vp  as`                                      |
//! | lexicon       | `word  +1\|-1`                                |
//! | word weights  | `word  weight`                                |
//! | id list       | `id`                                          |
//! | documents     | `id  text` or `id  label  domain  text`       |
//! | tensor        | header `m T o`, then `i j k value` (spaces)   |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::events::UpdateRecord;
use crate::tensor::SparseTensor3;

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

/// Non-comment lines with their 1-based numbers, trailing `\r` removed.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn fields<'a>(source: &str, line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.split('\t').map(str::trim).collect();
    if parts.len() != n {
        return Err(parse_err(
            source,
            line_no,
            format!("expected {n} tab-separated fields, found {}", parts.len()),
        ));
    }
    if let Some(pos) = parts.iter().position(|p| p.is_empty()) {
        return Err(parse_err(
            source,
            line_no,
            format!("field {} is empty", pos + 1),
        ));
    }
    Ok(parts)
}

pub fn parse_update_log(source: &str, text: &str) -> Result<Vec<UpdateRecord>> {
    data_lines(text)
        .map(|(no, line)| {
            let f = fields(source, no, line, 4)?;
            let timestamp: f64 = f[0]
                .parse()
                .map_err(|_| parse_err(source, no, format!("bad timestamp `{}`", f[0])))?;
            if !timestamp.is_finite() {
                return Err(parse_err(source, no, "timestamp must be finite"));
            }
            Ok(UpdateRecord {
                timestamp,
                prefix: f[1].to_string(),
                origin_as: f[2].to_string(),
                vp: f[3].to_string(),
            })
        })
        .collect()
}

pub fn write_update_log(records: &[UpdateRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.timestamp, r.prefix, r.origin_as, r.vp
        );
    }
    out
}

pub fn parse_edge_list(source: &str, text: &str) -> Result<Vec<(String, String)>> {
    parse_pairs(source, text)
}

fn parse_pairs(source: &str, text: &str) -> Result<Vec<(String, String)>> {
    data_lines(text)
        .map(|(no, line)| {
            let f = fields(source, no, line, 2)?;
            Ok((f[0].to_string(), f[1].to_string()))
        })
        .collect()
}

pub fn write_edge_list(edges: &[(String, String)]) -> String {
    edges.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect()
}

/// VP → home AS. A VP listed twice with different homes is an error.
pub fn parse_vp_homes(source: &str, text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, line) in data_lines(text) {
        let f = fields(source, no, line, 2)?;
        if let Some(prev) = map.insert(f[0].to_string(), f[1].to_string()) {
            if prev != f[1] {
                return Err(parse_err(
                    source,
                    no,
                    format!("vantage point `{}` already mapped to `{prev}`", f[0]),
                ));
            }
        }
    }
    Ok(map)
}

fn parse_polarity(token: &str) -> Option<f64> {
    match token {
        "+1" | "1" => Some(1.0),
        "-1" => Some(-1.0),
        _ => None,
    }
}

/// Lexicon words are lowercased so they match tokenizer output.
pub fn parse_lexicon(source: &str, text: &str) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for (no, line) in data_lines(text) {
        let f = fields(source, no, line, 2)?;
        let pol = parse_polarity(f[1]).ok_or_else(|| {
            parse_err(
                source,
                no,
                format!("polarity must be +1 or -1, got `{}`", f[1]),
            )
        })?;
        map.insert(f[0].to_lowercase(), pol);
    }
    Ok(map)
}

pub fn parse_word_weights(source: &str, text: &str) -> Result<Vec<(String, f64)>> {
    let mut seen = BTreeSet::new();
    data_lines(text)
        .map(|(no, line)| {
            let f = fields(source, no, line, 2)?;
            let w: f64 = f[1]
                .parse()
                .map_err(|_| parse_err(source, no, format!("bad weight `{}`", f[1])))?;
            if !w.is_finite() {
                return Err(parse_err(source, no, "weight must be finite"));
            }
            if !seen.insert(f[0].to_string()) {
                return Err(parse_err(source, no, format!("duplicate word `{}`", f[0])));
            }
            Ok((f[0].to_string(), w))
        })
        .collect()
}

pub fn write_word_weights(words: &[String], weights: &[f64]) -> String {
    words
        .iter()
        .zip(weights)
        .map(|(w, v)| format!("{w}\t{v}\n"))
        .collect()
}

pub fn parse_id_list(source: &str, text: &str) -> Result<BTreeSet<String>> {
    data_lines(text)
        .map(|(no, line)| {
            let f = fields(source, no, line, 1)?;
            Ok(f[0].to_string())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Source,
    Target,
}

/// One document record.
#[derive(Debug, Clone, PartialEq)]
pub struct DocRecord {
    pub id: String,
    /// `+1` / `-1` (framing / non-framing for the framing classifier).
    pub label: Option<f64>,
    pub domain: Option<Domain>,
    pub text: String,
}

/// Parses document records. Two fields mean `id, text`; four or more mean
/// `id, label, domain, text` with any further tabs kept inside the text.
/// Label is `+1`, `-1`, `framing`, `non-framing`, or `-`/empty for none;
/// domain is `source`, `target`, or `-`/empty.
pub fn parse_documents(source: &str, text: &str) -> Result<Vec<DocRecord>> {
    let mut ids = BTreeSet::new();
    let mut out = Vec::new();
    for (no, line) in data_lines(text) {
        let parts: Vec<&str> = line.splitn(4, '\t').collect();
        let (id, label, domain, body) = match parts.len() {
            2 => (parts[0].trim(), "", "", parts[1]),
            4 => (parts[0].trim(), parts[1].trim(), parts[2].trim(), parts[3]),
            n => {
                return Err(parse_err(
                    source,
                    no,
                    format!("expected `id<TAB>text` or `id<TAB>label<TAB>domain<TAB>text`, found {n} fields"),
                ))
            }
        };
        if id.is_empty() {
            return Err(parse_err(source, no, "document id is empty"));
        }
        if !ids.insert(id.to_string()) {
            return Err(parse_err(
                source,
                no,
                format!("duplicate document id `{id}`"),
            ));
        }
        let label = match label {
            "" | "-" => None,
            "framing" => Some(1.0),
            "non-framing" => Some(-1.0),
            other => Some(parse_polarity(other).ok_or_else(|| {
                parse_err(
                    source,
                    no,
                    format!("label must be +1, -1, framing or non-framing, got `{other}`"),
                )
            })?),
        };
        let domain = match domain {
            "" | "-" => None,
            "source" => Some(Domain::Source),
            "target" => Some(Domain::Target),
            other => {
                return Err(parse_err(
                    source,
                    no,
                    format!("domain must be source or target, got `{other}`"),
                ))
            }
        };
        out.push(DocRecord {
            id: id.to_string(),
            label,
            domain,
            text: body.to_string(),
        });
    }
    Ok(out)
}

/// Header `m T o` then one `i j k value` line per stored entry. Values use
/// the shortest representation that parses back to the same `f64`, so
/// integer counts are written without a fractional part.
pub fn write_tensor(x: &SparseTensor3) -> String {
    let (m, t, o) = x.shape();
    let mut out = format!("{m} {t} {o}\n");
    for &(i, j, k, v) in x.entries() {
        let _ = writeln!(out, "{i} {j} {k} {v}");
    }
    out
}

pub fn parse_tensor(source: &str, text: &str) -> Result<SparseTensor3> {
    let mut lines = data_lines(text);
    let (hno, header) = lines
        .next()
        .ok_or_else(|| parse_err(source, 1, "missing `m T o` header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(source, hno, "header must be three nonnegative integers"))?;
    if dims.len() != 3 {
        return Err(parse_err(
            source,
            hno,
            "header must be three nonnegative integers",
        ));
    }
    let shape = (dims[0], dims[1], dims[2]);
    let mut entries = Vec::new();
    for (no, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(source, no, "expected `i j k value`"));
        }
        let idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(source, no, format!("bad index `{s}`")))
        };
        let v: f64 = f[3]
            .parse()
            .map_err(|_| parse_err(source, no, format!("bad value `{}`", f[3])))?;
        entries.push((idx(f[0])?, idx(f[1])?, idx(f[2])?, v));
    }
    SparseTensor3::new(shape, entries).map_err(|e| parse_err(source, 0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn update_log_round_trip_and_comments() {
        let text = "# header\n10\t1.2.0.0/16\tAS1\tvp1\n\n40.5\t1.2.0.0/16\tAS1\tvp2\r\n";
        let recs = parse_update_log("log", text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].timestamp, 40.5);
        assert_eq!(recs[1].vp, "vp2");
        assert_eq!(
            parse_update_log("log", &write_update_log(&recs)).unwrap(),
            recs
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_update_log("updates.tsv", "# c\n1\tp\tAS1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                source_name: "updates.tsv".into(),
                line: 2,
                message: "expected 4 tab-separated fields, found 3".into()
            }
        );
        assert!(parse_update_log("u", "x\tp\ta\tv\n").is_err());
        assert!(parse_update_log("u", "inf\tp\ta\tv\n").is_err());
        assert!(parse_edge_list("g", "a\t\n").is_err());
    }

    #[test]
    fn vp_homes_reject_conflicts() {
        let ok = parse_vp_homes("h", "v1\tAS1\nv1\tAS1\nv2\tAS2\n").unwrap();
        assert_eq!(ok.len(), 2);
        assert!(parse_vp_homes("h", "v1\tAS1\nv1\tAS2\n").is_err());
    }

    #[test]
    fn lexicon_and_weights() {
        let lex = parse_lexicon("lex", "Good\t+1\nbad\t-1\n").unwrap();
        assert_eq!(lex["good"], 1.0);
        assert_eq!(lex["bad"], -1.0);
        assert!(parse_lexicon("lex", "meh\t0\n").is_err());

        let words = vec!["a".to_string(), "b".to_string()];
        let text = write_word_weights(&words, &[0.1, -2.5e-7]);
        let back = parse_word_weights("w", &text).unwrap();
        assert_eq!(
            back,
            vec![("a".to_string(), 0.1), ("b".to_string(), -2.5e-7)]
        );
        assert!(parse_word_weights("w", "a\t1\na\t2\n").is_err());
    }

    #[test]
    fn documents_both_layouts() {
        let text = "d1\tplain text here\nd2\t+1\ttarget\tgreat\tmovie\nd3\t-\t-\t\nd4\tframing\t\tact now\n";
        let docs = parse_documents("docs", text).unwrap();
        assert_eq!(docs[0].label, None);
        assert_eq!(docs[0].text, "plain text here");
        assert_eq!(docs[1].label, Some(1.0));
        assert_eq!(docs[1].domain, Some(Domain::Target));
        assert_eq!(docs[1].text, "great\tmovie");
        assert_eq!(docs[2].text, "");
        assert_eq!(docs[3].label, Some(1.0));
        assert!(parse_documents("docs", "d1\t+1\tx\n").is_err());
        assert!(parse_documents("docs", "d1\ta\nd1\tb\n").is_err());
        assert!(parse_documents("docs", "d1\tmaybe\t-\tx\n").is_err());
        assert!(parse_documents("docs", "d1\t+1\tother\tx\n").is_err());
    }

    #[test]
    fn tensor_text_format() {
        let x = SparseTensor3::new((2, 3, 1), vec![(0, 2, 0, 3.0), (1, 0, 0, 12.0)]).unwrap();
        let text = write_tensor(&x);
        assert_eq!(text, "2 3 1\n0 2 0 3\n1 0 0 12\n");
        assert_eq!(parse_tensor("t", &text).unwrap(), x);
        assert!(parse_tensor("t", "").is_err());
        assert!(parse_tensor("t", "2 2\n").is_err());
        assert!(parse_tensor("t", "2 2 2\n0 0 5 1\n").is_err());
    }

    proptest! {
        #[test]
        fn tensor_round_trip_is_bit_faithful(
            cells in prop::collection::btree_map((0usize..4, 0usize..5, 0usize..3), 1u32..100_000, 0..30)
        ) {
            let entries = cells.iter().map(|(&(i, j, k), &v)| (i, j, k, v as f64)).collect();
            let x = SparseTensor3::new((4, 5, 3), entries).unwrap();
            let text = write_tensor(&x);
            prop_assert_eq!(parse_tensor("t", &text).unwrap(), x.clone());
            prop_assert_eq!(write_tensor(&parse_tensor("t", &text).unwrap()), text);
        }
    }
}
