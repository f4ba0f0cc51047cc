//! Line-delimited JSON reports: one header record, then one record per
//! event, candidate, document or word. Object keys are emitted in sorted
//! order, so identical inputs give byte-identical output.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn new(command: &str, config: BTreeMap<String, Value>) -> Self {
        let header = json!({
            "record": "header",
            "command": command,
            "version": VERSION,
            "config": Value::Object(config.into_iter().collect::<Map<_, _>>()),
        });
        Report {
            lines: vec![header.to_string()],
        }
    }

    /// Appends a record of type `kind`; `fields` must be a JSON object.
    pub fn push(&mut self, kind: &str, fields: Value) {
        let mut obj = match fields {
            Value::Object(map) => map,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        obj.insert("record".into(), Value::from(kind));
        self.lines.push(Value::Object(obj).to_string());
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}
